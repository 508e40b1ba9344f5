"""Exception hierarchy shared by every layer of the store."""


class StoreError(Exception):
    """Base class for all errors raised by dualstore."""


class VariantMismatch(StoreError):
    """Scalar and Vector timestamps were compared with each other."""


class InvalidOtsp(StoreError, ValueError):
    pass


class ImproperSequence(StoreError):
    """A delta was applied where no base assignment exists."""


class TypeMismatch(StoreError):
    """Effects of different data types (LWW vs counter) were combined."""


class CounterOverflow(StoreError, OverflowError):
    pass


# store-level errors


class DuplicateTxn(StoreError):
    pass


class UnknownTxn(StoreError):
    pass


class AlreadyCommitted(StoreError):
    pass


class DuplicateCommit(StoreError):
    pass


class DuplicateCommitTs(StoreError):
    pass


class OverwriteAttempt(StoreError):
    """A commit would replace an existing (key, version) entry."""


class NonAssignCommit(StoreError):
    """A committed buffer entry does not resolve to an assignment."""


class InvariantViolation(StoreError):
    pass


class CorruptRecord(StoreError):
    def __init__(self, position, reason):
        super().__init__(f"corrupt record at position {position}: {reason}")
        self.position = position
        self.reason = reason


# engine rule premises


class CtBeforeSnapshot(StoreError):
    pass


class NIctViolation(StoreError):
    pass


class UninitializedRead(StoreError):
    pass


class OriginMismatch(StoreError):
    """A counter increment names an origin other than the issuing transaction."""


# history files


class ParseError(StoreError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(StoreError):
    def __init__(self, index, reason):
        super().__init__(f"step {index}: {reason}")
        self.index = index
        self.reason = reason
