"""Exceptions raised by dckit operations.

Every error carries a short ``code`` so the CLI and the HTTP layer can map
it without inspecting messages.
"""


class DCKitError(Exception):
    code = "error"
    # Usage errors are the caller's fault (exit 3 / HTTP 400); the rest are
    # numeric failures (exit 4 / HTTP 422).
    usage = True

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class IndexOutOfRange(DCKitError):
    code = "index_out_of_range"

    def __init__(self, index: int, limit=None):
        bound = "inf" if limit is None else limit
        super().__init__(f"index {index} outside stored range 0..{bound}")
        self.index = index
        self.limit = limit


class InvalidParameter(DCKitError):
    code = "invalid_parameter"


class ParseError(DCKitError):
    code = "parse_error"

    def __init__(self, text: str, position: int, expected: str):
        super().__init__(
            f"parse error at position {position}: expected {expected} in {text!r}")
        self.text = text
        self.position = position
        self.expected = expected


class DegenerateFit(DCKitError):
    code = "degenerate_fit"
    usage = False


class InsufficientData(DCKitError):
    code = "insufficient_data"
    usage = False


class NotWeaklyLogConvex(DCKitError):
    code = "not_weakly_log_convex"

    def __init__(self, witness: int):
        super().__init__(f"k -> log(k! M_k) is not convex at k={witness}")
        self.witness = witness


class NonzeroConstantTerm(DCKitError):
    code = "nonzero_constant_term"


class CertificateInvalid(DCKitError):
    code = "certificate_invalid"


class FlagMismatch(DCKitError):
    code = "flag_mismatch"


class DomainError(DCKitError):
    code = "domain_error"
    usage = False


class OrderTooLarge(DCKitError):
    code = "order_too_large"

    def __init__(self, order: int, cap: int):
        super().__init__(f"order {order} exceeds the cap {cap}")
        self.order = order
        self.cap = cap


class OrderInsufficient(DCKitError):
    code = "order_insufficient"


class PreconditionFailed(DCKitError):
    code = "precondition_failed"


class UnknownSection(DCKitError):
    code = "unknown_section"
