"""Structured errors raised across the package."""


class EhrlabError(Exception):
    """Base class for every structured error this package raises."""


class InvalidElementError(EhrlabError):
    """Element coefficients are malformed (non-finite, empty, wrong shape)."""


class DimensionMismatchError(EhrlabError):
    """An operand's dimension is incompatible with the configured space."""


class UnsupportedNormError(EhrlabError):
    """The requested operation is not defined for this norm kind."""


class EnumerationError(EhrlabError):
    """The dual family cannot produce the requested member."""


class ToleranceError(EhrlabError):
    """A tolerance or budget parameter is out of range."""


class NoModulusError(EhrlabError):
    """No modulus of continuity exists above the configured delta floor.

    Raised when the restricted supremum still exceeds eps at the smallest
    delta the search is allowed to consider.
    """

    def __init__(self, eps: float, delta_floor: float, sup_at_floor: float):
        self.eps = eps
        self.delta_floor = delta_floor
        self.sup_at_floor = sup_at_floor
        super().__init__(
            f"restricted supremum {sup_at_floor:.6g} still exceeds eps={eps:.6g} "
            f"at the delta floor {delta_floor:.3g}"
        )


class NonInjectiveError(EhrlabError):
    """The operator is not injective on the truncation (smallest singular value ~ 0)."""


class NullspaceEmptyError(EhrlabError):
    """The pairing matrix has no nullspace; the working dimension is too small."""


class ScenarioError(EhrlabError):
    """A scenario file failed validation; carries JSON-pointer paths."""

    def __init__(self, message: str, pointers: list[str] | None = None):
        self.pointers = pointers or []
        if self.pointers:
            message = f"{message} (at {', '.join(self.pointers)})"
        super().__init__(message)
