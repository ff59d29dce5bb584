"""
Nonnegative and signed reals represented by their natural logarithms.

Weight sequences such as q^(k^2) overflow binary64 at small k, so every
positive quantity in the package (M_k, k!M_k, |f_k|, rho^k) is handled
through its logarithm.
"""

import math
from dataclasses import dataclass
from functools import total_ordering

import numpy as np
from scipy.special import logsumexp

from dckit.errors import InvalidParameter


def log(value: float) -> float:
    """Natural logarithm with log(0) = -inf."""
    if value == 0:
        return -math.inf
    if value < 0:
        raise InvalidParameter(f"log of negative value {value}")
    return math.log(value)


@total_ordering
@dataclass(frozen=True)
class LogMagnitude:
    """
    A nonnegative real stored as ``value = log(x)``; ``-inf`` encodes zero.

    ``+inf`` and NaN are rejected at construction, so no valid computation
    can produce them silently.
    """

    value: float

    def __post_init__(self):
        if math.isnan(self.value) or self.value == math.inf:
            raise InvalidParameter(f"invalid log-magnitude {self.value}")

    @classmethod
    def zero(cls) -> "LogMagnitude":
        return cls(-math.inf)

    @classmethod
    def one(cls) -> "LogMagnitude":
        return cls(0.0)

    @classmethod
    def from_value(cls, x: float) -> "LogMagnitude":
        return cls(log(x))

    @property
    def is_zero(self) -> bool:
        return self.value == -math.inf

    def linear(self) -> float:
        """The represented number; may overflow to inf for huge magnitudes."""
        return math.exp(self.value)

    def __mul__(self, other: "LogMagnitude") -> "LogMagnitude":
        return LogMagnitude(self.value + other.value)

    def __truediv__(self, other: "LogMagnitude") -> "LogMagnitude":
        if other.is_zero:
            raise InvalidParameter("division by a zero magnitude")
        return LogMagnitude(self.value - other.value)

    def __add__(self, other: "LogMagnitude") -> "LogMagnitude":
        return LogMagnitude(float(np.logaddexp(self.value, other.value)))

    def __pow__(self, power: float) -> "LogMagnitude":
        if power == 0:
            return LogMagnitude.one()
        if self.is_zero and power < 0:
            raise InvalidParameter("zero magnitude raised to a negative power")
        return LogMagnitude(self.value * power)

    def __lt__(self, other: "LogMagnitude") -> bool:
        return self.value < other.value

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        return f"LogMagnitude(exp({self.value}))"


@dataclass(frozen=True)
class SignedLog:
    """A signed real as (sign, log|x|); sign is 0 exactly for zero."""

    sign: int
    logmag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise InvalidParameter(f"sign must be -1, 0 or 1, got {self.sign}")
        if math.isnan(self.logmag) or self.logmag == math.inf:
            raise InvalidParameter(f"invalid log-magnitude {self.logmag}")
        if (self.sign == 0) != (self.logmag == -math.inf):
            raise InvalidParameter("sign 0 must pair with a zero magnitude")

    @classmethod
    def from_value(cls, x: float) -> "SignedLog":
        if not math.isfinite(x):
            raise InvalidParameter(f"coefficient {x} is not finite")
        if x == 0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.logmag)

    def __mul__(self, other: "SignedLog") -> "SignedLog":
        if self.sign == 0 or other.sign == 0:
            return SignedLog(0, -math.inf)
        return SignedLog(self.sign * other.sign, self.logmag + other.logmag)

    def __neg__(self) -> "SignedLog":
        return SignedLog(-self.sign, self.logmag)

    def __add__(self, other: "SignedLog") -> "SignedLog":
        return combine(*_split([self, other]))

    def __sub__(self, other: "SignedLog") -> "SignedLog":
        return self + (-other)


def _split(terms):
    pos = [t.logmag for t in terms if t.sign > 0]
    neg = [t.logmag for t in terms if t.sign < 0]
    return logsum(pos), logsum(neg)


def logsum(logs) -> float:
    """log of a sum of exp(logs); -inf for an empty sum."""
    logs = np.asarray(list(logs), dtype=float)
    if logs.size == 0 or np.all(logs == -np.inf):
        return -math.inf
    return float(logsumexp(logs))


def combine(log_pos: float, log_neg: float) -> SignedLog:
    """exp(log_pos) - exp(log_neg) as a SignedLog."""
    if log_neg == -math.inf:
        return SignedLog(0 if log_pos == -math.inf else 1, log_pos)
    if log_pos == -math.inf:
        return SignedLog(-1, log_neg)
    if log_pos == log_neg:
        return SignedLog(0, -math.inf)
    big, small, sign = (log_pos, log_neg, 1) if log_pos > log_neg else (log_neg, log_pos, -1)
    quotient = math.exp(small - big)
    if quotient == 1:
        return SignedLog(0, -math.inf)
    return SignedLog(sign, big + math.log1p(-quotient))


def cancels(log_pos: float, log_neg: float, tol: float) -> bool:
    """True when the positive and negative parts agree to ``tol`` relative."""
    if log_pos == -math.inf or log_neg == -math.inf:
        return False
    return abs(log_pos - log_neg) <= tol
