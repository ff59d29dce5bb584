"""
Weight sequences M = (M_k) in log-domain.

A sequence is an immutable value that evaluates log M_k on demand.  Closed
forms (constant, Gevrey, q-power) are unbounded; explicit data carries a
``kmax_hint`` and refuses to extrapolate.  The spec-string grammar is

    spec   := "const:" num | "gevrey:s=" num | "qpow:q=" num
            | "explicit:[" num ("," num)* "]" | "explicitlog:[" num ("," num)* "]"
            | "file:" path | "scale(" spec factor "C=" num factor "rho=" num ")"
            | "shift(" spec ")" | "min(" spec ";" spec ")"
    factor := ";" | ";log"

explicitlog lists log M_k and the ";log" factors give log C and log rho, so
that render() of any sequence parses back to the same logs bit for bit.
"""

import logging
import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from scipy.special import gammaln

from dckit.errors import IndexOutOfRange, InvalidParameter, ParseError
from dckit.logmag import LogMagnitude

logger = logging.getLogger(__name__)

# |log M_0| and -log M_1 below this count as already normalized
NORMALIZED_TOL = 1e-12


class WeightSequence(ABC):
    """A positive sequence given by k -> log M_k."""

    @property
    @abstractmethod
    def kind(self) -> str:
        ...

    @property
    def kmax_hint(self) -> Optional[int]:
        """Largest index with data, None for closed forms."""
        return None

    @abstractmethod
    def _logs(self, ks: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def render(self) -> str:
        ...

    def check_index(self, k: int) -> None:
        hint = self.kmax_hint
        if k < 0 or (hint is not None and k > hint):
            raise IndexOutOfRange(k, hint)

    def log_at(self, k: int) -> float:
        self.check_index(k)
        return float(self._logs(np.array([k], dtype=np.int64))[0])

    def logs(self, kmax: int) -> np.ndarray:
        """log M_k for k = 0..kmax."""
        self.check_index(kmax)
        return self._logs(np.arange(kmax + 1, dtype=np.int64))

    def __repr__(self) -> str:
        return f"WeightSequence({self.render()})"


@dataclass(frozen=True, eq=False, repr=False)
class ConstantSequence(WeightSequence):
    c: float
    log_c: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise InvalidParameter(f"constant must be positive, got {self.c}")
        object.__setattr__(self, "log_c", math.log(self.c))

    @property
    def kind(self) -> str:
        return "constant"

    def _logs(self, ks):
        return np.full(ks.shape, self.log_c)

    def render(self) -> str:
        return f"const:{self.c!r}"


@dataclass(frozen=True, eq=False, repr=False)
class GevreySequence(WeightSequence):
    """M_k = (k!)^s."""

    s: float

    def __post_init__(self):
        if not (math.isfinite(self.s) and self.s >= 0):
            raise InvalidParameter(f"Gevrey order must be >= 0, got {self.s}")

    @property
    def kind(self) -> str:
        return f"gevrey(s={self.s!r})"

    def _logs(self, ks):
        return self.s * gammaln(ks + 1)

    def render(self) -> str:
        return f"gevrey:s={self.s!r}"


@dataclass(frozen=True, eq=False, repr=False)
class QPowerSequence(WeightSequence):
    """M_k = q^(k^2)."""

    q: float
    log_q: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.q) and self.q > 0):
            raise InvalidParameter(f"q must be positive, got {self.q}")
        object.__setattr__(self, "log_q", math.log(self.q))

    @property
    def kind(self) -> str:
        return f"qpower(q={self.q!r})"

    def _logs(self, ks):
        return (ks * ks).astype(float) * self.log_q

    def render(self) -> str:
        return f"qpow:q={self.q!r}"


@dataclass(frozen=True, eq=False, repr=False)
class ExplicitSequence(WeightSequence):
    """Stored data M_0..M_K; ``values`` keeps the literals for rendering."""

    log_values: Tuple[float, ...]
    values: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not self.log_values:
            raise InvalidParameter("explicit sequence needs at least one value")
        for k, v in enumerate(self.log_values):
            if not math.isfinite(v):
                raise InvalidParameter(f"M_{k} must be positive and finite")

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "ExplicitSequence":
        values = tuple(float(v) for v in values)
        for k, v in enumerate(values):
            if not (math.isfinite(v) and v > 0):
                raise InvalidParameter(f"M_{k} must be positive, got {v}")
        return cls(tuple(math.log(v) for v in values), values)

    @classmethod
    def from_logs(cls, logs: Sequence[float]) -> "ExplicitSequence":
        return cls(tuple(float(v) for v in logs))

    @property
    def kind(self) -> str:
        return f"explicit(len={len(self.log_values)})"

    @property
    def kmax_hint(self) -> int:
        return len(self.log_values) - 1

    def _logs(self, ks):
        return np.asarray(self.log_values, dtype=float)[ks]

    def render(self) -> str:
        if self.values is None:
            return "explicitlog:[" + ",".join(repr(v) for v in self.log_values) + "]"
        return "explicit:[" + ",".join(repr(v) for v in self.values) + "]"


@dataclass(frozen=True, eq=False, repr=False)
class ScaledSequence(WeightSequence):
    """C rho^k M_k; logs are kept separately so normalize can be exact."""

    base: WeightSequence
    c: float
    rho: float
    log_c: float
    log_rho: float

    @property
    def kind(self) -> str:
        return f"scaled({self.base.kind})"

    @property
    def kmax_hint(self):
        return self.base.kmax_hint

    def _logs(self, ks):
        return self.log_c + ks * self.log_rho + self.base._logs(ks)

    def render(self) -> str:
        return (f"scale({self.base.render()};{_factor('C', self.c, self.log_c)}"
                f";{_factor('rho', self.rho, self.log_rho)})")


def _factor(name: str, value: float, log_value: float) -> str:
    exact = 0 < value < math.inf and math.log(value) == log_value
    return f"{name}={value!r}" if exact else f"log{name}={log_value!r}"


def _exp(log_value: float) -> float:
    with np.errstate(over="ignore", under="ignore"):
        return float(np.exp(log_value))


def _scaled(M: WeightSequence, c: float, rho: float, log_c: float, log_rho: float) -> WeightSequence:
    if log_c == 0 and log_rho == 0:
        return M
    return ScaledSequence(M, c, rho, log_c, log_rho)


@dataclass(frozen=True, eq=False, repr=False)
class ShiftedSequence(WeightSequence):
    """M_{+1} = (M_{k+1})."""

    base: WeightSequence

    def __post_init__(self):
        hint = self.base.kmax_hint
        if hint is not None and hint < 1:
            raise IndexOutOfRange(1, hint)

    @property
    def kind(self) -> str:
        return f"shifted({self.base.kind})"

    @property
    def kmax_hint(self):
        hint = self.base.kmax_hint
        return None if hint is None else hint - 1

    def _logs(self, ks):
        return self.base._logs(ks + 1)

    def render(self) -> str:
        return f"shift({self.base.render()})"


@dataclass(frozen=True, eq=False, repr=False)
class MinSequence(WeightSequence):
    left: WeightSequence
    right: WeightSequence

    @property
    def kind(self) -> str:
        return f"min({self.left.kind},{self.right.kind})"

    @property
    def kmax_hint(self):
        hints = [h for h in (self.left.kmax_hint, self.right.kmax_hint) if h is not None]
        return min(hints) if hints else None

    def _logs(self, ks):
        return np.minimum(self.left._logs(ks), self.right._logs(ks))

    def render(self) -> str:
        return f"min({self.left.render()};{self.right.render()})"


# Operations

def eval_log(M: WeightSequence, k: int) -> LogMagnitude:
    """log M_k."""
    return LogMagnitude(M.log_at(k))


def weighted_log(M: WeightSequence, k: int) -> LogMagnitude:
    """log(k! M_k)."""
    return LogMagnitude(float(gammaln(k + 1)) + M.log_at(k))


def log_values(M: WeightSequence, kmax: int) -> np.ndarray:
    return M.logs(kmax)


def weighted_log_values(M: WeightSequence, kmax: int) -> np.ndarray:
    """log(k! M_k) for k = 0..kmax."""
    return gammaln(np.arange(kmax + 1) + 1) + M.logs(kmax)


def scale(M: WeightSequence, C: float, rho: float) -> WeightSequence:
    if not (math.isfinite(C) and C > 0):
        raise InvalidParameter(f"C must be positive, got {C}")
    if not (math.isfinite(rho) and rho > 0):
        raise InvalidParameter(f"rho must be positive, got {rho}")
    return _scaled(M, C, rho, math.log(C), math.log(rho))


def normalize(M: WeightSequence) -> WeightSequence:
    """Rescale to M_0 = 1 <= M_1 with C = 1/M_0 and the least rho >= 1."""
    l0 = M.log_at(0)
    l1 = M.log_at(1)
    if abs(l0) <= NORMALIZED_TOL and l1 >= -NORMALIZED_TOL:
        return M
    log_c = -l0
    log_rho = max(0.0, l0 - l1)
    logger.debug("normalize: log C=%r log rho=%r", log_c, log_rho)
    return ScaledSequence(M, _exp(log_c), _exp(log_rho), log_c, log_rho)


def shift(M: WeightSequence) -> WeightSequence:
    return ShiftedSequence(M)


def pointwise_min(M: WeightSequence, N: WeightSequence) -> WeightSequence:
    return MinSequence(M, N)


def render(M: WeightSequence) -> str:
    return M.render()


# File format: one decimal M_k per line, index implicit from 0

def read_sequence_file(path: Union[str, Path]) -> ExplicitSequence:
    values = np.loadtxt(path, dtype=float, ndmin=1)
    return ExplicitSequence.from_values(values.tolist())


def write_sequence_file(M: WeightSequence, kmax: int, out: TextIO) -> None:
    for v in M.logs(kmax):
        out.write(f"{math.exp(v)!r}\n")


# Parser

_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


class _SpecParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, expected: str) -> ParseError:
        return ParseError(self.text, self.pos, expected)

    def startswith(self, literal: str) -> bool:
        return self.text.startswith(literal, self.pos)

    def expect(self, literal: str) -> None:
        if not self.startswith(literal):
            raise self.error(repr(literal))
        self.pos += len(literal)

    def number(self, what: str = "number") -> float:
        match = _NUMBER.match(self.text, self.pos)
        if not match:
            raise self.error(what)
        self.pos = match.end()
        return float(match.group())

    def positive(self, what: str) -> float:
        start = self.pos
        value = self.number(what)
        if not (math.isfinite(value) and value > 0):
            self.pos = start
            raise self.error(what)
        return value

    def finite(self) -> float:
        start = self.pos
        value = self.number("finite number")
        if not math.isfinite(value):
            self.pos = start
            raise self.error("finite number")
        return value

    def factor(self, name: str) -> Tuple[float, float]:
        """A positive value after ";C=" or its log after ";logC="; returns both."""
        if self.startswith(f";log{name}="):
            self.expect(f";log{name}=")
            log_value = self.finite()
            return _exp(log_value), log_value
        if not self.startswith(f";{name}="):
            raise self.error(f"';{name}=' or ';log{name}='")
        self.expect(f";{name}=")
        value = self.positive("positive number")
        return value, math.log(value)

    def parse(self) -> WeightSequence:
        seq = self.spec()
        if self.pos != len(self.text):
            raise self.error("end of input")
        return seq

    def spec(self) -> WeightSequence:
        if self.startswith("const:"):
            self.expect("const:")
            return ConstantSequence(self.positive("positive number"))
        if self.startswith("gevrey:s="):
            self.expect("gevrey:s=")
            start = self.pos
            s = self.number("nonnegative number")
            if s < 0:
                self.pos = start
                raise self.error("nonnegative number")
            return GevreySequence(s)
        if self.startswith("qpow:q="):
            self.expect("qpow:q=")
            return QPowerSequence(self.positive("positive number"))
        if self.startswith("explicit:["):
            self.expect("explicit:[")
            values = [self.positive("positive number")]
            while self.startswith(","):
                self.expect(",")
                values.append(self.positive("positive number"))
            self.expect("]")
            return ExplicitSequence.from_values(values)
        if self.startswith("explicitlog:["):
            self.expect("explicitlog:[")
            logs = [self.finite()]
            while self.startswith(","):
                self.expect(",")
                logs.append(self.finite())
            self.expect("]")
            return ExplicitSequence.from_logs(logs)
        if self.startswith("file:"):
            self.expect("file:")
            return self.file()
        if self.startswith("scale("):
            self.expect("scale(")
            base = self.spec()
            c, log_c = self.factor("C")
            rho, log_rho = self.factor("rho")
            self.expect(")")
            return _scaled(base, c, rho, log_c, log_rho)
        if self.startswith("shift("):
            self.expect("shift(")
            base = self.spec()
            self.expect(")")
            return shift(base)
        if self.startswith("min("):
            self.expect("min(")
            left = self.spec()
            self.expect(";")
            right = self.spec()
            self.expect(")")
            return pointwise_min(left, right)
        raise self.error("one of const:, gevrey:s=, qpow:q=, explicit:[, explicitlog:[, "
                         "file:, scale(, shift(, min(")

    def file(self) -> WeightSequence:
        start = self.pos
        end = start
        while end < len(self.text) and self.text[end] not in ";)":
            end += 1
        if end == start:
            raise self.error("file path")
        path = self.text[start:end]
        try:
            seq = read_sequence_file(path)
        except (OSError, ValueError, InvalidParameter) as exc:
            logger.warning("cannot read sequence file %s: %s", path, exc)
            raise self.error("readable file of positive decimal values")
        self.pos = end
        return seq


def parse_sequence_spec(spec: str) -> WeightSequence:
    return _SpecParser(spec.strip()).parse()
