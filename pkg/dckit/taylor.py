"""
Truncated Taylor arithmetic in one or two variables.

A ``Taylor`` holds normalized coefficients c_alpha = d^alpha f / alpha! of a
series truncated at total degree N: shape (N+1,) in one variable, (N+1, N+1)
in two, with entries of degree > N kept at zero.  Elementary functions use
the Euler-operator recurrences E(exp a) = exp(a) E(a), a E(log a) = E(a),
E(sin a) = cos(a) E(a), E(cos a) = -sin(a) E(a), which are graded by total
degree and so work unchanged in both dimensions.
"""

import math
from dataclasses import dataclass
from typing import Dict

import numpy as np
from scipy.signal import convolve

from dckit.errors import DomainError, InvalidParameter
from dckit.expr import BinOp, Call, Const, Expr, Neg, Pow, Var


def _degrees(order: int, dim: int) -> np.ndarray:
    ks = np.arange(order + 1)
    if dim == 1:
        return ks
    return ks[:, None] + ks[None, :]


@dataclass(frozen=True, eq=False)
class Taylor:
    coeffs: np.ndarray
    order: int

    @property
    def dim(self) -> int:
        return self.coeffs.ndim

    @property
    def degrees(self) -> np.ndarray:
        return _degrees(self.order, self.dim)

    @property
    def constant(self) -> float:
        return float(self.coeffs.flat[0])

    @classmethod
    def const(cls, value: float, order: int, dim: int) -> "Taylor":
        coeffs = np.zeros((order + 1,) * dim)
        coeffs.flat[0] = value
        return cls(coeffs, order)

    @classmethod
    def seed(cls, value: float, slopes, order: int) -> "Taylor":
        """value + slopes . (t_1, ..., t_dim)."""
        slopes = np.atleast_1d(np.asarray(slopes, dtype=float))
        t = cls.const(value, order, slopes.size)
        if order >= 1:
            for axis, s in enumerate(slopes):
                index = [0] * slopes.size
                index[axis] = 1
                t.coeffs[tuple(index)] = s
        return t

    def _like(self, coeffs: np.ndarray) -> "Taylor":
        return Taylor(coeffs, self.order)

    def _truncate(self, full: np.ndarray) -> np.ndarray:
        out = full[tuple(slice(0, self.order + 1) for _ in range(self.dim))].copy()
        out[self.degrees > self.order] = 0.0
        return out

    def homogeneous(self, d: int) -> np.ndarray:
        return np.where(self.degrees == d, self.coeffs, 0.0)

    def euler(self) -> np.ndarray:
        """Coefficients of E(f) = sum_i t_i d f/d t_i."""
        return self.coeffs * self.degrees

    def __add__(self, other: "Taylor") -> "Taylor":
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other: "Taylor") -> "Taylor":
        return self._like(self.coeffs - other.coeffs)

    def __neg__(self) -> "Taylor":
        return self._like(-self.coeffs)

    def __mul__(self, other: "Taylor") -> "Taylor":
        return self._like(self._truncate(convolve(self.coeffs, other.coeffs, method="direct")))

    def __truediv__(self, other: "Taylor") -> "Taylor":
        b0 = other.constant
        if b0 == 0:
            raise DomainError("division by a series with zero constant term")
        q = np.zeros_like(self.coeffs)
        rest = other.coeffs.copy()
        rest.flat[0] = 0.0
        deg = self.degrees
        for d in range(self.order + 1):
            mixed = self._truncate(convolve(rest, q, method="direct"))
            q = np.where(deg == d, (self.coeffs - mixed) / b0, q)
        return self._like(q)

    def __pow__(self, n: int) -> "Taylor":
        if n < 0:
            raise InvalidParameter("only nonnegative integer powers")
        result = Taylor.const(1.0, self.order, self.dim)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def exp(self) -> "Taylor":
        a0 = self.constant
        if a0 > 700:
            raise DomainError(f"exp({a0!r}) overflows")
        e = Taylor.const(math.exp(a0), self.order, self.dim).coeffs
        ea, deg = self.euler(), self.degrees
        for d in range(1, self.order + 1):
            s = self._truncate(convolve(ea, e, method="direct"))
            e = np.where(deg == d, s / d, e)
        return self._like(e)

    def log(self) -> "Taylor":
        a0 = self.constant
        if a0 <= 0:
            raise DomainError(f"log of nonpositive value {a0!r}")
        l = Taylor.const(math.log(a0), self.order, self.dim).coeffs
        rest = self.coeffs.copy()
        rest.flat[0] = 0.0
        deg = self.degrees
        for d in range(1, self.order + 1):
            el = np.where(deg == 0, 0.0, l * deg)
            s = self._truncate(convolve(rest, el, method="direct"))
            l = np.where(deg == d, (d * self.coeffs - s) / (d * a0), l)
        return self._like(l)

    def sincos(self):
        a0 = self.constant
        s = Taylor.const(math.sin(a0), self.order, self.dim).coeffs
        c = Taylor.const(math.cos(a0), self.order, self.dim).coeffs
        ea, deg = self.euler(), self.degrees
        for d in range(1, self.order + 1):
            ds = self._truncate(convolve(ea, c, method="direct"))
            dc = self._truncate(convolve(ea, s, method="direct"))
            s = np.where(deg == d, ds / d, s)
            c = np.where(deg == d, -dc / d, c)
        return self._like(s), self._like(c)

    def sin(self) -> "Taylor":
        return self.sincos()[0]

    def cos(self) -> "Taylor":
        return self.sincos()[1]

    def derivatives(self) -> np.ndarray:
        """d^alpha f = alpha! c_alpha."""
        fact = np.array([math.factorial(k) for k in range(self.order + 1)], dtype=float)
        if self.dim == 1:
            return self.coeffs * fact
        return self.coeffs * fact[:, None] * fact[None, :]


def expand(e: Expr, seeds: Dict[str, Taylor]) -> Taylor:
    """Propagate the seed series of each variable through ``e``."""
    any_seed = next(iter(seeds.values()))
    order, dim = any_seed.order, any_seed.dim
    match e:
        case Const(value):
            return Taylor.const(value, order, dim)
        case Var(name):
            if name not in seeds:
                raise InvalidParameter(f"no value bound for variable {name}")
            return seeds[name]
        case Neg(arg):
            return -expand(arg, seeds)
        case BinOp(op, left, right):
            a, b = expand(left, seeds), expand(right, seeds)
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            return a / b
        case Call(func, arg):
            return getattr(expand(arg, seeds), func)()
        case Pow(base, exponent):
            return expand(base, seeds) ** exponent
    raise TypeError(f"not an expression node: {e!r}")
