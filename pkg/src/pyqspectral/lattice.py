"""
The geometric lattice and q-arithmetic.

A lattice window is the set of points ``q**k`` for ``k_min <= k <= k_max``
together with their negatives. Points are stored in increasing ``k`` order,
which is decreasing ``x`` order: index 0 holds the largest point.

Scalar q-arithmetic (brackets, factorials, Pochhammer symbols, Gamma_q and
the q-analogue of pi) lives here too. Infinite products are evaluated with
mpmath at extended precision and carry an explicit tail bound.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

from .errors import ConfigError, ConvergenceError, PoleError

logger = logging.getLogger(__name__)

# Truncation threshold of infinite products, |a q**K| < PRODUCT_EPS.
PRODUCT_EPS = 1e-30


@dataclass(frozen=True)
class QParam:
    """
    The deformation parameter.

    Attributes:
        q (float): A real number strictly between 0 and 1.
    """

    q: float

    def __post_init__(self):
        q = float(self.q)
        if not (0.0 < q < 1.0) or not math.isfinite(q):
            raise ConfigError(f"q must satisfy 0 < q < 1, got {self.q!r}")
        object.__setattr__(self, "q", q)

    def __float__(self) -> float:
        return self.q

    @property
    def squared(self) -> "QParam":
        return QParam(self.q * self.q)


def as_q(q: "QParam | float") -> QParam:
    return q if isinstance(q, QParam) else QParam(q)


@dataclass(frozen=True)
class LatticeSpec:
    """
    A finite window of the geometric lattice.

    Attributes:
        q (QParam): Deformation parameter.
        k_min (int): Smallest exponent, the largest point ``q**k_min``.
        k_max (int): Largest exponent, the smallest point ``q**k_max``.
    """

    q: QParam
    k_min: int = -16
    k_max: int = 48

    def __post_init__(self):
        object.__setattr__(self, "q", as_q(self.q))
        if int(self.k_min) != self.k_min or int(self.k_max) != self.k_max:
            raise ConfigError("lattice exponents must be integers")
        object.__setattr__(self, "k_min", int(self.k_min))
        object.__setattr__(self, "k_max", int(self.k_max))
        if self.k_min > self.k_max:
            raise ConfigError(
                f"k_min must not exceed k_max, got k_min={self.k_min}, k_max={self.k_max}"
            )

    @property
    def size(self) -> int:
        return self.k_max - self.k_min + 1

    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    def points(self) -> np.ndarray:
        """Positive lattice points ``q**k`` in increasing ``k`` order."""
        return np.power(self.q.q, self.ks().astype(float))

    def weights(self) -> np.ndarray:
        """Jackson weights ``(1 - q) q**k`` of the positive half-lattice."""
        return (1.0 - self.q.q) * self.points()

    def index_of(self, k: int) -> int:
        if not (self.k_min <= k <= self.k_max):
            raise ConfigError(f"exponent {k} lies outside [{self.k_min}, {self.k_max}]")
        return k - self.k_min

    def contains(self, other: "LatticeSpec") -> bool:
        return (
            self.q == other.q
            and self.k_min <= other.k_min
            and other.k_max <= self.k_max
        )

    def shrink(self, by: int = 1) -> "LatticeSpec":
        return LatticeSpec(self.q, self.k_min + by, self.k_max - by)

    def widen(self, by: int = 1) -> "LatticeSpec":
        return LatticeSpec(self.q, self.k_min - by, self.k_max + by)


def lattice_points(spec: LatticeSpec) -> np.ndarray:
    """
    Enumerates the positive lattice window.

    Args:
        spec (LatticeSpec): The window.

    Returns:
        np.ndarray: Points ``q**k`` in increasing ``k`` order, so decreasing in value.
    """
    return spec.points()


def signed_lattice_points(spec: LatticeSpec) -> tuple[np.ndarray, np.ndarray]:
    """Positive points ``q**k`` and their mirror images ``-q**k``, in increasing ``k`` order."""
    pos = lattice_points(spec)
    return pos, -pos


def _readonly(values, name: str, size: int) -> np.ndarray:
    array = np.array(values, dtype=complex)
    if array.shape != (size,):
        raise ConfigError(f"{name} must have shape ({size},), got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ConfigError(f"{name} contains non-finite samples")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class SignedLatticeFunction:
    """
    Samples of a function on the signed lattice window.

    Attributes:
        spec (LatticeSpec): The window.
        pos (np.ndarray): Values at ``+q**k``.
        neg (np.ndarray): Values at ``-q**k``.
    """

    spec: LatticeSpec
    pos: np.ndarray
    neg: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pos", _readonly(self.pos, "pos", self.spec.size))
        object.__setattr__(self, "neg", _readonly(self.neg, "neg", self.spec.size))

    @classmethod
    def zeros(cls, spec: LatticeSpec) -> "SignedLatticeFunction":
        return cls(spec, np.zeros(spec.size), np.zeros(spec.size))

    @classmethod
    def from_callable(
        cls, spec: LatticeSpec, f: Callable[[np.ndarray], np.ndarray]
    ) -> "SignedLatticeFunction":
        """Samples a vectorized callable at the signed lattice points."""
        pos, neg = signed_lattice_points(spec)
        return cls(spec, np.asarray(f(pos)), np.asarray(f(neg)))

    def _check(self, other: "SignedLatticeFunction") -> None:
        if other.spec != self.spec:
            raise ConfigError("lattice functions live on different windows")

    def __add__(self, other: "SignedLatticeFunction") -> "SignedLatticeFunction":
        self._check(other)
        return SignedLatticeFunction(self.spec, self.pos + other.pos, self.neg + other.neg)

    def __sub__(self, other: "SignedLatticeFunction") -> "SignedLatticeFunction":
        self._check(other)
        return SignedLatticeFunction(self.spec, self.pos - other.pos, self.neg - other.neg)

    def __mul__(self, scalar: complex) -> "SignedLatticeFunction":
        return SignedLatticeFunction(self.spec, scalar * self.pos, scalar * self.neg)

    __rmul__ = __mul__

    def __neg__(self) -> "SignedLatticeFunction":
        return self * -1.0

    def even_part(self) -> "SignedLatticeFunction":
        half = 0.5 * (self.pos + self.neg)
        return SignedLatticeFunction(self.spec, half, half)

    def odd_part(self) -> "SignedLatticeFunction":
        half = 0.5 * (self.pos - self.neg)
        return SignedLatticeFunction(self.spec, half, -half)

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(
            np.all(np.abs(self.pos.imag) <= tol) and np.all(np.abs(self.neg.imag) <= tol)
        )

    def is_zero(self) -> bool:
        return not (np.any(self.pos) or np.any(self.neg))

    def window(self, k_lo: int, k_hi: int) -> "SignedLatticeFunction":
        """Restricts the samples to exponents in ``[k_lo, k_hi]``."""
        sub = LatticeSpec(self.spec.q, k_lo, k_hi)
        if not self.spec.contains(sub):
            raise ConfigError(
                f"window [{k_lo}, {k_hi}] is not inside [{self.spec.k_min}, {self.spec.k_max}]"
            )
        lo, hi = self.spec.index_of(k_lo), self.spec.index_of(k_hi) + 1
        return SignedLatticeFunction(sub, self.pos[lo:hi], self.neg[lo:hi])

    def stacked(self) -> np.ndarray:
        """Values at ``[+q**k..., -q**k...]`` as one array."""
        return np.concatenate([self.pos, self.neg])


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """
    Samples of a transform on the frequency lattice.

    Frequencies share the spatial lattice, ``xi_j = q**j``. Full-line
    spectra also carry the values at ``-xi_j`` in `neg`.

    Attributes:
        spec (LatticeSpec): The frequency window.
        values (np.ndarray): Values at ``+q**j``.
        neg (np.ndarray | None): Values at ``-q**j`` or None for half-line spectra.
    """

    spec: LatticeSpec
    values: np.ndarray
    neg: np.ndarray | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(
            self, "values", _readonly(self.values, "values", self.spec.size)
        )
        if self.neg is not None:
            object.__setattr__(self, "neg", _readonly(self.neg, "neg", self.spec.size))

    @property
    def full_line(self) -> bool:
        return self.neg is not None

    @classmethod
    def zeros(cls, spec: LatticeSpec, full_line: bool = True) -> "SpectralFunction":
        return cls(spec, np.zeros(spec.size), np.zeros(spec.size) if full_line else None)

    @classmethod
    def from_stacked(
        cls, spec: LatticeSpec, stacked: np.ndarray, full_line: bool
    ) -> "SpectralFunction":
        if full_line:
            return cls(spec, stacked[: spec.size], stacked[spec.size :])
        return cls(spec, stacked)

    def stacked(self) -> np.ndarray:
        if self.neg is None:
            return np.array(self.values)
        return np.concatenate([self.values, self.neg])

    def xi(self) -> np.ndarray:
        """Frequencies matching `stacked`."""
        xi = self.spec.points()
        return np.concatenate([xi, -xi]) if self.full_line else xi

    def _check(self, other: "SpectralFunction") -> None:
        if other.spec != self.spec or other.full_line != self.full_line:
            raise ConfigError("spectra live on different frequency windows")

    def __add__(self, other: "SpectralFunction") -> "SpectralFunction":
        self._check(other)
        return SpectralFunction.from_stacked(
            self.spec, self.stacked() + other.stacked(), self.full_line
        )

    def __sub__(self, other: "SpectralFunction") -> "SpectralFunction":
        self._check(other)
        return SpectralFunction.from_stacked(
            self.spec, self.stacked() - other.stacked(), self.full_line
        )

    def __mul__(self, scalar: complex) -> "SpectralFunction":
        return SpectralFunction.from_stacked(
            self.spec, scalar * self.stacked(), self.full_line
        )

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not np.any(self.stacked())


#
# q-arithmetic
#


def q_bracket(alpha: float, q: "QParam | float") -> float:
    """
    The q-number ``[alpha]_q = (1 - q**alpha) / (1 - q)``.

    Computed with ``expm1`` so the classical limit ``[alpha]_q -> alpha``
    does not lose digits as q approaches 1.
    """
    q = as_q(q).q
    return -math.expm1(alpha * math.log(q)) / (1.0 - q)


def q_factorial(n: int, q: "QParam | float") -> float:
    """
    The q-factorial ``[n]_q! = [1]_q [2]_q ... [n]_q``.

    Raises:
        ConfigError: If n is negative or not an integer.
    """
    if int(n) != n or n < 0:
        raise ConfigError(f"q_factorial needs a non-negative integer, got {n!r}")
    q = as_q(q)
    return math.prod(q_bracket(i, q) for i in range(1, int(n) + 1))


@dataclass(frozen=True)
class ProductValue:
    """
    A truncated infinite product ``prod_{k>=0} (1 - a q**k)``.

    Attributes:
        value: The truncated product as an mpmath number.
        factors (int): Number of factors multiplied.
        tail_bound (float): Bound on the relative error of the truncation.
    """

    value: mpmath.mpf
    factors: int
    tail_bound: float


def infinite_product(
    a: float, q: "QParam | float", eps: float = PRODUCT_EPS, digits: int = 40
) -> ProductValue:
    """
    Evaluates ``(a; q)_inf`` in extended precision.

    Factors are multiplied until ``|a q**K| < eps``. For the remaining
    factors ``|log prod| <= 2 |a q**K| / (1 - q)`` which gives the reported
    tail bound.

    Raises:
        PoleError: If one of the factors vanishes.
    """
    q = as_q(q).q
    with mpmath.workdps(digits):
        a_mp, q_mp = mpmath.mpf(a), mpmath.mpf(q)
        value = mpmath.mpf(1)
        term = a_mp
        factors = 0
        while abs(term) >= eps:
            factor = 1 - term
            if factor == 0:
                raise PoleError(f"(a; q)_inf vanishes at a={a!r}, q={q!r}")
            value *= factor
            term *= q_mp
            factors += 1
        tail = float(2 * abs(term) / (1 - q_mp))
        logger.debug(f"(a; q)_inf with a={a!r}, q={q!r}: {factors} factors, tail {tail:.3e}")
        return ProductValue(+value, factors, math.expm1(tail))


def q_pochhammer(a: float, q: "QParam | float", n: float, eps: float = PRODUCT_EPS) -> float:
    """
    The q-shifted factorial ``(a; q)_n = prod_{k=0}^{n-1} (1 - a q**k)``.

    Args:
        a (float): Base.
        q (QParam | float): Deformation parameter.
        n (float): A non-negative integer or ``math.inf``.
        eps (float): Truncation threshold of the infinite product.

    Returns:
        float: The product; ``(a; q)_0 = 1``.

    Raises:
        ConfigError: If n is neither a non-negative integer nor infinite.
        ConvergenceError: If ``|a| >= 1`` with ``n = inf``.
    """
    q = as_q(q)
    if n == math.inf:
        if abs(a) >= 1.0:
            raise ConvergenceError(
                f"(a; q)_inf is only evaluated for |a| < 1, got a={a!r}"
            )
        if eps <= 0:
            raise ConfigError(f"eps must be positive, got {eps!r}")
        return float(infinite_product(a, q, eps).value)
    if int(n) != n or n < 0:
        raise ConfigError(f"n must be a non-negative integer or inf, got {n!r}")

    value = 1.0
    for k in range(int(n)):
        value *= 1.0 - a * q.q**k
    return value


def q_gamma(x: float, q: "QParam | float") -> float:
    """
    Jackson's q-Gamma function ``(q; q)_inf / (q**x; q)_inf * (1 - q)**(1 - x)``.

    Raises:
        PoleError: If x is zero or a negative integer.
    """
    q = as_q(q)
    if x <= 0 and float(x).is_integer():
        raise PoleError(f"Gamma_q has a pole at x={x!r}")

    num = infinite_product(q.q, q)
    den = infinite_product(q.q**x, q)
    with mpmath.workdps(40):
        value = num.value / den.value * mpmath.power(1 - mpmath.mpf(q.q), 1 - x)
    return float(value)


@lru_cache(maxsize=64)
def pi_q(q: "QParam | float") -> float:
    """The q-analogue of pi, ``Gamma_{q^2}(1/2) / sqrt(1 + q)``."""
    q = as_q(q)
    return q_gamma(0.5, q.squared) / math.sqrt(1.0 + q.q)
