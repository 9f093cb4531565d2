"""
q-trigonometric functions, the q-exponential kernel and its lattice table.

The base-``q**2`` cosine and sine are entire power series whose terms decay
like ``q**(k**2)``; at large arguments the partial sums cancel massively,
so every evaluation runs in mpmath at an explicit number of working digits
and reports the largest intermediate term it met.

The kernel ``e_{q^2}(i x) = cos_{q^2}(x) + i sin_{q^2}(x)`` is tabulated on
``x = q**m``. Entries with ``m >= 0`` come from the series; entries with
``m < 0`` come from the exact lattice recurrence

    cos(u / q) = cos(u) - u (1 - q) sin(u)
    sin(u / q) = sin(u) + (u / q) (1 - q) cos(u / q)

run from ``u = 1`` outward at a working precision chosen from the
recurrence's growth factor. Both sources overlap on a few entries and must
agree there.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property

import mpmath
import numpy as np
import scipy.linalg

from .errors import KernelCoverageError, PrecisionEscalationError
from .lattice import LatticeSpec, QParam, as_q, q_bracket
from .utils import write_csv

logger = logging.getLogger(__name__)

DEFAULT_DIGITS = 60
DEFAULT_TOL = 1e-14
# Digits kept beyond the estimated cancellation.
GUARD_DIGITS = 30


@dataclass(frozen=True)
class SeriesValue:
    """
    Result of a q-trigonometric series.

    Attributes:
        value (float): The sum rounded to double precision.
        max_term (float): Largest term magnitude met while summing.
        terms (int): Number of terms summed.
        bound (float): Certified bound on the truncated tail.
        digits (int): Working decimal digits used.
    """

    value: float
    max_term: float
    terms: int
    bound: float
    digits: int

    def __float__(self) -> float:
        return self.value


def _term_logs(z: float, q: float, parity: int, tol: float) -> tuple[float, int]:
    """Scans the term magnitudes in floating point; returns (log10 max term, terms)."""
    az = abs(z)
    if az == 0.0:
        return 0.0, 1
    log_q = math.log10(q)
    log_z = math.log10(az)
    log_t = parity * log_z
    best = log_t
    k = 0
    while True:
        n = 2 * k + parity
        step = 2 * (k + 1) * log_q + 2 * log_z
        step -= math.log10(q_bracket(n + 1, q)) + math.log10(q_bracket(n + 2, q))
        log_t += step
        k += 1
        best = max(best, log_t)
        if step < math.log10(0.5) and log_t < math.log10(tol) - 2:
            return best, k + 1


def _series(
    z: float, q: "QParam | float", parity: int, tol: float, digits: int, escalate: bool
) -> SeriesValue:
    q = as_q(q).q
    log_max, _ = _term_logs(z, q, parity, tol)
    needed = int(math.ceil(log_max - math.log10(tol))) + 10
    if needed > digits:
        if not escalate:
            raise PrecisionEscalationError(
                f"series at z={z!r} needs about {needed} digits, have {digits}",
                required_digits=needed,
            )
        logger.debug(f"Escalating series at z={z!r} from {digits} to {needed} digits")
        digits = needed

    with mpmath.workdps(digits):
        zm, qm = mpmath.mpf(z), mpmath.mpf(q)
        z2 = zm * zm
        term = zm if parity == 1 else mpmath.mpf(1)
        total = mpmath.mpf(0)
        max_term = abs(term)
        k = 0
        # [n]_q computed exactly in mpmath as (1 - q**n) / (1 - q)
        one_minus_q = 1 - qm
        while True:
            total += term
            n = 2 * k + parity
            denom = (1 - qm ** (n + 1)) * (1 - qm ** (n + 2)) / one_minus_q**2
            ratio = qm ** (2 * (k + 1)) * z2 / denom
            term = -term * ratio
            k += 1
            max_term = max(max_term, abs(term))
            if ratio < 0.5 and abs(term) < tol * 1e-2:
                bound = abs(term) / (1 - ratio)
                break
        return SeriesValue(
            value=float(total),
            max_term=float(max_term),
            terms=k,
            bound=float(bound),
            digits=digits,
        )


def cos_q2(
    z: float,
    q: "QParam | float",
    tol: float = DEFAULT_TOL,
    digits: int = DEFAULT_DIGITS,
    escalate: bool = False,
) -> SeriesValue:
    """
    The even q-cosine ``sum_k (-1)**k q**(k(k+1)) z**(2k) / [2k]_q!``.

    Args:
        z (float): Argument.
        q (QParam | float): Deformation parameter.
        tol (float): Target absolute accuracy of the truncated sum.
        digits (int): Working decimal digits.
        escalate (bool): Raise the working digits automatically instead of failing.

    Returns:
        SeriesValue: Value with the largest term magnitude and a tail bound.

    Raises:
        PrecisionEscalationError: If cancellation would swallow `tol` at `digits`.
    """
    return _series(z, q, 0, tol, digits, escalate)


def sin_q2(
    z: float,
    q: "QParam | float",
    tol: float = DEFAULT_TOL,
    digits: int = DEFAULT_DIGITS,
    escalate: bool = False,
) -> SeriesValue:
    """The odd q-sine ``sum_k (-1)**k q**(k(k+1)) z**(2k+1) / [2k+1]_q!``; see `cos_q2`."""
    return _series(z, q, 1, tol, digits, escalate)


def e_q2_imag(
    x: float,
    q: "QParam | float",
    tol: float = DEFAULT_TOL,
    digits: int = DEFAULT_DIGITS,
    escalate: bool = False,
) -> complex:
    """
    The kernel ``e_{q^2}(i x) = cos_{q^2}(x) + i sin_{q^2}(x)``.

    Both parts are evaluated at ``|x|`` so ``e(-i x)`` is exactly the
    complex conjugate of ``e(i x)``.
    """
    c = cos_q2(abs(x), q, tol, digits, escalate).value
    s = sin_q2(abs(x), q, tol, digits, escalate).value
    return complex(c, math.copysign(s, x) if s != 0.0 else 0.0)


def jackson_d(f: Callable[[float], complex], x: float, q: "QParam | float") -> complex:
    """The Jackson derivative ``(f(x) - f(q x)) / ((1 - q) x)`` for ``x != 0``."""
    q = as_q(q).q
    if x == 0:
        raise ValueError("the Jackson derivative is taken at x != 0")
    return (f(x) - f(q * x)) / ((1.0 - q) * x)


#
# Kernel table
#


@dataclass(frozen=True, eq=False)
class KernelTable:
    """
    Precomputed ``e_{q^2}(i q**m)`` for ``m_min <= m <= m_max``.

    Attributes:
        spec (LatticeSpec): The lattice window the table was built for.
        m_min (int): Smallest tabulated index.
        m_max (int): Largest tabulated index.
        values (np.ndarray): Kernel values indexed by ``m - m_min``.
        errors (np.ndarray): Certified absolute error of each entry.
        digits (int): Working digits of the recurrence.
        growth_digits (float): Decimal digits of amplification along the recurrence.
        consistency (float): Worst recurrence/series disagreement on the overlap.
        requested_min (int): Smallest index the window asked for.
    """

    spec: LatticeSpec
    m_min: int
    m_max: int
    values: np.ndarray
    errors: np.ndarray
    digits: int
    growth_digits: float
    consistency: float
    requested_min: int

    @property
    def q(self) -> QParam:
        return self.spec.q

    @property
    def truncated(self) -> bool:
        return self.m_min > self.requested_min

    def covers(self, m_lo: int, m_hi: int) -> bool:
        return self.m_min <= m_lo and m_hi <= self.m_max

    def require(self, m_lo: int, m_hi: int) -> None:
        if not self.covers(m_lo, m_hi):
            raise KernelCoverageError(
                f"kernel table covers m in [{self.m_min}, {self.m_max}] "
                f"but [{m_lo}, {m_hi}] is needed"
            )

    def lookup(self, m: "int | np.ndarray", sign: int = 1) -> np.ndarray:
        """Returns ``e_{q^2}(sign * i q**m)``."""
        m = np.asarray(m)
        self.require(int(m.min()), int(m.max()))
        out = self.values[m - self.m_min]
        return out if sign > 0 else np.conj(out)

    def hankel(self, spec: LatticeSpec) -> np.ndarray:
        """
        The matrix ``H[j, k] = e_{q^2}(i q**(j + k))`` over a window.

        Row and column indices follow the window's increasing exponent order.
        """
        if spec == self.spec:
            return self._own_hankel
        return self._build_hankel(spec)

    @cached_property
    def _own_hankel(self) -> np.ndarray:
        return self._build_hankel(self.spec)

    def _build_hankel(self, spec: LatticeSpec) -> np.ndarray:
        lo, hi = 2 * spec.k_min, 2 * spec.k_max
        self.require(lo, hi)
        diag = self.values[lo - self.m_min : hi - self.m_min + 1]
        n = spec.size
        h = scipy.linalg.hankel(diag[:n], diag[n - 1 :])
        h.setflags(write=False)
        return h

    def window_values(self, spec: LatticeSpec) -> np.ndarray:
        """Kernel values for ``m`` in ``[2 k_min, 2 k_max]`` of a window."""
        lo, hi = 2 * spec.k_min, 2 * spec.k_max
        self.require(lo, hi)
        return self.values[lo - self.m_min : hi - self.m_min + 1]


def _recurrence_growth(q: float, steps: int) -> np.ndarray:
    """Cumulative log10 amplification of the outward recurrence after each step."""
    growth = np.zeros(steps + 1)
    u = 1.0
    acc = 0.0
    for n in range(steps):
        h = u * (1.0 - q)
        # infinity norm of the one-step transfer matrix
        norm = max(1.0 + h, h / q + abs(1.0 - h * h / q))
        acc += math.log10(norm)
        growth[n + 1] = acc
        u /= q
    return growth


def build_kernel_table(
    spec: LatticeSpec,
    tol: float = DEFAULT_TOL,
    digits: int = DEFAULT_DIGITS,
    max_digits: int = 4000,
    overlap: int = 4,
) -> KernelTable:
    """
    Tabulates the kernel for every index sum ``m = j + k`` of a window.

    Args:
        spec (LatticeSpec): The lattice window; ``m`` ranges over
            ``[2 k_min, 2 k_max]``.
        tol (float): Target accuracy of the series evaluations.
        digits (int): Minimum working digits.
        max_digits (int): Ceiling on the recurrence precision. When the
            requested range would need more, the table stops at the last
            reachable index and reports the truncation.
        overlap (int): Number of negative indices evaluated by both the
            recurrence and the series.

    Returns:
        KernelTable: Values with per-entry certified errors.
    """
    q = spec.q.q
    m_lo, m_hi = 2 * spec.k_min, 2 * spec.k_max
    series_lo = max(m_lo, 0)
    logger.info(f"Building kernel table for q={q}, m in [{m_lo}, {m_hi}]")

    entries: dict[int, complex] = {}
    errors: dict[int, float] = {}

    for m in range(series_lo, m_hi + 1):
        x = q**m
        c = cos_q2(x, q, tol, digits, escalate=True)
        s = sin_q2(x, q, tol, digits, escalate=True)
        entries[m] = complex(c.value, s.value)
        rounding = max(c.max_term, s.max_term) * 10.0 ** (-min(c.digits, s.digits) + 2)
        errors[m] = c.bound + s.bound + rounding + 2.3e-16 * abs(entries[m])

    growth_digits = 0.0
    used_digits = digits
    consistency = 0.0
    reachable = series_lo
    if m_lo < 0:
        steps = -m_lo
        growth = _recurrence_growth(q, steps)

        def need(n: int) -> int:
            return int(math.ceil(2.0 * growth[n])) + GUARD_DIGITS

        n_reach = steps
        while n_reach > 0 and need(n_reach) > max_digits:
            n_reach -= 1
        if n_reach < steps:
            logger.warning(
                f"Kernel recurrence needs {need(steps)} digits for m={m_lo}; "
                f"table stops at m={-n_reach} (max_digits={max_digits})"
            )
        used_digits = max(digits, need(n_reach))
        growth_digits = float(growth[n_reach])
        reachable = -n_reach

        with mpmath.workdps(used_digits):
            qm = mpmath.mpf(q)
            c, s = _seed(qm, used_digits)
            u = mpmath.mpf(1)
            for n in range(1, n_reach + 1):
                h = u * (1 - qm)
                c = c - h * s
                s = s + (h / qm) * c
                u = u / qm
                m = -n
                value = complex(float(c), float(s))
                entries[m] = value
                errors[m] = 10.0 ** (growth[n] - used_digits + 2) + 2.3e-16 * abs(value)

        for m in range(max(m_lo, -overlap, reachable), 0):
            x = q**m
            direct = complex(
                cos_q2(x, q, tol, digits, escalate=True).value,
                sin_q2(x, q, tol, digits, escalate=True).value,
            )
            scale = max(1.0, abs(direct))
            consistency = max(consistency, abs(direct - entries[m]) / scale)

    m_min = max(m_lo, reachable) if m_lo < 0 else m_lo
    ms = range(m_min, m_hi + 1)
    values = np.array([entries[m] for m in ms], dtype=complex)
    errs = np.array([errors[m] for m in ms])
    values.setflags(write=False)
    errs.setflags(write=False)

    table = KernelTable(
        spec=spec,
        m_min=m_min,
        m_max=m_hi,
        values=values,
        errors=errs,
        digits=used_digits,
        growth_digits=growth_digits,
        consistency=consistency,
        requested_min=m_lo,
    )
    logger.info(
        f"Kernel table ready: {len(values)} entries, {used_digits} digits, "
        f"overlap consistency {consistency:.3e}"
    )
    return table


def _seed(q: mpmath.mpf, digits: int) -> tuple[mpmath.mpf, mpmath.mpf]:
    """cos_{q^2}(1) and sin_{q^2}(1) summed at full working precision."""
    eps = mpmath.mpf(10) ** (-digits)
    sums = []
    for parity in (0, 1):
        term = mpmath.mpf(1)
        total = mpmath.mpf(0)
        k = 0
        while True:
            total += term
            n = 2 * k + parity
            denom = (1 - q ** (n + 1)) * (1 - q ** (n + 2)) / (1 - q) ** 2
            ratio = q ** (2 * (k + 1)) / denom
            term = -term * ratio
            k += 1
            if abs(term) < eps:
                break
        sums.append(total)
    return sums[0], sums[1]


def kernel_sup(table: KernelTable) -> float:
    """Largest kernel magnitude over the table."""
    return float(np.max(np.abs(table.values)))


def write_kernel_csv(table: KernelTable, path: str) -> None:
    """
    Writes the table as CSV with columns ``m, x, re, im, certified_error``.
    """
    q = table.q.q
    rows = (
        (m, q**m, v.real, v.imag, err)
        for m, v, err in zip(
            range(table.m_min, table.m_max + 1), table.values, table.errors
        )
    )
    write_csv(path, ("m", "x", "re", "im", "certified_error"), rows)
