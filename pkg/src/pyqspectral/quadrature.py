"""
Jackson sums, lattice norms and time quadrature.

Spatial integrals are Jackson sums over the lattice with weights
``(1 - q) q**k``. Time integrals use composite Gauss-Legendre rules from
``numpy.polynomial.legendre.leggauss``.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError, LatticeRangeError, NumericError
from .lattice import LatticeSpec, QParam, SignedLatticeFunction, SpectralFunction, as_q

logger = logging.getLogger(__name__)

GAUSS_ORDER = 4


@dataclass(frozen=True)
class JacksonSum:
    """
    A Jackson sum with its truncation indicators.

    Attributes:
        value (complex): The sum.
        head (float): Magnitude of the summand at the largest point.
        tail (float): Magnitude of the summand at the smallest point.
    """

    value: complex
    head: float
    tail: float


def jackson_integral_finite(
    f: Callable[[np.ndarray], np.ndarray], x: float, q: "QParam | float", K: int
) -> JacksonSum:
    """
    Evaluates ``int_0^x f d_q t = (1 - q) x sum_{k >= 0} q**k f(q**k x)``
    truncated after ``k = K``.

    Args:
        f (Callable): Vectorized integrand.
        x (float): Upper limit.
        q (QParam | float): Deformation parameter.
        K (int): Truncation depth, K >= 0.

    Raises:
        ConfigError: If K is negative.
        NumericError: If a sample is not finite.
    """
    if K < 0:
        raise ConfigError(f"truncation depth must be nonnegative, got {K}")
    q = as_q(q).q
    qk = np.power(q, np.arange(K + 1, dtype=float))
    samples = np.asarray(f(qk * x), dtype=complex)
    if not np.all(np.isfinite(samples)):
        raise NumericError("non-finite sample in Jackson sum")
    summands = (1.0 - q) * x * qk * samples
    return JacksonSum(complex(summands.sum()), float(abs(summands[0])), float(abs(summands[-1])))


def jackson_integral_improper(
    f: "SignedLatticeFunction | SpectralFunction | np.ndarray", spec: LatticeSpec | None = None
) -> JacksonSum:
    """
    Evaluates ``int_0^inf f d_q x`` truncated to a lattice window.

    Args:
        f: Positive-lattice samples; a lattice function contributes its
            positive half, a spectrum its positive frequencies.
        spec (LatticeSpec | None): Window of a bare array.

    Raises:
        NumericError: If a sample is not finite.
    """
    if isinstance(f, SignedLatticeFunction):
        spec, samples = f.spec, f.pos
    elif isinstance(f, SpectralFunction):
        spec, samples = f.spec, f.values
    else:
        if spec is None:
            raise ConfigError("a window is needed to integrate a bare array")
        samples = np.asarray(f, dtype=complex)
    if not np.all(np.isfinite(samples)):
        raise NumericError("non-finite sample in Jackson sum")
    summands = spec.weights() * samples
    return JacksonSum(complex(summands.sum()), float(abs(summands[0])), float(abs(summands[-1])))


def _channels(
    f: "SignedLatticeFunction | SpectralFunction", full_line: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (samples, weights) over the requested half or full line."""
    w = f.spec.weights()
    if isinstance(f, SignedLatticeFunction):
        if full_line:
            return f.stacked(), np.concatenate([w, w])
        return f.pos, w
    if full_line and f.full_line:
        return f.stacked(), np.concatenate([w, w])
    return f.values, w


def lp_norm(
    f: "SignedLatticeFunction | SpectralFunction", p: float = 2.0, full_line: bool = False
) -> float:
    """The Jackson ``L^p`` norm ``(sum w |f|**p)**(1/p)``; ``p = inf`` gives the sup norm."""
    samples, w = _channels(f, full_line)
    if p == math.inf:
        return float(np.max(np.abs(samples)))
    if p < 1:
        raise ConfigError(f"p must be at least 1, got {p}")
    return float(np.sum(w * np.abs(samples) ** p) ** (1.0 / p))


def l2_norm(f: "SignedLatticeFunction | SpectralFunction", full_line: bool = False) -> float:
    samples, w = _channels(f, full_line)
    return float(np.sqrt(np.sum(w * np.abs(samples) ** 2)))


def sup_norm(f: "SignedLatticeFunction | SpectralFunction", full_line: bool = False) -> float:
    return lp_norm(f, math.inf, full_line)


def weighted_norm(
    u_hat: SpectralFunction, weight: Callable[[np.ndarray], np.ndarray], full_line: bool = True
) -> float:
    """``sqrt(sum w(xi) |u_hat|**2 weight(xi))`` over the frequency lattice."""
    samples, w = _channels(u_hat, full_line)
    xi = u_hat.xi() if (full_line and u_hat.full_line) else u_hat.spec.points()
    return float(np.sqrt(np.sum(w * weight(xi) * np.abs(samples) ** 2)))


def sobolev_norm(u_hat: SpectralFunction, s: float, full_line: bool = True) -> float:
    """The ``W^s_q`` norm ``sqrt(sum w (1 + xi**2)**s |u_hat|**2)``."""
    return weighted_norm(u_hat, lambda xi: (1.0 + xi**2) ** s, full_line)


#
# Time grids and time-indexed families
#


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """
    Ordered time nodes on ``[0, T]``.

    Attributes:
        T (float): Final time.
        nodes (np.ndarray): Strictly increasing nodes, first 0 and last T.
    """

    T: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if self.T <= 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if nodes.ndim != 1 or nodes.size < 2:
            raise ConfigError("a time grid needs at least two nodes")
        if nodes[0] != 0.0 or not math.isclose(nodes[-1], self.T, rel_tol=1e-14):
            raise ConfigError("time nodes must start at 0 and end at T")
        if np.any(np.diff(nodes) <= 0):
            raise ConfigError("time nodes must be strictly increasing")
        nodes[-1] = self.T
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, T: float, n: int = 65) -> "TimeGrid":
        if n < 2:
            raise ConfigError(f"a time grid needs at least two nodes, got {n}")
        return cls(T, np.linspace(0.0, T, n))

    def __len__(self) -> int:
        return self.nodes.size

    @property
    def h(self) -> float:
        """Largest step."""
        return float(np.max(np.diff(self.nodes)))

    def refine(self) -> "TimeGrid":
        mids = 0.5 * (self.nodes[1:] + self.nodes[:-1])
        merged = np.empty(2 * self.nodes.size - 1)
        merged[0::2] = self.nodes
        merged[1::2] = mids
        return TimeGrid(self.T, merged)


@dataclass(frozen=True, eq=False)
class TimeIndexedFamily:
    """
    Lattice or spectral samples at each node of a time grid.

    Attributes:
        grid (TimeGrid): The nodes.
        samples (tuple): One sample per node, all on the same window.
    """

    grid: TimeGrid
    samples: tuple

    def __post_init__(self):
        samples = tuple(self.samples)
        if len(samples) != len(self.grid):
            raise ConfigError(
                f"family has {len(samples)} samples for {len(self.grid)} time nodes"
            )
        kinds = {type(s) for s in samples}
        if len(kinds) != 1 or len({s.spec for s in samples}) != 1:
            raise ConfigError("family samples must share one type and one window")
        object.__setattr__(self, "samples", samples)

    @property
    def spec(self) -> LatticeSpec:
        return self.samples[0].spec

    def stacked(self) -> np.ndarray:
        """All samples as an array of shape (nodes, channels)."""
        return np.array([s.stacked() for s in self.samples])

    def _rebuild(self, stacked: np.ndarray):
        first = self.samples[0]
        if isinstance(first, SignedLatticeFunction):
            n = first.spec.size
            return SignedLatticeFunction(first.spec, stacked[:n], stacked[n:])
        return SpectralFunction.from_stacked(first.spec, stacked, first.full_line)

    def at(self, t: float):
        """Piecewise linear interpolation between nodes."""
        nodes = self.grid.nodes
        if not (0.0 <= t <= nodes[-1] * (1 + 1e-14)):
            raise ConfigError(f"t={t} lies outside [0, {nodes[-1]}]")
        i = int(np.clip(np.searchsorted(nodes, t, side="right") - 1, 0, nodes.size - 2))
        theta = (t - nodes[i]) / (nodes[i + 1] - nodes[i])
        a, b = self.samples[i].stacked(), self.samples[i + 1].stacked()
        return self._rebuild((1.0 - theta) * a + theta * b)

    def interpolation_error(self) -> float:
        """
        Estimated sup error of linear interpolation, ``max |second difference| / 8``
        scaled to each interval.
        """
        values = self.stacked()
        if values.shape[0] < 3:
            return 0.0
        nodes = self.grid.nodes
        h = np.diff(nodes)
        slopes = np.diff(values, axis=0) / h[:, None]
        curvature = np.abs(np.diff(slopes, axis=0)) / (0.5 * (h[1:] + h[:-1]))[:, None]
        hmax = np.maximum(h[1:], h[:-1])
        return float(np.max(curvature * (hmax**2)[:, None]) / 8.0)


def gauss_legendre_panels(
    t: float, n: int = 8, order: int = GAUSS_ORDER, start: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights of the composite Gauss-Legendre rule on ``[start, t]``.

    Args:
        t (float): Right end.
        n (int): Number of equal panels.
        order (int): Points per panel.
        start (float): Left end.
    """
    if n < 1:
        raise ConfigError(f"need at least one panel, got {n}")
    x, w = leggauss(order)
    edges = np.linspace(start, t, n + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mids[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def time_quadrature(
    g: Callable[[float], "complex | np.ndarray"], t: float, n: int = 8, order: int = GAUSS_ORDER
):
    """
    Approximates ``int_0^t g(tau) d tau`` with composite Gauss-Legendre panels.

    The result is exact for polynomials of degree ``2 * order - 1`` on each
    panel and its error falls like ``(t / n)**(2 * order)``.

    Args:
        g (Callable): Integrand returning a scalar or an array.
        t (float): Upper limit; ``t = 0`` gives zero.
        n (int): Number of panels.
        order (int): Points per panel.
    """
    if t == 0.0:
        return 0.0 * np.asarray(g(0.0))
    nodes, weights = gauss_legendre_panels(t, n, order)
    values = np.array([g(tau) for tau in nodes])
    return np.tensordot(weights, values, axes=1)


def time_derivative(values: np.ndarray, nodes: np.ndarray, order: int = 1) -> np.ndarray:
    """
    Second-order finite differences along axis 0.

    The first derivative uses ``numpy.gradient`` with second-order one-sided
    stencils at the ends. The second derivative is returned on interior
    nodes only.
    """
    if order == 1:
        if nodes.size < 3:
            raise LatticeRangeError("first time derivative needs at least 3 nodes")
        return np.gradient(values, nodes, axis=0, edge_order=2)
    if order == 2:
        if nodes.size < 3:
            raise LatticeRangeError("second time derivative needs at least 3 nodes")
        hm = np.diff(nodes)[:-1]
        hp = np.diff(nodes)[1:]
        shape = (-1,) + (1,) * (values.ndim - 1)
        hm, hp = hm.reshape(shape), hp.reshape(shape)
        forward = (values[2:] - values[1:-1]) / hp
        backward = (values[1:-1] - values[:-2]) / hm
        return 2.0 * (forward - backward) / (hp + hm)
    raise ConfigError(f"unsupported derivative order {order}")


def ck_norm(
    family: TimeIndexedFamily,
    k: int,
    space_norm: "str | Callable" = "l2",
    s: float = 0.0,
    derivatives: Sequence[TimeIndexedFamily] | None = None,
) -> float:
    """
    The ``C^k`` norm ``sum_{n <= k} max_t ||d^n u / dt^n||`` of a family.

    Args:
        family (TimeIndexedFamily): Samples of ``u``.
        k (int): Highest time derivative.
        space_norm (str | Callable): ``"l2"``, ``"sobolev"`` (with `s`) or a
            callable taking one sample.
        s (float): Sobolev exponent.
        derivatives (Sequence[TimeIndexedFamily] | None): Exact derivative
            families for orders 1..k; finite differences are used otherwise.

    Raises:
        LatticeRangeError: If the grid has too few nodes for k finite differences.
    """
    if k < 0:
        raise ConfigError(f"k must be non-negative, got {k}")

    def l2(u) -> float:
        return l2_norm(u, full_line=True)

    def sobolev(u) -> float:
        return sobolev_norm(u, s)

    if callable(space_norm):
        norm = space_norm
    elif space_norm == "l2":
        norm = l2
    elif space_norm == "sobolev":
        norm = sobolev
    else:
        raise ConfigError(f"unknown space norm {space_norm!r}")

    if derivatives is None and k > 0 and len(family.grid) < k + 2:
        raise LatticeRangeError(
            f"C^{k} norm needs at least {k + 2} time nodes, got {len(family.grid)}"
        )

    total = max(norm(u) for u in family.samples)
    values = family.stacked()
    for n in range(1, k + 1):
        if derivatives is not None:
            total += max(norm(u) for u in derivatives[n - 1].samples)
            continue
        values = time_derivative(values, family.grid.nodes, 1)
        total += max(norm(family._rebuild(row)) for row in values)
    return float(total)
