"""
The symmetric q-difference operator on the signed lattice.

For a sample ``f`` on ``+-q**k`` the operator reads

    D f(x) = [f(x/q) + f(-x/q) - f(q x) + f(-q x) - 2 f(-x)] / (2 x (1 - q))

It reduces to ``(f(x/q) - f(x)) / (x (1 - q))`` on even functions and to
``(f(x) - f(q x)) / (x (1 - q))`` on odd ones, maps even samples to odd
ones and back, and tends to ``d/dx`` as q approaches 1. Each application
consumes one lattice point at both ends of the window.
"""

import logging
from collections.abc import Callable

import numpy as np

from .errors import ConfigError, LatticeRangeError
from .lattice import LatticeSpec, SignedLatticeFunction, signed_lattice_points

logger = logging.getLogger(__name__)


def rubin_d(f: SignedLatticeFunction) -> SignedLatticeFunction:
    """
    Applies the symmetric q-difference operator.

    Args:
        f (SignedLatticeFunction): Samples on ``[k_min, k_max]``.

    Returns:
        SignedLatticeFunction: ``D f`` on the interior window ``[k_min + 1, k_max - 1]``.

    Raises:
        LatticeRangeError: If the window has fewer than three points.
    """
    spec = f.spec
    if spec.size < 3:
        raise LatticeRangeError(
            f"D needs at least 3 lattice points, window has {spec.size}"
        )
    out = spec.shrink(1)
    x = out.points()
    denom = 2.0 * x * (1.0 - spec.q.q)
    pos, neg = f.pos, f.neg

    # index i-1 holds the point x/q, index i+1 holds q x
    num_pos = pos[:-2] + neg[:-2] - pos[2:] + neg[2:] - 2.0 * neg[1:-1]
    num_neg = neg[:-2] + pos[:-2] - neg[2:] + pos[2:] - 2.0 * pos[1:-1]
    return SignedLatticeFunction(out, num_pos / denom, num_neg / -denom)


def rubin_d2(f: SignedLatticeFunction) -> SignedLatticeFunction:
    """``D(D f)`` on the window shrunk by two points at each end."""
    if f.spec.size < 5:
        raise LatticeRangeError(
            f"D^2 needs at least 5 lattice points, window has {f.spec.size}"
        )
    return rubin_d(rubin_d(f))


def rubin_d_callable(
    f: Callable[[np.ndarray], np.ndarray], spec: LatticeSpec, order: int = 1
) -> SignedLatticeFunction:
    """
    Applies D (or D^2) to a vectorized callable on the whole window `spec`.

    The callable is sampled on the window widened by `order` points so the
    result covers `spec` itself.
    """
    if order not in (1, 2):
        raise ConfigError(f"order must be 1 or 2, got {order}")
    wide = SignedLatticeFunction.from_callable(spec.widen(order), f)
    return rubin_d(wide) if order == 1 else rubin_d2(wide)


def rubin_d_intro_form(
    f: Callable[[np.ndarray], np.ndarray], spec: LatticeSpec
) -> SignedLatticeFunction:
    """
    D written as a single quotient of six samples,

        [f(x/q) - f(q x) + f(-q x) - f(-x) + f(-x/q) - f(-x)] / (2 x (1 - q)),

    evaluated directly on a vectorized callable.
    """
    q = spec.q.q
    pos, neg = signed_lattice_points(spec)

    def apply(x: np.ndarray) -> np.ndarray:
        num = f(x / q) - f(q * x) + f(-q * x) - f(-x) + f(-x / q) - f(-x)
        return num / (2.0 * x * (1.0 - q))

    return SignedLatticeFunction(spec, apply(pos), apply(neg))


def embed(f: SignedLatticeFunction, spec: LatticeSpec) -> SignedLatticeFunction:
    """Zero-pads an interior sample back onto a larger window."""
    if not spec.contains(f.spec):
        raise ConfigError("embedding window must contain the sample's window")
    pos = np.zeros(spec.size, dtype=complex)
    neg = np.zeros(spec.size, dtype=complex)
    lo = spec.index_of(f.spec.k_min)
    hi = lo + f.spec.size
    pos[lo:hi] = f.pos
    neg[lo:hi] = f.neg
    return SignedLatticeFunction(spec, pos, neg)
