"""
Named families of lattice data and forcing terms.

Run configurations select initial data and forcing by family name and
parameters; tests use the same constructors.
"""

import csv
import logging
import math
from collections.abc import Callable

import numpy as np

from .errors import ConfigError
from .lattice import LatticeSpec, SignedLatticeFunction
from .solvers import SeparableForcing
from .special import KernelTable, cos_q2, sin_q2

logger = logging.getLogger(__name__)


def gaussian_bump(spec: LatticeSpec, a: float = 1.0, power: int = 0) -> SignedLatticeFunction:
    """``x**power * exp(-a x**2)``; even for even powers, odd for odd ones."""
    if a <= 0:
        raise ConfigError(f"gaussian-bump needs a > 0, got {a}")
    return SignedLatticeFunction.from_callable(spec, lambda x: x**power * np.exp(-a * x**2))


def lognormal_bump(
    spec: LatticeSpec, center: float = 1.0, sigma: float = 1.0, parity: str = "even"
) -> SignedLatticeFunction:
    """``exp(-(log(|x| / center))**2 / (2 sigma**2))``, vanishing at both lattice ends."""
    if center <= 0 or sigma <= 0:
        raise ConfigError("lognormal-bump needs center > 0 and sigma > 0")
    x = spec.points()
    values = np.exp(-np.log(x / center) ** 2 / (2.0 * sigma**2))
    sign = 1.0 if parity == "even" else -1.0
    return SignedLatticeFunction(spec, values, sign * values)


def indicator(spec: LatticeSpec, k: int = 0, sign: int = 1) -> SignedLatticeFunction:
    """One at ``sign * q**k``, zero elsewhere."""
    pos = np.zeros(spec.size)
    neg = np.zeros(spec.size)
    (pos if sign > 0 else neg)[spec.index_of(k)] = 1.0
    return SignedLatticeFunction(spec, pos, neg)


def polynomial_window(spec: LatticeSpec, degree: int = 2, width: float = 4.0) -> SignedLatticeFunction:
    """``x**degree (1 - (x / width)**2)**2`` on ``|x| < width``, zero outside."""
    if width <= 0 or degree < 0:
        raise ConfigError("polynomial-window needs width > 0 and degree >= 0")

    def f(x: np.ndarray) -> np.ndarray:
        return np.where(np.abs(x) < width, x**degree * (1.0 - (x / width) ** 2) ** 2, 0.0)

    return SignedLatticeFunction.from_callable(spec, f)


def kernel_sample(
    spec: LatticeSpec,
    j: int = 0,
    part: str = "cos",
    kernel: KernelTable | None = None,
) -> SignedLatticeFunction:
    """
    ``cos_{q^2}(q**j x)``, ``sin_{q^2}(q**j x)`` or ``e_{q^2}(i q**j x)`` on the lattice.

    Values come from the kernel table when it covers ``k + j``; otherwise
    the series are summed directly with automatic precision escalation.
    The spectrum of such a sample is concentrated at ``xi = +-q**j``.
    """
    if part not in ("cos", "sin", "exp"):
        raise ConfigError(f"kernel-sample part must be cos, sin or exp, got {part!r}")
    ms = spec.ks() + j
    if kernel is not None and kernel.q == spec.q and kernel.covers(int(ms[0]), int(ms[-1])):
        e = kernel.lookup(ms)
    else:
        q = spec.q.q
        e = np.array(
            [
                complex(
                    cos_q2(q**m, q, escalate=True).value,
                    sin_q2(q**m, q, escalate=True).value,
                )
                for m in ms
            ]
        )
    if part == "cos":
        return SignedLatticeFunction(spec, e.real, e.real)
    if part == "sin":
        return SignedLatticeFunction(spec, e.imag, -e.imag)
    return SignedLatticeFunction(spec, e, np.conj(e))


def read_lattice_csv(path: str, spec: LatticeSpec) -> SignedLatticeFunction:
    """
    Reads samples from a CSV file with columns ``k, sign, re, im``.

    Missing points are zero.

    Raises:
        ConfigError: If the file is unreadable or a row lies outside the window.
    """
    pos = np.zeros(spec.size, dtype=complex)
    neg = np.zeros(spec.size, dtype=complex)
    try:
        with open(path, newline="") as f:
            for row in csv.DictReader(f):
                i = spec.index_of(int(row["k"]))
                value = complex(float(row["re"]), float(row.get("im") or 0.0))
                if int(row["sign"]) > 0:
                    pos[i] = value
                else:
                    neg[i] = value
    except (OSError, KeyError, ValueError) as e:
        raise ConfigError(f"could not read lattice samples from {path}: {e}") from e
    return SignedLatticeFunction(spec, pos, neg)


SAMPLE_FAMILIES: dict[str, Callable[..., SignedLatticeFunction]] = {
    "gaussian-bump": gaussian_bump,
    "lognormal-bump": lognormal_bump,
    "indicator": indicator,
    "polynomial-window": polynomial_window,
    "kernel-sample": kernel_sample,
}


def sample_family(
    name: str, spec: LatticeSpec, params: dict | None = None, kernel: KernelTable | None = None
) -> SignedLatticeFunction:
    """
    Builds a named sample family.

    Raises:
        ConfigError: If the family or one of its parameters is unknown.
    """
    if name == "zero":
        return SignedLatticeFunction.zeros(spec)
    if name not in SAMPLE_FAMILIES:
        raise ConfigError(
            f"unknown data family {name!r}; choose one of {sorted(SAMPLE_FAMILIES) + ['zero']}"
        )
    params = dict(params or {})
    if name == "kernel-sample":
        params["kernel"] = kernel
    try:
        return SAMPLE_FAMILIES[name](spec, **params)
    except TypeError as e:
        raise ConfigError(f"bad parameters for family {name!r}: {e}") from e


TIME_FACTORS: dict[str, Callable[..., Callable[[float], float]]] = {
    "constant": lambda amplitude=1.0: (lambda t: amplitude),
    "decaying": lambda amplitude=1.0, rate=1.0: (lambda t: amplitude * math.exp(-rate * t)),
    "oscillating": lambda amplitude=1.0, frequency=1.0: (
        lambda t: amplitude * math.cos(frequency * t)
    ),
}


def forcing_family(
    name: str,
    spec: LatticeSpec,
    profile: dict | None = None,
    params: dict | None = None,
    kernel: KernelTable | None = None,
) -> SeparableForcing | None:
    """
    Builds a separable forcing ``a(t) g(x)``.

    Args:
        name (str): ``"zero"``, ``"constant"``, ``"decaying"`` or ``"oscillating"``.
        spec (LatticeSpec): Lattice window.
        profile (dict | None): ``{"family": ..., "params": {...}}`` selecting g.
        params (dict | None): Parameters of the time factor.
        kernel (KernelTable | None): Kernel for kernel-sample profiles.

    Returns:
        SeparableForcing | None: None for the zero forcing.
    """
    if name == "zero":
        return None
    if name not in TIME_FACTORS:
        raise ConfigError(
            f"unknown forcing family {name!r}; choose one of {sorted(TIME_FACTORS) + ['zero']}"
        )
    profile = profile or {"family": "gaussian-bump", "params": {"a": 0.125, "power": 2}}
    g = sample_family(profile.get("family", "gaussian-bump"), spec, profile.get("params"), kernel)
    try:
        factor = TIME_FACTORS[name](**(params or {}))
    except TypeError as e:
        raise ConfigError(f"bad parameters for forcing {name!r}: {e}") from e
    return SeparableForcing(g, factor, name, dict(params or {}))
