"""
Spectral solvers for the q-heat, damped q-wave and forced q-wave problems.

Each problem is transformed to frequency space, where ``D^2`` acts as
multiplication by ``-xi**2`` and every frequency evolves by a scalar ODE
with a closed-form solution. Physical solutions are inverse transforms of
the spectral histories, so the two always agree to the transform's
round-off.

Duhamel integrals are split as

    int_0^t G(t - tau) f(tau) d tau
        = f(t) int_0^t G(s) ds + int_0^t G(t - tau) (f(tau) - f(t)) d tau

with the first term in closed form and the second by composite
Gauss-Legendre quadrature. The remainder vanishes where stiff or rapidly
oscillating channels concentrate their weight, and it is exactly zero for
forcing that is constant in time.
"""

import json
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .fourier import KernelPath, TransformConfig, apply_kernel, forward, inverse
from .lattice import LatticeSpec, QParam, SignedLatticeFunction, SpectralFunction
from .quadrature import TimeGrid, TimeIndexedFamily, l2_norm, time_quadrature
from .utils import atomic_write_json, digest, write_csv

logger = logging.getLogger(__name__)

# Below this |omega t| the G-form is replaced by its Taylor expansion.
SMALL_OMEGA_T = 1e-6
# Transformed samples of a callable forcing kept per solve.
FORCING_CACHE_SIZE = 1024


@dataclass(frozen=True, eq=False)
class SeparableForcing:
    """
    A forcing term ``f(t, x) = a(t) g(x)``.

    Attributes:
        profile (SignedLatticeFunction): Spatial profile g.
        time_factor (Callable[[float], float]): Amplitude a(t).
        name (str): Label used in reports.
        params (dict): Parameters of the time factor.
    """

    profile: SignedLatticeFunction
    time_factor: Callable[[float], float]
    name: str = "separable"
    params: dict = field(default_factory=dict)

    def __call__(self, t: float) -> SignedLatticeFunction:
        return self.profile * self.time_factor(t)


def _forcing_digest_parts(forcing: "Forcing | None", T: float) -> tuple[tuple, dict]:
    """Arrays and scalars identifying a forcing, including its time dependence."""
    if forcing is None:
        return (), {"forcing": "none"}
    times = np.linspace(0.0, T, 5)
    if isinstance(forcing, SeparableForcing):
        factor = np.array([forcing.time_factor(float(t)) for t in times])
        arrays = (forcing.profile.pos, forcing.profile.neg, factor)
        return arrays, {"forcing": forcing.name, "forcing_params": sorted(forcing.params.items())}
    if isinstance(forcing, TimeIndexedFamily):
        return (forcing.grid.nodes, forcing.stacked()), {"forcing": "family"}
    return tuple(forcing(float(t)).stacked() for t in times), {"forcing": "callable"}


Forcing = Callable[[float], SignedLatticeFunction] | TimeIndexedFamily


def _check_coefficient(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value}")


@dataclass(frozen=True, eq=False)
class HeatProblem:
    """
    ``u_t = D^2 u - m u + f`` with ``u(0) = phi``.

    Attributes:
        m (float): Mass term, strictly positive.
        phi (SignedLatticeFunction): Initial data.
        T (float): Final time.
        forcing (Forcing | None): Source term or None.
    """

    m: float
    phi: SignedLatticeFunction
    T: float = 1.0
    forcing: Forcing | None = None
    kind: str = field(default="heat", init=False)

    def __post_init__(self):
        _check_coefficient("m", self.m)
        _check_coefficient("T", self.T)
        if self.m <= 0:
            raise ConfigError(f"heat problem requires m > 0, got m={self.m}")
        if self.T <= 0:
            raise ConfigError(f"T must be positive, got {self.T}")

    @property
    def spec(self) -> LatticeSpec:
        return self.phi.spec

    def describe(self) -> dict:
        return {"kind": self.kind, "m": self.m, "T": self.T, "forced": self.forcing is not None}

    def digest(self) -> str:
        arrays, scalars = _forcing_digest_parts(self.forcing, self.T)
        return digest(
            self.phi.pos, self.phi.neg, *arrays, kind=self.kind, m=self.m, T=self.T, **scalars
        )


@dataclass(frozen=True, eq=False)
class WaveProblem:
    """
    ``u_tt + b u_t = D^2 u - m u`` with ``u(0) = phi``, ``u_t(0) = psi``.

    Attributes:
        b (float): Damping, strictly positive.
        m (float): Mass term, strictly positive with ``b**2 < 4 m``.
        phi (SignedLatticeFunction): Initial displacement.
        psi (SignedLatticeFunction): Initial velocity.
        T (float): Final time.
    """

    b: float
    m: float
    phi: SignedLatticeFunction
    psi: SignedLatticeFunction
    T: float = 1.0
    kind: str = field(default="wave", init=False)

    def __post_init__(self):
        _check_wave_coefficients(self.b, self.m, self.T)
        if self.phi.spec != self.psi.spec:
            raise ConfigError("phi and psi must share one lattice window")

    @property
    def spec(self) -> LatticeSpec:
        return self.phi.spec

    def describe(self) -> dict:
        return {"kind": self.kind, "b": self.b, "m": self.m, "T": self.T}

    def digest(self) -> str:
        return digest(
            self.phi.pos, self.phi.neg, self.psi.pos, self.psi.neg,
            kind=self.kind, b=self.b, m=self.m, T=self.T,
        )


@dataclass(frozen=True, eq=False)
class ForcedWaveProblem:
    """
    ``u_tt + b u_t = D^2 u - m u + f`` with zero initial data.

    Attributes:
        b (float): Damping, strictly positive.
        m (float): Mass term with ``b**2 < 4 m``.
        forcing (Forcing): Source term.
        spec (LatticeSpec): Lattice window of the solution.
        T (float): Final time.
    """

    b: float
    m: float
    forcing: Forcing
    spec: LatticeSpec
    T: float = 1.0
    kind: str = field(default="forced-wave", init=False)

    def __post_init__(self):
        _check_wave_coefficients(self.b, self.m, self.T)

    def describe(self) -> dict:
        return {"kind": self.kind, "b": self.b, "m": self.m, "T": self.T}

    def digest(self) -> str:
        arrays, scalars = _forcing_digest_parts(self.forcing, self.T)
        return digest(*arrays, kind=self.kind, b=self.b, m=self.m, T=self.T, **scalars)


def _check_wave_coefficients(b: float, m: float, T: float) -> None:
    for name, value in (("b", b), ("m", m), ("T", T)):
        _check_coefficient(name, value)
    violations = []
    if b <= 0:
        violations.append(f"wave problem requires b > 0, got b={b}")
    if m <= 0:
        violations.append(f"wave problem requires m > 0, got m={m}")
    if b * b >= 4 * m:
        violations.append(
            f"wave problem requires b^2 < 4m, got b^2={b * b:g} and 4m={4 * m:g}"
        )
    if T <= 0:
        violations.append(f"T must be positive, got {T}")
    if violations:
        raise ConfigError("; ".join(violations), violations)


#
# Spectral building blocks
#


@dataclass(frozen=True, eq=False)
class SpectralCoefficients:
    """
    Per-channel constants of ``u_hat = G1 exp(lambda_+ t) + G2 exp(lambda_- t)``.

    Attributes:
        omega (np.ndarray): ``sqrt(b**2 - 4 (m + xi**2))`` on the principal branch.
        g1 (np.ndarray): Coefficient of the ``lambda_+`` mode.
        g2 (np.ndarray): Coefficient of the ``lambda_-`` mode.
        b (float): Damping the modes were built for.
    """

    omega: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    b: float = 0.0

    @property
    def lambda_plus(self) -> np.ndarray:
        return 0.5 * (-self.b + self.omega)

    @property
    def lambda_minus(self) -> np.ndarray:
        return 0.5 * (-self.b - self.omega)

    def initial_mismatch(self, phi_hat: np.ndarray) -> float:
        """``max |G1 + G2 - phi_hat|``."""
        return float(np.max(np.abs(self.g1 + self.g2 - phi_hat)))


def wave_omega(b: float, m: float, xi2: np.ndarray) -> np.ndarray:
    return np.sqrt(b * b - 4.0 * (m + xi2) + 0j)


def wave_coefficients(
    b: float, m: float, xi2: np.ndarray, phi_hat: np.ndarray, psi_hat: np.ndarray
) -> SpectralCoefficients:
    omega = wave_omega(b, m, xi2)
    g1 = (0.5 + b / (2.0 * omega)) * phi_hat + psi_hat / omega
    g2 = (0.5 - b / (2.0 * omega)) * phi_hat - psi_hat / omega
    return SpectralCoefficients(omega, g1, g2, b=b)


def spectral_coefficients(p: "WaveProblem", cfg: TransformConfig) -> SpectralCoefficients:
    """Transforms the data of a wave problem and returns its mode constants."""
    return wave_coefficients(
        p.b, p.m, cfg.xi_squared(), forward(p.phi, cfg).stacked(), forward(p.psi, cfg).stacked()
    )


def sinhc(omega: np.ndarray, t: float) -> np.ndarray:
    """``2 sinh(omega t / 2) / omega`` with a Taylor guard at small ``|omega t|``."""
    z = omega * t
    small = np.abs(z) < SMALL_OMEGA_T
    safe = np.where(small, 1.0, omega)
    exact = 2.0 * np.sinh(0.5 * safe * t) / safe
    series = t * (1.0 + z**2 / 24.0 + z**4 / 1920.0)
    return np.where(small, series, exact)


def wave_multipliers(t: float, b: float, m: float, xi2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    ``(A, B)`` with ``u_hat(t) = A phi_hat + B psi_hat``.

    ``A = exp(-b t / 2) K(t, xi) / 2`` where
    ``K = e^{omega t/2} + e^{-omega t/2} + b (e^{omega t/2} - e^{-omega t/2}) / omega``,
    and ``B = exp(-b t / 2) (e^{omega t/2} - e^{-omega t/2}) / omega``.
    """
    omega = wave_omega(b, m, xi2)
    s = sinhc(omega, t)
    damp = math.exp(-0.5 * b * t)
    a = damp * (np.cosh(0.5 * omega * t) + 0.5 * b * s)
    return a, damp * s


def _exp_integral(z: np.ndarray, t: float) -> np.ndarray:
    """``(exp(z t) - 1) / z`` with a Taylor guard at small ``|z t|``."""
    zt = z * t
    small = np.abs(zt) < 1e-5
    safe = np.where(small, 1.0, z)
    exact = (np.exp(safe * t) - 1.0) / safe
    series = t * (1.0 + zt / 2.0 + zt**2 / 6.0 + zt**3 / 24.0)
    return np.where(small, series, exact)


def forced_wave_response_integral(t: float, b: float, m: float, xi2: np.ndarray) -> np.ndarray:
    """``int_0^t B(s) ds = [(e^{lambda_+ t} - 1)/lambda_+ - (e^{lambda_- t} - 1)/lambda_-] / omega``."""
    omega = wave_omega(b, m, xi2)
    lp, lm = 0.5 * (-b + omega), 0.5 * (-b - omega)
    return (_exp_integral(lp, t) - _exp_integral(lm, t)) / omega


def heat_response_integral(t: float, lam: np.ndarray) -> np.ndarray:
    """``int_0^t exp(-lam s) ds = (1 - exp(-lam t)) / lam``."""
    return -np.expm1(-lam * t) / lam


class SpectralForcing:
    """Evaluates the transformed forcing at arbitrary times, caching transforms."""

    def __init__(self, forcing: Forcing, cfg: TransformConfig):
        self.cfg = cfg
        self.forcing = forcing
        self.interpolation_error = 0.0
        self._transform_at = lru_cache(maxsize=FORCING_CACHE_SIZE)(self._transform)
        self._profile_hat = None
        self._family_hat = None

        if isinstance(forcing, SeparableForcing):
            self._profile_hat = forward(forcing.profile, cfg).stacked()
        elif isinstance(forcing, TimeIndexedFamily):
            self._family_hat = np.array([forward(f, cfg).stacked() for f in forcing.samples])
            self.interpolation_error = forcing.interpolation_error()

    def __call__(self, t: float) -> np.ndarray:
        if self._profile_hat is not None:
            return self._profile_hat * self.forcing.time_factor(t)
        if self._family_hat is not None:
            nodes = self.forcing.grid.nodes
            if not (0.0 <= t <= nodes[-1] * (1 + 1e-14)):
                raise ConfigError(f"forcing family does not cover t={t}")
            i = int(np.clip(np.searchsorted(nodes, t, side="right") - 1, 0, nodes.size - 2))
            theta = (t - nodes[i]) / (nodes[i + 1] - nodes[i])
            return (1.0 - theta) * self._family_hat[i] + theta * self._family_hat[i + 1]
        return self._transform_at(float(t))

    def _transform(self, t: float) -> np.ndarray:
        return forward(self.forcing(t), self.cfg).stacked()

    def cache_info(self):
        """Hit and size statistics of the transformed-sample cache."""
        return self._transform_at.cache_info()


def _duhamel(
    t: float,
    response: Callable[[float], np.ndarray],
    response_integral: np.ndarray,
    f_hat: SpectralForcing,
    nq: int,
) -> np.ndarray:
    end = f_hat(t)
    closed = end * response_integral
    if t == 0.0:
        return closed
    remainder = time_quadrature(lambda tau: response(t - tau) * (f_hat(tau) - end), t, nq)
    return closed + remainder


#
# Trajectories
#


@dataclass(frozen=True, eq=False)
class SolutionTrajectory:
    """
    Spectral and physical solution histories on a time grid.

    Attributes:
        kind (str): ``"heat"``, ``"wave"`` or ``"forced-wave"``.
        spec (LatticeSpec): Lattice window.
        full_line (bool): Whether spectra carry negative frequencies.
        grid (TimeGrid): Time nodes.
        spectral (np.ndarray): Shape (nodes, channels), stacked spectra.
        physical (np.ndarray): Shape (nodes, 2 N), stacked lattice samples.
        provenance (dict): Problem digest, transform configuration and
            solver settings.
        coefficients (SpectralCoefficients | None): Wave mode constants.
    """

    kind: str
    spec: LatticeSpec
    full_line: bool
    grid: TimeGrid
    spectral: np.ndarray
    physical: np.ndarray
    provenance: dict
    coefficients: SpectralCoefficients | None = None

    def __post_init__(self):
        for name in ("spectral", "physical"):
            array = np.array(getattr(self, name), dtype=complex)
            if array.shape[0] != len(self.grid):
                raise ConfigError(f"{name} history does not match the time grid")
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    def u(self, n: int) -> SignedLatticeFunction:
        size = self.spec.size
        return SignedLatticeFunction(self.spec, self.physical[n, :size], self.physical[n, size:])

    def u_hat(self, n: int) -> SpectralFunction:
        return SpectralFunction.from_stacked(self.spec, self.spectral[n], self.full_line)

    def physical_family(self) -> TimeIndexedFamily:
        return TimeIndexedFamily(self.grid, tuple(self.u(n) for n in range(len(self.grid))))

    def spectral_family(self) -> TimeIndexedFamily:
        return TimeIndexedFamily(self.grid, tuple(self.u_hat(n) for n in range(len(self.grid))))

    def imag_residue(self) -> float:
        """``max |Im u| / max |u|`` over the physical history."""
        scale = np.max(np.abs(self.physical))
        return float(np.max(np.abs(self.physical.imag)) / scale) if scale else 0.0

    def corrupted(self, factor: float) -> "SolutionTrajectory":
        """A copy with both histories scaled, used to probe the checks."""
        provenance = dict(self.provenance, corrupted_by=factor)
        return SolutionTrajectory(
            self.kind, self.spec, self.full_line, self.grid,
            self.spectral * factor, self.physical * factor, provenance, self.coefficients,
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "q": self.spec.q.q,
            "k_min": self.spec.k_min,
            "k_max": self.spec.k_max,
            "full_line": self.full_line,
            "T": self.grid.T,
            "nodes": self.grid.nodes.tolist(),
            "spectral": {"re": self.spectral.real.tolist(), "im": self.spectral.imag.tolist()},
            "physical": {"re": self.physical.real.tolist(), "im": self.physical.imag.tolist()},
            "provenance": self.provenance,
        }

    def save_json(self, path: str) -> None:
        atomic_write_json(path, self.to_dict())
        logger.info(f"Saved {self.kind} trajectory to {path}")


def load_trajectory(path: str) -> SolutionTrajectory:
    """
    Reads a trajectory written by `SolutionTrajectory.save_json`.

    Raises:
        ConfigError: If the file is not a valid trajectory.
    """
    try:
        with open(path) as f:
            data = json.load(f)
        spec = LatticeSpec(QParam(data["q"]), data["k_min"], data["k_max"])
        grid = TimeGrid(data["T"], np.array(data["nodes"]))
        spectral = np.array(data["spectral"]["re"]) + 1j * np.array(data["spectral"]["im"])
        physical = np.array(data["physical"]["re"]) + 1j * np.array(data["physical"]["im"])
        return SolutionTrajectory(
            data["kind"], spec, bool(data["full_line"]), grid,
            spectral, physical, data.get("provenance", {}),
        )
    except (OSError, KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"could not load trajectory from {path}: {e}") from e


def write_solution_csv(traj: SolutionTrajectory, path: str) -> None:
    """Writes the physical history with columns ``t, k, sign, x, re_u, im_u``."""
    ks = traj.spec.ks()
    xs = traj.spec.points()
    size = traj.spec.size

    def rows():
        for n, t in enumerate(traj.grid.nodes):
            for sign, offset in ((1, 0), (-1, size)):
                values = traj.physical[n, offset : offset + size]
                for k, x, v in zip(ks, xs, values):
                    yield t, k, sign, sign * x, v.real, v.imag

    write_csv(path, ("t", "k", "sign", "x", "re_u", "im_u"), rows())


def _provenance(p, cfg: TransformConfig, grid: TimeGrid, nq: int, **extra) -> dict:
    return {
        "problem": p.describe(),
        "problem_digest": p.digest(),
        "transform": cfg.describe(),
        "time_nodes": len(grid),
        "quadrature_panels": nq,
        **extra,
    }


def _finish(
    p, cfg: TransformConfig, grid: TimeGrid, spectral: np.ndarray, nq: int,
    coefficients: SpectralCoefficients | None = None, **extra,
) -> SolutionTrajectory:
    physical = np.array(
        [inverse(SpectralFunction.from_stacked(cfg.spec, row, cfg.full_line), cfg).stacked()
         for row in spectral]
    )
    traj = SolutionTrajectory(
        p.kind, cfg.spec, cfg.full_line, grid, spectral, physical,
        _provenance(p, cfg, grid, nq, **extra), coefficients,
    )
    residue = traj.imag_residue()
    traj.provenance["imag_residue"] = residue
    logger.info(
        f"Solved {p.kind} problem on {len(grid)} nodes up to T={grid.T}; "
        f"imaginary residue {residue:.3e}"
    )
    return traj


def _check_grid(p, grid: TimeGrid, cfg: TransformConfig) -> None:
    if grid.T > p.T * (1 + 1e-14):
        raise ConfigError(f"time grid ends at {grid.T}, after the problem's T={p.T}")
    if p.spec != cfg.spec:
        raise ConfigError("problem data and transform use different lattice windows")


#
# Solvers
#


def solve_heat(
    p: HeatProblem, grid: TimeGrid, cfg: TransformConfig, nq: int = 8
) -> SolutionTrajectory:
    """
    Solves the q-heat problem spectrally.

    ``u_hat(t) = phi_hat exp(-t (m + xi**2)) + int_0^t exp(-(t - tau)(m + xi**2)) f_hat(tau) d tau``

    Args:
        p (HeatProblem): The problem.
        grid (TimeGrid): Output nodes.
        cfg (TransformConfig): Transform used in both directions.
        nq (int): Gauss-Legendre panels for the Duhamel remainder.

    Returns:
        SolutionTrajectory: Spectral and physical histories.
    """
    _check_grid(p, grid, cfg)
    lam = p.m + cfg.xi_squared()
    phi_hat = forward(p.phi, cfg).stacked()
    f_hat = SpectralForcing(p.forcing, cfg) if p.forcing is not None else None

    rows = []
    for t in grid.nodes:
        row = phi_hat * np.exp(-t * lam)
        if f_hat is not None:
            row = row + _duhamel(
                t, lambda s: np.exp(-s * lam), heat_response_integral(t, lam), f_hat, nq
            )
        rows.append(row)

    extra = {"interpolation_error": f_hat.interpolation_error} if f_hat else {}
    return _finish(p, cfg, grid, np.array(rows), nq, **extra)


def solve_wave(
    p: WaveProblem, grid: TimeGrid, cfg: TransformConfig, nq: int = 8
) -> SolutionTrajectory:
    """
    Solves the damped q-wave problem spectrally.

    Each channel evolves as ``G1 exp(lambda_+ t) + G2 exp(lambda_- t)`` with
    ``lambda_pm = (-b +- omega) / 2`` and ``omega = sqrt(b**2 - 4 (m + xi**2))``.
    Channels with ``|omega t|`` below ``SMALL_OMEGA_T`` switch to the
    equivalent ``cosh``/``sinh`` form with a Taylor guard.
    """
    _check_grid(p, grid, cfg)
    xi2 = cfg.xi_squared()
    phi_hat = forward(p.phi, cfg).stacked()
    psi_hat = forward(p.psi, cfg).stacked()
    coeffs = wave_coefficients(p.b, p.m, xi2, phi_hat, psi_hat)
    lp, lm = coeffs.lambda_plus, coeffs.lambda_minus

    rows = []
    for t in grid.nodes:
        g_form = coeffs.g1 * np.exp(lp * t) + coeffs.g2 * np.exp(lm * t)
        a, b = wave_multipliers(t, p.b, p.m, xi2)
        stable = a * phi_hat + b * psi_hat
        rows.append(np.where(np.abs(coeffs.omega * t) < SMALL_OMEGA_T, stable, g_form))

    mismatch = coeffs.initial_mismatch(phi_hat)
    return _finish(
        p, cfg, grid, np.array(rows), nq, coefficients=coeffs, initial_mismatch=mismatch
    )


def solve_forced_wave(
    p: ForcedWaveProblem, grid: TimeGrid, cfg: TransformConfig, nq: int = 8
) -> SolutionTrajectory:
    """
    Solves the forced q-wave problem with zero initial data.

    ``u_hat(t) = int_0^t f_hat(tau) [e^{lambda_+ (t - tau)} - e^{lambda_- (t - tau)}] / omega d tau``
    """
    if p.spec != cfg.spec:
        raise ConfigError("problem data and transform use different lattice windows")
    if grid.T > p.T * (1 + 1e-14):
        raise ConfigError(f"time grid ends at {grid.T}, after the problem's T={p.T}")
    xi2 = cfg.xi_squared()
    f_hat = SpectralForcing(p.forcing, cfg)
    zero = np.zeros(xi2.size, dtype=complex)
    coeffs = SpectralCoefficients(wave_omega(p.b, p.m, xi2), zero, zero, b=p.b)

    def response(s: float) -> np.ndarray:
        return wave_multipliers(s, p.b, p.m, xi2)[1]

    rows = [
        _duhamel(t, response, forced_wave_response_integral(t, p.b, p.m, xi2), f_hat, nq)
        for t in grid.nodes
    ]
    return _finish(
        p, cfg, grid, np.array(rows), nq, coefficients=coeffs,
        interpolation_error=f_hat.interpolation_error,
    )


#
# Kernel-path solutions
#


@dataclass(frozen=True, eq=False)
class WaveKernels:
    """
    The propagators of the damped q-wave problem at one time.

    ``u(t, x) = int Phi(t, x, y) phi(y) d_q y + int Psi(t, x, y) psi(y) d_q y``

    Attributes:
        t (float): Time.
        phi_kernel (np.ndarray): ``Phi(t, x, y)`` over signed points in stacked order.
        psi_kernel (np.ndarray): ``Psi(t, x, y)`` over signed points in stacked order.
    """

    t: float
    phi_kernel: np.ndarray
    psi_kernel: np.ndarray

    def apply(
        self, phi: SignedLatticeFunction, psi: SignedLatticeFunction
    ) -> SignedLatticeFunction:
        return apply_kernel(self.phi_kernel, phi) + apply_kernel(self.psi_kernel, psi)


def wave_kernels(t: float, p: WaveProblem, cfg: TransformConfig) -> WaveKernels:
    a, b = wave_multipliers(t, p.b, p.m, cfg.xi_squared())
    path = KernelPath(cfg)
    return WaveKernels(t, path.matrix(a), path.matrix(b))


def _kernel_duhamel(
    t: float,
    forcing: Forcing,
    response: Callable[[float], np.ndarray],
    response_integral: np.ndarray,
    path: KernelPath,
    nq: int,
) -> SignedLatticeFunction:
    at = forcing.at if isinstance(forcing, TimeIndexedFamily) else forcing
    end = at(t)
    closed = path.apply(response_integral, end)
    if t == 0.0:
        return closed

    def integrand(tau: float) -> np.ndarray:
        return path.apply(response(t - tau), at(tau) - end).stacked()

    rem = time_quadrature(integrand, t, nq)
    n = path.cfg.spec.size
    return closed + SignedLatticeFunction(path.cfg.spec, rem[:n], rem[n:])


def heat_kernel_solution(
    p: HeatProblem, t: float, cfg: TransformConfig, nq: int = 8
) -> SignedLatticeFunction:
    """The heat solution at time t written as Jackson integrals against explicit kernels."""
    lam = p.m + cfg.xi_squared()
    path = KernelPath(cfg)
    u = path.apply(np.exp(-t * lam), p.phi)
    if p.forcing is not None:
        u = u + _kernel_duhamel(
            t, p.forcing, lambda s: np.exp(-s * lam), heat_response_integral(t, lam), path, nq
        )
    return u


def wave_kernel_solution(p: WaveProblem, t: float, cfg: TransformConfig) -> SignedLatticeFunction:
    return wave_kernels(t, p, cfg).apply(p.phi, p.psi)


def forced_wave_kernel_solution(
    p: ForcedWaveProblem, t: float, cfg: TransformConfig, nq: int = 8
) -> SignedLatticeFunction:
    """The forced-wave solution at time t through the ``[e^{lambda_+ s} - e^{lambda_- s}] / omega`` kernel."""
    xi2 = cfg.xi_squared()
    return _kernel_duhamel(
        t,
        p.forcing,
        lambda s: wave_multipliers(s, p.b, p.m, xi2)[1],
        forced_wave_response_integral(t, p.b, p.m, xi2),
        KernelPath(cfg),
        nq,
    )


def solution_norms(traj: SolutionTrajectory) -> dict:
    """Summary norms of a trajectory for reports."""
    l2 = [l2_norm(traj.u(n), full_line=True) for n in range(len(traj.grid))]
    return {"max_l2": float(max(l2)), "final_l2": float(l2[-1])}
