"""
Residual checks, a-priori bounds and numerical probes.

Every check records a number, the tolerance it was compared with and the
verdict; a report passes when all of its gating checks pass. Physical
residuals are measured on a spatial window ``x >= x_floor`` and at interior
time nodes, where the lattice stencil and the time differences are both
well conditioned.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, LatticeRangeError
from .families import kernel_sample
from .fourier import TransformConfig, forward
from .lattice import LatticeSpec, QParam, SignedLatticeFunction
from .quadrature import TimeGrid, time_derivative, time_quadrature
from .rubin import rubin_d, rubin_d2, rubin_d_callable
from .solvers import (
    ForcedWaveProblem,
    HeatProblem,
    SolutionTrajectory,
    SpectralForcing,
    WaveProblem,
    solve_forced_wave,
    solve_heat,
    solve_wave,
)
from .special import KernelTable, e_q2_imag
from .utils import atomic_write_json

logger = logging.getLogger(__name__)

# Residual windows start at this |x|.
DEFAULT_X_FLOOR = 1.0 / 16.0
RESIDUAL_FLOOR = 1e-6
# Tolerance of time-differenced residuals is ORDER_CONSTANT * h**2.
ORDER_CONSTANT = 5.0
INITIAL_TOL = 1e-6
APRIORI_SLACK = 1e-6
# Eigen checks use arguments q**m x in this range.
EIGEN_ARGUMENTS = (2.0**-8, 32.0)


@dataclass
class Check:
    """
    One numeric verdict.

    Attributes:
        name (str): Identifier such as ``"heat.pde_residual"``.
        value (float): The measured number.
        tolerance (float): Threshold the value was compared with.
        passed (bool): The verdict.
        relation (str): ``"<="`` or ``">="``.
        gating (bool): Whether the check counts toward the report's verdict.
        detail (dict): Supporting numbers.
    """

    name: str
    value: float
    tolerance: float
    passed: bool
    relation: str = "<="
    gating: bool = True
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "relation": self.relation,
            "passed": self.passed,
            "gating": self.gating,
            "detail": self.detail,
        }


@dataclass
class VerificationReport:
    """
    An ordered collection of checks.

    Attributes:
        title (str): What was verified.
        checks (list[Check]): The checks in the order they ran.
    """

    title: str
    checks: list[Check] = field(default_factory=list)

    def add(
        self,
        name: str,
        value: float,
        tolerance: float,
        relation: str = "<=",
        gating: bool = True,
        **detail,
    ) -> Check:
        value = float(value)
        if math.isnan(value):
            passed = False
        elif relation == "<=":
            passed = value <= tolerance
        elif relation == ">=":
            passed = value >= tolerance
        else:
            raise ConfigError(f"unknown relation {relation!r}")
        check = Check(name, value, float(tolerance), passed, relation, gating, detail)
        self.checks.append(check)
        logger.info(
            f"{name}: {value:.6e} {relation} {tolerance:.6e} -> {'pass' if passed else 'FAIL'}"
        )
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.gating and not c.passed]

    def __getitem__(self, name: str) -> Check:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def names(self) -> list[str]:
        return [c.name for c in self.checks]

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        return VerificationReport(self.title, self.checks + other.checks)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }

    def write_json(self, path: str) -> None:
        atomic_write_json(path, self.to_dict())


#
# Windows and norms
#


def residual_window(spec: LatticeSpec, x_floor: float = DEFAULT_X_FLOOR, margin: int = 2) -> LatticeSpec:
    """
    Interior window ``[k_min + margin, k_hi]`` with ``q**k_hi >= x_floor``.

    Raises:
        LatticeRangeError: If fewer than three points remain.
    """
    q = spec.q.q
    k_floor = math.floor(math.log(x_floor) / math.log(q) + 1e-12)
    k_lo, k_hi = spec.k_min + margin, min(spec.k_max - margin, k_floor)
    if k_hi - k_lo < 2:
        raise LatticeRangeError(
            f"residual window [{k_lo}, {k_hi}] is too small; widen the lattice or lower x_floor"
        )
    return LatticeSpec(spec.q, k_lo, k_hi)


def _restrict(rows: np.ndarray, spec: LatticeSpec, window: LatticeSpec) -> np.ndarray:
    """Restricts stacked signed samples (..., 2 N) to a sub-window."""
    lo = window.k_min - spec.k_min
    hi = lo + window.size
    n = spec.size
    return np.concatenate([rows[..., lo:hi], rows[..., n + lo : n + hi]], axis=-1)


def _norms(rows: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted L2 norm of each row."""
    return np.sqrt(np.sum(weights * np.abs(rows) ** 2, axis=-1))


def _signed_weights(spec: LatticeSpec) -> np.ndarray:
    w = spec.weights()
    return np.concatenate([w, w])


def _d2_history(traj: SolutionTrajectory, window: LatticeSpec) -> np.ndarray:
    return np.array(
        [_restrict(rubin_d2(traj.u(n)).stacked(), traj.spec.shrink(2), window)
         for n in range(len(traj.grid))]
    )


def _forcing_history(forcing, spec: LatticeSpec, nodes: np.ndarray) -> np.ndarray | None:
    if forcing is None:
        return None
    at = getattr(forcing, "at", forcing)
    return np.array([at(t).stacked() for t in nodes])


def _relative(residual: np.ndarray, terms: Sequence[np.ndarray | None], weights: np.ndarray) -> tuple[float, float]:
    """Returns (max residual norm / scale, scale) with scale the largest term norm."""
    res = float(np.max(_norms(residual, weights)))
    scale = max(float(np.max(_norms(t, weights))) for t in terms if t is not None)
    return (res / scale if scale > 0 else res), scale


def _tolerance(grid: TimeGrid, tol: float | None, order_constant: float) -> float:
    return tol if tol is not None else max(RESIDUAL_FLOOR, order_constant * grid.h**2)


def _initial_check(
    report: VerificationReport,
    name: str,
    value_rows: np.ndarray,
    target: SignedLatticeFunction | None,
    spec: LatticeSpec,
    window: LatticeSpec,
    weights: np.ndarray,
    tol: float,
    scale: float | None = None,
) -> None:
    target_rows = (
        _restrict(target.stacked(), spec, window) if target is not None else np.zeros_like(value_rows)
    )
    err = float(_norms(value_rows - target_rows, weights))
    ref = scale if scale is not None else float(_norms(target_rows, weights))
    report.add(name, err / ref if ref > 0 else err, tol, window=[window.k_min, window.k_max])


#
# Physical residuals
#


def residual_heat_physical(
    traj: SolutionTrajectory,
    p: HeatProblem,
    tol: float | None = None,
    x_floor: float = DEFAULT_X_FLOOR,
    order_constant: float = ORDER_CONSTANT,
) -> VerificationReport:
    """
    Checks ``u_t - D^2 u + m u - f`` on the lattice with central time differences.

    Returns:
        VerificationReport: ``heat.initial_condition`` and ``heat.pde_residual``.
    """
    report = VerificationReport("heat physical residual")
    window = residual_window(traj.spec, x_floor)
    w = _signed_weights(window)
    nodes = traj.grid.nodes
    u = _restrict(traj.physical, traj.spec, window)
    _initial_check(report, "heat.initial_condition", u[0], p.phi, traj.spec, window, w, INITIAL_TOL)

    d2 = _d2_history(traj, window)
    u_t = time_derivative(u, nodes, 1)
    f = _forcing_history(p.forcing, traj.spec, nodes)
    f = _restrict(f, traj.spec, window) if f is not None else None
    inner = slice(1, -1)
    residual = u_t[inner] - d2[inner] + p.m * u[inner] - (f[inner] if f is not None else 0.0)
    value, scale = _relative(
        residual, [u_t[inner], d2[inner], p.m * u[inner], f[inner] if f is not None else None], w
    )
    report.add(
        "heat.pde_residual", value, _tolerance(traj.grid, tol, order_constant),
        h=traj.grid.h, scale=scale, window=[window.k_min, window.k_max],
    )
    return report


def _wave_physical(
    traj: SolutionTrajectory,
    b: float,
    m: float,
    phi: SignedLatticeFunction | None,
    psi: SignedLatticeFunction | None,
    forcing,
    prefix: str,
    tol: float | None,
    x_floor: float,
    order_constant: float,
) -> VerificationReport:
    report = VerificationReport(f"{prefix} physical residual")
    window = residual_window(traj.spec, x_floor)
    w = _signed_weights(window)
    nodes = traj.grid.nodes
    u = _restrict(traj.physical, traj.spec, window)
    u_t = time_derivative(u, nodes, 1)
    u_tt = time_derivative(u, nodes, 2)

    _initial_check(report, f"{prefix}.initial_condition", u[0], phi, traj.spec, window, w, INITIAL_TOL,
                   scale=None if phi is not None and not phi.is_zero() else 1.0)
    velocity_scale = float(np.max(_norms(u_t, w))) or 1.0
    _initial_check(
        report, f"{prefix}.initial_velocity", u_t[0], psi, traj.spec, window, w,
        _tolerance(traj.grid, tol, order_constant), scale=velocity_scale,
    )

    d2 = _d2_history(traj, window)
    f = _forcing_history(forcing, traj.spec, nodes)
    f = _restrict(f, traj.spec, window) if f is not None else None
    inner = slice(1, -1)
    residual = u_tt + b * u_t[inner] - d2[inner] + m * u[inner] - (f[inner] if f is not None else 0.0)
    value, scale = _relative(
        residual,
        [u_tt, b * u_t[inner], d2[inner], m * u[inner], f[inner] if f is not None else None],
        w,
    )
    report.add(
        f"{prefix}.pde_residual", value, _tolerance(traj.grid, tol, order_constant),
        h=traj.grid.h, scale=scale, window=[window.k_min, window.k_max],
    )
    return report


def residual_wave_physical(
    traj: SolutionTrajectory,
    p: WaveProblem,
    tol: float | None = None,
    x_floor: float = DEFAULT_X_FLOOR,
    order_constant: float = ORDER_CONSTANT,
) -> VerificationReport:
    """Checks ``u_tt + b u_t - D^2 u + m u`` and both initial conditions."""
    return _wave_physical(
        traj, p.b, p.m, p.phi, p.psi, None, "wave", tol, x_floor, order_constant
    )


def residual_forced_wave_physical(
    traj: SolutionTrajectory,
    p: ForcedWaveProblem,
    tol: float | None = None,
    x_floor: float = DEFAULT_X_FLOOR,
    order_constant: float = ORDER_CONSTANT,
) -> VerificationReport:
    """Checks ``u_tt + b u_t - D^2 u + m u - f`` with zero initial data."""
    return _wave_physical(
        traj, p.b, p.m, None, None, p.forcing, "forced-wave", tol, x_floor, order_constant
    )


#
# Spectral residuals
#


def _resolved(cfg: TransformConfig, xi_max: float) -> np.ndarray:
    return np.sqrt(cfg.xi_squared()) <= xi_max


def _spectral_forcing_history(forcing, cfg: TransformConfig, nodes: np.ndarray) -> np.ndarray | None:
    if forcing is None:
        return None
    f_hat = SpectralForcing(forcing, cfg)
    return np.array([f_hat(t) for t in nodes])


def _spectral_initial(
    report: VerificationReport,
    name: str,
    u0: np.ndarray,
    phi: SignedLatticeFunction | None,
    cfg: TransformConfig,
    keep: np.ndarray,
    w: np.ndarray,
) -> None:
    """Relative distance of the first spectrum from the transformed data; absolute for zero data."""
    target = forward(phi, cfg).stacked()[keep] if phi is not None else np.zeros_like(u0)
    err = float(np.sqrt(np.sum(w * np.abs(u0 - target) ** 2)))
    ref = float(np.sqrt(np.sum(w * np.abs(target) ** 2)))
    report.add(name, err / ref if ref > 0 else err, INITIAL_TOL)


def spectral_residual_heat(
    traj: SolutionTrajectory,
    p: HeatProblem,
    cfg: TransformConfig,
    xi_max: float = 4.0,
    tol: float | None = None,
    order_constant: float = ORDER_CONSTANT,
) -> VerificationReport:
    """
    Checks ``u_hat_t + (m + xi**2) u_hat - f_hat`` on channels with ``|xi| <= xi_max``.
    """
    report = VerificationReport("heat spectral residual")
    keep = _resolved(cfg, xi_max)
    w = (np.concatenate([cfg.spec.weights()] * (2 if cfg.full_line else 1)))[keep]
    _spectral_initial(report, "heat.initial_spectrum", traj.spectral[0, keep], p.phi, cfg, keep, w)
    lam = (p.m + cfg.xi_squared())[keep]
    u = traj.spectral[:, keep]
    u_t = time_derivative(u, traj.grid.nodes, 1)
    f = _spectral_forcing_history(p.forcing, cfg, traj.grid.nodes)
    f = f[:, keep] if f is not None else None
    inner = slice(1, -1)
    residual = u_t[inner] + lam * u[inner] - (f[inner] if f is not None else 0.0)
    value, scale = _relative(
        residual, [u_t[inner], lam * u[inner], f[inner] if f is not None else None], w
    )
    report.add(
        "heat.spectral_residual", value, _tolerance(traj.grid, tol, order_constant),
        h=traj.grid.h, xi_max=xi_max, channels=int(keep.sum()),
    )
    return report


def spectral_residual_wave(
    traj: SolutionTrajectory,
    p: "WaveProblem | ForcedWaveProblem",
    cfg: TransformConfig,
    xi_max: float = 4.0,
    tol: float | None = None,
    order_constant: float = ORDER_CONSTANT,
) -> VerificationReport:
    """Checks ``u_hat_tt + b u_hat_t + (m + xi**2) u_hat - f_hat`` on resolved channels."""
    report = VerificationReport(f"{p.kind} spectral residual")
    keep = _resolved(cfg, xi_max)
    w = (np.concatenate([cfg.spec.weights()] * (2 if cfg.full_line else 1)))[keep]
    _spectral_initial(
        report, f"{p.kind}.initial_spectrum", traj.spectral[0, keep], getattr(p, "phi", None), cfg, keep, w
    )
    lam = (p.m + cfg.xi_squared())[keep]
    nodes = traj.grid.nodes
    u = traj.spectral[:, keep]
    u_t = time_derivative(u, nodes, 1)
    u_tt = time_derivative(u, nodes, 2)
    f = _spectral_forcing_history(getattr(p, "forcing", None), cfg, nodes)
    f = f[:, keep] if f is not None else None
    inner = slice(1, -1)
    residual = u_tt + p.b * u_t[inner] + lam * u[inner] - (f[inner] if f is not None else 0.0)
    value, scale = _relative(
        residual,
        [u_tt, p.b * u_t[inner], lam * u[inner], f[inner] if f is not None else None],
        w,
    )
    report.add(
        f"{p.kind}.spectral_residual", value, _tolerance(traj.grid, tol, order_constant),
        h=traj.grid.h, xi_max=xi_max, channels=int(keep.sum()),
    )
    return report


SOLVERS = {"heat": solve_heat, "wave": solve_wave, "forced-wave": solve_forced_wave}


def physical_residual(traj: SolutionTrajectory, p, **kwargs) -> VerificationReport:
    if p.kind == "heat":
        return residual_heat_physical(traj, p, **kwargs)
    if p.kind == "wave":
        return residual_wave_physical(traj, p, **kwargs)
    return residual_forced_wave_physical(traj, p, **kwargs)


def residual_order(
    p,
    cfg: TransformConfig,
    node_counts: Sequence[int] = (17, 33, 65),
    nq: int = 8,
    order_range: tuple[float, float] = (1.8, 2.2),
    x_floor: float = DEFAULT_X_FLOOR,
) -> VerificationReport:
    """
    Solves on successively halved time grids and fits the residual's order.

    The last observed order must fall inside `order_range`.
    """
    report = VerificationReport(f"{p.kind} residual refinement")
    solve = SOLVERS[p.kind]
    values, steps = [], []
    for n in node_counts:
        grid = TimeGrid.uniform(p.T, n)
        traj = solve(p, grid, cfg, nq)
        sub = physical_residual(traj, p, x_floor=x_floor)
        values.append(sub[f"{p.kind}.pde_residual"].value)
        steps.append(grid.h)
    orders = [
        math.log(values[i] / values[i + 1]) / math.log(steps[i] / steps[i + 1])
        if values[i + 1] > 0 else math.inf
        for i in range(len(values) - 1)
    ]
    lo, hi = order_range
    report.add(
        f"{p.kind}.residual_order", orders[-1], lo, relation=">=",
        residuals=values, steps=steps, orders=orders,
    )
    report.add(f"{p.kind}.residual_order_upper", orders[-1], hi, orders=orders)
    return report


#
# A-priori bounds
#


def _ratio(lhs: np.ndarray, rhs: np.ndarray) -> float:
    """Largest lhs / rhs with 0/0 read as 0 and x/0 as infinity."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > 1e-300, np.inf, 0.0))
    return float(np.max(r))


def apriori_heat(
    traj: SolutionTrajectory,
    p: HeatProblem,
    cfg: TransformConfig,
    slack: float = APRIORI_SLACK,
    nq: int = 8,
) -> VerificationReport:
    """
    Checks the energy estimates of the heat problem at every time node.

    For a weight ``w(xi)`` the check compares
    ``sum w |u_hat(t)|**2`` with ``t int_0^t sum w |f_hat|**2 + exp(-2 t m) sum w |phi_hat|**2``
    for the plain, ``xi**2`` and ``(1 + xi**2)**2`` weights. When both data
    and forcing are present the gating version carries a factor 2 on the
    right, since ``|a + b|**2 <= 2 |a|**2 + 2 |b|**2``; the version without it
    is reported alongside.
    """
    report = VerificationReport("heat a-priori estimates")
    nodes = traj.grid.nodes
    phi_hat = forward(p.phi, cfg).stacked()
    jw = np.concatenate([cfg.spec.weights()] * (2 if cfg.full_line else 1))
    xi2 = cfg.xi_squared()
    u2 = np.abs(traj.spectral) ** 2

    if p.forcing is not None:
        f_hat = SpectralForcing(p.forcing, cfg)
        f2 = np.array(
            [time_quadrature(lambda tau: np.abs(f_hat(tau)) ** 2, t, nq) if t > 0 else np.zeros(xi2.size)
             for t in nodes]
        )
    else:
        f2 = np.zeros_like(u2, dtype=float)

    both = p.forcing is not None and not p.phi.is_zero()
    weights = {"l2": np.ones_like(xi2), "xi2": xi2, "sobolev2": (1.0 + xi2) ** 2}
    for label, weight in weights.items():
        ww = jw * weight
        lhs = u2 @ ww
        rhs = nodes * (f2 @ ww) + np.exp(-2.0 * nodes * p.m) * np.sum(ww * np.abs(phi_hat) ** 2)
        if both:
            report.add(f"heat.apriori.{label}.printed", _ratio(lhs, rhs), 1.0 + slack, gating=False)
            report.add(f"heat.apriori.{label}", _ratio(lhs, 2.0 * rhs), 1.0 + slack)
        else:
            report.add(f"heat.apriori.{label}", _ratio(lhs, rhs), 1.0 + slack)

    if p.forcing is None:
        damping = np.sqrt(u2 @ jw) / np.exp(-nodes * p.m)
        ref = math.sqrt(np.sum(jw * np.abs(phi_hat) ** 2))
        report.add("heat.damping", _ratio(damping, np.full_like(damping, ref)), 1.0 + slack)

    init = float(np.sqrt(np.sum(jw * np.abs(traj.spectral[0] - phi_hat) ** 2)))
    ref = float(np.sqrt(np.sum(jw * np.abs(phi_hat) ** 2)))
    report.add("heat.apriori.initial", init / ref if ref > 0 else init, INITIAL_TOL)
    return report


def apriori_wave(
    traj: SolutionTrajectory,
    p: WaveProblem,
    cfg: TransformConfig,
    slack: float = APRIORI_SLACK,
) -> VerificationReport:
    """
    Checks the per-frequency bound of the damped wave.

    With ``theta = sqrt(4 (m + xi**2) - b**2) / 2`` every channel satisfies
    ``|u_hat(t)| <= |phi_hat| (1 + b / (2 theta)) + |psi_hat| / theta``.
    The constant ``C`` in ``|u_hat| <= C (|phi_hat| + |psi_hat| / (1 + |xi|))``
    is measured and reported.
    """
    report = VerificationReport("wave a-priori estimates")
    xi2 = cfg.xi_squared()
    phi_hat = forward(p.phi, cfg).stacked()
    psi_hat = forward(p.psi, cfg).stacked()
    theta = 0.5 * np.sqrt(4.0 * (p.m + xi2) - p.b**2)
    bound = np.abs(phi_hat) * (1.0 + p.b / (2.0 * theta)) + np.abs(psi_hat) / theta
    amp = np.abs(traj.spectral)
    report.add(
        "wave.apriori.bound",
        _ratio(amp, np.broadcast_to(bound, amp.shape)),
        1.0 + slack,
    )
    data = np.abs(phi_hat) + np.abs(psi_hat) / (1.0 + np.sqrt(xi2))
    report.add(
        "wave.apriori.constant",
        _ratio(amp, np.broadcast_to(data, amp.shape)),
        float(np.max(1.0 + p.b / (2.0 * theta) + (1.0 + np.sqrt(xi2)) / theta)),
    )

    # ||u||_{W^2} <= C (||phi||_{W^2} + ||psi||_{W^1}) with C from the channel bound
    jw = np.concatenate([cfg.spec.weights()] * (2 if cfg.full_line else 1))
    s = 1.0 + xi2
    c_disp = float(np.max(np.maximum(1.0 + p.b / (2.0 * theta), np.sqrt(s) / theta)))
    norm_u = np.sqrt((amp**2 * s**2) @ jw)
    norm_data = math.sqrt(np.sum(jw * s**2 * np.abs(phi_hat) ** 2)) + math.sqrt(
        np.sum(jw * s * np.abs(psi_hat) ** 2)
    )
    report.add(
        "wave.apriori.w2",
        _ratio(norm_u, np.full_like(norm_u, c_disp * norm_data)),
        1.0 + slack,
        constant=c_disp,
    )

    # ||u_t||_{W^1} <= C' (||psi||_{W^1} + ||phi||_{W^2}) with u_t by time differences
    c_vel = float(np.max(np.maximum(1.0 + p.b / (2.0 * theta), (p.m + xi2) / (theta * np.sqrt(s)))))
    u_t = time_derivative(traj.spectral, traj.grid.nodes, 1)
    norm_ut = np.sqrt((np.abs(u_t) ** 2 * s) @ jw)
    report.add(
        "wave.apriori.velocity_w1",
        _ratio(norm_ut, np.full_like(norm_ut, c_vel * norm_data)),
        1.0 + max(slack, ORDER_CONSTANT * traj.grid.h**2),
        constant=c_vel,
    )

    scale = float(np.max(np.abs(phi_hat))) or 1.0
    report.add(
        "wave.apriori.initial",
        float(np.max(np.abs(traj.spectral[0] - phi_hat))) / scale,
        INITIAL_TOL,
    )
    return report


#
# Probes
#


def uniqueness_probe(
    kind: str,
    cfg: TransformConfig,
    T: float = 1.0,
    nodes: int = 17,
    b: float = 1.0,
    m: float = 1.0,
    tol: float = 1e-12,
) -> VerificationReport:
    """Solves a problem with zero data and zero forcing; the solution must vanish."""
    zero = SignedLatticeFunction.zeros(cfg.spec)
    if kind == "heat":
        p = HeatProblem(m, zero, T)
    elif kind == "wave":
        p = WaveProblem(b, m, zero, zero, T)
    elif kind == "forced-wave":
        p = ForcedWaveProblem(b, m, lambda t: zero, cfg.spec, T)
    else:
        raise ConfigError(f"unknown problem kind {kind!r}")
    traj = SOLVERS[kind](p, TimeGrid.uniform(T, nodes), cfg)
    report = VerificationReport(f"{kind} uniqueness")
    report.add(f"{kind}.uniqueness", float(np.max(np.abs(traj.physical))), tol)
    return report


def detector_probe(
    check: Callable[..., VerificationReport],
    traj: SolutionTrajectory,
    *args,
    factor: float = 1.01,
    **kwargs,
) -> VerificationReport:
    """
    Runs a check on a corrupted copy of the trajectory; it must fail.

    The recorded value is the worst gating ``value / tolerance`` on the
    corrupted input, which must exceed 1.
    """
    corrupted = check(traj.corrupted(factor), *args, **kwargs)
    worst = 0.0
    for c in corrupted.checks:
        if not c.gating:
            continue
        if c.relation == "<=":
            worst = max(worst, c.value / c.tolerance if c.tolerance > 0 else math.inf)
        else:
            worst = max(worst, c.tolerance / c.value if c.value > 0 else math.inf)
    report = VerificationReport(f"detector: {corrupted.title}")
    report.add(f"detector.{corrupted.title}", worst, 1.0, relation=">=", factor=factor)
    return report


def eigen_residual(
    table: KernelTable,
    j: int,
    order: int = 1,
    arguments: tuple[float, float] = EIGEN_ARGUMENTS,
) -> float:
    """
    ``max |D^n e - (i lambda)**n e| / max |(i lambda)**n e|`` for ``e(x) = e_{q^2}(i q**j x)``.

    Only points whose argument ``q**j |x|`` lies in `arguments` count.
    """
    spec = table.spec
    k_lo = max(spec.k_min, table.m_min - j)
    k_hi = min(spec.k_max, table.m_max - j)
    window = LatticeSpec(spec.q, k_lo, k_hi)
    e = kernel_sample(window, j, "exp", table)
    d = rubin_d(e) if order == 1 else rubin_d2(e)
    lam = spec.q.q**j
    inner = e.window(d.spec.k_min, d.spec.k_max)
    target = (1j * lam) ** order * inner.stacked()
    arg = np.concatenate([d.spec.points(), d.spec.points()]) * lam
    keep = (arg >= arguments[0]) & (arg <= arguments[1])
    if not keep.any():
        raise LatticeRangeError(f"no lattice points with arguments in {arguments} for j={j}")
    diff = np.abs(d.stacked() - target)[keep]
    return float(np.max(diff) / np.max(np.abs(target[keep])))


def eigen_check(
    table: KernelTable, js: Sequence[int] = range(-3, 7), tol: float = 1e-8
) -> VerificationReport:
    report = VerificationReport("kernel eigenrelations")
    for order in (1, 2):
        worst = max(eigen_residual(table, j, order) for j in js)
        report.add(f"kernel.eigen_d{order}", worst, tol, js=list(js), arguments=list(EIGEN_ARGUMENTS))
    return report


def kernel_consistency(table: KernelTable, tol: float = 1e-10) -> VerificationReport:
    """Overlap agreement of recurrence and series, and the entry at ``m = 0``."""
    report = VerificationReport("kernel table")
    report.add("kernel.overlap", table.consistency, tol, digits=table.digits)
    if table.covers(0, 0):
        direct = e_q2_imag(1.0, table.q)
        report.add("kernel.unit_entry", abs(table.lookup(0) - direct), 1e-14)
    report.add("kernel.certified_error", float(np.max(table.errors)), tol)
    report.add(
        "kernel.coverage", float(table.m_min - table.requested_min), 0.0,
        requested=[table.requested_min, table.m_max], reachable=[table.m_min, table.m_max],
    )
    return report


#
# Classical limit
#


LIMIT_FUNCTIONS: dict[str, tuple[Callable, Callable]] = {
    "x^2": (lambda x: x**2, lambda x: 2 * x),
    "x^3": (lambda x: x**3, lambda x: 3 * x**2),
    "x^5": (lambda x: x**5, lambda x: 5 * x**4),
    "exp(-x^2)": (lambda x: np.exp(-(x**2)), lambda x: -2 * x * np.exp(-(x**2))),
}


def _limit_window(q: float, x_lo: float) -> LatticeSpec:
    return LatticeSpec(QParam(q), 0, max(2, math.floor(math.log(x_lo) / math.log(q))))


def classical_limit_study(
    qs: Sequence[float] = (0.9, 0.99, 0.999),
    x_lo: float = 0.5,
    kernel_x_max: float = 4.0,
    kernel_x_min: float = 1e-3,
    kernel_points: int = 128,
    slope_range: tuple[float, float] = (0.9, 1.1),
    ratio_range: tuple[float, float] = (8.0, 12.0),
) -> VerificationReport:
    """
    Measures how D and the kernel approach their classical counterparts.

    For each test function the largest ``|D f - f'|`` over lattice points in
    ``[x_lo, 1]`` is recorded per q, with the fitted slope of
    ``log error`` against ``log (1 - q)``. The kernel error
    ``sup |e_{q^2}(i x) - exp(i x)|`` over lattice points in
    ``[kernel_x_min, kernel_x_max]`` must decrease along `qs`.
    """
    report = VerificationReport("classical limit")
    qs = list(qs)
    log_h = np.log([1.0 - q for q in qs])
    for name, (f, df) in LIMIT_FUNCTIONS.items():
        errors = []
        for q in qs:
            spec = _limit_window(q, x_lo)
            d = rubin_d_callable(f, spec)
            x = spec.points()
            errors.append(float(np.max(np.abs(d.pos - df(x)))))
        slope = float(np.polyfit(log_h, np.log(errors), 1)[0])
        ratios = [errors[i] / errors[i + 1] for i in range(len(errors) - 1)]
        report.add(f"limit.{name}.slope", slope, slope_range[0], relation=">=", errors=errors, qs=qs)
        report.add(f"limit.{name}.slope_upper", slope, slope_range[1])
        if name == "x^3":
            report.add(f"limit.{name}.ratio_min", min(ratios), ratio_range[0], relation=">=", ratios=ratios)
            report.add(f"limit.{name}.ratio_max", max(ratios), ratio_range[1], ratios=ratios)

    sup_errors = []
    for q in qs:
        k_lo = math.ceil(math.log(kernel_x_max) / math.log(q) - 1e-12)
        k_hi = math.floor(math.log(kernel_x_min) / math.log(q))
        ks = np.unique(np.linspace(k_lo, k_hi, min(kernel_points, k_hi - k_lo + 1)).round().astype(int))
        err = max(abs(e_q2_imag(q**k, q, escalate=True) - complex(math.cos(q**k), math.sin(q**k))) for k in ks)
        sup_errors.append(float(err))
    decreasing = all(a > b for a, b in zip(sup_errors, sup_errors[1:]))
    report.add(
        "limit.kernel.monotone", 1.0 if decreasing else 0.0, 1.0, relation=">=",
        errors=sup_errors, qs=qs,
    )
    return report
