import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from functools import cached_property

from ..errors import ConfigError, PyQSpectralError, VerificationFailure
from ..families import forcing_family, read_lattice_csv, sample_family
from ..fourier import (
    TransformConfig,
    benchmark_structured,
    calibrate,
    forward,
    parseval_residual,
    round_trip_error,
    write_spectrum_csv,
)
from ..lattice import LatticeSpec, QParam, SignedLatticeFunction
from ..quadrature import TimeGrid
from ..solvers import (
    ForcedWaveProblem,
    HeatProblem,
    SolutionTrajectory,
    WaveProblem,
    load_trajectory,
    solution_norms,
    write_solution_csv,
)
from ..special import KernelTable, build_kernel_table, kernel_sup, write_kernel_csv
from ..utils import atomic_write_json, print_and_log, write_csv
from ..verify import (
    SOLVERS,
    VerificationReport,
    apriori_heat,
    apriori_wave,
    classical_limit_study,
    detector_probe,
    eigen_check,
    kernel_consistency,
    physical_residual,
    spectral_residual_heat,
    spectral_residual_wave,
    uniqueness_probe,
)
from .config import PIPELINES, DataSelector, RunConfig, parse_config

logger = logging.getLogger(__name__)

LOG_FILE = "pyqspectral.log"
REPORT_FILE = "report.json"
ROUND_TRIP_TOL = 1e-8
PARSEVAL_TOL = 1e-6
STRUCTURED_TOL = 1e-10
IMAG_RESIDUE_TOL = 1e-10


@dataclass
class PipelineRunner:
    """
    Runs one configured pipeline and writes its artifacts.

    Attributes:
        cfg (RunConfig): The validated run configuration.
        log_path (str): Log file inside the output directory.
    """

    cfg: RunConfig
    log_path: str = field(init=False)

    def __post_init__(self):
        os.makedirs(self.cfg.output_dir, exist_ok=True)
        self.log_path = os.path.join(self.cfg.output_dir, LOG_FILE)
        logging.basicConfig(
            filename=self.log_path,
            level=logging.INFO,
            format="%(asctime)s - %(levelname)s - %(message)s",
            force=True,
        )

    def path(self, name: str) -> str:
        return os.path.join(self.cfg.output_dir, name)

    def say(self, message: str) -> None:
        print_and_log(message, self.cfg.verbose)

    @cached_property
    def spec(self) -> LatticeSpec:
        return LatticeSpec(QParam(self.cfg.q), self.cfg.k_min, self.cfg.k_max)

    @cached_property
    def kernel(self) -> KernelTable:
        table = build_kernel_table(self.spec, digits=self.cfg.precision_digits)
        self.say(
            f"Kernel table m in [{table.m_min}, {table.m_max}] "
            f"at {table.digits} digits, overlap {table.consistency:.3e}"
        )
        return table

    @cached_property
    def transform(self) -> TransformConfig:
        tcfg = calibrate(self.spec, self.cfg.mode, self.kernel)
        self.say(f"Calibration ratio {tcfg.calibration_ratio:.15g}")
        return tcfg

    def data(self, selector: DataSelector) -> SignedLatticeFunction:
        if selector.csv is not None:
            return read_lattice_csv(selector.csv, self.spec)
        return sample_family(selector.family, self.spec, selector.params, self.kernel)

    def forcing(self):
        f = self.cfg.forcing
        return forcing_family(f.family, self.spec, f.profile, f.params, self.kernel)

    def problem(self, kind: str | None = None):
        """Builds the configured heat, wave or forced-wave problem."""
        kind = kind or self.cfg.problem.kind
        pc = self.cfg.problem
        if kind == "heat":
            return HeatProblem(pc.m, self.data(self.cfg.phi), pc.T, self.forcing())
        if kind == "wave":
            return WaveProblem(pc.b, pc.m, self.data(self.cfg.phi), self.data(self.cfg.psi), pc.T)
        forcing = self.forcing()
        if forcing is None:
            raise ConfigError("forced-wave problem needs a nonzero forcing")
        return ForcedWaveProblem(pc.b, pc.m, forcing, self.spec, pc.T)

    def solve(self, p) -> SolutionTrajectory:
        grid = TimeGrid.uniform(p.T, self.cfg.time_nodes)
        return SOLVERS[p.kind](p, grid, self.transform, self.cfg.quadrature_panels)

    #
    # Pipelines
    #

    def run_transform(self, f: SignedLatticeFunction | None = None) -> VerificationReport:
        report = VerificationReport("transform")
        tcfg = self.transform
        f = f if f is not None else self.data(self.cfg.phi)
        write_spectrum_csv(forward(f, tcfg), self.path("spectrum.csv"))

        report.add("transform.calibration_residual", tcfg.calibration_residual, ROUND_TRIP_TOL)
        report.add(
            "transform.calibration_ratio", tcfg.calibration_ratio, 0.0, relation=">=",
            gating=False, raw_scale=tcfg.raw_scale, reference=tcfg.reference_constant,
        )
        report.add("transform.round_trip", round_trip_error(f, tcfg), PARSEVAL_TOL)
        report.add("transform.parseval", parseval_residual(f, tcfg), PARSEVAL_TOL)
        bench = benchmark_structured(tcfg)
        report.add("transform.structured_agreement", bench["agreement"], STRUCTURED_TOL, **bench)
        return report

    def run_solve(self, kind: str) -> VerificationReport:
        p = self.problem(kind)
        traj = self.solve(p)
        traj.save_json(self.path("trajectory.json"))
        write_solution_csv(traj, self.path("solution.csv"))

        report = VerificationReport(f"solve {kind}")
        report.add(
            f"{kind}.imag_residue", traj.imag_residue(), IMAG_RESIDUE_TOL, gating=False,
            **solution_norms(traj),
        )
        report = report.merge(physical_residual(traj, p, tol=self.cfg.tolerances["residual"]))
        return report

    def run_verify(self) -> VerificationReport:
        if self.cfg.trajectory is not None:
            return self.verify_trajectory(load_trajectory(self.cfg.trajectory))

        tol = self.cfg.tolerances
        report = VerificationReport("verify")
        report = report.merge(kernel_consistency(self.kernel, tol["kernel"]))
        report = report.merge(eigen_check(self.kernel))
        p = self.problem()
        report = report.merge(self.run_transform(_probe_data(p)))

        traj = self.solve(p)
        traj.save_json(self.path("trajectory.json"))
        report = report.merge(self.check_trajectory(traj, p))
        report = report.merge(detector_probe(physical_residual, traj, p, tol=tol["residual"]))
        pc = self.cfg.problem
        report = report.merge(uniqueness_probe(p.kind, self.transform, T=pc.T, b=pc.b, m=pc.m))
        return report

    def check_trajectory(self, traj: SolutionTrajectory, p) -> VerificationReport:
        """Residual and a-priori checks of one trajectory against its problem."""
        tol = self.cfg.tolerances
        tcfg = self.transform
        report = physical_residual(traj, p, tol=tol["residual"])
        if p.kind == "heat":
            report = report.merge(spectral_residual_heat(traj, p, tcfg, tol=tol["residual"]))
            report = report.merge(apriori_heat(traj, p, tcfg, slack=tol["apriori"]))
        else:
            report = report.merge(spectral_residual_wave(traj, p, tcfg, tol=tol["residual"]))
            if p.kind == "wave":
                report = report.merge(apriori_wave(traj, p, tcfg, slack=tol["apriori"]))
        return report

    def verify_trajectory(self, traj: SolutionTrajectory) -> VerificationReport:
        """Re-checks a stored trajectory against the configured problem."""
        p = self.problem(traj.kind)
        if traj.spec != self.spec:
            raise ConfigError(
                f"stored trajectory window [{traj.spec.k_min}, {traj.spec.k_max}] "
                f"does not match the configured window [{self.spec.k_min}, {self.spec.k_max}]"
            )
        if traj.full_line != self.transform.full_line:
            raise ConfigError(
                f"stored trajectory was computed in {'full' if traj.full_line else 'half'} mode, "
                f"configured mode is {self.cfg.mode}"
            )
        expected = traj.provenance.get("problem_digest")
        if expected is not None and expected != p.digest():
            logger.warning("Stored trajectory was produced from different problem data")

        report = VerificationReport(f"verify stored {traj.kind} trajectory")
        return report.merge(self.check_trajectory(traj, p))

    def run_kernel_table(self) -> VerificationReport:
        table = self.kernel
        write_kernel_csv(table, self.path("kernel.csv"))
        report = kernel_consistency(table, self.cfg.tolerances["kernel"])
        report.add("kernel.sup", kernel_sup(table), 0.0, relation=">=", gating=False)
        return report

    def run_limit_study(self) -> VerificationReport:
        report = classical_limit_study(self.cfg.limit_qs)
        rows = [
            (check.name, q, err)
            for check in report.checks
            if check.name.endswith(".slope") or check.name == "limit.kernel.monotone"
            for q, err in zip(check.detail["qs"], check.detail["errors"])
        ]
        write_csv(self.path("limit.csv"), ("check", "q", "error"), rows)
        return report

    def run(self) -> VerificationReport:
        """
        Executes the configured pipeline and writes ``report.json``.

        Raises:
            VerificationFailure: If a gating check failed.
        """
        pipeline = self.cfg.pipeline
        self.say(f"Running pipeline {pipeline} into {self.cfg.output_dir}")
        if pipeline == "transform":
            report = self.run_transform()
        elif pipeline.startswith("solve-"):
            report = self.run_solve(pipeline.removeprefix("solve-"))
        elif pipeline == "verify":
            report = self.run_verify()
        elif pipeline == "kernel-table":
            report = self.run_kernel_table()
        else:
            report = self.run_limit_study()

        data = report.to_dict()
        data["config"] = self.cfg.describe()
        if "transform" in self.__dict__:
            data["transform"] = self.transform.describe()
        atomic_write_json(self.path(REPORT_FILE), data)

        failures = report.failures()
        for check in failures:
            self.say(f"FAILED {check.name}: {check.value:.6e} {check.relation} {check.tolerance:.6e}")
        if failures:
            raise VerificationFailure(
                f"{len(failures)} of {len(report.checks)} checks failed in {pipeline}"
            )
        self.say(f"All {len(report.checks)} checks passed")
        return report


def _probe_data(p) -> SignedLatticeFunction:
    """Nonzero data of a problem for the transform checks: phi, else the forcing profile."""
    phi = getattr(p, "phi", None)
    if phi is not None and not phi.is_zero():
        return phi
    profile = getattr(getattr(p, "forcing", None), "profile", None)
    if profile is None or profile.is_zero():
        raise ConfigError("verify needs nonzero initial data or a separable forcing")
    return profile


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pyqspectral",
        description="Run q-Fourier transforms, q-heat and q-wave solvers and their verification checks.",
    )
    parser.add_argument(
        "pipeline",
        nargs="?",
        choices=PIPELINES,
        help="Pipeline to run; overrides the 'pipeline' key of the config file",
    )
    parser.add_argument("--config", required=True, help="Path to the JSON run configuration")
    parser.add_argument("--out", help="Output directory for CSV data, report and log")
    parser.add_argument("--mode", choices=["full", "half"], help="Transform mode")
    parser.add_argument("--precision-digits", type=int, help="Minimum working digits of the kernel")
    parser.add_argument("--verbose", action="store_true", help="Echo progress to the console")
    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Command-line entry point.

    Returns:
        int: 0 when every check passed, 2 for configuration errors, 3 for
        numeric failures and 4 for failed verification.
    """
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(
            args.config,
            pipeline=args.pipeline,
            output_dir=args.out,
            mode=args.mode,
            precision_digits=args.precision_digits,
            verbose=args.verbose or None,
        )
        PipelineRunner(cfg).run()
    except PyQSpectralError as e:
        logger.error(str(e))
        print(f"pyqspectral: {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
