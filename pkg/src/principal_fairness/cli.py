"""Command-line entry point: simulate, fit, assess, pipeline.

Exit codes: 0 success, 2 validation error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import STRATA, ValidationError
from .fairness import LayoutError, assess_principal_fairness, fit_arm_models
from .serialize import (
    config_hash,
    dataset_to_csv,
    posterior_from_text,
    posterior_to_text,
    read_dataset,
    report_to_csv,
    report_to_text,
    trace_to_csv,
    truth_to_csv,
)
from .sim import DEFAULT_DECISION_PROB, SimConfig, simulate, true_delta
from .vi import LR_SCHEDULES, FitConfig, NumericalError

log = logging.getLogger("principal_fairness")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

DATA_FILE = "data.csv"
TRUTH_FILE = "truth.csv"
POSTERIOR_FILES = {0: "posterior_y0.txt", 1: "posterior_y1.txt"}
TRACE_FILE = "elbo_trace.csv"


@dataclass
class RunConfig:
    command: str
    output_dir: Path
    input: Path | None = None
    posterior_dir: Path | None = None
    seed: int | None = None
    sim: SimConfig | None = None
    fit: FitConfig = field(default_factory=FitConfig)
    use_attribute: bool = False
    draws: int = 100
    interval: str = "population"
    report_format: str = "text"

    def validate(self):
        if self.command in ("simulate", "pipeline") and self.seed is None:
            raise ValidationError(f"--seed is required for {self.command}")
        if self.command in ("fit", "assess"):
            if self.input is None:
                raise ValidationError(f"--input is required for {self.command}")
            if not self.input.is_file():
                raise FileNotFoundError(f"input file not found: {self.input}")
        if self.command == "assess":
            for name in POSTERIOR_FILES.values():
                path = self.posterior_root / name
                if not path.is_file():
                    raise FileNotFoundError(f"posterior artifact not found: {path}")
        if self.draws < 1:
            raise ValidationError(f"--draws must be >= 1, got {self.draws}")

    @property
    def posterior_root(self) -> Path:
        return self.posterior_dir or self.output_dir


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _provenance(command: str, config: dict, **extra) -> dict:
    prov = {"tool": f"principal-fairness {__version__}", "command": command}
    prov.update(extra)
    prov["config"] = config
    prov["config_hash"] = config_hash(config)
    return prov


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_simulate(cfg: RunConfig) -> int:
    sim_cfg = cfg.sim
    sim = simulate(sim_cfg)
    prov = _provenance("simulate", sim_cfg.as_dict(), seed=sim_cfg.seed)
    _write(cfg.output_dir / DATA_FILE, dataset_to_csv(sim.data, prov))
    _write(cfg.output_dir / TRUTH_FILE, truth_to_csv(sim.truth.y0, sim.truth.y1, sim.strata, prov))
    print("configured delta(h) = p(D=1 | h, A=1) - p(D=1 | h, A=0)")
    for h, value in true_delta(sim_cfg).items():
        print(f"  {h.label:<16}{value:+.4f}")
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    data, _ = read_dataset(cfg.input)
    fits = dict(enumerate(fit_arm_models(data, cfg.fit, cfg.use_attribute)))
    config = {**cfg.fit.as_dict(), "use_attribute": cfg.use_attribute}
    prov = _provenance("fit", config, seed=cfg.fit.seed, input_sha256=_sha256(cfg.input))
    for arm, fit in fits.items():
        arm_prov = dict(prov)
        n_coef = fit.posterior.dim
        if fit.n_rows < n_coef:
            msg = (f"theta_y{arm} posterior is prior-dominated: {fit.n_rows} training rows "
                   f"for {n_coef} coefficients")
            log.warning(msg)
            print(f"warning: {msg}", file=sys.stderr)
            arm_prov["warning"] = msg
        _write(cfg.output_dir / POSTERIOR_FILES[arm], posterior_to_text(fit, arm, arm_prov))
    _write(cfg.output_dir / TRACE_FILE, trace_to_csv(fits, prov))
    for arm, fit in fits.items():
        print(f"arm {arm}: {fit.n_rows} rows, {fit.posterior.dim} coefficients, final ELBO {fit.final_elbo:.4f}")
    return EXIT_OK


def cmd_assess(cfg: RunConfig) -> int:
    data, _ = read_dataset(cfg.input)
    artifacts = {}
    for arm, name in POSTERIOR_FILES.items():
        artifacts[arm] = posterior_from_text((cfg.posterior_root / name).read_text())
        expected = data.n_features + (2 if "A" in artifacts[arm].feature_names else 1)
        if artifacts[arm].posterior.dim != expected:
            raise LayoutError(
                f"posterior artifact {name} has {artifacts[arm].posterior.dim} coordinates but the data has "
                f"{data.n_features} covariates (expected {expected})"
            )
        names = [n for n in artifacts[arm].feature_names if n not in ("A", "intercept")]
        if names != list(data.feature_names):
            raise LayoutError(f"posterior artifact {name} covariate names do not match the data columns")
    report = assess_principal_fairness(
        data, artifacts[0].posterior, artifacts[1].posterior, cfg.draws, seed=cfg.seed or 0,
        interval=cfg.interval,
    )
    config = {
        "draws": cfg.draws,
        "interval": cfg.interval,
        "fit_y0": artifacts[0].config.as_dict(),
        "fit_y1": artifacts[1].config.as_dict(),
    }
    prov = _provenance("assess", config, seed=cfg.seed or 0, input_sha256=_sha256(cfg.input))
    warnings = [a.provenance["warning"] for a in artifacts.values() if "warning" in a.provenance]
    for h in report.unreliable_strata:
        warnings.append(f"stratum {h.label} defined in only {report.strata[h].defined_fraction:.0%} of draws")
    for i, w in enumerate(warnings):
        prov[f"warning_{i}"] = w
    if cfg.report_format == "csv":
        _write(cfg.output_dir / "report.csv", report_to_csv(report, prov))
    else:
        _write(cfg.output_dir / "report.txt", report_to_text(report, prov))
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    for h in STRATA:
        s = report.strata[h]
        print(f"  {h.label:<16}delta {s.delta_mean:+.4f}  [{s.delta_lower:+.4f}, {s.delta_upper:+.4f}]")
    return EXIT_OK


def cmd_pipeline(cfg: RunConfig) -> int:
    data_path = cfg.output_dir / DATA_FILE
    cmd_simulate(cfg)
    staged = RunConfig(**{**cfg.__dict__, "input": data_path})
    cmd_fit(staged)
    return cmd_assess(staged)


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "assess": cmd_assess, "pipeline": cmd_pipeline}


def _decision_probs(text: str) -> np.ndarray:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if len(values) != 8:
        raise argparse.ArgumentTypeError(f"expected 8 comma-separated values, got {len(values)}")
    return np.array(values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="principal-fairness", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", type=Path, default=Path("."))
    common.add_argument("--seed", type=int)

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--n", type=int, default=5000)
    sim.add_argument("--m", type=int, default=100)
    sim.add_argument("--theta-d", type=float, default=-1.0)
    sim.add_argument("--decision-probs", type=_decision_probs, default=DEFAULT_DECISION_PROB.ravel(),
                     help="8 comma-separated p[h,a], stratum-major: stable A=0, stable A=1, ...")

    fit = argparse.ArgumentParser(add_help=False)
    fit.add_argument("--prior-std", type=float, default=1.0)
    fit.add_argument("--lr", type=float, default=0.01)
    fit.add_argument("--lr-schedule", choices=LR_SCHEDULES, default="inverse")
    fit.add_argument("--steps", type=int, default=3000)
    fit.add_argument("--mc-samples", type=int, default=8)
    fit.add_argument("--with-attribute", action="store_true",
                     help="include A as a regressor in the outcome models")

    assess = argparse.ArgumentParser(add_help=False)
    assess.add_argument("--draws", type=int, default=100, help="posterior draws S")
    assess.add_argument("--format", choices=("text", "csv"), default="text")
    assess.add_argument("--interval", choices=("population", "sample"), default="population")
    assess.add_argument("--posterior-dir", type=Path, help="directory holding posterior files (default: output dir)")

    inp = argparse.ArgumentParser(add_help=False)
    inp.add_argument("--input", type=Path)

    sub.add_parser("simulate", parents=[common, sim], help="write a synthetic data.csv and truth.csv")
    sub.add_parser("fit", parents=[common, inp, fit], help="fit both arm posteriors")
    sub.add_parser("assess", parents=[common, inp, assess], help="estimate delta(h) and baselines")
    sub.add_parser("pipeline", parents=[common, sim, fit, assess], help="simulate, fit and assess")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command, output_dir=args.output_dir, seed=args.seed,
                    input=getattr(args, "input", None))
    if hasattr(args, "n"):
        cfg.sim = SimConfig(n=args.n, m=args.m, theta_d=args.theta_d, decision_prob=args.decision_probs,
                            seed=args.seed if args.seed is not None else 0)
    if hasattr(args, "prior_std"):
        cfg.fit = FitConfig(prior_std=args.prior_std, learning_rate=args.lr, steps=args.steps,
                            mc_samples=args.mc_samples, lr_schedule=args.lr_schedule,
                            seed=args.seed if args.seed is not None else 0)
        cfg.use_attribute = args.with_attribute
    if hasattr(args, "draws"):
        cfg.draws = args.draws
        cfg.report_format = args.format
        cfg.interval = args.interval
        cfg.posterior_dir = args.posterior_dir
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
        return COMMANDS[cfg.command](cfg)
    except (ValidationError, LayoutError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
