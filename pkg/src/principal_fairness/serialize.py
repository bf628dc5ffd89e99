"""Plain-text artifacts: data CSV, truth sidecar, posterior files, reports.

Every file may open with ``# key: value`` comment lines carrying provenance
(seed, config, config hash). Readers skip them; everything after is the
payload. Floats are written with ``repr`` so a write/read cycle is exact.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from .core import ATTRIBUTE, DECISION, OUTCOME, STRATA, Dataset, ValidationError, validate_dataset
from .vi import FitConfig, FitResult, VariationalPosterior

POSTERIOR_FORMAT = "principal-fairness-posterior/1"


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _header_lines(provenance: dict | None) -> list[str]:
    if not provenance:
        return []
    lines = []
    for key, value in provenance.items():
        text = value if isinstance(value, str) else json.dumps(value, sort_keys=True, default=_json_default)
        lines.append(f"# {key}: {text}\n")
    return lines


def _split_header(text: str) -> tuple[dict, list[str]]:
    provenance = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        if ":" in body:
            key, value = body.split(":", 1)
            value = value.strip()
            try:
                provenance[key.strip()] = json.loads(value)
            except json.JSONDecodeError:
                provenance[key.strip()] = value
        i += 1
    return provenance, lines[i:]


def _fmt(x: float) -> str:
    return repr(float(x))


def dataset_to_csv(data: Dataset, provenance: dict | None = None) -> str:
    buf = io.StringIO()
    buf.writelines(_header_lines(provenance))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([DECISION, ATTRIBUTE, OUTCOME, *data.feature_names])
    for i in range(data.n_rows):
        writer.writerow([
            int(data.decision[i]), int(data.attribute[i]), int(data.outcome[i]),
            *(_fmt(v) for v in data.covariates[i]),
        ])
    return buf.getvalue()


def dataset_from_csv(text: str) -> tuple[Dataset, dict]:
    """Parse and validate a data CSV; returns the dataset and any provenance."""
    provenance, lines = _split_header(text)
    rows = list(csv.reader(lines))
    if not rows:
        raise ValidationError("empty CSV: header row required")
    header, body = rows[0], rows[1:]
    columns = {name.strip(): [] for name in header}
    if len(columns) != len(header):
        raise ValidationError(f"duplicate column names in header {header}")
    names = list(columns)
    for r, row in enumerate(body):
        if not row:
            continue
        if len(row) != len(names):
            raise ValidationError(f"row {r}: expected {len(names)} fields, got {len(row)}")
        for name, value in zip(names, row):
            columns[name].append(value.strip())
    return validate_dataset(columns), provenance


def write_dataset(path, data: Dataset, provenance: dict | None = None) -> None:
    Path(path).write_text(dataset_to_csv(data, provenance))


def read_dataset(path) -> tuple[Dataset, dict]:
    return dataset_from_csv(Path(path).read_text())


def truth_to_csv(y0, y1, strata, provenance: dict | None = None) -> str:
    buf = io.StringIO()
    buf.writelines(_header_lines(provenance))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["y0", "y1", "stratum_code"])
    writer.writerows(zip(map(int, y0), map(int, y1), map(int, strata)))
    return buf.getvalue()


def truth_from_csv(text: str) -> dict[str, np.ndarray]:
    _, lines = _split_header(text)
    rows = list(csv.DictReader(lines))
    return {k: np.array([int(r[k]) for r in rows], dtype=np.int8) for k in ("y0", "y1", "stratum_code")}


def posterior_to_text(fit: FitResult, arm: int, provenance: dict | None = None) -> str:
    """Key-value posterior artifact, enough to reassess without refitting."""
    cfg = fit.config
    fields = {
        "format": POSTERIOR_FORMAT,
        "arm": str(arm),
        "feature_names": ",".join(fit.feature_names),
        "n_rows": str(fit.n_rows),
        "mu": " ".join(_fmt(v) for v in fit.posterior.mu),
        "log_sigma": " ".join(_fmt(v) for v in fit.posterior.log_sigma),
        "prior_std": _fmt(cfg.prior_std),
        "learning_rate": _fmt(cfg.learning_rate),
        "lr_schedule": cfg.lr_schedule,
        "decay_steps": _fmt(cfg.decay_steps),
        "steps": str(cfg.steps),
        "mc_samples": str(cfg.mc_samples),
        "seed": str(cfg.seed),
        "init_sigma": _fmt(cfg.init_sigma),
        "final_elbo": _fmt(fit.final_elbo),
    }
    lines = _header_lines(provenance)
    lines += [f"{k} = {v}\n" for k, v in fields.items()]
    return "".join(lines)


class PosteriorArtifact:
    """Parsed posterior file."""

    def __init__(self, fields: dict[str, str], provenance: dict):
        self.fields = fields
        self.provenance = provenance
        self.arm = int(fields["arm"])
        self.feature_names = fields["feature_names"].split(",") if fields["feature_names"] else []
        self.posterior = VariationalPosterior(
            np.array([float(v) for v in fields["mu"].split()]),
            np.array([float(v) for v in fields["log_sigma"].split()]),
        )
        self.config = FitConfig(
            prior_std=float(fields["prior_std"]),
            learning_rate=float(fields["learning_rate"]),
            lr_schedule=fields["lr_schedule"],
            decay_steps=float(fields["decay_steps"]),
            steps=int(fields["steps"]),
            mc_samples=int(fields["mc_samples"]),
            seed=int(fields["seed"]),
            init_sigma=float(fields["init_sigma"]),
        )
        self.final_elbo = float(fields["final_elbo"])
        self.n_rows = int(fields["n_rows"])


def posterior_from_text(text: str) -> PosteriorArtifact:
    provenance, lines = _split_header(text)
    fields = {}
    for line in lines:
        if not line.strip():
            continue
        if " = " not in line:
            raise ValueError(f"malformed posterior line: {line!r}")
        key, value = line.split(" = ", 1)
        fields[key.strip()] = value.strip()
    if fields.get("format") != POSTERIOR_FORMAT:
        raise ValueError(f"not a posterior artifact (format={fields.get('format')!r})")
    if len(fields["feature_names"].split(",")) != len(fields["mu"].split()):
        raise ValueError("posterior artifact: feature_names and mu lengths differ")
    return PosteriorArtifact(fields, provenance)


def trace_to_csv(fits: dict[int, FitResult], provenance: dict | None = None) -> str:
    """Per-step ELBO of each arm fit: quadrature value and the MC estimate used for the step."""
    buf = io.StringIO()
    buf.writelines(_header_lines(provenance))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["arm", "step", "elbo", "elbo_mc"])
    for arm, fit in fits.items():
        for step, (value, mc) in enumerate(zip(fit.trace, fit.mc_trace)):
            writer.writerow([arm, step, _fmt(value), _fmt(mc)])
    return buf.getvalue()


def trace_from_csv(text: str) -> dict[int, np.ndarray]:
    _, lines = _split_header(text)
    out: dict[int, list[float]] = {}
    for row in csv.DictReader(lines):
        out.setdefault(int(row["arm"]), []).append(float(row["elbo"]))
    return {arm: np.array(v) for arm, v in out.items()}


def _num(x) -> str:
    return "undefined" if x is None or (isinstance(x, float) and np.isnan(x)) else f"{x:.6f}"


def report_to_text(report, provenance: dict | None = None) -> str:
    """Human-readable report, one table per block."""
    out = _header_lines(provenance)
    out.append(f"draws_used: {report.draws_used}\n")
    out.append(f"interval: {report.interval}\n\n")

    out.append("[delta]\n")
    out.append(f"{'stratum':<16}{'mean':>12}{'lower':>12}{'upper':>12}{'defined':>10}  flag\n")
    for h in STRATA:
        s = report.strata[h]
        flag = "unreliable" if s.unreliable else ""
        out.append(f"{h.label:<16}{_num(s.delta_mean):>12}{_num(s.delta_lower):>12}"
                   f"{_num(s.delta_upper):>12}{s.defined_fraction:>10.2f}  {flag}\n".rstrip() + "\n")

    out.append("\n[decision_prob]  p(D=1 | H=h, A=a)\n")
    out.append(f"{'stratum':<16}{'A=0':>12}{'A=1':>12}\n")
    for h in STRATA:
        out.append(f"{h.label:<16}{_num(report.decision_prob[h, 0]):>12}{_num(report.decision_prob[h, 1]):>12}\n")

    out.append("\n[strata_proportion]  share of group a in stratum h\n")
    out.append(f"{'stratum':<16}{'A=0':>12}{'A=1':>12}\n")
    for h in STRATA:
        out.append(f"{h.label:<16}{_num(report.strata_proportion[h, 0]):>12}"
                   f"{_num(report.strata_proportion[h, 1]):>12}\n")

    assoc = report.associational
    sp = assoc.statistical_parity
    out.append("\n[statistical_parity]  p(D=1 | A=a)\n")
    out.append(f"A=0 {_num(sp.rates[0])}\nA=1 {_num(sp.rates[1])}\ngap {_num(sp.gap)}\n")
    out.append("\n[calibration]  p(Y=1 | D=d, A=a)\n")
    out.append(f"{'':<8}{'A=0':>12}{'A=1':>12}\n")
    for d in (0, 1):
        out.append(f"{'D=' + str(d):<8}{_num(assoc.calibration[d, 0]):>12}{_num(assoc.calibration[d, 1]):>12}\n")
    out.append("\n[accuracy]  p(D=1 | Y=y, A=a)\n")
    out.append(f"{'':<8}{'A=0':>12}{'A=1':>12}\n")
    for y in (0, 1):
        out.append(f"{'Y=' + str(y):<8}{_num(assoc.accuracy[y, 0]):>12}{_num(assoc.accuracy[y, 1]):>12}\n")
    return "".join(out)


def report_rows(report) -> list[tuple[str, str, str, str, float]]:
    """Flat (block, stratum_or_cell, group, stat, value) rows, NaN for undefined."""
    rows = []
    for h in STRATA:
        s = report.strata[h]
        for stat in ("delta_mean", "delta_lower", "delta_upper", "defined_fraction"):
            rows.append(("delta", h.label, "", stat, getattr(s, stat)))
        for a in (0, 1):
            rows.append(("decision_prob", h.label, str(a), "mean", report.decision_prob[h, a]))
            rows.append(("strata_proportion", h.label, str(a), "mean", report.strata_proportion[h, a]))
    assoc = report.associational
    for a in (0, 1):
        rows.append(("statistical_parity", "", str(a), "rate", assoc.statistical_parity.rates[a]))
    rows.append(("statistical_parity", "", "", "gap", assoc.statistical_parity.gap))
    for d in (0, 1):
        for a in (0, 1):
            rows.append(("calibration", f"D={d}", str(a), "rate", assoc.calibration[d, a]))
    for y in (0, 1):
        for a in (0, 1):
            rows.append(("accuracy", f"Y={y}", str(a), "rate", assoc.accuracy[y, a]))
    return rows


def report_to_csv(report, provenance: dict | None = None) -> str:
    buf = io.StringIO()
    buf.writelines(_header_lines(provenance))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["block", "key", "group", "stat", "value"])
    for block, key, group, stat, value in report_rows(report):
        writer.writerow([block, key, group, stat, "" if np.isnan(value) else _fmt(value)])
    return buf.getvalue()
