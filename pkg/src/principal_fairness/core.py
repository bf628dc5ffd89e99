"""Domain types, dataset validation and the stratum-assignment rule."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

DECISION = "D"
ATTRIBUTE = "A"
OUTCOME = "Y"
RESERVED_COLUMNS = (DECISION, ATTRIBUTE, OUTCOME)
INTERCEPT = "intercept"

OBSERVED = 0
IMPUTED = 1


class ValidationError(ValueError):
    """Raised when tabular input violates the dataset contract."""


class Stratum(enum.IntEnum):
    """Principal stratum of a unit, coded by the joint value (Y(0), Y(1))."""

    STABLE = 0
    TREATABLE = 1
    BETTER_WITHOUT = 2
    SEVERE = 3

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    Stratum.STABLE: "stable",
    Stratum.TREATABLE: "treatable",
    Stratum.BETTER_WITHOUT: "better-without",
    Stratum.SEVERE: "severe",
}

STRATA = tuple(Stratum)

# code = y0 + 2 * y1 reproduces the ordering (0,0), (1,0), (0,1), (1,1)
_OUTCOME_PAIRS = {s: (s.value & 1, s.value >> 1) for s in Stratum}


def stratum_from_outcomes(y0: int, y1: int) -> Stratum:
    if y0 not in (0, 1) or y1 not in (0, 1):
        raise ValueError(f"potential outcomes must be 0/1, got ({y0!r}, {y1!r})")
    return Stratum(int(y0) + 2 * int(y1))


def outcomes_from_stratum(h: Stratum) -> tuple[int, int]:
    return _OUTCOME_PAIRS[Stratum(h)]


def strata_codes(y0: np.ndarray, y1: np.ndarray) -> np.ndarray:
    """Vectorised :func:`stratum_from_outcomes`; returns int8 codes 0..3."""
    y0 = np.asarray(y0)
    y1 = np.asarray(y1)
    return (y0 + 2 * y1).astype(np.int8)


@dataclass(frozen=True)
class Dataset:
    """Validated observational table of (D, A, X, Y) rows.

    Row order is the identity key. Arrays are made read-only on construction.
    """

    decision: np.ndarray
    attribute: np.ndarray
    covariates: np.ndarray
    outcome: np.ndarray
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for arr in (self.decision, self.attribute, self.covariates, self.outcome):
            arr.setflags(write=False)
        if not self.feature_names:
            names = tuple(f"x{j}" for j in range(self.covariates.shape[1]))
            object.__setattr__(self, "feature_names", names)

    @property
    def n_rows(self) -> int:
        return self.decision.shape[0]

    @property
    def n_features(self) -> int:
        return self.covariates.shape[1]

    def model_features(self, use_attribute: bool = False) -> np.ndarray:
        """Design matrix for the outcome models: covariates, optionally A, intercept."""
        return model_design(self.covariates, self.attribute, use_attribute)

    def model_feature_names(self, use_attribute: bool = False) -> list[str]:
        return [*self.feature_names, *([ATTRIBUTE] if use_attribute else []), INTERCEPT]

    def relabel_attribute(self) -> "Dataset":
        """Copy with A mapped to 1 - A."""
        return Dataset(
            self.decision.copy(),
            (1 - self.attribute).astype(np.int8),
            self.covariates.copy(),
            self.outcome.copy(),
            self.feature_names,
        )

    def take(self, index: Sequence[int] | np.ndarray) -> "Dataset":
        """Row subset (no arm-overlap check, used for permutations and tests)."""
        index = np.asarray(index)
        return Dataset(
            self.decision[index].copy(),
            self.attribute[index].copy(),
            self.covariates[index].copy(),
            self.outcome[index].copy(),
            self.feature_names,
        )


def model_design(covariates: np.ndarray, attribute: np.ndarray, use_attribute: bool = False) -> np.ndarray:
    n = covariates.shape[0]
    cols = [np.asarray(covariates, dtype=float)]
    if use_attribute:
        cols.append(np.asarray(attribute, dtype=float))
    cols.append(np.ones(n))
    return np.column_stack(cols)


@dataclass(frozen=True)
class PotentialOutcomes:
    """Both potential outcomes per row plus a per-arm source flag.

    ``source`` has shape (n, 2); column d holds OBSERVED or IMPUTED for Y(d).
    """

    y0: np.ndarray
    y1: np.ndarray
    source: np.ndarray

    def observed_arm_consistent(self, data: Dataset) -> bool:
        d = data.decision.astype(bool)
        observed = np.where(d, self.y1, self.y0)
        flags_ok = np.all(self.source[np.arange(len(d)), d.astype(int)] == OBSERVED)
        return bool(flags_ok and np.array_equal(observed, data.outcome))


def _binary_column(name: str, values: Sequence) -> np.ndarray:
    out = np.empty(len(values), dtype=np.int8)
    for i, v in enumerate(values):
        try:
            f = float(v)
        except (TypeError, ValueError):
            raise ValidationError(f"column {name!r} row {i}: value {v!r} is not a number") from None
        if f == 0.0:
            out[i] = 0
        elif f == 1.0:
            out[i] = 1
        else:
            raise ValidationError(f"column {name!r} row {i}: value {v!r} is not 0 or 1")
    return out


def validate_dataset(raw: Mapping[str, Sequence]) -> Dataset:
    """Build a :class:`Dataset` from a column mapping.

    ``raw`` maps column names to equal-length sequences. ``D``, ``A`` and ``Y``
    are reserved; every other column, in mapping order, is a covariate.
    """
    for col in RESERVED_COLUMNS:
        if col not in raw:
            raise ValidationError(f"missing required column {col!r}")
    cov_names = [c for c in raw if c not in RESERVED_COLUMNS]
    if not cov_names:
        raise ValidationError("no covariate columns: need at least one besides D, A, Y")

    lengths = {c: len(raw[c]) for c in raw}
    n = lengths[DECISION]
    for c, k in lengths.items():
        if k != n:
            raise ValidationError(f"column {c!r} has {k} rows, expected {n}")
    if n == 0:
        raise ValidationError("table has no rows")

    decision = _binary_column(DECISION, raw[DECISION])
    attribute = _binary_column(ATTRIBUTE, raw[ATTRIBUTE])
    outcome = _binary_column(OUTCOME, raw[OUTCOME])

    covariates = np.empty((n, len(cov_names)), dtype=float)
    for j, c in enumerate(cov_names):
        try:
            col = np.asarray(raw[c], dtype=float)
        except (TypeError, ValueError):
            for i, v in enumerate(raw[c]):
                try:
                    float(v)
                except (TypeError, ValueError):
                    raise ValidationError(f"column {c!r} row {i}: value {v!r} is not a number") from None
            raise
        bad = np.flatnonzero(~np.isfinite(col))
        if bad.size:
            raise ValidationError(f"column {c!r} row {bad[0]}: non-finite value {col[bad[0]]!r}")
        covariates[:, j] = col

    if not decision.any():
        raise ValidationError("no treated rows (D=1)")
    if decision.all():
        raise ValidationError("no control rows (D=0)")

    return Dataset(decision, attribute, covariates, outcome, tuple(cov_names))


def derive_seed(master: int, *keys: int) -> int:
    """Deterministic child seed for a named sub-stream of ``master``."""
    return int(np.random.SeedSequence(entropy=master, spawn_key=keys).generate_state(1, np.uint32)[0])


def split_by_treatment(data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays (treated, control), each in ascending row order."""
    d = np.asarray(data.decision if isinstance(data, Dataset) else data)
    return np.flatnonzero(d == 1), np.flatnonzero(d == 0)
