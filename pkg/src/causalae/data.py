"""Datasets: synthetic generation, CSV ingestion, splits, standardization.

The synthetic generator draws each sample's population, places its
features in a population-specific spherical Gaussian cluster, and
assigns treatment by an independent coin so that treatment carries no
information about the features (randomized assignment). Ground-truth
potential outcomes follow from the population, making population
recovery and PEHE measurable.

CSV ingestion covers any tabular dataset with binary treatment/outcome
columns; the column roles come from a small JSON schema file rather
than being inferred.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigurationError, EvaluationError, OverlapWarning
from .populations import POPULATION_ORDER, CausalPopulation

_POP_CODE_BY_OUTCOMES = {
    (p.y0, p.y1): p.index for p in POPULATION_ORDER
}


def _as_binary(values: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if not np.all((arr == 0) | (arr == 1)):
        raise ConfigurationError(f"{name} must contain only 0/1 values")
    return arr.astype(np.int64)


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with treatment, observed outcome, and optional truth.

    When potential outcomes (y0, y1) are present the observed outcome
    must equal the potential outcome under the assigned treatment, and
    ground-truth populations / individual effects become available as
    derived properties.
    """

    features: np.ndarray
    treatment: np.ndarray
    y_obs: np.ndarray
    y0: np.ndarray | None = None
    y1: np.ndarray | None = None

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise ConfigurationError("features must be a 2-D matrix")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "treatment", _as_binary(self.treatment, "treatment"))
        object.__setattr__(self, "y_obs", _as_binary(self.y_obs, "y_obs"))
        n = features.shape[0]
        if len(self.treatment) != n or len(self.y_obs) != n:
            raise ConfigurationError("features, treatment and y_obs lengths differ")
        if (self.y0 is None) != (self.y1 is None):
            raise ConfigurationError("y0 and y1 must be provided together")
        if self.y0 is not None:
            y0 = _as_binary(self.y0, "y0")
            y1 = _as_binary(self.y1, "y1")
            if len(y0) != n or len(y1) != n:
                raise ConfigurationError("potential outcome lengths differ from n")
            expected = np.where(self.treatment == 1, y1, y0)
            if not np.array_equal(expected, self.y_obs):
                bad = int(np.flatnonzero(expected != self.y_obs)[0])
                raise ConfigurationError(
                    f"y_obs does not equal the potential outcome under the "
                    f"assigned treatment at row {bad}"
                )
            object.__setattr__(self, "y0", y0)
            object.__setattr__(self, "y1", y1)
        if n > 0:
            n_treated = int(np.sum(self.treatment == 1))
            if n_treated == 0 or n_treated == n:
                warnings.warn(
                    "dataset has an empty treatment or control group",
                    OverlapWarning,
                    stacklevel=2,
                )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def has_ground_truth(self) -> bool:
        return self.y0 is not None

    @property
    def population_codes(self) -> np.ndarray | None:
        """Ground-truth population per row (R=0, D=1, S=2, A=3), if known."""
        if self.y0 is None:
            return None
        lut = np.empty(4, dtype=np.int64)
        for (y0, y1), code in _POP_CODE_BY_OUTCOMES.items():
            lut[2 * y0 + y1] = code
        return lut[2 * self.y0 + self.y1]

    @property
    def populations(self) -> list[CausalPopulation] | None:
        codes = self.population_codes
        if codes is None:
            return None
        return [POPULATION_ORDER[c] for c in codes]

    @property
    def true_ite(self) -> np.ndarray | None:
        if self.y0 is None:
            return None
        return (self.y1 - self.y0).astype(np.float64)

    def subset(self, indices: np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            features=self.features[idx],
            treatment=self.treatment[idx],
            y_obs=self.y_obs[idx],
            y0=None if self.y0 is None else self.y0[idx],
            y1=None if self.y1 is None else self.y1[idx],
        )


@dataclass(frozen=True)
class GeneratorConfig:
    """Settings for the synthetic cluster generator.

    ``clusters_per_population`` above 1 places each population in
    several well-separated clusters arranged so that no linear function
    of the features separates the populations (opposite clusters of one
    population sit at mirrored positions).
    """

    n: int
    d: int
    population_weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    cluster_separation: float = 3.0
    treatment_rate: float = 0.5
    seed: int = 0
    clusters_per_population: int = 1

    def __post_init__(self) -> None:
        if self.n < 1 or self.d < 1:
            raise ConfigurationError("n and d must be positive")
        weights = tuple(float(w) for w in self.population_weights)
        object.__setattr__(self, "population_weights", weights)
        if len(weights) != 4 or any(w < 0 for w in weights):
            raise ConfigurationError("population_weights must be 4 nonnegative reals")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ConfigurationError("population_weights must sum to 1")
        if not (0.0 < self.treatment_rate < 1.0):
            raise ConfigurationError("treatment_rate must lie strictly inside (0, 1)")
        if self.cluster_separation < 0:
            raise ConfigurationError("cluster_separation must be nonnegative")
        if self.clusters_per_population < 1:
            raise ConfigurationError("clusters_per_population must be >= 1")
        axes_needed = 4 * math.ceil(self.clusters_per_population / 2)
        if self.d < axes_needed:
            raise ConfigurationError(
                f"d={self.d} is too small for {self.clusters_per_population} "
                f"clusters per population (needs at least {axes_needed})"
            )


def _cluster_means(config: GeneratorConfig) -> np.ndarray:
    """Means indexed by (population, cluster), pairwise separated by at
    least cluster_separation * sqrt(d).

    Cluster 2k of population p sits at +a e_{p+4k}, cluster 2k+1 at its
    mirror image, so every linear projection averages to zero within a
    population once it has two or more clusters.
    """
    c = config.clusters_per_population
    scale = config.cluster_separation * math.sqrt(config.d) / math.sqrt(2.0)
    means = np.zeros((4, c, config.d))
    for p in range(4):
        for j in range(c):
            axis = p + 4 * (j // 2)
            sign = 1.0 if j % 2 == 0 else -1.0
            means[p, j, axis] = sign * scale
    return means


def generate_synthetic(config: GeneratorConfig) -> Dataset:
    """Draw a dataset with known populations and potential outcomes."""
    if max(config.population_weights) >= 1.0:
        warnings.warn(
            "a population has weight 1; per-group outcome models will be degenerate",
            UserWarning,
            stacklevel=2,
        )
    rng = np.random.default_rng(config.seed)
    pops = rng.choice(4, size=config.n, p=np.asarray(config.population_weights))
    clusters = rng.integers(0, config.clusters_per_population, size=config.n)
    means = _cluster_means(config)
    features = means[pops, clusters] + rng.standard_normal((config.n, config.d))
    treatment = (rng.random(config.n) < config.treatment_rate).astype(np.int64)
    y0 = np.array([POPULATION_ORDER[p].y0 for p in range(4)])[pops]
    y1 = np.array([POPULATION_ORDER[p].y1 for p in range(4)])[pops]
    y_obs = np.where(treatment == 1, y1, y0)
    return Dataset(features=features, treatment=treatment, y_obs=y_obs, y0=y0, y1=y1)


def split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded shuffle-and-partition into (train, test).

    Emits an :class:`OverlapWarning` if either part loses a treatment
    group entirely.
    """
    if not (0.0 < test_fraction < 1.0):
        raise ConfigurationError("test_fraction must lie strictly inside (0, 1)")
    n = dataset.n
    n_test = int(round(n * test_fraction))
    n_test = min(max(n_test, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = perm[:n_test]
    train_idx = perm[n_test:]
    return dataset.subset(train_idx), dataset.subset(test_idx)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine map fitted on training data.

    ``scale`` is the reciprocal standard deviation, zeroed for constant
    features so they map to exactly 0.
    """

    mean: np.ndarray
    scale: np.ndarray

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) * self.scale

    def transform_dataset(self, dataset: Dataset) -> Dataset:
        return replace(dataset, features=self.transform(dataset.features))


def standardize(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset, Standardizer]:
    """Scale features to zero mean / unit variance using train statistics."""
    if train.n == 0:
        raise ConfigurationError("cannot standardize with an empty training set")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    scale = np.zeros_like(std)
    nonzero = std > 0
    scale[nonzero] = 1.0 / std[nonzero]
    scaler = Standardizer(mean=mean, scale=scale)
    return scaler.transform_dataset(train), scaler.transform_dataset(test), scaler


def default_schema(feature_dim: int, with_ground_truth: bool) -> dict:
    """Column roles for toolkit-written CSVs."""
    schema = {
        "features": [f"x{i}" for i in range(feature_dim)],
        "treatment": "t",
        "outcome": "y_obs",
    }
    if with_ground_truth:
        schema["y0"] = "y0"
        schema["y1"] = "y1"
    return schema


def save_schema(schema: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(schema, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_schema(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"schema file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"schema file {path} is not valid JSON: {exc}") from exc


def save_csv(dataset: Dataset, path) -> None:
    """Write the dataset with a header row; floats keep full precision."""
    schema = default_schema(dataset.feature_dim, dataset.has_ground_truth)
    header = list(schema["features"]) + [schema["treatment"], schema["outcome"]]
    if dataset.has_ground_truth:
        header += [schema["y0"], schema["y1"]]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.features[i]]
            row += [str(int(dataset.treatment[i])), str(int(dataset.y_obs[i]))]
            if dataset.has_ground_truth:
                row += [str(int(dataset.y0[i])), str(int(dataset.y1[i]))]
            writer.writerow(row)


def _parse_binary(raw: str, column: str, line: int) -> int:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigurationError(
            f"line {line}: column {column!r} has non-numeric value {raw!r}"
        ) from None
    if value not in (0.0, 1.0):
        raise ConfigurationError(
            f"line {line}: column {column!r} must be 0 or 1, got {raw!r}"
        )
    return int(value)


def load_csv(path, schema: dict) -> Dataset:
    """Parse a CSV into a Dataset according to the schema's column roles.

    ``schema`` maps roles to column names: ``features`` (list),
    ``treatment``, ``outcome``, optional ``y0``/``y1``, and an optional
    ``categorical`` mapping of feature column -> ordered category list,
    which one-hot encodes that column.
    """
    for key in ("features", "treatment", "outcome"):
        if key not in schema:
            raise ConfigurationError(f"schema is missing the {key!r} role")
    categorical = schema.get("categorical", {})
    feature_cols = list(schema["features"])
    with_truth = "y0" in schema or "y1" in schema
    if with_truth and not ("y0" in schema and "y1" in schema):
        raise ConfigurationError("schema must name both y0 and y1 or neither")

    try:
        fh = open(path, newline="")
    except FileNotFoundError:
        raise ConfigurationError(f"dataset file not found: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"{path} is empty") from None
        col_index = {name: i for i, name in enumerate(header)}
        needed = feature_cols + [schema["treatment"], schema["outcome"]]
        if with_truth:
            needed += [schema["y0"], schema["y1"]]
        for name in needed:
            if name not in col_index:
                raise ConfigurationError(f"missing column {name!r} in {path}")

        rows: list[list[float]] = []
        treatment: list[int] = []
        y_obs: list[int] = []
        y0: list[int] = []
        y1: list[int] = []
        for line, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise ConfigurationError(
                    f"line {line}: expected {len(header)} fields, got {len(record)}"
                )
            feats: list[float] = []
            for col in feature_cols:
                raw = record[col_index[col]]
                if col in categorical:
                    categories = categorical[col]
                    if raw not in categories:
                        raise ConfigurationError(
                            f"line {line}: column {col!r} has unknown category {raw!r}"
                        )
                    feats.extend(1.0 if raw == c else 0.0 for c in categories)
                else:
                    try:
                        feats.append(float(raw))
                    except ValueError:
                        raise ConfigurationError(
                            f"line {line}: column {col!r} has non-numeric value {raw!r}"
                        ) from None
            rows.append(feats)
            treatment.append(_parse_binary(record[col_index[schema["treatment"]]],
                                           schema["treatment"], line))
            y_obs.append(_parse_binary(record[col_index[schema["outcome"]]],
                                       schema["outcome"], line))
            if with_truth:
                y0.append(_parse_binary(record[col_index[schema["y0"]]], schema["y0"], line))
                y1.append(_parse_binary(record[col_index[schema["y1"]]], schema["y1"], line))

    if not rows:
        raise ConfigurationError(f"{path} contains no data rows")
    return Dataset(
        features=np.array(rows, dtype=np.float64),
        treatment=np.array(treatment),
        y_obs=np.array(y_obs),
        y0=np.array(y0) if with_truth else None,
        y1=np.array(y1) if with_truth else None,
    )


def require_overlap(dataset: Dataset) -> None:
    """Raise when a treatment group is empty (needed by per-group models)."""
    n_treated = int(np.sum(dataset.treatment == 1))
    if n_treated == 0 or n_treated == dataset.n:
        raise EvaluationError("a treatment group is empty; overlap is violated")
