# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""CSV ingestion, categorical encoding, invalid-value imputation and
seeded stratified splitting for binary tabular datasets.

Schemas:
- pima: the 9-column diabetes CSV; zeros in five physiological columns are invalid
- stroke: the 12-column stroke CSV; `id` dropped, "N/A" BMI treated as missing
- generic: header taken as-is, last column is the label, text columns are categorical
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .transform import stage_rng

PIMA_COLUMNS = (
    "Pregnancies",
    "Glucose",
    "BloodPressure",
    "SkinThickness",
    "Insulin",
    "BMI",
    "DiabetesPedigreeFunction",
    "Age",
    "Outcome",
)
STROKE_COLUMNS = (
    "id",
    "gender",
    "age",
    "hypertension",
    "heart_disease",
    "ever_married",
    "work_type",
    "Residence_type",
    "avg_glucose_level",
    "bmi",
    "smoking_status",
    "stroke",
)


@dataclass(frozen=True)
class DatasetSchema:
    name: str
    columns: tuple[str, ...] | None
    label: str | None
    drop: tuple[str, ...] = ()
    categorical: tuple[str, ...] = ()
    invalid_zero: tuple[str, ...] = ()


SCHEMAS = {
    "pima": DatasetSchema(
        name="pima",
        columns=PIMA_COLUMNS,
        label="Outcome",
        invalid_zero=("Glucose", "BloodPressure", "SkinThickness", "Insulin", "BMI"),
    ),
    "stroke": DatasetSchema(
        name="stroke",
        columns=STROKE_COLUMNS,
        label="stroke",
        drop=("id",),
        categorical=("gender", "ever_married", "work_type", "Residence_type", "smoking_status"),
    ),
    "generic": DatasetSchema(name="generic", columns=None, label=None),
}


class DatasetError(Exception):
    """Ingestion or preparation failed; `column` names the culprit when there is one."""

    def __init__(self, message: str, column: str | None = None):
        self.column = column
        super().__init__(message)


@dataclass(frozen=True)
class RawTable:
    """Typed feature columns plus the identified binary label column."""

    frame: pd.DataFrame
    labels: np.ndarray
    label_column: str
    schema: DatasetSchema


@dataclass(frozen=True, eq=False)
class TabularDataset:
    """N×D real feature matrix with binary labels and column metadata.

    Before imputation, missing cells are NaN; `is_complete()` reports
    whether any remain.
    """

    features: np.ndarray
    labels: np.ndarray
    column_names: tuple[str, ...]
    categorical_flags: tuple[bool, ...]
    invalid_zero_flags: tuple[bool, ...]
    code_books: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        n, d = self.features.shape if self.features.ndim == 2 else (0, 0)
        if n == 0 or d == 0:
            raise DatasetError("dataset needs at least one row and one feature column")
        if len(self.labels) != n:
            raise DatasetError(f"{len(self.labels)} labels for {n} rows")
        if not (len(self.column_names) == len(self.categorical_flags) == len(self.invalid_zero_flags) == d):
            raise DatasetError("column metadata does not match the feature matrix width")
        self.features.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> dict[int, int]:
        return {c: int(np.sum(self.labels == c)) for c in (0, 1)}

    def is_complete(self) -> bool:
        return not np.isnan(self.features).any()

    def with_features(self, features: np.ndarray, labels: np.ndarray | None = None) -> TabularDataset:
        """Same metadata, new matrix of identical width."""
        return TabularDataset(
            features=np.asarray(features, dtype=float),
            labels=np.asarray(self.labels if labels is None else labels, dtype=int),
            column_names=self.column_names,
            categorical_flags=self.categorical_flags,
            invalid_zero_flags=self.invalid_zero_flags,
            code_books=self.code_books,
        )

    def take_rows(self, rows: Sequence[int] | np.ndarray) -> TabularDataset:
        rows = np.asarray(rows, dtype=int)
        return self.with_features(self.features[rows], self.labels[rows])

    def take_columns(self, columns: Sequence[int]) -> TabularDataset:
        columns = list(columns)
        return TabularDataset(
            features=np.asarray(self.features[:, columns], dtype=float),
            labels=np.asarray(self.labels, dtype=int),
            column_names=tuple(self.column_names[c] for c in columns),
            categorical_flags=tuple(self.categorical_flags[c] for c in columns),
            invalid_zero_flags=tuple(self.invalid_zero_flags[c] for c in columns),
            code_books={self.column_names[c]: self.code_books[self.column_names[c]] for c in columns
                        if self.column_names[c] in self.code_books},
        )


@dataclass(frozen=True)
class SplitPair:
    train: TabularDataset
    test: TabularDataset
    split_ratio: float
    seed: int
    train_rows: np.ndarray
    test_rows: np.ndarray


@dataclass(frozen=True)
class ImputerParams:
    """Per-column means of the valid entries."""

    means: np.ndarray
    invalid_zero_flags: tuple[bool, ...]


def _check_binary(labels: pd.Series, column: str) -> np.ndarray:
    if labels.isna().any():
        raise DatasetError(f"label column '{column}' has missing values", column)
    try:
        values = pd.to_numeric(labels)
    except (TypeError, ValueError):
        raise DatasetError(f"label column '{column}' is not numeric", column) from None
    bad = sorted(set(values.unique()) - {0, 1})
    if bad:
        raise DatasetError(f"label column '{column}' is not binary (found {bad})", column)
    return values.to_numpy(dtype=int)


def load_csv(path: str | Path, schema: str = "generic") -> RawTable:
    """Read a comma-separated UTF-8 file with a header row."""
    if schema not in SCHEMAS:
        raise DatasetError(f"unknown dataset schema {schema!r} (known: {', '.join(SCHEMAS)})")
    layout = SCHEMAS[schema]
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: no such file")

    try:
        frame = pd.read_csv(path, encoding="utf-8", skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DatasetError(f"{path}: {exc}") from exc

    header = tuple(str(c).strip() for c in frame.columns)
    frame.columns = header
    if layout.columns is not None and header != layout.columns:
        raise DatasetError(f"{path}: header {list(header)} does not match the '{schema}' schema {list(layout.columns)}")
    if len(header) < 2:
        raise DatasetError(f"{path}: need at least one feature column and a label column")

    label_column = layout.label or header[-1]
    labels = _check_binary(frame[label_column], label_column)
    features = frame.drop(columns=[label_column, *layout.drop])
    return RawTable(frame=features.reset_index(drop=True), labels=labels, label_column=label_column, schema=layout)


def encode_categoricals(raw: RawTable) -> TabularDataset:
    """Replace categorical columns by first-appearance ordinal codes.

    Missing categorical cells stay missing (NaN) for the imputer.
    """
    layout = raw.schema
    columns = []
    categorical = []
    code_books = {}
    for name in raw.frame.columns:
        series = raw.frame[name]
        is_categorical = name in layout.categorical or (
            layout.columns is None and not pd.api.types.is_numeric_dtype(series)
        )
        if is_categorical:
            codes, uniques = pd.factorize(series, sort=False)
            column = codes.astype(float)
            column[codes < 0] = np.nan
            code_books[name] = tuple(str(u) for u in uniques)
        else:
            try:
                column = pd.to_numeric(series).to_numpy(dtype=float)
            except (TypeError, ValueError):
                raise DatasetError(f"column '{name}' is neither numeric nor declared categorical", name) from None
        columns.append(column)
        categorical.append(is_categorical)

    names = tuple(str(c) for c in raw.frame.columns)
    labels = np.asarray(raw.labels, dtype=int)
    if len(set(labels.tolist())) < 2:
        raise DatasetError(f"label column '{raw.label_column}' contains a single class", raw.label_column)
    return TabularDataset(
        features=np.column_stack(columns).astype(float),
        labels=labels,
        column_names=names,
        categorical_flags=tuple(categorical),
        invalid_zero_flags=tuple(n in layout.invalid_zero for n in names),
        code_books=code_books,
    )


def load_dataset(path: str | Path, schema: str = "generic") -> TabularDataset:
    """load_csv + encode_categoricals (imputation is left to the pipeline)."""
    return encode_categoricals(load_csv(path, schema))


def decode_column(ds: TabularDataset, column: str) -> list[str | None]:
    """Original category strings of an encoded column."""
    if column not in ds.code_books:
        raise DatasetError(f"column '{column}' is not categorical", column)
    book = ds.code_books[column]
    values = ds.features[:, ds.column_names.index(column)]
    return [None if np.isnan(v) else book[int(v)] for v in values]


def _invalid_mask(ds: TabularDataset, flags: Sequence[bool]) -> np.ndarray:
    mask = np.isnan(ds.features)
    zero_flagged = np.asarray(flags, dtype=bool)
    mask |= (ds.features == 0) & zero_flagged[np.newaxis, :]
    return mask


def fit_imputer(ds: TabularDataset, policy: Sequence[bool] | None = None) -> ImputerParams:
    """Mean of each column's valid (non-missing, non-invalid-zero) entries."""
    flags = tuple(ds.invalid_zero_flags if policy is None else (bool(f) for f in policy))
    if len(flags) != ds.n_features:
        raise DatasetError(f"imputation policy has {len(flags)} flags for {ds.n_features} columns")
    invalid = _invalid_mask(ds, flags)
    means = np.zeros(ds.n_features)
    for j, name in enumerate(ds.column_names):
        valid = ds.features[~invalid[:, j], j]
        if valid.size == 0:
            if invalid[:, j].any():
                raise DatasetError(f"column '{name}' has no valid entries to impute from", name)
            continue
        means[j] = float(np.mean(valid))
    return ImputerParams(means=means, invalid_zero_flags=flags)


def apply_imputer(params: ImputerParams, ds: TabularDataset) -> TabularDataset:
    if len(params.means) != ds.n_features:
        raise DatasetError(f"imputer fit on {len(params.means)} columns, applied to {ds.n_features}")
    invalid = _invalid_mask(ds, params.invalid_zero_flags)
    features = np.where(invalid, params.means[np.newaxis, :], ds.features)
    return ds.with_features(features)


def impute_invalid(ds: TabularDataset, policy: Sequence[bool] | None = None) -> TabularDataset:
    """Replace missing cells, and zeros in invalid-zero columns, by the column mean."""
    return apply_imputer(fit_imputer(ds, policy), ds)


def _test_counts(class_sizes: dict[int, int], ratio: float) -> dict[int, int]:
    """Largest-remainder allocation of round(N·ratio) test rows over classes."""
    total = sum(class_sizes.values())
    target = int(math.floor(total * ratio + 0.5))
    exact = {c: n * ratio for c, n in class_sizes.items()}
    counts = {c: int(math.floor(v)) for c, v in exact.items()}
    remainder = target - sum(counts.values())
    order = sorted(class_sizes, key=lambda c: (-(exact[c] - counts[c]), c))
    for c in order[: max(remainder, 0)]:
        counts[c] += 1
    return {c: min(max(counts[c], 1), class_sizes[c] - 1) for c in class_sizes}


def split_train_test(ds: TabularDataset, ratio: float, seed: int) -> SplitPair:
    """Seeded stratified split; row order inside each side is ascending."""
    if not 0.0 < ratio < 1.0:
        raise DatasetError(f"split ratio {ratio} is outside (0, 1)")
    sizes = ds.class_counts()
    for c, n in sizes.items():
        if n < 2:
            raise DatasetError(f"class {c} has {n} member(s); stratified splitting needs at least 2")

    rng = stage_rng(seed, "split")
    counts = _test_counts(sizes, ratio)
    test_rows = []
    for c in (0, 1):
        members = np.flatnonzero(ds.labels == c)
        test_rows.append(rng.permutation(members)[: counts[c]])
    test = np.sort(np.concatenate(test_rows))
    train = np.setdiff1d(np.arange(ds.n_rows), test, assume_unique=True)
    return SplitPair(
        train=ds.take_rows(train),
        test=ds.take_rows(test),
        split_ratio=float(ratio),
        seed=int(seed),
        train_rows=train,
        test_rows=test,
    )
