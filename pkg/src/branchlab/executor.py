# -*- coding: utf-8 -*-
# Copyright 2026 Soltein SA. de CV.
# License LGPL-3 or later (http://www.gnu.org/licenses/lgpl.html)

"""Branch execution: pipeline assembly, per-collection caching and the
LogDir tree.

Layout of one run:

    <log_root>/<run_id>/run.json                      run summary
    <log_root>/<run_id>/merged.csv                    one row per successful branch
    <log_root>/<run_id>/<logdir>/branch-<hash>.json   one record per branch
    <log_root>/<run_id>/intermediate/<hash>.npz       processed splits (optional)

Branches sharing a data_collection_key are dispatched as one job: the
processed split is computed once and each model is trained once, then
scored at every probability threshold.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import tempfile
import threading
import time
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import joblib
import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .config_loader import debug_enabled
from .dataset import DatasetError, TabularDataset, apply_imputer, fit_imputer, split_train_test
from .metrics import METRIC_COLUMNS, MetricReport, MetricsError, evaluate
from .models import ModelError, ModelSpec, classify, model_spec, predict_proba, save_model, train
from .search_space import (
    DIMENSIONS,
    MODEL_LOGDIR_NAMES,
    BranchAddress,
    PipelineConfig,
    SearchSpaceSpec,
    branch_address,
    data_collection_key,
    enumerate_branches,
    group_by_collection,
)
from .transform import (
    FeatureRanking,
    ScalerParams,
    TransformError,
    TransformSettings,
    apply_scaler,
    augment,
    fit_scaler,
    rebalance,
    select_features,
)

RUN_FILE = "run.json"
MERGED_FILE = "merged.csv"
INTERMEDIATE_DIR = "intermediate"
RECORD_PREFIX = "branch-"

CONFIG_COLUMNS = (
    "Features",
    "FSMethod",
    "Scaler",
    "NormFirst",
    "AugMethod",
    "ImblMethod",
    "Model",
    "SplitRatio",
    "ProbThreshold",
    "Seed",
)
MERGED_COLUMNS = ("RunID", "BranchID", "LogDir") + CONFIG_COLUMNS + METRIC_COLUMNS

BRANCH_ERRORS = (DatasetError, TransformError, ModelError, MetricsError, FloatingPointError, np.linalg.LinAlgError)


class RunIdConflictError(Exception):
    def __init__(self, run_id: str):
        self.run_id = run_id
        super().__init__(f"run '{run_id}' already exists (use --overwrite to replace it or --resume to continue it)")


class LogRootError(Exception):
    def __init__(self, path: Path, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class RecordError(Exception):
    """A record file is missing, malformed or belongs to another branch."""

    def __init__(self, path: Path, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def short_hash(text: str, length: int = 12) -> str:
    return hashlib.sha1(text.encode("utf-8")).hexdigest()[:length]


# =============================================================================
# PIPELINE ASSEMBLY
# =============================================================================


@dataclass(frozen=True)
class Stage:
    kind: str
    method: str | None = None

    @property
    def name(self) -> str:
        return self.kind if self.method is None else f"{self.kind}:{self.method}"


@dataclass(frozen=True)
class PipelinePlan:
    train: tuple[Stage, ...]
    test: tuple[Stage, ...]

    def train_names(self) -> list[str]:
        return [s.name for s in self.train]

    def test_names(self) -> list[str]:
        return [s.name for s in self.test]


def assemble_pipeline(config: PipelineConfig) -> PipelinePlan:
    """Training order [impute, select, scale?, augment, imbalance, scale?];
    the test side only imputes, selects and scales with training statistics."""
    scale = Stage("scale", config.scaler)
    middle = [Stage("augment", config.augmentation), Stage("imbalance", config.imbalance)]
    train_stages = [Stage("impute"), Stage("select", config.fs_method)]
    train_stages += [scale, *middle] if config.norm_first else [*middle, scale]
    return PipelinePlan(
        train=tuple(train_stages),
        test=(Stage("impute"), Stage("select", config.fs_method), scale),
    )


@dataclass(frozen=True)
class StageTrace:
    side: str
    stage: str
    input_shape: tuple[int, int]
    output_shape: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "stage": self.stage,
            "input_shape": list(self.input_shape),
            "output_shape": list(self.output_shape),
        }


@dataclass(frozen=True, eq=False)
class ProcessedSplit:
    """Model-ready matrices of one data collection."""

    train_features: np.ndarray
    train_labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray
    selected_features: tuple[str, ...]
    trace: tuple[StageTrace, ...]
    provenance: Mapping[str, dict]


def _shape(x: np.ndarray) -> tuple[int, int]:
    return (int(x.shape[0]), int(x.shape[1]))


def process_collection(
    config: PipelineConfig,
    dataset: TabularDataset,
    settings: TransformSettings | None = None,
) -> ProcessedSplit:
    """Split, then run the assembled data stages (everything before the model)."""
    settings = settings or TransformSettings()
    plan = assemble_pipeline(config)
    split = split_train_test(dataset, config.split_ratio, config.seed)
    trace: list[StageTrace] = []
    provenance: dict[str, dict] = {}

    train, test = split.train, split.test
    imputer = fit_imputer(train)
    ranking: FeatureRanking | None = None
    scaler: ScalerParams | None = None
    x, y = train.features, train.labels

    for stage in plan.train:
        before = _shape(x)
        if stage.kind == "impute":
            x = apply_imputer(imputer, train).features
            train = train.with_features(x)
        elif stage.kind == "select":
            ranking = select_features(train, config.fs_method, config.k, settings.ig_bins)
            x = ranking.apply(x)
        elif stage.kind == "scale":
            scaler = fit_scaler(x, config.scaler)
            x = apply_scaler(scaler, x)
        elif stage.kind == "augment":
            result = augment(config.augmentation, x, y, config.seed, settings)
            x, y = result.features, result.labels
            provenance["augment"] = result.provenance
        elif stage.kind == "imbalance":
            result = rebalance(config.imbalance, x, y, config.seed, settings)
            x, y = result.features, result.labels
            provenance["imbalance"] = result.provenance
        trace.append(StageTrace("train", stage.name, before, _shape(x)))

    tx = test.features
    for stage in plan.test:
        before = _shape(tx)
        if stage.kind == "impute":
            tx = apply_imputer(imputer, test).features
        elif stage.kind == "select":
            tx = ranking.apply(tx)
        elif stage.kind == "scale":
            tx = apply_scaler(scaler, tx)
        trace.append(StageTrace("test", stage.name, before, _shape(tx)))

    return ProcessedSplit(
        train_features=x,
        train_labels=y,
        test_features=tx,
        test_labels=np.asarray(test.labels),
        selected_features=tuple(dataset.column_names[j] for j in ranking.selected),
        trace=tuple(trace),
        provenance=provenance,
    )


class DataCache:
    """Processed splits keyed by data_collection_key.

    Entries are immutable once stored; concurrent first writers of one key
    both compute and the first stored value wins. With `spill_dir` entries
    are also persisted with joblib and reused across processes.
    """

    def __init__(self, spill_dir: str | Path | None = None):
        self.spill_dir = Path(spill_dir) if spill_dir else None
        self._entries: dict[str, ProcessedSplit] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __getstate__(self):
        return {"spill_dir": self.spill_dir}

    def __setstate__(self, state):
        self.__init__(state["spill_dir"])

    def _spill_path(self, key: str) -> Path:
        return self.spill_dir / f"{short_hash(key, 20)}.joblib"

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def get_or_compute(self, key: str, compute: Callable[[], ProcessedSplit]) -> ProcessedSplit:
        with self._lock:
            if key in self._entries:
                self.hits += 1
                return self._entries[key]
        value = None
        if self.spill_dir is not None and self._spill_path(key).exists():
            value = joblib.load(self._spill_path(key))
        if value is None:
            value = compute()
            if self.spill_dir is not None:
                self.spill_dir.mkdir(parents=True, exist_ok=True)
                _atomic_write(self._spill_path(key), lambda f: joblib.dump(value, f), binary=True)
        with self._lock:
            self.misses += 1
            return self._entries.setdefault(key, value)


# =============================================================================
# RECORDS
# =============================================================================


@dataclass
class BranchRecord:
    address: BranchAddress
    config: PipelineConfig
    status: str = "ok"
    error: str | None = None
    metrics: MetricReport | None = None
    trace: tuple[StageTrace, ...] = ()
    selected_features: tuple[str, ...] = ()
    predictions: tuple[int, ...] = ()
    probabilities: tuple[float, ...] = ()
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def branch_id(self) -> str:
        return self.address.branch_id

    def to_dict(self) -> dict:
        metrics = None
        if self.metrics is not None:
            metrics = {
                **self.metrics.as_row(),
                "class_precision": list(self.metrics.class_precision),
                "class_recall": list(self.metrics.class_recall),
            }
        return {
            "run_id": self.address.run_id,
            "branch_id": self.address.branch_id,
            "logdir": self.address.logdir,
            "config": self.config.to_dict(),
            "status": self.status,
            "error": self.error,
            "metrics": metrics,
            "trace": [t.to_dict() for t in self.trace],
            "selected_features": list(self.selected_features),
            "predictions": list(self.predictions),
            "probabilities": list(self.probabilities),
            "wall_time": self.wall_time,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: Mapping) -> BranchRecord:
        metrics = None
        if data.get("metrics"):
            m = data["metrics"]
            metrics = MetricReport(
                accuracy=m["Accuracy"],
                macro_precision=m["Macro_Precision"],
                macro_recall=m["Macro_Recall"],
                macro_f1=m["Macro_F1"],
                weighted_precision=m["Weighted_Precision"],
                weighted_recall=m["Weighted_Recall"],
                weighted_f1=m["Weighted_F1"],
                micro_precision=m["Micro_Precision"],
                micro_recall=m["Micro_Recall"],
                micro_f1=m["Micro_F1"],
                integrated_score=m["Integrated_Score"],
                class_precision=tuple(m["class_precision"]),
                class_recall=tuple(m["class_recall"]),
                class_f1=(m["F1_class0"], m["F1_class1"]),
            )
        return cls(
            address=BranchAddress(data["run_id"], data["logdir"], data["branch_id"]),
            config=PipelineConfig.from_dict(data["config"]),
            status=data["status"],
            error=data.get("error"),
            metrics=metrics,
            trace=tuple(
                StageTrace(t["side"], t["stage"], tuple(t["input_shape"]), tuple(t["output_shape"]))
                for t in data.get("trace", [])
            ),
            selected_features=tuple(data.get("selected_features", [])),
            predictions=tuple(data.get("predictions", [])),
            probabilities=tuple(data.get("probabilities", [])),
            wall_time=float(data.get("wall_time", 0.0)),
        )

    def merged_row(self) -> dict:
        c = self.config
        row = {
            "RunID": self.address.run_id,
            "BranchID": self.address.branch_id,
            "LogDir": self.address.logdir,
            "Features": c.k,
            "FSMethod": c.fs_method,
            "Scaler": c.scaler,
            "NormFirst": c.norm_first,
            "AugMethod": c.augmentation,
            "ImblMethod": c.imbalance,
            "Model": c.model,
            "SplitRatio": c.split_ratio,
            "ProbThreshold": c.prob_threshold,
            "Seed": c.seed,
        }
        row.update(self.metrics.as_row())
        return row


def record_filename(branch_id: str) -> str:
    return f"{RECORD_PREFIX}{short_hash(branch_id)}.json"


def record_path(run_dir: Path, address: BranchAddress) -> Path:
    return run_dir / address.logdir / record_filename(address.branch_id)


def _atomic_write(path: Path, write: Callable, binary: bool = False) -> None:
    """Write through a temp file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=path.parent)
    try:
        with os.fdopen(fd, "wb" if binary else "w", **({} if binary else {"encoding": "utf-8"})) as f:
            write(f)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_record(run_dir: Path, record: BranchRecord) -> Path:
    path = record_path(run_dir, record.address)
    _atomic_write(path, lambda f: f.write(record.to_json()))
    return path


def read_record(path: Path) -> BranchRecord:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return BranchRecord.from_dict(data)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise RecordError(Path(path), f"malformed branch record ({exc})") from exc


# =============================================================================
# BRANCH EXECUTION
# =============================================================================


def _specs_for(model_specs: Mapping[str, ModelSpec] | None, model: str) -> ModelSpec:
    if model_specs and model in model_specs:
        return model_specs[model]
    return model_spec(model)


def _failed(address, config, exc, started) -> BranchRecord:
    return BranchRecord(
        address=address,
        config=config,
        status="failed",
        error=f"{type(exc).__name__}: {exc}",
        wall_time=time.perf_counter() - started,
    )


def _scored(address, config, processed, probabilities, started) -> BranchRecord:
    return BranchRecord(
        address=address,
        config=config,
        metrics=evaluate(processed.test_labels, probabilities, config.prob_threshold),
        trace=processed.trace
        + (StageTrace("test", f"model:{MODEL_LOGDIR_NAMES[config.model]}", _shape(processed.test_features),
                      (len(probabilities), 1)),),
        selected_features=processed.selected_features,
        predictions=tuple(int(v) for v in classify(probabilities, config.prob_threshold)),
        probabilities=tuple(float(p) for p in probabilities),
        wall_time=time.perf_counter() - started,
    )


def run_branch(
    config: PipelineConfig,
    dataset: TabularDataset,
    cache: DataCache | None = None,
    *,
    run_id: str = "adhoc",
    settings: TransformSettings | None = None,
    model_specs: Mapping[str, ModelSpec] | None = None,
) -> BranchRecord:
    """Execute one branch; stage failures come back as a failed record."""
    started = time.perf_counter()
    address = branch_address(run_id, config)
    try:
        key = data_collection_key(config)
        compute = lambda: process_collection(config, dataset, settings)  # noqa: E731
        processed = cache.get_or_compute(key, compute) if cache is not None else compute()
        model = train(_specs_for(model_specs, config.model), processed.train_features, processed.train_labels,
                      config.seed)
        probabilities = predict_proba(model, processed.test_features)
        return _scored(address, config, processed, probabilities, started)
    except BRANCH_ERRORS as exc:
        return _failed(address, config, exc, started)


@dataclass(frozen=True)
class ExecutionOptions:
    settings: TransformSettings = field(default_factory=TransformSettings)
    model_specs: Mapping[str, ModelSpec] = field(default_factory=dict)
    overwrite: bool = False
    resume: bool = False
    cache_dir: Path | None = None
    dump_intermediate: bool = False
    save_models: bool = False


def run_collection(
    run_id: str,
    configs: Sequence[PipelineConfig],
    dataset: TabularDataset,
    options: ExecutionOptions,
    run_dir: Path | None = None,
    cache: DataCache | None = None,
) -> list[BranchRecord]:
    """All pending branches of one data collection, in the given order."""
    started = time.perf_counter()
    cache = cache if cache is not None else DataCache(options.cache_dir)
    key = data_collection_key(configs[0])
    try:
        processed = cache.get_or_compute(key, lambda: process_collection(configs[0], dataset, options.settings))
    except BRANCH_ERRORS as exc:
        return [_failed(branch_address(run_id, c), c, exc, started) for c in configs]

    if run_dir is not None and options.dump_intermediate:
        path = run_dir / INTERMEDIATE_DIR / f"{short_hash(key)}.npz"
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            np.savez_compressed(
                path,
                train_features=processed.train_features,
                train_labels=processed.train_labels,
                test_features=processed.test_features,
                test_labels=processed.test_labels,
            )

    records = []
    probabilities: dict[str, np.ndarray | Exception] = {}
    for config in configs:
        branch_started = time.perf_counter()
        address = branch_address(run_id, config)
        if config.model not in probabilities:
            try:
                model = train(_specs_for(options.model_specs, config.model), processed.train_features,
                              processed.train_labels, config.seed)
                probabilities[config.model] = predict_proba(model, processed.test_features)
                if run_dir is not None and options.save_models:
                    save_model(model, run_dir / address.logdir / f"model-{short_hash(key)}.joblib")
            except BRANCH_ERRORS as exc:
                probabilities[config.model] = exc
        outcome = probabilities[config.model]
        if isinstance(outcome, Exception):
            records.append(_failed(address, config, outcome, branch_started))
            continue
        try:
            records.append(_scored(address, config, processed, outcome, branch_started))
        except BRANCH_ERRORS as exc:
            records.append(_failed(address, config, exc, branch_started))
    return records


# =============================================================================
# RUNS
# =============================================================================


@dataclass
class RunSummary:
    run_id: str
    branch_count: int
    failures: list[tuple[str, str]] = field(default_factory=list)
    merged_csv: Path | None = None
    resumed: int = 0
    elapsed: float = 0.0

    @property
    def succeeded(self) -> int:
        return self.branch_count - len(self.failures)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "branch_count": self.branch_count,
            "failures": [{"branch_id": b, "error": e} for b, e in self.failures],
            "merged_csv": self.merged_csv.name if self.merged_csv else None,
            "resumed": self.resumed,
            "elapsed": round(self.elapsed, 3),
        }


class RunDirectory:
    """Filesystem side of one run: conflict checks, record files, merged CSV."""

    def __init__(self, log_root: str | Path, run_id: str):
        if not run_id or "/" in run_id or run_id in (".", ".."):
            raise LogRootError(Path(log_root), f"invalid run id {run_id!r}")
        self.log_root = Path(log_root)
        self.run_id = run_id
        self.path = self.log_root / run_id

    def _log(self, message: str) -> None:
        if debug_enabled():
            print(f"[RunDirectory] {message}")

    @property
    def run_file(self) -> Path:
        return self.path / RUN_FILE

    @property
    def merged_csv(self) -> Path:
        return self.path / MERGED_FILE

    def exists(self) -> bool:
        return self.path.exists() and any(self.path.iterdir())

    def prepare(self, overwrite: bool = False, resume: bool = False) -> None:
        try:
            self.log_root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise LogRootError(self.log_root, f"cannot create log root ({exc.strerror})") from exc
        if not os.access(self.log_root, os.W_OK):
            raise LogRootError(self.log_root, "log root is not writable")
        if self.exists():
            if overwrite:
                self._log(f"removing existing run {self.path}")
                shutil.rmtree(self.path)
            elif not resume:
                raise RunIdConflictError(self.run_id)
        self.path.mkdir(parents=True, exist_ok=True)

    def existing_record(self, address: BranchAddress) -> BranchRecord | None:
        """Stored record of a branch, validated against its branch_id."""
        path = record_path(self.path, address)
        if not path.exists():
            return None
        record = read_record(path)
        if record.branch_id != address.branch_id:
            raise RecordError(path, f"holds branch {record.branch_id!r}, expected {address.branch_id!r}")
        return record

    def write_run_file(self, payload: dict) -> None:
        _atomic_write(self.run_file, lambda f: f.write(json.dumps(payload, indent=2)))

    def write_merged(self, records: Sequence[BranchRecord]) -> Path:
        rows = [r.merged_row() for r in sorted(records, key=lambda r: r.branch_id) if r.ok]
        frame = pd.DataFrame(rows, columns=list(MERGED_COLUMNS))
        _atomic_write(self.merged_csv, lambda f: frame.to_csv(f, index=False, lineterminator="\n"))
        return self.merged_csv


def run_all(
    spec: SearchSpaceSpec,
    dataset: TabularDataset,
    run_id: str,
    workers: int = 1,
    log_root: str | Path = "logs",
    options: ExecutionOptions | None = None,
) -> RunSummary:
    """Execute every enumerated branch with at most `workers` concurrent jobs.

    merged.csv depends only on (spec, dataset, options), never on `workers`.
    """
    options = options or ExecutionOptions()
    started = time.perf_counter()
    if workers < 1:
        raise ValueError(f"workers must be positive, got {workers}")
    spec.validate(feature_count=dataset.n_features)
    branches = enumerate_branches(spec)

    run_dir = RunDirectory(log_root, run_id)
    run_dir.prepare(overwrite=options.overwrite, resume=options.resume)
    header = {"run_id": run_id, "status": "running", "branch_count": len(branches)}
    run_dir.write_run_file(header)

    done: dict[str, BranchRecord] = {}
    pending: list[list[PipelineConfig]] = []
    for configs in group_by_collection(branches).values():
        todo = []
        for config in configs:
            existing = run_dir.existing_record(branch_address(run_id, config)) if options.resume else None
            if existing is not None:
                done[existing.branch_id] = existing
            else:
                todo.append(config)
        if todo:
            pending.append(todo)
    resumed = len(done)
    run_dir._log(f"{len(branches)} branches, {resumed} resumed, {len(pending)} collection jobs")

    jobs = (
        delayed(run_collection)(run_id, configs, dataset, options, run_dir.path)
        for configs in pending
    )
    for records in Parallel(n_jobs=workers, return_as="generator")(jobs):
        for record in records:
            write_record(run_dir.path, record)
            done[record.branch_id] = record

    records = [done[r] for r in sorted(done)]
    merged = run_dir.write_merged(records)
    summary = RunSummary(
        run_id=run_id,
        branch_count=len(branches),
        failures=[(r.branch_id, r.error or "") for r in records if not r.ok],
        merged_csv=merged,
        resumed=resumed,
        elapsed=time.perf_counter() - started,
    )
    run_dir.write_run_file({**summary.to_dict(), "status": "complete", "spec": _spec_dict(spec),
                            "n_rows": dataset.n_rows, "n_features": dataset.n_features})
    return summary


def _spec_dict(spec: SearchSpaceSpec) -> dict:
    return {name: list(getattr(spec, name)) for name in DIMENSIONS}
