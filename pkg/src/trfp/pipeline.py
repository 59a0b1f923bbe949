"""Pipeline orchestration shared by the CLI subcommands.

Ties together simulate -> featurize -> train -> predict -> evaluate and the
end-to-end ``repro`` experiment.  Every artifact under a run directory is a
pure function of (inputs, seed); nothing timestamped is written, so runs
with identical arguments produce byte-identical files.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import evaluation
from .classifier import (
    TrainConfig,
    load_model,
    make_training_windows,
    save_model,
    train,
)
from .classifier.network import ClassifierParams, predict_batch
from .classifier.samples import normalize_batch
from .features import WindowParams, extract, read_feature_csv, write_feature_csv
from .simulator import resolve_channel, synth_dataset, table1_profiles, load_profiles
from .trace_model import CleanTrace, TraceError, dataset_trace_paths, load_trace, save_dataset

log = logging.getLogger(__name__)

# Held-out sets use a deterministic offset from the run seed.
TEST_SEED_OFFSET = 10007


@dataclass(frozen=True)
class PipelineConfig:
    """Line-based ``key = value`` run configuration; unknown keys rejected."""

    window_seconds: float = 0.5
    step_seconds: float = 0.1
    burst_seconds: float = 0.05
    channel: str = "localhost"
    profiles: str = "table1"
    train_seconds: float = 300.0
    test_seconds: float = 1000.0
    seed: int = 0
    seq_len: int = 128
    seq_step: int = 4
    batch_size: int = 64
    epochs: int = 30
    learning_rate: float = 1e-3
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    hidden_units: tuple[int, int, int] = (64, 32, 16)
    attention_heads: int = 8
    attention_key_dim: int = 128
    dropout_rate: float = 0.3
    dense_units: tuple[int, int] = (128, 64)
    noise_std_fraction: float = 0.05

    def window_params(self) -> WindowParams:
        return WindowParams(self.window_seconds, self.step_seconds, self.burst_seconds)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            seq_len=self.seq_len,
            seq_step=self.seq_step,
            batch_size=self.batch_size,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            focal_alpha=self.focal_alpha,
            focal_gamma=self.focal_gamma,
            hidden_units=self.hidden_units,
            attention_heads=self.attention_heads,
            attention_key_dim=self.attention_key_dim,
            dropout_rate=self.dropout_rate,
            dense_units=self.dense_units,
            noise_std_fraction=self.noise_std_fraction,
            seed=self.seed,
        )


_INT_TUPLE_KEYS = {"hidden_units", "dense_units"}


def load_pipeline_config(path: Path | str) -> PipelineConfig:
    field_types = {f.name: f.type for f in fields(PipelineConfig)}
    overrides: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise TraceError(f"{path}: malformed line {lineno}: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in field_types:
            raise TraceError(f"{path}: unknown key {key!r} at line {lineno}")
        try:
            if key in _INT_TUPLE_KEYS:
                overrides[key] = tuple(int(v) for v in value.split(","))
            elif field_types[key] == "int":
                overrides[key] = int(value)
            elif field_types[key] == "float":
                overrides[key] = float(value)
            else:
                overrides[key] = value
        except ValueError:
            raise TraceError(f"{path}: bad value for {key!r} at line {lineno}") from None
    return PipelineConfig(**overrides)


def resolve_profiles(spec: str):
    if spec == "table1":
        return table1_profiles()
    return load_profiles(spec)


# ---------------------------------------------------------------------------
# Stages


def simulate_to_dir(
    profiles, channel_spec: str, per_class_seconds: float, seed: int, out_dir: Path
) -> list[Path]:
    channel, scenario = resolve_channel(channel_spec)
    traces = synth_dataset(profiles, channel, per_class_seconds, seed, scenario)
    return save_dataset(traces, out_dir, trace_id=f"sim-{seed}")


def featurize_trace(trace: CleanTrace, params: WindowParams, out_path: Path) -> int:
    vectors = extract(trace, params)
    write_feature_csv(vectors, out_path)
    return len(vectors)


def featurize_dir(
    traces_dir: Path, out_dir: Path, params: WindowParams, threads: int = 1
) -> list[Path]:
    """Extract features for every trace under the dataset layout."""
    jobs = []
    for label, csv_path in dataset_trace_paths(traces_dir):
        dest = out_dir / label / csv_path.name
        dest.parent.mkdir(parents=True, exist_ok=True)
        jobs.append((csv_path, dest))

    def work(job):
        src, dest = job
        featurize_trace(load_trace(src), params, dest)
        return dest

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, jobs))
    return [work(j) for j in jobs]


def load_feature_dir(features_dir: Path) -> tuple[list[np.ndarray], list[str], list[str]]:
    """Per-trace feature matrices and labels, plus the sorted label names
    (the class-index order used everywhere downstream)."""
    per_trace: list[np.ndarray] = []
    trace_labels: list[str] = []
    for label_dir in sorted(p for p in Path(features_dir).iterdir() if p.is_dir()):
        for csv_path in sorted(label_dir.glob("*.csv")):
            feats, _, labels = read_feature_csv(csv_path)
            label = labels[0] or label_dir.name
            per_trace.append(feats)
            trace_labels.append(label)
    if not per_trace:
        raise TraceError(f"{features_dir}: no feature files")
    names = sorted(set(trace_labels))
    return per_trace, trace_labels, names


def train_from_features(features_dir: Path, config: TrainConfig):
    per_trace, trace_labels, names = load_feature_dir(Path(features_dir))
    index = {name: i for i, name in enumerate(names)}
    samples = make_training_windows(
        per_trace, [index[l] for l in trace_labels], config.seq_len, config.seq_step
    )
    if not samples:
        raise TraceError("no training samples (are the traces long enough for seq_len?)")
    return train(samples, config, labels=names)


def evaluate_model(params: ClassifierParams, features_dir: Path, out_dir: Optional[Path] = None):
    """Predict every sequence sample in a labeled feature dir, report metrics."""
    per_trace, trace_labels, names = load_feature_dir(Path(features_dir))
    unknown = sorted(set(trace_labels) - set(params.labels))
    if unknown:
        raise TraceError(f"labels not in model: {unknown}")
    index = {name: i for i, name in enumerate(params.labels)}
    samples = make_training_windows(
        per_trace, [index[l] for l in trace_labels], params.seq_len, params.seq_step
    )
    if not samples:
        raise TraceError("no evaluation samples")
    x, _ = normalize_batch(np.stack([s.sequence for s in samples]))
    y_true = np.array([s.label for s in samples])
    y_pred, _ = predict_batch(params, x)

    cm = evaluation.confusion(list(zip(y_true.tolist(), y_pred.tolist())), len(params.labels))
    report = evaluation.metrics(cm)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        evaluation.write_metrics_csv(report, params.labels, out_dir / "metrics.csv")
        evaluation.write_confusion_csv(cm, params.labels, out_dir / "confusion.csv")
        evaluation.write_summary(report, cm, params.labels, out_dir / "summary.txt")
    return report, cm


def predict_features_csv(params: ClassifierParams, features_csv: Path, out_csv: Path) -> int:
    """Slide the model over one feature file and write per-sample verdicts."""
    feats, starts, _ = read_feature_csv(features_csv)
    if feats.shape[0] < params.seq_len:
        raise TraceError(
            f"{features_csv}: {feats.shape[0]} rows < sequence length {params.seq_len}"
        )
    rows = range(0, feats.shape[0] - params.seq_len + 1, params.seq_step)
    stack = np.stack([feats[r : r + params.seq_len] for r in rows])
    x, _ = normalize_batch(stack)
    classes, probs = predict_batch(params, x)
    labels = params.labels or [str(i) for i in range(params.arch.n_classes)]
    with open(out_csv, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("sample_index,window_start,predicted_class,predicted_label,")
        fh.write(",".join(f"p_{l}" for l in labels) + "\n")
        for i, (r, cls) in enumerate(zip(rows, classes)):
            p = ",".join(f"{v:.9g}" for v in probs[i])
            fh.write(f"{i},{starts[r]:.9g},{cls},{labels[cls]},{p}\n")
    return len(classes)


# ---------------------------------------------------------------------------
# End-to-end experiment


def run_repro(
    out_dir: Path | str,
    seed: int,
    channel: str = "localhost",
    train_seconds: float = 300.0,
    test_seconds: float = 1000.0,
    config: Optional[PipelineConfig] = None,
    threads: int = 1,
):
    """Simulate, featurize, train, and evaluate one full experiment.

    Training data uses ``seed``; the held-out set uses seed + 10007.
    Returns the final evaluation report.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = config or PipelineConfig()
    cfg = replace(cfg, seed=seed, channel=channel,
                  train_seconds=train_seconds, test_seconds=test_seconds)
    profiles = resolve_profiles(cfg.profiles)
    params = cfg.window_params()
    test_seed = seed + TEST_SEED_OFFSET

    log.info("repro: simulating %d classes (%s channel)", len(profiles), channel)
    simulate_to_dir(profiles, channel, cfg.train_seconds, seed, out_dir / "traces" / "train")
    simulate_to_dir(profiles, channel, cfg.test_seconds, test_seed, out_dir / "traces" / "test")

    log.info("repro: extracting features")
    featurize_dir(out_dir / "traces" / "train", out_dir / "features" / "train", params, threads)
    featurize_dir(out_dir / "traces" / "test", out_dir / "features" / "test", params, threads)

    log.info("repro: training")
    result = train_from_features(out_dir / "features" / "train", cfg.train_config())
    save_model(result.params, out_dir / "model.trfp")
    _write_history(result.history, out_dir / "history.csv")

    log.info("repro: evaluating held-out set")
    model = load_model(out_dir / "model.trfp")
    report, cm = evaluate_model(model, out_dir / "features" / "test", out_dir / "report")

    meta = [
        f"seed={seed}",
        f"test_seed={test_seed}",
        f"channel={channel}",
        f"train_seconds={cfg.train_seconds:.9g}",
        f"test_seconds={cfg.test_seconds:.9g}",
        f"epochs={cfg.epochs}",
        f"seq_len={cfg.seq_len}",
        f"seq_step={cfg.seq_step}",
        f"macro_f1={report.macro_f1:.9g}",
        f"weighted_f1={report.weighted_f1:.9g}",
        f"accuracy={report.accuracy:.9g}",
    ]
    (out_dir / "run_metadata.txt").write_text("\n".join(meta) + "\n", encoding="utf-8")
    log.info("repro: macro F1 %.4f, weighted F1 %.4f", report.macro_f1, report.weighted_f1)
    return report


def _write_history(history, path: Path) -> None:
    lines = ["epoch,train_loss,train_acc,val_loss,val_acc"]
    for h in history:
        lines.append(
            f"{h.epoch},{h.train_loss:.9g},{h.train_acc:.9g},{h.val_loss:.9g},{h.val_acc:.9g}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
