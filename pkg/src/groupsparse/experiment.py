"""Repeated runs, lambda sweeps, feature maps and result reports."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Dataset, split
from .network import Network, accuracy, init_glorot
from .optimizer import TrainConfig, train
from .pruning import PruneReport, prune_report, threshold_weights, total_sparsity


@dataclass(frozen=True)
class Preset:
    hidden: tuple[int, ...]
    lam: float
    batch_size: int
    epochs: int


PRESETS = {
    "digits": Preset((40, 20), 1e-3, 300, 200),
    "ssd": Preset((40, 40, 30), 1e-4, 500, 50),
    "mnist": Preset((400, 300, 100), 1e-4, 400, 50),
    "cover": Preset((50, 50, 20), 1e-4, 1000, 50),
}

SWEEP_LAMBDAS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
SWEEP_COLUMNS = ("penalty", "lambda", "repeat", "test_acc", "sparsity", "features", "hidden_neurons")


@dataclass(frozen=True)
class ExperimentConfig:
    hidden: tuple[int, ...] = (40, 20)
    train: TrainConfig = field(default_factory=TrainConfig)
    repeats: int = 25
    test_fraction: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "ExperimentConfig":
        p = PRESETS[name]
        train_cfg = TrainConfig(lam=p.lam, batch_size=p.batch_size, epochs=p.epochs)
        return cls(hidden=p.hidden, train=train_cfg, **overrides)


@dataclass(frozen=True)
class RunResult:
    seed: int
    penalty: str
    lam: float
    train_accuracy: float
    test_accuracy: float
    report: PruneReport
    total_sparsity: float
    seconds: float
    network: Network | None = None

    def __post_init__(self):
        for acc in (self.train_accuracy, self.test_accuracy):
            if not 0.0 <= acc <= 1.0:
                raise ValueError(f"accuracy {acc} outside [0, 1]")


class ExperimentError(RuntimeError):
    def __init__(self, seed, cause):
        super().__init__(f"run with seed {seed} failed: {cause}")
        self.seed = seed


def run_once(dataset: Dataset, hidden, config: TrainConfig, test_fraction=0.25,
             keep_network=False) -> RunResult:
    """split -> init -> train -> threshold -> metrics, all seeded by ``config.seed``."""
    train_set, test_set = split(dataset, test_fraction, config.seed)
    dims = [dataset.n_features, *hidden, dataset.n_classes]
    net = init_glorot(dims, seed=config.seed)
    start = time.perf_counter()
    trained, _ = train(net, train_set, config, record=False)
    seconds = time.perf_counter() - start
    pruned = threshold_weights(trained, config.threshold)
    report = prune_report(trained, pruned, config.threshold)
    return RunResult(
        seed=config.seed,
        penalty=config.penalty.value,
        lam=config.lam,
        train_accuracy=accuracy(pruned, train_set.features, train_set.labels),
        test_accuracy=accuracy(pruned, test_set.features, test_set.labels),
        report=report,
        total_sparsity=total_sparsity(pruned),
        seconds=seconds,
        network=pruned if keep_network else None,
    )


def _run_job(args):
    dataset, hidden, config, test_fraction, keep = args
    try:
        return run_once(dataset, hidden, config, test_fraction, keep)
    except (ValueError, FloatingPointError) as exc:
        raise ExperimentError(config.seed, exc) from exc


def _execute(jobs, n_jobs):
    if n_jobs == 1 or len(jobs) == 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_run_job, jobs))


def run_repeats(dataset: Dataset, config: ExperimentConfig, n_jobs=1, keep_networks=False) -> list[RunResult]:
    """``config.repeats`` runs with seeds ``seed, seed + 1, ...``."""
    base = config.train
    jobs = [(dataset, config.hidden, replace(base, seed=base.seed + r), config.test_fraction, keep_networks)
            for r in range(config.repeats)]
    return _execute(jobs, n_jobs)


def aggregate(results: list[RunResult], include_timing=True) -> dict:
    """Mean and population standard deviation of every metric."""
    if not results:
        raise ValueError("no results to aggregate")

    def stats(values):
        arr = np.asarray(values, dtype=np.float64)
        return {"mean": arr.mean(axis=0).tolist(), "std": arr.std(axis=0).tolist()}

    out = {
        "penalty": results[0].penalty,
        "lambda": results[0].lam,
        "repeats": len(results),
        "seeds": [r.seed for r in results],
        "train_accuracy": stats([r.train_accuracy for r in results]),
        "test_accuracy": stats([r.test_accuracy for r in results]),
        "sparsity": stats([r.report.sparsity for r in results]),
        "total_sparsity": stats([r.total_sparsity for r in results]),
        "neurons": stats([r.report.neurons for r in results]),
        "selected_features": stats([r.report.n_selected_features for r in results]),
        "hidden_neurons": stats([r.report.total_hidden_neurons for r in results]),
    }
    if include_timing:
        out["seconds"] = stats([r.seconds for r in results])
    return out


def run_experiment(dataset: Dataset, config: ExperimentConfig, n_jobs=1, include_timing=True) -> dict:
    return aggregate(run_repeats(dataset, config, n_jobs), include_timing)


@dataclass(frozen=True)
class SweepRecord:
    penalty: str
    lam: float
    repeat: int
    test_accuracy: float
    sparsity: float
    features: int
    hidden_neurons: int

    def row(self) -> list[str]:
        return [self.penalty, repr(self.lam), str(self.repeat), repr(self.test_accuracy),
                repr(self.sparsity), str(self.features), str(self.hidden_neurons)]


def lambda_sweep(dataset: Dataset, config: ExperimentConfig, lambdas=SWEEP_LAMBDAS,
                 penalties=("l2", "l1", "gl", "sgl"), n_jobs=1) -> list[SweepRecord]:
    """Full factorial penalty x lambda x repeat, sorted by (penalty, lambda, repeat)."""
    lambdas = [float(lam) for lam in lambdas]
    penalties = list(penalties)
    if not lambdas or not penalties:
        raise ValueError("need at least one lambda and one penalty")
    if min(lambdas) <= 0:
        raise ValueError("sweep lambdas must be positive")
    base = config.train
    jobs, keys = [], []
    for pen in penalties:
        for lam in lambdas:
            for r in range(config.repeats):
                cfg = replace(base, penalty=pen, lam=lam, seed=base.seed + r)
                jobs.append((dataset, config.hidden, cfg, config.test_fraction, False))
                keys.append(r)
    records = [
        SweepRecord(res.penalty, res.lam, rep, res.test_accuracy, res.total_sparsity,
                    res.report.n_selected_features, res.report.total_hidden_neurons)
        for rep, res in zip(keys, _execute(jobs, n_jobs))
    ]
    return sorted(records, key=lambda s: (s.penalty, s.lam, s.repeat))


def sweep_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for rec in records:
        writer.writerow(rec.row())
    return buf.getvalue()


def write_sweep_csv(records, path) -> None:
    Path(path).write_text(sweep_csv(records))


def sweep_summary(records) -> list[dict]:
    """Per (penalty, lambda) means and standard deviations, the curves of a sweep plot."""
    cells = {}
    for rec in records:
        cells.setdefault((rec.penalty, rec.lam), []).append(rec)
    out = []
    for (pen, lam), recs in sorted(cells.items()):
        row = {"penalty": pen, "lambda": lam, "repeats": len(recs)}
        for name in ("test_accuracy", "sparsity", "features", "hidden_neurons"):
            vals = np.array([getattr(r, name) for r in recs], dtype=np.float64)
            row[name] = {"mean": float(vals.mean()), "std": float(vals.std())}
        out.append(row)
    return out


def feature_intensity(net: Network) -> np.ndarray:
    """Sum of absolute outgoing weights of every input."""
    return np.abs(net.weights[0]).sum(axis=0)


def feature_map_pixels(net: Network, image_shape) -> np.ndarray:
    """Grey levels: 255 (white) for zero intensity, 0 (black) for the maximum.

    Nonzero intensities never map to 255, so white marks exactly the
    deselected inputs.
    """
    rows, cols = image_shape
    intensity = feature_intensity(net)
    if rows * cols != intensity.size:
        raise ValueError(f"image shape {image_shape} does not match {intensity.size} inputs")
    peak = intensity.max()
    if peak == 0:
        return np.full((rows, cols), 255, dtype=np.int64)
    darkness = np.ceil(255 * intensity / peak).astype(np.int64)
    return (255 - darkness).reshape(rows, cols)


def write_pgm(pixels: np.ndarray, path) -> None:
    rows, cols = pixels.shape
    lines = ["P2", f"{cols} {rows}", "255"]
    lines += [" ".join(str(int(v)) for v in row) for row in pixels]
    Path(path).write_text("\n".join(lines) + "\n")


def feature_map_export(net: Network, image_shape, path) -> tuple[Path, Path]:
    """Write ``<path>.pgm`` and ``<path>.csv`` (raw intensities); returns both paths."""
    base = Path(path)
    if base.suffix in (".pgm", ".csv"):
        base = base.with_suffix("")
    pixels = feature_map_pixels(net, image_shape)
    pgm, table = base.with_suffix(".pgm"), base.with_suffix(".csv")
    write_pgm(pixels, pgm)
    intensity = feature_intensity(net).reshape(image_shape)
    table.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in intensity) + "\n")
    return pgm, table


def _fmt(values, digits=3):
    if isinstance(values, list):
        return "[" + ", ".join(f"{v:.{digits}f}" for v in values) + "]"
    return f"{values:.{digits}f}"


def report_table(results: dict) -> str:
    """Aligned text table, one column per penalty and one row per measure."""
    names = list(results)
    rows = [("Measure", [n.upper() for n in names])]
    rows.append(("Training accuracy", [_fmt(results[n]["train_accuracy"]["mean"]) for n in names]))
    rows.append(("Test accuracy", [_fmt(results[n]["test_accuracy"]["mean"]) for n in names]))
    if all("seconds" in results[n] for n in names):
        rows.append(("Training time [s]", [_fmt(results[n]["seconds"]["mean"], 1) for n in names]))
    rows.append(("Sparsity", [_fmt(results[n]["sparsity"]["mean"], 2) for n in names]))
    rows.append(("Neurons", [_fmt(results[n]["neurons"]["mean"], 1) for n in names]))
    widths = [max(len(r[0]) for r in rows)]
    widths += [max(len(r[1][i]) for r in rows) for i in range(len(names))]
    lines = []
    for label, cells in rows:
        parts = [label.ljust(widths[0])] + [c.ljust(w) for c, w in zip(cells, widths[1:])]
        lines.append("  ".join(parts).rstrip())
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def render_report(results: dict, path) -> tuple[Path, Path]:
    """Write ``results`` (penalty name -> :func:`aggregate` output) as JSON and as a text table.

    The JSON goes to ``path`` (suffix ``.json``) and the table next to it
    with suffix ``.txt``.
    """
    base = Path(path)
    json_path = base.with_suffix(".json")
    txt_path = base.with_suffix(".txt")
    json_path.write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    txt_path.write_text(report_table(results))
    return json_path, txt_path
