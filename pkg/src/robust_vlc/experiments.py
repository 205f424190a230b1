"""Monte Carlo sweeps over the number of users K and quantizer bits B.

Every trial index t owns one random stream, seeded from (master seed, t).
The cell (K, B, t) draws its K users as the first K of that stream, so all
cells of a trial share their users: growing K adds users, changing B
re-quantizes the same channels.  This keeps each cell independently
reproducible while removing sampling noise from comparisons across cells.
"""
from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import metrics
from .channel import OpticalParams, gain_matrix
from .precoder import DesignOutcome, DesignParams, DesignSettings, design
from .quantizer import DynamicRange, centroid_linear, quantize_array
from .region import box_from_quantized
from .scenario import RoomConfig, place_leds, sample_users

log = logging.getLogger(__name__)

CSV_VERSION = 1


@dataclass
class SweepConfig:
    k_values: tuple = (2, 3, 4, 5, 6, 7)
    b_values: tuple = (4, 8, 16)
    trials: int = 500
    seed: int = 0
    design: DesignParams = field(default_factory=DesignParams)
    room: RoomConfig = field(default_factory=RoomConfig)
    optics: OpticalParams = field(default_factory=OpticalParams)
    dynamic_range: DynamicRange | None = None
    leds: np.ndarray | None = None
    floor_zero: bool = True
    settings: DesignSettings = field(default_factory=DesignSettings)

    def __post_init__(self):
        self.k_values = tuple(int(k) for k in self.k_values)
        self.b_values = tuple(int(b) for b in self.b_values)
        if not self.k_values or not self.b_values:
            raise ValueError("sweeps over K and B must be non-empty")
        if min(self.k_values) < 1 or min(self.b_values) < 1:
            raise ValueError("K and B values must be positive")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.leds is None:
            self.leds = place_leds(self.room, 6)
        self.leds = np.asarray(self.leds, dtype=float)
        if self.dynamic_range is None:
            raise ValueError("a calibrated dynamic range is required")


@dataclass
class TrialRecord:
    k: int
    b: int
    trial: int
    robust_status: str
    robust_feasible: bool
    robust_v: float | None
    robust_iterations: int
    robust_worst_corner_snir_db: float | None
    robust_actual_worst_user_snir_db: float | None
    nonrobust_status: str
    nonrobust_feasible: bool
    nonrobust_v: float | None
    nonrobust_iterations: int
    nonrobust_worst_corner_snir_db: float | None
    nonrobust_actual_worst_user_snir_db: float | None


@dataclass
class TrialDetail:
    """In-memory artifacts of one trial, for checks that need the precoders."""

    k: int
    b: int
    trial: int
    H: np.ndarray
    boxes: list
    centroids: np.ndarray
    robust: DesignOutcome
    nonrobust: DesignOutcome
    spec: object


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def run_trial(cfg: SweepConfig, k: int, b: int, trial: int, keep_detail: bool = False):
    """One realization: users, quantized feedback, both designs, evaluation."""
    rng = trial_rng(cfg.seed, trial)
    users = sample_users(cfg.room, k, rng)
    H = gain_matrix(cfg.leds, users, cfg.optics)
    q = cfg.dynamic_range.quantizer(b)
    idx = quantize_array(H, q)
    boxes = [box_from_quantized(row, q, floor_zero=cfg.floor_zero) for row in idx]
    cent = centroid_linear(idx, q, floor_zero=cfg.floor_zero)
    spec = cfg.design.spec(k, cfg.optics.responsivity_rho_A_per_W)

    row = {"k": k, "b": b, "trial": trial}
    outcomes = {}
    for name, channels in (("robust", boxes), ("nonrobust", cent)):
        out = design(spec, channels, cfg.settings)
        outcomes[name] = out
        row[f"{name}_status"] = out.status.value
        row[f"{name}_feasible"] = out.feasible
        row[f"{name}_iterations"] = int(out.solver_stats.get("iterations", 0))
        if out.feasible:
            rep = metrics.evaluate(out.W, H, boxes, spec)
            row[f"{name}_v"] = out.v
            row[f"{name}_worst_corner_snir_db"] = rep.worst_corner_snir_db
            row[f"{name}_actual_worst_user_snir_db"] = rep.worst_user_snir_db
        else:
            row[f"{name}_v"] = None
            row[f"{name}_worst_corner_snir_db"] = None
            row[f"{name}_actual_worst_user_snir_db"] = None
    rec = TrialRecord(**row)
    if keep_detail:
        return rec, TrialDetail(k, b, trial, H, boxes, cent,
                                outcomes["robust"], outcomes["nonrobust"], spec)
    return rec


_WORKER_CFG: SweepConfig | None = None


def _init_worker(cfg):
    global _WORKER_CFG
    _WORKER_CFG = cfg


def _work(task):
    k, b, t, keep = task
    return run_trial(_WORKER_CFG, k, b, t, keep)


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def aggregate(records, k_values=None, b_values=None) -> list[dict]:
    """Per-(K, B) feasibility percentages and SNIR means over feasible trials."""
    cells: dict[tuple, list] = {}
    for r in records:
        cells.setdefault((r.k, r.b), []).append(r)
    k_values = k_values or sorted({k for k, _ in cells})
    b_values = b_values or sorted({b for _, b in cells})
    rows = []
    for k in k_values:
        for b in b_values:
            rs = cells.get((k, b), [])
            n = len(rs)
            row = {"k": k, "b": b, "trials": n}
            for name in ("robust", "nonrobust"):
                feas = [r for r in rs if getattr(r, f"{name}_feasible")]
                row[f"{name}_feasible_pct"] = 100.0 * len(feas) / n if n else None
                row[f"{name}_failures"] = sum(getattr(r, f"{name}_status") == "NumericalFailure" for r in rs)
                row[f"{name}_worst_corner_snir_db"] = _mean(getattr(r, f"{name}_worst_corner_snir_db") for r in feas)
                row[f"{name}_actual_snir_db"] = _mean(getattr(r, f"{name}_actual_worst_user_snir_db") for r in feas)
            rows.append(row)
    return rows


def table1(records, b_values=None) -> list[dict]:
    """Actual worst-user SNIR with the largest K that the robust design can serve.

    For each trial and B, K is reduced until the robust design is feasible;
    the robust and non-robust actual SNIR at that K are averaged over trials.
    """
    by_trial: dict[tuple, list] = {}
    for r in records:
        by_trial.setdefault((r.b, r.trial), []).append(r)
    b_values = b_values or sorted({r.b for r in records})
    out = []
    for b in b_values:
        chosen = []
        for (bb, _), rs in sorted(by_trial.items()):
            if bb != b:
                continue
            feas = [r for r in rs if r.robust_feasible]
            if feas:
                chosen.append(max(feas, key=lambda r: r.k))
        out.append({
            "b": b,
            "trials": len(chosen),
            "mean_k": float(np.mean([r.k for r in chosen])) if chosen else None,
            "robust_actual_snir_db": _mean(r.robust_actual_worst_user_snir_db for r in chosen),
            "nonrobust_actual_snir_db": _mean(r.nonrobust_actual_worst_user_snir_db for r in chosen
                                              if r.nonrobust_feasible),
        })
    return out


@dataclass
class SweepResult:
    records: list
    aggregates: list
    table1: list
    details: list | None = None


def run_sweep(cfg: SweepConfig, workers: int | None = None, keep_details: bool = False) -> SweepResult:
    """Run every (K, B, trial) cell, in parallel when ``workers`` > 1.

    Results are ordered by (K, B, trial) whatever the completion order.
    """
    tasks = [(k, b, t, keep_details) for k in cfg.k_values for b in cfg.b_values
             for t in range(cfg.trials)]
    workers = workers or os.cpu_count() or 1
    if workers <= 1:
        _init_worker(cfg)
        results = [_work(t) for t in tasks]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(cfg,)) as pool:
            results = list(pool.map(_work, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    if keep_details:
        records = [r for r, _ in results]
        details = [d for _, d in results]
    else:
        records, details = results, None
    order = sorted(range(len(records)), key=lambda i: (records[i].k, records[i].b, records[i].trial))
    records = [records[i] for i in order]
    if details is not None:
        details = [details[i] for i in order]
    return SweepResult(records, aggregate(records, list(cfg.k_values), list(cfg.b_values)),
                       table1(records, list(cfg.b_values)), details)


# -- CSV I/O -------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(h)) for h in header])
    return buf.getvalue()


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".partial")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise OSError(f"could not write {path}: {exc}") from exc


TRIAL_FIELDS = [f.name for f in fields(TrialRecord)]
AGG_FIELDS = ["k", "b", "trials",
              "robust_feasible_pct", "nonrobust_feasible_pct",
              "robust_failures", "nonrobust_failures",
              "robust_worst_corner_snir_db", "nonrobust_worst_corner_snir_db",
              "robust_actual_snir_db", "nonrobust_actual_snir_db"]
TABLE1_FIELDS = ["b", "trials", "mean_k", "robust_actual_snir_db", "nonrobust_actual_snir_db"]
FIGURES = {
    "fig2_feasibility.csv": ["k", "b", "robust_feasible_pct", "nonrobust_feasible_pct"],
    "fig3_worst_corner.csv": ["k", "b", "robust_worst_corner_snir_db", "nonrobust_worst_corner_snir_db"],
    "fig4_actual_snir.csv": ["k", "b", "robust_actual_snir_db", "nonrobust_actual_snir_db"],
}


def trials_csv(records) -> str:
    return _csv_text(TRIAL_FIELDS, [asdict(r) for r in records])


def parse_trials(text: str) -> list[TrialRecord]:
    types = {f.name: f.type for f in fields(TrialRecord)}
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        kw = {}
        for name, raw in row.items():
            t = str(types[name])
            if raw == "":
                kw[name] = None
            elif t.startswith("int"):
                kw[name] = int(raw)
            elif t.startswith("bool"):
                kw[name] = raw == "1"
            elif t.startswith("float"):
                kw[name] = float(raw)
            else:
                kw[name] = raw
        out.append(TrialRecord(**kw))
    return out


def emit_outputs(records, aggregates, out_dir, table=None, plots: bool = False) -> list[Path]:
    """Write trials, aggregates and per-figure CSVs; each file lands atomically."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"could not create {out}: {exc}") from exc
    table = table1(records) if table is None else table
    written = []
    files = {
        "trials.csv": trials_csv(records),
        "aggregates.csv": _csv_text(AGG_FIELDS, aggregates),
        "table1_summary.csv": _csv_text(TABLE1_FIELDS, table),
    }
    for name, cols in FIGURES.items():
        files[name] = _csv_text(cols, aggregates)
    for name, text in files.items():
        _atomic_write(out / name, text)
        written.append(out / name)
    if plots:
        written += plot_figures(aggregates, out)
    return written


def plot_figures(aggregates, out_dir) -> list[Path]:
    """SVG line plots of the three figure tables (one line per B and design)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    specs = [
        ("fig2_feasibility.svg", "feasible_pct", "successful designs (%)"),
        ("fig3_worst_corner.svg", "worst_corner_snir_db", "worst-corner SNIR (dB)"),
        ("fig4_actual_snir.svg", "actual_snir_db", "actual worst-user SNIR (dB)"),
    ]
    bs = sorted({r["b"] for r in aggregates})
    paths = []
    for fname, key, label in specs:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for b in bs:
            rows = [r for r in aggregates if r["b"] == b]
            ks = [r["k"] for r in rows]
            for name, style in (("robust", "-o"), ("nonrobust", "--s")):
                ys = [np.nan if r[f"{name}_{key}"] is None else r[f"{name}_{key}"] for r in rows]
                ax.plot(ks, ys, style, label=f"{name}, B={b}")
        ax.set_xlabel("users K")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=7)
        fig.tight_layout()
        tmp = out / (fname + ".partial.svg")
        fig.savefig(tmp, format="svg")
        plt.close(fig)
        os.replace(tmp, out / fname)
        paths.append(out / fname)
    return paths
