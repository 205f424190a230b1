"""Acceptance checks over solver instances and sweep results.

Each check returns a :class:`CheckResult`; the test suite and the
``verify`` subcommand share them.  SNIR is recomputed here from its
definition, independently of :mod:`robust_vlc.metrics`.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .experiments import SweepConfig, run_sweep, run_trial, trials_csv
from .precoder import DesignSettings, DesignSpec, design
from .region import enumerate_vertices, sample_in_box
from .socp import Status, solve
from .socp.planted import planted_infeasible, planted_optimal

TARGET_DB = 15.0


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.criterion:2d} {self.name}: {self.detail}"


def snir_reference(h, W, k, sigma2, rho) -> float:
    """SNIR of user k at channel h, written out term by term."""
    h = np.asarray(h, dtype=float)
    signal = (rho * float(np.dot(W[:, k], h))) ** 2
    interference = 0.0
    for i in range(W.shape[1]):
        if i != k:
            interference += (rho * float(np.dot(W[:, i], h))) ** 2
    return signal / (sigma2 + interference)


def _snir_rows(H, W, k, sigma2, rho) -> np.ndarray:
    # vectorized twin of snir_reference, used for the 10^3-sample checks
    P = (rho * (np.atleast_2d(H) @ W)) ** 2
    return P[:, k] / (sigma2 + P.sum(axis=1) - P[:, k])


# -- 1: solver oracle ---------------------------------------------------------

def check_solver_oracle(n_optimal: int = 20, n_infeasible: int = 5, seed: int = 2024,
                        rel_tol: float = 1e-6, time_budget_s: float = 5.0) -> CheckResult:
    rng = np.random.default_rng(seed)
    cases_opt = [planted_optimal(rng) for _ in range(n_optimal)]
    cases_inf = [planted_infeasible(rng) for _ in range(n_infeasible)]
    t0 = time.perf_counter()
    errors, bad = [], 0
    for prog, _, opt in cases_opt:
        r = solve(prog)
        if r.status != Status.OPTIMAL:
            bad += 1
            continue
        errors.append(abs(r.objective_value - opt) / max(1.0, abs(opt)))
    detected = 0
    for prog, _ in cases_inf:
        r = solve(prog)
        if r.status == Status.PRIMAL_INFEASIBLE and r.certificate is not None \
                and r.certificate_residual <= 1e-8:
            detected += 1
    elapsed = time.perf_counter() - t0
    worst = max(errors) if errors else np.inf
    ok = bad == 0 and worst <= rel_tol and detected == n_infeasible and elapsed < time_budget_s
    return CheckResult(1, "solver oracle", ok,
                       f"{n_optimal - bad}/{n_optimal} optimal, max rel err {worst:.2e}; "
                       f"{detected}/{n_infeasible} infeasible certified; {elapsed:.2f} s")


# -- 2, 3: robust guarantee ---------------------------------------------------

def _robust(details):
    return [d for d in details if d.robust.feasible]


def check_robust_guarantee(details, samples: int = 1000, seed: int = 7,
                           min_designs: int = 200, rel_tol: float = 1e-6) -> CheckResult:
    rng = np.random.default_rng(seed)
    feas = _robust(details)
    worst_ratio = np.inf
    for d in feas:
        W, spec = d.robust.W, d.spec
        for k, box in enumerate(d.boxes):
            V = enumerate_vertices(box)
            corner = [snir_reference(h, W, k, spec.sigma2[k], spec.rho) for h in V]
            inner = _snir_rows(sample_in_box(box, samples, rng), W, k, spec.sigma2[k], spec.rho)
            worst_ratio = min(worst_ratio, min(corner) / spec.gamma[k], inner.min() / spec.gamma[k])
    ok = len(feas) >= min_designs and worst_ratio >= 1 - rel_tol
    return CheckResult(2, "robust guarantee", ok,
                       f"{len(feas)} feasible robust designs; min SNIR/target over corners "
                       f"and {samples} interior samples per region = {worst_ratio:.9f}")


def check_worst_corner_binding(details, tol_db: float = 1e-3) -> CheckResult:
    feas = _robust(details)
    dev = 0.0
    for d in feas:
        W, spec = d.robust.W, d.spec
        worst = min(snir_reference(h, W, k, spec.sigma2[k], spec.rho)
                    for k, box in enumerate(d.boxes) for h in enumerate_vertices(box))
        dev = max(dev, abs(10 * np.log10(worst) - 10 * np.log10(spec.gamma.min())))
    ok = bool(feas) and dev <= tol_db
    return CheckResult(3, "worst-corner binding", ok,
                       f"max |worst corner - target| = {dev:.2e} dB over {len(feas)} designs")


# -- 4, 5: sweep trends -------------------------------------------------------

def check_degradation(aggregates, table, low_b: int = 4, high_b: int = 16,
                      margin_db: float = 5.0, near_db: float = 0.5) -> CheckResult:
    """Non-robust worst corner far below target at coarse feedback; both designs
    near target at fine feedback."""
    notes, ok = [], True
    low = [r for r in aggregates if r["b"] == low_b and r["nonrobust_worst_corner_snir_db"] is not None]
    for r in low:
        v = r["nonrobust_worst_corner_snir_db"]
        ok &= v <= TARGET_DB - margin_db
        notes.append(f"K={r['k']},B={low_b} non-robust worst corner {v:.2f} dB")
    ok &= bool(low)
    rows = [t for t in table if t["b"] == high_b]
    for t in rows:
        for name in ("robust", "nonrobust"):
            v = t[f"{name}_actual_snir_db"]
            ok &= v is not None and abs(v - TARGET_DB) <= near_db
            notes.append(f"B={high_b} {name} actual {v if v is None else round(v, 4)} dB")
    ok &= bool(rows)
    return CheckResult(4, "non-robust degradation trend", bool(ok), "; ".join(notes))


def check_monotonicity(aggregates, slack_pct: float = 2.0) -> CheckResult:
    cell = {(r["k"], r["b"]): r for r in aggregates}
    ks = sorted({k for k, _ in cell})
    bs = sorted({b for _, b in cell})
    problems = []
    for b in bs:
        for k0, k1 in zip(ks, ks[1:]):
            if cell[k1, b]["robust_feasible_pct"] > cell[k0, b]["robust_feasible_pct"] + slack_pct:
                problems.append(f"rises in K at B={b} ({k0}->{k1})")
    for k in ks:
        for b0, b1 in zip(bs, bs[1:]):
            if cell[k, b1]["robust_feasible_pct"] < cell[k, b0]["robust_feasible_pct"] - slack_pct:
                problems.append(f"falls in B at K={k} ({b0}->{b1})")
    for (k, b), r in cell.items():
        if r["robust_feasible_pct"] > r["nonrobust_feasible_pct"]:
            problems.append(f"robust above non-robust at K={k},B={b}")
    grid = ", ".join(f"K{k}B{b}:{cell[k, b]['robust_feasible_pct']:.1f}/{cell[k, b]['nonrobust_feasible_pct']:.1f}"
                     for k in ks for b in bs)
    return CheckResult(5, "feasibility monotonicity", not problems,
                       ("; ".join(problems) + " | " if problems else "") + "robust/non-robust %: " + grid)


# -- 6, 7: power envelope and sign invariance ---------------------------------

def check_power_envelope(details, n_designs: int = 50, n_symbols: int = 10_000,
                         seed: int = 11, tol: float = 1e-9) -> CheckResult:
    rng = np.random.default_rng(seed)
    outs = [(d.robust, d.spec) for d in details if d.robust.feasible]
    outs += [(d.nonrobust, d.spec) for d in details if d.nonrobust.feasible]
    outs = outs[:n_designs]
    lo, hi = np.inf, -np.inf
    for out, spec in outs:
        A = spec.amplitude_A
        s = rng.uniform(-A, A, size=(n_symbols, A.size))
        # add the extreme symbol vectors, where the power peaks
        signs = np.where(rng.random((64, A.size)) < 0.5, -1.0, 1.0)
        s = np.vstack([s, signs * A, np.sign(out.W) * A, -np.sign(out.W) * A])
        x = s @ out.W.T + spec.beta
        lo, hi = min(lo, x.min()), max(hi, x.max())
    p_max = outs[0][1].p_max if outs else np.nan
    ok = len(outs) >= n_designs and lo >= -tol and hi <= p_max + tol
    return CheckResult(6, "power envelope", bool(ok),
                       f"{len(outs)} designs, LED power range [{lo:.4f}, {hi:.4f}] W, limit {p_max} W")


def check_sign_invariance(details, rel_tol: float = 1e-9) -> CheckResult:
    violations, checked = 0, 0
    for d in details:
        for out, regions in ((d.robust, d.boxes), (d.nonrobust, None)):
            if not out.feasible:
                continue
            for k in range(out.W.shape[1]):
                V = enumerate_vertices(regions[k]) if regions is not None else d.centroids[k][None, :]
                proj = V @ out.W[:, k]
                tol = rel_tol * np.abs(V).max() * np.abs(out.W[:, k]).sum()
                checked += 1
                if not (np.all(proj >= -tol) or np.all(proj <= tol)):
                    violations += 1
    return CheckResult(7, "sign invariance", violations == 0 and checked > 0,
                       f"{violations} sign changes over {checked} (design, user) pairs")


# -- 8: scaling invariance ----------------------------------------------------

def check_scaling(instances, factors=(1e-3, 1e3), rel_tol: float = 1e-6) -> CheckResult:
    """``instances``: (spec, regions) pairs with feasible robust designs.

    Solved without the internal normalization so the solver really sees the
    scaled data.
    """
    settings = DesignSettings(rescale=False)
    worst, failures = 0.0, 0
    for spec, regions in instances:
        base = design(spec, regions, settings)
        if not base.feasible:
            failures += 1
            continue
        for c in factors:
            scaled_spec = replace(spec, sigma2=spec.sigma2 * c**2)
            scaled = [enumerate_vertices(b) * c for b in regions]
            out = design(scaled_spec, scaled, settings)
            if not out.feasible:
                failures += 1
                continue
            worst = max(worst, abs(out.v - base.v) / abs(base.v))
    ok = failures == 0 and worst <= rel_tol and len(instances) > 0
    return CheckResult(8, "scaling invariance", ok,
                       f"{len(instances)} instances x factors {list(factors)}: max rel change in v "
                       f"{worst:.2e}, {failures} failed solves")


def scaling_instances(cfg: SweepConfig, n: int = 10, k: int = 3, b: int = 8) -> list:
    """First ``n`` trials of cell (k, b) whose robust design is feasible."""
    found, t = [], 0
    while len(found) < n and t < 50 * n:
        rec, det = run_trial(cfg, k, b, t, keep_detail=True)
        if rec.robust_feasible:
            found.append((det.spec, det.boxes))
        t += 1
    return found


# -- 9, 10: determinism and performance ---------------------------------------

def check_determinism(first_csv: str, cfg: SweepConfig, workers=None) -> CheckResult:
    second = trials_csv(run_sweep(cfg, workers=workers).records)
    same = first_csv == second
    return CheckResult(9, "determinism", same,
                       f"rerun trials.csv {'identical' if same else 'differs'} "
                       f"({len(second.splitlines()) - 1} rows)")


def check_performance(cfg: SweepConfig, sweep_seconds: float | None, n_designs: int = 3,
                      design_budget_s: float = 1.0, sweep_budget_s: float = 600.0) -> CheckResult:
    times, cones = [], []
    t = 0
    while len(times) < n_designs:
        _, det = run_trial(cfg, 6, 8, t, keep_detail=True)
        t0 = time.perf_counter()
        out = design(det.spec, det.boxes, cfg.settings)
        times.append(time.perf_counter() - t0)
        cones.append(out.solver_stats["n_cones"])
        t += 1
    ok = max(times) < design_budget_s
    detail = f"K=6,B=8 robust design {max(times):.3f} s max over {n_designs} ({cones[0]} cones)"
    if sweep_seconds is not None:
        ok &= sweep_seconds < sweep_budget_s
        detail += f"; sweep {sweep_seconds:.1f} s"
    return CheckResult(10, "performance envelope", bool(ok), detail)


def default_spec(k: int, rho: float = 0.4) -> DesignSpec:
    return DesignSpec.uniform(k, TARGET_DB, 1e-13, rho)
