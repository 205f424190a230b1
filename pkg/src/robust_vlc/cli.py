"""Command-line entry point: ``robust-vlc {calibrate,design,sweep,verify}``.

Exit codes: 0 on completion (an infeasible design is a valid answer),
1 when ``verify`` finds a failing check, 2 for configuration or input
validation errors, 3 for output I/O errors, 4 for numerical failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import verify
from .channel import gain_matrix, load_channel_csv
from .experiments import AGG_FIELDS, SweepConfig, emit_outputs, run_sweep, trials_csv
from .metrics import evaluate
from .precoder import DesignStatus, design
from .quantizer import CalibrationError, centroid_linear, quantize_array
from .region import box_from_quantized
from .scenario import make_scenario

log = logging.getLogger("robust_vlc")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_config(args) -> config_mod.RunConfig:
    try:
        cfg = config_mod.load(args.config) if args.config else config_mod.RunConfig()
        return config_mod.with_overrides(
            cfg, seed=args.seed, out=args.out, trials=getattr(args, "trials", None),
            k=getattr(args, "k", None), bits=getattr(args, "bits", None),
            draws=getattr(args, "draws", None), workers=getattr(args, "workers", None),
            channel_file=getattr(args, "channel_file", None))
    except OSError as exc:
        raise _Fail(EXIT_CONFIG, f"cannot read config: {exc}") from exc
    except config_mod.ConfigError as exc:
        raise _Fail(EXIT_CONFIG, f"invalid config: {exc}") from exc


def _out_dir(cfg) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.yaml").write_text(config_mod.dump(cfg))
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write to {out}: {exc}") from exc
    return out


def _dynamic_range(cfg):
    try:
        return cfg.dynamic_range()
    except CalibrationError as exc:
        raise _Fail(EXIT_CONFIG, f"calibration failed: {exc}") from exc


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write {path}: {exc}") from exc


# -- calibrate ------------------------------------------------------------------

def cmd_calibrate(args) -> int:
    cfg = _load_config(args)
    if args.seed is not None:
        # here --seed picks the calibration stream
        data = cfg.to_dict()
        data["quantizer"]["calibration_seed"] = args.seed
        cfg = config_mod.from_dict(data)
    out = _out_dir(cfg)
    dr = _dynamic_range(cfg)
    _write(out / "calibration.json", json.dumps(asdict(dr), indent=2) + "\n")
    print(f"dynamic range [{dr.min_db:.4f}, {dr.max_db:.4f}] dB from {dr.draws} draws (seed {dr.seed})")
    print(f"wrote {out / 'calibration.json'}")
    return EXIT_OK


# -- design ---------------------------------------------------------------------

def _outcome_dict(out, report) -> dict:
    d = {"status": out.status.value, "solver": out.solver_stats}
    if out.feasible:
        d.update({
            "v": out.v,
            "W": out.W.tolist(),
            "per_user_snir_db": report.per_user_snir_db.tolist(),
            "worst_user_snir_db": report.worst_user_snir_db,
            "worst_corner_snir_db": report.worst_corner_snir_db,
            "per_led_peak_power_W": report.per_led_peak_power_W.tolist(),
        })
    return d


def _print_outcome(name, out, report) -> None:
    print(f"{name}: {out.status.value}")
    if out.feasible:
        print(f"  headroom v            {out.v:.6g}")
        print(f"  per-user SNIR (dB)    {np.array2string(report.per_user_snir_db, precision=3)}")
        print(f"  worst-corner SNIR     {report.worst_corner_snir_db:.4f} dB")
        print(f"  peak LED power (W)    {np.array2string(report.per_led_peak_power_W, precision=3)}")
    elif out.status == DesignStatus.INFEASIBLE:
        st = out.solver_stats
        print(f"  certified infeasible after {st.get('iterations')} iterations "
              f"(certificate residual {st.get('certificate_residual', float('nan')):.2e})")
    else:
        st = out.solver_stats
        print(f"  solver {st.get('solver_status')} after {st.get('iterations')} iterations; "
              f"residuals primal {st.get('residual_primal', float('nan')):.2e} "
              f"dual {st.get('residual_dual', float('nan')):.2e} gap {st.get('residual_gap', float('nan')):.2e}")


def cmd_design(args) -> int:
    cfg = _load_config(args)
    params = cfg.optical_params()
    if cfg.scenario.channel_file:
        try:
            H = load_channel_csv(cfg.scenario.channel_file)
        except OSError as exc:
            raise _Fail(EXIT_CONFIG, f"cannot read channel file: {exc}") from exc
        except ValueError as exc:
            raise _Fail(EXIT_CONFIG, f"invalid channel file: {exc}") from exc
        scen = None
    else:
        scen = make_scenario(cfg.room, cfg.led_positions(), cfg.scenario.k, cfg.seed)
        H = gain_matrix(scen.led_positions, scen.user_positions, params)
    out = _out_dir(cfg)
    q = _dynamic_range(cfg).quantizer(cfg.scenario.bits)
    idx = quantize_array(H, q)
    boxes = [box_from_quantized(r, q, floor_zero=cfg.quantizer.floor_zero) for r in idx]
    cent = centroid_linear(idx, q, floor_zero=cfg.quantizer.floor_zero)
    spec = cfg.design.spec(H.shape[0], params.responsivity_rho_A_per_W)
    settings = cfg.design_settings()

    print(f"K={H.shape[0]} users, L={H.shape[1]} LEDs, B={cfg.scenario.bits} bits, "
          f"target {cfg.design.target_snir_db} dB")
    result = {"K": H.shape[0], "L": H.shape[1], "bits": cfg.scenario.bits,
              "H": H.tolist(), "indices": idx.tolist(),
              "scenario": scen.to_dict() if scen is not None else None}
    numeric = False
    for name, channels in (("robust", boxes), ("nonrobust", cent)):
        try:
            res = design(spec, channels, settings)
        except ValueError as exc:
            raise _Fail(EXIT_CONFIG, f"{name} design rejected its input: {exc}") from exc
        report = evaluate(res.W, H, boxes, spec) if res.feasible else None
        _print_outcome(name, res, report)
        result[name] = _outcome_dict(res, report)
        numeric |= res.status == DesignStatus.NUMERICAL_FAILURE
    _write(out / "design.json", json.dumps(result, indent=2) + "\n")
    print(f"wrote {out / 'design.json'}")
    return EXIT_NUMERIC if numeric else EXIT_OK


# -- sweep ----------------------------------------------------------------------

def _fmt_cell(v) -> str:
    if v is None:
        return "-"
    return f"{v:.2f}" if isinstance(v, float) else str(v)


def print_table(rows, columns) -> None:
    widths = [max([len(c)] + [len(_fmt_cell(r[c])) for r in rows]) for c in columns]
    print("  ".join(c.rjust(w) for c, w in zip(columns, widths)))
    for r in rows:
        print("  ".join(_fmt_cell(r[c]).rjust(w) for c, w in zip(columns, widths)))


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(cfg)
    scfg = cfg.sweep_config(_dynamic_range(cfg))
    t0 = time.perf_counter()
    res = run_sweep(scfg, workers=cfg.sweep.workers)
    log.info("sweep of %d trials took %.1f s", len(res.records), time.perf_counter() - t0)
    try:
        emit_outputs(res.records, res.aggregates, out, res.table1, plots=args.plots or cfg.sweep.plots)
    except OSError as exc:
        raise _Fail(EXIT_IO, str(exc)) from exc
    print_table(res.aggregates, AGG_FIELDS)
    print()
    print_table(res.table1, list(res.table1[0]) if res.table1 else [])
    print(f"wrote outputs to {out}")
    return EXIT_OK


# -- verify ---------------------------------------------------------------------

def run_checks(scfg: SweepConfig, workers=None, echo=print) -> list:
    """All acceptance checks on one sweep of ``scfg``."""
    results = [verify.check_solver_oracle()]
    echo(results[-1].line())
    t0 = time.perf_counter()
    sweep = run_sweep(scfg, workers=workers, keep_details=True)
    elapsed = time.perf_counter() - t0
    details = sweep.details
    for check in (
        lambda: verify.check_robust_guarantee(details),
        lambda: verify.check_worst_corner_binding(details),
        lambda: verify.check_degradation(sweep.aggregates, sweep.table1),
        lambda: verify.check_monotonicity(sweep.aggregates),
        lambda: verify.check_power_envelope(details),
        lambda: verify.check_sign_invariance(details),
        lambda: verify.check_scaling(verify.scaling_instances(scfg)),
        lambda: verify.check_determinism(trials_csv(sweep.records), scfg, workers),
        lambda: verify.check_performance(scfg, elapsed),
    ):
        results.append(check())
        echo(results[-1].line())
    return results


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    data = cfg.to_dict()
    data["sweep"]["k_values"] = args.k or [2, 3, 4]
    data["sweep"]["b_values"] = args.bits or [4, 8, 16]
    data["sweep"]["trials"] = args.trials or 200
    cfg = config_mod.from_dict(data)
    scfg = cfg.sweep_config(_dynamic_range(cfg))
    results = run_checks(scfg, cfg.sweep.workers)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robust-vlc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-c", "--config", help="YAML config file (defaults used if omitted)")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--draws", type=int, help="calibration draws")
        sp.add_argument("--workers", type=int, help="parallel worker processes")
        return sp

    common(sub.add_parser("calibrate", help="estimate the quantizer dynamic range "
                                            "(--seed sets the calibration seed)"))
    d = common(sub.add_parser("design", help="design robust and non-robust precoders for one scenario"))
    d.add_argument("--k", type=int, help="number of users")
    d.add_argument("--bits", type=int, help="quantizer bits per channel gain")
    d.add_argument("--channel-file", help="CSV with K rows and L columns of nonnegative gains")
    s = common(sub.add_parser("sweep", help="Monte Carlo sweep over K and B"))
    s.add_argument("--k", type=int, nargs="+", help="user counts")
    s.add_argument("--bits", type=int, nargs="+", help="quantizer bit counts")
    s.add_argument("--trials", type=int, help="trials per (K, B) cell")
    s.add_argument("--plots", action="store_true", help="also write SVG figures")
    v = common(sub.add_parser("verify", help="run the acceptance checks"))
    v.add_argument("--k", type=int, nargs="+", help="user counts (default 2 3 4)")
    v.add_argument("--bits", type=int, nargs="+", help="bit counts (default 4 8 16)")
    v.add_argument("--trials", type=int, help="trials per cell (default 200)")
    return p


COMMANDS = {"calibrate": cmd_calibrate, "design": cmd_design, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except np.linalg.LinAlgError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
