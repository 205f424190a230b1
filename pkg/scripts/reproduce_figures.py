"""Full K x B sweep of the reference setup, with CSV tables and SVG figures.

Usage: python scripts/reproduce_figures.py [--trials N] [--out DIR] [--workers W]
"""
import argparse
import logging
import time

from robust_vlc import config
from robust_vlc.cli import print_table
from robust_vlc.experiments import AGG_FIELDS, emit_outputs, run_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("-c", "--config", help="YAML config (defaults otherwise)")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", default="results/figures")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfg = config.load(args.config) if args.config else config.RunConfig()
    cfg = config.with_overrides(cfg, trials=args.trials, seed=args.seed, out=args.out,
                                workers=args.workers)
    scfg = cfg.sweep_config()
    t0 = time.perf_counter()
    res = run_sweep(scfg, workers=cfg.sweep.workers)
    logging.info("%d trials in %.1f s", len(res.records), time.perf_counter() - t0)
    emit_outputs(res.records, res.aggregates, args.out, res.table1, plots=True)
    print_table(res.aggregates, AGG_FIELDS)
    print()
    print_table(res.table1, list(res.table1[0]))


if __name__ == "__main__":
    main()
