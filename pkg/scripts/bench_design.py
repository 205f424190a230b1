"""Time single robust designs at K users, B bits on the reference setup.

Usage: python scripts/bench_design.py [--k 6] [--bits 8] [--n 10]
"""
import argparse
import time

import numpy as np

from robust_vlc import config
from robust_vlc.experiments import run_trial
from robust_vlc.precoder import design


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--bits", type=int, default=8)
    p.add_argument("--n", type=int, default=10)
    args = p.parse_args()

    scfg = config.RunConfig().sweep_config()
    times = []
    for t in range(args.n):
        _, det = run_trial(scfg, args.k, args.bits, t, keep_detail=True)
        t0 = time.perf_counter()
        out = design(det.spec, det.boxes, scfg.settings)
        times.append(time.perf_counter() - t0)
        st = out.solver_stats
        print(f"trial {t}: {out.status.value:10s} {times[-1]:.3f} s, "
              f"{st['iterations']} iterations, {st['n_cones']} cones")
    print(f"median {np.median(times):.3f} s, max {max(times):.3f} s")


if __name__ == "__main__":
    main()
