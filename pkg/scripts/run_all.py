"""Run every experiment script and the full study suite into one results tree."""

import argparse
import subprocess
import sys
import time
from pathlib import Path

SCRIPTS = ("perturbation_sweep.py", "pass_metrics.py", "nhpp_limit.py", "horizon_bounds.py", "uq_agreement.py")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scale", type=float, default=1.0, help="study scale (thresholds apply only at 1)")
    args = ap.parse_args()
    here = Path(__file__).parent
    failed = []
    for name in SCRIPTS:
        t0 = time.perf_counter()
        code = subprocess.call([sys.executable, str(here / name), "--out", str(Path(args.out) / Path(name).stem)])
        print(f"[{name}] exit {code} in {time.perf_counter() - t0:.1f}s")
        if code:
            failed.append(name)
    code = subprocess.call([sys.executable, "-m", "agentrel.cli", "study", "all", "--seed", str(args.seed),
                            "--scale", str(args.scale), "--out", str(Path(args.out) / "studies")])
    if code:
        failed.append("study all")
    print("all done" if not failed else f"failed: {', '.join(failed)}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
