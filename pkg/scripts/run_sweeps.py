"""Run the bundled sweep configs and write CSV/SVG files into scripts/results/.

    python scripts/run_sweeps.py            # theory sweeps only (about 3 minutes)
    python scripts/run_sweeps.py --sim      # plus the k=1000 simulations (tens of minutes)
    python scripts/run_sweeps.py --sim --full   # plus k=4000 (hours on one core)
"""

import argparse
import os
import sys
import time
from pathlib import Path

from pcf_relay.experiments import main as cli

HERE = Path(__file__).resolve().parent
THEORY = ["bec_theory.ini", "snr_theory.ini", "relay_grid.ini"]
SIM = ["bec_sim.ini", "snr_sim_k1000.ini"]
FULL = ["snr_sim_k4000.ini"]


def run(name: str, jobs: int) -> int:
    t = time.time()
    rc = cli(["sweep", "--config", str(HERE / "configs" / name), "--jobs", str(jobs)])
    print(f"{name}: exit {rc}, {time.time() - t:.0f}s", flush=True)
    return rc


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sim", action="store_true", help="also run the k=1000 simulations")
    ap.add_argument("--full", action="store_true", help="also run the k=4000 simulation")
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()
    os.chdir(HERE)  # output paths in the configs are relative to scripts/
    names = THEORY + (SIM if args.sim else []) + (FULL if args.full else [])
    sys.exit(max(run(n, args.jobs) for n in names))
