"""Desk-scale reproduction of the three experiments on synthetic 23-node traffic.

Writes into OUT_DIR (default ``desk_run/``):
    tm.csv                  309 slots of 529-wide traffic vectors
    compare.csv             every method on the 263/46 split
    sweep_hidden.csv        single-layer LSTM over hidden sizes
    sweep_depth.csv         stacked LSTMs over depth
Each CSV gets a ``.manifest.json`` sidecar, so any file can be rebuilt with
``tmforecast replay``.

Usage: python scripts/run_desk_experiment.py [OUT_DIR] [--quick]

``--quick`` shrinks epochs and sweep values for a smoke run of about half a
minute. The full run trains 9 LSTMs of up to 300 cells and takes about 8
minutes on one core.
"""

import sys
import time
from pathlib import Path

from tmforecast.cli import main


def run(*argv: str) -> None:
    t0 = time.perf_counter()
    code = main(list(argv))
    print(f"  ({time.perf_counter() - t0:.0f} s, exit {code})")
    if code not in (0, 1):
        sys.exit(code)


def desk(out_dir: Path, quick: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    data = str(out_dir / "tm.csv")
    epochs = "5" if quick else "50"
    hidden = "50,100" if quick else "50,100,200,300"
    depths = "1,2" if quick else "1,2,3"
    common = ["--data", data, "--window", "10", "--train-len", "263", "--epochs", epochs, "--seed", "0"]

    print("generating traffic")
    run("synth", "--nodes", "23", "--slots", "309", "--seed", "0", "--out", data)
    print("method comparison")
    run("compare", *common, "--hidden", "100", "--out", str(out_dir / "compare.csv"))
    print("hidden-size sweep")
    run("sweep", *common, "--axis", "hidden", "--values", hidden, "--out", str(out_dir / "sweep_hidden.csv"))
    print("depth sweep")
    run("sweep", *common, "--axis", "depth", "--values", depths, "--width", "100",
        "--out", str(out_dir / "sweep_depth.csv"))


if __name__ == "__main__":
    args = [a for a in sys.argv[1:] if a != "--quick"]
    desk(Path(args[0] if args else "desk_run"), "--quick" in sys.argv)
