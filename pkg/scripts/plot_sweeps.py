"""Render sweep/compare CSVs as bar or line charts (needs matplotlib, not a package dependency).

Usage: python scripts/plot_sweeps.py RESULT.csv [RESULT.csv ...]
Writes RESULT.png next to each input.
"""

import csv
import sys
from pathlib import Path


def plot(path: Path) -> Path | None:
    """Chart one result CSV; returns None for files that are not sweep results."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "axis" not in rows[0]:
        return None
    axis = rows[0]["axis"]
    labels = [r["value"] for r in rows]
    mse = [float(r["mse_normalized"]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    if axis == "method":
        ax.bar(labels, mse)
        ax.tick_params(axis="x", rotation=30)
    else:
        ax.plot([int(v) for v in labels], mse, marker="o")
        ax.set_xlabel({"hidden_units": "hidden units", "hidden_layers": "hidden layers"}.get(axis, axis))
    ax.set_ylabel("test MSE (normalized)")
    fig.tight_layout()
    out = path.with_suffix(".png")
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    for name in sys.argv[1:]:
        out = plot(Path(name))
        print(out if out else f"skipped {name}: not a sweep/compare CSV")
