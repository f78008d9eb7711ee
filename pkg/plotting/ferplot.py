"""Render frame-error-rate curves from simulation result files.

Consumes the Monte Carlo harness outputs directly (results CSV plus the
reference-line sidecar JSON); nothing from the simulation package itself is
imported, so this renders standalone.  The figure shows the FER curve on a
log y-axis with the shaded 95% Wilson confidence band, a red dashed
vertical line at the hashing bound and a black dash-dotted vertical line at
the density-evolution reference rate.
"""

from __future__ import annotations

import argparse
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

RESULT_COLUMNS = [
    "p",
    "trials",
    "fail_total",
    "fail_syndrome",
    "fail_logical",
    "fer",
    "wilson_lo",
    "wilson_hi",
]


class SchemaError(ValueError):
    """Input file does not match the harness output contract."""


@dataclass
class PlotConfig:
    csv_paths: list[str]
    refs_path: Optional[str] = None
    out_path: str = "fer.png"
    log_y: bool = True
    x_range: Optional[tuple[float, float]] = None
    y_range: Optional[tuple[float, float]] = None
    title: str = "Frame error rate under depolarizing noise"
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.csv_paths:
            raise SchemaError("at least one results CSV is required")
        for path in self.csv_paths:
            if not Path(path).exists():
                raise SchemaError(f"results file not found: {path}")
        if self.refs_path is not None and not Path(self.refs_path).exists():
            raise SchemaError(f"reference sidecar not found: {self.refs_path}")


def read_results(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != RESULT_COLUMNS:
            raise SchemaError(
                f"{path}: expected columns {RESULT_COLUMNS}, got {reader.fieldnames}"
            )
        rows = []
        for line_no, row in enumerate(reader, start=2):
            try:
                rows.append(
                    {
                        "p": float(row["p"]),
                        "fer": float(row["fer"]),
                        "lo": float(row["wilson_lo"]),
                        "hi": float(row["wilson_hi"]),
                        "trials": int(row["trials"]),
                    }
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(f"{path}:{line_no}: bad row ({exc})") from exc
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    rows.sort(key=lambda r: r["p"])
    return rows


def read_references(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    missing = {"de_reference", "hashing_bound_rate_quarter"} - set(data)
    if missing:
        raise SchemaError(f"{path}: sidecar missing keys {sorted(missing)}")
    return data


def render_fer(config: PlotConfig) -> str:
    """Render the figure described by ``config``; returns the output path."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    floor = 1e-12  # log-scale placeholder for zero-failure points
    for i, path in enumerate(config.csv_paths):
        rows = read_results(path)
        ps = [r["p"] for r in rows]
        fer = [max(r["fer"], floor) for r in rows]
        lo = [max(r["lo"], floor) for r in rows]
        hi = [max(r["hi"], floor) for r in rows]
        label = (
            config.labels[i]
            if i < len(config.labels)
            else Path(path).stem.replace("_", " ")
        )
        (line,) = ax.plot(ps, fer, marker="o", label=label)
        ax.fill_between(ps, lo, hi, alpha=0.25, color=line.get_color(), linewidth=0)

    if config.refs_path is not None:
        refs = read_references(config.refs_path)
        ax.axvline(
            refs["hashing_bound_rate_quarter"],
            color="red",
            linestyle="--",
            label="hashing bound (rate 1/4)",
        )
        ax.axvline(
            refs["de_reference"],
            color="black",
            linestyle="-.",
            label="DE reference (3,8)-regular",
        )

    if config.log_y:
        ax.set_yscale("log")
    if config.x_range:
        ax.set_xlim(*config.x_range)
    if config.y_range:
        ax.set_ylim(*config.y_range)
    ax.set_xlabel("physical error rate p")
    ax.set_ylabel("frame error rate")
    ax.set_title(config.title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    fig.savefig(config.out_path, dpi=150)
    plt.close(fig)
    return config.out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Plot FER curves with CI bands.")
    parser.add_argument("csv", nargs="+", help="results CSV file(s)")
    parser.add_argument("--refs", default=None, help="reference-line sidecar JSON")
    parser.add_argument("--out", default="fer.png")
    parser.add_argument("--label", action="append", default=[])
    parser.add_argument("--title", default="Frame error rate under depolarizing noise")
    parser.add_argument("--linear-y", action="store_true")
    parser.add_argument("--xlim", type=float, nargs=2, default=None)
    parser.add_argument("--ylim", type=float, nargs=2, default=None)
    args = parser.parse_args(argv)
    try:
        config = PlotConfig(
            csv_paths=args.csv,
            refs_path=args.refs,
            out_path=args.out,
            log_y=not args.linear_y,
            x_range=tuple(args.xlim) if args.xlim else None,
            y_range=tuple(args.ylim) if args.ylim else None,
            title=args.title,
            labels=args.label,
        )
        out = render_fer(config)
    except SchemaError as exc:
        print(f"error: {exc}")
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
