"""Crossing and comparison figures from ghzloss CSV/JSON outputs.

Two figure kinds:

  crossing     per-distance logical-loss curves over eta with Wilson bands
               and a vertical marker at the fitted threshold
  comparison   thresholds against resource-state photon count

Rendering is read-only and deterministic: a fixed style, no timestamps on
the canvas, and stripped PNG metadata, so identical inputs give identical
bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

EXPECTED_HEADER = [
    "encoding", "variant", "model", "d", "eta", "samples",
    "failures", "rate", "ci_low", "ci_high", "seed",
]

_SAVE_KWARGS = {"dpi": 130, "metadata": {"Software": None}}


class MalformedInputError(ValueError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


@dataclass
class RatePoint:
    encoding: str
    model: str
    d: int
    eta: float
    samples: int
    rate: float
    ci_low: float
    ci_high: float


@dataclass
class RenderResult:
    output: Path
    kind: str
    marked_threshold: float | None = None
    encodings_in_order: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def photons_per_state(encoding: str) -> int:
    """Photon count of a ``qpc:n,m[,variant]`` resource state (2 * 2 * n * m)."""
    body = encoding.split(":", 1)
    if len(body) != 2:
        raise ValueError(f"unrecognised encoding label {encoding!r}")
    parts = body[1].split(",")
    try:
        n, m = int(parts[0]), int(parts[1])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"unrecognised encoding label {encoding!r}") from exc
    return 4 * n * m


def read_rates_csv(path: str | Path) -> list[RatePoint]:
    """Parse a rate CSV; raises MalformedInputError with the line number."""
    path = Path(path)
    points: list[RatePoint] = []
    header_seen = False
    with path.open() as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = next(csv.reader([line]))
            if fields == EXPECTED_HEADER:
                header_seen = True
                continue
            if not header_seen:
                raise MalformedInputError(path, lineno, "data before CSV header")
            if len(fields) != len(EXPECTED_HEADER):
                raise MalformedInputError(
                    path, lineno, f"expected {len(EXPECTED_HEADER)} fields, got {len(fields)}"
                )
            try:
                points.append(
                    RatePoint(
                        encoding=fields[0],
                        model=fields[2],
                        d=int(fields[3]),
                        eta=float(fields[4]),
                        samples=int(fields[5]),
                        rate=float(fields[7]),
                        ci_low=float(fields[8]),
                        ci_high=float(fields[9]),
                    )
                )
            except ValueError as exc:
                raise MalformedInputError(path, lineno, str(exc)) from exc
    if not header_seen:
        raise MalformedInputError(path, 1, "missing CSV header")
    return points


def read_threshold_docs(paths: list[str | Path]) -> list[dict]:
    """Threshold JSON documents; each file holds one document or a list."""
    docs: list[dict] = []
    for path in paths:
        body = json.loads(Path(path).read_text())
        docs.extend(body if isinstance(body, list) else [body])
    for doc in docs:
        if "encoding" not in doc or "threshold" not in doc:
            raise ValueError(f"not a threshold document: keys {sorted(doc)}")
    return docs


def render_crossing(
    csv_paths: list[str | Path],
    out_path: str | Path,
    threshold_json: list[str | Path] | None = None,
    encoding: str | None = None,
    model: str | None = None,
) -> RenderResult:
    """Rate-vs-eta curves per distance with bands and a threshold marker."""
    points: list[RatePoint] = []
    for p in csv_paths:
        points.extend(read_rates_csv(p))
    result = RenderResult(output=Path(out_path), kind="crossing")
    if points:
        encoding = encoding or points[0].encoding
        model = model or points[0].model
        points = [p for p in points if p.encoding == encoding and p.model == model]
    threshold = None
    if threshold_json:
        docs = read_threshold_docs(threshold_json)
        if encoding is not None:
            docs = [d for d in docs if d["encoding"] == encoding and d.get("model", model) == model]
        if docs:
            threshold = float(docs[0]["threshold"])

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    if not points:
        result.warnings.append("no data rows; rendering empty axes")
        ax.set_title("logical loss vs eta (no data)")
    else:
        ax.set_title(f"{encoding} ({model})")
        for d in sorted({p.d for p in points}):
            series = sorted((p for p in points if p.d == d), key=lambda p: p.eta)
            etas = np.array([p.eta for p in series])
            rates = np.array([p.rate for p in series])
            lo = np.array([p.ci_low for p in series])
            hi = np.array([p.ci_high for p in series])
            (line,) = ax.plot(etas, rates, marker="o", markersize=3, label=f"d = {d}")
            ax.fill_between(etas, lo, hi, alpha=0.2, color=line.get_color(), linewidth=0)
    if threshold is not None:
        ax.axvline(threshold, color="0.3", linestyle="--", linewidth=1.0)
        ax.annotate(
            f"threshold {threshold:.4f}",
            xy=(threshold, 0.02),
            xycoords=("data", "axes fraction"),
            rotation=90,
            fontsize=8,
            va="bottom",
            ha="right",
        )
        result.marked_threshold = threshold
    ax.set_xlabel("loss per photon")
    ax.set_ylabel("logical loss rate")
    if points:
        ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(result.output, **_SAVE_KWARGS)
    plt.close(fig)
    return result


def render_comparison(
    json_paths: list[str | Path], out_path: str | Path
) -> RenderResult:
    """Thresholds against photon count, ordered by resource-state size."""
    docs = read_threshold_docs(json_paths)
    rows = sorted(
        (
            (photons_per_state(doc["encoding"]), doc["encoding"], doc)
            for doc in docs
        ),
        key=lambda item: item[0],
    )
    result = RenderResult(
        output=Path(out_path),
        kind="comparison",
        encodings_in_order=[enc for _n, enc, _d in rows],
    )
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    if not rows:
        result.warnings.append("no threshold documents; rendering empty axes")
    else:
        photons = [n for n, _e, _d in rows]
        thresholds = [100.0 * float(d["threshold"]) for _n, _e, d in rows]
        errs = np.zeros((2, len(rows)))
        for i, (_n, _e, doc) in enumerate(rows):
            ci = doc.get("uncertainty", {}).get("bootstrap_ci")
            if ci:
                errs[0, i] = max(0.0, thresholds[i] - 100.0 * ci[0])
                errs[1, i] = max(0.0, 100.0 * ci[1] - thresholds[i])
        ax.errorbar(
            photons, thresholds, yerr=errs, fmt="s", capsize=3, color="tab:blue"
        )
        for n, enc, doc in rows:
            ax.annotate(
                enc,
                xy=(n, 100.0 * float(doc["threshold"])),
                xytext=(4, 6),
                textcoords="offset points",
                fontsize=7,
            )
        ax.set_xscale("log", base=2)
        ax.set_xticks(photons)
        ax.get_xaxis().set_major_formatter(matplotlib.ticker.ScalarFormatter())
    ax.set_xlabel("photons per resource state")
    ax.set_ylabel("loss threshold (%)")
    ax.set_title("single-photon loss thresholds")
    fig.tight_layout()
    fig.savefig(result.output, **_SAVE_KWARGS)
    plt.close(fig)
    return result


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="render figures from ghzloss result files"
    )
    parser.add_argument("--kind", choices=["crossing", "comparison"], required=True)
    parser.add_argument(
        "--in", dest="inputs", nargs="+", required=True,
        help="input files: rate CSVs (crossing) or threshold JSONs (comparison)",
    )
    parser.add_argument("--threshold-json", nargs="*", default=None)
    parser.add_argument("--encoding", default=None)
    parser.add_argument("--model", default=None)
    parser.add_argument("--out", required=True)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.kind == "crossing":
            result = render_crossing(
                args.inputs,
                args.out,
                threshold_json=args.threshold_json,
                encoding=args.encoding,
                model=args.model,
            )
        else:
            result = render_comparison(args.inputs, args.out)
    except (MalformedInputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for message in result.warnings:
        print(f"warning: {message}", file=sys.stderr)
    print(f"wrote {result.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
