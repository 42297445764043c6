"""Render simulator CSV outputs as the standard figure set.

Reads only the documented CSV contracts:

  sweep CSVs   decoder,N,K,profile,kind,tau,L,lambda,eps_tol,ebn0_db,
               frames,frame_errors,fer,avg_flops,avg_sorted_paths,
               premature_terminations,wall_seconds
  per-step CSV level,avg_sorted_paths
  ler CSV      level,actual_ler,predicted_ler

fer/flops/sorted plot one series per (decoder, L, lambda) group over
Eb/N0; per_step and ler plot per input file over the level index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

FIGURE_KINDS = ("fer", "flops", "sorted", "per_step", "ler")

_METRIC_COLUMN = {"fer": "fer", "flops": "avg_flops", "sorted": "avg_sorted_paths"}
_Y_LABEL = {
    "fer": "frame error rate",
    "flops": "average floating-point operations",
    "sorted": "average sorted paths",
    "per_step": "average sorted paths",
    "ler": "list error rate",
}
SWEEP_COLUMNS = [
    "decoder", "N", "K", "profile", "kind", "tau", "L", "lambda", "eps_tol",
    "ebn0_db", "frames", "frame_errors", "fer", "avg_flops",
    "avg_sorted_paths", "premature_terminations", "wall_seconds",
]

_MARKERS = ["o", "s", "^", "v", "d", "x", "*", "+"]

_DECODER_LABEL = {
    "sc": "SC",
    "psc": "PSC",
    "scl": "SCL",
    "pscl": "PSCL",
    "lc_pscl": "LC-PSCL",
    "lc_prune_only": "pruning-only PSCL",
    "lc_select_only": "selection-only PSCL",
}


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    figure_kind: str
    csv_paths: tuple[str, ...]
    out_path: str
    group_keys: tuple[str, ...] = ("decoder", "L", "lambda")

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise RenderError(f"unknown figure kind {self.figure_kind!r}")
        if not self.csv_paths:
            raise RenderError("at least one input CSV is required")


def _series_label(key, group: pd.DataFrame) -> str:
    decoder = str(key[0])
    name = _DECODER_LABEL.get(decoder, decoder.upper())
    ell = key[1] if len(key) > 1 else ""
    tau = ""
    if "tau" in group.columns:
        taus = {t for t in group["tau"].astype(str) if t and t != "nan"}
        if len(taus) == 1:
            tau = taus.pop().removesuffix(".0")
    args = [str(a).removesuffix(".0") for a in (ell, tau) if str(a) not in ("", "nan")]
    label = name + (f"({','.join(args)})" if args else "")
    lam = str(key[2]) if len(key) > 2 else ""
    if lam not in ("", "nan"):
        label += f" λ={lam}"
    return label


def _load_sweep(paths, kind) -> pd.DataFrame:
    frames = []
    for path in paths:
        df = pd.read_csv(path, dtype=str)
        missing = [c for c in SWEEP_COLUMNS if c not in df.columns]
        if missing:
            raise RenderError(f"{path}: missing columns {missing}")
        frames.append(df)
    data = pd.concat(frames, ignore_index=True)
    data["ebn0_db"] = data["ebn0_db"].astype(float)
    data[_METRIC_COLUMN[kind]] = data[_METRIC_COLUMN[kind]].astype(float)
    return data


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=120)
    ax.grid(True, which="both", alpha=0.35)
    return fig, ax


def render(spec: FigureSpec) -> str:
    """Render the figure and return the output path; one series per
    grouping key. Deterministic: fixed style, no timestamps embedded."""
    kind = spec.figure_kind
    if kind in _METRIC_COLUMN:
        data = _load_sweep(spec.csv_paths, kind)
        ycol = _METRIC_COLUMN[kind]
        fig, ax = _new_axes()
        keys = [k for k in spec.group_keys if k in data.columns]
        grouped = data.groupby(keys, dropna=False, sort=True)
        if not len(grouped):
            plt.close(fig)
            raise RenderError("empty selection: no rows to plot")
        for i, (key, group) in enumerate(grouped):
            key = key if isinstance(key, tuple) else (key,)
            group = group.sort_values("ebn0_db")
            ax.semilogy(
                group["ebn0_db"],
                group[ycol],
                marker=_MARKERS[i % len(_MARKERS)],
                label=_series_label(key, group),
            )
        ax.set_xlabel("Eb/N0 (dB)")
        n_series = len(grouped)
    elif kind == "per_step":
        fig, ax = _new_axes()
        n_series = 0
        for i, path in enumerate(spec.csv_paths):
            df = pd.read_csv(path)
            if not {"level", "avg_sorted_paths"} <= set(df.columns):
                plt.close(fig)
                raise RenderError(f"{path}: missing per-step columns")
            if df.empty:
                continue
            ax.semilogy(
                df["level"],
                df["avg_sorted_paths"],
                marker=_MARKERS[i % len(_MARKERS)],
                markersize=3,
                label=Path(path).stem,
            )
            n_series += 1
        if n_series == 0:
            plt.close(fig)
            raise RenderError("empty selection: no rows to plot")
        ax.set_xlabel("decoding step")
    else:  # ler
        fig, ax = _new_axes()
        n_series = 0
        for i, path in enumerate(spec.csv_paths):
            df = pd.read_csv(path)
            if not {"level", "actual_ler", "predicted_ler"} <= set(df.columns):
                plt.close(fig)
                raise RenderError(f"{path}: missing ler columns")
            if df.empty:
                continue
            stem = Path(path).stem
            ax.semilogy(df["level"], df["actual_ler"], marker="o", markersize=3,
                        label=f"{stem} actual")
            ax.semilogy(df["level"], df["predicted_ler"], marker="s", markersize=3,
                        linestyle="--", label=f"{stem} predicted")
            n_series += 2
        if n_series == 0:
            plt.close(fig)
            raise RenderError("empty selection: no rows to plot")
        ax.set_xlabel("decoding step")

    ax.set_ylabel(_Y_LABEL[kind])
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, metadata={"Software": "polarlab-plots"})
    plt.close(fig)
    return spec.out_path


def series_count(spec: FigureSpec) -> int:
    """Number of series render() would draw (for smoke checks)."""
    kind = spec.figure_kind
    if kind in _METRIC_COLUMN:
        data = _load_sweep(spec.csv_paths, kind)
        keys = [k for k in spec.group_keys if k in data.columns]
        return len(data.groupby(keys, dropna=False))
    if kind == "per_step":
        return sum(1 for p in spec.csv_paths if len(pd.read_csv(p)))
    return sum(2 for p in spec.csv_paths if len(pd.read_csv(p)))
