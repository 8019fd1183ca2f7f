"""Figure renderers, one per CSV schema.

Each figure kind declares the columns it needs; a mismatch raises
``SchemaError`` naming the missing ones and writes nothing.  Rendering is
deterministic: fixed figure sizes, pinned fonts, no timestamps in either PNG
or SVG output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

FIGURE_KINDS = (
    "stationary_bars",
    "gem_convergence",
    "martingale_trace",
    "duality_residuals",
    "entropy_trend",
)

_REQUIRED_COLUMNS = {
    "stationary_bars": ("state_key", "exact_pi", "pi_product_rule", "pi_corrected"),
    "gem_convergence": ("n", "target_key", "estimate", "stderr", "exact_limit", "gap"),
    "martingale_trace": ("t", "residual_mean", "stderr", "theory_mean_phi"),
    "duality_residuals": ("a_key", "atilde_key", "lhs", "rhs_exact", "rhs_mc", "stderr"),
    "entropy_trend": ("fixture", "kind", "k", "entropy", "normalized", "bound"),
}

_STYLE = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "svg.hashsalt": "cliquedyn-plots",
    "axes.grid": True,
    "grid.alpha": 0.3,
}


class SchemaError(ValueError):
    """Input CSV does not match the figure kind's schema."""


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str
    figure_kind: str
    output_path: str

    def __post_init__(self):
        if self.figure_kind not in FIGURE_KINDS:
            raise ValueError(
                f"unknown figure kind {self.figure_kind!r}; "
                f"choose from {', '.join(FIGURE_KINDS)}"
            )


def _load(spec: FigureSpec) -> list:
    path = Path(spec.input_csv)
    if not path.exists():
        raise SchemaError(f"input {path} does not exist")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        rows = list(reader)
    missing = [c for c in _REQUIRED_COLUMNS[spec.figure_kind] if c not in header]
    if missing:
        raise SchemaError(
            f"{spec.input_csv} is missing columns required by "
            f"{spec.figure_kind}: {', '.join(missing)}"
        )
    if not rows:
        raise SchemaError(f"{spec.input_csv} has no data rows")
    return rows


def _save(fig, spec: FigureSpec):
    out = Path(spec.output_path)
    suffix = out.suffix.lower()
    if suffix not in (".png", ".svg"):
        raise ValueError(f"output must be .png or .svg, got {out.name}")
    # strip every timestamp-like metadata field the writers would add
    metadata = {"Date": None} if suffix == ".svg" else {}
    fig.savefig(out, format=suffix[1:], metadata=metadata)
    plt.close(fig)


def _draw_stationary_bars(rows):
    rows = sorted(rows, key=lambda r: r["state_key"])
    labels = [r["state_key"] for r in rows]
    exact = np.array([float(r["exact_pi"]) for r in rows])
    product = np.array([float(r["pi_product_rule"]) for r in rows])
    corrected = np.array([float(r["pi_corrected"]) for r in rows])
    x = np.arange(len(rows))
    fig, ax = plt.subplots()
    width = 0.27
    ax.bar(x - width, exact, width, label="exact solve", color="#1f77b4")
    ax.bar(x, corrected, width, label="size-corrected law", color="#2ca02c")
    ax.bar(x + width, product, width, label="plain product law", color="#d62728")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylabel("stationary probability")
    ax.set_title("Exact per-graph stationary law vs closed forms")
    ax.legend()
    fig.tight_layout()
    return fig


def _draw_gem_convergence(rows):
    targets = sorted({r["target_key"] for r in rows})
    fig, ax = plt.subplots()
    for i, tk in enumerate(targets):
        sub = sorted((r for r in rows if r["target_key"] == tk), key=lambda r: int(r["n"]))
        ns = np.array([int(r["n"]) for r in sub])
        est = np.array([float(r["estimate"]) for r in sub])
        se = np.array([float(r["stderr"]) for r in sub])
        limit = float(sub[0]["exact_limit"])
        color = f"C{i}"
        ax.errorbar(ns, est, yerr=4 * se, marker="o", capsize=3, color=color, label=tk)
        ax.axhline(limit, color=color, linestyle=":", linewidth=1)
    ax.set_xscale("log")
    ax.set_xlabel("graph size n")
    ax.set_ylabel("expected pattern density")
    ax.set_title("Equilibrium pattern densities vs their limit values")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


def _draw_martingale_trace(rows):
    rows = sorted(rows, key=lambda r: float(r["t"]))
    t = np.array([float(r["t"]) for r in rows])
    mean = np.array([float(r["residual_mean"]) for r in rows])
    se = np.array([float(r["stderr"]) for r in rows])
    theory = np.array([float(r["theory_mean_phi"]) for r in rows])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    ax1.axhline(0.0, color="black", linewidth=1)
    ax1.fill_between(t, -4 * se, 4 * se, alpha=0.25, color="#1f77b4", label="±4 stderr")
    ax1.plot(t, mean, marker="o", color="#d62728", label="residual mean")
    ax1.set_xlabel("t")
    ax1.set_ylabel("martingale residual")
    ax1.set_title("Residual of the pattern-density martingale")
    ax1.legend(fontsize=7)
    ax2.plot(t, theory, color="black", linestyle="--", label="analytic relaxation")
    if "phi_mean" in rows[0]:
        pm = np.array([float(r["phi_mean"]) for r in rows])
        pse = np.array([float(r["phi_stderr"]) for r in rows])
        ax2.errorbar(t, pm, yerr=4 * pse, marker="o", linestyle="none",
                     color="#1f77b4", capsize=3, label="simulated mean")
    ax2.set_xlabel("t")
    ax2.set_ylabel("mean pattern density")
    ax2.set_title("Relaxation of the edge density")
    ax2.legend(fontsize=7)
    fig.tight_layout()
    return fig


def _draw_duality_residuals(rows):
    z = np.array(
        [
            (float(r["rhs_mc"]) - float(r["lhs"])) / max(float(r["stderr"]), 1e-300)
            for r in rows
        ]
    )
    exact_gap = np.array([abs(float(r["rhs_exact"]) - float(r["lhs"])) for r in rows])
    labels = [f'{r["atilde_key"]}→{r["a_key"]}' for r in rows]
    x = np.arange(len(rows))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    ax1.bar(x, z, color="#1f77b4")
    ax1.axhline(4, color="#d62728", linestyle=":")
    ax1.axhline(-4, color="#d62728", linestyle=":")
    ax1.set_xticks(x)
    ax1.set_xticklabels(labels, rotation=60, ha="right", fontsize=6)
    ax1.set_ylabel("Monte Carlo z-score")
    ax1.set_title("Weighted backward estimate vs forward probability")
    ax2.bar(x, np.maximum(exact_gap, 1e-17), color="#2ca02c")
    ax2.set_yscale("log")
    ax2.set_xticks(x)
    ax2.set_xticklabels(labels, rotation=60, ha="right", fontsize=6)
    ax2.set_ylabel("|exact weighted semigroup − forward|")
    ax2.set_title("Exact identity residual (log scale)")
    fig.tight_layout()
    return fig


def _draw_entropy_trend(rows):
    fixtures = sorted({r["fixture"] for r in rows})
    fig, ax = plt.subplots()
    bound_rows = sorted({int(r["k"]) for r in rows})
    for i, fx in enumerate(fixtures):
        sub = sorted((r for r in rows if r["fixture"] == fx), key=lambda r: int(r["k"]))
        ks = np.array([int(r["k"]) for r in sub])
        norm = np.array([float(r["normalized"]) for r in sub])
        style = "--" if sub[0]["kind"] == "constant" else "-"
        ax.plot(ks, norm, marker="o", linestyle=style, label=fx, color=f"C{i}")
    ks = np.array(bound_rows)
    bounds = {
        int(r["k"]): float(r["bound"]) / int(r["k"]) ** 2 for r in rows
    }
    ax.plot(ks, [bounds[k] for k in ks], color="black", linestyle=":",
            label="partition bound / k²")
    ax.set_xlabel("sample size k")
    ax.set_ylabel("entropy / k²")
    ax.set_title("Normalized sampling entropy: block graphons vs constant level")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return fig


_DRAWERS = {
    "stationary_bars": _draw_stationary_bars,
    "gem_convergence": _draw_gem_convergence,
    "martingale_trace": _draw_martingale_trace,
    "duality_residuals": _draw_duality_residuals,
    "entropy_trend": _draw_entropy_trend,
}


def render(spec: FigureSpec) -> str:
    """Render the figure for the spec; returns the output path.

    Raises SchemaError (and writes nothing) when the CSV is missing columns
    or has no data rows.
    """
    rows = _load(spec)
    with matplotlib.rc_context(_STYLE):
        fig = _DRAWERS[spec.figure_kind](rows)
        _save(fig, spec)
    return spec.output_path
