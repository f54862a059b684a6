"""Matplotlib rendering of experiment curve data to files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _by_variant(rows):
    grouped: dict[str, list] = {}
    for row in rows:
        grouped.setdefault(row.variant, []).append(row)
    for variant_rows in grouped.values():
        variant_rows.sort(key=lambda r: r.k)
    return grouped


def render_bleu_curve(rows, path) -> Path:
    """BLEU (x100) against parallel data size, one line per variant."""
    grouped = _by_variant(rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    for variant, variant_rows in sorted(grouped.items()):
        ks = [r.k for r in variant_rows]
        ax.plot(ks, [r.bleu4 * 100 for r in variant_rows], marker="o", label=variant)
    ax.set_xscale("log")
    ax.set_xlabel("parallel training samples")
    ax.set_ylabel("BLEU-4")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_tagger_curve(rows, path) -> Path:
    """Key-fact tagger F1 (x100) against parallel data size."""
    grouped = _by_variant([r for r in rows if r.tagger_f1 is not None])
    fig, ax = plt.subplots(figsize=(6, 4))
    for variant, variant_rows in sorted(grouped.items()):
        ks = [r.k for r in variant_rows]
        ax.plot(ks, [r.tagger_f1 * 100 for r in variant_rows], marker="s", label=variant)
    ax.set_xscale("log")
    ax.set_xlabel("parallel training samples")
    ax.set_ylabel("tagger F1")
    ax.set_ylim(0, 105)
    if grouped:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_experiment_figures(rows, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    produced = [
        render_bleu_curve(rows, out_dir / "bleu_vs_parallel_size.png"),
        render_tagger_curve(rows, out_dir / "tagger_f1_vs_parallel_size.png"),
    ]
    return produced
