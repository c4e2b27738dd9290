"""Matplotlib report figures rendered next to the delimited outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def collision_figure(stats: list, path) -> None:
    """Collision-prone and out-of-range fractions over the height sweep."""
    d = [s.d_max * 100 for s in stats]  # cm
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(d, [s.collision_frac for s in stats], "o-", label="edge/vertex hits")
    ax.plot(d, [s.out_of_range_frac for s in stats], "s--", label="out of range")
    ax.set_xlabel("height band (cm)")
    ax.set_ylabel("fraction of samples")
    ax.set_ylim(bottom=0)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def loss_trace_figure(trace: list, path) -> None:
    """Per-term loss curves over refinement iterations (log scale)."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    names = list(trace[0].values)
    for name in names:
        ax.plot([t.values[name] for t in trace], label=name)
    ax.plot(
        [t.weighted_total() for t in trace],
        "k--",
        linewidth=2,
        label="weighted total",
    )
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def gradient_report_figure(report: dict, path, threshold: float = 1e-5) -> None:
    """Bar chart of max relative gradient errors per loss."""
    names = list(report)
    errs = [max(report[n], 1e-18) for n in names]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(range(len(names)), errs, color="#4878cf")
    ax.axhline(threshold, color="crimson", linestyle="--", label=f"threshold {threshold:g}")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=7)
    ax.set_yscale("log")
    ax.set_ylabel("max relative error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def motion_texture_figure(textures, path) -> None:
    """Preview panel: position / velocity / normal maps plus coverage."""
    fig, axes = plt.subplots(1, 4, figsize=(11, 3))
    panels = [
        ("position", 0.5 * (textures.position + 1.0)),
        ("velocity", np.clip(np.abs(textures.velocity) * 20, 0, 1)),
        ("normal", 0.5 * (textures.normal + 1.0)),
        ("coverage", textures.mask.astype(float)),
    ]
    for ax, (title, img) in zip(axes, panels):
        if img.ndim == 2:
            ax.imshow(img.T, origin="lower", cmap="gray")
        else:
            ax.imshow(np.transpose(img, (1, 0, 2)), origin="lower")
        ax.set_title(title, fontsize=9)
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
