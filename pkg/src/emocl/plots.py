"""Figure rendering for run directories (headless, file output only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from emocl.training import TrainLog


def plot_training_curves(log: TrainLog, out_path: str, title: str = "") -> str:
    """Loss, off-diagonal target mass, and data entropy against the step axis."""
    steps = [r.step for r in log.records]
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    axes[0].plot(steps, [r.loss for r in log.records], lw=0.8)
    axes[0].set_ylabel("batch loss")
    axes[1].plot(steps, [r.offdiag_mass for r in log.records], lw=0.8, color="tab:orange")
    axes[1].set_ylabel("off-diag target mass")
    axes[1].set_yscale("symlog", linthresh=1e-6)
    axes[2].plot(steps, [r.entropy for r in log.records], lw=0.8, color="tab:green")
    axes[2].set_ylabel("subset entropy (nats)")
    axes[2].set_xlabel("optimizer step")
    for stage_change in _stage_changes(log):
        for ax in axes:
            ax.axvline(stage_change, color="grey", lw=0.5, ls="--", alpha=0.5)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def _stage_changes(log: TrainLog) -> list[int]:
    changes = []
    prev = None
    for rec in log.records:
        if prev is not None and rec.babystep != prev:
            changes.append(rec.step)
        prev = rec.babystep
    return changes


def plot_entropy_curve(entropies: list[float], out_path: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(entropies) + 1), entropies, marker="o")
    ax.set_xlabel("baby step")
    ax.set_ylabel("cumulative subset entropy (nats)")
    ax.set_xticks(range(1, len(entropies) + 1))
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_strategy_comparison(
    table: dict[str, tuple[float, float]], out_path: str, metric: str = "weighted-F1"
) -> str:
    """Bar chart of mean +- sd per strategy."""
    names = list(table)
    means = [table[n][0] for n in names]
    sds = [table[n][1] for n in names]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(names, means, yerr=sds, capsize=4, color="tab:blue", alpha=0.8)
    ax.set_ylabel(f"test {metric}")
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
