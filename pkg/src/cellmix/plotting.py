"""Matplotlib figures written next to the CSV/TBF outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 120,
}


def plot_run_report(report, path, title=None):
    """Loss against threshold on top, lesson index and patch size below."""
    with plt.rc_context(STYLE):
        _plot_run_report(report, path, title)


def _plot_run_report(report, path, title):
    steps = [r.step for r in report.records]
    losses = [np.nan if r.loss is None else r.loss for r in report.records]
    fig, (ax_loss, ax_k) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax_loss.plot(steps, losses, lw=1, color="0.2", label="loss")
    ax_loss.axhline(report.threshold, color="tab:red", ls="--", lw=1, label=f"T = {report.threshold:g}")
    ax_loss.set_ylabel("loss")
    ax_loss.legend(frameon=False, loc="upper right")
    ax_k.step(steps, [r.k for r in report.records], where="post", color="tab:blue")
    ax_k.set_ylabel("lesson k")
    ax_k.set_xlabel("step")
    ax_p = ax_k.twinx()
    ax_p.step(steps, [r.patch_size for r in report.records], where="post", color="tab:orange", alpha=0.6)
    ax_p.set_ylabel("patch size", color="tab:orange")
    ax_p.invert_yaxis()
    fig.suptitle(title or f"curriculum ({report.policy})")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _display(img: np.ndarray) -> np.ndarray:
    img = np.clip(img, 0.0, 1.0)
    if img.shape[0] == 1:
        return img[0]
    return np.moveaxis(img[:3], 0, -1)


def plot_augmented(before, after, provenance, patch_size, path, max_samples=8):
    """Original and augmented samples side by side with the grid and donor ids overlaid."""
    with plt.rc_context(STYLE):
        _plot_augmented(before, after, provenance, patch_size, path, max_samples)


def _plot_augmented(before, after, provenance, patch_size, path, max_samples):
    B = min(before.shape[0], max_samples)
    H, W = before.shape[2:]
    cols = W // patch_size
    fig, axes = plt.subplots(2, B, figsize=(1.8 * B, 3.8), squeeze=False)
    cmap = "gray" if before.shape[1] == 1 else None
    for s in range(B):
        axes[0, s].imshow(_display(before[s]), cmap=cmap, vmin=0, vmax=1)
        axes[0, s].set_title(f"input {s}")
        axes[1, s].imshow(_display(after[s]), cmap=cmap, vmin=0, vmax=1)
        axes[1, s].set_title(f"output {s}")
        for ax in axes[:, s]:
            ax.set_xticks(np.arange(0, W + 1, patch_size) - 0.5, labels=[])
            ax.set_yticks(np.arange(0, H + 1, patch_size) - 0.5, labels=[])
            ax.grid(color="white", lw=0.3, alpha=0.5)
            ax.tick_params(length=0)
        if provenance is not None and provenance.shape[1] <= 64:
            for i, src in enumerate(provenance[s]):
                if src != s:
                    r, c = divmod(i, cols)
                    axes[1, s].text(
                        c * patch_size + patch_size / 2, r * patch_size + patch_size / 2, str(int(src)),
                        ha="center", va="center", fontsize=6, color="white",
                    )
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
