"""Matplotlib figure rendering for the report paths (file output only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _imshow(ax, values, x_range, y_range, cmap, vmin=None, vmax=None):
    im = ax.imshow(values.T, origin="lower", aspect="auto", cmap=cmap,
                   extent=(x_range[0], x_range[1], y_range[0], y_range[1]),
                   vmin=vmin, vmax=vmax)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    return im


def field_figure(path, values, x_range, y_range, title, u_max=None):
    fig, ax = plt.subplots(figsize=(7, 3.2))
    im = _imshow(ax, values, x_range, y_range, "viridis", vmin=0.0, vmax=u_max)
    fig.colorbar(im, ax=ax, label="wind speed [m/s]")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def error_map_figure(path, error_pct, x_range, y_range, title):
    fig, ax = plt.subplots(figsize=(7, 3.2))
    im = _imshow(ax, error_pct, x_range, y_range, "magma")
    fig.colorbar(im, ax=ax, label="absolute relative error [%]")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def transects_figure(path, y_coords, stations, ref_profiles, sur_profiles):
    fig, axes = plt.subplots(1, len(stations), figsize=(3.2 * len(stations), 3.2),
                             sharey=True)
    axes = np.atleast_1d(axes)
    for ax, x_s, ref, sur in zip(axes, stations, ref_profiles, sur_profiles):
        ax.plot(y_coords, ref, "k-", label="reference")
        ax.plot(y_coords, sur, "r--", label="surrogate")
        ax.set_title(f"x = {x_s:.0f} m")
        ax.set_xlabel("y [m]")
    axes[0].set_ylabel("wind speed [m/s]")
    axes[0].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def heatmap_figure(path, result, title):
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.6))
    extent = (result.u_values[0], result.u_values[-1],
              result.ti_values[0], result.ti_values[-1])
    im0 = ax0.imshow(result.gains, origin="lower", aspect="auto",
                     cmap="viridis", extent=extent)
    fig.colorbar(im0, ax=ax0, label="power gain [%]")
    im1 = ax1.imshow(result.times, origin="lower", aspect="auto",
                     cmap="magma", extent=extent)
    fig.colorbar(im1, ax=ax1, label="wall time [s]")
    for ax in (ax0, ax1):
        ax.set_xlabel("inlet speed [m/s]")
        ax.set_ylabel("ambient TI [-]")
    ax0.set_title(title)
    ax1.set_title("per-cell cost")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def timing_figure(path, counts, series, labels):
    fig, ax = plt.subplots(figsize=(5, 4))
    for times, label in zip(series, labels):
        ax.loglog(counts, times, "o-", label=label)
    ax.set_xlabel("turbine count")
    ax.set_ylabel("farm evaluation time [s]")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def history_figure(path, history):
    epochs = [r.epoch for r in history.records]
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(8, 3.4))
    ax0.semilogy(epochs, [r.train_loss for r in history.records], label="train")
    ax0.semilogy(epochs, [r.val_loss for r in history.records], label="validation")
    ax0.set_xlabel("epoch")
    ax0.set_ylabel("MSE loss")
    ax0.legend()
    ax1.plot(epochs, [r.val_accuracy for r in history.records])
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("validation accuracy [%]")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
