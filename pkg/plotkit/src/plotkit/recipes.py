"""The four figure recipes.

Every recipe takes run directories produced by the simulator, checks their
manifests against the expected scenario, and writes one deterministic image
(fixed size, no embedded timestamps).  Axes are labeled in atomic units.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .readers import read_manifest, read_matrix, run_columns

FIGSIZE = (9.0, 4.0)
DPI = 150


@dataclass
class FigureRecipe:
    name: str
    scenario: str          # required manifest scenario of every input run
    min_inputs: int
    render: callable


def _manifests(run_dirs, recipe):
    if len(run_dirs) < recipe.min_inputs:
        raise ValueError(f"{recipe.name} needs at least {recipe.min_inputs} input run(s)")
    manifests = []
    for rd in run_dirs:
        mpath = Path(rd) / "manifest.txt"
        if not mpath.exists():
            raise ValueError(f"no manifest.txt in {rd}")
        manifest = read_manifest(mpath)
        scenarios = recipe.scenario.split("|")
        if manifest["scenario"] not in scenarios:
            raise ValueError(
                f"{rd}: manifest scenario {manifest['scenario']!r} does not match "
                f"recipe {recipe.name!r} (wants {recipe.scenario})"
            )
        manifests.append(manifest)
    return manifests


def _save(fig, out_path):
    fig.savefig(out_path, dpi=DPI, metadata={"Software": "plotkit"})
    plt.close(fig)


def render_fig1(run_dirs, out_path, recipe):
    """Side-by-side positron pair-density heatmaps, with and without exchange."""
    (manifest,) = _manifests(run_dirs[:1], recipe)
    rd = Path(run_dirs[0])
    rho2 = read_matrix(rd / "rho2.bin").real
    factorized = read_matrix(rd / "rho2_factorized.bin").real
    x = run_columns(rd, "region_x.csv")["x_au"]
    vmax = max(rho2.max(), factorized.max())
    fig, axes = plt.subplots(1, 2, figsize=FIGSIZE, sharey=True)
    extent = [x[0], x[-1], x[0], x[-1]]
    for ax, mat, title in (
        (axes[0], rho2, "(a) with exchange"),
        (axes[1], factorized, "(b) without exchange"),
    ):
        im = ax.imshow(mat.T, origin="lower", extent=extent, vmin=0.0, vmax=vmax,
                       cmap="inferno", aspect="equal")
        ax.set_xlabel("x1 (a.u.)")
        ax.set_title(title)
    axes[0].set_ylabel("x2 (a.u.)")
    fig.colorbar(im, ax=axes, shrink=0.85, label="pair density (a.u.)")
    half_w = float(manifest["barrier_width"]) / 2.0
    for ax in axes:
        for edge in (-half_w, half_w):
            ax.axvline(edge, color="w", lw=0.5, ls=":")
            ax.axhline(edge, color="w", lw=0.5, ls=":")
    _save(fig, out_path)


def _plot_pair_family(run_dirs, out_path, recipe, logy):
    manifests = _manifests(run_dirs, recipe)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for rd, manifest in zip(run_dirs, manifests):
        cols = run_columns(rd, "n_pairs.csv")
        n = cols["n_pairs"]
        width = float(manifest["barrier_width"])
        if manifest["scenario"] == "step_limit":
            label = "step (x2)"
            n = 2.0 * n  # per-edge count scaled back for comparison
        else:
            label = f"L = {width:g}"
        ax.plot(cols["t_au"], n, lw=1.4, label=label)
    ax.set_xlabel("t (a.u.)")
    ax.set_ylabel("created pairs N(t)")
    if logy:
        ax.set_yscale("log")
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    _save(fig, out_path)


def render_fig2a(run_dirs, out_path, recipe):
    """Fermionic N(t) family over widths, step curve multiplied by two."""
    _plot_pair_family(run_dirs, out_path, recipe, logy=False)


def render_fig2b(run_dirs, out_path, recipe):
    """Bosonic N(t) family on a log axis (exponential superradiant growth)."""
    _plot_pair_family(run_dirs, out_path, recipe, logy=True)


def render_fig3(run_dirs, out_path, recipe):
    """Klein tunneling snapshot panels with inset-style modulation curves."""
    (manifest,) = _manifests(run_dirs[:1], recipe)
    rd = Path(run_dirs[0])
    times = [float(v) for v in manifest["snapshot_times"].split(",")]
    half_w = float(manifest["barrier_width"]) / 2.0
    fig, axes = plt.subplots(2, 2, figsize=(9.5, 6.5), sharex=True)
    for ax, t in zip(axes.ravel(), times):
        cols = run_columns(rd, f"density_t{t:.6f}.csv")
        x = cols["x_au"]
        ax.plot(x, cols["rho_el"], "k-", lw=1.0, label="electron (total)")
        ax.plot(x, cols["rho_el_wp"], color="tab:orange", ls=":", lw=1.2, label="wavepacket")
        ax.axvspan(-half_w, half_w, color="0.85")
        ax.set_title(f"t = {t:g} a.u.")
        ax.set_xlim(-5.0, 5.0)
        inset = ax.inset_axes([0.64, 0.55, 0.34, 0.4])
        inset.plot(x, cols["rho_pos"], color="0.5", lw=1.4, label="positron")
        inset.plot(x, cols["rho_mod"], color="tab:blue", lw=0.8, label="modulation")
        inset.set_xlim(-6 * half_w, 6 * half_w)
        inset.tick_params(labelsize=6)
    for ax in axes[1]:
        ax.set_xlabel("x (a.u.)")
    for ax in axes[:, 0]:
        ax.set_ylabel("density (a.u.)")
    axes[0, 0].legend(loc="upper left", fontsize=8)
    _save(fig, out_path)


RECIPES = {
    "fig1": FigureRecipe("fig1", "exchange_density", 1, render_fig1),
    "fig2a": FigureRecipe("fig2a", "vacuum_pairs|step_limit", 2, render_fig2a),
    "fig2b": FigureRecipe("fig2b", "superradiance", 2, render_fig2b),
    "fig3": FigureRecipe("fig3", "klein_tunneling", 1, render_fig3),
}


def render(recipe_name: str, run_dirs, out_path) -> Path:
    if recipe_name not in RECIPES:
        raise ValueError(f"unknown recipe {recipe_name!r}; choose from {sorted(RECIPES)}")
    recipe = RECIPES[recipe_name]
    recipe.render(list(run_dirs), out_path, recipe)
    return Path(out_path)
