"""Fixture library helpers: packaged problems plus the hand-built pneunet design.

The pneunet benchmark is a fixed single-material geometry: seven inflatable
chambers over a feed channel, 1.5 mm walls, 72 x 17 mm envelope. It is
evaluated as-is and never optimized.
"""
from __future__ import annotations

import shutil
from pathlib import Path

import numpy as np

from .grid import GridSpec
from .problem import available_fixtures, fixture_path, load_problem

PNEUNET_WALL_ELEMS = 3  # 1.5 mm at h = 0.5 mm
PNEUNET_CHAMBERS = 7


def make_pneunet2d_design() -> tuple[GridSpec, np.ndarray]:
    """Physical density field of the 7-chamber pneunet benchmark."""
    spec = load_problem("pneunet2d")
    nx, ny = spec.grid.nel
    w = PNEUNET_WALL_ELEMS
    solid = np.ones((nx, ny), dtype=bool)

    base_top = 6            # 3 mm strain-limiting base
    channel_top = base_top + 6
    chamber_top = ny - w    # 1.5 mm top wall
    # Feed channel runs from the inlet face to the last chamber.
    solid[: nx - w, base_top:channel_top] = False
    # Chambers rise from the channel, separated by walls.
    edges = np.round(np.linspace(w, nx - w, PNEUNET_CHAMBERS + 1)).astype(int)
    for k in range(PNEUNET_CHAMBERS):
        solid[edges[k]: edges[k + 1] - w, channel_top:chamber_top] = False

    rho = np.zeros((3, nx * ny))
    flat = solid.T.ravel()  # element index is x-fastest
    rho[0, flat] = 1.0
    return spec.grid, rho


def export_fixtures(out_dir) -> list[Path]:
    """Copy all packaged problem files (and the pneunet design) to a directory."""
    from .io import save_design

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in available_fixtures():
        dst = out / f"{name}.json"
        shutil.copyfile(fixture_path(name), dst)
        written.append(dst)
    gspec, rho = make_pneunet2d_design()
    dst = out / "pneunet2d.design.json"
    save_design(dst, gspec, rho, note="pneunet 7-chamber benchmark")
    written.append(dst)
    return written
