"""Porous-flow pressure equilibrium and pressure-to-force coupling.

The flow matrix combines element conduction K(rho1) * integral(grad N . grad N)
with a drainage sink D_s * H(rho1) * M that decays pressure inside solid
walls and closed cavities. The drainage mass matrix is row-sum lumped: a
consistent mass matrix introduces positive off-diagonals that break the
discrete maximum principle, producing nonphysical pressure undershoot of a
few percent next to sharp walls. Nodal forces come from the volumetric
gradient form F = -T p, which is what makes the load follow the design.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import shapefn
from .errors import ConfigError
from .grid import Grid
from .linalg import FactorizedSystem
from .materials import FlowParams, drainage_coefficient, flow_coefficient


@dataclass
class FlowSystem:
    """Assembled global flow matrix plus per-element model coefficients."""

    A: sparse.csr_matrix
    k_elem: np.ndarray
    dk_elem: np.ndarray
    d_elem: np.ndarray
    dd_elem: np.ndarray
    params: FlowParams


@dataclass
class PressureField:
    """Equilibrium nodal pressures (Pa) with the solve's Dirichlet sets."""

    p: np.ndarray
    fixed_dofs: np.ndarray
    free_dofs: np.ndarray
    inlet_dofs: np.ndarray
    lu: object = field(repr=False, default=None)


class FlowAssembler:
    """Reusable element templates and sparsity pattern for one grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.ke = shapefn.conduction_matrix(grid.dim, grid.h)
        # Lumped drainage keeps the flow matrix an M-matrix (see module doc).
        self.me = np.diag(shapefn.mass_matrix(grid.dim, grid.h).sum(axis=1))
        conn = grid.conn
        nen = grid.nen
        self.rows = np.repeat(conn, nen, axis=1).ravel()
        self.cols = np.tile(conn, (1, nen)).ravel()

    def assemble(self, rho_bar1: np.ndarray, params: FlowParams) -> FlowSystem:
        """Global flow matrix for the given topology-channel densities."""
        rho_bar1 = np.asarray(rho_bar1, dtype=float)
        if rho_bar1.shape != (self.grid.nelem,):
            raise ConfigError(
                f"density field has shape {rho_bar1.shape}, expected "
                f"({self.grid.nelem},)"
            )
        k, dk = flow_coefficient(rho_bar1, params)
        d, dd = drainage_coefficient(rho_bar1, params)
        vals = (
            k[:, None, None] * self.ke[None, :, :]
            + d[:, None, None] * self.me[None, :, :]
        )
        a = sparse.coo_matrix(
            (vals.ravel(), (self.rows, self.cols)),
            shape=(self.grid.nnodes, self.grid.nnodes),
        ).tocsr()
        return FlowSystem(a, k, dk, d, dd, params)


def assemble_flow(grid: Grid, rho_bar1: np.ndarray, params: FlowParams) -> FlowSystem:
    return FlowAssembler(grid).assemble(rho_bar1, params)


def solve_pressure(
    system: FlowSystem,
    inlet_nodes: np.ndarray,
    drain_nodes: np.ndarray,
) -> PressureField:
    """Solve for equilibrium pressure with inlet/drain Dirichlet values.

    Inlet nodes are held at P_in and drain nodes at p_atm; the reduced
    symmetric system is factorized once and kept for adjoint reuse.
    """
    params = system.params
    inlet_nodes = np.asarray(inlet_nodes, dtype=np.int64)
    drain_nodes = np.asarray(drain_nodes, dtype=np.int64)
    if np.intersect1d(inlet_nodes, drain_nodes).size:
        raise ConfigError("pressure inlet and drain node sets overlap")
    fixed = np.concatenate([inlet_nodes, drain_nodes])
    if fixed.size == 0:
        raise ConfigError(
            "flow system has no pressure Dirichlet DOFs (need an inlet or drain)"
        )
    n = system.A.shape[0]
    vals = np.concatenate(
        [np.full(inlet_nodes.size, params.P_in), np.full(drain_nodes.size, params.p_atm)]
    )
    free = np.setdiff1d(np.arange(n), fixed, assume_unique=False)

    p = np.zeros(n)
    p[fixed] = vals
    a_csc = system.A.tocsc()
    a_ff = a_csc[free][:, free]
    b = -a_csc[free][:, fixed] @ vals
    lu = FactorizedSystem(a_ff, context="pressure solve")
    p[free] = lu.solve(b)
    return PressureField(p, fixed, free, inlet_nodes, lu)


def coupling_matrix(grid: Grid) -> sparse.csr_matrix:
    """Global pressure-to-force map T (geometry only): F = -T p."""
    te = shapefn.coupling_matrix(grid.dim, grid.h)
    nen = grid.nen
    rows = np.repeat(grid.edof_u, nen, axis=1).ravel()
    cols = np.tile(grid.conn, (1, grid.dim * nen)).ravel()
    vals = np.tile(te.ravel(), grid.nelem)
    return sparse.coo_matrix(
        (vals, (rows, cols)), shape=(grid.n_disp_dofs, grid.nnodes)
    ).tocsr()


def pressure_to_force(grid: Grid, p: np.ndarray, t: sparse.csr_matrix | None = None):
    """Consistent nodal forces from a nodal pressure field."""
    if t is None:
        t = coupling_matrix(grid)
    return -(t @ np.asarray(p, dtype=float))


def energy_loss(system: FlowSystem, pf: PressureField) -> float:
    """Leakage power from inlet boundary reactions.

    Sums (reaction flux) * (p - p_atm) over the inlet DOFs, the reaction
    being the unconstrained-matrix residual at the fixed nodes. With gauge
    pressure this equals the total dissipation p^T A p.
    """
    r = system.A @ pf.p
    inlet = pf.inlet_dofs
    return float(np.dot(pf.p[inlet] - system.params.p_atm, r[inlet]))
