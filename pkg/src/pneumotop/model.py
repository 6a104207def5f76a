"""Resolved problem model: grid, boundary sets, operators, and forward solves.

A Model is built once per problem and is immutable afterwards; forward solves
for different density fields or spring stiffnesses can then proceed
independently (and in parallel processes for sweeps).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import closure as closure_mod
from . import darcy, elasticity, filtering
from .darcy import FlowAssembler, FlowSystem, PressureField
from .elasticity import DisplacementField, ElasticAssembler, PerformanceMetrics
from .errors import ConfigError, SolveError
from .filtering import ProjectionParams
from .grid import (
    TAG_DESIGN,
    TAG_PASSIVE_VOID,
    Grid,
    build_grid,
    filter_neighborhoods,
    select_region,
)
from .materials import interpolate_modulus
from .problem import ProblemSpec

MAX_PRINCIPLE_TOL = 1e-6


@dataclass
class State:
    """All fields of one forward solve on a fixed physical design."""

    rho_bar: np.ndarray
    e_field: np.ndarray
    de: np.ndarray
    flow: FlowSystem
    pressure: PressureField
    force: np.ndarray
    k_struct: sparse.csr_matrix
    disp: DisplacementField
    metrics: PerformanceMetrics
    k_out: float = 0.0


class Model:
    """Operators and boundary data resolved from a ProblemSpec."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self.grid: Grid = build_grid(spec.grid)
        self.mats = spec.materials
        self.flow_params = spec.flow
        self.kernel = filter_neighborhoods(
            self.grid, spec.filter.r_min_elems * self.grid.h
        )
        self.proj_eta = spec.filter.eta_p

        self.selections = [select_region(self.grid, r) for r in spec.regions]
        by_role: dict[str, list] = {}
        for sel in self.selections:
            by_role.setdefault(sel.region.role, []).append(sel)

        inlets = by_role.get("pressure_inlet", [])
        drains = by_role.get("pressure_drain", [])
        if not inlets:
            raise ConfigError("problem has no pressure_inlet region")
        self.inlet_nodes = np.unique(np.concatenate([s.nodes for s in inlets]))
        self.drain_nodes = (
            np.unique(np.concatenate([s.nodes for s in drains]))
            if drains
            else np.array([], dtype=np.int64)
        )
        overlap = np.intersect1d(self.inlet_nodes, self.drain_nodes)
        if overlap.size:
            raise ConfigError(
                f"pressure inlet and drain regions share {overlap.size} nodes"
            )
        self.inlet_faces = tuple(f for s in inlets for f in s.faces)
        self.drain_faces = tuple(f for s in drains for f in s.faces)

        fixed = []
        for sel in by_role.get("fixed_support", []):
            for c in range(self.grid.dim):
                fixed.append(self.grid.dim * sel.nodes + c)
        for sel in by_role.get("symmetry", []):
            fixed.append(self.grid.dim * sel.nodes + sel.normal_axis)
        if not fixed:
            raise ConfigError("problem has no fixed_support or symmetry region")
        self.fixed_u_dofs = np.unique(np.concatenate(fixed))

        outputs = by_role.get("output", [])
        if len(outputs) != 1:
            raise ConfigError(f"expected exactly one output region, got {len(outputs)}")
        self.output_sel = outputs[0]
        self.k_out_default = self.output_sel.region.k_out
        self.l_out = elasticity.output_projector(self.grid, self.output_sel)
        self.spring_unit = elasticity.output_spring_matrix(
            self.grid, self.output_sel, k_out=1.0
        )

        # Gauge-pressure indicator at inlet DOFs, used for E_t derivatives.
        self.inlet_gauge = np.zeros(self.grid.nnodes)
        self.inlet_gauge[self.inlet_nodes] = (
            self.flow_params.P_in - self.flow_params.p_atm
        )

        self.mask = self._build_mask(spec)
        self.free_elems = np.nonzero(self.mask == TAG_DESIGN)[0]
        self.passive_elems = np.nonzero(self.mask != TAG_DESIGN)[0]
        self.passive_pattern = np.zeros((3, self.grid.nelem))
        for m in range(1, self.mats.n_materials + 1):
            idx = np.nonzero(self.mask == m)[0]
            if idx.size:
                self.passive_pattern[:, idx] = self.mats.solid_pattern(m)[:, None]

        self.volumes = np.full(self.grid.nelem, self.grid.element_volume)
        self.flow = FlowAssembler(self.grid)
        self.elastic = ElasticAssembler(self.grid, self.mats.nu)
        self.t_matrix = darcy.coupling_matrix(self.grid)

    def _build_mask(self, spec: ProblemSpec) -> np.ndarray:
        mask = np.full(self.grid.nelem, TAG_DESIGN, dtype=np.int64)
        tol = self.grid.h * 1e-6
        for p in spec.passive:
            lo = np.asarray(p.box[0]) - tol
            hi = np.asarray(p.box[1]) + tol
            inside = np.all(
                (self.grid.centroids >= lo) & (self.grid.centroids <= hi), axis=1
            )
            mask[inside] = TAG_PASSIVE_VOID if p.tag == "void" else p.material
        if spec.closure.mode == "skin":
            mask = closure_mod.non_design_skin(
                self.grid,
                mask,
                spec.closure.skin_thickness_elems,
                material=1,
                exempt_faces=self.exempt_faces(),
            )
        return mask

    def exempt_faces(self) -> set:
        """Domain faces kept open by a boundary skin: inlets and symmetry planes."""
        exempt = set()
        for sel in self.selections:
            if sel.region.role == "pressure_inlet":
                exempt.update((ax, side) for _, ax, side in sel.faces)
            elif sel.region.role == "symmetry":
                lo = np.asarray(sel.region.box[0])
                ax = sel.normal_axis
                side = 0 if lo[ax] < self.grid.h * 0.5 else 1
                exempt.add((ax, side))
        return exempt

    # ---- design-variable mapping -------------------------------------------------

    def physical_fields(self, design: np.ndarray, beta: float):
        """Filter and project all channels; returns (rho_tilde, rho_bar, dproj).

        Passive elements are pinned to their exact corner patterns and their
        projection derivative is zeroed so sensitivities ignore them.
        """
        params = ProjectionParams(beta=beta, eta=self.proj_eta)
        rho_tilde = filtering.filter_densities(design, self.kernel)
        rho_bar, dproj = filtering.project(rho_tilde, params)
        if self.passive_elems.size:
            rho_bar[:, self.passive_elems] = self.passive_pattern[:, self.passive_elems]
            dproj[:, self.passive_elems] = 0.0
        return rho_tilde, rho_bar, dproj

    # ---- forward physics ---------------------------------------------------------

    def forward(self, rho_bar: np.ndarray, k_out: float | None = None,
                check_pressure_bounds: bool = True) -> State:
        """Darcy solve, force transfer, elastic solve, and metrics."""
        rho_bar = np.asarray(rho_bar, dtype=float)
        k_out = self.k_out_default if k_out is None else float(k_out)

        flow_sys = self.flow.assemble(rho_bar[0], self.flow_params)
        pressure = darcy.solve_pressure(flow_sys, self.inlet_nodes, self.drain_nodes)
        if check_pressure_bounds:
            self._check_pressure_bounds(pressure.p)
        force = -(self.t_matrix @ pressure.p)
        e_t = darcy.energy_loss(flow_sys, pressure)

        e_field, de = interpolate_modulus(rho_bar, self.mats)
        k_struct = self.elastic.assemble(e_field)
        k_total = k_struct + k_out * self.spring_unit if k_out > 0 else k_struct
        disp = elasticity.solve_displacement(k_total.tocsr(), force, self.fixed_u_dofs)
        m = elasticity.metrics(disp.u, k_struct, self.grid, self.output_sel, E_t=e_t)
        m = PerformanceMetrics(
            u_out=m.u_out, SE=m.SE, W=0.5 * k_out * m.u_out**2, E_t=e_t
        )
        return State(
            rho_bar=rho_bar,
            e_field=e_field,
            de=de,
            flow=flow_sys,
            pressure=pressure,
            force=force,
            k_struct=k_struct,
            disp=disp,
            metrics=m,
            k_out=k_out,
        )

    def _check_pressure_bounds(self, p: np.ndarray):
        lo = min(self.flow_params.p_atm, self.flow_params.P_in)
        hi = max(self.flow_params.p_atm, self.flow_params.P_in)
        tol = MAX_PRINCIPLE_TOL * abs(self.flow_params.P_in - self.flow_params.p_atm)
        if p.min() < lo - tol or p.max() > hi + tol:
            raise SolveError(
                f"pressure field violates its physical bounds: "
                f"[{p.min():.6g}, {p.max():.6g}] outside "
                f"[{lo:.6g}, {hi:.6g}] (tol {tol:.3g})"
            )

    def seal_report(self, rho_bar: np.ndarray, added: int = 0) -> closure_mod.SealReport:
        rep = closure_mod.check_sealed(
            rho_bar[0], self.grid, self.inlet_faces, self.drain_faces
        )
        if added:
            rep = closure_mod.SealReport(
                sealed=rep.sealed,
                leak_path=rep.leak_path,
                added_volume_fraction=added / self.grid.nelem,
            )
        return rep
