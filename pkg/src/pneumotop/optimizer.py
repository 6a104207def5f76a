"""Outer optimization loop: forward solves, sensitivities, MMA updates.

Each iteration maps design to physical densities, solves both physics,
evaluates the objective and the per-channel volume constraints, and asks MMA
for the next design. The projection sharpness follows a doubling
continuation schedule; convergence requires a small design change, satisfied
constraints, and a fully sharpened projection.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import adjoint, filtering
from .errors import ConfigError, SolveError
from .filtering import ProjectionParams
from .mma import MMA
from .model import Model, State
from .problem import OptSettings

log = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-6
# Constraints handed to MMA are shifted by this margin so converged designs
# land strictly inside the true feasible set despite the convex-approximation
# error of the final steps.
FEASIBILITY_SHIFT = 1e-5


@dataclass(frozen=True)
class VolumeConstraints:
    """Per-channel volume-fraction limits; channel 1 is bounded by their sum."""

    fractions: tuple

    def __post_init__(self):
        if any(v <= 0 for v in self.fractions):
            raise ConfigError(f"volume fractions must be > 0, got {self.fractions}")
        if not sum(self.fractions) <= 1.0 + 1e-12:
            raise ConfigError(
                f"volume fractions must sum to at most 1, got {sum(self.fractions)}"
            )

    @property
    def n_constraints(self) -> int:
        return len(self.fractions)

    def bound(self, ch: int) -> float:
        """Upper bound for channel ch (0-based): sum of fractions for ch 0."""
        return sum(self.fractions) if ch == 0 else self.fractions[ch]


@dataclass
class IterationRecord:
    iteration: int
    f: float
    g: tuple
    change: float
    grayness: float
    u_out: float
    SE: float
    E_t: float
    beta: float


@dataclass
class OptHistory:
    records: list = field(default_factory=list)

    def append(self, rec: IterationRecord):
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass
class RunResult:
    design: np.ndarray  # raw design variables, (3, nelem)
    history: OptHistory
    converged: bool
    iterations: int
    s: float
    beta_final: float


def initialize(model: Model) -> np.ndarray:
    """Uniform start whose physical densities equal the volume targets.

    The topology channel starts at the total allowed fraction so the first
    volume constraint begins active; selector channels start at their own
    fractions. Values are pre-images under the initial projection, making
    every constraint exactly active at iteration one.
    """
    cons = VolumeConstraints(model.spec.volume_fractions)
    params = ProjectionParams(
        beta=model.spec.filter.beta_p_initial, eta=model.proj_eta
    )
    design = np.zeros((3, model.grid.nelem))
    for ch in range(model.mats.n_channels):
        design[ch, :] = filtering.invert_projection(cons.bound(ch), params)
    if model.passive_elems.size:
        design[:, model.passive_elems] = model.passive_pattern[:, model.passive_elems]
    return design


def constraint_values(rho_bar: np.ndarray, model: Model) -> np.ndarray:
    """Normalized volume constraints g_k <= 0, one per active channel."""
    cons = VolumeConstraints(model.spec.volume_fractions)
    total = model.volumes.sum()
    g = np.empty(cons.n_constraints)
    for ch in range(cons.n_constraints):
        g[ch] = (model.volumes @ rho_bar[ch]) / (cons.bound(ch) * total) - 1.0
    return g


def constraint_gradients_physical(model: Model) -> np.ndarray:
    """d g_k / d rho_bar, shape (n_con, 3, nelem); constant in the physical field."""
    cons = VolumeConstraints(model.spec.volume_fractions)
    total = model.volumes.sum()
    dg = np.zeros((cons.n_constraints, 3, model.grid.nelem))
    for ch in range(cons.n_constraints):
        dg[ch, ch, :] = model.volumes / (cons.bound(ch) * total)
    return dg


class _DesignPacker:
    """Maps (3, nelem) design arrays to the free-variable vector MMA sees."""

    def __init__(self, model: Model):
        self.free = model.free_elems
        self.n_ch = model.mats.n_channels
        self.n_per_ch = self.free.size
        self.size = self.n_ch * self.n_per_ch

    def pack(self, design: np.ndarray) -> np.ndarray:
        return design[: self.n_ch, self.free].ravel()

    def unpack(self, x: np.ndarray, template: np.ndarray) -> np.ndarray:
        design = template.copy()
        design[: self.n_ch, self.free] = x.reshape(self.n_ch, self.n_per_ch)
        return design

    def pack_gradient(self, grad: np.ndarray) -> np.ndarray:
        return grad[: self.n_ch, self.free].ravel()


def run(model: Model, settings: OptSettings | None = None, sink=None) -> RunResult:
    """Drive the optimization to convergence or the iteration limit.

    ``sink``, when given, receives each IterationRecord as it is produced.
    """
    settings = settings or model.spec.optimizer
    fspec = model.spec.filter
    packer = _DesignPacker(model)
    cons = VolumeConstraints(model.spec.volume_fractions)
    mma = MMA(packer.size, cons.n_constraints, move=settings.move_limit)
    dg_bar = constraint_gradients_physical(model)

    design = initialize(model)
    beta = fspec.beta_p_initial
    s = model.spec.objective.s
    history = OptHistory()
    converged = False
    prev_change = np.inf
    it = 0

    while it < settings.max_iters:
        it += 1
        try:
            rho_tilde, rho_bar, dproj = model.physical_fields(design, beta)
            state = model.forward(rho_bar)
        except SolveError as exc:
            raise SolveError(f"iteration {it}, forward solve: {exc}") from exc

        if s is None:
            raw = adjoint.objective_value(state.metrics, model.spec.objective, s=1.0)
            s = 10.0 / max(abs(raw), 1e-300)
        f = adjoint.objective_value(state.metrics, model.spec.objective, s=s)

        g = constraint_values(rho_bar, model)
        feasible = bool(np.all(g <= FEASIBILITY_TOL))
        stalled = prev_change < settings.change_tol

        if stalled and feasible and beta >= fspec.beta_p_max:
            history.append(_record(it, f, g, prev_change, state, beta))
            if sink:
                sink(history.records[-1])
            converged = True
            break
        if stalled and beta < fspec.beta_p_max:
            beta = min(beta * 2.0, fspec.beta_p_max)
            log.info("iter %d: stalled, sharpening projection to beta=%g", it, beta)
            prev_change = np.inf
            history.append(_record(it, f, g, 0.0, state, beta))
            if sink:
                sink(history.records[-1])
            continue

        try:
            f, df_drho = adjoint.total_gradient(
                model, state, model.spec.objective, s, dproj
            )
        except SolveError as exc:
            raise SolveError(f"iteration {it}, adjoint solve: {exc}") from exc

        dg_chained = np.stack(
            [
                filtering.chain_sensitivities(dg_bar[k], dproj, model.kernel)
                for k in range(cons.n_constraints)
            ]
        )
        x = packer.pack(design)
        df_x = packer.pack_gradient(df_drho)
        dg_x = np.stack([packer.pack_gradient(dg_chained[k]) for k in range(cons.n_constraints)])

        # Shrink steps as the projection sharpens: full moves across the
        # steep transition band alias into 2-cycles that never settle.
        move = settings.move_limit * (fspec.beta_p_initial / beta) ** 0.5
        move = max(move, min(0.05, settings.move_limit))
        try:
            x_new = mma.update(x, df_x, g + FEASIBILITY_SHIFT, dg_x, move=move)
        except SolveError as exc:
            raise SolveError(f"iteration {it}, MMA update: {exc}") from exc
        change = float(np.max(np.abs(x_new - x))) if x.size else 0.0

        history.append(_record(it, f, g, change, state, beta))
        if sink:
            sink(history.records[-1])
        log.info(
            "iter %d: f=%.5g g=%s change=%.4f gray=%.3f beta=%g",
            it, f, np.array2string(g, precision=3), change,
            history.records[-1].grayness, beta,
        )

        design = packer.unpack(x_new, design)
        prev_change = change
        if it % fspec.beta_p_double_every == 0 and beta < fspec.beta_p_max:
            beta = min(beta * 2.0, fspec.beta_p_max)
            log.info("iter %d: scheduled projection sharpening to beta=%g", it, beta)

    return RunResult(
        design=design,
        history=history,
        converged=converged,
        iterations=it,
        s=s if s is not None else float("nan"),
        beta_final=beta,
    )


def _record(it, f, g, change, state: State, beta) -> IterationRecord:
    return IterationRecord(
        iteration=it,
        f=float(f),
        g=tuple(float(v) for v in g),
        change=float(change),
        grayness=filtering.grayness(state.rho_bar[0]),
        u_out=state.metrics.u_out,
        SE=state.metrics.SE,
        E_t=state.metrics.E_t,
        beta=float(beta),
    )
