"""Experiment driver: advances a configured scheme, optionally moving the
mesh each step, and writes the time series, mesh trajectories, and solution
snapshots as CSV."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import AssemblyCache
from .basis import BasisKind, BasisSet, eval_field_many, impose_function, node_values
from .bbm import (
    SolitonParams,
    State,
    exact_soliton,
    hamiltonian_h1,
    hamiltonian_h2,
    initial_two_wave,
)
from .config import RunConfig
from .diagnostics import phase_error, shape_error
from .errors import NewtonFailureError
from .mesh import Mesh1D, equidistribute_deboor, monitor_arc_length, smooth_monitor
from .steppers import (
    StepResult,
    dg_moving_step,
    implicit_midpoint_step,
    rk4_step,
    trapezoidal_step,
)
from .transfer import conservative_transfer, interp_transfer


@dataclass
class RunResult:
    times: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    phase: np.ndarray
    shape: np.ndarray
    newton_iters: np.ndarray
    final_state: State
    dof_count: int
    output_dir: Path
    events: list[str] = field(default_factory=list)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_csv(path: Path, header: list[str], rows: list[list[float]]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _snapshot_points(mesh: Mesh1D, per_element: int) -> np.ndarray:
    xi = np.arange(per_element) / per_element
    xs = (mesh.nodes[:-1, None] + mesh.element_sizes[:, None] * xi[None, :]).ravel()
    return np.append(xs, mesh.nodes[-1])


def _soliton_params(cfg: RunConfig) -> SolitonParams:
    return SolitonParams(
        c=cfg.c, half_length=cfg.L, c_r=cfg.c_r, c_s=cfg.c_s, x_r=cfg.x_r, x_s=cfg.x_s
    )


def _initial_field(cfg: RunConfig, params: SolitonParams):
    if cfg.problem == "soliton":
        return lambda x: exact_soliton(x, 0.0, params)
    return lambda x: initial_two_wave(x, params)


def _make_basis(cfg: RunConfig, mesh: Mesh1D) -> BasisSet:
    if cfg.basis_kind is BasisKind.CUBIC_LAGRANGE:
        return BasisSet.cubic_lagrange(mesh)
    return BasisSet.periodic_bspline(mesh)


class _Driver:
    def __init__(self, cfg: RunConfig, quiet: bool = False):
        self.cfg = cfg
        self.quiet = quiet
        self.params = _soliton_params(cfg)
        self.mesh = Mesh1D.uniform(cfg.M, cfg.L)
        self.basis = _make_basis(cfg, self.mesh)
        self.cache = AssemblyCache(self.basis)
        self.u = impose_function(self.basis, _initial_field(cfg, self.params))
        self.t = 0.0
        self.events: list[str] = []
        self.series_rows: list[list[float]] = []
        self.mesh_rows: list[list[float]] = []
        self.snapshots_written: set[int] = set()
        self.stats = {k: [] for k in ("t", "h1", "h2", "phase", "shape", "iters")}

    # -- output -----------------------------------------------------------

    def record(self, newton_iters: int) -> None:
        cfg = self.cfg
        h1 = hamiltonian_h1(self.u, self.cache.A, self.cache.E)
        h2 = hamiltonian_h2(self.u, self.cache.A, self.cache.D)
        if cfg.problem == "soliton":
            state = State(self.u, self.basis, self.t)
            ph = phase_error(state, self.params)
            sh = shape_error(state, self.params)
        else:
            ph = sh = float("nan")
        self.series_rows.append([self.t, h1, h2, ph, sh, float(newton_iters)])
        self.mesh_rows.append([self.t, *self.mesh.nodes])
        for key, val in zip(
            ("t", "h1", "h2", "phase", "shape", "iters"),
            (self.t, h1, h2, ph, sh, newton_iters),
        ):
            self.stats[key].append(val)

    def maybe_snapshot(self, step_index: int) -> None:
        cfg = self.cfg
        targets = {0} | {int(round(s / cfg.dt)) for s in cfg.snapshot_times if s <= cfg.t_end}
        if step_index in targets and step_index not in self.snapshots_written:
            self.snapshots_written.add(step_index)
            xs = _snapshot_points(self.mesh, cfg.snapshot_samples_per_element)
            us = eval_field_many(self.basis, self.u, xs)
            path = Path(cfg.output_dir) / f"snapshot_{self.t:g}.csv"
            _write_csv(path, ["x", "u"], [[x, u] for x, u in zip(xs, us)])

    def flush(self) -> None:
        out = Path(self.cfg.output_dir)
        _write_csv(
            out / "series.csv",
            ["t", "H1_p", "H2_p", "phase_error", "shape_error", "newton_iters"],
            self.series_rows,
        )
        _write_csv(
            out / "mesh.csv",
            ["t"] + [f"x{i}" for i in range(self.cfg.M + 1)],
            self.mesh_rows,
        )

    def dump_abort_state(self) -> None:
        xs = _snapshot_points(self.mesh, self.cfg.snapshot_samples_per_element)
        us = eval_field_many(self.basis, self.u, xs)
        path = Path(self.cfg.output_dir) / "snapshot_abort.csv"
        _write_csv(path, ["x", "u"], [[x, u] for x, u in zip(xs, us)])

    # -- stepping ---------------------------------------------------------

    def designated_value(self) -> float:
        if self.cfg.hamiltonian == "H1":
            return hamiltonian_h1(self.u, self.cache.A, self.cache.E)
        return hamiltonian_h2(self.u, self.cache.A, self.cache.D)

    def move_mesh(self) -> tuple[np.ndarray, float, bool]:
        """Equidistribute, transfer the state, and return (u_hat, I_old, flag)."""
        cfg = self.cfg
        nodal = node_values(self.basis, self.u)
        monitor = monitor_arc_length(nodal, self.mesh, cfg.monitor_k)
        if cfg.monitor_smoothing:
            monitor = smooth_monitor(monitor)
        new_mesh = equidistribute_deboor(
            self.mesh, monitor, cfg.deboor_max_sweeps, cfg.deboor_tol
        )
        new_basis = _make_basis(cfg, new_mesh)
        new_cache = AssemblyCache(new_basis)
        i_old = self.designated_value()

        conservative = False
        if cfg.transfer == "conservative":
            try:
                u_hat, _ = conservative_transfer(
                    self.u, self.basis, new_basis, cfg.hamiltonian,
                    self.cache, new_cache, cfg.solver,
                )
                conservative = True
            except NewtonFailureError:
                self.events.append(
                    f"t={self.t:g}: conservative transfer failed, "
                    "fell back to interpolation + correction"
                )
                u_hat = interp_transfer(self.u, self.basis, new_basis, new_cache)
        else:
            u_hat = interp_transfer(self.u, self.basis, new_basis, new_cache)

        self.mesh, self.basis, self.cache = new_mesh, new_basis, new_cache
        return u_hat, i_old, conservative

    def advance(self, step_index: int) -> StepResult:
        cfg = self.cfg
        moving_now = cfg.moving_mesh and (step_index % cfg.remesh_every == 0)
        if moving_now:
            u_hat, i_old, conservative = self.move_mesh()
        else:
            u_hat, i_old, conservative = self.u, self.designated_value(), True

        if cfg.scheme in ("DG1", "DG2"):
            result = dg_moving_step(
                u_hat, i_old, self.cache, cfg.hamiltonian, cfg.dt, cfg.solver,
                transfer_was_conservative=conservative,
                frozen_operator=cfg.frozen_operator,
            )
        elif cfg.scheme == "TR":
            result = trapezoidal_step(u_hat, self.cache, cfg.dt, cfg.solver)
        elif cfg.scheme == "IM":
            result = implicit_midpoint_step(u_hat, self.cache, cfg.dt, cfg.solver)
        else:
            result = rk4_step(u_hat, self.cache, cfg.dt)
        self.u = result.u_next
        return result

    def run(self) -> RunResult:
        cfg = self.cfg
        Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
        if not self.quiet:
            print(
                f"[bbmfem] {cfg.problem} / {cfg.scheme}"
                f"{'MM' if cfg.moving_mesh else ''}: M={cfg.M} elements, "
                f"{self.basis.dof_count} dofs, dt={cfg.dt:g}, t_end={cfg.t_end:g}"
            )
        self.record(0)
        self.maybe_snapshot(0)
        try:
            for n in range(cfg.num_steps):
                result = self.advance(n)
                self.t = (n + 1) * cfg.dt
                self.record(result.newton_iters)
                self.maybe_snapshot(n + 1)
        except NewtonFailureError:
            self.dump_abort_state()
            self.flush()
            raise
        self.flush()
        if not self.quiet:
            for event in self.events:
                print(f"[bbmfem] {event}")
            print(f"[bbmfem] wrote {len(self.series_rows)} rows to {cfg.output_dir}")
        return RunResult(
            times=np.array(self.stats["t"]),
            h1=np.array(self.stats["h1"]),
            h2=np.array(self.stats["h2"]),
            phase=np.array(self.stats["phase"]),
            shape=np.array(self.stats["shape"]),
            newton_iters=np.array(self.stats["iters"]),
            final_state=State(self.u, self.basis, self.t),
            dof_count=self.basis.dof_count,
            output_dir=Path(cfg.output_dir),
            events=self.events,
        )


def run(cfg: RunConfig, quiet: bool = False) -> RunResult:
    """Execute one configured experiment; returns the in-memory series."""
    return _Driver(cfg, quiet=quiet).run()
