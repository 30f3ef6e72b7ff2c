"""Experiment configuration: flat `key = value` files with `#` comments."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .basis import BasisKind
from .errors import ConfigError
from .steppers import JACOBIAN_MODES, SolverConfig

PROBLEMS = ("soliton", "two_wave")
SCHEMES = ("DG1", "DG2", "TR", "IM", "RK4")
TRANSFERS = ("interpolate", "conservative")

# DG1/TR integrate the H1 pairing on Lagrange elements; DG2/IM/RK4 the H2
# pairing on B-splines.
SCHEME_BASIS = {
    "DG1": BasisKind.CUBIC_LAGRANGE,
    "TR": BasisKind.CUBIC_LAGRANGE,
    "DG2": BasisKind.PERIODIC_CUBIC_BSPLINE,
    "IM": BasisKind.PERIODIC_CUBIC_BSPLINE,
    "RK4": BasisKind.PERIODIC_CUBIC_BSPLINE,
}
SCHEME_HAMILTONIAN = {"DG1": "H1", "TR": "H1", "DG2": "H2", "IM": "H2", "RK4": "H2"}

_BASIS_NAMES = {
    "cubic_lagrange": BasisKind.CUBIC_LAGRANGE,
    "bspline": BasisKind.PERIODIC_CUBIC_BSPLINE,
    "periodic_cubic_bspline": BasisKind.PERIODIC_CUBIC_BSPLINE,
}


@dataclass
class RunConfig:
    problem: str = "soliton"
    scheme: str = "DG1"
    moving_mesh: bool = False
    transfer: str | None = None  # filled by scheme default when unset
    c: float = 3.0
    c_r: float = 2.0
    c_s: float = 1.5
    x_r: float = 150.0
    x_s: float = 105.0
    L: float = 200.0
    M: int = 200
    dt: float = 0.1
    t_end: float = 50.0
    monitor_k: float = 1.0
    monitor_smoothing: bool = False
    deboor_tol: float = 0.05
    deboor_max_sweeps: int = 5
    remesh_every: int = 1
    frozen_operator: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_dir: Path = Path("out")
    snapshot_times: tuple[float, ...] = ()
    snapshot_samples_per_element: int = 10

    @property
    def basis_kind(self) -> BasisKind:
        return SCHEME_BASIS[self.scheme]

    @property
    def hamiltonian(self) -> str:
        return SCHEME_HAMILTONIAN[self.scheme]

    @property
    def num_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def _parse_bool(raw: str, key: str, lineno: int) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"line {lineno}: expected a boolean for '{key}', got '{raw}'")


def _parse_float(raw: str, key: str, lineno: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: expected a number for '{key}', got '{raw}'") from None


def _parse_int(raw: str, key: str, lineno: int) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: expected an integer for '{key}', got '{raw}'") from None


def _parse_float_list(raw: str, key: str, lineno: int) -> tuple[float, ...]:
    if not raw.strip():
        return ()
    return tuple(_parse_float(part.strip(), key, lineno) for part in raw.split(","))


def _parse_choice(raw: str, key: str, lineno: int, choices) -> str:
    if raw not in choices:
        raise ConfigError(
            f"line {lineno}: '{raw}' is not a valid {key} (choose from {', '.join(choices)})"
        )
    return raw


def parse_config(text: str, overrides: list[str] | None = None) -> RunConfig:
    """Parse a flat key=value document (with # comments) into a RunConfig.

    `overrides` are extra `key=value` entries applied after the file, as from
    the command line."""
    entries: list[tuple[str, str, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got '{stripped}'")
        key, _, value = stripped.partition("=")
        entries.append((key.strip(), value.strip(), lineno))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override '{item}' must look like key=value")
        key, _, value = item.partition("=")
        entries.append((key.strip(), value.strip(), 0))

    cfg = RunConfig()
    solver_kwargs: dict = {}
    basis_request: BasisKind | None = None
    for key, raw, lineno in entries:
        where = f"line {lineno}" if lineno else "override"
        if key == "problem":
            cfg.problem = _parse_choice(raw, key, lineno, PROBLEMS)
        elif key == "scheme":
            cfg.scheme = _parse_choice(raw, key, lineno, SCHEMES)
        elif key == "moving_mesh":
            cfg.moving_mesh = _parse_bool(raw, key, lineno)
        elif key == "transfer":
            cfg.transfer = _parse_choice(raw, key, lineno, TRANSFERS)
        elif key == "basis":
            if raw not in _BASIS_NAMES:
                raise ConfigError(
                    f"{where}: unknown basis '{raw}' (choose from {', '.join(_BASIS_NAMES)})"
                )
            basis_request = _BASIS_NAMES[raw]
        elif key in ("c", "c_r", "c_s", "x_r", "x_s", "L", "dt", "t_end", "monitor_k", "deboor_tol"):
            setattr(cfg, key, _parse_float(raw, key, lineno))
        elif key in ("M", "remesh_every", "deboor_max_sweeps", "snapshot_samples_per_element"):
            setattr(cfg, key, _parse_int(raw, key, lineno))
        elif key in ("monitor_smoothing", "frozen_operator"):
            setattr(cfg, key, _parse_bool(raw, key, lineno))
        elif key == "euler_predictor":
            solver_kwargs["euler_predictor"] = _parse_bool(raw, key, lineno)
        elif key == "newton_tol":
            solver_kwargs["newton_tol"] = _parse_float(raw, key, lineno)
        elif key == "max_newton_iters":
            solver_kwargs["max_newton_iters"] = _parse_int(raw, key, lineno)
        elif key == "jacobian_mode":
            solver_kwargs["jacobian_mode"] = _parse_choice(raw, key, lineno, JACOBIAN_MODES)
        elif key == "fd_epsilon":
            solver_kwargs["fd_epsilon"] = _parse_float(raw, key, lineno)
        elif key == "output_dir":
            cfg.output_dir = Path(raw)
        elif key == "snapshot_times":
            cfg.snapshot_times = _parse_float_list(raw, key, lineno)
        else:
            raise ConfigError(f"{where}: unknown key '{key}'")

    try:
        cfg.solver = SolverConfig(**solver_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.transfer is None:
        # The H1 scheme family ships with cubic interpolation transfer, the
        # H2 family with exact (conservative) transfer.
        cfg.transfer = "interpolate" if cfg.hamiltonian == "H1" else "conservative"

    if basis_request is not None and basis_request is not cfg.basis_kind:
        raise ConfigError(
            f"scheme {cfg.scheme} implies basis '{cfg.basis_kind.value}', "
            f"which conflicts with the requested '{basis_request.value}'"
        )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.dt <= 0:
        raise ConfigError("dt must be positive")
    if cfg.t_end < 0:
        raise ConfigError("t_end must be nonnegative")
    if cfg.L <= 0:
        raise ConfigError("L must be positive")
    if cfg.M < 4:
        raise ConfigError("M must be at least 4 elements")
    if cfg.remesh_every < 1:
        raise ConfigError("remesh_every must be at least 1")
    if cfg.snapshot_samples_per_element < 1:
        raise ConfigError("snapshot_samples_per_element must be at least 1")
    if cfg.problem == "soliton" and cfg.c <= 1.0:
        raise ConfigError("soliton wave speed c must exceed 1")
    if cfg.problem == "two_wave" and (cfg.c_r <= 1.0 or cfg.c_s <= 1.0):
        raise ConfigError("two-wave speeds c_r and c_s must exceed 1")
    if cfg.monitor_k < 0:
        raise ConfigError("monitor_k must be nonnegative")
    if cfg.deboor_tol <= 0:
        raise ConfigError("deboor_tol must be positive")
