"""Line-oriented run configuration: ``section.key = value`` with ``#`` comments."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .qtensor import MaterialParams, ParameterError
from .solve import SolveConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    surface_level: int = 3
    radial_layers: int = 12
    params: MaterialParams = field(default_factory=MaterialParams)
    L_schedule: tuple = (0.5, 0.25, 0.125, 0.0625)
    solver: SolveConfig = field(default_factory=SolveConfig)
    sweep_solver: SolveConfig = field(default_factory=lambda: SolveConfig(grad_tol=1e-6))
    init_noise: float = 0.0
    r_fit: float = 0.3
    mono_r_max: float = 0.5
    mono_n_radii: int = 8
    out_dir: Path = Path("out")
    seed: int = 0


def _int(s):
    return int(s)


def _float(s):
    return float(s)


def _floats(s):
    return tuple(float(v) for v in s.replace(",", " ").split())


def _path(s):
    return Path(s.strip().strip('"').strip("'"))


# key -> (target, attribute, converter); target is "run", "params", "solver" or "sweep"
_KEYS = {
    "mesh.surface_level": ("run", "surface_level", _int),
    "mesh.radial_layers": ("run", "radial_layers", _int),
    "params.a": ("params", "a", _float),
    "params.b": ("params", "b", _float),
    "params.c": ("params", "c", _float),
    "params.s1": ("params", "s1", _float),
    "params.s2": ("params", "s2", _float),
    "sweep.L_schedule": ("run", "L_schedule", _floats),
    "sweep.grad_tol": ("sweep", "grad_tol", _float),
    "sweep.max_iters": ("sweep", "max_iters", _int),
    "solver.max_iters": ("solver", "max_iters", _int),
    "solver.grad_tol": ("solver", "grad_tol", _float),
    "solver.step_init": ("solver", "step_init", _float),
    "solver.bb_min": ("solver", "bb_min", _float),
    "solver.bb_max": ("solver", "bb_max", _float),
    "solver.armijo_c": ("solver", "armijo_c", _float),
    "solver.proj_delta": ("solver", "proj_delta", _float),
    "solver.init_noise": ("run", "init_noise", _float),
    "analysis.r_fit": ("run", "r_fit", _float),
    "analysis.r_max": ("run", "mono_r_max", _float),
    "analysis.n_radii": ("run", "mono_n_radii", _int),
    "output.dir": ("run", "out_dir", _path),
    "seed": ("run", "seed", _int),
}

DOCUMENTED_KEYS = tuple(_KEYS)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration; unknown or repeated keys are errors."""
    seen: dict[str, int] = {}
    values: dict[str, dict] = {"run": {}, "params": {}, "solver": {}, "sweep": {}}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        target, attr, conv = _KEYS[key]
        try:
            values[target][attr] = conv(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None

    run = values["run"]
    try:
        params = MaterialParams(**values["params"])
        solver = SolveConfig(seed=run.get("seed", 0), **values["solver"])
        sweep_kw = {f.name: getattr(solver, f.name) for f in fields(SolveConfig)}
        sweep_kw["grad_tol"] = 1e-6
        sweep_kw.update(values["sweep"])
        sweep_solver = SolveConfig(**sweep_kw)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(params=params, solver=solver, sweep_solver=sweep_solver, **run)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    if not 0 <= cfg.surface_level <= 5:
        raise ConfigError("mesh.surface_level must be in [0, 5]")
    if not 1 <= cfg.radial_layers <= 64:
        raise ConfigError("mesh.radial_layers must be in [1, 64]")
    s = cfg.L_schedule
    if not s or any(L <= 0 for L in s) or any(b >= a for a, b in zip(s, s[1:])):
        raise ConfigError("sweep.L_schedule must be positive and strictly decreasing")
    if not cfg.r_fit > 0:
        raise ConfigError("analysis.r_fit must be positive")
    if not 0 < cfg.mono_r_max <= 1:
        raise ConfigError("analysis.r_max must lie in (0, 1]")
    if cfg.mono_n_radii < 2:
        raise ConfigError("analysis.n_radii must be at least 2")
    if cfg.init_noise < 0:
        raise ConfigError("solver.init_noise must be nonnegative")
    if cfg.seed < 0:
        raise ConfigError("seed must be unsigned")


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def with_overrides(cfg: RunConfig, out_dir=None, seed=None) -> RunConfig:
    if out_dir is not None:
        cfg = replace(cfg, out_dir=Path(out_dir))
    if seed is not None:
        if seed < 0:
            raise ConfigError("seed must be unsigned")
        cfg = replace(cfg, seed=seed, solver=replace(cfg.solver, seed=seed),
                      sweep_solver=replace(cfg.sweep_solver, seed=seed))
    return cfg
