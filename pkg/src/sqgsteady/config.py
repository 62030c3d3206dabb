"""Run configuration: strict TOML parsing, defaults and a content hash.

Example::

    scenario = "steady"

    [grid]
    n = 64

    [physics]
    kappa = 1.0
    alpha = 1.0

    [force]
    rho0 = 5.0
    rho1 = 10.0
    target_x_norm = 0.05

Unknown sections or keys are rejected.  Every field not given in the file
is filled from the defaults below and listed in ``RunConfig.defaulted``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .errors import ConfigError

SCENARIOS = ("steady", "evolve", "stability", "decay", "verify", "sweep")


@dataclass(frozen=True)
class GridConfig:
    n: int = 64
    box_length: float = 2 * math.pi
    dealias_fraction: float = 2 / 3


@dataclass(frozen=True)
class PhysicsConfig:
    kappa: float = 1.0
    alpha: float = 1.0
    epsilon: float = 0.0


@dataclass(frozen=True)
class ForceConfig:
    rho0: float = 5.0
    rho1: float = 10.0
    amplitude: float = 1.0  # 0 gives the zero force
    seed: int = 7
    target_x_norm: float = 0.05


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    t_final: float = 1.0
    integrator: str = "etd_rk2"
    output_stride: int = 100
    cfl_limit: float = 0.5


@dataclass(frozen=True)
class SteadyConfig:
    route: str = "direct"
    inner_tol: float = 1e-14
    inner_max_iter: int = 500
    outer_tol: float = 1e-12
    outer_max_iter: int = 60
    route_dt: float = 5e-3
    tail_tol: float = 1e-10
    quadrature: str = "etd"
    compare_routes: bool = False
    uniqueness_seeds: list = field(default_factory=list)


@dataclass(frozen=True)
class EvolveConfig:
    initial_l2: float = 0.1
    initial_seed: int = 11
    initial_kmax: float = 6.0


@dataclass(frozen=True)
class StabilityConfig:
    w0_l2: float = 0.1
    w0_seed: int = 11
    w0_kmax: float = 6.0
    t_final: float = 50.0
    gamma: float = 6.0
    l_exponent: float = 6.0
    cross_check: bool = True
    control_run: bool = True
    energy_tol: float = 1e-6
    decay_factor: float = 1e-3


@dataclass(frozen=True)
class DecayConfig:
    t_final: float = 50.0
    dt: float = 1e-2
    l_exponent: float = 6.0
    window_start: float = 1.0


@dataclass(frozen=True)
class VerifyConfig:
    suite_seeds: int = 100
    envelope_seeds: int = 50
    envelope_rho0: float = 5.0
    envelope_rho1: float = 10.0
    compare_n: int = 128


@dataclass(frozen=True)
class SweepConfig:
    scenario: str = "steady"
    workers: int = 1
    parameters: dict = field(default_factory=dict)  # "section.key" -> list


SECTIONS = {
    "grid": GridConfig, "physics": PhysicsConfig, "force": ForceConfig,
    "solver": SolverConfig, "steady": SteadyConfig, "evolve": EvolveConfig,
    "stability": StabilityConfig, "decay": DecayConfig, "verify": VerifyConfig,
    "sweep": SweepConfig,
}
TOP_LEVEL = ("scenario", "output_dir")


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    grid: GridConfig
    physics: PhysicsConfig
    force: ForceConfig
    solver: SolverConfig
    steady: SteadyConfig
    evolve: EvolveConfig
    stability: StabilityConfig
    decay: DecayConfig
    verify: VerifyConfig
    sweep: SweepConfig
    output_dir: str | None = None
    defaulted: tuple = ()

    def content(self) -> dict:
        """Canonical content covered by the hash (output_dir excluded)."""
        out = {"scenario": self.scenario}
        for name in SECTIONS:
            out[name] = dataclasses.asdict(getattr(self, name))
        return out

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.content(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)

    def with_override(self, dotted: str, value) -> RunConfig:
        """Copy with ``section.key`` set to ``value`` (validated)."""
        section, _, key = dotted.partition(".")
        if section not in SECTIONS or not key:
            raise ConfigError(f"bad override path {dotted!r}")
        raw = self.content()
        raw[section][key] = value
        raw["output_dir"] = self.output_dir
        return build_config(raw)


def _coerce(path: str, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{path}: must be finite")
        return value
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return list(value)
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected a table, got {value!r}")
        return dict(value)
    return value


def _section(name: str, cls, raw: dict, defaulted: list):
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    proto = cls()
    names = [f.name for f in dataclasses.fields(cls)]
    unknown = sorted(set(raw) - set(names))
    if unknown:
        raise ConfigError(f"[{name}]: unknown key(s) {', '.join(unknown)}; "
                          f"allowed: {', '.join(names)}")
    kw = {}
    for key in names:
        if key in raw:
            kw[key] = _coerce(f"{name}.{key}", raw[key], getattr(proto, key))
        else:
            defaulted.append(f"{name}.{key}")
    return cls(**kw)


def _positive(path: str, value):
    if not value > 0:
        raise ConfigError(f"{path} must be positive, got {value}")


def _validate(cfg: RunConfig) -> None:
    g = cfg.grid
    if g.n < 8 or g.n & (g.n - 1):
        raise ConfigError(f"grid.n must be a power of two >= 8, got {g.n}")
    _positive("grid.box_length", g.box_length)
    if not 0 < g.dealias_fraction <= 1:
        raise ConfigError(f"grid.dealias_fraction must lie in (0, 1], got {g.dealias_fraction}")
    p = cfg.physics
    _positive("physics.kappa", p.kappa)
    if not 1 <= p.alpha < 2:
        raise ConfigError(f"physics.alpha must satisfy alpha ∈ [1,2), got {p.alpha}")
    if p.epsilon < 0:
        raise ConfigError(f"physics.epsilon must be >= 0, got {p.epsilon}")
    f = cfg.force
    _positive("force.rho0", f.rho0)
    if f.rho1 < f.rho0:
        raise ConfigError(f"force.rho1 ({f.rho1}) must be >= force.rho0 ({f.rho0})")
    if f.amplitude < 0:
        raise ConfigError(f"force.amplitude must be >= 0, got {f.amplitude}")
    if not 0 <= f.seed < 2 ** 64:
        raise ConfigError(f"force.seed must fit in u64, got {f.seed}")
    _positive("force.target_x_norm", f.target_x_norm)
    s = cfg.solver
    _positive("solver.dt", s.dt)
    _positive("solver.t_final", s.t_final)
    _positive("solver.cfl_limit", s.cfl_limit)
    if s.integrator not in ("etd_rk2", "imex_cnab2"):
        raise ConfigError(f"solver.integrator must be etd_rk2 or imex_cnab2, got {s.integrator!r}")
    if s.output_stride < 1:
        raise ConfigError(f"solver.output_stride must be >= 1, got {s.output_stride}")
    st = cfg.steady
    if st.route not in ("direct", "time_integral"):
        raise ConfigError(f"steady.route must be direct or time_integral, got {st.route!r}")
    if st.quadrature not in ("etd", "trapezoid"):
        raise ConfigError(f"steady.quadrature must be etd or trapezoid, got {st.quadrature!r}")
    for key in ("inner_tol", "outer_tol", "route_dt", "tail_tol"):
        _positive(f"steady.{key}", getattr(st, key))
    for key in ("inner_max_iter", "outer_max_iter"):
        _positive(f"steady.{key}", getattr(st, key))
    for v in st.uniqueness_seeds:
        if not (v == "zero" or v == "perturbed" or (isinstance(v, int) and not isinstance(v, bool))):
            raise ConfigError(f"steady.uniqueness_seeds entries must be 'zero', 'perturbed' "
                              f"or integers, got {v!r}")
    ev = cfg.evolve
    _positive("evolve.initial_kmax", ev.initial_kmax)
    if ev.initial_l2 < 0:
        raise ConfigError("evolve.initial_l2 must be >= 0")
    sb = cfg.stability
    for key in ("t_final", "gamma", "energy_tol", "decay_factor", "w0_kmax"):
        _positive(f"stability.{key}", getattr(sb, key))
    if sb.w0_l2 < 0:
        raise ConfigError("stability.w0_l2 must be >= 0")
    if not sb.l_exponent > 5:
        raise ConfigError(f"stability.l_exponent must exceed 5, got {sb.l_exponent}")
    dc = cfg.decay
    _positive("decay.t_final", dc.t_final)
    _positive("decay.dt", dc.dt)
    if not dc.l_exponent > 5:
        raise ConfigError(f"decay.l_exponent must exceed 5, got {dc.l_exponent}")
    vf = cfg.verify
    for key in ("suite_seeds", "envelope_seeds", "envelope_rho0", "envelope_rho1", "compare_n"):
        _positive(f"verify.{key}", getattr(vf, key))
    sw = cfg.sweep
    if sw.scenario not in SCENARIOS or sw.scenario == "sweep":
        raise ConfigError(f"sweep.scenario must be one of {SCENARIOS[:-1]}, got {sw.scenario!r}")
    _positive("sweep.workers", sw.workers)
    for key, vals in sw.parameters.items():
        section, _, name = key.partition(".")
        if section not in SECTIONS or section == "sweep" or \
                name not in {f.name for f in dataclasses.fields(SECTIONS[section])}:
            raise ConfigError(f"sweep.parameters: unknown field {key!r}")
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"sweep.parameters.{key} must be a non-empty list")


def build_config(raw: dict) -> RunConfig:
    """Validate a parsed mapping and fill in defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    unknown = sorted(set(raw) - set(SECTIONS) - set(TOP_LEVEL))
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    if "scenario" not in raw:
        raise ConfigError("missing required key 'scenario'")
    scenario = raw["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {', '.join(SCENARIOS)}, got {scenario!r}")
    out_dir = raw.get("output_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("output_dir must be a string")
    defaulted: list = []
    sections = {name: _section(name, cls, raw.get(name, {}), defaulted)
                for name, cls in SECTIONS.items()}
    cfg = RunConfig(scenario=scenario, output_dir=out_dir, defaulted=tuple(defaulted),
                    **sections)
    _validate(cfg)
    return cfg


def parse_config(source) -> RunConfig:
    """Parse TOML from a path or a string.

    Syntax errors (including duplicate keys) are reported with line and
    column; validation errors name the field and the violated constraint.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and source.endswith(".toml")):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
    else:
        text = source
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    return build_config(raw)
