"""Experiment configuration: TOML file <-> validated dataclasses."""
import dataclasses
import math
import sys
from dataclasses import dataclass, field
from importlib import resources

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .filters import FILTER_KINDS, FilterConfig
from .motion import build_ncv
from .proposals import RlProposalParams
from .sensor import SensorModel, snr_to_amplitude


@dataclass
class MotionSection:
    dt: float = 1.0
    sigma_ax: float = 0.1
    sigma_ay: float = 0.1


@dataclass
class SensorSection:
    range_psf: float = 1.56e6
    bearing_psf: float = 1.88e-4
    range_resolution: float = 500.0
    bearing_resolution: float = 5e-3
    range_min: float = 22e3
    range_max: float = 26e3
    bearing_min: float = -math.pi / 6
    bearing_max: float = math.pi / 6
    sigma_w: float = 1e-4
    snr_db: float = 80.0
    gate: float = 0.0


@dataclass
class ScenarioSection:
    steps: int = 30
    speed: float = 50.0
    start_range: float = 24e3
    start_bearing: float = 0.0
    heading: float = math.pi / 4
    position_area: float = 1e6
    velocity_area: float = 100.0
    n_runs: int = 50
    seed: int = 2017


@dataclass
class ProposalSection:
    epsilon: float = 1.0
    metric: str = "riemann"


@dataclass
class FilterSection:
    name: str
    n_particles: int
    n_burn_in: int = 0
    resampling: str = "systematic"


@dataclass
class OutputSection:
    directory: str = "out"


@dataclass
class ExperimentConfig:
    motion: MotionSection = field(default_factory=MotionSection)
    sensor: SensorSection = field(default_factory=SensorSection)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    proposal: ProposalSection = field(default_factory=ProposalSection)
    filters: list = field(default_factory=list)
    output: OutputSection = field(default_factory=OutputSection)

    def build_motion(self):
        m = self.motion
        return build_ncv(m.dt, m.sigma_ax, m.sigma_ay)

    def build_sensor(self):
        s = self.sensor
        return SensorModel(s.range_psf, s.bearing_psf, s.range_resolution, s.bearing_resolution,
                           s.range_min, s.range_max, s.bearing_min, s.bearing_max,
                           s.sigma_w, snr_to_amplitude(s.sigma_w, s.snr_db), s.gate)

    def proposal_params(self):
        return RlProposalParams(self.proposal.epsilon, self.proposal.metric)

    def filter_configs(self):
        params = self.proposal_params()
        return [FilterConfig(f.name, f.n_particles, f.n_burn_in, params, f.resampling)
                for f in self.filters]

    def to_dict(self):
        return dataclasses.asdict(self)


_SECTIONS = {
    "motion": MotionSection,
    "sensor": SensorSection,
    "scenario": ScenarioSection,
    "proposal": ProposalSection,
    "output": OutputSection,
}


def _coerce(section, name, value, ftype):
    key = f"{section}.{name}"
    if ftype in (float, "float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(key, "must be finite")
        return float(value)
    if ftype in (int, "int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if not isinstance(value, str):
        raise ConfigError(key, f"expected a string, got {value!r}")
    return value


def _section(section, cls, raw):
    if not isinstance(raw, dict):
        raise ConfigError(section, "expected a table")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for k in raw:
        if k not in fields:
            raise ConfigError(f"{section}.{k}", "unknown key")
    values = {}
    for name, f in fields.items():
        if name in raw:
            values[name] = _coerce(section, name, raw[name], f.type)
        elif f.default is dataclasses.MISSING:
            raise ConfigError(f"{section}.{name}", "missing required key")
    return cls(**values)


def from_dict(raw):
    """Build and validate an :class:`ExperimentConfig` from parsed TOML."""
    for k in raw:
        if k not in _SECTIONS and k != "filters":
            raise ConfigError(k, "unknown section")
    cfg = ExperimentConfig(**{name: _section(name, cls, raw.get(name, {}))
                              for name, cls in _SECTIONS.items()})
    filters = raw.get("filters", [])
    if not isinstance(filters, list) or not filters:
        raise ConfigError("filters", "at least one [[filters]] entry is required")
    cfg.filters = [_section(f"filters[{i}]", FilterSection, f) for i, f in enumerate(filters)]
    validate(cfg)
    return cfg


def validate(cfg):
    """Check every parameter by building the models it feeds."""
    def check(key, fn):
        try:
            return fn()
        except (ValueError, ArithmeticError) as exc:
            raise ConfigError(key, str(exc)) from exc

    check("motion", cfg.build_motion)
    sensor = check("sensor", cfg.build_sensor)
    check("proposal", cfg.proposal_params)
    seen = set()
    for i, f in enumerate(cfg.filters):
        if f.name not in FILTER_KINDS:
            raise ConfigError(f"filters[{i}].name", f"must be one of {FILTER_KINDS}")
        if f.name in seen:
            raise ConfigError(f"filters[{i}].name", f"duplicate filter {f.name!r}")
        seen.add(f.name)
    check("filters", cfg.filter_configs)
    s = cfg.scenario
    for key in ("steps", "n_runs", "seed"):
        if getattr(s, key) < 0:
            raise ConfigError(f"scenario.{key}", "must be non-negative")
    if s.n_runs < 1:
        raise ConfigError("scenario.n_runs", "must be at least 1")
    for key in ("speed", "start_range", "position_area", "velocity_area"):
        if not getattr(s, key) > 0:
            raise ConfigError(f"scenario.{key}", "must be positive")
    from .experiment import initial_state, straight_line

    traj = straight_line(initial_state(s.start_range, s.start_bearing, s.heading, s.speed),
                         s.steps, cfg.motion.dt)
    if not all(sensor.in_view(x) for x in traj):
        raise ConfigError("scenario", "trajectory leaves the sensor field of view")
    return cfg


def loads(text):
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"malformed TOML: {exc}") from exc
    return from_dict(raw)


def load_config(path=None):
    """Load a config file, or the packaged default when ``path`` is None."""
    if path is None:
        return loads(resources.files("rltbd").joinpath("default.toml").read_text())
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(cfg):
    return tomli_w.dumps(cfg.to_dict())
