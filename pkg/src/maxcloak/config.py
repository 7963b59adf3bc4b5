"""Experiment configuration: INI parsing, validation, defaults and hashing."""

import configparser
import hashlib
import io
from dataclasses import dataclass, field, fields

from .errors import InvalidParameterError


class ConfigError(InvalidParameterError):
    """One or more configuration problems, reported together."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


def _floats(text):
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def _fmt(value):
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return str(value)


@dataclass
class SweepSection:
    rhos: tuple = (0.1, 0.05, 0.025)
    omegas: tuple = (0.1, 0.2, 0.5, 1.0)
    omega: float = 1.0


@dataclass
class SourceSection:
    profile: str = "shell"
    r_in: float = 3.5
    r_out: float = 4.5
    direction: tuple = (0.0, 0.0, 1.0)
    amplitude: float = 1.0
    power: int = 6


@dataclass
class MediumSection:
    kind: str = "paper"
    eps_core: float = 1.0
    mu_core: float = 1.0


@dataclass
class ObservationSection:
    r_in: float = 2.0
    r_out: float = 3.0
    point_radius: float = 2.5
    point_order: int = 3


@dataclass
class TimeSection:
    center: float = 1.0
    bandwidth: float = 0.5
    T: float = 60.0


@dataclass
class IdentitySection:
    rho: float = 0.1
    omega: float = 1.0
    R: float = 10.0


@dataclass
class ToleranceSection:
    quad: float = 1e-6
    identity: float = 1e-5
    time: float = 1e-3


@dataclass
class SolverSection:
    n_max_cap: int = 60


_SECTIONS = {
    "sweep": SweepSection,
    "source": SourceSection,
    "medium": MediumSection,
    "observation": ObservationSection,
    "time": TimeSection,
    "identities": IdentitySection,
    "tolerances": ToleranceSection,
    "solver": SolverSection,
}


@dataclass
class ExperimentConfig:
    """All settings of a run; every field has a documented default."""

    sweep: SweepSection = field(default_factory=SweepSection)
    source: SourceSection = field(default_factory=SourceSection)
    medium: MediumSection = field(default_factory=MediumSection)
    observation: ObservationSection = field(default_factory=ObservationSection)
    time: TimeSection = field(default_factory=TimeSection)
    identities: IdentitySection = field(default_factory=IdentitySection)
    tolerances: ToleranceSection = field(default_factory=ToleranceSection)
    solver: SolverSection = field(default_factory=SolverSection)

    # -- serialisation -------------------------------------------------------
    def to_ini(self):
        parser = configparser.ConfigParser()
        parser.optionxform = str
        for name in _SECTIONS:
            sec = getattr(self, name)
            parser[name] = {f.name: _fmt(getattr(sec, f.name)) for f in fields(sec)}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text):
        """Parse INI text; unknown sections or keys and bad values are collected."""
        parser = configparser.ConfigParser()
        parser.optionxform = str
        problems = []
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError([f"unreadable file: {exc}"]) from None
        cfg = cls()
        for name in parser.sections():
            if name not in _SECTIONS:
                problems.append(f"unknown section [{name}]")
                continue
            sec = getattr(cfg, name)
            known = {f.name: f for f in fields(sec)}
            for key, raw in parser[name].items():
                if key not in known:
                    problems.append(f"unknown key {name}.{key}")
                    continue
                default = getattr(sec, key)
                try:
                    if isinstance(default, tuple):
                        value = _floats(raw)
                    elif isinstance(default, bool):
                        value = parser[name].getboolean(key)
                    elif isinstance(default, int):
                        value = int(raw)
                    elif isinstance(default, float):
                        value = float(raw)
                    else:
                        value = raw.strip()
                except ValueError:
                    problems.append(f"{name}.{key}: cannot parse {raw!r}")
                    continue
                setattr(sec, key, value)
        if problems:
            raise ConfigError(problems)
        return cfg

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_ini(fh.read())

    def hash(self):
        """Short digest of the effective configuration."""
        return hashlib.sha256(self.to_ini().encode("utf-8")).hexdigest()[:12]

    # -- validation ----------------------------------------------------------
    def problems(self, command=None):
        """List of human-readable problems; empty when the config is usable."""
        out = []
        sw, src, med, obs = self.sweep, self.source, self.medium, self.observation
        if command in (None, "sweep-rho", "solve"):
            if command == "sweep-rho" and len(sw.rhos) < 3:
                out.append("sweep.rhos: need at least three values")
            if any(not (0 < r < 0.3) for r in sw.rhos):
                out.append("sweep.rhos: values must lie in (0, 0.3)")
            if any(b >= a for a, b in zip(sw.rhos, sw.rhos[1:])):
                out.append("sweep.rhos: values must be strictly decreasing")
        if any(w <= 0 for w in sw.omegas) or not sw.omegas:
            out.append("sweep.omegas: need positive frequencies")
        if sw.omega <= 0:
            out.append("sweep.omega: must be positive")
        if src.profile not in ("shell", "patch"):
            out.append("source.profile: must be 'shell' or 'patch'")
        if not (2 < src.r_in < src.r_out):
            out.append("source: need 2 < r_in < r_out")
        if len(src.direction) != 3 or not any(src.direction):
            out.append("source.direction: need three components, not all zero")
        if src.power < 2:
            out.append("source.power: must be at least 2")
        if med.kind not in ("paper", "vacuum"):
            out.append("medium.kind: must be 'paper' or 'vacuum'")
        if not (2 <= obs.r_in < obs.r_out):
            out.append("observation: need 2 <= r_in < r_out")
        if obs.point_radius <= 1 or obs.point_radius == 2:
            out.append("observation.point_radius: need |x| > 1 and |x| != 2")
        if obs.point_order < 1:
            out.append("observation.point_order: must be positive")
        if self.time.bandwidth <= 0 or self.time.center < 0 or self.time.T <= 0:
            out.append("time: need bandwidth > 0, center >= 0, T > 0")
        ids = self.identities
        if not (0 < ids.rho < 1) or ids.omega <= 0 or ids.R <= 1:
            out.append("identities: need 0 < rho < 1, omega > 0, R > 1")
        for f in fields(self.tolerances):
            if not getattr(self.tolerances, f.name) > 0:
                out.append(f"tolerances.{f.name}: must be positive")
        if not (1 <= self.solver.n_max_cap <= 200):
            out.append("solver.n_max_cap: must lie in [1, 200]")
        return out

    def validate(self, command=None):
        probs = self.problems(command)
        if probs:
            raise ConfigError(probs)
        return self

    # -- factories -----------------------------------------------------------
    def make_source(self):
        from .sources import make_divfree_current

        s = self.source
        return make_divfree_current(s.profile, r_in=s.r_in, r_out=s.r_out, c=s.direction,
                                    amplitude=s.amplitude, power=s.power)

    def medium_factory(self):
        from .visibility import default_medium, vacuum_medium

        return default_medium if self.medium.kind == "paper" else vacuum_medium

    def observation_points(self):
        from .quadrature import sphere_rule

        rule = sphere_rule(self.observation.point_order)
        return self.observation.point_radius * rule.directions, rule.weights
