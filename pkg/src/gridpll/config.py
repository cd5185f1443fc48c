"""Run configuration: a YAML document validated into typed settings.

Every section is optional and unknown keys are rejected.  Validation errors carry
the dotted key path and, when the offending key exists in the file, its line::

    run.yaml:7: pll.kp: must be > 0
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .dynamics import IntegratorConfig
from .errors import ConfigError
from .pll import (Family, Identity, PiecewiseLinear, PllConfig, Saturation, ScaledIdentity, adaptive_gain_phi,
                  atan_pll, srf_pll)
from .signals import GAMMA, NOMINAL_OMEGA, Constant, DampedSinusoid, DqVoltage, GridModel, TabulatedRoCoF


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# --------------------------------------------------------------------------- grid


class ConstantProfile(_Strict):
    type: Literal["constant"] = "constant"
    omega0: float = Field(NOMINAL_OMEGA, gt=0)


class DampedSinusoidProfile(_Strict):
    type: Literal["damped-sinusoid"]
    omega0: float = Field(NOMINAL_OMEGA, gt=0)
    amplitude: float = -8.0 * math.pi
    decay: float = Field(0.1, ge=0)
    rate: float = 0.2
    onset: float = Field(1.0, ge=0)


class TabulatedProfile(_Strict):
    type: Literal["tabulated-rocof"]
    omega0: float = Field(NOMINAL_OMEGA, gt=0)
    times: List[float]
    eta: List[float]
    eta_max: float = Field(ge=0)


Profile = Union[ConstantProfile, DampedSinusoidProfile, TabulatedProfile]


class GridSection(_Strict):
    V: float = Field(1.0, gt=0)
    phi0: float = 0.0
    profile: Profile = Field(default_factory=ConstantProfile, discriminator="type")
    phase_steps: List[Tuple[float, float]] = []

    @field_validator("phase_steps")
    @classmethod
    def _increasing(cls, v):
        times = [t for t, _ in v]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("phase-step times must be strictly increasing")
        if any(t < 0 for t in times):
            raise ValueError("phase-step times must be >= 0")
        return v

    def build(self) -> GridModel:
        p = self.profile
        if p.type == "constant":
            prof = Constant(p.omega0)
        elif p.type == "damped-sinusoid":
            prof = DampedSinusoid(p.omega0, p.amplitude, p.decay, p.rate, p.onset)
        else:
            prof = TabulatedRoCoF(p.omega0, tuple(p.times), tuple(p.eta), p.eta_max)
        return GridModel(self.V, self.phi0, prof, tuple(self.phase_steps))


# --------------------------------------------------------------------------- pll


class PhiSection(_Strict):
    type: Literal["identity", "scaled-identity", "saturation", "piecewise-linear", "adaptive"] = "identity"
    k: Optional[float] = Field(None, gt=0)
    slope: Optional[float] = Field(None, gt=0)
    limit: Optional[float] = Field(None, gt=0)
    breakpoints: Optional[List[Tuple[float, float]]] = None

    @model_validator(mode="after")
    def _params(self):
        need = {"scaled-identity": ("k",), "saturation": ("slope", "limit"), "piecewise-linear": ("breakpoints",)}
        for name in need.get(self.type, ()):
            if getattr(self, name) is None:
                raise ValueError(f"phi type {self.type!r} needs {name!r}")
        return self

    def build(self):
        if self.type == "identity":
            return Identity()
        if self.type == "scaled-identity":
            return ScaledIdentity(self.k)
        if self.type == "saturation":
            return Saturation(self.slope, self.limit)
        if self.type == "adaptive":
            return adaptive_gain_phi()
        return PiecewiseLinear(tuple(map(tuple, self.breakpoints)))


class PllSection(_Strict):
    """``family`` is ``SRF``/``ATAN`` for the conventional loops or ``gSRF``/``gATAN``."""

    family: Literal["SRF", "ATAN", "gSRF", "gATAN"] = "ATAN"
    kp: float = Field(200.0, gt=0)
    ki: float = Field(1000.0, gt=0)
    phi: PhiSection = Field(default_factory=PhiSection)
    reference: Optional[Tuple[float, float]] = None
    output_gain: Optional[float] = Field(None, gt=0)

    @field_validator("reference")
    @classmethod
    def _unit(cls, v):
        if v is not None and abs(math.hypot(*v) - 1.0) > 1e-9:
            raise ValueError("reference must be a unit vector (it is scaled by gamma*V)")
        return v

    @model_validator(mode="after")
    def _conventional(self):
        if self.family in ("SRF", "ATAN"):
            extra = [k for k in ("reference", "output_gain") if getattr(self, k) is not None]
            if self.phi.type != "identity":
                extra.append("phi")
            if extra:
                raise ValueError(f"{', '.join(extra)} only apply to the gSRF/gATAN families")
        return self

    def build(self, V) -> PllConfig:
        if self.family == "SRF":
            return srf_pll(self.kp, self.ki, V)
        if self.family == "ATAN":
            return atan_pll(self.kp, self.ki, V)
        ref = None if self.reference is None else DqVoltage(GAMMA * V * self.reference[0], GAMMA * V * self.reference[1])
        return PllConfig(Family(self.family), self.kp, self.ki, self.phi.build(), V, ref,
                         1.0 if self.output_gain is None else self.output_gain)


class IntegratorSection(_Strict):
    dt: float = Field(1e-4, gt=0, le=1e-3)
    t_end: float = Field(1.0, gt=0)
    method: Literal["RK4"] = "RK4"
    record_stride: int = Field(1, ge=1)

    def build(self) -> IntegratorConfig:
        return IntegratorConfig(self.dt, self.t_end, self.method, self.record_stride)


class InitialSection(_Strict):
    """Angle error and frequency error at ``t = 0``."""

    delta: float = 0.0
    omega_error: float = 0.0


class Range(_Strict):
    min: float
    max: float
    count: int = Field(ge=1)

    @model_validator(mode="after")
    def _order(self):
        if self.max < self.min:
            raise ValueError("max must be >= min")
        return self


class PortraitSection(_Strict):
    delta: Range = Range(min=-math.pi, max=math.pi, count=5)
    omega_error: Range = Range(min=-50.0, max=50.0, count=5)
    angle_tol: float = Field(1e-3, gt=0)
    omega_tol: float = Field(1e-2, gt=0)


class RoaSection(_Strict):
    h: int = 0
    kind: Literal["derived-sublevel", "as-printed"] = "derived-sublevel"
    n: int = Field(500, ge=0)
    t_end: float = Field(5.0, gt=0)
    dt: float = Field(1e-4, gt=0, le=1e-3)

    @field_validator("h")
    @classmethod
    def _even(cls, v):
        if v % 2:
            raise ValueError("h must be even")
        return v


class BoundSection(_Strict):
    eta_max: Optional[float] = Field(None, ge=0)
    variant: Literal["as-printed", "derived-khalil", "both"] = "both"
    grid_points: int = Field(10_000, ge=10)
    window: Tuple[float, float] = (30.0, 60.0)


class ScenarioSection(_Strict):
    name: Literal["high-inertia-steps", "low-inertia-disturbance"]
    jumps: Optional[List[float]] = None
    dt: Optional[float] = Field(None, gt=0, le=1e-3)
    t_end: Optional[float] = Field(None, gt=0)
    record_stride: Optional[int] = Field(None, ge=1)


class RunConfig(_Strict):
    seed: int = 0
    out_dir: str = "out"
    representation: Literal["polar", "dq"] = "polar"
    grid: GridSection = Field(default_factory=GridSection)
    pll: PllSection = Field(default_factory=PllSection)
    integrator: IntegratorSection = Field(default_factory=IntegratorSection)
    initial: InitialSection = Field(default_factory=InitialSection)
    portrait: PortraitSection = Field(default_factory=PortraitSection)
    roa: RoaSection = Field(default_factory=RoaSection)
    bound: BoundSection = Field(default_factory=BoundSection)
    scenario: Optional[ScenarioSection] = None

    def grid_model(self):
        return self.grid.build()

    def pll_config(self):
        return self.pll.build(self.grid.V)


# --------------------------------------------------------------------------- loading


def _line_index(node, path=(), out=None):
    """Map key paths to 1-based line numbers of a composed YAML node tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            p = path + (k.value,)
            out[p] = k.start_mark.line + 1
            _line_index(v, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            p = path + (i,)
            out[p] = v.start_mark.line + 1
            _line_index(v, p, out)
    return out


def _diagnostics(err: ValidationError, lines, source):
    probs = []
    for e in err.errors():
        # drop union/discriminator tags that pydantic inserts into the location
        loc = tuple(p for p in e["loc"] if not (isinstance(p, str) and p in
                                                ("constant", "damped-sinusoid", "tabulated-rocof")))
        line = None
        for k in range(len(loc), 0, -1):
            line = lines.get(tuple(str(p) if isinstance(p, str) else p for p in loc[:k]))
            if line is not None:
                break
        key = ".".join(str(p) for p in loc) or "<root>"
        msg = e["msg"].removeprefix("Value error, ")
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        probs.append(f"{where}{key}: {msg}")
    return probs


def parse_config(text, source="<config>") -> RunConfig:
    """Validate YAML text into a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        With one ``source:line: key.path: message`` diagnostic per problem.
    """
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f"{mark.line + 1}" if mark is not None else "?"
        raise ConfigError([f"{source}:{line}: malformed YAML: {getattr(exc, 'problem', exc)}"]) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError([f"{source}:1: <root>: expected a mapping of sections"])
    lines = _line_index(node) if node is not None else {}
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_diagnostics(exc, lines, source)) from None
    # domain-level checks that need several sections at once
    try:
        cfg.grid_model()
        cfg.pll_config()
        cfg.integrator.build()
    except ValueError as exc:
        raise ConfigError([f"{source}: {exc}"]) from None
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read config: {exc.strerror}"]) from None
    return parse_config(text, str(path))
