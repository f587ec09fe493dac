"""Seeded synthetic cash-flow series for calibration and power experiments.

All series live on a Monday-to-Friday calendar starting 2009-01-01, so the
day-of-week feature takes values 1..5. Normal variates come from numpy's
``Generator(PCG64(seed)).standard_normal`` (ziggurat method), which makes
every series a pure function of its spec.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum

import numpy as np

from .dataset import CashFlowSeries

__all__ = [
    "EPOCH",
    "DEFAULT_RULE",
    "DEFAULT_DOM_EFFECTS",
    "DEFAULT_DOW_EFFECTS",
    "Region",
    "SynthKind",
    "SynthSpec",
    "generate",
    "working_days",
]

EPOCH = dt.date(2009, 1, 1)


class SynthKind(str, Enum):
    WHITE_NOISE = "WhiteNoise"
    SINUSOID = "Sinusoid"
    SEASONAL_LINEAR = "SeasonalLinear"
    NONLINEAR_INTERACTION = "NonLinearInteraction"


@dataclass(frozen=True)
class Region:
    """Inclusive (day-of-month, day-of-week) box with a constant value."""

    dom_lo: int
    dom_hi: int
    dow_lo: int
    dow_hi: int
    value: float

    def contains(self, dom, dow):
        return (dom >= self.dom_lo) & (dom <= self.dom_hi) & (dow >= self.dow_lo) & (dow <= self.dow_hi)


# days 25..29 on Fridays -> -1, other days 25..29 -> -2, everything else 2
DEFAULT_RULE = (
    Region(1, 24, 1, 7, 2.0),
    Region(30, 31, 1, 7, 2.0),
    Region(25, 29, 5, 7, -1.0),
    Region(25, 29, 1, 4, -2.0),
)

_d = np.arange(1, 32)
DEFAULT_DOM_EFFECTS = tuple(
    float(v) for v in np.round(np.cos(2 * np.pi * _d / 31) + 0.5 * np.sin(4 * np.pi * _d / 31), 6)
)
DEFAULT_DOW_EFFECTS = (0.6, -0.3, 0.0, -0.5, 0.2, 0.0, 0.0)

_DEFAULT_NOISE = {
    SynthKind.WHITE_NOISE: 1.0,
    SynthKind.SINUSOID: 0.0,
    SynthKind.SEASONAL_LINEAR: 1.0,
    SynthKind.NONLINEAR_INTERACTION: 0.25,
}


def working_days(n: int, start: dt.date = EPOCH) -> list[dt.date]:
    """First ``n`` Monday-to-Friday dates on or after ``start``."""
    out = []
    day = start
    one = dt.timedelta(days=1)
    while len(out) < n:
        if day.isoweekday() <= 5:
            out.append(day)
        day += one
    return out


@dataclass(frozen=True)
class SynthSpec:
    """Description of one synthetic company.

    ``noise_std=None`` selects the kind's default (1 for white noise and
    seasonal-linear, 0 for the sinusoid, 0.25 for the interaction rule).
    ``regions`` are matched in order; days matching none get
    ``default_value``.
    """

    kind: SynthKind
    length: int
    seed: int = 0
    company_id: int = 1
    level: float = 0.0
    noise_std: float | None = None
    period: float = 12.0
    amplitude: float = 1.0
    dom_effects: tuple[float, ...] = DEFAULT_DOM_EFFECTS
    dow_effects: tuple[float, ...] = DEFAULT_DOW_EFFECTS
    regions: tuple[Region, ...] = DEFAULT_RULE
    default_value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SynthKind(self.kind))
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if self.noise_std is not None and self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if len(self.dom_effects) != 31:
            raise ValueError("dom_effects needs 31 entries (days 1..31)")
        if len(self.dow_effects) != 7:
            raise ValueError("dow_effects needs 7 entries (Monday..Sunday)")
        if self.kind is SynthKind.SINUSOID and self.period <= 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "dom_effects", tuple(float(v) for v in self.dom_effects))
        object.__setattr__(self, "dow_effects", tuple(float(v) for v in self.dow_effects))
        object.__setattr__(
            self, "regions", tuple(r if isinstance(r, Region) else Region(*r) for r in self.regions)
        )

    @property
    def sigma(self) -> float:
        return _DEFAULT_NOISE[self.kind] if self.noise_std is None else float(self.noise_std)

    @classmethod
    def seasonal_linear(cls, length: int, seed: int = 0, r_squared: float = 0.3, **kw) -> "SynthSpec":
        """Seasonal-linear spec whose noise gives a population R^2 of ``r_squared``."""
        if not 0.0 < r_squared < 1.0:
            raise ValueError("r_squared must lie in (0, 1)")
        spec = cls(SynthKind.SEASONAL_LINEAR, length, seed, noise_std=0.0, **kw)
        signal_var = float(np.var(_signal(spec)))
        return replace(spec, noise_std=math.sqrt(signal_var * (1.0 - r_squared) / r_squared))

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        data = dict(data)
        if "regions" in data:
            data["regions"] = tuple(Region(**r) if isinstance(r, dict) else Region(*r)
                                    for r in data["regions"])
        for key in ("dom_effects", "dow_effects"):
            if key in data:
                data[key] = tuple(data[key])
        r2 = data.pop("r_squared", None)
        if r2 is not None:
            kind = SynthKind(data.pop("kind"))
            if kind is not SynthKind.SEASONAL_LINEAR:
                raise ValueError("r_squared only applies to SeasonalLinear specs")
            return cls.seasonal_linear(data.pop("length"), data.pop("seed", 0), r2, **data)
        return cls(**data)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["regions"] = [asdict(r) for r in self.regions]
        d["dom_effects"] = list(self.dom_effects)
        d["dow_effects"] = list(self.dow_effects)
        return d


def _signal(spec: SynthSpec, dates=None) -> np.ndarray:
    dates = working_days(spec.length) if dates is None else dates
    dom = np.array([d.day for d in dates])
    dow = np.array([d.isoweekday() for d in dates])
    n = len(dates)
    if spec.kind is SynthKind.WHITE_NOISE:
        return np.full(n, spec.level)
    if spec.kind is SynthKind.SINUSOID:
        t = np.arange(n)
        return spec.level + spec.amplitude * np.sin(2 * np.pi * t / spec.period)
    if spec.kind is SynthKind.SEASONAL_LINEAR:
        return spec.level + np.asarray(spec.dom_effects)[dom - 1] + np.asarray(spec.dow_effects)[dow - 1]
    out = np.full(n, spec.default_value, dtype=float)
    done = np.zeros(n, dtype=bool)
    for r in spec.regions:
        hit = r.contains(dom, dow) & ~done
        out[hit] = r.value
        done |= hit
    return spec.level + out


def generate(spec: SynthSpec) -> CashFlowSeries:
    dates = working_days(spec.length)
    values = _signal(spec, dates)
    if spec.sigma > 0:
        values = values + spec.sigma * np.random.default_rng(spec.seed).standard_normal(spec.length)
    return CashFlowSeries.from_arrays(spec.company_id, dates, values)
