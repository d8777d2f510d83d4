"""Measurable sets and measures on CP¹, their volumes, and relative density.

Membership is strict everywhere (a point on a cap boundary is outside the cap).
Every region and measure serialises back to the JSON document it was built from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from src.model.geometry import (
    HALF_PI,
    FSBall,
    QuadratureRule,
    SpherePoint,
    ball_volume,
    cap_rule,
    fs_distance_many,
    integrate,
    point_from_chart,
    point_from_polar,
)
from src.utils.errors import DomainError, ParseError, ValidationError
from src.utils.logger import get_module_logger, log_function_call, log_result
from src.utils.numerics import exact_sum, uniform01

regions_logger = get_module_logger("regions")


def _colatitude_many(z0, z1) -> np.ndarray:
    return np.arctan2(np.abs(z1), np.abs(z0))


def point_document(p: SpherePoint):
    chart = p.chart
    if chart == "inf":
        return "inf"
    return [float(chart.real), float(chart.imag)]


# ---------------------------------------------------------------------------
# Regions


class Region:
    """Base of the region DSL. Subclasses implement `mask` on coordinate arrays."""

    def mask(self, z0, z1) -> np.ndarray:
        raise NotImplementedError

    def to_document(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class All(Region):
    def mask(self, z0, z1):
        return np.ones(np.shape(z0), dtype=bool)

    def to_document(self):
        return {"type": "all"}


@dataclass(frozen=True)
class Empty(Region):
    def mask(self, z0, z1):
        return np.zeros(np.shape(z0), dtype=bool)

    def to_document(self):
        return {"type": "empty"}


@dataclass(frozen=True)
class Cap(Region):
    ball: FSBall

    def mask(self, z0, z1):
        return fs_distance_many(self.ball.center, z0, z1) < self.ball.radius

    def to_document(self):
        return {"type": "cap", "center": point_document(self.ball.center), "radius": self.ball.radius}


@dataclass(frozen=True)
class Band(Region):
    """colat_min < t < colat_max, t the distance to the chart origin; a band from 0 holds the origin."""

    colat_min: float
    colat_max: float

    def __post_init__(self):
        if not (0.0 <= self.colat_min < self.colat_max <= HALF_PI + 1e-15):
            raise ValidationError(f"band needs 0 <= colat_min < colat_max <= pi/2, "
                                  f"got ({self.colat_min}, {self.colat_max})")

    def mask(self, z0, z1):
        t = _colatitude_many(z0, z1)
        lower = t > self.colat_min if self.colat_min > 0.0 else np.ones(t.shape, dtype=bool)
        return lower & (t < self.colat_max)

    def to_document(self):
        return {"type": "band", "colat_min": self.colat_min, "colat_max": self.colat_max}


@dataclass(frozen=True)
class Stripes(Region):
    """Colatitude stripes of width fraction·period centred at the multiples of period."""

    period: float
    fraction: float

    def __post_init__(self):
        if self.period <= 0.0 or not (0.0 < self.fraction <= 1.0):
            raise ValidationError(f"stripes need period > 0 and fraction in (0, 1], "
                                  f"got ({self.period}, {self.fraction})")

    def mask(self, z0, z1):
        t = _colatitude_many(z0, z1)
        offset = np.abs(t - self.period * np.round(t / self.period))
        return offset < 0.5 * self.fraction * self.period

    def to_document(self):
        return {"type": "stripes", "period": self.period, "fraction": self.fraction}


@dataclass(frozen=True)
class Union(Region):
    members: Tuple[Region, ...]

    def mask(self, z0, z1):
        out = np.zeros(np.shape(z0), dtype=bool)
        for member in self.members:
            out |= member.mask(z0, z1)
        return out

    def to_document(self):
        return {"type": "union", "members": [m.to_document() for m in self.members]}


@dataclass(frozen=True)
class Intersection(Region):
    members: Tuple[Region, ...]

    def mask(self, z0, z1):
        out = np.ones(np.shape(z0), dtype=bool)
        for member in self.members:
            out &= member.mask(z0, z1)
        return out

    def to_document(self):
        return {"type": "intersection", "members": [m.to_document() for m in self.members]}


@dataclass(frozen=True)
class Complement(Region):
    region: Region

    def mask(self, z0, z1):
        return ~self.region.mask(z0, z1)

    def to_document(self):
        return {"type": "complement", "region": self.region.to_document()}


def random_cap_centers(seed: int, count: int):
    """Volume-uniform centres: s and azimuth from consecutive splitmix64 outputs."""
    return tuple(
        point_from_polar(uniform01(seed, 2 * i), 2.0 * math.pi * uniform01(seed, 2 * i + 1))
        for i in range(count)
    )


@dataclass(frozen=True)
class RandomCaps(Region):
    seed: int
    count: int
    radius: float
    caps: Tuple[Cap, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.count < 0:
            raise ValidationError(f"random_caps count must be >= 0, got {self.count}")
        if not 0.0 < self.radius <= HALF_PI:
            raise DomainError(f"random_caps radius {self.radius} outside (0, pi/2]")
        if not self.caps:
            expanded = tuple(Cap(FSBall(c, self.radius)) for c in random_cap_centers(self.seed, self.count))
            object.__setattr__(self, "caps", expanded)

    def mask(self, z0, z1):
        return Union(self.caps).mask(z0, z1)

    def to_document(self):
        return {"type": "random_caps", "seed": self.seed, "count": self.count, "radius": self.radius}


def contains(g: Region, p: SpherePoint) -> bool:
    return bool(g.mask(np.array([p.z0]), np.array([p.z1]))[0])


def region_volume(g: Region, rule: QuadratureRule) -> float:
    return integrate(lambda z0, z1: g.mask(z0, z1).astype(float), rule)


# ---------------------------------------------------------------------------
# Measures


class MeasureSpec:
    """A finite measure. `discretize(rule)` returns weighted points (z0, z1, masses)."""

    def discretize(self, rule: QuadratureRule):
        raise NotImplementedError

    def to_document(self) -> dict:
        raise NotImplementedError

    def total_mass(self, rule: QuadratureRule) -> float:
        return exact_sum(self.discretize(rule)[2])

    def scaled(self, factor: float) -> "MeasureSpec":
        raise NotImplementedError

    def __add__(self, other: "MeasureSpec") -> "MeasureSpec":
        return Combined((self, other))


@dataclass(frozen=True)
class VolumeOn(MeasureSpec):
    region: Region
    scale: float = 1.0

    def __post_init__(self):
        if not (self.scale >= 0.0 and math.isfinite(self.scale)):
            raise ValidationError(f"volume scale must be finite and >= 0, got {self.scale}")

    def discretize(self, rule):
        inside = self.region.mask(rule.z0, rule.z1)
        return rule.z0[inside], rule.z1[inside], self.scale * rule.weights[inside]

    def scaled(self, factor):
        return VolumeOn(self.region, self.scale * factor)

    def to_document(self):
        return {"type": "volume", "region": self.region.to_document(), "scale": self.scale}


@dataclass(frozen=True)
class Atoms(MeasureSpec):
    atoms: Tuple[Tuple[SpherePoint, float], ...]

    def __post_init__(self):
        for point, mass in self.atoms:
            if not (mass >= 0.0 and math.isfinite(mass)):
                raise ValidationError(f"atom mass must be finite and >= 0, got {mass}")

    def discretize(self, rule):
        z0 = np.array([p.z0 for p, _ in self.atoms], dtype=complex)
        z1 = np.array([p.z1 for p, _ in self.atoms], dtype=complex)
        masses = np.array([m for _, m in self.atoms], dtype=float)
        return z0, z1, masses

    def scaled(self, factor):
        return Atoms(tuple((p, m * factor) for p, m in self.atoms))

    def to_document(self):
        return {"type": "atoms", "atoms": [{"point": point_document(p), "mass": m} for p, m in self.atoms]}


def random_atoms(seed: int, count: int, mass: float) -> Atoms:
    return Atoms(tuple((c, float(mass)) for c in random_cap_centers(seed, count)))


@dataclass(frozen=True)
class Combined(MeasureSpec):
    parts: Tuple[MeasureSpec, ...]

    def discretize(self, rule):
        pieces = [part.discretize(rule) for part in self.parts]
        if not pieces:
            empty = np.zeros(0)
            return empty.astype(complex), empty.astype(complex), empty
        return tuple(np.concatenate([piece[i] for piece in pieces]) for i in range(3))

    def scaled(self, factor):
        return Combined(tuple(part.scaled(factor) for part in self.parts))

    def to_document(self):
        return {"type": "sum", "parts": [p.to_document() for p in self.parts]}


def ball_mass(mu: MeasureSpec, center: SpherePoint, r: float, rule: QuadratureRule) -> float:
    """μ(B(center, r)); volume parts are integrated on a cap rule centred at `center`."""
    if isinstance(mu, VolumeOn):
        local = cap_rule(center, r, rule.radial_order, rule.azimuthal_order)
        return mu.scale * region_volume(mu.region, local)
    if isinstance(mu, Combined):
        return exact_sum([ball_mass(part, center, r, rule) for part in mu.parts])
    z0, z1, masses = mu.discretize(rule)
    if masses.size == 0:
        return 0.0
    return exact_sum(masses[fs_distance_many(center, z0, z1) < r])


# ---------------------------------------------------------------------------
# Relative density


@dataclass(frozen=True)
class DensityReport:
    inf_ratio: float
    argmin_probe: SpherePoint
    R: float
    k: int
    probe_count: int


def probe_grid(count: int):
    """Fibonacci spiral, uniform for the volume: s_i = (i + ½)/count, golden-angle azimuth."""
    if count < 1:
        raise ValidationError(f"probe count must be >= 1, got {count}")
    golden_angle = math.pi * (3.0 - math.sqrt(5.0))
    return [point_from_polar((i + 0.5) / count, (i * golden_angle) % (2.0 * math.pi)) for i in range(count)]


def probe_count_for(k: int, R: float, per_ball: int = 8) -> int:
    """Probe count giving at least `per_ball` probes per ball of radius R/√k."""
    radius = min(R / math.sqrt(max(k, 1)), HALF_PI)
    return max(1, int(math.ceil(per_ball * math.pi / ball_volume(radius))))


def scaled_radius(k: int, R: float) -> float:
    if k < 1:
        raise DomainError(f"scale R/sqrt(k) needs k >= 1, got {k}")
    radius = R / math.sqrt(k)
    if R <= 0.0 or radius > HALF_PI:
        raise DomainError(f"R/sqrt(k) = {radius:.6g} outside (0, pi/2]")
    return radius


def relative_density(g: Region, k: int, R: float, probes, rule: QuadratureRule) -> DensityReport:
    """inf over probes a of V(g ∩ B(a, R/√k)) / V(B(a, R/√k))."""
    log_function_call(regions_logger, "relative_density", k=k, R=R, probes=len(probes))
    radius = scaled_radius(k, R)
    if not probes:
        raise ValidationError("relative_density needs at least one probe")
    volume = ball_volume(radius)
    best_ratio, best_probe = math.inf, probes[0]
    for probe in probes:
        local = cap_rule(probe, radius, rule.radial_order, rule.azimuthal_order)
        ratio = region_volume(g, local) / volume
        if ratio < best_ratio:
            best_ratio, best_probe = ratio, probe
    log_result(regions_logger, "relative_density", inf_ratio=best_ratio)
    return DensityReport(best_ratio, best_probe, R, k, len(probes))


# ---------------------------------------------------------------------------
# JSON documents


def _expect(doc, key, path, kinds=(int, float)):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"{path}.{key}", "missing field")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, kinds):
        raise ParseError(f"{path}.{key}", f"expected {'/'.join(k.__name__ for k in kinds)}, got {value!r}")
    return value


def _optional(doc, key, path, default):
    return _expect(doc, key, path) if key in doc else default


def parse_point(value, path="$") -> SpherePoint:
    if isinstance(value, str):
        if value.strip().lower() != "inf":
            raise ParseError(path, f"expected [re, im] or \"inf\", got {value!r}")
        return point_from_chart("inf")
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ParseError(path, f"expected [re, im] or \"inf\", got {value!r}")
    return point_from_chart(complex(value[0], value[1]))


def _checked(path, build):
    try:
        return build()
    except (DomainError, ValidationError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ValidationError(f"{path}: {exc}") from exc


def build_region(spec, path="$") -> Region:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ParseError(path, "region must be an object with a \"type\"")
    kind = spec["type"]
    if kind == "all":
        return All()
    if kind == "empty":
        return Empty()
    if kind == "cap":
        center = parse_point(spec.get("center"), f"{path}.center")
        radius = float(_expect(spec, "radius", path))
        return _checked(path, lambda: Cap(FSBall(center, radius)))
    if kind == "band":
        lo = float(_expect(spec, "colat_min", path))
        hi = float(_expect(spec, "colat_max", path))
        return _checked(path, lambda: Band(lo, hi))
    if kind == "stripes":
        period = float(_expect(spec, "period", path))
        fraction = float(_expect(spec, "fraction", path))
        return _checked(path, lambda: Stripes(period, fraction))
    if kind in ("union", "intersection"):
        members = _expect(spec, "members", path, kinds=(list,))
        built = tuple(build_region(m, f"{path}.members[{i}]") for i, m in enumerate(members))
        return Union(built) if kind == "union" else Intersection(built)
    if kind == "complement":
        return Complement(build_region(spec.get("region"), f"{path}.region"))
    if kind == "random_caps":
        seed = int(_expect(spec, "seed", path, kinds=(int,)))
        count = int(_expect(spec, "count", path, kinds=(int,)))
        radius = float(_expect(spec, "radius", path))
        if seed < 0 or seed >= 1 << 64:
            raise ValidationError(f"{path}.seed: must be a 64-bit unsigned integer")
        return _checked(path, lambda: RandomCaps(seed, count, radius))
    raise ParseError(f"{path}.type", f"unknown region type {kind!r}")


def build_measure(spec, path="$") -> MeasureSpec:
    if not isinstance(spec, dict) or "type" not in spec:
        raise ParseError(path, "measure must be an object with a \"type\"")
    kind = spec["type"]
    if kind == "volume":
        region = build_region(spec.get("region", {"type": "all"}), f"{path}.region")
        scale = float(_optional(spec, "scale", path, 1.0))
        return _checked(path, lambda: VolumeOn(region, scale))
    if kind == "atoms":
        entries = _expect(spec, "atoms", path, kinds=(list,))
        atoms = []
        for i, entry in enumerate(entries):
            where = f"{path}.atoms[{i}]"
            point = parse_point(entry.get("point") if isinstance(entry, dict) else None, f"{where}.point")
            atoms.append((point, float(_expect(entry, "mass", where))))
        return _checked(path, lambda: Atoms(tuple(atoms)))
    if kind == "random_atoms":
        seed = int(_expect(spec, "seed", path, kinds=(int,)))
        count = int(_expect(spec, "count", path, kinds=(int,)))
        mass = float(_optional(spec, "mass", path, 1.0))
        return _checked(path, lambda: random_atoms(seed, count, mass))
    if kind == "sum":
        parts = _expect(spec, "parts", path, kinds=(list,))
        return Combined(tuple(build_measure(p, f"{path}.parts[{i}]") for i, p in enumerate(parts)))
    raise ParseError(f"{path}.type", f"unknown measure type {kind!r}")
