"""Degree-truncated Fock space on the plane, weight e^{−2|z|²}.

Regions live inside the bulk disk |z| < √(N/2), where the truncated kernel is
close to the true one. Norming constants are quoted relative to the bulk Gram,
C = λ_min(bulk)/λ_min(g), so the truncation leak cancels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln

from src.model.spectra import CHUNK, NORMING_FLOOR, HermitianMatrix, eigh
from src.utils.errors import ConfigError, ParseError, ValidationError
from src.utils.logger import get_module_logger, log_function_call, log_result
from src.utils.numerics import CompensatedAccumulator, uniform01

fock_logger = get_module_logger("fock")

MAX_FOCK_DEGREE = 128


@dataclass(frozen=True, eq=False)
class FockSpace:
    max_degree: int
    ortho_norm_sq: np.ndarray
    bulk_radius: float

    @property
    def dimension(self) -> int:
        return self.max_degree + 1


def fock_space(N: int) -> FockSpace:
    """‖z^j‖² = π·j!/2^{j+1}, computed in log form."""
    if not isinstance(N, (int, np.integer)) or N < 0 or N > MAX_FOCK_DEGREE:
        raise ConfigError(f"Fock degree N={N} outside [0, {MAX_FOCK_DEGREE}]")
    j = np.arange(int(N) + 1)
    log_norm = math.log(math.pi) + gammaln(j + 1) - (j + 1) * math.log(2.0)
    return FockSpace(int(N), np.exp(log_norm), math.sqrt(N / 2.0))


def fock_basis_values(space: FockSpace, z) -> np.ndarray:
    """B[n, j] = e_j(z_n)·e^{−|z_n|²}, so that Σ m·B·B̄ carries the full weight e^{−2|z|²}."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    u = np.abs(z) ** 2
    j = np.arange(space.dimension)
    log_u = np.log(np.maximum(u, 1e-300))
    log_mod = 0.5 * j[None, :] * log_u[:, None] - 0.5 * np.log(space.ortho_norm_sq)[None, :] - u[:, None]
    return np.exp(log_mod) * np.exp(1j * np.outer(np.angle(z), j))


@dataclass(frozen=True, eq=False)
class PlanarRule:
    """Gauss–Legendre in u = |z|² on [0, radius²] times the uniform azimuthal rule; dm = du·dφ/2."""

    z: np.ndarray
    weights: np.ndarray
    radius: float
    radial_order: int
    azimuthal_order: int

    def __len__(self):
        return self.weights.size


def make_planar_rule(radius: float, radial_nodes: int, azimuthal_nodes: int) -> PlanarRule:
    if radial_nodes < 1 or azimuthal_nodes < 1:
        raise ConfigError(f"planar orders must be positive, got {radial_nodes}x{azimuthal_nodes}")
    if not radius > 0.0:
        raise ConfigError(f"planar rule radius must be positive, got {radius}")
    x, w = leggauss(radial_nodes)
    half = 0.5 * radius * radius
    u = half * (x + 1.0)
    phi = 2.0 * math.pi * np.arange(azimuthal_nodes) / azimuthal_nodes
    z = np.sqrt(np.repeat(u, azimuthal_nodes)) * np.exp(1j * np.tile(phi, radial_nodes))
    weights = np.repeat(half * w, azimuthal_nodes) * (math.pi / azimuthal_nodes)
    return PlanarRule(z, weights, float(radius), radial_nodes, azimuthal_nodes)


def bulk_rule(space: FockSpace, radial_nodes: int = 128, azimuthal_nodes: int = 256) -> PlanarRule:
    """Rule on the bulk disk, raised to the minimum orders the degree needs."""
    radial = max(radial_nodes, space.max_degree + 2)
    azimuthal = max(azimuthal_nodes, 2 * space.max_degree + 1)
    return make_planar_rule(max(space.bulk_radius, 1e-3), radial, azimuthal)


# ---------------------------------------------------------------------------
# Planar regions, always read inside the bulk disk


class PlanarRegion:
    def mask(self, z) -> np.ndarray:
        raise NotImplementedError

    def to_document(self) -> dict:
        raise NotImplementedError


def _complex_document(c: complex):
    return [float(c.real), float(c.imag)]


@dataclass(frozen=True)
class Bulk(PlanarRegion):
    def mask(self, z):
        return np.ones(np.shape(z), dtype=bool)

    def to_document(self):
        return {"type": "bulk"}


@dataclass(frozen=True)
class Nowhere(PlanarRegion):
    def mask(self, z):
        return np.zeros(np.shape(z), dtype=bool)

    def to_document(self):
        return {"type": "empty"}


@dataclass(frozen=True)
class Disk(PlanarRegion):
    center: complex
    radius: float

    def mask(self, z):
        return np.abs(z - self.center) < self.radius

    def to_document(self):
        return {"type": "disk", "center": _complex_document(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Annulus(PlanarRegion):
    center: complex
    inner: float
    outer: float

    def __post_init__(self):
        if not (0.0 <= self.inner < self.outer):
            raise ValidationError(f"annulus radii must satisfy 0 <= inner < outer, got ({self.inner}, {self.outer})")

    def mask(self, z):
        r = np.abs(z - self.center)
        return (r > self.inner) & (r < self.outer)

    def to_document(self):
        return {"type": "annulus", "center": _complex_document(self.center),
                "inner": self.inner, "outer": self.outer}


@dataclass(frozen=True)
class PlanarUnion(PlanarRegion):
    members: Tuple[PlanarRegion, ...]

    def mask(self, z):
        out = np.zeros(np.shape(z), dtype=bool)
        for member in self.members:
            out |= member.mask(z)
        return out

    def to_document(self):
        return {"type": "union", "members": [m.to_document() for m in self.members]}


@dataclass(frozen=True)
class PlanarComplement(PlanarRegion):
    region: PlanarRegion

    def mask(self, z):
        return ~self.region.mask(z)

    def to_document(self):
        return {"type": "complement", "region": self.region.to_document()}


@dataclass(frozen=True)
class PeriodicHoles(PlanarRegion):
    """The plane minus disks of radius `hole_radius` centred on a square lattice.

    The lattice offset is drawn from `seed`; `shift` translates the whole pattern.
    """

    seed: int
    spacing: float
    hole_radius: float
    shift: complex = 0j

    def __post_init__(self):
        if not self.spacing > 0.0:
            raise ValidationError(f"hole spacing must be positive, got {self.spacing}")
        if not (0.0 <= self.hole_radius < 0.5 * self.spacing):
            raise ValidationError(f"hole radius {self.hole_radius} must lie in [0, spacing/2)")

    @property
    def offset(self) -> complex:
        return self.spacing * complex(uniform01(self.seed, 0), uniform01(self.seed, 1)) + self.shift

    @property
    def removed_fraction(self) -> float:
        return math.pi * self.hole_radius ** 2 / self.spacing ** 2

    def mask(self, z):
        w = (np.asarray(z, dtype=complex) - self.offset) / self.spacing
        nearest = np.round(w.real) + 1j * np.round(w.imag)
        return self.spacing * np.abs(w - nearest) >= self.hole_radius

    def to_document(self):
        return {"type": "periodic_holes", "seed": self.seed, "spacing": self.spacing,
                "hole_radius": self.hole_radius, "shift": _complex_document(self.shift)}


def holes_for_fraction(seed: int, spacing: float, fraction: float, shift: complex = 0j) -> PeriodicHoles:
    """Hole pattern removing `fraction` of the area."""
    if not 0.0 <= fraction < 1.0:
        raise ValidationError(f"hole fraction must lie in [0, 1), got {fraction}")
    return PeriodicHoles(seed, spacing, spacing * math.sqrt(fraction / math.pi), shift)


def _number(doc, key, path):
    value = doc.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{path}.{key}", f"expected a number, got {value!r}")
    return float(value)


def _complex(value, path) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value))
    raise ParseError(path, f"expected [re, im], got {value!r}")


def build_planar_region(spec, path="$") -> PlanarRegion:
    if not isinstance(spec, dict):
        raise ParseError(path, f"expected an object, got {type(spec).__name__}")
    kind = spec.get("type")
    try:
        if kind == "bulk":
            return Bulk()
        if kind == "empty":
            return Nowhere()
        if kind == "disk":
            return Disk(_complex(spec.get("center", 0), f"{path}.center"), _number(spec, "radius", path))
        if kind == "annulus":
            return Annulus(_complex(spec.get("center", 0), f"{path}.center"),
                           _number(spec, "inner", path), _number(spec, "outer", path))
        if kind == "union":
            members = spec.get("members")
            if not isinstance(members, list):
                raise ParseError(f"{path}.members", "expected a list")
            return PlanarUnion(tuple(build_planar_region(m, f"{path}.members[{i}]") for i, m in enumerate(members)))
        if kind == "complement":
            return PlanarComplement(build_planar_region(spec.get("region"), f"{path}.region"))
        if kind == "periodic_holes":
            seed = spec.get("seed", 0)
            if isinstance(seed, bool) or not isinstance(seed, int):
                raise ParseError(f"{path}.seed", f"expected an integer, got {seed!r}")
            shift = _complex(spec.get("shift", 0), f"{path}.shift")
            spacing = _number(spec, "spacing", path)
            if "fraction" in spec:
                return holes_for_fraction(seed, spacing, _number(spec, "fraction", path), shift)
            return PeriodicHoles(seed, spacing, _number(spec, "hole_radius", path), shift)
    except ValidationError as error:
        if isinstance(error, ParseError):
            raise
        raise ValidationError(f"{path}: {error}") from error
    raise ParseError(f"{path}.type", f"unknown planar region type {kind!r}")


# ---------------------------------------------------------------------------
# Gram matrices and constants


@dataclass(frozen=True)
class FockReport:
    N: int
    lambda_min: float
    lambda_max: float
    bulk_lambda_min: float
    bulk_lambda_max: float
    leak: float
    norming_constant: float


def fock_gram(space: FockSpace, g: PlanarRegion, rule: PlanarRule) -> HermitianMatrix:
    """M[i][j] = ∫_g e_i·ē_j·e^{−2|z|²} dm over the bulk disk."""
    N = space.max_degree
    if rule.radial_order < N + 2 or rule.azimuthal_order < 2 * N + 1:
        raise ConfigError(
            f"planar rule {rule.radial_order}x{rule.azimuthal_order} too coarse for N={N}; "
            f"need at least {N + 2}x{2 * N + 1}"
        )
    if rule.radius < space.bulk_radius - 1e-12:
        raise ConfigError(f"planar rule radius {rule.radius:.6g} does not cover the bulk {space.bulk_radius:.6g}")
    inside = g.mask(rule.z) & (np.abs(rule.z) < space.bulk_radius + 1e-12)
    z, masses = rule.z[inside], rule.weights[inside]
    acc = CompensatedAccumulator((space.dimension, space.dimension), dtype=complex)
    for start in range(0, masses.size, CHUNK):
        basis = fock_basis_values(space, z[start:start + CHUNK])
        acc.add((basis.T * masses[start:start + CHUNK]) @ np.conj(basis))
    return HermitianMatrix.from_entries(acc.result())


def fock_leak(space: FockSpace, rule: PlanarRule) -> float:
    """1 − λ_min of the bulk Gram: the mass of the worst basis element outside the bulk."""
    values = eigh(fock_gram(space, Bulk(), rule)).eigenvalues
    return 1.0 - float(values[0])


def fock_report(space: FockSpace, g: PlanarRegion, rule: PlanarRule) -> FockReport:
    log_function_call(fock_logger, "fock_report", N=space.max_degree, region=g.to_document()["type"])
    bulk = eigh(fock_gram(space, Bulk(), rule)).eigenvalues
    local = eigh(fock_gram(space, g, rule)).eigenvalues
    lam_min, lam_max = float(local[0]), float(local[-1])
    bulk_min, bulk_max = float(bulk[0]), float(bulk[-1])
    norming = bulk_min / lam_min if lam_min > NORMING_FLOOR else math.inf
    report = FockReport(space.max_degree, lam_min, lam_max, bulk_min, bulk_max, 1.0 - bulk_min, norming)
    log_result(fock_logger, "fock_report", lambda_min=lam_min, leak=report.leak, C=norming)
    return report


def fock_norming_constant(space: FockSpace, g: PlanarRegion, rule: PlanarRule) -> float:
    return fock_report(space, g, rule).norming_constant
