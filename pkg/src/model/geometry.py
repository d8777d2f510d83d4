"""Fubini–Study geometry of the projective line and quadrature rules on it.

Normalisation: total volume π, diameter π/2, so a ball of radius r has volume π·sin²(r).
In the coordinates s = sin²(t) (t the distance to the chart origin) and azimuth φ the
volume form is ds·dφ/2, which is what the product rules below discretise.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.utils.errors import ConfigError, DomainError, InvalidPointError, NumericalDomainError
from src.utils.logger import get_module_logger, log_function_call
from src.utils.numerics import exact_sum

geometry_logger = get_module_logger("geometry")

HALF_PI = 0.5 * math.pi
TOTAL_VOLUME = math.pi

# Generic orientation for the dense region rule: poles away from 0, ∞ and the unit circle.
_TILT_S = 0.3713
_TILT_PHI = 1.1031


@dataclass(frozen=True)
class SpherePoint:
    """Normalised homogeneous representative (z0, z1) of a point of CP¹."""

    z0: complex
    z1: complex

    @property
    def chart(self):
        """Affine chart value z1/z0, or the string "inf" at the point at infinity."""
        if self.z0 == 0:
            return "inf"
        return self.z1 / self.z0

    def as_vector(self) -> np.ndarray:
        return np.array([self.z0, self.z1], dtype=complex)


@dataclass(frozen=True)
class FSBall:
    center: SpherePoint
    radius: float

    def __post_init__(self):
        if not (0.0 < self.radius <= HALF_PI):
            raise DomainError(f"ball radius {self.radius} outside (0, pi/2]")

    @property
    def volume(self) -> float:
        return ball_volume(self.radius)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Product rule on CP¹. Nodes are stored ring by ring (radial-major) as flat arrays."""

    z0: np.ndarray
    z1: np.ndarray
    weights: np.ndarray
    radial_order: int
    azimuthal_order: int
    frame: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))

    def __len__(self):
        return self.weights.size

    @property
    def nodes(self):
        return [SpherePoint(complex(a), complex(b)) for a, b in zip(self.z0, self.z1)]

    def rotated(self, unitary) -> "QuadratureRule":
        """Apply a unitary to every node; exactness on degree-k pairings is preserved."""
        u = np.asarray(unitary, dtype=complex)
        z0, z1 = apply_unitary(u, self.z0, self.z1)
        return QuadratureRule(z0, z1, self.weights, self.radial_order, self.azimuthal_order,
                              frame=u @ self.frame)

    def centered_at(self, p: SpherePoint) -> "QuadratureRule":
        """Move the rule so that its canonical pole (s = 0) sits at p."""
        return self.rotated(frame_at(p) @ self.frame.conj().T)


def normalize_point(z0: complex, z1: complex) -> SpherePoint:
    z0, z1 = complex(z0), complex(z1)
    norm = math.hypot(abs(z0), abs(z1))
    if norm == 0.0 or not math.isfinite(norm):
        raise InvalidPointError(f"cannot normalise homogeneous vector ({z0}, {z1})")
    return SpherePoint(z0 / norm, z1 / norm)


def point_from_chart(z) -> SpherePoint:
    """Chart coordinate (complex, or "inf") to a normalised point."""
    if isinstance(z, str):
        if z.strip().lower() == "inf":
            return SpherePoint(0j, 1 + 0j)
        raise InvalidPointError(f"unknown chart coordinate {z!r}")
    return normalize_point(1.0, complex(z))


def point_from_polar(s: float, phi: float) -> SpherePoint:
    """Point with sin² of its distance to the chart origin equal to s, at azimuth phi."""
    s = min(max(float(s), 0.0), 1.0)
    return SpherePoint(complex(math.sqrt(1.0 - s)), math.sqrt(s) * cmath.exp(1j * phi))


def colatitude(p: SpherePoint) -> float:
    """Fubini–Study distance to the chart origin."""
    return math.atan2(abs(p.z1), abs(p.z0))


def fs_distance(p: SpherePoint, q: SpherePoint) -> float:
    inner = abs(p.z0 * q.z0.conjugate() + p.z1 * q.z1.conjugate())
    wedge = abs(p.z0 * q.z1 - p.z1 * q.z0)
    return min(math.atan2(wedge, inner), HALF_PI)


def fs_distance_many(center: SpherePoint, z0, z1) -> np.ndarray:
    """Distances from `center` to the points (z0[i], z1[i])."""
    inner = np.abs(z0 * np.conj(center.z0) + z1 * np.conj(center.z1))
    wedge = np.abs(center.z0 * z1 - center.z1 * z0)
    return np.minimum(np.arctan2(wedge, inner), HALF_PI)


def cos_distance_many(center: SpherePoint, z0, z1) -> np.ndarray:
    """|<x, center>| = cos d(x, center), clamped to [0, 1]."""
    return np.minimum(np.abs(z0 * np.conj(center.z0) + z1 * np.conj(center.z1)), 1.0)


def ball_volume(r: float) -> float:
    if r < 0.0 or r > HALF_PI + 1e-15:
        raise DomainError(f"radius {r} outside [0, pi/2]")
    return math.pi * math.sin(min(r, HALF_PI)) ** 2


def in_ball_tan(z: complex, w: complex, r: float) -> bool:
    """Chart form of d(z, w) < r: |z − w| < tan(r)·|1 + z·w̄|."""
    return abs(z - w) < math.tan(r) * abs(1 + z * complex(w).conjugate())


def frame_at(p: SpherePoint) -> np.ndarray:
    """Unitary whose first column is p: sends the chart origin (1, 0) to p."""
    return np.array([[p.z0, -p.z1.conjugate()],
                     [p.z1, p.z0.conjugate()]], dtype=complex)


def apply_unitary(unitary, z0, z1):
    u = np.asarray(unitary, dtype=complex)
    return u[0, 0] * z0 + u[0, 1] * z1, u[1, 0] * z0 + u[1, 1] * z1


def rotate(p: SpherePoint, unitary) -> SpherePoint:
    a, b = apply_unitary(unitary, p.z0, p.z1)
    return normalize_point(complex(a), complex(b))


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed 2×2 unitary (QR of a complex Ginibre matrix, phase-fixed)."""
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(g)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_point(rng: np.random.Generator) -> SpherePoint:
    """Volume-uniform point: s uniform in [0, 1], azimuth uniform."""
    return point_from_polar(rng.uniform(), rng.uniform(0.0, 2.0 * math.pi))


def make_quadrature(radial_nodes: int, azimuthal_nodes: int, s_range=(0.0, 1.0)) -> QuadratureRule:
    """Gauss–Legendre in s = sin²(t) on `s_range` times the uniform rule in azimuth.

    Exact for e_i·ē_j weighted by the bundle metric whenever the degree k satisfies
    k ≤ 2·radial_nodes − 1 and |i − j| ≤ azimuthal_nodes − 1 (full range s ∈ [0, 1]).
    """
    if radial_nodes < 1 or azimuthal_nodes < 1:
        raise ConfigError(f"quadrature orders must be positive, got {radial_nodes}x{azimuthal_nodes}")
    s_lo, s_hi = float(s_range[0]), float(s_range[1])
    if not (0.0 <= s_lo <= s_hi <= 1.0):
        raise ConfigError(f"s range {s_range} not inside [0, 1]")

    x, w = leggauss(radial_nodes)
    half = 0.5 * (s_hi - s_lo)
    s = s_lo + half * (x + 1.0)
    ws = half * w
    phi = 2.0 * math.pi * np.arange(azimuthal_nodes) / azimuthal_nodes

    s_grid = np.repeat(s, azimuthal_nodes)
    phi_grid = np.tile(phi, radial_nodes)
    z0 = np.sqrt(1.0 - s_grid).astype(complex)
    z1 = np.sqrt(s_grid) * np.exp(1j * phi_grid)
    # dV = ds·dφ/2; the uniform azimuthal rule carries 2π/M per node
    weights = np.repeat(ws, azimuthal_nodes) * (math.pi / azimuthal_nodes)
    return QuadratureRule(z0, z1, weights, radial_nodes, azimuthal_nodes)


def cap_rule(center: SpherePoint, radius: float, radial_nodes: int, azimuthal_nodes: int) -> QuadratureRule:
    """Rule on the ball B(center, radius); weights sum to ball_volume(radius)."""
    s_max = math.sin(min(radius, HALF_PI)) ** 2
    return make_quadrature(radial_nodes, azimuthal_nodes, (0.0, s_max)).centered_at(center)


def cap_complement_rule(center: SpherePoint, radius: float, radial_nodes: int,
                        azimuthal_nodes: int) -> QuadratureRule:
    """Rule on CP¹ minus B(center, radius)."""
    s_min = math.sin(min(radius, HALF_PI)) ** 2
    return make_quadrature(radial_nodes, azimuthal_nodes, (s_min, 1.0)).centered_at(center)


def tilt_unitary() -> np.ndarray:
    return frame_at(point_from_polar(_TILT_S, _TILT_PHI))


def dense_rule(radial_nodes: int = 128, azimuthal_nodes: int = 256) -> QuadratureRule:
    """Baseline rule for indicator integrands, tilted off the chart axes."""
    return make_quadrature(radial_nodes, azimuthal_nodes).rotated(tilt_unitary())


def integrate(f, rule: QuadratureRule) -> float:
    """Σ wᵢ·f(nodeᵢ); `f` maps node coordinate arrays (z0, z1) to real values."""
    values = np.asarray(f(rule.z0, rule.z1), dtype=float)
    if values.shape != rule.weights.shape:
        values = np.broadcast_to(values, rule.weights.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        index = int(np.flatnonzero(bad)[0])
        node = SpherePoint(complex(rule.z0[index]), complex(rule.z1[index]))
        geometry_logger.error(f"Non-finite integrand at node {index}: {node}")
        raise NumericalDomainError(f"integrand is {values[index]} at node {index} ({node.chart})")
    return exact_sum(rule.weights * values)


def convergence_check(f, radial_nodes: int = 128, azimuthal_nodes: int = 256, rtol: float = 1e-3):
    """Integrate on the dense rule and on its doubling; returns (value, relative change)."""
    log_function_call(geometry_logger, "convergence_check", radial=radial_nodes, azimuthal=azimuthal_nodes)
    base = integrate(f, dense_rule(radial_nodes, azimuthal_nodes))
    fine = integrate(f, dense_rule(2 * radial_nodes, 2 * azimuthal_nodes))
    change = abs(fine - base) / max(abs(fine), 1e-300)
    if change > rtol:
        geometry_logger.warning(f"Quadrature not converged: relative change {change:.3e} > {rtol:.1e}")
    return base, change
