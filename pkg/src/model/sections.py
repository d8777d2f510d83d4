"""H⁰(O(k)) on CP¹: degree-k polynomials with the Fubini–Study weight.

Sections are stored by their coordinates in the orthonormal basis
e_j = z^j / ‖z^j‖,  ‖z^j‖² = π·j!·(k−j)!/(k+1)!,
and evaluated on normalised homogeneous coordinates, where
e_j(x) = √((k+1)·C(k,j)/π) · x0^{k−j} · x1^j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from src.model.geometry import (
    HALF_PI,
    QuadratureRule,
    SpherePoint,
    cap_complement_rule,
    cos_distance_many,
    integrate,
)
from src.utils.errors import ConfigError, DomainError, ShapeError
from src.utils.logger import get_module_logger, log_function_call, log_result

sections_logger = get_module_logger("sections")

MAX_DEGREE = 256


@dataclass(frozen=True, eq=False)
class SectionSpace:
    degree: int
    ortho_norm_sq: np.ndarray

    @property
    def dimension(self) -> int:
        return self.degree + 1

    @property
    def basis_scale(self) -> np.ndarray:
        """1/‖z^j‖ = √((k+1)·C(k,j)/π)."""
        return 1.0 / np.sqrt(self.ortho_norm_sq)

    @property
    def diagonal(self) -> float:
        """Kernel diagonal Π_k(x, x) = (k+1)/π."""
        return (self.degree + 1) / math.pi


@dataclass(frozen=True, eq=False)
class Section:
    degree: int
    coeffs: np.ndarray

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def __add__(self, other: "Section") -> "Section":
        if other.degree != self.degree:
            raise ShapeError(f"cannot add sections of degrees {self.degree} and {other.degree}")
        return Section(self.degree, self.coeffs + other.coeffs)

    def scaled(self, factor: complex) -> "Section":
        return Section(self.degree, factor * self.coeffs)


def _log_norm_sq(k: int) -> np.ndarray:
    j = np.arange(k + 1)
    return math.log(math.pi) + gammaln(j + 1) + gammaln(k - j + 1) - gammaln(k + 2)


def make_space(k: int) -> SectionSpace:
    if not isinstance(k, (int, np.integer)) or k < 0 or k > MAX_DEGREE:
        raise ConfigError(f"degree k={k} outside [0, {MAX_DEGREE}]")
    return SectionSpace(int(k), np.exp(_log_norm_sq(int(k))))


def basis_section(space: SectionSpace, j: int) -> Section:
    coeffs = np.zeros(space.dimension, dtype=complex)
    coeffs[j] = 1.0
    return Section(space.degree, coeffs)


def section_from_polynomial(space: SectionSpace, monomial_coeffs) -> Section:
    """p(z) = Σ a_j z^j as a section: c_j = a_j·‖z^j‖."""
    a = np.asarray(monomial_coeffs, dtype=complex)
    if a.shape != (space.dimension,):
        raise ShapeError(f"expected {space.dimension} monomial coefficients, got {a.shape}")
    return Section(space.degree, a * np.sqrt(space.ortho_norm_sq))


def random_section(space: SectionSpace, rng: np.random.Generator) -> Section:
    """Unit-norm section with Gaussian coordinates."""
    c = rng.standard_normal(space.dimension) + 1j * rng.standard_normal(space.dimension)
    return Section(space.degree, c / np.linalg.norm(c))


def basis_values(k: int, z0, z1) -> np.ndarray:
    """Matrix B[n, j] = e_j(x_n) on normalised homogeneous coordinates."""
    z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
    z1 = np.atleast_1d(np.asarray(z1, dtype=complex))
    j = np.arange(k + 1)
    scale = np.exp(-0.5 * _log_norm_sq(k))
    return scale * np.power(z0[:, None], k - j) * np.power(z1[:, None], j)


def section_values(s: Section, z0, z1) -> np.ndarray:
    return basis_values(s.degree, z0, z1) @ s.coeffs


def pointnorm_many(s: Section, z0, z1) -> np.ndarray:
    """|s(x)|² in the bundle metric at the points (z0, z1)."""
    return np.abs(section_values(s, z0, z1)) ** 2


def eval_pointnorm(space: SectionSpace, s: Section, p: SpherePoint) -> float:
    if s.degree != space.degree or s.coeffs.shape != (space.dimension,):
        raise ShapeError(f"section of degree {s.degree} evaluated in space of degree {space.degree}")
    return float(pointnorm_many(s, p.z0, p.z1)[0])


def kernel_pointnorm(k: int, p: SpherePoint, q: SpherePoint) -> float:
    """|Π_k(p, q)| = ((k+1)/π)·cos^k d(p, q)."""
    cos_d = min(abs(p.z0 * q.z0.conjugate() + p.z1 * q.z1.conjugate()), 1.0)
    return (k + 1) / math.pi * cos_d ** k


def kernel_pointnorm_many(k: int, q: SpherePoint, z0, z1) -> np.ndarray:
    return (k + 1) / math.pi * cos_distance_many(q, z0, z1) ** k


def peak_section(k: int, y: SpherePoint) -> Section:
    """g_{k,y} = Π_k(·, y)/√Π_k(y, y): coefficients ē_j(y), normalised to unit norm."""
    values = basis_values(k, y.z0, y.z1)[0]
    return Section(k, np.conj(values) / np.linalg.norm(values))


def peak_tail_closed_form(k: int, R: float) -> float:
    """Mass of |g_{k,y}|² outside B(y, R/√k): cos^{2k+2}(R/√k)."""
    if k == 0:
        return 1.0 if R == 0 else 0.0
    return math.cos(R / math.sqrt(k)) ** (2 * k + 2)


def peak_tail_mass(k: int, y: SpherePoint, R: float, rule: QuadratureRule) -> float:
    """∫ |g_{k,y}|² over CP¹ ∖ B(y, R/√k), on the complement rule built from `rule`'s orders."""
    log_function_call(sections_logger, "peak_tail_mass", k=k, R=R)
    if R < 0:
        raise DomainError(f"R={R} must be nonnegative")
    if k == 0:
        if R > 0:
            raise DomainError("R/sqrt(k) is undefined for k = 0")
        radius = 0.0
    else:
        radius = R / math.sqrt(k)
    if radius > HALF_PI:
        raise DomainError(f"R/sqrt(k) = {radius:.6g} exceeds pi/2")
    g = peak_section(k, y)
    outside = cap_complement_rule(y, radius, rule.radial_order, rule.azimuthal_order)
    tail = integrate(lambda z0, z1: pointnorm_many(g, z0, z1), outside)
    log_result(sections_logger, "peak_tail_mass", tail=tail, closed_form=peak_tail_closed_form(k, R))
    return tail


def gram_all(k: int, rule: QuadratureRule) -> np.ndarray:
    """M[i][j] = Σ w·e_i·ē_j over the rule (identity when the rule is exact)."""
    basis = basis_values(k, rule.z0, rule.z1)
    return (basis.T * rule.weights) @ np.conj(basis)


def reproduce_residual(k: int, s: Section, p: SpherePoint, rule: QuadratureRule) -> float:
    """| |s(p)| − |∫⟨s(y), Π(p, y)⟩ dV(y)| | with the integral taken by quadrature."""
    if rule.radial_order < k + 2 or rule.azimuthal_order < 2 * k + 1:
        raise ConfigError(
            f"rule {rule.radial_order}x{rule.azimuthal_order} too coarse for degree {k}; "
            f"need at least {k + 2}x{2 * k + 1}"
        )
    if s.degree != k:
        raise ShapeError(f"section degree {s.degree} != {k}")
    at_p = basis_values(k, p.z0, p.z1)[0]
    direct = at_p @ s.coeffs
    # ∫ s(y)·ē_j(y) dV(y) = (Mᵀ c)_j, then expand against e_j(p)
    reproduced = at_p @ (gram_all(k, rule).T @ s.coeffs)
    return abs(abs(direct) - abs(reproduced))
