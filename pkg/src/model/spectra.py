"""Concentration operators of measures on H⁰(O(k)) and the constants read off their spectra.

In the orthonormal basis the operator of a measure μ is the Gram matrix
M[i][j] = ∫ e_i·ē_j dμ; for μ = χ_G·V its smallest eigenvalue is 1/C for the
norming constant C of G, and for any μ its largest is the Carleson constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from src.model.geometry import (
    HALF_PI,
    QuadratureRule,
    SpherePoint,
    ball_volume,
    cap_rule,
    cos_distance_many,
    make_quadrature,
    point_from_chart,
    point_from_polar,
)
from src.model.regions import (
    Combined,
    MeasureSpec,
    Region,
    VolumeOn,
    ball_mass,
    scaled_radius,
)
from src.model.sections import (
    Section,
    basis_values,
    kernel_pointnorm,
    peak_tail_closed_form,
    pointnorm_many,
)
from src.utils.errors import ConfigError, ConvergenceError, DomainError, ShapeError
from src.utils.logger import get_module_logger, log_function_call, log_result
from src.utils.numerics import CompensatedAccumulator, exact_sum
from src.utils.settings import get_eigensolver, get_nested_budget

spectra_logger = get_module_logger("spectra")

NORMING_FLOOR = 1e-12
MAX_DIM = 512
MAX_SWEEPS = 64
CHUNK = 4096
INNER_ORDERS = (32, 64)


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    dim: int
    entries: np.ndarray

    @classmethod
    def from_entries(cls, entries, tol: float = 1e-12) -> "HermitianMatrix":
        a = np.asarray(entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {a.shape}")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        asym = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
        if asym >= tol * scale:
            raise ShapeError(f"matrix not Hermitian: max |M - M^H| = {asym:.3e}")
        return cls(a.shape[0], 0.5 * (a + a.conj().T))

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def __add__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        return HermitianMatrix(self.dim, self.entries + other.entries)


@dataclass(frozen=True, eq=False)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    max_offdiag_residual: float
    sweeps: int


@dataclass(frozen=True, eq=False)
class ConcentrationResult:
    k: int
    measure: MeasureSpec
    lambda_min: float
    lambda_max: float
    norming_constant: float
    carleson_constant: float
    extremal_section: Optional[Section] = None
    total_mass: float = float("nan")

    @property
    def is_norming(self) -> bool:
        return math.isfinite(self.norming_constant)


# ---------------------------------------------------------------------------
# Assembly


def _has_volume_part(mu: MeasureSpec) -> bool:
    if isinstance(mu, VolumeOn):
        return True
    if isinstance(mu, Combined):
        return any(_has_volume_part(part) for part in mu.parts)
    return False


def require_exact_rule(k: int, rule: QuadratureRule):
    if 2 * rule.radial_order - 1 < k + 2 or rule.azimuthal_order < k + 1:
        raise ConfigError(
            f"rule {rule.radial_order}x{rule.azimuthal_order} is not exact for degree {k}; "
            f"need radial >= {(k + 4) // 2} and azimuthal >= {k + 1}"
        )


def gram_from_points(k: int, z0, z1, masses) -> HermitianMatrix:
    """Σ m·e_i·ē_j over weighted points, merged chunk by chunk in a fixed order."""
    acc = CompensatedAccumulator((k + 1, k + 1), dtype=complex)
    for start in range(0, len(masses), CHUNK):
        stop = start + CHUNK
        basis = basis_values(k, z0[start:stop], z1[start:stop])
        acc.add((basis.T * masses[start:stop]) @ np.conj(basis))
    return HermitianMatrix.from_entries(acc.result())


def gram_matrix(k: int, mu: MeasureSpec, rule: QuadratureRule) -> HermitianMatrix:
    if _has_volume_part(mu):
        require_exact_rule(k, rule)
    z0, z1, masses = mu.discretize(rule)
    return gram_from_points(k, z0, z1, masses)


# ---------------------------------------------------------------------------
# Eigensolvers


def _jacobi(a: np.ndarray, tol: float):
    """Cyclic complex Jacobi; returns (eigenvalues, eigenvectors, off-diagonal norm, sweeps)."""
    a = a.copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(float(np.linalg.norm(a)), np.finfo(float).tiny)
    off = 0.0
    for sweep in range(MAX_SWEEPS + 1):
        off = float(np.sqrt(max(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2), 0.0)))
        if off <= tol * scale:
            return np.diag(a).real.copy(), v, off, sweep
        if sweep == MAX_SWEEPS:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                magnitude = abs(a[p, q])
                if magnitude <= 1e-300:
                    continue
                phase = a[p, q] / magnitude
                theta = (a[q, q].real - a[p, p].real) / (2.0 * magnitude)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                back = np.conj(phase)

                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * back * col_q
                a[:, q] = s * col_p + c * back * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * phase * row_q
                a[q, :] = s * row_p + c * phase * row_q
                a[p, q] = a[q, p] = 0.0
                a[p, p], a[q, q] = a[p, p].real, a[q, q].real

                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vec_p - s * back * vec_q
                v[:, q] = s * vec_p + c * back * vec_q
    raise ConvergenceError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps (off-diagonal {off:.3e})")


def eigh(m: HermitianMatrix, method: Optional[str] = None) -> EigenResult:
    """Full Hermitian spectrum, ascending; `method` is "lapack" or "jacobi"."""
    if m.dim > MAX_DIM:
        raise ConfigError(f"dimension {m.dim} exceeds {MAX_DIM}")
    method = (method or get_eigensolver()).lower()
    a = m.entries
    if m.dim == 0:
        return EigenResult(np.zeros(0), np.zeros((0, 0), dtype=complex), 0.0, 0)
    if method == "jacobi":
        values, vectors, _, sweeps = _jacobi(a, tol=1e-14)
    elif method == "lapack":
        values, vectors = scipy.linalg.eigh(a)
        sweeps = 0
    else:
        raise ConfigError(f"unknown eigensolver {method!r}")
    order = np.argsort(values, kind="stable")
    values, vectors = values[order], vectors[:, order]
    rotated = vectors.conj().T @ a @ vectors
    residual = float(np.max(np.abs(rotated - np.diag(np.diag(rotated))))) if m.dim > 1 else 0.0
    scale = max(float(np.linalg.norm(a, 2)), 1e-300)
    if residual >= 1e-11 * max(scale, 1.0):
        spectra_logger.warning(f"eigh residual {residual:.3e} above tolerance (norm {scale:.3e})")
    return EigenResult(values, vectors, residual, sweeps)


def sturm_eigenvalues(m: HermitianMatrix, tol: float = 1e-14) -> np.ndarray:
    """Eigenvalues by bisection on the Sturm sequence of the Householder tridiagonal form."""
    t = scipy.linalg.hessenberg(m.entries)
    d = np.diag(t).real
    e2 = np.abs(np.diag(t, -1)) ** 2
    n = d.size
    radius = np.abs(np.diag(t, -1))
    reach = np.concatenate([radius, [0.0]]) + np.concatenate([[0.0], radius])
    lo_all, hi_all = float(np.min(d - reach)) - 1e-12, float(np.max(d + reach)) + 1e-12

    def count_below(x):
        count, q = 0, 1.0
        for i in range(n):
            q = d[i] - x - (e2[i - 1] / q if i > 0 else 0.0)
            if q == 0.0:
                q = -1e-300
            if q < 0.0:
                count += 1
        return count

    values = np.empty(n)
    for index in range(n):
        lo, hi = lo_all, hi_all
        while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
            mid = 0.5 * (lo + hi)
            if count_below(mid) > index:
                hi = mid
            else:
                lo = mid
        values[index] = 0.5 * (lo + hi)
    return values


# ---------------------------------------------------------------------------
# Norming and Carleson constants


def concentration(k: int, mu: MeasureSpec, rule: QuadratureRule) -> ConcentrationResult:
    gram = gram_matrix(k, mu, rule)
    spectrum = eigh(gram)
    lam_min = float(spectrum.eigenvalues[0])
    lam_max = float(spectrum.eigenvalues[-1])
    norming = 1.0 / lam_min if lam_min > NORMING_FLOOR else math.inf
    # eigenvector x of the form x^H M x corresponds to the section with coefficients conj(x)
    extremal = Section(k, np.conj(spectrum.eigenvectors[:, 0]))
    return ConcentrationResult(k, mu, lam_min, lam_max, norming, lam_max, extremal, mu.total_mass(rule))


def norming_constant(k: int, g: Region, rule: QuadratureRule) -> ConcentrationResult:
    """C = 1/λ_min of the concentration operator of g; +∞ when λ_min is below the floor."""
    log_function_call(spectra_logger, "norming_constant", k=k, region=g.to_document()["type"])
    result = concentration(k, VolumeOn(g, 1.0), rule)
    log_result(spectra_logger, "norming_constant", lambda_min=result.lambda_min, C=result.norming_constant)
    return result


def carleson_constant(k: int, mu: MeasureSpec, rule: QuadratureRule) -> ConcentrationResult:
    """C₁ = λ_max of the Gram of μ; attained by the top eigenvector."""
    log_function_call(spectra_logger, "carleson_constant", k=k, measure=mu.to_document()["type"])
    result = concentration(k, mu, rule)
    log_result(spectra_logger, "carleson_constant", C1=result.carleson_constant)
    return result


def berezin_transform(k: int, mu: MeasureSpec, z: SpherePoint, rule: QuadratureRule) -> float:
    """∫ |Π_k(w, z)|²/Π_k(z, z) dμ(w), volume parts taken on the rule centred at z."""
    z0, z1, masses = mu.discretize(rule.centered_at(z))
    if masses.size == 0:
        return 0.0
    values = (k + 1) / math.pi * cos_distance_many(z, z0, z1) ** (2 * k)
    return exact_sum(masses * values)


def berezin_sup(k: int, mu: MeasureSpec, probes, rule: QuadratureRule) -> float:
    log_function_call(spectra_logger, "berezin_sup", k=k, probes=len(probes))
    if not probes:
        raise ConfigError("berezin_sup needs at least one probe")
    return max(berezin_transform(k, mu, z, rule) for z in probes)


def ball_mass_sup(k: int, mu: MeasureSpec, probes, rule: QuadratureRule) -> float:
    """max over probes of k·μ(B(z, 1/√k))."""
    log_function_call(spectra_logger, "ball_mass_sup", k=k, probes=len(probes))
    if k < 1:
        raise DomainError("ball_mass_sup needs k >= 1")
    if not probes:
        raise ConfigError("ball_mass_sup needs at least one probe")
    radius = 1.0 / math.sqrt(k)
    return max(k * ball_mass(mu, z, radius, rule) for z in probes)


def kernel_lower_bound(k: int, eps: float, grid: int = 33) -> float:
    """M(k, ε) = min over d ≤ ε/√k of |Π_k|²/(Π_k(z, z)·k), scanned along a geodesic ray."""
    if k < 1 or eps < 0:
        raise DomainError(f"kernel_lower_bound needs k >= 1 and eps >= 0, got ({k}, {eps})")
    radius = eps / math.sqrt(k)
    if radius > HALF_PI:
        raise DomainError(f"eps/sqrt(k) = {radius:.6g} exceeds pi/2")
    origin = point_from_chart(0)
    diagonal = kernel_pointnorm(k, origin, origin)
    values = [
        kernel_pointnorm(k, point_from_polar(math.sin(d) ** 2, 0.0), origin) ** 2 / diagonal / k
        for d in np.linspace(0.0, radius, grid)
    ]
    return min(values)


def exceptional_mass_ratio(k: int, s: Section, R: float, eps: float, rule: QuadratureRule,
                           inner_orders=INNER_ORDERS) -> float:
    """∫_A |s|² / (ε‖s‖²) for A = {a : |s(a)|² < ε·(average of |s|² over B(a, R/√k))}.

    The set A is tested at every node of `rule`; each ball average uses one fixed cap
    rule rotated onto the node.
    """
    log_function_call(spectra_logger, "exceptional_mass_ratio", k=k, R=R, eps=eps)
    radius = scaled_radius(k, R)
    norm_sq = s.norm_sq
    if s.degree != k:
        raise ShapeError(f"section degree {s.degree} != {k}")
    if not norm_sq > 0.0:
        raise DomainError("exceptional_mass_ratio needs a nonzero section")
    inner = make_quadrature(inner_orders[0], inner_orders[1], (0.0, math.sin(radius) ** 2))
    budget = len(rule) * len(inner)
    if budget > get_nested_budget():
        raise ConfigError(
            f"nested integration needs {budget} evaluations (> {get_nested_budget()}); "
            f"use a coarser outer rule"
        )
    volume = ball_volume(radius)
    outer_values = pointnorm_many(s, rule.z0, rule.z1)
    in_a = np.zeros(len(rule), dtype=bool)
    step = max(1, CHUNK * 16 // len(inner))
    for start in range(0, len(rule), step):
        a0 = rule.z0[start:start + step, None]
        a1 = rule.z1[start:start + step, None]
        # frame_at(a) applied to the canonical cap nodes
        x0 = a0 * inner.z0[None, :] - np.conj(a1) * inner.z1[None, :]
        x1 = a1 * inner.z0[None, :] + np.conj(a0) * inner.z1[None, :]
        local = pointnorm_many(s, x0.ravel(), x1.ravel()).reshape(x0.shape)
        averages = (local @ inner.weights) / volume
        in_a[start:start + step] = outer_values[start:start + step] < eps * averages
    mass = exact_sum(rule.weights[in_a] * outer_values[in_a])
    ratio = mass / (eps * norm_sq)
    log_result(spectra_logger, "exceptional_mass_ratio", ratio=ratio, fraction=float(in_a.mean()))
    return ratio


def density_lower_bound(k: int, C: float, R: float) -> float:
    """Density every ball of radius R/√k must have when C is a norming constant.

    The peak section at the ball's centre keeps mass ≥ 1/C − tail on G ∩ B and is
    pointwise at most (k+1)/π, so V(G ∩ B) ≥ (1/C − tail)·π/(k+1).
    """
    radius = scaled_radius(k, R)
    if not math.isfinite(C):
        return 0.0
    kept = 1.0 / C - peak_tail_closed_form(k, R)
    return max(0.0, kept * math.pi / ((k + 1) * ball_volume(radius)))


def sub_mean_value_constant(k: int, w: SpherePoint, rule: QuadratureRule) -> float:
    """Q = sup_s |s(w)|² / (k·∫_{B(w,1/√k)} |s|²), a generalized Rayleigh quotient."""
    if k < 1:
        raise DomainError("sub_mean_value_constant needs k >= 1")
    local = cap_rule(w, 1.0 / math.sqrt(k), rule.radial_order, rule.azimuthal_order)
    gram = gram_from_points(k, local.z0, local.z1, local.weights).entries
    # s(w) = xᴴb with x = conj(c) and b_j = e_j(w), so the sup is bᴴ·G⁻¹·b
    kernel_vector = basis_values(k, w.z0, w.z1)[0]
    # the cap Gram is ill-conditioned (eigenvalues down to sin²(1/√k)^{k+1}); drop the null directions
    values, vectors = scipy.linalg.eigh(gram)
    keep = values > 1e-13 * values[-1]
    weights = np.abs(vectors[:, keep].conj().T @ kernel_vector) ** 2
    return float(np.sum(weights / values[keep])) / k


def sub_mean_value_closed_form(k: int) -> float:
    return (k + 1) / math.pi / (k * (1.0 - math.cos(1.0 / math.sqrt(k)) ** (2 * k + 2)))
