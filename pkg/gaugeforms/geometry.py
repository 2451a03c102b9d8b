"""Geometric invariants encoded in a symbol: metric, covariant subprincipal symbol,
electromagnetic potentials and the topological/temporal charges."""

import logging
from dataclasses import dataclass

import numpy as np

from .conf import resolve
from .exceptions import (
    DegenerateMetric,
    NonConstantCharge,
    NotTimelike,
    ResidualTooLarge,
    SignatureViolation,
)

logger = logging.getLogger(__name__)

LORENTZIAN = "lorentzian"
RIEMANNIAN = "riemannian"


def adjugate(matrices):
    """adj X = tr(X) Id − X for 2×2 matrices, batched over leading axes."""
    trace = np.trace(matrices, axis1=-2, axis2=-1)
    return trace[..., None, None] * np.eye(2) - matrices


@dataclass(frozen=True, eq=False)
class MetricData:
    """Metric density gd = 𝐠^{αβ}, its inverse gd_inv = 𝐠_{αβ}, ρ and g = ρ^{-2}𝐠."""

    gd: np.ndarray
    gd_inv: np.ndarray
    rho: np.ndarray
    g_up: np.ndarray
    g_down: np.ndarray
    signature: str

    @property
    def dim(self):
        return self.gd.shape[-1]


def metric_data(S, tolerances=None, points=None):
    """𝐠^{αβ} = −½(tr E^α tr E^β − tr(E^α E^β)), the polarisation of −det 𝐒_prin."""
    tolerances = resolve(tolerances)
    E = S.sample(points).E
    dim = E.shape[1]
    traces = np.trace(E, axis1=-2, axis2=-1)
    products = np.einsum("paij,pbji->pab", E, E)
    gd = (-0.5 * (traces[:, :, None] * traces[:, None, :] - products)).real
    asymmetry = float(np.max(np.abs(gd - np.swapaxes(gd, 1, 2)), initial=0.0))
    if asymmetry > tolerances.symmetric:
        raise SignatureViolation(f"metric density not symmetric ({asymmetry:.3e})")
    gd = 0.5 * (gd + np.swapaxes(gd, 1, 2))

    eigenvalues = np.linalg.eigvalsh(gd)
    if np.min(np.abs(eigenvalues)) <= tolerances.degenerate:
        raise DegenerateMetric("metric density is degenerate somewhere on the grid")
    negative = np.sum(eigenvalues < 0, axis=1)
    if dim == 4:
        signature = LORENTZIAN
        if np.any(negative != 1):
            raise SignatureViolation("metric density is not Lorentzian everywhere")
        rho = (-np.linalg.det(gd)) ** (1.0 / 6.0)
    else:
        signature = RIEMANNIAN
        if np.any(negative != 0):
            raise SignatureViolation("metric density is not positive definite everywhere")
        rho = np.linalg.det(gd) ** 0.25

    g_up = gd / rho[:, None, None] ** 2
    g_down = np.linalg.inv(g_up)
    inverse_error = float(np.max(np.abs(g_up @ g_down - np.eye(dim))))
    if inverse_error > tolerances.inverse:
        raise DegenerateMetric(f"metric inversion failed ({inverse_error:.3e})")
    logger.debug("%s metric, rho in [%.6g, %.6g]", signature, rho.min(), rho.max())
    return MetricData(
        gd=gd,
        gd_inv=np.linalg.inv(gd),
        rho=rho,
        g_up=g_up,
        g_down=g_down,
        signature=signature,
    )


def covariant_subprincipal(S, metric, points=None):
    """𝐒_csub = F + (i/16) 𝐠_{αβ} (M^{αβ} + M^{βα}).

    M^{δε} = E^δ_{,γ} adj(E^ε) E^γ − E^γ adj(E^ε) E^δ_{,γ} is the momentum Hessian of the
    bracket {𝐒_prin, adj 𝐒_prin, 𝐒_prin}, which is quadratic in p for linear symbols.
    """
    samples = S.sample(points)
    E, dE = samples.E, samples.dE
    adj = adjugate(E)
    M = np.einsum("pacij,pbjk,pckl->pabil", dE, adj, E, optimize=True) - np.einsum(
        "pcij,pbjk,packl->pabil", E, adj, dE, optimize=True
    )
    symmetrised = M + np.swapaxes(M, 1, 2)
    return samples.F + (1j / 16.0) * np.einsum("pab,pabij->pij", metric.gd_inv, symmetrised)


@dataclass(frozen=True, eq=False)
class CovectorPotential:
    """Magnetic potential A (P, m) and, in 3D, electric potential A4 (P,)."""

    A: np.ndarray
    A4: np.ndarray
    residual: float
    imaginary: float
    csub: np.ndarray

    def at(self, index=0):
        values = list(self.A[index])
        if self.A4 is not None:
            values.append(self.A4[index])
        return values


def potentials(S, metric, tolerances=None, points=None):
    """A_α = −½ 𝐠_{αβ} tr(𝐒_csub adj E^β); in 3D also A₄ = ½ tr 𝐒_csub."""
    tolerances = resolve(tolerances)
    samples = S.sample(points)
    E = samples.E
    csub = covariant_subprincipal(samples, metric)
    pairing = np.einsum("pij,pbji->pb", csub, adjugate(E))
    A = -0.5 * np.einsum("pab,pb->pa", metric.gd_inv, pairing)
    imaginary = float(np.max(np.abs(A.imag), initial=0.0))
    A = A.real
    reconstruction = np.einsum("pa,paij->pij", A, E)
    A4 = None
    if E.shape[1] == 3:
        A4_complex = 0.5 * np.trace(csub, axis1=-2, axis2=-1)
        imaginary = max(imaginary, float(np.max(np.abs(A4_complex.imag))))
        A4 = A4_complex.real
        reconstruction = reconstruction + A4[:, None, None] * np.eye(2)
    residual = float(np.max(np.abs(csub - reconstruction)))
    if residual > tolerances.residual_potential:
        raise ResidualTooLarge(f"potential does not reproduce csub (residual {residual:.3e})")
    if imaginary > tolerances.imaginary:
        raise ResidualTooLarge(f"potential has an imaginary part of {imaginary:.3e}")
    return CovectorPotential(A=A, A4=A4, residual=residual, imaginary=imaginary, csub=csub)


def is_massless(S, tolerances=None):
    """True when every potential encoded in S vanishes (Weyl / massless Dirac forms)."""
    tolerances = resolve(tolerances)
    potential = potentials(S, metric_data(S, tolerances), tolerances)
    largest = float(np.max(np.abs(potential.A)))
    if potential.A4 is not None:
        largest = max(largest, float(np.max(np.abs(potential.A4))))
    return largest <= tolerances.potential


@dataclass(frozen=True, eq=False)
class Charges:
    c_top: int
    c_tem: int = None
    t: np.ndarray = None
    deviation: float = 0.0


def _constant_sign(values, name, tolerance):
    signs = np.sign(values.real)
    deviation = float(np.max(np.abs(values - signs)))
    if np.any(signs == 0) or np.any(signs != signs[0]) or deviation > tolerance:
        raise NonConstantCharge(f"{name} is not a constant ±1 (deviation {deviation:.3e})")
    return int(signs[0]), deviation


def charges(S, metric, chart=None, tolerances=None):
    """Topological charge, and in 4D the timelike field t and the temporal charge."""
    tolerances = resolve(tolerances)
    E = S.sample().E
    chart = chart if chart is not None else S.chart
    dim = E.shape[1]
    product = E[:, 0]
    for alpha in range(1, dim):
        product = product @ E[:, alpha]
    volume = np.sqrt(np.abs(np.linalg.det(metric.gd_inv)))
    c_top = -0.5j * volume * np.trace(product, axis1=-2, axis2=-1)
    c_top, deviation = _constant_sign(c_top, "topological charge", tolerances.charge)
    if dim == 3:
        return Charges(c_top=c_top, deviation=deviation)

    t = (np.trace(E, axis1=-2, axis2=-1) / metric.rho[:, None]).real
    norm = np.einsum("pa,pab,pb->p", t, metric.g_down, t)
    if np.max(norm) >= -tolerances.timelike:
        raise NotTimelike("trace field of the principal symbol is not timelike everywhere")
    pairing = t @ np.asarray(chart.q_ref, dtype=float)
    signs = np.sign(pairing)
    if np.any(signs == 0) or np.any(signs != signs[0]):
        raise NonConstantCharge("temporal charge changes sign")
    return Charges(c_top=c_top, c_tem=int(signs[0]), t=t, deviation=deviation)
