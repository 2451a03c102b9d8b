"""Correspondence between forms and first-order operators, checked by quadrature.

For a positive density μ the form S(u, v) = ⟨u, Lv⟩_μ defines

    L = (1/μ) (−i E^α ∂_α + F − (i/2) E^α_{,α}).
"""

import logging
from dataclasses import dataclass

import numpy as np

from .chart import central_gradient, integrate_periodic, spectral_gradient
from .exceptions import GridMismatch, SampleCountMismatch
from .expr import I, as_expression, parse_expression
from .geometry import metric_data

logger = logging.getLogger(__name__)


def _same_chart(*charts):
    first = charts[0]
    for other in charts[1:]:
        if other != first:
            raise GridMismatch("fields live on different charts")
    return first


@dataclass(frozen=True, eq=False)
class SectionField:
    """A ℂ²-valued function sampled on the chart grid: values (P, 2), grads (P, dim, 2)."""

    chart: object
    values: np.ndarray
    grads: np.ndarray = None

    @classmethod
    def from_expressions(cls, chart, components):
        if len(components) != 2:
            raise SampleCountMismatch(f"a section has 2 components, got {len(components)}")
        duals = [
            (parse_expression(c) if isinstance(c, str) else as_expression(c)).evaluate(
                chart.points, chart.dim
            )
            for c in components
        ]
        return cls(
            chart=chart,
            values=np.stack([d.value for d in duals], axis=-1),
            grads=np.stack([d.grad for d in duals], axis=-1),
        )

    @classmethod
    def from_samples(cls, chart, values, grads=None, method="central"):
        values = np.asarray(values, dtype=complex)
        if values.shape != (chart.size, 2):
            raise SampleCountMismatch(f"expected samples of shape {(chart.size, 2)}")
        if grads is None:
            grads = spectral_gradient(chart, values) if method == "spectral" else None
        return cls(chart=chart, values=values, grads=grads)

    def gradient(self):
        if self.grads is None:
            return central_gradient(self.chart, self.values)
        return self.grads

    def gauged(self, gauge):
        """The section R u, differentiated by the product rule."""
        g = gauge.sample(self.chart.points, self.chart.dim)
        values = np.einsum("pij,pj->pi", g.values, self.values)
        grads = np.einsum("paij,pj->pai", g.grads, self.values) + np.einsum(
            "pij,paj->pai", g.values, self.gradient()
        )
        return SectionField(chart=self.chart, values=values, grads=grads)


@dataclass(frozen=True, eq=False)
class DensityField:
    """A positive density μ on the chart grid with its gradient (P, dim)."""

    chart: object
    values: np.ndarray
    grads: np.ndarray = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.chart.size,):
            raise SampleCountMismatch(f"expected {self.chart.size} density samples")
        if np.min(values) <= 0:
            raise ValueError("density must be positive everywhere")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, chart, value=1.0):
        return cls(
            chart=chart,
            values=np.full(chart.size, float(value)),
            grads=np.zeros((chart.size, chart.dim)),
        )

    @classmethod
    def from_expression(cls, chart, expression):
        if isinstance(expression, str):
            expression = parse_expression(expression)
        dual = as_expression(expression).evaluate(chart.points, chart.dim)
        return cls(chart=chart, values=dual.value.real, grads=dual.grad.real)

    @classmethod
    def from_symbol(cls, S, tolerances=None):
        """μ = ρ, the density encoded in the principal symbol."""
        return cls(chart=S.chart, values=metric_data(S, tolerances).rho)

    def gradient(self):
        if self.grads is None:
            return spectral_gradient(self.chart, self.values)
        return self.grads


def form_value(S, u, v):
    """∫ −(i/2) u* E^α v_α + (i/2) u*_α E^α v + u* F v dx."""
    chart = _same_chart(S.chart, u.chart, v.chart)
    samples = S.sample()
    u_conj, du_conj = np.conj(u.values), np.conj(u.gradient())
    integrand = (
        -0.5j * np.einsum("pi,paij,paj->p", u_conj, samples.E, v.gradient())
        + 0.5j * np.einsum("pai,paij,pj->p", du_conj, samples.E, v.values)
        + np.einsum("pi,pij,pj->p", u_conj, samples.F, v.values)
    )
    return complex(integrate_periodic(chart, integrand))


def inner_product(u, v, mu=None):
    """∫ u* v μ dx; μ defaults to 1."""
    chart = _same_chart(u.chart, v.chart, *([mu.chart] if mu is not None else []))
    integrand = np.einsum("pi,pi->p", np.conj(u.values), v.values)
    if mu is not None:
        integrand = integrand * mu.values
    return complex(integrate_periodic(chart, integrand))


def _divergence(dE):
    return np.einsum("paaij->pij", dE)


def apply_operator(S, mu, v, tolerances=None):
    """L v for the density μ; pass mu=None for ρ."""
    mu = mu if mu is not None else DensityField.from_symbol(S, tolerances)
    chart = _same_chart(S.chart, v.chart, mu.chart)
    samples = S.sample()
    result = (
        -1j * np.einsum("paij,paj->pi", samples.E, v.gradient())
        + np.einsum("pij,pj->pi", samples.F, v.values)
        - 0.5j * np.einsum("pij,pj->pi", _divergence(samples.dE), v.values)
    )
    return SectionField.from_samples(chart, result / mu.values[:, None], method="spectral")


def subprincipal_of_operator(E, F, dE=None):
    """L_sub = F + (i/2) Σ ∂_α E^α.

    With expression fields the result is a MatrixValuedField; with samples pass dE
    (P, m, m, 2, 2) and get an array (P, 2, 2).
    """
    if dE is None:
        result = F
        for axis, e in enumerate(E, start=1):
            result = result + e.derivative(axis).scale(I * 0.5)
        return result
    return np.asarray(F) + 0.5j * _divergence(dE)


@dataclass(frozen=True, eq=False)
class HalfDensityOperator:
    """μ^{1/2} L μ^{-1/2} = −i E_op^α ∂_α + F_op."""

    chart: object
    E: np.ndarray
    F: np.ndarray
    dE: np.ndarray

    @property
    def subprincipal(self):
        return subprincipal_of_operator(self.E, self.F, self.dE)

    def apply(self, w):
        _same_chart(self.chart, w.chart)
        return SectionField.from_samples(
            self.chart,
            -1j * np.einsum("paij,paj->pi", self.E, w.gradient())
            + np.einsum("pij,pj->pi", self.F, w.values),
            method="spectral",
        )


def half_density_operator(S, mu=None, tolerances=None):
    """E_op = E/μ and F_op = F/μ − (i/2) ∂_α(E^α/μ)."""
    mu = mu if mu is not None else DensityField.from_symbol(S, tolerances)
    chart = _same_chart(S.chart, mu.chart)
    samples = S.sample()
    inverse = 1.0 / mu.values
    d_inverse = -mu.gradient() * inverse[:, None] ** 2
    E_op = samples.E * inverse[:, None, None, None]
    dE_op = (
        samples.dE * inverse[:, None, None, None, None]
        + samples.E[:, :, None] * d_inverse[:, None, :, None, None]
    )
    F_op = samples.F * inverse[:, None, None] - 0.5j * _divergence(dE_op)
    return HalfDensityOperator(chart=chart, E=E_op, F=F_op, dE=dE_op)


def plane_wave(chart, wavevector, spinor=(1, 0)):
    """e^{i k·x} times a constant spinor, with exact gradient."""
    k = np.asarray(wavevector, dtype=float)
    phase = np.exp(1j * (chart.points @ k))
    spinor = np.asarray(spinor, dtype=complex)
    values = phase[:, None] * spinor
    grads = 1j * k[None, :, None] * values[:, None, :]
    return SectionField(chart=chart, values=values, grads=grads)
