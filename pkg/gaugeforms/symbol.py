"""Full symbols of first-order sesquilinear forms and their validation."""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .conf import resolve
from .exceptions import ArityMismatch, GridMismatch
from .expr import I, MatrixValuedField, evaluate_fields
from .framing import density_frame

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Covector:
    """A momentum p_α."""

    p: tuple

    def as_array(self):
        return np.asarray(self.p, dtype=float)


@dataclass(frozen=True)
class RawForm:
    """Coefficients of ∫ u*A^α v_{x^α} + u*_{x^α} B^α v + u*C v dx."""

    A: tuple
    B: tuple
    C: MatrixValuedField


@dataclass(frozen=True, eq=False)
class SymbolSamples:
    """A full symbol known through its values at `points`.

    E has shape (P, m, 2, 2), dE has shape (P, m, m, 2, 2) with dE[:, a, c] the derivative
    of E^a along x^c, and F has shape (P, 2, 2).
    """

    chart: object
    points: np.ndarray
    E: np.ndarray
    dE: np.ndarray
    F: np.ndarray
    on_grid: bool = True
    name: str = ""

    @property
    def dim(self):
        return self.chart.dim

    def sample(self, points=None):
        if points is None:
            return self
        if not self.on_grid:
            raise GridMismatch("off-grid samples cannot be looked up")
        index = self.chart.indices_of(points)
        return SymbolSamples(
            chart=self.chart,
            points=np.atleast_2d(np.asarray(points, dtype=float)),
            E=self.E[index],
            dE=self.dE[index],
            F=self.F[index],
            on_grid=False,
            name=self.name,
        )

    def principal(self, p):
        p = np.asarray(p, dtype=float)
        return np.einsum("a,paij->pij", p, self.E)


@dataclass(frozen=True, eq=False)
class FullSymbol:
    """Density-valued coefficients E^α and F of a form in canonical representation."""

    chart: object
    E: tuple
    F: MatrixValuedField
    name: str = field(default="")

    @property
    def dim(self):
        return self.chart.dim

    @property
    def fields(self):
        return list(self.E) + [self.F]

    @cached_property
    def grid_samples(self):
        return self._evaluate(self.chart.points, on_grid=True)

    def sample(self, points=None):
        if points is None:
            return self.grid_samples
        return self._evaluate(np.atleast_2d(np.asarray(points, dtype=float)), on_grid=False)

    def _evaluate(self, points, on_grid):
        evaluated = evaluate_fields(self.fields, points, self.dim)
        E = np.stack([values for values, _ in evaluated[:-1]], axis=1)
        dE = np.stack([grads for _, grads in evaluated[:-1]], axis=1)
        return SymbolSamples(
            chart=self.chart,
            points=points,
            E=E,
            dE=dE,
            F=evaluated[-1][0],
            on_grid=on_grid,
            name=self.name,
        )

    def to_texts(self):
        texts = {f"E{a + 1}": e.to_texts() for a, e in enumerate(self.E)}
        texts["F"] = self.F.to_texts()
        return texts


def from_canonical(E, F, chart, name=""):
    E = tuple(E)
    if len(E) != chart.dim:
        raise ArityMismatch(f"a {chart.dim}-dimensional symbol needs {chart.dim} fields E^a")
    for matrix in E + (F,):
        matrix.check_dimension(chart.dim)
    return FullSymbol(chart=chart, E=E, F=F, name=name)


def from_raw(raw, chart, name=""):
    """E^α = i(A^α − B^α), F = C − ½ Σ ∂_α(A^α + B^α)."""
    if len(raw.A) != chart.dim or len(raw.B) != chart.dim:
        raise ArityMismatch(f"a {chart.dim}-dimensional raw form needs {chart.dim} A and B fields")
    E = tuple((a - b).scale(I) for a, b in zip(raw.A, raw.B))
    divergence = MatrixValuedField.zeros()
    for axis, (a, b) in enumerate(zip(raw.A, raw.B), start=1):
        divergence = divergence + (a + b).derivative(axis)
    F = raw.C - divergence.scale(0.5)
    return from_canonical(E, F, chart, name=name)


def principal_at(S, x, p):
    """𝐒_prin(x, p) = E^α(x) p_α."""
    point = x.as_array() if hasattr(x, "as_array") else np.asarray(x, dtype=float)
    p = p.as_array() if hasattr(p, "as_array") else np.asarray(p, dtype=float)
    if p.shape != (S.dim,):
        raise ArityMismatch(f"momentum needs {S.dim} components")
    return S.sample(point.reshape(1, -1)).principal(p)[0]


def _hermitian_error(matrices):
    return float(np.max(np.abs(matrices - np.conj(np.swapaxes(matrices, -1, -2))), initial=0.0))


@dataclass(frozen=True)
class ValidationReport:
    hermitian_error_E: float
    hermitian_error_F: float
    min_frame_det: float
    max_trace: float = None
    tolerances: object = None

    @property
    def hermitian(self):
        limit = self.tolerances.hermitian
        return self.hermitian_error_E <= limit and self.hermitian_error_F <= limit

    @property
    def nondegenerate(self):
        return self.min_frame_det > self.tolerances.degenerate

    @property
    def trace_free(self):
        if self.max_trace is None:
            return None
        return self.max_trace <= self.tolerances.trace

    @property
    def valid(self):
        return self.hermitian and self.nondegenerate and self.trace_free is not False

    def problems(self):
        found = []
        if not self.hermitian:
            found.append(
                f"not Hermitian (E: {self.hermitian_error_E:.3e}, F: {self.hermitian_error_F:.3e})"
            )
        if not self.nondegenerate:
            found.append(f"degenerate (min |det frame| = {self.min_frame_det:.3e})")
        if self.trace_free is False:
            found.append(f"principal symbol not trace-free (max |tr E| = {self.max_trace:.3e})")
        return found


def validate(S, tolerances=None):
    """Report Hermiticity, non-degeneracy and (3D) trace-freeness over the chart grid."""
    tolerances = resolve(tolerances)
    samples = S.sample()
    frame_det = np.abs(np.linalg.det(density_frame(samples.E)))
    max_trace = None
    if samples.dim == 3:
        max_trace = float(np.max(np.abs(np.trace(samples.E, axis1=-2, axis2=-1))))
    report = ValidationReport(
        hermitian_error_E=_hermitian_error(samples.E),
        hermitian_error_F=_hermitian_error(samples.F),
        min_frame_det=float(np.min(frame_det)),
        max_trace=max_trace,
        tolerances=tolerances,
    )
    if not report.valid:
        logger.debug("symbol %s failed validation: %s", S.name or "<anonymous>", report.problems())
    return report
