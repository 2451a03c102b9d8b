"""Gauge action on full symbols and the pairwise equivalence decision on tori.

A gauge map R acts on a form by S̃(u, v) = S(Ru, Rv). On full symbols this reads

    Ẽ^α = R* E^α R,
    F̃ = R* F R + (i/2) [R*_{x^α} E^α R − R* E^α R_{x^α}],

and composing gauges multiplies on the right: apply_gauge(apply_gauge(S, R1), R2) is
apply_gauge(S, R1 R2).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .chart import TWO_PI, spectral_antiderivative, spectral_gradient
from .conf import resolve
from .exceptions import (
    BadDimension,
    GridMismatch,
    LiftError,
    NoSingleValuedPhase,
    NotClosed,
    NotInGroup,
    SingularGauge,
    VanishingVolumeForm,
)
from .expr import I, MatrixValuedField, as_expression, evaluate_fields
from .framing import (
    frame_from_symbol,
    gauge_from_lift,
    global_lift_torus,
    monodromy_class,
    transition,
)
from .geometry import charges, metric_data, potentials
from .symbol import FullSymbol, SymbolSamples, from_canonical

logger = logging.getLogger(__name__)

STRICT = "strict"
HALF_PERIOD = "half_period"
LATTICE_MODES = (STRICT, HALF_PERIOD)
PRINCIPAL = "principal"
FULL = "full"
MODES = (PRINCIPAL, FULL)


class Group(str, Enum):
    GL = "gl"
    SL = "sl"
    U = "u"
    SU = "su"

    @property
    def dim(self):
        """Dimension of the manifolds the group is compared on."""
        return 4 if self in (Group.GL, Group.SL) else 3

    @property
    def unimodular(self):
        return self in (Group.SL, Group.SU)

    @property
    def unitary(self):
        return self in (Group.U, Group.SU)

    @property
    def reduced(self):
        return {Group.GL: Group.SL, Group.U: Group.SU}.get(self, self)


def _adjoint(matrices):
    return np.conj(np.swapaxes(matrices, -1, -2))


def check_group(values, group, tolerances=None):
    """Raise NotInGroup unless every sampled matrix belongs to `group`."""
    tolerances = resolve(tolerances)
    group = Group(group)
    determinant = np.linalg.det(values)
    if np.min(np.abs(determinant)) <= tolerances.gauge:
        raise NotInGroup("gauge map is singular somewhere on the grid")
    if group.unimodular:
        error = float(np.max(np.abs(determinant - 1.0)))
        if error > tolerances.gauge:
            raise NotInGroup(f"det R differs from 1 by {error:.3e}")
    if group.unitary:
        error = float(np.max(np.abs(_adjoint(values) @ values - np.eye(2))))
        if error > tolerances.gauge:
            raise NotInGroup(f"R*R differs from the identity by {error:.3e}")


@dataclass(frozen=True, eq=False)
class GaugeSamples:
    """Values (P, 2, 2) and partial derivatives (P, dim, 2, 2) of a gauge map."""

    values: np.ndarray
    grads: np.ndarray


@dataclass(frozen=True, eq=False)
class GaugeMap:
    """A gauge map given by expressions."""

    R: MatrixValuedField
    group: Group = Group.GL
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "group", Group(self.group))

    def sample(self, points, dim=None):
        values, grads = evaluate_fields([self.R], points, dim)[0]
        return GaugeSamples(values=values, grads=grads)

    def validate(self, chart, tolerances=None):
        check_group(self.sample(chart.points, chart.dim).values, self.group, tolerances)
        return self

    def compose(self, other):
        """The gauge applied by `self` then `other`, i.e. R_self R_other."""
        group = self.group if self.group == other.group else Group.GL
        if {self.group, other.group} <= {Group.U, Group.SU}:
            group = Group.U if Group.U in (self.group, other.group) else Group.SU
        return GaugeMap(R=self.R @ other.R, group=group)

    def inverse(self):
        return GaugeMap(R=self.R.inverse(), group=self.group)


@dataclass(frozen=True, eq=False)
class SampledGauge:
    """A gauge map known on the chart grid; derivatives are spectral unless supplied."""

    chart: object
    values: np.ndarray
    grads: np.ndarray
    group: Group = Group.GL

    @classmethod
    def from_samples(cls, chart, values, group=Group.GL):
        values = np.asarray(values, dtype=complex)
        return cls(
            chart=chart,
            values=values,
            grads=spectral_gradient(chart, values),
            group=Group(group),
        )

    def sample(self, points=None, dim=None):
        if points is None or points is self.chart.points:
            return GaugeSamples(values=self.values, grads=self.grads)
        index = self.chart.indices_of(points)
        return GaugeSamples(values=self.values[index], grads=self.grads[index])

    def validate(self, chart=None, tolerances=None):
        check_group(self.values, self.group, tolerances)
        return self

    def with_phase(self, phase):
        """e^{iφ} R with the derivative of the phase folded in exactly."""
        factor = phase.exp()
        values = factor[:, None, None] * self.values
        grads = factor[:, None, None, None] * (
            self.grads + 1j * phase.gradient[:, :, None, None] * self.values[:, None]
        )
        return SampledGauge(chart=self.chart, values=values, grads=grads, group=self.group)

    def coarse(self, step):
        """Values on every `step`-th grid point per axis."""
        grid = self.chart.to_grid(self.values)
        index = (slice(None, None, step),) * self.chart.dim
        return grid[index].reshape((-1, 2, 2))


# --------------------------
# Gauge action
# --------------------------
def _check_invertible(values, tolerances):
    if np.min(np.abs(np.linalg.det(values))) <= tolerances.gauge:
        raise SingularGauge("gauge map is not invertible somewhere on the grid")


def apply_gauge(S, gauge, tolerances=None):
    """The symbol of S(Ru, Rv).

    Expression-backed inputs give an expression-backed FullSymbol; otherwise the result is
    sampled on the points of S.
    """
    tolerances = resolve(tolerances)
    if isinstance(S, FullSymbol) and isinstance(gauge, GaugeMap):
        _check_invertible(gauge.sample(S.chart.points, S.dim).values, tolerances)
        R = gauge.R
        R_adj = R.adjoint()
        E = tuple(R_adj @ e @ R for e in S.E)
        correction = MatrixValuedField.zeros()
        for axis, e in enumerate(S.E, start=1):
            dR = R.derivative(axis)
            correction = correction + dR.adjoint() @ e @ R - R_adj @ e @ dR
        F = R_adj @ S.F @ R + correction.scale(I * 0.5)
        return from_canonical(E, F, S.chart, name=S.name)

    samples = S.sample()
    g = gauge.sample(samples.points, samples.dim)
    R, dR = g.values, g.grads
    _check_invertible(R, tolerances)
    R_adj = _adjoint(R)
    dR_adj = _adjoint(dR)
    E = np.einsum("pij,pajk,pkl->pail", R_adj, samples.E, R)
    dE = (
        np.einsum("pcij,pajk,pkl->pacil", dR_adj, samples.E, R, optimize=True)
        + np.einsum("pij,pacjk,pkl->pacil", R_adj, samples.dE, R, optimize=True)
        + np.einsum("pij,pajk,pckl->pacil", R_adj, samples.E, dR, optimize=True)
    )
    correction = np.einsum("paij,pajk,pkl->pil", dR_adj, samples.E, R, optimize=True) - np.einsum(
        "pij,pajk,pakl->pil", R_adj, samples.E, dR, optimize=True
    )
    F = R_adj @ samples.F @ R + 0.5j * correction
    return SymbolSamples(
        chart=samples.chart,
        points=samples.points,
        E=E,
        dE=dE,
        F=F,
        on_grid=samples.on_grid,
        name=samples.name,
    )


@dataclass(frozen=True, eq=False)
class GaugePhase:
    """½ Im(d det R / det R) on the grid and the winding of det R around each axis."""

    one_form: np.ndarray
    winding: tuple


def gauge_phase(gauge, chart):
    g = gauge.sample(chart.points, chart.dim) if isinstance(gauge, GaugeMap) else gauge.sample()
    determinant = np.linalg.det(g.values)
    trace = np.trace(g.values, axis1=-2, axis2=-1)
    adj = trace[:, None, None] * np.eye(2) - g.values
    d_det = np.einsum("pij,paji->pa", adj, g.grads)
    one_form = 0.5 * (d_det / determinant[:, None]).imag
    grid = chart.to_grid(determinant)
    winding = []
    for axis in range(chart.dim):
        index = (0,) * axis + (slice(None),) + (0,) * (chart.dim - axis - 1)
        line = grid[index]
        steps = np.angle(np.roll(line, -1) / line)
        winding.append(int(np.rint(steps.sum() / TWO_PI)))
    return GaugePhase(one_form=one_form, winding=tuple(winding))


# --------------------------
# Volume forms
# --------------------------
@dataclass(frozen=True, eq=False)
class VolumeForm:
    c: object
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "c", as_expression(self.c))

    def validate(self, chart, tolerances=None):
        tolerances = resolve(tolerances)
        values = self.c.evaluate(chart.points, chart.dim).value
        if np.min(np.abs(values)) <= tolerances.gauge:
            raise VanishingVolumeForm("volume form vanishes somewhere on the grid")
        return self


def volume_form_reduction(S, c, S_tilde, c_tilde, reduce="second", tolerances=None):
    """Gauge one side by Q = diag(c/c̃, 1) so both symbols carry the same volume form."""
    chart = S.chart
    c = VolumeForm(c) if not isinstance(c, VolumeForm) else c
    c_tilde = VolumeForm(c_tilde) if not isinstance(c_tilde, VolumeForm) else c_tilde
    c.validate(chart, tolerances)
    c_tilde.validate(chart, tolerances)
    if reduce == "second":
        Q = GaugeMap(MatrixValuedField.diagonal(c.c / c_tilde.c, 1))
        return S, apply_gauge(S_tilde, Q, tolerances)
    if reduce == "first":
        Q = GaugeMap(MatrixValuedField.diagonal(c_tilde.c / c.c, 1))
        return apply_gauge(S, Q, tolerances), S_tilde
    raise ValueError(f"reduce must be 'first' or 'second', got {reduce!r}")


# --------------------------
# Potentials and phases
# --------------------------
def _curl_error(chart, one_form):
    derivatives = spectral_gradient(chart, one_form)
    return float(np.max(np.abs(derivatives - np.swapaxes(derivatives, 1, 2))))


def origin_periods(chart, one_form):
    grid = chart.to_grid(one_form)
    periods = []
    for axis in range(chart.dim):
        index = (0,) * axis + (slice(None),) + (0,) * (chart.dim - axis - 1) + (axis,)
        periods.append(float(grid[index].mean() * TWO_PI))
    return tuple(periods)


@dataclass(frozen=True)
class CohomologyComparison:
    same_class: bool
    periods: tuple
    lattice_mode: str
    curl_error: float


def cohomology_compare(A, A_tilde, chart, lattice_mode=STRICT, tolerances=None):
    """Compare the de Rham classes of two sampled potentials (P, dim)."""
    tolerances = resolve(tolerances)
    if lattice_mode not in LATTICE_MODES:
        raise ValueError(f"unknown lattice mode {lattice_mode!r}")
    omega = np.asarray(A_tilde, dtype=float) - np.asarray(A, dtype=float)
    curl = _curl_error(chart, omega)
    if curl > tolerances.closed:
        raise NotClosed(f"difference of potentials is not closed (curl {curl:.3e})")
    periods = origin_periods(chart, omega)
    unit = np.pi if lattice_mode == HALF_PERIOD else np.inf
    offsets = [p - unit * np.rint(p / unit) if np.isfinite(unit) else p for p in periods]
    same = all(abs(offset) <= tolerances.period for offset in offsets)
    logger.debug("periods %s (%s): same class %s", periods, lattice_mode, same)
    return CohomologyComparison(
        same_class=same, periods=periods, lattice_mode=lattice_mode, curl_error=curl
    )


@dataclass(frozen=True, eq=False)
class Phase:
    """Circle-valued φ = winding · x + ψ with ψ periodic."""

    chart: object
    winding: tuple
    psi: np.ndarray
    gradient: np.ndarray

    @property
    def values(self):
        return self.psi + self.chart.points @ np.asarray(self.winding, dtype=float)

    def exp(self):
        return np.exp(1j * self.values)


def construct_phase(one_form, chart, tolerances=None):
    """φ with ∇φ = ω for a closed ω whose periods lie in 2πℤ."""
    tolerances = resolve(tolerances)
    omega = np.asarray(one_form, dtype=float)
    curl = _curl_error(chart, omega)
    if curl > tolerances.closed:
        raise NotClosed(f"1-form is not closed (curl {curl:.3e})")
    psi, means = spectral_antiderivative(chart, omega)
    periods = means * TWO_PI
    winding = np.rint(means)
    if np.max(np.abs(means - winding)) * TWO_PI > tolerances.period:
        raise NoSingleValuedPhase(
            f"periods {tuple(float(p) for p in periods)} are not multiples of 2π",
            periods=tuple(float(p) for p in periods),
        )
    gradient = spectral_gradient(chart, psi) + winding
    return Phase(
        chart=chart,
        winding=tuple(int(w) for w in winding),
        psi=psi,
        gradient=gradient,
    )


# --------------------------
# Equivalence decision
# --------------------------
@dataclass(frozen=True)
class StageResult:
    name: str
    passed: bool
    message: str = ""


@dataclass(eq=False)
class EquivalenceReport:
    group: Group
    mode: str
    lattice_mode: str
    stages: list = field(default_factory=list)
    charges: dict = field(default_factory=dict)
    conformal_factor: tuple = None
    monodromy: tuple = None
    lift_exists: bool = None
    periods: tuple = None
    phase_winding: tuple = None
    residuals: dict = field(default_factory=dict)
    gauge: SampledGauge = None

    @property
    def equivalent(self):
        return bool(self.stages) and all(stage.passed for stage in self.stages)

    @property
    def failed_stage(self):
        for stage in self.stages:
            if not stage.passed:
                return stage.name
        return None

    def record(self, name, passed, message=""):
        self.stages.append(StageResult(name=name, passed=passed, message=message))
        logger.info("stage %s: %s %s", name, "passed" if passed else "failed", message)
        return passed


def _frame_of(samples, tolerances):
    metric = metric_data(samples, tolerances)
    return metric, frame_from_symbol(samples, metric, tolerances)


def _transition_sampler(S, S_tilde, tolerances):
    def transition_at(points):
        _, e = _frame_of(S.sample(points), tolerances)
        _, e_tilde = _frame_of(S_tilde.sample(points), tolerances)
        return transition(e, e_tilde, tolerances).normalized

    return transition_at


def _max_difference(a, b):
    return float(np.max(np.abs(a - b)))


def _metric_stage(report, group, metric, metric_tilde, tolerances):
    g, g_tilde = metric.g_up, metric_tilde.g_up
    if group != Group.GL:
        error = _max_difference(g, g_tilde)
        report.residuals["metric"] = error
        return report.record("metric", error <= tolerances.metric, f"max |g̃ − g| = {error:.3e}")
    rows = np.arange(len(g))
    flat, flat_tilde = g.reshape(len(g), -1), g_tilde.reshape(len(g), -1)
    pick = np.argmax(np.abs(flat), axis=1)
    ratio = flat_tilde[rows, pick] / flat[rows, pick]
    spread = _max_difference(g_tilde, ratio[:, None, None] * g)
    report.conformal_factor = (float(ratio.min()), float(ratio.max()))
    report.residuals["conformal"] = spread
    if np.min(ratio) <= 0:
        return report.record("metric", False, "conformal factor is not positive")
    return report.record(
        "metric", spread <= tolerances.conformal, f"conformal spread {spread:.3e}"
    )


def decide_equivalence(
    S, S_tilde, group, mode=PRINCIPAL, lattice_mode=None, n_samples=None, tolerances=None
):
    """Decide whether a gauge map in `group` carries S to S_tilde; stops at the first
    failing stage and returns the evidence gathered so far."""
    tolerances = resolve(tolerances)
    group = Group(group)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    lattice_mode = lattice_mode or (STRICT if group.unimodular else HALF_PERIOD)
    chart = S.chart
    if S_tilde.chart != chart:
        raise GridMismatch("symbols live on different charts")
    if chart.dim != group.dim:
        raise BadDimension(f"group {group.value} compares {group.dim}-dimensional symbols")

    report = EquivalenceReport(group=group, mode=mode, lattice_mode=lattice_mode)
    samples, samples_tilde = S.sample(), S_tilde.sample()
    metric, frame = _frame_of(samples, tolerances)
    metric_tilde, frame_tilde = _frame_of(samples_tilde, tolerances)

    q, q_tilde = charges(samples, metric, chart, tolerances), charges(
        samples_tilde, metric_tilde, chart, tolerances
    )
    report.charges = {
        "c_top": (q.c_top, q_tilde.c_top),
        "c_tem": (q.c_tem, q_tilde.c_tem),
    }
    if not report.record(
        "charges",
        q.c_top == q_tilde.c_top and q.c_tem == q_tilde.c_tem,
        f"c_top {q.c_top}/{q_tilde.c_top}, c_tem {q.c_tem}/{q_tilde.c_tem}",
    ):
        return report

    if not _metric_stage(report, group, metric, metric_tilde, tolerances):
        return report

    try:
        change = transition(frame, frame_tilde, tolerances)
    except NotInGroup as exc:
        report.record("transition", False, str(exc))
        return report
    report.record("transition", True, f"group error {change.group_error:.3e}")

    grid_only = not (isinstance(S, FullSymbol) and isinstance(S_tilde, FullSymbol))
    loop_length = chart.resolution if grid_only else max(16, chart.resolution, n_samples or 0)
    try:
        monodromy = monodromy_class(
            _transition_sampler(S, S_tilde, tolerances),
            chart,
            loop_length,
            tolerances=tolerances,
            refine=not grid_only,
        )
    except LiftError as exc:
        report.record("monodromy", False, str(exc))
        return report
    report.monodromy = monodromy.signs
    trivial = all(sign > 0 for sign in monodromy.signs)
    if not report.record(
        "monodromy",
        trivial or not group.unimodular,
        f"signs {monodromy.signs}",
    ):
        report.lift_exists = False
        return report

    try:
        lift = global_lift_torus(change.normalized, monodromy.signs, group, chart, tolerances)
    except LiftError as exc:
        report.lift_exists = False
        report.record("lift", False, str(exc))
        return report
    report.lift_exists = True
    report.record("lift", True, f"half-period twists {lift.kappa}")
    scaled = np.sqrt(change.lam)[:, None, None] * lift.values
    gauge = SampledGauge.from_samples(chart, gauge_from_lift(scaled), group)

    if mode == FULL:
        gauge = _match_potentials(report, S, S_tilde, gauge, metric_tilde, tolerances)
        if gauge is None:
            return report

    transformed = apply_gauge(samples, gauge, tolerances)
    residual_E = _max_difference(transformed.E, samples_tilde.E)
    report.residuals["E"] = residual_E
    residual = residual_E
    if mode == FULL:
        residual_F = _max_difference(transformed.F, samples_tilde.F)
        report.residuals["F"] = residual_F
        residual = max(residual, residual_F)
    if report.record(
        "residual", residual <= tolerances.reconstruction, f"max residual {residual:.3e}"
    ):
        report.gauge = gauge
    return report


def _match_potentials(report, S, S_tilde, gauge, metric_tilde, tolerances):
    chart = S.chart
    transformed = apply_gauge(S.sample(), gauge, tolerances)
    potential_hat = potentials(transformed, metric_data(transformed, tolerances), tolerances)
    potential_tilde = potentials(S_tilde.sample(), metric_tilde, tolerances)
    omega = potential_tilde.A - potential_hat.A

    try:
        comparison = cohomology_compare(
            potential_hat.A, potential_tilde.A, chart, report.lattice_mode, tolerances
        )
    except NotClosed as exc:
        report.record("potential_class", False, str(exc))
        return None
    report.periods = comparison.periods
    if not report.record(
        "potential_class", comparison.same_class, f"periods {comparison.periods}"
    ):
        return None

    if chart.dim == 3:
        potential = potentials(S.sample(), metric_data(S.sample(), tolerances), tolerances)
        error = _max_difference(potential.A4, potential_tilde.A4)
        report.residuals["electric_potential"] = error
        if not report.record(
            "electric_potential", error <= tolerances.potential, f"max |Ã₄ − A₄| = {error:.3e}"
        ):
            return None

    if report.group.unimodular:
        error = float(np.max(np.abs(omega)))
        report.residuals["potential"] = error
        report.record("phase", error <= tolerances.potential, f"max |Ã − Â| = {error:.3e}")
        return gauge if error <= tolerances.potential else None

    try:
        phase = construct_phase(omega, chart, tolerances)
    except (NotClosed, NoSingleValuedPhase) as exc:
        report.record("phase", False, str(exc))
        return None
    report.phase_winding = phase.winding
    report.record("phase", True, f"winding {phase.winding}")
    return gauge.with_phase(phase)
