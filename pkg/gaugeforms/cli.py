"""Report builders behind the management commands.

Exit codes: 0 success / equivalent, 1 parse or config error, 2 invalid input,
3 not equivalent.
"""

import logging

import numpy as np
from django.core.management.base import CommandError
from rest_framework.renderers import JSONRenderer

from .builtins import builtin
from .conf import Tolerances
from .config import ConfigDocument, load_config
from .equivalence import (
    HALF_PERIOD,
    Group,
    apply_gauge,
    decide_equivalence,
    origin_periods,
    volume_form_reduction,
)
from .exceptions import ConfigError, InvalidSymbol, ParseError, UnknownIdentifier
from .framing import frame_from_symbol, monodromy_class, transition
from .geometry import charges, is_massless, metric_data, potentials
from .serializers import SCHEMA_VERSION
from .symbol import validate

logger = logging.getLogger(__name__)

EXIT_PARSE = 1
EXIT_INVALID = 2
EXIT_NOT_EQUIVALENT = 3
LATTICE_FLAGS = {"strict": "strict", "half": HALF_PERIOD, HALF_PERIOD: HALF_PERIOD}


def command_error(exc):
    """CommandError with the exit code matching a library error."""
    parse = isinstance(exc, (ConfigError, ParseError, UnknownIdentifier))
    return CommandError(str(exc), returncode=EXIT_PARSE if parse else EXIT_INVALID)


def parse_tolerances(pairs):
    overrides = {}
    for pair in pairs or ():
        name, sep, value = pair.partition("=")
        if not sep:
            raise CommandError(f"--tol expects NAME=VALUE, got '{pair}'", returncode=EXIT_PARSE)
        try:
            overrides[name.strip()] = float(value)
        except ValueError:
            raise CommandError(f"--tol {name}: not a number", returncode=EXIT_PARSE) from None
    try:
        return Tolerances.from_settings().with_overrides(**overrides)
    except KeyError as exc:
        raise CommandError(str(exc.args[0]), returncode=EXIT_PARSE) from None


def resolve_symbols(config_path, names, use_builtin, resolution=None):
    """Symbols by name, from built-ins or a config document, plus the document if any."""
    if use_builtin:
        return [builtin(name, resolution) for name in names], None
    if config_path is None:
        raise ConfigError("a config file is required unless --builtin is given")
    document = load_config(config_path, resolution)
    return [document.symbol(name) for name in names], document


def render(serializer_class, data):
    serializer = serializer_class(data=data)
    serializer.is_valid(raise_exception=True)
    return JSONRenderer().render(serializer.data, renderer_context={"indent": 2}).decode()


def _range(values):
    return [float(np.min(values)), float(np.max(values))]


# --------------------------
# analyze
# --------------------------
def run_analyze(S, allow_invalid=False, tolerances=None):
    """Invariant report of one symbol; InvalidSymbol propagates unless allow_invalid."""
    tolerances = tolerances or Tolerances.from_settings()
    report = validate(S, tolerances)
    data = {
        "schema_version": SCHEMA_VERSION,
        "kind": "analyze",
        "symbol": S.name,
        "dim": S.dim,
        "grid": S.chart.resolution,
        "validation": {
            "valid": report.valid,
            "hermitian_error_E": report.hermitian_error_E,
            "hermitian_error_F": report.hermitian_error_F,
            "min_frame_det": report.min_frame_det,
            "max_trace": report.max_trace,
            "problems": report.problems(),
        },
        "signature": None,
        "metric_at_origin": None,
        "rho_range": None,
        "potentials": None,
        "charges": None,
        "frame_det_range": None,
        "time_field_at_origin": None,
        "errors": [],
    }
    if not report.valid:
        if not allow_invalid:
            raise InvalidSymbol(f"symbol '{S.name}' is invalid: {'; '.join(report.problems())}")
        logger.warning("analysing invalid symbol '%s'", S.name)

    try:
        metric = metric_data(S, tolerances)
        data["signature"] = metric.signature
        data["metric_at_origin"] = metric.g_up[0].tolist()
        data["rho_range"] = _range(metric.rho)
        frame = frame_from_symbol(S, metric, tolerances)
        data["frame_det_range"] = _range(frame.determinant)
        q = charges(S, metric, S.chart, tolerances)
        data["charges"] = {"c_top": q.c_top, "c_tem": q.c_tem, "deviation": q.deviation}
        if q.t is not None:
            data["time_field_at_origin"] = q.t[0].tolist()
        potential = potentials(S, metric, tolerances)
        data["potentials"] = {
            "A_at_origin": potential.A[0].tolist(),
            "periods": list(origin_periods(S.chart, potential.A)),
            "electric_range": None if potential.A4 is None else _range(potential.A4),
            "massless": is_massless(S, tolerances),
        }
    except InvalidSymbol as exc:
        if not allow_invalid:
            raise
        data["errors"].append(f"{type(exc).__name__}: {exc}")
    return data


# --------------------------
# compare
# --------------------------
def _coarse_gauge(gauge):
    chart = gauge.chart
    step = max(1, chart.resolution // 4)
    values = gauge.coarse(step)
    grid = chart.to_grid(chart.points)[(slice(None, None, step),) * chart.dim]
    return {
        "step": step,
        "points": grid.reshape(-1, chart.dim).tolist(),
        "real": values.real.tolist(),
        "imag": values.imag.tolist(),
    }


def run_compare(
    S,
    S_tilde,
    group,
    mode="principal",
    lattice=None,
    volumes=None,
    n_samples=None,
    tolerances=None,
):
    """Equivalence report; `volumes` = (c, c̃) reduces the comparison to SL or SU."""
    tolerances = tolerances or Tolerances.from_settings()
    group = Group(group)
    for symbol in (S, S_tilde):
        report = validate(symbol, tolerances)
        if not report.valid:
            raise InvalidSymbol(
                f"symbol '{symbol.name}' is invalid: {'; '.join(report.problems())}"
            )
    if volumes is not None:
        c, c_tilde = volumes
        S, S_tilde = volume_form_reduction(S, c, S_tilde, c_tilde, tolerances=tolerances)
        group = group.reduced
    lattice = LATTICE_FLAGS[lattice] if lattice else None
    result = decide_equivalence(
        S, S_tilde, group, mode, lattice, n_samples=n_samples, tolerances=tolerances
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "compare",
        "symbols": [S.name, S_tilde.name],
        "group": result.group.value,
        "mode": result.mode,
        "lattice": result.lattice_mode,
        "verdict": "equivalent" if result.equivalent else "not_equivalent",
        "failed_stage": result.failed_stage,
        "stages": [
            {"name": s.name, "passed": s.passed, "message": s.message} for s in result.stages
        ],
        "charges": {
            "c_top": list(result.charges.get("c_top", ())),
            "c_tem": list(result.charges.get("c_tem", ())),
        },
        "conformal_factor": list(result.conformal_factor) if result.conformal_factor else None,
        "periods": list(result.periods) if result.periods is not None else None,
        "monodromy": list(result.monodromy) if result.monodromy is not None else None,
        "lift_exists": result.lift_exists,
        "phase_winding": list(result.phase_winding) if result.phase_winding else None,
        "residuals": dict(result.residuals),
        "gauge": _coarse_gauge(result.gauge) if result.gauge is not None else None,
    }


# --------------------------
# lift
# --------------------------
def run_lift(S, S_tilde, conformal=False, n_samples=None, tolerances=None):
    """Frame transition diagnostics and monodromy signs of a pair."""
    tolerances = tolerances or Tolerances.from_settings()
    metric, metric_tilde = metric_data(S, tolerances), metric_data(S_tilde, tolerances)
    change = transition(
        frame_from_symbol(S, metric, tolerances),
        frame_from_symbol(S_tilde, metric_tilde, tolerances),
        tolerances,
    )
    deviation = float(np.max(np.abs(change.lam - 1.0)))
    if not conformal and deviation > tolerances.metric:
        raise InvalidSymbol(
            f"metrics differ by a conformal factor (|λ − 1| up to {deviation:.3e}); "
            "pass --conformal"
        )

    def transition_at(points):
        samples, samples_tilde = S.sample(points), S_tilde.sample(points)
        e = frame_from_symbol(samples, metric_data(samples, tolerances), tolerances)
        e_tilde = frame_from_symbol(
            samples_tilde, metric_data(samples_tilde, tolerances), tolerances
        )
        return transition(e, e_tilde, tolerances).normalized

    monodromy = monodromy_class(transition_at, S.chart, n_samples, tolerances=tolerances)
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "lift",
        "symbols": [S.name, S_tilde.name],
        "conformal": conformal,
        "group_error": change.group_error,
        "lambda_range": _range(change.lam),
        "monodromy": list(monodromy.signs),
        "samples": list(monodromy.samples),
    }


# --------------------------
# transform
# --------------------------
def run_transform(document, symbol_name, gauge_name, tolerances=None):
    """Config text holding apply_gauge(symbol, gauge), named SYMBOL_GAUGE."""
    S = document.symbol(symbol_name)
    gauge = document.gauge(gauge_name).validate(document.chart, tolerances)
    name = f"{symbol_name}_{gauge_name}"
    transformed = apply_gauge(S, gauge, tolerances)
    return ConfigDocument(chart=document.chart, symbols={name: transformed}).to_text()


def write_output(stdout, text, output=None):
    if output:
        with open(output, "w", encoding="utf-8") as handle:
            handle.write(text if text.endswith("\n") else text + "\n")
    else:
        stdout.write(text.rstrip("\n"))

