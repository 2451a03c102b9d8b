"""Numerical tolerances, read from Django settings."""

from dataclasses import dataclass, fields, replace

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured


@dataclass(frozen=True)
class Tolerances:
    """Absolute tolerances used by the checks of each module.

    Values come from ``settings.GAUGEFORMS_TOLERANCES``; the field list only names them.
    """

    hermitian: float
    degenerate: float
    trace: float
    symmetric: float
    inverse: float
    residual_potential: float
    imaginary: float
    charge: float
    timelike: float
    orthonormal: float
    group: float
    lift: float
    closure: float
    gauge: float
    metric: float
    conformal: float
    closed: float
    period: float
    potential: float
    reconstruction: float

    @classmethod
    def from_settings(cls):
        configured = getattr(settings, "GAUGEFORMS_TOLERANCES", {})
        missing = set(cls.names()) - set(configured)
        if missing:
            raise ImproperlyConfigured(
                f"GAUGEFORMS_TOLERANCES lacks {', '.join(sorted(missing))}"
            )
        return cls(**{name: float(configured[name]) for name in cls.names()})

    @classmethod
    def names(cls):
        return [f.name for f in fields(cls)]

    def with_overrides(self, **overrides):
        unknown = set(overrides) - set(self.names())
        if unknown:
            raise KeyError(f"unknown tolerance(s): {', '.join(sorted(unknown))}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})


def resolve(tolerances):
    return tolerances if tolerances is not None else Tolerances.from_settings()


def thread_count():
    return max(1, int(getattr(settings, "GAUGEFORMS_THREADS", 1)))
