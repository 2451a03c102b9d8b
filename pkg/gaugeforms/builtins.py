"""Symbols shipped with the library.

dirac3 and twisted3 share a metric and charges but carry different spin structures on 𝕋³;
the twisted3_kXYZ family runs over all eight. weyl4 and weyl4_twisted are the 4D analogues.
"""

import re

from .chart import make_chart
from .equivalence import GaugeMap, Group
from .exceptions import ConfigError
from .expr import MatrixValuedField
from .symbol import from_canonical

DEFAULT_RESOLUTION = {3: 32, 4: 16}

PAULI_TEXTS = {
    1: (("0", "1"), ("1", "0")),
    2: (("0", "-i"), ("i", "0")),
    3: (("1", "0"), ("0", "-1")),
    4: (("1", "0"), ("0", "1")),
}
ZERO_TEXTS = (("0", "0"), ("0", "0"))

_KAPPA_NAME = re.compile(r"twisted3_k([01])([01])([01])$")


def _phase_text(kappa):
    return "+".join(f"x{j}" for j, k in enumerate(kappa, start=1) if k)


def twisted_fields(kappa, dim):
    """E^α of the Pauli symbol conjugated by diag(e^{−iκ·x}, 1)."""
    phase = _phase_text(kappa)
    fields = [MatrixValuedField.from_texts(PAULI_TEXTS[a]) for a in range(1, dim + 1)]
    if phase:
        up, down = f"exp(i*({phase}))", f"exp(-i*({phase}))"
        fields[0] = MatrixValuedField.from_texts((("0", up), (down, "0")))
        fields[1] = MatrixValuedField.from_texts((("0", f"-i*{up}"), (f"i*{down}", "0")))
    return tuple(fields)


def twist_gauge(kappa, dim=3):
    """diag(e^{−iκ·x}, 1), the unitary gauge relating Pauli and twisted principal symbols."""
    phase = _phase_text(kappa) or "0"
    R = MatrixValuedField.from_texts(((f"exp(-i*({phase}))", "0"), ("0", "1")))
    return GaugeMap(R=R, group=Group.U if dim == 3 else Group.GL)


def builtin_names():
    kappas = [f"twisted3_k{a}{b}{c}" for a in "01" for b in "01" for c in "01"]
    return ["dirac3", "twisted3", *kappas, "weyl4", "weyl4_twisted"]


def builtin(name, resolution=None):
    """The named built-in symbol as an expression-backed FullSymbol."""
    match = _KAPPA_NAME.match(name)
    if name in ("dirac3", "twisted3") or match:
        dim = 3
        kappa = (0, 0, 0) if name == "dirac3" else (0, 0, 1)
        if match:
            kappa = tuple(int(d) for d in match.groups())
    elif name in ("weyl4", "weyl4_twisted"):
        dim = 4
        kappa = (0, 0, 1, 0) if name == "weyl4_twisted" else (0, 0, 0, 0)
    else:
        raise ConfigError(
            f"unknown built-in symbol '{name}' (known: {', '.join(builtin_names())})"
        )
    chart = make_chart(dim, resolution or DEFAULT_RESOLUTION[dim])
    F = MatrixValuedField.from_texts(ZERO_TEXTS)
    return from_canonical(twisted_fields(kappa, dim), F, chart, name=name)
