"""Config documents: a manifold block plus named symbol, gauge and volume blocks.

    [manifold]
    dim = 3
    grid = 32

    [symbol dirac]
    E1 = [["0", "1"], ["1", "0"]]
    ...

Arrays are JSON arrays of expression strings. Blocks are validated with the serializers
in `gaugeforms.serializers`.
"""

import configparser
import io
import json
import logging
from dataclasses import dataclass, field

from .chart import make_chart
from .equivalence import GaugeMap, VolumeForm
from .exceptions import ConfigError, InputError, ParseError, UnknownIdentifier
from .expr import MatrixValuedField, parse_expression
from .serializers import (
    GaugeBlockSerializer,
    ManifoldSerializer,
    SymbolBlockSerializer,
    VolumeBlockSerializer,
)
from .symbol import from_canonical

logger = logging.getLogger(__name__)

BLOCK_KINDS = ("symbol", "gauge", "volume")


@dataclass(eq=False)
class ConfigDocument:
    chart: object
    symbols: dict = field(default_factory=dict)
    gauges: dict = field(default_factory=dict)
    volumes: dict = field(default_factory=dict)

    def symbol(self, name):
        return self._lookup(self.symbols, "symbol", name)

    def gauge(self, name):
        return self._lookup(self.gauges, "gauge", name)

    def volume(self, name):
        return self._lookup(self.volumes, "volume", name)

    @staticmethod
    def _lookup(blocks, kind, name):
        try:
            return blocks[name]
        except KeyError:
            raise ConfigError(f"no {kind} block named '{name}'") from None

    def to_text(self):
        parser = _new_parser()
        parser["manifold"] = {"dim": str(self.chart.dim), "grid": str(self.chart.resolution)}
        if self.chart.dim == 4:
            parser["manifold"]["q_ref"] = ", ".join(repr(q) for q in self.chart.q_ref)
        for name, S in self.symbols.items():
            texts = S.to_texts()
            parser[f"symbol {name}"] = {key: json.dumps(value) for key, value in texts.items()}
        for name, gauge in self.gauges.items():
            parser[f"gauge {name}"] = {
                "group": gauge.group.value,
                "R": json.dumps(gauge.R.to_texts()),
            }
        for name, volume in self.volumes.items():
            parser[f"volume {name}"] = {"c": json.dumps(volume.c.to_text())}
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()


def _new_parser():
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    parser.optionxform = str
    return parser


def _json_value(section, key, text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"[{section}] {key}: invalid JSON ({exc.msg})", position=exc.pos)


def _validated(serializer_class, section, data, **context):
    serializer = serializer_class(data=data, context=context)
    if not serializer.is_valid():
        raise ConfigError(f"[{section}] {json.dumps(serializer.errors)}")
    return serializer.validated_data


def _matrix(section, key, rows):
    try:
        return MatrixValuedField.from_texts(rows)
    except (ParseError, UnknownIdentifier) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}", position=exc.position) from exc


def _expression(section, key, text):
    try:
        return parse_expression(text)
    except (ParseError, UnknownIdentifier) as exc:
        raise ConfigError(f"[{section}] {key}: {exc}", position=exc.position) from exc


def parse_config(text, resolution=None):
    """Read a config document; `resolution` overrides the manifold grid."""
    parser = _new_parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}", position=getattr(exc, "lineno", None))

    if not parser.has_section("manifold"):
        raise ConfigError("missing [manifold] block")
    raw = dict(parser["manifold"])
    if "q_ref" in raw:
        raw["q_ref"] = [part.strip() for part in raw["q_ref"].split(",")]
    manifold = _validated(ManifoldSerializer, "manifold", raw)
    try:
        chart = make_chart(
            manifold["dim"], resolution or manifold["grid"], manifold.get("q_ref")
        )
    except InputError as exc:
        raise ConfigError(f"[manifold] {exc}") from exc

    document = ConfigDocument(chart=chart)
    for section in parser.sections():
        if section == "manifold":
            continue
        kind, _, name = section.partition(" ")
        name = name.strip()
        if kind not in BLOCK_KINDS or not name:
            raise ConfigError(f"unknown block [{section}]")
        values = {key: _json_value(section, key, text) for key, text in parser[section].items()}
        if kind == "symbol":
            data = _validated(SymbolBlockSerializer, section, values, dim=chart.dim)
            E = [_matrix(section, f"E{a}", data[f"E{a}"]) for a in range(1, chart.dim + 1)]
            try:
                S = from_canonical(E, _matrix(section, "F", data["F"]), chart, name=name)
            except UnknownIdentifier as exc:
                raise ConfigError(f"[{section}] {exc}") from exc
            document.symbols[name] = S
        elif kind == "gauge":
            data = _validated(GaugeBlockSerializer, section, values)
            R = _matrix(section, "R", data["R"])
            try:
                R.check_dimension(chart.dim)
            except UnknownIdentifier as exc:
                raise ConfigError(f"[{section}] {exc}") from exc
            document.gauges[name] = GaugeMap(R=R, group=data["group"], name=name)
        else:
            data = _validated(VolumeBlockSerializer, section, values)
            document.volumes[name] = VolumeForm(_expression(section, "c", data["c"]), name=name)
    logger.debug(
        "config with %d symbol(s), %d gauge(s), %d volume form(s)",
        len(document.symbols),
        len(document.gauges),
        len(document.volumes),
    )
    return document


def load_config(path, resolution=None):
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text, resolution)
