from django.core.management.base import BaseCommand

from gaugeforms.cli import (
    command_error,
    parse_tolerances,
    render,
    resolve_symbols,
    run_analyze,
    write_output,
)
from gaugeforms.exceptions import ConfigError, GaugeFormsError
from gaugeforms.serializers import AnalyzeReportSerializer


class Command(BaseCommand):
    help = "Report the geometric invariants encoded in a symbol."

    def add_arguments(self, parser):
        parser.add_argument("config", nargs="?", help="Config document with symbol blocks.")
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument("--symbol", help="Name of a [symbol NAME] block in CONFIG.")
        source.add_argument("--builtin", help="Name of a built-in symbol.")
        parser.add_argument("--grid", type=int, help="Override the grid resolution.")
        parser.add_argument(
            "--allow-invalid",
            action="store_true",
            help="Report what can be computed for a symbol that fails validation.",
        )
        parser.add_argument("--output", help="Write the JSON report here instead of stdout.")
        parser.add_argument("--tol", action="append", metavar="NAME=VALUE", default=[])

    def handle(self, *args, **options):
        tolerances = parse_tolerances(options["tol"])
        try:
            if options["builtin"] and options["config"]:
                raise ConfigError("give either a config document or --builtin, not both")
            name = options["builtin"] or options["symbol"]
            (S,), _ = resolve_symbols(
                options["config"], [name], bool(options["builtin"]), options["grid"]
            )
            report = run_analyze(S, options["allow_invalid"], tolerances)
        except GaugeFormsError as exc:
            raise command_error(exc) from exc
        write_output(self.stdout, render(AnalyzeReportSerializer, report), options["output"])
