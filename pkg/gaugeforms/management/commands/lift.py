from django.core.management.base import BaseCommand, CommandError

from gaugeforms.cli import (
    EXIT_PARSE,
    command_error,
    parse_tolerances,
    render,
    resolve_symbols,
    run_lift,
    write_output,
)
from gaugeforms.exceptions import GaugeFormsError
from gaugeforms.serializers import LiftReportSerializer


class Command(BaseCommand):
    help = "Frame transition and monodromy signs of a pair of symbols."

    def add_arguments(self, parser):
        parser.add_argument(
            "names",
            nargs="+",
            help="CONFIG NAME_A NAME_B, or NAME_A NAME_B together with --builtin.",
        )
        parser.add_argument("--builtin", action="store_true", help="Names are built-ins.")
        parser.add_argument(
            "--conformal",
            action="store_true",
            help="Allow metrics that agree up to a conformal factor.",
        )
        parser.add_argument("--samples", type=int, help="Samples per monodromy loop.")
        parser.add_argument("--grid", type=int, help="Override the grid resolution.")
        parser.add_argument("--output", help="Write the JSON report here instead of stdout.")
        parser.add_argument("--tol", action="append", metavar="NAME=VALUE", default=[])

    def handle(self, *args, **options):
        tolerances = parse_tolerances(options["tol"])
        names = options["names"]
        expected = 2 if options["builtin"] else 3
        if len(names) != expected:
            raise CommandError(
                f"expected {expected} positional arguments, got {len(names)}",
                returncode=EXIT_PARSE,
            )
        config = None if options["builtin"] else names[0]
        try:
            (S, S_tilde), _ = resolve_symbols(
                config, names[-2:], options["builtin"], options["grid"]
            )
            report = run_lift(S, S_tilde, options["conformal"], options["samples"], tolerances)
        except GaugeFormsError as exc:
            raise command_error(exc) from exc
        write_output(self.stdout, render(LiftReportSerializer, report), options["output"])
