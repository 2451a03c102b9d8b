from django.core.management.base import BaseCommand, CommandError

from gaugeforms.cli import (
    EXIT_NOT_EQUIVALENT,
    EXIT_PARSE,
    command_error,
    parse_tolerances,
    render,
    resolve_symbols,
    run_compare,
    write_output,
)
from gaugeforms.exceptions import GaugeFormsError
from gaugeforms.serializers import CompareReportSerializer


class Command(BaseCommand):
    help = "Decide whether two symbols are gauge-equivalent."

    def add_arguments(self, parser):
        parser.add_argument(
            "names",
            nargs="+",
            help="CONFIG NAME_A NAME_B, or NAME_A NAME_B together with --builtin.",
        )
        parser.add_argument("--builtin", action="store_true", help="Names are built-ins.")
        parser.add_argument("--group", required=True, choices=("gl", "sl", "u", "su"))
        parser.add_argument("--mode", default="principal", choices=("principal", "full"))
        parser.add_argument("--lattice", choices=("strict", "half"))
        parser.add_argument("--grid", type=int, help="Override the grid resolution.")
        parser.add_argument("--samples", type=int, help="Samples per monodromy loop.")
        parser.add_argument("--volume-a", help="Volume form block of the first symbol.")
        parser.add_argument("--volume-b", help="Volume form block of the second symbol.")
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
        volumes = (options["volume_a"], options["volume_b"])
        if any(volumes) and not all(volumes):
            raise CommandError("--volume-a and --volume-b go together", returncode=EXIT_PARSE)
        try:
            (S, S_tilde), document = resolve_symbols(
                config, names[-2:], options["builtin"], options["grid"]
            )
            if all(volumes):
                if document is None:
                    raise CommandError(
                        "volume forms need a config document", returncode=EXIT_PARSE
                    )
                volumes = tuple(document.volume(name) for name in volumes)
            report = run_compare(
                S,
                S_tilde,
                options["group"],
                options["mode"],
                options["lattice"],
                volumes if all(volumes) else None,
                options["samples"],
                tolerances,
            )
        except GaugeFormsError as exc:
            raise command_error(exc) from exc
        write_output(self.stdout, render(CompareReportSerializer, report), options["output"])
        if report["verdict"] != "equivalent":
            raise CommandError(
                f"not equivalent (failed stage: {report['failed_stage']})",
                returncode=EXIT_NOT_EQUIVALENT,
            )
