from django.core.management.base import BaseCommand

from gaugeforms.cli import command_error, run_transform, write_output
from gaugeforms.config import load_config
from gaugeforms.exceptions import GaugeFormsError


class Command(BaseCommand):
    help = "Apply a gauge block to a symbol block and print the result as a config document."

    def add_arguments(self, parser):
        parser.add_argument("config", help="Config document with symbol and gauge blocks.")
        parser.add_argument("--symbol", required=True, help="Name of the symbol block.")
        parser.add_argument("--gauge", required=True, help="Name of the gauge block.")
        parser.add_argument("--output", help="Write the config here instead of stdout.")

    def handle(self, *args, **options):
        try:
            document = load_config(options["config"])
            text = run_transform(document, options["symbol"], options["gauge"])
        except GaugeFormsError as exc:
            raise command_error(exc) from exc
        write_output(self.stdout, text, options["output"])
