import logging
import time

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import ClfefaError
from core.models import ExperimentRun
from core.runconfig import RunConfig

logger = logging.getLogger(__name__)


class ExperimentCommand(BaseCommand):
    """
    Shared plumbing: config loading, output directory, run ledger and the
    mapping of library errors onto exit codes.
    """
    name = None
    needs_config = True

    def add_arguments(self, parser):
        if self.needs_config:
            parser.add_argument('--config', required=True, help="key=value run configuration file")
        parser.add_argument('--out', help="output directory (overrides the config)")
        parser.add_argument('--seed', type=int, help="seed override")

    def load(self, options):
        config = RunConfig.from_file(options['config'], seed=options.get('seed'), out=options.get('out'))
        config.out.mkdir(parents=True, exist_ok=True)
        (config.out / 'config.txt').write_text(config.text)
        return config

    def handle(self, *args, **options):
        started = time.perf_counter()
        record = None
        try:
            config = self.load(options)
            record = ExperimentRun.begin(self.name, config.text, config.seed, config.out)
            summary = self.run(config, options)
        except ClfefaError as exc:
            message = f"{type(exc).__name__}: {exc}"
            if record:
                record.finish('failed', error=message, wallclock=time.perf_counter() - started)
            raise CommandError(message, returncode=exc.exit_code) from exc
        except Exception as exc:
            logger.exception(f"{self.name} failed unexpectedly")
            if record:
                record.finish('failed', error=f"{type(exc).__name__}: {exc}", wallclock=time.perf_counter() - started)
            raise

        if record:
            record.finish('succeeded', summary=summary, wallclock=time.perf_counter() - started)
        self.stdout.write(self.style.SUCCESS(f"{self.name} finished, outputs in {config.out}"))

    def run(self, config, options):
        raise NotImplementedError
