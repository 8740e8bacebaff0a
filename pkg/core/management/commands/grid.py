from core.artifacts import write_grid
from core.evaluation import EvalReport, grid_cells, run_grid
from core.management.base import ExperimentCommand
from core.models import ReportCache


class Command(ExperimentCommand):
    help = "Evaluate every (sigma, lambda, k, d) cell of the configured grid and write grid.csv"
    name = 'grid'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--no-cache', action='store_true', help="ignore and do not fill the evaluation cache")

    def run(self, config, options):
        dataset = config.load_dataset()
        grids = config.grids
        cells = grid_cells(grids['sigma'], grids['lambda'], grids['k'], grids['d'], config.mode)
        cache = None if options['no_cache'] else ReportCache(EvalReport)

        scored = run_grid(dataset, config.mode, config.params, config.split, cells,
                          workers=config.workers, cache=cache)
        write_grid(config.out / 'grid.csv', scored)

        best = next(cell for cell in scored if cell.best)
        self.stdout.write(
            f"{len(scored)} cells, best sigma={best.sigma:g} lambda={best.lambda_:g} k={best.k} d={best.d} "
            f"accuracy {best.report.accuracy_mean:.4f}"
        )
        if cache is not None:
            self.stdout.write(f"cache: {cache.hits} hits, {cache.misses} misses")
        return {'cells': len(scored), 'best': best.row()}
