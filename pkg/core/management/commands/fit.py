from core.artifacts import save_model, write_json, write_loss_trace
from core.graph import dump_coordinates
from core.management.base import ExperimentCommand
from core.trainer import fit


class Command(ExperimentCommand):
    help = "Fit a projection on the configured dataset and write the model, report and loss trace"
    name = 'fit'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--dump-similarity',
            action='store_true',
            help="also write the learned similarity matrix as i j value lines",
        )
        parser.add_argument(
            '--check-descent',
            action='store_true',
            help="fail if an F, S or P step increases the objective",
        )

    def run(self, config, options):
        dataset = config.load_dataset()
        report = fit(dataset, config.mode, config.params, check_descent=options['check_descent'])

        save_model(config.out / 'model.clfefa', report.P, report.params)
        summary = {'schema': 'clfefa.fit/1', 'dataset': dataset.name, 'mode': config.mode.value, **report.as_dict()}
        write_json(config.out / 'fit_report.json', summary)
        write_loss_trace(config.out / 'loss_trace.csv', report)
        if options['dump_similarity']:
            with open(config.out / 'similarity.txt', 'w') as handle:
                dump_coordinates(report.S, handle)

        self.stdout.write(
            f"{len(report.loss_trace)} outer iterations, final loss {report.loss_trace[-1]:.6f}, "
            f"{report.components} components"
        )
        return {
            'loss': report.loss_trace[-1],
            'components': report.components,
            'converged': report.converged,
        }
