from core.artifacts import write_eval_report
from core.evaluation import run_experiment
from core.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Run the repeated split / fit / 1-NN protocol and write eval_report.json and eval_repeats.csv"
    name = 'evaluate'

    def run(self, config, options):
        dataset = config.load_dataset()
        report = run_experiment(dataset, config.mode, config.params, config.split, workers=config.workers)
        write_eval_report(config.out, report)
        self.stdout.write(
            f"accuracy {report.accuracy_mean:.4f} +/- {report.accuracy_std:.4f}, "
            f"recall {report.recall_mean:.4f} +/- {report.recall_std:.4f}"
        )
        return {'accuracy_mean': report.accuracy_mean, 'recall_mean': report.recall_mean}
