from core.artifacts import load_model
from core.domain import project
from core.ingest import read_matrix, write_csv
from core.management.base import ExperimentCommand
from core.runconfig import RunConfig


class Command(ExperimentCommand):
    help = (
        "Project CSV samples with a fitted model and write embedding.csv (one row per sample). "
        "The data must be preprocessed the way the training data was."
    )
    name = 'transform'
    needs_config = False

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--model', required=True, help="model file written by fit")
        parser.add_argument('--data', required=True, help="headered numeric CSV, one sample per row")
        parser.add_argument('--label-column', default='', help="column carried through instead of projected")

    def load(self, options):
        config = RunConfig.from_text('', seed=options.get('seed'), out=options.get('out'))
        config.out.mkdir(parents=True, exist_ok=True)
        return config

    def run(self, config, options):
        projection, _ = load_model(options['model'])
        _, values, labels = read_matrix(options['data'], options['label_column'] or None)
        embedding = project(values.T, projection)

        header = [f"y{i}" for i in range(1, projection.d + 1)]
        write_csv(config.out / 'embedding.csv', embedding.Y.T, header, labels=labels,
                  label_column=options['label_column'] or 'label')
        self.stdout.write(f"projected {values.shape[0]} samples from D={values.shape[1]} to d={projection.d}")
        return {'samples': int(values.shape[0]), 'd': projection.d}
