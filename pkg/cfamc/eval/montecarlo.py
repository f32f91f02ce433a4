"""
Monte-Carlo evaluation: retrain and evaluate a pipeline per run.

>>> pipeline = PipelineConfig('distributed', ModelSpec('ru', 128, 4), streams, hp, n_ru=3)
>>> report = monte_carlo_evaluate(pipeline, n_runs=16)
>>> report.mc.n_runs
16

Run ``i`` trains with seed ``hash64(hp.seed, ROLE_RUN, i)``: trainable
weight initialisation and shuffling change between runs, the dataset does
not.

"""

import os

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcValueError, CfamcPartialResultsError
from cfamc.dataset.seeding import hash64, ROLE_RUN
from cfamc.training.pipelines import train_central_pipeline, train_distributed_pipeline
from cfamc.training.pipelines import train_hybrid_pipeline
from cfamc.eval.evaluate import evaluate, combine_reports
from cfamc.utils.logger import logger

APPROACHES = ('central', 'distributed', 'hybrid')


class PipelineConfig(BaseObject):
    """
    Everything one Monte-Carlo run needs.

    Args:
        approach (str): ``central``, ``distributed`` or ``hybrid``
        spec (:any:`ModelSpec`): central spec, or the RU spec of an ensemble
        streams (:any:`DataStreams`): dataset
        hp (:any:`Hyperparams`): base hyperparameters
        n_ru (int): ensemble RU count
        du_spec (:any:`ModelSpec`): hybrid DU feature spec
        ru_weights (:any:`WeightBundle`): reuse a trained RU model in every run
        du_weights (:any:`WeightBundle`): reuse a trained DU feature extractor in
            every hybrid run
        run_dir (str): per-run directories ``run_<i>`` are created below it
    """

    def __init__(self, approach, spec, streams, hp, n_ru=None, du_spec=None,
                 ru_weights=None, du_weights=None, run_dir=None):
        if approach not in APPROACHES:
            raise CfamcValueError(APPROACHES, approach)
        self.approach = approach
        self.spec = spec
        self.streams = streams
        self.hp = hp
        self.n_ru = spec.n_ru if n_ru is None else n_ru
        self.du_spec = du_spec
        self.ru_weights = ru_weights
        self.du_weights = du_weights
        self.run_dir = run_dir

    def run_seed(self, run_index):
        return hash64(self.hp.seed, ROLE_RUN, run_index)

    def run(self, run_index):
        """ Trains one run; returns its :any:`PipelineResult` """
        hp = self.hp.replace(seed=self.run_seed(run_index))
        run_dir = None
        if self.run_dir is not None:
            run_dir = os.path.join(self.run_dir, 'run_{:02d}'.format(run_index))
        if self.approach == 'central':
            return train_central_pipeline(self.spec, self.streams, hp, run_dir)
        if self.approach == 'distributed':
            return train_distributed_pipeline(self.spec, self.n_ru, self.streams, hp, run_dir,
                                              ru_weights=self.ru_weights)
        return train_hybrid_pipeline(self.spec, self.du_spec, self.n_ru, self.streams, hp,
                                     run_dir, ru_weights=self.ru_weights,
                                     du_weights=self.du_weights)

    def test_stream(self):
        return self.streams.test

    def __repr__(self):
        return super(PipelineConfig, self).__repr__(data={'approach': self.approach,
                                                          'spec': self.spec.spec_id})


class StaticPipeline(BaseObject):
    """ Pipeline stand-in that returns the same model every run """

    def __init__(self, model, test_split):
        self.model = model
        self.test_split = test_split

    def run(self, run_index):
        return self.model

    def test_stream(self):
        return self.test_split


def monte_carlo_evaluate(pipeline_config, n_runs):
    """
    Trains and evaluates ``n_runs`` runs and combines the reports.

    Args:
        pipeline_config: :any:`PipelineConfig` or any object with
            ``run(i)`` (returning a model or a result with ``.model``) and
            ``test_stream()``
        n_runs (int): >= 1

    Returns:
        (:any:`EvalReport`): summed counts with per-run statistics

    Raises:
        :class:`CfamcPartialResultsError`: a run failed; ``completed`` holds
            the finished runs' reports
    """
    if n_runs < 1:
        raise CfamcValueError('n_runs >= 1', n_runs)
    test_split = pipeline_config.test_stream()
    reports = []
    for run_index in range(n_runs):
        logger.title('Monte-Carlo run {}/{}'.format(run_index + 1, n_runs))
        try:
            outcome = pipeline_config.run(run_index)
            model = getattr(outcome, 'model', outcome)
            report = evaluate(model, test_split)
        except Exception as exc:
            logger.error('Run {} failed: {}'.format(run_index, exc))
            raise CfamcPartialResultsError(reports, exc)
        logger.info('Run {}: accuracy {:.4f}'.format(run_index, report.accuracy))
        reports.append(report)
    return combine_reports(reports)
