"""
Central, distributed and hybrid training pipelines.

>>> streams = DataStreams.from_manifest(manifest, batch_size=hp.batch_size)
>>> central = train_central_pipeline(ModelSpec('central', 128, 4, n_ru=3), streams, hp)
>>> distributed = train_distributed_pipeline(ModelSpec('ru', 128, 4), 3, streams, hp)
>>> distributed.phases.keys()
odict_keys(['ru_donor', 'voting'])

Each phase trains with its own seed ``hash64(hp.seed, ROLE_PHASE, tag)``,
so phases do not depend on each other's random streams and the RU and DU
donor phases of a hybrid can run in any order.

"""

import os
from collections import OrderedDict, namedtuple

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcValueError, CfamcPersistenceError
from cfamc.dataset.config import DatasetManifest
from cfamc.dataset.stream import SplitStream
from cfamc.dataset.seeding import hash64, ROLE_PHASE, ROLE_INIT
from cfamc.model.spec import ModelSpec, ModelKind
from cfamc.model.models import assemble_central, assemble_ru, assemble_du_feature
from cfamc.model.models import assemble_distributed, assemble_hybrid
from cfamc.model.weights import WeightBundle, transfer_weights
from cfamc.training.trainer import train_supervised
from cfamc.training.phase import TrainingPhase
from cfamc.utils.logger import logger

PHASE_TAGS = OrderedDict([('central', 0), ('ru_donor', 1), ('du_donor', 2), ('voting', 3)])
TRANSFER_BLOCKS = {'feature_extraction', 'decision'}


class DataStreams(namedtuple('DataStreams', ['train', 'val', 'test'])):
    """ Train, validation and test :any:`SplitStream` of one dataset """

    @classmethod
    def from_manifest(cls, manifest, batch_size):
        return cls(*(SplitStream.from_manifest(manifest, split, batch_size)
                     for split in ('train', 'val', 'test')))

    @property
    def n_ru(self):
        return self.train.n_ru

    @property
    def frame_len(self):
        return self.train.frame_len


def as_streams(dataset, hp):
    if isinstance(dataset, DataStreams):
        return dataset
    if isinstance(dataset, DatasetManifest):
        return DataStreams.from_manifest(dataset, hp.batch_size)
    raise CfamcValueError('DatasetManifest or DataStreams', type(dataset))


def phase_hyperparams(hp, phase):
    return hp.replace(seed=hash64(hp.seed, ROLE_PHASE, PHASE_TAGS[phase]))


def init_seed(hp):
    return hash64(hp.seed, ROLE_INIT)


def _phase_dir(run_dir, phase):
    return None if run_dir is None else os.path.join(run_dir, phase)


class PipelineResult(BaseObject):
    """
    Attributes:
        model (``nn.Module``): assembled model with its best weights
        phases (``OrderedDict``): phase name -> :any:`TrainResult`
        bundles (``dict``): component name (``central``, ``ru``, ``du``,
            ``model``) -> :any:`WeightBundle`
    """

    def __init__(self, model, phases, bundles):
        self.model = model
        self.phases = OrderedDict(phases)
        self.bundles = dict(bundles)

    @property
    def spec(self):
        return self.model.spec

    @property
    def final(self):
        """ :any:`TrainResult` of the last trained phase, if any """
        return next(reversed(self.phases.values())) if self.phases else None

    def save(self, run_dir):
        """ Writes ``<component>.ckpt`` for every bundle """
        try:
            if not os.path.isdir(run_dir):
                os.makedirs(run_dir)
        except OSError as exc:
            raise CfamcPersistenceError(run_dir, exc)
        return dict((name, bundle.save(os.path.join(run_dir, '{}.ckpt'.format(name))))
                    for name, bundle in self.bundles.items())

    def __repr__(self):
        return super(PipelineResult, self).__repr__(data={'spec': self.spec.spec_id,
                                                          'phases': list(self.phases)})


def _check_ru_count(streams, n_ru):
    if streams.n_ru != n_ru:
        raise CfamcValueError('dataset with {} RUs'.format(n_ru), streams.n_ru)


def train_central_pipeline(spec, dataset, hp, run_dir=None):
    """
    Single phase: the central model on EGC-combined inputs.

    Returns:
        (:any:`PipelineResult`): ``model`` is the trained central model
    """
    streams = as_streams(dataset, hp)
    if spec.kind is not ModelKind.CENTRAL:
        raise CfamcValueError(ModelKind.CENTRAL, spec.kind)
    _check_ru_count(streams, spec.n_ru)
    phase_hp = phase_hyperparams(hp, 'central')
    model = assemble_central(spec, seed=init_seed(phase_hp))
    with TrainingPhase('central'):
        result = train_supervised(model, streams.train, streams.val, phase_hp,
                                  _phase_dir(run_dir, 'central'))
    return PipelineResult(model, [('central', result)], {'central': result.best_weights})


def train_donor(spec, streams, hp, phase, run_dir=None):
    """
    Trains a central donor of ``spec``'s geometry on EGC inputs.

    Returns:
        (``tuple``): donor :any:`WeightBundle`, :any:`TrainResult`
    """
    phase_hp = phase_hyperparams(hp, phase)
    donor = assemble_central(spec.donor_spec(n_ru=streams.n_ru), seed=init_seed(phase_hp))
    with TrainingPhase(phase):
        result = train_supervised(donor, streams.train, streams.val, phase_hp,
                                  _phase_dir(run_dir, phase))
    return result.best_weights, result


def train_ru_phase(ru_spec, dataset, hp, run_dir=None):
    """
    Phase 1 of the ensembles: central donor with the RU geometry, feature
    extraction and decision blocks transferred into a frozen RU model.

    Returns:
        (``tuple``): frozen :any:`ResNetClassifier`, :any:`TrainResult`
    """
    streams = as_streams(dataset, hp)
    if ru_spec.kind is not ModelKind.RU:
        raise CfamcValueError(ModelKind.RU, ru_spec.kind)
    donor, result = train_donor(ru_spec, streams, hp, 'ru_donor', run_dir)
    ru_model = assemble_ru(ru_spec, seed=init_seed(phase_hyperparams(hp, 'ru_donor')))
    transfer_weights(donor, ru_model, TRANSFER_BLOCKS)
    return ru_model, result


def train_du_phase(du_spec, dataset, hp, run_dir=None):
    """
    Hybrid phase 2: central donor with the DU geometry, feature extractor
    transferred into a frozen DU feature model.

    Returns:
        (``tuple``): frozen :any:`DUFeatureModel`, :any:`TrainResult`
    """
    streams = as_streams(dataset, hp)
    if du_spec.kind is not ModelKind.DU_FEATURE:
        raise CfamcValueError(ModelKind.DU_FEATURE, du_spec.kind)
    donor, result = train_donor(du_spec, streams, hp, 'du_donor', run_dir)
    du_model = assemble_du_feature(du_spec, seed=init_seed(phase_hyperparams(hp, 'du_donor')))
    transfer_weights(donor, du_model, {'feature_extraction'})
    return du_model, result


def _reuse(bundle, kind, build):
    if bundle.spec.kind is not kind:
        raise CfamcValueError(kind, bundle.spec.kind)
    model = build(bundle.spec)
    bundle.apply_to(model)
    return model.freeze()


def _train_voting(model, streams, hp, run_dir):
    phase_hp = phase_hyperparams(hp, 'voting')
    with TrainingPhase('voting', model=model):
        return train_supervised(model, streams.train, streams.val, phase_hp,
                                _phase_dir(run_dir, 'voting'))


def train_distributed_pipeline(ru_spec, n_ru, dataset, hp, run_dir=None, ru_weights=None):
    """
    Phase 1 (skipped when ``ru_weights`` is given): RU model from a central
    donor. Phase 2: voting head over the RU soft decisions of
    non-combined RU inputs.

    Args:
        ru_spec (:any:`ModelSpec`): ``ru`` kind
        n_ru (int): RU count, must match the dataset
        ru_weights (:any:`WeightBundle`): trained RU bundle to reuse

    Returns:
        (:any:`PipelineResult`): bundles ``ru`` and ``model``
    """
    streams = as_streams(dataset, hp)
    _check_ru_count(streams, n_ru)
    phases = []
    if ru_weights is None:
        ru_model, result = train_ru_phase(ru_spec, streams, hp, run_dir)
        phases.append(('ru_donor', result))
    else:
        logger.info('Reusing RU weights {}'.format(ru_weights))
        ru_model = _reuse(ru_weights, ModelKind.RU, assemble_ru)

    model = assemble_distributed(ru_model, n_ru,
                                 seed=init_seed(phase_hyperparams(hp, 'voting')))
    phases.append(('voting', _train_voting(model, streams, hp, run_dir)))
    return PipelineResult(model, phases, {'ru': WeightBundle.from_module(ru_model),
                                          'model': WeightBundle.from_module(model)})


def train_hybrid_pipeline(ru_spec, du_spec, n_ru, dataset, hp, run_dir=None,
                          ru_weights=None, du_weights=None):
    """
    Phase 1: RU model as in the distributed pipeline. Phase 2: DU feature
    extractor from a central donor at the DU geometry. Phase 3: voting
    head over ``[RU soft decisions, DU features]``.

    Returns:
        (:any:`PipelineResult`): bundles ``ru``, ``du`` and ``model``
    """
    streams = as_streams(dataset, hp)
    if n_ru > 0:
        _check_ru_count(streams, n_ru)
    phases = []
    ru_model = None
    if n_ru > 0:
        if ru_weights is None:
            ru_model, result = train_ru_phase(ru_spec, streams, hp, run_dir)
            phases.append(('ru_donor', result))
        else:
            ru_model = _reuse(ru_weights, ModelKind.RU, assemble_ru)
    if du_weights is None:
        du_model, result = train_du_phase(du_spec, streams, hp, run_dir)
        phases.append(('du_donor', result))
    else:
        logger.info('Reusing DU weights {}'.format(du_weights))
        du_model = _reuse(du_weights, ModelKind.DU_FEATURE, assemble_du_feature)

    model = assemble_hybrid(ru_model, du_model, n_ru, frame_len=streams.frame_len,
                            seed=init_seed(phase_hyperparams(hp, 'voting')))
    phases.append(('voting', _train_voting(model, streams, hp, run_dir)))
    bundles = {'du': WeightBundle.from_module(du_model), 'model': WeightBundle.from_module(model)}
    if ru_model is not None:
        bundles['ru'] = WeightBundle.from_module(ru_model)
    return PipelineResult(model, phases, bundles)
