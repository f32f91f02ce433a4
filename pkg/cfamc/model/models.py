"""
Central, distributed and hybrid topologies.

>>> central = assemble_central(ModelSpec('central', 128, 5, n_ru=3), seed=1)
>>> central(torch.zeros(4, 3, 1024, 2)).shape
torch.Size([4, 7])

All models take ``(B, n_ru, frame_len, 2)`` tensors and return logits;
``soft_decision`` and ``predict`` apply the softmax and argmax output
layers.

"""

import torch
from torch import nn

from cfamc.exceptions import CfamcValueError
from cfamc.model.spec import ModelSpec, ModelKind
from cfamc.model.layers import InputLayer, EqualGainCombiner, VotingHead
from cfamc.model.layers import build_feature_extractor, build_decision_head
from cfamc.utils.mixins import ClassifierMixin
from cfamc.utils.logger import logger


def random_init_label(seed):
    return 'random-init({})'.format(seed)


def seeded(seed, build):
    """ Calls ``build()`` with torch's global generator seeded, then restores it """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed & 0x7FFFFFFFFFFFFFFF)
        return build()


def _check_kind(spec, *kinds):
    if not isinstance(spec, ModelSpec):
        raise CfamcValueError(ModelSpec, type(spec))
    if spec.kind not in kinds:
        raise CfamcValueError([k.value for k in kinds], spec.kind.value)


def _check_branches(x, n_ru):
    if x.dim() != 4 or x.shape[1] != n_ru:
        raise CfamcValueError('(batch, {}, length, 2) input'.format(n_ru), tuple(x.shape))


class ResNetClassifier(ClassifierMixin, nn.Module):
    """
    Single-branch classifier: input layer, feature extraction, decision.
    As an RU model it takes ``(B, L, 2)`` frames of one RU.
    """

    def __init__(self, spec, seed=0):
        super(ResNetClassifier, self).__init__()
        self.spec = spec
        self.input_layer = InputLayer(spec.input_size, spec.normalize_input)

        def build():
            return (build_feature_extractor(spec.input_size, spec.n_stacks, spec.n_filters),
                    build_decision_head(spec.feature_length, spec.n_classes, spec.head_width))

        self.feature_extraction, self.decision = seeded(seed, build)
        self.init_provenance(random_init_label(seed))

    def features(self, x):
        return self.feature_extraction(self.input_layer(x))

    def forward(self, x):
        return self.decision(self.features(x))


class CentralModel(ResNetClassifier):
    """ EGC over the RU frames, then the single-branch classifier """

    def __init__(self, spec, seed=0):
        super(CentralModel, self).__init__(spec, seed)
        self.combiner = EqualGainCombiner()

    def forward(self, x):
        _check_branches(x, self.spec.n_ru)
        return super(CentralModel, self).forward(self.combiner(x))


class DUFeatureModel(ClassifierMixin, nn.Module):
    """
    DU branch of a hybrid: EGC over full frames, clip to ``du_input_size``,
    feature extraction. Returns the flattened feature vector.
    """

    def __init__(self, spec, seed=0):
        super(DUFeatureModel, self).__init__()
        _check_kind(spec, ModelKind.DU_FEATURE)
        self.spec = spec
        self.combiner = EqualGainCombiner()
        self.input_layer = InputLayer(spec.input_size, spec.normalize_input)
        self.feature_extraction = seeded(seed, lambda: build_feature_extractor(
            spec.input_size, spec.n_stacks, spec.n_filters))
        self.init_provenance(random_init_label(seed))

    @property
    def feature_length(self):
        return self.feature_extraction.feature_length

    def forward(self, x):
        return self.feature_extraction(self.input_layer(self.combiner(x)))


def _ru_soft_decisions(ru_model, x):
    """ (B, n_ru, L, 2) -> (B, n_ru * n_classes), RU-major blocks """
    batch, n_ru = x.shape[0], x.shape[1]
    flat = x.reshape((batch * n_ru,) + tuple(x.shape[2:]))
    probs = torch.softmax(ru_model(flat), dim=-1)
    return probs.reshape(batch, n_ru * probs.shape[-1])


class DistributedModel(ClassifierMixin, nn.Module):
    """
    One shared RU model applied to every RU frame; the soft decisions are
    concatenated and classified by the voting head. Only soft decisions
    reach the DU.
    """

    def __init__(self, spec, ru_model, voting):
        super(DistributedModel, self).__init__()
        self.spec = spec
        self.ru_model = ru_model
        self.voting = voting

    def concatenate(self, x):
        _check_branches(x, self.spec.n_ru)
        return _ru_soft_decisions(self.ru_model, x)

    def forward(self, x):
        return self.voting(self.concatenate(x))


class HybridModel(ClassifierMixin, nn.Module):
    """
    Distributed model whose voting head also sees DU features extracted
    from the EGC of the full frames. ``n_ru=0`` drops the RU branch.
    """

    def __init__(self, spec, ru_model, du_model, voting):
        super(HybridModel, self).__init__()
        self.spec = spec
        self.ru_model = ru_model
        self.du_model = du_model
        self.voting = voting

    def concatenate(self, x):
        parts = []
        if self.spec.n_ru > 0:
            _check_branches(x, self.spec.n_ru)
            parts.append(_ru_soft_decisions(self.ru_model, x))
        parts.append(self.du_model(x))
        return torch.cat(parts, dim=1)

    def forward(self, x):
        return self.voting(self.concatenate(x))


def assemble_central(spec, seed=0):
    """
    Central model: EGC -> feature extractor -> decision head.

    Raises:
        :class:`CfamcValueError`: ``spec.kind`` is not central
    """
    _check_kind(spec, ModelKind.CENTRAL)
    logger.debug('Assembling {} (seed {})'.format(spec.spec_id, seed))
    return CentralModel(spec, seed)


def assemble_ru(spec, seed=0):
    """ Single-branch RU model, random init """
    _check_kind(spec, ModelKind.RU)
    return ResNetClassifier(spec, seed)


def assemble_du_feature(spec, seed=0):
    return DUFeatureModel(spec, seed)


def _voting_head(spec, seed, averaging):
    if averaging:
        return VotingHead.averaging(spec.n_ru, spec.n_classes, spec.head_width,
                                    extra_features=spec.voting_input_length
                                    - spec.n_ru * spec.n_classes)
    return seeded(seed, lambda: VotingHead(spec.voting_input_length, spec.n_classes,
                                           spec.head_width))


def _prefixed(provenance, prefix):
    return dict(('{}.{}'.format(prefix, k), v) for k, v in provenance.items())


def assemble_distributed(ru_model, n_ru, seed=0, averaging=False):
    """
    Distributed model over ``n_ru`` replicas of one frozen RU model.

    Args:
        ru_model (:any:`ResNetClassifier`): trained RU model, all frozen
        n_ru (int): RU count, sets the voting input length to 7 * n_ru
        seed (int): voting head init seed
        averaging (bool): closed-form averaging voting head

    Raises:
        :class:`CfamcContractError`: RU weights not frozen
    """
    _check_kind(ru_model.spec, ModelKind.RU)
    ru_model.require_frozen('RU model')
    spec = ru_model.spec.distributed(n_ru)
    model = DistributedModel(spec, ru_model, _voting_head(spec, seed, averaging))
    model.provenance = _prefixed(ru_model.provenance, 'ru_model')
    label = 'averaging' if averaging else random_init_label(seed)
    model.provenance.update(_prefixed(dict((k, label) for k in model.voting.state_dict()),
                                      'voting'))
    return model


def assemble_hybrid(ru_model, du_model, n_ru, frame_len=None, seed=0, averaging=False):
    """
    Hybrid model: frozen RU branch, frozen DU feature branch, trainable
    voting head over ``[7 * n_ru soft decisions, DU features]``.

    Args:
        ru_model (:any:`ResNetClassifier`): frozen RU model, ignored when
            ``n_ru == 0``
        du_model (:any:`DUFeatureModel`): frozen DU feature extractor
        n_ru (int): RU count
        frame_len (int): frame length the model will see, checked against
            both input sizes

    Raises:
        :class:`CfamcValueError`: an input size exceeds ``frame_len``
        :class:`CfamcContractError`: RU or DU weights not frozen
    """
    _check_kind(du_model.spec, ModelKind.DU_FEATURE)
    du_model.require_frozen('DU feature model')
    if n_ru > 0:
        _check_kind(ru_model.spec, ModelKind.RU)
        ru_model.require_frozen('RU model')
        ru_spec = ru_model.spec
    else:
        ru_spec = du_model.spec
        ru_model = None
    if frame_len is not None:
        for name, size in (('du_input_size', du_model.spec.input_size),
                           ('ru input_size', ru_spec.input_size)):
            if size > frame_len:
                raise CfamcValueError('{} <= frame_len {}'.format(name, frame_len), size)
    spec = ModelSpec(ModelKind.HYBRID, ru_spec.input_size, ru_spec.n_stacks, n_ru=n_ru,
                     du_input_size=du_model.spec.input_size, du_stacks=du_model.spec.n_stacks,
                     n_classes=du_model.spec.n_classes, n_filters=du_model.spec.n_filters,
                     head_width=du_model.spec.head_width,
                     normalize_input=du_model.spec.normalize_input)
    model = HybridModel(spec, ru_model, du_model, _voting_head(spec, seed, averaging))
    model.provenance = {}
    if ru_model is not None:
        model.provenance.update(_prefixed(ru_model.provenance, 'ru_model'))
    model.provenance.update(_prefixed(du_model.provenance, 'du_model'))
    label = 'averaging' if averaging else random_init_label(seed)
    model.provenance.update(_prefixed(dict((k, label) for k in model.voting.state_dict()),
                                      'voting'))
    return model


def build_model(spec, seed=0):
    """ Random-init model of a single-model spec kind """
    builders = {ModelKind.CENTRAL: assemble_central,
                ModelKind.RU: assemble_ru,
                ModelKind.DU_FEATURE: assemble_du_feature}
    if spec.kind not in builders:
        raise CfamcValueError([k.value for k in builders], spec.kind.value)
    return builders[spec.kind](spec, seed)


def restore_model(bundle):
    """
    Rebuilds a model of any kind from a :any:`WeightBundle`, e.g. a loaded
    checkpoint. Frozen flags and provenance come from the bundle.
    """
    spec = bundle.spec
    if spec.kind is ModelKind.DISTRIBUTED:
        ru_model = assemble_ru(spec.ru_spec()).freeze()
        model = assemble_distributed(ru_model, spec.n_ru)
    elif spec.kind is ModelKind.HYBRID:
        du_model = assemble_du_feature(spec.du_spec()).freeze()
        ru_model = assemble_ru(spec.ru_spec()).freeze() if spec.n_ru > 0 else None
        model = assemble_hybrid(ru_model, du_model, spec.n_ru)
    else:
        model = build_model(spec)
    return bundle.apply_to(model)
