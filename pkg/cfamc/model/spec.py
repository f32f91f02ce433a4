"""
Model specifications and soft decisions.

A :any:`ModelSpec` fully describes a model's layer graph. Two models built
from equal specs have identical parameter keys and shapes.

>>> spec = ModelSpec('central', input_size=128, n_stacks=5, n_ru=3)
>>> spec.feature_length
256
>>> spec.spec_id
'central-128x5'

"""

import enum
from collections import OrderedDict

import numpy as np

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcValueError
from cfamc.signal.modulation import ModulationScheme, N_CLASSES

INPUT_SIZES = (128, 256, 512, 1024)
STACK_RANGE = (4, 7)
N_FILTERS = 32
HEAD_WIDTH = 128
ACTIVATION = 'relu'


class ModelKind(enum.Enum):
    CENTRAL = 'central'
    RU = 'ru'
    DU_FEATURE = 'du_feature'
    VOTING = 'voting'
    DISTRIBUTED = 'distributed_ensemble'
    HYBRID = 'hybrid_ensemble'


class Placement(enum.Enum):
    RU = 'RU'
    DU = 'DU'


class ModelSpec(BaseObject):
    """
    Layer-graph description of one model.

    For ensembles ``input_size`` and ``n_stacks`` describe the RU model;
    ``du_input_size`` and ``du_stacks`` describe the DU feature extractor of
    a hybrid.

    Args:
        kind (str, :any:`ModelKind`): model kind
        input_size (int): N_IQ, samples taken from the front of each frame
        n_stacks (int): residual stacks
        n_ru (int): RU branches feeding the model
        du_input_size (int): hybrid only
        du_stacks (int): hybrid only
        n_classes (int): output classes, 7 for the modulation set
        n_filters (int): convolution filters per layer
        head_width (int): width of both hidden dense layers
        normalize_input (bool): per-frame power normalisation at the input

    Raises:
        :class:`CfamcValueError`: pooling infeasible or fields inconsistent
    """

    def __init__(self, kind, input_size, n_stacks, n_ru=1, du_input_size=None,
                 du_stacks=None, n_classes=N_CLASSES, n_filters=N_FILTERS,
                 head_width=HEAD_WIDTH, normalize_input=True):
        try:
            self.kind = ModelKind(kind)
        except ValueError:
            raise CfamcValueError([k.value for k in ModelKind], kind)
        self.input_size = int(input_size)
        self.n_stacks = int(n_stacks)
        self.n_ru = int(n_ru)
        self.du_input_size = None if du_input_size is None else int(du_input_size)
        self.du_stacks = None if du_stacks is None else int(du_stacks)
        self.n_classes = int(n_classes)
        self.n_filters = int(n_filters)
        self.head_width = int(head_width)
        self.normalize_input = bool(normalize_input)
        self.validate()

    def validate(self):
        check_pooling(self.input_size, self.n_stacks)
        if self.kind is ModelKind.HYBRID:
            if self.du_input_size is None or self.du_stacks is None:
                raise CfamcValueError('du_input_size and du_stacks for a hybrid', None)
            check_pooling(self.du_input_size, self.du_stacks)
            if self.n_ru < 0:
                raise CfamcValueError('n_ru >= 0', self.n_ru)
        elif self.n_ru < 1:
            raise CfamcValueError('n_ru >= 1', self.n_ru)
        if self.n_classes < 2:
            raise CfamcValueError('n_classes >= 2', self.n_classes)
        if self.n_filters < 1 or self.head_width < 1:
            raise CfamcValueError('positive widths', (self.n_filters, self.head_width))

    @property
    def placement(self):
        return Placement.RU if self.kind is ModelKind.RU else Placement.DU

    @property
    def pooled_length(self):
        return self.input_size // 2 ** self.n_stacks

    @property
    def feature_length(self):
        """ n_filters * (input_size / 2^n_stacks) * 2 """
        return feature_length(self.input_size, self.n_stacks, self.n_filters)

    @property
    def du_feature_length(self):
        if self.du_input_size is None:
            return 0
        return feature_length(self.du_input_size, self.du_stacks, self.n_filters)

    @property
    def voting_input_length(self):
        """ Length of the concatenation fed to the voting head """
        length = self.n_classes * self.n_ru
        if self.kind is ModelKind.HYBRID:
            length += self.du_feature_length
        return length

    @property
    def spec_id(self):
        if self.kind is ModelKind.HYBRID:
            text = '{}-{}x{}+{}x{}-{}ru'.format(self.kind.value, self.input_size, self.n_stacks,
                                                self.du_input_size, self.du_stacks, self.n_ru)
        elif self.kind is ModelKind.DISTRIBUTED:
            text = '{}-{}x{}-{}ru'.format(self.kind.value, self.input_size,
                                          self.n_stacks, self.n_ru)
        else:
            text = '{}-{}x{}'.format(self.kind.value, self.input_size, self.n_stacks)
        if (self.n_filters, self.head_width) != (N_FILTERS, HEAD_WIDTH):
            text += '-w{}h{}'.format(self.n_filters, self.head_width)
        return text

    def _derive(self, kind, input_size, n_stacks, n_ru=1):
        return ModelSpec(kind, input_size, n_stacks, n_ru=n_ru, n_classes=self.n_classes,
                         n_filters=self.n_filters, head_width=self.head_width,
                         normalize_input=self.normalize_input)

    def ru_spec(self):
        """ Single-branch RU model of this spec """
        return self._derive(ModelKind.RU, self.input_size, self.n_stacks)

    def du_spec(self):
        """ DU feature extractor of a hybrid """
        if self.kind is not ModelKind.HYBRID:
            raise CfamcValueError(ModelKind.HYBRID, self.kind)
        return self._derive(ModelKind.DU_FEATURE, self.du_input_size, self.du_stacks,
                            n_ru=max(self.n_ru, 1))

    def donor_spec(self, n_ru=None):
        """ Central model whose weights seed this RU or DU model """
        return self._derive(ModelKind.CENTRAL, self.input_size, self.n_stacks,
                            n_ru=self.n_ru if n_ru is None else n_ru)

    def distributed(self, n_ru):
        return self._derive(ModelKind.DISTRIBUTED, self.input_size, self.n_stacks, n_ru=n_ru)

    def hybrid(self, du_input_size, du_stacks, n_ru):
        return ModelSpec(ModelKind.HYBRID, self.input_size, self.n_stacks, n_ru=n_ru,
                         du_input_size=du_input_size, du_stacks=du_stacks,
                         n_classes=self.n_classes, n_filters=self.n_filters,
                         head_width=self.head_width, normalize_input=self.normalize_input)

    def as_dict(self):
        return OrderedDict([
            ('kind', self.kind.value),
            ('input_size', self.input_size),
            ('n_stacks', self.n_stacks),
            ('n_ru', self.n_ru),
            ('du_input_size', self.du_input_size),
            ('du_stacks', self.du_stacks),
            ('n_classes', self.n_classes),
            ('n_filters', self.n_filters),
            ('head_width', self.head_width),
            ('normalize_input', self.normalize_input),
            ('activation', ACTIVATION),
        ])

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data.pop('activation', None)
        return cls(**data)

    def __eq__(self, other):
        return isinstance(other, ModelSpec) and self.as_dict() == other.as_dict()

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(tuple(self.as_dict().items()))

    def __repr__(self):
        return super(ModelSpec, self).__repr__(data={'id': self.spec_id})


def check_pooling(input_size, n_stacks):
    if n_stacks < 1 or input_size < 1:
        raise CfamcValueError('positive input_size and n_stacks', (input_size, n_stacks))
    if input_size // 2 ** n_stacks < 1:
        raise CfamcValueError('input_size / 2^n_stacks >= 1',
                              '{} / 2^{}'.format(input_size, n_stacks))


def feature_length(input_size, n_stacks, n_filters=N_FILTERS):
    check_pooling(input_size, n_stacks)
    return n_filters * (input_size // 2 ** n_stacks) * 2


class SoftDecision(BaseObject):
    """
    Class probabilities of one frame.

    >>> decision = SoftDecision([0.1, 0.7, 0.05, 0.05, 0.04, 0.03, 0.03])
    >>> decision.label
    <ModulationScheme.QPSK: 1>

    """

    TOLERANCE = 1e-6

    def __init__(self, probs):
        probs = np.array(probs, dtype=np.float64)
        if probs.ndim != 1 or np.any(probs < 0):
            raise CfamcValueError('non-negative probability vector', probs)
        if abs(probs.sum() - 1.0) > self.TOLERANCE:
            raise CfamcValueError('probabilities summing to 1', probs.sum())
        probs.setflags(write=False)
        self.probs = probs

    @classmethod
    def from_batch(cls, probs):
        """ One SoftDecision per row of a (B, n_classes) array or tensor """
        if hasattr(probs, 'detach'):
            probs = probs.detach().cpu().double().numpy()
        return [cls(row) for row in np.asarray(probs, dtype=np.float64)]

    @property
    def index(self):
        return int(np.argmax(self.probs))

    @property
    def label(self):
        if self.probs.size != N_CLASSES:
            return self.index
        return ModulationScheme(self.index)

    @property
    def confidence(self):
        return float(self.probs[self.index])

    def __len__(self):
        return self.probs.size

    def __repr__(self):
        return super(SoftDecision, self).__repr__(data={'label': self.label,
                                                        'p': round(self.confidence, 4)})
