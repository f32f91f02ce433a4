"""
Building blocks of the ResNet classifier.

Tensors carry frames as ``(batch, length, 2)`` with I in column 0 and Q in
column 1; inside the feature extractor they become ``(batch, channels,
length, 2)`` so the ``(3, 1)`` kernels slide along time.

"""

import torch
from torch import nn

from cfamc.exceptions import CfamcValueError
from cfamc.model.spec import check_pooling, feature_length, N_FILTERS, HEAD_WIDTH
from cfamc.signal.modulation import IQFrame, N_CLASSES

POWER_EPSILON = 1e-12


def clip_input(frame, n):
    """
    First ``n`` samples of a frame, order preserved.

    Accepts an :any:`IQFrame` or a tensor/array whose second-to-last axis is
    time, e.g. ``(batch, length, 2)``.

    >>> clip_input(frame, 128).length
    128

    Raises:
        :class:`CfamcValueError`: ``n`` outside ``1..length``
    """
    if isinstance(frame, IQFrame):
        length = frame.length
    else:
        length = frame.shape[-2]
    if not 1 <= n <= length:
        raise CfamcValueError('1 <= n <= {}'.format(length), n)
    if isinstance(frame, IQFrame):
        return frame.replace(frame.samples[:n])
    return frame[..., :n, :]


class EqualGainCombiner(nn.Module):
    """ Non-trainable EGC: sums RU frames ``(B, n_ru, L, 2) -> (B, L, 2)`` """

    def forward(self, x):
        if x.dim() != 4:
            raise CfamcValueError('(batch, n_ru, length, 2) input', tuple(x.shape))
        return x.sum(dim=1)


class InputLayer(nn.Module):
    """
    Clips to ``input_size`` samples, optionally scales each frame to unit
    mean power and adds the channel axis: ``(B, L, 2) -> (B, 1, N_IQ, 2)``.
    """

    def __init__(self, input_size, normalize=True):
        super(InputLayer, self).__init__()
        self.input_size = input_size
        self.normalize = normalize

    def forward(self, x):
        if x.dim() != 3 or x.shape[-1] != 2:
            raise CfamcValueError('(batch, length, 2) input', tuple(x.shape))
        x = clip_input(x, self.input_size)
        if self.normalize:
            power = x.pow(2).sum(dim=-1).mean(dim=-1, keepdim=True)
            x = x / torch.sqrt(power + POWER_EPSILON).unsqueeze(-1)
        return x.unsqueeze(1)

    def extra_repr(self):
        return 'input_size={}, normalize={}'.format(self.input_size, self.normalize)


class ResidualUnit(nn.Module):
    """ conv (3,1) -> ReLU -> conv (3,1) -> identity add -> ReLU """

    def __init__(self, n_filters):
        super(ResidualUnit, self).__init__()
        self.conv1 = nn.Conv2d(n_filters, n_filters, (3, 1), padding=(1, 0))
        self.conv2 = nn.Conv2d(n_filters, n_filters, (3, 1), padding=(1, 0))
        self.relu = nn.ReLU()

    def forward(self, x):
        y = self.conv2(self.relu(self.conv1(x)))
        return self.relu(x + y)


class ResidualStack(nn.Module):
    """ Entry 1x1 conv, two residual units, max-pool (2,1) along time """

    def __init__(self, in_channels, n_filters):
        super(ResidualStack, self).__init__()
        self.entry = nn.Conv2d(in_channels, n_filters, (1, 1))
        self.unit1 = ResidualUnit(n_filters)
        self.unit2 = ResidualUnit(n_filters)
        self.pool = nn.MaxPool2d((2, 1), stride=(2, 1))

    def forward(self, x):
        return self.pool(self.unit2(self.unit1(self.entry(x))))


class FeatureExtractor(nn.Sequential):
    """ ``n_stacks`` residual stacks in series, flattened """

    def __init__(self, input_size, n_stacks, n_filters=N_FILTERS):
        check_pooling(input_size, n_stacks)
        stacks = [ResidualStack(1 if i == 0 else n_filters, n_filters) for i in range(n_stacks)]
        super(FeatureExtractor, self).__init__(*(stacks + [nn.Flatten()]))
        self.input_size = input_size
        self.n_stacks = n_stacks
        self.feature_length = feature_length(input_size, n_stacks, n_filters)


class DecisionHead(nn.Sequential):
    """
    dense(width) + ReLU -> dense(width) + ReLU -> dense(n_classes).

    Outputs logits; owners apply the softmax.
    """

    def __init__(self, in_features, n_classes=N_CLASSES, width=HEAD_WIDTH):
        super(DecisionHead, self).__init__(
            nn.Linear(in_features, width), nn.ReLU(),
            nn.Linear(width, width), nn.ReLU(),
            nn.Linear(width, n_classes))
        self.in_features = in_features
        self.n_classes = n_classes


class VotingHead(DecisionHead):
    """
    Decision head over the concatenated RU soft decisions (and, in a
    hybrid, the DU feature vector).
    """

    @classmethod
    def averaging(cls, n_ru, n_classes=N_CLASSES, width=HEAD_WIDTH, extra_features=0):
        """
        Closed-form head whose logits are the mean of the ``n_ru`` soft
        decision blocks. Extra (DU) features get zero weight.

        >>> head = VotingHead.averaging(3)
        >>> head(torch.cat([one_hot_c] * 3, dim=1)).argmax(dim=1)
        tensor([c])

        """
        if width < n_classes:
            raise CfamcValueError('width >= n_classes', width)
        head = cls(n_classes * n_ru + extra_features, n_classes, width)
        first, second, last = head[0], head[2], head[4]
        with torch.no_grad():
            for layer in (first, second, last):
                layer.weight.zero_()
                layer.bias.zero_()
            for ru in range(n_ru):
                for c in range(n_classes):
                    first.weight[c, ru * n_classes + c] = 1.0 / n_ru
            for c in range(n_classes):
                second.weight[c, c] = 1.0
                last.weight[c, c] = 1.0
        return head


def build_feature_extractor(input_size, n_stacks, n_filters=N_FILTERS):
    """
    >>> build_feature_extractor(1024, 5).feature_length
    2048

    Raises:
        :class:`CfamcValueError`: input_size / 2^n_stacks < 1
    """
    return FeatureExtractor(input_size, n_stacks, n_filters)


def build_decision_head(in_features, n_classes=N_CLASSES, width=HEAD_WIDTH):
    return DecisionHead(in_features, n_classes, width)
