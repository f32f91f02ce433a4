"""
Harness models for checking the evaluation path itself.

>>> evaluate(OracleModel(), streams.test).accuracy
1.0

"""

import numpy as np

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcValueError
from cfamc.signal.modulation import N_CLASSES


def _one_hot(indices, n_classes):
    probs = np.zeros((len(indices), n_classes))
    probs[np.arange(len(indices)), indices] = 1.0
    return probs


class OracleModel(BaseObject):
    """ Answers with the true label of every record """

    def __init__(self, n_classes=N_CLASSES):
        self.n_classes = n_classes

    def predict_batch(self, batch):
        labels = np.asarray(batch.labels, dtype=np.int64)
        return labels, _one_hot(labels, self.n_classes)


class ConstantModel(BaseObject):
    """ Always answers ``label`` """

    def __init__(self, label=0, n_classes=N_CLASSES):
        label = getattr(label, 'value', label)
        if not 0 <= label < n_classes:
            raise CfamcValueError('label in 0..{}'.format(n_classes - 1), label)
        self.label = label
        self.n_classes = n_classes

    def predict_batch(self, batch):
        predicted = np.full(len(batch.labels), self.label, dtype=np.int64)
        return predicted, _one_hot(predicted, self.n_classes)

    def __repr__(self):
        return super(ConstantModel, self).__repr__(data={'label': self.label})
