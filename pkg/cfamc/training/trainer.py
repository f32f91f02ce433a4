"""
Supervised training with early stopping on validation accuracy.

>>> hp = Hyperparams(epochs=10, batch_size=128, seed=3)
>>> result = train_supervised(model, train_stream, val_stream, hp)
>>> result.best_epoch, result.best_val_accuracy
(7, 0.61)

The returned model carries the weights of the best epoch, i.e. the first
epoch reaching the highest validation accuracy.

"""

import csv
import math
import os
import time
from collections import OrderedDict

import numpy as np
import torch
from torch import nn
import yaml

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcValueError, CfamcDivergenceError, CfamcPersistenceError
from cfamc.dataset.seeding import hash64, ROLE_SHUFFLE
from cfamc.model.weights import WeightBundle
from cfamc.utils.coerce import to_builtin
from cfamc.utils.logger import logger

OPTIMIZERS = {'adam': torch.optim.Adam, 'sgd': torch.optim.SGD}
LOSSES = ('categorical_crossentropy',)
METRICS_FIELDS = ('epoch', 'train_loss', 'val_acc', 'wall_time')


class Hyperparams(BaseObject):
    """
    Args:
        epochs (int): maximum epochs, >= 1
        batch_size (int): >= 1
        learning_rate (float): > 0
        optimizer (str): ``adam`` or ``sgd``
        loss (str): ``categorical_crossentropy``
        seed (int): 64-bit seed of shuffling and initialisation
    """

    def __init__(self, epochs=10, batch_size=128, learning_rate=1e-3, optimizer='adam',
                 loss='categorical_crossentropy', seed=0):
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.learning_rate = float(learning_rate)
        self.optimizer = str(optimizer).lower()
        self.loss = loss
        self.seed = int(seed)
        self.validate()

    def validate(self):
        if self.epochs < 1:
            raise CfamcValueError('epochs >= 1', self.epochs)
        if self.batch_size < 1:
            raise CfamcValueError('batch_size >= 1', self.batch_size)
        if not self.learning_rate > 0:
            raise CfamcValueError('learning_rate > 0', self.learning_rate)
        if self.optimizer not in OPTIMIZERS:
            raise CfamcValueError(sorted(OPTIMIZERS), self.optimizer)
        if self.loss not in LOSSES:
            raise CfamcValueError(LOSSES, self.loss)

    def replace(self, **changes):
        values = self.as_dict()
        values.update(changes)
        return Hyperparams(**values)

    def as_dict(self):
        return OrderedDict([('epochs', self.epochs), ('batch_size', self.batch_size),
                            ('learning_rate', self.learning_rate),
                            ('optimizer', self.optimizer), ('loss', self.loss),
                            ('seed', self.seed)])

    @classmethod
    def from_dict(cls, data):
        return cls(**dict(data))

    def __eq__(self, other):
        return isinstance(other, Hyperparams) and self.as_dict() == other.as_dict()

    def __repr__(self):
        return super(Hyperparams, self).__repr__(data=self.as_dict())


class TrainResult(BaseObject):
    """
    Attributes:
        train_losses ([float]): mean train loss per epoch
        val_accuracies ([float]): validation accuracy per epoch
        best_epoch (int): 1-based epoch of the returned weights
        best_weights (:any:`WeightBundle`): snapshot at ``best_epoch``
        wall_time (float): seconds
        history ([dict]): per-epoch metrics rows
    """

    def __init__(self, train_losses, val_accuracies, best_epoch, best_weights, wall_time,
                 history=None):
        self.train_losses = list(train_losses)
        self.val_accuracies = list(val_accuracies)
        self.best_epoch = best_epoch
        self.best_weights = best_weights
        self.wall_time = wall_time
        self.history = list(history or [])

    @property
    def best_val_accuracy(self):
        return self.val_accuracies[self.best_epoch - 1]

    @property
    def epochs_run(self):
        return len(self.val_accuracies)

    def as_dict(self):
        return OrderedDict([('best_epoch', self.best_epoch),
                            ('best_val_accuracy', float(self.best_val_accuracy)),
                            ('train_losses', [float(v) for v in self.train_losses]),
                            ('val_accuracies', [float(v) for v in self.val_accuracies]),
                            ('wall_time', float(self.wall_time)),
                            ('weights_checksum', self.best_weights.checksum())])

    def __repr__(self):
        return super(TrainResult, self).__repr__(data={'best_epoch': self.best_epoch,
                                                       'val_acc': round(self.best_val_accuracy, 4)})


def select_best_epoch(val_accuracies):
    """
    1-based epoch of the maximum validation accuracy; ties go to the
    earliest epoch.

    >>> select_best_epoch([0.30, 0.50, 0.45])
    2

    """
    if len(val_accuracies) == 0:
        raise CfamcValueError('at least one epoch', 0)
    return int(np.argmax(np.asarray(val_accuracies, dtype=np.float64))) + 1


def accuracy(model, stream):
    """ Fraction of correct argmax decisions over a stream """
    was_training = model.training
    model.eval()
    correct = total = 0
    dtype = next(model.parameters()).dtype
    try:
        with torch.no_grad():
            for batch in stream.batches():
                predictions = model(batch.x.to(dtype)).argmax(dim=-1)
                correct += int((predictions == batch.labels).sum())
                total += batch.labels.numel()
    finally:
        model.train(was_training)
    if total == 0:
        raise CfamcValueError('non-empty stream', stream)
    return correct / float(total)


def write_run_record(run_dir, hp, history, spec=None):
    """ ``hyperparams.yaml`` and ``metrics.csv`` of one training run """
    try:
        if not os.path.isdir(run_dir):
            os.makedirs(run_dir)
        record = OrderedDict([('hyperparams', dict(hp.as_dict()))])
        if spec is not None:
            record['spec'] = dict(spec.as_dict())
        with open(os.path.join(run_dir, 'hyperparams.yaml'), 'w') as f:
            yaml.safe_dump(to_builtin(record), f, sort_keys=False)
        with open(os.path.join(run_dir, 'metrics.csv'), 'w', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=METRICS_FIELDS)
            writer.writeheader()
            writer.writerows(history)
    except (IOError, OSError) as exc:
        raise CfamcPersistenceError(run_dir, exc)


def train_supervised(model, train_split, val_split, hp, run_dir=None):
    """
    Mini-batch training on cross-entropy over the trainable parameters.

    Args:
        model (``nn.Module``): classifier returning logits
        train_split (:any:`SplitStream`): reshuffled per epoch
        val_split (:any:`SplitStream`): fixed order
        hp (:any:`Hyperparams`): settings
        run_dir (str): when given, receives ``hyperparams.yaml``,
            ``metrics.csv`` and ``best.ckpt``

    Returns:
        (:any:`TrainResult`): result; ``model`` holds the best weights

    Raises:
        :class:`CfamcContractError`: no trainable parameters
        :class:`CfamcDivergenceError`: non-finite loss
    """
    model.require_trainable()
    if len(train_split) == 0 or len(val_split) == 0:
        raise CfamcValueError('non-empty train and val splits',
                              (len(train_split), len(val_split)))

    dtype = next(model.parameters()).dtype
    optimizer = OPTIMIZERS[hp.optimizer](model.trainable_parameters(), lr=hp.learning_rate)
    criterion = nn.CrossEntropyLoss()
    shuffle_seed = hash64(hp.seed, ROLE_SHUFFLE)

    train_losses, val_accuracies, history = [], [], []
    best_weights, best_accuracy = None, -1.0
    start = time.time()
    logger.info('Training {} for up to {} epochs ({} trainable parameters)'.format(
        model.spec.spec_id, hp.epochs, model.parameter_count(trainable_only=True)))

    for epoch in range(1, hp.epochs + 1):
        model.train()
        loss_sum, seen = 0.0, 0
        for index, batch in enumerate(train_split.batches(epoch=epoch, shuffle_seed=shuffle_seed)):
            optimizer.zero_grad()
            loss = criterion(model(batch.x.to(dtype)), batch.labels)
            value = float(loss.detach())
            if not math.isfinite(value):
                raise CfamcDivergenceError(epoch, index, value)
            loss.backward()
            optimizer.step()
            loss_sum += value * batch.labels.numel()
            seen += batch.labels.numel()
        train_loss = loss_sum / seen
        val_acc = accuracy(model, val_split)
        train_losses.append(train_loss)
        val_accuracies.append(val_acc)
        history.append(OrderedDict([('epoch', epoch), ('train_loss', train_loss),
                                    ('val_acc', val_acc),
                                    ('wall_time', time.time() - start)]))
        if val_acc > best_accuracy:
            best_accuracy = val_acc
            best_weights = WeightBundle.from_module(model)
        logger.info('Epoch {}/{}: train_loss {:.4f} val_acc {:.4f}'.format(
            epoch, hp.epochs, train_loss, val_acc))

    best_epoch = select_best_epoch(val_accuracies)
    best_weights.apply_to(model)
    result = TrainResult(train_losses, val_accuracies, best_epoch, best_weights,
                         time.time() - start, history)
    logger.info('Best epoch {} (val_acc {:.4f})'.format(best_epoch, result.best_val_accuracy))
    if run_dir is not None:
        write_run_record(run_dir, hp, history, model.spec)
        best_weights.save(os.path.join(run_dir, 'best.ckpt'))
    return result
