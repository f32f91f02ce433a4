"""
Accuracy per SNR, confusion matrices and Monte-Carlo statistics.

>>> report = evaluate(model, streams.test)
>>> report.accuracy
0.62
>>> report.mean_snr_curve[0]
(5.228787452803376, 0.41)

Models are evaluated through ``predict_batch(batch) -> (labels, probs)``;
every model of :any:`cfamc.model` and the harness models implement it.

"""

from collections import OrderedDict

import numpy as np

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcValueError
from cfamc.signal.channel import mean_ru_snr_db
from cfamc.signal.modulation import ModulationScheme, N_CLASSES


class MonteCarloStats(BaseObject):
    """ Per-run accuracies with mean and sample standard deviation """

    def __init__(self, accuracies):
        self.accuracies = [float(a) for a in accuracies]
        if not self.accuracies:
            raise CfamcValueError('at least one run', 0)

    @property
    def n_runs(self):
        return len(self.accuracies)

    @property
    def mean(self):
        return float(np.mean(self.accuracies))

    @property
    def std(self):
        if self.n_runs < 2:
            return 0.0
        return float(np.std(self.accuracies, ddof=1))

    def as_dict(self):
        return OrderedDict([('n_runs', self.n_runs), ('accuracies', list(self.accuracies)),
                            ('mean', self.mean), ('std', self.std)])

    def __repr__(self):
        return super(MonteCarloStats, self).__repr__(data={'n_runs': self.n_runs,
                                                           'mean': round(self.mean, 4),
                                                           'std': round(self.std, 4)})


class EvalReport(BaseObject):
    """
    Counts of one or more evaluation passes.

    Attributes:
        confusion (``np.ndarray``): (n_classes, n_classes) counts, rows
            true, columns predicted
        snr_counts (``OrderedDict``): EGC SNR -> ``[correct, total]``
        n_ru (int): RUs of the evaluated data, for the mean-SNR axis
        mc (:any:`MonteCarloStats`): per-run statistics, ``None`` for a
            single pass
    """

    def __init__(self, confusion, snr_counts, n_ru, mc=None):
        self.confusion = np.array(confusion, dtype=np.int64)
        self.snr_counts = OrderedDict(sorted((float(k), [int(c), int(t)])
                                             for k, (c, t) in snr_counts.items()))
        self.n_ru = int(n_ru)
        self.mc = mc

    @property
    def n_classes(self):
        return self.confusion.shape[0]

    @property
    def n_records(self):
        return int(self.confusion.sum())

    @property
    def accuracy(self):
        return float(np.trace(self.confusion)) / self.n_records

    @property
    def class_counts(self):
        return self.confusion.sum(axis=1)

    @property
    def egc_curve(self):
        """ [(egc_snr_db, accuracy)] """
        return [(snr, c / float(t)) for snr, (c, t) in self.snr_counts.items()]

    @property
    def mean_snr_curve(self):
        """ [(mean per-RU SNR dB, accuracy)], EGC SNR minus 10 log10(n_ru) """
        return [(mean_ru_snr_db(snr, self.n_ru), acc) for snr, acc in self.egc_curve]

    def class_names(self):
        if self.n_classes == N_CLASSES:
            return [s.name for s in ModulationScheme]
        return [str(i) for i in range(self.n_classes)]

    def as_dict(self):
        data = OrderedDict([
            ('n_records', self.n_records),
            ('accuracy', self.accuracy),
            ('n_ru', self.n_ru),
            ('classes', self.class_names()),
            ('confusion', self.confusion.tolist()),
            ('snr_counts', [[snr, c, t] for snr, (c, t) in self.snr_counts.items()]),
        ])
        if self.mc is not None:
            data['mc'] = dict(self.mc.as_dict())
        return data

    @classmethod
    def from_dict(cls, data):
        mc = MonteCarloStats(data['mc']['accuracies']) if data.get('mc') else None
        snr_counts = OrderedDict((snr, [c, t]) for snr, c, t in data['snr_counts'])
        return cls(data['confusion'], snr_counts, data['n_ru'], mc)

    def __repr__(self):
        return super(EvalReport, self).__repr__(data={'records': self.n_records,
                                                      'accuracy': round(self.accuracy, 4)})


def combine_reports(reports):
    """
    Sums the counts of several passes over the same split and attaches
    their per-run accuracies as :any:`MonteCarloStats`.
    """
    reports = list(reports)
    if not reports:
        raise CfamcValueError('at least one report', 0)
    confusion = sum(r.confusion for r in reports)
    snr_counts = OrderedDict()
    for report in reports:
        for snr, (c, t) in report.snr_counts.items():
            counts = snr_counts.setdefault(snr, [0, 0])
            counts[0] += c
            counts[1] += t
    return EvalReport(confusion, snr_counts, reports[0].n_ru,
                      MonteCarloStats([r.accuracy for r in reports]))


def evaluate(model, test_split):
    """
    One deterministic pass over a split.

    Args:
        model: object with ``predict_batch(batch) -> (labels, probs)``
        test_split (:any:`SplitStream`): evaluated in file order

    Returns:
        (:any:`EvalReport`): report

    Raises:
        :class:`CfamcValueError`: empty split, or labels outside the
            model's classes
    """
    if len(test_split) == 0:
        raise CfamcValueError('non-empty split', 0)
    n_classes = getattr(model, 'n_classes', N_CLASSES)
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    snr_counts = OrderedDict()
    for batch in test_split.batches():
        labels = np.asarray(batch.labels, dtype=np.int64)
        predicted, probs = model.predict_batch(batch)
        predicted = np.asarray(predicted, dtype=np.int64)
        if np.asarray(probs).shape[-1] != n_classes or labels.max() >= n_classes:
            raise CfamcValueError('labels and outputs over {} classes'.format(n_classes),
                                  'labels up to {}, {} outputs'.format(
                                      labels.max(), np.asarray(probs).shape[-1]))
        np.add.at(confusion, (labels, predicted), 1)
        for snr, hit in zip(np.asarray(batch.egc_snr_db, dtype=np.float64),
                            labels == predicted):
            counts = snr_counts.setdefault(float(snr), [0, 0])
            counts[0] += int(hit)
            counts[1] += 1
    return EvalReport(confusion, snr_counts, test_split.n_ru)
