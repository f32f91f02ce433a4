"""
Published reference results shipped with the package.

``data/reference_curves.csv``
    accuracy (%) against mean per-RU SNR (dB) for four models, 21 points
    each: ``central_egc``, ``distributed_3ru``, ``distributed_6ru``,
    ``hybrid`` (RU 128 / DU 256 IQ samples)
``data/reference_flops.csv``
    best central and distributed pairings: MFLOPs and accuracy
``data/reference_hybrid.csv``
    hybrid accuracy per RU and DU input size

Every file is checked against its SHA-256 before use.

>>> curve = reference_curve('central_egc')
>>> curve.points[0]
(-14.7712125471966, 28.3203125)

"""

import csv
import hashlib
import os
from collections import OrderedDict
from functools import lru_cache

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcCorruptDataError, CfamcNotFound, CfamcPersistenceError

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')

CHECKSUMS = {
    'reference_curves.csv': '0c5e8b8993f2bb61d58905788ec2826f4d0d85e7b3f76a794c24604a2d41477c',
    'reference_flops.csv': '7987a607e74ac488fb92f517761fe2694d1e7b91135e7fc05f3dc0ae5bf726ef',
    'reference_hybrid.csv': '03e84b7cd625b839523bf3eea2dd66f589eda6befcbb3a2a304eb84be86f8bb1',
}

CURVE_TAGS = ('central_egc', 'distributed_3ru', 'distributed_6ru', 'hybrid')


class ReferenceCurve(BaseObject):
    """
    Immutable accuracy curve.

    Attributes:
        tag (str): model tag
        points (tuple): ``(mean_snr_db, accuracy_pct)`` pairs, SNR
            strictly increasing
    """

    def __init__(self, tag, points):
        self.tag = tag
        self.points = tuple((float(s), float(a)) for s, a in points)
        snrs = [s for s, _ in self.points]
        if any(b <= a for a, b in zip(snrs, snrs[1:])):
            raise CfamcCorruptDataError(tag, 'SNR not strictly increasing')

    @property
    def snr_db(self):
        return [s for s, _ in self.points]

    @property
    def accuracy_pct(self):
        return [a for _, a in self.points]

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return super(ReferenceCurve, self).__repr__(data={'tag': self.tag,
                                                          'points': len(self)})


def _read_rows(name):
    path = os.path.join(DATA_DIR, name)
    try:
        with open(path, 'rb') as f:
            data = f.read()
    except (IOError, OSError) as exc:
        raise CfamcPersistenceError(path, exc)
    if hashlib.sha256(data).hexdigest() != CHECKSUMS[name]:
        raise CfamcCorruptDataError(path)
    return list(csv.DictReader(data.decode('utf-8').splitlines()))


@lru_cache(maxsize=None)
def reference_curves():
    """ The four shipped curves, in ``CURVE_TAGS`` order """
    grouped = OrderedDict((tag, []) for tag in CURVE_TAGS)
    for row in _read_rows('reference_curves.csv'):
        grouped[row['tag']].append((row['mean_snr_db'], row['accuracy_pct']))
    return tuple(ReferenceCurve(tag, points) for tag, points in grouped.items())


def reference_curve(tag):
    for curve in reference_curves():
        if curve.tag == tag:
            return curve
    raise CfamcNotFound('reference curve', tag)


@lru_cache(maxsize=None)
def reference_flops_table():
    """
    ``(input_size, n_stacks) -> {central_mflops, central_accuracy_pct,
    distributed_mflops, distributed_accuracy_pct}``
    """
    table = OrderedDict()
    for row in _read_rows('reference_flops.csv'):
        key = (int(row.pop('input_size')), int(row.pop('n_stacks')))
        table[key] = dict((k, float(v)) for k, v in row.items())
    return table


@lru_cache(maxsize=None)
def reference_hybrid_table():
    """ ``(ru_input_size, du_input_size) -> accuracy_pct`` """
    return OrderedDict(((int(r['ru_input_size']), int(r['du_input_size'])),
                        float(r['accuracy_pct']))
                       for r in _read_rows('reference_hybrid.csv'))


def reference_mflops(approach, input_size, n_stacks):
    """ Shipped MFLOPs of a central or distributed pairing, ``None`` if absent """
    row = reference_flops_table().get((input_size, n_stacks))
    if row is None:
        return None
    return row.get('{}_mflops'.format(approach))
