"""
Tensor batches over a split, for training and evaluation.

>>> stream = SplitStream.from_manifest(manifest, 'train', batch_size=32)
>>> for batch in stream.batches(epoch=0, shuffle_seed=5):
...     logits = model(batch.x)

"""

from collections import namedtuple

import numpy as np
import torch
from torch.utils.data import Dataset, DataLoader

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcValueError
from cfamc.dataset.config import SPLITS
from cfamc.dataset.generate import read_split, epoch_order

Batch = namedtuple('Batch', ['x', 'labels', 'egc_snr_db', 'record_ids'])
Batch.__doc__ = """ One tensor batch: x (B, n_ru, L, 2) float32, labels long, egc_snr_db, record_ids """


class FrameArrayDataset(Dataset):
    """ Map-style torch dataset over in-memory split arrays """

    def __init__(self, samples, labels, egc_snr_db, record_ids):
        self.samples = np.asarray(samples, dtype=np.float32)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.egc_snr_db = np.asarray(egc_snr_db, dtype=np.float32)
        self.record_ids = np.asarray(record_ids, dtype=np.int64)
        if self.samples.ndim != 4 or self.samples.shape[-1] != 2:
            raise CfamcValueError('samples of shape (count, n_ru, L, 2)', self.samples.shape)
        count = self.samples.shape[0]
        for field in (self.labels, self.egc_snr_db, self.record_ids):
            if field.shape != (count,):
                raise CfamcValueError('one entry per frame ({})'.format(count), field.shape)

    def __len__(self):
        return self.samples.shape[0]

    def __getitem__(self, index):
        return (self.samples[index], self.labels[index],
                self.egc_snr_db[index], self.record_ids[index])


class SplitStream(BaseObject):
    """
    Batches of one split as tensors.

    The training split (``shuffle=True``) is permuted per epoch with the
    same derivation as :any:`load_split`; other splits keep file order.

    Args:
        dataset (:any:`FrameArrayDataset`): records
        batch_size (int): batch size, last batch may be short
        shuffle (bool): reshuffle per epoch
        seed (int): default shuffle seed
    """

    def __init__(self, dataset, batch_size, shuffle=False, seed=0):
        if batch_size < 1:
            raise CfamcValueError('batch_size >= 1', batch_size)
        self.dataset = dataset
        self.batch_size = int(batch_size)
        self.shuffle = shuffle
        self.seed = seed

    @classmethod
    def from_manifest(cls, manifest, split, batch_size):
        if split not in SPLITS:
            raise CfamcValueError(SPLITS, split)
        records = read_split(manifest, split)
        dataset = FrameArrayDataset(records['samples'], records['label'],
                                    records['egc_snr_db'], records['record_id'].astype(np.int64))
        return cls(dataset, batch_size, shuffle=(split == 'train'),
                   seed=manifest.config.master_seed)

    @classmethod
    def from_arrays(cls, samples, labels, batch_size, egc_snr_db=None, record_ids=None,
                    shuffle=False, seed=0):
        """ Stream over in-memory frames, e.g. for tests and toy problems """
        count = len(labels)
        if egc_snr_db is None:
            egc_snr_db = np.zeros(count)
        if record_ids is None:
            record_ids = np.arange(count)
        return cls(FrameArrayDataset(samples, labels, egc_snr_db, record_ids),
                   batch_size, shuffle=shuffle, seed=seed)

    @property
    def n_ru(self):
        return self.dataset.samples.shape[1]

    @property
    def frame_len(self):
        return self.dataset.samples.shape[2]

    def __len__(self):
        return len(self.dataset)

    def order(self, epoch=0, shuffle_seed=None):
        if not self.shuffle:
            return np.arange(len(self.dataset))
        seed = self.seed if shuffle_seed is None else shuffle_seed
        return epoch_order(len(self.dataset), epoch, seed)

    def batches(self, epoch=0, shuffle_seed=None):
        """ Yields :any:`Batch` tuples covering the split once """
        loader = DataLoader(self.dataset, batch_size=self.batch_size,
                            sampler=self.order(epoch, shuffle_seed).tolist())
        for x, labels, egc_snr_db, record_ids in loader:
            yield Batch(x, labels, egc_snr_db, record_ids)

    def __repr__(self):
        return super(SplitStream, self).__repr__(data={'frames': len(self),
                                                       'batch_size': self.batch_size,
                                                       'shuffle': self.shuffle})
