"""
Dataset configuration, records and manifest.

>>> config = DatasetConfig.desk()
>>> config.total_records
2304
>>> DatasetConfig.paper().total_records
150528

"""

import os
from collections import OrderedDict

import yaml

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcValueError, CfamcNotFound, CfamcPersistenceError
from cfamc.exceptions import CfamcCoerceError
from cfamc.signal.modulation import ModulationScheme
from cfamc.signal.channel import PlanMode
from cfamc.utils.coerce import to_schemes, to_snr_grid, to_builtin
from cfamc.dataset.fileformat import FORMAT_VERSION

SPLITS = ('train', 'val', 'test')
MANIFEST_NAME = 'manifest.yaml'


class DatasetConfig(BaseObject):
    """
    What to generate: schemes x SNR grid x frames, RU count and split sizes.

    Args:
        schemes: schemes or scheme names, default all seven
        snr_grid_db: list of EGC SNRs or ``{start, stop, step}``
        frames_per_pair (int): frames per (scheme, snr) pair
        frame_len (int): samples per frame and RU
        n_ru (int): RUs per frame
        plan_mode (str): ``'diverse'`` or ``'equal'``
        master_seed (int): root of every derived seed
        split (dict): ``{'train': n, 'val': n, 'test': n}`` per pair
    """

    def __init__(self, schemes=None, snr_grid_db=None, frames_per_pair=1024,
                 frame_len=1024, n_ru=3, plan_mode='diverse', master_seed=0,
                 split=None):
        try:
            self.schemes = to_schemes(schemes if schemes is not None else list(ModulationScheme))
            self.snr_grid_db = to_snr_grid(snr_grid_db if snr_grid_db is not None
                                           else {'start': -10, 'stop': 30, 'step': 2})
        except CfamcCoerceError as exc:
            raise CfamcValueError('valid schemes and snr grid', exc)
        self.frames_per_pair = int(frames_per_pair)
        self.frame_len = int(frame_len)
        self.n_ru = int(n_ru)
        try:
            self.plan_mode = PlanMode(plan_mode)
        except ValueError:
            raise CfamcValueError([m.value for m in PlanMode], plan_mode)
        self.master_seed = int(master_seed)
        split = split or {'train': 768, 'val': 128, 'test': 128}
        self.split = OrderedDict((name, int(split.get(name, 0))) for name in SPLITS)
        self.validate()

    def validate(self):
        if not self.schemes:
            raise CfamcValueError('at least one scheme', self.schemes)
        if len(set(self.schemes)) != len(self.schemes):
            raise CfamcValueError('distinct schemes', [s.name for s in self.schemes])
        if not self.snr_grid_db:
            raise CfamcValueError('non-empty snr grid', self.snr_grid_db)
        if any(b <= a for a, b in zip(self.snr_grid_db, self.snr_grid_db[1:])):
            raise CfamcValueError('strictly increasing snr grid', self.snr_grid_db)
        if self.frames_per_pair < 1 or self.frame_len < 1 or self.n_ru < 1:
            raise CfamcValueError('positive frames_per_pair, frame_len and n_ru',
                                  (self.frames_per_pair, self.frame_len, self.n_ru))
        if any(n < 0 for n in self.split.values()):
            raise CfamcValueError('non-negative split counts', dict(self.split))
        if sum(self.split.values()) != self.frames_per_pair:
            raise CfamcValueError('split counts summing to {}'.format(self.frames_per_pair),
                                  dict(self.split))

    @classmethod
    def paper(cls, master_seed=0):
        """ Full grid: 7 schemes, -10..30 dB step 2, 1024 frames of 1024 samples """
        return cls(master_seed=master_seed)

    @classmethod
    def desk(cls, master_seed=0):
        """ BPSK/QPSK/QAM16 at 10/20/30 dB, 256 frames split 192/32/32 """
        return cls(schemes=['BPSK', 'QPSK', 'QAM16'], snr_grid_db=[10, 20, 30],
                   frames_per_pair=256, master_seed=master_seed,
                   split={'train': 192, 'val': 32, 'test': 32})

    @property
    def n_pairs(self):
        return len(self.schemes) * len(self.snr_grid_db)

    @property
    def total_records(self):
        return self.n_pairs * self.frames_per_pair

    def split_total(self, split):
        return self.n_pairs * self.split[split]

    def snr_index(self, snr_db):
        for index, value in enumerate(self.snr_grid_db):
            if abs(value - float(snr_db)) < 1e-9:
                return index
        raise CfamcNotFound('snr grid point', snr_db)

    def as_dict(self):
        return OrderedDict([
            ('schemes', [s.name for s in self.schemes]),
            ('snr_grid_db', list(self.snr_grid_db)),
            ('frames_per_pair', self.frames_per_pair),
            ('frame_len', self.frame_len),
            ('n_ru', self.n_ru),
            ('plan_mode', self.plan_mode.value),
            ('master_seed', self.master_seed),
            ('split', dict(self.split)),
        ])

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - set(['schemes', 'snr_grid_db', 'frames_per_pair', 'frame_len',
                                   'n_ru', 'plan_mode', 'master_seed', 'split'])
        if unknown:
            raise CfamcValueError('dataset keys', sorted(unknown))
        return cls(**data)

    def __eq__(self, other):
        return isinstance(other, DatasetConfig) and self.as_dict() == other.as_dict()

    def __repr__(self):
        return super(DatasetConfig, self).__repr__(data={'pairs': self.n_pairs,
                                                         'frames_per_pair': self.frames_per_pair,
                                                         'n_ru': self.n_ru})


class FrameRecord(BaseObject):
    """
    One transmission as received at every RU.

    Attributes:
        ru_frames ([:any:`IQFrame`]): post-channel frame per RU
        label (:any:`ModulationScheme`): transmitted scheme
        egc_snr_db (float): target EGC SNR
        plan (:any:`SNRPlan`): per-RU plan of this frame
        split (str): ``train``, ``val`` or ``test``
        record_id (int): 64-bit id, see :any:`make_record_id`
    """

    def __init__(self, ru_frames, label, egc_snr_db, plan, split, record_id):
        self.ru_frames = list(ru_frames)
        self.label = label
        self.egc_snr_db = egc_snr_db
        self.plan = plan
        self.split = split
        self.record_id = record_id

    @property
    def n_ru(self):
        return len(self.ru_frames)

    def __repr__(self):
        return super(FrameRecord, self).__repr__(data={'id': self.record_id,
                                                       'label': self.label.name,
                                                       'egc_snr_db': self.egc_snr_db,
                                                       'split': self.split})


class DatasetManifest(BaseObject):
    """
    Sidecar document of a generated dataset (``manifest.yaml``).

    Stable keys: ``format_version``, ``config``, ``files``, ``counts``,
    ``cells``, ``checksums``. ``files`` paths are relative to the manifest
    directory.
    """

    def __init__(self, config, root, files, counts, cells, checksums,
                 format_version=FORMAT_VERSION):
        self.config = config
        self.root = str(root)
        self.files = OrderedDict(files)
        self.counts = OrderedDict(counts)
        self.cells = list(cells)
        self.checksums = OrderedDict(checksums)
        self.format_version = format_version

    @property
    def path(self):
        return os.path.join(self.root, MANIFEST_NAME)

    def file_path(self, split):
        if split not in self.files:
            raise CfamcNotFound('split', split)
        return os.path.join(self.root, self.files[split])

    @property
    def total_records(self):
        return sum(self.counts.values())

    def cell(self, scheme, snr_db):
        for cell in self.cells:
            if cell['scheme'] == scheme.name and abs(cell['snr_db'] - float(snr_db)) < 1e-9:
                return cell
        raise CfamcNotFound('(scheme, snr) pair', (scheme.name, snr_db))

    def as_dict(self):
        return OrderedDict([
            ('format_version', self.format_version),
            ('config', dict(self.config.as_dict())),
            ('files', dict(self.files)),
            ('counts', dict(self.counts)),
            ('cells', [dict(c) for c in self.cells]),
            ('checksums', dict(self.checksums)),
        ])

    def save(self):
        try:
            with open(self.path, 'w') as f:
                yaml.safe_dump(to_builtin(self.as_dict()), f, sort_keys=False)
        except (IOError, OSError) as exc:
            raise CfamcPersistenceError(self.path, exc)
        return self.path

    @classmethod
    def load(cls, path):
        """
        Loads a manifest from its file or from the dataset directory.
        """
        if os.path.isdir(path):
            path = os.path.join(path, MANIFEST_NAME)
        try:
            with open(path) as f:
                data = yaml.safe_load(f)
        except (IOError, OSError) as exc:
            raise CfamcPersistenceError(path, exc)
        return cls(DatasetConfig.from_dict(data['config']),
                   os.path.dirname(os.path.abspath(path)),
                   data['files'], data['counts'], data['cells'],
                   data.get('checksums', {}), data['format_version'])

    def __repr__(self):
        return super(DatasetManifest, self).__repr__(data={'records': self.total_records,
                                                           'root': self.root})
