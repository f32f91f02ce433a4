"""
Experiment configuration.

One YAML document drives a whole experiment. It is merged over a preset
(``desk`` by default) and then over the command-line overrides:

.. code-block:: yaml

    seed: 7
    out: runs/desk
    dataset:
      schemes: [BPSK, QPSK, QAM16]
      snr_grid_db: [10, 20, 30]
      frames_per_pair: 256
      split: {train: 192, val: 32, test: 32}
    model:
      approach: distributed
      input_sizes: [128]
      n_stacks: [4]
      n_ru: 3
    hyperparams:
      epochs: 10
      batch_size: 32
    mc_runs: 2

``seed`` seeds both the dataset and training unless ``dataset.master_seed``
or ``hyperparams.seed`` is given explicitly.

"""

import copy
import itertools
import os
from collections import OrderedDict

import yaml

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcConfigError, CfamcValueError, CfamcCoerceError
from cfamc.exceptions import CfamcPersistenceError
from cfamc.dataset.config import DatasetConfig, DatasetManifest, MANIFEST_NAME
from cfamc.model.spec import ModelSpec, ModelKind, INPUT_SIZES, STACK_RANGE
from cfamc.model.weights import WeightBundle
from cfamc.training.trainer import Hyperparams

APPROACHES = ('central', 'distributed', 'hybrid')
TOP_KEYS = ('seed', 'out', 'dataset', 'dataset_dir', 'model', 'hyperparams', 'mc_runs')
MODEL_KEYS = ('approach', 'input_sizes', 'n_stacks', 'du_input_sizes', 'du_stacks', 'n_ru',
              'n_filters', 'head_width', 'normalize_input', 'ru_checkpoint', 'du_checkpoint')

DESK = {
    'seed': 0,
    'out': 'runs/desk',
    'dataset': {'schemes': ['BPSK', 'QPSK', 'QAM16'], 'snr_grid_db': [10, 20, 30],
                'frames_per_pair': 256, 'frame_len': 1024, 'n_ru': 3,
                'plan_mode': 'diverse', 'split': {'train': 192, 'val': 32, 'test': 32}},
    'model': {'approach': 'central', 'input_sizes': [128], 'n_stacks': [4],
              'du_input_sizes': [256], 'du_stacks': 7},
    'hyperparams': {'epochs': 10, 'batch_size': 32, 'learning_rate': 1e-3},
    'mc_runs': 2,
}

PAPER = {
    'seed': 0,
    'out': 'runs/paper',
    'dataset': {'schemes': ['BPSK', 'QPSK', 'QAM16', 'QAM32', 'QAM64', 'QAM128', 'QAM256'],
                'snr_grid_db': {'start': -10, 'stop': 30, 'step': 2},
                'frames_per_pair': 1024, 'frame_len': 1024, 'n_ru': 3,
                'plan_mode': 'diverse', 'split': {'train': 768, 'val': 128, 'test': 128}},
    'model': {'approach': 'central', 'input_sizes': [128, 256, 512, 1024],
              'n_stacks': [4, 5, 6, 7], 'du_input_sizes': [128, 256, 512, 1024], 'du_stacks': 7},
    'hyperparams': {'epochs': 10, 'batch_size': 128, 'learning_rate': 1e-3},
    'mc_runs': 16,
}

PRESETS = {'desk': DESK, 'paper': PAPER}


def merge(base, override):
    """ Recursive dict merge, ``override`` wins """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def read_config_file(path):
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except (IOError, OSError) as exc:
        raise CfamcPersistenceError(path, exc)
    except yaml.YAMLError as exc:
        raise CfamcConfigError('valid YAML in {}'.format(path), exc)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise CfamcConfigError('mapping at top level of {}'.format(path), type(data).__name__)
    return data


def _reject_unknown(section, data, allowed):
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise CfamcConfigError('{} keys {}'.format(section, list(allowed)), unknown)


class ModelGrid(BaseObject):
    """ Input sizes x stacks to train, plus the ensemble settings """

    def __init__(self, approach='central', input_sizes=(128,), n_stacks=(4,),
                 du_input_sizes=(256,), du_stacks=7, n_ru=None, n_filters=32,
                 head_width=128, normalize_input=True, ru_checkpoint=None,
                 du_checkpoint=None):
        self.approach = approach
        self.input_sizes = [int(s) for s in input_sizes]
        self.n_stacks = [int(s) for s in n_stacks]
        self.du_input_sizes = [int(s) for s in du_input_sizes]
        self.du_stacks = int(du_stacks)
        self.n_ru = n_ru
        self.n_filters = int(n_filters)
        self.head_width = int(head_width)
        self.normalize_input = bool(normalize_input)
        self.ru_checkpoint = ru_checkpoint
        self.du_checkpoint = du_checkpoint

    def pairs(self):
        return list(itertools.product(self.input_sizes, self.n_stacks))

    def _spec(self, kind, input_size, n_stacks, n_ru):
        return ModelSpec(kind, input_size, n_stacks, n_ru=n_ru, n_filters=self.n_filters,
                         head_width=self.head_width, normalize_input=self.normalize_input)

    def central_spec(self, input_size, n_stacks):
        return self._spec(ModelKind.CENTRAL, input_size, n_stacks, max(self.n_ru, 1))

    def ru_spec(self, input_size, n_stacks):
        return self._spec(ModelKind.RU, input_size, n_stacks, 1)

    def du_spec(self, du_input_size):
        return self._spec(ModelKind.DU_FEATURE, du_input_size, self.du_stacks,
                          max(self.n_ru, 1))

    def as_dict(self):
        return OrderedDict((key, getattr(self, key)) for key in MODEL_KEYS)


class RunConfig(BaseObject):
    """
    Validated experiment configuration.

    Attributes:
        dataset (:any:`DatasetConfig`): what to generate
        dataset_dir (str): where the dataset lives
        model (:any:`ModelGrid`): approach and grid
        hyperparams (:any:`Hyperparams`): training settings
        mc_runs (int): Monte-Carlo runs per evaluation
        out (str): output root
    """

    def __init__(self, dataset, dataset_dir, model, hyperparams, mc_runs, out, seed):
        self.dataset = dataset
        self.dataset_dir = dataset_dir
        self.model = model
        self.hyperparams = hyperparams
        self.mc_runs = int(mc_runs)
        self.out = out
        self.seed = seed

    @classmethod
    def load(cls, path=None, preset='desk', seed=None, out=None):
        """
        Preset, merged with the file at ``path``, merged with overrides.

        Raises:
            :class:`CfamcConfigError`: unknown keys or invalid values
        """
        if preset not in PRESETS:
            raise CfamcConfigError(sorted(PRESETS), preset)
        data = PRESETS[preset]
        if path is not None:
            data = merge(data, read_config_file(path))
        overrides = {}
        if seed is not None:
            overrides['seed'] = seed
        if out is not None:
            overrides['out'] = out
        return cls.from_dict(merge(data, overrides))

    @classmethod
    def from_dict(cls, data):
        _reject_unknown('top-level', data, TOP_KEYS)
        seed = int(data.get('seed', 0))
        out = str(data.get('out', 'runs'))
        dataset_data = dict(data.get('dataset') or {})
        dataset_data.setdefault('master_seed', seed)
        model_data = dict(data.get('model') or {})
        _reject_unknown('model', model_data, MODEL_KEYS)
        hp_data = dict(data.get('hyperparams') or {})
        hp_data.setdefault('seed', seed)
        try:
            dataset = DatasetConfig.from_dict(dataset_data)
            model = ModelGrid(**model_data)
            hyperparams = Hyperparams.from_dict(hp_data)
        except (CfamcValueError, CfamcCoerceError, TypeError) as exc:
            raise CfamcConfigError('valid configuration', exc)
        if model.n_ru is None:
            model.n_ru = dataset.n_ru
        dataset_dir = data.get('dataset_dir') or os.path.join(out, 'dataset')
        config = cls(dataset, dataset_dir, model, hyperparams, data.get('mc_runs', 1), out, seed)
        config.validate()
        return config

    def validate(self):
        model, frame_len = self.model, self.dataset.frame_len
        if model.approach not in APPROACHES:
            raise CfamcConfigError(APPROACHES, model.approach)
        sizes = model.input_sizes + (model.du_input_sizes if model.approach == 'hybrid' else [])
        stacks = model.n_stacks + ([model.du_stacks] if model.approach == 'hybrid' else [])
        if not model.input_sizes or not model.n_stacks:
            raise CfamcConfigError('non-empty input_sizes and n_stacks', model.as_dict())
        for size in sizes:
            if size not in INPUT_SIZES:
                raise CfamcConfigError('input sizes in {}'.format(INPUT_SIZES), size)
            if size > frame_len:
                raise CfamcConfigError('input size <= frame_len {}'.format(frame_len), size)
        for n in stacks:
            if not STACK_RANGE[0] <= n <= STACK_RANGE[1]:
                raise CfamcConfigError('stacks in {}..{}'.format(*STACK_RANGE), n)
        minimum = 0 if model.approach == 'hybrid' else 1
        if model.n_ru < minimum:
            raise CfamcConfigError('n_ru >= {}'.format(minimum), model.n_ru)
        if self.mc_runs < 1:
            raise CfamcConfigError('mc_runs >= 1', self.mc_runs)
        for path in (model.ru_checkpoint, model.du_checkpoint):
            if path is not None and not os.path.isfile(path):
                raise CfamcConfigError('existing checkpoint file', path)

    @property
    def manifest_path(self):
        return os.path.join(self.dataset_dir, MANIFEST_NAME)

    def require_manifest(self):
        """
        Raises:
            :class:`CfamcConfigError`: no dataset at ``dataset_dir``
        """
        if not os.path.isfile(self.manifest_path):
            raise CfamcConfigError('generated dataset (run gen-data)', self.manifest_path)
        manifest = DatasetManifest.load(self.manifest_path)
        rus = self.model.n_ru
        if rus != manifest.config.n_ru and not (self.model.approach == 'hybrid' and rus == 0):
            raise CfamcConfigError('dataset with n_ru {}'.format(self.model.n_ru),
                                   manifest.config.n_ru)
        return manifest

    def checkpoint(self, which):
        path = getattr(self.model, '{}_checkpoint'.format(which))
        return None if path is None else WeightBundle.load(path)

    def out_path(self, *parts):
        return os.path.join(self.out, *parts)

    def __repr__(self):
        return super(RunConfig, self).__repr__(data={'approach': self.model.approach,
                                                     'pairs': len(self.model.pairs()),
                                                     'out': self.out})
