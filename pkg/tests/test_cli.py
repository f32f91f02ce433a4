"""
Command Line Tests

Runs the ``cfamc`` commands end to end on a tiny dataset. The desk-scale
learning run is gated behind ``CFAMC_SLOW_TESTS=1``.

"""

import os
import csv
import shutil
import tempfile
import unittest

import yaml

from cfamc.exceptions import CfamcConfigError, CfamcPersistenceError, CfamcCorruptDataError
from cfamc.exceptions import CfamcDivergenceError, CfamcIncompatibleSpecError
from cfamc.exceptions import CfamcPartialResultsError, CfamcContractError
from cfamc.cli import main, exit_code, RunConfig
from cfamc.dataset.config import MANIFEST_NAME
from cfamc.eval import load_reports
from cfamc.model import ModelSpec, WeightBundle, assemble_central
from cfamc.utils.logger import logger

from tests.test_utils import SLOW_TESTS, temp_dir

ROOT = None
DATASET_DIR = None

TINY_CONFIG = {
    'seed': 3,
    'dataset': {'schemes': ['BPSK', 'QPSK'], 'snr_grid_db': [10, 30], 'frames_per_pair': 8,
                'frame_len': 128, 'n_ru': 3, 'split': {'train': 4, 'val': 2, 'test': 2}},
    'model': {'approach': 'central', 'input_sizes': [128], 'n_stacks': [4],
              'n_filters': 4, 'head_width': 8},
    'hyperparams': {'epochs': 1, 'batch_size': 8},
    'mc_runs': 1,
}


def write_config(folder, name='config.yaml', **changes):
    data = dict(TINY_CONFIG, dataset_dir=DATASET_DIR)
    data.update(changes)
    path = os.path.join(folder, name)
    with open(path, 'w') as f:
        yaml.safe_dump(data, f)
    return path


def setUpModule():
    global ROOT, DATASET_DIR
    logger.title('SETTING UP COMMAND LINE TESTS...')
    ROOT = tempfile.mkdtemp(prefix='cfamc_cli_')
    DATASET_DIR = os.path.join(ROOT, 'dataset')
    config = write_config(ROOT)
    assert main(['gen-data', '--config', config, '--out', ROOT]) == 0


def tearDownModule():
    shutil.rmtree(ROOT, ignore_errors=True)


######################
# CONFIG
######################


class RunConfigTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING RUN CONFIG...')

    def test_desk_preset(self):
        config = RunConfig.load()
        self.assertEqual(config.dataset.total_records, 2304)
        self.assertEqual(config.model.n_ru, 3)
        self.assertEqual(config.model.pairs(), [(128, 4)])

    def test_paper_preset(self):
        config = RunConfig.load(preset='paper')
        self.assertEqual(config.dataset.total_records, 150528)
        self.assertEqual(len(config.model.pairs()), 16)
        self.assertEqual(config.mc_runs, 16)

    def test_seed_override(self):
        config = RunConfig.load(seed=42, out='elsewhere')
        self.assertEqual(config.dataset.master_seed, 42)
        self.assertEqual(config.hyperparams.seed, 42)
        self.assertEqual(config.dataset_dir, os.path.join('elsewhere', 'dataset'))

    def test_file_merges_over_preset(self):
        with temp_dir() as folder:
            config = RunConfig.load(write_config(folder))
        self.assertEqual(config.dataset.frame_len, 128)
        self.assertEqual(config.hyperparams.learning_rate, 1e-3)
        self.assertEqual(config.model.n_filters, 4)

    def test_rejects(self):
        bad = [{'bogus': 1},
               {'model': {'widgets': 3}},
               {'model': {'input_sizes': [256]}},
               {'model': {'n_stacks': [8]}},
               {'model': {'approach': 'federated'}},
               {'mc_runs': 0}]
        for changes in bad:
            data = dict(TINY_CONFIG)
            for key, value in changes.items():
                data[key] = dict(data[key], **value) if isinstance(value, dict) else value
            with self.assertRaises(CfamcConfigError):
                RunConfig.from_dict(data)

    def test_missing_file(self):
        with self.assertRaises(CfamcPersistenceError):
            RunConfig.load(os.path.join(ROOT, 'nope.yaml'))


######################
# EXIT CODES
######################


class ExitCodeTests(unittest.TestCase):

    def test_mapping(self):
        self.assertEqual(exit_code(CfamcConfigError('a', 'b')), 2)
        self.assertEqual(exit_code(CfamcContractError('frozen')), 2)
        self.assertEqual(exit_code(CfamcPersistenceError('x')), 3)
        self.assertEqual(exit_code(CfamcCorruptDataError('x')), 3)
        self.assertEqual(exit_code(CfamcDivergenceError(1, 0)), 4)
        self.assertEqual(exit_code(CfamcIncompatibleSpecError('a')), 5)

    def test_partial_results_use_cause(self):
        exc = CfamcPartialResultsError([], CfamcDivergenceError(2, 3))
        self.assertEqual(exit_code(exc), 4)


######################
# COMMANDS
######################


class CommandTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING COMMANDS...')

    def setUp(self):
        self.out = tempfile.mkdtemp(prefix='cfamc_cmd_', dir=ROOT)
        self.config = write_config(self.out)

    def run_command(self, *args):
        return main(list(args) + ['--config', self.config, '--out', self.out])

    def test_gen_data(self):
        self.assertTrue(os.path.isfile(os.path.join(DATASET_DIR, MANIFEST_NAME)))
        for split in ('train', 'val', 'test'):
            self.assertTrue(os.path.isfile(os.path.join(DATASET_DIR, '{}.bin'.format(split))))

    def test_flops(self):
        self.assertEqual(self.run_command('flops'), 0)
        path = os.path.join(self.out, 'flops', 'flops.csv')
        with open(path) as f:
            self.assertTrue(f.readline().startswith('# '))
            rows = list(csv.DictReader(f))
        self.assertEqual([r['approach'] for r in rows], ['central', 'distributed'])
        self.assertEqual(rows[0]['reference_mflops'], '')
        self.assertEqual(int(rows[1]['n_ru']), 3)

    def test_flops_unwritable_out_dir(self):
        with open(os.path.join(self.out, 'flops'), 'w') as f:
            f.write('not a folder')
        self.assertEqual(self.run_command('flops'), 3)

    def test_eval_oracle(self):
        self.assertEqual(self.run_command('eval', '--oracle'), 0)
        eval_dir = os.path.join(self.out, 'eval')
        for name in ('accuracy.csv', 'summary.yaml', 'report.yaml',
                     'accuracy_vs_mean_snr.png'):
            self.assertTrue(os.path.isfile(os.path.join(eval_dir, name)))
        reports = load_reports(eval_dir)
        self.assertEqual(reports['oracle'].accuracy, 1.0)
        self.assertEqual(reports['oracle'].n_records, 8)

    def test_report(self):
        self.assertEqual(self.run_command('eval', '--oracle', '--no-reference'), 0)
        target = os.path.join(self.out, 'again')
        code = main(['report', '--from', os.path.join(self.out, 'eval'), '--out', target])
        self.assertEqual(code, 0)
        self.assertEqual(load_reports(target)['oracle'].accuracy, 1.0)

    def test_train_then_eval_checkpoint(self):
        self.assertEqual(self.run_command('train'), 0)
        checkpoint = os.path.join(self.out, 'train', 'central-128x4', 'central.ckpt')
        self.assertTrue(os.path.isfile(checkpoint))
        self.assertEqual(self.run_command('eval', '--checkpoint', checkpoint), 0)
        reports = load_reports(os.path.join(self.out, 'eval'))
        self.assertEqual(list(reports), [WeightBundle.load(checkpoint).spec.spec_id])

    def test_unknown_key(self):
        self.config = write_config(self.out, bogus=1)
        self.assertEqual(self.run_command('flops'), 2)

    def test_missing_dataset(self):
        self.config = write_config(self.out, dataset_dir=os.path.join(self.out, 'none'))
        self.assertEqual(self.run_command('eval', '--oracle'), 2)

    def test_corrupt_checkpoint(self):
        path = os.path.join(self.out, 'broken.ckpt')
        with open(path, 'wb') as f:
            f.write(b'not a checkpoint at all, just bytes')
        self.assertEqual(self.run_command('eval', '--checkpoint', path), 3)

    def test_incompatible_checkpoint(self):
        spec = ModelSpec('central', 128, 4, n_ru=2, n_filters=4, head_width=8)
        path = WeightBundle.from_module(assemble_central(spec)).save(
            os.path.join(self.out, 'two_ru.ckpt'))
        self.assertEqual(self.run_command('eval', '--checkpoint', path), 5)


######################
# DESK SCALE
######################


@unittest.skipUnless(SLOW_TESTS, 'set CFAMC_SLOW_TESTS=1 for the desk run')
class DeskRunTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING DESK RUN...')
        self.out = os.path.join(ROOT, 'desk')
        os.makedirs(self.out)
        assert main(['gen-data', '--preset', 'desk', '--out', self.out]) == 0
        self.reports = {}
        for approach in ('central', 'distributed', 'hybrid'):
            folder = os.path.join(self.out, approach)
            config = os.path.join(self.out, '{}.yaml'.format(approach))
            with open(config, 'w') as f:
                yaml.safe_dump({'dataset_dir': os.path.join(self.out, 'dataset'),
                                'model': {'approach': approach, 'du_input_sizes': [128]}}, f)
            assert main(['eval', '--preset', 'desk', '--config', config, '--out', folder,
                         '--no-reference']) == 0
            reports = load_reports(os.path.join(folder, 'eval'))
            self.reports[approach] = next(iter(reports.values()))

    def test_records(self):
        self.assertEqual(self.reports['central'].n_records, 2 * 3 * 3 * 32)

    def test_central(self):
        central = self.reports['central']
        self.assertGreater(central.accuracy, 0.70)
        self.assertGreaterEqual(dict(central.egc_curve)[30.0], 0.90)

    def test_snr_trend(self):
        accuracies = [acc for _, acc in self.reports['central'].egc_curve]
        for low, high in zip(accuracies, accuracies[1:]):
            self.assertGreaterEqual(high, low - 0.01)

    def test_distributed_close_to_central(self):
        gap = self.reports['distributed'].accuracy - self.reports['central'].accuracy
        self.assertLessEqual(abs(gap), 0.05)

    def test_hybrid_not_worse(self):
        self.assertGreaterEqual(self.reports['hybrid'].accuracy,
                                self.reports['distributed'].accuracy - 0.02)
