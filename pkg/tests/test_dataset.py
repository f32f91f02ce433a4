"""
Dataset Tests

Generation determinism, split assignment, file format and loaders.

"""

import os
import shutil
import tempfile
import unittest
from unittest import mock

import numpy as np

from cfamc.exceptions import CfamcValueError, CfamcNotFound, CfamcCorruptDataError
from cfamc.signal import ModulationScheme
from cfamc.dataset import DatasetConfig, DatasetManifest, generate_dataset, generate_frame
from cfamc.dataset import split_membership, load_split, read_split, SplitStream, SPLITS
from cfamc.dataset import hash64, make_record_id, split_record_id
from cfamc.dataset.generate import worker_count, epoch_order
from cfamc.utils.logger import logger

from tests.test_utils import tiny_dataset_config

DATA = {}


def setUpModule():
    logger.title('SETTING UP DATASET TESTS...')
    DATA['dir'] = tempfile.mkdtemp(prefix='cfamc_dataset_')
    DATA['config'] = tiny_dataset_config()
    DATA['manifest'] = generate_dataset(DATA['config'], os.path.join(DATA['dir'], 'a'))


def tearDownModule():
    shutil.rmtree(DATA['dir'], ignore_errors=True)


######################
# CONFIG
######################


class DatasetConfigTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING DATASET CONFIG...')

    def test_paper_grid(self):
        config = DatasetConfig.paper()
        self.assertEqual(len(config.schemes), 7)
        self.assertEqual(config.snr_grid_db[0], -10.0)
        self.assertEqual(config.snr_grid_db[-1], 30.0)
        self.assertEqual(len(config.snr_grid_db), 21)
        self.assertEqual(config.total_records, 7 * 21 * 1024)
        self.assertEqual(dict(config.split), {'train': 768, 'val': 128, 'test': 128})

    def test_desk_grid(self):
        config = DatasetConfig.desk(master_seed=4)
        self.assertEqual([s.name for s in config.schemes], ['BPSK', 'QPSK', 'QAM16'])
        self.assertEqual(config.snr_grid_db, (10.0, 20.0, 30.0))
        self.assertEqual(config.split_total('test'), 9 * 32)

    def test_split_must_sum(self):
        with self.assertRaises(CfamcValueError):
            tiny_dataset_config(split={'train': 4, 'val': 2, 'test': 1})

    def test_grid_must_increase(self):
        with self.assertRaises(CfamcValueError):
            tiny_dataset_config(snr_grid_db=[20, 10])

    def test_distinct_schemes(self):
        with self.assertRaises(CfamcValueError):
            tiny_dataset_config(schemes=['BPSK', 'bpsk'])

    def test_bad_plan_mode(self):
        with self.assertRaises(CfamcValueError):
            tiny_dataset_config(plan_mode='random')

    def test_unknown_key(self):
        data = dict(tiny_dataset_config().as_dict())
        data['frames'] = 3
        with self.assertRaises(CfamcValueError):
            DatasetConfig.from_dict(data)

    def test_dict_round_trip(self):
        config = tiny_dataset_config()
        self.assertEqual(DatasetConfig.from_dict(config.as_dict()), config)

    def test_snr_index(self):
        config = tiny_dataset_config()
        self.assertEqual(config.snr_index(20), 1)
        with self.assertRaises(CfamcNotFound):
            config.snr_index(15)


######################
# SEEDING
######################


class SeedingTests(unittest.TestCase):

    def test_hash64_deterministic(self):
        self.assertEqual(hash64(1, 2, 3), hash64(1, 2, 3))
        self.assertNotEqual(hash64(1, 2, 3), hash64(1, 2, 4))
        self.assertLess(hash64(2 ** 64 - 1, 7), 2 ** 64)

    def test_record_ids(self):
        record_id = make_record_id(6, 20, 1023)
        self.assertEqual(split_record_id(record_id), (6, 20, 1023))
        self.assertNotEqual(make_record_id(0, 1, 0), make_record_id(1, 0, 0))

    def test_worker_count(self):
        with mock.patch.dict(os.environ, {'CFAMC_WORKERS': '3'}):
            self.assertEqual(worker_count(), 3)
        with mock.patch.dict(os.environ, {'CFAMC_WORKERS': '0'}):
            self.assertEqual(worker_count(), 1)
        with mock.patch.dict(os.environ, {'CFAMC_WORKERS': 'many'}):
            with self.assertRaises(CfamcValueError):
                worker_count()

    def test_epoch_order(self):
        first = epoch_order(50, 1, 9)
        np.testing.assert_array_equal(first, epoch_order(50, 1, 9))
        self.assertFalse(np.array_equal(first, epoch_order(50, 2, 9)))
        np.testing.assert_array_equal(np.sort(first), np.arange(50))


######################
# GENERATION
######################


class GenerationTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING GENERATION...')
        self.config = DATA['config']
        self.manifest = DATA['manifest']

    def test_counts(self):
        self.assertEqual(dict(self.manifest.counts), {'train': 16, 'val': 8, 'test': 8})
        self.assertEqual(self.manifest.total_records, self.config.total_records)
        self.assertEqual(len(self.manifest.cells), 4)
        for cell in self.manifest.cells:
            self.assertEqual((cell['train'], cell['val'], cell['test']), (4, 2, 2))

    def test_cell_lookup(self):
        cell = self.manifest.cell(ModulationScheme.QPSK, 20)
        self.assertEqual(cell['snr_db'], 20.0)
        with self.assertRaises(CfamcNotFound):
            self.manifest.cell(ModulationScheme.QAM16, 20)

    def test_regeneration_is_identical(self):
        again = generate_dataset(tiny_dataset_config(), os.path.join(DATA['dir'], 'b'))
        self.assertEqual(dict(again.checksums), dict(self.manifest.checksums))

    def test_worker_processes_are_identical(self):
        with mock.patch.dict(os.environ, {'CFAMC_WORKERS': '2'}):
            again = generate_dataset(tiny_dataset_config(), os.path.join(DATA['dir'], 'c'))
        self.assertEqual(dict(again.checksums), dict(self.manifest.checksums))

    def test_master_seed_changes_data(self):
        other = generate_dataset(tiny_dataset_config(master_seed=12),
                                 os.path.join(DATA['dir'], 'd'))
        self.assertNotEqual(other.checksums['train'], self.manifest.checksums['train'])

    def test_manifest_reload(self):
        loaded = DatasetManifest.load(self.manifest.root)
        self.assertEqual(loaded.config, self.config)
        self.assertEqual(dict(loaded.checksums), dict(self.manifest.checksums))
        self.assertEqual(loaded.cells, self.manifest.cells)

    def test_split_membership(self):
        for scheme in self.config.schemes:
            for snr in self.config.snr_grid_db:
                members = split_membership(self.manifest, scheme, snr)
                sizes = [len(members[name]) for name in SPLITS]
                self.assertEqual(sizes, [4, 2, 2])
                union = members['train'] | members['val'] | members['test']
                self.assertEqual(len(union), 8)
                self.assertEqual(split_membership(self.manifest, scheme.name, snr), members)

    def test_membership_matches_files(self):
        for name in SPLITS:
            ids = set(int(i) for i in read_split(self.manifest, name)['record_id'])
            expected = set()
            for scheme in self.config.schemes:
                for snr in self.config.snr_grid_db:
                    expected |= split_membership(self.manifest, scheme, snr)[name]
            self.assertEqual(ids, expected)

    def test_membership_unknown_pair(self):
        with self.assertRaises(CfamcNotFound):
            split_membership(self.manifest, 'QAM64', 10)

    def test_frames_regenerate_on_their_own(self):
        records = read_split(self.manifest, 'val')
        row = records[3]
        scheme_id, snr_index, frame_index = split_record_id(int(row['record_id']))
        _, plan, ru_frames = generate_frame(self.config, ModulationScheme(scheme_id),
                                            snr_index, frame_index)
        for ru, frame in enumerate(ru_frames):
            self.assertEqual(row['samples'][ru].tobytes(), frame.as_real(np.float32).tobytes())
        np.testing.assert_array_equal(row['ru_snr_linear'],
                                      np.asarray(plan.per_ru_snr_linear, dtype=np.float32))

    def test_corrupt_file(self):
        target = os.path.join(DATA['dir'], 'corrupt')
        shutil.copytree(self.manifest.root, target)
        path = os.path.join(target, 'test.bin')
        with open(path, 'r+b') as f:
            f.seek(100)
            byte = f.read(1)
            f.seek(100)
            f.write(bytes([byte[0] ^ 0xFF]))
        with self.assertRaises(CfamcCorruptDataError):
            read_split(DatasetManifest.load(target), 'test')

    def test_unknown_split(self):
        with self.assertRaises(CfamcValueError):
            read_split(self.manifest, 'holdout')

    def test_requires_dataset_config(self):
        with self.assertRaises(CfamcValueError):
            generate_dataset({'n_ru': 3}, os.path.join(DATA['dir'], 'e'))


######################
# LOADERS
######################


class LoaderTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING LOADERS...')
        self.manifest = DATA['manifest']

    def test_load_split_records(self):
        batches = list(load_split(self.manifest, 'test', batch_size=3))
        self.assertEqual([len(b) for b in batches], [3, 3, 2])
        for record in batches[0]:
            self.assertEqual(record.split, 'test')
            self.assertEqual(record.n_ru, 3)
            self.assertEqual(record.ru_frames[0].length, 64)
            self.assertAlmostEqual(record.plan.egc_snr_db, record.egc_snr_db, delta=1e-4)
            self.assertEqual([f.ru_index for f in record.ru_frames], [0, 1, 2])

    def test_eval_splits_keep_file_order(self):
        ids = [r.record_id for b in load_split(self.manifest, 'val', 4) for r in b]
        self.assertEqual(ids, [int(i) for i in read_split(self.manifest, 'val')['record_id']])

    def test_train_split_reshuffles(self):
        def ids(epoch):
            return [r.record_id for b in load_split(self.manifest, 'train', 16, epoch=epoch)
                    for r in b]
        self.assertEqual(ids(1), ids(1))
        self.assertNotEqual(ids(1), ids(2))
        self.assertEqual(sorted(ids(1)), sorted(ids(2)))

    def test_bad_batch_size(self):
        with self.assertRaises(CfamcValueError):
            list(load_split(self.manifest, 'test', batch_size=0))

    def test_stream_batches(self):
        stream = SplitStream.from_manifest(self.manifest, 'test', batch_size=5)
        batches = list(stream.batches())
        self.assertEqual(len(stream), 8)
        self.assertEqual(stream.n_ru, 3)
        self.assertEqual(stream.frame_len, 64)
        self.assertEqual(tuple(batches[0].x.shape), (5, 3, 64, 2))
        self.assertEqual(tuple(batches[1].x.shape), (3, 3, 64, 2))

    def test_stream_matches_record_loader(self):
        stream = SplitStream.from_manifest(self.manifest, 'train', batch_size=16)
        from_stream = [int(i) for b in stream.batches(epoch=3) for i in b.record_ids]
        from_records = [r.record_id for b in load_split(self.manifest, 'train', 16, epoch=3)
                        for r in b]
        self.assertEqual(from_stream, from_records)

    def test_stream_labels_match_ids(self):
        stream = SplitStream.from_manifest(self.manifest, 'val', batch_size=8)
        batch = next(stream.batches())
        for label, record_id in zip(batch.labels.tolist(), batch.record_ids.tolist()):
            self.assertEqual(split_record_id(record_id)[0], label)

    def test_stream_uses_split_buffer(self):
        stream = SplitStream.from_manifest(self.manifest, 'val', batch_size=8)
        self.assertFalse(stream.dataset.samples.flags.owndata)
        self.assertTrue(stream.dataset.samples.flags.writeable)

    def test_float32_frames_are_not_copied(self):
        samples = np.zeros((4, 2, 8, 2), dtype=np.float32)
        stream = SplitStream.from_arrays(samples, [0, 1, 0, 1], batch_size=2)
        self.assertTrue(np.shares_memory(stream.dataset.samples, samples))
