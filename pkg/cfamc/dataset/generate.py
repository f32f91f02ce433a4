"""
Dataset generation, split assignment and split loading.

>>> from cfamc.dataset import DatasetConfig, generate_dataset, load_split
>>> manifest = generate_dataset(DatasetConfig.desk(master_seed=7), 'data/desk')
>>> for batch in load_split(manifest, 'test', batch_size=64):
...     print(len(batch), batch[0].label)

Generation walks the (scheme, snr) pairs in config order. Each pair is one
unit of work, so pairs can be spread over worker processes
(``CFAMC_WORKERS``); results are consumed in pair order, which keeps the
files identical whatever the worker count.

"""

import os
import contextlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from cfamc.exceptions import CfamcValueError, CfamcPersistenceError, CfamcNotFound
from cfamc.signal.modulation import ModulationScheme, modulate, IQFrame
from cfamc.signal.channel import make_snr_plan, apply_channel, SNRPlan
from cfamc.dataset.config import DatasetConfig, DatasetManifest, FrameRecord, SPLITS
from cfamc.dataset.fileformat import FrameFileWriter, read_frame_file, record_dtype
from cfamc.dataset.fileformat import SPLIT_CODES, SPLIT_NAMES, FORMAT_VERSION
from cfamc.dataset.seeding import child_seed, hash64, make_record_id
from cfamc.dataset.seeding import ROLE_DATA, ROLE_PLAN, ROLE_SPLIT, ROLE_NOISE, ROLE_SHUFFLE
from cfamc.utils.coerce import to_scheme
from cfamc.utils.logger import logger

WORKERS_ENV = 'CFAMC_WORKERS'


def worker_count():
    """ Worker processes for generation, from ``CFAMC_WORKERS`` (default 1) """
    value = os.environ.get(WORKERS_ENV, '1')
    try:
        workers = int(value)
    except ValueError:
        raise CfamcValueError('integer {}'.format(WORKERS_ENV), value)
    return max(1, workers)


def split_assignment(config, scheme_id, snr_index):
    """
    Split of every frame index of one pair.

    A seeded permutation of ``range(frames_per_pair)`` is cut into
    train/val/test blocks of the configured sizes.

    Returns:
        (``np.ndarray``): split code per frame index, see ``SPLIT_CODES``
    """
    seed = child_seed(config.master_seed, scheme_id, snr_index, 0, ROLE_SPLIT)
    permutation = np.random.default_rng(seed).permutation(config.frames_per_pair)
    codes = np.empty(config.frames_per_pair, dtype=np.uint8)
    start = 0
    for name in SPLITS:
        stop = start + config.split[name]
        codes[permutation[start:stop]] = SPLIT_CODES[name]
        start = stop
    return codes


def generate_frame(config, scheme, snr_index, frame_index):
    """
    Builds one transmission: a clean frame, its SNR plan and one channel
    output per RU, all from seeds derived from the frame's grid position.

    Returns:
        (``tuple``): clean :any:`IQFrame`, :any:`SNRPlan`, list of RU frames
    """
    master = config.master_seed
    scheme_id = scheme.value
    snr_db = config.snr_grid_db[snr_index]
    clean = modulate(scheme, config.frame_len,
                     child_seed(master, scheme_id, snr_index, frame_index, ROLE_DATA))
    plan = make_snr_plan(snr_db, config.n_ru, config.plan_mode,
                         child_seed(master, scheme_id, snr_index, frame_index, ROLE_PLAN))
    ru_frames = []
    for ru in range(config.n_ru):
        seed = child_seed(master, scheme_id, snr_index, frame_index, ROLE_NOISE + ru)
        frame = apply_channel(clean, plan.amplitudes[ru], plan.noise_vars[ru], seed)
        ru_frames.append(frame.replace(frame.samples, egc_snr_db=snr_db, ru_index=ru))
    return clean, plan, ru_frames


def generate_pair_arrays(config, scheme, snr_index):
    """
    All records of one (scheme, snr) pair, in frame index order.

    Returns:
        (``np.ndarray``): structured array of :any:`record_dtype`
    """
    scheme = to_scheme(scheme)
    records = np.zeros(config.frames_per_pair, dtype=record_dtype(config.n_ru, config.frame_len))
    records['split'] = split_assignment(config, scheme.value, snr_index)
    records['label'] = scheme.value
    records['egc_snr_db'] = config.snr_grid_db[snr_index]
    for frame_index in range(config.frames_per_pair):
        _, plan, ru_frames = generate_frame(config, scheme, snr_index, frame_index)
        row = records[frame_index]
        row['record_id'] = make_record_id(scheme.value, snr_index, frame_index)
        row['ru_snr_linear'] = plan.per_ru_snr_linear
        row['samples'] = np.stack([f.as_real() for f in ru_frames])
    return records


def _pair_job(args):
    config_dict, scheme_id, snr_index = args
    config = DatasetConfig.from_dict(config_dict)
    return generate_pair_arrays(config, ModulationScheme(scheme_id), snr_index)


def _pair_results(jobs, workers):
    if workers == 1:
        for job in jobs:
            yield _pair_job(job)
        return
    with ProcessPoolExecutor(max_workers=workers) as executor:
        for records in executor.map(_pair_job, jobs):
            yield records


def generate_dataset(config, out_dir):
    """
    Generates every pair of ``config`` into ``out_dir`` as ``train.bin``,
    ``val.bin``, ``test.bin`` and ``manifest.yaml``.

    Args:
        config (:any:`DatasetConfig`): what to generate
        out_dir (str): destination, created if missing

    Returns:
        (:any:`DatasetManifest`): manifest, already saved

    Raises:
        :class:`CfamcPersistenceError`: ``out_dir`` or a file not writable
    """
    if not isinstance(config, DatasetConfig):
        raise CfamcValueError(DatasetConfig, type(config))
    config.validate()
    try:
        if not os.path.isdir(out_dir):
            os.makedirs(out_dir)
    except OSError as exc:
        raise CfamcPersistenceError(out_dir, exc)

    files = dict((name, '{}.bin'.format(name)) for name in SPLITS)
    jobs = [(config.as_dict(), scheme.value, snr_index)
            for scheme in config.schemes
            for snr_index in range(len(config.snr_grid_db))]
    workers = worker_count()
    logger.info('Generating {} records in {} pairs with {} worker(s) into {}'.format(
        config.total_records, len(jobs), workers, out_dir))

    writers = [FrameFileWriter(os.path.join(out_dir, files[name]), config.frame_len,
                               config.n_ru, config.split_total(name))
               for name in SPLITS]
    cells = []
    with contextlib.ExitStack() as stack:
        for writer in writers:
            stack.enter_context(writer)
        for (_, scheme_id, snr_index), records in zip(jobs, _pair_results(jobs, workers)):
            cell = {'scheme': ModulationScheme(scheme_id).name,
                    'snr_db': float(config.snr_grid_db[snr_index])}
            for name, writer in zip(SPLITS, writers):
                subset = records[records['split'] == SPLIT_CODES[name]]
                writer.write(subset)
                cell[name] = int(subset.size)
            cells.append(cell)
            logger.debug('Pair {scheme} @ {snr_db} dB written'.format(**cell))

    manifest = DatasetManifest(config, os.path.abspath(out_dir), files,
                               dict((name, config.split_total(name)) for name in SPLITS),
                               cells,
                               dict((name, w.checksum) for name, w in zip(SPLITS, writers)),
                               FORMAT_VERSION)
    manifest.save()
    logger.info('Dataset written: {}'.format(manifest))
    return manifest


def split_membership(manifest, scheme, snr_db):
    """
    Record ids of one pair, per split.

    >>> members = split_membership(manifest, 'QPSK', 20)
    >>> len(members['train']), len(members['val']), len(members['test'])
    (192, 32, 32)

    Raises:
        :class:`CfamcNotFound`: pair not in the manifest grid
    """
    config = manifest.config
    scheme = to_scheme(scheme)
    if scheme not in config.schemes:
        raise CfamcNotFound('scheme', scheme.name)
    snr_index = config.snr_index(snr_db)
    codes = split_assignment(config, scheme.value, snr_index)
    membership = {}
    for name in SPLITS:
        indices = np.flatnonzero(codes == SPLIT_CODES[name])
        membership[name] = frozenset(make_record_id(scheme.value, snr_index, int(i))
                                     for i in indices)
    return membership


def read_split(manifest, split):
    """ Checksum-verified structured array of one split file """
    if split not in SPLITS:
        raise CfamcValueError(SPLITS, split)
    checksum = manifest.checksums.get(split)
    if checksum is None:
        logger.warning('No checksum recorded for split {}, reading unverified'.format(split))
    return read_frame_file(manifest.file_path(split), expected_checksum=checksum)


def epoch_order(count, epoch, shuffle_seed):
    """ Record order of one training epoch """
    rng = np.random.default_rng(hash64(shuffle_seed, ROLE_SHUFFLE, epoch))
    return rng.permutation(count)


def record_from_row(row, plan_mode):
    """ :any:`FrameRecord` from one structured record """
    label = ModulationScheme(int(row['label']))
    egc_snr_db = float(row['egc_snr_db'])
    samples = row['samples']
    ru_frames = [IQFrame((samples[ru, :, 0] + 1j * samples[ru, :, 1]).astype(np.complex64),
                         label, egc_snr_db=egc_snr_db, ru_index=ru)
                 for ru in range(samples.shape[0])]
    return FrameRecord(ru_frames, label, egc_snr_db,
                       SNRPlan.from_shares(row['ru_snr_linear'], plan_mode),
                       SPLIT_NAMES[int(row['split'])], int(row['record_id']))


def load_split(manifest, split, batch_size, epoch=0, shuffle_seed=None):
    """
    Iterates one epoch of a split in batches of :any:`FrameRecord`.

    The training split is reshuffled per epoch from
    ``hash64(shuffle_seed, ROLE_SHUFFLE, epoch)`` (``shuffle_seed`` defaults
    to the dataset master seed). Validation and test keep file order.

    Raises:
        :class:`CfamcCorruptDataError`: file does not match its checksum
    """
    if batch_size < 1:
        raise CfamcValueError('batch_size >= 1', batch_size)
    records = read_split(manifest, split)
    if split == 'train':
        seed = manifest.config.master_seed if shuffle_seed is None else shuffle_seed
        order = epoch_order(records.size, epoch, seed)
    else:
        order = np.arange(records.size)
    plan_mode = manifest.config.plan_mode
    for start in range(0, order.size, batch_size):
        yield [record_from_row(records[i], plan_mode) for i in order[start:start + batch_size]]
