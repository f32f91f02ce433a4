"""
Frame file codec.

Layout, all little-endian::

    header  magic "CFAMC1" (6 bytes), format_version u32, frame_len u32,
            n_ru u32, record_count u64
    record  record_id u64, label u8, split u8, egc_snr_db f32,
            ru_snr_linear f32[n_ru],
            samples f32[n_ru][frame_len][2]   (RU-major, I/Q interleaved)

Records are fixed size, so a file maps onto a numpy structured array.
Each file's 64-bit digest (BLAKE2b, 8-byte digest, hex) covers header and
records and is stored in the manifest.

"""

import hashlib
import os
import struct

import numpy as np

from cfamc.exceptions import CfamcCorruptDataError, CfamcPersistenceError
from cfamc.utils.logger import logger

MAGIC = b'CFAMC1'
FORMAT_VERSION = 1
HEADER = struct.Struct('<6sIIIQ')

SPLIT_CODES = {'train': 0, 'val': 1, 'test': 2}
SPLIT_NAMES = dict((code, name) for name, code in SPLIT_CODES.items())


def record_dtype(n_ru, frame_len):
    return np.dtype([('record_id', '<u8'),
                     ('label', 'u1'),
                     ('split', 'u1'),
                     ('egc_snr_db', '<f4'),
                     ('ru_snr_linear', '<f4', (n_ru,)),
                     ('samples', '<f4', (n_ru, frame_len, 2))])


def new_digest():
    return hashlib.blake2b(digest_size=8)


def file_digest(path):
    digest = new_digest()
    try:
        with open(path, 'rb') as f:
            for chunk in iter(lambda: f.read(1 << 20), b''):
                digest.update(chunk)
    except (IOError, OSError) as exc:
        raise CfamcPersistenceError(path, exc)
    return digest.hexdigest()


class FrameFileWriter(object):
    """
    Streams records into one split file. The record count is fixed up front
    and checked on close.

    >>> with FrameFileWriter(path, frame_len=1024, n_ru=3, record_count=n) as writer:
    >>>     writer.write(records)
    >>> writer.checksum
    '9c1f...'

    """

    def __init__(self, path, frame_len, n_ru, record_count):
        self.path = str(path)
        self.frame_len = frame_len
        self.n_ru = n_ru
        self.record_count = record_count
        self.dtype = record_dtype(n_ru, frame_len)
        self.written = 0
        self.checksum = None
        self._digest = new_digest()
        self._file = None

    def __enter__(self):
        try:
            self._file = open(self.path, 'wb')
        except (IOError, OSError) as exc:
            raise CfamcPersistenceError(self.path, exc)
        self._write(HEADER.pack(MAGIC, FORMAT_VERSION, self.frame_len,
                                self.n_ru, self.record_count))
        return self

    def write(self, records):
        if records.dtype != self.dtype:
            raise CfamcPersistenceError(self.path, 'record layout mismatch')
        self._write(records.tobytes())
        self.written += records.size

    def _write(self, data):
        try:
            self._file.write(data)
        except (IOError, OSError) as exc:
            raise CfamcPersistenceError(self.path, exc)
        self._digest.update(data)

    def __exit__(self, exception, exception_msg, tb):
        self._file.close()
        if exception:
            logger.error('Error while writing {}: file is incomplete.'.format(self.path))
            return
        if self.written != self.record_count:
            raise CfamcPersistenceError(self.path, 'wrote {} of {} records'.format(
                self.written, self.record_count))
        self.checksum = self._digest.hexdigest()


def read_frame_file(path, expected_checksum=None):
    """
    Reads a whole split file.

    Args:
        path (str): split file
        expected_checksum (str): hex digest from the manifest; verified
            when given

    Returns:
        (``np.ndarray``): structured record array, see :any:`record_dtype`,
        backed by one writable buffer

    Raises:
        :class:`CfamcCorruptDataError`: checksum or header mismatch
    """
    try:
        with open(path, 'rb') as f:
            data = bytearray(os.fstat(f.fileno()).st_size)
            f.readinto(data)
    except (IOError, OSError) as exc:
        raise CfamcPersistenceError(path, exc)

    if expected_checksum is not None:
        digest = new_digest()
        digest.update(data)
        if digest.hexdigest() != expected_checksum:
            raise CfamcCorruptDataError(path)

    if len(data) < HEADER.size:
        raise CfamcCorruptDataError(path, 'truncated header')
    magic, version, frame_len, n_ru, count = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CfamcCorruptDataError(path, 'bad magic {!r}'.format(magic))
    if version != FORMAT_VERSION:
        raise CfamcCorruptDataError(path, 'unsupported format_version {}'.format(version))
    dtype = record_dtype(n_ru, frame_len)
    if len(data) != HEADER.size + count * dtype.itemsize:
        raise CfamcCorruptDataError(path, 'size does not match record_count {}'.format(count))
    return np.frombuffer(data, dtype=dtype, count=count, offset=HEADER.size)
