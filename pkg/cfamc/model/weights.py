"""
Weight bundles, checkpoints and weight transfer.

Checkpoint layout, all little-endian::

    magic "CFAMCW" (6 bytes), format_version u32,
    spec_len u32, spec (YAML, utf-8),
    tensor_count u32, then per tensor:
        key_len u16, key (utf-8), dtype u8 (1 = f32), ndim u8,
        shape u32[ndim], frozen u8,
        provenance_len u16, provenance (utf-8),
        data f32[prod(shape)]
    digest (8 bytes, BLAKE2b of everything before it)

>>> bundle = WeightBundle.from_module(central)
>>> bundle.save('central.ckpt')
>>> WeightBundle.load('central.ckpt').checksum() == bundle.checksum()
True

"""

import struct
from collections import OrderedDict

import numpy as np
import torch
import yaml

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcIncompatibleSpecError, CfamcPersistenceError
from cfamc.exceptions import CfamcCorruptDataError, CfamcValueError
from cfamc.dataset.fileformat import new_digest
from cfamc.model.spec import ModelSpec
from cfamc.utils.coerce import to_builtin
from cfamc.utils.mixins import block_of, BLOCKS
from cfamc.utils.logger import logger

MAGIC = b'CFAMCW'
FORMAT_VERSION = 1
DTYPE_F32 = 1
DIGEST_SIZE = 8


class WeightBundle(BaseObject):
    """
    Named parameter arrays of one model with per-key frozen flags and
    provenance (donor spec id or ``random-init(seed)``).

    Attributes:
        spec (:any:`ModelSpec`): owning model spec
        tensors (``OrderedDict``): key -> float32 array
        frozen (``dict``): key -> bool
        provenance (``dict``): key -> str
    """

    def __init__(self, spec, tensors, frozen=None, provenance=None):
        self.spec = spec
        self.tensors = OrderedDict((k, np.ascontiguousarray(v, dtype=np.float32))
                                   for k, v in tensors.items())
        frozen = frozen or {}
        provenance = provenance or {}
        self.frozen = dict((k, bool(frozen.get(k, False))) for k in self.tensors)
        self.provenance = dict((k, provenance.get(k, 'unknown')) for k in self.tensors)

    @classmethod
    def from_module(cls, module):
        """ Snapshot of a model's parameters """
        frozen = dict((k, not p.requires_grad) for k, p in module.named_parameters())
        tensors = OrderedDict((k, p.detach().cpu().numpy().copy())
                              for k, p in module.named_parameters())
        return cls(module.spec, tensors, frozen, getattr(module, 'provenance', {}))

    def keys(self, blocks=None):
        return [k for k in self.tensors if blocks is None or block_of(k) in blocks]

    def select(self, blocks):
        """ Sub-bundle with the keys of ``blocks`` """
        keys = self.keys(blocks)
        return WeightBundle(self.spec, OrderedDict((k, self.tensors[k]) for k in keys),
                            self.frozen, self.provenance)

    def freeze(self, blocks=None):
        for key in self.keys(blocks):
            self.frozen[key] = True
        return self

    def apply_to(self, module, strict=True):
        """
        Copies the arrays into ``module``'s parameters and sets
        ``requires_grad`` from the frozen flags.

        Raises:
            :class:`CfamcIncompatibleSpecError`: missing keys or shape
                mismatch
        """
        parameters = dict(module.named_parameters())
        bad = [k for k, v in self.tensors.items()
               if k not in parameters or tuple(parameters[k].shape) != v.shape]
        if strict:
            bad += [k for k in parameters if k not in self.tensors]
        if bad:
            raise CfamcIncompatibleSpecError(bad)
        with torch.no_grad():
            for key, value in self.tensors.items():
                parameter = parameters[key]
                parameter.copy_(torch.from_numpy(value).to(parameter.dtype))
                parameter.requires_grad_(not self.frozen[key])
        if hasattr(module, 'provenance'):
            module.provenance.update(self.provenance)
        return module

    def checksum(self):
        """ 64-bit hex digest over keys, shapes and raw data in key order """
        digest = new_digest()
        for key in sorted(self.tensors):
            value = self.tensors[key]
            digest.update(key.encode('utf-8'))
            digest.update(struct.pack('<{}I'.format(value.ndim), *value.shape))
            digest.update(value.astype('<f4').tobytes())
        return digest.hexdigest()

    def save(self, path):
        spec_blob = yaml.safe_dump(to_builtin(self.spec.as_dict()), sort_keys=False).encode('utf-8')
        chunks = [MAGIC, struct.pack('<II', FORMAT_VERSION, len(spec_blob)), spec_blob,
                  struct.pack('<I', len(self.tensors))]
        for key, value in self.tensors.items():
            key_blob = key.encode('utf-8')
            provenance_blob = self.provenance[key].encode('utf-8')
            chunks.append(struct.pack('<H', len(key_blob)) + key_blob)
            chunks.append(struct.pack('<BB', DTYPE_F32, value.ndim))
            chunks.append(struct.pack('<{}I'.format(value.ndim), *value.shape))
            chunks.append(struct.pack('<B', int(self.frozen[key])))
            chunks.append(struct.pack('<H', len(provenance_blob)) + provenance_blob)
            chunks.append(value.astype('<f4').tobytes())
        data = b''.join(chunks)
        digest = new_digest()
        digest.update(data)
        try:
            with open(path, 'wb') as f:
                f.write(data)
                f.write(digest.digest())
        except (IOError, OSError) as exc:
            raise CfamcPersistenceError(path, exc)
        logger.debug('Checkpoint written: {}'.format(path))
        return path

    @classmethod
    def load(cls, path):
        """
        Raises:
            :class:`CfamcCorruptDataError`: digest or layout mismatch
        """
        try:
            with open(path, 'rb') as f:
                data = f.read()
        except (IOError, OSError) as exc:
            raise CfamcPersistenceError(path, exc)
        if len(data) < len(MAGIC) + DIGEST_SIZE or data[:len(MAGIC)] != MAGIC:
            raise CfamcCorruptDataError(path, 'not a cfamc checkpoint')
        body, stored = data[:-DIGEST_SIZE], data[-DIGEST_SIZE:]
        digest = new_digest()
        digest.update(body)
        if digest.digest() != stored:
            raise CfamcCorruptDataError(path)
        try:
            return cls._parse(body)
        except (struct.error, ValueError, KeyError, TypeError) as exc:
            raise CfamcCorruptDataError(path, exc)

    @classmethod
    def _parse(cls, body):
        offset = len(MAGIC)

        def take(fmt):
            nonlocal offset
            values = struct.unpack_from(fmt, body, offset)
            offset += struct.calcsize(fmt)
            return values

        def take_bytes(n):
            nonlocal offset
            chunk = body[offset:offset + n]
            offset += n
            return chunk

        version, spec_len = take('<II')
        if version != FORMAT_VERSION:
            raise ValueError('unsupported format_version {}'.format(version))
        spec = ModelSpec.from_dict(yaml.safe_load(take_bytes(spec_len).decode('utf-8')))
        count, = take('<I')
        tensors, frozen, provenance = OrderedDict(), {}, {}
        for _ in range(count):
            key_len, = take('<H')
            key = take_bytes(key_len).decode('utf-8')
            dtype, ndim = take('<BB')
            if dtype != DTYPE_F32:
                raise ValueError('unsupported dtype code {}'.format(dtype))
            shape = take('<{}I'.format(ndim))
            frozen[key] = bool(take('<B')[0])
            provenance_len, = take('<H')
            provenance[key] = take_bytes(provenance_len).decode('utf-8')
            size = int(np.prod(shape)) * 4
            tensors[key] = np.frombuffer(take_bytes(size), dtype='<f4').reshape(shape).copy()
        if offset != len(body):
            raise ValueError('trailing bytes')
        return cls(spec, tensors, frozen, provenance)

    def __eq__(self, other):
        return (isinstance(other, WeightBundle) and self.spec == other.spec
                and self.checksum() == other.checksum() and self.frozen == other.frozen)

    def __repr__(self):
        return super(WeightBundle, self).__repr__(data={'spec': self.spec.spec_id,
                                                        'tensors': len(self.tensors),
                                                        'frozen': sum(self.frozen.values())})


def transfer_weights(donor, recipient, blocks):
    """
    Copies the ``blocks`` of a donor bundle into ``recipient`` bit-exactly
    and freezes them.

    >>> ru_model = assemble_ru(spec.ru_spec(), seed=2)
    >>> transfer_weights(WeightBundle.from_module(central), ru_model,
    ...                  {'feature_extraction', 'decision'})

    Args:
        donor (:any:`WeightBundle`): usually a trained central model
        recipient (``nn.Module``): model with ``spec`` and matching keys
        blocks (set): subset of ``feature_extraction``, ``decision``,
            ``voting``

    Returns:
        recipient

    Raises:
        :class:`CfamcIncompatibleSpecError`: specs disagree on input size
            or stacks, or a key is missing or mis-shaped
    """
    blocks = set(blocks)
    if not blocks or not blocks <= set(BLOCKS):
        raise CfamcValueError(BLOCKS, sorted(blocks))
    keys = donor.keys(blocks)
    parameters = dict(recipient.named_parameters())
    recipient_keys = [k for k in parameters if block_of(k) in blocks]

    bad = [k for k in keys if k not in parameters
           or tuple(parameters[k].shape) != donor.tensors[k].shape]
    bad += [k for k in recipient_keys if k not in donor.tensors]
    donor_spec, recipient_spec = donor.spec, recipient.spec
    geometry = ('input_size', 'n_stacks', 'n_filters')
    mismatched = [g for g in geometry
                  if getattr(donor_spec, g) != getattr(recipient_spec, g)]
    if mismatched and not bad:
        bad = keys
    if bad:
        reason = 'shape mismatch'
        if mismatched:
            reason = '{} {} -> {}'.format('/'.join(mismatched), donor_spec.spec_id,
                                          recipient_spec.spec_id)
        raise CfamcIncompatibleSpecError(sorted(set(bad)), reason)

    with torch.no_grad():
        for key in keys:
            parameter = parameters[key]
            parameter.copy_(torch.from_numpy(donor.tensors[key]).to(parameter.dtype))
            parameter.requires_grad_(False)
    if not hasattr(recipient, 'provenance'):
        recipient.provenance = {}
    for key in keys:
        recipient.provenance[key] = donor_spec.spec_id
    logger.debug('Transferred {} from {} to {}'.format(
        sorted(blocks), donor_spec.spec_id, recipient_spec.spec_id))
    return recipient
