"""
Modulation schemes, constellations and clean baseband frames.

>>> from cfamc.signal import ModulationScheme, constellation, modulate
>>> constellation(ModulationScheme.BPSK)
array([ 1.+0.j, -1.+0.j])
>>> frame = modulate(ModulationScheme.QAM16, 1024, seed=7)
>>> frame.length
1024

Constellations are indexed by their bit label: ``constellation(s)[b]`` is
the point carrying the ``bits_per_symbol`` bits of integer ``b``.

"""

import enum
import functools

import numpy as np

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcValueError


class ModulationScheme(enum.Enum):
    """
    The seven modulation classes. The enum value is the class id used as
    label on disk and as output index of every decision head.
    """

    BPSK = 0
    QPSK = 1
    QAM16 = 2
    QAM32 = 3
    QAM64 = 4
    QAM128 = 5
    QAM256 = 6

    @property
    def bits_per_symbol(self):
        return _BITS_PER_SYMBOL[self]

    @property
    def order(self):
        """ Constellation size, 2 ** bits_per_symbol """
        return 2 ** self.bits_per_symbol

    @property
    def is_cross(self):
        """ Odd bit counts above 3 use a cross layout """
        return self.bits_per_symbol > 3 and self.bits_per_symbol % 2 == 1


_BITS_PER_SYMBOL = {
    ModulationScheme.BPSK: 1,
    ModulationScheme.QPSK: 2,
    ModulationScheme.QAM16: 4,
    ModulationScheme.QAM32: 5,
    ModulationScheme.QAM64: 6,
    ModulationScheme.QAM128: 7,
    ModulationScheme.QAM256: 8,
}

N_CLASSES = len(ModulationScheme)


def gray_to_binary(gray):
    """ Position of a Gray-coded integer along its axis """
    binary = gray
    shift = gray >> 1
    while shift:
        binary ^= shift
        shift >>= 1
    return binary


def _pam_level(gray_bits, n_bits):
    """ Gray labelled PAM level in {-(2^n - 1), ..., 2^n - 1} """
    return 2 * gray_to_binary(gray_bits) - (2 ** n_bits - 1)


def _rectangular_grid(n_bits_i, n_bits_q):
    """ Unscaled Gray labelled grid; label = (i_bits << n_bits_q) | q_bits """
    points = []
    for label in range(2 ** (n_bits_i + n_bits_q)):
        i_bits = label >> n_bits_q
        q_bits = label & (2 ** n_bits_q - 1)
        points.append(complex(_pam_level(i_bits, n_bits_i), _pam_level(q_bits, n_bits_q)))
    return points


def _cross_grid(bits_per_symbol):
    """
    Cross constellation from a 2^(b+1) x 2^b rectangular grid.
    Columns beyond the cross half-width fold onto the top and bottom rows:
    (I, Q) -> (sign(I)|Q|, sign(Q)(|I| - 2^(b-1))), keeping their label.
    """
    n_bits_q = (bits_per_symbol - 1) // 2
    n_bits_i = n_bits_q + 1
    half_width = 3 * 2 ** (n_bits_q - 1)
    shift = 2 ** (n_bits_q - 1)
    points = []
    for point in _rectangular_grid(n_bits_i, n_bits_q):
        i, q = point.real, point.imag
        if abs(i) > half_width:
            point = complex(np.sign(i) * abs(q), np.sign(q) * (abs(i) - shift))
        points.append(point)
    return points


@functools.lru_cache(maxsize=None)
def _constellation(scheme):
    bits = scheme.bits_per_symbol
    if scheme is ModulationScheme.BPSK:
        points = [1 + 0j, -1 + 0j]
    elif scheme.is_cross:
        points = _cross_grid(bits)
    else:
        points = _rectangular_grid(bits // 2, bits // 2)
    points = np.asarray(points, dtype=np.complex128)
    points /= np.sqrt(np.mean(np.abs(points) ** 2))
    points.setflags(write=False)
    return points


def constellation(scheme):
    """
    Unit mean-energy, Gray labelled constellation of ``scheme``.

    Args:
        scheme (:any:`ModulationScheme`): Modulation

    Returns:
        ``np.ndarray``: complex128 points, indexed by bit label
    """
    return _constellation(scheme).copy()


class IQFrame(BaseObject):
    """
    Immutable sequence of complex baseband samples plus metadata.

    >>> frame = IQFrame(np.ones(4), ModulationScheme.BPSK, seed=3)
    >>> frame.length
    4
    >>> frame.as_real().shape
    (4, 2)

    Attributes:
        samples (``np.ndarray``): complex samples, read-only
        scheme (:any:`ModulationScheme`): label of the transmitted frame
        egc_snr_db (float): EGC-combined SNR the frame was generated for
        ru_index (int): RU the frame was received at, ``None`` for clean or
            combined frames
        seed (int): seed the samples were drawn with
    """

    def __init__(self, samples, scheme, egc_snr_db=None, ru_index=None, seed=None):
        samples = np.array(samples)
        if not np.iscomplexobj(samples):
            samples = samples.astype(np.complex128)
        if samples.ndim != 1 or samples.size == 0:
            raise CfamcValueError('non-empty 1-D sample sequence', samples.shape)
        samples.setflags(write=False)
        self.samples = samples
        self.scheme = scheme
        self.egc_snr_db = egc_snr_db
        self.ru_index = ru_index
        self.seed = seed

    @property
    def length(self):
        return self.samples.size

    def __len__(self):
        return self.length

    @property
    def energy(self):
        """ Mean per-sample energy E[|x|^2] """
        return float(np.mean(np.abs(self.samples) ** 2))

    def as_real(self, dtype=np.float32):
        """ (length, 2) real array with I in column 0 and Q in column 1 """
        return np.stack([self.samples.real, self.samples.imag], axis=-1).astype(dtype)

    def replace(self, samples, **meta):
        """ New frame with ``samples`` and this frame's metadata, updated by ``meta`` """
        values = {'scheme': self.scheme, 'egc_snr_db': self.egc_snr_db,
                  'ru_index': self.ru_index, 'seed': self.seed}
        values.update(meta)
        return IQFrame(samples, **values)

    def __eq__(self, other):
        return (isinstance(other, IQFrame)
                and self.samples.dtype == other.samples.dtype
                and self.samples.tobytes() == other.samples.tobytes()
                and self.scheme == other.scheme)

    def __hash__(self):
        return hash((self.samples.tobytes(), self.scheme))

    def __repr__(self):
        return super(IQFrame, self).__repr__(data={'scheme': self.scheme.name if self.scheme else None,
                                                   'length': self.length,
                                                   'ru': self.ru_index})


def modulate(scheme, n_symbols, seed):
    """
    Draws ``n_symbols`` i.i.d. uniform constellation points and divides the
    frame by one common factor so its mean energy is exactly 1. Samples are
    constellation points times that per-frame scale, which is 1 for BPSK and
    QPSK and close to 1 otherwise.

    Args:
        scheme (:any:`ModulationScheme`): Modulation
        n_symbols (int): Frame length, one sample per symbol
        seed (int): 64-bit seed

    Returns:
        (:any:`IQFrame`): Clean frame
    """
    if n_symbols <= 0:
        raise CfamcValueError('n_symbols > 0', n_symbols)
    points = _constellation(scheme)
    rng = np.random.default_rng(seed)
    samples = points[rng.integers(0, points.size, size=n_symbols)]
    samples = samples / np.sqrt(np.mean(np.abs(samples) ** 2))
    return IQFrame(samples, scheme, seed=seed)
