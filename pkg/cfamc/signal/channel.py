"""
Flat-fading channel, per-RU SNR plans and equal-gain combining.

An :any:`SNRPlan` splits a target EGC SNR ``S`` over ``N`` RUs. With
positive shares ``s_i`` summing to ``10^(S/10)``, RU ``i`` gets amplitude
``a_i = s_i`` and noise variance ``sigma_i^2 = s_i``. The per-RU SNR is
then ``a_i^2 / sigma_i^2 = s_i`` and the EGC SNR is
``(sum a_i)^2 / sum sigma_i^2 = sum s_i``, so both the combined SNR and the
mean per-RU SNR ``S / N`` hold in closed form.

>>> plan = make_snr_plan(10, 3, 'equal', seed=0)
>>> plan.per_ru_snr_db
array([5.22878745, 5.22878745, 5.22878745])
>>> plan.egc_snr_db
10.0

"""

import enum
import math

import numpy as np

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcValueError

# Reported by measure_snr when the residual is exactly zero
INFINITE_SNR = float('inf')

# Standard deviation of the log-normal share spread in diverse mode
DIVERSE_SHARE_SIGMA = 0.5


class PlanMode(enum.Enum):
    EQUAL = 'equal'
    DIVERSE = 'diverse'


def snr_db_to_linear(snr_db):
    return 10.0 ** (snr_db / 10.0)


def snr_linear_to_db(snr_linear):
    if snr_linear <= 0:
        return -INFINITE_SNR
    return 10.0 * math.log10(snr_linear)


def mean_ru_snr_db(egc_snr_db, n_ru):
    """ Mean per-RU SNR of a plan, i.e. EGC SNR minus 10 log10(n_ru) """
    return egc_snr_db - 10.0 * math.log10(n_ru)


class SNRPlan(BaseObject):
    """
    Per-RU amplitudes and noise variances realising a target EGC SNR.

    Attributes:
        target_egc_snr_db (float): S
        n_ru (int): N
        mode (:any:`PlanMode`): equal or diverse share allocation
        per_ru_snr_linear (``np.ndarray``): s_i
        amplitudes (``np.ndarray``): a_i
        noise_vars (``np.ndarray``): sigma_i^2
    """

    def __init__(self, target_egc_snr_db, mode, per_ru_snr_linear, amplitudes, noise_vars):
        self.target_egc_snr_db = float(target_egc_snr_db)
        self.mode = PlanMode(mode)
        self.per_ru_snr_linear = _frozen(per_ru_snr_linear)
        self.amplitudes = _frozen(amplitudes)
        self.noise_vars = _frozen(noise_vars)
        self.n_ru = self.per_ru_snr_linear.size

    @classmethod
    def from_shares(cls, shares, mode=PlanMode.DIVERSE):
        """
        Rebuilds a plan from its per-RU SNR shares, e.g. as stored in a
        dataset record. The target is the share sum.
        """
        shares = np.asarray(shares, dtype=np.float64)
        if shares.size < 1 or np.any(shares <= 0):
            raise CfamcValueError('positive per-RU shares', shares)
        return cls(snr_linear_to_db(float(np.sum(shares))), mode, shares, shares, shares)

    @property
    def egc_snr_linear(self):
        """ Analytic EGC SNR (sum a_i)^2 / sum sigma_i^2 """
        return float(np.sum(self.amplitudes) ** 2 / np.sum(self.noise_vars))

    @property
    def egc_snr_db(self):
        return snr_linear_to_db(self.egc_snr_linear)

    @property
    def mean_ru_snr_linear(self):
        return float(np.mean(self.per_ru_snr_linear))

    @property
    def per_ru_snr_db(self):
        return 10.0 * np.log10(self.per_ru_snr_linear)

    def as_dict(self):
        return {'target_egc_snr_db': self.target_egc_snr_db,
                'mode': self.mode.value,
                'per_ru_snr_linear': [float(s) for s in self.per_ru_snr_linear]}

    def __repr__(self):
        return super(SNRPlan, self).__repr__(data={'target_egc_snr_db': self.target_egc_snr_db,
                                                   'n_ru': self.n_ru,
                                                   'mode': self.mode.value})


def _frozen(values):
    array = np.array(values, dtype=np.float64)
    array.setflags(write=False)
    return array


def make_snr_plan(target_egc_snr_db, n_ru, mode, seed):
    """
    Builds the share-based plan for ``n_ru`` RUs.

    In ``equal`` mode every RU gets ``10^(S/10) / N``. In ``diverse`` mode
    shares are ``exp(g_i)``, ``g_i ~ Normal(0, 0.5^2)``, rescaled to sum to
    ``10^(S/10)``.

    Args:
        target_egc_snr_db (float): S, in dB
        n_ru (int): N >= 1
        mode (str, :any:`PlanMode`): ``'equal'`` or ``'diverse'``
        seed (int): 64-bit seed, only used in diverse mode

    Returns:
        (:any:`SNRPlan`): Plan
    """
    if n_ru < 1:
        raise CfamcValueError('n_ru >= 1', n_ru)
    if not math.isfinite(target_egc_snr_db):
        raise CfamcValueError('finite target SNR', target_egc_snr_db)
    try:
        mode = PlanMode(mode)
    except ValueError:
        raise CfamcValueError([m.value for m in PlanMode], mode)

    total = snr_db_to_linear(target_egc_snr_db)
    if mode is PlanMode.EQUAL:
        shares = np.full(n_ru, total / n_ru)
    else:
        rng = np.random.default_rng(seed)
        weights = np.exp(rng.normal(0.0, DIVERSE_SHARE_SIGMA, size=n_ru))
        shares = total * weights / np.sum(weights)
    return SNRPlan(target_egc_snr_db, mode, shares, shares, shares)


def apply_channel(frame, amplitude, noise_var, seed):
    """
    Real flat-fading gain plus circularly-symmetric white Gaussian noise.

    ``out[k] = amplitude * in[k] + n[k]`` with ``E|n[k]|^2 = noise_var``,
    i.e. ``noise_var / 2`` per real dimension.

    >>> apply_channel(IQFrame([1 + 1j], ModulationScheme.QPSK), 2, 0, seed=0).samples
    array([2.+2.j])

    """
    if noise_var < 0:
        raise CfamcValueError('noise_var >= 0', noise_var)
    if amplitude < 0:
        raise CfamcValueError('amplitude >= 0', amplitude)
    rng = np.random.default_rng(seed)
    n = frame.length
    scale = math.sqrt(noise_var / 2.0)
    noise = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return frame.replace(amplitude * frame.samples + noise, seed=seed)


def egc_combine(frames):
    """
    Equal-gain combining: elementwise complex sum of the RU frames.

    Args:
        frames ([:any:`IQFrame`]): one frame per RU, equal lengths

    Returns:
        (:any:`IQFrame`): combined frame, ``ru_index`` cleared
    """
    frames = list(frames)
    if not frames:
        raise CfamcValueError('at least one frame', 0)
    lengths = set(f.length for f in frames)
    if len(lengths) != 1:
        raise CfamcValueError('frames of equal length', sorted(lengths))
    combined = np.sum([f.samples for f in frames], axis=0)
    return frames[0].replace(combined, ru_index=None)


def measure_snr(clean, noisy_scaled, amplitude):
    """
    Empirical SNR in dB of ``noisy_scaled`` against ``amplitude * clean``.

    Returns :any:`INFINITE_SNR` when the residual is exactly zero.
    """
    if clean.length != noisy_scaled.length:
        raise CfamcValueError('frames of equal length', (clean.length, noisy_scaled.length))
    signal_energy = clean.energy
    if signal_energy == 0:
        raise CfamcValueError('clean frame with nonzero energy', 0)
    residual = noisy_scaled.samples - amplitude * clean.samples
    noise_energy = float(np.mean(np.abs(residual) ** 2))
    if noise_energy == 0:
        return INFINITE_SNR
    return 10.0 * math.log10(amplitude ** 2 * signal_energy / noise_energy)
