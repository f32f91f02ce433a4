"""
Counter-based seed derivation.

Every random draw in the dataset and the training pipelines takes its seed
from :any:`hash64` over a master seed and a tuple of counters, so any frame
or run can be regenerated on its own and workers never share a stream.

``hash64(master, *words)`` starts from ``splitmix64(master)`` and folds each
word in with ``h = splitmix64(h ^ word)``, all arithmetic modulo 2^64.

>>> hash64(1, ROLE_DATA, 0, 0, 0) == hash64(1, ROLE_DATA, 0, 0, 0)
True

"""

MASK64 = 0xFFFFFFFFFFFFFFFF

# Role tags, the last word of a derivation
ROLE_DATA = 1
ROLE_PLAN = 2
ROLE_SPLIT = 3
ROLE_SHUFFLE = 4
ROLE_INIT = 5
ROLE_RUN = 6
ROLE_PHASE = 7
ROLE_NOISE = 16     # + RU index


def splitmix64(value):
    """ One SplitMix64 output step for state ``value`` """
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def hash64(master_seed, *words):
    h = splitmix64(int(master_seed) & MASK64)
    for word in words:
        h = splitmix64(h ^ (int(word) & MASK64))
    return h


def child_seed(master_seed, scheme_id, snr_index, frame_index, role):
    """ Seed of one draw of one frame of one (scheme, snr) pair """
    return hash64(master_seed, scheme_id, snr_index, frame_index, role)


def make_record_id(scheme_id, snr_index, frame_index):
    """ Packs a frame's grid position into its 64-bit record id """
    return (scheme_id << 48) | (snr_index << 32) | frame_index


def split_record_id(record_id):
    """ Inverse of make_record_id: (scheme_id, snr_index, frame_index) """
    return (record_id >> 48) & 0xFFFF, (record_id >> 32) & 0xFFFF, record_id & 0xFFFFFFFF
