"""
Synthetic cell-free dataset: generation, on-disk format and loaders.

"""

from cfamc.dataset.seeding import hash64, splitmix64, child_seed
from cfamc.dataset.seeding import make_record_id, split_record_id
from cfamc.dataset.fileformat import FrameFileWriter, read_frame_file, record_dtype
from cfamc.dataset.fileformat import FORMAT_VERSION, SPLIT_CODES
from cfamc.dataset.config import DatasetConfig, DatasetManifest, FrameRecord, SPLITS
from cfamc.dataset.generate import generate_dataset, generate_pair_arrays, generate_frame
from cfamc.dataset.generate import split_membership, split_assignment, load_split, read_split
from cfamc.dataset.stream import SplitStream, Batch, FrameArrayDataset
