""" cfamc.signal

Baseband frame generation, channel model and equal-gain combining.

>>> from cfamc.signal import modulate, make_snr_plan, apply_channel, egc_combine

"""

from cfamc.signal.modulation import ModulationScheme, N_CLASSES, IQFrame
from cfamc.signal.modulation import constellation, modulate, gray_to_binary
from cfamc.signal.channel import PlanMode, SNRPlan, INFINITE_SNR
from cfamc.signal.channel import make_snr_plan, apply_channel, egc_combine, measure_snr
from cfamc.signal.channel import snr_db_to_linear, snr_linear_to_db, mean_ru_snr_db
