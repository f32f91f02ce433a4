"""
Training: early-stopped supervised training and the three pipelines.

"""

from cfamc.training.trainer import Hyperparams, TrainResult, train_supervised
from cfamc.training.trainer import select_best_epoch, accuracy
from cfamc.training.phase import TrainingPhase, frozen_fingerprint
from cfamc.training.pipelines import DataStreams, PipelineResult
from cfamc.training.pipelines import train_central_pipeline, train_distributed_pipeline
from cfamc.training.pipelines import train_hybrid_pipeline, train_ru_phase, train_du_phase
