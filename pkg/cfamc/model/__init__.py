"""
ResNet classifier and the central, distributed and hybrid topologies.

>>> from cfamc.model import ModelSpec, assemble_central
>>> model = assemble_central(ModelSpec('central', 128, 5, n_ru=3))

"""

from cfamc.model.spec import ModelSpec, ModelKind, Placement, SoftDecision
from cfamc.model.spec import INPUT_SIZES, STACK_RANGE, feature_length
from cfamc.model.layers import clip_input, EqualGainCombiner, InputLayer
from cfamc.model.layers import ResidualUnit, ResidualStack, FeatureExtractor
from cfamc.model.layers import DecisionHead, VotingHead
from cfamc.model.layers import build_feature_extractor, build_decision_head
from cfamc.model.models import ResNetClassifier, CentralModel, DUFeatureModel
from cfamc.model.models import DistributedModel, HybridModel, build_model, restore_model
from cfamc.model.models import assemble_central, assemble_ru, assemble_du_feature
from cfamc.model.models import assemble_distributed, assemble_hybrid
from cfamc.model.weights import WeightBundle, transfer_weights
from cfamc.utils.mixins import parameter_count, block_of
