""" Collection of Class Mixins """

from collections import OrderedDict

import torch

from cfamc.exceptions import CfamcContractError

BLOCKS = ('feature_extraction', 'decision', 'voting')


def block_of(key):
    """ Block a parameter key belongs to, e.g. ``ru_model.decision.0.weight -> decision`` """
    for part in key.split('.'):
        if part in BLOCKS:
            return part
    return None


class ClassifierMixin(object):

    """ Adds prediction, freezing and provenance helpers to torch classifiers.
    This is for class inheritance only, used to reduce duplication.
    Classes using it define ``spec`` and a ``forward`` returning logits.
    """

    def init_provenance(self, label):
        self.provenance = OrderedDict((key, label) for key in self.state_dict())

    def soft_decision(self, x):
        """ Softmax class probabilities, shape (B, n_classes) """
        with torch.no_grad():
            return torch.softmax(self(x), dim=-1)

    def predict(self, x):
        """ Hard decisions (argmax), shape (B,) """
        return self.soft_decision(x).argmax(dim=-1)

    def predict_batch(self, batch):
        """
        Evaluation protocol: ``(labels, probs)`` as numpy arrays for a
        :any:`Batch` or a ``(B, n_ru, L, 2)`` input.
        """
        x = batch.x if hasattr(batch, 'x') else batch
        was_training = self.training
        self.eval()
        try:
            x = torch.as_tensor(x, dtype=self.dtype)
            probs = self.soft_decision(x)
        finally:
            self.train(was_training)
        return probs.argmax(dim=-1).numpy(), probs.numpy()

    @property
    def n_classes(self):
        return self.spec.n_classes

    @property
    def dtype(self):
        return next(self.parameters()).dtype

    def trainable_parameters(self):
        return [p for p in self.parameters() if p.requires_grad]

    def frozen_keys(self):
        return [k for k, p in self.named_parameters() if not p.requires_grad]

    def freeze(self, blocks=None):
        """ Freezes every parameter, or those of the given blocks """
        for key, parameter in self.named_parameters():
            if blocks is None or block_of(key) in blocks:
                parameter.requires_grad_(False)
        return self

    def require_frozen(self, what):
        unfrozen = [k for k, p in self.named_parameters() if p.requires_grad]
        if unfrozen:
            raise CfamcContractError('{} must be frozen, trainable: {}'.format(
                what, ', '.join(unfrozen)))

    def require_trainable(self):
        if not self.trainable_parameters():
            raise CfamcContractError('{} has no trainable parameters'.format(self.spec.spec_id))

    def parameter_count(self, trainable_only=False):
        return parameter_count(self, trainable_only)


def parameter_count(module, trainable_only=False):
    """ Distinct parameters of a module; shared replicas count once """
    return sum(p.numel() for p in module.parameters()
               if p.requires_grad or not trainable_only)
