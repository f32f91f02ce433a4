"""
Training phase context.

>>> with TrainingPhase('ru_donor', model=distributed):
...     train_supervised(distributed, train, val, hp)

Inside the context, errors are logged with the phase name and re-raised
with a ``phase`` attribute. When a model is given, its frozen parameters
are fingerprinted on entry and checked on a clean exit.

"""

from functools import wraps

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcContractError
from cfamc.dataset.fileformat import new_digest
from cfamc.utils.logger import logger


def frozen_fingerprint(model):
    """ Digest of every frozen parameter's bytes, by key """
    fingerprint = {}
    for key, parameter in model.named_parameters():
        if not parameter.requires_grad:
            digest = new_digest()
            digest.update(parameter.detach().cpu().numpy().tobytes())
            fingerprint[key] = digest.hexdigest()
    return fingerprint


class TrainingPhase(BaseObject):
    """
    Names a training phase for logging and error reporting.

    Args:
        name (str): phase name, e.g. ``central``, ``ru_donor``, ``voting``
        model (``nn.Module``): optional, frozen parameters must survive
            the phase unchanged
    """

    def __init__(self, name, model=None):
        self.name = name
        self.model = model
        self.fingerprint = None

    def __enter__(self):
        logger.info('Phase [{}] started'.format(self.name))
        if self.model is not None:
            self.fingerprint = frozen_fingerprint(self.model)
        return self

    def __exit__(self, exception, exception_msg, tb):
        if exception:
            logger.error('Error in phase [{}]: {}'.format(self.name, exception_msg))
            if exception_msg is not None and not hasattr(exception_msg, 'phase'):
                try:
                    exception_msg.phase = self.name
                except AttributeError:
                    pass
            return
        if self.model is not None:
            after = frozen_fingerprint(self.model)
            changed = sorted(k for k, v in self.fingerprint.items() if after.get(k) != v)
            if changed:
                raise CfamcContractError('phase [{}] modified frozen parameters: {}'.format(
                    self.name, ', '.join(changed)))
        logger.info('Phase [{}] done'.format(self.name))

    @staticmethod
    def ensure(name):
        """ Phase Decorator

        Decorate any function with ``@TrainingPhase.ensure('name')``
        and the function will run within a TrainingPhase context.

        >>> @TrainingPhase.ensure('voting')
        >>> def fit_voting(model, streams, hp):
        >>>     return train_supervised(model, streams.train, streams.val, hp)

        """
        def wrap(f):
            @wraps(f)
            def wrapped_f(*args, **kwargs):
                with TrainingPhase(name):
                    return_value = f(*args, **kwargs)
                return return_value
            return wrapped_f
        return wrap

    def __repr__(self):
        return super(TrainingPhase, self).__repr__(data={'name': self.name})
