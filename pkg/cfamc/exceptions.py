"""
Use these exceptions to `try` against specific cfamc errors.

>>> from cfamc.exceptions import CfamcCorruptDataError
>>> try:
...     batches = list(load_split(manifest, 'test', batch_size=64))
... except CfamcCorruptDataError as exc:
...     print('Regenerate {}'.format(exc.path))
...     raise

Every exception also derives from the closest builtin, so
``except ValueError`` keeps working for invalid arguments.

"""  #


class CfamcException(Exception):
    """ cfamc Base Exception """


class CfamcTypeError(CfamcException, TypeError):
    """ cfamc Type Exception """
    def __init__(self, type_expected, type_received='not reported'):
        msg = 'expected [{}], got [{}]'.format(type_expected, type_received)
        super(CfamcTypeError, self).__init__(msg)


class CfamcValueError(CfamcException, ValueError):
    """ Invalid argument """
    def __init__(self, value_expected, value_received='not reported'):
        msg = 'expected [{}], got [{}]'.format(value_expected, value_received)
        super(CfamcValueError, self).__init__(msg)


class CfamcConfigError(CfamcValueError):
    """ Invalid experiment configuration """


class CfamcCoerceError(CfamcException, ValueError):
    """ Coerce Error """
    def __init__(self, value, target_type):
        msg = 'Could not cast value:{} to target_type:{}'.format(value, target_type)
        super(CfamcCoerceError, self).__init__(msg)


class CfamcNotFound(CfamcException, KeyError):
    """ Lookup of a name, pair or key that does not exist """
    def __init__(self, what, key):
        msg = '{} not found [{}]'.format(what, key)
        super(CfamcNotFound, self).__init__(msg)

    def __str__(self):
        return self.args[0]


class CfamcPersistenceError(CfamcException, IOError):
    """ Reading or writing a file failed """
    def __init__(self, path, reason=''):
        self.path = str(path)
        msg = 'I/O failure [path:{}] {}'.format(self.path, reason).strip()
        super(CfamcPersistenceError, self).__init__(msg)

    def __str__(self):
        return self.args[0]


class CfamcCorruptDataError(CfamcException):
    """ File contents do not match the recorded checksum or format """
    def __init__(self, path, reason='checksum mismatch'):
        self.path = str(path)
        msg = 'corrupt data [path:{}]: {}'.format(self.path, reason)
        super(CfamcCorruptDataError, self).__init__(msg)


class CfamcContractError(CfamcException):
    """ A precondition of an operation was violated """


class CfamcIncompatibleSpecError(CfamcException, ValueError):
    """ Parameter shapes or keys of two models do not line up """
    def __init__(self, keys, reason='shape mismatch'):
        self.keys = list(keys)
        msg = 'incompatible spec ({}): {}'.format(reason, ', '.join(self.keys))
        super(CfamcIncompatibleSpecError, self).__init__(msg)


class CfamcDivergenceError(CfamcException, ArithmeticError):
    """ Training loss became NaN or infinite """
    def __init__(self, epoch, batch, loss=float('nan')):
        self.epoch = epoch
        self.batch = batch
        msg = 'training diverged [epoch:{}] [batch:{}] [loss:{}]'.format(epoch, batch, loss)
        super(CfamcDivergenceError, self).__init__(msg)


class CfamcPartialResultsError(CfamcException):
    """ A Monte-Carlo run failed; ``completed`` holds the finished runs """
    def __init__(self, completed, cause):
        self.completed = list(completed)
        self.cause = cause
        msg = 'run {} failed after {} completed run(s): {}'.format(
            len(self.completed), len(self.completed), cause)
        super(CfamcPartialResultsError, self).__init__(msg)
