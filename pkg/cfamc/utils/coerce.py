"""
Type Casting Utilities

"""

import re

from cfamc.exceptions import CfamcCoerceError


def to_scheme(scheme_reference):
    """
    Coerces a scheme, scheme name or class id to a ModulationScheme.
    Names are matched loosely: case, spaces, dashes and underscores are
    ignored.

    >>> from cfamc.utils.coerce import to_scheme
    >>> to_scheme('QAM16')
    <ModulationScheme.QAM16: 2>
    >>> to_scheme('16-qam')
    <ModulationScheme.QAM16: 2>
    >>> to_scheme(0)
    <ModulationScheme.BPSK: 0>

    Args:
        scheme_reference ([``ModulationScheme``, ``str``, ``int``]): Scheme reference

    Returns:
        [``ModulationScheme``]: Scheme
    """
    from cfamc.signal.modulation import ModulationScheme

    if isinstance(scheme_reference, ModulationScheme):
        return scheme_reference
    if isinstance(scheme_reference, int) and not isinstance(scheme_reference, bool):
        try:
            return ModulationScheme(scheme_reference)
        except ValueError:
            raise CfamcCoerceError(scheme_reference, ModulationScheme)
    if isinstance(scheme_reference, str):
        loose_name = re.sub(r'[\s_\-]', '', scheme_reference).upper()
        # '16QAM' -> 'QAM16'
        match = re.match(r'^(\d+)QAM$', loose_name)
        if match:
            loose_name = 'QAM{}'.format(match.group(1))
        try:
            return ModulationScheme[loose_name]
        except KeyError:
            raise CfamcCoerceError(scheme_reference, ModulationScheme)
    raise CfamcCoerceError(scheme_reference, ModulationScheme)


def to_schemes(scheme_references):
    """ Same as to_scheme but for an iterable, order preserved """
    return tuple(to_scheme(s) for s in to_iterable(scheme_references))


def to_iterable(item_or_iterable):
    """
    Ensures input is iterable. Strings count as a single item.

    >>> from cfamc.utils.coerce import to_iterable
    >>> to_iterable(128)
    [128]

    Args:
        any (iterable, non-iterable)

    Returns:
        (`iterable`): Same as input
    """
    if hasattr(item_or_iterable, '__iter__') and not isinstance(item_or_iterable, str):
        return item_or_iterable
    else:
        return [item_or_iterable]


def to_snr_grid(grid_reference):
    """
    Coerces an SNR grid description to a tuple of floats.
    Accepts a list of values or a ``{start, stop, step}`` mapping, where
    ``stop`` is inclusive.

    >>> to_snr_grid({'start': -10, 'stop': 30, 'step': 2})[-1]
    30.0
    >>> to_snr_grid([10, 20, 30])
    (10.0, 20.0, 30.0)
    """
    if isinstance(grid_reference, dict):
        try:
            start = float(grid_reference['start'])
            stop = float(grid_reference['stop'])
            step = float(grid_reference['step'])
        except KeyError as exc:
            raise CfamcCoerceError(grid_reference, 'snr grid (missing {})'.format(exc))
        if step <= 0:
            raise CfamcCoerceError(grid_reference, 'snr grid with positive step')
        count = int(round((stop - start) / step)) + 1
        return tuple(start + step * i for i in range(count))
    try:
        return tuple(float(v) for v in to_iterable(grid_reference))
    except (TypeError, ValueError):
        raise CfamcCoerceError(grid_reference, 'snr grid')


def to_builtin(data):
    """
    Recursively converts mappings, sequences and numpy scalars to plain
    ``dict``, ``list``, ``int``, ``float`` so ``yaml.safe_dump`` accepts them.

    >>> to_builtin(OrderedDict([('a', (np.float32(1.5),))]))
    {'a': [1.5]}
    """
    if isinstance(data, dict):
        return dict((to_builtin(k), to_builtin(v)) for k, v in data.items())
    if isinstance(data, (list, tuple)):
        return [to_builtin(v) for v in data]
    if hasattr(data, 'tolist') and not isinstance(data, (str, bytes)):
        return to_builtin(data.tolist())
    return data
