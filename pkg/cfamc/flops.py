"""
Analytic FLOP accounting.

Convention: one multiply-accumulate is 2 FLOPs; bias adds are absorbed in
the MAC count. Pooling, activations, softmax, concatenation, EGC and input
normalisation cost 0.

>>> report = estimate_model_flops(ModelSpec('central', 128, 5, n_ru=3))
>>> report.total
12797696
>>> report.mflops
12.797696

Counts come from the layer graph actually built for a spec: forward hooks
on every ``Conv2d`` and ``Linear`` record output shapes during one
zero-input pass, and :any:`flops_conv` / :any:`flops_dense` turn them into
FLOPs.

"""

import csv
from collections import OrderedDict

import torch
from torch import nn
import yaml

from cfamc.base import BaseObject
from cfamc.exceptions import CfamcValueError, CfamcPersistenceError
from cfamc.model.spec import ModelSpec, ModelKind, Placement
from cfamc.model.models import assemble_central, assemble_ru, assemble_du_feature
from cfamc.model.layers import VotingHead
from cfamc.utils.mixins import parameter_count
from cfamc.utils.coerce import to_builtin

CONVENTION = ('1 MAC = 2 FLOPs; pooling, activation, softmax, concatenation, '
              'EGC and input normalisation count as 0')
CSV_FIELDS = ('layer', 'type', 'output_shape', 'flops', 'placement')


def _check_dims(**dims):
    bad = dict((k, v) for k, v in dims.items() if int(v) < 1)
    if bad:
        raise CfamcValueError('dimensions >= 1', bad)


def flops_dense(n_in, n_out):
    """
    >>> flops_dense(128, 128)
    32768
    """
    _check_dims(n_in=n_in, n_out=n_out)
    return 2 * n_in * n_out


def flops_conv(h_out, w_out, c_in, c_out, k_h, k_w):
    """
    >>> flops_conv(8, 2, 1, 4, 3, 1)
    384
    """
    _check_dims(h_out=h_out, w_out=w_out, c_in=c_in, c_out=c_out, k_h=k_h, k_w=k_w)
    return 2 * h_out * w_out * c_out * k_h * k_w * c_in


class LayerFlops(BaseObject):

    def __init__(self, name, layer_type, output_shape, flops, placement):
        self.name = name
        self.layer_type = layer_type
        self.output_shape = tuple(output_shape)
        self.flops = flops
        self.placement = placement

    def as_row(self):
        return OrderedDict([('layer', self.name), ('type', self.layer_type),
                            ('output_shape', 'x'.join(str(d) for d in self.output_shape)),
                            ('flops', self.flops), ('placement', self.placement.value)])

    def __repr__(self):
        return super(LayerFlops, self).__repr__(data={'name': self.name, 'flops': self.flops})


class FlopReport(BaseObject):
    """
    Per-layer FLOPs of one spec and their per-placement totals.

    RU layers are listed once; ``total = n_ru * per_ru + du``.
    """

    def __init__(self, spec, layers, n_ru):
        self.spec = spec
        self.layers = list(layers)
        self.n_ru = n_ru

    @property
    def per_ru(self):
        return sum(l.flops for l in self.layers if l.placement is Placement.RU)

    @property
    def du(self):
        return sum(l.flops for l in self.layers if l.placement is Placement.DU)

    @property
    def total(self):
        return self.n_ru * self.per_ru + self.du

    @property
    def mflops(self):
        return self.total / 1e6

    def block_total(self, prefix):
        return sum(l.flops for l in self.layers if l.name.startswith(prefix))

    def rows(self):
        return [l.as_row() for l in self.layers]

    def as_dict(self):
        return OrderedDict([('spec', self.spec.spec_id), ('convention', CONVENTION),
                            ('n_ru', self.n_ru), ('per_ru_flops', self.per_ru),
                            ('du_flops', self.du), ('total_flops', self.total),
                            ('mflops', self.mflops)])

    def write_csv(self, path):
        """ Per-layer CSV; the first line states the FLOP convention """
        try:
            with open(path, 'w', newline='') as f:
                f.write('# {}\n'.format(CONVENTION))
                writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
                writer.writeheader()
                writer.writerows(self.rows())
        except (IOError, OSError) as exc:
            raise CfamcPersistenceError(path, exc)
        return path

    def write_yaml(self, path):
        data = dict(self.as_dict())
        data['layers'] = [dict(r) for r in self.rows()]
        try:
            with open(path, 'w') as f:
                yaml.safe_dump(to_builtin(data), f, sort_keys=False)
        except (IOError, OSError) as exc:
            raise CfamcPersistenceError(path, exc)
        return path

    def __repr__(self):
        return super(FlopReport, self).__repr__(data={'spec': self.spec.spec_id,
                                                      'mflops': round(self.mflops, 3)})


def _layer_flops(module, output):
    if isinstance(module, nn.Conv2d):
        _, c_out, h_out, w_out = output.shape
        k_h, k_w = module.kernel_size
        return flops_conv(h_out, w_out, module.in_channels // module.groups, c_out, k_h, k_w)
    return flops_dense(module.in_features, module.out_features)


def count_module_flops(module, x, placement, prefix=''):
    """
    Runs ``module`` once on ``x`` and returns one :any:`LayerFlops` per
    conv/dense layer, in execution order.
    """
    layers, handles = [], []
    names = dict((m, n) for n, m in module.named_modules())

    def hook(layer, inputs, output):
        name = '{}{}'.format(prefix, names[layer])
        layers.append(LayerFlops(name, type(layer).__name__, output.shape[1:],
                                 _layer_flops(layer, output), placement))

    for layer in module.modules():
        if isinstance(layer, (nn.Conv2d, nn.Linear)):
            handles.append(layer.register_forward_hook(hook))
    try:
        with torch.no_grad():
            module(x)
    finally:
        for handle in handles:
            handle.remove()
    return layers


def _classifier_layers(spec, n_ru, placement, prefix):
    if spec.kind is ModelKind.DU_FEATURE:
        model = assemble_du_feature(spec)
        x = torch.zeros(1, n_ru, spec.input_size, 2)
    elif placement is Placement.RU:
        model = assemble_ru(spec)
        x = torch.zeros(1, spec.input_size, 2)
    else:
        model = assemble_central(spec)
        x = torch.zeros(1, spec.n_ru, spec.input_size, 2)
    return count_module_flops(model, x, placement, prefix)


def _voting_layers(spec, prefix='voting.'):
    head = VotingHead(spec.voting_input_length, spec.n_classes, spec.head_width)
    return count_module_flops(head, torch.zeros(1, spec.voting_input_length),
                              Placement.DU, prefix)


def estimate_model_flops(spec):
    """
    FLOPs of one inference.

    Args:
        spec (:any:`ModelSpec`): any kind

    Returns:
        (:any:`FlopReport`): report

    Raises:
        :class:`CfamcValueError`: invalid spec
    """
    if not isinstance(spec, ModelSpec):
        raise CfamcValueError(ModelSpec, type(spec))
    spec.validate()
    kind = spec.kind
    if kind is ModelKind.CENTRAL:
        return FlopReport(spec, _classifier_layers(spec, spec.n_ru, Placement.DU, ''), spec.n_ru)
    if kind is ModelKind.RU:
        return FlopReport(spec, _classifier_layers(spec, 1, Placement.RU, ''), 1)
    if kind is ModelKind.DU_FEATURE:
        return FlopReport(spec, _classifier_layers(spec, spec.n_ru, Placement.DU, ''), spec.n_ru)
    if kind is ModelKind.VOTING:
        return FlopReport(spec, _voting_layers(spec, ''), spec.n_ru)

    layers = []
    if spec.n_ru > 0:
        layers += _classifier_layers(spec.ru_spec(), 1, Placement.RU, 'ru_model.')
    if kind is ModelKind.HYBRID:
        layers += _classifier_layers(spec.du_spec(), max(spec.n_ru, 1), Placement.DU,
                                     'du_model.')
    layers += _voting_layers(spec)
    return FlopReport(spec, layers, spec.n_ru)
