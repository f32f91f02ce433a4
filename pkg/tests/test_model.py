"""
Model Tests

Specs, layers, topologies, gradients, checkpoints and weight transfer.

"""

import os
import unittest

import numpy as np
import torch

from cfamc.exceptions import CfamcValueError, CfamcContractError
from cfamc.exceptions import CfamcIncompatibleSpecError, CfamcCorruptDataError
from cfamc.signal import ModulationScheme, modulate
from cfamc.model import ModelSpec, ModelKind, Placement, SoftDecision, feature_length
from cfamc.model import clip_input, InputLayer, VotingHead, build_feature_extractor
from cfamc.model import assemble_central, assemble_ru, assemble_du_feature
from cfamc.model import assemble_distributed, assemble_hybrid, build_model, restore_model
from cfamc.model import WeightBundle, transfer_weights, parameter_count, block_of
from cfamc.utils.logger import logger

from tests.test_utils import temp_dir, tiny_spec, random_frames


def setUpModule():
    logger.title('SETTING UP MODEL TESTS...')


def frozen_ru(seed=1, **changes):
    return assemble_ru(tiny_spec('ru', n_ru=1, **changes), seed=seed).freeze()


def frozen_du(seed=2, **changes):
    return assemble_du_feature(tiny_spec('du_feature', **changes), seed=seed).freeze()


######################
# SPEC
######################


class ModelSpecTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING MODEL SPEC...')

    def test_feature_length(self):
        self.assertEqual(feature_length(1024, 5), 2048)
        self.assertEqual(feature_length(128, 7), 64)
        self.assertEqual(ModelSpec('central', 512, 4, n_ru=3).feature_length, 2048)

    def test_pooling_infeasible(self):
        with self.assertRaises(CfamcValueError):
            ModelSpec('central', 8, 4)
        with self.assertRaises(CfamcValueError):
            ModelSpec('central', 128, 0)

    def test_spec_ids(self):
        central = ModelSpec('central', 128, 5, n_ru=3)
        self.assertEqual(central.spec_id, 'central-128x5')
        self.assertEqual(central.distributed(3).spec_id, 'distributed_ensemble-128x5-3ru')
        self.assertEqual(central.hybrid(256, 7, 3).spec_id, 'hybrid_ensemble-128x5+256x7-3ru')
        self.assertEqual(tiny_spec().spec_id, 'central-16x2-w4h8')

    def test_voting_lengths(self):
        central = ModelSpec('central', 128, 5, n_ru=3)
        self.assertEqual(central.distributed(3).voting_input_length, 21)
        self.assertEqual(central.distributed(6).voting_input_length, 42)
        self.assertEqual(central.hybrid(256, 7, 3).voting_input_length, 21 + 128)
        self.assertEqual(central.hybrid(256, 7, 0).voting_input_length, 128)

    def test_hybrid_needs_du_fields(self):
        with self.assertRaises(CfamcValueError):
            ModelSpec('hybrid_ensemble', 128, 5, n_ru=3)

    def test_ensembles_need_rus(self):
        with self.assertRaises(CfamcValueError):
            ModelSpec('distributed_ensemble', 128, 5, n_ru=0)
        ModelSpec('hybrid_ensemble', 128, 5, n_ru=0, du_input_size=256, du_stacks=7)

    def test_placement(self):
        self.assertIs(ModelSpec('ru', 128, 4).placement, Placement.RU)
        self.assertIs(ModelSpec('central', 128, 4).placement, Placement.DU)

    def test_dict_round_trip(self):
        spec = ModelSpec('central', 128, 5, n_ru=3).hybrid(512, 6, 3)
        again = ModelSpec.from_dict(spec.as_dict())
        self.assertEqual(again, spec)
        self.assertEqual(hash(again), hash(spec))
        self.assertEqual(spec.as_dict()['activation'], 'relu')

    def test_derived_specs(self):
        hybrid = ModelSpec('central', 128, 5, n_ru=3).hybrid(256, 7, 3)
        self.assertIs(hybrid.ru_spec().kind, ModelKind.RU)
        self.assertEqual(hybrid.du_spec().input_size, 256)
        self.assertEqual(hybrid.du_spec().n_stacks, 7)
        self.assertEqual(hybrid.ru_spec().donor_spec(n_ru=3).spec_id, 'central-128x5')


class SoftDecisionTests(unittest.TestCase):

    def test_label(self):
        decision = SoftDecision([0.1, 0.7, 0.05, 0.05, 0.04, 0.03, 0.03])
        self.assertIs(decision.label, ModulationScheme.QPSK)
        self.assertAlmostEqual(decision.confidence, 0.7)

    def test_rejects_bad_vectors(self):
        with self.assertRaises(CfamcValueError):
            SoftDecision([0.5, 0.6])
        with self.assertRaises(CfamcValueError):
            SoftDecision([1.2, -0.2])

    def test_from_batch(self):
        probs = torch.softmax(torch.randn(5, 7, dtype=torch.float64), dim=-1)
        decisions = SoftDecision.from_batch(probs)
        self.assertEqual(len(decisions), 5)
        self.assertEqual(decisions[2].index, int(probs[2].argmax()))


######################
# LAYERS
######################


class LayerTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING LAYERS...')

    def test_clip_frame(self):
        frame = modulate(ModulationScheme.QAM16, 64, seed=1)
        clipped = clip_input(frame, 16)
        self.assertEqual(clipped.length, 16)
        np.testing.assert_array_equal(clipped.samples, frame.samples[:16])

    def test_clip_tensor(self):
        x = torch.arange(40, dtype=torch.float32).reshape(1, 20, 2)
        np.testing.assert_array_equal(clip_input(x, 3).numpy(), x[:, :3].numpy())

    def test_clip_bounds(self):
        frame = modulate(ModulationScheme.BPSK, 8, seed=1)
        for n in (0, 9):
            with self.assertRaises(CfamcValueError):
                clip_input(frame, n)

    def test_input_normalisation(self):
        x = torch.as_tensor(random_frames(4, n_ru=1, frame_len=32)[:, 0] * 7.5)
        out = InputLayer(16)(x)
        self.assertEqual(tuple(out.shape), (4, 1, 16, 2))
        power = out.pow(2).sum(dim=-1).mean(dim=-1).squeeze(1)
        np.testing.assert_allclose(power.numpy(), np.ones(4), rtol=1e-5)

    def test_input_without_normalisation(self):
        x = torch.ones(2, 8, 2) * 3
        self.assertEqual(float(InputLayer(8, normalize=False)(x).max()), 3.0)

    def test_feature_extractor_shape(self):
        extractor = build_feature_extractor(64, 3, n_filters=4)
        out = extractor(torch.zeros(2, 1, 64, 2))
        self.assertEqual(tuple(out.shape), (2, extractor.feature_length))
        self.assertEqual(extractor.feature_length, 4 * 8 * 2)

    def test_averaging_head(self):
        head = VotingHead.averaging(3, n_classes=7, width=16)
        for c in range(7):
            one_hot = torch.zeros(1, 7)
            one_hot[0, c] = 1
            self.assertEqual(int(head(torch.cat([one_hot] * 3, dim=1)).argmax()), c)

    def test_block_of(self):
        self.assertEqual(block_of('ru_model.decision.0.weight'), 'decision')
        self.assertEqual(block_of('feature_extraction.1.unit1.conv1.bias'), 'feature_extraction')
        self.assertIsNone(block_of('combiner.scale'))


######################
# TOPOLOGIES
######################


class TopologyTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING TOPOLOGIES...')
        self.x = torch.as_tensor(random_frames(6, n_ru=3, frame_len=32, seed=4))

    def test_central_shape_and_softmax(self):
        model = assemble_central(tiny_spec(), seed=3)
        self.assertEqual(tuple(model(self.x).shape), (6, 2))
        probs = model.soft_decision(self.x)
        np.testing.assert_allclose(probs.sum(dim=-1).numpy(), np.ones(6), atol=1e-6)
        self.assertTrue(bool((probs >= 0).all()))

    def test_central_ignores_ru_order(self):
        model = assemble_central(tiny_spec(), seed=3)
        swapped = self.x[:, [2, 0, 1]]
        np.testing.assert_allclose(model(self.x).detach().numpy(),
                                   model(swapped).detach().numpy(), atol=1e-5)

    def test_central_checks_ru_count(self):
        model = assemble_central(tiny_spec(n_ru=2), seed=3)
        with self.assertRaises(CfamcValueError):
            model(self.x)

    def test_seeded_init(self):
        a = WeightBundle.from_module(assemble_central(tiny_spec(), seed=3))
        b = WeightBundle.from_module(assemble_central(tiny_spec(), seed=3))
        c = WeightBundle.from_module(assemble_central(tiny_spec(), seed=4))
        self.assertEqual(a.checksum(), b.checksum())
        self.assertNotEqual(a.checksum(), c.checksum())

    def test_wrong_kind(self):
        with self.assertRaises(CfamcValueError):
            assemble_central(tiny_spec('ru', n_ru=1))
        with self.assertRaises(CfamcValueError):
            build_model(tiny_spec().distributed(3))

    def test_distributed_needs_frozen_ru(self):
        ru_model = assemble_ru(tiny_spec('ru', n_ru=1), seed=1)
        with self.assertRaises(CfamcContractError):
            assemble_distributed(ru_model, 3)

    def test_distributed_concatenation(self):
        model = assemble_distributed(frozen_ru(), 3, seed=5)
        concatenated = model.concatenate(self.x)
        self.assertEqual(tuple(concatenated.shape), (6, 6))
        blocks = concatenated.reshape(6, 3, 2).sum(dim=-1).detach().numpy()
        np.testing.assert_allclose(blocks, np.ones((6, 3)), atol=1e-6)
        self.assertEqual([id(p) for p in model.trainable_parameters()],
                         [id(p) for p in model.voting.parameters()])

    def test_distributed_only_soft_decisions_reach_voting(self):
        model = assemble_distributed(frozen_ru(), 3, seed=5)
        expected = torch.cat([torch.softmax(model.ru_model(self.x[:, ru]), dim=-1)
                              for ru in range(3)], dim=1)
        np.testing.assert_allclose(model.concatenate(self.x).detach().numpy(),
                                   expected.detach().numpy(), atol=1e-6)

    def test_more_rus_only_change_voting(self):
        ru_model = frozen_ru()
        three = WeightBundle.from_module(assemble_distributed(ru_model, 3, seed=5))
        six = WeightBundle.from_module(assemble_distributed(ru_model, 6, seed=5))
        self.assertEqual(three.select({'feature_extraction', 'decision'}).checksum(),
                         six.select({'feature_extraction', 'decision'}).checksum())
        self.assertEqual(six.tensors['voting.0.weight'].shape[1], 12)
        self.assertEqual(three.tensors['voting.0.weight'].shape[1], 6)

    def test_averaging_voting(self):
        model = assemble_distributed(frozen_ru(), 3, averaging=True)
        probs = torch.stack([torch.softmax(model.ru_model(self.x[:, ru]), dim=-1)
                             for ru in range(3)]).mean(dim=0)
        np.testing.assert_array_equal(model.predict(self.x).numpy(), probs.argmax(dim=-1).numpy())

    def test_shared_replicas_count_once(self):
        ru_model = frozen_ru()
        model = assemble_distributed(ru_model, 3, seed=5)
        self.assertEqual(parameter_count(model),
                         parameter_count(ru_model) + parameter_count(model.voting))

    def test_hybrid(self):
        model = assemble_hybrid(frozen_ru(), frozen_du(), 3, frame_len=32, seed=6)
        self.assertIs(model.spec.kind, ModelKind.HYBRID)
        self.assertEqual(tuple(model.concatenate(self.x).shape),
                         (6, model.spec.voting_input_length))
        self.assertEqual(tuple(model(self.x).shape), (6, 2))

    def test_hybrid_without_rus(self):
        model = assemble_hybrid(None, frozen_du(), 0, seed=6)
        self.assertEqual(model.spec.voting_input_length, model.du_model.feature_length)
        self.assertEqual(tuple(model(self.x).shape), (6, 2))

    def test_hybrid_checks_frame_len(self):
        with self.assertRaises(CfamcValueError):
            assemble_hybrid(frozen_ru(), frozen_du(input_size=32), 3, frame_len=16)

    def test_hybrid_needs_frozen_du(self):
        du_model = assemble_du_feature(tiny_spec('du_feature'), seed=2)
        with self.assertRaises(CfamcContractError):
            assemble_hybrid(frozen_ru(), du_model, 3)

    def test_predict_batch(self):
        model = assemble_central(tiny_spec(), seed=3)
        labels, probs = model.predict_batch(self.x)
        self.assertEqual(labels.shape, (6,))
        self.assertEqual(probs.shape, (6, 2))
        self.assertTrue(model.training)


######################
# GRADIENTS
######################


class GradientTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING GRADIENTS...')

    def test_finite_differences(self):
        spec = tiny_spec(n_ru=1, input_size=8, n_stacks=1)
        model = assemble_central(spec, seed=8).double()
        x = torch.as_tensor(random_frames(4, n_ru=1, frame_len=8, seed=9), dtype=torch.float64)
        labels = torch.tensor([0, 1, 1, 0])
        criterion = torch.nn.CrossEntropyLoss()

        def loss():
            return criterion(model(x), labels)

        model.zero_grad()
        loss().backward()
        eps = 1e-6
        with torch.no_grad():
            for key, parameter in model.named_parameters():
                analytic = parameter.grad.clone().reshape(-1)
                flat = parameter.view(-1)
                for i in range(flat.numel()):
                    original = float(flat[i])
                    flat[i] = original + eps
                    plus = float(loss())
                    flat[i] = original - eps
                    minus = float(loss())
                    flat[i] = original
                    numeric = (plus - minus) / (2 * eps)
                    error = abs(numeric - float(analytic[i]))
                    scale = max(abs(numeric), abs(float(analytic[i])))
                    self.assertLessEqual(error, 1e-3 * scale + 1e-7,
                                         '{}[{}]: {} vs {}'.format(key, i, analytic[i], numeric))


######################
# WEIGHTS
######################


class WeightTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING WEIGHTS...')

    def test_checkpoint_round_trip(self):
        model = assemble_central(tiny_spec(), seed=3).freeze({'feature_extraction'})
        bundle = WeightBundle.from_module(model)
        with temp_dir() as folder:
            path = bundle.save(os.path.join(folder, 'central.ckpt'))
            loaded = WeightBundle.load(path)
        self.assertEqual(loaded, bundle)
        self.assertEqual(loaded.spec, bundle.spec)
        self.assertTrue(loaded.frozen['feature_extraction.0.entry.weight'])
        self.assertFalse(loaded.frozen['decision.0.weight'])
        self.assertEqual(loaded.provenance['decision.0.weight'], 'random-init(3)')

    def test_corrupt_checkpoint(self):
        bundle = WeightBundle.from_module(assemble_central(tiny_spec(), seed=3))
        with temp_dir() as folder:
            path = bundle.save(os.path.join(folder, 'central.ckpt'))
            with open(path, 'r+b') as f:
                f.seek(-20, os.SEEK_END)
                byte = f.read(1)
                f.seek(-20, os.SEEK_END)
                f.write(bytes([byte[0] ^ 0x01]))
            with self.assertRaises(CfamcCorruptDataError):
                WeightBundle.load(path)
            with open(path, 'wb') as f:
                f.write(b'not a checkpoint')
            with self.assertRaises(CfamcCorruptDataError):
                WeightBundle.load(path)

    def test_apply_to_mismatch(self):
        bundle = WeightBundle.from_module(assemble_central(tiny_spec(), seed=3))
        other = assemble_central(tiny_spec(input_size=32), seed=3)
        with self.assertRaises(CfamcIncompatibleSpecError):
            bundle.apply_to(other)

    def test_restore_models(self):
        x = torch.as_tensor(random_frames(3, n_ru=3, frame_len=32, seed=7))
        models = [assemble_central(tiny_spec(), seed=3),
                  assemble_distributed(frozen_ru(), 3, seed=5),
                  assemble_hybrid(frozen_ru(), frozen_du(), 3, seed=6),
                  assemble_hybrid(None, frozen_du(), 0, seed=6)]
        for model in models:
            with temp_dir() as folder:
                path = WeightBundle.from_module(model).save(os.path.join(folder, 'm.ckpt'))
                restored = restore_model(WeightBundle.load(path))
            self.assertEqual(restored.spec, model.spec)
            np.testing.assert_allclose(restored(x).detach().numpy(),
                                       model(x).detach().numpy(), atol=1e-6)
            self.assertEqual(restored.frozen_keys(), model.frozen_keys())


class TransferTests(unittest.TestCase):

    @classmethod
    def setUpClass(self):
        logger.title('TESTING WEIGHT TRANSFER...')

    def test_transfer_reproduces_donor(self):
        donor_model = assemble_central(tiny_spec(), seed=3)
        donor = WeightBundle.from_module(donor_model)
        ru_model = assemble_ru(tiny_spec('ru', n_ru=1), seed=9)
        transfer_weights(donor, ru_model, {'feature_extraction', 'decision'})
        x = torch.as_tensor(random_frames(100, n_ru=3, frame_len=32, seed=1))
        diff = (donor_model(x) - ru_model(x.sum(dim=1))).abs().max()
        self.assertLess(float(diff), 1e-5)

    def test_transfer_freezes_and_records_provenance(self):
        donor = WeightBundle.from_module(assemble_central(tiny_spec(), seed=3))
        du_model = assemble_du_feature(tiny_spec('du_feature'), seed=9)
        transfer_weights(donor, du_model, {'feature_extraction'})
        self.assertEqual(du_model.trainable_parameters(), [])
        for key in donor.keys({'feature_extraction'}):
            self.assertEqual(du_model.provenance[key], 'central-16x2-w4h8')
            np.testing.assert_array_equal(
                dict(du_model.named_parameters())[key].detach().numpy(), donor.tensors[key])

    def test_transfer_partial_blocks(self):
        donor = WeightBundle.from_module(assemble_central(tiny_spec(), seed=3))
        ru_model = assemble_ru(tiny_spec('ru', n_ru=1), seed=9)
        transfer_weights(donor, ru_model, {'feature_extraction'})
        self.assertTrue(all(block_of(k) == 'feature_extraction' for k in ru_model.frozen_keys()))
        self.assertTrue(all(p.requires_grad for p in ru_model.decision.parameters()))

    def test_transfer_geometry_mismatch(self):
        donor = WeightBundle.from_module(assemble_central(tiny_spec(input_size=32), seed=3))
        ru_model = assemble_ru(tiny_spec('ru', n_ru=1), seed=9)
        with self.assertRaises(CfamcIncompatibleSpecError):
            transfer_weights(donor, ru_model, {'feature_extraction'})

    def test_transfer_unknown_block(self):
        donor = WeightBundle.from_module(assemble_central(tiny_spec(), seed=3))
        with self.assertRaises(CfamcValueError):
            transfer_weights(donor, assemble_ru(tiny_spec('ru', n_ru=1)), {'combiner'})
