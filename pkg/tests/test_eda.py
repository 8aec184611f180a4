import numpy as np
import pytest
import torch

from helpers import manual_lstm_states, module_gradcheck, tiny_model_config

from unisep.model.dpt import DptBlock
from unisep.model.eda import (
    ChunkAggregator,
    EdaModule,
    apply_attractors,
    count_from_probs,
    shuffle_chunks,
)
from unisep.model.network import UniSepNet


class TestChunkAggregator:
    def test_zero_weights_give_plain_mean(self):
        agg = ChunkAggregator(hidden=6)
        with torch.no_grad():
            agg.score.weight.zero_()
            agg.score.bias.zero_()
        x = torch.randn(2, 3, 5, 6)
        assert torch.allclose(agg(x), x.mean(dim=2), atol=1e-7)

    def test_single_frame_chunks_identity(self):
        torch.manual_seed(0)
        agg = ChunkAggregator(hidden=4)
        x = torch.randn(1, 3, 1, 4)
        assert torch.allclose(agg(x), x[:, :, 0], atol=1e-7)

    def test_weights_sum_to_one(self):
        torch.manual_seed(1)
        agg = ChunkAggregator(hidden=4)
        x = torch.randn(2, 3, 7, 4)
        weights = torch.softmax(agg.score(x), dim=2)
        sums = weights.sum(dim=2)
        assert torch.allclose(sums, torch.ones_like(sums), atol=1e-6)


class TestShuffleChunks:
    def test_single_chunk_identity(self):
        x = torch.randn(1, 1, 4)
        shuffled, perm = shuffle_chunks(x, seed=3)
        assert torch.equal(shuffled, x)
        assert perm.tolist() == [0]

    def test_same_seed_same_permutation(self):
        x = torch.randn(2, 9, 4)
        a, perm_a = shuffle_chunks(x, seed=42)
        b, perm_b = shuffle_chunks(x, seed=42)
        assert torch.equal(a, b)
        assert torch.equal(perm_a, perm_b)

    def test_rows_preserved_as_multiset(self):
        x = torch.randn(1, 8, 3)
        shuffled, perm = shuffle_chunks(x, seed=7)
        restored = shuffled[:, torch.argsort(perm)]
        assert torch.equal(restored, x)


class TestLstmEncoder:
    def test_matches_manual_recursion(self):
        torch.manual_seed(2)
        eda = EdaModule(hidden=4).double()
        sequence = np.random.default_rng(0).standard_normal((3, 4))
        h, c = eda.encode_sequence(torch.as_tensor(sequence).unsqueeze(0))
        h_ref, c_ref = manual_lstm_states(eda.encoder, sequence)
        np.testing.assert_allclose(h[0].detach().numpy(), h_ref, atol=1e-6)
        np.testing.assert_allclose(c[0].detach().numpy(), c_ref, atol=1e-6)

    def test_single_chunk_is_one_cell_step(self):
        torch.manual_seed(3)
        eda = EdaModule(hidden=5).double()
        sequence = np.random.default_rng(1).standard_normal((1, 5))
        h, c = eda.encode_sequence(torch.as_tensor(sequence).unsqueeze(0))
        h_ref, c_ref = manual_lstm_states(eda.encoder, sequence)
        np.testing.assert_allclose(h[0].detach().numpy(), h_ref, atol=1e-9)
        np.testing.assert_allclose(c[0].detach().numpy(), c_ref, atol=1e-9)

    def test_empty_sequence_rejected(self):
        eda = EdaModule(hidden=4)
        with pytest.raises(ValueError):
            eda.encode_sequence(torch.zeros(1, 0, 4))


class TestAttractorGeneration:
    def test_oracle_mode_counts(self):
        torch.manual_seed(4)
        eda = EdaModule(hidden=6)
        chunks = torch.randn(1, 5, 4, 6)
        for n in range(1, 6):
            attractors, probs = eda(chunks, n + 1, shuffle_seed=0)
            assert attractors.shape == (1, n + 1, 6)
            assert probs.shape == (1, n + 1)

    def test_prefix_attractors_independent_of_total(self):
        torch.manual_seed(5)
        eda = EdaModule(hidden=6).double()
        chunks = torch.randn(1, 4, 3, 6, dtype=torch.float64)
        few, probs_few = eda(chunks, 3, shuffle_seed=1)
        many, probs_many = eda(chunks, 6, shuffle_seed=1)
        assert torch.equal(few, many[:, :3])
        assert torch.equal(probs_few, probs_many[:, :3])

    def test_threshold_rule(self):
        assert count_from_probs([0.9, 0.8, 0.3], n_max=5) == 2
        assert count_from_probs([0.4, 0.9], n_max=5) == 0
        assert count_from_probs([0.9, 0.9, 0.9, 0.9, 0.9], n_max=5) == 5
        assert count_from_probs([0.51, 0.5, 0.49], n_max=5) == 2
        assert count_from_probs([0.9] * 7, n_max=5) == 5

    def test_gradcheck(self):
        torch.manual_seed(6)
        eda = EdaModule(hidden=6)
        chunks = torch.randn(1, 3, 2, 6, dtype=torch.float64)
        module = _EdaWrapper(eda, n_attractors=3, shuffle_seed=2)
        assert module_gradcheck(module, chunks) < 1e-4


class _EdaWrapper(torch.nn.Module):
    def __init__(self, eda, n_attractors, shuffle_seed):
        super().__init__()
        self.eda = eda
        self.n_attractors = n_attractors
        self.shuffle_seed = shuffle_seed

    def forward(self, chunks):
        return self.eda(chunks, self.n_attractors, self.shuffle_seed)


class TestApplyAttractors:
    def test_ones_identity(self):
        x = torch.randn(1, 3, 4, 5)
        out = apply_attractors(x, torch.ones(1, 2, 5))
        assert torch.equal(out[:, 0], x)
        assert torch.equal(out[:, 1], x)

    def test_zeros_zero_out(self):
        x = torch.randn(1, 3, 4, 5)
        out = apply_attractors(x, torch.zeros(1, 1, 5))
        assert torch.equal(out[:, 0], torch.zeros_like(x))

    def test_distinct_attractors_differ(self):
        x = torch.randn(1, 2, 3, 4)
        attractors = torch.stack([torch.ones(4), 2 * torch.ones(4)]).unsqueeze(0)
        out = apply_attractors(x, attractors)
        assert not torch.equal(out[:, 0], out[:, 1])

    def test_linear_in_input(self):
        attractors = torch.randn(1, 2, 4)
        x = torch.randn(1, 3, 5, 4)
        y = torch.randn(1, 3, 5, 4)
        left = apply_attractors(2.0 * x + 3.0 * y, attractors)
        right = 2.0 * apply_attractors(x, attractors) + 3.0 * apply_attractors(y, attractors)
        assert torch.allclose(left, right, atol=1e-6)


class TestSharedSeparationBlock:
    def test_parameter_sharing_order_invariant(self):
        torch.manual_seed(7)
        cfg = tiny_model_config()
        model = UniSepNet(cfg).double().eval()
        feats = torch.randn(1, 3, cfg.chunk_len, cfg.hidden, dtype=torch.float64)
        attractors = torch.randn(1, 3, cfg.hidden, dtype=torch.float64)
        out = model.separate_features(feats, attractors)
        flipped = model.separate_features(feats, attractors[:, [2, 1, 0]])
        assert torch.allclose(out[:, 0], flipped[:, 2], atol=1e-12)
        assert torch.allclose(out[:, 2], flipped[:, 0], atol=1e-12)

    def test_shape_contract(self):
        cfg = tiny_model_config()
        model = UniSepNet(cfg)
        feats = torch.randn(2, 4, cfg.chunk_len, cfg.hidden)
        attractors = torch.randn(2, 3, cfg.hidden)
        out = model.separate_features(feats, attractors)
        assert out.shape == (2, 3, 4, cfg.chunk_len, cfg.hidden)


class TestCountingInvariants:
    def test_oracle_output_counts(self):
        torch.manual_seed(8)
        cfg = tiny_model_config()
        model = UniSepNet(cfg)
        wave = np.random.default_rng(3).standard_normal(3000)
        for n in range(1, cfg.n_max + 1):
            result = model.separate(wave, oracle_n=n, shuffle_seed=5)
            assert len(result.signals) == n
            assert len(result.attractor_set.probabilities) == cfg.n_max

    def test_inference_count_rule_applied(self):
        torch.manual_seed(9)
        cfg = tiny_model_config()
        model = UniSepNet(cfg)
        wave = np.random.default_rng(4).standard_normal(3000)
        result = model.separate(wave, shuffle_seed=5)
        probs = result.attractor_set.probabilities
        assert result.attractor_set.n_est == count_from_probs(probs, cfg.n_max)
        assert len(result.signals) == result.attractor_set.n_est

    def test_labels_depend_only_on_count(self):
        # the BCE label vector for a shuffled copy matches the original: the
        # supervision depends only on the true speaker count
        from unisep.losses import eda_bce_loss

        probs = torch.tensor([0.9, 0.8, 0.1], dtype=torch.float64)
        n = 2
        base = float(eda_bce_loss(probs, n))
        assert float(eda_bce_loss(probs.clone(), n)) == base
