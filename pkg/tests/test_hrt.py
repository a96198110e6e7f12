"""
Unit tests for the hyper relational transformer layer
"""
import pytest
import numpy as np
import sys
import os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.core.autodiff import Tape, Tensor, backprop
from src.core.finite_diff import finite_diff_grad
from src.core.parameters import ParameterStore
from src.model.hrt import declare_hrt_layer, hrt_hyperedge_update, hrt_layer, hyper_message, hyper_qkv
from src.model.layers import hyperedge_mean, membership_mean
from src.utils.config import build_config
from src.utils.errors import InvariantViolation
from tests.reference import layer_norm, layer_weights, randomize, vanilla_encoder_layer

OVERLAPPING = np.array([
    [1, 1, 0, 0],
    [1, 1, 1, 0],
    [0, 1, 1, 0],
    [0, 0, 0, 1],
])


def _layer(seed=0, **changes):
    cfg = build_config(preset="tiny", overrides=changes)
    params = ParameterStore(dtype=np.float64, seed=seed)
    declare_hrt_layer(params, "hrt.0", cfg)
    return cfg, randomize(params, seed)


def _inputs(cfg, n, seed=1):
    rng = np.random.default_rng(seed)
    return Tensor(rng.normal(size=(n, cfg.d_n))), Tensor(rng.normal(size=(n, cfg.d_e)))


class TestGroupAggregation:
    """Means over hyperedge members and over an agent's hyperedges"""

    def test_hyperedge_mean(self):
        """Row j averages the members of ego agent j's hyperedge"""
        x = np.arange(8, dtype=np.float64).reshape(4, 2)
        out = hyperedge_mean(OVERLAPPING, Tensor(x)).data
        np.testing.assert_allclose(out[1], x[[0, 1, 2]].mean(axis=0))
        np.testing.assert_allclose(out[3], x[3])

    def test_membership_mean(self):
        """Row i averages the hyperedges agent i belongs to"""
        h = np.arange(8, dtype=np.float64).reshape(4, 2)
        out = membership_mean(OVERLAPPING, Tensor(h)).data
        np.testing.assert_allclose(out[1], h[[0, 1, 2]].mean(axis=0))
        np.testing.assert_allclose(out[2], h[[1, 2]].mean(axis=0))

    def test_empty_membership(self):
        """An agent in no hyperedge is rejected"""
        G = np.array([[0, 0], [1, 1]])
        with pytest.raises(InvariantViolation):
            membership_mean(G, Tensor(np.ones((2, 3))))

    def test_duplicate_member_keeps_mean(self):
        """A duplicated member with identical features leaves both means unchanged"""
        x = np.array([[1.0, 2.0], [1.0, 2.0], [5.0, -1.0]])
        G = np.array([[1, 1, 0], [1, 1, 0], [0, 0, 1]])
        grown_x = np.vstack([x, x[:1]])
        grown_G = np.array([[1, 1, 0, 1], [1, 1, 0, 1], [0, 0, 1, 0], [1, 1, 0, 1]])
        before = hyperedge_mean(G, Tensor(x)).data
        after = hyperedge_mean(grown_G, Tensor(grown_x)).data
        np.testing.assert_allclose(after[:3], before, rtol=0, atol=1e-15)
        before = membership_mean(G, Tensor(x)).data
        after = membership_mean(grown_G, Tensor(grown_x)).data
        np.testing.assert_allclose(after[:3], before, rtol=0, atol=1e-15)
        # a sum would have grown by the extra member
        assert not np.allclose((grown_G.T @ grown_x)[0], (G.T @ x)[0])


class TestHyperAttention:
    """Token-wise attention with group-aware positional terms"""

    def test_qkv_formula(self):
        """k_i adds the projected mean of agent i's hyperedges to its node term"""
        cfg, params = _layer()
        nodes, hyper = _inputs(cfg, 4)
        q, k, v = hyper_qkv(nodes, hyper, OVERLAPPING, params, "hrt.0")
        agg = hyper.data[[1, 2]].mean(axis=0)

        def lin(x, name):
            return x @ params[f"hrt.0.{name}.weight"].data + params[f"hrt.0.{name}.bias"].data

        np.testing.assert_allclose(k.data[2], lin(nodes.data[2], "node_k") + lin(agg, "hyper_k"), atol=1e-12)

    def test_queries_are_token_wise(self):
        """Moving node m changes row m of q, k and v and nothing else"""
        cfg, params = _layer()
        nodes, hyper = _inputs(cfg, 4)
        base = hyper_qkv(nodes, hyper, OVERLAPPING, params, "hrt.0")
        for m in range(4):
            moved = nodes.data.copy()
            moved[m] += 1.0
            shifted = hyper_qkv(Tensor(moved), hyper, OVERLAPPING, params, "hrt.0")
            others = [i for i in range(4) if i != m]
            for before, after in zip(base, shifted):
                np.testing.assert_allclose(after.data[others], before.data[others], rtol=0, atol=1e-14)
                assert not np.allclose(after.data[m], before.data[m])

    def test_hyperedge_reaches_its_members(self):
        """Moving hyperedge k changes q only for the agents that belong to it"""
        cfg, params = _layer()
        nodes, hyper = _inputs(cfg, 4)
        base_q = hyper_qkv(nodes, hyper, OVERLAPPING, params, "hrt.0")[0].data
        moved = hyper.data.copy()
        moved[2] += 1.0
        q = hyper_qkv(nodes, Tensor(moved), OVERLAPPING, params, "hrt.0")[0].data
        changed = [i for i in range(4) if not np.allclose(q[i], base_q[i])]
        assert changed == np.flatnonzero(OVERLAPPING[:, 2]).tolist()

    def test_weights_and_shapes(self):
        """Output shapes are kept and attention rows are distributions"""
        cfg, params = _layer()
        nodes, hyper = _inputs(cfg, 4)
        new_nodes, new_hyper, weights = hrt_layer(nodes, hyper, OVERLAPPING, params, "hrt.0", cfg.heads)
        assert new_nodes.shape == (4, cfg.d_n)
        assert new_hyper.shape == (4, cfg.d_e)
        assert weights.shape == (cfg.heads, 4, 4)
        np.testing.assert_allclose(weights.data.sum(axis=-1), np.ones((cfg.heads, 4)), atol=1e-12)

    def test_incidence_matters(self):
        """Different groupings give different node features"""
        cfg, params = _layer()
        nodes, hyper = _inputs(cfg, 4)
        a, _, _ = hrt_layer(nodes, hyper, np.eye(4), params, "hrt.0", cfg.heads)
        b, _, _ = hrt_layer(nodes, hyper, np.ones((4, 4)), params, "hrt.0", cfg.heads)
        assert not np.allclose(a.data, b.data)

    def test_message_formula(self):
        """m_j = ReLU([h_j; mean of hyperedge j's members] W_m + b)"""
        cfg, params = _layer()
        nodes, hyper = _inputs(cfg, 4)
        messages = hyper_message(hyper, nodes, OVERLAPPING, params, "hrt.0").data
        members = nodes.data[[0, 1, 2]].mean(axis=0)
        stacked = np.concatenate([hyper.data[1], members])
        expected = np.maximum(stacked @ params["hrt.0.message.weight"].data
                              + params["hrt.0.message.bias"].data, 0.0)
        np.testing.assert_allclose(messages[1], expected, atol=1e-12)


class TestHyperedgeUpdatePin:
    """Hyperedge update with only the norm gains switched on"""

    @staticmethod
    def _norms_only(params):
        for name in params.names():
            if name.startswith("hrt.0.hyperedge_update."):
                params[name].data[...] = 1.0 if name.endswith(".gain") else 0.0
        return params

    def test_alternating_hyperedges(self):
        """+-1 hyperedge features come out as +-1/sqrt(1 + eps) normalised twice"""
        cfg, params = _layer()
        params = self._norms_only(params)
        pattern = np.where(np.arange(cfg.d_e) % 2 == 0, 1.0, -1.0)
        hyper = Tensor(np.tile(pattern, (4, 1)))
        messages = Tensor(np.random.default_rng(2).normal(size=(4, cfg.d_h)))
        out = hrt_hyperedge_update(hyper, messages, params, "hrt.0").data
        np.testing.assert_allclose(out, np.tile(pattern * 0.9999949999875, (4, 1)), rtol=0, atol=1e-12)

    def test_random_hyperedges(self):
        """With no projection and no feed-forward the update is LayerNorm(LayerNorm(h))"""
        cfg, params = _layer(seed=4)
        params = self._norms_only(params)
        raw = np.random.default_rng(7).normal(size=(5, cfg.d_e))
        messages = Tensor(np.random.default_rng(8).normal(size=(5, cfg.d_h)))
        out = hrt_hyperedge_update(Tensor(raw), messages, params, "hrt.0").data
        ones, zeros = np.ones(cfg.d_e), np.zeros(cfg.d_e)
        expected = layer_norm(layer_norm(raw, ones, zeros), ones, zeros)
        np.testing.assert_allclose(out, expected, rtol=0, atol=1e-12)


class TestHrtPermutation:
    """Relabelling agents jointly in nodes, hyperedges and G relabels every output"""

    @pytest.mark.parametrize("seed", [0, 1])
    def test_layer_is_equivariant(self, seed):
        """Permuted inputs give permuted nodes, hyperedges and attention weights"""
        cfg, params = _layer(seed=seed)
        nodes, hyper = _inputs(cfg, 4, seed=seed + 20)
        order = np.random.default_rng(seed).permutation(4)
        base_nodes, base_hyper, base_weights = hrt_layer(nodes, hyper, OVERLAPPING, params,
                                                         "hrt.0", cfg.heads)
        perm_nodes, perm_hyper, perm_weights = hrt_layer(
            Tensor(nodes.data[order]), Tensor(hyper.data[order]), OVERLAPPING[np.ix_(order, order)],
            params, "hrt.0", cfg.heads)
        np.testing.assert_allclose(perm_nodes.data, base_nodes.data[order], rtol=0, atol=1e-10)
        np.testing.assert_allclose(perm_hyper.data, base_hyper.data[order], rtol=0, atol=1e-10)
        np.testing.assert_allclose(perm_weights.data, base_weights.data[:, order][:, :, order],
                                   rtol=0, atol=1e-10)


class TestVanillaCollapse:
    """Zero hyperedge projections reduce the layer to a plain encoder layer"""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_vanilla_layer(self, seed):
        """Node update equals an independently coded post-norm encoder layer"""
        cfg, params = _layer(seed=seed, d_n=12, heads=3, d_e=6, d_h=10)
        for name in ("hyper_q", "hyper_k", "hyper_v"):
            params[f"hrt.0.{name}.weight"].data[...] = 0.0
            params[f"hrt.0.{name}.bias"].data[...] = 0.0
        rng = np.random.default_rng(seed + 20)
        nodes = Tensor(rng.normal(size=(5, 12)))
        hyper = Tensor(np.zeros((5, 6)))
        out, _, _ = hrt_layer(nodes, hyper, np.eye(5), params, "hrt.0", cfg.heads)
        expected = vanilla_encoder_layer(nodes.data, layer_weights(params, "hrt.0"), cfg.heads)
        np.testing.assert_allclose(out.data, expected, rtol=0, atol=1e-10)


class TestHrtGradients:
    """Reverse-mode adjoints against finite differences"""

    def test_layer_gradients(self):
        """Every layer parameter matches central differences"""
        cfg, params = _layer(seed=3)
        nodes, hyper = _inputs(cfg, 4, seed=4)
        target_n = np.random.default_rng(5).normal(size=(4, cfg.d_n))
        target_h = np.random.default_rng(6).normal(size=(4, cfg.d_e))

        def loss(p):
            new_nodes, new_hyper, _ = hrt_layer(nodes, hyper, OVERLAPPING, p, "hrt.0", cfg.heads)
            return (new_nodes * target_n).sum() + (new_hyper * target_h).sum()

        with Tape() as tape:
            out = loss(params)
        analytic = backprop(tape, out, params)
        numeric = finite_diff_grad(loss, params, eps=1e-6)
        for name in params.names():
            np.testing.assert_allclose(analytic[name], numeric[name], rtol=1e-5, atol=1e-7,
                                       err_msg=name)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
