"""LSTM recurrence and BPTT gradients."""

import numpy as np
import pytest

from hapticnet.engine import LstmParams, lstm_backward, lstm_forward, sigmoid
from hapticnet.errors import InvalidInputError

from oracles import max_rel_error, numerical_gradient


def hand_two_step(seq, wx, wh, b):
    """Scalar H=1 recurrence written out longhand."""
    h = c = 0.0
    for t in range(seq.shape[0]):
        z = wx @ seq[t] + wh * h + b
        i, f, o = (1.0 / (1.0 + np.exp(-z[k])) for k in range(3))
        g = np.tanh(z[3])
        c = f * c + i * g
        h = o * np.tanh(c)
    return h


class TestLstmForward:
    def test_zero_weights_give_zero_hidden(self):
        params = LstmParams(w_x=np.zeros((4, 3)), w_h=np.zeros((4, 1)), bias=np.zeros(4))
        h = lstm_forward(np.random.default_rng(0).standard_normal((6, 3)), params)
        assert np.array_equal(h, [0.0])

    def test_scalar_two_step_matches_hand_recurrence(self):
        rng = np.random.default_rng(21)
        wx = rng.standard_normal((4, 2))
        wh = rng.standard_normal((4, 1))
        b = rng.standard_normal(4)
        params = LstmParams(w_x=wx, w_h=wh, bias=b)
        seq = rng.standard_normal((2, 2))
        h = lstm_forward(seq, params)
        expected = hand_two_step(seq, wx, wh[:, 0], b)
        assert abs(h[0] - expected) < 1e-12

    def test_rejects_empty_sequence(self):
        params = LstmParams.create(3, 2, seed=0)
        with pytest.raises(InvalidInputError):
            lstm_forward(np.zeros((0, 3)), params)

    def test_finite_for_huge_inputs(self):
        params = LstmParams.create(4, 3, seed=5)
        h = lstm_forward(np.full((10, 4), 1e6), params)
        assert np.all(np.isfinite(h))
        assert np.all(np.isfinite(sigmoid(np.array([-1e6, 0.0, 1e6]))))

    def test_batched_matches_per_sequence(self):
        rng = np.random.default_rng(3)
        params = LstmParams.create(5, 4, seed=1)
        seqs = rng.standard_normal((6, 8, 5))
        batched = lstm_forward(seqs, params)
        for i in range(6):
            single = lstm_forward(seqs[i], params)
            assert np.allclose(batched[i], single, rtol=0, atol=1e-12)


class TestLstmBackward:
    def test_bptt_matches_finite_differences(self):
        rng = np.random.default_rng(17)
        t_len, d, h_size = 5, 4, 3
        params = LstmParams.create(d, h_size, seed=2)
        seq = rng.standard_normal((t_len, d))
        probe = rng.standard_normal(h_size)

        h, cache = lstm_forward(seq, params, return_cache=True)
        grad_seq, grad_wx, grad_wh, grad_b = lstm_backward(params, cache, probe)

        def loss_seq(sv):
            return float(np.sum(probe * lstm_forward(sv, params)))

        def loss_wx(wv):
            p = LstmParams(w_x=wv, w_h=params.w_h, bias=params.bias)
            return float(np.sum(probe * lstm_forward(seq, p)))

        def loss_wh(wv):
            p = LstmParams(w_x=params.w_x, w_h=wv, bias=params.bias)
            return float(np.sum(probe * lstm_forward(seq, p)))

        def loss_b(bv):
            p = LstmParams(w_x=params.w_x, w_h=params.w_h, bias=bv)
            return float(np.sum(probe * lstm_forward(seq, p)))

        assert max_rel_error(grad_seq, numerical_gradient(loss_seq, seq.copy())) < 1e-4
        assert max_rel_error(grad_wx, numerical_gradient(loss_wx, params.w_x.copy())) < 1e-4
        assert max_rel_error(grad_wh, numerical_gradient(loss_wh, params.w_h.copy())) < 1e-4
        assert max_rel_error(grad_b, numerical_gradient(loss_b, params.bias.copy())) < 1e-4

    def test_batched_gradients_sum_over_sequences(self):
        rng = np.random.default_rng(23)
        params = LstmParams.create(3, 2, seed=4)
        seqs = rng.standard_normal((4, 6, 3))
        probes = rng.standard_normal((4, 2))
        _, cache = lstm_forward(seqs, params, return_cache=True)
        gseq, gwx, gwh, gb = lstm_backward(params, cache, probes)
        swx = np.zeros_like(gwx)
        swh = np.zeros_like(gwh)
        sb = np.zeros_like(gb)
        for i in range(4):
            _, ci = lstm_forward(seqs[i], params, return_cache=True)
            gsi, wxi, whi, bi = lstm_backward(params, ci, probes[i])
            assert np.allclose(gseq[i], gsi, rtol=1e-12, atol=1e-12)
            swx += wxi
            swh += whi
            sb += bi
        assert np.allclose(gwx, swx, rtol=1e-10, atol=1e-12)
        assert np.allclose(gwh, swh, rtol=1e-10, atol=1e-12)
        assert np.allclose(gb, sb, rtol=1e-10, atol=1e-12)
