"""LSTM forward recurrence and backpropagation through time."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError, InvalidSpecError
from .init import xavier_init

# Gate order inside the stacked 4H axis.
GATES = ("input", "forget", "output", "candidate")


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Logistic sigmoid, stable for |z| up to float64 range."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LstmParams:
    """Stacked gate parameters: rows [input | forget | output | candidate].

    w_x maps the step input (D) to the 4H gate pre-activations, w_h maps the
    previous hidden state (H).  All four gate blocks share hidden_size.
    """

    w_x: np.ndarray  # (4H, D)
    w_h: np.ndarray  # (4H, H)
    bias: np.ndarray  # (4H,)
    wx_vel: np.ndarray = field(default=None)
    wh_vel: np.ndarray = field(default=None)
    b_vel: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.wx_vel is None:
            self.wx_vel = np.zeros_like(self.w_x)
        if self.wh_vel is None:
            self.wh_vel = np.zeros_like(self.w_h)
        if self.b_vel is None:
            self.b_vel = np.zeros_like(self.bias)
        h4 = self.w_x.shape[0]
        if h4 % 4 or self.w_h.shape != (h4, h4 // 4) or self.bias.shape != (h4,):
            raise InvalidSpecError(
                f"inconsistent gate shapes: w_x {self.w_x.shape}, "
                f"w_h {self.w_h.shape}, bias {self.bias.shape}"
            )

    @property
    def hidden_size(self) -> int:
        return self.w_x.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.w_x.shape[1]

    def gate_block(self, which: str, tensor: str = "w_x") -> np.ndarray:
        """View of one gate's rows in w_x / w_h / bias."""
        h = self.hidden_size
        i = GATES.index(which)
        return getattr(self, tensor if tensor != "bias" else "bias")[i * h:(i + 1) * h]

    @classmethod
    def create(cls, input_size: int, hidden_size: int, seed: int) -> "LstmParams":
        w_x = xavier_init((4 * hidden_size, input_size), input_size, seed)
        w_h = xavier_init((4 * hidden_size, hidden_size), hidden_size, seed + 1)
        return cls(w_x=w_x, w_h=w_h, bias=np.zeros(4 * hidden_size))


def lstm_forward(sequence: np.ndarray, params: LstmParams, return_cache: bool = False):
    """Run the LSTM over (..., T, D) and return the final hidden state (..., H).

    Standard recurrence with zero initial hidden and cell states:
    gates i,f,o via sigmoid, candidate g via tanh,
    c_t = f*c_{t-1} + i*g,  h_t = o*tanh(c_t).
    """
    if sequence.ndim < 2 or sequence.shape[-2] == 0:
        raise InvalidInputError(f"LSTM needs a non-empty (..., T, D) sequence, got {sequence.shape}")
    if sequence.shape[-1] != params.input_size:
        raise InvalidSpecError(
            f"sequence dim {sequence.shape[-1]} != params input size {params.input_size}"
        )
    t_len = sequence.shape[-2]
    h_size = params.hidden_size
    lead = sequence.shape[:-2]

    # One big matmul for all input-to-gate terms, then step the recurrence.
    zx = sequence @ params.w_x.T + params.bias  # (..., T, 4H)
    h = np.zeros(lead + (h_size,))
    c = np.zeros(lead + (h_size,))
    steps = []
    for t in range(t_len):
        z = zx[..., t, :] + h @ params.w_h.T
        i = sigmoid(z[..., 0 * h_size:1 * h_size])
        f = sigmoid(z[..., 1 * h_size:2 * h_size])
        o = sigmoid(z[..., 2 * h_size:3 * h_size])
        g = np.tanh(z[..., 3 * h_size:4 * h_size])
        c_prev = c
        h_prev = h
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        if return_cache:
            steps.append((i, f, o, g, c_prev, h_prev, tc))
    if return_cache:
        return h, (sequence, steps)
    return h


def lstm_backward(params: LstmParams, cache, grad_h_final: np.ndarray):
    """BPTT through lstm_forward's cache.

    Returns (grad_sequence, grad_w_x, grad_w_h, grad_bias).
    """
    sequence, steps = cache
    t_len = len(steps)
    h_size = params.hidden_size

    dh = grad_h_final
    dc = np.zeros_like(dh)
    dz_all = np.zeros(sequence.shape[:-1] + (4 * h_size,))
    for t in range(t_len - 1, -1, -1):
        i, f, o, g, c_prev, h_prev, tc = steps[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dz = dz_all[..., t, :]
        dz[..., 0 * h_size:1 * h_size] = di * i * (1.0 - i)
        dz[..., 1 * h_size:2 * h_size] = df * f * (1.0 - f)
        dz[..., 2 * h_size:3 * h_size] = do * o * (1.0 - o)
        dz[..., 3 * h_size:4 * h_size] = dg * (1.0 - g * g)
        dh = dz @ params.w_h
        dc = dc * f

    grad_seq = dz_all @ params.w_x
    dz2 = dz_all.reshape(-1, 4 * h_size)
    x2 = sequence.reshape(-1, params.input_size)
    grad_wx = dz2.T @ x2
    grad_b = dz2.sum(axis=0)
    # hidden-to-gate gradient pairs dz_t with h_{t-1}
    h_prevs = np.stack([s[5] for s in steps], axis=-2)  # (..., T, H)
    grad_wh = dz2.T @ h_prevs.reshape(-1, h_size)
    return grad_seq, grad_wx, grad_wh, grad_b
