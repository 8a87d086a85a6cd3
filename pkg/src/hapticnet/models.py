"""Model graphs: the grouped haptic CNN, the haptic LSTM, and fusion heads.

A Model is an ordered list of layers.  Layers are parameter holders with
pure forward/backward functions (the cache returned by forward carries
everything backward needs), so forward passes are reentrant; only the
optimizer mutates parameters.  All layers accept a leading batch axis.
"""

import numpy as np

from .engine import (
    ConvSpec,
    LayerParams,
    LstmParams,
    conv1d_backward,
    conv1d_backward_fast,
    conv1d_forward,
    conv1d_forward_fast,
    derive_seed,
    inner_product,
    inner_product_backward,
    lstm_backward,
    lstm_forward,
    relu,
    relu_backward,
)
from .errors import InvalidSpecError
from .haptic import INSTANCE_CHANNELS, RESAMPLE_LEN


class Conv1dLayer:
    kind = "conv1d"

    def __init__(self, name, spec: ConvSpec, seed, activation="relu"):
        self.name = name
        self.spec = spec
        self.activation = activation
        self.params = LayerParams.for_conv(spec, seed)

    def forward(self, x):
        # single instances run the reference (bitwise-contract) kernel;
        # batches take the matmul path, caching the window matrix
        if x.ndim == 2:
            pre = conv1d_forward(x, self.spec, self.params)
            cache = ("ref", x, pre)
        else:
            pre, cols = conv1d_forward_fast(x, self.spec, self.params)
            cache = ("fast", cols, pre)
        if self.activation == "relu":
            return relu(pre), cache
        return pre, cache

    def backward(self, cache, grad_out):
        kind, stored, pre = cache
        if self.activation == "relu":
            grad_out = relu_backward(pre, grad_out)
        if kind == "ref":
            grad_x, gw, gb = conv1d_backward(stored, self.spec, self.params, grad_out)
        else:
            grad_x, gw, gb = conv1d_backward_fast(self.spec, self.params, stored, grad_out)
        return grad_x, {"weights": gw, "bias": gb}

    def param_items(self):
        return [
            ("weights", self.params.weights, self.params.w_vel),
            ("bias", self.params.bias, self.params.b_vel),
        ]

    def reinit(self, seed):
        self.params = LayerParams.for_conv(self.spec, seed)

    def describe(self):
        return {"kind": self.kind, "name": self.name,
                "spec": self.spec.to_dict(), "activation": self.activation}


class DenseLayer:
    kind = "dense"

    def __init__(self, name, in_dim, out_dim, seed, activation=None):
        self.name = name
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        self.params = LayerParams.for_dense(in_dim, out_dim, seed)

    def forward(self, x):
        pre = inner_product(x, self.params)
        if self.activation == "relu":
            return relu(pre), (x, pre)
        return pre, (x, None)

    def backward(self, cache, grad_out):
        x, pre = cache
        if self.activation == "relu":
            grad_out = relu_backward(pre, grad_out)
        grad_x, gw, gb = inner_product_backward(x, self.params, grad_out)
        return grad_x, {"weights": gw, "bias": gb}

    def param_items(self):
        return [
            ("weights", self.params.weights, self.params.w_vel),
            ("bias", self.params.bias, self.params.b_vel),
        ]

    def reinit(self, seed):
        self.params = LayerParams.for_dense(self.in_dim, self.out_dim, seed)

    def describe(self):
        return {"kind": self.kind, "name": self.name, "in_dim": self.in_dim,
                "out_dim": self.out_dim, "activation": self.activation}


class LstmLayer:
    kind = "lstm"

    def __init__(self, name, input_size, hidden_size, seed):
        self.name = name
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.params = LstmParams.create(input_size, hidden_size, seed)

    def forward(self, x):
        h, cache = lstm_forward(x, self.params, return_cache=True)
        return h, cache

    def backward(self, cache, grad_out):
        grad_seq, gwx, gwh, gb = lstm_backward(self.params, cache, grad_out)
        return grad_seq, {"w_x": gwx, "w_h": gwh, "bias": gb}

    def param_items(self):
        return [
            ("w_x", self.params.w_x, self.params.wx_vel),
            ("w_h", self.params.w_h, self.params.wh_vel),
            ("bias", self.params.bias, self.params.b_vel),
        ]

    def reinit(self, seed):
        self.params = LstmParams.create(self.input_size, self.hidden_size, seed)

    def describe(self):
        return {"kind": self.kind, "name": self.name,
                "input_size": self.input_size, "hidden_size": self.hidden_size}


class FlattenLayer:
    kind = "flatten"

    def __init__(self, name, in_shape):
        self.name = name
        self.in_shape = tuple(in_shape)

    def forward(self, x):
        lead = x.shape[:x.ndim - len(self.in_shape)]
        return x.reshape(lead + (-1,)), lead

    def backward(self, cache, grad_out):
        return grad_out.reshape(cache + self.in_shape), {}

    def param_items(self):
        return []

    def describe(self):
        return {"kind": self.kind, "name": self.name, "in_shape": list(self.in_shape)}


class TimeMajorLayer:
    """(..., C, T) -> (..., T, C) so sequence models read time steps."""

    kind = "time_major"

    def __init__(self, name):
        self.name = name

    def forward(self, x):
        return np.swapaxes(x, -1, -2), None

    def backward(self, cache, grad_out):
        return np.swapaxes(grad_out, -1, -2), {}

    def param_items(self):
        return []

    def describe(self):
        return {"kind": self.kind, "name": self.name}


class Model:
    """Ordered layer list with a scalar score output.

    ``tap_aliases`` lets callers tap a convolution by its familiar name while
    receiving the post-activation output (taps resolve to layer outputs).
    """

    def __init__(self, layers, input_shape, tap_aliases=None, kind="model"):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.tap_aliases = dict(tap_aliases or {})
        self.kind = kind
        names = [l.name for l in self.layers]
        if len(set(names)) != len(names):
            raise InvalidSpecError(f"duplicate layer names: {names}")

    def layer(self, name):
        for l in self.layers:
            if l.name == name:
                return l
        raise InvalidSpecError(f"no layer named {name!r} in {self.kind}")

    def resolve_tap(self, tap):
        name = self.tap_aliases.get(tap, tap)
        self.layer(name)
        return name

    def forward(self, x, tap=None):
        """Score of shape lead-dims (last axis squeezed); optionally also the
        output of the tap layer."""
        tap_name = self.resolve_tap(tap) if tap is not None else None
        tapped = None
        h = x
        for l in self.layers:
            h, _ = l.forward(h)
            if l.name == tap_name:
                tapped = h
        score = h[..., 0]
        return (score, tapped) if tap is not None else score

    def forward_cached(self, x):
        """Forward pass keeping per-layer caches for a later backward."""
        caches = []
        h = x
        for l in self.layers:
            h, cache = l.forward(h)
            caches.append(cache)
        return h[..., 0], caches

    def backward(self, caches, grad_score):
        """Backprop a score gradient; returns param grads keyed 'layer.param'."""
        grad = np.asarray(grad_score)[..., None]
        grads = {}
        for l, cache in zip(reversed(self.layers), reversed(caches)):
            grad, layer_grads = l.backward(cache, grad)
            for pname, g in layer_grads.items():
                grads[f"{l.name}.{pname}"] = g
        return grads

    def forward_backward(self, x, grad_score):
        """One batched pass; returns (score, param grads keyed 'layer.param')."""
        score, caches = self.forward_cached(x)
        return score, self.backward(caches, grad_score)

    def named_params(self):
        """[(qualified name, value array, velocity array)] in graph order."""
        out = []
        for l in self.layers:
            for pname, value, vel in l.param_items():
                out.append((f"{l.name}.{pname}", value, vel))
        return out

    def classifier_layer(self):
        """The final parameterized layer (the loss-facing classifier)."""
        for l in reversed(self.layers):
            if l.param_items():
                return l
        raise InvalidSpecError("model has no parameterized layers")

    def parameter_count(self):
        return sum(v.size for _, v, _ in self.named_params())

    def describe(self):
        return {
            "kind": self.kind,
            "input_shape": list(self.input_shape),
            "tap_aliases": self.tap_aliases,
            "layers": [l.describe() for l in self.layers],
        }


# Haptic CNN shape: three stride-2 grouped convolutions keep the 32 signal
# groups separate (kernel 7/5/3, pads 3/2/1) so 150 steps shrink to 19
# before the fully connected layer mixes channels.
HAPTIC_CONV_SPECS = (
    ConvSpec(32, 64, 7, stride=2, pad=3, groups=32),
    ConvSpec(64, 64, 5, stride=2, pad=2, groups=32),
    ConvSpec(64, 64, 3, stride=2, pad=1, groups=32),
)
LSTM_HIDDEN = 10


def conv_stack_out_len(t=RESAMPLE_LEN):
    for spec in HAPTIC_CONV_SPECS:
        t = spec.out_len(t)
    return t


def build_haptic_cnn(seed=0) -> Model:
    """32x150 input -> three grouped conv+ReLU blocks -> flatten -> score."""
    layers = []
    for i, spec in enumerate(HAPTIC_CONV_SPECS, start=1):
        layers.append(Conv1dLayer(f"conv{i}", spec,
                                  derive_seed(seed, f"conv{i}.weights")))
    t_out = conv_stack_out_len()
    flat = HAPTIC_CONV_SPECS[-1].out_channels * t_out
    layers.append(FlattenLayer("flatten", in_shape=(HAPTIC_CONV_SPECS[-1].out_channels, t_out)))
    layers.append(DenseLayer("fc", flat, 1, derive_seed(seed, "fc.weights")))
    # tapping "conv3" yields the rectified conv3 output
    return Model(layers, input_shape=(INSTANCE_CHANNELS, RESAMPLE_LEN),
                 tap_aliases={}, kind="haptic_cnn")


def build_haptic_lstm(seed=0) -> Model:
    """Same 32x150 input read time-major: LSTM(10) -> fc(10)+ReLU -> score."""
    layers = [
        TimeMajorLayer("time_major"),
        LstmLayer("lstm", INSTANCE_CHANNELS, LSTM_HIDDEN, derive_seed(seed, "lstm.weights")),
        DenseLayer("fc1", LSTM_HIDDEN, LSTM_HIDDEN, derive_seed(seed, "fc1.weights"),
                   activation="relu"),
        DenseLayer("fc2", LSTM_HIDDEN, 1, derive_seed(seed, "fc2.weights")),
    ]
    return Model(layers, input_shape=(INSTANCE_CHANNELS, RESAMPLE_LEN), kind="haptic_lstm")


def build_linear_classifier(feature_dim, seed=0, kind="fusion") -> Model:
    """Single affine scorer over a fixed feature vector (the fusion head)."""
    layers = [DenseLayer("fc", feature_dim, 1, derive_seed(seed, "fc.weights"))]
    return Model(layers, input_shape=(feature_dim,), kind=kind)


_LAYER_BUILDERS = {
    "conv1d": lambda d: Conv1dLayer(d["name"], ConvSpec(**d["spec"]), seed=0,
                                    activation=d["activation"]),
    "dense": lambda d: DenseLayer(d["name"], d["in_dim"], d["out_dim"], seed=0,
                                  activation=d["activation"]),
    "lstm": lambda d: LstmLayer(d["name"], d["input_size"], d["hidden_size"], seed=0),
    "flatten": lambda d: FlattenLayer(d["name"], d["in_shape"]),
    "time_major": lambda d: TimeMajorLayer(d["name"]),
}


def model_from_description(desc: dict) -> Model:
    """Rebuild a Model skeleton from Model.describe() output.

    Parameters are initialized with seed 0 placeholders and must be loaded
    from checkpoint tensors afterwards.
    """
    try:
        layers = [_LAYER_BUILDERS[d["kind"]](d) for d in desc["layers"]]
    except KeyError as e:
        raise InvalidSpecError(f"unknown layer kind in graph description: {e}") from None
    return Model(layers, input_shape=desc["input_shape"],
                 tap_aliases=desc.get("tap_aliases") or {}, kind=desc.get("kind", "model"))
