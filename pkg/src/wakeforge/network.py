"""From-scratch dense-network stack: decoder and predictor networks, Adam
training with mini-batching and layer freezing, gradient verification and
binary serialization.

All arithmetic is float64 numpy; files store float32.  Conventions baked
into the network kinds:

* ``decoder`` maps (u0, ti, yaw) to a wake tile normalized by u0 (the field
  is recovered as ``clip(output, 0, 1) * u0``),
* ``power`` outputs the cube root of turbine power divided by
  POWER_CUBE_ROOT_SCALE, so predictions live near O(1),
* ``ti`` outputs the natural log of local turbulence intensity; the
  physical value is exp(output) clamped to [0.005, 0.5].
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DivergenceError, ModelFormatError

ACTIVATIONS = ("linear", "tanh", "leaky_relu")
LEAKY_SLOPE = 0.01
BN_MOMENTUM = 0.1
BN_EPS = 1e-5

TI_CLAMP = (0.005, 0.5)
POWER_CUBE_ROOT_SCALE = 100.0  # [W^(1/3)]

_MAGIC = b"WKNM"
_VERSION = 1
_KIND_TAGS = {"decoder": 1, "power": 2, "ti": 3}
_KIND_NAMES = {v: k for k, v in _KIND_TAGS.items()}
_ACT_TAGS = {"linear": 0, "tanh": 1, "leaky_relu": 2}
_ACT_NAMES = {v: k for k, v in _ACT_TAGS.items()}


@dataclass
class BatchNorm:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = BN_MOMENTUM
    eps: float = BN_EPS

    @staticmethod
    def identity(width: int) -> "BatchNorm":
        return BatchNorm(np.ones(width), np.zeros(width),
                         np.zeros(width), np.ones(width))

    def copy(self) -> "BatchNorm":
        return BatchNorm(self.gamma.copy(), self.beta.copy(),
                         self.running_mean.copy(), self.running_var.copy(),
                         self.momentum, self.eps)


@dataclass
class Layer:
    w: np.ndarray                  # (n_in, n_out)
    b: np.ndarray                  # (n_out,)
    activation: str
    trainable: bool = True
    bn: BatchNorm | None = None

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")

    @property
    def n_in(self):
        return self.w.shape[0]

    @property
    def n_out(self):
        return self.w.shape[1]

    def copy(self) -> "Layer":
        return Layer(self.w.copy(), self.b.copy(), self.activation,
                     self.trainable, self.bn.copy() if self.bn else None)


@dataclass
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        if np.any(self.std <= 0):
            raise ConfigError("normalization standard deviations must be positive")

    def normalize(self, x):
        return (x - self.mean) / self.std

    def denormalize(self, x):
        return x * self.std + self.mean


@dataclass
class NetworkModel:
    kind: str
    layers: list
    norm: NormStats
    output_shape: tuple = (1, 1)

    def __post_init__(self):
        if self.kind not in _KIND_TAGS:
            raise ConfigError(f"unknown network kind {self.kind!r}")
        widths = [(l.n_in, l.n_out) for l in self.layers]
        for (_, out_a), (in_b, _) in zip(widths, widths[1:]):
            if out_a != in_b:
                raise ConfigError("adjacent layer widths do not chain")

    @property
    def n_inputs(self):
        return self.layers[0].n_in

    @property
    def n_outputs(self):
        return self.layers[-1].n_out

    def copy(self) -> "NetworkModel":
        return NetworkModel(self.kind, [l.copy() for l in self.layers],
                            NormStats(self.norm.mean.copy(), self.norm.std.copy()),
                            self.output_shape)


def _glorot_uniform(rng, n_in, n_out):
    limit = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-limit, limit, size=(n_in, n_out))


def build_decoder(nx: int = 64, ny: int = 64, hidden: int = 200,
                  seed: int = 0) -> NetworkModel:
    """3 -> hidden -> hidden -> nx*ny decoder (tanh + batch-norm hidden layers)."""
    rng = np.random.default_rng(seed)
    layers = [
        Layer(_glorot_uniform(rng, 3, hidden), np.zeros(hidden), "tanh",
              bn=BatchNorm.identity(hidden)),
        Layer(_glorot_uniform(rng, hidden, hidden), np.zeros(hidden), "tanh",
              bn=BatchNorm.identity(hidden)),
        Layer(_glorot_uniform(rng, hidden, nx * ny), np.zeros(nx * ny), "linear"),
    ]
    norm = NormStats(np.zeros(3), np.ones(3))
    return NetworkModel("decoder", layers, norm, (nx, ny))


def build_predictor(kind: str, n_inputs: int, hidden: int = 64,
                    seed: int = 0) -> NetworkModel:
    """Power/TI predictor: n_inputs -> hidden -> hidden -> 1, leaky-relu.

    Unlike the decoder these carry no batch-norm blocks; with the small
    per-turbine sample counts involved, batch statistics are too noisy."""
    if kind not in ("power", "ti"):
        raise ConfigError("predictor kind must be 'power' or 'ti'")
    rng = np.random.default_rng(seed)
    layers = [
        Layer(_glorot_uniform(rng, n_inputs, hidden), np.zeros(hidden), "leaky_relu"),
        Layer(_glorot_uniform(rng, hidden, hidden), np.zeros(hidden), "leaky_relu"),
        Layer(_glorot_uniform(rng, hidden, 1), np.zeros(1), "linear"),
    ]
    norm = NormStats(np.zeros(n_inputs), np.ones(n_inputs))
    return NetworkModel(kind, layers, norm, (1, 1))


def set_input_norm(model: NetworkModel, x_train: np.ndarray):
    """Fit per-feature mean/std normalization on the raw training inputs."""
    x = np.asarray(x_train, dtype=float)
    std = x.std(axis=0)
    std[std < 1e-12] = 1.0
    model.norm = NormStats(x.mean(axis=0), std)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def _act(name, a):
    if name == "tanh":
        return np.tanh(a)
    if name == "leaky_relu":
        return np.where(a > 0, a, LEAKY_SLOPE * a)
    return a


def _act_grad(name, a, h):
    if name == "tanh":
        return 1.0 - h ** 2
    if name == "leaky_relu":
        return np.where(a > 0, 1.0, LEAKY_SLOPE)
    return np.ones_like(a)


def forward(model: NetworkModel, x: np.ndarray, train: bool = False,
            update_stats: bool = False):
    """Run the network on raw inputs; returns (output, cache).

    ``train`` selects batch statistics for batch-norm (running statistics
    otherwise); ``update_stats`` additionally refreshes running statistics of
    trainable layers.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.n_inputs:
        raise ConfigError(f"expected {model.n_inputs} inputs, got {x.shape[1]}")
    out = model.norm.normalize(x)
    cache = [{"x_in": out}]
    for layer in model.layers:
        c = cache[-1]
        a = c["x_in"] @ layer.w + layer.b
        h = _act(layer.activation, a)
        if layer.bn is not None:
            bn = layer.bn
            if train:
                mu = h.mean(axis=0)
                var = h.var(axis=0)
                if update_stats and layer.trainable:
                    m = bn.momentum
                    bn.running_mean = (1 - m) * bn.running_mean + m * mu
                    bn.running_var = (1 - m) * bn.running_var + m * np.maximum(var, 1e-30)
            else:
                mu = bn.running_mean
                var = bn.running_var
            inv_std = 1.0 / np.sqrt(var + bn.eps)
            xhat = (h - mu) * inv_std
            out = bn.gamma * xhat + bn.beta
            c.update(a=a, h=h, xhat=xhat, inv_std=inv_std, bn_train=train)
        else:
            out = h
            c.update(a=a, h=h)
        cache.append({"x_in": out})
    return out, cache


@dataclass
class LayerGrads:
    dw: np.ndarray
    db: np.ndarray
    dgamma: np.ndarray = None
    dbeta: np.ndarray = None


def backward(model: NetworkModel, cache, dout: np.ndarray,
             stop_at_frozen: bool = True):
    """Backpropagate dLoss/dOutput; returns per-layer gradients (top-level
    list in layer order).  Frozen layers get zero gradients; propagation
    stops below the deepest trainable layer when ``stop_at_frozen``."""
    grads = [None] * len(model.layers)
    trainables = [i for i, l in enumerate(model.layers) if l.trainable]
    lowest = min(trainables) if (trainables and stop_at_frozen) else 0
    d = dout
    for idx in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[idx]
        c = cache[idx]
        if layer.bn is not None:
            bn = layer.bn
            dgamma = np.sum(d * c["xhat"], axis=0)
            dbeta = np.sum(d, axis=0)
            dxhat = d * bn.gamma
            if c["bn_train"]:
                b = d.shape[0]
                dh = (c["inv_std"] / b) * (
                    b * dxhat - dxhat.sum(axis=0)
                    - c["xhat"] * (dxhat * c["xhat"]).sum(axis=0))
            else:
                dh = dxhat * c["inv_std"]
        else:
            dgamma = dbeta = None
            dh = d
        da = dh * _act_grad(layer.activation, c["a"], c["h"])
        if layer.trainable:
            g = LayerGrads(c["x_in"].T @ da, da.sum(axis=0), dgamma, dbeta)
        else:
            g = LayerGrads(np.zeros_like(layer.w), np.zeros_like(layer.b),
                           None if layer.bn is None else np.zeros_like(layer.bn.gamma),
                           None if layer.bn is None else np.zeros_like(layer.bn.beta))
        grads[idx] = g
        if idx == lowest:
            break
        d = da @ layer.w.T
    return grads


def mse_loss(pred, target):
    diff = pred - target
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


# ---------------------------------------------------------------------------
# Adam optimiser and training loop
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    epochs: int = 500
    lr: float = 0.01
    batch_fraction: float = 0.25
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    # (factor, patience, metric) or None; metric is "val_loss".
    scheduler: tuple | None = None
    freeze_mask: tuple | None = None

    def __post_init__(self):
        if not 0.0 < self.batch_fraction <= 1.0:
            raise ConfigError("batch_fraction must lie in (0, 1]")
        if self.scheduler is not None:
            factor, patience = self.scheduler[0], self.scheduler[1]
            if not 0.0 < factor < 1.0:
                raise ConfigError("scheduler factor must lie in (0, 1)")
            if patience < 1:
                raise ConfigError("scheduler patience must be >= 1")


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @staticmethod
    def for_model(model: NetworkModel) -> "AdamState":
        m, v = [], []
        for layer in model.layers:
            if not layer.trainable:
                m.append(None)
                v.append(None)
                continue
            entry = {"w": np.zeros_like(layer.w), "b": np.zeros_like(layer.b)}
            if layer.bn is not None:
                entry["gamma"] = np.zeros_like(layer.bn.gamma)
                entry["beta"] = np.zeros_like(layer.bn.beta)
            m.append(entry)
            v.append({k: np.zeros_like(val) for k, val in entry.items()})
        return AdamState(m, v)


def _adam_step(model, state: AdamState, grads, lr, cfg: TrainConfig):
    state.t += 1
    bc1 = 1.0 - cfg.beta1 ** state.t
    bc2 = 1.0 - cfg.beta2 ** state.t
    for layer, g, m, v in zip(model.layers, grads, state.m, state.v):
        if not layer.trainable:
            continue
        params = {"w": (layer.w, g.dw), "b": (layer.b, g.db)}
        if layer.bn is not None:
            params["gamma"] = (layer.bn.gamma, g.dgamma)
            params["beta"] = (layer.bn.beta, g.dbeta)
        for key, (p, dp) in params.items():
            m[key] = cfg.beta1 * m[key] + (1 - cfg.beta1) * dp
            v[key] = cfg.beta2 * v[key] + (1 - cfg.beta2) * dp ** 2
            p -= lr * (m[key] / bc1) / (np.sqrt(v[key] / bc2) + cfg.adam_eps)


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    val_loss: float
    val_accuracy: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)
    transfer: bool = False

    def epochs_to_accuracy(self, threshold: float):
        """First epoch reaching the validation accuracy, or None."""
        for rec in self.records:
            if rec.val_accuracy >= threshold:
                return rec.epoch
        return None

    @property
    def best_accuracy(self):
        return max((r.val_accuracy for r in self.records), default=float("nan"))


def default_accuracy(pred, target):
    """100 minus the mean absolute error in percent of the target scale.

    With decoder targets normalized by the free-stream speed this is exactly
    the pixelwise relative-error accuracy metric."""
    return 100.0 * (1.0 - float(np.mean(np.abs(pred - target))))


def train(model: NetworkModel, x_train, y_train, x_val, y_val,
          cfg: TrainConfig, accuracy_fn=default_accuracy,
          transfer: bool = False) -> TrainHistory:
    """Mini-batch Adam training on MSE; returns the per-epoch history."""
    x_train = np.asarray(x_train, dtype=float)
    y_train = np.asarray(y_train, dtype=float)
    x_val = np.asarray(x_val, dtype=float)
    y_val = np.asarray(y_val, dtype=float)
    if cfg.freeze_mask is not None:
        freeze_layers(model, cfg.freeze_mask)
    if not any(l.trainable for l in model.layers):
        raise ConfigError("model has no trainable layers")

    n = x_train.shape[0]
    batch = max(1, round(cfg.batch_fraction * n))
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.for_model(model)
    lr = cfg.lr
    best_metric = np.inf
    stall = 0
    history = TrainHistory(transfer=transfer)

    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        losses = []
        for start in range(0, n, batch):
            sel = perm[start:start + batch]
            pred, cache = forward(model, x_train[sel], train=True, update_stats=True)
            loss, dloss = mse_loss(pred, y_train[sel])
            if not np.isfinite(loss):
                raise DivergenceError(epoch)
            grads = backward(model, cache, dloss)
            _adam_step(model, state, grads, lr, cfg)
            losses.append(loss)
        val_pred, _ = forward(model, x_val)
        val_loss, _ = mse_loss(val_pred, y_val)
        val_acc = accuracy_fn(val_pred, y_val)
        history.records.append(EpochRecord(epoch, lr, float(np.mean(losses)),
                                           val_loss, val_acc))
        if cfg.scheduler is not None:
            factor, patience = cfg.scheduler[0], cfg.scheduler[1]
            if val_loss < best_metric - 1e-12:
                best_metric = val_loss
                stall = 0
            else:
                stall += 1
                if stall >= patience:
                    lr *= factor
                    stall = 0
    return history


def freeze_layers(model: NetworkModel, mask) -> NetworkModel:
    """Set per-layer trainable flags (mask entry True = frozen)."""
    mask = list(mask)
    if len(mask) != len(model.layers):
        raise ConfigError("freeze mask length must equal layer count")
    for layer, frozen in zip(model.layers, mask):
        layer.trainable = not frozen
    return model


DEFAULT_TRANSFER_MASK = (True, True, False)


def fine_tune(pretrained: NetworkModel, x_train, y_train, x_val, y_val,
              cfg: TrainConfig, mask=DEFAULT_TRANSFER_MASK):
    """Layer-freezing transfer learning: freeze early layers of a copy of the
    pretrained model and train the rest on the small dataset."""
    model = pretrained.copy()
    freeze_layers(model, mask)
    history = train(model, x_train, y_train, x_val, y_val, cfg, transfer=True)
    return model, history


# ---------------------------------------------------------------------------
# Gradient verification
# ---------------------------------------------------------------------------

def _flat_params(layer):
    params = [("w", layer.w), ("b", layer.b)]
    if layer.bn is not None:
        params += [("gamma", layer.bn.gamma), ("beta", layer.bn.beta)]
    return params


def gradient_check(model: NetworkModel, x, y, n_per_layer: int = 200,
                   step: float = 1e-4, seed: int = 0):
    """Compare analytic gradients to central finite differences.

    Returns {"max_rel_discrepancy": float, "per_layer": [...]} where frozen
    layers report a zero analytic-gradient norm and are excluded from the
    finite-difference comparison."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)

    def loss_only():
        pred, _ = forward(model, x, train=True, update_stats=False)
        return mse_loss(pred, y)[0]

    pred, cache = forward(model, x, train=True, update_stats=False)
    _, dloss = mse_loss(pred, y)
    grads = backward(model, cache, dloss, stop_at_frozen=False)

    worst = 0.0
    per_layer = []
    for idx, (layer, g) in enumerate(zip(model.layers, grads)):
        analytic = {"w": g.dw, "b": g.db}
        if layer.bn is not None:
            analytic["gamma"] = g.dgamma
            analytic["beta"] = g.dbeta
        if not layer.trainable:
            # The optimiser sees exactly zero gradient for frozen layers.
            per_layer.append({"layer": idx, "frozen": True,
                              "analytic_norm": 0.0, "max_rel_discrepancy": 0.0})
            continue
        layer_worst = 0.0
        for name, arr in _flat_params(layer):
            ga = analytic[name].ravel()
            flat = arr.ravel()
            k = min(n_per_layer, flat.size)
            picks = rng.choice(flat.size, size=k, replace=False)
            for j in picks:
                orig = flat[j]
                h = step * max(1.0, abs(orig))
                flat[j] = orig + h
                lp = loss_only()
                flat[j] = orig - h
                lm = loss_only()
                flat[j] = orig
                gf = (lp - lm) / (2.0 * h)
                denom = max(abs(ga[j]), abs(gf), 1e-6)
                layer_worst = max(layer_worst, abs(ga[j] - gf) / denom)
        norm = float(np.sqrt(sum(float(np.sum(v ** 2)) for v in analytic.values())))
        per_layer.append({"layer": idx, "frozen": False,
                          "analytic_norm": norm,
                          "max_rel_discrepancy": layer_worst})
        worst = max(worst, layer_worst)
    return {"max_rel_discrepancy": worst, "per_layer": per_layer}


# ---------------------------------------------------------------------------
# Network-kind forward conventions
# ---------------------------------------------------------------------------

def decoder_batch(model: NetworkModel, conds: np.ndarray,
                  mode: str = "inference") -> np.ndarray:
    """Decode (n, 3) condition rows to (n, nx, ny) wake-speed grids [m/s]."""
    conds = np.atleast_2d(np.asarray(conds, dtype=float))
    if model.kind != "decoder" or conds.shape[1] != 3:
        raise ConfigError("decoder_batch needs a decoder model and 3-entry inputs")
    raw, _ = forward(model, conds, train=(mode == "train-batch"))
    nx, ny = model.output_shape
    fields = np.clip(raw, 0.0, 1.0) * conds[:, 0][:, None]
    return fields.reshape(-1, nx, ny)


def ddn_forward(model: NetworkModel, cond, mode: str = "inference") -> np.ndarray:
    """Single-condition decoder evaluation; returns the (nx, ny) speed grid."""
    vec = cond.as_array() if hasattr(cond, "as_array") else np.asarray(cond, float)
    return decoder_batch(model, vec[None, :], mode)[0]


def accuracy(model: NetworkModel, conds: np.ndarray, fields: np.ndarray) -> float:
    """100 minus the mean pixelwise absolute relative error in percent,
    normalized by each sample's free-stream speed."""
    conds = np.atleast_2d(np.asarray(conds, dtype=float))
    if conds.shape[0] == 0:
        raise ConfigError("validation set is empty")
    fields = np.asarray(fields, dtype=float).reshape(conds.shape[0], -1)
    if np.any(conds[:, 0] <= 0):
        from .errors import DomainError
        raise DomainError("sample free-stream speed must be positive")
    pred = decoder_batch(model, conds).reshape(conds.shape[0], -1)
    err = np.abs(pred - fields) / conds[:, 0][:, None] * 100.0
    return 100.0 - float(np.mean(err))


def power_net_forward(model: NetworkModel, line_speeds, ti_inflow, yaw) -> float:
    """Predict turbine power [W] from upstream line speeds, inflow TI and yaw."""
    x = np.concatenate([np.asarray(line_speeds, float).ravel(),
                        [float(ti_inflow), float(yaw)]])
    if model.kind != "power" or x.size != model.n_inputs:
        raise ConfigError("power_net_forward: wrong model kind or input length")
    out, _ = forward(model, x[None, :])
    # outputs are cube roots of power scaled to O(1); cube back to watts
    return float((max(out[0, 0], 0.0) * POWER_CUBE_ROOT_SCALE) ** 3)


def ti_net_forward(model: NetworkModel, line_speeds, ti_inflow, yaw) -> float:
    """Predict local TI from upstream line speeds, inflow TI and yaw."""
    x = np.concatenate([np.asarray(line_speeds, float).ravel(),
                        [float(ti_inflow), float(yaw)]])
    if model.kind != "ti" or x.size != model.n_inputs:
        raise ConfigError("ti_net_forward: wrong model kind or input length")
    out, _ = forward(model, x[None, :])
    # log-space output keeps the MSE objective close to relative error
    return float(np.clip(np.exp(out[0, 0]), *TI_CLAMP))


# ---------------------------------------------------------------------------
# Serialization (little-endian binary, magic "WKNM")
# ---------------------------------------------------------------------------

def _write_array(fh, arr):
    fh.write(np.asarray(arr, dtype="<f4").tobytes())


def _read_array(fh, count):
    raw = fh.read(4 * count)
    if len(raw) != 4 * count:
        raise ModelFormatError("model file truncated")
    return np.frombuffer(raw, dtype="<f4").astype(float)


def save_model(model: NetworkModel, path):
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<III", _VERSION, _KIND_TAGS[model.kind],
                          len(model.layers)))
    for layer in model.layers:
        buf.write(struct.pack("<IIBBB", layer.n_in, layer.n_out,
                              _ACT_TAGS[layer.activation],
                              1 if layer.trainable else 0,
                              1 if layer.bn is not None else 0))
        _write_array(buf, layer.w)
        _write_array(buf, layer.b)
        if layer.bn is not None:
            for arr in (layer.bn.gamma, layer.bn.beta,
                        layer.bn.running_mean, layer.bn.running_var):
                _write_array(buf, arr)
    _write_array(buf, model.norm.mean)
    _write_array(buf, model.norm.std)
    buf.write(struct.pack("<II", *model.output_shape))
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_model(path) -> NetworkModel:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ModelFormatError(f"bad magic {magic!r}")
        header = fh.read(12)
        if len(header) != 12:
            raise ModelFormatError("model file truncated")
        version, kind_tag, n_layers = struct.unpack("<III", header)
        if version != _VERSION:
            raise ModelFormatError(f"unsupported version {version}")
        if kind_tag not in _KIND_NAMES:
            raise ModelFormatError(f"unknown network kind tag {kind_tag}")
        layers = []
        for _ in range(n_layers):
            rec = fh.read(11)
            if len(rec) != 11:
                raise ModelFormatError("model file truncated")
            n_in, n_out, act, trainable, has_bn = struct.unpack("<IIBBB", rec)
            if act not in _ACT_NAMES:
                raise ModelFormatError(f"unknown activation tag {act}")
            w = _read_array(fh, n_in * n_out).reshape(n_in, n_out)
            b = _read_array(fh, n_out)
            bn = None
            if has_bn:
                gamma = _read_array(fh, n_out)
                beta = _read_array(fh, n_out)
                mean = _read_array(fh, n_out)
                var = _read_array(fh, n_out)
                bn = BatchNorm(gamma, beta, mean, var)
            layers.append(Layer(w, b, _ACT_NAMES[act], bool(trainable), bn))
        n_in0 = layers[0].n_in
        mean = _read_array(fh, n_in0)
        std = _read_array(fh, n_in0)
        tail = fh.read(8)
        if len(tail) != 8:
            raise ModelFormatError("model file truncated")
        shape = struct.unpack("<II", tail)
        if fh.read(1):
            raise ModelFormatError("trailing bytes after model footer")
    return NetworkModel(_KIND_NAMES[kind_tag], layers, NormStats(mean, std),
                        shape)
