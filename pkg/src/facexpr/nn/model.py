"""ConvLSTM1D + MLP classifier with hand-written forward and backward passes.

The recurrent block follows the peephole gate equations: input, forget, and
output gates each see the cell state through a per-channel Hadamard weight,
and the kernel-size-1 convolutions reduce to channel-mixing linear maps
shared across all feature positions. The head flattens the final hidden
state into two rectified dense layers and a softmax output.

Parameter tensors live in a flat name -> array dict so the optimizer and
the finite-difference checker can treat them uniformly:

    w_xi w_xf w_xc w_xo   input kernels, shape (1, F)
    w_hi w_hf w_hc w_ho   recurrent kernels, shape (F, F)
    w_ci w_cf w_co        peephole weights, shape (F,)
    b_i b_f b_c b_o       gate biases, shape (F,)
    dense{k}_w/_b         hidden dense layers
    out_w out_b           softmax layer
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError, NumericError, SchemaError

PROB_FLOOR = 1e-12

GATE_KEYS = ("i", "f", "c", "o")


@dataclass(frozen=True)
class ModelConfig:
    feature_count: int
    class_count: int
    time_steps: int = 4
    filters: int = 8
    kernel_size: int = 1
    dense_sizes: tuple[int, ...] = (2048, 1024)
    seed: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    batch_size: int = 32
    epochs: int = 200

    def __post_init__(self):
        if self.kernel_size != 1:
            raise ConfigError("kernel size is fixed at 1 for this architecture")
        for name in ("feature_count", "class_count", "time_steps", "filters", "batch_size"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if any(s <= 0 for s in self.dense_sizes):
            raise ConfigError("dense sizes must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")

    def with_overrides(self, **kwargs) -> "ModelConfig":
        return replace(self, **kwargs)

    def param_keys(self) -> list[str]:
        keys = [f"w_x{g}" for g in GATE_KEYS] + [f"w_h{g}" for g in GATE_KEYS]
        keys += ["w_ci", "w_cf", "w_co"] + [f"b_{g}" for g in GATE_KEYS]
        for k in range(len(self.dense_sizes)):
            keys += [f"dense{k}_w", f"dense{k}_b"]
        keys += ["out_w", "out_b"]
        return keys


@dataclass
class ModelParams:
    config: ModelConfig
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def __getitem__(self, key: str) -> np.ndarray:
        return self.tensors[key]


@dataclass
class CellState:
    """Hidden and cell state of the recurrent block, both (A, F)."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, feature_count: int, filters: int) -> "CellState":
        return cls(
            h=np.zeros((feature_count, filters)),
            c=np.zeros((feature_count, filters)),
        )


def _fan_uniform(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_model(config: ModelConfig) -> ModelParams:
    """Fan-based uniform kernels, zero biases except forget bias = 1."""
    rng = np.random.default_rng(config.seed)
    f = config.filters
    a = config.feature_count
    tensors: dict[str, np.ndarray] = {}
    for g in GATE_KEYS:
        tensors[f"w_x{g}"] = _fan_uniform(rng, 1, f, (1, f))
    for g in GATE_KEYS:
        tensors[f"w_h{g}"] = _fan_uniform(rng, f, f, (f, f))
    for name in ("w_ci", "w_cf", "w_co"):
        tensors[name] = _fan_uniform(rng, f, f, (f,))
    for g in GATE_KEYS:
        tensors[f"b_{g}"] = np.ones(f) if g == "f" else np.zeros(f)

    fan_in = a * f
    for k, size in enumerate(config.dense_sizes):
        tensors[f"dense{k}_w"] = _fan_uniform(rng, fan_in, size, (fan_in, size))
        tensors[f"dense{k}_b"] = np.zeros(size)
        fan_in = size
    tensors["out_w"] = _fan_uniform(rng, fan_in, config.class_count, (fan_in, config.class_count))
    tensors["out_b"] = np.zeros(config.class_count)
    return ModelParams(config=config, tensors=tensors)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _batch_step(params: ModelParams, x_t: np.ndarray, h: np.ndarray, c: np.ndarray):
    """One recurrent step over a batch. x_t: (B, A); h, c: (B, A, F)."""
    t = params.tensors
    b, a = x_t.shape
    f = params.config.filters
    xcol = x_t[:, :, None]

    def rec(w):  # (B, A, F) @ (F, F) as one flat gemm
        return (h.reshape(b * a, f) @ w).reshape(b, a, f)

    a_i = xcol * t["w_xi"][0] + rec(t["w_hi"]) + c * t["w_ci"] + t["b_i"]
    a_f = xcol * t["w_xf"][0] + rec(t["w_hf"]) + c * t["w_cf"] + t["b_f"]
    a_g = xcol * t["w_xc"][0] + rec(t["w_hc"]) + t["b_c"]
    gate_i = _sigmoid(a_i)
    gate_f = _sigmoid(a_f)
    gate_g = np.tanh(a_g)
    c_new = gate_f * c + gate_i * gate_g
    a_o = xcol * t["w_xo"][0] + rec(t["w_ho"]) + c_new * t["w_co"] + t["b_o"]
    gate_o = _sigmoid(a_o)
    tanh_c = np.tanh(c_new)
    h_new = gate_o * tanh_c
    cache = {
        "x": x_t, "h_prev": h, "c_prev": c,
        "i": gate_i, "f": gate_f, "g": gate_g, "o": gate_o,
        "c": c_new, "tanh_c": tanh_c,
    }
    return h_new, c_new, cache


def convlstm_step(state: CellState, x_t: np.ndarray, params: ModelParams) -> CellState:
    """Advance the recurrent state by one time step for a single sample.

    x_t is one feature row, shape (A,) or (A, 1). Raises NumericError naming
    the first gate that produced a non-finite value.
    """
    x = np.asarray(x_t, dtype=np.float64).reshape(-1)
    a = params.config.feature_count
    if x.shape[0] != a or state.h.shape != (a, params.config.filters):
        raise SchemaError(
            f"shape mismatch: x {x.shape}, h {state.h.shape}, expected A={a}, F={params.config.filters}"
        )
    h_new, c_new, cache = _batch_step(params, x[None, :], state.h[None], state.c[None])
    for gate in ("i", "f", "g", "o"):
        if not np.isfinite(cache[gate]).all():
            raise NumericError(f"non-finite value in gate {gate!r}")
    if not (np.isfinite(c_new).all() and np.isfinite(h_new).all()):
        raise NumericError("non-finite cell or hidden state")
    return CellState(h=h_new[0], c=c_new[0])


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=-1, keepdims=True)


def forward(params: ModelParams, x: np.ndarray):
    """Run the full network. x: (T, A) for one sample or (B, T, A) batched.

    Returns (probabilities, cache); probabilities match the input batching.
    """
    cfg = params.config
    single = x.ndim == 2
    xb = np.asarray(x, dtype=np.float64)
    if single:
        xb = xb[None]
    if xb.shape[1] != cfg.time_steps or xb.shape[2] != cfg.feature_count:
        raise SchemaError(
            f"input shape {xb.shape[1:]} does not match (T={cfg.time_steps}, A={cfg.feature_count})"
        )
    b = xb.shape[0]
    h = np.zeros((b, cfg.feature_count, cfg.filters))
    c = np.zeros_like(h)
    steps = []
    for t in range(cfg.time_steps):
        h, c, cache = _batch_step(params, xb[:, t, :], h, c)
        steps.append(cache)

    t = params.tensors
    flat = h.reshape(b, cfg.feature_count * cfg.filters)
    acts = [flat]
    z = flat
    for k in range(len(cfg.dense_sizes)):
        z = acts[-1] @ t[f"dense{k}_w"] + t[f"dense{k}_b"]
        acts.append(np.maximum(z, 0.0))
    logits = acts[-1] @ t["out_w"] + t["out_b"]
    if not np.isfinite(logits).all():
        raise NumericError("non-finite logits")
    probs = _softmax(logits)
    cache = {"steps": steps, "acts": acts, "probs": probs, "h_last_shape": h.shape}
    return (probs[0] if single else probs), cache


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """-ln(p[label]) with the probability clamped to >= 1e-12."""
    p = float(probs[label])
    return -float(np.log(max(p, PROB_FLOOR)))


def batch_cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = np.maximum(probs[np.arange(len(labels)), labels], PROB_FLOOR)
    return float(-np.log(picked).mean())


def backward(
    params: ModelParams,
    cache: dict,
    labels,
    out_grads: dict[str, np.ndarray] | None = None,
) -> dict[str, np.ndarray]:
    """Gradients of the mean cross-entropy loss w.r.t. every parameter.

    `labels`: int for the single-sample case, else an int array of length B.
    Backpropagates through the dense head and through time across all
    recurrent steps, including every peephole path. Pass `out_grads`
    (arrays shaped like the parameters) to reuse buffers across calls.
    """
    cfg = params.config
    t = params.tensors
    probs = cache["probs"]
    b = probs.shape[0]
    labels = np.atleast_1d(np.asarray(labels, dtype=np.intp))

    dlogits = probs.copy()
    dlogits[np.arange(b), labels] -= 1.0
    dlogits /= b

    acts = cache["acts"]
    if out_grads is None:
        grads = {k: np.empty_like(v) for k, v in params.tensors.items()}
    else:
        grads = out_grads
    np.matmul(acts[-1].T, dlogits, out=grads["out_w"])
    grads["out_b"][:] = dlogits.sum(axis=0)
    dact = dlogits @ t["out_w"].T
    for k in range(len(cfg.dense_sizes) - 1, -1, -1):
        dz = dact * (acts[k + 1] > 0.0)
        np.matmul(acts[k].T, dz, out=grads[f"dense{k}_w"])
        grads[f"dense{k}_b"][:] = dz.sum(axis=0)
        dact = dz @ t[f"dense{k}_w"].T

    f = cfg.filters
    a = cfg.feature_count
    dh = dact.reshape(b, a, f)
    dc = np.zeros_like(dh)
    for g in GATE_KEYS:
        grads[f"w_x{g}"].fill(0.0)
        grads[f"w_h{g}"].fill(0.0)
        grads[f"b_{g}"].fill(0.0)
    for name in ("w_ci", "w_cf", "w_co"):
        grads[name].fill(0.0)

    for step in reversed(cache["steps"]):
        gate_i, gate_f, gate_g, gate_o = step["i"], step["f"], step["g"], step["o"]
        c_now, c_prev, tanh_c = step["c"], step["c_prev"], step["tanh_c"]
        h_prev, x_t = step["h_prev"], step["x"]

        do = dh * tanh_c
        da_o = do * gate_o * (1.0 - gate_o)
        dc = dc + dh * gate_o * (1.0 - tanh_c * tanh_c) + da_o * t["w_co"]

        di = dc * gate_g
        da_i = di * gate_i * (1.0 - gate_i)
        df = dc * c_prev
        da_f = df * gate_f * (1.0 - gate_f)
        dg = dc * gate_i
        da_g = dg * (1.0 - gate_g * gate_g)

        for g, da in (("i", da_i), ("f", da_f), ("c", da_g), ("o", da_o)):
            grads[f"w_x{g}"][0] += np.einsum("ba,baf->f", x_t, da)
            grads[f"w_h{g}"] += h_prev.reshape(b * a, f).T @ da.reshape(b * a, f)
            grads[f"b_{g}"] += da.sum(axis=(0, 1))
        grads["w_ci"] += (c_prev * da_i).sum(axis=(0, 1))
        grads["w_cf"] += (c_prev * da_f).sum(axis=(0, 1))
        grads["w_co"] += (c_now * da_o).sum(axis=(0, 1))

        flat_h = (
            da_i @ t["w_hi"].T + da_f @ t["w_hf"].T + da_g @ t["w_hc"].T + da_o @ t["w_ho"].T
        )
        dh = flat_h
        dc = dc * gate_f + da_i * t["w_ci"] + da_f * t["w_cf"]

    return grads
