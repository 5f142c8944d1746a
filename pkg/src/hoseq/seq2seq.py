"""From-scratch recurrent sequence-to-sequence predictor.

A single ReLU recurrent layer is unrolled over the N history steps; K
independent dense heads read the final hidden state, one per future
step. Classification heads produce softmax distributions trained with
categorical cross-entropy; the scalar dwell head is a sigmoid trained
with mean absolute error. Gradients come from exact backpropagation
through time, optimization from Adam, and everything runs in double
precision so finite-difference checks are meaningful.

All operations are pure functions of their inputs plus seeds: training
twice with the same configuration yields bit-identical models.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, replace

import numpy as np

from .dataset import (
    Dataset,
    TaskSpec,
    TaskKind,
    encode_dataset,
    raw_dwell_labels,
    unscale_dwell,
)
from .errors import (
    CacheError,
    EmptyDatasetError,
    ParseError,
    ShapeError,
    TaskMismatchError,
)

GRAD_CLIP_NORM = 5.0
CCE_PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class RnnModel:
    """Recurrent weights plus K output heads and task metadata.

    w_in is (F, H), w_rec (H, H), b_rec (H,); head k has weights (H, O)
    and bias (O,) where O = L for classification and 1 for dwell. Treat
    instances as immutable: updates produce new models.
    """

    task: TaskSpec
    w_in: np.ndarray
    w_rec: np.ndarray
    b_rec: np.ndarray
    head_w: tuple[np.ndarray, ...]
    head_b: tuple[np.ndarray, ...]
    dwell_scale: tuple[float, float] | None = None

    @property
    def hidden(self) -> int:
        return self.w_rec.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.w_in.shape[0]

    @property
    def horizon(self) -> int:
        return len(self.head_w)

    @property
    def classifies(self) -> bool:
        return not self.task.kind.predicts_dwell


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators keyed like the parameter dict."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    init_scale: float = 0.08
    hidden_units: int = 100

    def __post_init__(self):
        if self.episodes < 1 or self.batch_size < 1:
            raise ValueError("episodes and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class Metrics:
    """Validation-style metrics: per-step accuracy or MAE, plus mean loss."""

    mean_loss: float
    per_step_accuracy: tuple[float, ...] | None = None
    mae_steps: float | None = None

    @property
    def accuracy(self) -> float | None:
        if self.per_step_accuracy is None:
            return None
        return float(np.mean(self.per_step_accuracy))


@dataclass
class ForwardCache:
    model: RnnModel
    x: np.ndarray  # (B, N, F)
    z: np.ndarray  # (B, N, H) pre-activations
    h: np.ndarray  # (B, N, H) hidden states
    outputs: list[np.ndarray]  # per head: (B, L) probabilities or (B, 1) sigmoid


def init_model(task: TaskSpec, hidden: int = 100, seed: int = 0, init_scale: float = 0.08) -> RnnModel:
    """Uniform[-init_scale, init_scale] weights, zero biases, per seed."""
    if hidden < 1:
        raise ValueError("hidden must be >= 1")
    rng = np.random.default_rng(seed)
    f, o, k = task.feature_dim, task.output_dim, task.horizon
    w_in = rng.uniform(-init_scale, init_scale, size=(f, hidden))
    w_rec = rng.uniform(-init_scale, init_scale, size=(hidden, hidden))
    head_w = tuple(rng.uniform(-init_scale, init_scale, size=(hidden, o)) for _ in range(k))
    head_b = tuple(np.zeros(o) for _ in range(k))
    return RnnModel(
        task=task,
        w_in=w_in,
        w_rec=w_rec,
        b_rec=np.zeros(hidden),
        head_w=head_w,
        head_b=head_b,
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _forward_batch(model: RnnModel, x: np.ndarray) -> ForwardCache:
    b, n, f = x.shape
    hdim = model.hidden
    z = np.empty((b, n, hdim))
    h = np.empty((b, n, hdim))
    prev = np.zeros((b, hdim))
    for t in range(n):
        z[:, t] = x[:, t] @ model.w_in + prev @ model.w_rec + model.b_rec
        prev = np.maximum(z[:, t], 0.0)
        h[:, t] = prev
    outputs = []
    for w, bias in zip(model.head_w, model.head_b):
        logits = prev @ w + bias
        outputs.append(_softmax(logits) if model.classifies else _sigmoid(logits))
    return ForwardCache(model=model, x=x, z=z, h=h, outputs=outputs)


def forward(model: RnnModel, features: np.ndarray):
    """Run one window through the network.

    features must be (N, F) with N the task history length. Returns
    (hidden trajectory (N, H), per-head outputs, cache for backward).
    Classification outputs are probability vectors over L; the dwell
    head yields one sigmoid scalar per future step.
    """
    features = np.asarray(features, dtype=np.float64)
    expected = (model.task.history_len, model.feature_dim)
    if features.ndim != 2 or features.shape != expected:
        raise ShapeError(f"expected features of shape {expected}, got {features.shape}")
    cache = _forward_batch(model, features[None, :, :])
    outputs = [out[0] for out in cache.outputs]
    return cache.h[0], outputs, cache


def loss_cce(predicted, targets) -> float:
    """Mean categorical cross-entropy over the K heads.

    predicted holds K probability vectors; targets are zero-based column
    indices. Probabilities are floored at 1e-12 so the loss stays finite.
    """
    total = 0.0
    predicted = list(predicted)
    targets = list(targets)
    for dist, target in zip(predicted, targets):
        p = max(float(dist[int(target)]), CCE_PROB_FLOOR)
        total -= math.log(p)
    return total / len(predicted)


def loss_mae(predicted, targets) -> float:
    """Mean absolute error over the K heads."""
    pred = np.asarray(predicted, dtype=np.float64).ravel()
    tgt = np.asarray(targets, dtype=np.float64).ravel()
    return float(np.mean(np.abs(pred - tgt)))


def _loss_batch(cache: ForwardCache, targets: np.ndarray) -> float:
    """Mean loss over a batch (mean over heads, then over windows)."""
    k = len(cache.outputs)
    b = cache.x.shape[0]
    if cache.model.classifies:
        total = 0.0
        for j, probs in enumerate(cache.outputs):
            p = np.maximum(probs[np.arange(b), targets[:, j]], CCE_PROB_FLOOR)
            total += float(-np.log(p).sum())
        return total / (b * k)
    total = 0.0
    for j, out in enumerate(cache.outputs):
        total += float(np.abs(out[:, 0] - targets[:, j]).sum())
    return total / (b * k)


def _backward_batch(cache: ForwardCache, targets: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of the batch-mean loss, keyed like model_params."""
    model = cache.model
    x, z, h = cache.x, cache.z, cache.h
    b, n, _ = x.shape
    k = len(cache.outputs)
    grads: dict[str, np.ndarray] = {
        "w_in": np.zeros_like(model.w_in),
        "w_rec": np.zeros_like(model.w_rec),
        "b_rec": np.zeros_like(model.b_rec),
    }
    h_last = h[:, -1]
    d_h = np.zeros((b, model.hidden))
    for j in range(k):
        out = cache.outputs[j]
        if model.classifies:
            d_logits = out.copy()
            d_logits[np.arange(b), targets[:, j]] -= 1.0
        else:
            diff = out[:, 0] - targets[:, j]
            d_logits = (np.sign(diff) * out[:, 0] * (1.0 - out[:, 0]))[:, None]
        d_logits /= b * k
        grads[f"head{j}.w"] = h_last.T @ d_logits
        grads[f"head{j}.b"] = d_logits.sum(axis=0)
        d_h += d_logits @ model.head_w[j].T
    for t in range(n - 1, -1, -1):
        d_z = d_h * (z[:, t] > 0.0)
        grads["w_in"] += x[:, t].T @ d_z
        prev = h[:, t - 1] if t > 0 else np.zeros_like(d_z)
        grads["w_rec"] += prev.T @ d_z
        grads["b_rec"] += d_z.sum(axis=0)
        d_h = d_z @ model.w_rec.T
    return grads


def backward(model: RnnModel, cache: ForwardCache, targets) -> dict[str, np.ndarray]:
    """Gradients for one window via backpropagation through time.

    ReLU and MAE use subgradient 0 at their kinks. The cache must come
    from a forward call on this very model.
    """
    if cache.model is not model:
        raise CacheError("cache was built by a different model")
    if model.classifies:
        tgt = np.asarray(targets, dtype=np.int64).reshape(1, -1)
    else:
        tgt = np.asarray(targets, dtype=np.float64).reshape(1, -1)
    if tgt.shape[1] != model.horizon:
        raise ShapeError(f"expected {model.horizon} targets, got {tgt.shape[1]}")
    return _backward_batch(cache, tgt)


def model_params(model: RnnModel) -> dict[str, np.ndarray]:
    params = {"w_in": model.w_in, "w_rec": model.w_rec, "b_rec": model.b_rec}
    for j in range(model.horizon):
        params[f"head{j}.w"] = model.head_w[j]
        params[f"head{j}.b"] = model.head_b[j]
    return params


def model_with_params(model: RnnModel, params: dict[str, np.ndarray]) -> RnnModel:
    k = model.horizon
    return replace(
        model,
        w_in=params["w_in"],
        w_rec=params["w_rec"],
        b_rec=params["b_rec"],
        head_w=tuple(params[f"head{j}.w"] for j in range(k)),
        head_b=tuple(params[f"head{j}.b"] for j in range(k)),
    )


def init_adam(params: dict[str, np.ndarray], lr: float = 1e-3) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(v) for k, v in params.items()},
        v={k: np.zeros_like(v) for k, v in params.items()},
        lr=lr,
    )


def adam_update(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam step; returns fresh params and state."""
    t = state.step + 1
    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for key, p in params.items():
        g = grads[key]
        m = state.beta1 * state.m[key] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[key] + (1.0 - state.beta2) * g * g
        m_hat = m / (1.0 - state.beta1**t)
        v_hat = v / (1.0 - state.beta2**t)
        new_params[key] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
        new_m[key] = m
        new_v[key] = v
    return new_params, replace(state, m=new_m, v=new_v, step=t)


def _clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> None:
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale


@dataclass
class TrainResult:
    model: RnnModel
    train_losses: list[float]
    val_metrics: list[Metrics]


def train(train_ds: Dataset, val_ds: Dataset, config: TrainConfig) -> TrainResult:
    """Train a fresh model: one episode = one shuffled pass in mini-batches.

    Gradients are averaged per batch, clipped at global norm 5.0, then
    applied with Adam. Returns the final model, the mean training loss
    per episode, and validation metrics per episode. Deterministic per
    config.seed.
    """
    if train_ds.task != val_ds.task:
        raise TaskMismatchError("train and validation datasets use different tasks")
    if not train_ds.windows or not val_ds.windows:
        raise EmptyDatasetError("train and validation datasets must be non-empty")
    model = init_model(
        train_ds.task, hidden=config.hidden_units, seed=config.seed, init_scale=config.init_scale
    )
    model = replace(model, dwell_scale=train_ds.dwell_scale)
    x, y = encode_dataset(train_ds)
    val_arrays = _eval_arrays(model, val_ds)
    n = x.shape[0]
    rng = np.random.default_rng(config.seed)
    params = model_params(model)
    state = init_adam(params, lr=config.learning_rate)
    train_losses: list[float] = []
    val_metrics: list[Metrics] = []
    for _ in range(config.episodes):
        order = rng.permutation(n)
        running = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            cache = _forward_batch(model, x[idx])
            running += _loss_batch(cache, y[idx]) * len(idx)
            grads = _backward_batch(cache, y[idx])
            _clip_global_norm(grads, GRAD_CLIP_NORM)
            params, state = adam_update(params, grads, state)
            model = model_with_params(model, params)
        train_losses.append(running / n)
        val_metrics.append(_metrics_from_arrays(model, *val_arrays))
    return TrainResult(model=model, train_losses=train_losses, val_metrics=val_metrics)


def predict_sequence(model: RnnModel, features: np.ndarray) -> np.ndarray:
    """Predict the K future steps for one encoded history.

    Classification returns K one-based IDs (argmax per head, ties to the
    lowest ID); the dwell task returns K dwell values mapped back to
    reporting steps through the stored scale.
    """
    _, outputs, _ = forward(model, features)
    if model.classifies:
        return np.array([int(np.argmax(dist)) + 1 for dist in outputs], dtype=np.int64)
    if model.dwell_scale is None:
        raise ValueError("model has no dwell scale; was it trained on a dwell task?")
    raw = np.array([float(out[0]) for out in outputs])
    return unscale_dwell(raw, model.dwell_scale)


def evaluate(model: RnnModel, dataset: Dataset, batch_size: int = 1024) -> Metrics:
    """Metrics over a dataset: per-step accuracy, or MAE in reporting steps.

    mean_loss matches the training objective (CCE, or MAE on the scaled
    targets); mae_steps is measured against the raw unscaled dwells.
    """
    if model.task != dataset.task:
        raise TaskMismatchError(
            f"model task {model.task.kind.value} does not match dataset {dataset.task.kind.value}"
        )
    x, y, raw = _eval_arrays(model, dataset)
    return _metrics_from_arrays(model, x, y, raw, batch_size)


def _eval_arrays(model: RnnModel, dataset: Dataset):
    """Encode a dataset for evaluation, normalizing with the model's scale."""
    if not dataset.windows:
        raise EmptyDatasetError("cannot evaluate on an empty dataset")
    eval_ds = dataset
    if model.task.uses_dwell and model.dwell_scale is not None:
        eval_ds = Dataset(task=dataset.task, windows=dataset.windows, dwell_scale=model.dwell_scale)
    x, y = encode_dataset(eval_ds)
    raw = raw_dwell_labels(eval_ds) if model.task.kind.predicts_dwell else None
    return x, y, raw


def _metrics_from_arrays(model, x, y, raw, batch_size: int = 1024) -> Metrics:
    n, k = x.shape[0], model.horizon
    total_loss = 0.0
    if model.classifies:
        correct = np.zeros(k, dtype=np.int64)
        for start in range(0, n, batch_size):
            cache = _forward_batch(model, x[start : start + batch_size])
            tgt = y[start : start + batch_size]
            total_loss += _loss_batch(cache, tgt) * cache.x.shape[0]
            for j, probs in enumerate(cache.outputs):
                correct[j] += int(np.sum(np.argmax(probs, axis=1) == tgt[:, j]))
        return Metrics(
            mean_loss=total_loss / n,
            per_step_accuracy=tuple(float(c) / n for c in correct),
        )
    abs_err_steps = 0.0
    for start in range(0, n, batch_size):
        cache = _forward_batch(model, x[start : start + batch_size])
        tgt = y[start : start + batch_size]
        total_loss += _loss_batch(cache, tgt) * cache.x.shape[0]
        pred = np.column_stack([out[:, 0] for out in cache.outputs])
        pred_steps = unscale_dwell(pred, model.dwell_scale)
        abs_err_steps += float(np.abs(pred_steps - raw[start : start + batch_size]).sum())
    return Metrics(mean_loss=total_loss / n, mae_steps=abs_err_steps / (n * k))


# --- model files -------------------------------------------------------------
#
# Binary container: 8-byte magic, little-endian uint32 version, uint32
# header length, JSON header (dimensions, task, dwell scale), then the
# weight matrices as row-major float64 in a fixed order. Round trips are
# bit-exact.

MODEL_MAGIC = b"HOSEQRN\x01"
MODEL_VERSION = 1


def save_model(model: RnnModel, path) -> None:
    header = {
        "task_kind": model.task.kind.value,
        "history_len": model.task.history_len,
        "horizon": model.task.horizon,
        "vocab_size": model.task.vocab_size,
        "hidden": model.hidden,
        "dwell_scale": list(model.dwell_scale) if model.dwell_scale else None,
    }
    payload = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<II", MODEL_VERSION, len(payload)))
        fh.write(payload)
        for arr in _weight_sequence(model):
            fh.write(np.ascontiguousarray(arr, dtype=np.float64).tobytes())


def _weight_sequence(model: RnnModel):
    yield model.w_in
    yield model.w_rec
    yield model.b_rec
    for w, b in zip(model.head_w, model.head_b):
        yield w
        yield b


def load_model(path) -> RnnModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MODEL_MAGIC:
        raise ParseError(f"{path}: not a model file (bad magic)")
    version, header_len = struct.unpack_from("<II", blob, 8)
    if version != MODEL_VERSION:
        raise ParseError(f"{path}: unsupported model version {version}")
    header = json.loads(blob[16 : 16 + header_len].decode("utf-8"))
    task = TaskSpec(
        kind=TaskKind(header["task_kind"]),
        history_len=header["history_len"],
        horizon=header["horizon"],
        vocab_size=header["vocab_size"],
    )
    hidden = header["hidden"]
    f, o, k = task.feature_dim, task.output_dim, task.horizon
    offset = 16 + header_len

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape))
        arr = np.frombuffer(blob, dtype=np.float64, count=count, offset=offset).reshape(shape)
        offset += count * 8
        return arr.copy()

    w_in = take((f, hidden))
    w_rec = take((hidden, hidden))
    b_rec = take((hidden,))
    head_w, head_b = [], []
    for _ in range(k):
        head_w.append(take((hidden, o)))
        head_b.append(take((o,)))
    if offset != len(blob):
        raise ParseError(f"{path}: trailing bytes in model file")
    scale = header["dwell_scale"]
    return RnnModel(
        task=task,
        w_in=w_in,
        w_rec=w_rec,
        b_rec=b_rec,
        head_w=tuple(head_w),
        head_b=tuple(head_b),
        dwell_scale=tuple(scale) if scale else None,
    )
