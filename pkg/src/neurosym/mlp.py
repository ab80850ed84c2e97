"""The neural component: a 4 -> 32 -> 16 -> 1 ReLU network trained with Adam.

Forward pass::

    a1 = relu(W1 @ x + b1)
    a2 = relu(W2 @ a1 + b2)
    y_hat = W3 @ a2 + b3

Loss is the batch mean of ``(y - y_hat) ** 2``. Gradients are derived by hand
(no autodiff); the ReLU subgradient at exactly zero is taken as zero. The
second hidden activation ``a2`` is what the symbolic component consumes as
learned features.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from .errors import ModelFormatError, NeurosymError
from .rng import derive_rng

logger = logging.getLogger(__name__)

N_INPUTS = 4
PARAM_NAMES: tuple[str, ...] = ("W1", "b1", "W2", "b2", "W3", "b3")


class TrainConfig(BaseModel):
    """Training recipe. Defaults: 2000 epochs, batch 32, Adam at 1e-3."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epochs: int = Field(2000, ge=1)
    batch_size: int = Field(32, ge=1)
    learning_rate: float = Field(1e-3, gt=0.0)
    seed: int = 0
    hidden: tuple[PositiveInt, PositiveInt] = (32, 16)


@dataclass(frozen=True, eq=False)
class MlpParams:
    """Weights and biases of the three dense layers.

    Attributes:
        W1: ``h1 x 4`` input-to-hidden weights.
        b1: ``h1`` first hidden biases.
        W2: ``h2 x h1`` hidden-to-hidden weights.
        b2: ``h2`` second hidden biases.
        W3: ``1 x h2`` output weights.
        b3: ``1`` output bias (kJ/m^2).
    """

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    W3: np.ndarray
    b3: np.ndarray

    def __post_init__(self) -> None:
        h1, n_in = self.W1.shape
        h2 = self.W2.shape[0]
        expected = {
            "W1": (h1, n_in),
            "b1": (h1,),
            "W2": (h2, h1),
            "b2": (h2,),
            "W3": (1, h2),
            "b3": (1,),
        }
        for name, shape in expected.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise NeurosymError(f"{name} has shape {arr.shape}, expected {shape}")

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "MlpParams":
        return type(self)(**{k: fn(v) for k, v in self.arrays().items()})

    @property
    def hidden(self) -> tuple[int, int]:
        return (self.W1.shape[0], self.W2.shape[0])

    def all_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(a))) for a in self.arrays().values())


class Gradients(MlpParams):
    """Partial derivatives of the batch loss, shape-congruent with :class:`MlpParams`."""


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    a1: np.ndarray
    a2: np.ndarray
    y_hat: float


@dataclass(frozen=True, eq=False)
class BatchTrace:
    """Pre- and post-activations for a batch, one row per sample."""

    z1: np.ndarray
    a1: np.ndarray
    z2: np.ndarray
    a2: np.ndarray
    y_hat: np.ndarray


@dataclass(frozen=True, eq=False)
class AdamState:
    """Adam moment accumulators and step counter.

    ``m`` and ``v`` share the parameter shapes. ``t`` counts completed steps.
    """

    m: MlpParams
    v: MlpParams
    t: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros_like(cls, params: MlpParams, learning_rate: float = 1e-3) -> "AdamState":
        zeros = params.map(np.zeros_like)
        return cls(m=zeros, v=zeros, t=0, learning_rate=learning_rate)


@dataclass
class LossHistory:
    """Per-epoch mean training loss and full validation loss."""

    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_loss)

    def to_csv(self) -> str:
        lines = ["epoch,train_loss,val_loss"]
        for i, loss in enumerate(self.train_loss):
            val = repr(self.val_loss[i]) if i < len(self.val_loss) else ""
            lines.append(f"{i + 1},{loss!r},{val}")
        return "\n".join(lines) + "\n"


# -------------------------------------------------------------------
# Model
# -------------------------------------------------------------------
def init_params(seed: int, hidden: tuple[int, int] = (32, 16)) -> MlpParams:
    """He-uniform weights (bound ``sqrt(6 / fan_in)``) and zero biases."""

    rng = derive_rng(seed, "init")
    h1, h2 = hidden
    layers = []
    for fan_out, fan_in in ((h1, N_INPUTS), (h2, h1), (1, h2)):
        bound = np.sqrt(6.0 / fan_in)
        layers.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        layers.append(np.zeros(fan_out))
    return MlpParams(*layers)


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def forward_batch(params: MlpParams, X: np.ndarray) -> BatchTrace:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    z1 = X @ params.W1.T + params.b1
    a1 = _relu(z1)
    z2 = a1 @ params.W2.T + params.b2
    a2 = _relu(z2)
    y_hat = (a2 @ params.W3.T + params.b3)[:, 0]
    return BatchTrace(z1, a1, z2, a2, y_hat)


def forward(params: MlpParams, x: np.ndarray) -> ForwardTrace:
    trace = forward_batch(params, np.asarray(x, dtype=np.float64).reshape(1, -1))
    return ForwardTrace(trace.a1[0], trace.a2[0], float(trace.y_hat[0]))


def predict(params: MlpParams, X: np.ndarray) -> np.ndarray:
    return forward_batch(params, X).y_hat


def backward(
    params: MlpParams, batch_x: np.ndarray, batch_y: np.ndarray
) -> tuple[Gradients, float]:
    """Exact gradients of the mean squared error over one batch."""

    X = np.atleast_2d(np.asarray(batch_x, dtype=np.float64))
    y = np.asarray(batch_y, dtype=np.float64).reshape(-1)
    if X.shape[0] == 0 or y.shape[0] == 0:
        raise NeurosymError("empty batch")
    if X.shape[0] != y.shape[0]:
        raise NeurosymError(f"{X.shape[0]} inputs but {y.shape[0]} targets")

    trace = forward_batch(params, X)
    residual = trace.y_hat - y
    loss = float(np.mean(residual * residual))

    d_out = (2.0 / y.shape[0]) * residual[:, None]  # B x 1
    dW3 = d_out.T @ trace.a2
    db3 = d_out.sum(axis=0)
    dz2 = (d_out @ params.W3) * (trace.z2 > 0.0)
    dW2 = dz2.T @ trace.a1
    db2 = dz2.sum(axis=0)
    dz1 = (dz2 @ params.W2) * (trace.z1 > 0.0)
    dW1 = dz1.T @ X
    db1 = dz1.sum(axis=0)
    return Gradients(dW1, db1, dW2, db2, dW3, db3), loss


def adam_step(
    params: MlpParams, grads: MlpParams, state: AdamState
) -> tuple[MlpParams, AdamState]:
    """One bias-corrected Adam update. Returns new params and state."""

    if state.t < 0:
        raise NeurosymError("Adam step counter must be non-negative")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**t
    bc2 = 1.0 - b2**t

    new_p: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    m_old, v_old, g_all = state.m.arrays(), state.v.arrays(), grads.arrays()
    for name, p in params.arrays().items():
        g = g_all[name]
        m = b1 * m_old[name] + (1.0 - b1) * g
        v = b2 * v_old[name] + (1.0 - b2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        new_p[name] = p - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
        new_m[name] = m
        new_v[name] = v

    new_state = AdamState(
        m=MlpParams(**new_m),
        v=MlpParams(**new_v),
        t=t,
        learning_rate=state.learning_rate,
        beta1=b1,
        beta2=b2,
        epsilon=state.epsilon,
    )
    return MlpParams(**new_p), new_state


def train(
    train_set: tuple[np.ndarray, np.ndarray],
    val_set: tuple[np.ndarray, np.ndarray] | None,
    config: TrainConfig,
) -> tuple[MlpParams, LossHistory]:
    """Mini-batch Adam training, reshuffled every epoch from the seed's shuffle stream.

    The last, short batch of an epoch is trained on. The epoch train loss is the
    batch-size weighted mean of the batch losses; validation loss is measured on
    the full validation set after each epoch.
    """

    X = np.atleast_2d(np.asarray(train_set[0], dtype=np.float64))
    y = np.asarray(train_set[1], dtype=np.float64).reshape(-1)
    n = y.shape[0]
    if n == 0:
        raise NeurosymError("empty training set")
    if X.shape[0] != n:
        raise NeurosymError(f"{X.shape[0]} training inputs but {n} targets")

    params = init_params(config.seed, config.hidden)
    state = AdamState.zeros_like(params, config.learning_rate)
    shuffle_rng = derive_rng(config.seed, "shuffle")
    history = LossHistory()

    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            grads, loss = backward(params, X[idx], y[idx])
            params, state = adam_step(params, grads, state)
            total += loss * idx.shape[0]
        history.train_loss.append(total / n)

        if val_set is not None:
            val_pred = predict(params, val_set[0])
            resid = val_pred - np.asarray(val_set[1], dtype=np.float64).reshape(-1)
            history.val_loss.append(float(np.mean(resid * resid)))

        if not np.isfinite(history.train_loss[-1]):
            raise NeurosymError(f"training diverged at epoch {epoch + 1}")
        if (epoch + 1) % 100 == 0 or epoch == 0:
            logger.debug(
                "epoch %d/%d train_loss=%.6g val_loss=%s",
                epoch + 1,
                config.epochs,
                history.train_loss[-1],
                f"{history.val_loss[-1]:.6g}" if history.val_loss else "-",
            )
    return params, history


def extract_features(params: MlpParams, X: np.ndarray) -> np.ndarray:
    """Second hidden layer activations, one row per input: the learned features."""

    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise NeurosymError("no inputs to extract features from")
    return forward_batch(params, X).a2


# -------------------------------------------------------------------
# Persistence (layout documented in docs/FORMATS.md)
# -------------------------------------------------------------------
MODEL_MAGIC = b"NSYMMLP\x00"
MODEL_VERSION = 1


@dataclass(frozen=True, eq=False)
class SavedModel:
    params: MlpParams
    config: TrainConfig
    extra: dict[str, Any]


def save_params(
    path: str | Path,
    params: MlpParams,
    config: TrainConfig,
    extra: dict[str, Any] | None = None,
) -> Path:
    header = json.dumps(
        {"train_config": config.model_dump(mode="json"), "extra": extra or {}},
        sort_keys=True,
    ).encode("utf-8")
    chunks = [MODEL_MAGIC, struct.pack("<II", MODEL_VERSION, len(header)), header]
    arrays = params.arrays()
    chunks.append(struct.pack("<I", len(arrays)))
    for name in PARAM_NAMES:
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes(order="C"))

    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(b"".join(chunks))
    return out


def load_params(path: str | Path) -> SavedModel:
    blob = Path(path).read_bytes()
    view = memoryview(blob)
    pos = 0

    def take(size: int) -> memoryview:
        nonlocal pos
        if pos + size > len(blob):
            raise ModelFormatError("model file is truncated")
        out = view[pos : pos + size]
        pos += size
        return out

    if bytes(take(len(MODEL_MAGIC))) != MODEL_MAGIC:
        raise ModelFormatError("not a neurosym model file")
    version, header_len = struct.unpack("<II", take(8))
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model file version {version}")
    try:
        header = json.loads(bytes(take(header_len)).decode("utf-8"))
        config = TrainConfig.model_validate(header["train_config"])
    except (ValueError, KeyError) as e:
        raise ModelFormatError(f"bad model header: {e}") from e

    (count,) = struct.unpack("<I", take(4))
    if count != len(PARAM_NAMES):
        raise ModelFormatError(f"expected {len(PARAM_NAMES)} arrays, found {count}")
    arrays: dict[str, np.ndarray] = {}
    for name in PARAM_NAMES:
        (ndim,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        size = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(take(8 * size), dtype="<f8").astype(np.float64)
        arrays[name] = data.reshape(shape)
    if pos != len(blob):
        raise ModelFormatError("trailing bytes after model arrays")
    try:
        params = MlpParams(**arrays)
    except NeurosymError as e:
        raise ModelFormatError(str(e)) from e
    if not params.all_finite():
        raise ModelFormatError("model file holds non-finite weights")
    return SavedModel(params, config, dict(header.get("extra") or {}))
