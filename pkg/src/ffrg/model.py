"""Token classifier: shared ReLU trunk and K classification branches.

Branch 1 is a single affine map from the trunk representation to the
N+1 classes; branches k >= 2 add one ReLU hidden layer.  Gradients are
analytic (softmax cross-entropy backprop), the optimizer is standard
Adam, and checkpoints are a fixed little-endian binary layout described
in docs/checkpoint.md.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .docmodel import FieldSchema, ValidationError

CHECKPOINT_MAGIC = b"FFRG1"


@dataclass
class ModelParams:
    d_in: int
    hidden: int
    branch_hidden: int
    n_fields: int
    n_branches: int
    tensors: dict[str, np.ndarray]
    schema_digest: bytes

    @property
    def n_classes(self) -> int:
        return self.n_fields + 1

    def copy(self) -> "ModelParams":
        return replace(self, tensors={k: v.copy() for k, v in self.tensors.items()})


def tensor_keys(n_branches: int) -> list[str]:
    """Canonical tensor order; also the checkpoint block order."""
    keys = ["trunk.w", "trunk.b", "branch1.out.w", "branch1.out.b"]
    for k in range(2, n_branches + 1):
        keys += [
            f"branch{k}.hid.w",
            f"branch{k}.hid.b",
            f"branch{k}.out.w",
            f"branch{k}.out.b",
        ]
    return keys


def tensor_shapes(
    d_in: int, hidden: int, branch_hidden: int, n_fields: int, n_branches: int
) -> dict[str, tuple[int, ...]]:
    n_out = n_fields + 1
    shapes: dict[str, tuple[int, ...]] = {
        "trunk.w": (d_in, hidden),
        "trunk.b": (hidden,),
        "branch1.out.w": (hidden, n_out),
        "branch1.out.b": (n_out,),
    }
    for k in range(2, n_branches + 1):
        shapes[f"branch{k}.hid.w"] = (hidden, branch_hidden)
        shapes[f"branch{k}.hid.b"] = (branch_hidden,)
        shapes[f"branch{k}.out.w"] = (branch_hidden, n_out)
        shapes[f"branch{k}.out.b"] = (n_out,)
    return shapes


def init_params(
    d_in: int,
    n_fields: int,
    n_branches: int,
    schema_digest: bytes,
    hidden: int = 64,
    branch_hidden: int = 64,
    seed: int = 0,
) -> ModelParams:
    """Seeded initialization.

    Weights draw in canonical tensor order from a stream keyed [seed, 0],
    so the trunk and branch 1 are bitwise identical across runs that
    differ only in n_branches.  Weight scale is 1/sqrt(fan_in); biases
    start at zero.
    """
    rng = np.random.default_rng([seed, 0])
    shapes = tensor_shapes(d_in, hidden, branch_hidden, n_fields, n_branches)
    tensors: dict[str, np.ndarray] = {}
    for key in tensor_keys(n_branches):
        shape = shapes[key]
        if key.endswith(".b"):
            tensors[key] = np.zeros(shape, dtype=np.float64)
        else:
            scale = 1.0 / np.sqrt(shape[0])
            tensors[key] = rng.normal(0.0, scale, size=shape)
    return ModelParams(
        d_in, hidden, branch_hidden, n_fields, n_branches, tensors, bytes(schema_digest)
    )


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: ModelParams, features: np.ndarray, branch: int) -> np.ndarray:
    """(M, N+1) softmax probability rows for one branch."""
    if features.ndim != 2 or features.shape[1] != params.d_in:
        raise ValidationError(
            f"feature matrix has width {features.shape[-1]}, model expects {params.d_in}"
        )
    if not 1 <= branch <= params.n_branches:
        raise ValidationError(f"branch {branch} out of range 1..{params.n_branches}")
    t = params.tensors
    h = _relu(features @ t["trunk.w"] + t["trunk.b"])
    if branch == 1:
        logits = h @ t["branch1.out.w"] + t["branch1.out.b"]
    else:
        h2 = _relu(h @ t[f"branch{branch}.hid.w"] + t[f"branch{branch}.hid.b"])
        logits = h2 @ t[f"branch{branch}.out.w"] + t[f"branch{branch}.out.b"]
    return _softmax(logits)


def branch_loss_and_grad(
    params: ModelParams,
    features: np.ndarray,
    targets: Sequence[tuple[float, np.ndarray]],
    branch: int,
    train_trunk: bool,
) -> tuple[float, dict[str, np.ndarray]]:
    """Weighted sum of mean cross-entropies for one branch, with gradients.

    targets is a list of (weight, labels) pairs where labels is an int
    array of classes in 0..N; the loss is sum_j weight_j * meanCE(s_branch,
    labels_j).  Gradients cover the branch tensors, plus the trunk when
    train_trunk is set.
    """
    t = params.tensors
    m = features.shape[0]
    if m == 0:
        raise ValidationError("cannot take a loss over zero words")
    n_out = params.n_classes
    for _, y in targets:
        if y.shape != (m,) or y.min() < 0 or y.max() >= n_out:
            raise ValidationError("label vector shape or class range invalid")

    a1 = features @ t["trunk.w"] + t["trunk.b"]
    h = _relu(a1)
    if branch == 1:
        logits = h @ t["branch1.out.w"] + t["branch1.out.b"]
    else:
        a2 = h @ t[f"branch{branch}.hid.w"] + t[f"branch{branch}.hid.b"]
        h2 = _relu(a2)
        logits = h2 @ t[f"branch{branch}.out.w"] + t[f"branch{branch}.out.b"]
    probs = _softmax(logits)

    loss = 0.0
    dlogits = np.zeros_like(probs)
    rows = np.arange(m)
    for weight, y in targets:
        picked = probs[rows, y]
        loss += weight * float(-np.log(picked).mean())
        contrib = probs.copy()
        contrib[rows, y] -= 1.0
        dlogits += (weight / m) * contrib

    grads: dict[str, np.ndarray] = {}
    if branch == 1:
        grads["branch1.out.w"] = h.T @ dlogits
        grads["branch1.out.b"] = dlogits.sum(axis=0)
        dh = dlogits @ t["branch1.out.w"].T
    else:
        grads[f"branch{branch}.out.w"] = h2.T @ dlogits
        grads[f"branch{branch}.out.b"] = dlogits.sum(axis=0)
        dh2 = dlogits @ t[f"branch{branch}.out.w"].T
        da2 = dh2 * (a2 > 0.0)
        grads[f"branch{branch}.hid.w"] = h.T @ da2
        grads[f"branch{branch}.hid.b"] = da2.sum(axis=0)
        dh = da2 @ t[f"branch{branch}.hid.w"].T
    if train_trunk:
        da1 = dh * (a1 > 0.0)
        grads["trunk.w"] = features.T @ da1
        grads["trunk.b"] = da1.sum(axis=0)
    return loss, grads


# --- Adam -------------------------------------------------------------------

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    def __init__(self):
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0


def adam_step(
    params: ModelParams, grads: dict[str, np.ndarray], state: AdamState, lr: float
) -> None:
    """One bias-corrected Adam update, in place, over the keys in grads."""
    state.t += 1
    t = state.t
    for key in sorted(grads):
        g = grads[key]
        if key not in state.m:
            state.m[key] = np.zeros_like(g)
            state.v[key] = np.zeros_like(g)
        state.m[key] = BETA1 * state.m[key] + (1.0 - BETA1) * g
        state.v[key] = BETA2 * state.v[key] + (1.0 - BETA2) * (g * g)
        m_hat = state.m[key] / (1.0 - BETA1**t)
        v_hat = state.v[key] / (1.0 - BETA2**t)
        params.tensors[key] = params.tensors[key] - lr * m_hat / (np.sqrt(v_hat) + EPSILON)


# --- Checkpoint I/O ---------------------------------------------------------

def save_model(path: str, params: ModelParams) -> None:
    """magic, schema digest, dims as LE uint32, float64-LE tensor blocks."""
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        if len(params.schema_digest) != 32:
            raise ValidationError("schema digest must be 32 bytes")
        f.write(params.schema_digest)
        f.write(
            struct.pack(
                "<5I",
                params.d_in,
                params.hidden,
                params.branch_hidden,
                params.n_fields,
                params.n_branches,
            )
        )
        shapes = tensor_shapes(
            params.d_in, params.hidden, params.branch_hidden,
            params.n_fields, params.n_branches,
        )
        for key in tensor_keys(params.n_branches):
            arr = params.tensors[key]
            if arr.shape != shapes[key]:
                raise ValidationError(f"tensor {key} has shape {arr.shape}, expected {shapes[key]}")
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path: str, schema: FieldSchema | None = None) -> ModelParams:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise ValidationError(f"{path}: not a model checkpoint (bad magic)")
    off = len(CHECKPOINT_MAGIC)
    digest = blob[off : off + 32]
    off += 32
    d_in, hidden, branch_hidden, n_fields, n_branches = struct.unpack_from("<5I", blob, off)
    off += 20
    if schema is not None and digest != schema.digest():
        raise ValidationError(f"{path}: checkpoint was trained against a different schema")
    shapes = tensor_shapes(d_in, hidden, branch_hidden, n_fields, n_branches)
    tensors: dict[str, np.ndarray] = {}
    for key in tensor_keys(n_branches):
        shape = shapes[key]
        count = int(np.prod(shape))
        block = np.frombuffer(blob, dtype="<f8", count=count, offset=off)
        off += count * 8
        tensors[key] = block.reshape(shape).astype(np.float64)
    if off != len(blob):
        raise ValidationError(f"{path}: trailing bytes after weight blocks")
    return ModelParams(d_in, hidden, branch_hidden, n_fields, n_branches, tensors, digest)
