"""Span scorer: hashed-embedding prefix-sum encoder plus a one-layer feed-forward head.

The encoder is deliberately small.  Each word hashes to a row of a forward
and a backward embedding table; ``y_fwd[i]`` is the sum of forward embeddings
of words ``1..i`` and ``y_bwd[i]`` the sum of backward embeddings of words
``i..n``.  A span ``(i, j)`` is represented as

    [y_fwd[j] - y_fwd[i] ; y_bwd[j+1] - y_bwd[i+1]]

and scored with ``W2 relu(LN(W1 x + b1)) + b2``.  Gradients are computed by
hand in :func:`backward`.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np

from .chart import SpanScores
from .errors import EmptySentence, NonFiniteParameter

LN_EPS = 1e-5
DEFAULT_SEED = 777
PARAM_NAMES = ("emb_fwd", "emb_bwd", "W1", "b1", "ln_gain", "ln_bias", "W2", "b2")


def word_hash(word: str) -> int:
    """Stable 64-bit hash (Python's ``hash`` is salted per process)."""
    return int.from_bytes(hashlib.blake2b(word.encode("utf-8"), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class ScorerModel:
    emb_fwd: np.ndarray   # (V, d/2)
    emb_bwd: np.ndarray   # (V, d/2)
    W1: np.ndarray        # (d, h)
    b1: np.ndarray        # (h,)
    ln_gain: np.ndarray   # (h,)
    ln_bias: np.ndarray   # (h,)
    W2: np.ndarray        # (h, L)
    b2: np.ndarray        # (L,)

    @classmethod
    def init(cls, num_labels, d=64, h=250, vocab_hash_dim=8192, seed=DEFAULT_SEED):
        if d % 2:
            raise ValueError("encoder dimension d must be even")
        rng = np.random.default_rng(seed)

        def u(*shape):
            return rng.uniform(-0.1, 0.1, size=shape)

        return cls(
            emb_fwd=u(vocab_hash_dim, d // 2),
            emb_bwd=u(vocab_hash_dim, d // 2),
            W1=u(d, h),
            b1=u(h),
            ln_gain=np.ones(h),
            ln_bias=np.zeros(h),
            W2=u(h, num_labels),
            b2=u(num_labels),
        )

    @property
    def vocab_hash_dim(self) -> int:
        return self.emb_fwd.shape[0]

    @property
    def d(self) -> int:
        return self.W1.shape[0]

    @property
    def h(self) -> int:
        return self.W1.shape[1]

    @property
    def num_labels(self) -> int:
        return self.W2.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def check_finite(self):
        for name, value in self.params().items():
            if not np.isfinite(value).all():
                raise NonFiniteParameter(f"parameter {name} is not finite")

    def updated(self, grads: dict, lr: float) -> "ScorerModel":
        return replace(self, **{k: getattr(self, k) - lr * g for k, g in grads.items()})

    def equals(self, other: "ScorerModel") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.params().values(), other.params().values()))

    def save(self, path):
        d, h = self.d, self.h
        with open(path, "wb") as f:
            f.write(_MAGIC)
            f.write(struct.pack("<IIIII", _VERSION, self.vocab_hash_dim, d, h, self.num_labels))
            for name in PARAM_NAMES:
                f.write(np.ascontiguousarray(getattr(self, name), dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "ScorerModel":
        with open(path, "rb") as f:
            if f.read(len(_MAGIC)) != _MAGIC:
                raise ValueError(f"{path}: not a scorer checkpoint")
            version, V, d, h, nlab = struct.unpack("<IIIII", f.read(20))
            if version != _VERSION:
                raise ValueError(f"{path}: unsupported checkpoint version {version}")
            shapes = {
                "emb_fwd": (V, d // 2), "emb_bwd": (V, d // 2), "W1": (d, h), "b1": (h,),
                "ln_gain": (h,), "ln_bias": (h,), "W2": (h, nlab), "b2": (nlab,),
            }
            arrays = {}
            for name in PARAM_NAMES:
                shape = shapes[name]
                count = int(np.prod(shape))
                buf = f.read(8 * count)
                if len(buf) != 8 * count:
                    raise ValueError(f"{path}: truncated checkpoint")
                arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).astype(np.float64)
        return cls(**arrays)


_MAGIC = b"RCKYMODL"
_VERSION = 1


@dataclass(frozen=True)
class EncodedSentence:
    n: int
    y_fwd: np.ndarray   # (n+1, d/2), y_fwd[0] = 0
    y_bwd: np.ndarray   # (n+2, d/2), y_bwd[n+1] = 0
    ids: np.ndarray     # (n,) embedding rows of the words


def encode(model: ScorerModel, words: Sequence[str]) -> EncodedSentence:
    n = len(words)
    if n == 0:
        raise EmptySentence("cannot encode an empty sentence")
    ids = np.array([word_hash(w) % model.vocab_hash_dim for w in words], dtype=np.int64)
    half = model.d // 2
    y_fwd = np.zeros((n + 1, half))
    y_fwd[1:] = np.cumsum(model.emb_fwd[ids], axis=0)
    y_bwd = np.zeros((n + 2, half))
    y_bwd[1:-1] = np.cumsum(model.emb_bwd[ids][::-1], axis=0)[::-1]
    return EncodedSentence(n, y_fwd, y_bwd, ids)


def span_vector(enc: EncodedSentence, i: int, j: int) -> np.ndarray:
    if not 0 <= i < j <= enc.n:
        raise IndexError(f"span ({i}, {j}) out of range for n={enc.n}")
    return np.concatenate([enc.y_fwd[j] - enc.y_fwd[i], enc.y_bwd[j + 1] - enc.y_bwd[i + 1]])


@dataclass
class _Cache:
    iu: np.ndarray
    ju: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    inv_std: np.ndarray
    z: np.ndarray
    r: np.ndarray


def _forward(model: ScorerModel, enc: EncodedSentence):
    iu, ju = np.triu_indices(enc.n + 1, k=1)
    x = np.concatenate([enc.y_fwd[ju] - enc.y_fwd[iu], enc.y_bwd[ju + 1] - enc.y_bwd[iu + 1]], axis=1)
    a = x @ model.W1 + model.b1
    mu = a.mean(axis=1, keepdims=True)
    centered = a - mu
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=1, keepdims=True) + LN_EPS)
    xhat = centered * inv_std
    z = model.ln_gain * xhat + model.ln_bias
    r = np.maximum(z, 0.0)
    out = r @ model.W2 + model.b2
    return out, _Cache(iu, ju, x, xhat, inv_std, z, r)


def score_spans(model: ScorerModel, enc: EncodedSentence, return_cache=False):
    model.check_finite()
    out, cache = _forward(model, enc)
    data = np.zeros((enc.n + 1, enc.n + 1, model.num_labels))
    data[cache.iu, cache.ju] = out
    scores = SpanScores(data)
    return (scores, cache) if return_cache else scores


def backward(model: ScorerModel, enc: EncodedSentence, cache: _Cache, dscores: np.ndarray) -> dict:
    """Parameter gradients given d(loss)/d(s[i, j, l]) as an (n+1, n+1, L) array."""
    dout_all = dscores[cache.iu, cache.ju]
    rows = np.flatnonzero(np.any(dout_all != 0, axis=1))
    grads = {name: np.zeros_like(value) for name, value in model.params().items()}
    if rows.size == 0:
        return grads
    dout = dout_all[rows]
    r, z, xhat, inv_std, x = (cache.r[rows], cache.z[rows], cache.xhat[rows],
                              cache.inv_std[rows], cache.x[rows])
    grads["W2"] = r.T @ dout
    grads["b2"] = dout.sum(axis=0)
    dz = (dout @ model.W2.T) * (z > 0)
    grads["ln_gain"] = (dz * xhat).sum(axis=0)
    grads["ln_bias"] = dz.sum(axis=0)
    dxhat = dz * model.ln_gain
    da = inv_std * (dxhat - dxhat.mean(axis=1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=1, keepdims=True))
    grads["W1"] = x.T @ da
    grads["b1"] = da.sum(axis=0)
    dx = da @ model.W1.T
    half = model.d // 2
    # word p (1-based) lies inside span (i, j) iff i < p <= j
    pos = np.arange(1, enc.n + 1)
    member = ((cache.iu[rows, None] < pos) & (pos <= cache.ju[rows, None])).astype(np.float64)
    np.add.at(grads["emb_fwd"], enc.ids, member.T @ dx[:, :half])
    np.add.at(grads["emb_bwd"], enc.ids, -(member.T @ dx[:, half:]))
    return grads
