"""Numeric kernels with explicit cache passing.

Everything here is a pure float32 function: the caller owns all state and
passes it in, so the same kernel serves both offline and chunked execution.
Heavy reductions go through BLAS matmuls arranged so that the summation
order for any output element depends only on the weight shapes, never on
how many frames are in the call. Degenerate single-row/column products are
padded up to 2x2 because the BLAS vector fast path sums in a different
order than the matrix path, which would break bit-exact chunk/offline
equivalence.

Convolution tensors are channel-major (channels, time); attention tensors
are frame-major (frames, dim).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, FramingError, ConfigError, ParameterError

_F32 = np.float32


def _as_f32_2d(x, name):
    x = np.asarray(x, dtype=_F32)
    if x.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {x.shape}")
    return x


def _gemm(a, b):
    """a @ b, padded so BLAS always takes the (bit-stable) GEMM path."""
    m, n = a.shape[0], b.shape[1]
    if m == 0 or n == 0:
        return np.zeros((m, n), dtype=_F32)
    pa = np.concatenate([a, np.zeros((1, a.shape[1]), dtype=_F32)]) if m == 1 else a
    pb = np.concatenate([b, np.zeros((b.shape[0], 1), dtype=_F32)], axis=1) if n == 1 else b
    y = pa @ pb
    if m == 1 or n == 1:
        y = y[:m, :n]
    return y


# ---------------------------------------------------------------------------
# convolutions
# ---------------------------------------------------------------------------

def conv_context(kernel_size: int, dilation: int) -> int:
    """Width in samples of the left context a causal conv needs."""
    return (kernel_size - 1) * dilation


def zero_conv_cache(channels: int, kernel_size: int, dilation: int) -> np.ndarray:
    return np.zeros((channels, conv_context(kernel_size, dilation)), dtype=_F32)


def pack_conv_weight(w) -> np.ndarray:
    """Reorder (c_out, c_in, k) weights into a (c_out, k*c_in) GEMM matrix."""
    w = np.asarray(w, dtype=_F32)
    if w.ndim != 3:
        raise ShapeError(f"conv weight must be 3-D, got shape {w.shape}")
    c_out, c_in, k = w.shape
    return np.ascontiguousarray(w.transpose(0, 2, 1).reshape(c_out, k * c_in))


def _time_slice(cache, x, start, length):
    """Columns [start, start+length) of cache ++ x, without concatenating."""
    ctx = cache.shape[1]
    if start + length <= ctx:
        return cache[:, start:start + length]
    if start >= ctx:
        return x[:, start - ctx:start - ctx + length]
    out = np.empty((cache.shape[0], length), dtype=_F32)
    split = ctx - start
    out[:, :split] = cache[:, start:]
    out[:, split:] = x[:, :length - split]
    return out


DEFAULT_TIME_BLOCK = 64


def causal_conv1d(x, w, b, dilation, cache, packed=None, time_block=DEFAULT_TIME_BLOCK):
    """Dilated causal 1-D convolution with a carried left-context cache.

    x: (c_in, t); w: (c_out, c_in, k); b: (c_out,); cache: (c_in, (k-1)*dilation).
    Returns (y, new_cache) where y[:, i] depends only on x[:, :i+1] and the
    cache, and new_cache is the trailing context of cache ++ x.

    Time is processed in fixed blocks of `time_block` columns (the last
    block zero-padded), so every matmul a given layer ever issues has one
    shape and a sample's arithmetic cannot depend on where a chunk boundary
    fell. That is what makes split/offline equivalence exact rather than
    approximate. time_block is part of a layer's identity: compare outputs
    only across calls that used the same value.
    """
    x = _as_f32_2d(x, "x")
    w = np.asarray(w, dtype=_F32)
    if w.ndim != 3:
        raise ShapeError(f"conv weight must be 3-D, got shape {w.shape}")
    c_out, c_in, k = w.shape
    if dilation < 1:
        raise ShapeError(f"dilation must be >= 1, got {dilation}")
    if time_block < 2:
        raise ShapeError(f"time_block must be >= 2, got {time_block}")
    if x.shape[0] != c_in:
        raise ShapeError(f"input has {x.shape[0]} channels, weight expects {c_in}")
    b = np.asarray(b, dtype=_F32)
    if b.shape != (c_out,):
        raise ShapeError(f"bias shape {b.shape} != ({c_out},)")
    ctx = conv_context(k, dilation)
    cache = _as_f32_2d(cache, "cache")
    if cache.shape != (c_in, ctx):
        raise ShapeError(
            f"cache shape {cache.shape} != ({c_in}, {ctx}) "
            f"for kernel {k} dilation {dilation}"
        )
    if packed is None:
        packed = pack_conv_weight(w)
    t = x.shape[1]
    y = np.empty((c_out, t), dtype=_F32)
    for lo in range(0, t, time_block):
        width = min(time_block, t - lo)
        if width == time_block:
            cols = np.empty((k * c_in, time_block), dtype=_F32)
        else:
            cols = np.zeros((k * c_in, time_block), dtype=_F32)
        for i in range(k):
            cols[i * c_in:(i + 1) * c_in, :width] = _time_slice(
                cache, x, lo + i * dilation, width
            )
        y[:, lo:lo + width] = _gemm(packed, cols)[:, :width]
    y += b[:, None]
    if ctx:
        tail = _time_slice(cache, x, t, ctx)
        new_cache = tail.copy() if tail.base is not None else tail
    else:
        new_cache = np.zeros((c_in, 0), dtype=_F32)
    return y, new_cache


def framing_conv(x, w, b, stride, packed=None, time_block=DEFAULT_TIME_BLOCK):
    """Strided conv that turns samples into latent frames.

    x: (n*stride + 2*stride,) samples; w: (dim, 1, 3*stride); b: (dim,).
    Frame i is the affine image of the window x[i*stride : i*stride + 3*stride],
    so the last frame of a block reads 2*stride samples past the block —
    this kernel is the sole source of lookahead in the pipeline. Frames are
    computed in fixed groups of `time_block` (see causal_conv1d).
    """
    x = np.asarray(x, dtype=_F32)
    if x.ndim != 1:
        raise ShapeError(f"framing input must be 1-D, got shape {x.shape}")
    w = np.asarray(w, dtype=_F32)
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    if time_block < 2:
        raise ShapeError(f"time_block must be >= 2, got {time_block}")
    win = 3 * stride
    if w.ndim != 3 or w.shape[1] != 1 or w.shape[2] != win:
        raise ShapeError(f"framing weight shape {w.shape} != (dim, 1, {win})")
    dim = w.shape[0]
    b = np.asarray(b, dtype=_F32)
    if b.shape != (dim,):
        raise ShapeError(f"bias shape {b.shape} != ({dim},)")
    t = x.shape[0]
    if t < win or (t - 2 * stride) % stride != 0:
        raise FramingError(
            f"input length {t} is not n*{stride} + {2 * stride} for n >= 1"
        )
    n = (t - 2 * stride) // stride
    windows = np.lib.stride_tricks.sliding_window_view(x, win)[::stride].T
    if packed is None:
        packed = np.ascontiguousarray(w.reshape(dim, win))
    y = np.empty((dim, n), dtype=_F32)
    for lo in range(0, n, time_block):
        width = min(time_block, n - lo)
        if width == time_block:
            block = windows[:, lo:lo + width]
        else:
            block = np.zeros((win, time_block), dtype=_F32)
            block[:, :width] = windows[:, lo:lo + width]
        y[:, lo:lo + width] = _gemm(packed, block)[:, :width]
    y += b[:, None]
    return y


def synth_transpose_conv(frames, w, stride, tail):
    """Transposed conv back to samples via overlap-add with a carried tail.

    frames: (dim, n); w: (dim, 1, 3*stride); tail: (2*stride,) partial sums
    carried from the previous call. Emits n*stride finished samples and the
    new 2*stride-wide tail. Frame contributions are added in ascending frame
    order after the incoming tail, so the summation order is fixed.
    """
    frames = _as_f32_2d(frames, "frames")
    w = np.asarray(w, dtype=_F32)
    win = 3 * stride
    if w.ndim != 3 or w.shape[1] != 1 or w.shape[2] != win:
        raise ShapeError(f"synthesis weight shape {w.shape} != (dim, 1, {win})")
    dim = w.shape[0]
    if frames.shape[0] != dim:
        raise ShapeError(f"frames have {frames.shape[0]} channels, weight expects {dim}")
    tail = np.asarray(tail, dtype=_F32)
    if tail.shape != (2 * stride,):
        raise ShapeError(f"tail shape {tail.shape} != ({2 * stride},)")
    n = frames.shape[1]
    out = np.zeros(n * stride + 2 * stride, dtype=_F32)
    out[: 2 * stride] = tail
    if n:
        contrib = _gemm(frames.T, w.reshape(dim, win))  # (n, 3*stride)
        for i in range(n):
            off = i * stride
            out[off:off + win] += contrib[i]
    return out[: n * stride].copy(), out[n * stride:].copy()


# ---------------------------------------------------------------------------
# normalization / pointwise
# ---------------------------------------------------------------------------

def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalize the last axis to zero mean / unit variance, then affine."""
    gamma = np.asarray(gamma, dtype=_F32)
    beta = np.asarray(beta, dtype=_F32)
    d = np.shape(x)[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError(
            f"gamma/beta shapes {gamma.shape}/{beta.shape} != ({d},)"
        )
    # private contiguous copy, then everything in place
    y = np.array(x, dtype=_F32, order="C", copy=True)
    mean = y.mean(axis=-1, keepdims=True, dtype=_F32)
    y -= mean
    var = np.mean(y * y, axis=-1, keepdims=True, dtype=_F32)
    var += _F32(eps)
    np.sqrt(var, out=var)
    y /= var
    y *= gamma
    y += beta
    return y


def gelu(x):
    # tanh form; exact-erf variant differs below 1e-3 which is irrelevant here
    x = np.asarray(x, dtype=_F32)
    t = x * x
    t *= x
    t *= _F32(0.044715)
    t += x
    t *= _F32(math.sqrt(2.0 / math.pi))
    np.tanh(t, out=t)
    t += _F32(1.0)
    t *= x
    t *= _F32(0.5)
    return t


def prelu(x, alpha):
    x = np.asarray(x, dtype=_F32)
    return np.where(x >= 0, x, _F32(alpha) * x)


def sigmoid(x):
    x = np.asarray(x, dtype=_F32)
    with np.errstate(over="ignore"):
        return _F32(1.0) / (_F32(1.0) + np.exp(-x))


def softmax_lastdim(x):
    x = np.asarray(x, dtype=_F32)
    m = x.max(axis=-1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=-1, keepdims=True, dtype=_F32)


def pointwise(x, kind, alpha=None):
    """Dispatch by name; `kind` is one of gelu, prelu, sigmoid, softmax."""
    if kind == "gelu":
        return gelu(x)
    if kind == "prelu":
        if alpha is None:
            raise ParameterError("prelu requires an alpha parameter")
        return prelu(x, alpha)
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "softmax":
        return softmax_lastdim(x)
    raise ParameterError(f"unknown pointwise kind {kind!r}")


def linear(x, w, b=None):
    """Affine map over the last axis. w: (d_out, d_in); b: (d_out,) or None."""
    x = np.asarray(x, dtype=_F32)
    w = np.asarray(w, dtype=_F32)
    if w.ndim != 2:
        raise ShapeError(f"weight must be 2-D, got shape {w.shape}")
    d_out, d_in = w.shape
    if x.shape[-1] != d_in:
        raise ShapeError(f"input dim {x.shape[-1]} != weight d_in {d_in}")
    flat = x.reshape(-1, d_in)
    y = _gemm(flat, w.T)
    if b is not None:
        b = np.asarray(b, dtype=_F32)
        if b.shape != (d_out,):
            raise ShapeError(f"bias shape {b.shape} != ({d_out},)")
        y = y + b
    return y.reshape(x.shape[:-1] + (d_out,))


# ---------------------------------------------------------------------------
# attention
# ---------------------------------------------------------------------------

@dataclass
class KVCache:
    """Sliding window of projected key/value frames, oldest first."""
    keys: np.ndarray    # (m, dim)
    values: np.ndarray  # (m, dim)

    @classmethod
    def empty(cls, dim: int) -> "KVCache":
        return cls(np.zeros((0, dim), dtype=_F32), np.zeros((0, dim), dtype=_F32))

    def __len__(self):
        return self.keys.shape[0]


def mha_causal(x, wq, wk, wv, wo, heads, kv_cache, window):
    """Masked multi-head self-attention over cached + current frames.

    x: (n, dim). Row t attends to every cached frame plus rows 0..t of the
    current call; no projection biases. Returns (y, new_cache) where the new
    cache holds the most recent min(window, cached + n) key/value frames.
    """
    x = _as_f32_2d(x, "x")
    n, dim = x.shape
    if dim % heads != 0:
        raise ConfigError(f"dim {dim} not divisible by heads {heads}")
    if window < 1:
        raise ConfigError(f"attention window must be >= 1, got {window}")
    for name, mat in (("wq", wq), ("wk", wk), ("wv", wv), ("wo", wo)):
        mat = np.asarray(mat)
        if mat.shape != (dim, dim):
            raise ShapeError(f"{name} shape {mat.shape} != ({dim}, {dim})")
    if kv_cache.keys.shape[1] != dim or kv_cache.values.shape[1] != dim:
        raise ShapeError("kv cache dim does not match input dim")
    if n == 0:
        return x.copy(), kv_cache

    # pad single frames so every matmul stays on the GEMM path
    padded = n == 1
    xq = np.concatenate([x, np.zeros_like(x)], axis=0) if padded else x
    rows = xq.shape[0]

    dh = dim // heads
    scale = _F32(1.0 / math.sqrt(dh))
    wq = np.asarray(wq, dtype=_F32)
    wk = np.asarray(wk, dtype=_F32)
    wv = np.asarray(wv, dtype=_F32)
    wo = np.asarray(wo, dtype=_F32)

    q = (xq @ wq.T) * scale
    k_new = xq @ wk.T
    v_new = xq @ wv.T

    m = len(kv_cache)
    k_all = np.concatenate([kv_cache.keys, k_new], axis=0)
    v_all = np.concatenate([kv_cache.values, v_new], axis=0)
    total = m + rows

    qh = q.reshape(rows, heads, dh).transpose(1, 0, 2)          # (h, rows, dh)
    kh = k_all.reshape(total, heads, dh).transpose(1, 2, 0)     # (h, dh, total)
    vh = v_all.reshape(total, heads, dh).transpose(1, 0, 2)     # (h, total, dh)

    scores = np.matmul(qh, kh)                                   # (h, rows, total)
    future = np.arange(total)[None, :] > (m + np.arange(rows)[:, None])
    scores[:, future] = -np.inf
    probs = softmax_lastdim(scores)
    ctx = np.matmul(probs, vh)                                   # (h, rows, dh)
    y = ctx.transpose(1, 0, 2).reshape(rows, dim) @ wo.T

    keep_k = np.concatenate([kv_cache.keys, k_new[:n]], axis=0)
    keep_v = np.concatenate([kv_cache.values, v_new[:n]], axis=0)
    if keep_k.shape[0] > window:
        keep_k = keep_k[-window:].copy()
        keep_v = keep_v[-window:].copy()
    return np.ascontiguousarray(y[:n]), KVCache(keep_k, keep_v)
