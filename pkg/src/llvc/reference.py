"""Sequential-summation reference kernels.

Each output element here is accumulated one product at a time in a single
documented order (kernel tap outer, input channel inner). These are the
ground-truth path for validating the vectorized kernels: slow, but their
result for a given element never depends on call shape, so they are exact
under any input split. Keep shapes small when calling these.
"""

import math

import numpy as np

_F32 = np.float32


def causal_conv1d_ref(x, w, b, dilation, cache):
    x = np.asarray(x, dtype=_F32)
    w = np.asarray(w, dtype=_F32)
    b = np.asarray(b, dtype=_F32)
    cache = np.asarray(cache, dtype=_F32)
    c_out, c_in, k = w.shape
    t = x.shape[1]
    full = np.concatenate([cache, x], axis=1)
    y = np.zeros((c_out, t), dtype=_F32)
    for o in range(c_out):
        for i in range(t):
            acc = _F32(0.0)
            for kk in range(k):
                for c in range(c_in):
                    acc = _F32(acc + _F32(full[c, i + kk * dilation] * w[o, c, kk]))
            y[o, i] = _F32(acc + b[o])
    new_cache = full[:, t:].copy()
    return y, new_cache


def framing_conv_ref(x, w, b, stride):
    x = np.asarray(x, dtype=_F32)
    w = np.asarray(w, dtype=_F32)
    b = np.asarray(b, dtype=_F32)
    dim = w.shape[0]
    win = 3 * stride
    n = (x.shape[0] - 2 * stride) // stride
    y = np.zeros((dim, n), dtype=_F32)
    for o in range(dim):
        for i in range(n):
            acc = _F32(0.0)
            for j in range(win):
                acc = _F32(acc + _F32(x[i * stride + j] * w[o, 0, j]))
            y[o, i] = _F32(acc + b[o])
    return y


def synth_transpose_conv_ref(frames, w, stride, tail):
    frames = np.asarray(frames, dtype=_F32)
    w = np.asarray(w, dtype=_F32)
    tail = np.asarray(tail, dtype=_F32)
    dim, n = frames.shape
    win = 3 * stride
    out = np.zeros(n * stride + 2 * stride, dtype=_F32)
    out[: 2 * stride] = tail
    for i in range(n):
        # one frame's kernel response, accumulated over channels in order
        for j in range(win):
            acc = _F32(0.0)
            for c in range(dim):
                acc = _F32(acc + _F32(frames[c, i] * w[c, 0, j]))
            out[i * stride + j] = _F32(out[i * stride + j] + acc)
    return out[: n * stride].copy(), out[n * stride:].copy()


def mha_causal_ref(x, wq, wk, wv, wo, heads, cached_k, cached_v, window):
    """Brute-force masked attention; cache passed as raw (m, dim) arrays."""
    x = np.asarray(x, dtype=np.float64)
    wq, wk, wv, wo = (np.asarray(m, dtype=np.float64) for m in (wq, wk, wv, wo))
    cached_k = np.asarray(cached_k, dtype=np.float64)
    cached_v = np.asarray(cached_v, dtype=np.float64)
    n, dim = x.shape
    dh = dim // heads
    m = cached_k.shape[0]
    q = x @ wq.T
    k_all = np.concatenate([cached_k, x @ wk.T], axis=0)
    v_all = np.concatenate([cached_v, x @ wv.T], axis=0)
    y = np.zeros((n, dim))
    for t in range(n):
        span = m + t + 1
        row = np.zeros(dim)
        for h in range(heads):
            sl = slice(h * dh, (h + 1) * dh)
            logits = np.array(
                [q[t, sl] @ k_all[j, sl] / math.sqrt(dh) for j in range(span)]
            )
            e = np.exp(logits - logits.max())
            p = e / e.sum()
            row[sl] = sum(p[j] * v_all[j, sl] for j in range(span))
        y[t] = row @ wo.T
    new_k = k_all[-window:] if k_all.shape[0] > window else k_all
    new_v = v_all[-window:] if v_all.shape[0] > window else v_all
    return y.astype(_F32), new_k.astype(_F32), new_v.astype(_F32)
