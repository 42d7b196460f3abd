"""Brute-force float64 oracles, written straight from the definitions.

These deliberately share no code with the package: convolutions iterate the
definition sample by sample, attention iterates per (row, head) with scalar
softmax. Used to pin expected values and to bound the fast kernels.
"""

import math

import numpy as np


def conv_oracle(x, w, b, dilation, cache):
    """y[o, t] = b[o] + sum_{k, c} w[o, c, k] * full[c, t + k*dilation]."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cache = np.asarray(cache, dtype=np.float64)
    c_out, c_in, k = w.shape
    t_len = x.shape[1]
    full = np.concatenate([cache, x], axis=1)
    y = np.zeros((c_out, t_len))
    for o in range(c_out):
        for t in range(t_len):
            acc = b[o]
            for kk in range(k):
                for c in range(c_in):
                    acc += w[o, c, kk] * full[c, t + kk * dilation]
            y[o, t] = acc
    new_cache = full[:, t_len:]
    return y, new_cache


def framing_oracle(x, w, b, stride):
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    dim = w.shape[0]
    win = 3 * stride
    n = (len(x) - 2 * stride) // stride
    y = np.zeros((dim, n))
    for o in range(dim):
        for i in range(n):
            y[o, i] = b[o] + sum(
                w[o, 0, j] * x[i * stride + j] for j in range(win)
            )
    return y


def synth_oracle(frames, w, stride, tail):
    frames = np.asarray(frames, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    tail = np.asarray(tail, dtype=np.float64)
    dim, n = frames.shape
    win = 3 * stride
    out = np.zeros(n * stride + 2 * stride)
    out[: 2 * stride] = tail
    for i in range(n):
        for c in range(dim):
            for j in range(win):
                out[i * stride + j] += frames[c, i] * w[c, 0, j]
    return out[: n * stride], out[n * stride:]


def layer_norm_oracle(x, gamma, beta, eps):
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=-1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=-1, keepdims=True)
    return gamma * (x - mean) / np.sqrt(var + eps) + beta


def mha_oracle(x, wq, wk, wv, wo, heads, cached_k, cached_v):
    """Per-row, per-head scalar attention; returns only the output."""
    x = np.asarray(x, dtype=np.float64)
    wq, wk, wv, wo = (np.asarray(m, dtype=np.float64) for m in (wq, wk, wv, wo))
    cached_k = np.asarray(cached_k, dtype=np.float64)
    cached_v = np.asarray(cached_v, dtype=np.float64)
    n, dim = x.shape
    dh = dim // heads
    m = cached_k.shape[0]
    keys = np.concatenate([cached_k, x @ wk.T], axis=0)
    values = np.concatenate([cached_v, x @ wv.T], axis=0)
    queries = x @ wq.T
    y = np.zeros((n, dim))
    for t in range(n):
        for h in range(heads):
            sl = slice(h * dh, (h + 1) * dh)
            span = m + t + 1
            logits = [
                float(queries[t, sl] @ keys[j, sl]) / math.sqrt(dh)
                for j in range(span)
            ]
            top = max(logits)
            weights = [math.exp(v - top) for v in logits]
            z = sum(weights)
            acc = np.zeros(dh)
            for j in range(span):
                acc += (weights[j] / z) * values[j, sl]
            y[t, sl] = acc
    return y @ wo.T
