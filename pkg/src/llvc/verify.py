"""Self-check property suite behind the `verify` CLI command.

Each property exercises one guarantee of the engine on a real model and
reports measured values, so a deployment can prove its build behaves before
going live. Properties are independent; a crash inside one is recorded as
that property failing, not as a harness error.
"""

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from . import reference
from .kernels import causal_conv1d, framing_conv, synth_transpose_conv, mha_causal, KVCache
from .model import Generator
from .stream import Stream
from .weights import save_weights, load_weights


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _result(name, passed, detail):
    return PropertyResult(name, bool(passed), detail)


def _random_wave(rng, n):
    return (rng.random(n, dtype=np.float64) * 2.0 - 1.0).astype(np.float32)


def check_latency_law(gen, rng, duration_s, chunks_per_call=1):
    """First output appears only once a full batch plus lookahead arrived."""
    cfg = gen.config
    need = chunks_per_call * cfg.chunk_samples + cfg.lookahead_samples
    st = Stream(gen, chunks_per_call)
    wave = _random_wave(rng, need)
    before = st.push(wave[:-1])
    after = st.push(wave[-1:])
    ok = before.size == 0 and after.size == chunks_per_call * cfg.chunk_samples
    return _result(
        "latency-law",
        ok,
        f"first emission after {need} samples: {before.size} then {after.size} "
        f"(expected 0 then {chunks_per_call * cfg.chunk_samples})",
    )


def check_chunking_invariance(gen, rng, duration_s):
    """Any partition of the input across push() calls emits identical bytes."""
    n = max(1, int(duration_s * gen.config.sample_rate))
    wave = _random_wave(rng, n)
    st = Stream(gen)
    whole = np.concatenate([st.push(wave), st.flush()])
    st = Stream(gen)
    parts = []
    pos = 0
    while pos < n:
        step = int(rng.integers(1, 1000))
        parts.append(st.push(wave[pos:pos + step]))
        pos += step
    parts.append(st.flush())
    sliced = np.concatenate(parts)
    ok = whole.shape == sliced.shape and np.array_equal(whole, sliced)
    return _result(
        "chunking-invariance",
        ok,
        f"{n} samples, one push vs random slices: "
        f"{'bit-identical' if ok else 'MISMATCH'}",
    )


def check_causality(gen, rng, duration_s, corrupt_cache=False):
    """Perturbing sample p cannot change chunks whose window ends <= p."""
    cfg = gen.config
    n = max(cfg.window_samples + 1, int(duration_s * cfg.sample_rate))
    wave = _random_wave(rng, n)
    base = gen.forward_offline(wave)
    p = int(rng.integers(cfg.window_samples, n))
    perturbed = wave.copy()
    perturbed[p] = np.float32(np.clip(perturbed[p] + 0.25, -1.0, 1.0))
    if corrupt_cache:
        # test hook: run the perturbed signal with a damaged dcc cache width
        caches = gen.new_caches()
        caches.encoder[0] = caches.encoder[0][:, :-1]
        out = []
        cs = cfg.chunk_samples
        k = -(-n // cs)
        padded = np.zeros(k * cs + cfg.lookahead_samples, np.float32)
        padded[:n] = perturbed
        for c in range(k):
            y, caches = gen.run_chunk(padded[c * cs: c * cs + cfg.window_samples], caches)
            out.append(y)
        other = np.concatenate(out)[:n]
    else:
        other = gen.forward_offline(perturbed)
    safe_chunks = max(0, (p - cfg.window_samples) // cfg.chunk_samples + 1)
    upto = safe_chunks * cfg.chunk_samples
    ok = np.array_equal(base[:upto], other[:upto])
    return _result(
        "causality",
        ok,
        f"perturbed sample {p}; first {upto} output samples "
        f"{'bit-unchanged' if ok else 'CHANGED'}",
    )


def check_flush_length(gen, rng, duration_s):
    """Total output length always equals total input length after flush."""
    max_n = max(1, int(duration_s * gen.config.sample_rate))
    lengths = [0, 1] + [int(rng.integers(1, max_n + 1)) for _ in range(6)]
    bad = []
    for n in lengths:
        st = Stream(gen)
        got = st.push(_random_wave(rng, n)).size + st.flush().size
        if got != n:
            bad.append((n, got))
    return _result(
        "flush-length",
        not bad,
        f"lengths {lengths}: all conserved" if not bad else f"mismatches {bad}",
    )


def check_stream_offline_equivalence(gen, rng, duration_s):
    n = max(1, int(duration_s * gen.config.sample_rate))
    wave = _random_wave(rng, n)
    st = Stream(gen)
    streamed = np.concatenate([st.push(wave), st.flush()])
    offline = gen.forward_offline(wave)
    ok = np.array_equal(streamed, offline)
    return _result(
        "stream-offline-equivalence",
        ok,
        f"{n} samples: {'bit-identical' if ok else 'MISMATCH'}",
    )


def check_batching(gen, rng, duration_s):
    """chunks_per_call in {1, 2, 4} emits bit-identical audio."""
    n = max(1, int(duration_s * gen.config.sample_rate))
    wave = _random_wave(rng, n)
    outs = []
    for ncall in (1, 2, 4):
        st = Stream(gen, chunks_per_call=ncall)
        outs.append(np.concatenate([st.push(wave), st.flush()]))
    ok = all(np.array_equal(outs[0], o) for o in outs[1:])
    return _result(
        "batching-equivalence",
        ok,
        f"N in (1, 2, 4) over {n} samples: {'bit-identical' if ok else 'MISMATCH'}",
    )


def check_weight_roundtrip(gen, rng, duration_s):
    fd, path = tempfile.mkstemp(suffix=".llvc")
    os.close(fd)
    try:
        save_weights(gen.weights, gen.config, path)
        store, config = load_weights(path)
        ok = config == gen.config and set(store) == set(gen.weights) and all(
            np.array_equal(store[k], gen.weights[k]) for k in store
        )
        size = os.path.getsize(path)
    finally:
        os.unlink(path)
    return _result(
        "weight-roundtrip",
        ok,
        f"{len(gen.weights)} tensors, {size} bytes: "
        f"{'bit-identical' if ok else 'MISMATCH'}",
    )


def check_kernel_reference(gen, rng, duration_s):
    """Vectorized kernels track the sequential reference within 1e-5."""
    worst = 0.0
    for _ in range(20):
        c_in, c_out, k, t = (int(rng.integers(1, 9)) for _ in range(4))
        dil = int(rng.integers(1, 5))
        x = rng.standard_normal((c_in, t)).astype(np.float32)
        w = rng.standard_normal((c_out, c_in, k)).astype(np.float32)
        b = rng.standard_normal(c_out).astype(np.float32)
        cache = rng.standard_normal((c_in, (k - 1) * dil)).astype(np.float32)
        fast, _ = causal_conv1d(x, w, b, dil, cache)
        ref, _ = reference.causal_conv1d_ref(x, w, b, dil, cache)
        worst = max(worst, float(np.abs(fast - ref).max(initial=0.0)))
    for _ in range(10):
        stride = int(rng.integers(1, 5))
        dim = int(rng.integers(1, 9))
        n = int(rng.integers(1, 7))
        x = rng.standard_normal(n * stride + 2 * stride).astype(np.float32)
        w = rng.standard_normal((dim, 1, 3 * stride)).astype(np.float32)
        b = rng.standard_normal(dim).astype(np.float32)
        fast = framing_conv(x, w, b, stride)
        ref = reference.framing_conv_ref(x, w, b, stride)
        worst = max(worst, float(np.abs(fast - ref).max(initial=0.0)))
        frames = rng.standard_normal((dim, n)).astype(np.float32)
        sw = rng.standard_normal((dim, 1, 3 * stride)).astype(np.float32)
        tail = rng.standard_normal(2 * stride).astype(np.float32)
        fs, ft = synth_transpose_conv(frames, sw, stride, tail)
        rs, rt = reference.synth_transpose_conv_ref(frames, sw, stride, tail)
        worst = max(
            worst,
            float(np.abs(fs - rs).max(initial=0.0)),
            float(np.abs(ft - rt).max(initial=0.0)),
        )
    for _ in range(10):
        heads = int(rng.choice([1, 2, 4]))
        dim = heads * int(rng.integers(1, 5))
        n = int(rng.integers(1, 6))
        m = int(rng.integers(0, 6))
        x = rng.standard_normal((n, dim)).astype(np.float32)
        ws = [rng.standard_normal((dim, dim)).astype(np.float32) for _ in range(4)]
        ck = rng.standard_normal((m, dim)).astype(np.float32)
        cv = rng.standard_normal((m, dim)).astype(np.float32)
        fast, _ = mha_causal(x, *ws, heads, KVCache(ck, cv), window=8)
        ref, _, _ = reference.mha_causal_ref(x, *ws, heads, ck, cv, window=8)
        worst = max(worst, float(np.abs(fast - ref).max(initial=0.0)))
    ok = worst <= 1e-5
    return _result("kernel-reference", ok, f"max |fast - reference| = {worst:.2e}")


ALL_CHECKS = [
    check_latency_law,
    check_chunking_invariance,
    check_causality,
    check_flush_length,
    check_stream_offline_equivalence,
    check_batching,
    check_weight_roundtrip,
    check_kernel_reference,
]


def run_all(gen: Generator, seed: int = 42, duration_s: float = 2.0,
            corrupt_cache: bool = False) -> list:
    """Run every property; exceptions count as failures of that property."""
    results = []
    for check in ALL_CHECKS:
        rng = np.random.default_rng(seed)
        kwargs = {}
        if check is check_causality and corrupt_cache:
            kwargs["corrupt_cache"] = True
        try:
            results.append(check(gen, rng, duration_s, **kwargs))
        except Exception as exc:  # property must fail, not kill the suite
            results.append(_result(check.__name__.replace("check_", "").replace("_", "-"),
                                   False, f"raised {type(exc).__name__}: {exc}"))
    return results


def format_results(results) -> str:
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return "\n".join(lines)
