"""Command-line surface: init, info, convert, bench, verify.

Exit codes are a stable contract: 0 success, 1 property failure, 2 usage or
configuration error, 3 input-data error. Benchmarks time push/flush compute
only (file I/O and model loading are excluded) and write a versioned JSON
report. The LLVC_THREADS environment variable caps file-level parallelism
in bench; per-stream processing is always sequential.
"""

import argparse
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import ModelConfig
from .errors import LLVCError, ConfigError, ParameterError, FormatError, AudioFormatError
from .metrics import snr_db
from .model import Generator, parameter_count
from .stream import Stream, algorithmic_latency_s
from .verify import run_all, format_results
from .weights import load_weights, save_weights, random_init
from .wavio import AudioBuffer, read_wav, write_wav

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_USAGE = 2
EXIT_INPUT = 3

REPORT_VERSION = 1


def _hardware_note():
    cpu = platform.processor() or platform.machine()
    try:
        with open("/proc/cpuinfo") as f:
            for line in f:
                if line.lower().startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return f"{cpu}; {platform.system()} {platform.release()}; python {platform.python_version()}"


def _load_model(path) -> Generator:
    store, config = load_weights(path)
    return Generator(store, config)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_init(args):
    if args.config is not None:
        config = ModelConfig.from_file(args.config)
    else:
        config = ModelConfig()
    store = random_init(config, args.seed)
    save_weights(store, config, args.output)
    print(f"wrote {args.output}")
    print(f"tensors: {len(store)}")
    print(f"parameters: {parameter_count(config)}")
    return EXIT_OK


def cmd_info(args):
    store, config = load_weights(args.model)
    lat = {n: algorithmic_latency_s(config, n) for n in (1, 2, 4)}
    if args.json:
        print(json.dumps({
            "config": config.to_dict(),
            "tensors": len(store),
            "parameters": parameter_count(config),
            "chunk_samples": config.chunk_samples,
            "chunk_ms": config.chunk_samples / config.sample_rate * 1000.0,
            "lookahead_samples": config.lookahead_samples,
            "lookahead_ms": config.lookahead_samples / config.sample_rate * 1000.0,
            "algorithmic_latency_ms": {str(n): lat[n] * 1000.0 for n in lat},
        }, indent=2, sort_keys=True))
        return EXIT_OK
    print(f"model: {args.model}")
    print(f"tensors: {len(store)}  parameters: {parameter_count(config)}")
    for key, value in sorted(config.to_dict().items()):
        print(f"  {key}: {value}")
    ms = config.chunk_samples / config.sample_rate * 1000.0
    print(f"chunk: {config.chunk_samples} samples / {ms:.1f} ms")
    la_ms = config.lookahead_samples / config.sample_rate * 1000.0
    print(f"lookahead: {config.lookahead_samples} samples / {la_ms:.1f} ms")
    for n in (1, 2, 4):
        print(f"algorithmic latency: {lat[n] * 1000.0:.1f} ms (N={n})")
    return EXIT_OK


def cmd_convert(args):
    gen = _load_model(args.model)
    buf = read_wav(args.input, gen.config.sample_rate)
    wave = np.clip(buf.samples, -1.0, 1.0)
    t0 = time.perf_counter()
    if args.mode == "offline":
        out = gen.forward_offline(wave)
        chunks = -(-len(wave) // gen.config.chunk_samples) if len(wave) else 0
    else:
        st = Stream(gen, chunks_per_call=args.chunks_per_call)
        out = np.concatenate([st.push(wave), st.flush()])
        chunks = st.chunks_processed
    wall = time.perf_counter() - t0
    write_wav(args.output, AudioBuffer(out, gen.config.sample_rate))
    audio_s = len(wave) / gen.config.sample_rate
    rtf = audio_s / wall if wall > 0 else math.inf
    print(
        f"mode={args.mode} audio_s={audio_s:.3f} wall_s={wall:.3f} "
        f"rtf={rtf:.3f} chunks={chunks} out={args.output}"
    )
    return EXIT_OK


def _bench_file(path, gen, chunks_per_call, warmup):
    """Time batched-call compute over one file; I/O happens before timing."""
    cfg = gen.config
    buf = read_wav(path, cfg.sample_rate)
    wave = np.clip(buf.samples, -1.0, 1.0)
    step = chunks_per_call * cfg.chunk_samples
    n_calls = (len(wave) - cfg.lookahead_samples) // step if len(wave) >= step + cfg.lookahead_samples else 0
    st = Stream(gen, chunks_per_call=chunks_per_call)
    call_ms = []
    pos = 0
    for i in range(n_calls):
        feed_end = (i + 1) * step + cfg.lookahead_samples
        chunk_in = wave[pos:feed_end]
        pos = feed_end
        t0 = time.perf_counter()
        st.push(chunk_in)
        call_ms.append((time.perf_counter() - t0) * 1000.0)
    chunk_ms = [ms / chunks_per_call for ms in call_ms for _ in range(chunks_per_call)]
    timed = chunk_ms[warmup:]
    chunks = len(chunk_ms)
    if not timed:
        return None
    wall_s = sum(timed) / 1000.0
    audio_s = len(timed) * cfg.chunk_samples / cfg.sample_rate
    return {
        "path": str(path),
        "audio_seconds": audio_s,
        "wall_seconds": wall_s,
        "rtf": audio_s / wall_s,
        "chunks": chunks,
        "mean_chunk_compute_ms": float(np.mean(timed)),
        "p95_chunk_compute_ms": float(np.percentile(timed, 95)),
    }


def cmd_bench(args):
    gen = _load_model(args.model)
    if os.path.isdir(args.input):
        files = sorted(
            os.path.join(args.input, f)
            for f in os.listdir(args.input)
            if f.lower().endswith(".wav")
        )
    else:
        files = [args.input] if os.path.exists(args.input) else []
    if not files:
        raise ConfigError(f"no input wav files found at {args.input}")

    workers = max(1, int(os.environ.get("LLVC_THREADS", "1")))
    if workers > 1 and len(files) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(
                pool.map(lambda p: _bench_file(p, gen, args.chunks_per_call, args.warmup), files)
            )
    else:
        entries = [_bench_file(p, gen, args.chunks_per_call, args.warmup) for p in files]
    entries = [e for e in entries if e is not None]
    if not entries:
        raise ConfigError(
            "no file was long enough to time at least one chunk past warmup"
        )

    all_means = [e["mean_chunk_compute_ms"] for e in entries]
    all_chunks = [e["chunks"] for e in entries]
    lat_ms = algorithmic_latency_s(gen.config, args.chunks_per_call) * 1000.0
    mean_chunk_ms = float(
        sum(m * max(c - args.warmup, 0) for m, c in zip(all_means, all_chunks))
        / sum(max(c - args.warmup, 0) for c in all_chunks)
    )
    report = {
        "report_version": REPORT_VERSION,
        "files": entries,
        "rtf_mean": float(np.mean([e["rtf"] for e in entries])),
        "algorithmic_latency_ms": lat_ms,
        "mean_chunk_compute_ms": mean_chunk_ms,
        "end_to_end_latency_ms": lat_ms + mean_chunk_ms,
        "chunks_per_call": args.chunks_per_call,
        "warmup_chunks": args.warmup,
        "config": gen.config.to_dict(),
        "hardware": _hardware_note(),
    }
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2, sort_keys=True)
            f.write("\n")
    print(f"files: {len(entries)}")
    print(f"rtf_mean: {report['rtf_mean']:.3f}")
    print(f"algorithmic_latency_ms: {lat_ms:.3f}")
    print(f"mean_chunk_compute_ms: {mean_chunk_ms:.3f}")
    print(f"end_to_end_latency_ms: {report['end_to_end_latency_ms']:.3f}")
    if args.report:
        print(f"report: {args.report}")
    return EXIT_OK


def cmd_verify(args):
    gen = _load_model(args.model)
    results = run_all(gen, seed=args.seed, duration_s=args.duration)
    print(format_results(results))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return EXIT_PROPERTY if failed else EXIT_OK


def cmd_selfcheck_convert(args):
    """Convert the same file both ways and report their agreement."""
    gen = _load_model(args.model)
    buf = read_wav(args.input, gen.config.sample_rate)
    wave = np.clip(buf.samples, -1.0, 1.0)
    offline = gen.forward_offline(wave)
    st = Stream(gen, chunks_per_call=args.chunks_per_call)
    streamed = np.concatenate([st.push(wave), st.flush()])
    snr = snr_db(offline, streamed) if np.any(offline) else math.inf
    print(f"stream_vs_offline_snr_db: {'inf' if math.isinf(snr) else f'{snr:.2f}'}")
    return EXIT_OK if math.isinf(snr) else EXIT_PROPERTY


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="llvc",
        description="Streaming voice-conversion inference engine and benchmark harness.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("init", help="create a randomly initialized weight file")
    sp.add_argument("--config", default=None, help="config JSON path (default: built-in)")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=cmd_init)

    sp = sub.add_parser("info", help="print model configuration and latency table")
    sp.add_argument("--model", required=True)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_info)

    sp = sub.add_parser("convert", help="convert a wav file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--mode", choices=("offline", "stream"), default="stream")
    sp.add_argument("--chunks-per-call", type=int, default=1)
    sp.set_defaults(func=cmd_convert)

    sp = sub.add_parser("bench", help="measure RTF and per-chunk compute")
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", required=True, help="wav file or directory of wav files")
    sp.add_argument("--chunks-per-call", type=int, default=1)
    sp.add_argument("--report", default=None, help="write JSON report here")
    sp.add_argument("--warmup", type=int, default=8,
                    help="chunks excluded from timing stats")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("verify", help="run the property suite against a model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--duration", type=float, default=2.0,
                    help="seconds of test signal per property")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("check-equivalence",
                        help="convert one file in both modes and compare")
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--chunks-per-call", type=int, default=1)
    sp.set_defaults(func=cmd_selfcheck_convert)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AudioFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConfigError, ParameterError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LLVCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
