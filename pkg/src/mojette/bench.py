"""Encode/decode micro-benchmarks against memcpy baselines.

Each scenario is turned into a compiled kernel bound to preallocated buffers.
Schedules and inverted matrices are built before any timing starts.  A
sample is one batch of ``inner`` back-to-back kernel calls issued from
compiled code, divided by ``inner``; scenarios are sampled round-robin so
slow drifts of the machine affect all of them alike.
"""

from __future__ import annotations

import csv
import io
import math
import os
import statistics
import time
import warnings
from contextlib import contextmanager, nullcontext
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .code import BlockEncoder, CodeParams, cached_schedule, choose_subset
from .core import word_view
from .errors import TimerResolutionTooCoarse
from .rs import MUL_TABLE, decode_plan, vandermonde_matrix

IMPLS = ("mojette", "rs")
OPS = ("encode", "decode")
COLUMNS = (
    "impl", "n", "k", "block_size", "erasures",
    "median_ns", "stddev_ns", "throughput_mbps", "baseline_ns",
    "op", "cycles",
)
DEFAULT_CODES = ((6, 4), (12, 8))
DEFAULT_BLOCK_SIZES = (4096, 8192)
BATCH_TARGET_NS = 50_000


@dataclass(frozen=True)
class BenchScenario:
    impl: str
    op: str
    n: int
    k: int
    block_size: int = 4096
    erasures: int = 0
    repetitions: int = 100
    warmup: int = 10
    width: int = 16

    def __post_init__(self):
        if self.impl not in IMPLS:
            raise ValueError(f"impl must be one of {IMPLS}, got {self.impl!r}")
        if self.op not in OPS:
            raise ValueError(f"op must be one of {OPS}, got {self.op!r}")
        if not 1 <= self.k < self.n:
            raise ValueError(f"need 1 <= k < n, got n={self.n}, k={self.k}")
        if not 0 <= self.erasures <= self.n - self.k:
            raise ValueError(f"erasures must be in [0, {self.n - self.k}], got {self.erasures}")
        if self.op == "encode" and self.erasures:
            raise ValueError("encode scenarios take no erasures")
        if self.block_size < 1 or self.repetitions < 1 or self.warmup < 0:
            raise ValueError("block_size and repetitions must be positive, warmup non-negative")
        if self.block_size % (self.k * self.width):
            warnings.warn(
                f"block size {self.block_size} is not a multiple of k*W = {self.k * self.width}",
                stacklevel=2,
            )


@dataclass(frozen=True)
class BenchReport:
    scenario: BenchScenario
    median_ns: float
    stddev_ns: float
    throughput_mbps: float
    baseline_ns: float
    cycles: float | None = None

    def row(self) -> dict:
        s = self.scenario
        return {
            "impl": s.impl, "n": s.n, "k": s.k, "block_size": s.block_size,
            "erasures": s.erasures, "median_ns": self.median_ns,
            "stddev_ns": self.stddev_ns, "throughput_mbps": self.throughput_mbps,
            "baseline_ns": self.baseline_ns, "op": s.op,
            "cycles": "" if self.cycles is None else self.cycles,
        }


def default_scenarios(
    reps: int = 100,
    warmup: int = 10,
    codes: Sequence = DEFAULT_CODES,
    block_sizes: Sequence = DEFAULT_BLOCK_SIZES,
    impls: Sequence = IMPLS,
) -> list[BenchScenario]:
    """One encode row plus a decode row per erasure count, for every combination."""
    out = []
    for impl in impls:
        for n, k in codes:
            for size in block_sizes:
                out.append(BenchScenario(impl, "encode", n, k, size, 0, reps, warmup))
                for e in range(n - k + 1):
                    out.append(BenchScenario(impl, "decode", n, k, size, e, reps, warmup))
    return out


def _rng(seed: int, s: BenchScenario) -> np.random.Generator:
    return np.random.default_rng([seed, IMPLS.index(s.impl), OPS.index(s.op), s.n, s.k, s.block_size, s.erasures])


def _page_aligned(shape, fill: int) -> np.ndarray:
    """A uint8 array starting on a 4 KiB boundary.

    Copy speed depends on the relative placement of source and destination;
    fixing both to page boundaries keeps baselines comparable across runs.
    """
    size = int(np.prod(shape))
    raw = np.empty(size + 4096, np.uint8)
    start = -raw.ctypes.data % 4096
    out = raw[start:start + size].reshape(shape)
    out.fill(fill)
    return out


def erasure_pattern(s: BenchScenario, seed: int = 0) -> list[int]:
    """Indices of the packets a decode scenario loses, fixed by ``seed``.

    Reed-Solomon scenarios lose data packets only; a systematic decode with
    every data packet present is a plain copy.
    """
    pool = s.k if s.impl == "rs" else s.n
    return sorted(_rng(seed, s).choice(pool, size=s.erasures, replace=False).tolist())


def _mojette_job(s: BenchScenario, data: bytes, lost) -> Callable[[int], None]:
    params = CodeParams(s.n, s.k, s.width)
    enc = BlockEncoder(params, params.columns(s.block_size))
    enc.load(data)
    if s.op == "encode":
        return enc.run
    enc.encode()
    projs = enc.projections()
    chosen = choose_subset([pr for i, pr in enumerate(projs) if i not in lost], params)
    sched = cached_schedule(tuple(pr.direction for pr in chosen), enc.P, s.k)
    symbols = np.concatenate([pr.bins for pr in chosen])
    bins = word_view(_page_aligned(symbols.shape, 0))
    bins[:] = word_view(symbols)
    work = word_view(_page_aligned(symbols.shape, 0))
    out = word_view(_page_aligned((enc.P * s.k, s.width), 0))
    args = (bins, work, out, sched.source, sched.pixel, sched.update_ptr, sched.update)

    def run(reps):
        _kernels.repeat_replay(reps, *args)
    return run


def _rs_job(s: BenchScenario, data: bytes, lost) -> Callable[[int], None]:
    matrix = vandermonde_matrix(s.n, s.k)
    L = -(-s.block_size // s.k)
    packets = _page_aligned((s.n, L), 0)
    packets.reshape(-1)[: len(data)] = np.frombuffer(data, np.uint8)
    data_rows = np.arange(s.k, dtype=np.int64)
    parity = np.ascontiguousarray(matrix.entries[s.k:])
    _kernels.gf_combine(packets, data_rows, parity, MUL_TABLE, packets[s.k:])
    if s.op == "encode":
        out = packets[s.k:]

        def run(reps):
            _kernels.repeat_gf_combine(reps, packets, data_rows, parity, MUL_TABLE, out)
        return run
    plan = decode_plan(matrix, [i for i in range(s.n) if i not in lost][: s.k])
    out = _page_aligned((s.k, L), 0)
    args = (packets, plan.survivors, plan.data_rows, plan.coef, plan.missing, MUL_TABLE, out)

    def run(reps):
        _kernels.repeat_rs_decode(reps, *args)
    return run


def _baseline_job(s: BenchScenario) -> Callable[[int], None]:
    count = s.n if s.op == "encode" else s.k
    L = -(-s.block_size // s.k)
    src = _page_aligned((count, L), 1)
    dst = _page_aligned((count, L), 0)
    rows = np.arange(count, dtype=np.int64)

    def run(reps):
        _kernels.repeat_copy_rows(reps, src, rows, dst, rows)
    return run


def baseline_bytes(s: BenchScenario) -> int:
    """Bytes moved by the memcpy baseline: n or k packets of ``block_size / k``."""
    count = s.n if s.op == "encode" else s.k
    return count * -(-s.block_size // s.k)


@contextmanager
def pinned_cpu():
    """Pin the process to one logical CPU for the duration; yields a note."""
    if not hasattr(os, "sched_setaffinity"):
        yield "cpu pinning unavailable on this platform"
        return
    before = os.sched_getaffinity(0)
    cpu = min(before)
    try:
        os.sched_setaffinity(0, {cpu})
    except OSError as exc:
        yield f"cpu pinning failed: {exc}"
        return
    try:
        yield f"pinned to cpu {cpu}"
    finally:
        os.sched_setaffinity(0, before)


class _Sampler:
    def __init__(self, run: Callable[[int], None], reps: int, warmup: int, target_ns: int = BATCH_TARGET_NS):
        self.run = run
        self.reps = reps
        self.warmup = warmup
        self.target_ns = target_ns
        self.inner = 1
        self.samples = []
        self.batch_ns = []

    def calibrate(self):
        self.run(1)
        inner = 1
        while True:
            t0 = time.perf_counter_ns()
            self.run(inner)
            dt = max(time.perf_counter_ns() - t0, 1)
            if dt >= self.target_ns // 4 or inner >= 1 << 20:
                break
            inner *= 2
        self.inner = max(1, math.ceil(self.target_ns * inner / dt))
        for _ in range(self.warmup):
            self.run(self.inner)

    def sample(self):
        t0 = time.perf_counter_ns()
        self.run(self.inner)
        dt = time.perf_counter_ns() - t0
        self.batch_ns.append(dt)
        self.samples.append(dt / self.inner)

    def stats(self):
        med = statistics.median(self.samples)
        sd = statistics.stdev(self.samples) if len(self.samples) > 1 else 0.0
        return med, sd


def _timer_resolution_ns() -> float:
    return time.get_clock_info("perf_counter").resolution * 1e9


def _check_resolution(sampler: _Sampler, label: str):
    res = _timer_resolution_ns()
    batch = statistics.median(sampler.batch_ns)
    if res > 0.01 * batch:
        raise TimerResolutionTooCoarse(
            f"{label}: timer resolution {res:.0f} ns exceeds 1% of the {batch:.0f} ns interval"
        )


def _interleave(samplers: Sequence[_Sampler]):
    for s in samplers:
        s.calibrate()
    rounds = max(s.reps for s in samplers)
    for r in range(rounds):
        for s in samplers:
            if r < s.reps:
                s.sample()


def memcpy_baseline(scenario: BenchScenario) -> float:
    """Median ns to copy the scenario's baseline packets between warm buffers."""
    sampler = _Sampler(_baseline_job(scenario), scenario.repetitions, scenario.warmup)
    _interleave([sampler])
    _check_resolution(sampler, "memcpy")
    return sampler.stats()[0]


def run_suite(
    scenarios: Iterable[BenchScenario],
    seed: int = 0,
    pin: bool = True,
    batch_ns: int = BATCH_TARGET_NS,
) -> list[BenchReport]:
    """Time every scenario and its memcpy baseline; returns one report each.

    ``batch_ns`` is the target duration of one timed batch.  Longer batches
    dilute the cost of an interrupt landing inside a sample.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("no scenarios to run")
    with pinned_cpu() if pin else nullcontext():
        kernels, baselines = [], []
        for s in scenarios:
            data = _rng(seed, s).integers(0, 256, s.block_size, dtype=np.uint8).tobytes()
            job = _mojette_job if s.impl == "mojette" else _rs_job
            run = job(s, data, set(erasure_pattern(s, seed)))
            kernels.append(_Sampler(run, s.repetitions, s.warmup, batch_ns))
            baselines.append(_Sampler(_baseline_job(s), s.repetitions, s.warmup, batch_ns))
        _interleave([x for pair in zip(kernels, baselines) for x in pair])

    reports = []
    for s, ks, bs in zip(scenarios, kernels, baselines):
        label = f"{s.impl} {s.op} ({s.n},{s.k}) {s.block_size}B e={s.erasures}"
        _check_resolution(ks, label)
        _check_resolution(bs, label + " baseline")
        med, sd = ks.stats()
        base = bs.stats()[0]
        reports.append(
            BenchReport(
                scenario=s,
                median_ns=round(med, 3),
                stddev_ns=round(sd, 3),
                throughput_mbps=round(s.block_size / med * 1e3, 3),
                baseline_ns=round(base, 3),
            )
        )
    return reports


def emit_report(reports: Sequence[BenchReport], fmt: str = "csv", note: str | None = None) -> str:
    """Render reports as CSV (header plus one row each) or a markdown table.

    ``note`` is only rendered in markdown, above the table.
    """
    if not reports:
        raise ValueError("no reports to emit")
    rows = [r.row() for r in reports]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\r\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = [f"_{note}_", ""] if note else []
        lines.append("| " + " | ".join(COLUMNS) + " |")
        lines.append("|" + "---|" * len(COLUMNS))
        for row in rows:
            lines.append("| " + " | ".join(str(row[c]) for c in COLUMNS) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


_NUMERIC = {
    "n": int, "k": int, "block_size": int, "erasures": int,
    "median_ns": float, "stddev_ns": float, "throughput_mbps": float, "baseline_ns": float,
}


def parse_csv(text: str) -> list[dict]:
    """Inverse of ``emit_report(..., "csv")``, with numeric columns converted."""
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        for key, conv in _NUMERIC.items():
            row[key] = conv(row[key])
        row["cycles"] = float(row["cycles"]) if row["cycles"] else None
        rows.append(row)
    return rows
