"""Acceptance suite.

Each test checks one numbered criterion at its stated tolerance and prints a
single ``criterion N: PASS`` or ``criterion N: FAIL`` line to the terminal,
whatever the capture mode.
"""

import itertools
import statistics
import time
from fractions import Fraction
from math import gcd

import numpy as np
import pytest

from mojette import bench
from mojette.cli import EXIT_DATA, EXIT_OK, main
from mojette.code import CodeParams, decode_block, encode_block, storage_overhead, unused_bins
from mojette.core import (
    Direction,
    Grid,
    bin_count,
    build_schedule,
    forward,
    inverse_iterative,
    inverse_scheduled,
    katz_ok,
)
from mojette.errors import CrcMismatch, InsufficientProjections
from mojette.fileformat import read_file
from mojette.rs import MUL_TABLE, gf_inv, gf_mul, rs_decode, rs_encode, vandermonde_matrix

from _util import random_grid


@pytest.fixture
def verdict(capsys):
    def record(number: int, title: str, ok: bool, detail: str = ""):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {title}"
        if detail:
            line += f" ({detail})"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return record


def test_criterion_01_exhaustive_any_k(verdict):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    checked = failures = 0
    for n, k in ((6, 4), (12, 8)):
        params = CodeParams(n, k)
        for size in (4096, 8192):
            data = rng.bytes(size)
            block = encode_block(data, params)
            for keep in itertools.combinations(range(n), k):
                out = decode_block([block.projections[i] for i in keep], params, size)
                checked += 1
                failures += out != data
    elapsed = time.perf_counter() - start
    ok = failures == 0 and checked == 2 * (15 + 495) and elapsed < 60
    verdict(1, "every maximal erasure pattern decodes bit-exactly",
            ok, f"{checked} patterns, {failures} failures, {elapsed:.1f} s")


def test_criterion_02_scheduled_equals_iterative(verdict):
    rng = np.random.default_rng(2)
    pool = [Direction(p, q) for p in range(-6, 7) for q in (1, 2, 3) if gcd(abs(p), q) == 1]
    cases = mismatches = 0
    while cases < 1200:
        P = int(rng.integers(1, 65))
        Q = int(rng.integers(1, 9))
        W = int(rng.choice([1, 2, 4, 8, 16]))
        if cases % 2:
            # erasure-code shape: Q distinct q=1 directions
            ps = rng.choice(np.arange(-8, 9), size=Q, replace=False)
            dirs = [Direction(int(p), 1) for p in ps]
        else:
            size = int(rng.integers(1, 9))
            dirs = [pool[i] for i in rng.choice(len(pool), size=size, replace=False)]
            if not katz_ok(dirs, P, Q):
                continue
        g = random_grid(rng, P, Q, W)
        projs = [forward(g, d) for d in dirs]
        fast = inverse_scheduled(projs, build_schedule(dirs, P, Q))
        ref = inverse_iterative(projs, P, Q)
        mismatches += not (fast == ref == g)
        cases += 1
    verdict(2, "inverse_scheduled equals inverse_iterative", mismatches == 0,
            f"{cases} random cases, P <= 64, Q <= 8, {mismatches} mismatches")


def test_criterion_03_bin_count_conservation_linearity(verdict):
    rng = np.random.default_rng(3)
    dirs = [Direction(p, q) for p in range(-8, 9) for q in (1, 2, 3) if gcd(abs(p), q) == 1]
    bad_len = 0
    shapes = 0
    for P in range(1, 33):
        for Q in range(1, 33):
            g = random_grid(rng, P, Q, 1)
            for d in dirs:
                bad_len += len(forward(g, d)) != bin_count(d, P, Q)
            shapes += 1
    bad_cons = bad_lin = 0
    for _ in range(500):
        P, Q = (int(x) for x in rng.integers(1, 33, 2))
        W = int(rng.choice([1, 4, 16, 64]))
        g1, g2 = random_grid(rng, P, Q, W), random_grid(rng, P, Q, W)
        d = dirs[int(rng.integers(len(dirs)))]
        bins = forward(g1, d).bins
        total = np.bitwise_xor.reduce(g1.cells.reshape(-1, W), axis=0)
        bad_cons += not np.array_equal(np.bitwise_xor.reduce(bins, axis=0), total)
        both = forward(Grid(P, Q, g1.cells ^ g2.cells), d).bins
        bad_lin += not np.array_equal(both, bins ^ forward(g2, d).bins)
    ok = bad_len == bad_cons == bad_lin == 0
    verdict(3, "bin count, conservation and linearity", ok,
            f"{len(dirs)} directions x {shapes} grid shapes; 500 random grids; "
            f"{bad_len}/{bad_cons}/{bad_lin} violations")


def test_criterion_04_katz(verdict):
    rng = np.random.default_rng(4)
    pool = [Direction(p, q) for p in range(-3, 4) for q in (1, 2) if gcd(abs(p), q) == 1]
    negatives = neg_bad = 0
    for P in range(1, 6):
        for Q in range(1, 6):
            g = random_grid(rng, P, Q, 2)
            for size in range(0, 4):
                for dirs in itertools.combinations(pool, size):
                    if katz_ok(dirs, P, Q):
                        continue
                    negatives += 1
                    projs = [forward(g, d) for d in dirs]
                    for decode in (
                        lambda: inverse_iterative(projs, P, Q),
                        lambda: build_schedule(dirs, P, Q),
                    ):
                        try:
                            decode()
                        except InsufficientProjections:
                            continue
                        neg_bad += 1
    positives = pos_bad = 0
    for Q in range(1, 7):
        for P in (1, 2, 3, 7, 16):
            g = random_grid(rng, P, Q, 4)
            for ps in itertools.combinations(range(-4, 5), Q):
                dirs = [Direction(p, 1) for p in ps]
                projs = [forward(g, d) for d in dirs]
                positives += 1
                pos_bad += inverse_scheduled(projs, build_schedule(dirs, P, Q)) != g
                if P <= 3:
                    pos_bad += inverse_iterative(projs, P, Q) != g
    ok = neg_bad == 0 and pos_bad == 0
    verdict(4, "Katz negatives raise, Q distinct q=1 directions reconstruct", ok,
            f"{negatives} failing sets, {neg_bad} not rejected; "
            f"{positives} equality sets, {pos_bad} wrong")


@pytest.fixture(scope="module")
def timing_reports():
    """One interleaved run feeding criteria 5, 6 and 7."""
    scenarios = []
    for n, k in ((6, 4), (12, 8)):
        for size in (4096, 8192):
            scenarios.append(bench.BenchScenario("mojette", "encode", n, k, size, 0, 200, 10))
            for e in range(1, n - k + 1):
                scenarios.append(bench.BenchScenario("mojette", "decode", n, k, size, e, 200, 10))
    scenarios.append(bench.BenchScenario("rs", "encode", 6, 4, 4096, 0, 200, 10))
    reports = bench.run_suite(scenarios)
    return {
        (r.scenario.impl, r.scenario.op, r.scenario.n, r.scenario.k,
         r.scenario.block_size, r.scenario.erasures): r
        for r in reports
    }


def test_criterion_05_encode_cost_linear_in_block_size(verdict, timing_reports):
    ratios = {}
    for n, k in ((6, 4), (12, 8)):
        small = timing_reports[("mojette", "encode", n, k, 4096, 0)].median_ns
        large = timing_reports[("mojette", "encode", n, k, 8192, 0)].median_ns
        ratios[(n, k)] = large / small
    ok = all(1.5 <= r <= 2.5 for r in ratios.values())
    verdict(5, "encode time 8 KB / 4 KB within 2.0 +- 0.5", ok,
            ", ".join(f"({n},{k}) {r:.2f}x" for (n, k), r in ratios.items()))


def test_criterion_06_decode_time_flat_over_erasures(verdict, timing_reports):
    spreads = {}
    for n, k in ((6, 4), (12, 8)):
        for size in (4096, 8192):
            t = [timing_reports[("mojette", "decode", n, k, size, e)].median_ns
                 for e in range(1, n - k + 1)]
            spreads[(n, k, size)] = (max(t) - min(t)) / min(t)
    ok = all(s < 0.20 for s in spreads.values())
    verdict(6, "decode medians over 1..n-k erasures within 20%", ok,
            ", ".join(f"({n},{k}) {s // 1024}K {v:.1%}" for (n, k, s), v in spreads.items()))


def test_criterion_07_encode_faster_than_rs(verdict, timing_reports):
    mj = timing_reports[("mojette", "encode", 6, 4, 4096, 0)].throughput_mbps
    rs = timing_reports[("rs", "encode", 6, 4, 4096, 0)].throughput_mbps
    verdict(7, "(6,4) 4 KB encode throughput at least 1.5x Reed-Solomon", mj >= 1.5 * rs,
            f"{mj:.0f} vs {rs:.0f} MB/s, {mj / rs:.2f}x")


def test_criterion_08_overhead_and_unused_bins(verdict):
    params = CodeParams(6, 4)
    ov = storage_overhead(params, 64)
    unused = unused_bins(params, 8)
    data = np.random.default_rng(8).bytes(4 * 8 * 16)
    block = encode_block(data, params)
    for pr, bins in zip(block.projections, unused):
        for b in bins:
            pr.bins[b - pr.b_min] = 0
    failures = 0
    for keep in itertools.combinations(range(6), 4):
        out = decode_block([block.projections[i] for i in keep], params, len(data), verify=False)
        failures += out != data
    count = sum(len(s) for s in unused)
    ok = ov == Fraction(411, 384) and count > 0 and failures == 0
    verdict(8, "overhead 411/384 and unused bins zero-and-decode", ok,
            f"overhead {ov}, {count} unused bins zeroed, {failures} of 15 decodes wrong")


def test_criterion_09_cli_round_trip_and_faults(verdict, tmp_path, capsys):
    src = tmp_path / "random.bin"
    payload = np.random.default_rng(9).bytes(1 << 20)
    src.write_bytes(payload)
    enc_dir = tmp_path / "enc"
    steps = {}
    steps["encode"] = main(["encode", str(src), "-o", str(enc_dir)]) == EXIT_OK
    files = sorted(enc_dir.glob("*.mjec"))
    steps["verify"] = main(["verify", *map(str, files)]) == EXIT_OK
    out = tmp_path / "decoded.bin"
    steps["decode"] = main(["decode", *map(str, files), "-o", str(out)]) == EXIT_OK
    steps["identity"] = out.read_bytes() == payload

    subset_ok = 0
    for i, keep in enumerate(itertools.combinations(files, 4)):
        target = tmp_path / f"subset{i}.bin"
        if main(["decode", *map(str, keep), "-o", str(target)]) == EXIT_OK:
            subset_ok += target.read_bytes() == payload
    steps["15 subsets"] = subset_ok == 15

    victim = files[3]
    raw = bytearray(victim.read_bytes())
    raw[len(raw) // 2] ^= 0x01
    victim.write_bytes(bytes(raw))
    try:
        read_file(victim)
        steps["crc"] = False
    except CrcMismatch as exc:
        steps["crc"] = victim.name in str(exc)
    capsys.readouterr()
    code = main(["decode", *map(str, files[:4]), "-o", str(tmp_path / "bad.bin")])
    err = capsys.readouterr().err
    steps["cli crc"] = code == EXIT_DATA and "CrcMismatch" in err and victim.name in err

    failed = [k for k, v in steps.items() if not v]
    verdict(9, "CLI 1 MiB round trip, any-4 decode, corruption detected", not failed,
            "all steps ok" if not failed else "failed: " + ", ".join(failed))


def test_criterion_10_rs_self_consistency(verdict):
    rng = np.random.default_rng(10)
    patterns = failures = 0
    for n, k in ((6, 4), (12, 8)):
        m = vandermonde_matrix(n, k)
        data = rng.integers(0, 256, (k, 512), dtype=np.uint8)
        enc = rs_encode(data, m)
        for e in range(n - k + 1):
            for lost in itertools.combinations(range(n), e):
                survivors = {i: enc[i].tobytes() for i in range(n) if i not in lost}
                patterns += 1
                failures += not np.array_equal(rs_decode(survivors, m), data)

    # the table drives every kernel; it must agree with the scalar multiply
    table_ok = all(MUL_TABLE[a, b] == gf_mul(a, b) for a in range(256) for b in range(256))
    a, b, c = rng.integers(0, 256, (3, 100_000))
    M = MUL_TABLE
    axioms = {
        "commutative": np.array_equal(M[a, b], M[b, a]),
        "associative": np.array_equal(M[M[a, b], c], M[a, M[b, c]]),
        "distributive": np.array_equal(M[a, b ^ c], M[a, b] ^ M[a, c]),
        "identity": bool((M[a, 1] == a).all() and (M[a, 0] == 0).all()),
        "inverse": all(gf_mul(int(x), gf_inv(int(x))) == 1 for x in a[a != 0][:20_000]),
    }
    broken = [name for name, ok in axioms.items() if not ok]
    ok = failures == 0 and table_ok and not broken
    verdict(10, "Reed-Solomon erasure patterns and field axioms", ok,
            f"{patterns} patterns, {failures} failures; 100000 triples, "
            f"{'no axiom broken' if not broken else 'broken: ' + ', '.join(broken)}")
