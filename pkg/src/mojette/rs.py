"""Systematic Vandermonde Reed-Solomon over GF(2^8).

Scalar, table-driven reference code used as an independent MDS oracle and as
the benchmark competitor.  Field arithmetic uses the polynomial 0x11D.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Mapping

import numpy as np

from . import _kernels

POLY = 0x11D
MDS_CHECK_LIMIT = 20000


def _build_tables():
    exp = [0] * 510
    log = [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= POLY
    for i in range(255, 510):
        exp[i] = exp[i - 255]
    return exp, log


GF_EXP, GF_LOG = _build_tables()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return GF_EXP[GF_LOG[a] + GF_LOG[b]]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(2^8)")
    return GF_EXP[255 - GF_LOG[a]]


def gf_pow(a: int, e: int) -> int:
    if e == 0:
        return 1
    if a == 0:
        return 0
    return GF_EXP[(GF_LOG[a] * e) % 255]


MUL_TABLE = np.array([[gf_mul(a, b) for b in range(256)] for a in range(256)], np.uint8)


def gf_matmul(a, b):
    rows, inner, cols = len(a), len(b), len(b[0])
    out = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        for t in range(inner):
            c = a[i][t]
            if c:
                bt = b[t]
                oi = out[i]
                for j in range(cols):
                    oi[j] ^= gf_mul(c, bt[j])
    return out


def gf_invert(m):
    """Gauss-Jordan inverse of a square matrix; raises on singular input."""
    size = len(m)
    a = [list(row) + [int(i == j) for j in range(size)] for i, row in enumerate(m)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if a[r][col]), None)
        if pivot is None:
            raise ArithmeticError("singular matrix over GF(2^8)")
        a[col], a[pivot] = a[pivot], a[col]
        inv = gf_inv(a[col][col])
        a[col] = [gf_mul(inv, v) for v in a[col]]
        for r in range(size):
            f = a[r][col]
            if r != col and f:
                a[r] = [v ^ gf_mul(f, w) for v, w in zip(a[r], a[col])]
    return [row[size:] for row in a]


@dataclass(frozen=True, eq=False)
class RsMatrix:
    """``n x k`` generator whose top ``k x k`` block is the identity."""

    n: int
    k: int
    entries: np.ndarray

    def rows(self, idx) -> list:
        return [self.entries[i].tolist() for i in idx]

    def is_mds(self) -> bool:
        for idx in itertools.combinations(range(self.n), self.k):
            try:
                gf_invert(self.rows(idx))
            except ArithmeticError:
                return False
        return True


@lru_cache(maxsize=None)
def vandermonde_matrix(n: int, k: int) -> RsMatrix:
    """Systematic generator from the Vandermonde matrix ``V[i][j] = i**j``.

    ``G = V * inv(V[:k])``; every k-row subset of ``V`` is invertible for
    distinct evaluation points, and right-multiplication preserves that.
    Small codes are also checked exhaustively.
    """
    if not 1 <= k <= n <= 256:
        raise ValueError(f"need 1 <= k <= n <= 256, got n={n}, k={k}")
    v = [[gf_pow(i, j) for j in range(k)] for i in range(n)]
    g = gf_matmul(v, gf_invert(v[:k]))
    m = RsMatrix(n, k, np.array(g, np.uint8))
    if comb(n, k) <= MDS_CHECK_LIMIT and not m.is_mds():
        raise AssertionError(f"generator for ({n},{k}) is not MDS")
    return m


def rs_encode(data, matrix: RsMatrix) -> np.ndarray:
    """Encode ``k`` equal-length packets into ``n``; the first ``k`` are the data."""
    packets = _as_packets(data, matrix.k)
    out = np.empty((matrix.n, packets.shape[1]), np.uint8)
    out[: matrix.k] = packets
    rows = np.arange(matrix.k, dtype=np.int64)
    _kernels.gf_combine(packets, rows, np.ascontiguousarray(matrix.entries[matrix.k:]), MUL_TABLE, out[matrix.k:])
    return out


@dataclass(frozen=True, eq=False)
class DecodePlan:
    """Precomputed inverse for one survivor set: what the timed decode consumes."""

    survivors: np.ndarray
    data_rows: np.ndarray
    missing: np.ndarray
    coef: np.ndarray


def decode_plan(matrix: RsMatrix, survivors) -> DecodePlan:
    survivors = sorted(int(i) for i in survivors)
    if len(set(survivors)) != matrix.k:
        raise ValueError(f"need exactly {matrix.k} distinct survivor indices")
    if survivors[0] < 0 or survivors[-1] >= matrix.n:
        raise ValueError("survivor index out of range")
    missing = [i for i in range(matrix.k) if i not in survivors]
    coef = []
    if missing:
        inv = gf_invert(matrix.rows(survivors))
        coef = [inv[i] for i in missing]
    return DecodePlan(
        survivors=np.array(survivors, np.int64),
        data_rows=np.array([i for i in survivors if i < matrix.k], np.int64),
        missing=np.array(missing, np.int64),
        coef=np.array(coef, np.uint8).reshape(len(missing), matrix.k),
    )


def rs_decode(packets: Mapping[int, bytes], matrix: RsMatrix) -> np.ndarray:
    """Recover the ``k`` data packets from any ``k`` indexed survivors.

    ``packets`` maps packet index to content; extra survivors beyond ``k``
    are ignored (lowest indices win, so data packets are preferred).
    """
    if len(packets) < matrix.k:
        raise ValueError(f"{len(packets)} packets supplied, {matrix.k} needed")
    chosen = sorted(packets)[: matrix.k]
    plan = decode_plan(matrix, chosen)
    lengths = {len(packets[i]) for i in chosen}
    if len(lengths) != 1:
        raise ValueError("packets differ in length")
    L = lengths.pop()
    full = np.zeros((matrix.n, L), np.uint8)
    for i in chosen:
        full[i] = np.frombuffer(bytes(packets[i]), np.uint8)
    out = np.empty((matrix.k, L), np.uint8)
    _kernels.rs_decode(full, plan.survivors, plan.data_rows, plan.coef, plan.missing, MUL_TABLE, out)
    return out


def _as_packets(data, k: int) -> np.ndarray:
    if isinstance(data, np.ndarray):
        arr = np.ascontiguousarray(data, dtype=np.uint8)
    else:
        data = [bytes(d) for d in data]
        if len({len(d) for d in data}) > 1:
            raise ValueError("packets differ in length")
        arr = np.array([np.frombuffer(d, np.uint8) for d in data], np.uint8)
    if arr.ndim != 2 or arr.shape[0] != k:
        raise ValueError(f"expected {k} packets, got array of shape {arr.shape}")
    return arr
