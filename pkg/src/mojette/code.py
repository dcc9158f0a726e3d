"""(n, k) packet erasure code on top of the Mojette transform.

A block is split into ``k`` rows of ``P`` symbols and encoded as ``n``
projections with ``q = 1``.  Any ``k`` of them reconstruct the block, since
``k`` directions with ``q = 1`` sum to exactly ``Q = k``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np

from . import _kernels
from .core import (
    Direction,
    Projection,
    ReconstructionSchedule,
    b_min,
    bin_count,
    build_schedule,
    check_width,
    forward,
    inverse_scheduled,
    word_view,
)
from .errors import BlockTooLarge, InconsistentProjections, NotEnoughProjections, TooManySubsets

MAX_COLUMNS = 2**32 - 1
DEFAULT_SUBSET_CAP = 5000


def select_directions(n: int) -> list[Direction]:
    """The ``n`` cheapest ``q = 1`` directions: p = 0, 1, -1, 2, -2, ..."""
    if n < 1:
        raise ValueError("n must be at least 1")
    ps = [0]
    m = 1
    while len(ps) < n:
        ps.extend((m, -m))
        m += 1
    return [Direction(p, 1) for p in ps[:n]]


@dataclass(frozen=True)
class CodeParams:
    n: int
    k: int
    width: int = 16
    directions: tuple = field(default=None)

    def __post_init__(self):
        if not 1 <= self.k <= self.n <= 255:
            raise ValueError(f"need 1 <= k <= n <= 255, got n={self.n}, k={self.k}")
        check_width(self.width)
        dirs = self.directions
        dirs = tuple(select_directions(self.n)) if dirs is None else tuple(
            d if isinstance(d, Direction) else Direction(*d) for d in dirs
        )
        if len(dirs) != self.n:
            raise ValueError(f"{len(dirs)} directions given for n={self.n}")
        if any(d.q != 1 for d in dirs):
            raise ValueError("code directions must have q = 1")
        if len({d.p for d in dirs}) != len(dirs):
            raise ValueError("code directions must have distinct p")
        if any(abs(d.p) >= 2**15 for d in dirs):
            raise ValueError("|p| must fit in 16 bits")
        object.__setattr__(self, "directions", dirs)

    def columns(self, payload_len: int) -> int:
        return max(1, -(-payload_len // (self.k * self.width)))


@dataclass(eq=False)
class EncodedBlock:
    params: CodeParams
    payload_len: int
    P: int
    projections: list


@lru_cache(maxsize=None)
def _encode_plan(params: CodeParams, P: int):
    w = word_view(np.zeros((1, params.width), np.uint8)).shape[1]
    sizes = [bin_count(d, P, params.k) for d in params.directions]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    plan = [params.k, w]
    for d, off in zip(params.directions, offsets[:-1]):
        plan += [d.p, int(off) * w]
    return np.array(plan, np.int64), offsets


class BlockEncoder:
    """Preplanned encoder for one ``(params, P)`` pair, writing into owned buffers.

    ``encode`` is the timed kernel path: it transforms an already padded grid
    buffer without allocating.
    """

    def __init__(self, params: CodeParams, P: int):
        self.params = params
        self.P = P
        self.plan, self.offsets = _encode_plan(params, P)
        k, W = params.k, params.width
        self.grid = np.zeros((k, P, W), np.uint8)
        self.out = np.zeros((int(self.offsets[-1]), W), np.uint8)
        self._grid_words = word_view(self.grid).reshape(-1)
        self._out_words = word_view(self.out).reshape(-1)
        self._scratch = np.empty_like(self._grid_words)

    def load(self, data) -> None:
        flat = self.grid.reshape(-1)
        buf = np.frombuffer(data, np.uint8)
        flat[: buf.size] = buf
        flat[buf.size:] = 0

    def encode(self) -> None:
        _kernels.mojette_encode(self._grid_words, self.plan, self._out_words, self._scratch)

    def run(self, reps: int) -> None:
        _kernels.repeat_mojette_encode(reps, self._grid_words, self.plan, self._out_words, self._scratch)

    def projections(self) -> list[Projection]:
        k, P = self.params.k, self.P
        return [
            Projection(d, self.out[self.offsets[i]:self.offsets[i + 1]].copy(), b_min(d, P, k))
            for i, d in enumerate(self.params.directions)
        ]


def encode_block(data, params: CodeParams) -> EncodedBlock:
    """Zero-pad ``data`` to ``k*P*W`` bytes and project it ``n`` times."""
    data = bytes(data)
    if not data:
        raise ValueError("cannot encode an empty block")
    P = params.columns(len(data))
    if P > MAX_COLUMNS:
        raise BlockTooLarge(f"{len(data)} bytes need {P} columns (max {MAX_COLUMNS})")
    enc = BlockEncoder(params, P)
    enc.load(data)
    enc.encode()
    return EncodedBlock(params, len(data), P, enc.projections())


@lru_cache(maxsize=None)
def cached_schedule(dirs: tuple, P: int, k: int) -> ReconstructionSchedule:
    """Schedules are pure functions of their key, so sharing is safe."""
    return build_schedule(dirs, P, k)


def choose_subset(projs: Sequence[Projection], params: CodeParams) -> list[Projection]:
    """Pick the ``k`` projections with the smallest total ``|p|``."""
    rank = {d: i for i, d in enumerate(params.directions)}
    seen = {}
    for pr in projs:
        if pr.direction not in rank:
            raise ValueError(f"direction {pr.direction} is not part of this code")
        if pr.direction in seen:
            raise ValueError(f"direction {pr.direction} supplied twice")
        seen[pr.direction] = pr
    if len(seen) < params.k:
        raise NotEnoughProjections(f"{len(seen)} projections supplied, {params.k} needed")
    ordered = sorted(seen.values(), key=lambda pr: (abs(pr.direction.p), rank[pr.direction]))
    return ordered[: params.k]


def decode_block(projs: Sequence[Projection], params: CodeParams, payload_len: int, *, verify: bool = True) -> bytes:
    """Recover the payload from any ``k`` or more projections.

    With ``verify`` the recovered grid is re-projected and compared against
    every supplied projection, not only the ``k`` used.
    """
    P = params.columns(payload_len)
    chosen = choose_subset(projs, params)
    schedule = cached_schedule(tuple(pr.direction for pr in chosen), P, params.k)
    grid = inverse_scheduled(chosen, schedule)
    if verify:
        for pr in projs:
            if not np.array_equal(forward(grid, pr.direction).bins, pr.bins):
                raise InconsistentProjections(
                    f"projection {pr.direction} disagrees with the decoded block"
                )
    return grid.to_bytes()[:payload_len]


def storage_overhead(params: CodeParams, P: int) -> Fraction:
    """Stored symbols relative to the ``n * P`` of an MDS code."""
    total = sum(bin_count(d, P, params.k) for d in params.directions)
    return Fraction(total, params.n * P)


def unused_bins(params: CodeParams, P: int, max_subsets: int = DEFAULT_SUBSET_CAP) -> list[set]:
    """Bins (by index ``b``) whose value no ``k``-subset decode ever reads.

    Every ``k``-subset schedule is built; a bin is used if it is the source
    of some step.  Other bins may still be XOR-updated during a decode, but
    their contents never reach the output.
    """
    subsets = comb(params.n, params.k)
    if subsets > max_subsets:
        raise TooManySubsets(f"C({params.n},{params.k}) = {subsets} exceeds cap {max_subsets}")
    k = params.k
    used = {d: set() for d in params.directions}
    for idx in itertools.combinations(range(params.n), k):
        dirs = tuple(params.directions[i] for i in idx)
        for d, bins in zip(dirs, cached_schedule(dirs, P, k).read_bins()):
            used[d] |= bins
    result = []
    for d in params.directions:
        lo = b_min(d, P, k)
        result.append({b for b in range(lo, lo + bin_count(d, P, k)) if b not in used[d]})
    return result
