"""Mojette geometry and transform kernel.

A grid of ``P`` columns by ``Q`` rows of fixed-width symbols is projected
along directions ``(p, q)``.  Pixel ``(col, row)`` falls into the bin whose
index is ``b = -col*q + row*p``; a bin holds the XOR of every pixel on its
line.  Bins are stored densely from ``b_min`` upward.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import InconsistentProjections, InsufficientProjections, ScheduleMismatch

__all__ = [
    "Direction",
    "Grid",
    "Projection",
    "ReconstructionSchedule",
    "bin_count",
    "b_min",
    "katz_ok",
    "forward",
    "xor_cost",
    "inverse_iterative",
    "build_schedule",
    "inverse_scheduled",
    "check_width",
    "word_view",
]

MAX_WIDTH = 64


def check_width(width: int) -> int:
    if not isinstance(width, (int, np.integer)) or width < 1 or width > MAX_WIDTH or width & (width - 1):
        raise ValueError(f"symbol width must be a power of two in [1, {MAX_WIDTH}], got {width!r}")
    return int(width)


def word_view(arr: np.ndarray) -> np.ndarray:
    """View a ``(..., W)`` uint8 array as machine words ``(..., W // size)``.

    The widest unsigned type dividing ``W`` (up to 64 bits) is used.
    """
    width = arr.shape[-1]
    size = min(width, 8)
    return arr.view(np.dtype(f"<u{size}"))


@dataclass(frozen=True, order=True)
class Direction:
    """A projection angle given by co-prime integers ``p`` and ``q > 0``."""

    p: int
    q: int = 1

    def __post_init__(self):
        if self.q < 1:
            raise ValueError(f"q must be positive, got {self.q}")
        if gcd(abs(self.p), self.q) != 1:
            raise ValueError(f"direction ({self.p},{self.q}) is not co-prime")

    def __repr__(self):
        return f"Direction({self.p},{self.q})"


def _as_direction(d) -> Direction:
    if isinstance(d, Direction):
        return d
    p, q = d
    return Direction(int(p), int(q))


def bin_count(direction, P: int, Q: int) -> int:
    """Number of bins of a projection of a ``P x Q`` grid."""
    d = _as_direction(direction)
    if P < 1 or Q < 1:
        raise ValueError("grid dimensions must be positive")
    return abs(d.p) * (Q - 1) + d.q * (P - 1) + 1


def b_min(direction, P: int, Q: int) -> int:
    """Index of the first bin, the minimum of ``-col*q + row*p`` over the grid."""
    d = _as_direction(direction)
    return -(P - 1) * d.q + min(0, d.p * (Q - 1))


def katz_ok(dirs: Iterable, P: int, Q: int) -> bool:
    """Whether the direction set determines a ``P x Q`` grid uniquely."""
    dirs = [_as_direction(d) for d in dirs]
    if len(set(dirs)) != len(dirs):
        raise ValueError("duplicate directions in projection set")
    return P <= sum(abs(d.p) for d in dirs) or Q <= sum(d.q for d in dirs)


@dataclass(eq=False)
class Grid:
    """``rows x cols`` symbols of ``width`` bytes, stored row-major."""

    cols: int
    rows: int
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.uint8)
        if cells.ndim != 3 or cells.shape[:2] != (self.rows, self.cols):
            raise ValueError(
                f"cells must have shape ({self.rows}, {self.cols}, W), got {cells.shape}"
            )
        check_width(cells.shape[2])
        self.cells = cells

    @property
    def width(self) -> int:
        return self.cells.shape[2]

    @classmethod
    def zeros(cls, cols: int, rows: int, width: int = 16) -> "Grid":
        return cls(cols, rows, np.zeros((rows, cols, check_width(width)), np.uint8))

    @classmethod
    def from_bytes(cls, data: bytes, cols: int, rows: int, width: int = 16) -> "Grid":
        check_width(width)
        buf = np.frombuffer(bytes(data), np.uint8)
        if buf.size != cols * rows * width:
            raise ValueError(f"expected {cols * rows * width} bytes, got {buf.size}")
        return cls(cols, rows, buf.reshape(rows, cols, width).copy())

    def to_bytes(self) -> bytes:
        return self.cells.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (self.cols, self.rows) == (other.cols, other.rows) and np.array_equal(
            self.cells, other.cells
        )


@dataclass(eq=False)
class Projection:
    """One encoded packet: a direction and its dense bin array."""

    direction: Direction
    bins: np.ndarray
    b_min: int

    def __post_init__(self):
        self.direction = _as_direction(self.direction)
        bins = np.asarray(self.bins, dtype=np.uint8)
        if bins.ndim != 2:
            raise ValueError("bins must be a (B, W) array")
        self.bins = bins

    @property
    def width(self) -> int:
        return self.bins.shape[1]

    def __len__(self):
        return self.bins.shape[0]

    def bin(self, b: int) -> np.ndarray:
        return self.bins[b - self.b_min]

    def __eq__(self, other):
        if not isinstance(other, Projection):
            return NotImplemented
        return (
            self.direction == other.direction
            and self.b_min == other.b_min
            and np.array_equal(self.bins, other.bins)
        )


def _line_index(d: Direction, P: int, Q: int) -> np.ndarray:
    """Bin offsets (relative to b_min) for every pixel, shape ``(Q, P)``."""
    row = np.arange(Q)[:, None]
    col = np.arange(P)[None, :]
    return -col * d.q + row * d.p - b_min(d, P, Q)


def forward(grid: Grid, direction) -> Projection:
    """Project ``grid`` along ``direction``; bins are XOR sums of their lines."""
    d = _as_direction(direction)
    P, Q, W = grid.cols, grid.rows, grid.width
    bins = np.zeros((bin_count(d, P, Q), W), np.uint8)
    cells = word_view(grid.cells).reshape(P * Q, -1)
    np.bitwise_xor.at(word_view(bins), _line_index(d, P, Q).ravel(), cells)
    return Projection(d, bins, b_min(d, P, Q))


def xor_cost(direction, P: int, Q: int) -> int:
    """Count the XOR accumulations of a pixel-by-pixel forward pass.

    The first pixel landing in a bin is copied; each later one costs an XOR.
    """
    d = _as_direction(direction)
    seen = set()
    xors = 0
    for row in range(Q):
        for col in range(P):
            b = -col * d.q + row * d.p
            if b in seen:
                xors += 1
            else:
                seen.add(b)
    return xors


def _check_projection_set(projs: Sequence[Projection], P: int, Q: int) -> int:
    dirs = [pr.direction for pr in projs]
    if len(set(dirs)) != len(dirs):
        raise ValueError("duplicate directions in projection set")
    widths = {pr.width for pr in projs}
    if len(widths) > 1:
        raise ValueError(f"projections disagree on symbol width: {sorted(widths)}")
    for pr in projs:
        expected = bin_count(pr.direction, P, Q)
        if len(pr) != expected:
            raise ValueError(
                f"projection {pr.direction} has {len(pr)} bins, expected {expected} for {P}x{Q}"
            )
    return widths.pop() if widths else 0


def inverse_iterative(projs: Sequence[Projection], P: int, Q: int) -> Grid:
    """Reference decoder: repeatedly back-project any single-pixel bin.

    Sweeps all bins until every pixel is known.  Each recovered pixel is
    XORed out of the crossing bin of every projection, which exposes new
    single-pixel bins.  Symbols are handled as Python integers.
    """
    projs = list(projs)
    W = _check_projection_set(projs, P, Q)
    if not projs:
        raise InsufficientProjections("empty projection set")

    dirs = [pr.direction for pr in projs]
    offsets = [b_min(d, P, Q) for d in dirs]
    values = [[int.from_bytes(s.tobytes(), "little") for s in pr.bins] for pr in projs]
    counts = []
    for d, off, vals in zip(dirs, offsets, values):
        c = [0] * len(vals)
        for row in range(Q):
            for col in range(P):
                c[-col * d.q + row * d.p - off] += 1
        counts.append(c)

    known = [[None] * P for _ in range(Q)]
    remaining = P * Q
    while remaining:
        progress = False
        for j, d in enumerate(dirs):
            cj = counts[j]
            for pos in range(len(cj)):
                if cj[pos] != 1:
                    continue
                b = pos + offsets[j]
                for row in range(Q):
                    num = row * d.p - b
                    if num % d.q:
                        continue
                    col = num // d.q
                    if 0 <= col < P and known[row][col] is None:
                        break
                else:
                    raise AssertionError("bin count out of sync with pixel state")
                v = values[j][pos]
                known[row][col] = v
                remaining -= 1
                progress = True
                for i, e in enumerate(dirs):
                    t = -col * e.q + row * e.p - offsets[i]
                    values[i][t] ^= v
                    counts[i][t] -= 1
        if not progress:
            raise InsufficientProjections(
                f"stalled with {remaining} of {P * Q} pixels unknown"
            )

    raw = b"".join(v.to_bytes(W, "little") for line in known for v in line)
    grid = Grid.from_bytes(raw, P, Q, W)
    for pr in projs:
        if not np.array_equal(forward(grid, pr.direction).bins, pr.bins):
            raise InconsistentProjections(
                f"projection {pr.direction} does not match the reconstructed grid"
            )
    return grid


@dataclass(frozen=True, eq=False)
class ReconstructionSchedule:
    """Precomputed back-projection order for one grid shape and direction list.

    ``steps`` is an ``(P*Q, 4)`` array of ``(proj_index, bin_index, col, row)``.
    The remaining fields are the replay plan derived from it, as flat symbol
    offsets into the concatenated bins: the source bin of each step and the
    crossing bins of the other projections that the pixel is XORed out of.
    """

    grid_shape: tuple
    directions_used: tuple
    steps: np.ndarray
    bin_offsets: np.ndarray = field(repr=False)
    source: np.ndarray = field(repr=False)
    pixel: np.ndarray = field(repr=False)
    update_ptr: np.ndarray = field(repr=False)
    update: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.steps)

    @property
    def total_bins(self) -> int:
        return int(self.bin_offsets[-1])

    def read_bins(self) -> list:
        """Per projection, the set of bin indices read as a step source."""
        used = [set() for _ in self.directions_used]
        for j, b, _, _ in self.steps.tolist():
            used[j].add(b)
        return used


def build_schedule(dirs: Sequence, P: int, Q: int) -> ReconstructionSchedule:
    """Simulate the iterative decoder on pixel counts only and record its path.

    At every round the first single-pixel bin in (projection order, bin index
    ascending) order is taken, so the result depends only on the arguments.
    """
    dirs = tuple(_as_direction(d) for d in dirs)
    if not katz_ok(dirs, P, Q):
        raise InsufficientProjections(f"{list(dirs)} cannot reconstruct a {P}x{Q} grid")

    offsets = [b_min(d, P, Q) for d in dirs]
    sizes = [bin_count(d, P, Q) for d in dirs]
    ids = np.arange(P * Q, dtype=np.int64)
    counts, idsum = [], []
    for d in dirs:
        idx = _line_index(d, P, Q).ravel()
        counts.append(np.bincount(idx, minlength=bin_count(d, P, Q)).tolist())
        # pixel-id sums stay exact in float64 far beyond any feasible grid
        idsum.append([int(x) for x in np.bincount(idx, weights=ids, minlength=len(counts[-1]))])

    heap = [(j, pos) for j, c in enumerate(counts) for pos, v in enumerate(c) if v == 1]
    heapq.heapify(heap)
    pq = [(d.p, d.q) for d in dirs]
    steps = []
    while heap:
        j, pos = heapq.heappop(heap)
        if counts[j][pos] != 1:
            continue
        pid = idsum[j][pos]
        row, col = divmod(pid, P)
        steps.append((j, pos + offsets[j], col, row))
        for i, (p, q) in enumerate(pq):
            t = -col * q + row * p - offsets[i]
            c = counts[i][t] - 1
            counts[i][t] = c
            idsum[i][t] -= pid
            if c == 1:
                heapq.heappush(heap, (i, t))
    if len(steps) != P * Q:
        raise InsufficientProjections(
            f"schedule stalled after {len(steps)} of {P * Q} pixels"
        )

    steps_arr = np.array(steps, dtype=np.int64).reshape(-1, 4)
    bin_offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    source = bin_offsets[steps_arr[:, 0]] + steps_arr[:, 1] - np.asarray(offsets)[steps_arr[:, 0]]
    cols, rows = steps_arr[:, 2], steps_arr[:, 3]
    crossing = np.stack(
        [bin_offsets[i] - cols * q + rows * p - offsets[i] for i, (p, q) in enumerate(pq)],
        axis=1,
    )
    # every recovered pixel is removed from the crossing bin of each other projection
    others = np.arange(len(dirs))[None, :] != steps_arr[:, :1]
    update_ptr = np.concatenate([[0], np.cumsum(others.sum(axis=1))]).astype(np.int64)

    return ReconstructionSchedule(
        grid_shape=(P, Q),
        directions_used=dirs,
        steps=steps_arr,
        bin_offsets=bin_offsets,
        source=source.astype(np.int64),
        pixel=(rows * P + cols).astype(np.int64),
        update_ptr=update_ptr,
        update=crossing[others].astype(np.int64),
    )


def inverse_scheduled(projs: Sequence[Projection], schedule: ReconstructionSchedule) -> Grid:
    """Replay ``schedule`` over copies of the projection bins."""
    projs = list(projs)
    P, Q = schedule.grid_shape
    if len(projs) != len(schedule.directions_used):
        raise ScheduleMismatch(
            f"schedule expects {len(schedule.directions_used)} projections, got {len(projs)}"
        )
    widths = set()
    for i, (pr, d) in enumerate(zip(projs, schedule.directions_used)):
        if pr.direction != d:
            raise ScheduleMismatch(f"projection {i} has direction {pr.direction}, schedule expects {d}")
        if len(pr) != schedule.bin_offsets[i + 1] - schedule.bin_offsets[i]:
            raise ScheduleMismatch(f"projection {i} has {len(pr)} bins, wrong for a {P}x{Q} grid")
        widths.add(pr.width)
    if len(widths) != 1:
        raise ScheduleMismatch(f"projections disagree on symbol width: {sorted(widths)}")
    W = widths.pop()

    bins = word_view(np.concatenate([pr.bins for pr in projs]))
    work = np.empty_like(bins)
    out = np.empty((P * Q, bins.shape[1]), bins.dtype)
    _kernels.replay(bins, work, out, schedule.source, schedule.pixel, schedule.update_ptr, schedule.update)
    return Grid(P, Q, out.view(np.uint8).reshape(Q, P, W))
