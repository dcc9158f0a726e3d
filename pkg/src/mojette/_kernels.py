"""Compiled inner loops.

Symbols arrive as arrays of unsigned machine words; every kernel writes into
caller-provided buffers and allocates nothing.  The ``repeat_*`` variants run
a kernel ``reps`` times from compiled code so that the benchmark harness
measures the loop body rather than interpreter dispatch.
"""

from numba import njit

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def mojette_encode(grid, plan, out, scratch):
    """Forward transform of a ``k``-row grid along ``q = 1`` directions.

    ``grid`` holds ``k`` rows of ``P`` symbols of ``w`` words, flattened.
    ``plan`` is ``[k, w, p_0, off_0, p_1, off_1, ...]`` where ``off_i`` is the
    word offset of projection ``i`` inside ``out``.

    With ``q = 1`` pixel ``(col, row)`` lands in bin ``row*p + (P-1-col)``
    (``p >= 0``), so each row is one contiguous run of a column-reversed row.
    Negative ``p`` reverses the row order with step ``|p|``.
    """
    k = plan[0]
    w = plan[1]
    Pw = grid.shape[0] // k
    P = Pw // w
    for r in range(k):
        src = grid[r * Pw:(r + 1) * Pw]
        dst = scratch[r * Pw:(r + 1) * Pw]
        for c in range(P):
            s = c * w
            d = Pw - w - s
            for x in range(w):
                dst[d + x] = src[s + x]
    n = (plan.shape[0] - 2) // 2
    for i in range(n):
        p = plan[2 + 2 * i]
        o = plan[3 + 2 * i]
        a = p if p >= 0 else -p
        aw = a * w
        proj = out[o:o + Pw + aw * (k - 1)]
        first = 0 if p >= 0 else k - 1
        src = scratch[first * Pw:(first + 1) * Pw]
        for j in range(Pw):
            proj[j] = src[j]
        for j in range(Pw, proj.shape[0]):
            proj[j] = 0
        for rr in range(1, k):
            r = rr if p >= 0 else k - 1 - rr
            src = scratch[r * Pw:(r + 1) * Pw]
            dst = proj[rr * aw:rr * aw + Pw]
            for j in range(Pw):
                dst[j] ^= src[j]


@njit(**_JIT)
def replay(bins, work, out, source, pixel, update_ptr, update):
    """Scheduled back-projection.

    ``bins`` (read-only input) is copied into ``work``; step ``t`` moves bin
    ``source[t]`` into pixel ``pixel[t]`` then XORs that pixel into the bins
    ``update[update_ptr[t]:update_ptr[t+1]]``.
    """
    S, w = bins.shape
    for s in range(S):
        for x in range(w):
            work[s, x] = bins[s, x]
    for t in range(source.shape[0]):
        s = source[t]
        d = pixel[t]
        for x in range(w):
            out[d, x] = work[s, x]
        for u in range(update_ptr[t], update_ptr[t + 1]):
            b = update[u]
            for x in range(w):
                work[b, x] ^= out[d, x]


@njit(**_JIT)
def gf_combine(packets, rows, coef, mul, out):
    """``out[i] = XOR_j mul[coef[i, j], packets[rows[j]]]`` over GF(2^8), bytewise."""
    m, k = coef.shape
    L = packets.shape[1]
    for i in range(m):
        dst = out[i]
        for x in range(L):
            dst[x] = 0
        for j in range(k):
            c = coef[i, j]
            if c == 0:
                continue
            table = mul[c]
            src = packets[rows[j]]
            for x in range(L):
                dst[x] ^= table[src[x]]


@njit(**_JIT)
def copy_rows(src, src_rows, dst, dst_rows):
    L = src.shape[1]
    for i in range(src_rows.shape[0]):
        a = src[src_rows[i]]
        b = dst[dst_rows[i]]
        for x in range(L):
            b[x] = a[x]


@njit(**_JIT)
def rs_decode(packets, survivors, data_rows, coef, missing, mul, out):
    """Systematic decode: copy surviving data packets, rebuild missing ones.

    ``survivors`` are the ``k`` packet indices used; ``coef`` holds the rows of
    the inverted survivor matrix for the ``missing`` data indices.
    """
    copy_rows(packets, data_rows, out, data_rows)
    m, k = coef.shape
    L = packets.shape[1]
    for i in range(m):
        dst = out[missing[i]]
        for x in range(L):
            dst[x] = 0
        for j in range(k):
            c = coef[i, j]
            if c == 0:
                continue
            table = mul[c]
            src = packets[survivors[j]]
            for x in range(L):
                dst[x] ^= table[src[x]]


@njit(**_JIT)
def repeat_mojette_encode(reps, grid, plan, out, scratch):
    for _ in range(reps):
        mojette_encode(grid, plan, out, scratch)


@njit(**_JIT)
def repeat_replay(reps, bins, work, out, source, pixel, update_ptr, update):
    for _ in range(reps):
        replay(bins, work, out, source, pixel, update_ptr, update)


@njit(**_JIT)
def repeat_gf_combine(reps, packets, rows, coef, mul, out):
    for _ in range(reps):
        gf_combine(packets, rows, coef, mul, out)


@njit(**_JIT)
def repeat_rs_decode(reps, packets, survivors, data_rows, coef, missing, mul, out):
    for _ in range(reps):
        rs_decode(packets, survivors, data_rows, coef, missing, mul, out)


@njit(**_JIT)
def repeat_copy_rows(reps, src, src_rows, dst, dst_rows):
    for _ in range(reps):
        copy_rows(src, src_rows, dst, dst_rows)
