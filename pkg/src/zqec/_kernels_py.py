"""Pure numpy implementations of the hot kernels.

Same call signatures as the compiled module ``zqec._bitkernels``; the active
implementation is chosen in :mod:`zqec.backend`.  Bit vectors are packed into
little-endian uint64 words; syndromes and adjacency walk on plain uint8/int32
arrays.
"""

from __future__ import annotations

import heapq

import numpy as np

COMPILED = False


def popcount_words(words: np.ndarray) -> int:
    return int(np.bitwise_count(words).sum())


def matvec_parity(mat: np.ndarray, vec: np.ndarray, out: np.ndarray) -> None:
    """out bits <- parity(<row_i(mat), vec>) for each row, packed."""
    if mat.shape[0] == 0:
        out[:] = 0
        return
    acc = np.bitwise_count(mat & vec[None, :]).sum(axis=1, dtype=np.int64)
    bits = (acc & 1).astype(np.uint8)
    out[:] = 0
    idx = np.nonzero(bits)[0]
    np.bitwise_or.at(out, idx >> 6, np.uint64(1) << (idx & 63).astype(np.uint64))


def matmat_mul(a_words: np.ndarray, a_cols: int, b_words: np.ndarray, out: np.ndarray) -> None:
    """out <- a . b where row i of out is the XOR of b-rows picked by a's row i."""
    out[:] = 0
    nbytes = a_words.shape[1] * 8
    for i in range(a_words.shape[0]):
        row_bits = np.unpackbits(a_words[i].view(np.uint8), bitorder="little", count=nbytes * 8)
        sel = np.nonzero(row_bits[:a_cols])[0]
        if sel.size:
            out[i] = np.bitwise_xor.reduce(b_words[sel], axis=0)


def rank_words(work: np.ndarray, cols: int) -> int:
    """GF(2) rank by destructive elimination; pivots by first set bit per column."""
    rows = work.shape[0]
    r = 0
    for c in range(cols):
        if r == rows:
            break
        w = c >> 6
        b = np.uint64(c & 63)
        col = (work[r:, w] >> b) & np.uint64(1)
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        below = r + 1 + np.nonzero((work[r + 1 :, w] >> b) & np.uint64(1))[0]
        if below.size:
            work[below] ^= work[r]
        r += 1
    return r


def seq_flip_reduce(
    residual: np.ndarray,
    h_adj: np.ndarray,
    l_adj: np.ndarray,
    chk_h: np.ndarray,
    chk_l: np.ndarray,
    h_est: np.ndarray,
    l_est: np.ndarray,
    max_flips: int,
):
    """Sequential majority bit-flip loop shared by the X and Z reducers.

    Flips exactly one bit per iteration: the eligible bit that is first in
    scan order (high-degree class before low-degree class, lowest index
    first).  A bit is eligible when strictly more of its checks are
    unsatisfied than satisfied.  ``residual`` is consumed in place.

    Returns (flips, converged, work, overflowed).
    """
    mh, dh = h_adj.shape
    nl, dl = l_adj.shape
    bh = chk_h.shape[1]
    bl = chk_l.shape[1]
    unsat_h = residual[h_adj].sum(axis=1, dtype=np.int64) if mh else np.zeros(0, np.int64)
    unsat_l = residual[l_adj].sum(axis=1, dtype=np.int64) if nl else np.zeros(0, np.int64)
    rweight = int(residual.sum())
    work = mh * dh + nl * dl

    heap: list[int] = [int(j) for j in np.nonzero(2 * unsat_h > dh)[0]]
    heap.extend((1 << 32) | int(j) for j in np.nonzero(2 * unsat_l > dl)[0])
    heapq.heapify(heap)

    flips = 0
    while heap:
        key = heapq.heappop(heap)
        idx = key & 0xFFFFFFFF
        if key < (1 << 32):
            if 2 * unsat_h[idx] <= dh:
                continue
            h_est[idx] ^= 1
            adj = h_adj[idx]
        else:
            if 2 * unsat_l[idx] <= dl:
                continue
            l_est[idx] ^= 1
            adj = l_adj[idx]
        flips += 1
        if flips > max_flips:
            return flips, False, work, True
        for c in adj:
            if residual[c]:
                residual[c] = 0
                rweight -= 1
                delta = -1
            else:
                residual[c] = 1
                rweight += 1
                delta = 1
            for j2 in chk_h[c]:
                unsat_h[j2] += delta
                if delta > 0 and 2 * unsat_h[j2] > dh:
                    heapq.heappush(heap, int(j2))
            for j2 in chk_l[c]:
                unsat_l[j2] += delta
                if delta > 0 and 2 * unsat_l[j2] > dl:
                    heapq.heappush(heap, (1 << 32) | int(j2))
            work += bh + bl
    return flips, rweight == 0, work, False
