# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: packed GF(2) products, rank, and the sequential flip loop.

Mirrors zqec._kernels_py exactly (same signatures, bit-identical results).
"""

from libc.stdlib cimport free, malloc, realloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

COMPILED = True

cdef extern from *:
    """
    #if defined(__GNUC__) || defined(__clang__)
    #define ZQEC_POPCOUNT64(x) __builtin_popcountll(x)
    #else
    static inline int ZQEC_POPCOUNT64(unsigned long long x) {
        int c = 0;
        while (x) { x &= x - 1; c++; }
        return c;
    }
    #endif
    """
    int ZQEC_POPCOUNT64(unsigned long long x) nogil


def popcount_words(const cnp.uint64_t[::1] words):
    cdef Py_ssize_t i
    cdef long long total = 0
    with nogil:
        for i in range(words.shape[0]):
            total += ZQEC_POPCOUNT64(words[i])
    return total


def matvec_parity(const cnp.uint64_t[:, ::1] mat, const cnp.uint64_t[::1] vec, cnp.uint64_t[::1] out):
    cdef Py_ssize_t i, w, rows = mat.shape[0], nw = mat.shape[1]
    cdef int acc
    with nogil:
        for i in range(out.shape[0]):
            out[i] = 0
        for i in range(rows):
            acc = 0
            for w in range(nw):
                acc ^= ZQEC_POPCOUNT64(mat[i, w] & vec[w]) & 1
            if acc:
                out[i >> 6] |= (<cnp.uint64_t>1) << (i & 63)


def matmat_mul(const cnp.uint64_t[:, ::1] a_words, Py_ssize_t a_cols,
               const cnp.uint64_t[:, ::1] b_words, cnp.uint64_t[:, ::1] out):
    cdef Py_ssize_t i, w, j, base, nw_a = a_words.shape[1], nw_b = b_words.shape[1]
    cdef cnp.uint64_t word
    with nogil:
        for i in range(out.shape[0]):
            for w in range(nw_b):
                out[i, w] = 0
        for i in range(a_words.shape[0]):
            for w in range(nw_a):
                word = a_words[i, w]
                base = w << 6
                while word:
                    j = base + _ctz(word)
                    word &= word - 1
                    if j < a_cols:
                        for_xor_row(out, b_words, i, j, nw_b)


cdef extern from *:
    """
    #if defined(__GNUC__) || defined(__clang__)
    #define ZQEC_CTZ64(x) __builtin_ctzll(x)
    #else
    static inline int ZQEC_CTZ64(unsigned long long x) {
        int c = 0;
        while (!(x & 1)) { x >>= 1; c++; }
        return c;
    }
    #endif
    """
    int ZQEC_CTZ64(unsigned long long x) nogil


cdef inline int _ctz(cnp.uint64_t x) noexcept nogil:
    return ZQEC_CTZ64(x)


cdef inline void for_xor_row(cnp.uint64_t[:, ::1] out, const cnp.uint64_t[:, ::1] b,
                             Py_ssize_t i, Py_ssize_t j, Py_ssize_t nw) noexcept nogil:
    cdef Py_ssize_t w
    for w in range(nw):
        out[i, w] ^= b[j, w]


def rank_words(cnp.uint64_t[:, ::1] work, Py_ssize_t cols):
    cdef Py_ssize_t rows = work.shape[0], nw = work.shape[1]
    cdef Py_ssize_t r = 0, c, i, w, wi
    cdef cnp.uint64_t bit, tmp
    with nogil:
        for c in range(cols):
            if r == rows:
                break
            w = c >> 6
            bit = (<cnp.uint64_t>1) << (c & 63)
            i = r
            while i < rows and not (work[i, w] & bit):
                i += 1
            if i == rows:
                continue
            if i != r:
                for wi in range(nw):
                    tmp = work[r, wi]
                    work[r, wi] = work[i, wi]
                    work[i, wi] = tmp
            for i in range(r + 1, rows):
                if work[i, w] & bit:
                    for wi in range(nw):
                        work[i, wi] ^= work[r, wi]
            r += 1
    return r


cdef struct Heap:
    long long *data
    Py_ssize_t size
    Py_ssize_t cap


cdef inline int heap_push(Heap *h, long long key) noexcept nogil:
    cdef Py_ssize_t i, parent
    cdef long long tmp
    if h.size == h.cap:
        h.cap = h.cap * 2
        h.data = <long long *>realloc(h.data, h.cap * sizeof(long long))
        if h.data == NULL:
            return -1
    h.data[h.size] = key
    i = h.size
    h.size += 1
    while i > 0:
        parent = (i - 1) >> 1
        if h.data[parent] <= h.data[i]:
            break
        tmp = h.data[parent]
        h.data[parent] = h.data[i]
        h.data[i] = tmp
        i = parent
    return 0


cdef inline long long heap_pop(Heap *h) noexcept nogil:
    cdef long long top = h.data[0]
    cdef Py_ssize_t i = 0, child
    cdef long long tmp
    h.size -= 1
    h.data[0] = h.data[h.size]
    while True:
        child = 2 * i + 1
        if child >= h.size:
            break
        if child + 1 < h.size and h.data[child + 1] < h.data[child]:
            child += 1
        if h.data[i] <= h.data[child]:
            break
        tmp = h.data[i]
        h.data[i] = h.data[child]
        h.data[child] = tmp
        i = child
    return top


def seq_flip_reduce(cnp.uint8_t[::1] residual,
                    const cnp.int32_t[:, ::1] h_adj, const cnp.int32_t[:, ::1] l_adj,
                    const cnp.int32_t[:, ::1] chk_h, const cnp.int32_t[:, ::1] chk_l,
                    cnp.uint8_t[::1] h_est, cnp.uint8_t[::1] l_est,
                    long long max_flips):
    cdef Py_ssize_t mh = h_adj.shape[0], dh = h_adj.shape[1]
    cdef Py_ssize_t nl = l_adj.shape[0], dl = l_adj.shape[1]
    cdef Py_ssize_t bh = chk_h.shape[1], bl = chk_l.shape[1]
    cdef Py_ssize_t i, j, c, t
    cdef long long key, flips = 0, work = 0, rweight = 0
    cdef int delta, overflow = 0
    cdef long long[::1] unsat_h = np.zeros(mh, dtype=np.int64)
    cdef long long[::1] unsat_l = np.zeros(nl, dtype=np.int64)
    cdef Heap heap
    heap.cap = mh + nl + 64
    heap.size = 0
    heap.data = <long long *>malloc(heap.cap * sizeof(long long))
    if heap.data == NULL:
        raise MemoryError()

    try:
        with nogil:
            for i in range(residual.shape[0]):
                rweight += residual[i]
            for i in range(mh):
                for j in range(dh):
                    unsat_h[i] += residual[h_adj[i, j]]
                if 2 * unsat_h[i] > dh:
                    heap_push(&heap, i)
            for i in range(nl):
                for j in range(dl):
                    unsat_l[i] += residual[l_adj[i, j]]
                if 2 * unsat_l[i] > dl:
                    heap_push(&heap, (<long long>1 << 32) | i)
            work = mh * dh + nl * dl

            while heap.size > 0 and not overflow:
                key = heap_pop(&heap)
                i = <Py_ssize_t>(key & <long long>0xFFFFFFFF)
                if key < (<long long>1 << 32):
                    if 2 * unsat_h[i] <= dh:
                        continue
                    h_est[i] ^= 1
                else:
                    if 2 * unsat_l[i] <= dl:
                        continue
                    l_est[i] ^= 1
                flips += 1
                if flips > max_flips:
                    overflow = 1
                    break
                for j in range(dh if key < (<long long>1 << 32) else dl):
                    if key < (<long long>1 << 32):
                        c = h_adj[i, j]
                    else:
                        c = l_adj[i, j]
                    if residual[c]:
                        residual[c] = 0
                        rweight -= 1
                        delta = -1
                    else:
                        residual[c] = 1
                        rweight += 1
                        delta = 1
                    for t in range(bh):
                        unsat_h[chk_h[c, t]] += delta
                        if delta > 0 and 2 * unsat_h[chk_h[c, t]] > dh:
                            heap_push(&heap, chk_h[c, t])
                    for t in range(bl):
                        unsat_l[chk_l[c, t]] += delta
                        if delta > 0 and 2 * unsat_l[chk_l[c, t]] > dl:
                            heap_push(&heap, (<long long>1 << 32) | chk_l[c, t])
                    work += bh + bl
    finally:
        free(heap.data)
    return flips, (rweight == 0 and not overflow), work, bool(overflow)
