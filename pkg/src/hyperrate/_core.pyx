# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backtracking kernels; see :mod:`hyperrate.kernels` for the API."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport fabs

cnp.import_array()


cdef inline long _tuple_index(const int* x, const int* slots, int e, int r, long n) noexcept nogil:
    cdef long idx = 0
    cdef int i
    for i in range(r):
        idx = idx * n + x[slots[e * r + i]]
    return idx


cdef long long _count(const int* hdeg, const int* ptr, const int* slots, int k,
                      const unsigned char* adj, const int* gdeg, int n, int r) noexcept nogil:
    cdef int* x = <int*> malloc(k * sizeof(int))
    cdef char* used = <char*> malloc(n * sizeof(char))
    cdef long long total = 0
    cdef int d = 0, v, e, ok, i
    for i in range(n):
        used[i] = 0
    x[0] = -1
    while d >= 0:
        # release the vertex held at this depth before advancing it
        if x[d] >= 0:
            used[x[d]] = 0
        v = x[d] + 1
        while v < n:
            if not used[v] and gdeg[v] >= hdeg[d]:
                x[d] = v
                ok = 1
                for e in range(ptr[d], ptr[d + 1]):
                    if not adj[_tuple_index(x, slots, e, r, n)]:
                        ok = 0
                        break
                if ok:
                    break
            v += 1
        if v >= n:
            x[d] = -1
            d -= 1
            continue
        x[d] = v
        if d + 1 == k:
            total += 1
        else:
            used[v] = 1
            d += 1
            x[d] = -1
    free(x)
    free(used)
    return total


def injective_count(const int[::1] hdeg, const int[::1] ptr, const int[::1] slots, int k,
                    const unsigned char[::1] adj, const int[::1] gdeg, int n, int r):
    cdef long long out
    cdef const int* sp = &slots[0] if slots.shape[0] else NULL
    with nogil:
        out = _count(&hdeg[0], &ptr[0], sp, k, &adj[0], &gdeg[0], n, r)
    return out


def injective_count_batch(const int[::1] hdeg, const int[::1] ptr, const int[::1] slots, int k,
                          const unsigned char[:, ::1] graphs, const int[::1] ranks, int n, int r):
    cdef Py_ssize_t B = graphs.shape[0], b, t
    cdef long total = ranks.shape[0]
    cdef long long[::1] out = np.zeros(B, dtype=np.int64)
    cdef unsigned char[::1] adj = np.zeros(total, dtype=np.uint8)
    cdef int[::1] gdeg = np.zeros(n, dtype=np.int32)
    cdef const int* sp = &slots[0] if slots.shape[0] else NULL
    cdef long rowlen = total // n
    cdef int fact = 1, i
    for i in range(2, r):
        fact *= i
    with nogil:
        for b in range(B):
            for i in range(n):
                gdeg[i] = 0
            for t in range(total):
                if ranks[t] >= 0:
                    adj[t] = graphs[b, ranks[t]]
                else:
                    adj[t] = 0
                gdeg[t // rowlen] += adj[t]
            for i in range(n):
                gdeg[i] = gdeg[i] // fact
            out[b] = _count(&hdeg[0], &ptr[0], sp, k, &adj[0], &gdeg[0], n, r)
    return np.asarray(out)


def injective_weighted_sum(const int[::1] ptr, const int[::1] slots, int k, const double[::1] weights, int n, int r):
    cdef int* x = <int*> malloc(k * sizeof(int))
    cdef char* used = <char*> malloc(n * sizeof(char))
    cdef double* acc = <double*> malloc((k + 1) * sizeof(double))
    cdef const int* sp = &slots[0] if slots.shape[0] else NULL
    cdef double s = 0.0, c = 0.0, val, tmp
    cdef int d = 0, v, e, i
    with nogil:
        for i in range(n):
            used[i] = 0
        acc[0] = 1.0
        x[0] = -1
        while d >= 0:
            if x[d] >= 0:
                used[x[d]] = 0
            v = x[d] + 1
            val = 0.0
            while v < n:
                if not used[v]:
                    x[d] = v
                    val = acc[d]
                    for e in range(ptr[d], ptr[d + 1]):
                        val = val * weights[_tuple_index(x, sp, e, r, n)]
                        if val == 0.0:
                            break
                    if val != 0.0:
                        break
                v += 1
            if v >= n:
                x[d] = -1
                d -= 1
                continue
            x[d] = v
            if d + 1 == k:
                # Neumaier compensated summation
                tmp = s + val
                if fabs(s) >= fabs(val):
                    c += (s - tmp) + val
                else:
                    c += (val - tmp) + s
                s = tmp
            else:
                used[v] = 1
                acc[d + 1] = val
                d += 1
                x[d] = -1
    free(x)
    free(used)
    free(acc)
    return s + c


def cutnorm_pair_exact(const double[:, ::1] f):
    """Gray-code walk over row selectors, tracking column sums."""
    cdef int n = f.shape[0], i, j, bit
    cdef double[::1] col = np.zeros(n)
    cdef double pos, neg, best = 0.0
    cdef unsigned long long g, prev = 0, step, total = 1ULL << n
    with nogil:
        for step in range(1, total):
            g = step ^ (step >> 1)
            bit = 0
            while not ((g ^ prev) >> bit) & 1:
                bit += 1
            if (g >> bit) & 1:
                for j in range(n):
                    col[j] += f[bit, j]
            else:
                for j in range(n):
                    col[j] -= f[bit, j]
            prev = g
            pos = 0.0
            neg = 0.0
            for j in range(n):
                if col[j] > 0:
                    pos += col[j]
                else:
                    neg -= col[j]
            if pos > best:
                best = pos
            if neg > best:
                best = neg
    return best
