# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; same contracts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _apply_one(const double[:, :, :, ::1] src, const double[:, :, ::1] M,
                     double[:, :, :, ::1] dst) noexcept nogil:
    # complex arithmetic spelled out on (re, im) pairs: avoids the C99
    # NaN-checking multiply and lets the q loop vectorize
    cdef Py_ssize_t pre = src.shape[0], nb = src.shape[1], post = src.shape[2]
    cdef Py_ssize_t na = M.shape[0]
    cdef Py_ssize_t p, a, b, q
    cdef double mr, mi, sr, si
    for p in range(pre):
        for a in range(na):
            for q in range(post):
                dst[p, a, q, 0] = 0
                dst[p, a, q, 1] = 0
            for b in range(nb):
                mr = M[a, b, 0]
                mi = M[a, b, 1]
                if mr == 0 and mi == 0:
                    continue
                for q in range(post):
                    sr = src[p, b, q, 0]
                    si = src[p, b, q, 1]
                    dst[p, a, q, 0] += mr * sr - mi * si
                    dst[p, a, q, 1] += mr * si + mi * sr


def apply_axes(T, mats):
    out = np.array(T, dtype=np.complex128, order="C")
    cdef Py_ssize_t axis, pre, post
    for axis, M in enumerate(mats):
        if M is None:
            continue
        Mc = np.ascontiguousarray(M, dtype=np.complex128)
        Mv = Mc.view(np.float64).reshape(Mc.shape[0], Mc.shape[1], 2)
        shape = out.shape
        pre = 1
        for s in shape[:axis]:
            pre *= s
        post = 1
        for s in shape[axis + 1:]:
            post *= s
        src = np.ascontiguousarray(out).view(np.float64).reshape(pre, shape[axis], post, 2)
        dst = np.empty((pre, Mc.shape[0], post), dtype=np.complex128)
        _apply_one(src, Mv, dst.view(np.float64).reshape(pre, Mc.shape[0], post, 2))
        out = dst.reshape(shape[:axis] + (Mc.shape[0],) + shape[axis + 1:])
    return out


def count_mismatches(const cnp.int64_t[::1] a, const cnp.int64_t[::1] b,
                     const cnp.int64_t[::1] ia, const cnp.int64_t[::1] ib):
    cdef Py_ssize_t k, n = ia.shape[0]
    cdef long c = 0
    with nogil:
        for k in range(n):
            if a[ia[k]] != b[ib[k]]:
                c += 1
    return c

