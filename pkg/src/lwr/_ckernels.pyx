# cython: language_level=3
"""Compiled versions of the kernels in ``_pykernels``.

Same signatures and codes as the NumPy backend. Dense products go through
SciPy's BLAS bindings; activations, losses and optimizer updates are fused
single-pass loops.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

cdef enum:
    LINEAR = 0
    TANH = 1
    RELU = 2
    HINGE = 0
    SQUARED = 1


cdef inline void gemm_rm(bint trans_a, bint trans_b, int m, int n, int k,
                         double* A, int lda, double* B, int ldb,
                         double* C, int ldc) noexcept nogil:
    # row-major C(m x n) = op(A) op(B); BLAS sees the transposed problem
    cdef char ta = b'T' if trans_b else b'N'
    cdef char tb = b'T' if trans_a else b'N'
    cdef double one = 1.0, zero = 0.0
    dgemm(&ta, &tb, &n, &m, &k, &one, B, &ldb, A, &lda, &zero, C, &ldc)


def mlp_forward(list weights, list biases, acts, X):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] a = np.ascontiguousarray(X, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] W, z, post
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] b
    cdef int n = a.shape[0]
    cdef int n_in, n_out, i, j, act
    cdef double* zp
    cdef double* pp
    cdef double v
    pres = []
    posts = [a]
    for layer in range(len(weights)):
        W = weights[layer]
        b = biases[layer]
        act = acts[layer]
        n_out = W.shape[0]
        n_in = W.shape[1]
        z = np.empty((n, n_out), dtype=np.float64)
        zp = &z[0, 0] if n > 0 else NULL
        if n > 0:
            gemm_rm(False, True, n, n_out, n_in, &a[0, 0], n_in, &W[0, 0], n_in, zp, n_out)
            for i in range(n):
                for j in range(n_out):
                    zp[i * n_out + j] += b[j]
        if act == LINEAR:
            post = z
        elif act == TANH:
            # NumPy's vectorised tanh beats a scalar libm loop several times over
            post = np.tanh(z)
        else:
            post = np.empty((n, n_out), dtype=np.float64)
            if n > 0:
                pp = &post[0, 0]
                for i in range(n * n_out):
                    v = zp[i]
                    pp[i] = v if v > 0.0 else 0.0
        pres.append(z)
        posts.append(post)
        a = post
    return a[:, 0].copy(), pres, posts


def mlp_backward(list weights, acts, list pres, list posts, upstream):
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] up = np.ascontiguousarray(upstream, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] delta, nxt, W, prev, pre, post, dW
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] db
    cdef int n = up.shape[0]
    cdef int n_layers = len(weights)
    cdef int k, i, j, n_in, n_out, act
    cdef double p
    d_weights = [None] * n_layers
    d_biases = [None] * n_layers
    delta = up.reshape(n, 1).copy()
    for k in range(n_layers - 1, -1, -1):
        W = weights[k]
        n_out = W.shape[0]
        n_in = W.shape[1]
        act = acts[k]
        if act == TANH:
            post = posts[k + 1]
            for i in range(n):
                for j in range(n_out):
                    p = post[i, j]
                    delta[i, j] *= 1.0 - p * p
        elif act == RELU:
            pre = pres[k]
            for i in range(n):
                for j in range(n_out):
                    if not pre[i, j] > 0.0:
                        delta[i, j] = 0.0
        prev = posts[k]
        dW = np.zeros((n_out, n_in), dtype=np.float64)
        db = np.zeros(n_out, dtype=np.float64)
        if n > 0:
            gemm_rm(True, False, n_out, n_in, n, &delta[0, 0], n_out, &prev[0, 0], n_in, &dW[0, 0], n_in)
            for i in range(n):
                for j in range(n_out):
                    db[j] += delta[i, j]
        d_weights[k] = dW
        d_biases[k] = db
        if k > 0:
            nxt = np.empty((n, n_in), dtype=np.float64)
            if n > 0:
                gemm_rm(False, False, n, n_in, n_out, &delta[0, 0], n_out, &W[0, 0], n_in, &nxt[0, 0], n_in)
            delta = nxt
    return d_weights, d_biases


def prediction_loss(int kind, h, y, double eps):
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] hv = np.ascontiguousarray(np.atleast_1d(h), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] yv = np.ascontiguousarray(np.atleast_1d(y), dtype=np.float64)
    cdef Py_ssize_t n = hv.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] l = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] dl = np.empty(n)
    cdef double d, e
    for i in range(n):
        if kind == HINGE:
            e = 1.0 - yv[i] * hv[i]
            if e > 0.0:
                l[i] = e
                dl[i] = -yv[i]
            else:
                l[i] = 0.0
                dl[i] = 0.0
        elif kind == SQUARED:
            d = hv[i] - yv[i]
            l[i] = d * d
            dl[i] = 2.0 * d
        else:
            d = hv[i] - yv[i]
            e = fabs(d) - eps
            if e > 0.0:
                l[i] = e
                dl[i] = 1.0 if d > 0.0 else -1.0
            else:
                l[i] = 0.0
                dl[i] = 0.0
    return l, dl


def meta_loss(l, r, double c):
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] lv = np.ascontiguousarray(np.atleast_1d(l), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] rv = np.ascontiguousarray(np.atleast_1d(r), dtype=np.float64)
    cdef Py_ssize_t n = lv.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] value = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] d_l = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] d_r = np.empty(n)
    cdef cnp.ndarray[cnp.int8_t, ndim=1, mode="c"] branch = np.empty(n, dtype=np.int8)
    cdef double acc, rej, best
    for i in range(n):
        acc = rv[i] + lv[i]
        rej = c * (1.0 - rv[i])
        best = acc if acc > rej else rej
        if best < 0.0:
            best = 0.0
        value[i] = best
        if acc == best:
            branch[i] = 1
            d_l[i] = 1.0
            d_r[i] = 1.0
        elif rej == best:
            branch[i] = 2
            d_l[i] = 0.0
            d_r[i] = -c
        else:
            branch[i] = 0
            d_l[i] = 0.0
            d_r[i] = 0.0
    return value, d_l, d_r, branch


def adam_step(param, grad, m, v, double lr, double beta1, double beta2, double eps, long t):
    cdef double[::1] p = param.reshape(-1)
    cdef const double[::1] g = np.ascontiguousarray(grad, dtype=np.float64).reshape(-1)
    cdef double[::1] mv = m.reshape(-1)
    cdef double[::1] vv = v.reshape(-1)
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double c1 = 1.0 - pow(beta1, <double>t)
    cdef double c2 = 1.0 - pow(beta2, <double>t)
    cdef double gi
    for i in range(n):
        gi = g[i]
        mv[i] = beta1 * mv[i] + (1.0 - beta1) * gi
        vv[i] = beta2 * vv[i] + (1.0 - beta2) * gi * gi
        p[i] -= lr * (mv[i] / c1) / (sqrt(vv[i] / c2) + eps)


def sgd_step(param, grad, buf, double lr, double momentum):
    cdef double[::1] p = param.reshape(-1)
    cdef const double[::1] g = np.ascontiguousarray(grad, dtype=np.float64).reshape(-1)
    cdef double[::1] b = buf.reshape(-1)
    cdef Py_ssize_t i, n = p.shape[0]
    for i in range(n):
        if momentum != 0.0:
            b[i] = momentum * b[i] + g[i]
            p[i] -= lr * b[i]
        else:
            p[i] -= lr * g[i]


def auc_midrank(scores, positive):
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, mode="c", cast=True] pos = np.ascontiguousarray(positive, dtype=bool)
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] order = np.argsort(s, kind="mergesort")
    cdef Py_ssize_t n = s.shape[0], i = 0, j, k
    cdef double rank_sum = 0.0, mid
    cdef long n_pos = 0, run_pos
    while i < n:
        j = i
        run_pos = 0
        while j < n and s[order[j]] == s[order[i]]:
            run_pos += pos[order[j]]
            j += 1
        # ranks i+1..j share the midrank
        mid = (i + 1 + j) / 2.0
        rank_sum += mid * run_pos
        n_pos += run_pos
        i = j
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * (n - n_pos))
