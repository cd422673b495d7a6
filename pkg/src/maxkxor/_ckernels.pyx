# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Signatures mirror ``_pykernels``."""
import numpy as np

from libc.math cimport cos, sin, sqrt, fabs, pow
from libc.stdlib cimport malloc, free

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil

NAME = "cython"


def cost_table(int n_vars, masks, parities):
    masks = np.ascontiguousarray(masks, dtype=np.uint64)
    parities = np.ascontiguousarray(parities, dtype=np.int8)
    cdef Py_ssize_t m = masks.shape[0]
    cdef Py_ssize_t dim = (<Py_ssize_t>1) << n_vars
    out = np.empty(dim, dtype=np.int32)
    cdef int[::1] table = out

    # var -> clause adjacency (CSR)
    members = [[] for _ in range(n_vars)]
    for c in range(m):
        mask = int(masks[c])
        for v in range(n_vars):
            if (mask >> v) & 1:
                members[v].append(c)
    offs_np = np.zeros(n_vars + 1, dtype=np.int64)
    offs_np[1:] = np.cumsum([len(x) for x in members])
    adj_np = np.array([c for x in members for c in x], dtype=np.int32)
    if adj_np.size == 0:
        adj_np = np.zeros(1, dtype=np.int32)
    cdef long long[::1] offs = offs_np
    cdef int[::1] adj = adj_np
    sat_np = (parities < 0).astype(np.int8)
    cdef signed char[::1] sat = sat_np

    cdef int cost = int(sat_np.sum())
    cdef Py_ssize_t j, z = 0, a
    cdef int b
    with nogil:
        table[0] = cost
        for j in range(1, dim):
            b = __builtin_ctzll(<unsigned long long>j)
            z ^= (<Py_ssize_t>1) << b
            for a in range(offs[b], offs[b + 1]):
                if sat[adj[a]]:
                    cost -= 1
                    sat[adj[a]] = 0
                else:
                    cost += 1
                    sat[adj[a]] = 1
            table[z] = cost
    return out


cdef int _phase(double* d, const int* diag, Py_ssize_t dim, double gamma) noexcept nogil:
    cdef int cmax = 0
    cdef Py_ssize_t j
    for j in range(dim):
        if diag[j] > cmax:
            cmax = diag[j]
    cdef double* cs = <double*>malloc(2 * (cmax + 1) * sizeof(double))
    if cs == NULL:
        return -1
    for j in range(cmax + 1):
        cs[2 * j] = cos(gamma * j)
        cs[2 * j + 1] = -sin(gamma * j)
    cdef double re, im, pr, pi
    for j in range(dim):
        pr = cs[2 * diag[j]]
        pi = cs[2 * diag[j] + 1]
        re = d[2 * j]
        im = d[2 * j + 1]
        d[2 * j] = re * pr - im * pi
        d[2 * j + 1] = re * pi + im * pr
    free(cs)
    return 0


cdef void _mixer(double* d, int n_vars, double beta) noexcept nogil:
    cdef double c = cos(beta), s = sin(beta)
    cdef Py_ssize_t dim = (<Py_ssize_t>1) << n_vars
    cdef Py_ssize_t stride, blk, base, j, i0, i1
    cdef double ar, ai, br, bi
    cdef int q
    for q in range(n_vars):
        stride = (<Py_ssize_t>1) << q
        for blk in range(dim >> (q + 1)):
            base = 2 * stride * blk
            for j in range(base, base + stride):
                i0 = 2 * j
                i1 = 2 * (j + stride)
                ar = d[i0]
                ai = d[i0 + 1]
                br = d[i1]
                bi = d[i1 + 1]
                d[i0] = c * ar + s * bi
                d[i0 + 1] = c * ai - s * br
                d[i1] = c * br + s * ai
                d[i1 + 1] = c * bi - s * ar


cdef double _expect(const double* d, const int* diag, Py_ssize_t dim) noexcept nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t j
    for j in range(dim):
        acc += (d[2 * j] * d[2 * j] + d[2 * j + 1] * d[2 * j + 1]) * diag[j]
    return acc


def apply_phase(double complex[::1] psi, const int[::1] diag, double gamma):
    cdef int rc
    with nogil:
        rc = _phase(<double*>&psi[0], &diag[0], psi.shape[0], gamma)
    if rc:
        raise MemoryError()


def apply_mixer(double complex[::1] psi, int n_vars, double beta):
    with nogil:
        _mixer(<double*>&psi[0], n_vars, beta)


def expectation(const double complex[::1] psi, const int[::1] diag):
    cdef double out
    with nogil:
        out = _expect(<const double*>&psi[0], &diag[0], psi.shape[0])
    return out


def qaoa_state(const int[::1] diag, int n_vars, gammas, betas):
    cdef Py_ssize_t dim = (<Py_ssize_t>1) << n_vars
    psi_np = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    cdef double complex[::1] psi = psi_np
    cdef double[::1] g = np.ascontiguousarray(gammas, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(betas, dtype=np.float64)
    cdef double* d = <double*>&psi[0]
    cdef Py_ssize_t layer
    cdef int rc = 0
    with nogil:
        for layer in range(g.shape[0]):
            rc = _phase(d, &diag[0], dim, g[layer])
            if rc:
                break
            _mixer(d, n_vars, b[layer])
    if rc:
        raise MemoryError()
    return psi_np


def qaoa_expectation(const int[::1] diag, int n_vars, gammas, betas):
    psi = qaoa_state(diag, n_vars, gammas, betas)
    return expectation(psi, diag)


# ---------------------------------------------------------------------------
# mean-field dynamics

cdef void _rhs(int n, const double* y, double* dy, int m, const int* cvars,
               const int* coff, const double* cj, const double* lam, double s,
               double* mag, double* buf) noexcept nogil:
    cdef double env = s * s * (1.0 - s)
    cdef int i, c, j, start, k
    cdef double pre, suf, z
    for i in range(n):
        mag[i] = lam[i] * env
    for c in range(m):
        start = coff[c]
        k = coff[c + 1] - start
        pre = 1.0
        for j in range(k):
            buf[j] = pre
            pre *= y[3 * cvars[start + j] + 2]
        suf = 1.0
        for j in range(k - 1, -1, -1):
            mag[cvars[start + j]] += cj[c] * buf[j] * suf
            suf *= y[3 * cvars[start + j] + 2]
    for i in range(n):
        dy[3 * i] = -2.0 * s * mag[i] * y[3 * i + 1]
        dy[3 * i + 1] = 2.0 * s * mag[i] * y[3 * i] - 2.0 * (1.0 - s) * y[3 * i + 2]
        dy[3 * i + 2] = 2.0 * (1.0 - s) * y[3 * i + 1]


cdef double[7] C_ = [0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0]
cdef double[7][6] A_ = [
    [0, 0, 0, 0, 0, 0],
    [1.0 / 5, 0, 0, 0, 0, 0],
    [3.0 / 40, 9.0 / 40, 0, 0, 0, 0],
    [44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0],
    [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0],
    [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0],
    [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84],
]
cdef double[7] B_ = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0]
cdef double[7] E_ = [71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                     -17253.0 / 339200, 22.0 / 525, -1.0 / 40]


def mf_integrate(double[::1] y, int n_vars, const int[::1] cvars, const int[::1] coff,
                 const double[::1] cj, const double[::1] lam, double t0, double t1,
                 double t_final, double h, double rtol, double atol, double h_max,
                 long max_steps):
    cdef int n3 = 3 * n_vars
    cdef int m = coff.shape[0] - 1
    cdef int kmax = 1
    cdef int c
    for c in range(m):
        if coff[c + 1] - coff[c] > kmax:
            kmax = coff[c + 1] - coff[c]
    ks_np = np.zeros((7, max(n3, 1)))
    tmp_np = np.zeros(max(n3, 1))
    ynew_np = np.zeros(max(n3, 1))
    mag_np = np.zeros(max(n_vars, 1))
    buf_np = np.zeros(kmax)
    cv_np = np.zeros(1, dtype=np.int32) if cvars.shape[0] == 0 else np.asarray(cvars)
    cj_np = np.zeros(1) if cj.shape[0] == 0 else np.asarray(cj)
    cdef double[:, ::1] ks = ks_np
    cdef double[::1] tmp = tmp_np
    cdef double[::1] ynew = ynew_np
    cdef double[::1] mag = mag_np
    cdef double[::1] buf = buf_np
    cdef const int[::1] cv = cv_np
    cdef const double[::1] cjv = cj_np

    cdef double t = t0, err_norm, acc, e, sc, fac, max_res = 0.0, nrm, ts
    cdef long n_acc = 0, n_rej = 0
    cdef int status = 0, st, i, j, sp
    with nogil:
        while t < t1:
            if n_acc >= max_steps:
                status = 2
                break
            if h > h_max:
                h = h_max
            if h > t1 - t:
                h = t1 - t
            if h < 1e-12 * (fabs(t) if fabs(t) > 1.0 else 1.0):
                status = 1
                break
            _rhs(n_vars, &y[0], &ks[0, 0], m, &cv[0], &coff[0], &cjv[0], &lam[0],
                 t / t_final, &mag[0], &buf[0])
            for st in range(1, 7):
                for i in range(n3):
                    acc = 0.0
                    for j in range(st):
                        acc += A_[st][j] * ks[j, i]
                    tmp[i] = y[i] + h * acc
                _rhs(n_vars, &tmp[0], &ks[st, 0], m, &cv[0], &coff[0], &cjv[0], &lam[0],
                     (t + C_[st] * h) / t_final, &mag[0], &buf[0])
            err_norm = 0.0
            for i in range(n3):
                acc = 0.0
                e = 0.0
                for j in range(7):
                    acc += B_[j] * ks[j, i]
                    e += E_[j] * ks[j, i]
                ynew[i] = y[i] + h * acc
                sc = atol + rtol * (fabs(y[i]) if fabs(y[i]) > fabs(ynew[i]) else fabs(ynew[i]))
                e = h * e / sc
                err_norm += e * e
            err_norm = sqrt(err_norm / n3) if n3 > 0 else 0.0
            if err_norm <= 1.0:
                if t1 - t - h <= 0.0:
                    t = t1
                else:
                    t = t + h
                for sp in range(n_vars):
                    nrm = sqrt(ynew[3 * sp] * ynew[3 * sp] + ynew[3 * sp + 1] * ynew[3 * sp + 1]
                               + ynew[3 * sp + 2] * ynew[3 * sp + 2])
                    if fabs(nrm - 1.0) > max_res:
                        max_res = fabs(nrm - 1.0)
                    y[3 * sp] = ynew[3 * sp] / nrm
                    y[3 * sp + 1] = ynew[3 * sp + 1] / nrm
                    y[3 * sp + 2] = ynew[3 * sp + 2] / nrm
                n_acc += 1
                if err_norm == 0.0:
                    fac = 10.0
                else:
                    fac = 0.9 * pow(err_norm, -0.2)
                    if fac > 10.0:
                        fac = 10.0
                    if fac < 0.2:
                        fac = 0.2
            else:
                n_rej += 1
                fac = 0.9 * pow(err_norm, -0.2)
                if fac < 0.2:
                    fac = 0.2
            h *= fac
    return t, h, n_acc, n_rej, max_res, status
