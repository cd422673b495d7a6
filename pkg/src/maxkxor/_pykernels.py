"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is missing or when ``MAXKXOR_BACKEND=python``.
Every function here has the same signature and semantics as its counterpart in
``_ckernels.pyx``; the test-suite cross-checks the two.
"""
from __future__ import annotations

import numpy as np

NAME = "python"


def cost_table(n_vars, masks, parities):
    dim = 1 << n_vars
    z = np.arange(dim, dtype=np.uint64)
    table = np.zeros(dim, dtype=np.int32)
    for mask, parity in zip(masks, parities):
        odd = (np.bitwise_count(z & np.uint64(mask)) & 1).astype(np.int32)
        table += odd if parity > 0 else 1 - odd
    return table


def _phase_factors(diag, gamma):
    levels = np.arange(int(diag.max()) + 1 if diag.size else 1)
    return np.exp(-1j * gamma * levels)[diag]


def apply_phase(psi, diag, gamma):
    psi *= _phase_factors(diag, gamma)


def apply_mixer(psi, n_vars, beta):
    c, s = np.cos(beta), np.sin(beta)
    for q in range(n_vars):
        v = psi.reshape(-1, 2, 1 << q)
        a0 = v[:, 0, :].copy()
        a1 = v[:, 1, :]
        v[:, 0, :] = c * a0 - 1j * s * a1
        v[:, 1, :] = c * a1 - 1j * s * a0


def expectation(psi, diag):
    return float(np.dot(psi.real**2 + psi.imag**2, diag))


def qaoa_state(diag, n_vars, gammas, betas):
    dim = 1 << n_vars
    psi = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    for g, b in zip(gammas, betas):
        apply_phase(psi, diag, g)
        apply_mixer(psi, n_vars, b)
    return psi


def qaoa_expectation(diag, n_vars, gammas, betas):
    return expectation(qaoa_state(diag, n_vars, gammas, betas), diag)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


class _Rhs:
    """Mean-field spin equations of motion on a flat (3N,) state."""

    def __init__(self, n_vars, cvars, coff, cj, lam, t_final):
        self.n = n_vars
        self.t_final = t_final
        self.lam = np.asarray(lam, dtype=np.float64)
        self.groups = []
        # clauses of equal arity are evaluated together
        sizes = np.diff(coff)
        for k in np.unique(sizes):
            idx = np.flatnonzero(sizes == k)
            rows = np.stack([cvars[coff[i] : coff[i] + k] for i in idx])
            self.groups.append((rows, np.asarray(cj)[idx]))

    def magnetization(self, y, s):
        nz = y[2::3]
        mag = self.lam * (s * s * (1.0 - s))
        for rows, jc in self.groups:
            z = nz[rows]
            k = z.shape[1]
            pre = np.ones_like(z)
            suf = np.ones_like(z)
            for j in range(1, k):
                pre[:, j] = pre[:, j - 1] * z[:, j - 1]
                suf[:, k - 1 - j] = suf[:, k - j] * z[:, k - j]
            contrib = jc[:, None] * pre * suf
            mag = mag + np.bincount(rows.ravel(), contrib.ravel(), minlength=self.n)
        return mag

    def __call__(self, t, y):
        s = t / self.t_final
        mag = self.magnetization(y, s)
        nx, ny, nz = y[0::3], y[1::3], y[2::3]
        dy = np.empty_like(y)
        dy[0::3] = -2.0 * s * mag * ny
        dy[1::3] = 2.0 * s * mag * nx - 2.0 * (1.0 - s) * nz
        dy[2::3] = 2.0 * (1.0 - s) * ny
        return dy


def mf_integrate(y, n_vars, cvars, coff, cj, lam, t0, t1, t_final, h, rtol, atol, h_max, max_steps):
    """Advance ``y`` in place from ``t0`` to ``t1``.

    Returns ``(t, h, n_accepted, n_rejected, max_norm_residual, status)`` where
    status is 0 on success, 1 on step-size underflow and 2 when ``max_steps``
    accepted steps were taken before reaching ``t1``.
    """
    f = _Rhs(n_vars, np.asarray(cvars), np.asarray(coff), cj, lam, t_final)
    t = t0
    n_acc = n_rej = 0
    max_res = 0.0
    k = np.empty((7, y.size))
    while t < t1:
        if n_acc >= max_steps:
            return t, h, n_acc, n_rej, max_res, 2
        h = min(h, h_max, t1 - t)
        if h < 1e-12 * max(1.0, abs(t)):
            return t, h, n_acc, n_rej, max_res, 1
        k[0] = f(t, y)
        for i in range(1, 7):
            k[i] = f(t + _C[i] * h, y + h * np.dot(_A[i], k[:i]))
        y_new = y + h * np.dot(_B, k)
        err = h * np.dot(_E, k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if err_norm <= 1.0:
            t = t1 if t1 - t - h <= 0.0 else t + h
            spins = y_new.reshape(-1, 3)
            norms = np.sqrt(np.sum(spins * spins, axis=1))
            max_res = max(max_res, float(np.max(np.abs(norms - 1.0))) if norms.size else 0.0)
            y[:] = (spins / norms[:, None]).ravel()
            n_acc += 1
            fac = 10.0 if err_norm == 0.0 else min(10.0, max(0.2, 0.9 * err_norm**-0.2))
        else:
            n_rej += 1
            fac = max(0.2, 0.9 * err_norm**-0.2)
        h *= fac
    return t, h, n_acc, n_rej, max_res, 0
