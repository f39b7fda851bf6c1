"""Primal-dual interior-point solver for small convex quadratic programs.

Solves ``minimize c^T x  subject to  g_i(x) <= 0`` where every ``g_i`` is a
convex quadratic given in coordinate form:

* quadratic terms ``coef * x[p] * x[q]`` listed as ``(row, p, q, coef)``,
* linear terms ``coef * x[p]`` listed as ``(row, p, coef)``,
* a constant per row.

The iteration is the standard primal-dual method with a surrogate duality
gap, a fraction-to-boundary rule on the multipliers and a backtracking
line search on the residual norm that keeps the primal iterate strictly
feasible.  It is meant for a few hundred variables at most; the Newton
system is assembled densely from the known sparsity pattern of each row.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _evaluate(x, n_rows, q_row, q_p, q_q, q_coef, l_row, l_p, l_coef, const, g, jac):
    n = x.shape[0]
    for i in range(n_rows):
        g[i] = const[i]
        for j in range(n):
            jac[i, j] = 0.0
    for e in range(l_row.shape[0]):
        g[l_row[e]] += l_coef[e] * x[l_p[e]]
        jac[l_row[e], l_p[e]] += l_coef[e]
    for e in range(q_row.shape[0]):
        i = q_row[e]
        p = q_p[e]
        q = q_q[e]
        c = q_coef[e]
        g[i] += c * x[p] * x[q]
        if p == q:
            jac[i, p] += 2.0 * c * x[p]
        else:
            jac[i, p] += c * x[q]
            jac[i, q] += c * x[p]


@njit(cache=True, nogil=True)
def _residual_norm(cost, jac, lam, g, barrier):
    n = cost.shape[0]
    total = 0.0
    for j in range(n):
        r = cost[j]
        for i in range(lam.shape[0]):
            r += jac[i, j] * lam[i]
        total += r * r
    for i in range(lam.shape[0]):
        r = -lam[i] * g[i] - 1.0 / barrier
        total += r * r
    return np.sqrt(total)


@njit(cache=True, nogil=True)
def solve_qcqp(x0, cost, n_rows, q_row, q_p, q_q, q_coef, l_row, l_p, l_coef, const,
               row_ptr, row_cols, tol, max_iter):
    """Run the interior-point iteration from the strictly feasible point ``x0``.

    Returns
    -------
    x : ndarray
        Final (strictly feasible) iterate.
    gap : float
        Surrogate duality gap at ``x``.
    dual_residual : float
        Norm of the Lagrangian gradient at ``x``.
    iterations : int
    """
    n = x0.shape[0]
    m = n_rows
    x = x0.copy()
    g = np.empty(m)
    jac = np.empty((m, n))
    g_new = np.empty(m)
    jac_new = np.empty((m, n))
    hess = np.empty((n, n))
    dlam = np.empty(m)
    _evaluate(x, m, q_row, q_p, q_q, q_coef, l_row, l_p, l_coef, const, g, jac)
    lam = np.empty(m)
    for i in range(m):
        lam[i] = 1.0 / (-g[i]) / m
    mu = 10.0
    gap = 0.0
    dual_res = 0.0
    it = 0
    while it < max_iter:
        gap = 0.0
        for i in range(m):
            gap -= g[i] * lam[i]
        dual_res = 0.0
        for j in range(n):
            r = cost[j]
            for i in range(m):
                r += jac[i, j] * lam[i]
            dual_res += r * r
        dual_res = np.sqrt(dual_res)
        if gap < tol and dual_res < tol:
            break
        barrier = mu * m / gap

        # Newton matrix: sum lam_i Hess(g_i) + sum lam_i/(-g_i) grad_i grad_i^T
        for a in range(n):
            for b in range(n):
                hess[a, b] = 0.0
        for e in range(q_row.shape[0]):
            c = q_coef[e] * lam[q_row[e]]
            p = q_p[e]
            q = q_q[e]
            if p == q:
                hess[p, p] += 2.0 * c
            else:
                hess[p, q] += c
                hess[q, p] += c
        rhs = -cost.copy()
        for i in range(m):
            w = lam[i] / (-g[i])
            s = 1.0 / (barrier * (-g[i]))
            for a in range(row_ptr[i], row_ptr[i + 1]):
                ca = row_cols[a]
                va = jac[i, ca]
                rhs[ca] -= va * s
                for b in range(row_ptr[i], row_ptr[i + 1]):
                    cb = row_cols[b]
                    hess[ca, cb] += w * va * jac[i, cb]
        for a in range(n):
            hess[a, a] += 1e-14
        dx = np.linalg.solve(hess, rhs)

        for i in range(m):
            jd = 0.0
            for a in range(row_ptr[i], row_ptr[i + 1]):
                ca = row_cols[a]
                jd += jac[i, ca] * dx[ca]
            cent = -lam[i] * g[i] - 1.0 / barrier
            dlam[i] = (cent - lam[i] * jd) / g[i]
        step = 1.0
        for i in range(m):
            if dlam[i] < 0.0:
                step = min(step, -lam[i] / dlam[i])
        step *= 0.99

        res0 = _residual_norm(cost, jac, lam, g, barrier)
        accepted = False
        x_new = x.copy()
        lam_new = lam.copy()
        while step > 1e-16:
            x_new = x + step * dx
            _evaluate(x_new, m, q_row, q_p, q_q, q_coef, l_row, l_p, l_coef, const, g_new, jac_new)
            feasible = True
            for i in range(m):
                if g_new[i] >= 0.0:
                    feasible = False
                    break
            if feasible:
                lam_new = lam + step * dlam
                if _residual_norm(cost, jac_new, lam_new, g_new, barrier) <= (1.0 - 0.01 * step) * res0:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
        x = x_new
        lam = lam_new
        g[:] = g_new
        jac[:, :] = jac_new
        it += 1
    return x, gap, dual_res, it
