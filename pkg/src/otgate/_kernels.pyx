# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: transportation simplex, Hungarian matching, linkage.

Semantics match ``_fallback`` exactly (same traversal order, same pivot and
tie-breaking rules), so the two backends return identical results.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs

cnp.import_array()


cdef void _potentials(double[:, ::1] c, unsigned char[:, ::1] basic,
                      double[::1] u, double[::1] v, Py_ssize_t m, Py_ssize_t n,
                      unsigned char[::1] seen, Py_ssize_t[::1] stack) noexcept nogil:
    cdef Py_ssize_t top = 0, node, r, s
    for r in range(m + n):
        seen[r] = 0
    u[0] = 0.0
    seen[0] = 1
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if node < m:
            for s in range(n):
                if basic[node, s] and not seen[m + s]:
                    v[s] = c[node, s] - u[node]
                    seen[m + s] = 1
                    stack[top] = m + s
                    top += 1
        else:
            s = node - m
            for r in range(m):
                if basic[r, s] and not seen[r]:
                    u[r] = c[r, s] - v[s]
                    seen[r] = 1
                    stack[top] = r
                    top += 1


cdef Py_ssize_t _cycle(unsigned char[:, ::1] basic, Py_ssize_t ei, Py_ssize_t ej,
                       Py_ssize_t m, Py_ssize_t n, Py_ssize_t[::1] parent,
                       Py_ssize_t[::1] queue, Py_ssize_t[::1] cell_r,
                       Py_ssize_t[::1] cell_s) noexcept nogil:
    cdef Py_ssize_t head = 0, tail = 0, node, prev, r, s, k = 0
    cdef Py_ssize_t target = m + ej
    for r in range(m + n):
        parent[r] = -1
    parent[ei] = ei
    queue[tail] = ei
    tail += 1
    while head < tail:
        node = queue[head]
        head += 1
        if node == target:
            break
        if node < m:
            for s in range(n):
                if basic[node, s] and parent[m + s] < 0:
                    parent[m + s] = node
                    queue[tail] = m + s
                    tail += 1
        else:
            s = node - m
            for r in range(m):
                if basic[r, s] and parent[r] < 0:
                    parent[r] = node
                    queue[tail] = r
                    tail += 1
    node = target
    while node != ei:
        prev = parent[node]
        if node >= m:
            cell_r[k] = prev
            cell_s[k] = node - m
        else:
            cell_r[k] = node
            cell_s[k] = prev - m
        k += 1
        node = prev
    return k


def transport_simplex(a, b, cost, Py_ssize_t max_iter=0):
    """Exact transportation simplex; returns ``(plan, iterations)``."""
    cdef double[::1] ra = np.array(a, dtype=np.float64)
    cdef double[::1] rb = np.array(b, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t m = ra.shape[0], n = rb.shape[0]
    plan_arr = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] plan = plan_arr
    cdef unsigned char[:, ::1] basic = np.zeros((m, n), dtype=np.uint8)
    cdef double[::1] u = np.zeros(m), v = np.zeros(n)
    cdef unsigned char[::1] seen = np.zeros(m + n, dtype=np.uint8)
    cdef Py_ssize_t[::1] stack = np.zeros(m + n, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = np.zeros(m + n, dtype=np.intp)
    cdef Py_ssize_t[::1] queue = np.zeros(m + n, dtype=np.intp)
    cdef Py_ssize_t[::1] cell_r = np.zeros(m + n, dtype=np.intp)
    cdef Py_ssize_t[::1] cell_s = np.zeros(m + n, dtype=np.intp)
    cdef Py_ssize_t i = 0, j = 0, r, s, k, ncell, leave, ei, ej, it, streak = 0
    cdef double x, scale = 1.0, eps, best, red, theta
    cdef bint bland

    with nogil:
        while True:
            x = ra[i] if ra[i] < rb[j] else rb[j]
            plan[i, j] = x
            basic[i, j] = 1
            ra[i] -= x
            rb[j] -= x
            if i == m - 1 and j == n - 1:
                break
            if i == m - 1:
                j += 1
            elif j == n - 1:
                i += 1
            elif ra[i] < rb[j]:
                i += 1
            else:
                j += 1
        for r in range(m):
            for s in range(n):
                if fabs(c[r, s]) > scale:
                    scale = fabs(c[r, s])
        eps = 1e-11 * scale
        if max_iter <= 0:
            max_iter = 50 * (m + n) * (m + n) + 1000

        it = 0
        while it < max_iter:
            _potentials(c, basic, u, v, m, n, seen, stack)
            bland = streak > m + n
            best = -eps
            ei = -1
            ej = -1
            for r in range(m):
                for s in range(n):
                    if not basic[r, s]:
                        red = c[r, s] - u[r] - v[s]
                        if red < best:
                            best = red
                            ei = r
                            ej = s
                            if bland:
                                break
                if bland and ei >= 0:
                    break
            if ei < 0:
                break
            ncell = _cycle(basic, ei, ej, m, n, parent, queue, cell_r, cell_s)
            theta = INFINITY
            leave = -1
            k = 0
            while k < ncell:
                if plan[cell_r[k], cell_s[k]] < theta:
                    theta = plan[cell_r[k], cell_s[k]]
                    leave = k
                k += 2
            for k in range(ncell):
                if k % 2 == 0:
                    plan[cell_r[k], cell_s[k]] -= theta
                else:
                    plan[cell_r[k], cell_s[k]] += theta
            plan[cell_r[leave], cell_s[leave]] = 0.0
            basic[cell_r[leave], cell_s[leave]] = 0
            plan[ei, ej] = theta
            basic[ei, ej] = 1
            if theta == 0.0:
                streak += 1
            else:
                streak = 0
            it += 1

    if it >= max_iter:
        raise RuntimeError(f"transportation simplex did not terminate in {max_iter} pivots")
    return plan_arr, it


def hungarian(cost):
    """Minimum-cost perfect matching on a square matrix; returns row -> column."""
    cdef double[:, ::1] c = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    cdef double[::1] u = np.zeros(n + 1), v = np.zeros(n + 1), minv = np.zeros(n + 1)
    cdef Py_ssize_t[::1] p = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] way = np.zeros(n + 1, dtype=np.intp)
    cdef unsigned char[::1] used = np.zeros(n + 1, dtype=np.uint8)
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur
    out = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t[::1] assignment = out

    with nogil:
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = c[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[p[j]] += delta
                        v[j] -= delta
                    else:
                        minv[j] -= delta
                j0 = j1
                if p[j0] == 0:
                    break
            while j0:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1
        for j in range(1, n + 1):
            assignment[p[j] - 1] = j - 1
    return out


def linkage(dist, int method):
    """Lance-Williams agglomeration; see ``_fallback.linkage``."""
    cdef double[:, ::1] d = np.array(dist, dtype=np.float64, order="C")
    cdef Py_ssize_t n = d.shape[0]
    cdef unsigned char[::1] active = np.ones(n, dtype=np.uint8)
    cdef Py_ssize_t[::1] node = np.arange(n, dtype=np.intp)
    cdef Py_ssize_t[::1] size = np.ones(n, dtype=np.intp)
    out = np.zeros((max(n - 1, 0), 4), dtype=np.float64)
    cdef double[:, ::1] merges = out
    cdef Py_ssize_t step, i, j, k, bi, bj, si, sj
    cdef double best, new

    with nogil:
        for step in range(n - 1):
            best = INFINITY
            bi = -1
            bj = -1
            for i in range(n):
                if not active[i]:
                    continue
                for j in range(i + 1, n):
                    if active[j] and (d[i, j] < best or bi < 0):
                        best = d[i, j]
                        bi = i
                        bj = j
            si = size[bi]
            sj = size[bj]
            merges[step, 0] = node[bi]
            merges[step, 1] = node[bj]
            merges[step, 2] = best
            merges[step, 3] = si + sj
            for k in range(n):
                if not active[k] or k == bi or k == bj:
                    continue
                if method == 0:
                    new = d[bi, k] if d[bi, k] < d[bj, k] else d[bj, k]
                elif method == 1:
                    new = d[bi, k] if d[bi, k] > d[bj, k] else d[bj, k]
                else:
                    new = (si * d[bi, k] + sj * d[bj, k]) / (si + sj)
                d[bi, k] = new
                d[k, bi] = new
            active[bj] = 0
            size[bi] = si + sj
            node[bi] = n + step
    return out
