"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Both modules implement identical pivot and tie-breaking rules, so the
selected backend never changes a result, only the runtime.
"""

import math

import numpy as np

SINGLE, COMPLETE, AVERAGE = 0, 1, 2


def _potentials(c, basic, u, v, m, n):
    # Walk the basis tree from row 0 fixing u_i + v_j = c_ij on basic cells.
    seen_row = [False] * m
    seen_col = [False] * n
    u[0] = 0.0
    seen_row[0] = True
    stack = [0]
    while stack:
        node = stack.pop()
        if node < m:
            row = basic[node]
            for s in range(n):
                if row[s] and not seen_col[s]:
                    v[s] = c[node][s] - u[node]
                    seen_col[s] = True
                    stack.append(m + s)
        else:
            s = node - m
            for r in range(m):
                if basic[r][s] and not seen_row[r]:
                    u[r] = c[r][s] - v[s]
                    seen_row[r] = True
                    stack.append(r)


def _cycle(basic, ei, ej, m, n):
    # Tree path from row ei to column ej, returned as cells starting at ej.
    parent = [-1] * (m + n)
    parent[ei] = ei
    queue = [ei]
    head = 0
    target = m + ej
    while head < len(queue):
        node = queue[head]
        head += 1
        if node == target:
            break
        if node < m:
            for s in range(n):
                if basic[node][s] and parent[m + s] < 0:
                    parent[m + s] = node
                    queue.append(m + s)
        else:
            s = node - m
            for r in range(m):
                if basic[r][s] and parent[r] < 0:
                    parent[r] = node
                    queue.append(r)
    cells = []
    node = target
    while node != ei:
        prev = parent[node]
        if node >= m:
            cells.append((prev, node - m))
        else:
            cells.append((node, prev - m))
        node = prev
    return cells


def transport_simplex(a, b, cost, max_iter=0):
    """Exact transportation simplex on strictly positive marginals.

    Returns ``(plan, iterations)``. Northwest-corner start, Dantzig pricing,
    and Bland pricing after a streak of degenerate pivots.
    """
    m, n = len(a), len(b)
    c = [[float(x) for x in row] for row in np.asarray(cost)]
    ra = [float(x) for x in a]
    rb = [float(x) for x in b]
    plan = [[0.0] * n for _ in range(m)]
    basic = [[False] * n for _ in range(m)]

    i = j = 0
    while True:
        x = ra[i] if ra[i] < rb[j] else rb[j]
        plan[i][j] = x
        basic[i][j] = True
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

    scale = max(1.0, max(abs(x) for row in c for x in row))
    eps = 1e-11 * scale
    if max_iter <= 0:
        max_iter = 50 * (m + n) * (m + n) + 1000
    u = [0.0] * m
    v = [0.0] * n
    streak = 0
    for it in range(max_iter):
        _potentials(c, basic, u, v, m, n)
        bland = streak > m + n
        best = -eps
        ei = ej = -1
        for r in range(m):
            for s in range(n):
                if not basic[r][s]:
                    red = c[r][s] - u[r] - v[s]
                    if red < best:
                        best = red
                        ei, ej = r, s
                        if bland:
                            break
            if bland and ei >= 0:
                break
        if ei < 0:
            return np.array(plan, dtype=float), it

        cells = _cycle(basic, ei, ej, m, n)
        theta = math.inf
        leave = -1
        for k in range(0, len(cells), 2):
            r, s = cells[k]
            if plan[r][s] < theta:
                theta = plan[r][s]
                leave = k
        for k, (r, s) in enumerate(cells):
            if k % 2 == 0:
                plan[r][s] -= theta
            else:
                plan[r][s] += theta
        lr, ls = cells[leave]
        plan[lr][ls] = 0.0
        basic[lr][ls] = False
        plan[ei][ej] = theta
        basic[ei][ej] = True
        streak = streak + 1 if theta == 0.0 else 0
    raise RuntimeError(f"transportation simplex did not terminate in {max_iter} pivots")


def hungarian(cost):
    """Minimum-cost perfect matching on a square matrix; returns row -> column."""
    c = [[float(x) for x in row] for row in np.asarray(cost)]
    n = len(c)
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = c[i0 - 1][j - 1] - u[i0] - v[j]
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
    assignment = [0] * n
    for j in range(1, n + 1):
        assignment[p[j] - 1] = j - 1
    return np.array(assignment, dtype=np.intp)


def linkage(dist, method):
    """Agglomerative clustering by Lance-Williams updates.

    Returns an ``(N-1, 4)`` array of ``(node_a, node_b, height, size)`` with
    scipy-style node numbering. Active slot ``i`` always holds the cluster
    whose smallest leaf is ``i``; ties go to the lexicographically first pair.
    """
    d = [[float(x) for x in row] for row in np.asarray(dist)]
    n = len(d)
    active = [True] * n
    node = list(range(n))
    size = [1] * n
    merges = []
    for step in range(n - 1):
        best = math.inf
        bi = bj = -1
        for i in range(n):
            if not active[i]:
                continue
            row = d[i]
            for j in range(i + 1, n):
                if active[j] and (row[j] < best or bi < 0):
                    best = row[j]
                    bi, bj = i, j
        merges.append((node[bi], node[bj], best, size[bi] + size[bj]))
        si, sj = size[bi], size[bj]
        for k in range(n):
            if not active[k] or k == bi or k == bj:
                continue
            if method == SINGLE:
                new = min(d[bi][k], d[bj][k])
            elif method == COMPLETE:
                new = max(d[bi][k], d[bj][k])
            else:
                new = (si * d[bi][k] + sj * d[bj][k]) / (si + sj)
            d[bi][k] = d[k][bi] = new
        active[bj] = False
        size[bi] = si + sj
        node[bi] = n + step
    return np.array(merges, dtype=float).reshape(-1, 4)
