"""Compiled kernels for regression trees on the two calendar categoricals.

Training rows only matter through their (day-of-month, day-of-week) cell, so
every tree is grown on per-cell weights and sums: 31 * 7 = 217 cells at
most. A node's split orders the present categories of one feature by mean
response and scans the cut points, which is the optimal binary partition of
the categories for squared error.

Tree arrays (one row per node):
    feature   -1 for a leaf, 0 for day-of-month, 1 for day-of-week
    left/right child node ids
    value     mean response of the node
    weight    number of (bootstrap) training rows reaching the node
    catmask   bit ``c`` set if category ``c`` goes to the left child;
              categories unseen at the node follow the heavier child
"""

import numpy as np
from numba import njit

N_DOM = 31
N_DOW = 7
N_CELLS = N_DOM * N_DOW
MAX_NODES = 2 * N_CELLS - 1


@njit(cache=True, nogil=True)
def cell_index(dom, dow):
    out = np.empty(dom.shape[0], np.int64)
    for i in range(dom.shape[0]):
        out[i] = (dom[i] - 1) * N_DOW + (dow[i] - 1)
    return out


# category of each cell for feature 0 (day-of-month) and 1 (day-of-week)
CELL_CATEGORY = np.array(
    [[c // N_DOW + 1 for c in range(N_CELLS)], [c % N_DOW + 1 for c in range(N_CELLS)]],
    dtype=np.int64,
)


@njit(cache=True, nogil=True)
def _category(cell, f):
    return CELL_CATEGORY[f, cell]


@njit(cache=True, nogil=True)
def grow_tree(cw, cs, min_leaf, feature, left, right, value, weight, catmask):
    """Grow one tree from cell weights ``cw`` and sums ``cs``; return node count."""
    cells = np.empty(N_CELLS, np.int64)
    buf = np.empty(N_CELLS, np.int64)
    nc = 0
    w_root = 0.0
    s_root = 0.0
    for c in range(N_CELLS):
        if cw[c] > 0:
            cells[nc] = c
            nc += 1
            w_root += cw[c]
            s_root += cs[c]
    if nc == 0:
        return 0

    cm = np.zeros(N_CELLS)
    for i in range(nc):
        cm[cells[i]] = cs[cells[i]] / cw[cells[i]]
    m_root = s_root / w_root
    imp_root = 0.0
    for i in range(nc):
        c = cells[i]
        dm = cm[c] - m_root
        imp_root += cw[c] * dm * dm
    tol = 1e-12 * imp_root

    st_node = np.empty(MAX_NODES, np.int64)
    st_lo = np.empty(MAX_NODES, np.int64)
    st_hi = np.empty(MAX_NODES, np.int64)
    top = 0
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = nc
    top = 1
    n_nodes = 1

    catw = np.empty((2, N_DOM + 1))
    catd = np.empty((2, N_DOM + 1))
    present = np.empty(N_DOM, np.int64)
    keys = np.empty(N_DOM)

    while top > 0:
        top -= 1
        node = st_node[top]
        lo = st_lo[top]
        hi = st_hi[top]

        wn = 0.0
        sn = 0.0
        for i in range(lo, hi):
            wn += cw[cells[i]]
            sn += cs[cells[i]]
        mean = sn / wn
        value[node] = mean
        weight[node] = wn
        feature[node] = -1
        left[node] = -1
        right[node] = -1
        catmask[node] = 0

        if hi - lo < 2 or wn < 2 * min_leaf:
            continue
        for k in range(N_DOM + 1):
            catw[0, k] = 0.0
            catd[0, k] = 0.0
        for k in range(N_DOW + 1):
            catw[1, k] = 0.0
            catd[1, k] = 0.0
        imp = 0.0
        for i in range(lo, hi):
            c = cells[i]
            dm = cm[c] - mean
            imp += cw[c] * dm * dm
            # deviations from the node mean keep gains shift invariant
            dev = cs[c] - cw[c] * mean
            k = CELL_CATEGORY[0, c]
            catw[0, k] += cw[c]
            catd[0, k] += dev
            k = CELL_CATEGORY[1, c]
            catw[1, k] += cw[c]
            catd[1, k] += dev
        if not imp > tol:
            continue

        # gains within this margin are ties, so rounding never decides a split
        margin = 1e-10 * imp
        best_gain = -np.inf
        best_f = -1
        best_mask = np.int64(0)
        best_wl = 0.0
        best_seen = np.int64(0)
        for f in range(2):
            ncat = N_DOM if f == 0 else N_DOW
            npres = 0
            d_tot = 0.0
            seen = np.int64(0)
            for k in range(1, ncat + 1):
                if catw[f, k] > 0:
                    seen |= np.int64(1) << k
                    present[npres] = k
                    keys[npres] = catd[f, k] / catw[f, k]
                    npres += 1
                    d_tot += catd[f, k]
            if npres < 2:
                continue
            # stable insertion sort of the (few) categories by mean deviation
            for j in range(1, npres):
                kj = keys[j]
                pj = present[j]
                i = j - 1
                while i >= 0 and keys[i] > kj:
                    keys[i + 1] = keys[i]
                    present[i + 1] = present[i]
                    i -= 1
                keys[i + 1] = kj
                present[i + 1] = pj
            wl = 0.0
            dl = 0.0
            mask = np.int64(0)
            for j in range(npres - 1):
                k = present[j]
                wl += catw[f, k]
                dl += catd[f, k]
                mask |= np.int64(1) << k
                wr = wn - wl
                if wl < min_leaf or wr < min_leaf:
                    continue
                dr = d_tot - dl
                gain = dl * dl / wl + dr * dr / wr - d_tot * d_tot / wn
                if gain > best_gain + margin:
                    best_gain = gain
                    best_f = f
                    best_mask = mask
                    best_wl = wl
                    best_seen = seen
        if best_f < 0:
            continue

        if best_wl >= wn - best_wl:
            ncat = N_DOM if best_f == 0 else N_DOW
            all_bits = ((np.int64(1) << (ncat + 1)) - 1) ^ np.int64(1)
            best_mask |= all_bits & ~best_seen

        # partition: left cells to the front, right cells to the back
        nl = 0
        nr = hi - lo
        for i in range(lo, hi):
            c = cells[i]
            if (best_mask >> CELL_CATEGORY[best_f, c]) & 1:
                buf[nl] = c
                nl += 1
            else:
                nr -= 1
                buf[nr] = c
        for i in range(hi - lo):
            cells[lo + i] = buf[i]

        feature[node] = best_f
        catmask[node] = best_mask
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        # right first so the left subtree is grown first
        st_node[top] = rid
        st_lo[top] = lo + nl
        st_hi[top] = hi
        top += 1
        st_node[top] = lid
        st_lo[top] = lo
        st_hi[top] = lo + nl
        top += 1
    return n_nodes


@njit(cache=True, nogil=True)
def route_cells(feature, left, right, value, catmask, out):
    """Fill ``out[cell]`` with the tree prediction for every calendar cell."""
    for c in range(N_CELLS):
        node = 0
        while feature[node] >= 0:
            k = _category(c, feature[node])
            if (catmask[node] >> k) & 1:
                node = left[node]
            else:
                node = right[node]
        out[c] = value[node]


@njit(cache=True, nogil=True)
def grow_trees(cells, y, boot, use_boot, min_leaf, trees, feature, left, right,
               value, weight, catmask, n_nodes, tables):
    """Grow the trees listed in ``trees``; row ``t`` of ``boot`` is tree t's sample."""
    n = cells.shape[0]
    cw = np.empty(N_CELLS)
    cs = np.empty(N_CELLS)
    for ti in range(trees.shape[0]):
        t = trees[ti]
        cw[:] = 0.0
        cs[:] = 0.0
        if use_boot:
            for j in range(n):
                i = boot[t, j]
                cw[cells[i]] += 1.0
                cs[cells[i]] += y[i]
        else:
            for i in range(n):
                cw[cells[i]] += 1.0
                cs[cells[i]] += y[i]
        n_nodes[t] = grow_tree(cw, cs, min_leaf, feature[t], left[t], right[t],
                               value[t], weight[t], catmask[t])
        route_cells(feature[t], left[t], right[t], value[t], catmask[t], tables[t])
