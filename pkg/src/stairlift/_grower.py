"""Numba kernels for CART growth and batch tree traversal.

Layout: training rows are deduplicated to distinct (features, label) rows;
a bootstrap draw becomes an integer weight per distinct row. Feature-sorted
index lists are computed once per training set and partitioned in place as
nodes split, so no per-node sorting happens.

Randomness is a splitmix64 stream. The bootstrap stream is seeded per tree;
the feature-subset stream is seeded per node from (tree seed, heap path), so
a node's candidate features never depend on traversal order or depth limit.
Consequence: a tree grown with a depth cap is node-for-node identical to the
uncapped tree truncated at that depth, which lets grid search grow one set
of trees per fold and evaluate every (max_depth, n_estimators) cell by
capped traversal of tree prefixes.

All accumulation runs in fixed order per tree; parallelism is across trees
only, so results do not depend on thread scheduling.
"""

import numpy as np
from numba import njit, prange

#: Depth value meaning "unbounded".
NO_DEPTH_LIMIT = 1 << 30

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MUL2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, inline="always")
def _splitmix_next(state):
    state = state + _SM_GAMMA
    z = state
    z = (z ^ (z >> np.uint64(30))) * _SM_MUL1
    z = (z ^ (z >> np.uint64(27))) * _SM_MUL2
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True)
def _grow_tree(
    Xu,
    yu,
    sort_idx,
    slot_rows,
    n_slots,
    tree_seed,
    max_depth,
    n_classes,
    m_try,
    store_counts,
    feat,
    thr,
    left,
    right,
    pred,
    counts,
):
    m = Xu.shape[0]
    d = Xu.shape[1]

    # Bootstrap: n_slots draws over presented slots, aggregated to row weights.
    w = np.zeros(m, dtype=np.float64)
    state = tree_seed
    nu = np.uint64(n_slots)
    for _ in range(n_slots):
        state, z = _splitmix_next(state)
        w[slot_rows[np.int64(z % nu)]] += 1.0

    # Compact each feature's sorted list to in-bootstrap rows.
    mb = 0
    for r in range(m):
        if w[r] > 0.0:
            mb += 1
    A = np.empty((d, mb), dtype=np.int32)
    for f in range(d):
        p = 0
        base = sort_idx[f]
        for j in range(m):
            r = base[j]
            if w[r] > 0.0:
                A[f, p] = r
                p += 1

    B = np.empty(mb, dtype=np.int32)
    goes_left = np.zeros(m, dtype=np.uint8)
    perm = np.empty(d, dtype=np.int64)

    cap = 2 * mb + 2
    st_node = np.empty(cap, dtype=np.int64)
    st_lo = np.empty(cap, dtype=np.int64)
    st_hi = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_path = np.empty(cap, dtype=np.uint64)

    wc = np.empty(n_classes, dtype=np.float64)
    cum = np.empty(n_classes, dtype=np.float64)

    top = 0
    st_node[0] = 0
    st_lo[0] = 0
    st_hi[0] = mb
    st_depth[0] = 0
    st_path[0] = np.uint64(1)
    n_nodes = 1

    while top >= 0:
        node = st_node[top]
        lo = st_lo[top]
        hi = st_hi[top]
        depth = st_depth[top]
        path = st_path[top]
        top -= 1

        for c in range(n_classes):
            wc[c] = 0.0
        W = 0.0
        for j in range(lo, hi):
            r = A[0, j]
            wc[yu[r]] += w[r]
            W += w[r]

        best_c = 0
        for c in range(1, n_classes):
            if wc[c] > wc[best_c]:
                best_c = c

        pred[node] = best_c
        feat[node] = -1
        left[node] = -1
        right[node] = -1
        if store_counts:
            for c in range(n_classes):
                counts[node, c] = wc[c]

        # Bootstrap weights are whole numbers, so these sums compare exactly.
        if wc[best_c] == W or W < 2.0 or depth >= max_depth:
            continue

        # Candidate features: m_try distinct indices, partial Fisher-Yates
        # on a per-node stream so draws are traversal-order independent.
        nstate = tree_seed ^ (path * _SM_GAMMA)
        for i in range(d):
            perm[i] = i
        for i in range(m_try):
            nstate, z = _splitmix_next(nstate)
            j = i + np.int64(z % np.uint64(d - i))
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp

        # Best split: maximize sum(left²)/wl + sum(right²)/wr (equivalent to
        # minimizing the weighted child Gini sum). Strict improvement keeps
        # the first-seen candidate on ties.
        best_h = -1.0
        best_f = -1
        best_thr = 0.0
        best_cut = -1
        for ci in range(m_try):
            f = perm[ci]
            for c in range(n_classes):
                cum[c] = 0.0
            cw = 0.0
            for j in range(lo, hi - 1):
                r = A[f, j]
                cum[yu[r]] += w[r]
                cw += w[r]
                rn = A[f, j + 1]
                if Xu[rn, f] > Xu[r, f]:
                    sl = 0.0
                    sr = 0.0
                    for c in range(n_classes):
                        sl += cum[c] * cum[c]
                        rc = wc[c] - cum[c]
                        sr += rc * rc
                    h = sl / cw + sr / (W - cw)
                    if h > best_h:
                        best_h = h
                        best_f = f
                        best_thr = 0.5 * (Xu[r, f] + Xu[rn, f])
                        best_cut = j + 1

        if best_f < 0:
            continue  # all candidate features constant in this node

        nl = best_cut - lo
        for j in range(lo, hi):
            goes_left[A[best_f, j]] = 1 if j < best_cut else 0
        for f in range(d):
            pl = lo
            pr = 0
            for j in range(lo, hi):
                r = A[f, j]
                if goes_left[r] == 1:
                    A[f, pl] = r
                    pl += 1
                else:
                    B[pr] = r
                    pr += 1
            for q in range(pr):
                A[f, pl + q] = B[q]

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feat[node] = best_f
        thr[node] = best_thr
        left[node] = left_id
        right[node] = right_id

        top += 1
        st_node[top] = right_id
        st_lo[top] = lo + nl
        st_hi[top] = hi
        st_depth[top] = depth + 1
        st_path[top] = path * np.uint64(2) + np.uint64(1)
        top += 1
        st_node[top] = left_id
        st_lo[top] = lo
        st_hi[top] = lo + nl
        st_depth[top] = depth + 1
        st_path[top] = path * np.uint64(2)

    return n_nodes


@njit(cache=True, parallel=True)
def grow_forest(
    Xu,
    yu,
    sort_idx,
    slot_rows,
    n_slots,
    tree_seeds,
    max_depth,
    n_classes,
    m_try,
    store_counts,
    feat,
    thr,
    left,
    right,
    pred,
    counts,
    n_nodes,
):
    n_trees = tree_seeds.shape[0]
    for t in prange(n_trees):
        n_nodes[t] = _grow_tree(
            Xu,
            yu,
            sort_idx,
            slot_rows,
            n_slots,
            tree_seeds[t],
            max_depth,
            n_classes,
            m_try,
            store_counts,
            feat[t],
            thr[t],
            left[t],
            right[t],
            pred[t],
            counts[t],
        )


@njit(cache=True, parallel=True)
def predict_votes(feat, thr, left, right, pred, offsets, X, depth_cap, out):
    """Per-tree class votes for each row of X, traversal capped at depth_cap."""
    n_trees = offsets.shape[0] - 1
    for t in prange(n_trees):
        base = offsets[t]
        for i in range(X.shape[0]):
            node = np.int64(0)
            depth = 0
            while True:
                f = feat[base + node]
                if f < 0 or depth >= depth_cap:
                    out[t, i] = pred[base + node]
                    break
                if X[i, f] <= thr[base + node]:
                    node = np.int64(left[base + node])
                else:
                    node = np.int64(right[base + node])
                depth += 1


def derive_tree_seeds(seed: int, n_trees: int) -> np.ndarray:
    """Per-tree uint64 seeds; the first k seeds agree for any forest size."""
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, 0x666F72657374])
    return ss.generate_state(n_trees, np.uint64)
