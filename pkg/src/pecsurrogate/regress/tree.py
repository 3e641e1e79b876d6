"""Randomized (extra-trees style) regression trees stored as complete heap arrays.

A tree of depth D keeps ``2**D - 1`` internal slots (feature, threshold) and
``2**D`` leaf values. A sample goes left when ``x[feature] <= threshold``.
Leaves that stop early are padded with ``threshold = +inf`` internal slots
so every path has exactly D comparisons, which makes ensemble prediction a
fixed sequence of vectorized gathers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RegressionTree:
    feature: np.ndarray  # (2**D - 1,) int
    threshold: np.ndarray  # (2**D - 1,) float
    value: np.ndarray  # (2**D,) float
    depth: int
    extra: bool = True

    def predict(self, X) -> np.ndarray:
        return predict_heap(self.feature[None], self.threshold[None], self.value[None], X, self.depth)[0]

    def n_leaves(self) -> int:
        """Number of distinct reachable leaves."""
        return _count_leaves(self, 0, 0)

    def max_used_depth(self) -> int:
        return _used_depth(self, 0, 0)


def _count_leaves(tree, node, d):
    if d == tree.depth:
        return 1
    if np.isinf(tree.threshold[node]):
        return 1
    return _count_leaves(tree, 2 * node + 1, d + 1) + _count_leaves(tree, 2 * node + 2, d + 1)


def _used_depth(tree, node, d):
    if d == tree.depth or np.isinf(tree.threshold[node]):
        return d
    return max(_used_depth(tree, 2 * node + 1, d + 1), _used_depth(tree, 2 * node + 2, d + 1))


def fit_tree(X, g, *, max_depth: int = 4, min_leaf: int = 5, rng: np.random.Generator,
             extra: bool = True) -> RegressionTree:
    """Fit a least-squares regression tree to targets ``g``.

    With ``extra=True`` every node draws one uniform random threshold per
    feature within the node's range and keeps the best of those candidate
    splits; otherwise all midpoints are scanned exhaustively.
    """
    X = np.asarray(X, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    n_int = 2**max_depth - 1
    feature = np.zeros(n_int, dtype=np.int64)
    threshold = np.full(n_int, np.inf)
    value = np.zeros(2**max_depth)

    def fill_leaf(node, d, v):
        # the left-most descendant leaf is the one reached; fill the whole block anyway
        span = 2 ** (max_depth - d)
        first = node
        for _ in range(max_depth - d):
            first = 2 * first + 1
        first -= n_int
        value[first:first + span] = v

    stack = [(0, 0, np.arange(X.shape[0]))]
    while stack:
        node, d, idx = stack.pop()
        gi = g[idx]
        v = float(gi.mean()) if idx.size else 0.0
        if d == max_depth or idx.size < 2 * min_leaf:
            fill_leaf(node, d, v)
            continue
        split = _best_split(X[idx], gi, min_leaf, rng, extra)
        if split is None:
            fill_leaf(node, d, v)
            continue
        f, t = split
        feature[node] = f
        threshold[node] = t
        go_left = X[idx, f] <= t
        stack.append((2 * node + 2, d + 1, idx[~go_left]))
        stack.append((2 * node + 1, d + 1, idx[go_left]))
    return RegressionTree(feature, threshold, value, max_depth, extra)


def _best_split(Xn, g, min_leaf, rng, extra):
    n, p = Xn.shape
    lo = Xn.min(axis=0)
    hi = Xn.max(axis=0)
    if extra:
        u = rng.random(p)
        thr = lo + u * (hi - lo)
        ok = hi > lo
        cand_f = np.flatnonzero(ok)
        cand_t = thr[ok]
    else:
        cand_f, cand_t = [], []
        for f in range(p):
            vals = np.unique(Xn[:, f])
            mids = (vals[1:] + vals[:-1]) / 2.0
            cand_f += [f] * mids.size
            cand_t += mids.tolist()
        cand_f = np.asarray(cand_f, dtype=np.int64)
        cand_t = np.asarray(cand_t)
    if cand_f.size == 0:
        return None
    left = Xn[:, cand_f] <= cand_t
    n_l = left.sum(axis=0)
    n_r = n - n_l
    s_l = g @ left
    total = g.sum()
    s_r = total - s_l
    valid = (n_l >= min_leaf) & (n_r >= min_leaf)
    if not valid.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = s_l**2 / n_l + s_r**2 / n_r - total**2 / n
    gain = np.where(valid, gain, -np.inf)
    best = int(np.argmax(gain))
    if not gain[best] > 0:
        return None
    return int(cand_f[best]), float(cand_t[best])


def predict_heap(feature, threshold, value, X, depth) -> np.ndarray:
    """Evaluate T stacked heap trees on X (n, d); returns (T, n)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    T = feature.shape[0]
    n = X.shape[0]
    node = np.zeros((T, n), dtype=np.int64)
    rows = np.arange(n)[None, :]
    for _ in range(depth):
        f = np.take_along_axis(feature, node, axis=1)
        t = np.take_along_axis(threshold, node, axis=1)
        node = 2 * node + 1 + (X[rows, f] > t)
    return np.take_along_axis(value, node - (2**depth - 1), axis=1)
