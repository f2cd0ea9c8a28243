"""Weighted CART regression tree."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from ..exceptions import ValidationError
from ..validation import check_fitted, check_query, check_X_y

LEAF = -1
# child SSEs closer than this (relative to the node SSE) count as tied
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class TreeParams:
    """Growth limits; ``max_features`` is an int, ``None`` (all features),
    ``"third"`` (ceil(d/3)) or ``"sqrt"`` (ceil(sqrt(d)))."""

    max_depth: int | None = None
    min_samples_leaf: int = 1
    max_features: int | str | None = None

    def __post_init__(self):
        if self.min_samples_leaf < 1:
            raise ValidationError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValidationError("max_depth must be >= 0 or None")

    def resolve_max_features(self, d: int) -> int:
        mf = self.max_features
        if mf is None:
            return d
        if mf == "third":
            return max(1, math.ceil(d / 3))
        if mf == "sqrt":
            return max(1, math.ceil(math.sqrt(d)))
        if isinstance(mf, str):
            raise ValidationError(f"unknown max_features {mf!r}")
        if not 1 <= mf <= d:
            raise ValidationError(f"max_features={mf} outside [1, {d}]")
        return int(mf)


def midpoint(a: float, b: float) -> float:
    m = a + (b - a) / 2.0
    # keeps x <= threshold routing a left and b right for adjacent floats
    return a if m >= b else m


def weighted_sse(y: np.ndarray, w: np.ndarray) -> float:
    sw = w.sum()
    mean = (w * y).sum() / sw
    return float((w * (y - mean) ** 2).sum())


def _candidate_splits(X, y, w, feats, min_leaf):
    """Approximate child SSE for every admissible (feature, position) pair.

    Returns (sse matrix [n-1, m], sorted x, sort order); inadmissible cells
    hold +inf.
    """
    n = X.shape[0]
    Xf = X[:, feats]
    order = np.argsort(Xf, axis=0, kind="stable")
    xs = np.take_along_axis(Xf, order, axis=0)
    yc = y - (w * y).sum() / w.sum()
    ys = yc[order]
    ws = w[order]
    W = np.cumsum(ws, axis=0)
    S = np.cumsum(ws * ys, axis=0)
    Q = np.cumsum(ws * ys * ys, axis=0)
    Wl, Sl, Ql = W[:-1], S[:-1], Q[:-1]
    Wr, Sr, Qr = W[-1] - Wl, S[-1] - Sl, Q[-1] - Ql
    counts = np.arange(1, n)[:, None]
    ok = (xs[1:] > xs[:-1]) & (counts >= min_leaf) & (n - counts >= min_leaf)
    ok &= (Wl > 0) & (Wr > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        sse = (Ql - Sl * Sl / Wl) + (Qr - Sr * Sr / Wr)
    sse = np.where(ok, sse, np.inf)
    return sse, xs, order


def find_best_split(X, y, w, feats, min_leaf=1):
    """Best (feature, threshold, child SSE) over ``feats``, or None.

    Candidates are screened with running sums, then the near-optimal ones
    are rescored exactly so the tie-break (lowest feature, then lowest
    threshold) is applied to exact values.
    """
    n = X.shape[0]
    if n < 2 or len(feats) == 0:
        return None
    sse, xs, order = _candidate_splits(X, y, w, feats, min_leaf)
    best = sse.min()
    if not np.isfinite(best):
        return None
    scale = float((w * (y - (w * y).sum() / w.sum()) ** 2).sum())
    tol = 1e-9 * scale + 1e-300
    pos, cols = np.nonzero(sse <= best + tol)
    cands = []
    for p, c in zip(pos, cols):
        left = order[: p + 1, c]
        right = order[p + 1 :, c]
        exact = weighted_sse(y[left], w[left]) + weighted_sse(y[right], w[right])
        cands.append((int(feats[c]), midpoint(xs[p, c], xs[p + 1, c]), exact))
    cands.sort()
    tie = TIE_RTOL * scale
    winner = cands[0]
    for cand in cands[1:]:
        if cand[2] < winner[2] - tie:
            winner = cand
    f, thr, exact = winner
    return f, thr, exact


class RegressionTree(BaseEstimator, RegressorMixin):
    """Greedy CART regressor minimising weighted squared error.

    Leaves predict the weighted mean of the targets routed to them; a row
    goes left iff ``x[feature] <= threshold``.

    Parameters
    ----------
    max_depth : int or None
    min_samples_leaf : int
    max_features : int, "third", "sqrt" or None
        Features drawn (without replacement) per split.
    random_state : int
        Seed for the feature-subsampling stream.
    """

    def __init__(self, max_depth=None, min_samples_leaf=1, max_features=None, random_state=0):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    @property
    def params(self) -> TreeParams:
        return TreeParams(self.max_depth, self.min_samples_leaf, self.max_features)

    def fit(self, X, y, sample_weight=None):
        X, y, w = check_X_y(X, y, sample_weight)
        params = self.params
        d = X.shape[1]
        n_feats = params.resolve_max_features(d)
        rng = np.random.default_rng(self.random_state)

        feature, threshold, left, right = [], [], [], []
        value, n_node, w_node, impurity, gain = [], [], [], [], []

        def new_node(idx):
            ww, yy = w[idx], y[idx]
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            sw = ww.sum()
            value.append(float((ww * yy).sum() / sw) if sw > 0 else float(yy.mean()))
            n_node.append(len(idx))
            w_node.append(float(sw))
            impurity.append(weighted_sse(yy, ww) if sw > 0 else 0.0)
            gain.append(0.0)
            return len(feature) - 1

        root = new_node(np.arange(X.shape[0]))
        stack = [(root, np.arange(X.shape[0]), 0)]
        while stack:
            node, idx, depth = stack.pop()
            if params.max_depth is not None and depth >= params.max_depth:
                continue
            if len(idx) < 2 * params.min_samples_leaf or w_node[node] <= 0:
                continue
            yy = y[idx]
            if yy.max() == yy.min():
                continue
            Xn = X[idx]
            live = np.flatnonzero(Xn.max(axis=0) > Xn.min(axis=0))
            if len(live) == 0:
                continue
            if n_feats < d and len(live) > n_feats:
                feats = np.sort(rng.choice(live, size=n_feats, replace=False))
            else:
                feats = live
            split = find_best_split(Xn, yy, w[idx], feats, params.min_samples_leaf)
            if split is None or not split[2] < impurity[node]:
                continue
            f, thr, child_sse = split
            go_left = Xn[:, f] <= thr
            li, ri = idx[go_left], idx[~go_left]
            feature[node] = f
            threshold[node] = thr
            gain[node] = impurity[node] - child_sse
            l_id = new_node(li)
            r_id = new_node(ri)
            left[node], right[node] = l_id, r_id
            # right pushed first so the left subtree is expanded first
            stack.append((r_id, ri, depth + 1))
            stack.append((l_id, li, depth + 1))

        self.n_features_in_ = d
        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold, dtype=float)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.value_ = np.array(value, dtype=float)
        self.n_node_samples_ = np.array(n_node, dtype=np.int64)
        self.weighted_n_node_samples_ = np.array(w_node, dtype=float)
        self.impurity_ = np.array(impurity, dtype=float)
        self.gain_ = np.array(gain, dtype=float)
        return self

    @property
    def node_count(self) -> int:
        return len(self.feature_)

    @property
    def root_split(self):
        """(feature, threshold) at the root, or None for a single leaf."""
        check_fitted(self, "feature_")
        if self.feature_[0] == LEAF:
            return None
        return int(self.feature_[0]), float(self.threshold_[0])

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        check_fitted(self, "feature_")
        X = check_query(X, self.n_features_in_)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.arange(X.shape[0])
        while active.size:
            f = self.feature_[node[active]]
            inner = f != LEAF
            active, f = active[inner], f[inner]
            if not active.size:
                break
            cur = node[active]
            go_left = X[active, f] <= self.threshold_[cur]
            node[active] = np.where(go_left, self.left_[cur], self.right_[cur])
        return node

    def predict(self, X) -> np.ndarray:
        return self.value_[self.apply(X)]

    def feature_gains(self) -> np.ndarray:
        """Total impurity decrease attributed to each feature."""
        check_fitted(self, "feature_")
        out = np.zeros(self.n_features_in_)
        inner = self.feature_ != LEAF
        np.add.at(out, self.feature_[inner], self.gain_[inner])
        return out

    def to_dict(self) -> dict:
        check_fitted(self, "feature_")
        return {
            "params": self.get_params(),
            "n_features": int(self.n_features_in_),
            "nodes": {
                "feature": self.feature_.tolist(),
                "threshold": self.threshold_.tolist(),
                "left": self.left_.tolist(),
                "right": self.right_.tolist(),
                "value": self.value_.tolist(),
                "n_samples": self.n_node_samples_.tolist(),
                "weight": self.weighted_n_node_samples_.tolist(),
                "impurity": self.impurity_.tolist(),
                "gain": self.gain_.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RegressionTree":
        tree = cls(**doc["params"])
        nodes = doc["nodes"]
        tree.n_features_in_ = int(doc["n_features"])
        tree.feature_ = np.array(nodes["feature"], dtype=np.int64)
        tree.threshold_ = np.array(nodes["threshold"], dtype=float)
        tree.left_ = np.array(nodes["left"], dtype=np.int64)
        tree.right_ = np.array(nodes["right"], dtype=np.int64)
        tree.value_ = np.array(nodes["value"], dtype=float)
        tree.n_node_samples_ = np.array(nodes["n_samples"], dtype=np.int64)
        tree.weighted_n_node_samples_ = np.array(nodes["weight"], dtype=float)
        tree.impurity_ = np.array(nodes["impurity"], dtype=float)
        tree.gain_ = np.array(nodes["gain"], dtype=float)
        return tree


def fit_regression_tree(X, y, weights=None, params: TreeParams = TreeParams(), seed: int = 0):
    return RegressionTree(
        params.max_depth, params.min_samples_leaf, params.max_features, seed
    ).fit(X, y, weights)


def predict_tree(tree: RegressionTree, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != tree.n_features_in_:
        raise ValidationError(
            f"expected a vector of {tree.n_features_in_} features, got shape {x.shape}"
        )
    return float(tree.predict(x.reshape(1, -1))[0])
