"""Built-in gradient-boosted trees for binary classification.

Second-order boosting on logistic loss with histogram splits: per round
the gradients are g = p - y and hessians h = p(1 - p); each tree greedily
maximizes the regularized gain

    1/2 [ G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - (G_L+G_R)^2/(H_L+H_R+lambda) ] - gamma

over per-feature quantile bins, and leaves apply an L1 soft-threshold:
-sign(G) * max(|G| - alpha, 0) / (H + lambda). Raw scores start at 0 and
each round adds step_size times the new tree's leaf value; probabilities
are the sigmoid of the accumulated score.

Fits are bit-deterministic given (data, params, seed); with subsample and
colsample both 1.0 no random draws happen at all, so results are then
seed-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Mapping

import numpy as np
from scipy.special import expit

from .data import Dataset, rng_from_seed
from .errors import ConfigError, TrainerError
from .grid import Assignment, AxisValue

# Grid/protocol hyperparameter name -> GbmParams field ("lambda" is a
# Python keyword, hence the trailing underscore).
PARAM_FIELDS: dict[str, str] = {
    "max_depth": "max_depth",
    "step_size": "step_size",
    "max_iteration": "max_iteration",
    "subsample": "subsample",
    "colsample": "colsample",
    "alpha": "alpha",
    "lambda": "lambda_",
    "gamma": "gamma",
    "max_bins": "max_bins",
    "min_instances": "min_instances",
}

GBM_HYPERPARAMETERS = tuple(PARAM_FIELDS)

_INT_FIELDS = {"max_depth", "max_iteration", "max_bins", "min_instances"}


@dataclass(frozen=True)
class GbmParams:
    """Boosting hyperparameters with their validity ranges."""

    max_depth: int = 6
    step_size: float = 0.3
    max_iteration: int = 50
    subsample: float = 1.0
    colsample: float = 1.0
    alpha: float = 0.0
    lambda_: float = 1.0
    gamma: float = 0.0
    max_bins: int = 256
    min_instances: int = 1

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.step_size < 0:
            raise ConfigError("step_size must be >= 0")
        if self.max_iteration < 1:
            raise ConfigError("max_iteration must be >= 1")
        if not 0.0 < self.subsample <= 1.0:
            raise ConfigError("subsample must lie in (0, 1]")
        if not 0.0 < self.colsample <= 1.0:
            raise ConfigError("colsample must lie in (0, 1]")
        if self.alpha < 0 or self.lambda_ < 0 or self.gamma < 0:
            raise ConfigError("alpha, lambda, and gamma must be >= 0")
        if self.max_bins < 2:
            raise ConfigError("max_bins must be >= 2")
        if self.min_instances < 1:
            raise ConfigError("min_instances must be >= 1")

    @classmethod
    def from_assignment(cls, assignment: Assignment | Mapping[str, AxisValue]) -> "GbmParams":
        """Defaults overridden by the assignment's bindings.

        Unknown names are a configuration error, never silently dropped.
        """
        bindings = assignment.as_dict() if isinstance(assignment, Assignment) else dict(assignment)
        unknown = set(bindings) - set(PARAM_FIELDS)
        if unknown:
            raise ConfigError(
                f"unknown hyperparameters for the built-in trainer: {sorted(unknown)}; "
                f"known names: {sorted(PARAM_FIELDS)}"
            )
        kwargs: dict[str, int | float] = {}
        for name, value in bindings.items():
            field = PARAM_FIELDS[name]
            if isinstance(value, str):
                raise ConfigError(f"hyperparameter {name!r} must be numeric, got {value!r}")
            if field in _INT_FIELDS:
                if float(value) != int(value):
                    raise ConfigError(f"hyperparameter {name!r} must be an integer, got {value!r}")
                kwargs[field] = int(value)
            else:
                kwargs[field] = float(value)
        return cls(**kwargs)

    def as_mapping(self) -> dict[str, int | float]:
        out = {}
        for name, field in PARAM_FIELDS.items():
            out[name] = getattr(self, field)
        return out


@dataclass(frozen=True)
class GbmTree:
    """One regression tree over binned features, stored as flat arrays.

    ``feature[i] < 0`` marks node i as a leaf with value ``value[i]``;
    otherwise rows with ``binned[:, feature[i]] <= cut_bin[i]`` descend to
    ``left[i]`` and the rest to ``right[i]``.
    """

    feature: np.ndarray
    cut_bin: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def is_zero(self) -> bool:
        return len(self.feature) == 1 and self.feature[0] < 0 and self.value[0] == 0.0

    def apply(self, binned: np.ndarray) -> np.ndarray:
        """Leaf value for every row of a binned feature matrix."""
        n = binned.shape[0]
        node = np.zeros(n, dtype=np.int32)
        rows = np.arange(n)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            idx = rows[active]
            f = feat[active]
            go_left = binned[idx, f] <= self.cut_bin[node[active]]
            node[idx] = np.where(go_left, self.left[node[active]], self.right[node[active]])
        return self.value[node]


@dataclass(frozen=True)
class GbmModel:
    """A fitted boosted ensemble plus the binning it was trained with."""

    trees: tuple[GbmTree, ...]
    bin_cuts: tuple[np.ndarray, ...]
    params: GbmParams
    n_features: int


def compute_bin_cuts(features: np.ndarray, max_bins: int) -> tuple[np.ndarray, ...]:
    """Per-feature cut points giving at most ``max_bins`` quantile bins.

    Few distinct values get one bin per value (cuts at midpoints); ties in
    the quantiles collapse bins.
    """
    cuts = []
    for j in range(features.shape[1]):
        col = features[:, j]
        uniq = np.unique(col)
        if len(uniq) <= max_bins:
            c = (uniq[:-1] + uniq[1:]) / 2.0
        else:
            qs = np.quantile(col, np.arange(1, max_bins) / max_bins)
            c = np.unique(qs)
        cuts.append(np.ascontiguousarray(c, dtype=np.float64))
    return tuple(cuts)


def bin_features(features: np.ndarray, cuts: tuple[np.ndarray, ...]) -> np.ndarray:
    """Bin index per cell: count of cut points <= value."""
    binned = np.empty(features.shape, dtype=np.int32)
    for j, c in enumerate(cuts):
        binned[:, j] = np.searchsorted(c, features[:, j], side="right")
    return binned


def _leaf_value(G: float, H: float, params: GbmParams) -> float:
    denom = H + params.lambda_
    if denom <= 0.0:
        return 0.0
    shrunk = max(abs(G) - params.alpha, 0.0)
    return -math.copysign(shrunk, G) / denom


class _SplitContext:
    """Shared per-fit state for the combined-histogram split search.

    Bin ids of all candidate features live in one offset index space, and
    all nodes of one tree level share a single histogram pass: three
    bincounts (count, g, h) per level regardless of node or feature
    count. Gains for every (node, feature, cut) candidate are then scored
    in one vectorized sweep.
    """

    def __init__(self, binned: np.ndarray, n_bins: tuple[int, ...], params: GbmParams):
        self.params = params
        self.n_features = binned.shape[1]
        self.n_bins = np.asarray(n_bins, dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.n_bins)])
        self.total_bins = int(self.offsets[-1])
        self.shifted = binned.astype(np.int64) + self.offsets[:-1][None, :]
        self.feature_of_bin = np.repeat(np.arange(len(n_bins)), self.n_bins)
        # The last bin of each feature never hosts a cut (nothing right of it).
        ends = self.offsets[1:] - 1
        self.cut_allowed = np.ones(self.total_bins, dtype=bool)
        self.cut_allowed[ends] = False

    def best_splits(
        self,
        g: np.ndarray,
        h: np.ndarray,
        row_groups: list[np.ndarray],
        cols: np.ndarray,
    ) -> tuple[list[tuple[int, int] | None], np.ndarray, np.ndarray]:
        """Best (feature, cut bin) per node of one level, or None each.

        Ties break toward the lowest feature index then lowest bin; a
        split must clear gamma and leave >= min_instances rows per child.
        Also returns the per-node gradient and hessian totals (for leaf
        values of nodes that do not split).
        """
        params = self.params
        lam = params.lambda_
        n_nodes = len(row_groups)
        rows_cat = np.concatenate(row_groups)
        rep = np.repeat(np.arange(n_nodes), [len(r) for r in row_groups])
        g_rows = g[rows_cat]
        h_rows = h[rows_cat]
        n_sel = len(cols)

        sub = self.shifted[rows_cat]
        if n_sel != self.n_features:
            sub = sub[:, cols]
        keys = (sub + (rep * self.total_bins)[:, None]).ravel(order="F")
        length = n_nodes * self.total_bins
        counts = np.bincount(keys, minlength=length).reshape(n_nodes, self.total_bins)
        g_hist = np.bincount(
            keys, weights=np.tile(g_rows, n_sel), minlength=length
        ).reshape(n_nodes, self.total_bins)
        h_hist = np.bincount(
            keys, weights=np.tile(h_rows, n_sel), minlength=length
        ).reshape(n_nodes, self.total_bins)

        # Node totals, read off the first selected feature's block.
        first = slice(self.offsets[cols[0]], self.offsets[cols[0] + 1])
        node_count = counts[:, first].sum(axis=1)
        G = g_hist[:, first].sum(axis=1)
        H = h_hist[:, first].sum(axis=1)

        # Within-block prefix sums: global row cumsum minus the running
        # totals accumulated by earlier feature blocks.
        cl = np.cumsum(counts, axis=1)
        GL = np.cumsum(g_hist, axis=1)
        HL = np.cumsum(h_hist, axis=1)
        boundary = self.offsets[1:-1] - 1
        zeros_i = np.zeros((n_nodes, 1), dtype=cl.dtype)
        zeros_f = np.zeros((n_nodes, 1))
        block_c = np.concatenate([zeros_i, cl[:, boundary]], axis=1)
        block_g = np.concatenate([zeros_f, GL[:, boundary]], axis=1)
        block_h = np.concatenate([zeros_f, HL[:, boundary]], axis=1)
        cl = cl - block_c[:, self.feature_of_bin]
        GL = GL - block_g[:, self.feature_of_bin]
        HL = HL - block_h[:, self.feature_of_bin]

        cr = node_count[:, None] - cl
        GR = G[:, None] - GL
        HR = H[:, None] - HL
        dl = HL + lam
        dr = HR + lam
        ok = (
            self.cut_allowed[None, :]
            & (cl >= params.min_instances)
            & (cr >= params.min_instances)
            & (dl > 0)
            & (dr > 0)
        )
        if n_sel != self.n_features:
            in_play = np.zeros(self.total_bins, dtype=bool)
            for j in cols:
                in_play[self.offsets[j] : self.offsets[j + 1]] = True
            ok &= in_play[None, :]

        with np.errstate(divide="ignore", invalid="ignore"):
            parent = np.where(H + lam > 0, G * G / (H + lam), 0.0)
            gains = 0.5 * (GL * GL / dl + GR * GR / dr - parent[:, None]) - params.gamma
        gains = np.where(ok, gains, -np.inf)
        best_key = np.argmax(gains, axis=1)
        best_gain = gains[np.arange(n_nodes), best_key]
        splits: list[tuple[int, int] | None] = []
        for i in range(n_nodes):
            if best_gain[i] > 0.0:
                key = int(best_key[i])
                feature = int(self.feature_of_bin[key])
                splits.append((feature, int(key - self.offsets[feature])))
            else:
                splits.append(None)
        return splits, G, H


_ZERO_TREE = GbmTree(
    feature=np.array([-1], dtype=np.int32),
    cut_bin=np.array([-1], dtype=np.int32),
    left=np.array([-1], dtype=np.int32),
    right=np.array([-1], dtype=np.int32),
    value=np.array([0.0]),
)


def _grow_tree(
    ctx: _SplitContext,
    binned: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    params: GbmParams,
) -> GbmTree:
    """Level-wise greedy growth to at most ``max_depth`` edges."""
    feature: list[int] = []
    cut_bin: list[int] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        cut_bin.append(-1)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    level_slots = [new_node()]
    level_rows = [rows]
    for depth in range(params.max_depth):
        splits, G, H = ctx.best_splits(g, h, level_rows, cols)
        if depth == 0 and splits[0] is None:
            # An unsplittable root yields a zero tree: the round changes
            # no score, so blanket split rejection (huge gamma) keeps
            # predictions at 0.5.
            return _ZERO_TREE
        next_slots: list[int] = []
        next_rows: list[np.ndarray] = []
        for i, slot in enumerate(level_slots):
            split = splits[i]
            if split is None:
                value[slot] = _leaf_value(float(G[i]), float(H[i]), params)
                continue
            j, k = split
            node_rows = level_rows[i]
            go_left = binned[node_rows, j] <= k
            feature[slot] = j
            cut_bin[slot] = k
            left[slot] = new_node()
            right[slot] = new_node()
            next_slots.extend((left[slot], right[slot]))
            next_rows.extend((node_rows[go_left], node_rows[~go_left]))
        if not next_slots:
            break
        level_slots = next_slots
        level_rows = next_rows
    else:
        # Nodes at the depth cap become leaves.
        for slot, node_rows in zip(level_slots, level_rows):
            value[slot] = _leaf_value(
                float(g[node_rows].sum()), float(h[node_rows].sum()), params
            )

    return GbmTree(
        feature=np.asarray(feature, dtype=np.int32),
        cut_bin=np.asarray(cut_bin, dtype=np.int32),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
    )


def gbm_fit(train: Dataset, params: GbmParams, seed: int) -> GbmModel:
    """Fit a boosted ensemble of ``max_iteration`` trees on logistic loss."""
    counts = train.class_counts()
    if counts[0] == 0 or counts[1] == 0:
        raise TrainerError("training labels contain a single class")
    X = train.features
    y = train.labels.astype(np.float64)
    n, d = X.shape
    cuts = compute_bin_cuts(X, params.max_bins)
    binned = bin_features(X, cuts)
    n_bins = tuple(len(c) + 1 for c in cuts)
    ctx = _SplitContext(binned, n_bins, params)
    all_rows = np.arange(n)
    all_cols = np.arange(d)
    n_sub = max(1, round(params.subsample * n))
    n_col = max(1, round(params.colsample * d))
    rng = rng_from_seed(seed) if params.subsample < 1.0 or params.colsample < 1.0 else None

    scores = np.zeros(n)
    trees: list[GbmTree] = []
    for _ in range(params.max_iteration):
        p = expit(scores)
        g = p - y
        h = p * (1.0 - p)
        rows = all_rows
        cols = all_cols
        if rng is not None:
            if params.subsample < 1.0:
                rows = np.sort(rng.choice(n, size=n_sub, replace=False))
            if params.colsample < 1.0:
                cols = np.sort(rng.choice(d, size=n_col, replace=False))
        tree = _grow_tree(ctx, binned, g, h, rows, cols, params)
        trees.append(tree)
        if not tree.is_zero:
            scores += params.step_size * tree.apply(binned)
    return GbmModel(trees=tuple(trees), bin_cuts=cuts, params=params, n_features=d)


def gbm_raw_scores(model: GbmModel, features: np.ndarray, rounds: int | None = None) -> np.ndarray:
    """Accumulated raw scores (log-odds) after the first ``rounds`` trees."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.n_features:
        raise TrainerError(
            f"feature width {features.shape[1] if features.ndim == 2 else '?'} does not match "
            f"training width {model.n_features}"
        )
    use = model.trees if rounds is None else model.trees[:rounds]
    scores = np.zeros(features.shape[0])
    if not use:
        return scores
    binned = bin_features(features, model.bin_cuts)
    for tree in use:
        if not tree.is_zero:
            scores += model.params.step_size * tree.apply(binned)
    return scores


def gbm_predict(model: GbmModel, features: np.ndarray, rounds: int | None = None) -> np.ndarray:
    """Predicted probability of label 1 for each row."""
    return expit(gbm_raw_scores(model, features, rounds=rounds))


def gbm_params_from_assignment(assignment: Assignment | Mapping[str, AxisValue]) -> GbmParams:
    return GbmParams.from_assignment(assignment)


def params_with(params: GbmParams, **overrides: int | float) -> GbmParams:
    valid = {f.name for f in fields(GbmParams)}
    bad = set(overrides) - valid
    if bad:
        raise ConfigError(f"unknown GbmParams fields: {sorted(bad)}")
    return replace(params, **overrides)
