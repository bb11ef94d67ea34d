"""Gradient-boosted ranking: LambdaMART plus the evaluation baselines.

The tree engine is an exact greedy learner over presorted feature
columns: splits maximize variance reduction of the pseudo-response,
leaf values take a Newton step from the accumulated pair hessians.
Everything is deterministic for a fixed config in single-thread mode.
"""

from __future__ import annotations

import heapq
import json
import logging
import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "TreeNode",
    "RankingModel",
    "RegistryMismatchError",
    "lambda_pair",
    "delta_ndcg_single_positive",
    "train_lambdamart",
    "train_pointwise_gbt",
    "predict",
    "predict_matrix",
    "rank",
    "baseline_random",
    "baseline_gfirandom",
    "save_model",
    "load_model",
]

_RIDGE = 1e-6
_EXP_CLAMP = 50.0
_MIN_DATETIME = datetime.min.replace(tzinfo=timezone.utc)


class RegistryMismatchError(ValueError):
    """Model was trained against a different feature registry."""


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int = 300
    max_leaves: int = 31
    min_samples_leaf: int = 20
    learning_rate: float = 0.1
    sigma: float = 1.0
    early_stopping_rounds: int = 30
    seed: int = 0
    objective: str = "lambdarank"

    def validate(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.sigma <= 0.0:
            raise ValueError("sigma must be > 0")
        if self.max_leaves < 2:
            raise ValueError("max_leaves must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.objective not in ("lambdarank", "pointwise_logloss"):
            raise ValueError(f"unknown objective {self.objective!r}")

    def as_dict(self) -> Dict:
        return {
            "n_trees": self.n_trees,
            "max_leaves": self.max_leaves,
            "min_samples_leaf": self.min_samples_leaf,
            "learning_rate": self.learning_rate,
            "sigma": self.sigma,
            "early_stopping_rounds": self.early_stopping_rounds,
            "seed": self.seed,
            "objective": self.objective,
        }


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class RankingModel:
    """Additive tree ensemble: score(x) = sum_t learning_rate * tree_t(x)."""

    trees: List[TreeNode] = field(default_factory=list)
    learning_rate: float = 0.1
    registry_version: str = ""
    hyperparameters: Dict = field(default_factory=dict)
    train_report: Dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Lambda gradients
# ---------------------------------------------------------------------------

def lambda_pair(score_pos: float, score_neg: float, delta_ndcg: float, sigma: float) -> Tuple[float, float]:
    """Pairwise gradient contribution to the positive item and the shared
    hessian. The negative item receives the negated lambda."""
    if delta_ndcg < 0:
        raise ValueError("delta_ndcg must be >= 0")
    exponent = sigma * (score_pos - score_neg)
    exponent = max(-_EXP_CLAMP, min(_EXP_CLAMP, exponent))
    rho = 1.0 / (1.0 + math.exp(exponent))
    lam = -sigma * rho * delta_ndcg
    hess = sigma * sigma * rho * (1.0 - rho) * delta_ndcg
    return lam, hess


def delta_ndcg_single_positive(rank_pos_a: int, rank_pos_b: int, list_size: int = 0) -> float:
    """|NDCG(a) - NDCG(b)| when the list holds a single unit-gain positive
    (the ideal DCG is 1, so NDCG at rank r is 1/log2(1+r))."""
    if rank_pos_a < 1 or rank_pos_b < 1:
        raise ValueError("ranks are 1-based")
    return abs(1.0 / math.log2(1.0 + rank_pos_a) - 1.0 / math.log2(1.0 + rank_pos_b))


# ---------------------------------------------------------------------------
# Tree fitting on presorted columns
# ---------------------------------------------------------------------------

class _NodeTask:
    __slots__ = ("node", "sorted_idx", "sorted_vals", "gain", "feature", "pos", "seq")

    def __init__(self, node, sorted_idx, sorted_vals, seq):
        self.node = node
        self.sorted_idx = sorted_idx
        self.sorted_vals = sorted_vals
        self.gain = -np.inf
        self.feature = -1
        self.pos = -1
        self.seq = seq

    def __lt__(self, other):  # heapq: larger gain first, then creation order
        return (-self.gain, self.seq) < (-other.gain, other.seq)


def _leaf_value(idx, response, hess):
    return float(np.sum(response[idx]) / (np.sum(hess[idx]) + _RIDGE))


def _best_split(sorted_idx, sorted_vals, response, cfg):
    """Best (gain, feature, position) by variance reduction; gain -inf when
    no valid split exists. Ties resolve to the lowest feature index and
    then the lowest threshold (first position in ascending value order).

    sorted_idx / sorted_vals are (n_features, m): row f holds the node's
    rows (and feature-f values) in ascending feature-f order, so all scans
    run over contiguous memory.
    """
    n_feat, m = sorted_idx.shape
    low = cfg.min_samples_leaf
    if m < 2 * low:
        return -np.inf, -1, -1
    g = response[sorted_idx]
    gl = np.cumsum(g, axis=1)
    total = gl[:, -1].copy()
    gl = gl[:, :-1]
    n_left = np.arange(1, m, dtype=np.float64)
    n_right = m - n_left
    rhs = total[:, None] - gl
    np.multiply(rhs, rhs, out=rhs)
    rhs /= n_right
    gain = np.multiply(gl, gl, out=gl)
    gain /= n_left
    gain += rhs
    base = total * total / m
    valid = sorted_vals[:, :-1] != sorted_vals[:, 1:]
    if low > 1:
        valid[:, : low - 1] = False
        valid[:, m - low:] = False
    gain[~valid] = -np.inf
    best_pos = np.argmax(gain, axis=1)
    best_gain = gain[np.arange(n_feat), best_pos] - base
    feature = int(np.argmax(best_gain))
    if not np.isfinite(best_gain[feature]):
        return -np.inf, -1, -1
    return float(best_gain[feature]), feature, int(best_pos[feature])


def _partition(sorted_idx, sorted_vals, feature, pos, n_total):
    left_rows = sorted_idx[feature, : pos + 1]
    is_left = np.zeros(n_total, dtype=bool)
    is_left[left_rows] = True
    mask = is_left[sorted_idx]
    n_feat, m = sorted_idx.shape
    n_left = pos + 1
    left = sorted_idx[mask].reshape(n_feat, n_left)
    right = sorted_idx[~mask].reshape(n_feat, m - n_left)
    left_v = sorted_vals[mask].reshape(n_feat, n_left)
    right_v = sorted_vals[~mask].reshape(n_feat, m - n_left)
    return (left, left_v), (right, right_v), left_rows, sorted_idx[feature, pos + 1:]


def _fit_tree(X, response, hess, cfg, root_order, root_vals):
    """Grow a tree leaf-wise (best gain first) up to cfg.max_leaves.

    Returns the tree and (row_indices, leaf_value) per leaf so training can
    update scores without re-traversing.
    """
    n_total = X.shape[0]
    root = TreeNode()
    seq = 0
    task = _NodeTask(root, root_order, root_vals, seq)
    task.gain, task.feature, task.pos = _best_split(root_order, root_vals, response, cfg)
    heap = [task]
    leaves = 1
    leaf_rows: Dict[int, np.ndarray] = {id(root): root_order[0]}
    while heap and leaves < cfg.max_leaves:
        task = heapq.heappop(heap)
        if task.gain <= 0.0 or task.feature < 0:
            # best remaining candidate cannot improve; all further ones are worse
            heapq.heappush(heap, task)
            break
        node = task.node
        v = task.sorted_vals[task.feature]
        node.feature = task.feature
        node.threshold = float((v[task.pos] + v[task.pos + 1]) / 2.0)
        node.left = TreeNode()
        node.right = TreeNode()
        left_pair, right_pair, left_rows, right_rows = _partition(
            task.sorted_idx, task.sorted_vals, task.feature, task.pos, n_total
        )
        del leaf_rows[id(node)]
        leaf_rows[id(node.left)] = left_rows
        leaf_rows[id(node.right)] = right_rows
        for child, (child_idx, child_vals) in ((node.left, left_pair), (node.right, right_pair)):
            seq += 1
            child_task = _NodeTask(child, child_idx, child_vals, seq)
            child_task.gain, child_task.feature, child_task.pos = _best_split(
                child_idx, child_vals, response, cfg
            )
            heapq.heappush(heap, child_task)
        leaves += 1

    assignments = []
    stack = [root]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            rows = leaf_rows[id(node)]
            node.value = _leaf_value(rows, response, hess)
            assignments.append((rows, node.value))
        else:
            stack.append(node.right)
            stack.append(node.left)
    return root, assignments


def _apply_tree(node: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if idx.size == 0:
            continue
        if nd.is_leaf:
            out[idx] = nd.value
            continue
        go_left = X[idx, nd.feature] <= nd.threshold
        stack.append((nd.left, idx[go_left]))
        stack.append((nd.right, idx[~go_left]))
    return out


def predict(model: RankingModel, x) -> float:
    """Ensemble score for one feature vector (0 for an empty ensemble)."""
    vec = np.asarray(x, dtype=np.float64)
    total = 0.0
    for tree in model.trees:
        node = tree
        while not node.is_leaf:
            node = node.left if vec[node.feature] <= node.threshold else node.right
        total += node.value
    return model.learning_rate * total


def predict_matrix(model: RankingModel, X: np.ndarray) -> np.ndarray:
    scores = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        scores += _apply_tree(tree, X)
    return model.learning_rate * scores


def rank(model: RankingModel, items: Sequence[Tuple[str, np.ndarray]],
         created_at: Optional[Dict[str, datetime]] = None) -> List[str]:
    """Issue ids in descending score order; ties break by ascending
    created_at (when known) and then id, so the order is independent of
    the input permutation."""
    if not items:
        return []
    X = np.vstack([np.asarray(v, dtype=np.float64) for _, v in items])
    scores = predict_matrix(model, X)
    lookup = created_at or {}

    def sort_key(pair):
        idx, (issue_id, _) = pair
        return (-scores[idx], lookup.get(issue_id, _MIN_DATETIME), issue_id)

    return [items[i][0] for i, _ in sorted(enumerate(items), key=lambda p: sort_key(p))]


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

def baseline_random(issue_ids: Sequence[str], seed: int) -> List[str]:
    """Seeded uniform shuffle."""
    out = list(issue_ids)
    random.Random(seed).shuffle(out)
    return out


def baseline_gfirandom(items: Sequence[Tuple[str, bool]], seed: int) -> List[str]:
    """GFI-labeled candidates shuffled first, then the rest."""
    rng = random.Random(seed)
    gfi = [i for i, flag in items if flag]
    rest = [i for i, flag in items if not flag]
    rng.shuffle(gfi)
    rng.shuffle(rest)
    return gfi + rest


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _stack_lists(lists, what: str):
    """Concatenate per-list matrices; drop lists without negatives."""
    xs, ptr, pos_rows = [], [0], []
    total = 0
    for i, (x, pos_idx) in enumerate(lists):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"{what} list {i}: expected a 2-d feature matrix")
        if not 0 <= pos_idx < x.shape[0]:
            raise ValueError(f"{what} list {i}: positive index {pos_idx} out of range")
        if x.shape[0] < 2:
            log.warning("%s list %d has no negatives; skipped", what, i)
            continue
        xs.append(x)
        total += x.shape[0]
        ptr.append(total)
        pos_rows.append(ptr[-2] + pos_idx)
    if not xs:
        raise ValueError(f"no usable {what} lists (every list needs >= 2 candidates)")
    return np.ascontiguousarray(np.vstack(xs)), np.asarray(ptr), np.asarray(pos_rows)


def _ranks_within_lists(scores, ptr):
    """1-based rank of every row within its list, by descending score;
    stable ties (input order)."""
    n = scores.shape[0]
    list_idx = np.repeat(np.arange(len(ptr) - 1), np.diff(ptr))
    order = np.lexsort((-scores, list_idx))
    ranks = np.empty(n, dtype=np.int64)
    positions = np.arange(n, dtype=np.int64) - np.repeat(ptr[:-1], np.diff(ptr))
    ranks[order] = positions + 1
    return ranks


def _median_fh(scores, ptr, pos_rows) -> float:
    ranks = _ranks_within_lists(scores, ptr)
    return float(np.median(ranks[pos_rows]))


def _pair_deltas(scores, ptr, pos_rows):
    """Per-row |delta NDCG| of swapping the row with its list's positive at
    the current ranks (0 at the positive rows themselves)."""
    sizes = np.diff(ptr)
    ranks = _ranks_within_lists(scores, ptr)
    disc = 1.0 / np.log2(1.0 + ranks)
    pos_of_row = np.repeat(pos_rows, sizes)
    return np.abs(disc[pos_of_row] - disc), pos_of_row


def _weighted_pair_loss(scores, delta, pos_of_row, pos_rows, sigma):
    """Sum over (positive, negative) pairs of delta * log(1 + e^{-sigma*margin})."""
    expo = np.clip(sigma * (scores[pos_of_row] - scores), -_EXP_CLAMP, _EXP_CLAMP)
    loss_terms = delta * np.logaddexp(0.0, -expo)
    loss_terms[pos_rows] = 0.0
    return float(np.sum(loss_terms))


def _lambda_gradients(scores, delta, pos_of_row, ptr, pos_rows, sigma):
    """Accumulated per-item lambdas and hessians for fixed pair weights."""
    n = scores.shape[0]
    expo = np.clip(sigma * (scores[pos_of_row] - scores), -_EXP_CLAMP, _EXP_CLAMP)
    rho = 1.0 / (1.0 + np.exp(expo))

    neg_mask = np.ones(n, dtype=bool)
    neg_mask[pos_rows] = False

    pair_lambda = sigma * rho * delta
    pair_hess = sigma * sigma * rho * (1.0 - rho) * delta
    pair_lambda[~neg_mask] = 0.0
    pair_hess[~neg_mask] = 0.0

    lambdas = np.zeros(n)
    hessians = np.zeros(n)
    # negatives get +sigma*rho*delta, the positive the negated sum
    lambdas[neg_mask] = pair_lambda[neg_mask]
    lambdas[pos_rows] = -np.add.reduceat(pair_lambda, ptr[:-1])
    hessians[neg_mask] = pair_hess[neg_mask]
    hessians[pos_rows] = np.add.reduceat(pair_hess, ptr[:-1])
    return lambdas, hessians


def _boost(X, ptr, pos_rows, Xv, ptr_v, pos_rows_v, cfg, grad_fn, registry_version):
    """Boosting loop shared by both objectives.

    grad_fn(scores) -> (lambdas, hessians, loss_fn) where loss_fn re-scores
    the round's own objective, so loss_before/loss_after track whether each
    Newton step actually descended. Stops once the validation median
    FirstHit has not improved for early_stopping_rounds.
    """
    n = X.shape[0]
    root_order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T).astype(np.int32)
    n_feat = X.shape[1]
    root_vals = np.ascontiguousarray(X.T)[np.arange(n_feat)[:, None], root_order]
    scores = np.zeros(n)
    val_scores = np.zeros(Xv.shape[0]) if Xv is not None else None

    trees: List[TreeNode] = []
    loss_before: List[float] = []
    loss_after: List[float] = []
    val_fh_history: List[float] = []
    best_fh = np.inf
    best_round = -1

    for t in range(cfg.n_trees):
        lambdas, hessians, loss_fn = grad_fn(scores)
        loss_before.append(loss_fn(scores))
        tree, assignments = _fit_tree(X, -lambdas, hessians, cfg, root_order, root_vals)
        trees.append(tree)
        for rows, value in assignments:
            scores[rows] += cfg.learning_rate * value
        loss_after.append(loss_fn(scores))
        if val_scores is not None:
            val_scores += cfg.learning_rate * _apply_tree(tree, Xv)
            fh = _median_fh(val_scores, ptr_v, pos_rows_v)
            val_fh_history.append(fh)
            if fh < best_fh:
                best_fh = fh
                best_round = t
            elif t - best_round >= cfg.early_stopping_rounds:
                break

    model = RankingModel(
        trees=trees,
        learning_rate=cfg.learning_rate,
        registry_version=registry_version,
        hyperparameters=cfg.as_dict(),
        train_report={
            "n_trees_fit": len(trees),
            "loss_before": loss_before,
            "loss_after": loss_after,
            "val_fh_history": val_fh_history,
            "best_round": best_round,
        },
    )
    return model


def train_lambdamart(train, val, cfg: TrainConfig, registry_version: str = "") -> RankingModel:
    """Boosted LambdaRank from (feature-matrix, positive-index) lists.

    Per round, each list pairs its positive with every negative using the
    delta-NDCG of swapping their current ranks; a regression tree is fit to
    the accumulated gradients and leaf values take the Newton step. Early
    stopping monitors the validation median FirstHit.
    """
    cfg.validate()
    X, ptr, pos_rows = _stack_lists(train, "train")
    Xv = ptr_v = pos_rows_v = None
    if val:
        Xv, ptr_v, pos_rows_v = _stack_lists(val, "validation")

    def grad_fn(scores):
        delta, pos_of_row = _pair_deltas(scores, ptr, pos_rows)
        lambdas, hessians = _lambda_gradients(scores, delta, pos_of_row, ptr, pos_rows, cfg.sigma)

        def loss_fn(s):
            return _weighted_pair_loss(s, delta, pos_of_row, pos_rows, cfg.sigma)

        return lambdas, hessians, loss_fn

    return _boost(X, ptr, pos_rows, Xv, ptr_v, pos_rows_v, cfg, grad_fn, registry_version)


def train_pointwise_gbt(train, val, cfg: TrainConfig, registry_version: str = "") -> RankingModel:
    """Pointwise gradient-boosted classifier on the pooled 0/1 labels;
    the same tree engine with logistic-loss gradients. Evaluation baseline."""
    cfg.validate()
    X, ptr, pos_rows = _stack_lists(train, "train")
    Xv = ptr_v = pos_rows_v = None
    if val:
        Xv, ptr_v, pos_rows_v = _stack_lists(val, "validation")
    y = np.zeros(X.shape[0])
    y[pos_rows] = 1.0

    def grad_fn(scores):
        p = 1.0 / (1.0 + np.exp(-np.clip(scores, -_EXP_CLAMP, _EXP_CLAMP)))
        grad = p - y
        hess = np.maximum(p * (1.0 - p), 1e-12)

        def loss_fn(s):
            return float(np.sum(np.logaddexp(0.0, s) - y * s))

        return grad, hess, loss_fn

    if cfg.objective == "lambdarank":
        cfg = TrainConfig(**{**cfg.as_dict(), "objective": "pointwise_logloss"})
    return _boost(X, ptr, pos_rows, Xv, ptr_v, pos_rows_v, cfg, grad_fn, registry_version)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _node_to_obj(node: TreeNode) -> Dict:
    if node.is_leaf:
        return {"value": node.value}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_obj(node.left),
        "right": _node_to_obj(node.right),
    }


def _node_from_obj(obj: Dict) -> TreeNode:
    if "value" in obj and "feature" not in obj:
        return TreeNode(value=float(obj["value"]))
    return TreeNode(
        feature=int(obj["feature"]),
        threshold=float(obj["threshold"]),
        left=_node_from_obj(obj["left"]),
        right=_node_from_obj(obj["right"]),
    )


def save_model(model: RankingModel, path) -> None:
    doc = {
        "format": "pfirec-model",
        "format_version": 1,
        "registry_version": model.registry_version,
        "learning_rate": model.learning_rate,
        "hyperparameters": model.hyperparameters,
        "n_trees": len(model.trees),
        "trees": [_node_to_obj(t) for t in model.trees],
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8")


def load_model(path, registry_version: Optional[str] = None) -> RankingModel:
    """Load a model JSON; refuses when the stored registry_version does not
    match the expected one."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != "pfirec-model":
        raise ValueError(f"{path}: not a pfirec model file")
    stored = doc.get("registry_version", "")
    if registry_version is not None and stored != registry_version:
        raise RegistryMismatchError(
            f"model registry {stored!r} does not match the live registry {registry_version!r}"
        )
    return RankingModel(
        trees=[_node_from_obj(t) for t in doc.get("trees", [])],
        learning_rate=float(doc.get("learning_rate", 0.1)),
        registry_version=stored,
        hyperparameters=doc.get("hyperparameters", {}),
    )
