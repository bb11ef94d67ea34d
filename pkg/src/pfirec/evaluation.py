"""Longitudinal evaluation: chronological folds, sliding windows, R@k and
FirstHit metrics, feature-group ablation, and cross-project validation."""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .corpus import Corpus, build_candidate_lists
from .features import (
    FeatureExtractor,
    FeaturizedList,
    build_registry,
    featurize_lists,
)
from .ltr import TrainConfig, predict_matrix, baseline_random, baseline_gfirandom, train_lambdamart, train_pointwise_gbt
from .simtext import EmbeddingStore

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "WindowMetrics",
    "EvalReport",
    "recall_at_k",
    "first_hit",
    "chronological_folds",
    "sliding_windows",
    "run_experiment",
    "ablation",
    "cross_project",
]

RECALL_KS = (1, 3, 5, 10)
METRIC_NAMES = ("r_at_1", "r_at_3", "r_at_5", "r_at_10", "fh_median")

MODEL_KINDS = ("lambdamart", "pointwise", "random", "gfirandom")


def recall_at_k(ranked_ids: Sequence[str], positive_id: str, k: int) -> int:
    """1 iff the positive id appears among the first k ranked ids."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 1 if positive_id in ranked_ids[:k] else 0


def first_hit(ranked_ids: Sequence[str], positive_id: str) -> int:
    """1-based rank of the positive id."""
    for i, issue_id in enumerate(ranked_ids):
        if issue_id == positive_id:
            return i + 1
    raise ValueError(f"positive {positive_id!r} not present in the ranking")


def chronological_folds(lists: Sequence, n_folds: int = 20, order: str = "asc") -> List[List]:
    """Sort by cutoff and split into n_folds equal folds, remainder in the
    last fold. Items need a ``cutoff`` attribute."""
    if n_folds < 1:
        raise ValueError("n_folds must be >= 1")
    if order not in ("asc", "desc"):
        raise ValueError("order must be 'asc' or 'desc'")
    ordered = sorted(lists, key=lambda cl: cl.cutoff, reverse=(order == "desc"))
    size = len(ordered) // n_folds
    folds = []
    for i in range(n_folds):
        start = i * size
        end = start + size if i < n_folds - 1 else len(ordered)
        folds.append(ordered[start:end])
    return folds


def sliding_windows(folds: Sequence[Sequence]) -> List[Tuple[int, List, List, List]]:
    """(T, train, val, test) for T = 3..n_folds: train is folds 1..T-2
    flattened, validation fold T-1, test fold T."""
    if len(folds) < 3:
        raise ValueError("need at least 3 folds for a sliding window")
    windows = []
    for t in range(3, len(folds) + 1):
        train = [cl for fold in folds[: t - 2] for cl in fold]
        windows.append((t, train, list(folds[t - 2]), list(folds[t - 1])))
    return windows


# ---------------------------------------------------------------------------
# Experiment configuration and report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    train: TrainConfig = TrainConfig()
    model: str = "lambdamart"
    n_folds: int = 20
    fold_order: str = "asc"
    drop_group: Optional[str] = None
    min_candidates: int = 10
    seed: int = 0
    jobs: int = 1

    def validate(self) -> None:
        if self.model not in MODEL_KINDS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODEL_KINDS}")
        if self.fold_order not in ("asc", "desc"):
            raise ValueError("fold_order must be 'asc' or 'desc'")
        if self.model in ("lambdamart", "pointwise"):
            self.train.validate()

    def as_dict(self) -> Dict:
        return {
            "train": self.train.as_dict(),
            "model": self.model,
            "n_folds": self.n_folds,
            "fold_order": self.fold_order,
            "drop_group": self.drop_group,
            "min_candidates": self.min_candidates,
            "seed": self.seed,
        }


@dataclass
class WindowMetrics:
    label: str
    n_lists: int
    r_at: Dict[int, float]
    fh_median: float

    def metric(self, name: str) -> float:
        if name == "fh_median":
            return self.fh_median
        return self.r_at[int(name.rsplit("_", 1)[1])]


@dataclass
class EvalReport:
    windows: List[WindowMetrics]
    aggregate_mean: Dict[str, float]
    aggregate_median: Dict[str, float]
    config: Dict
    raw_ranks: List[Tuple[str, int, int, str]] = field(default_factory=list)

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.config, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def to_csv(self) -> str:
        lines = [f"# config_hash={self.config_hash} seed={self.config.get('seed', 0)}"]
        lines.append("window,n_lists," + ",".join(METRIC_NAMES))
        for w in self.windows:
            values = ",".join(repr(w.metric(m)) for m in METRIC_NAMES)
            lines.append(f"{w.label},{w.n_lists},{values}")
        for name, agg in (("aggregate_mean", self.aggregate_mean), ("aggregate_median", self.aggregate_median)):
            values = ",".join(repr(agg[m]) for m in METRIC_NAMES)
            lines.append(f"{name},{sum(w.n_lists for w in self.windows)},{values}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "config": self.config,
            "config_hash": self.config_hash,
            "windows": [
                {
                    "window": w.label,
                    "n_lists": w.n_lists,
                    **{m: w.metric(m) for m in METRIC_NAMES},
                }
                for w in self.windows
            ],
            "aggregate": {"mean": self.aggregate_mean, "median": self.aggregate_median},
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def ranks_csv(self) -> str:
        lines = [f"# config_hash={self.config_hash} seed={self.config.get('seed', 0)}"]
        lines.append("list_id,positive_rank,list_size,model_id")
        for list_id, pos_rank, size, model_id in self.raw_ranks:
            lines.append(f"{list_id},{pos_rank},{size},{model_id}")
        return "\n".join(lines) + "\n"


def _aggregate(windows: Sequence[WindowMetrics]) -> Tuple[Dict[str, float], Dict[str, float]]:
    mean = {}
    median = {}
    for name in METRIC_NAMES:
        values = [w.metric(name) for w in windows]
        mean[name] = float(np.mean(values)) if values else 0.0
        median[name] = float(np.median(values)) if values else 0.0
    return mean, median


# ---------------------------------------------------------------------------
# Running models over featurized lists
# ---------------------------------------------------------------------------

def _mask_columns(feats: Sequence[FeaturizedList], columns: np.ndarray) -> List[FeaturizedList]:
    return [
        FeaturizedList(
            fi_id=fl.fi_id,
            project_id=fl.project_id,
            cutoff=fl.cutoff,
            issue_ids=fl.issue_ids,
            created_at=fl.created_at,
            x=np.ascontiguousarray(fl.x[:, columns]),
            positive_index=fl.positive_index,
        )
        for fl in feats
    ]


def _list_seed(base_seed: int, fi_id: str) -> int:
    digest = hashlib.sha256(f"{base_seed}:{fi_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _rank_one(fl: FeaturizedList, model, cfg: ExperimentConfig, corpus: Corpus) -> List[str]:
    if cfg.model == "random":
        return baseline_random(fl.issue_ids, _list_seed(cfg.seed, fl.fi_id))
    if cfg.model == "gfirandom":
        items = [(cid, corpus.issues[cid].is_gfi_labeled) for cid in fl.issue_ids]
        return baseline_gfirandom(items, _list_seed(cfg.seed, fl.fi_id))
    scores = predict_matrix(model, fl.x)
    keyed = sorted(
        range(len(fl.issue_ids)),
        key=lambda i: (-scores[i], fl.created_at[i], fl.issue_ids[i]),
    )
    return [fl.issue_ids[i] for i in keyed]


def _train_model(train_feats, val_feats, cfg: ExperimentConfig, registry_version: str):
    train_data = [(fl.x, fl.positive_index) for fl in train_feats]
    val_data = [(fl.x, fl.positive_index) for fl in val_feats]
    if cfg.model == "lambdamart":
        return train_lambdamart(train_data, val_data, cfg.train, registry_version)
    if cfg.model == "pointwise":
        return train_pointwise_gbt(train_data, val_data, cfg.train, registry_version)
    return None


def _evaluate_window(
    label: str,
    train_feats: List[FeaturizedList],
    val_feats: List[FeaturizedList],
    test_feats: List[FeaturizedList],
    cfg: ExperimentConfig,
    corpus: Corpus,
    registry_version: str,
    raw_ranks: List[Tuple[str, int, int, str]],
) -> WindowMetrics:
    model = None
    if cfg.model in ("lambdamart", "pointwise"):
        model = _train_model(train_feats, val_feats, cfg, registry_version)
    model_id = f"{cfg.model}-{label}"
    hits = {k: 0 for k in RECALL_KS}
    fhs = []
    for fl in test_feats:
        ranked = _rank_one(fl, model, cfg, corpus)
        fh = first_hit(ranked, fl.fi_id)
        fhs.append(fh)
        for k in RECALL_KS:
            hits[k] += recall_at_k(ranked, fl.fi_id, k)
        raw_ranks.append((fl.fi_id, fh, len(ranked), model_id))
    n = len(test_feats)
    return WindowMetrics(
        label=label,
        n_lists=n,
        r_at={k: hits[k] / n for k in RECALL_KS},
        fh_median=float(np.median(fhs)),
    )


def _prepare_features(
    corpus: Corpus,
    cfg: ExperimentConfig,
    store: Optional[EmbeddingStore],
    features: Optional[Sequence[FeaturizedList]],
) -> Tuple[List[FeaturizedList], str]:
    registry = build_registry()
    if features is None:
        lists = corpus.lists or build_candidate_lists(corpus, cfg.min_candidates)
        extractor = FeatureExtractor(corpus, store, registry=registry)
        features = featurize_lists(corpus, lists=lists, extractor=extractor, jobs=cfg.jobs)
    feats = list(features)
    if cfg.drop_group is not None:
        masked = registry.drop_group(cfg.drop_group)
        keep = np.asarray(
            [i for i, e in enumerate(registry.entries) if e.group != cfg.drop_group]
        )
        feats = _mask_columns(feats, keep)
        return feats, masked.version
    return feats, registry.version


def check_no_leakage(train_feats, val_feats, test_feats) -> None:
    """Raise when any train/val cutoff exceeds the earliest test cutoff."""
    boundary = min(fl.cutoff for fl in test_feats)
    worst = max(fl.cutoff for fl in [*train_feats, *val_feats])
    if worst > boundary:
        raise RuntimeError(
            f"temporal leakage: train/val cutoff {worst.isoformat()} exceeds "
            f"test boundary {boundary.isoformat()}"
        )


def run_experiment(
    corpus: Corpus,
    cfg: ExperimentConfig,
    *,
    store: Optional[EmbeddingStore] = None,
    features: Optional[Sequence[FeaturizedList]] = None,
) -> EvalReport:
    """Featurize, train per sliding window, rank every test list.

    ``features`` short-circuits featurization (pass the full-registry
    matrices; group masking still applies). With fold_order="desc" (the
    inverted reading of the protocol) the anti-leakage check is skipped,
    since test folds then precede training in time by construction.
    """
    cfg.validate()
    feats, registry_version = _prepare_features(corpus, cfg, store, features)
    folds = chronological_folds(feats, cfg.n_folds, cfg.fold_order)
    if any(not fold for fold in folds):
        raise ValueError(
            f"{len(feats)} lists cannot fill {cfg.n_folds} folds; lower n_folds"
        )
    windows = sliding_windows(folds)
    if cfg.fold_order == "desc":
        log.warning("fold_order=desc: training follows testing in time; leakage check disabled")

    raw_ranks: List[Tuple[str, int, int, str]] = []
    results = []
    for t, train_feats, val_feats, test_feats in windows:
        if cfg.fold_order == "asc":
            check_no_leakage(train_feats, val_feats, test_feats)
        results.append(
            _evaluate_window(
                f"T{t}", train_feats, val_feats, test_feats, cfg, corpus,
                registry_version, raw_ranks,
            )
        )
    mean, median = _aggregate(results)
    return EvalReport(
        windows=results,
        aggregate_mean=mean,
        aggregate_median=median,
        config=cfg.as_dict(),
        raw_ranks=raw_ranks,
    )


def ablation(
    corpus: Corpus,
    cfg: ExperimentConfig,
    drop_group: str,
    *,
    store: Optional[EmbeddingStore] = None,
    features: Optional[Sequence[FeaturizedList]] = None,
) -> EvalReport:
    """run_experiment with one feature group masked at featurize time."""
    return run_experiment(corpus, replace(cfg, drop_group=drop_group), store=store, features=features)


def cross_project(
    corpus: Corpus,
    cfg: ExperimentConfig,
    n_folds: int = 10,
    *,
    store: Optional[EmbeddingStore] = None,
    features: Optional[Sequence[FeaturizedList]] = None,
) -> EvalReport:
    """Project-partitioned cross-validation.

    Projects are shuffled (seeded) into n_folds groups; each fold's lists
    are the test set while the remaining lists split chronologically 9:1
    into train/validation.
    """
    cfg.validate()
    feats, registry_version = _prepare_features(corpus, cfg, store, features)
    project_ids = sorted({fl.project_id for fl in feats})
    if len(project_ids) < n_folds:
        raise ValueError(f"{len(project_ids)} projects cannot fill {n_folds} folds")
    rng = random.Random(cfg.seed)
    shuffled = list(project_ids)
    rng.shuffle(shuffled)
    base, extra = divmod(len(shuffled), n_folds)
    fold_projects = []
    start = 0
    for i in range(n_folds):
        size = base + (1 if i < extra else 0)
        fold_projects.append(set(shuffled[start : start + size]))
        start += size

    raw_ranks: List[Tuple[str, int, int, str]] = []
    results = []
    for i, test_projects in enumerate(fold_projects, start=1):
        test_feats = [fl for fl in feats if fl.project_id in test_projects]
        rest = sorted(
            (fl for fl in feats if fl.project_id not in test_projects),
            key=lambda fl: fl.cutoff,
        )
        if not test_feats or len(rest) < 2:
            log.warning("cross-project fold %d skipped (no test lists or too little data)", i)
            continue
        n_val = max(1, len(rest) // 10)
        train_feats = rest[:-n_val]
        val_feats = rest[-n_val:]
        results.append(
            _evaluate_window(
                f"fold{i}", train_feats, val_feats, test_feats, cfg, corpus,
                registry_version, raw_ranks,
            )
        )
    mean, median = _aggregate(results)
    return EvalReport(
        windows=results,
        aggregate_mean=mean,
        aggregate_median=median,
        config={**cfg.as_dict(), "protocol": "cross_project", "cross_folds": n_folds},
        raw_ranks=raw_ranks,
    )
