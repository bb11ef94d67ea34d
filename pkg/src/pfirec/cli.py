"""Command-line surface for the pipeline.

Reproducibility contract: every output embeds the config hash and seed
(as a header comment or sibling metadata), and re-running a command with
the same config and seed produces byte-identical files.

Exit codes:
  0  success
  1  internal error
  2  bad usage or config
  3  missing input file
  4  schema or format violation in an input
  5  feature-registry mismatch between model and package
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .corpus import (
    CorpusFormatError,
    PlantedSignal,
    build_candidate_lists,
    generate_synthetic_corpus,
    load_corpus,
    write_corpus,
)
from .evaluation import ExperimentConfig, ablation, cross_project, run_experiment
from .features import (
    FeatureExtractor,
    build_registry,
    corpus_plain_texts,
    featurize_lists,
    load_label_map,
    load_lexicon,
)
from .ltr import (
    RegistryMismatchError,
    TrainConfig,
    load_model,
    predict_matrix,
    save_model,
    train_lambdamart,
    train_pointwise_gbt,
)
from .simtext import EmbeddingFormatError, load_embeddings
from .textprep import load_stopwords

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_SCHEMA = 4
EXIT_REGISTRY = 5


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


_CONFIG_KEYS = {
    "issues": str, "developers": str, "projects": str, "lists": str,
    "embeddings": str, "out_dir": str, "label_map": str, "stopwords": str, "lexicon": str,
    "seed": int, "model": str, "n_folds": int, "min_candidates": int,
    "fold_order": str, "drop_group": str, "cross_folds": int,
    "n_trees": int, "max_leaves": int, "min_samples_leaf": int,
    "learning_rate": float, "sigma": float, "early_stopping_rounds": int,
    "jobs": int,
}


@dataclass
class RunConfig:
    """Flat key=value config; command-line flags override file values."""

    values: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def load(cls, path: Optional[str], overrides: Dict[str, object]) -> "RunConfig":
        values: Dict[str, object] = {}
        if path:
            file_path = Path(path)
            if not file_path.exists():
                raise CliError(EXIT_MISSING, "missing-file", f"config file not found: {path}")
            for line_no, line in enumerate(file_path.read_text(encoding="utf-8").splitlines(), 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, sep, value = line.partition("=")
                key = key.strip()
                if not sep or key not in _CONFIG_KEYS:
                    raise CliError(EXIT_USAGE, "bad-config", f"{path}:{line_no}: unknown or malformed key {key!r}")
                try:
                    values[key] = _CONFIG_KEYS[key](value.strip())
                except ValueError as exc:
                    raise CliError(EXIT_USAGE, "bad-config", f"{path}:{line_no}: {exc}") from exc
        for key, value in overrides.items():
            if value is not None:
                values[key] = value
        return cls(values)

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def require(self, key: str):
        value = self.values.get(key)
        if value is None:
            raise CliError(EXIT_USAGE, "bad-config", f"missing required option: {key}")
        return value

    def path(self, key: str, required: bool = True) -> Optional[Path]:
        value = self.require(key) if required else self.get(key)
        if value is None:
            return None
        p = Path(str(value))
        if not p.exists():
            raise CliError(EXIT_MISSING, "missing-file", f"{key} file not found: {p}")
        return p

    @property
    def hash(self) -> str:
        # out_dir only names where results land; it is not part of the run identity
        hashed = {k: str(v) for k, v in self.values.items() if k != "out_dir"}
        canonical = json.dumps(hashed, sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    @property
    def seed(self) -> int:
        return int(self.get("seed", 0))

    def train_config(self) -> TrainConfig:
        base = TrainConfig()
        return TrainConfig(
            n_trees=int(self.get("n_trees", base.n_trees)),
            max_leaves=int(self.get("max_leaves", base.max_leaves)),
            min_samples_leaf=int(self.get("min_samples_leaf", base.min_samples_leaf)),
            learning_rate=float(self.get("learning_rate", base.learning_rate)),
            sigma=float(self.get("sigma", base.sigma)),
            early_stopping_rounds=int(self.get("early_stopping_rounds", base.early_stopping_rounds)),
            seed=self.seed,
        )

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            train=self.train_config(),
            model=str(self.get("model", "lambdamart")),
            n_folds=int(self.get("n_folds", 20)),
            fold_order=str(self.get("fold_order", "asc")),
            drop_group=self.get("drop_group"),
            min_candidates=int(self.get("min_candidates", 10)),
            seed=self.seed,
            jobs=int(self.get("jobs", 1)),
        )


def _load_inputs(cfg: RunConfig, need_lists: bool = False):
    issues = cfg.path("issues")
    developers = cfg.path("developers")
    projects = cfg.path("projects")
    lists = cfg.path("lists", required=False)
    corpus = load_corpus(issues, developers, projects, lists,
                         min_candidates=int(cfg.get("min_candidates", 10)))
    if not corpus.lists:
        corpus.lists.extend(
            build_candidate_lists(corpus, int(cfg.get("min_candidates", 10)))
        )
        corpus.report.counts["lists"] = len(corpus.lists)
    if need_lists and not corpus.lists:
        raise CliError(EXIT_SCHEMA, "no-lists", "corpus contains no usable candidate lists")
    return corpus


def _build_extractor(cfg: RunConfig, corpus) -> FeatureExtractor:
    store = None
    emb_path = cfg.path("embeddings", required=False)
    if emb_path is not None:
        store = load_embeddings(emb_path)
    label_map = None
    lm_path = cfg.path("label_map", required=False)
    if lm_path is not None:
        label_map = load_label_map(lm_path)
    stopwords = None
    sw_path = cfg.path("stopwords", required=False)
    if sw_path is not None:
        stopwords = load_stopwords(sw_path)
    lexicon = None
    lex_path = cfg.path("lexicon", required=False)
    if lex_path is not None:
        lexicon = load_lexicon(lex_path)
    return FeatureExtractor(corpus, store, label_map=label_map, stopwords=stopwords,
                            lexicon=lexicon)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(str(cfg.require("out_dir")))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(path: Path, cfg: RunConfig, extra: Optional[dict] = None) -> None:
    meta = {"config_hash": cfg.hash, "seed": cfg.seed}
    if extra:
        meta.update(extra)
    path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_ingest(cfg: RunConfig) -> int:
    corpus = _load_inputs(cfg)
    out = _out_dir(cfg)
    report = corpus.report
    doc = {
        "config_hash": cfg.hash,
        "seed": cfg.seed,
        "counts": report.counts,
        "rejected": report.rejected,
        "dropped_lists": report.dropped_lists,
        "dangling_artifacts": report.dangling_artifacts,
        "dangling_repos": report.dangling_repos,
        "warnings": report.warnings,
    }
    (out / "load_report.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"ingest ok: {report.summary()}")
    return EXIT_OK


def _cmd_featurize(cfg: RunConfig, dump_texts: Optional[str]) -> int:
    corpus = _load_inputs(cfg, need_lists=dump_texts is None)
    out = _out_dir(cfg)
    extractor = _build_extractor(cfg, corpus)
    if dump_texts is not None:
        texts = corpus_plain_texts(corpus)
        target = out / dump_texts
        with open(target, "w", encoding="utf-8") as fh:
            for doc_id, text in texts.items():
                fh.write(json.dumps({"id": doc_id, "text": text}, sort_keys=True, ensure_ascii=False) + "\n")
        _write_meta(Path(str(target) + ".meta.json"), cfg, {"n_documents": len(texts)})
        print(f"dumped {len(texts)} plain texts to {target}")
        return EXIT_OK
    feats = featurize_lists(corpus, extractor=extractor, jobs=int(cfg.get("jobs", 1)))
    x = np.vstack([fl.x for fl in feats])
    sizes = np.asarray([fl.x.shape[0] for fl in feats])
    np.savez_compressed(
        out / "features.npz",
        x=x,
        list_sizes=sizes,
        positive_index=np.asarray([fl.positive_index for fl in feats]),
        list_ids=np.asarray([fl.fi_id for fl in feats]),
        issue_ids=np.asarray([cid for fl in feats for cid in fl.issue_ids]),
        feature_names=np.asarray(extractor.registry.names),
    )
    _write_meta(out / "features.meta.json", cfg, {"registry_version": extractor.registry.version,
                                                  "n_lists": len(feats)})
    print(f"featurized {len(feats)} lists -> {out / 'features.npz'}")
    return EXIT_OK


def _cmd_train(cfg: RunConfig) -> int:
    corpus = _load_inputs(cfg, need_lists=True)
    out = _out_dir(cfg)
    extractor = _build_extractor(cfg, corpus)
    feats = featurize_lists(corpus, extractor=extractor, jobs=int(cfg.get("jobs", 1)))
    feats.sort(key=lambda fl: fl.cutoff)
    n_val = max(1, len(feats) // 10)
    train_feats, val_feats = feats[:-n_val], feats[-n_val:]
    data = lambda fs: [(fl.x, fl.positive_index) for fl in fs]
    model_kind = str(cfg.get("model", "lambdamart"))
    trainer = {"lambdamart": train_lambdamart, "pointwise": train_pointwise_gbt}.get(model_kind)
    if trainer is None:
        raise CliError(EXIT_USAGE, "bad-config", f"model {model_kind!r} is not trainable")
    model = trainer(data(train_feats), data(val_feats), cfg.train_config(), extractor.registry.version)
    save_model(model, out / "model.json")
    _write_meta(out / "model.meta.json", cfg, {
        "registry_version": extractor.registry.version,
        "n_trees_fit": model.train_report.get("n_trees_fit"),
    })
    print(f"trained {model_kind} with {len(model.trees)} trees -> {out / 'model.json'}")
    return EXIT_OK


def _cmd_rank(cfg: RunConfig, model_path: str, list_id: str) -> int:
    corpus = _load_inputs(cfg, need_lists=True)
    registry = build_registry()
    model_file = Path(model_path)
    if not model_file.exists():
        raise CliError(EXIT_MISSING, "missing-file", f"model file not found: {model_path}")
    model = load_model(model_file, registry.version)
    target = next((cl for cl in corpus.lists if cl.fi_id == list_id), None)
    if target is None:
        raise CliError(EXIT_USAGE, "bad-config", f"no candidate list with fi_id {list_id!r}")
    extractor = _build_extractor(cfg, corpus)
    fl = extractor.featurize_list(target)
    scores = predict_matrix(model, fl.x)
    order = sorted(
        range(len(fl.issue_ids)),
        key=lambda i: (-scores[i], fl.created_at[i], fl.issue_ids[i]),
    )
    for i in order:
        print(f"{fl.issue_ids[i]}\t{scores[i]!r}")
    return EXIT_OK


def _write_report(report, out: Path, prefix: str) -> None:
    (out / f"{prefix}.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / f"{prefix}.json").write_text(report.to_json(), encoding="utf-8")
    (out / f"{prefix}_ranks.csv").write_text(report.ranks_csv(), encoding="utf-8")


def _cmd_evaluate(cfg: RunConfig) -> int:
    corpus = _load_inputs(cfg, need_lists=True)
    extractor = _build_extractor(cfg, corpus)
    out = _out_dir(cfg)
    feats = featurize_lists(corpus, extractor=extractor, jobs=int(cfg.get("jobs", 1)))
    report = run_experiment(corpus, cfg.experiment_config(), features=feats)
    _write_report(report, out, "report")
    agg = report.aggregate_mean
    print(
        f"evaluate ok: windows={len(report.windows)} "
        f"R@1={agg['r_at_1']:.4f} FH_median={report.aggregate_median['fh_median']:.1f}"
    )
    return EXIT_OK


def _cmd_ablate(cfg: RunConfig, drop_group: str) -> int:
    corpus = _load_inputs(cfg, need_lists=True)
    extractor = _build_extractor(cfg, corpus)
    out = _out_dir(cfg)
    feats = featurize_lists(corpus, extractor=extractor, jobs=int(cfg.get("jobs", 1)))
    report = ablation(corpus, cfg.experiment_config(), drop_group, features=feats)
    _write_report(report, out, f"report_no{drop_group.lower()}")
    print(f"ablate ok: dropped={drop_group} R@1={report.aggregate_mean['r_at_1']:.4f}")
    return EXIT_OK


def _cmd_crossproject(cfg: RunConfig) -> int:
    corpus = _load_inputs(cfg, need_lists=True)
    extractor = _build_extractor(cfg, corpus)
    out = _out_dir(cfg)
    feats = featurize_lists(corpus, extractor=extractor, jobs=int(cfg.get("jobs", 1)))
    report = cross_project(corpus, cfg.experiment_config(), int(cfg.get("cross_folds", 10)),
                           features=feats)
    _write_report(report, out, "report_crossproject")
    print(f"crossproject ok: folds={len(report.windows)} R@1={report.aggregate_mean['r_at_1']:.4f}")
    return EXIT_OK


def _cmd_synth(cfg: RunConfig, args) -> int:
    planted = None
    if args.plant_feature:
        planted = PlantedSignal(feature=args.plant_feature, noise=args.plant_noise)
    corpus = generate_synthetic_corpus(
        seed=cfg.seed,
        n_projects=args.n_projects,
        n_lists=args.n_lists,
        median_list_size=args.median_size,
        planted_signal=planted,
    )
    out = _out_dir(cfg)
    paths = write_corpus(corpus, out)
    _write_meta(out / "synth.meta.json", cfg, {"counts": corpus.report.counts})
    print(f"synth ok: {corpus.report.summary()} -> {out}")
    return EXIT_OK


def _cmd_registry(cfg: RunConfig) -> int:
    registry = build_registry()
    print("name,group,index")
    for i, entry in enumerate(registry.entries):
        print(f"{entry.name},{entry.group},{i}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file; flags override it")
    parser.add_argument("--issues", help="issues.jsonl path")
    parser.add_argument("--developers", help="developers.jsonl path")
    parser.add_argument("--projects", help="projects.jsonl path")
    parser.add_argument("--lists", help="lists.jsonl path (optional; lists are rebuilt when absent)")
    parser.add_argument("--embeddings", help="PFIEMB1 embedding file (default: built-in hashed TF-IDF)")
    parser.add_argument("--label-map", dest="label_map", help="label category pattern file")
    parser.add_argument("--stopwords", help="stop-word list override")
    parser.add_argument("--lexicon", help="sentiment lexicon override (term<TAB>polarity)")
    parser.add_argument("--out-dir", dest="out_dir", help="output directory")
    parser.add_argument("--seed", type=int, help="seed recorded in every output (default 0)")
    parser.add_argument("--jobs", type=int, help="worker count; outputs are independent of it")
    parser.add_argument("--model", choices=["lambdamart", "pointwise", "random", "gfirandom"])
    parser.add_argument("--n-folds", dest="n_folds", type=int, help="chronological folds (default 20)")
    parser.add_argument("--min-candidates", dest="min_candidates", type=int)
    parser.add_argument("--fold-order", dest="fold_order", choices=["asc", "desc"])
    parser.add_argument("--n-trees", dest="n_trees", type=int)
    parser.add_argument("--max-leaves", dest="max_leaves", type=int)
    parser.add_argument("--min-samples-leaf", dest="min_samples_leaf", type=int)
    parser.add_argument("--learning-rate", dest="learning_rate", type=float)
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--early-stopping-rounds", dest="early_stopping_rounds", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pfirec",
        description="Personalized first-issue ranking pipeline.",
        epilog=(
            "exit codes: 0 ok, 1 internal error, 2 bad usage/config, "
            "3 missing file, 4 schema/format violation, 5 registry mismatch"
        ),
    )
    parser.add_argument("--version", action="version", version=f"pfirec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    commands = {
        "ingest": "validate the JSONL dumps and write a load report",
        "featurize": "write feature matrices per candidate list (or dump plain texts)",
        "train": "train a ranking model on the corpus (chronological 9:1 train/val split)",
        "rank": "rank one candidate list with a trained model",
        "evaluate": "run the sliding-window experiment and write reports",
        "ablate": "evaluate with one feature group removed",
        "crossproject": "project-partitioned cross-validation",
        "synth": "generate a seeded synthetic corpus",
        "registry": "print the feature registry as CSV",
    }
    parsers = {}
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        parsers[name] = p

    parsers["featurize"].add_argument(
        "--dump-texts", dest="dump_texts", metavar="FILE",
        help="write {id, text} JSONL of all embeddable plain texts instead of matrices",
    )
    parsers["rank"].add_argument("--model-file", required=True, help="trained model JSON")
    parsers["rank"].add_argument("--list-id", required=True, help="fi_id of the candidate list to rank")
    parsers["ablate"].add_argument(
        "--drop", required=True,
        choices=["Cont", "Dom", "Gener", "Act", "Senti", "IssCont", "IssBack"],
        help="feature group to remove",
    )
    parsers["crossproject"].add_argument("--cross-folds", dest="cross_folds", type=int)
    parsers["synth"].add_argument("--n-projects", dest="n_projects", type=int, default=10)
    parsers["synth"].add_argument("--n-lists", dest="n_lists", type=int, default=100)
    parsers["synth"].add_argument("--median-size", dest="median_size", type=int, default=32)
    parsers["synth"].add_argument(
        "--plant-feature", dest="plant_feature",
        help="feature carrying the planted signal (e.g. issback_reporter_max_stars)",
    )
    parsers["synth"].add_argument("--plant-noise", dest="plant_noise", type=float, default=0.01)
    return parser


def _overrides_from_args(args: argparse.Namespace) -> Dict[str, object]:
    return {key: getattr(args, key, None) for key in _CONFIG_KEYS}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(getattr(args, "config", None), _overrides_from_args(args))
        if args.command == "ingest":
            return _cmd_ingest(cfg)
        if args.command == "featurize":
            return _cmd_featurize(cfg, args.dump_texts)
        if args.command == "train":
            return _cmd_train(cfg)
        if args.command == "rank":
            return _cmd_rank(cfg, args.model_file, args.list_id)
        if args.command == "evaluate":
            return _cmd_evaluate(cfg)
        if args.command == "ablate":
            return _cmd_ablate(cfg, args.drop)
        if args.command == "crossproject":
            return _cmd_crossproject(cfg)
        if args.command == "synth":
            return _cmd_synth(cfg, args)
        if args.command == "registry":
            return _cmd_registry(cfg)
        raise CliError(EXIT_USAGE, "bad-usage", f"unknown command {args.command!r}")
    except CliError as exc:
        print(f"pfirec: error code={exc.code} kind={exc.kind}: {exc}", file=sys.stderr)
        return exc.code
    except FileNotFoundError as exc:
        print(f"pfirec: error code={EXIT_MISSING} kind=missing-file: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except RegistryMismatchError as exc:
        print(f"pfirec: error code={EXIT_REGISTRY} kind=registry-mismatch: {exc}", file=sys.stderr)
        return EXIT_REGISTRY
    except (CorpusFormatError, EmbeddingFormatError) as exc:
        print(f"pfirec: error code={EXIT_SCHEMA} kind=format: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ValueError as exc:
        print(f"pfirec: error code={EXIT_SCHEMA} kind=invalid-value: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except Exception as exc:  # pragma: no cover - last resort
        print(f"pfirec: error code={EXIT_INTERNAL} kind=internal: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
