"""Feature extraction for (candidate issue, newcomer) pairs.

Seven feature groups: the newcomer's content preference, domain
preference, general OSS experience, activeness and sentiment, plus the
candidate issue's content and background. The registry fixes the order
and grouping of all features; ablation masks whole groups.
"""

from __future__ import annotations

import ast
import hashlib
import re
import statistics
from dataclasses import dataclass
from datetime import datetime, timedelta
from importlib import resources
from pathlib import Path
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .corpus import Corpus, CandidateList, DeveloperProfile, IssueRecord
from .simtext import EmbeddingStore, fit_hashed_tfidf
from .textprep import TokenSet, extract_plain_text, normalize

__all__ = [
    "FeatureEntry",
    "FeatureRegistry",
    "LabelCategoryMap",
    "FeatureExtractor",
    "FeaturizedList",
    "build_registry",
    "sentiment_polarity",
    "readability",
    "count_markdown_constructs",
    "load_lexicon",
    "default_lexicon",
    "load_label_map",
    "default_label_map",
    "corpus_plain_texts",
    "default_store",
    "featurize_lists",
]

FEATURE_GROUPS = ("Cont", "Dom", "Gener", "Act", "Senti", "IssCont", "IssBack")

LABEL_CATEGORIES = (
    "Bug", "Documentation", "Test", "Build", "Enhancement", "Coding",
    "New Feature", "Newcomer-friendly", "Medium Difficulty", "Difficult",
    "Triaged", "Untriaged",
)

# feature-name prefix -> developer event kind
ARTIFACT_KINDS = (
    ("prs", "pr"),
    ("commits", "commit"),
    ("resolved_issues", "issue_resolved"),
    ("reported_issues", "issue_reported"),
    ("commented_issues", "issue_commented"),
    ("reviewed_prs", "pr_review"),
)

ACTIVENESS_WINDOWS = (30, 60, 90)

NEGATION_TOKENS = frozenset({"not", "no", "never", "cannot", "nor", "neither", "without"})

_SENT_WORD = re.compile(r"[a-z0-9]+")
_SENT_SPLIT = re.compile(r"[.!?]+")
_FENCED = re.compile(r"(```|~~~).*?\1", re.DOTALL)
_INLINE_CODE = re.compile(r"`[^`\n]*`")
_IMAGE = re.compile(r"!\[[^\]]*\]\([^)]*\)")
_URL = re.compile(r"(?:https?|ftp)://[^\s)\]>]+", re.IGNORECASE)


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")


@dataclass(frozen=True)
class FeatureEntry:
    name: str
    group: str
    description: str


class FeatureRegistry:
    """Fixed-order feature catalogue; order defines vector layout."""

    def __init__(self, entries: Sequence[FeatureEntry]):
        names = [e.name for e in entries]
        if len(set(names)) != len(names):
            raise ValueError("duplicate feature names in registry")
        self.entries: Tuple[FeatureEntry, ...] = tuple(entries)
        self.names: Tuple[str, ...] = tuple(names)
        self._index = {name: i for i, name in enumerate(names)}
        digest = hashlib.sha256(
            ";".join(f"{e.name}|{e.group}" for e in entries).encode()
        ).hexdigest()
        self.version = f"v1:{digest[:12]}"

    def __len__(self) -> int:
        return len(self.entries)

    def index(self, name: str) -> int:
        return self._index[name]

    def indices_of_group(self, group: str) -> List[int]:
        return [i for i, e in enumerate(self.entries) if e.group == group]

    def drop_group(self, group: str) -> "FeatureRegistry":
        if group not in FEATURE_GROUPS:
            raise ValueError(f"unknown feature group {group!r}; expected one of {FEATURE_GROUPS}")
        return FeatureRegistry([e for e in self.entries if e.group != group])


def build_registry() -> FeatureRegistry:
    entries: List[FeatureEntry] = []

    def add(name, group, desc):
        entries.append(FeatureEntry(name, group, desc))

    for prefix, _event_kind in ARTIFACT_KINDS:
        pretty = prefix.replace("_", " ")
        add(f"cont_{prefix}_cos_cum", "Cont", f"summed embedding cosine, historical {pretty} vs candidate")
        add(f"cont_{prefix}_jac_cum", "Cont", f"summed token Jaccard, historical {pretty} vs candidate")
        if prefix != "commits":
            add(f"cont_{prefix}_lab_cum", "Cont", f"historical {pretty} sharing a label with the candidate")
        add(f"cont_{prefix}_cos_avg", "Cont", f"mean embedding cosine, historical {pretty} vs candidate")
        add(f"cont_{prefix}_jac_avg", "Cont", f"mean token Jaccard, historical {pretty} vs candidate")
        if prefix != "commits":
            add(f"cont_{prefix}_lab_avg", "Cont", f"fraction of {pretty} sharing a label with the candidate")
    add("cont_lang_commits", "Cont", "commits in projects with the candidate project's primary language")

    for doc in ("description", "readme"):
        add(f"dom_{doc}_cos_cum", "Dom", f"summed cosine of project {doc}s vs candidate project {doc}")
        add(f"dom_{doc}_jac_cum", "Dom", f"summed Jaccard of project {doc}s vs candidate project {doc}")
        add(f"dom_{doc}_cos_avg", "Dom", f"mean cosine of project {doc}s vs candidate project {doc}")
        add(f"dom_{doc}_jac_avg", "Dom", f"mean Jaccard of project {doc}s vs candidate project {doc}")
    add("dom_topic_commits", "Dom", "commits in projects sharing a topic with the candidate project")
    add("dom_topic_commit_ratio", "Dom", "topic-sharing commits as a fraction of all commits")

    add("gener_commits", "Gener", "total commits before cutoff")
    add("gener_prs", "Gener", "total pull requests before cutoff")
    add("gener_pr_reviews", "Gener", "total PR reviews before cutoff")
    add("gener_repos_contributed", "Gener", "distinct repositories contributed to before cutoff")
    add("gener_issues_reported", "Gener", "total issues reported before cutoff")
    add("gener_issues_reported_in_project", "Gener", "issues reported in the candidate's project before cutoff")

    for prefix, _kind in (("commits", "commit"), ("prs", "pr"), ("issues_reported", "issue_reported")):
        for days in ACTIVENESS_WINDOWS:
            add(f"act_{prefix}_{days}d", "Act", f"{prefix.replace('_', ' ')} in the {days} days before cutoff")

    add("senti_prs_mean", "Senti", "mean sentiment polarity over historical PRs")
    add("senti_prs_median", "Senti", "median sentiment polarity over historical PRs")
    add("senti_issues_mean", "Senti", "mean sentiment polarity over reported issues")
    add("senti_issues_median", "Senti", "median sentiment polarity over reported issues")

    add("isscont_polarity", "IssCont", "sentiment polarity of the candidate title+body")
    add("isscont_flesch_reading_ease", "IssCont", "Flesch Reading Ease of the candidate text")
    add("isscont_kincaid_grade", "IssCont", "Kincaid Grade Level of the candidate text")
    add("isscont_coleman_liau", "IssCont", "Coleman-Liau index of the candidate text")
    add("isscont_ari", "IssCont", "Automated Readability Index of the candidate text")
    add("isscont_title_tokens", "IssCont", "candidate title length in tokens")
    add("isscont_body_tokens", "IssCont", "candidate body length in tokens")
    add("isscont_code_snippets", "IssCont", "fenced blocks plus inline code spans in the raw markdown")
    add("isscont_urls", "IssCont", "URLs in the raw markdown")
    add("isscont_images", "IssCont", "image constructs in the raw markdown")
    add("isscont_labels_total", "IssCont", "total number of labels")
    for cat in LABEL_CATEGORIES:
        add(f"isscont_label_{_slug(cat)}", "IssCont", f"labels matching the {cat} category")

    for stat in ("open_issues", "open_issue_ratio", "gfi_count", "gfi_ratio", "commits",
                 "prs", "closed_issues", "stars", "commit_contributors"):
        add(f"issback_{stat}", "IssBack", f"candidate project {stat.replace('_', ' ')}")
    for who in ("reporter", "owner"):
        add(f"issback_{who}_commits", "IssBack", f"{who} commits before cutoff")
        add(f"issback_{who}_prs", "IssBack", f"{who} pull requests before cutoff")
        add(f"issback_{who}_pr_reviews", "IssBack", f"{who} PR reviews before cutoff")
        add(f"issback_{who}_issues_reported", "IssBack", f"{who} reported issues before cutoff")
        add(f"issback_{who}_gfi_reported_ratio", "IssBack", f"GFI fraction of the {who}'s reported issues in the project")
        add(f"issback_{who}_max_stars", "IssBack", f"max stars over projects the {who} contributed to")
        add(f"issback_{who}_has_commits", "IssBack", f"whether the {who} has commits in the project")

    return FeatureRegistry(entries)


# ---------------------------------------------------------------------------
# Sentiment and readability scorers
# ---------------------------------------------------------------------------

_DEFAULT_LEXICON: Optional[Dict[str, float]] = None


def load_lexicon(path: str | Path) -> Dict[str, float]:
    """term<TAB>polarity file -> dict; polarities clamped to [-1, 1]."""
    lex: Dict[str, float] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        term, _, value = line.partition("\t")
        lex[term.strip().lower()] = max(-1.0, min(1.0, float(value)))
    return lex


def default_lexicon() -> Dict[str, float]:
    global _DEFAULT_LEXICON
    if _DEFAULT_LEXICON is None:
        ref = resources.files("pfirec.data").joinpath("sentiment_lexicon.tsv")
        lex: Dict[str, float] = {}
        for line in ref.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            term, _, value = line.partition("\t")
            lex[term.strip().lower()] = max(-1.0, min(1.0, float(value)))
        _DEFAULT_LEXICON = lex
    return _DEFAULT_LEXICON


def sentiment_polarity(text: str, lexicon: Optional[Mapping[str, float]] = None) -> float:
    """Mean polarity of lexicon hits; a negation token within the two
    preceding tokens flips a hit's sign. 0 when nothing matches."""
    if not text:
        return 0.0
    lex = lexicon if lexicon is not None else default_lexicon()
    tokens = _SENT_WORD.findall(text.lower())
    hits: List[float] = []
    for i, tok in enumerate(tokens):
        pol = lex.get(tok)
        if pol is None:
            continue
        negated = any(tokens[j] in NEGATION_TOKENS for j in range(max(0, i - 2), i))
        hits.append(-pol if negated else pol)
    if not hits:
        return 0.0
    return sum(hits) / len(hits)


def _syllables(word: str) -> int:
    w = re.sub(r"[^a-z]", "", word.lower())
    if not w:
        return 0
    groups = len(re.findall(r"[aeiouy]+", w))
    if groups > 1 and w.endswith("e") and not w.endswith("le"):
        groups -= 1
    return max(1, groups)


def readability(text: str) -> Tuple[float, float, float, float]:
    """(Flesch Reading Ease, Kincaid Grade, Coleman-Liau, ARI).

    Word count is whitespace tokens containing an alphanumeric, sentence
    count is terminal-punctuation segments (min 1), syllables come from a
    vowel-group counter. All four are 0 for wordless text.
    """
    words = [w for w in text.split() if any(ch.isalnum() for ch in w)]
    n_words = len(words)
    if n_words == 0:
        return (0.0, 0.0, 0.0, 0.0)
    segments = [seg for seg in _SENT_SPLIT.split(text) if _SENT_WORD.search(seg.lower())]
    n_sentences = max(1, len(segments))
    letters = sum(1 for w in words for ch in w if ch.isalpha())
    chars = sum(1 for w in words for ch in w if ch.isalnum())
    syllables = sum(_syllables(w) for w in words)

    wps = n_words / n_sentences
    flesch = 206.835 - 1.015 * wps - 84.6 * (syllables / n_words)
    kincaid = 0.39 * wps + 11.8 * (syllables / n_words) - 15.59
    letters_per_100 = letters / n_words * 100.0
    sentences_per_100 = n_sentences / n_words * 100.0
    coleman_liau = 0.0588 * letters_per_100 - 0.296 * sentences_per_100 - 15.8
    ari = 4.71 * (chars / n_words) + 0.5 * wps - 21.43
    return (flesch, kincaid, coleman_liau, ari)


def count_markdown_constructs(raw: str) -> Tuple[int, int, int]:
    """(code snippets, urls, images) counted on raw markdown."""
    fenced = _FENCED.findall(raw)
    without_fences = _FENCED.sub(" ", raw)
    code = len(fenced) + len(_INLINE_CODE.findall(without_fences))
    urls = len(_URL.findall(raw))
    images = len(_IMAGE.findall(raw))
    return (code, urls, images)


# ---------------------------------------------------------------------------
# Label categories
# ---------------------------------------------------------------------------

class LabelCategoryMap:
    """Category -> substring patterns (case-insensitive)."""

    def __init__(self, patterns: Mapping[str, Sequence[str]]):
        if set(patterns) != set(LABEL_CATEGORIES):
            missing = set(LABEL_CATEGORIES) - set(patterns)
            extra = set(patterns) - set(LABEL_CATEGORIES)
            raise ValueError(f"label map must define exactly the 12 categories; missing={sorted(missing)} extra={sorted(extra)}")
        self.patterns: Dict[str, Tuple[str, ...]] = {
            cat: tuple(p.lower() for p in patterns[cat]) for cat in LABEL_CATEGORIES
        }

    def category_counts(self, labels: FrozenSet[str]) -> Dict[str, int]:
        counts = {cat: 0 for cat in LABEL_CATEGORIES}
        lowered = [lab.lower() for lab in labels]
        for cat, pats in self.patterns.items():
            counts[cat] = sum(1 for lab in lowered if any(p in lab for p in pats))
        return counts


_DEFAULT_LABEL_MAP: Optional[LabelCategoryMap] = None


def _parse_label_map_text(text: str) -> LabelCategoryMap:
    patterns: Dict[str, List[str]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"label map line {line_no}: expected 'category = [patterns]'")
        key = key.strip().strip('"').strip("'")
        try:
            parsed = ast.literal_eval(value.strip())
        except (SyntaxError, ValueError) as exc:
            raise ValueError(f"label map line {line_no}: bad pattern list: {exc}") from exc
        if not isinstance(parsed, list) or not all(isinstance(p, str) for p in parsed):
            raise ValueError(f"label map line {line_no}: value must be a list of strings")
        patterns[key] = parsed
    return LabelCategoryMap(patterns)


def load_label_map(path: str | Path) -> LabelCategoryMap:
    return _parse_label_map_text(Path(path).read_text(encoding="utf-8"))


def default_label_map() -> LabelCategoryMap:
    global _DEFAULT_LABEL_MAP
    if _DEFAULT_LABEL_MAP is None:
        ref = resources.files("pfirec.data").joinpath("label_categories.toml")
        _DEFAULT_LABEL_MAP = _parse_label_map_text(ref.read_text(encoding="utf-8"))
    return _DEFAULT_LABEL_MAP


# ---------------------------------------------------------------------------
# Corpus documents and default embedding store
# ---------------------------------------------------------------------------

def _issue_text(issue: IssueRecord) -> str:
    if issue.body:
        return issue.title + "\n" + issue.body
    return issue.title


def corpus_plain_texts(corpus: Corpus) -> Dict[str, str]:
    """Plain text for every embeddable document: issues plus the
    description/readme of every project (keys ``<pid>#description`` and
    ``<pid>#readme``)."""
    texts: Dict[str, str] = {}
    for issue in corpus.issues.values():
        texts[issue.id] = extract_plain_text(_issue_text(issue))
    for proj in corpus.projects.values():
        texts[f"{proj.id}#description"] = extract_plain_text(proj.description)
        texts[f"{proj.id}#readme"] = extract_plain_text(proj.readme)
    return texts


def default_store(corpus: Corpus, stopwords: Optional[FrozenSet[str]] = None) -> EmbeddingStore:
    """Hashed-TF-IDF store fitted over all corpus documents."""
    tokens = {doc_id: normalize(text, stopwords) for doc_id, text in corpus_plain_texts(corpus).items()}
    return fit_hashed_tfidf(tokens)


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------

class _DevSnapshot:
    """Everything about a developer that is fixed for one (cutoff, fi) pair."""

    __slots__ = (
        "arts", "event_counts", "unit_vecs", "token_sets", "label_sets",
        "commit_repo_counts", "total_commits", "oss", "act", "senti",
        "repos", "events_before",
    )

    def __init__(self, ex: "FeatureExtractor", dev: DeveloperProfile,
                 cutoff: datetime, exclude_artifact: Optional[str]):
        corpus = ex.corpus
        self.events_before = [
            ev for ev in dev.events
            if ev.timestamp < cutoff and ev.artifact_id != exclude_artifact
        ]
        self.arts: Dict[str, List[IssueRecord]] = {k: [] for _, k in ARTIFACT_KINDS}
        self.event_counts: Dict[str, int] = {k: 0 for _, k in ARTIFACT_KINDS}
        self.commit_repo_counts: Dict[str, int] = {}
        repos = set()
        for ev in self.events_before:
            repos.add(ev.repo_id)
            if ev.kind in self.event_counts:
                self.event_counts[ev.kind] += 1
            if ev.kind == "commit":
                self.commit_repo_counts[ev.repo_id] = self.commit_repo_counts.get(ev.repo_id, 0) + 1
            rec = corpus.issues.get(ev.artifact_id)
            if rec is not None and ev.kind in self.arts:
                self.arts[ev.kind].append(rec)
        self.repos = repos
        self.total_commits = self.event_counts["commit"]

        self.unit_vecs = {k: [ex._unit_vector(a) for a in lst] for k, lst in self.arts.items()}
        self.token_sets = {k: [ex._tokens(a) for a in lst] for k, lst in self.arts.items()}
        self.label_sets = {k: [a.labels for a in lst] for k, lst in self.arts.items()}

        self.oss = {
            "commits": self.event_counts["commit"],
            "prs": self.event_counts["pr"],
            "pr_reviews": self.event_counts["pr_review"],
            "repos_contributed": len(repos),
            "issues_reported": self.event_counts["issue_reported"],
        }

        self.act = {}
        for prefix, kind in (("commits", "commit"), ("prs", "pr"), ("issues_reported", "issue_reported")):
            for days in ACTIVENESS_WINDOWS:
                start = cutoff - timedelta(days=days)
                self.act[f"{prefix}_{days}d"] = sum(
                    1 for ev in self.events_before if ev.kind == kind and ev.timestamp >= start
                )

        self.senti = {}
        for key, kind in (("prs", "pr"), ("issues", "issue_reported")):
            pols = [ex._polarity(a) for a in self.arts[kind]]
            self.senti[f"{key}_mean"] = sum(pols) / len(pols) if pols else 0.0
            self.senti[f"{key}_median"] = float(statistics.median(pols)) if pols else 0.0


class FeatureExtractor:
    """Computes feature values against one corpus and embedding store.

    Immutable inputs; all caches are append-only, so instances can be read
    from several threads once warmed (featurize_lists warms them in order).
    """

    def __init__(
        self,
        corpus: Corpus,
        store: Optional[EmbeddingStore] = None,
        *,
        label_map: Optional[LabelCategoryMap] = None,
        lexicon: Optional[Mapping[str, float]] = None,
        registry: Optional[FeatureRegistry] = None,
        stopwords: Optional[FrozenSet[str]] = None,
    ):
        self.corpus = corpus
        self.stopwords = stopwords
        self.store = store if store is not None else default_store(corpus, stopwords)
        self.label_map = label_map if label_map is not None else default_label_map()
        self.lexicon = lexicon if lexicon is not None else default_lexicon()
        self.registry = registry if registry is not None else build_registry()
        self._plain: Dict[str, str] = {}
        self._tok: Dict[str, TokenSet] = {}
        self._units: Dict[str, Optional[np.ndarray]] = {}
        self._pols: Dict[str, float] = {}
        self._iss_cont: Dict[str, Dict[str, float]] = {}
        self._snapshots: Dict[Tuple[str, datetime, Optional[str]], _DevSnapshot] = {}
        self._who_stats: Dict[Tuple[str, datetime, str], Dict[str, float]] = {}

    # -- cached primitives ---------------------------------------------------

    def _plain_text(self, doc_id: str, raw: str) -> str:
        cached = self._plain.get(doc_id)
        if cached is None:
            cached = extract_plain_text(raw)
            self._plain[doc_id] = cached
        return cached

    def _tokens_for(self, doc_id: str, raw: str) -> TokenSet:
        cached = self._tok.get(doc_id)
        if cached is None:
            cached = normalize(self._plain_text(doc_id, raw), self.stopwords)
            self._tok[doc_id] = cached
        return cached

    def _tokens(self, issue: IssueRecord) -> TokenSet:
        return self._tokens_for(issue.id, _issue_text(issue))

    def _unit_for(self, doc_id: str, raw: str) -> Optional[np.ndarray]:
        if doc_id in self._units:
            return self._units[doc_id]
        vec = np.asarray(
            self.store.vector_for(doc_id, self._tokens_for(doc_id, raw)), dtype=np.float64
        )
        norm = float(np.sqrt(vec @ vec))
        unit = vec / norm if norm > 0.0 else None
        self._units[doc_id] = unit
        return unit

    def _unit_vector(self, issue: IssueRecord) -> Optional[np.ndarray]:
        return self._unit_for(issue.id, _issue_text(issue))

    def _polarity(self, issue: IssueRecord) -> float:
        cached = self._pols.get(issue.id)
        if cached is None:
            cached = sentiment_polarity(self._plain_text(issue.id, _issue_text(issue)), self.lexicon)
            self._pols[issue.id] = cached
        return cached

    def _snapshot(self, dev: DeveloperProfile, cutoff: datetime,
                  exclude_artifact: Optional[str]) -> _DevSnapshot:
        key = (dev.id, cutoff, exclude_artifact)
        snap = self._snapshots.get(key)
        if snap is None:
            snap = _DevSnapshot(self, dev, cutoff, exclude_artifact)
            self._snapshots[key] = snap
        return snap

    @staticmethod
    def _cos(unit_a: Optional[np.ndarray], unit_b: Optional[np.ndarray]) -> float:
        if unit_a is None or unit_b is None:
            return 0.0
        return float(unit_a @ unit_b)

    # -- newcomer feature groups ----------------------------------------------

    def content_preference(self, d: DeveloperProfile, s: IssueRecord,
                           cutoff: datetime, fi_id: Optional[str] = None) -> Dict[str, float]:
        snap = self._snapshot(d, cutoff, fi_id)
        s_unit = self._unit_vector(s)
        s_tokens = self._tokens(s).tokens
        s_labels = s.labels
        out: Dict[str, float] = {}
        for prefix, kind in ARTIFACT_KINDS:
            units = snap.unit_vecs[kind]
            toks = snap.token_sets[kind]
            labs = snap.label_sets[kind]
            n = len(units)
            cos_cum = sum(self._cos(u, s_unit) for u in units)
            jac_cum = 0.0
            for t in toks:
                a = t.tokens
                if a or s_tokens:
                    inter = len(a & s_tokens)
                    if inter:
                        jac_cum += inter / len(a | s_tokens)
            out[f"cont_{prefix}_cos_cum"] = cos_cum
            out[f"cont_{prefix}_jac_cum"] = jac_cum
            out[f"cont_{prefix}_cos_avg"] = cos_cum / n if n else 0.0
            out[f"cont_{prefix}_jac_avg"] = jac_cum / n if n else 0.0
            if prefix != "commits":
                lab_cum = float(sum(1 for ls in labs if ls & s_labels))
                out[f"cont_{prefix}_lab_cum"] = lab_cum
                out[f"cont_{prefix}_lab_avg"] = lab_cum / n if n else 0.0

        target_lang = ""
        proj = self.corpus.projects.get(s.repo_id)
        if proj is not None:
            target_lang = proj.primary_language
        lang_commits = 0
        if target_lang:
            for repo_id, count in snap.commit_repo_counts.items():
                repo = self.corpus.projects.get(repo_id)
                if repo is not None and repo.primary_language == target_lang:
                    lang_commits += count
        out["cont_lang_commits"] = float(lang_commits)
        return out

    def domain_preference(self, d: DeveloperProfile, s: IssueRecord,
                          cutoff: datetime, fi_id: Optional[str] = None) -> Dict[str, float]:
        snap = self._snapshot(d, cutoff, fi_id)
        target = self.corpus.projects.get(s.repo_id)
        contributed = []
        seen = set()
        for ev in snap.events_before:
            if ev.kind != "commit" or ev.repo_id in seen:
                continue
            seen.add(ev.repo_id)
            proj = self.corpus.projects.get(ev.repo_id)
            if proj is not None:
                contributed.append(proj)

        out: Dict[str, float] = {}
        for doc in ("description", "readme"):
            if target is None:
                out[f"dom_{doc}_cos_cum"] = 0.0
                out[f"dom_{doc}_jac_cum"] = 0.0
                out[f"dom_{doc}_cos_avg"] = 0.0
                out[f"dom_{doc}_jac_avg"] = 0.0
                continue
            t_key = f"{target.id}#{doc}"
            t_unit = self._unit_for(t_key, getattr(target, doc))
            t_tokens = self._tokens_for(t_key, getattr(target, doc)).tokens
            cos_cum = 0.0
            jac_cum = 0.0
            for proj in contributed:
                p_key = f"{proj.id}#{doc}"
                cos_cum += self._cos(self._unit_for(p_key, getattr(proj, doc)), t_unit)
                p_tokens = self._tokens_for(p_key, getattr(proj, doc)).tokens
                if p_tokens or t_tokens:
                    inter = len(p_tokens & t_tokens)
                    if inter:
                        jac_cum += inter / len(p_tokens | t_tokens)
            n = len(contributed)
            out[f"dom_{doc}_cos_cum"] = cos_cum
            out[f"dom_{doc}_jac_cum"] = jac_cum
            out[f"dom_{doc}_cos_avg"] = cos_cum / n if n else 0.0
            out[f"dom_{doc}_jac_avg"] = jac_cum / n if n else 0.0

        topic_commits = 0
        if target is not None and target.topics:
            for repo_id, count in snap.commit_repo_counts.items():
                repo = self.corpus.projects.get(repo_id)
                if repo is not None and repo.topics & target.topics:
                    topic_commits += count
        out["dom_topic_commits"] = float(topic_commits)
        out["dom_topic_commit_ratio"] = (
            topic_commits / snap.total_commits if snap.total_commits else 0.0
        )
        return out

    def oss_experience(self, d: DeveloperProfile, s: IssueRecord,
                       cutoff: datetime, fi_id: Optional[str] = None) -> Dict[str, float]:
        snap = self._snapshot(d, cutoff, fi_id)
        in_project = sum(
            1 for ev in snap.events_before
            if ev.kind == "issue_reported" and ev.repo_id == s.repo_id
        )
        return {
            "gener_commits": float(snap.oss["commits"]),
            "gener_prs": float(snap.oss["prs"]),
            "gener_pr_reviews": float(snap.oss["pr_reviews"]),
            "gener_repos_contributed": float(snap.oss["repos_contributed"]),
            "gener_issues_reported": float(snap.oss["issues_reported"]),
            "gener_issues_reported_in_project": float(in_project),
        }

    def activeness(self, d: DeveloperProfile, cutoff: datetime,
                   fi_id: Optional[str] = None) -> Dict[str, float]:
        snap = self._snapshot(d, cutoff, fi_id)
        return {f"act_{k}": float(v) for k, v in snap.act.items()}

    def sentiment_features(self, d: DeveloperProfile, cutoff: datetime,
                           fi_id: Optional[str] = None) -> Dict[str, float]:
        snap = self._snapshot(d, cutoff, fi_id)
        return {f"senti_{k}": float(v) for k, v in snap.senti.items()}

    # -- issue feature groups --------------------------------------------------

    def issue_content_features(self, s: IssueRecord) -> Dict[str, float]:
        cached = self._iss_cont.get(s.id)
        if cached is not None:
            return cached
        raw = _issue_text(s)
        plain = self._plain_text(s.id, raw)
        flesch, kincaid, coleman, ari = readability(plain)
        code, urls, images = count_markdown_constructs(raw)
        title_tokens = normalize(extract_plain_text(s.title), self.stopwords).token_count_raw
        body_tokens = normalize(extract_plain_text(s.body), self.stopwords).token_count_raw
        out = {
            "isscont_polarity": sentiment_polarity(plain, self.lexicon),
            "isscont_flesch_reading_ease": flesch,
            "isscont_kincaid_grade": kincaid,
            "isscont_coleman_liau": coleman,
            "isscont_ari": ari,
            "isscont_title_tokens": float(title_tokens),
            "isscont_body_tokens": float(body_tokens),
            "isscont_code_snippets": float(code),
            "isscont_urls": float(urls),
            "isscont_images": float(images),
            "isscont_labels_total": float(len(s.labels)),
        }
        for cat, count in self.label_map.category_counts(s.labels).items():
            out[f"isscont_label_{_slug(cat)}"] = float(count)
        self._iss_cont[s.id] = out
        return out

    def _person_stats(self, who_id: str, project_id: str, cutoff: datetime) -> Dict[str, float]:
        key = (who_id, cutoff, project_id)
        cached = self._who_stats.get(key)
        if cached is not None:
            return cached
        dev = self.corpus.developer(who_id)
        counts = {"commit": 0, "pr": 0, "pr_review": 0, "issue_reported": 0}
        reported_in_project = 0
        gfi_in_project = 0
        has_commits = 0
        repos = set()
        for ev in dev.events:
            if ev.timestamp >= cutoff:
                continue
            if ev.kind in counts:
                counts[ev.kind] += 1
            repos.add(ev.repo_id)
            if ev.kind == "commit" and ev.repo_id == project_id:
                has_commits = 1
            if ev.kind == "issue_reported" and ev.repo_id == project_id:
                reported_in_project += 1
                rec = self.corpus.issues.get(ev.artifact_id)
                if rec is not None and rec.is_gfi_labeled:
                    gfi_in_project += 1
        max_stars = 0
        for repo_id in repos:
            proj = self.corpus.projects.get(repo_id)
            if proj is not None and proj.stats.stars > max_stars:
                max_stars = proj.stats.stars
        stats = {
            "commits": float(counts["commit"]),
            "prs": float(counts["pr"]),
            "pr_reviews": float(counts["pr_review"]),
            "issues_reported": float(counts["issue_reported"]),
            "gfi_reported_ratio": gfi_in_project / reported_in_project if reported_in_project else 0.0,
            "max_stars": float(max_stars),
            "has_commits": float(has_commits),
        }
        self._who_stats[key] = stats
        return stats

    def issue_background_features(self, s: IssueRecord, cutoff: datetime) -> Dict[str, float]:
        proj = self.corpus.projects.get(s.repo_id)
        stats = proj.stats if proj is not None else None
        out: Dict[str, float] = {}
        for name in ("open_issues", "open_issue_ratio", "gfi_count", "gfi_ratio", "commits",
                     "prs", "closed_issues", "stars", "commit_contributors"):
            out[f"issback_{name}"] = float(getattr(stats, name)) if stats is not None else 0.0
        owner_id = proj.owner_id if proj is not None else ""
        for who, who_id in (("reporter", s.author_id), ("owner", owner_id)):
            person = self._person_stats(who_id, s.repo_id, cutoff)
            for k, v in person.items():
                out[f"issback_{who}_{k}"] = v
        return out

    # -- assembly ---------------------------------------------------------------

    def assemble(self, d: DeveloperProfile, s: IssueRecord, cutoff: datetime,
                 fi_id: Optional[str] = None) -> np.ndarray:
        """Full feature vector in registry order."""
        values: Dict[str, float] = {}
        values.update(self.content_preference(d, s, cutoff, fi_id))
        values.update(self.domain_preference(d, s, cutoff, fi_id))
        values.update(self.oss_experience(d, s, cutoff, fi_id))
        values.update(self.activeness(d, cutoff, fi_id))
        values.update(self.sentiment_features(d, cutoff, fi_id))
        values.update(self.issue_content_features(s))
        values.update(self.issue_background_features(s, cutoff))
        try:
            vec = np.array([values[name] for name in self.registry.names], dtype=np.float64)
        except KeyError as exc:
            raise KeyError(f"feature {exc} missing from assembled values") from exc
        if not np.all(np.isfinite(vec)):
            bad = [n for n, v in zip(self.registry.names, vec) if not np.isfinite(v)]
            raise ValueError(f"non-finite feature values for {s.id}: {bad}")
        return vec

    def featurize_list(self, clist: CandidateList) -> "FeaturizedList":
        dev = self.corpus.developer(clist.resolver_id)
        rows = []
        created = []
        for cid in clist.candidate_ids:
            issue = self.corpus.issues[cid]
            rows.append(self.assemble(dev, issue, clist.cutoff, clist.fi_id))
            created.append(issue.created_at)
        x = np.vstack(rows)
        return FeaturizedList(
            fi_id=clist.fi_id,
            project_id=clist.project_id,
            cutoff=clist.cutoff,
            issue_ids=list(clist.candidate_ids),
            created_at=created,
            x=x,
            positive_index=clist.candidate_ids.index(clist.fi_id),
        )


@dataclass
class FeaturizedList:
    """One candidate list as a feature matrix plus ranking metadata."""

    fi_id: str
    project_id: str
    cutoff: datetime
    issue_ids: List[str]
    created_at: List[datetime]
    x: np.ndarray
    positive_index: int


def featurize_lists(
    corpus: Corpus,
    store: Optional[EmbeddingStore] = None,
    lists: Optional[Sequence[CandidateList]] = None,
    *,
    extractor: Optional[FeatureExtractor] = None,
    jobs: int = 1,
) -> List[FeaturizedList]:
    """Featurize candidate lists; results are independent of ``jobs``."""
    ex = extractor if extractor is not None else FeatureExtractor(corpus, store)
    todo = list(lists) if lists is not None else list(corpus.lists)
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(ex.featurize_list, todo))
    return [ex.featurize_list(cl) for cl in todo]
