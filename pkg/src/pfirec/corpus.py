"""Data model, JSONL ingest, candidate-list construction, synthetic corpora.

A corpus is an immutable in-memory snapshot of four JSONL dumps (issues,
developers, projects, candidate lists). Records violating their invariants
are rejected line-by-line and recorded in the load report; the rest load.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

log = logging.getLogger(__name__)

__all__ = [
    "IssueRecord",
    "Event",
    "DeveloperProfile",
    "ProjectStats",
    "ProjectRecord",
    "CandidateList",
    "LoadReport",
    "Corpus",
    "CorpusFormatError",
    "PlantedSignal",
    "load_corpus",
    "write_corpus",
    "build_candidate_lists",
    "verify_candidate_list",
    "generate_synthetic_corpus",
    "parse_timestamp",
    "format_timestamp",
]

ISSUE_KINDS = ("issue", "pull_request", "commit")
EVENT_KINDS = ("commit", "pr", "pr_review", "issue_reported", "issue_resolved", "issue_commented")

MIN_CANDIDATES_DEFAULT = 10


class CorpusFormatError(ValueError):
    """Unparseable dump line; carries file path and 1-based line number."""

    def __init__(self, path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def parse_timestamp(value: str) -> datetime:
    """ISO-8601 with trailing Z (or explicit offset) -> aware UTC datetime."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    if dt.microsecond:
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(slots=True)
class IssueRecord:
    """One issue, pull request, or commit. Commits carry their message in
    ``title`` and have no labels."""

    id: str
    kind: str
    repo_id: str
    title: str
    body: str
    labels: FrozenSet[str]
    author_id: str
    created_at: datetime
    closed_at: Optional[datetime] = None
    resolver_id: Optional[str] = None
    is_gfi_labeled: bool = False


@dataclass(slots=True)
class Event:
    timestamp: datetime
    kind: str
    artifact_id: str
    repo_id: str


@dataclass
class DeveloperProfile:
    id: str
    events: List[Event] = field(default_factory=list)
    repos_contributed: FrozenSet[str] = frozenset()


EMPTY_PROFILE = DeveloperProfile(id="")


@dataclass(slots=True)
class ProjectStats:
    open_issues: int = 0
    open_issue_ratio: float = 0.0
    gfi_count: int = 0
    gfi_ratio: float = 0.0
    commits: int = 0
    prs: int = 0
    closed_issues: int = 0
    stars: int = 0
    commit_contributors: int = 0


@dataclass
class ProjectRecord:
    id: str
    description: str = ""
    readme: str = ""
    topics: FrozenSet[str] = frozenset()
    primary_language: str = ""
    stats: ProjectStats = field(default_factory=ProjectStats)
    owner_id: str = ""


@dataclass
class CandidateList:
    """One first-issue resolution event: the resolved issue (the single
    positive), its resolver, and every project issue open at the cutoff."""

    fi_id: str
    resolver_id: str
    candidate_ids: List[str]
    cutoff: datetime
    project_id: str


@dataclass
class LoadReport:
    counts: Dict[str, int] = field(default_factory=dict)
    rejected: List[str] = field(default_factory=list)
    dropped_lists: List[str] = field(default_factory=list)
    dangling_artifacts: int = 0
    dangling_repos: int = 0
    warnings: List[str] = field(default_factory=list)

    def summary(self) -> str:
        parts = [f"{k}={v}" for k, v in sorted(self.counts.items())]
        parts.append(f"rejected={len(self.rejected)}")
        parts.append(f"dropped_lists={len(self.dropped_lists)}")
        parts.append(f"dangling_artifacts={self.dangling_artifacts}")
        parts.append(f"dangling_repos={self.dangling_repos}")
        return " ".join(parts)


@dataclass
class Corpus:
    issues: Dict[str, IssueRecord] = field(default_factory=dict)
    developers: Dict[str, DeveloperProfile] = field(default_factory=dict)
    projects: Dict[str, ProjectRecord] = field(default_factory=dict)
    lists: List[CandidateList] = field(default_factory=list)
    report: LoadReport = field(default_factory=LoadReport)

    def issues_of_project(self, project_id: str) -> List[IssueRecord]:
        return [iss for iss in self.issues.values() if iss.repo_id == project_id]

    def developer(self, dev_id: Optional[str]) -> DeveloperProfile:
        """Profile for an id, or an empty profile when unknown/missing."""
        if dev_id is None:
            return EMPTY_PROFILE
        return self.developers.get(dev_id, EMPTY_PROFILE)


# ---------------------------------------------------------------------------
# JSONL loading
# ---------------------------------------------------------------------------

_ISSUE_FIELDS = {
    "id", "kind", "repo_id", "title", "body", "labels", "author_id",
    "created_at", "closed_at", "resolver_id", "is_gfi_labeled",
}
_DEV_FIELDS = {"id", "events", "repos_contributed"}
_EVENT_FIELDS = {"timestamp", "kind", "artifact_id", "repo_id"}
_PROJECT_FIELDS = {"id", "description", "readme", "topics", "primary_language", "stats", "owner_id"}
_STATS_FIELDS = {
    "open_issues", "open_issue_ratio", "gfi_count", "gfi_ratio", "commits",
    "prs", "closed_issues", "stars", "commit_contributors",
}
_LIST_FIELDS = {"fi_id", "resolver_id", "candidate_ids", "cutoff", "project_id"}


class _UnknownFieldTracker:
    def __init__(self, report: LoadReport):
        self.report = report
        self.seen: set = set()

    def check(self, kind: str, obj: dict, known: set) -> None:
        for key in obj:
            if key not in known and (kind, key) not in self.seen:
                self.seen.add((kind, key))
                msg = f"{kind}: ignoring unknown field {key!r}"
                self.report.warnings.append(msg)
                log.warning(msg)


def _iter_jsonl(path) -> Iterable[Tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(path, line_no, f"malformed JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise CorpusFormatError(path, line_no, "line is not a JSON object")
            yield line_no, obj


def _parse_issue(obj: dict) -> IssueRecord:
    labels = frozenset(str(x) for x in obj.get("labels", []))
    closed = obj.get("closed_at")
    resolver = obj.get("resolver_id")
    rec = IssueRecord(
        id=str(obj["id"]),
        kind=str(obj["kind"]),
        repo_id=str(obj["repo_id"]),
        title=str(obj.get("title", "")),
        body=str(obj.get("body", "")),
        labels=labels,
        author_id=str(obj.get("author_id", "")),
        created_at=parse_timestamp(obj["created_at"]),
        closed_at=parse_timestamp(closed) if closed else None,
        resolver_id=str(resolver) if resolver else None,
        is_gfi_labeled=bool(obj.get("is_gfi_labeled", False)),
    )
    if rec.kind not in ISSUE_KINDS:
        raise ValueError(f"unknown issue kind {rec.kind!r}")
    if rec.closed_at is not None and rec.closed_at < rec.created_at:
        raise ValueError("closed_at earlier than created_at")
    if rec.kind == "commit" and rec.labels:
        raise ValueError("commit records must not carry labels")
    return rec


def _parse_developer(obj: dict, tracker: _UnknownFieldTracker) -> DeveloperProfile:
    events = []
    for ev in obj.get("events", []):
        tracker.check("developer.event", ev, _EVENT_FIELDS)
        kind = str(ev["kind"])
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        events.append(Event(
            timestamp=parse_timestamp(ev["timestamp"]),
            kind=kind,
            artifact_id=str(ev["artifact_id"]),
            repo_id=str(ev["repo_id"]),
        ))
    events.sort(key=lambda e: e.timestamp)
    return DeveloperProfile(
        id=str(obj["id"]),
        events=events,
        repos_contributed=frozenset(str(x) for x in obj.get("repos_contributed", [])),
    )


def _parse_project(obj: dict, tracker: _UnknownFieldTracker) -> ProjectRecord:
    stats_obj = obj.get("stats", {})
    tracker.check("project.stats", stats_obj, _STATS_FIELDS)
    stats = ProjectStats(
        open_issues=int(stats_obj.get("open_issues", 0)),
        open_issue_ratio=float(stats_obj.get("open_issue_ratio", 0.0)),
        gfi_count=int(stats_obj.get("gfi_count", 0)),
        gfi_ratio=float(stats_obj.get("gfi_ratio", 0.0)),
        commits=int(stats_obj.get("commits", 0)),
        prs=int(stats_obj.get("prs", 0)),
        closed_issues=int(stats_obj.get("closed_issues", 0)),
        stars=int(stats_obj.get("stars", 0)),
        commit_contributors=int(stats_obj.get("commit_contributors", 0)),
    )
    for name in ("open_issue_ratio", "gfi_ratio"):
        value = getattr(stats, name)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} out of [0,1]: {value}")
    if stats.gfi_count > stats.open_issues + stats.closed_issues:
        raise ValueError("gfi_count exceeds total issue count")
    return ProjectRecord(
        id=str(obj["id"]),
        description=str(obj.get("description", "")),
        readme=str(obj.get("readme", "")),
        topics=frozenset(str(x) for x in obj.get("topics", [])),
        primary_language=str(obj.get("primary_language", "")),
        stats=stats,
        owner_id=str(obj.get("owner_id", "")),
    )


def _parse_list(obj: dict) -> CandidateList:
    return CandidateList(
        fi_id=str(obj["fi_id"]),
        resolver_id=str(obj["resolver_id"]),
        candidate_ids=[str(x) for x in obj["candidate_ids"]],
        cutoff=parse_timestamp(obj["cutoff"]),
        project_id=str(obj["project_id"]),
    )


def verify_candidate_list(
    corpus: Corpus, clist: CandidateList, min_candidates: int = MIN_CANDIDATES_DEFAULT
) -> List[str]:
    """All invariant violations of a candidate list against a corpus.

    Open-at-cutoff is checked with the permissive rule (closed_at may equal
    the cutoff) so lists produced under either boundary convention load; the
    fi itself is exempt from the closed-at clause.
    """
    problems = []
    ids = clist.candidate_ids
    if clist.fi_id not in ids:
        problems.append("fi_id not among candidate_ids")
    if ids.count(clist.fi_id) > 1:
        problems.append("fi_id appears more than once (must be exactly one positive)")
    if len(set(ids)) != len(ids):
        problems.append("duplicate candidate ids")
    if len(ids) < min_candidates:
        problems.append(f"fewer than {min_candidates} candidates ({len(ids)})")
    for cid in ids:
        issue = corpus.issues.get(cid)
        if issue is None:
            problems.append(f"candidate {cid!r} not in corpus")
            continue
        if issue.repo_id != clist.project_id:
            problems.append(f"candidate {cid!r} belongs to {issue.repo_id!r}, not {clist.project_id!r}")
        if not issue.created_at < clist.cutoff:
            problems.append(f"candidate {cid!r} created at/after cutoff")
        if cid != clist.fi_id and issue.closed_at is not None and issue.closed_at < clist.cutoff:
            problems.append(f"candidate {cid!r} closed before cutoff")
    return problems


def load_corpus(
    issue_path,
    developer_path,
    project_path,
    list_path=None,
    min_candidates: int = MIN_CANDIDATES_DEFAULT,
) -> Corpus:
    """Load and cross-validate the four JSONL dumps.

    Malformed JSON raises CorpusFormatError. Records breaking their own
    invariants are rejected (with a line-numbered entry in the report);
    lists breaking list invariants are dropped and logged.
    """
    report = LoadReport()
    tracker = _UnknownFieldTracker(report)
    corpus = Corpus(report=report)

    for line_no, obj in _iter_jsonl(issue_path):
        tracker.check("issue", obj, _ISSUE_FIELDS)
        try:
            rec = _parse_issue(obj)
        except (KeyError, ValueError) as exc:
            report.rejected.append(f"{issue_path}:{line_no}: issue rejected: {exc}")
            continue
        if rec.id in corpus.issues:
            report.rejected.append(f"{issue_path}:{line_no}: duplicate issue id {rec.id!r}")
            continue
        corpus.issues[rec.id] = rec

    for line_no, obj in _iter_jsonl(developer_path):
        tracker.check("developer", obj, _DEV_FIELDS)
        try:
            dev = _parse_developer(obj, tracker)
        except (KeyError, ValueError) as exc:
            report.rejected.append(f"{developer_path}:{line_no}: developer rejected: {exc}")
            continue
        if dev.id in corpus.developers:
            report.rejected.append(f"{developer_path}:{line_no}: duplicate developer id {dev.id!r}")
            continue
        corpus.developers[dev.id] = dev

    for line_no, obj in _iter_jsonl(project_path):
        tracker.check("project", obj, _PROJECT_FIELDS)
        try:
            proj = _parse_project(obj, tracker)
        except (KeyError, ValueError) as exc:
            report.rejected.append(f"{project_path}:{line_no}: project rejected: {exc}")
            continue
        if proj.id in corpus.projects:
            report.rejected.append(f"{project_path}:{line_no}: duplicate project id {proj.id!r}")
            continue
        corpus.projects[proj.id] = proj

    for dev in corpus.developers.values():
        for ev in dev.events:
            if ev.artifact_id not in corpus.issues:
                report.dangling_artifacts += 1
            if ev.repo_id not in corpus.projects:
                report.dangling_repos += 1

    if list_path is not None:
        for line_no, obj in _iter_jsonl(list_path):
            tracker.check("list", obj, _LIST_FIELDS)
            try:
                clist = _parse_list(obj)
            except (KeyError, ValueError) as exc:
                report.rejected.append(f"{list_path}:{line_no}: list rejected: {exc}")
                continue
            problems = verify_candidate_list(corpus, clist, min_candidates)
            if problems:
                msg = f"{list_path}:{line_no}: list for {clist.fi_id!r} dropped: {problems[0]}"
                report.dropped_lists.append(msg)
                log.warning(msg)
                continue
            corpus.lists.append(clist)

    report.counts = {
        "issues": len(corpus.issues),
        "developers": len(corpus.developers),
        "projects": len(corpus.projects),
        "lists": len(corpus.lists),
    }
    return corpus


# ---------------------------------------------------------------------------
# JSONL writing
# ---------------------------------------------------------------------------

def _dump_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _issue_to_obj(rec: IssueRecord) -> dict:
    obj = {
        "id": rec.id,
        "kind": rec.kind,
        "repo_id": rec.repo_id,
        "title": rec.title,
        "body": rec.body,
        "labels": sorted(rec.labels),
        "author_id": rec.author_id,
        "created_at": format_timestamp(rec.created_at),
        "is_gfi_labeled": rec.is_gfi_labeled,
    }
    if rec.closed_at is not None:
        obj["closed_at"] = format_timestamp(rec.closed_at)
    if rec.resolver_id is not None:
        obj["resolver_id"] = rec.resolver_id
    return obj


def write_corpus(corpus: Corpus, out_dir) -> Dict[str, Path]:
    """Serialize a corpus to issues/developers/projects/lists JSONL dumps."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "issues": out / "issues.jsonl",
        "developers": out / "developers.jsonl",
        "projects": out / "projects.jsonl",
        "lists": out / "lists.jsonl",
    }
    with open(paths["issues"], "w", encoding="utf-8") as fh:
        for rec in corpus.issues.values():
            fh.write(_dump_line(_issue_to_obj(rec)) + "\n")
    with open(paths["developers"], "w", encoding="utf-8") as fh:
        for dev in corpus.developers.values():
            obj = {
                "id": dev.id,
                "events": [
                    {
                        "timestamp": format_timestamp(ev.timestamp),
                        "kind": ev.kind,
                        "artifact_id": ev.artifact_id,
                        "repo_id": ev.repo_id,
                    }
                    for ev in dev.events
                ],
                "repos_contributed": sorted(dev.repos_contributed),
            }
            fh.write(_dump_line(obj) + "\n")
    with open(paths["projects"], "w", encoding="utf-8") as fh:
        for proj in corpus.projects.values():
            obj = {
                "id": proj.id,
                "description": proj.description,
                "readme": proj.readme,
                "topics": sorted(proj.topics),
                "primary_language": proj.primary_language,
                "stats": {
                    "open_issues": proj.stats.open_issues,
                    "open_issue_ratio": proj.stats.open_issue_ratio,
                    "gfi_count": proj.stats.gfi_count,
                    "gfi_ratio": proj.stats.gfi_ratio,
                    "commits": proj.stats.commits,
                    "prs": proj.stats.prs,
                    "closed_issues": proj.stats.closed_issues,
                    "stars": proj.stats.stars,
                    "commit_contributors": proj.stats.commit_contributors,
                },
                "owner_id": proj.owner_id,
            }
            fh.write(_dump_line(obj) + "\n")
    with open(paths["lists"], "w", encoding="utf-8") as fh:
        for clist in corpus.lists:
            obj = {
                "fi_id": clist.fi_id,
                "resolver_id": clist.resolver_id,
                "candidate_ids": list(clist.candidate_ids),
                "cutoff": format_timestamp(clist.cutoff),
                "project_id": clist.project_id,
            }
            fh.write(_dump_line(obj) + "\n")
    return paths


# ---------------------------------------------------------------------------
# Candidate-list construction
# ---------------------------------------------------------------------------

def build_candidate_lists(
    corpus: Corpus,
    min_candidates: int = MIN_CANDIDATES_DEFAULT,
    newcomer_max_prior_events: int = 0,
) -> List[CandidateList]:
    """Construct one candidate list per first-issue resolution event.

    A resolved issue is a first issue when its resolver has at most
    ``newcomer_max_prior_events`` events in the issue's project strictly
    before the cutoff (the issue's closed_at). Candidates are all project
    issues open at the cutoff under the half-open rule [created, closed):
    an issue closed exactly at the cutoff counts as closed, with the first
    issue itself exempt. Lists with fewer than ``min_candidates``
    candidates are dropped; output is sorted ascending by cutoff.
    """
    if min_candidates < 1:
        raise ValueError("min_candidates must be >= 1")
    by_project: Dict[str, List[IssueRecord]] = {}
    for issue in corpus.issues.values():
        if issue.kind == "issue":
            by_project.setdefault(issue.repo_id, []).append(issue)

    lists: List[CandidateList] = []
    for project_id, issues in by_project.items():
        issues_sorted = sorted(issues, key=lambda i: (i.created_at, i.id))
        for fi in issues_sorted:
            if fi.resolver_id is None:
                continue
            if fi.closed_at is None:
                log.warning("first issue %s has a resolver but no closed_at; skipped", fi.id)
                continue
            cutoff = fi.closed_at
            resolver = corpus.developer(fi.resolver_id)
            prior = sum(
                1
                for ev in resolver.events
                if ev.repo_id == project_id and ev.timestamp < cutoff
            )
            if prior > newcomer_max_prior_events:
                continue
            candidates = [
                iss
                for iss in issues_sorted
                if iss.created_at < cutoff
                and (iss.id == fi.id or iss.closed_at is None or iss.closed_at > cutoff)
            ]
            if len(candidates) < min_candidates:
                continue
            lists.append(
                CandidateList(
                    fi_id=fi.id,
                    resolver_id=fi.resolver_id,
                    candidate_ids=[c.id for c in candidates],
                    cutoff=cutoff,
                    project_id=project_id,
                )
            )
    lists.sort(key=lambda cl: (cl.cutoff, cl.fi_id))
    return lists


# ---------------------------------------------------------------------------
# Synthetic corpora
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlantedSignal:
    """Make each list's positive the candidate maximizing one feature.

    ``feature`` names a registry feature the generator knows how to plant
    (currently ``issback_reporter_max_stars`` and ``isscont_title_tokens``).
    ``noise`` is the bounded selection noise as a fraction of the planted
    value spread; the oracle "rank by the feature" stays near-perfect for
    small values.
    """

    feature: str = "issback_reporter_max_stars"
    noise: float = 0.01


_LANGS = ["python", "javascript", "typescript", "java", "c++", "go", "rust"]
_TOPICS = [
    "web", "cli", "ml", "data", "async", "parser", "http", "gui", "database",
    "game", "network", "security", "devops", "mobile", "compiler",
]
_WORDS = [
    "parser", "widget", "renderer", "cache", "queue", "scheduler", "token",
    "buffer", "socket", "thread", "module", "config", "plugin", "handler",
    "request", "response", "session", "metric", "logger", "worker", "branch",
    "merge", "commit", "release", "version", "window", "layout", "cursor",
    "stream", "filter", "index", "query", "record", "field", "schema",
    "update", "remove", "adds", "support", "option", "flag", "timeout",
    "retry", "output", "input", "format", "encoding", "header", "payload",
]
_SENTIMENT_SPRINKLES = [
    "great", "good", "nice", "broken", "crash", "slow", "confusing", "helpful",
]
_LABEL_POOL = [
    "bug", "enhancement", "documentation", "question", "help wanted",
    "performance", "ui", "backend", "api", "cleanup", "testing", "dependencies",
]

PLANTABLE_FEATURES = ("issback_reporter_max_stars", "isscont_title_tokens")


def _words(rng: random.Random, n: int, extra: Optional[List[str]] = None) -> List[str]:
    pool = _WORDS if not extra else _WORDS + extra
    return [rng.choice(pool) for _ in range(n)]


def _sentence(rng: random.Random, extra=None) -> str:
    return " ".join(_words(rng, rng.randint(5, 11), extra)).capitalize() + "."


def _body(rng: random.Random, extra=None) -> str:
    parts = [_sentence(rng, extra) for _ in range(rng.randint(1, 3))]
    if rng.random() < 0.20:
        parts.append("```\n" + " ".join(_words(rng, 4)) + "\n```")
    if rng.random() < 0.20:
        parts.append("see https://example.org/ref/" + str(rng.randint(1, 9999)))
    if rng.random() < 0.10:
        parts.append("![screenshot](shot" + str(rng.randint(1, 999)) + ".png)")
    return "\n\n".join(parts)


def generate_synthetic_corpus(
    seed: int,
    n_projects: int,
    n_lists: int,
    median_list_size: int = 32,
    planted_signal: Optional[PlantedSignal] = None,
    *,
    gfi_positive_prob: float = 0.15,
    gfi_negative_prob: float = 0.15,
    sentiment_words: bool = True,
) -> Corpus:
    """Deterministic synthetic corpus for testing and benchmarking.

    Every list gets its own resolver (a genuine newcomer to the list's
    project with history in other projects) and reporters drawn from a
    shared pool. With a planted signal, the positive of each list is the
    candidate maximizing the designated feature plus bounded noise, so a
    ranker can only: learn that feature. Without one, positives are chosen
    uniformly at random.
    """
    if n_projects < 1:
        log.warning("n_projects clamped to 1 (was %d)", n_projects)
        n_projects = 1
    if n_lists < 1:
        log.warning("n_lists clamped to 1 (was %d)", n_lists)
        n_lists = 1
    if median_list_size < 14:
        log.warning("median_list_size clamped to 14 (was %d)", median_list_size)
        median_list_size = 14
    if planted_signal is not None and planted_signal.feature not in PLANTABLE_FEATURES:
        raise ValueError(
            f"cannot plant feature {planted_signal.feature!r}; "
            f"supported: {PLANTABLE_FEATURES}"
        )

    rng = random.Random(seed)
    epoch = datetime(2019, 1, 1, tzinfo=timezone.utc)
    corpus = Corpus()
    extra_words = _SENTIMENT_SPRINKLES if sentiment_words else None

    lo = max(11, round(median_list_size * 0.6))
    hi = max(lo + 2, round(median_list_size * 1.4))

    # Candidate-hosting projects.
    for p in range(n_projects):
        pid = f"org{p}/repo{p}"
        topics = frozenset(rng.sample(_TOPICS, rng.randint(1, 4)))
        open_issues = rng.randint(20, 400)
        closed_issues = rng.randint(50, 2000)
        gfi_count = rng.randint(0, max(1, (open_issues + closed_issues) // 20))
        corpus.projects[pid] = ProjectRecord(
            id=pid,
            description=_sentence(rng),
            readme="# " + pid + "\n\n" + _sentence(rng) + "\n" + _sentence(rng),
            topics=topics,
            primary_language=rng.choice(_LANGS),
            stats=ProjectStats(
                open_issues=open_issues,
                open_issue_ratio=open_issues / (open_issues + closed_issues),
                gfi_count=gfi_count,
                gfi_ratio=gfi_count / (open_issues + closed_issues),
                commits=rng.randint(100, 30000),
                prs=rng.randint(50, 8000),
                closed_issues=closed_issues,
                stars=rng.randint(10, 80000),
                commit_contributors=rng.randint(3, 900),
            ),
            owner_id=f"dev-owner-{p}",
        )

    # Owners: a handful of commit events in their own project, long before
    # any cutoff. Artifact ids dangle on purpose (counts only).
    for p in range(n_projects):
        pid = f"org{p}/repo{p}"
        events = [
            Event(
                timestamp=epoch + timedelta(days=1 + k, seconds=p),
                kind="commit",
                artifact_id=f"{pid}#ghost-c{k}",
                repo_id=pid,
            )
            for k in range(rng.randint(2, 5))
        ]
        corpus.developers[f"dev-owner-{p}"] = DeveloperProfile(
            id=f"dev-owner-{p}", events=events, repos_contributed=frozenset([pid])
        )

    # Reporter pool. Each reporter owns one commit in a dedicated
    # star-valued project; their max-stars feature is the planted value.
    pool_size = max(hi + 3, min(600, max(40, n_lists)))
    star_of = {}
    reporter_ids = []
    for j in range(pool_size):
        rid = f"dev-rep-{j}"
        star_pid = f"starhub/pool-{j}"
        stars = 10 + 13 * j
        star_of[rid] = stars
        corpus.projects[star_pid] = ProjectRecord(
            id=star_pid,
            description="Background pool project.",
            readme="Background pool project.",
            topics=frozenset(),
            primary_language=rng.choice(_LANGS),
            stats=ProjectStats(stars=stars, commits=1, commit_contributors=1),
            owner_id=rid,
        )
        corpus.developers[rid] = DeveloperProfile(
            id=rid,
            events=[
                Event(
                    timestamp=epoch + timedelta(days=2, seconds=j),
                    kind="commit",
                    artifact_id=f"{star_pid}#ghost-c0",
                    repo_id=star_pid,
                )
            ],
            repos_contributed=frozenset([star_pid]),
        )
        reporter_ids.append(rid)
    spread = 13 * (pool_size - 1)

    issue_seq = 0

    def _new_issue(**kwargs) -> IssueRecord:
        nonlocal issue_seq
        issue_seq += 1
        rec = IssueRecord(**kwargs)
        corpus.issues[rec.id] = rec
        return rec

    project_ids = [f"org{p}/repo{p}" for p in range(n_projects)]

    for i in range(n_lists):
        p = i % n_projects
        batch = i // n_projects
        pid = project_ids[p]
        cutoff = epoch + timedelta(days=120 + 61 * batch, seconds=37 * p)
        resolver_id = f"dev-res-{i}"

        # Resolver history in other projects (or the pool when alone).
        homes = [q for q in project_ids if q != pid]
        if not homes:
            homes = [f"starhub/pool-{rng.randrange(pool_size)}"]
        home_ids = rng.sample(homes, min(len(homes), rng.randint(1, 2)))
        events: List[Event] = []
        for home in home_ids:
            for _ in range(rng.randint(1, 3)):
                t = cutoff - timedelta(days=rng.randint(1, 300), hours=rng.randint(0, 23))
                kind = rng.choice(["pr", "commit", "issue_reported", "issue_resolved",
                                   "pr_review", "issue_commented"])
                art_kind = {"pr": "pull_request", "pr_review": "pull_request",
                            "commit": "commit"}.get(kind, "issue")
                art_id = f"{home}#a{i}-{len(events)}"
                _new_issue(
                    id=art_id,
                    kind=art_kind,
                    repo_id=home,
                    title=" ".join(_words(rng, rng.randint(3, 8), extra_words)),
                    body="" if art_kind == "commit" else _body(rng, extra_words),
                    labels=frozenset() if art_kind == "commit"
                    else frozenset(rng.sample(_LABEL_POOL, rng.randint(0, 2))),
                    author_id=resolver_id if kind in ("pr", "commit", "issue_reported") else "dev-owner-0",
                    created_at=t,
                    closed_at=t + timedelta(days=1) if kind == "issue_resolved" else None,
                    resolver_id=resolver_id if kind == "issue_resolved" else None,
                )
                events.append(Event(timestamp=t, kind=kind, artifact_id=art_id, repo_id=home))

        # Candidates.
        m = rng.randint(lo, hi)
        reporters = rng.sample(reporter_ids, m)
        created = [
            cutoff - timedelta(days=rng.randint(1, 24), hours=rng.randint(1, 23))
            for _ in range(m)
        ]
        title_lens = [rng.randint(3, 40) for _ in range(m)]

        if planted_signal is None:
            pos_idx = rng.randrange(m)
        elif planted_signal.feature == "issback_reporter_max_stars":
            values = [star_of[r] for r in reporters]
            noisy = [v + rng.uniform(0.0, planted_signal.noise * spread) for v in values]
            pos_idx = max(range(m), key=lambda k: noisy[k])
        else:  # isscont_title_tokens
            noisy = [t + rng.uniform(0.0, planted_signal.noise * 40) for t in title_lens]
            pos_idx = max(range(m), key=lambda k: noisy[k])

        candidate_ids = []
        order = sorted(range(m), key=lambda k: (created[k], k))
        for k in order:
            is_pos = k == pos_idx
            cid = f"{pid}#i{issue_seq + 1}"
            labels = set(rng.sample(_LABEL_POOL, rng.randint(0, 3)))
            gfi_p = gfi_positive_prob if is_pos else gfi_negative_prob
            if rng.random() < gfi_p:
                labels.add("good first issue")
            if is_pos:
                closed_at = cutoff
            elif rng.random() < 0.7:
                closed_at = cutoff + timedelta(days=rng.randint(1, 24), hours=rng.randint(1, 23))
            else:
                closed_at = None
            _new_issue(
                id=cid,
                kind="issue",
                repo_id=pid,
                title=" ".join(_words(rng, title_lens[k], extra_words)),
                body=_body(rng, extra_words),
                labels=frozenset(labels),
                author_id=reporters[k],
                created_at=created[k],
                closed_at=closed_at,
                resolver_id=resolver_id if is_pos else None,
                is_gfi_labeled="good first issue" in labels,
            )
            candidate_ids.append(cid)
            if is_pos:
                fi_id = cid

        events.append(Event(timestamp=cutoff, kind="issue_resolved", artifact_id=fi_id, repo_id=pid))
        events.sort(key=lambda e: e.timestamp)
        corpus.developers[resolver_id] = DeveloperProfile(
            id=resolver_id,
            events=events,
            repos_contributed=frozenset(home_ids + [pid]),
        )
        corpus.lists.append(
            CandidateList(
                fi_id=fi_id,
                resolver_id=resolver_id,
                candidate_ids=candidate_ids,
                cutoff=cutoff,
                project_id=pid,
            )
        )

    corpus.report.counts = {
        "issues": len(corpus.issues),
        "developers": len(corpus.developers),
        "projects": len(corpus.projects),
        "lists": len(corpus.lists),
    }
    return corpus
