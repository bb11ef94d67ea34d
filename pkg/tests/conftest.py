"""Shared fixture helpers for building tiny hand corpora."""

from datetime import datetime, timedelta, timezone

import pytest

from pfirec.corpus import (
    Corpus,
    DeveloperProfile,
    IssueRecord,
    ProjectRecord,
    ProjectStats,
)

T0 = datetime(2021, 6, 1, 12, 0, 0, tzinfo=timezone.utc)


def at(days=0, hours=0, minutes=0, seconds=0):
    return T0 + timedelta(days=days, hours=hours, minutes=minutes, seconds=seconds)


def mk_issue(id, repo="org/repo", kind="issue", title="a title", body="", labels=(),
             author="dev-a", created=None, closed=None, resolver=None, gfi=False):
    return IssueRecord(
        id=id,
        kind=kind,
        repo_id=repo,
        title=title,
        body=body,
        labels=frozenset(labels),
        author_id=author,
        created_at=created if created is not None else T0,
        closed_at=closed,
        resolver_id=resolver,
        is_gfi_labeled=gfi,
    )


def mk_project(id="org/repo", description="", readme="", topics=(), language="python",
               owner="dev-owner", **stats):
    return ProjectRecord(
        id=id,
        description=description,
        readme=readme,
        topics=frozenset(topics),
        primary_language=language,
        stats=ProjectStats(**stats),
        owner_id=owner,
    )


def mk_dev(id, events=()):
    return DeveloperProfile(id=id, events=sorted(events, key=lambda e: e.timestamp),
                            repos_contributed=frozenset(e.repo_id for e in events))


def mk_corpus(issues=(), developers=(), projects=(), lists=()):
    corpus = Corpus()
    for rec in issues:
        corpus.issues[rec.id] = rec
    for dev in developers:
        corpus.developers[dev.id] = dev
    for proj in projects:
        corpus.projects[proj.id] = proj
    corpus.lists.extend(lists)
    return corpus


@pytest.fixture
def base_project():
    return mk_project()
