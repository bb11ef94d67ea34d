import math

import numpy as np
import pytest

from pfirec.corpus import Event, generate_synthetic_corpus
from pfirec.features import (
    FeatureExtractor,
    LabelCategoryMap,
    build_registry,
    count_markdown_constructs,
    default_label_map,
    readability,
    sentiment_polarity,
)
from pfirec.simtext import EmbeddingStore

from conftest import at, mk_corpus, mk_dev, mk_issue, mk_project

CUTOFF = at(days=100)


def extractor_for(corpus, **kwargs):
    return FeatureExtractor(corpus, **kwargs)


def pr_event(i, t, repo="org/other"):
    return Event(timestamp=t, kind="pr", artifact_id=f"{repo}#pr{i}", repo_id=repo)


class TestContentPreference:
    def test_empty_history_all_zero(self):
        corpus = mk_corpus(
            issues=[mk_issue("org/repo#s", title="parser bug")],
            developers=[mk_dev("dev-new")],
            projects=[mk_project()],
        )
        ex = extractor_for(corpus)
        out = ex.content_preference(corpus.developers["dev-new"], corpus.issues["org/repo#s"], CUTOFF)
        assert out["cont_prs_cos_cum"] == 0.0
        assert out["cont_prs_jac_cum"] == 0.0
        assert out["cont_prs_lab_cum"] == 0.0
        assert out["cont_prs_cos_avg"] == 0.0
        assert out["cont_prs_jac_avg"] == 0.0
        assert out["cont_prs_lab_avg"] == 0.0

    def test_two_identical_prs_jaccard(self):
        candidate = mk_issue("org/repo#s", title="parser crashes on nested widget")
        prs = [
            mk_issue(f"org/other#pr{i}", repo="org/other", kind="pull_request",
                     title="parser crashes on nested widget")
            for i in range(2)
        ]
        dev = mk_dev("dev-new", [pr_event(i, at(days=i + 1)) for i in range(2)])
        corpus = mk_corpus(issues=[candidate, *prs], developers=[dev],
                           projects=[mk_project(), mk_project(id="org/other")])
        out = extractor_for(corpus).content_preference(dev, candidate, CUTOFF)
        assert out["cont_prs_jac_cum"] == pytest.approx(2.0, abs=1e-12)
        assert out["cont_prs_jac_avg"] == pytest.approx(1.0, abs=1e-12)

    def test_three_pr_hand_embeddings(self):
        # dim-2 embedding fixture; expected value from direct arithmetic
        vecs = {
            "org/other#pr0": [1.0, 0.0],
            "org/other#pr1": [1.0, 1.0],
            "org/other#pr2": [0.0, 1.0],
            "org/repo#s": [3.0, 4.0],
        }
        store = EmbeddingStore(
            provider="external_file", dim=2,
            vectors={k: np.asarray(v, dtype=np.float32) for k, v in vecs.items()},
        )
        candidate = mk_issue("org/repo#s", title="parser")
        prs = [mk_issue(f"org/other#pr{i}", repo="org/other", kind="pull_request", title="x")
               for i in range(3)]
        dev = mk_dev("dev-new", [pr_event(i, at(days=i + 1)) for i in range(3)])
        corpus = mk_corpus(issues=[candidate, *prs], developers=[dev],
                           projects=[mk_project(), mk_project(id="org/other")])
        out = extractor_for(corpus, store=store).content_preference(dev, candidate, CUTOFF)

        def cos(a, b):
            num = a[0] * b[0] + a[1] * b[1]
            return num / (math.hypot(*a) * math.hypot(*b))

        expected = sum(cos(vecs[f"org/other#pr{i}"], vecs["org/repo#s"]) for i in range(3))
        assert out["cont_prs_cos_cum"] == pytest.approx(expected, abs=1e-9)
        assert out["cont_prs_cos_avg"] == pytest.approx(expected / 3, abs=1e-9)

    def test_label_overlap_counts(self):
        candidate = mk_issue("org/repo#s", labels=["bug", "parser"])
        prs = [
            mk_issue("org/other#pr0", repo="org/other", kind="pull_request", labels=["bug"]),
            mk_issue("org/other#pr1", repo="org/other", kind="pull_request", labels=["ui"]),
            mk_issue("org/other#pr2", repo="org/other", kind="pull_request", labels=["parser", "ui"]),
        ]
        dev = mk_dev("dev-new", [pr_event(i, at(days=i + 1)) for i in range(3)])
        corpus = mk_corpus(issues=[candidate, *prs], developers=[dev],
                           projects=[mk_project(), mk_project(id="org/other")])
        out = extractor_for(corpus).content_preference(dev, candidate, CUTOFF)
        assert out["cont_prs_lab_cum"] == 2.0
        assert out["cont_prs_lab_avg"] == pytest.approx(2 / 3)

    def test_language_familiarity(self):
        candidate = mk_issue("org/repo#s")
        commits = [mk_issue(f"org/py#c{i}", repo="org/py", kind="commit", title="msg")
                   for i in range(2)]
        other = mk_issue("org/js#c9", repo="org/js", kind="commit", title="msg")
        events = [Event(timestamp=at(days=i + 1), kind="commit", artifact_id=c.id, repo_id=c.repo_id)
                  for i, c in enumerate([*commits, other])]
        dev = mk_dev("dev-new", events)
        corpus = mk_corpus(issues=[candidate, *commits, other], developers=[dev],
                           projects=[mk_project(language="python"),
                                     mk_project(id="org/py", language="python"),
                                     mk_project(id="org/js", language="javascript")])
        out = extractor_for(corpus).content_preference(dev, candidate, CUTOFF)
        assert out["cont_lang_commits"] == 2.0

    def test_fi_resolution_artifact_excluded(self):
        candidate = mk_issue("org/repo#s", title="alpha beta")
        fi_pr = mk_issue("org/repo#prX", kind="pull_request", title="alpha beta")
        ev = Event(timestamp=at(days=1), kind="pr", artifact_id="org/repo#prX", repo_id="org/repo")
        dev = mk_dev("dev-new", [ev])
        corpus = mk_corpus(issues=[candidate, fi_pr], developers=[dev], projects=[mk_project()])
        ex = extractor_for(corpus)
        with_excl = ex.content_preference(dev, candidate, CUTOFF, fi_id="org/repo#prX")
        assert with_excl["cont_prs_jac_cum"] == 0.0


class TestDomainPreference:
    def test_identical_readme_average_one(self):
        readme = "# proj\nA renderer for nested widget layouts."
        projects = [
            mk_project(id="org/repo", readme=readme, description="alpha"),
            mk_project(id="org/home", readme=readme, description="beta"),
        ]
        commit = mk_issue("org/home#c0", repo="org/home", kind="commit", title="msg")
        dev = mk_dev("dev-new", [Event(timestamp=at(1), kind="commit",
                                       artifact_id=commit.id, repo_id="org/home")])
        candidate = mk_issue("org/repo#s")
        corpus = mk_corpus(issues=[candidate, commit], developers=[dev], projects=projects)
        out = extractor_for(corpus).domain_preference(dev, candidate, CUTOFF)
        assert out["dom_readme_jac_avg"] == pytest.approx(1.0)
        assert out["dom_readme_cos_avg"] == pytest.approx(1.0, abs=1e-6)

    def test_zero_commits_ratio_zero(self):
        candidate = mk_issue("org/repo#s")
        corpus = mk_corpus(issues=[candidate], developers=[mk_dev("dev-new")],
                           projects=[mk_project(topics=["ml"])])
        out = extractor_for(corpus).domain_preference(
            corpus.developers["dev-new"], candidate, CUTOFF)
        assert out["dom_topic_commit_ratio"] == 0.0
        assert out["dom_topic_commits"] == 0.0

    def test_topic_overlap_three_of_four(self):
        candidate = mk_issue("org/repo#s")
        projects = [
            mk_project(id="org/repo", topics=["ml", "data"]),
            mk_project(id="org/t1", topics=["ml"]),
            mk_project(id="org/t2", topics=["data", "web"]),
            mk_project(id="org/t3", topics=["web"]),
        ]
        commits = [
            mk_issue("org/t1#c0", repo="org/t1", kind="commit", title="m"),
            mk_issue("org/t1#c1", repo="org/t1", kind="commit", title="m"),
            mk_issue("org/t2#c2", repo="org/t2", kind="commit", title="m"),
            mk_issue("org/t3#c3", repo="org/t3", kind="commit", title="m"),
        ]
        dev = mk_dev("dev-new", [
            Event(timestamp=at(days=i + 1), kind="commit", artifact_id=c.id, repo_id=c.repo_id)
            for i, c in enumerate(commits)
        ])
        corpus = mk_corpus(issues=[candidate, *commits], developers=[dev], projects=projects)
        out = extractor_for(corpus).domain_preference(dev, candidate, CUTOFF)
        assert out["dom_topic_commits"] == 3.0
        assert out["dom_topic_commit_ratio"] == pytest.approx(0.75)


class TestOssExperience:
    def test_fresh_developer_zeros(self):
        candidate = mk_issue("org/repo#s")
        corpus = mk_corpus(issues=[candidate], developers=[mk_dev("dev-new")],
                           projects=[mk_project()])
        out = extractor_for(corpus).oss_experience(corpus.developers["dev-new"], candidate, CUTOFF)
        assert all(v == 0.0 for v in out.values())

    def test_fixture_counts(self):
        candidate = mk_issue("org/repo#s")
        events = []
        for i in range(5):
            events.append(Event(timestamp=at(days=i), kind="commit",
                                artifact_id=f"org/r1#c{i}", repo_id="org/r1"))
        for i in range(2):
            events.append(Event(timestamp=at(days=10 + i), kind="pr",
                                artifact_id=f"org/r2#p{i}", repo_id="org/r2"))
        events.append(Event(timestamp=at(days=20), kind="pr_review",
                            artifact_id="org/r3#p9", repo_id="org/r3"))
        for i in range(3):
            events.append(Event(timestamp=at(days=30 + i), kind="issue_reported",
                                artifact_id=f"org/r1#i{i}", repo_id="org/r1"))
        events.append(Event(timestamp=at(days=40), kind="issue_reported",
                            artifact_id="org/repo#i9", repo_id="org/repo"))
        dev = mk_dev("dev-new", events)
        corpus = mk_corpus(issues=[candidate], developers=[dev], projects=[mk_project()])
        out = extractor_for(corpus).oss_experience(dev, candidate, CUTOFF)
        assert out == {
            "gener_commits": 5.0,
            "gener_prs": 2.0,
            "gener_pr_reviews": 1.0,
            "gener_repos_contributed": 4.0,
            "gener_issues_reported": 4.0,
            "gener_issues_reported_in_project": 1.0,
        }

    def test_event_at_cutoff_excluded(self):
        candidate = mk_issue("org/repo#s")
        boundary = Event(timestamp=CUTOFF, kind="commit", artifact_id="x#1", repo_id="x")
        dev = mk_dev("dev-new", [boundary])
        corpus = mk_corpus(issues=[candidate], developers=[dev], projects=[mk_project()])
        out = extractor_for(corpus).oss_experience(dev, candidate, CUTOFF)
        assert out["gener_commits"] == 0.0


class TestActiveness:
    def test_no_recent_events_zero(self):
        from datetime import timedelta

        old = Event(timestamp=CUTOFF - timedelta(days=120), kind="commit",
                    artifact_id="x#1", repo_id="x")
        dev = mk_dev("dev-new", [old])
        corpus = mk_corpus(developers=[dev], projects=[mk_project()])
        out = extractor_for(corpus).activeness(dev, CUTOFF)
        assert all(v == 0.0 for v in out.values())

    def test_commit_45_days_before(self):
        from datetime import timedelta

        dev = mk_dev("dev-new", [Event(timestamp=CUTOFF - timedelta(days=45), kind="commit",
                                       artifact_id="x#1", repo_id="x")])
        corpus = mk_corpus(developers=[dev], projects=[mk_project()])
        out = extractor_for(corpus).activeness(dev, CUTOFF)
        assert (out["act_commits_30d"], out["act_commits_60d"], out["act_commits_90d"]) == (0.0, 1.0, 1.0)

    def test_window_boundaries(self):
        from datetime import timedelta

        just_inside = Event(timestamp=CUTOFF - timedelta(days=30) + timedelta(seconds=1),
                            kind="commit", artifact_id="x#1", repo_id="x")
        exactly_30 = Event(timestamp=CUTOFF - timedelta(days=30),
                           kind="commit", artifact_id="x#2", repo_id="x")
        dev = mk_dev("dev-new", [just_inside, exactly_30])
        corpus = mk_corpus(developers=[dev], projects=[mk_project()])
        out = extractor_for(corpus).activeness(dev, CUTOFF)
        # half-open [cutoff - w, cutoff): the 30-days-minus-1s event and the
        # exactly-30-days event are both inside the 30d window
        assert out["act_commits_30d"] == 2.0


class TestSentiment:
    def test_empty_text(self):
        assert sentiment_polarity("") == 0.0

    def test_single_hit(self):
        assert sentiment_polarity("this widget is great") == pytest.approx(0.8)

    def test_negation_flips(self):
        assert sentiment_polarity("not good") == pytest.approx(-0.7)

    def test_negation_window_two_tokens(self):
        assert sentiment_polarity("not very good") == pytest.approx(-0.7)
        assert sentiment_polarity("not in any way good") == pytest.approx(0.7)

    def test_mean_of_hits(self):
        lex = {"alpha": 0.2, "beta": 0.4}
        assert sentiment_polarity("alpha beta", lex) == pytest.approx(0.3)

    def test_sentiment_features_means_and_medians(self):
        lex = {"alpha": 0.2, "beta": 0.4, "gamma": 0.9}
        prs = [
            mk_issue(f"org/o#pr{i}", repo="org/o", kind="pull_request", title=word)
            for i, word in enumerate(["alpha", "beta", "gamma"])
        ]
        dev = mk_dev("dev-new", [pr_event(i, at(days=i + 1), repo="org/o") for i in range(3)])
        corpus = mk_corpus(issues=prs, developers=[dev],
                           projects=[mk_project(), mk_project(id="org/o")])
        out = extractor_for(corpus, lexicon=lex).sentiment_features(dev, CUTOFF)
        assert out["senti_prs_mean"] == pytest.approx(0.5)
        assert out["senti_prs_median"] == pytest.approx(0.4)
        assert out["senti_issues_mean"] == 0.0
        assert out["senti_issues_median"] == 0.0

    def test_even_count_median_midpoint(self):
        lex = {"alpha": 0.2, "beta": 0.4}
        prs = [
            mk_issue(f"org/o#pr{i}", repo="org/o", kind="pull_request", title=word)
            for i, word in enumerate(["alpha", "beta"])
        ]
        dev = mk_dev("dev-new", [pr_event(i, at(days=i + 1), repo="org/o") for i in range(2)])
        corpus = mk_corpus(issues=prs, developers=[dev],
                           projects=[mk_project(), mk_project(id="org/o")])
        out = extractor_for(corpus, lexicon=lex).sentiment_features(dev, CUTOFF)
        assert out["senti_prs_median"] == pytest.approx(0.3)


class TestReadability:
    FOX = "The quick brown fox jumps over the lazy dog."

    def test_fox_flesch(self):
        flesch, _, _, _ = readability(self.FOX)
        # W=9, S=1, Y=11: 206.835 - 1.015*9 - 84.6*(11/9)
        assert flesch == pytest.approx(94.3, abs=0.5)

    def test_fox_coleman_liau(self):
        _, _, coleman, _ = readability(self.FOX)
        # letters=35: 0.0588*(3500/9) - 0.296*(100/9) - 15.8
        assert coleman == pytest.approx(3.78, abs=0.1)

    def test_fox_kincaid_and_ari(self):
        _, kincaid, _, ari = readability(self.FOX)
        assert kincaid == pytest.approx(0.39 * 9 + 11.8 * (11 / 9) - 15.59, abs=1e-9)
        assert ari == pytest.approx(4.71 * (35 / 9) + 0.5 * 9 - 21.43, abs=1e-9)

    def test_empty(self):
        assert readability("") == (0.0, 0.0, 0.0, 0.0)
        assert readability("   ...   ") == (0.0, 0.0, 0.0, 0.0)


class TestIssueContent:
    def test_label_category_counts(self):
        issue = mk_issue("org/repo#s", labels=["good first issue", "bug"])
        corpus = mk_corpus(issues=[issue], projects=[mk_project()])
        out = extractor_for(corpus).issue_content_features(issue)
        assert out["isscont_label_newcomer_friendly"] == 1.0
        assert out["isscont_label_bug"] == 1.0
        assert out["isscont_labels_total"] == 2.0

    def test_markdown_counts(self):
        body = "intro\n```\ncode a\n```\nmore\n```\ncode b\n```\nsee https://x.y/z"
        assert count_markdown_constructs(body) == (2, 1, 0)
        issue = mk_issue("org/repo#s", body=body)
        corpus = mk_corpus(issues=[issue], projects=[mk_project()])
        out = extractor_for(corpus).issue_content_features(issue)
        assert out["isscont_code_snippets"] == 2.0
        assert out["isscont_urls"] == 1.0
        assert out["isscont_images"] == 0.0

    def test_empty_body(self):
        issue = mk_issue("org/repo#s", title="", body="")
        corpus = mk_corpus(issues=[issue], projects=[mk_project()])
        out = extractor_for(corpus).issue_content_features(issue)
        assert out["isscont_title_tokens"] == 0.0
        assert out["isscont_body_tokens"] == 0.0
        assert out["isscont_code_snippets"] == 0.0
        assert out["isscont_labels_total"] == 0.0

    def test_label_map_requires_twelve_categories(self):
        with pytest.raises(ValueError):
            LabelCategoryMap({"Bug": ["bug"]})
        assert len(default_label_map().patterns) == 12


class TestIssueBackground:
    def test_project_stats_passthrough(self):
        issue = mk_issue("org/repo#s")
        project = mk_project(open_issues=7, open_issue_ratio=0.25, gfi_count=3,
                             gfi_ratio=0.1, commits=100, prs=20, closed_issues=21,
                             stars=999, commit_contributors=5)
        corpus = mk_corpus(issues=[issue], projects=[project])
        out = extractor_for(corpus).issue_background_features(issue, CUTOFF)
        assert out["issback_open_issues"] == 7.0
        assert out["issback_open_issue_ratio"] == 0.25
        assert out["issback_gfi_count"] == 3.0
        assert out["issback_stars"] == 999.0
        assert out["issback_commit_contributors"] == 5.0

    def test_owner_without_projects_max_stars_zero(self):
        issue = mk_issue("org/repo#s")
        corpus = mk_corpus(issues=[issue], projects=[mk_project(owner="dev-owner")],
                           developers=[mk_dev("dev-owner")])
        out = extractor_for(corpus).issue_background_features(issue, CUTOFF)
        assert out["issback_owner_max_stars"] == 0.0

    def test_reporter_gfi_ratio(self):
        reported = [
            mk_issue(f"org/repo#i{i}", labels=["good first issue"] if i == 0 else [],
                     gfi=(i == 0), author="dev-rep")
            for i in range(4)
        ]
        events = [Event(timestamp=at(days=i + 1), kind="issue_reported",
                        artifact_id=f"org/repo#i{i}", repo_id="org/repo") for i in range(4)]
        candidate = mk_issue("org/repo#s", author="dev-rep")
        corpus = mk_corpus(issues=[candidate, *reported],
                           developers=[mk_dev("dev-rep", events)],
                           projects=[mk_project()])
        out = extractor_for(corpus).issue_background_features(candidate, CUTOFF)
        assert out["issback_reporter_issues_reported"] == 4.0
        assert out["issback_reporter_gfi_reported_ratio"] == pytest.approx(0.25)

    def test_reporter_max_stars_and_has_commits(self):
        candidate = mk_issue("org/repo#s", author="dev-rep")
        starry = mk_project(id="org/star", stars=4242)
        ev = Event(timestamp=at(days=1), kind="commit", artifact_id="org/star#c1",
                   repo_id="org/star")
        corpus = mk_corpus(issues=[candidate], developers=[mk_dev("dev-rep", [ev])],
                           projects=[mk_project(), starry])
        out = extractor_for(corpus).issue_background_features(candidate, CUTOFF)
        assert out["issback_reporter_max_stars"] == 4242.0
        assert out["issback_reporter_has_commits"] == 0.0


@pytest.fixture(scope="module")
def small_corpus():
    return generate_synthetic_corpus(seed=21, n_projects=3, n_lists=12, median_list_size=14)


class TestAssemble:
    def test_vector_length_matches_registry(self, small_corpus):
        ex = FeatureExtractor(small_corpus)
        clist = small_corpus.lists[0]
        vec = ex.assemble(small_corpus.developers[clist.resolver_id],
                          small_corpus.issues[clist.fi_id], clist.cutoff, clist.fi_id)
        assert vec.shape == (len(ex.registry),)
        assert np.all(np.isfinite(vec))

    def test_deterministic(self, small_corpus):
        clist = small_corpus.lists[0]
        vecs = []
        for _ in range(2):
            ex = FeatureExtractor(small_corpus)
            vecs.append(ex.assemble(small_corpus.developers[clist.resolver_id],
                                    small_corpus.issues[clist.fi_id], clist.cutoff, clist.fi_id))
        assert np.array_equal(vecs[0], vecs[1])

    def test_senti_mask_removes_four(self):
        registry = build_registry()
        masked = registry.drop_group("Senti")
        assert len(registry) - len(masked) == 4
        assert not any(e.group == "Senti" for e in masked.entries)

    def test_registry_pinned(self):
        registry = build_registry()
        assert len(registry) == 110
        assert registry.version == "v1:5eeb7da80715"
        assert build_registry().names == registry.names

    def test_bounds_on_synthetic_pairs(self, small_corpus):
        ex = FeatureExtractor(small_corpus)
        registry = ex.registry
        for clist in small_corpus.lists[:4]:
            fl = ex.featurize_list(clist)
            for row in fl.x:
                for name, value in zip(registry.names, row):
                    if "ratio" in name or name.endswith("_has_commits"):
                        assert 0.0 <= value <= 1.0, name
                    if "jac" in name and name.endswith("_avg"):
                        assert 0.0 <= value <= 1.0, name
                    if "cos" in name and name.endswith("_avg"):
                        assert -1.0 <= value <= 1.0 + 1e-9, name
                    if name.startswith(("gener_", "act_")) or name.endswith(
                        ("_cum", "_tokens", "_total", "commits")
                    ) and "ratio" not in name:
                        if "cos" not in name and "jac" not in name:
                            assert value >= 0.0, name
                            assert value == int(value), name

    def test_monotonicity_extra_pr(self):
        candidate = mk_issue("org/repo#s", title="parser widget cache")
        pr0 = mk_issue("org/o#pr0", repo="org/o", kind="pull_request", title="buffer stream")
        pr1 = mk_issue("org/o#pr1", repo="org/o", kind="pull_request", title="parser widget cache")
        base_dev = mk_dev("dev-new", [pr_event(0, at(days=1), "org/o")])
        more_dev = mk_dev("dev-new2", [pr_event(0, at(days=1), "org/o"),
                                       pr_event(1, at(days=2), "org/o")])
        corpus = mk_corpus(issues=[candidate, pr0, pr1],
                           developers=[base_dev, more_dev],
                           projects=[mk_project(), mk_project(id="org/o")])
        ex = extractor_for(corpus)
        base = ex.content_preference(base_dev, candidate, CUTOFF)
        more = ex.content_preference(more_dev, candidate, CUTOFF)
        # the added PR's text equals the candidate's, so its pair cosine is 1 >= 0
        assert more["cont_prs_cos_cum"] >= base["cont_prs_cos_cum"]
        base_other = ex.oss_experience(base_dev, candidate, CUTOFF)
        # adding a PR of another kind never changes commit-based groups
        assert ex.activeness(base_dev, CUTOFF)["act_commits_30d"] == 0.0
        assert base_other["gener_commits"] == 0.0

    def test_jobs_do_not_change_results(self, small_corpus):
        from pfirec.features import featurize_lists

        serial = featurize_lists(small_corpus, jobs=1)
        threaded = featurize_lists(small_corpus, jobs=4)
        assert [fl.fi_id for fl in serial] == [fl.fi_id for fl in threaded]
        for a, b in zip(serial, threaded):
            assert np.array_equal(a.x, b.x)

    def test_external_store_drives_featurization(self, small_corpus):
        from pfirec.features import corpus_plain_texts

        rng = np.random.default_rng(5)
        vectors = {
            doc_id: rng.normal(size=8).astype(np.float32)
            for doc_id in corpus_plain_texts(small_corpus)
        }
        store = EmbeddingStore(provider="external_file", dim=8, vectors=vectors)
        ex = FeatureExtractor(small_corpus, store=store)
        fl = ex.featurize_list(small_corpus.lists[0])
        assert np.all(np.isfinite(fl.x))
        incomplete = EmbeddingStore(provider="external_file", dim=8,
                                    vectors=dict(list(vectors.items())[:3]))
        with pytest.raises(KeyError):
            FeatureExtractor(small_corpus, store=incomplete).featurize_list(small_corpus.lists[0])

    def test_cutoff_hygiene(self):
        candidate = mk_issue("org/repo#s", title="parser widget")
        pr_before = mk_issue("org/o#pr0", repo="org/o", kind="pull_request", title="parser")
        pr_after = mk_issue("org/o#pr9", repo="org/o", kind="pull_request", title="parser widget")
        clean = mk_dev("dev-a", [pr_event(0, at(days=1), "org/o")])
        noisy_events = [
            pr_event(0, at(days=1), "org/o"),
            Event(timestamp=CUTOFF, kind="pr", artifact_id="org/o#pr9", repo_id="org/o"),
            Event(timestamp=at(days=200), kind="commit", artifact_id="org/o#pr9", repo_id="org/o"),
        ]
        noisy = mk_dev("dev-b", noisy_events)
        corpus = mk_corpus(issues=[candidate, pr_before, pr_after],
                           developers=[clean, noisy],
                           projects=[mk_project(), mk_project(id="org/o")])
        ex = extractor_for(corpus)
        groups = ("content_preference", "domain_preference", "oss_experience")
        for op in groups:
            a = getattr(ex, op)(clean, candidate, CUTOFF)
            b = getattr(ex, op)(noisy, candidate, CUTOFF)
            assert a == b, op
        assert ex.activeness(clean, CUTOFF) == ex.activeness(noisy, CUTOFF)
        assert ex.sentiment_features(clean, CUTOFF) == ex.sentiment_features(noisy, CUTOFF)
