import json
import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfirec.ltr import (
    RankingModel,
    RegistryMismatchError,
    TrainConfig,
    TreeNode,
    baseline_gfirandom,
    baseline_random,
    delta_ndcg_single_positive,
    lambda_pair,
    load_model,
    predict,
    predict_matrix,
    rank,
    save_model,
    train_lambdamart,
    train_pointwise_gbt,
)


def hand_lambda(score_pos, score_neg, delta, sigma):
    # independent evaluation of the stated formula
    rho = 1.0 / (1.0 + math.exp(max(-50.0, min(50.0, sigma * (score_pos - score_neg)))))
    return (-sigma * rho * delta, sigma * sigma * rho * (1.0 - rho) * delta)


class TestLambdaPair:
    def test_equal_scores_pinned_case(self):
        lam, hess = lambda_pair(0.0, 0.0, 0.5, 1.0)
        assert lam == pytest.approx(-0.25, abs=1e-12)
        assert hess == pytest.approx(0.125, abs=1e-12)

    def test_zero_delta(self):
        assert lambda_pair(1.0, -1.0, 0.0, 1.0) == (0.0, 0.0)

    def test_saturation(self):
        lam, hess = lambda_pair(100.0, -100.0, 1.0, 1.0)
        assert -1e-10 < lam < 0.0
        assert 0.0 <= hess < 1e-10

    def test_negative_delta_rejected(self):
        with pytest.raises(ValueError):
            lambda_pair(0.0, 0.0, -0.1, 1.0)

    @given(
        st.floats(-20, 20), st.floats(-20, 20),
        st.floats(0, 1), st.floats(0.1, 4),
    )
    @settings(max_examples=300, deadline=None)
    def test_matches_hand_formula_and_hessian_nonneg(self, sp, sn, delta, sigma):
        lam, hess = lambda_pair(sp, sn, delta, sigma)
        exp_lam, exp_hess = hand_lambda(sp, sn, delta, sigma)
        assert lam == pytest.approx(exp_lam, abs=1e-12)
        assert hess == pytest.approx(exp_hess, abs=1e-12)
        assert hess >= 0.0
        assert lam <= 0.0  # contribution to the positive is never upward


class TestDeltaNdcg:
    def test_rank_one_vs_two(self):
        expected = abs(1.0 - 1.0 / math.log2(3.0))
        assert delta_ndcg_single_positive(1, 2) == pytest.approx(expected, abs=1e-12)
        assert delta_ndcg_single_positive(1, 2) == pytest.approx(0.36907, abs=1e-5)

    def test_equal_ranks(self):
        assert delta_ndcg_single_positive(7, 7) == 0.0

    def test_limit_to_one(self):
        previous = 0.0
        for r in (10, 1000, 10**6, 10**9):
            value = delta_ndcg_single_positive(1, r)
            assert value > previous
            previous = value
        assert delta_ndcg_single_positive(1, 10**9) > 0.96

    def test_symmetry(self):
        assert delta_ndcg_single_positive(2, 9) == delta_ndcg_single_positive(9, 2)


def make_list(rng, n_items, n_features, signal_col=0, noise=0.01):
    x = rng.random((n_items, n_features))
    pos = int(np.argmax(x[:, signal_col] + rng.random(n_items) * noise))
    return x, pos


def planted_lists(seed, n_lists, n_items=12, n_features=6):
    rng = np.random.default_rng(seed)
    return [make_list(rng, n_items, n_features) for _ in range(n_lists)]


class TestTraining:
    def test_n_trees_zero_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(n_trees=0).validate()

    def test_bad_learning_rate_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0).validate()
        with pytest.raises(ValueError):
            TrainConfig(sigma=0.0).validate()

    def test_learns_planted_signal(self):
        train = planted_lists(1, 120)
        val = planted_lists(2, 20)
        test = planted_lists(3, 50)
        cfg = TrainConfig(n_trees=30, max_leaves=7, min_samples_leaf=5,
                          learning_rate=0.2, early_stopping_rounds=8)
        model = train_lambdamart(train, val, cfg, "reg-v")
        hits = 0
        for x, pos in test:
            scores = predict_matrix(model, x)
            hits += int(np.argmax(scores)) == pos
        assert hits / len(test) >= 0.8

    def test_same_seed_byte_identical_model(self, tmp_path):
        train = planted_lists(5, 40)
        val = planted_lists(6, 10)
        cfg = TrainConfig(n_trees=8, max_leaves=7, min_samples_leaf=5,
                          learning_rate=0.2, early_stopping_rounds=4, seed=42)
        paths = []
        for name in ("a.json", "b.json"):
            model = train_lambdamart(train, val, cfg, "reg-v")
            save_model(model, tmp_path / name)
            paths.append(tmp_path / name)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_loss_non_increasing_per_round(self):
        train = planted_lists(7, 80)
        cfg = TrainConfig(n_trees=10, max_leaves=7, min_samples_leaf=5,
                          learning_rate=0.1, early_stopping_rounds=10)
        model = train_lambdamart(train, [], cfg, "reg-v")
        before = model.train_report["loss_before"]
        after = model.train_report["loss_after"]
        assert len(before) == 10
        for b, a in zip(before, after):
            assert a <= b + 1e-9

    def test_single_positive_list_skipped_with_warning(self, caplog):
        lists = planted_lists(8, 6) + [(np.ones((1, 6)), 0)]
        cfg = TrainConfig(n_trees=2, max_leaves=3, min_samples_leaf=2, early_stopping_rounds=2)
        model = train_lambdamart(lists, [], cfg, "reg-v")
        assert len(model.trees) == 2

    def test_degenerate_single_list_does_not_crash(self):
        lists = planted_lists(9, 1, n_items=8)
        cfg = TrainConfig(n_trees=2, max_leaves=3, min_samples_leaf=2, early_stopping_rounds=2)
        model = train_pointwise_gbt(lists, [], cfg, "reg-v")
        assert model.trees

    def test_pointwise_beats_random_on_planted(self):
        train = planted_lists(10, 120)
        test = planted_lists(11, 50)
        cfg = TrainConfig(n_trees=20, max_leaves=7, min_samples_leaf=5,
                          learning_rate=0.2, early_stopping_rounds=20)
        model = train_pointwise_gbt(train, [], cfg, "reg-v")
        hits = 0
        for x, pos in test:
            hits += int(np.argmax(predict_matrix(model, x))) == pos
        assert hits / len(test) >= 0.5  # random is ~1/12

    def test_constant_feature_never_split(self):
        rng = np.random.default_rng(12)
        lists = []
        for _ in range(40):
            x = rng.random((10, 4))
            x[:, 2] = 3.25  # constant column
            lists.append((x, int(np.argmax(x[:, 0]))))
        cfg = TrainConfig(n_trees=10, max_leaves=7, min_samples_leaf=2,
                          learning_rate=0.2, early_stopping_rounds=10)
        model = train_lambdamart(lists, [], cfg, "reg-v")

        def features_used(node, acc):
            if node.left is not None:
                acc.add(node.feature)
                features_used(node.left, acc)
                features_used(node.right, acc)
            return acc

        used = set()
        for tree in model.trees:
            features_used(tree, used)
        assert 2 not in used

    def test_lambda_antisymmetry_sums_to_zero(self):
        from pfirec.ltr import _lambda_gradients, _pair_deltas, _stack_lists

        lists = planted_lists(13, 10)
        X, ptr, pos_rows = _stack_lists(lists, "train")
        scores = np.random.default_rng(0).normal(size=X.shape[0])
        delta, pos_of_row = _pair_deltas(scores, ptr, pos_rows)
        lambdas, hessians = _lambda_gradients(scores, delta, pos_of_row, ptr, pos_rows, 1.0)
        for i in range(len(ptr) - 1):
            seg = lambdas[ptr[i]:ptr[i + 1]]
            assert float(np.sum(seg)) == pytest.approx(0.0, abs=1e-12)
        assert np.all(hessians >= 0.0)

    def test_feature_scale_robustness(self):
        train = planted_lists(14, 80)
        cfg = TrainConfig(n_trees=6, max_leaves=7, min_samples_leaf=5,
                          learning_rate=0.2, early_stopping_rounds=6)
        model_a = train_lambdamart(train, [], cfg, "reg-v")
        scale = 37.5
        scaled = [(x * np.where(np.arange(x.shape[1]) == 0, scale, 1.0), pos) for x, pos in train]
        model_b = train_lambdamart(scaled, [], cfg, "reg-v")

        def structure(node):
            if node.left is None:
                return ("leaf", round(node.value, 10))
            return (node.feature, structure(node.left), structure(node.right))

        assert [structure(t) for t in model_a.trees] == [structure(t) for t in model_b.trees]
        for (xa, _), (xb, _) in zip(train, scaled):
            ra = np.argsort(-predict_matrix(model_a, xa), kind="stable")
            rb = np.argsort(-predict_matrix(model_b, xb), kind="stable")
            assert np.array_equal(ra, rb)


class TestPredictRank:
    def test_empty_ensemble_zero(self):
        model = RankingModel(trees=[], learning_rate=0.5)
        assert predict(model, [1.0, 2.0]) == 0.0

    def test_single_leaf_scaled_by_learning_rate(self):
        model = RankingModel(trees=[TreeNode(value=3.0)], learning_rate=0.1)
        assert predict(model, [0.0]) == pytest.approx(0.3)

    def test_hand_built_tree_trace(self):
        tree = TreeNode(feature=1, threshold=2.0,
                        left=TreeNode(value=-1.0), right=TreeNode(value=4.0))
        model = RankingModel(trees=[tree], learning_rate=1.0)
        assert predict(model, [9.0, 1.5]) == -1.0
        assert predict(model, [9.0, 2.0]) == -1.0  # boundary goes left
        assert predict(model, [9.0, 2.1]) == 4.0

    def make_score_model(self):
        # feature 0 in {1,2,3} -> scores {0.9, 0.1, 0.5}
        tree = TreeNode(
            feature=0, threshold=1.5,
            left=TreeNode(value=0.9),
            right=TreeNode(feature=0, threshold=2.5,
                           left=TreeNode(value=0.1), right=TreeNode(value=0.5)),
        )
        return RankingModel(trees=[tree], learning_rate=1.0)

    def test_rank_by_score(self):
        model = self.make_score_model()
        items = [("first", [1.0]), ("second", [2.0]), ("third", [3.0])]
        assert rank(model, items) == ["first", "third", "second"]

    def test_rank_tie_breaks_by_created_at_then_id(self):
        model = RankingModel(trees=[TreeNode(value=1.0)], learning_rate=1.0)
        created = {
            "b": datetime(2021, 1, 2, tzinfo=timezone.utc),
            "a": datetime(2021, 1, 3, tzinfo=timezone.utc),
            "c": datetime(2021, 1, 1, tzinfo=timezone.utc),
        }
        items = [("a", [0.0]), ("b", [0.0]), ("c", [0.0])]
        assert rank(model, items, created) == ["c", "b", "a"]
        no_dates = rank(model, items)
        assert no_dates == ["a", "b", "c"]

    def test_rank_permutation_invariant(self):
        model = self.make_score_model()
        items = [("first", [1.0]), ("second", [2.0]), ("third", [3.0])]
        expected = rank(model, items)
        assert rank(model, list(reversed(items))) == expected
        assert sorted(rank(model, items)) == sorted(i[0] for i in items)


class TestBaselines:
    def test_random_mean_first_hit(self):
        ids = [f"i{k}" for k in range(32)]
        positive = "i7"
        total = 0
        for seed in range(10_000):
            ranked = baseline_random(ids, seed)
            total += ranked.index(positive) + 1
        mean_fh = total / 10_000
        assert 15.5 <= mean_fh <= 17.5

    def test_gfirandom_equals_random_without_gfi(self):
        ids = [f"i{k}" for k in range(20)]
        for seed in (0, 1, 99):
            assert baseline_gfirandom([(i, False) for i in ids], seed) == baseline_random(ids, seed)

    def test_gfirandom_only_positive_labeled(self):
        items = [(f"i{k}", k == 4) for k in range(20)]
        for seed in range(50):
            assert baseline_gfirandom(items, seed)[0] == "i4"

    def test_random_is_permutation(self):
        ids = [f"i{k}" for k in range(15)]
        assert sorted(baseline_random(ids, 3)) == sorted(ids)


class TestPersistence:
    def test_roundtrip_predictions(self, tmp_path):
        train = planted_lists(15, 30)
        cfg = TrainConfig(n_trees=4, max_leaves=5, min_samples_leaf=4,
                          learning_rate=0.2, early_stopping_rounds=4)
        model = train_lambdamart(train, [], cfg, "reg-v1")
        save_model(model, tmp_path / "m.json")
        loaded = load_model(tmp_path / "m.json", "reg-v1")
        x = train[0][0]
        assert np.array_equal(predict_matrix(model, x), predict_matrix(loaded, x))

    def test_registry_mismatch_refused(self, tmp_path):
        model = RankingModel(trees=[TreeNode(value=1.0)], learning_rate=0.1,
                             registry_version="reg-old")
        save_model(model, tmp_path / "m.json")
        with pytest.raises(RegistryMismatchError):
            load_model(tmp_path / "m.json", "reg-new")
        assert load_model(tmp_path / "m.json").registry_version == "reg-old"

    def test_not_a_model_file(self, tmp_path):
        (tmp_path / "m.json").write_text(json.dumps({"format": "other"}))
        with pytest.raises(ValueError):
            load_model(tmp_path / "m.json")
