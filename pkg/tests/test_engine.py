import json
import math

import numpy as np
import pytest
from scipy import stats

from lexforest.engine import (
    AgreementScorer,
    RarityScorer,
    SearchConfig,
    SearchError,
    brute_force,
    classic_search,
    fixed_plan,
    greedy_trained_search,
    hash_uniform,
    learn_greedy_orders,
    make_try_plan,
    projection,
    projection_uniformity,
    resolve_tries,
    run_try,
    search,
    sparse_search,
)
from lexforest.exponents import greedy_exponents, random_exponents
from lexforest.model import CoordinateDistribution, DataModel, Dataset, generate_instance, preset, sample_pairs

from conftest import random_model


def pair_set(result):
    return set(zip(result.x0_index.tolist(), result.x1_index.tolist()))


def present_features(ds):
    return sorted({f for pts in (ds.x0, ds.x1) for p in pts for f in p})


class TestHashing:
    def test_open_unit_interval(self):
        u = hash_uniform(1, 2, np.arange(100_000))
        assert u.min() > 0.0 and u.max() < 1.0

    def test_pure(self):
        assert np.array_equal(hash_uniform(5, 3, [1, 2, 3]), hash_uniform(5, 3, [1, 2, 3]))
        assert not np.array_equal(hash_uniform(5, 3, [1, 2, 3]), hash_uniform(5, 4, [1, 2, 3]))
        assert not np.array_equal(hash_uniform(5, 3, [1, 2, 3]), hash_uniform(6, 3, [1, 2, 3]))

    def test_uniform(self):
        u = hash_uniform(11, 0, np.arange(50_000))
        assert stats.kstest(u, "uniform").pvalue > 1e-3


class TestTryPlan:
    def test_deterministic(self):
        m = preset("grouped")
        a, b = make_try_plan(m, 9, 4), make_try_plan(m, 9, 4)
        assert np.array_equal(a.order, b.order) and np.array_equal(a.r, b.r)

    def test_order_ascending_and_finite(self, rng):
        m = random_model(rng, 30, b=3)
        plan = make_try_plan(m, 1, 0)
        lam = plan.lambdas[plan.order]
        assert np.all(np.diff(lam) >= 0)
        assert plan.usable_count == np.isfinite(plan.lambdas).sum()
        assert np.array_equal(plan.lambdas, random_exponents(m, plan.r))

    def test_ties_broken_by_index(self):
        coord = CoordinateDistribution((0.3, 0.7), (0.3, 0.7))  # exponent 0 for every r
        plan = make_try_plan(DataModel((coord,) * 5), 3, 0)
        assert plan.order.tolist() == [0, 1, 2, 3, 4]

    def test_first_rank_uniform_on_homogeneous(self):
        d, tries = 8, 1000
        m = preset(f"bernoulli:p=0.8,d={d}")
        first = np.bincount([make_try_plan(m, 17, t).order[0] for t in range(tries)], minlength=d)
        sigma = math.sqrt(tries * (1 / d) * (1 - 1 / d))
        assert np.all(np.abs(first - tries / d) <= 3 * sigma)

    def test_strong_coordinate_leads(self):
        strong = CoordinateDistribution((0.5, 0.5), (0.5, 0.5))
        weak = CoordinateDistribution((0.02, 0.02), (0.5, 0.5))
        m = DataModel((weak, strong, weak, weak))
        firsts = [make_try_plan(m, 3, t).order[0] for t in range(500)]
        assert np.mean(np.array(firsts) == 1) > 0.99


class TestRunTry:
    def test_hand_example(self):
        ds = Dataset([[0, 0], [1, 1]], [[1, 1]], 2)
        res = run_try(ds, fixed_plan([0, 1]), SearchConfig(window=1))
        assert pair_set(res) == {(1, 0)}

    def test_window_covers_everything(self, rng):
        ds = generate_instance(preset("bernoulli:d=12", n0=9, n1=5), 3)
        res = run_try(ds, make_try_plan(preset("bernoulli:d=12"), 0, 0), SearchConfig(window=9))
        assert pair_set(res) == {(i, j) for i in range(9) for j in range(5)}

    def test_comparison_budget(self, rng):
        m = random_model(rng, 20, b=3, n0=200, n1=150)
        ds = generate_instance(m, 1)
        for a in (1, 2, 5):
            for t in range(5):
                res = run_try(ds, make_try_plan(m, 0, t), SearchConfig(window=a))
                assert res.comparisons <= 2 * a * ds.n1

    def test_window_monotone(self, rng):
        m = random_model(rng, 16, n0=100, n1=80)
        ds = generate_instance(m, 2)
        plan = make_try_plan(m, 5, 0)
        sets = [pair_set(run_try(ds, plan, SearchConfig(window=a))) for a in (1, 2, 3, 6)]
        assert all(s <= t for s, t in zip(sets, sets[1:]))

    def test_dense_sparse_equivalent(self):
        m = preset("sparse:d=400", n0=60)
        for seed in range(10):
            ds = generate_instance(m, seed)
            sp = ds.to_sparse()
            for t in range(3):
                dense = run_try(ds, make_try_plan(m, seed, t), SearchConfig(window=2))
                sparse = run_try(sp, make_try_plan(m, seed, t, coords=present_features(sp)), SearchConfig(window=2))
                assert pair_set(dense) == pair_set(sparse)

    def test_empty_feature_set_sorts_first(self):
        ds = Dataset([(3,), ()], [(3, 5)], 8, sparse=True)
        res = run_try(ds, fixed_plan([3, 5]), SearchConfig(window=1))
        # merged order is (), (3), (3,5): the window of one reaches only X0 index 0
        assert pair_set(res) == {(0, 0)}
        dense = run_try(ds.to_dense(), fixed_plan([3, 5, 0, 1, 2, 4, 6, 7]), SearchConfig(window=1))
        assert pair_set(dense) == {(0, 0)}

    def test_empty_side(self):
        ds = Dataset(np.zeros((0, 3), dtype=np.uint8), [[0, 1, 0]], 3, (2, 2, 2))
        with pytest.raises(SearchError):
            run_try(ds, fixed_plan([0, 1, 2]))

    def test_random_value_order_is_deterministic(self, rng):
        m = random_model(rng, 10, b=3, n0=50)
        ds = generate_instance(m, 4)
        cfg = SearchConfig(window=2, value_order="random")
        plan = make_try_plan(m, 8, 1)
        assert pair_set(run_try(ds, plan, cfg)) == pair_set(run_try(ds, plan, cfg))


class TestSearch:
    def test_zero_tries(self):
        m = preset("bernoulli:d=8", n0=10)
        rep = search(generate_instance(m, 0), m, SearchConfig(tries=0))
        assert rep.tries_executed == 0 and not rep.success and rep.candidates == []

    def test_identical_planted_pair(self):
        x0 = np.array([[0, 1, 1, 0], [1, 1, 1, 1], [0, 0, 0, 1]])
        x1 = np.array([[1, 1, 1, 1]])
        ds = Dataset(x0, x1, 4, (2, 2, 2, 2), planted=(1, 0))
        rep = search(ds, preset("bernoulli:p=0.9,d=4"), SearchConfig(window=1, tries=1))
        assert rep.success and rep.first_success_try == 1

    def test_deterministic(self):
        m = preset("grouped", n0=300)
        ds = generate_instance(m, 5)
        cfg = SearchConfig(window=2, tries=6, master_seed=3)
        assert search(ds, m, cfg).to_dict() == search(ds, m, cfg).to_dict()

    def test_success_monotone_in_tries(self):
        m = preset("grouped", n0=300)
        ds = generate_instance(m, 6)
        cands = [
            {(c.x0_index, c.x1_index) for c in search(ds, m, SearchConfig(tries=t, master_seed=1)).candidates}
            for t in (1, 2, 4, 8)
        ]
        assert all(a <= b for a, b in zip(cands, cands[1:]))

    def test_candidates_deduplicated_with_first_try(self):
        m = preset("bernoulli:p=0.9,d=16", n0=30)
        rep = search(generate_instance(m, 1), m, SearchConfig(window=30, tries=3))
        keys = [(c.x0_index, c.x1_index) for c in rep.candidates]
        assert len(keys) == len(set(keys)) == 900
        assert all(c.first_try_seen == 0 for c in rep.candidates)
        assert rep.total_comparisons <= rep.tries_executed * 2 * 30 * 30

    def test_scores_are_rarity_weighted(self):
        m = preset("unlimited:d=32", n0=20)
        ds = generate_instance(m, 2)
        rep = search(ds, m, SearchConfig(window=2, tries=2))
        scorer = RarityScorer(m)
        for c in rep.candidates[:10]:
            w = -np.log(np.where(ds.x0[c.x0_index] == 1, 0.375, 0.625))
            expected = float(w[ds.x0[c.x0_index] == ds.x1[c.x1_index]].sum())
            assert c.score == pytest.approx(expected)
            assert scorer.score_pairs(ds, [c.x0_index], [c.x1_index])[0] == pytest.approx(expected)

    def test_score_floor(self):
        m = preset("bernoulli:p=0.9,d=32", n0=50)
        ds = generate_instance(m, 2)
        rep = search(ds, m, SearchConfig(window=3, tries=2, score_floor=20 * math.log(2)))
        assert all(c.score >= 20 * math.log(2) for c in rep.candidates)

    def test_swap_roles(self):
        m = preset("bernoulli:p=0.95,d=32", n0=40, n1=60)
        ds = generate_instance(m, 8)
        rep = search(ds, m, SearchConfig(window=2, tries=4, swap_roles=True))
        assert all(0 <= c.x0_index < 40 and 0 <= c.x1_index < 60 for c in rep.candidates)
        assert all(s.comparisons <= 2 * 2 * 40 for s in rep.per_try)

    def test_auto_budget(self):
        m = preset("bernoulli:p=0.9,d=64", n0=1024)
        tries = resolve_tries(SearchConfig(tries="auto"), m, 1024)
        from lexforest.information import cutoff_exponent

        assert tries == math.ceil(math.exp(cutoff_exponent(m, 1024)[1]))
        with pytest.raises(SearchError):
            resolve_tries(SearchConfig(tries="auto"), None, 1024)

    def test_auto_success_rate(self):
        m = preset("bernoulli:p=0.9,d=64", n0=1024)
        wins = 0
        for seed in range(200):
            rep = search(generate_instance(m, seed), m,
                         SearchConfig(tries="auto", master_seed=seed, stop_on_planted=True, collect_candidates=False))
            wins += rep.success
        assert wins / 200 >= 0.5

    def test_reports_serialize(self, tmp_path):
        m = preset("bernoulli:p=0.9,d=16", n0=20)
        rep = search(generate_instance(m, 1), m, SearchConfig(window=1, tries=2))
        data = json.loads(rep.to_json(tmp_path / "r.json"))
        assert data["tries_executed"] == 2
        rep.write_candidates_csv(tmp_path / "c.csv")
        header = (tmp_path / "c.csv").read_text().splitlines()[0]
        assert header == "x0_index,x1_index,score,first_try_seen"

    def test_bad_config(self):
        with pytest.raises(SearchError):
            SearchConfig(window=0)
        with pytest.raises(SearchError):
            SearchConfig(tries="many")
        with pytest.raises(SearchError):
            SearchConfig(epsilon=0.1)


class TestSparseSearch:
    def test_matches_dense_search(self):
        m = preset("sparse:d=500", n0=80)
        ds = generate_instance(m, 3)
        cfg = SearchConfig(window=2, tries=4, master_seed=2)
        dense = search(ds, m, cfg)
        sparse = sparse_search(ds.to_sparse(), m, cfg)
        assert [(c.x0_index, c.x1_index) for c in dense.candidates] == [(c.x0_index, c.x1_index) for c in sparse.candidates]
        for a, b in zip(dense.candidates, sparse.candidates):
            assert a.score == pytest.approx(b.score)

    def test_feature_outside_model(self):
        ds = Dataset([(1, 50)], [(2,)], 60, sparse=True)
        with pytest.raises(SearchError):
            sparse_search(ds, preset("sparse:d=40"), SearchConfig())

    def test_conservative_close_to_exact(self):
        m = preset("sparse:d=2048", n0=256)
        rates = {}
        for mode in ("exact", "conservative"):
            wins = 0
            for seed in range(200):
                ds = generate_instance(m, seed).to_sparse()
                cfg = SearchConfig(window=2, tries=3, master_seed=seed, stop_on_planted=True,
                                   collect_candidates=False, exponent_mode=mode)
                wins += sparse_search(ds, m, cfg).success
            rates[mode] = wins / 200
        assert abs(rates["exact"] - rates["conservative"]) <= 0.10


class TestClassicSearch:
    def test_k_zero_compares_everything(self):
        m = preset("bernoulli:p=0.9,d=16", n0=12, n1=7)
        ds = generate_instance(m, 0)
        rep = classic_search(ds, 0.9, 0, SearchConfig(tries=1))
        assert rep.success and rep.total_comparisons == 84 and len(rep.candidates) == 84

    def test_k_equals_d_buckets_duplicates(self):
        x0 = np.array([[0, 1, 1], [0, 1, 1], [1, 1, 1]])
        x1 = np.array([[0, 1, 1], [1, 0, 0]])
        ds = Dataset(x0, x1, 3, (2, 2, 2))
        rep = classic_search(ds, 0.9, 3, SearchConfig(tries=1))
        assert {(c.x0_index, c.x1_index) for c in rep.candidates} == {(0, 0), (1, 0)}

    def test_k_too_large(self):
        ds = Dataset([[0, 1]], [[1, 1]], 2)
        with pytest.raises(SearchError):
            classic_search(ds, 0.9, 3, SearchConfig())


class TestGreedyTrained:
    def test_identical_training_pairs(self):
        rng = np.random.default_rng(0)
        t0 = rng.integers(0, 2, size=(300, 20))
        orders, remaining, n = learn_greedy_orders((t0, t0.copy()), window=1)
        assert len(orders) == 1 and remaining == 0 and n == 300

    def test_stop_rule(self):
        m = preset("grouped", n0=1)
        orders, remaining, n = learn_greedy_orders(sample_pairs(m, 900, 1), window=2)
        assert remaining <= math.ceil(n / 3) or len(orders) == 64

    def test_first_order_follows_true_exponents(self, rng):
        ps = np.linspace(0.6, 0.98, 12)
        m = DataModel(tuple(CoordinateDistribution.bernoulli_half(p) for p in ps))
        orders, _, _ = learn_greedy_orders(sample_pairs(m, 10_000, 2), window=2)
        truth = np.argsort(greedy_exponents(m), kind="stable")
        rho = stats.spearmanr(np.argsort(orders[0]), np.argsort(truth)).statistic
        assert rho >= 0.9

    def test_applies_learned_orders(self):
        m = preset("grouped", n0=400)
        ds = generate_instance(m, 3)
        rep = greedy_trained_search(sample_pairs(m, 2000, 4), ds, SearchConfig(window=2, tries="auto"))
        assert rep.learned_orders and rep.tries_executed == len(rep.learned_orders)

    def test_degenerate_training(self):
        t0 = np.zeros((10, 4), dtype=int)
        t1 = np.ones((10, 4), dtype=int)
        ds = Dataset([[0, 0, 0, 0]], [[1, 1, 1, 1]], 4)
        with pytest.raises(SearchError):
            greedy_trained_search((t0, t1), ds, SearchConfig(), smoothing=0)


class TestBruteForce:
    def test_finds_planted(self):
        m = preset("sparse:d=300", n0=40)
        ds = generate_instance(m, 5)
        i0, i1 = ds.planted
        ds.x1[i1] = ds.x0[i0]
        best = brute_force(ds, RarityScorer(m))
        assert (best.x0_index, best.x1_index) == ds.planted

    def test_tie_break_lowest_index(self):
        ds = Dataset(np.ones((4, 5), dtype=int), np.ones((3, 5), dtype=int), 5, (2,) * 5)
        best = brute_force(ds, AgreementScorer())
        assert (best.x0_index, best.x1_index, best.score) == (0, 0, 5.0)

    def test_guard(self):
        ds = Dataset(np.ones((40, 2), dtype=int), np.ones((40, 2), dtype=int), 2)
        with pytest.raises(SearchError):
            brute_force(ds, max_pairs=100)

    def test_engine_success_implies_floor(self):
        m = preset("bernoulli:p=0.95,d=48", n0=200)
        floor = 30 * math.log(2)
        for seed in range(5):
            ds = generate_instance(m, seed)
            rep = search(ds, m, SearchConfig(window=2, tries=10, master_seed=seed, score_floor=floor))
            planted_score = RarityScorer(m).score_pairs(ds, [ds.planted[0]], [ds.planted[1]])[0]
            kept = {(c.x0_index, c.x1_index) for c in rep.candidates}
            if ds.planted in kept:
                assert planted_score >= floor

    def test_sparse_scoring_matches_dense(self):
        m = preset("sparse:d=200", n0=30)
        ds = generate_instance(m, 1)
        scorer = RarityScorer(m)
        i0, i1 = np.arange(30), np.arange(30)[::-1]
        assert np.allclose(scorer.score_pairs(ds, i0, i1), scorer.score_pairs(ds.to_sparse(), i0, i1))
        agree = AgreementScorer()
        assert np.allclose(agree.score_pairs(ds, i0, i1), agree.score_pairs(ds.to_sparse(), i0, i1))


class TestProjection:
    def test_order_matches_lexicographic(self, rng):
        m = random_model(rng, 6, b=3, n0=300)
        ds = generate_instance(m, 2)
        plan = make_try_plan(m, 4, 0)
        res = run_try(Dataset(ds.x0, ds.x0[:1], ds.d, ds.alphabet), plan, SearchConfig(window=300))
        proj = projection(ds.x0, plan, m)
        keys = [tuple(row[plan.order]) for row in ds.x0]
        lex = sorted(range(300), key=lambda i: (keys[i], i))
        assert np.all(np.diff(proj[lex]) >= 0)
        assert res.comparisons <= 600

    def test_roughly_uniform_in_high_dimension(self):
        m = preset("grouped", n0=5000)
        ds = generate_instance(m, 1)
        assert projection_uniformity(ds, make_try_plan(m, 0, 0), m) < 0.05
