import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcmkit import ranking as rk
from gcmkit.errors import ValidationError
from gcmkit.metrics import METRIC_NAMES, MetricReport


def report(**overrides):
    base = dict(
        bias=0.5, rmse=1.0, r=0.8, r2=0.64, nse=0.5, kge=0.6,
        pdf_overlap=0.9, txx_err=1.0, tnn_err=1.0, sd_diff=0.2,
        n=100, flags={m: True for m in METRIC_NAMES},
    )
    flags = overrides.pop("flags", None)
    base.update(overrides)
    if flags:
        base["flags"].update(flags)
    return MetricReport(**base)


def benefit_matrix(values, models=None):
    values = np.asarray(values, dtype=float)
    models = models or [f"m{i}" for i in range(values.shape[0])]
    crit = [rk.Criterion("kge"), rk.Criterion("nse")][: values.shape[1]]
    return rk.DecisionMatrix(models, crit, values, ("z", "s"))


class TestCriteria:
    def test_orientations(self):
        assert rk.Criterion("kge").orientation == "benefit"
        assert rk.Criterion("rmse").orientation == "cost"
        assert rk.Criterion("r2").orientation == "benefit"
        assert rk.Criterion("sd_diff").orientation == "cost"
        with pytest.raises(ValidationError):
            rk.Criterion("nope")

    def test_default_set_is_the_nine(self):
        names = [c.name for c in rk.default_criteria()]
        assert names == list(rk.DEFAULT_CRITERIA_NAMES)
        assert len(names) == 9 and "r2" not in names and "sd_diff" in names


class TestAssemble:
    def test_verbatim_with_abs_bias(self):
        reports = [("a", report(bias=-2.0)), ("b", report(bias=0.5))]
        dm = rk.assemble_matrix(reports, rk.default_criteria(), ("z", "s"))
        j = [c.name for c in dm.criteria].index("bias")
        assert dm.values[0, j] == 2.0 and dm.values[1, j] == 0.5

    def test_invalid_entry_imputes_worst_valid(self):
        reports = [
            ("a", report(kge=0.8)),
            ("b", report(kge=None, flags={"kge": False})),
            ("c", report(kge=0.6)),
        ]
        dm = rk.assemble_matrix(reports, rk.default_criteria(), ("z", "s"))
        j = [c.name for c in dm.criteria].index("kge")
        assert dm.values[1, j] == 0.6  # worst valid benefit value

    def test_all_invalid_column_dropped_with_warning(self):
        reports = [
            ("a", report(kge=None, flags={"kge": False})),
            ("b", report(kge=None, flags={"kge": False})),
        ]
        with pytest.warns(UserWarning, match="kge"):
            dm = rk.assemble_matrix(reports, rk.default_criteria(), ("z", "s"))
        assert "kge" not in [c.name for c in dm.criteria]

    def test_single_model_rejected(self):
        with pytest.raises(ValidationError):
            rk.assemble_matrix([("a", report())], rk.default_criteria())


class TestNormalize:
    def test_hand_case(self):
        n = rk.normalize(np.array([[3.0], [4.0]]))
        assert np.allclose(n.ravel(), [0.6, 0.8])

    def test_power_of_two_scaling_is_bit_exact(self):
        rng = np.random.default_rng(2)
        c = np.abs(rng.normal(size=(5, 3))) + 0.1
        scaled = c.copy()
        scaled[:, 1] *= 4.0
        assert np.array_equal(rk.normalize(c), rk.normalize(scaled))

    def test_zero_column_stays_zero(self):
        n = rk.normalize(np.array([[0.0, 1.0], [0.0, 2.0]]))
        assert np.all(n[:, 0] == 0.0)
        assert np.all(np.isfinite(n))


class TestTopsis:
    def test_hand_oracle_3x2(self):
        dm = benefit_matrix([[1, 1], [0.5, 0.5], [0, 0]], models=["A", "B", "C"])
        res = rk.rank_matrix(dm, rk.WeightVector(np.array([0.5, 0.5])))
        assert np.allclose(res.cc, [1.0, 0.5, 0.0], atol=1e-12)
        assert res.order == ["A", "B", "C"]

    def test_dominance_endpoints(self):
        dm = benefit_matrix([[1.0, 0.9], [0.3, 0.2]])
        res = rk.rank_matrix(dm, rk.WeightVector(np.array([0.5, 0.5])))
        assert res.cc[0] == 1.0 and res.cc[1] == 0.0

    def test_identical_rows_score_half(self):
        dm = benefit_matrix([[0.4, 0.7], [0.4, 0.7]])
        res = rk.rank_matrix(dm, rk.WeightVector(np.array([0.5, 0.5])))
        assert np.all(res.cc == 0.5)

    def test_cost_orientation_flips_preference(self):
        crit = [rk.Criterion("rmse")]
        dm = rk.DecisionMatrix(["good", "bad"], crit, np.array([[0.5], [2.0]]), ("z", "s"))
        res = rk.rank_matrix(dm, rk.WeightVector(np.array([1.0])))
        assert res.order == ["good", "bad"]
        assert res.cc[0] == 1.0

    def test_scale_invariance_of_ordering(self):
        rng = np.random.default_rng(7)
        c = np.abs(rng.normal(size=(6, 4))) + 0.05
        crit = [rk.Criterion(n) for n in ("kge", "rmse", "pdf_overlap", "bias")]
        models = [f"m{i}" for i in range(6)]
        w = rk.WeightVector(np.full(4, 0.25))
        base = rk.topsis_score(rk.normalize(c), w, crit, models)
        for k in (4.0, 3.7, 0.001):
            scaled = c.copy()
            scaled[:, 2] *= k
            res = rk.topsis_score(rk.normalize(scaled), w, crit, models)
            assert res.order == base.order
            assert np.allclose(res.cc, base.cc, rtol=1e-12)

    def test_row_permutation_equivariance(self):
        rng = np.random.default_rng(8)
        c = np.abs(rng.normal(size=(5, 3))) + 0.1
        crit = [rk.Criterion(n) for n in ("kge", "nse", "rmse")]
        models = ["a", "b", "c", "d", "e"]
        w = rk.WeightVector(np.full(3, 1 / 3))
        base = rk.topsis_score(rk.normalize(c), w, crit, models)
        perm = [3, 0, 4, 1, 2]
        res = rk.topsis_score(rk.normalize(c[perm]), w, crit, [models[i] for i in perm])
        assert np.allclose(res.cc, base.cc[perm], atol=1e-15)
        assert res.order == base.order

    @given(st.integers(2, 8), st.integers(1, 5), st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_cc_always_in_unit_interval(self, m, n, seed):
        rng = np.random.default_rng(seed)
        c = np.abs(rng.normal(size=(m, n))) + 1e-3
        crit = [rk.Criterion(name) for name in list(rk.DEFAULT_CRITERIA_NAMES)[:n]]
        w = rng.uniform(0.1, 1.0, size=n)
        wv = rk.WeightVector(w / w.sum())
        res = rk.topsis_score(rk.normalize(c), wv, crit, [f"m{i}" for i in range(m)])
        assert np.all(res.cc >= 0.0) and np.all(res.cc <= 1.0)
        recompute = res.d_minus / np.where(res.d_plus + res.d_minus > 0, res.d_plus + res.d_minus, 1.0)
        mask = (res.d_plus + res.d_minus) > 0
        assert np.allclose(res.cc[mask], recompute[mask], atol=1e-15)

    def test_single_benefit_criterion_sorts_raw_values(self):
        rng = np.random.default_rng(11)
        vals = np.abs(rng.normal(size=(7, 1))) + 0.01
        crit = [rk.Criterion("kge")]
        models = [f"m{i}" for i in range(7)]
        res = rk.topsis_score(rk.normalize(vals), rk.WeightVector(np.array([1.0])), crit, models)
        expected = [models[i] for i in np.argsort(-vals[:, 0], kind="stable")]
        assert res.order == expected

    def test_tie_break_is_lexicographic(self):
        dm = benefit_matrix([[0.4, 0.4], [0.4, 0.4], [0.1, 0.1]], models=["zeta", "alpha", "last"])
        res = rk.rank_matrix(dm, rk.WeightVector(np.array([0.5, 0.5])))
        assert res.order[:2] == ["alpha", "zeta"]


class TestEntropyWeights:
    def test_informative_column_takes_all_weight(self):
        n = np.array([[0.1, 0.5], [0.9, 0.5], [0.4, 0.5]])
        w = rk.entropy_target_weights(n)
        assert w.w[0] == pytest.approx(1.0, abs=1e-12)
        assert w.w[1] == pytest.approx(0.0, abs=1e-12)

    def test_identical_columns_uniform(self):
        n = np.tile(np.array([[0.1], [0.9]]), (1, 3))
        assert np.allclose(rk.entropy_target_weights(n).w, 1 / 3)

    def test_always_a_valid_weight_vector(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            m = int(rng.integers(2, 9))
            n = int(rng.integers(1, 7))
            w = rk.entropy_target_weights(rng.uniform(size=(m, n)))
            assert np.all(w.w >= 0)
            assert float(np.sum(w.w)) == pytest.approx(1.0, abs=1e-9)


class TestFeaturize:
    def test_length_and_minmax_markers(self):
        rng = np.random.default_rng(3)
        dm = rk.DecisionMatrix(
            ["a", "b", "c"], rk.default_criteria(), np.abs(rng.normal(size=(3, 9))) + 0.01, ("z", "s")
        )
        f = rk.featurize(dm)
        assert f.shape == (5 * 9,)
        mins = f[2::5]
        maxs = f[3::5]
        assert np.all(mins == 0.0) and np.all(maxs == 1.0)

    def test_constant_column_features(self):
        crit = [rk.Criterion("kge"), rk.Criterion("rmse")]
        dm = rk.DecisionMatrix(["a", "b"], crit, np.array([[0.5, 1.0], [0.5, 2.0]]), ("z", "s"))
        f = rk.featurize(dm)
        assert f[1] == 0.0  # sd of constant column
        assert f[4] == 1.0  # entropy of constant column


class TestWeightNet:
    def test_output_is_valid_weight_vector_for_any_input(self):
        net = rk.WeightNet(9, seed=4)
        rng = np.random.default_rng(0)
        for _ in range(20):
            w = net.predict(rng.normal(scale=50.0, size=45))
            assert np.all(w.w >= 0)
            assert float(w.w.sum()) == pytest.approx(1.0, abs=1e-9)

    def test_training_reduces_loss_and_is_deterministic(self, tmp_path):
        rng = np.random.default_rng(5)
        contexts = [
            rk.DecisionMatrix(
                ["a", "b", "c", "d"],
                rk.default_criteria(),
                np.abs(rng.normal(size=(4, 9))) + 0.01,
                ("z", str(i)),
            )
            for i in range(12)
        ]
        cfg = rk.WeightNetConfig(epochs=30, seed=9)
        net1, hist1 = rk.train_weightnet(contexts, cfg)
        net2, hist2 = rk.train_weightnet(contexts, cfg)
        assert hist1[-1] < hist1[0]
        assert hist1 == hist2
        for (n1, t1), (n2, t2) in zip(net1.params(), net2.params()):
            assert np.array_equal(t1.data, t2.data)
        path = str(tmp_path / "net.ckpt")
        net1.save(path)
        back = rk.WeightNet.load(path)
        for (_, a), (_, b) in zip(net1.params(), back.params()):
            assert np.array_equal(a.data, b.data)

    def test_single_context_overfit(self):
        rng = np.random.default_rng(6)
        dm = rk.DecisionMatrix(
            ["a", "b", "c"], rk.default_criteria(), np.abs(rng.normal(size=(3, 9))) + 0.01, ("z", "s")
        )
        net, _ = rk.train_weightnet([dm], rk.WeightNetConfig(epochs=500, seed=2))
        target = rk.entropy_target_weights(rk.normalize(dm)).w
        pred = net.predict(rk.featurize(dm)).w
        assert np.max(np.abs(pred - target)) <= 0.05


class TestRankAll:
    def _reports(self):
        out = {}
        for zone in ("tropical", "polar"):
            for season in ("DJF", "ANNUAL"):
                out[(zone, season)] = [
                    ("good", report(bias=0.1, rmse=0.5, kge=0.9, nse=0.8, r=0.95, pdf_overlap=0.95,
                                    txx_err=0.2, tnn_err=0.2, sd_diff=0.05)),
                    ("bad", report(bias=2.0, rmse=3.0, kge=0.1, nse=-0.5, r=0.4, pdf_overlap=0.5,
                                   txx_err=2.0, tnn_err=2.5, sd_diff=1.0)),
                ]
        return out

    def test_dominant_model_wins_everywhere(self):
        results, weights, top5 = rk.rank_all(self._reports(), "uniform")
        assert len(results) == 4
        for res in results:
            assert res.order[0] == "good"
            assert res.cc[res.models.index("good")] == 1.0
        for ctx, (wv, src) in weights.items():
            assert src == "uniform"
            assert float(wv.w.sum()) == pytest.approx(1.0, abs=1e-12)
        assert all(row["model"] in ("good", "bad") for row in top5)
        assert {row["zone"] for row in top5} == {"tropical", "polar"}

    def test_heatmap_shape_and_range(self):
        results, _, _ = rk.rank_all(self._reports(), "uniform")
        models, contexts, matrix = rk.heatmap_table(results)
        assert matrix.shape == (2, 4)
        assert np.all(matrix >= 0.0) and np.all(matrix <= 1.0)
        assert models == ["bad", "good"]

    def test_weightnet_source(self):
        net = rk.WeightNet(9, seed=1)
        results, weights, _ = rk.rank_all(self._reports(), net)
        for ctx, (wv, src) in weights.items():
            assert src == "weightnet"
            assert len(wv) == 9
        for res in results:
            assert res.order[0] == "good"
