"""Generators, subspace metrics, and the Monte Carlo driver."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trendfactors.errors import ArgumentError
from trendfactors.simgen import (
    DgpSpec,
    derive_seed,
    draw_mixing,
    draw_panel,
    gen_example1,
    gen_example2,
    metric_D,
    metric_Dbar,
    random_orthonormal,
    rmse_factors,
    run_montecarlo,
)
from trendfactors.tsstats import ljung_box


class TestDgpSpec:
    def test_validation(self):
        with pytest.raises(ArgumentError):
            DgpSpec(p=4, n=100, r1=3, r2=2)
        with pytest.raises(ArgumentError):
            DgpSpec(p=10, n=100, r1=2, r2=2, K=6)
        with pytest.raises(ArgumentError):
            DgpSpec(p=10, n=100, delta=0.5, example=1)
        with pytest.raises(ArgumentError):
            DgpSpec(p=10, n=100, delta=1.0, example=2)

    def test_v_property(self):
        assert DgpSpec(p=10, n=50, r1=2, r2=3).v == 5


class TestRandomOrthonormal:
    @pytest.mark.parametrize("p", [1, 4, 9])
    def test_orthonormal(self, p):
        q = random_orthonormal(p, 0)
        assert np.max(np.abs(q.T @ q - np.eye(p))) <= 1e-10
        assert abs(abs(np.linalg.det(q)) - 1.0) <= 1e-8

    def test_seeds_differ(self):
        q1 = random_orthonormal(5, 1)
        q2 = random_orthonormal(5, 2)
        assert np.linalg.norm(q1 - q2, 2) > 0.1


class TestGenerators:
    def test_deterministic(self):
        spec = DgpSpec(p=6, n=150, example=1, seed=99)
        a, _ = gen_example1(spec)
        b, _ = gen_example1(spec)
        assert np.array_equal(a.data, b.data)

    @pytest.mark.parametrize(
        "spec",
        [
            DgpSpec(p=6, n=150, example=1, seed=7),
            DgpSpec(p=20, n=150, r1=4, r2=6, K=2, delta=0.5, example=2, seed=7),
        ],
    )
    def test_reconstruction_identity(self, spec):
        panel, truth = (gen_example1 if spec.example == 1 else gen_example2)(spec)
        x2 = truth.f2 @ truth.U22_1.T + truth.eps @ truth.U22_2.T
        recon = truth.x1 @ truth.A1.T + x2 @ truth.A2.T
        assert np.max(np.abs(recon - panel.data)) <= 1e-10 * max(1, np.abs(panel.data).max())
        assert panel.data.shape == (spec.n, spec.p)

    def test_differenced_trends_are_white(self):
        hits = 0
        for rep in range(60):
            spec = DgpSpec(p=5, n=400, r1=1, r2=1, example=1, seed=1000 + rep)
            _, truth = gen_example1(spec)
            diffs = np.diff(truth.x1[:, 0])
            if ljung_box(diffs, 10).pvalue > 0.01:
                hits += 1
        assert hits >= 57  # >= 95% at the 1% level

    def test_scaled_factor_block_singular_value(self):
        # sigma_1 of the U(-1,1) factor block sits inside the moment bounds
        for p, r2, seed in [(20, 2, 1), (20, 2, 5), (30, 4, 2), (30, 4, 9)]:
            spec = DgpSpec(p=p, n=60, r1=4, r2=r2, K=1, delta=0.5, example=2, seed=seed)
            _, truth = gen_example2(spec)
            s1 = np.linalg.svd(truth.U22_1 * p ** (spec.delta / 2), compute_uv=False)[0]
            bound = np.sqrt(p * r2 / 3.0)
            assert 0.5 * bound <= s1 <= 1.5 * bound

    def test_delta_zero_no_factor_scaling(self):
        spec = DgpSpec(p=12, n=80, r1=2, r2=2, K=1, delta=0.0, example=2, seed=3)
        _, truth = gen_example2(spec)
        assert np.abs(truth.U22_1).max() <= 1.0 + 1e-12
        assert np.abs(truth.U22_2[:, :1]).max() <= 1.0 + 1e-12
        assert np.abs(truth.U22_2[:, 1:]).max() <= 1.0 / 12 + 1e-12

    def test_prominent_noise_eigenvalues(self):
        spec = DgpSpec(p=50, n=60, r1=4, r2=6, K=2, delta=0.0, example=2, seed=4)
        _, truth = gen_example2(spec)
        w = np.sort(np.linalg.eigvalsh(truth.U22_2 @ truth.U22_2.T))[::-1]
        assert w[1] > 100 * w[2]


class TestMetricD:
    def test_equal_spans_zero(self):
        q = random_orthonormal(5, 0)[:, :2]
        assert metric_D(q, q) == pytest.approx(0.0, abs=1e-8)

    def test_orthogonal_spans_one(self):
        e = np.eye(4)
        assert metric_D(e[:, :2], e[:, 2:]) == pytest.approx(1.0)

    def test_hand_value(self):
        h1 = np.array([[1.0], [0.0]])
        h2 = np.array([[1.0], [1.0]]) / np.sqrt(2.0)
        assert metric_D(h1, h2) == pytest.approx(np.sqrt(0.5), abs=1e-9)

    def test_symmetry_random(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            q = np.linalg.qr(rng.normal(size=(6, 6)))[0]
            h1, h2 = q[:, :3], np.linalg.qr(rng.normal(size=(6, 3)))[0]
            assert metric_D(h1, h2) == pytest.approx(metric_D(h2, h1), rel=1e-10)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ArgumentError):
            metric_D(np.ones((3, 1)), np.ones((3, 1)))


class TestMetricDbar:
    def test_identical(self):
        rng = np.random.default_rng(2)
        h = rng.normal(size=(5, 2))
        assert metric_Dbar(h, h) == pytest.approx(0.0, abs=1e-7)

    def test_nested_subspaces(self):
        rng = np.random.default_rng(3)
        q = np.linalg.qr(rng.normal(size=(6, 4)))[0]
        h2 = q
        h1 = q[:, :2] @ rng.normal(size=(2, 2))  # span(h1) inside span(h2)
        assert metric_Dbar(h1, h2) == pytest.approx(np.sqrt(1.0 - 2.0 / 4.0), abs=1e-8)

    @given(st.floats(min_value=0.1, max_value=40.0), st.integers(0, 4))
    @settings(max_examples=30, deadline=None)
    def test_scaling_invariance(self, c, seed):
        rng = np.random.default_rng(seed)
        h1 = rng.normal(size=(5, 2))
        h2 = rng.normal(size=(5, 3))
        base = metric_Dbar(h1, h2)
        assert metric_Dbar(h1 * c, h2) == pytest.approx(base, abs=1e-9)

    def test_invertible_right_multiplication(self):
        rng = np.random.default_rng(4)
        h1 = rng.normal(size=(6, 3))
        h2 = rng.normal(size=(6, 2))
        g = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        assert metric_Dbar(h1 @ g, h2) == pytest.approx(metric_Dbar(h1, h2), abs=1e-8)

    def test_reduces_to_D_when_orthonormal(self):
        rng = np.random.default_rng(5)
        h1 = np.linalg.qr(rng.normal(size=(7, 3)))[0]
        h2 = np.linalg.qr(rng.normal(size=(7, 3)))[0]
        assert metric_Dbar(h1, h2) == pytest.approx(metric_D(h1, h2), rel=1e-10)


class TestRmseFactors:
    def test_perfect(self):
        x = np.random.default_rng(6).normal(size=(10, 3))
        assert rmse_factors(x, x, "small") == 0.0

    def test_constant_offset(self):
        truth = np.zeros((8, 3))
        c = np.array([1.0, 2.0, 2.0])
        est = np.tile(c, (8, 1))
        assert rmse_factors(est, truth, "small") == pytest.approx(3.0)
        assert rmse_factors(est, truth, "large") == pytest.approx(3.0 / np.sqrt(3))

    def test_large_is_small_over_sqrt_p(self):
        rng = np.random.default_rng(7)
        est, truth = rng.normal(size=(12, 4)), rng.normal(size=(12, 4))
        assert rmse_factors(est, truth, "large") == pytest.approx(
            rmse_factors(est, truth, "small") / 2.0, rel=1e-12
        )


class TestRunMontecarlo:
    def test_single_rep_probabilities_are_indicators(self):
        res = run_montecarlo([DgpSpec(p=5, n=120, example=1)], reps=1, base_seed=3)
        for stats in res.cells[0].probs.values():
            for v in stats.values():
                assert v in (0.0, 1.0)

    def test_rows_flat_export(self):
        res = run_montecarlo([DgpSpec(p=5, n=120, example=1)], reps=2, base_seed=3)
        rows = res.rows()
        assert any(r["statistic"] == "r1" for r in rows)
        assert all({"example", "p", "n", "method", "value"} <= set(r) for r in rows)

    def test_order_independent_seeds(self):
        assert derive_seed(1, 0, 5) == derive_seed(1, 0, 5)
        assert derive_seed(1, 0, 5) != derive_seed(1, 0, 6)
        assert derive_seed(1, 0) != derive_seed(1, 1)

    def test_mixing_fixed_within_cell(self):
        spec = DgpSpec(p=5, n=100, example=1)
        mix = draw_mixing(spec, derive_seed(8, 0))
        p1, _ = draw_panel(spec, mix, derive_seed(8, 0, 0))
        p2, _ = draw_panel(spec, mix, derive_seed(8, 0, 1))
        assert not np.array_equal(p1.data, p2.data)
