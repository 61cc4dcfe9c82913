import csv

import numpy as np
import pytest

from rough_imager import inversion as inv
from rough_imager.geometry import ConfigurationError, FlatProfile, SplineBasis
from rough_imager.synth import FAR, NEAR, MeasurementGrid, NoiseSpec, make_dataset, simulate
from rough_imager.waves import IncidentConfig

TRUE_A = np.array([0.0, 0.05, 0.3, 0.45, 0.2, 0.05, 0.0, 0.0, 0.0, 0.0])


class TestLMStep:
    def test_scalar_closed_form(self):
        step = inv.lm_step(np.array([[1.0]]), np.array([1.0]), rho=0.8)
        assert step.beta == pytest.approx(4.0, rel=1e-12)
        assert step.delta[0] == pytest.approx(-0.2, rel=1e-12)
        assert not step.unreachable

    def test_matches_svd_oracle(self, rng):
        J = rng.normal(size=(40, 6)) @ np.diag([10, 3, 1, 0.3, 0.1, 0.01])
        r = rng.normal(size=40) + J @ rng.normal(size=6) * 5
        step = inv.lm_step(J, r, rho=0.8)
        assert np.linalg.norm(r + J @ step.delta) == pytest.approx(0.8 * np.linalg.norm(r), rel=1e-8)
        direct = np.linalg.solve(J.T @ J + step.beta * np.eye(6), -J.T @ r)
        np.testing.assert_allclose(step.delta, direct, rtol=1e-8, atol=1e-12)
        assert step.linear_residual == pytest.approx(0.8 * np.linalg.norm(r), rel=1e-8)

    def test_unreachable_target_returns_gauss_newton(self):
        J = np.array([[1.0], [0.0]])
        r = np.array([0.1, 1.0])
        step = inv.lm_step(J, r)
        assert step.unreachable
        np.testing.assert_allclose(step.delta, [-0.1])

    def test_zero_residual(self):
        step = inv.lm_step(np.eye(3), np.zeros(3))
        assert np.all(step.delta == 0) and not step.unreachable

    def test_limits(self, rng):
        J = rng.normal(size=(10, 3))
        r = rng.normal(size=10)
        small = inv.lm_step(J, r, rho=0.999)
        big = inv.lm_step(J, r, rho=0.5)
        assert small.beta > big.beta
        assert np.linalg.norm(small.delta) < np.linalg.norm(big.delta)

    def test_bad_input(self):
        with pytest.raises(ConfigurationError):
            inv.lm_step(np.eye(2), np.ones(2), rho=1.0)
        with pytest.raises(ValueError):
            inv.lm_step(np.eye(2), np.ones(3))
        with pytest.raises(ValueError):
            inv.lm_step(np.array([[np.nan]]), np.ones(1))

    def test_regularised_step_agrees(self, rng):
        J = rng.normal(size=(12, 4))
        r = rng.normal(size=12)
        direct = np.linalg.solve(J.T @ J + 0.3 * np.eye(4), -J.T @ r)
        np.testing.assert_allclose(inv.regularised_step(J, r, 0.3), direct, rtol=1e-10)


class TestMisfit:
    def test_exact_is_zero(self, rng):
        d = rng.uniform(size=(2, 30))
        assert inv.err_k(d, d) == 0.0

    def test_scale_invariance(self, rng):
        d = rng.uniform(size=(2, 30))
        p = d + 0.01 * rng.normal(size=d.shape)
        assert inv.err_k(3.7 * p, 3.7 * d) == pytest.approx(inv.err_k(p, d), rel=1e-13)

    def test_average_over_configurations(self):
        d = np.array([[1.0, 0.0], [0.0, 2.0]])
        p = np.array([[1.1, 0.0], [0.0, 2.0]])
        assert inv.err_k(p, d) == pytest.approx(0.05)

    def test_degenerate_data(self):
        with pytest.raises(inv.DegenerateDataError):
            inv.err_k(np.ones(4), np.zeros(4))


class TestInitialGuess:
    def test_far_window(self):
        np.testing.assert_array_equal(inv.default_initial_guess(10, FAR), [0, .1, .1, .1, 0, 0, 0, 0, 0, 0])

    def test_near_zero(self):
        assert not np.any(inv.default_initial_guess(10, NEAR))

    def test_bad_window(self):
        with pytest.raises(ConfigurationError):
            inv.default_initial_guess(3, FAR, window=(2, 4))

    def test_config_validation(self):
        for bad in ({"rho": 1.2}, {"tau": 1.0}, {"delta": -0.1}, {"M": 0}, {"a0": (0.1,)}):
            with pytest.raises(ConfigurationError):
                inv.InversionConfig(**bad)
        assert inv.InversionConfig().threshold == pytest.approx(0.075)

    def test_admissibility(self):
        assert inv.is_admissible(TRUE_A)
        assert not inv.is_admissible(10 * TRUE_A)


class TestJacobian:
    @pytest.mark.parametrize("kind", [FAR, NEAR])
    def test_central_differences(self, kind, rng):
        grid = MeasurementGrid(kind, n_f=60, m=60)
        cfg = [IncidentConfig(5.0, (-np.pi / 6,))]
        basis = SplineBasis(10)
        J = inv.jacobian(simulate(inv.spline_profile(TRUE_A), cfg, grid, n=128), basis)
        v = rng.normal(size=10)
        eps = 1e-3
        plus = simulate(inv.spline_profile(TRUE_A + eps * v), cfg, grid, n=128).intensity.ravel()
        minus = simulate(inv.spline_profile(TRUE_A - eps * v), cfg, grid, n=128).intensity.ravel()
        fd = (plus - minus) / (2 * eps)
        assert np.linalg.norm(J @ v - fd) <= 1e-3 * np.linalg.norm(fd)

    def test_far_jacobian_vanishes_at_flat_surface(self):
        sim = simulate(FlatProfile(), [IncidentConfig(3.0, (-np.pi / 6,))], MeasurementGrid(FAR, n_f=30), n=64)
        assert np.all(inv.jacobian(sim, SplineBasis(10)) == 0)

    def test_near_jacobian_nonzero_at_flat_surface(self):
        sim = simulate(FlatProfile(), [IncidentConfig(3.0, (-np.pi / 6,))], MeasurementGrid(NEAR, m=30), n=64)
        assert np.linalg.norm(inv.jacobian(sim, SplineBasis(10))) > 1e-2

    def test_frechet_column_matches_jacobian(self):
        grid = MeasurementGrid(FAR, n_f=40)
        cfg = IncidentConfig(3.0, (-np.pi / 6, np.pi / 6))
        sim = simulate(inv.spline_profile(TRUE_A), [cfg], grid, n=96)
        J = inv.jacobian(sim, SplineBasis(10))
        col = inv.frechet_column(TRUE_A, cfg, grid, 4, n=96)
        np.testing.assert_allclose(col, J[:, 3], atol=1e-12 * np.abs(J).max())
        with pytest.raises(IndexError):
            inv.frechet_column(TRUE_A, cfg, grid, 11, sim=sim)

    def test_column_for_spline_away_from_field_is_small(self):
        # the last spline lives on the flat part right of the bump
        grid = MeasurementGrid(FAR, n_f=40)
        cfg = IncidentConfig(3.0, (-np.pi / 6,))
        sim = simulate(inv.spline_profile(TRUE_A), [cfg], grid, n=96)
        J = inv.jacobian(sim, SplineBasis(10))
        assert np.linalg.norm(J[:, 9]) < np.linalg.norm(J[:, 3])


class TestDriver:
    def test_far_requires_nonzero_guess(self):
        ds = make_dataset(inv.spline_profile(TRUE_A), [(-np.pi / 6,)], [1.0], MeasurementGrid(FAR, n_f=30))
        with pytest.raises(ConfigurationError):
            inv.recursive_newton(ds, inv.InversionConfig(a0=tuple(np.zeros(10))))

    def test_exact_data_at_truth_needs_no_steps(self):
        ds = make_dataset(inv.spline_profile(TRUE_A), [(-np.pi / 6, np.pi / 6)], [1.0, 3.0],
                          MeasurementGrid(FAR, n_f=50))
        state = inv.recursive_newton(ds, inv.InversionConfig(delta=0.01, a0=tuple(TRUE_A)))
        assert [s.iterations for s in state.stages] == [0, 0]
        assert all(s.status == inv.CONVERGED for s in state.stages)
        np.testing.assert_array_equal(state.a, TRUE_A)

    def test_flat_truth_near_terminates_immediately(self):
        ds = make_dataset(FlatProfile(), [(-np.pi / 6,)], [1.0, 3.0], MeasurementGrid(NEAR, m=40))
        state = inv.recursive_newton(ds, inv.InversionConfig(delta=0.01))
        assert all(s.iterations == 0 and s.err == 0.0 for s in state.stages)

    def test_mixed_kinds_rejected(self):
        far = make_dataset(FlatProfile(), [(0.2,)], [1.0], MeasurementGrid(FAR, n_f=10))
        near = make_dataset(FlatProfile(), [(0.2,)], [3.0], MeasurementGrid(NEAR, m=10))
        with pytest.raises(ConfigurationError):
            inv.recursive_newton(far + near)
        with pytest.raises(ConfigurationError):
            inv.recursive_newton([])

    def test_near_run_reduces_misfit_and_logs(self, tmp_path):
        truth = inv.spline_profile(TRUE_A)
        ds = make_dataset(truth, [(-np.pi / 6,)], [1.0, 3.0], MeasurementGrid(NEAR, m=60), NoiseSpec(0.01, 2))
        seen = []
        state = inv.recursive_newton(ds, inv.InversionConfig(delta=0.01, max_inner=6),
                                     on_stage=lambda s: seen.append(s.stage))
        assert seen == [0, 1]
        first = [r.err for r in state.history if r.k == 1.0]
        assert min(first) < first[0]
        log = inv.write_run_log(tmp_path / "run_log.csv", state.history)
        rows = list(csv.reader(line for line in log.read_text().splitlines() if not line.startswith("#")))
        assert rows[0] == ["k", "iteration", "err", "beta", "step_norm", "flags"]
        assert len(rows) == len(state.history) + 1
        prof = inv.write_profile_csv(tmp_path / "profile.csv", state.a, truth=truth, initial=np.zeros(10),
                                     header={"status": "ok"})
        text = prof.read_text().splitlines()
        assert text[0] == "# status = ok" and text[2] == "x1,h_rec,h_true,h_init"
        assert len(text) == 3 + 401
