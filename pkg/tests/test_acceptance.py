"""End-to-end acceptance checks, one test per criterion.

Each test states its gate in the assertion. The desk-scale reconstructions
are shared through module fixtures so every inversion runs once.
"""

import math
import time

import numpy as np
import pytest

from rough_imager import forward as F
from rough_imager import inversion as inv
from rough_imager.geometry import FlatProfile, SplineBasis, make_preset
from rough_imager.synth import FAR, NEAR, MeasurementGrid, NoiseSpec, far_grid, make_dataset, simulate
from rough_imager.waves import IncidentConfig, reflected

ANGLES = far_grid(200)
TWO_WAVES = (-math.pi / 6, math.pi / 6)
DESK_K = [1.0, 3.0, 5.0, 7.0]


@pytest.fixture(scope="module")
def truth():
    return make_preset("example1")


def _far(profile, k, angles, R=1.0, n=None, scale=1.0):
    if n is None:
        n = F.nodes_per_arc(k, R, profile, scale=scale)
    return F.eval_far_field(F.solve_forward(profile, IncidentConfig(k, angles), R, n), ANGLES)


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def _max_error_and_apex(state, truth):
    x = np.linspace(-1.0, 1.0, 2001)
    h = state.profile().evaluate(x)
    return float(np.max(np.abs(h - truth.evaluate(x)))), float(x[np.argmax(h)])


def test_criterion_01_flat_surface_null():
    start = time.perf_counter()
    pts = F.near_grid()
    for k in (1.0, 5.0, 10.0):
        for angles in ((-math.pi / 6,), (0.0,), (0.4, -1.1)):
            cfg = IncidentConfig(k, angles)
            sol = F.solve_forward(FlatProfile(), cfg, 1.0)
            assert np.max(np.abs(F.eval_far_field(sol, ANGLES))) <= 1e-8
            assert np.max(np.abs(F.eval_near_field(sol, cfg) - reflected(cfg, pts))) <= 1e-8
    assert time.perf_counter() - start < 10


def test_criterion_02_nystrom_self_convergence(truth):
    start = time.perf_counter()
    coarse = _far(truth, 5.0, (-math.pi / 6,), n=128)
    fine = _far(truth, 5.0, (-math.pi / 6,), n=256)
    assert np.max(np.abs(coarse - fine)) < 1e-6
    assert time.perf_counter() - start < 30


def test_criterion_03_translation_invariance(truth):
    k, ell, theta = 5.0, 0.3, -math.pi / 6
    u = _far(truth, k, (theta,), n=512)
    u_ell = _far(truth.shifted(ell), k, (theta,), n=512)
    predicted = np.exp(1j * k * ell * (math.sin(theta) - np.cos(ANGLES))) * u
    assert _rel(u_ell, predicted) <= 1e-6
    assert _rel(np.abs(u_ell) ** 2, np.abs(u) ** 2) <= 1e-6


def test_criterion_04_lattice_invariance_and_breaking(truth):
    k = 5.0
    ell_1 = 2 * math.pi / (k * (math.sin(TWO_WAVES[0]) - math.sin(TWO_WAVES[1])))
    assert ell_1 == pytest.approx(-2 * math.pi / 5)

    def intensity(profile):
        # solve each profile in a disc that contains its support with room to spare
        R = max(1.0, profile.support_radius + 0.3)
        return np.abs(_far(profile, k, TWO_WAVES, R=R, scale=6.0)) ** 2

    base = intensity(truth)
    assert _rel(intensity(truth.shifted(ell_1)), base) <= 1e-6
    # pinned when first measured: 0.978
    assert _rel(intensity(truth.shifted(ell_1 / 2)), base) > 1e-3


def test_criterion_05_far_field_asymptotics(truth):
    k = 5.0
    sol = F.solve_forward(truth, IncidentConfig(k, (-math.pi / 6,)), 1.0, 256)
    u_inf = F.eval_far_field(sol, ANGLES)
    xh = np.stack([np.cos(ANGLES), np.sin(ANGLES)], axis=1)
    err = [np.max(np.abs(math.sqrt(r) * np.exp(-1j * k * r) * F.eval_scattered(sol, r * xh) - u_inf))
           for r in (1e3, 2e3)]
    assert err[0] / err[1] == pytest.approx(2.0, rel=0.2)


def test_criterion_06_frechet_derivative(truth):
    basis = SplineBasis(10)
    x = np.linspace(-1, 1, 801)
    a = np.linalg.lstsq(basis.matrix(x), truth.evaluate(x), rcond=None)[0]
    grid = MeasurementGrid(FAR)
    cfg = [IncidentConfig(5.0, TWO_WAVES)]
    n = 160

    def data(coeffs):
        return simulate(inv.spline_profile(coeffs), cfg, grid, n=n).intensity.ravel()

    J = inv.jacobian(simulate(inv.spline_profile(a), cfg, grid, n=n), basis)
    rng = np.random.default_rng(31)
    for _ in range(3):
        v = rng.standard_normal(10)
        v /= np.linalg.norm(v)
        errs = []
        for eps in (1e-2, 1e-3):
            fd = (data(a + eps * v) - data(a - eps * v)) / (2 * eps)
            errs.append(np.linalg.norm(J @ v - fd) / np.linalg.norm(fd))
        assert errs[1] <= 5e-2
        assert errs[1] < errs[0]


def test_criterion_07_beta_rule():
    step = inv.lm_step(np.array([[1.0]]), np.array([1.0]), rho=0.8)
    assert step.beta == 4.0 or abs(step.beta - 4.0) <= 1e-12
    rng = np.random.default_rng(7)
    for m, p in ((30, 5), (200, 10), (12, 12)):
        u, _ = np.linalg.qr(rng.standard_normal((m, p)))
        v, _ = np.linalg.qr(rng.standard_normal((p, p)))
        s = np.logspace(1, -6, p)
        J = u @ np.diag(s) @ v.T
        r = J @ rng.standard_normal(p) + 1e-3 * rng.standard_normal(m)
        step = inv.lm_step(J, r, rho=0.8)
        # SVD oracle: residual of the filtered solution at this beta
        c = u.T @ r
        oracle = math.sqrt(np.linalg.norm(r - u @ c) ** 2 + np.sum((step.beta / (s * s + step.beta) * c) ** 2))
        assert abs(oracle - 0.8 * np.linalg.norm(r)) <= 1e-8 * np.linalg.norm(r)
        assert abs(np.linalg.norm(r + J @ step.delta) - 0.8 * np.linalg.norm(r)) <= 1e-8 * np.linalg.norm(r)


@pytest.fixture(scope="module")
def far_run(truth):
    start = time.perf_counter()
    data = make_dataset(truth, [TWO_WAVES], DESK_K, MeasurementGrid(FAR), NoiseSpec(0.01, 0))
    state = inv.recursive_newton(data, inv.InversionConfig(M=10, delta=0.01))
    return state, time.perf_counter() - start


@pytest.fixture(scope="module")
def near_run(truth):
    start = time.perf_counter()
    data = make_dataset(truth, [(-math.pi / 6,)], DESK_K, MeasurementGrid(NEAR, H=1.0, L=1.0, m=200),
                        NoiseSpec(0.01, 0))
    state = inv.recursive_newton(data, inv.InversionConfig(M=10, delta=0.01))
    return state, time.perf_counter() - start


def test_criterion_08_desk_far_field_reconstruction(far_run, truth):
    state, seconds = far_run
    err, apex = _max_error_and_apex(state, truth)
    assert seconds < 15 * 60
    assert abs(apex + 0.2) <= 0.1
    assert err <= 0.08, f"max |h_rec - h| = {err:.4f}"


def test_criterion_09_desk_near_field_reconstruction(near_run, truth):
    state, seconds = near_run
    err, apex = _max_error_and_apex(state, truth)
    assert seconds < 15 * 60
    assert abs(apex + 0.2) <= 0.1
    assert err <= 0.08, f"max |h_rec - h| = {err:.4f}"


def test_criterion_10_stopping_behaviour(truth):
    data = make_dataset(truth, [TWO_WAVES], DESK_K, MeasurementGrid(FAR), NoiseSpec(0.05, 0))
    cfg = inv.InversionConfig(M=10, delta=0.05)
    state = inv.recursive_newton(data, cfg)
    assert cfg.threshold == pytest.approx(0.075)
    for stage in state.stages:
        capped = stage.status == inv.ITERATION_CAP and stage.iterations == cfg.max_inner
        assert stage.err < 0.075 or capped
    assert state.stages[-1].err < 0.075
