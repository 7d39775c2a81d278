import warnings

import numpy as np
import pytest

from romclose.closure import (ClosureOperators, ClosureSamples, UnresolvedInterpolant,
                              auto_ridge_lambda, closed_operators, d2vms_rhs,
                              extract_closure_samples, fit_closure, fit_toy_closure,
                              integrate_d2vms, integrate_irom, irom_rhs, quadratic_features,
                              toy_closure_samples)
from romclose.errors import (DimensionMismatch, IllConditionedWarning, InsufficientSamples,
                             RankNotStrictlySmaller, RankTooLarge, TimeOutOfRange)
from romclose.fom import Grid1D, SnapshotSet, ToySystem, default_toy, solve_toy
from romclose.galerkin import RomOperators, assemble_operators, grom_rhs, integrate_grom
from romclose.pod import compute_pod, project


def planted_closure(rng, r):
    A = rng.standard_normal((r, r))
    B = rng.standard_normal((r, r, r))
    return A, B


def planted_samples(rng, r=3, M=None):
    M = M or 3 * (r + r * r)
    A, B = planted_closure(rng, r)
    a = rng.standard_normal((M, r))
    tau = a @ A.T + np.einsum("imn,jm,jn->ji", B, a, a)
    # Two unresolved columns of noise: a_full only has to be wider than r.
    a_full = np.hstack([a, rng.standard_normal((M, 2))])
    return ClosureSamples(np.arange(M, dtype=float), tau, a_full, r), A, B


# --- extraction -----------------------------------------------------------

def test_closure_vanishes_for_data_in_resolved_space(small_burgers):
    basis = compute_pod(small_burgers, 8)
    a = project(basis, small_burgers.fields, 3)
    fields = basis.mean_field[:, None] + basis.modes[:, :3] @ a
    synthetic = SnapshotSet(small_burgers.grid, small_burgers.times, fields)
    samples = extract_closure_samples(basis, synthetic, 3, 0.05)
    assert np.max(np.abs(samples.a_full[:, 3:])) <= 1e-12
    assert np.max(np.abs(samples.tau)) <= 1e-12


def test_closure_identity(small_burgers):
    basis = compute_pod(small_burgers, 10)
    ops_R = assemble_operators(basis, viscosity=0.05)
    samples = extract_closure_samples(basis, small_burgers, 4, 0.05, ops_R=ops_R)
    ops_r = ops_R.truncate(4)
    for a, tau in zip(samples.a_full, samples.tau):
        full = grom_rhs(ops_R, a)[:4]
        lhs = grom_rhs(ops_r, a[:4]) + tau
        assert np.max(np.abs(lhs - full)) <= 1e-13 * max(1.0, np.max(np.abs(full)))


def test_extraction_rank_errors(small_burgers):
    basis = compute_pod(small_burgers, 5)
    with pytest.raises(RankNotStrictlySmaller):
        extract_closure_samples(basis, small_burgers, 5, 0.05)
    with pytest.raises(RankTooLarge):
        extract_closure_samples(basis, small_burgers, 6, 0.05)


def test_benchmark_closure_is_non_negligible(benchmark_run):
    samples = benchmark_run.trained.samples
    ops_r = benchmark_run.trained.ops_r
    F_r = np.array([grom_rhs(ops_r, a) for a in samples.a_resolved])
    assert np.linalg.norm(samples.tau) / np.linalg.norm(F_r) > 0.05


def test_benchmark_closure_shrinks_with_resolution(benchmark_run):
    """POD modes of the moving front come in pairs, so the trend is checked on even r."""
    basis, snaps = benchmark_run.basis, benchmark_run.snapshots
    ops_R = benchmark_run.trained.ops_R
    ratios = []
    for r in range(4, basis.R, 2):
        samples = extract_closure_samples(basis, snaps, r, ops_R.viscosity, ops_R=ops_R)
        F_r = np.array([grom_rhs(ops_R.truncate(r), a) for a in samples.a_resolved])
        ratios.append(np.linalg.norm(samples.tau) / np.linalg.norm(F_r))
    assert all(b < a for a, b in zip(ratios, ratios[1:])), ratios
    # At r = R the two right-hand sides coincide.
    a = project(basis, snaps.fields[:, -1])
    assert np.all(grom_rhs(ops_R, a) - grom_rhs(ops_R.truncate(basis.R), a) == 0.0)


# --- fitting --------------------------------------------------------------

def test_quadratic_features_layout():
    a = np.array([[1.0, 2.0]])
    np.testing.assert_array_equal(quadratic_features(a), [[1, 2, 1, 2, 2, 4]])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_plant_and_recover(seed):
    rng = np.random.default_rng(seed)
    samples, A, B = planted_samples(rng, r=3)
    fit = fit_closure(samples, 0.0)
    B_sym = 0.5 * (B + B.transpose(0, 2, 1))
    assert np.max(np.abs(fit.A_tilde - A)) <= 1e-8
    assert np.max(np.abs(fit.B_tilde - B_sym)) <= 1e-8
    assert fit.residual_rel <= 1e-10
    assert fit.ridge_lambda == 0.0


def test_planted_closure_trajectory(rng):
    samples, A, B = planted_samples(rng, r=3)
    fit = fit_closure(samples, 0.0)
    base = RomOperators(-np.eye(3), np.zeros((3, 3, 3)), 0.0)
    planted = RomOperators(-np.eye(3) + A, B, 0.0)
    a0 = np.array([0.1, -0.05, 0.08])
    ref = integrate_grom(planted, a0, 1e-3, 100)
    got = integrate_d2vms(base, fit, a0, 1e-3, 100)
    assert np.max(np.abs(got.coeffs - ref.coeffs)) <= 1e-6


def test_symmetrization_leaves_closure_unchanged(rng):
    samples, _, _ = planted_samples(rng, r=3, M=40)
    fit = fit_closure(samples, 1e-3)
    assert np.array_equal(fit.B_tilde, fit.B_tilde.transpose(0, 2, 1))
    skew = rng.standard_normal((3, 3, 3))
    skew = skew - skew.transpose(0, 2, 1)
    a = rng.standard_normal(3)
    plain = ClosureOperators(fit.A_tilde, fit.B_tilde)(a)
    shifted = ClosureOperators(fit.A_tilde, fit.B_tilde + skew)(a)
    np.testing.assert_allclose(plain, shifted, atol=1e-12)


def test_zero_target_gives_zero_operators(rng):
    samples, _, _ = planted_samples(rng, r=2)
    zero = ClosureSamples(samples.times, np.zeros_like(samples.tau), samples.a_full, 2)
    for lam in (0.0, 0.5, "auto"):
        fit = fit_closure(zero, lam)
        assert np.all(fit.A_tilde == 0) and np.all(fit.B_tilde == 0)
        assert fit.residual_rel == 0.0


def test_residual_monotone_in_ridge(rng):
    samples, _, _ = planted_samples(rng, r=3, M=60)
    noisy = ClosureSamples(samples.times, samples.tau + 0.3 * rng.standard_normal(samples.tau.shape),
                           samples.a_full, 3)
    lams = [10.0**k for k in range(3, -9, -1)] + [0.0]
    res = [fit_closure(noisy, lam).residual_rel for lam in lams]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(res, res[1:])), res


def test_parallel_rows_are_bitwise_identical(rng):
    samples, _, _ = planted_samples(rng, r=4, M=80)
    one = fit_closure(samples, 1e-4, n_jobs=1)
    many = fit_closure(samples, 1e-4, n_jobs=4)
    assert one.A_tilde.tobytes() == many.A_tilde.tobytes()
    assert one.B_tilde.tobytes() == many.B_tilde.tobytes()


def test_auto_lambda_scale(rng):
    samples, _, _ = planted_samples(rng, r=3)
    s = np.linalg.svd(quadratic_features(samples.a_resolved), compute_uv=False)
    assert auto_ridge_lambda(samples) == pytest.approx(1e-6 * s[0] ** 2, rel=1e-14)
    assert fit_closure(samples, "auto").ridge_lambda == auto_ridge_lambda(samples)


def test_constraint_hook_is_applied(rng):
    samples, _, _ = planted_samples(rng, r=2)
    fit = fit_closure(samples, 0.0, constrain=lambda A, B: (np.zeros_like(A), B))
    assert np.all(fit.A_tilde == 0)


def test_fit_errors_and_warnings(rng):
    one = ClosureSamples([0.0], np.zeros((1, 2)), np.ones((1, 3)), 2)
    with pytest.raises(InsufficientSamples):
        fit_closure(one, 0.0)
    # Collinear samples make the unregularized fit singular.
    a = np.outer(np.linspace(1, 2, 20), [1.0, 2.0])
    flat = ClosureSamples(np.arange(20.0), a.copy(), np.hstack([a, a[:, :1]]), 2)
    with pytest.warns(IllConditionedWarning):
        fit_closure(flat, 0.0)
    with pytest.raises(ValueError):
        fit_closure(flat, -1.0)


def test_benchmark_fit_quality(benchmark_run):
    fit = benchmark_run.trained.closure
    assert fit.residual_rel <= 0.5
    assert fit.r == 4


# --- right-hand sides -----------------------------------------------------

def test_d2vms_with_zero_closure_is_grom_bitwise(small_burgers):
    ops = assemble_operators(compute_pod(small_burgers, 5), viscosity=0.05)
    a = project(compute_pod(small_burgers, 5), small_burgers.fields[:, 7])
    assert d2vms_rhs(ops, ClosureOperators.zeros(5), a).tobytes() == grom_rhs(ops, a).tobytes()


def test_d2vms_loop_oracle(rng):
    r = 3
    ops = RomOperators(rng.standard_normal((r, r)), rng.standard_normal((r, r, r)), 0.1,
                       rng.standard_normal(r), rng.standard_normal((r, r)), True)
    clo = ClosureOperators(rng.standard_normal((r, r)), rng.standard_normal((r, r, r)))
    a = rng.standard_normal(r)
    expect = grom_rhs(ops, a).copy()
    for i in range(r):
        for m in range(r):
            expect[i] += clo.A_tilde[i, m] * a[m]
            for n in range(r):
                expect[i] += clo.B_tilde[i, m, n] * a[m] * a[n]
    np.testing.assert_allclose(d2vms_rhs(ops, clo, a), expect, rtol=1e-13, atol=1e-13)
    with pytest.raises(DimensionMismatch):
        closed_operators(ops, ClosureOperators.zeros(2))


def test_irom_with_vanishing_unresolved_modes_is_grom(small_burgers):
    basis = compute_pod(small_burgers, 6)
    ops_R = assemble_operators(basis, viscosity=0.05)
    interp = UnresolvedInterpolant([0.0, 1.0], np.zeros((2, 2)))
    a = project(basis, small_burgers.fields[:, 5], 4)
    assert irom_rhs(ops_R, 4, a, interp, 0.3).tobytes() == grom_rhs(ops_R.truncate(4), a).tobytes()
    interp1 = UnresolvedInterpolant([0.0, 1.0], np.zeros((2, 1)))
    a5 = project(basis, small_burgers.fields[:, 5], 5)
    np.testing.assert_allclose(irom_rhs(ops_R, 5, a5, interp1, 0.5),
                               grom_rhs(ops_R.truncate(5), a5), rtol=0, atol=1e-14)


def test_unresolved_interpolant():
    interp = UnresolvedInterpolant([0.0, 1.0, 3.0], [[0.0, 1.0], [2.0, 1.0], [6.0, -1.0]])
    np.testing.assert_allclose(interp(0.5), [1.0, 1.0])
    np.testing.assert_allclose(interp(2.0), [4.0, 0.0])
    np.testing.assert_allclose(interp(3.0), [6.0, -1.0])
    with pytest.raises(TimeOutOfRange):
        interp(3.5)
    with pytest.raises(TimeOutOfRange):
        interp(-0.1)


def test_irom_horizon_out_of_range(small_burgers):
    basis = compute_pod(small_burgers, 6)
    ops_R = assemble_operators(basis, viscosity=0.05)
    samples = extract_closure_samples(basis, small_burgers, 3, 0.05, ops_R=ops_R)
    interp = UnresolvedInterpolant.from_samples(samples)
    t_end = small_burgers.times[-1]
    with pytest.raises(TimeOutOfRange):
        integrate_irom(ops_R, 3, interp, samples.a_resolved[0], 0.01, int(t_end / 0.01) + 5)


# --- toy ------------------------------------------------------------------

def test_toy_without_coupling_has_zero_closure():
    sys_ = default_toy()
    B = sys_.B3.copy()
    B[:2, 2, :] = 0.0
    B[:2, :, 2] = 0.0
    decoupled = ToySystem(sys_.A3, B, [1.0, 1.0, 0.5])
    ref = solve_toy(decoupled, 1e-2, 500)
    samples = toy_closure_samples(ref, decoupled, 2)
    assert np.all(samples.tau == 0.0)
    fit = fit_toy_closure(ref, decoupled, 2)
    assert np.all(fit.A_tilde == 0) and np.all(fit.B_tilde == 0)


def test_default_toy_closure_halves_the_error():
    from romclose.pipeline import run_toy

    run = run_toy()
    avg = run.report.time_average
    assert avg["D2VMS"] <= 0.5 * avg["GROM"]
    # The ideal model only carries the O(dt^2) error of interpolating a_3.
    assert avg["IROM"] <= 1e-4
