import numpy as np
import pytest

from hardystein.increments import QuadSpec
from hardystein.levy_measures import symmetrize
from hardystein.spectral import GridFunction, SemigroupOperator, lp_norm, semigroup_apply
from hardystein.square_functions import (
    _sorted_partial_sums,
    default_horizon,
    norm_equivalence_report,
    square_function,
    square_functions,
)
from hardystein.testfunctions import gaussian_bump, random_smooth, zero_mean_family

from conftest import stable

N, L = 1024, 20.0


@pytest.fixture(scope="module")
def setting():
    nu, psi = stable()
    return SemigroupOperator(psi, "symmetrized"), symmetrize(nu).nu_sym, psi


def test_rejects_nonsymmetric_measure_and_forward_semigroup(setting):
    op, sym, psi = setting
    nu, _ = stable()
    f = gaussian_bump(N, L)
    with pytest.raises(ValueError):
        square_function(op, nu, f)
    with pytest.raises(ValueError):
        square_function(SemigroupOperator(psi), sym, f)
    with pytest.raises(ValueError):
        square_function(op, sym, f, variant="half")
    with pytest.raises(ValueError):
        square_function(op, sym, f, T_max=0.0)


def test_zero_function(setting):
    op, sym, _ = setting
    res = square_function(op, sym, GridFunction.zeros(N, L), T_max=1.0)
    assert not np.any(res.g_values.values)


def test_plancherel_for_zero_mean_family(setting):
    op, sym, _ = setting
    for f in zero_mean_family(N, L):
        res = square_function(op, sym, f)
        g2, f2, ratio = res.p_norms[2.0]
        assert 0.99 <= ratio <= 1.01
        # finite-horizon energy identity with the reported tail
        assert g2 ** 2 + res.tail_energy == pytest.approx(f2 ** 2, rel=1e-2)
        assert res.tail_energy <= 1e-8 * f2 ** 2


def test_starred_below_full_and_nonnegative(setting):
    op, sym, _ = setting
    rng = np.random.default_rng(11)
    for _ in range(3):
        f = random_smooth(rng, N, L)
        g2, g2s, *_ = square_functions(op, sym, f, T_max=4.0)
        assert np.all(g2 >= 0) and np.all(g2s >= 0)
        assert np.count_nonzero(g2s > g2) == 0


def test_scaling_covariance(setting):
    op, sym, _ = setting
    f = random_smooth(np.random.default_rng(2), N, L)
    a = square_function(op, sym, f, T_max=2.0).g_values.values
    b = square_function(op, sym, f.with_values(-2.5 * f.values), T_max=2.0).g_values.values
    assert np.allclose(b, 2.5 * a, rtol=1e-12, atol=1e-14)


def test_partial_sums_use_strict_inequality():
    u = np.array([1.0, -1.0, 0.5, 2.0, -0.5, 1.0])
    c0, c1, c2 = _sorted_partial_sums(u)
    for i, ui in enumerate(u):
        below = np.abs(u) < abs(ui)
        assert c0[i] == below.sum()
        assert c1[i] == pytest.approx(u[below].sum())
        assert c2[i] == pytest.approx((u[below] ** 2).sum())


def test_default_horizon(setting):
    _, _, psi = setting
    f = zero_mean_family(N, L)[0]
    T, note = default_horizon(psi.symmetrized(), f)
    u = semigroup_apply(SemigroupOperator(psi, "symmetrized"), T, f)
    assert lp_norm(u, 2) <= 1e-4 * lp_norm(f, 2) and note is None
    T, note = default_horizon(psi.symmetrized(), gaussian_bump(N, L))
    assert "mean" in note


def test_norm_equivalence_report(setting):
    op, sym, _ = setting
    fam = zero_mean_family(N, L)[:2]
    table = norm_equivalence_report(fam, (1.5, 2.0, 3.0), op, sym)
    assert len(table.rows) == 2 * 2 * 3
    assert all(0 < r["ratio"] < np.inf for r in table.rows)
    assert table.summary["starred:p=1.5"]["min"] > 0
    assert len(table.ratios(3.0)) == 2
    with pytest.raises(ValueError):
        norm_equivalence_report([GridFunction.zeros(N, L)], (2.0,), op, sym)


def test_ratios_stable_under_refinement(setting):
    op, sym, _ = setting
    f = zero_mean_family(N, L)[3]
    g = zero_mean_family(2 * N, L)[3]
    for variant in ("full", "starred"):
        a = square_function(op, sym, f, variant, p_list=(1.5, 3.0)).p_norms
        b = square_function(op, sym, g, variant, p_list=(1.5, 3.0)).p_norms
        for p in (1.5, 3.0):
            assert a[p][2] == pytest.approx(b[p][2], rel=2e-2)


def test_two_dimensional_plancherel():
    nu, psi = stable(1.5, 1.0, 1.0, d=2)
    f = random_smooth(np.random.default_rng(4), 64, 12.0, d=2, zero_mean=True, spread=2.0)
    quad = QuadSpec(t_nodes=32, y_shells=16, angles=8)
    res = square_function(SemigroupOperator(psi, "symmetrized"), nu, f, quad=quad)
    assert res.p_norms[2.0][2] == pytest.approx(1.0, abs=2e-2)
