import numpy as np
import pytest

from hardystein.jump_sim import (
    MartingaleSpec,
    compensated_integral,
    compensator,
    isometry_value,
    make_band,
    martingale_from_config,
    martingale_hardy_stein_mc,
    martingale_ladder,
    path_stream,
    sample_ensemble,
    sample_path,
    semigroup_mc_crosscheck,
    small_jump_exponent,
)
from hardystein.levy_measures import make_measure
from hardystein.testfunctions import gaussian_bump

from conftest import stable

UNIFORM = {"kind": "uniform", "low": 0.5, "high": 1.5}


def _cp(rate=3.0, law=UNIFORM):
    return make_measure("compound_poisson", rate=rate, jumps=law)


def test_path_streams_are_keyed_and_independent():
    a = path_stream(7, 3).random(5)
    assert np.array_equal(a, path_stream(7, 3).random(5))
    assert not np.array_equal(a, path_stream(7, 4).random(5))
    assert not np.array_equal(a, path_stream(8, 3).random(5))


def test_band_validation():
    nu, _ = stable()
    with pytest.raises(ValueError):
        make_band(nu)
    with pytest.raises(ValueError):
        make_band(nu, delta=0.0)
    with pytest.raises(ValueError):
        make_band(nu, delta=1.0, R_max=0.5)
    with pytest.raises(ValueError):
        sample_path(_cp(), 0.0)


def test_ensemble_matches_single_paths_and_threads():
    nu = _cp()
    ens1 = sample_ensemble(nu, 2.0, 300, seed=5, threads=1)
    ens4 = sample_ensemble(nu, 2.0, 300, seed=5, threads=4)
    assert np.array_equal(ens1.offsets, ens4.offsets)
    assert np.array_equal(ens1.times, ens4.times) and np.array_equal(ens1.sizes, ens4.sizes)
    for k in (0, 17, 299):
        p = sample_path(nu, 2.0, seed=5, index=k)
        q = ens1.path(k)
        assert np.array_equal(p.times, q.times) and np.array_equal(p.sizes, q.sizes)


def test_compound_poisson_counts_and_sizes():
    nu = _cp(rate=3.0)
    ens = sample_ensemble(nu, 2.0, 20000, seed=1)
    counts = np.diff(ens.offsets)
    assert abs(counts.mean() - 6.0) < 4 * np.sqrt(6.0 / 20000)
    assert abs(counts.var() - 6.0) < 0.3
    assert ens.sizes.min() >= 0.5 and ens.sizes.max() <= 1.5
    assert abs(ens.sizes.mean() - 1.0) < 4 * np.sqrt(1 / 12 / ens.sizes.size)
    assert np.all((ens.times >= 0) & (ens.times <= 2.0))
    # event times sorted within each path
    for k in range(50):
        assert np.all(np.diff(ens.path(k).times) >= 0)


def test_compound_poisson_position_uses_compensator():
    nu = _cp(rate=2.0, law={"kind": "uniform", "low": -1.0, "high": 0.5})
    p = sample_path(nu, 1.5, seed=2)
    # E[Y 1{|Y| <= 1}] = (0.25 - 1) / 2 / 1.5
    lk = 2.0 * (0.25 - 1.0) / 2 / 1.5
    assert p.drift == pytest.approx(lk)
    assert p.compensator_drift(1.5) == pytest.approx(-1.5 * lk)


def test_stable_band_sampling():
    nu, _ = stable(1.2, 2.0, 1.0)
    delta, R = 0.1, 10.0
    ens = sample_ensemble(nu, 1.0, 5000, delta=delta, seed=3, R_max=R)
    r = np.abs(ens.sizes)
    assert r.min() >= delta and r.max() <= R
    # intensity per side: c (delta^-a - R^-a) / a
    mass = 3.0 * (delta ** -1.2 - R ** -1.2) / 1.2
    n = ens.sizes.size
    assert abs(n / 5000 - mass) < 4 * np.sqrt(mass / 5000)
    share = np.mean(ens.sizes > 0)
    assert abs(share - 2 / 3) < 4 * np.sqrt(2 / 9 / n)


def test_tempered_band_sampling_by_thinning():
    nu = make_measure("tempered_stable", alpha=0.7, c_plus=1.0, c_minus=0.5, theta_plus=2.0,
                      theta_minus=1.0)
    band = make_band(nu, delta=0.05, R_max=20.0)
    y, w = band.nodes()
    mass = w.sum()
    ens = sample_ensemble(nu, 1.0, 4000, delta=0.05, seed=4, R_max=20.0)
    assert abs(ens.sizes.size / 4000 - mass) < 4 * np.sqrt(mass / 4000)
    pos = ens.sizes[ens.sizes > 0]
    mean_pos = np.sum(w[y > 0] * y[y > 0]) / np.sum(w[y > 0])
    assert abs(pos.mean() - mean_pos) < 4 * pos.std() / np.sqrt(pos.size)


def test_two_dimensional_sampling():
    nu, _ = stable(1.5, 1.0, 0.5, d=2)
    ens = sample_ensemble(nu, 1.0, 500, delta=0.2, seed=6, R_max=5.0)
    assert ens.sizes.shape[1] == 2
    r = np.linalg.norm(ens.sizes, axis=1)
    assert r.min() >= 0.2 - 1e-12 and r.max() <= 5.0 + 1e-12


def test_restrict_couples_paths():
    nu, _ = stable()
    ens = sample_ensemble(nu, 1.0, 200, delta=0.05, seed=8, R_max=np.inf)
    coarse = ens.restrict(0.1)
    assert coarse.n_paths == 200
    for k in (0, 50, 199):
        full = ens.path(k)
        keep = np.abs(full.sizes) >= 0.1
        c = coarse.path(k)
        assert np.array_equal(c.sizes, full.sizes[keep])
        assert np.array_equal(c.times, full.times[keep])


def test_martingale_spec_validation_and_round_trip():
    with pytest.raises(ValueError):
        MartingaleSpec("quadratic")
    with pytest.raises(ValueError):
        MartingaleSpec("const_band", {"value": 1.0, "band": (2.0, 1.0)})
    with pytest.raises(ValueError):
        martingale_from_config({"kind": "const_band"})
    with pytest.raises(ValueError):
        martingale_from_config({"kind": "y_up_to_time", "speed": 2})
    spec = martingale_from_config({"kind": "const_band", "value": 2.0, "band": [0.5, 1.0],
                                   "t1": 1.0, "M0": 0.5})
    again = martingale_from_config(spec.to_config())
    assert again == spec
    assert np.array_equal(spec.H(np.array([0.5, 1.5]), np.array([0.7, 0.7])), [2.0, 0.0])


def test_compensated_integral_mean_and_variance():
    nu = _cp(rate=2.0, law={"kind": "uniform", "low": -1.0, "high": 2.0})
    spec = MartingaleSpec("y_up_to_time", {"t1": 1.5}, M0=1.0)
    band = make_band(nu)
    assert compensator(spec, band, 2.0) == pytest.approx(2.0 * 1.5 * 0.5)
    # E Y^2 for U(-1, 2) is 1
    assert isometry_value(spec, band, 2.0) == pytest.approx(2.0 * 1.5 * 1.0)
    ens = sample_ensemble(nu, 2.0, 40000, seed=9)
    rows = martingale_ladder(spec, ens, [0.0, 1.0, 2.0])
    for row in rows:
        assert abs(row["mean"] - 1.0) < 4 * max(row["std_error"], 1e-12)
    single = compensated_integral(spec, ens.path(3))
    manual = 1.0 + ens.path(3).sizes[ens.path(3).times <= 1.5].sum() - 3.0 * 0.5
    assert single == pytest.approx(manual)


def test_bound_violation_raises():
    nu = _cp()
    spec = MartingaleSpec("y_up_to_time", sup_bound=0.1)
    with pytest.raises(ValueError):
        compensated_integral(spec, sample_path(nu, 1.0, seed=1))


def test_mc_identity_p2_matches_ito():
    nu = make_measure("compound_poisson", rate=2.0,
                      jumps={"kind": "atoms", "values": [1.0, -1.0], "probs": [0.5, 0.5]})
    spec = MartingaleSpec("y_up_to_time", {"t1": 1.5})
    rep = martingale_hardy_stein_mc(spec, nu, 2.0, 2.0, 20000, seed=11)
    assert rep.ito_oracle == pytest.approx(3.0)
    assert rep.z_combined < 3
    assert abs(rep.lhs - rep.ito_oracle) < 3 * rep.lhs_se
    assert rep.min_F >= 0


def test_mc_identity_p3_and_zero():
    nu = _cp(rate=2.0, law={"kind": "uniform", "low": -1.0, "high": 1.0})
    spec = MartingaleSpec("y_up_to_time", M0=0.5)
    rep = martingale_hardy_stein_mc(spec, nu, 3.0, 1.0, 20000, seed=12)
    assert rep.z_combined < 3 and rep.ito_oracle is None
    # paired errors are the tighter of the two
    assert rep.paired_se <= rep.combined_se
    z = martingale_hardy_stein_mc(MartingaleSpec("zero"), nu, 3.0, 1.0, 10)
    assert z.lhs == z.rhs == 0.0
    with pytest.raises(ValueError):
        martingale_hardy_stein_mc(spec, nu, 1.0, 1.0, 10)


def test_mc_reproducible():
    nu = _cp()
    spec = MartingaleSpec("const_band", {"value": 1.0, "band": (0.8, 2.0)})
    a = martingale_hardy_stein_mc(spec, nu, 1.5, 1.0, 2000, seed=3, threads=1).to_dict()
    b = martingale_hardy_stein_mc(spec, nu, 1.5, 1.0, 2000, seed=3, threads=4).to_dict()
    assert a == b


def test_small_jump_exponent_limits():
    nu, psi = stable(1.5, 1.0, 1.0)
    xi = np.array([0.5, 2.0])
    part = small_jump_exponent(nu, xi)
    # symmetric: int_{|y|<d} (1 - cos xi y) nu(dy) ~ c xi^2 d^(2-a) / (2 - a)
    for d in (1e-6, 1e-3):
        approx = xi ** 2 * d ** 0.5 / 0.5
        assert np.allclose(part(d).real, approx, rtol=1e-3)
        assert np.allclose(part(d).imag, 0, atol=1e-14)


def test_crosscheck_compound_poisson():
    nu = _cp(rate=1.5, law={"kind": "uniform", "low": -1.0, "high": 1.0})
    f = gaussian_bump(1024, 20.0)
    rep = semigroup_mc_crosscheck(nu, f, 1.0, [0.0, 0.7], 20000, seed=1)
    for row in rep.rows:
        assert abs(row["mc"] - row["spectral"]) < 4 * row["std_error"]
    for row in rep.ladder:
        assert abs(row["mean"] - rep.ladder[0]["mean"]) < 4 * row["std_error"] + 1e-3


def test_crosscheck_stable_band_bias():
    nu, _ = stable(1.5, 1.0, 0.5)
    f = gaussian_bump(1024, 20.0)
    rep = semigroup_mc_crosscheck(nu, f, 0.5, [0.0], 20000, delta=0.1, seed=2)
    assert len(rep.rows) == 2
    for row in rep.rows:
        assert abs(row["mc"] - row["band_spectral"]) < 4 * row["std_error"]
    assert abs(rep.rows[1]["bias"]) < abs(rep.rows[0]["bias"])
    t0 = semigroup_mc_crosscheck(nu, f, 0.0, [0.0], 10)
    assert t0.rows[0]["mc"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        semigroup_mc_crosscheck(nu, f, 0.5, [0.0], 10)
