import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardystein.levy_measures import cauchy_exponent, char_exponent, make_measure
from hardystein.spectral import (
    AliasingError,
    GridFunction,
    GridMismatch,
    SemigroupOperator,
    fourier_forward,
    fourier_inverse,
    inner,
    lp_norm,
    semigroup_apply,
    transition_density,
    ultra_constant,
    wraparound_fraction,
)
from hardystein.testfunctions import gaussian_bump, random_smooth

from conftest import stable


def _gauss(N=4096, L=20.0):
    return GridFunction.from_function(lambda x: np.exp(-x ** 2 / 2), N, L)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridFunction(np.zeros(100), 10.0)
    with pytest.raises(ValueError):
        GridFunction(np.zeros((8, 4)), 10.0)
    with pytest.raises(ValueError):
        GridFunction(np.zeros(8), 10.0, "time")
    f = GridFunction(np.zeros(8), 10.0)
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(GridMismatch):
        f.check_grid(GridFunction(np.zeros(16), 10.0))


def test_bytes_round_trip_and_layout(tmp_path):
    rng = np.random.default_rng(1)
    f = GridFunction(rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)), 3.5)
    blob = f.to_bytes()
    assert blob[:24] == (2).to_bytes(8, "little") + (8).to_bytes(8, "little") + np.float64(3.5).tobytes()
    assert len(blob) == 24 + 64 * 16
    g = GridFunction.from_bytes(blob)
    assert np.array_equal(g.values, f.values) and g.L == 3.5
    r = GridFunction(rng.normal(size=16), 2.0)
    r.save(tmp_path / "r.bin")
    back = GridFunction.load(tmp_path / "r.bin")
    assert back.is_real and np.array_equal(back.values, r.values)
    with pytest.raises(ValueError):
        GridFunction.from_bytes(blob[:-16])


def test_csv_export():
    f = GridFunction(np.arange(4.0), 2.0)
    lines = f.to_csv().splitlines()
    assert lines[0].startswith("# grid d=1 N=4")
    assert lines[1] == "x,re,im"
    assert len(lines) == 6


def test_gaussian_transform():
    F = fourier_forward(_gauss())
    xi = F.frequencies()
    sel = np.abs(xi) <= 5
    exact = np.sqrt(2 * np.pi) * np.exp(-xi[sel] ** 2 / 2)
    assert np.max(np.abs(F.values[sel] - exact)) < 1e-8


def test_round_trip_zero_and_parseval():
    rng = np.random.default_rng(3)
    f = random_smooth(rng, 1024, 20.0)
    g = random_smooth(rng, 1024, 20.0)
    back = fourier_inverse(fourier_forward(f), real=True)
    assert np.max(np.abs(back.values - f.values)) < 1e-12 * np.max(np.abs(f.values))
    z = fourier_forward(GridFunction.zeros(64, 5.0))
    assert not np.any(z.values)
    F, G = fourier_forward(f), fourier_forward(g)
    dxi = np.pi / f.L
    spec = float(np.real(np.sum(F.values * np.conj(G.values))) * dxi / (2 * np.pi))
    assert spec == pytest.approx(inner(f, g), rel=1e-10)
    assert np.sum(np.abs(F.values) ** 2) * dxi / (2 * np.pi) == pytest.approx(lp_norm(f, 2) ** 2,
                                                                              rel=1e-10)


def test_round_trip_two_dimensional():
    rng = np.random.default_rng(4)
    f = random_smooth(rng, 64, 10.0, d=2)
    back = fourier_inverse(fourier_forward(f), real=True)
    assert np.max(np.abs(back.values - f.values)) < 1e-12


def test_semigroup_identity_at_zero_and_rejects_negative_time():
    _, psi = stable()
    f = gaussian_bump(512, 20.0)
    op = SemigroupOperator(psi)
    assert semigroup_apply(op, 0.0, f) is f
    with pytest.raises(ValueError):
        semigroup_apply(op, -1.0, f)
    with pytest.raises(ValueError):
        SemigroupOperator(psi, "backward")


def test_cauchy_plancherel_norm():
    f = _gauss()
    u = semigroup_apply(SemigroupOperator(cauchy_exponent()), 1.0, f)
    # Plancherel on the frequency grid with the closed-form transform
    xi = f.frequencies()
    dxi = np.pi / f.L
    oracle = np.sqrt(np.sum(2 * np.pi * np.exp(-xi ** 2 - 2 * np.abs(xi))) * dxi / (2 * np.pi))
    assert lp_norm(u, 2) == pytest.approx(oracle, abs=1e-8)
    # the continuum value differs by the trapezoid error at the kink of |xi|
    from scipy.special import erfc
    continuum = np.sqrt(np.sqrt(np.pi) * np.e * erfc(1.0))
    assert lp_norm(u, 2) == pytest.approx(continuum, rel=1e-2)


def test_semigroup_law_duality_and_symmetrization():
    _, psi = stable()
    rng = np.random.default_rng(5)
    f = random_smooth(rng, 1024, 20.0)
    g = random_smooth(rng, 1024, 20.0)
    fw = SemigroupOperator(psi)
    du = SemigroupOperator(psi, "dual")
    sy = SemigroupOperator(psi, "symmetrized")
    a = fw.apply(0.3, fw.apply(0.7, f)).values
    b = fw.apply(1.0, f).values
    assert np.max(np.abs(a - b)) < 1e-10
    assert inner(fw.apply(1.0, f), g) == pytest.approx(inner(f, du.apply(1.0, g)), rel=1e-10)
    c = du.apply(0.5, fw.apply(0.5, f)).values
    assert np.max(np.abs(c - sy.apply(1.0, f).values)) < 1e-10
    for op in (fw, du, sy):
        u = op.apply(0.8, f)
        assert u.is_real
        for p in (1.5, 2.0, 3.0):
            assert lp_norm(u, p) <= lp_norm(f, p) * (1 + 1e-10)


def test_cauchy_density_is_periodized_kernel():
    N, L = 4096, 40.0
    pt = transition_density(cauchy_exponent(), 1.0, N, L)
    x = pt.points()
    P = 2 * L
    a = 2 * np.pi / P
    periodized = (1 / P) * np.sinh(a) / (np.cosh(a) - np.cos(a * x))
    sel = np.abs(x) <= 10
    assert np.max(np.abs(pt.values[sel] - periodized[sel])) < 1e-6
    # the continuum density differs only by the image sum, of order 1e-4
    cont = 1 / (np.pi * (1 + x[sel] ** 2))
    assert np.max(np.abs(pt.values[sel] - cont)) < 2e-4


def test_density_mass_and_guard():
    _, psi = stable(1.5, 1.0, 1.0)
    pt = transition_density(psi, 1.0)
    assert np.sum(pt.values) * pt.cell == pytest.approx(1.0, abs=1e-8)
    assert pt.values.min() > -1e-10
    with pytest.raises(AliasingError):
        transition_density(cauchy_exponent(), 1e-3, 256, 40.0)
    with pytest.raises(ValueError):
        transition_density(psi, 0.0)


def test_density_below_ultra_constant():
    rng = np.random.default_rng(6)
    for _ in range(5):
        alpha = rng.uniform(0.8, 1.9)
        nu = make_measure("stable_asymmetric", alpha=alpha, c_plus=rng.uniform(0.5, 2),
                          c_minus=rng.uniform(0.5, 2))
        psi = char_exponent(nu)
        t = rng.uniform(0.5, 2.0)
        pt = transition_density(psi, t)
        assert pt.values.max() <= ultra_constant(psi, t, "periodic") * (1 + 1e-10)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_cauchy_ultra_constant(t):
    assert abs(ultra_constant(cauchy_exponent(), t) - 1 / (np.pi * t)) < 1e-8


def test_ultra_constant_monotone_and_periodic_mode():
    for psi in (cauchy_exponent(), stable()[1], stable(1.5, 1.0, 1.0, d=2)[1]):
        c = [ultra_constant(psi, t) for t in (1.0, 2.0, 4.0)]
        assert c[0] > c[1] > c[2]
    per = ultra_constant(cauchy_exponent(), 2.0, "periodic")
    # coth(2 pi / 80) / 80: Poisson kernel of the torus at x = 0
    assert per == pytest.approx(1 / (80 * np.tanh(2 * np.pi / 80)), rel=1e-10)
    with pytest.raises(AliasingError):
        ultra_constant(cauchy_exponent(), 1e-3, "periodic", 256, 40.0)


@settings(max_examples=20)
@given(st.integers(0, 10 ** 6), st.sampled_from([1.5, 2.0, 3.0]), st.sampled_from([0.5, 1.0]))
def test_ultracontractive_bound(seed, p, t):
    psi = cauchy_exponent()
    f = random_smooth(np.random.default_rng(seed), 4096, 40.0)
    u = semigroup_apply(SemigroupOperator(psi), t, f)
    ct = ultra_constant(psi, t, "periodic", 4096, 40.0)
    assert lp_norm(u, np.inf) <= ct ** (1 / p) * lp_norm(f, p) + 1e-10


def test_wraparound_fraction():
    assert wraparound_fraction(gaussian_bump(1024, 40.0)) < 1e-10
    shifted = gaussian_bump(1024, 40.0, center=30.0)
    assert wraparound_fraction(shifted) > 0.5
