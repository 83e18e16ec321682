"""Bilinear forms of semigroup increments and their Fourier multipliers.

For a bounded weight phi(t, y),

    Lambda_phi(f, g) = int int_0^inf int (P_t f(x + y) - P_t f(x))
                       (P_t g(x + y) - P_t g(x)) phi(t, y) nu(dy) dt dx

equals <S_phi f, g> where S_phi multiplies f_hat by

    m_phi(xi) = int_0^inf int |exp(i xi.y) - 1|^2 exp(-2 t Re psi(xi))
                phi(t, y) nu(dy) dt.

Weights come from a closed template set.  Each template is a finite sum
of terms ``coef * a(t) * b(side of y)``, where the time factor ``a`` is a
product of decaying exponentials and sines.  The same decomposition
drives the symbol, the spatial quadrature and the symmetrized form.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .increments import IncrementEngine, QuadSpec, jump_grid, time_mesh
from .levy_measures import LevyMeasure, SIDES, make_measure, symmetrize
from .parallel import ordered_map
from .quadrature import geometric_edges, panel_nodes, subdivided_edges
from .spectral import (
    GridMismatch,
    frequency_mesh,
    fourier_forward,
    fourier_inverse,
    inner,
    lp_norm,
)
from .square_functions import default_horizon

TEMPLATES = ("const", "exp_decay_t", "half_space_y", "sin_t", "product", "sum")
FLAG_LEVEL = 1e-12
TAU_MAX = -np.log(1e-16)


class BoundWarning(UserWarning):
    """A computed value broke an a-priori bound: the quadrature is suspect."""


@dataclass(frozen=True)
class _Term:
    coef: float
    time_factors: tuple = ()  # (("exp", rate) | ("sin", omega), ...)
    side: tuple = (1.0, 1.0)  # weight on y-side +, y-side -

    @property
    def constant_in_time(self):
        return not self.time_factors

    @property
    def omega(self):
        return sum(v for k, v in self.time_factors if k == "sin")

    def time_value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.ones(t.shape)
        for kind, v in self.time_factors:
            out = out * (np.exp(-v * t) if kind == "exp" else np.sin(v * t))
        return out

    def times(self, other):
        return _Term(self.coef * other.coef, self.time_factors + other.time_factors,
                     (self.side[0] * other.side[0], self.side[1] * other.side[1]))


@dataclass(frozen=True, eq=False)
class MultiplierSpec:
    """A bounded weight phi(t, y) from the template set.

    Attributes
    ----------
    config : dict
        The JSON description.
    terms : tuple of _Term
        Separable expansion used by every computation.
    sup_norm : float
        Declared bound on |phi|.
    description : str
    """

    config: dict
    terms: tuple
    sup_norm: float
    description: str = ""

    def __call__(self, t, y, d=1):
        """phi(t, y); y has shape (...,) in 1-d or (..., 2) in 2-d."""
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        lead = y if d == 1 else y[..., 0]
        out = np.zeros(np.broadcast(t, lead).shape)
        for term in self.terms:
            b = np.where(lead > 0, term.side[0], np.where(lead < 0, term.side[1], 0.0))
            out = out + term.coef * term.time_value(t) * b
        return out

    def side_value(self, t, side):
        """phi(t, y) for any y on the given side."""
        k = 0 if side == 1 else 1
        return sum(term.coef * term.time_value(t) * term.side[k] for term in self.terms)

    def check_bound(self, rng=None, n=10_000, d=1):
        """Sample |phi| and confirm it respects the declared bound."""
        rng = rng or np.random.default_rng(0)
        t = 10.0 ** rng.uniform(-4, 3, n)
        y = rng.standard_cauchy((n,) if d == 1 else (n, 2))
        return float(np.max(np.abs(self(t, y, d)))) <= self.sup_norm * (1 + 1e-12)

    def to_config(self):
        return self.config


def phi_from_config(cfg):
    """Build a MultiplierSpec from its JSON description."""
    if not isinstance(cfg, dict):
        raise ValueError("phi must be a JSON object")
    kind = cfg.get("kind")
    if kind == "const":
        v = float(cfg["value"])
        return MultiplierSpec(cfg, (_Term(v),), abs(v), "phi = %g" % v)
    if kind == "exp_decay_t":
        r = float(cfg.get("rate", 1.0))
        if r < 0:
            raise ValueError("decay rate must be non-negative")
        return MultiplierSpec(cfg, (_Term(1.0, (("exp", r),)),), 1.0, "exp(-%g t)" % r)
    if kind == "half_space_y":
        sign = cfg.get("sign", "+")
        if sign not in ("+", "-"):
            raise ValueError("sign must be '+' or '-'")
        side = (1.0, 0.0) if sign == "+" else (0.0, 1.0)
        return MultiplierSpec(cfg, (_Term(1.0, (), side),), 1.0, "1{y%s0}" % ("><"[sign == "-"]))
    if kind == "sin_t":
        w = float(cfg.get("omega", 1.0))
        return MultiplierSpec(cfg, (_Term(1.0, (("sin", w),)),), 1.0, "sin(%g t)" % w)
    if kind == "product":
        factors = [phi_from_config(c) for c in cfg["factors"]]
        if not factors:
            raise ValueError("product needs at least one factor")
        terms = factors[0].terms
        sup = factors[0].sup_norm
        for fac in factors[1:]:
            terms = tuple(a.times(b) for a in terms for b in fac.terms)
            sup *= fac.sup_norm
        return MultiplierSpec(cfg, terms, sup, " * ".join(f.description for f in factors))
    if kind == "sum":
        terms = []
        sup = 0.0
        parts = []
        for item in cfg["terms"]:
            c = float(item.get("coef", 1.0))
            sub = phi_from_config(item["phi"])
            terms.extend(_Term(c * t.coef, t.time_factors, t.side) for t in sub.terms)
            sup += abs(c) * sub.sup_norm
            parts.append("%g*(%s)" % (c, sub.description))
        return MultiplierSpec(cfg, tuple(terms), sup, " + ".join(parts))
    raise ValueError("unknown phi template %r" % kind)


def template(kind, **params):
    cfg = {"kind": kind}
    cfg.update(params)
    return phi_from_config(cfg)


# ---------------------------------------------------------------------------
# the symbol


@dataclass
class SymbolGrid:
    """m_phi on the full frequency grid (stored complex for audit)."""

    m_values: np.ndarray
    N: int
    L: float
    d: int
    flagged: np.ndarray
    description: str = ""

    @property
    def grid(self):
        return (self.N, self.L, self.d)

    def frequencies(self):
        return frequency_mesh(self.N, self.L, self.d)

    def clean(self):
        """Mask of frequencies with a trusted value (not zero, not flagged)."""
        xi = self.frequencies()
        nz = np.abs(xi) > 0 if self.d == 1 else np.linalg.norm(xi, axis=-1) > 0
        return nz & ~self.flagged

    def sup(self):
        return float(np.max(np.abs(self.m_values)))


def laplace_time_factor(term, lam, order=16):
    """int_0^inf a(t) exp(-lam t) dt on geometric nodes in tau = lam t.

    The integral is cut at exp(-tau) = 1e-16.
    """
    lam = np.asarray(lam, dtype=float)
    if term.constant_in_time:
        return 1.0 / lam
    out = np.empty(lam.shape)
    base = np.concatenate([[0.0], geometric_edges(1e-8, TAU_MAX)])
    for idx, l in np.ndenumerate(lam):
        edges = base
        if term.omega > 0:
            edges = subdivided_edges(base, np.pi * l / term.omega)
        tau, w = panel_nodes(edges, order)
        out[idx] = np.sum(w * term.time_value(tau / l) * np.exp(-tau)) / l
    return out


def multiplier_symbol(phi, psi, nu=None, N=None, L=None, d=None):
    """m_phi on the frequency grid of size N per axis and half-width L.

    Frequencies with Re psi <= 1e-12 (other than 0) are flagged and set
    to zero; m_phi(0) = 0 by convention.
    """
    from .spectral import DEFAULT_GRID

    d = d or psi.dimension
    n0, l0 = DEFAULT_GRID[d]
    N, L = N or n0, L or l0
    xi = frequency_mesh(N, L, d)
    re = psi.real_part(xi)
    r = np.abs(xi) if d == 1 else np.linalg.norm(xi, axis=-1)
    zero = r == 0
    flagged = (~zero) & (re <= FLAG_LEVEL)
    good = (~zero) & (~flagged)
    lam = 2.0 * re[good]
    sides = {s: 2.0 * psi.side_real_part(xi, s)[good] for s in SIDES}
    # the time factor depends on xi only through lam
    ulam, inv = np.unique(lam, return_inverse=True)
    m = np.zeros(lam.shape)
    for term in phi.terms:
        lap = laplace_time_factor(term, ulam)[inv]
        m = m + term.coef * lap * (term.side[0] * sides[1] + term.side[1] * sides[-1])
    out = np.zeros(re.shape, dtype=complex)
    out[good] = m
    return SymbolGrid(out, N, L, d, flagged, phi.description)


def apply_multiplier(symbol, f):
    """Inverse transform of m(xi) f_hat(xi)."""
    if symbol.grid != f.grid:
        raise GridMismatch("symbol grid %r does not match %r" % (symbol.grid, f.grid))
    F = fourier_forward(f)
    real = f.is_real and not np.any(symbol.m_values.imag)
    return fourier_inverse(F.with_values(symbol.m_values * F.values), real=real)


# ---------------------------------------------------------------------------
# the bilinear form in x-space


def _side_energies(semigroup_psi, jg, f, g, ts):
    """E_side(t) = int (du)(dv) over side-restricted jumps, for each t."""
    eng = IncrementEngine(f.N, f.L, f.d, jg)
    expo = eng.exponent(semigroup_psi)
    fh = eng.spectrum(f.values)
    same = g is f
    gh = fh if same else eng.spectrum(g.values)
    W = jg.weights
    vol_cells = f.N ** f.d

    def at_time(t):
        decay = np.exp(-t * expo)
        uh, vh = fh * decay, gh * decay
        u = eng.field(uh)
        v = u if same else eng.field(vh)
        sums = []
        if same:
            for lo, hi, su in eng.shifted(uh):
                du = su - u[None]
                sums.append(np.sum((du * du).reshape(hi - lo, -1), axis=1))
        else:
            for (lo, hi, su), (_, _, sv) in zip(eng.shifted(uh), eng.shifted(vh)):
                sums.append(np.sum(((su - u[None]) * (sv - v[None])).reshape(hi - lo, -1),
                                   axis=1))
        s = np.concatenate(sums) * eng.cell
        out = W @ s
        if jg.cut > 0:
            gu = eng.gradient(uh)
            gv = gu if same else eng.gradient(vh)
            for k in range(2):
                out[k] += float(np.sum(eng.quadratic_gradient(gu, gv, jg.inner[k])) * eng.cell)
        if np.any(jg.tail > 0):
            su_, sv_ = u.sum(), v.sum()
            avg = (np.sum(u * v) - (su_ * sv_) / vol_cells) * eng.cell
            # sum_x mean_z (u_z - u_x)(v_z - v_x) = 2 (sum uv - su sv / n)
            out = out + jg.tail * 2.0 * avg
        return out

    return np.array(ordered_map(at_time, ts))


@dataclass
class LambdaResult:
    value: float
    tail_bound: float
    cs_bound: float
    T_max: float
    side_energies: np.ndarray = field(repr=False, default=None)


def _horizon(psi, f, g, T_max):
    if T_max is not None:
        return T_max
    ts = [default_horizon(psi.symmetrized(), h)[0] for h in (f, g) if np.any(h.values)]
    return max(ts) if ts else 1.0


def _mean_free_energy(psi, f, t):
    F = fourier_forward(f).values.copy()
    F.flat[0] = 0.0
    m = np.exp(-t * psi.real_part(f.frequencies()))
    return float(np.sum(np.abs(m * F) ** 2) / (2 * f.L) ** f.d)


def horizon_mesh(T, quad):
    """Time mesh for long horizons: the first node stays below 1e-4.

    The node count grows with the number of decades covered.
    """
    floor = min(quad.t_floor, 1e-4 / T)
    n = int(np.ceil(quad.t_nodes * np.log(floor) / np.log(quad.t_floor)))
    return time_mesh(T, replace(quad, t_floor=floor, t_nodes=n))


def term_time_weights(term, ts, wt, order=8):
    """Weights for int a(t) E(t) dt given E at the nodes ``ts``.

    Non-oscillating factors use the plain rule ``wt * a``.  A sine factor
    can be far shorter than the node gaps at large t, so E is interpolated
    by local cubics in log t (the nodes are uniform there) and the product
    with ``a`` is integrated on panels no wider than a quarter period.
    Below the first node E is frozen.
    """
    if term.omega == 0:
        return wt * term.time_value(ts)
    n = len(ts)
    edges = subdivided_edges(np.concatenate([[0.0], ts]), 0.5 * np.pi / term.omega)
    tau, w = panel_nodes(edges, order)
    w = w * term.time_value(tau)
    ds = np.log(ts[1] / ts[0])
    v = np.maximum(np.log(tau / ts[0]) / ds, 0.0)
    out = np.zeros(n)
    if n < 4:
        j = np.clip(v.astype(int), 0, n - 2)
        u = v - j
        out += np.bincount(j, w * (1 - u), minlength=n)
        out += np.bincount(j + 1, w * u, minlength=n)
        return out
    k = np.clip(np.floor(v).astype(int) - 1, 0, n - 4)
    u = v - k
    basis = (-(u - 1) * (u - 2) * (u - 3) / 6, u * (u - 2) * (u - 3) / 2,
             -u * (u - 1) * (u - 3) / 2, u * (u - 1) * (u - 2) / 6)
    for i, b in enumerate(basis):
        out += np.bincount(k + i, w * b, minlength=n)
    return out


def _lambda_from_energies(phi, ts, wt, E):
    total = 0.0
    for term in phi.terms:
        wa = term_time_weights(term, ts, wt)
        total += term.coef * float(np.dot(wa, term.side[0] * E[:, 0] + term.side[1] * E[:, 1]))
    return total


def lambda_form_details(phi, f, g, psi, nu, T_max=None, quad=None, jg=None):
    f.check_grid(g)
    quad = quad or QuadSpec()
    T_max = _horizon(psi, f, g, T_max)
    cs = phi.sup_norm * lp_norm(f, 2) * lp_norm(g, 2)
    tail = phi.sup_norm * np.sqrt(_mean_free_energy(psi, f, T_max) * _mean_free_energy(psi, g, T_max))
    if not (np.any(f.values) and np.any(g.values)):
        return LambdaResult(0.0, 0.0, cs, T_max, np.zeros((0, 2)))
    jg = jg or jump_grid(nu, f.N, f.L, quad)
    ts, wt = horizon_mesh(T_max, quad)
    E = _side_energies(psi, jg, f, g if g is not f else f, ts)
    value = _lambda_from_energies(phi, ts, wt, E)
    if abs(value) > cs * (1 + 1e-6):
        warnings.warn("|Lambda| = %.6g exceeds the Cauchy-Schwarz bound %.6g" % (abs(value), cs),
                      BoundWarning, stacklevel=2)
    return LambdaResult(value, tail, cs, T_max, E)


def lambda_form(phi, f, g, psi, nu, T_max=None, quad=None):
    """Lambda_phi(f, g) by (t, y, x) quadrature up to T_max."""
    return lambda_form_details(phi, f, g, psi, nu, T_max, quad).value


# ---------------------------------------------------------------------------
# adjoint identity


@dataclass
class AdjointReport:
    lambda_value: float
    pairing: float
    pairing_horizon: float
    discrepancy: float
    rel_discrepancy: float
    normalized_discrepancy: float
    tail_bound: float
    T_max: float
    flagged: int

    def to_dict(self):
        return dict(self.__dict__)


def finite_horizon_symbol(phi, psi, T, N, L, d):
    """m_phi with the time integral stopped at T (for the truncation term)."""
    xi = frequency_mesh(N, L, d)
    re = psi.real_part(xi)
    r = np.abs(xi) if d == 1 else np.linalg.norm(xi, axis=-1)
    good = (r > 0) & (re > FLAG_LEVEL)
    ts, wt = time_mesh(T, QuadSpec(t_nodes=512, t_floor=1e-8))
    out = np.zeros(re.shape)
    lam = 2 * re[good]
    sides = {s: 2.0 * psi.side_real_part(xi, s)[good] for s in SIDES}
    for term in phi.terms:
        if term.constant_in_time:
            lap = -np.expm1(-lam * T) / lam
        else:
            lap = np.exp(-np.outer(lam, ts)) @ term_time_weights(term, ts, wt)
        out[good] += term.coef * lap * (term.side[0] * sides[1] + term.side[1] * sides[-1])
    return out


def adjoint_identity_check(phi, f, g, psi, nu, T_max=None, quad=None):
    """Compare Lambda_phi(f, g) in x-space with <S_phi f, g> in Fourier space."""
    lam = lambda_form_details(phi, f, g, psi, nu, T_max, quad)
    sym = multiplier_symbol(phi, psi, nu, f.N, f.L, f.d)
    pairing = float(np.real(inner(apply_multiplier(sym, f), g)))
    F, G = fourier_forward(f).values, fourier_forward(g).values
    mT = finite_horizon_symbol(phi, psi, lam.T_max, f.N, f.L, f.d)
    pairing_T = float(np.real(np.sum(mT * F * np.conj(G))) / (2 * f.L) ** f.d)
    disc = abs(lam.value - pairing)
    scale = phi.sup_norm * lp_norm(f, 2) * lp_norm(g, 2)
    return AdjointReport(
        lam.value, pairing, pairing_T, disc,
        disc / max(abs(pairing), 1e-300),
        disc / scale if scale > 0 else 0.0,
        lam.tail_bound, lam.T_max, int(sym.flagged.sum()),
    )


# ---------------------------------------------------------------------------
# symmetrized form


@dataclass(frozen=True, eq=False)
class SymmetrizedForm:
    """eta(t, y) = phi(t, y) (1 + r(y)) against the symmetrized measure."""

    phi: MultiplierSpec
    nu_sym: LevyMeasure
    weighted: LevyMeasure
    ratio: object
    eta_sup: float

    def eta(self, t, y):
        d = self.nu_sym.dimension
        return self.phi(t, y, d) * (1.0 + self.ratio(np.asarray(y, dtype=float)))


def _weighted_symmetric_measure(sym):
    """The measure (1 + r) nu_sym, rebuilt from nu_sym and r alone."""
    nus, ratio = sym.nu_sym, sym.ratio
    d = nus.dimension
    if nus.is_finite:
        law = nus.jump_law

        class _Tilted:
            def nodes(self, side=None):
                y, p = law.nodes(side)
                return y, p * (1.0 + ratio(y))

        return LevyMeasure("compound_poisson", dict(nus.params), 1, 0.0, nus.inner_cutoff,
                           nus.outer_cutoff, None, _Tilted())
    probe = np.array([1e-3, 0.1, 1.0, 10.0, 100.0])

    def lift(r, side):
        r = np.asarray(r, dtype=float)
        if d == 1:
            return side * r
        return np.stack([side * r, np.zeros_like(r)], axis=-1)

    factors = {s: 1.0 + ratio(lift(probe, s)) for s in SIDES}
    if nus.family == "stable_asymmetric" and all(np.ptp(v) == 0 for v in factors.values()):
        c = nus.params["c_plus"]
        return make_measure("stable_asymmetric", alpha=nus.alpha, c_plus=c * factors[1][0],
                            c_minus=c * factors[-1][0], d=d, inner_cutoff=nus.inner_cutoff,
                            outer_cutoff=nus.outer_cutoff)

    def profile(side):
        rho = nus.profile(side)
        return lambda r: rho(r) * (1.0 + ratio(lift(r, side)))

    return make_measure("custom", alpha=nus.alpha, rho_plus=profile(1), rho_minus=profile(-1),
                        d=d, inner_cutoff=nus.inner_cutoff, outer_cutoff=nus.outer_cutoff)


def symmetrized_form(phi, nu):
    """eta = phi (1 + r) together with the symmetrized measure."""
    sym = symmetrize(nu)
    rng = np.random.default_rng(1)
    n = 4096
    y = rng.standard_cauchy((n,) if nu.dimension == 1 else (n, 2))
    if nu.is_finite:
        y = np.concatenate([y, sym.nu_sym.jump_law.nodes()[0]])
    weight = np.abs(1.0 + sym.ratio(y))
    eta_sup = float(np.max(weight)) * phi.sup_norm
    if eta_sup > 2 * phi.sup_norm * (1 + 1e-12):
        raise AssertionError("sup |eta| exceeds 2 sup |phi|")
    return SymmetrizedForm(phi, sym.nu_sym, _weighted_symmetric_measure(sym), sym.ratio, eta_sup)


def lambda_tilde(form, f, g, psi, T_max=None, quad=None):
    """Lambda-tilde_eta(f, g) with the symmetrized semigroup (exponent Re psi)."""
    f.check_grid(g)
    quad = quad or QuadSpec()
    T_max = _horizon(psi, f, g, T_max)
    if not (np.any(f.values) and np.any(g.values)):
        return 0.0
    jg = jump_grid(form.weighted, f.N, f.L, quad)
    ts, wt = horizon_mesh(T_max, quad)
    E = _side_energies(psi.symmetrized(), jg, f, g if g is not f else f, ts)
    return _lambda_from_energies(form.phi, ts, wt, E)
