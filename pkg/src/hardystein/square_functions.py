"""Littlewood-Paley square functions of a symmetrized Levy semigroup.

For a symmetric jump measure nu and its semigroup P_t (exponent Re psi),

    G f(x)^2   = int_0^T int |P_t f(x + y) - P_t f(x)|^2 nu(dy) dt
    G_* f(x)^2 = the same restricted to |P_t f(x)| > |P_t f(x + y)|.

Both are evaluated pointwise on the grid with the quadrature shared with
the Hardy-Stein identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .increments import IncrementEngine, QuadSpec, jump_grid, time_mesh
from .levy_measures import CharacteristicExponent
from .parallel import ordered_map
from .spectral import GridFunction, SemigroupOperator, fourier_forward, lp_norm

VARIANTS = ("full", "starred")


@dataclass
class SquareFunctionResult:
    """Pointwise square function with L^p summaries.

    ``p_norms[p] = (||G f||_p, ||f||_p, ratio)``.
    """

    g_values: GridFunction
    p_norms: dict
    variant: str
    T_max: float
    tail_energy: float
    notes: list = field(default_factory=list)


def _symmetric_exponent(semigroup):
    if isinstance(semigroup, SemigroupOperator):
        if semigroup.variant != "symmetrized":
            raise ValueError("square functions need the symmetrized semigroup")
        return semigroup.psi.symmetrized()
    if isinstance(semigroup, CharacteristicExponent):
        return semigroup.symmetrized()
    raise TypeError("expected a SemigroupOperator or CharacteristicExponent")


def _energy_at(psi_sym, f, t, drop_mean=False):
    F = fourier_forward(f).values
    if drop_mean:
        F = F.copy()
        F.flat[0] = 0.0
    xi = f.frequencies()
    m = np.exp(-t * psi_sym.real_part(xi))
    # Plancherel on the grid
    return float(np.sum(np.abs(m * F) ** 2) / (2 * f.L) ** f.d)


def default_horizon(psi_sym, f, rel=1e-4, t0=1.0, max_doublings=60):
    """Smallest t = t0 * 2^k with ||P_t f||_2 <= rel ||f||_2.

    If the mean of f keeps the norm from decaying, the search uses the
    mean-free part instead and says so in the returned note.
    """
    e0 = _energy_at(psi_sym, f, 0.0)
    if e0 == 0:
        return t0, None
    F0 = fourier_forward(f).values.flat[0]
    dc = abs(F0) ** 2 / (2 * f.L) ** f.d
    drop = dc > (rel ** 2) * e0 * 0.25
    t = t0
    for _ in range(max_doublings):
        if _energy_at(psi_sym, f, t, drop_mean=drop) <= rel ** 2 * e0:
            note = None
            if drop:
                note = "f has non-zero mean; horizon chosen from its mean-free part"
            return t, note
        t *= 2.0
    raise ValueError("semigroup did not decay; give T_max explicitly")


def _sorted_partial_sums(u):
    """For each x, sums of 1, u, u^2 over points z with |u(z)| < |u(x)|."""
    flat = u.ravel()
    order = np.argsort(np.abs(flat), kind="stable")
    su = flat[order]
    key = np.abs(su)
    c0 = np.concatenate([[0.0], np.cumsum(np.ones_like(su))])
    c1 = np.concatenate([[0.0], np.cumsum(su)])
    c2 = np.concatenate([[0.0], np.cumsum(su * su)])
    k = np.searchsorted(key, np.abs(flat), side="left")
    return c0[k].reshape(u.shape), c1[k].reshape(u.shape), c2[k].reshape(u.shape)


def square_functions(semigroup, nu_sym, f, T_max=None, quad=None):
    """Squared full and starred square functions at every grid point.

    Returns ``(g2_full, g2_starred, T_max, tail_energy, notes)``.
    """
    if not nu_sym.is_symmetric():
        raise ValueError("square functions are defined for a symmetric jump measure")
    psi_sym = _symmetric_exponent(semigroup)
    quad = quad or QuadSpec()
    notes = []
    if T_max is None:
        T_max, note = default_horizon(psi_sym, f)
        if note:
            notes.append(note)
    if not T_max > 0:
        raise ValueError("T_max must be positive")
    if not np.any(f.values):
        z = np.zeros(f.values.shape)
        return z, z.copy(), T_max, 0.0, notes
    jg = jump_grid(nu_sym, f.N, f.L, quad)
    eng = IncrementEngine(f.N, f.L, f.d, jg)
    fhat = eng.spectrum(f.values)
    expo = eng.exponent(psi_sym).real
    ts, wt = time_mesh(T_max, quad)
    wy = jg.total_weights
    M = jg.inner[0] + jg.inner[1]
    tail_mass = float(jg.tail.sum())
    n_cells = f.N ** f.d

    def at_time(t):
        uh = fhat * np.exp(-t * expo)
        u = eng.field(uh)
        full = np.zeros(u.shape)
        star = np.zeros(u.shape)
        au = np.abs(u)
        for lo, hi, sh in eng.shifted(uh):
            diff2 = (sh - u[None]) ** 2
            w = wy[lo:hi]
            full += np.tensordot(w, diff2, axes=1)
            # ties go to the complement of A
            star += np.tensordot(w, np.where(np.abs(sh) < au[None], diff2, 0.0), axes=1)
        if jg.cut > 0:
            grad = eng.gradient(uh)
            q = eng.quadratic_gradient(grad, grad, M)
            full += q
            star += np.where(u != 0, 0.5 * q, 0.0)
        if tail_mass > 0:
            s1 = u.sum()
            s2 = (u * u).sum()
            full += tail_mass * (s2 - 2 * u * s1 + n_cells * u * u) / n_cells
            c0, c1, c2 = _sorted_partial_sums(u)
            star += tail_mass * (c2 - 2 * u * c1 + c0 * u * u) / n_cells
        return full, star

    parts = ordered_map(at_time, ts)
    g2 = np.zeros(f.values.shape)
    g2s = np.zeros(f.values.shape)
    for w, (a, b) in zip(wt, parts):
        g2 += w * a
        g2s += w * b
    tail_energy = _energy_at(psi_sym, f, T_max)
    return np.maximum(g2, 0.0), np.maximum(g2s, 0.0), T_max, tail_energy, notes


def square_function(semigroup, nu_sym, f, variant="full", T_max=None, quad=None,
                    p_list=(2.0,)):
    """Square function G f (``full``) or G_* f (``starred``) on the grid."""
    if variant not in VARIANTS:
        raise ValueError("variant must be 'full' or 'starred'")
    g2, g2s, T_max, tail, notes = square_functions(semigroup, nu_sym, f, T_max, quad)
    vals = np.sqrt(g2 if variant == "full" else g2s)
    return _result(vals, f, variant, T_max, tail, notes, p_list)


def _result(vals, f, variant, T_max, tail, notes, p_list):
    g = GridFunction(vals, f.L)
    norms = {}
    for p in p_list:
        gn, fn = lp_norm(g, p), lp_norm(f, p)
        norms[float(p)] = (gn, fn, gn / fn if fn > 0 else np.nan)
    return SquareFunctionResult(g, norms, variant, T_max, tail, list(notes))


@dataclass
class NormTable:
    """Ratios ||G f||_p / ||f||_p per function, exponent and variant."""

    rows: list
    summary: dict

    def ratios(self, p, variant="full"):
        return [r["ratio"] for r in self.rows if r["p"] == p and r["variant"] == variant]


def norm_equivalence_report(family, p_list, semigroup, nu_sym, variants=VARIANTS,
                            T_max=None, quad=None):
    """Norm ratios of G and G_* over a family of functions."""
    rows = []
    for idx, f in enumerate(family):
        if not np.any(f.values):
            raise ValueError("family member %d is identically zero" % idx)
        g2, g2s, T, tail, _ = square_functions(semigroup, nu_sym, f, T_max, quad)
        for variant in variants:
            g = GridFunction(np.sqrt(g2 if variant == "full" else g2s), f.L)
            for p in p_list:
                gn, fn = lp_norm(g, p), lp_norm(f, p)
                rows.append({"index": idx, "p": float(p), "variant": variant,
                             "g_norm": gn, "f_norm": fn, "ratio": gn / fn, "T_max": T,
                             "tail_energy": tail})
    summary = {}
    for variant in variants:
        for p in p_list:
            r = [row["ratio"] for row in rows if row["p"] == float(p) and row["variant"] == variant]
            summary["%s:p=%g" % (variant, p)] = {"min": min(r), "max": max(r)}
    return NormTable(rows, summary)
