"""Graded radial quadrature for power-law singular integrands.

Every routine here integrates against a one-sided radial density ``g(r)``
on ``r > 0`` that behaves like ``c * r**(-1 - alpha)`` near the origin.
The mesh is geometric (ratio 2) from an inner floor ``delta`` up to an
outer radius, the leading singular contribution below ``delta`` is added
analytically, and the error estimate is the change under panel halving.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre


class QuadratureDivergence(RuntimeError):
    """Raised when a graded quadrature fails to settle under refinement."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


@lru_cache(maxsize=None)
def gauss_legendre(order):
    """Nodes and weights on [-1, 1], cached."""
    x, w = roots_legendre(order)
    return x, w


def geometric_edges(a, b, ratio=2.0, breakpoints=()):
    """Panel edges from ``a`` to ``b`` growing geometrically by ``ratio``.

    Any breakpoints strictly inside (a, b) are inserted as extra edges.
    """
    if not (0 < a < b):
        raise ValueError("need 0 < a < b")
    n = max(1, int(np.ceil(np.log(b / a) / np.log(ratio))))
    edges = a * (b / a) ** (np.arange(n + 1) / n)
    edges[-1] = b
    extra = [c for c in breakpoints if a < c < b]
    if extra:
        edges = np.unique(np.concatenate([edges, extra]))
    return edges


def split_panels(edges):
    """Halve every panel (geometric midpoints for positive edges)."""
    mid = np.sqrt(edges[:-1] * edges[1:])
    out = np.empty(2 * len(edges) - 1)
    out[0::2] = edges
    out[1::2] = mid
    return out


def panel_nodes(edges, order):
    """Gauss-Legendre nodes and weights over consecutive panels."""
    x, w = gauss_legendre(order)
    a = edges[:-1, None]
    b = edges[1:, None]
    nodes = (0.5 * (a + b) + 0.5 * (b - a) * x).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return nodes, weights


def subdivided_edges(edges, max_width):
    """Split panels so that none is wider than ``max_width``."""
    pieces = [edges[:1]]
    for a, b in zip(edges[:-1], edges[1:]):
        m = max(1, int(np.ceil((b - a) / max_width)))
        pieces.append(np.linspace(a, b, m + 1)[1:])
    return np.concatenate(pieces)


@dataclass(frozen=True)
class QuadResult:
    """A quadrature value with its mesh-halving error estimate."""

    value: float
    error: float
    panels: int


def _power_tail(g, r0, k):
    """Integral of r**k g(r) over [r0, inf) under a fitted power law.

    The local exponent is read off from g(r0) and g(2 r0).  Returns
    (value, diverges).
    """
    g0 = float(g(np.array([r0]))[0])
    if g0 == 0.0:
        return 0.0, False
    g1 = float(g(np.array([2.0 * r0]))[0])
    if g1 <= 0.0:
        # faster than any power (exponential or compact support)
        beta = 60.0
    else:
        beta = -np.log2(g1 / g0)
    if beta <= k + 1.0:
        return np.inf, True
    return g0 * r0 ** (k + 1.0) / (beta - k - 1.0), False


def radial_moment(g, k, lo, hi, alpha, delta, r_max, order=8, breakpoints=(1.0,)):
    """Integral of ``r**k * g(r)`` over ``[lo, hi]`` for a singular density.

    Parameters
    ----------
    g : callable
        Vectorized one-sided density on r > 0.
    k : float
        Moment order.  The part below ``delta`` requires ``k > alpha``.
    lo, hi : float
        Integration limits, ``hi`` may be ``np.inf``.
    alpha : float
        Singularity order, ``g(r) ~ c r**(-1-alpha)`` as r -> 0.
    delta, r_max : float
        Inner quadrature floor and outer truncation radius.  Beyond
        ``r_max`` a fitted power-law tail is appended.

    Returns
    -------
    QuadResult
    """
    if hi <= lo:
        return QuadResult(0.0, 0.0, 0)
    total = 0.0
    err = 0.0
    a = max(lo, delta)
    # analytic extrapolation of the leading term below delta
    if lo < delta:
        top = min(hi, delta)
        c = float(g(np.array([delta]))[0]) * delta ** (1.0 + alpha)
        e = k - alpha
        if e <= 0 and lo == 0.0:
            return QuadResult(np.inf, np.inf, 0)
        if e == 0:
            total += c * np.log(top / lo)
        else:
            total += c * (top ** e - lo ** e) / e
    b = min(hi, r_max)
    panels = 0
    if b > a:
        edges = geometric_edges(a, b, breakpoints=breakpoints)

        def integrate(ed):
            r, w = panel_nodes(ed, order)
            return float(np.sum(w * r ** k * g(r)))

        coarse = integrate(edges)
        fine = integrate(split_panels(edges))
        total += fine
        err += abs(fine - coarse)
        panels = len(edges) - 1
    if hi > r_max:
        start = max(lo, r_max)
        if np.isinf(hi):
            tail, bad = _power_tail(g, start, k)
            if bad:
                raise QuadratureDivergence(
                    "tail moment of order %g diverges" % k, estimate=total, error=np.inf
                )
            total += tail
            err += 1e-3 * abs(tail)
        else:
            edges = geometric_edges(start, hi)
            r, w = panel_nodes(edges, order)
            total += float(np.sum(w * r ** k * g(r)))
    return QuadResult(total, err, panels)


def _ibp_tail(g, y, a, terms=4):
    """Asymptotic value of the integral of exp(i a r) g(r) over [y, inf).

    Uses repeated integration by parts with finite-difference derivatives.
    """
    eta = 0.02 * y
    j = np.arange(-3, 4)
    v = g(y + j * eta)
    d = [
        v[3],
        (-v[5] + 8 * v[4] - 8 * v[2] + v[1]) / (12 * eta),
        (-v[5] + 16 * v[4] - 30 * v[3] + 16 * v[2] - v[1]) / (12 * eta ** 2),
        (-v[6] + 8 * v[5] - 13 * v[4] + 13 * v[2] - 8 * v[1] + v[0]) / (8 * eta ** 3),
    ]
    s = 0.0 + 0.0j
    ia = 1j * a
    for m in range(terms):
        s += (-1) ** m * d[m] / ia ** (m + 1)
    return -np.exp(1j * a * y) * s, abs(d[terms - 1] / a ** terms)


def side_transform(g, freqs, alpha, delta, r_max, lo=0.0, hi=np.inf, order=8, periods=40):
    """Cosine and compensated sine transforms of a one-sided density.

    For each ``a`` in ``freqs`` (non-negative) returns

    ``C(a) = integral of (1 - cos(a r)) g(r)`` and
    ``S(a) = integral of (sin(a r) - a r 1{r <= 1}) g(r)``

    over ``[lo, hi]``, together with error estimates from panel halving.
    Oscillatory tails beyond ``periods`` wavelengths are integrated by
    parts.
    """
    freqs = np.asarray(freqs, dtype=float)
    C = np.zeros(freqs.shape)
    S = np.zeros(freqs.shape)
    eC = np.zeros(freqs.shape)
    eS = np.zeros(freqs.shape)
    inner_moments = {}
    if lo < delta:
        c = float(g(np.array([delta]))[0]) * delta ** (1.0 + alpha)
        top = min(hi, delta)
        for k in (2, 3, 4, 5):
            e = k - alpha
            inner_moments[k] = c * (top ** e - lo ** e) / e
    a0 = max(lo, delta)
    mass_cache = {}

    def mass(y0, y1, k):
        key = (y0, y1, k)
        if key not in mass_cache:
            mass_cache[key] = radial_moment(g, k, y0, y1, alpha, delta, r_max, order).value
        return mass_cache[key]

    for idx, a in np.ndenumerate(freqs):
        if a == 0.0:
            continue
        if a < 0:
            raise ValueError("side_transform expects non-negative frequencies")
        c_val = 0.0
        s_val = 0.0
        if inner_moments:
            m = inner_moments
            c_val += a ** 2 / 2 * m[2] - a ** 4 / 24 * m[4]
            # delta < 1, so the compensator is active on the whole inner piece
            s_val += -(a ** 3) / 6 * m[3] + a ** 5 / 120 * m[5]
        y_osc = periods * 2 * np.pi / a
        b = min(hi, y_osc)
        if b > a0:
            edges = geometric_edges(a0, b, breakpoints=(1.0,))
            edges = subdivided_edges(edges, np.pi / a)

            def integrate(ed):
                r, w = panel_nodes(ed, order)
                gr = g(r)
                ar = a * r
                cc = 2.0 * np.sin(0.5 * ar) ** 2
                comp = np.where(r <= 1.0, ar, 0.0)
                small = ar < 1e-3
                ss = np.where(
                    small & (r <= 1.0),
                    -(ar ** 3) / 6 + ar ** 5 / 120,
                    np.sin(ar) - comp,
                )
                return float(np.sum(w * cc * gr)), float(np.sum(w * ss * gr))

            c1, s1 = integrate(edges)
            c2, s2 = integrate(split_panels(edges))
            c_val += c2
            s_val += s2
            eC[idx] = abs(c2 - c1)
            eS[idx] = abs(s2 - s1)
        if hi > y_osc:
            y0 = max(y_osc, a0)
            tail, terr = _ibp_tail(g, y0, a)
            if np.isfinite(hi):
                t_hi, e_hi = _ibp_tail(g, hi, a)
                tail = tail - t_hi
                terr += e_hi
            c_val += mass(y0, hi, 0) - tail.real
            s_val += tail.imag
            if y0 < 1.0:
                s_val -= a * mass(y0, min(1.0, hi), 1)
            eC[idx] += terr
            eS[idx] += terr
        C[idx] = c_val
        S[idx] = s_val
    return C, S, eC, eS
