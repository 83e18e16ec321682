"""Shared quadrature over time and jump size for semigroup increments.

Everything that integrates an expression in ``P_t f(x)`` and
``P_t f(x + y)`` against ``nu(dy) dt dx`` goes through here: the Hardy-Stein
right-hand side, square functions and the bilinear multiplier form.

The computation lives on the torus of half-width L.  There the shifted
function ``u(x + y)`` is exact for every real y (phase factor on the FFT
coefficients), so the y-integral runs over all of R^d.  In one dimension
the measure is folded onto the cell (-L, L] per side; in two dimensions
polar shells cover ``|y| <= L`` and the remaining mass sees the torus
average of the integrand.  Jumps shorter than ``cut`` use the second-order
expansion in y with the spectral gradient.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.special import zeta

from .levy_measures import SIDES
from .quadrature import gauss_legendre, panel_nodes, radial_moment

PHASE_BUDGET = 40_000_000  # complex entries kept in the precomputed phase table


@dataclass(frozen=True)
class QuadSpec:
    """Mesh descriptors for the (t, y, x) quadrature.

    Attributes
    ----------
    t_nodes : int
        Geometric time nodes on [T * t_floor, T], trapezoid in log t.
    y_shells : int
        Geometric radial shells between the inner cut and L.
    y_cut_factor : float
        Inner cut in units of the grid spacing.
    refine_levels : int
        Number of refinements to run after the base level.
    gauss_order : int
        Gauss-Legendre nodes per radial shell.
    t_floor : float
        Lower end of the time mesh relative to T.
    angles : int
        Angular Gauss nodes per half-plane (two dimensions only).
    """

    t_nodes: int = 64
    y_shells: int = 48
    y_cut_factor: float = 2.0
    refine_levels: int = 2
    gauss_order: int = 4
    t_floor: float = 1e-4
    angles: int = 16

    def __post_init__(self):
        if self.t_nodes < 2 or self.y_shells < 1 or self.gauss_order < 1:
            raise ValueError("mesh sizes must be positive (t_nodes >= 2)")
        if not self.y_cut_factor > 0 or not 0 < self.t_floor < 1:
            raise ValueError("y_cut_factor must be positive and 0 < t_floor < 1")
        if self.refine_levels < 0:
            raise ValueError("refine_levels must be non-negative")

    def refined(self, level):
        """Mesh at a refinement level.

        Each level doubles the time nodes and halves the inner cut; the
        radial mesh gains the shells of the newly exposed octave (a tenth
        of the base count, the octave share on the default grid).
        """
        if level == 0:
            return self
        return replace(
            self,
            t_nodes=self.t_nodes * 2 ** level,
            y_cut_factor=self.y_cut_factor / 2 ** level,
            y_shells=self.y_shells + level * -(-self.y_shells // 10),
        )

    def to_config(self):
        return asdict(self)

    @classmethod
    def from_config(cls, cfg):
        cfg = dict(cfg or {})
        known = set(cls.__dataclass_fields__)
        bad = set(cfg) - known
        if bad:
            raise ValueError("unknown QuadSpec keys: %s" % sorted(bad))
        return cls(**cfg)


def time_mesh(T, spec):
    """Nodes and weights for an integral over [0, T].

    The sliver [0, T * t_floor] is credited with the value at its right end.
    """
    s = np.linspace(np.log(T * spec.t_floor), np.log(T), spec.t_nodes)
    t = np.exp(s)
    w = np.full(spec.t_nodes, s[1] - s[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    w *= t
    w[0] += t[0]
    return t, w


# ---------------------------------------------------------------------------
# the discretized jump measure


@dataclass(frozen=True, eq=False)
class JumpGrid:
    """Side-resolved quadrature for nu on the torus.

    Attributes
    ----------
    points : ndarray
        Jump nodes, shape (n,) or (n, 2).
    weights : ndarray
        Shape (2, n); row 0 holds side +, row 1 side -.
    inner : ndarray
        Second moments of nu restricted to ``|y| < cut``, shape (2,) in 1-d
        and (2, 2, 2) in 2-d.
    tail : ndarray
        Mass beyond the outer radius treated by torus averaging, shape (2,).
    cut : float
    """

    points: np.ndarray
    weights: np.ndarray
    inner: np.ndarray
    tail: np.ndarray
    cut: float
    dimension: int

    @property
    def total_weights(self):
        return self.weights[0] + self.weights[1]

    def side_weights(self, side):
        return self.weights[0] if side == 1 else self.weights[1]

    def side_inner(self, side):
        return self.inner[0] if side == 1 else self.inner[1]

    def side_tail(self, side):
        return self.tail[0] if side == 1 else self.tail[1]


def _fold_power(y, c, alpha, L, side):
    P = 2.0 * L
    z = y if side == 1 else -y
    q = np.where(z > 0, z / P, 1.0 + z / P)
    return c * P ** (-1 - alpha) * zeta(1 + alpha, q)


def _fold_power_smooth(y, c, alpha, L, side):
    """Folded density minus its own k = 0 image (smooth near y = 0)."""
    P = 2.0 * L
    z = y if side == 1 else -y
    return c * P ** (-1 - alpha) * zeta(1 + alpha, 1.0 + z / P)


def _fold_generic(nu, y, L, side, skip_center=False):
    P = 2.0 * L
    rho = nu.profile(side)
    reach = max(nu.outer_cutoff, 4 * L)
    K = int(np.ceil(reach / P)) + 1
    out = np.zeros(np.shape(y))
    for k in range(-K, K + 1):
        if skip_center and k == 0:
            continue
        z = y + k * P
        on = (np.sign(z) == side) & (z != 0)
        out = out + np.where(on, rho(np.where(on, np.abs(z), 1.0)), 0.0)
    start = (K + 0.5) * P
    tail = radial_moment(rho, 0, start, np.inf, nu.alpha, nu.inner_cutoff,
                         nu.outer_cutoff).value
    return out + tail / P


def jump_grid(nu, N, L, spec):
    """Discretize nu for increments on the torus with N points per axis."""
    d = nu.dimension
    h = 2.0 * L / N
    cut = spec.y_cut_factor * h
    if nu.is_finite:
        if d != 1:
            raise ValueError("finite measures are one-dimensional here")
        pts, wts = [], []
        for k, side in enumerate(SIDES):
            y, p = nu.jump_law.nodes(side)
            w = np.zeros((2, len(y)))
            w[k] = nu.rate * p
            pts.append(y)
            wts.append(w)
        return JumpGrid(np.concatenate(pts), np.concatenate(wts, axis=1), np.zeros(2),
                        np.zeros(2), 0.0, 1)
    if cut >= L:
        raise ValueError("inner cut exceeds the box")
    edges = cut * (L / cut) ** (np.arange(spec.y_shells + 1) / spec.y_shells)
    edges[-1] = L
    r, wr = panel_nodes(edges, spec.gauss_order)
    if d == 1:
        y = np.concatenate([r, -r])
        wy = np.concatenate([wr, wr])
        coeffs = nu.power_coefficients()
        weights = np.empty((2, len(y)))
        inner = np.empty(2)
        xg, wg = gauss_legendre(8)
        ys, ws = cut * xg, cut * wg
        for k, side in enumerate(SIDES):
            if coeffs is not None:
                c = coeffs[k]
                weights[k] = wy * _fold_power(y, c, nu.alpha, L, side)
                smooth = _fold_power_smooth(ys, c, nu.alpha, L, side)
            else:
                weights[k] = wy * _fold_generic(nu, y, L, side)
                smooth = _fold_generic(nu, ys, L, side, skip_center=True)
            own = radial_moment(nu.profile(side), 2, 0.0, cut, nu.alpha, nu.inner_cutoff,
                                nu.outer_cutoff).value
            inner[k] = own + float(np.sum(ws * ys ** 2 * smooth))
        return JumpGrid(y, weights, inner, np.zeros(2), cut, 1)
    # two dimensions: polar shells per half-plane
    th, wth = panel_nodes(np.array([-np.pi / 2, np.pi / 2]), spec.angles)
    pts, weights = [], []
    inner = np.zeros((2, 2, 2))
    tail = np.zeros(2)
    for k, side in enumerate(SIDES):
        ang = th if side == 1 else th + np.pi
        R, A = np.meshgrid(r, ang, indexing="ij")
        WR, WA = np.meshgrid(wr, wth, indexing="ij")
        rho = nu.profile(side)
        pts.append(np.stack([R * np.cos(A), R * np.sin(A)], axis=-1).reshape(-1, 2))
        w = np.zeros((2, R.size))
        w[k] = (WR * WA * rho(R) * R).ravel()
        weights.append(w)
        radial = nu.radial_weight(side)
        m3 = radial_moment(radial, 2, 0.0, cut, nu.alpha, nu.inner_cutoff,
                           nu.outer_cutoff).value
        inner[k] = 0.5 * np.pi * m3 * np.eye(2)
        tail[k] = np.pi * radial_moment(radial, 0, L, np.inf, nu.alpha, nu.inner_cutoff,
                                        nu.outer_cutoff).value
    return JumpGrid(np.concatenate(pts), np.concatenate(weights, axis=1), inner, tail, cut, 2)


# ---------------------------------------------------------------------------
# spectral engine


class IncrementEngine:
    """Real FFT machinery for fields, gradients and shifted copies."""

    def __init__(self, N, L, d, jumps, chunk=None):
        self.N, self.L, self.d = N, float(L), d
        self.h = 2.0 * L / N
        self.cell = self.h ** d
        self.shape = (N,) * d
        self._dims = tuple(range(d))
        self.jumps = jumps
        kr = 2 * np.pi * np.fft.rfftfreq(N, d=self.h)
        if d == 1:
            self.xi = kr
            self.axes = (kr,)
        else:
            kf = 2 * np.pi * np.fft.fftfreq(N, d=self.h)
            k1, k2 = np.meshgrid(kf, kr, indexing="ij")
            self.xi = np.stack([k1, k2], axis=-1)
            self.axes = (k1, k2)
        self.chunk = chunk or (128 if d == 1 else 16)
        self._phase = None
        n = len(jumps.points)
        if d == 1 and n * kr.size <= PHASE_BUDGET:
            self._phase = np.exp(1j * np.outer(jumps.points, kr))

    def spectrum(self, values):
        return np.fft.rfftn(values)

    def field(self, uhat):
        return np.fft.irfftn(uhat, s=self.shape, axes=self._dims)

    def gradient(self, uhat):
        return [np.fft.irfftn(1j * k * uhat, s=self.shape, axes=self._dims) for k in self.axes]

    def exponent(self, psi):
        """psi on the half-spectrum."""
        return np.asarray(psi(self.xi), dtype=complex)

    def _phases(self, lo, hi):
        if self._phase is not None:
            return self._phase[lo:hi]
        y = self.jumps.points[lo:hi]
        if self.d == 1:
            return np.exp(1j * np.outer(y, self.xi))
        k1, k2 = self.axes
        return np.exp(1j * (y[:, 0, None, None] * k1 + y[:, 1, None, None] * k2))

    def shifted(self, uhat):
        """Yield (lo, hi, u(x + y_n) for n in lo..hi-1)."""
        n = len(self.jumps.points)
        axes = tuple(range(1, self.d + 1))
        for lo in range(0, n, self.chunk):
            hi = min(n, lo + self.chunk)
            block = uhat[None] * self._phases(lo, hi)
            yield lo, hi, np.fft.irfftn(block, s=self.shape, axes=axes)

    def quadratic_gradient(self, grad_u, grad_v, M):
        """grad u . M grad v pointwise, for a moment tensor M."""
        if self.d == 1:
            return M * grad_u[0] * grad_v[0]
        out = np.zeros(self.shape)
        for i in range(2):
            for j in range(2):
                if M[i, j] != 0.0:
                    out = out + M[i, j] * grad_u[i] * grad_v[j]
        return out
