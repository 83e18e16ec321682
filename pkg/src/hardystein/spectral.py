"""Periodic grid functions, Fourier transforms and Levy semigroups.

Grid conventions (per axis): ``N`` points ``x_j = -L + j h`` with
``h = 2L / N`` and frequencies ``xi_k = k pi / L`` in FFT order.  The
transform is ``f_hat(xi) = integral f(x) exp(-i x.xi) dx`` approximated
by the rectangle rule, so Parseval reads
``integral f conj(g) = (2 pi)^-d integral f_hat conj(g_hat)``.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .quadrature import geometric_edges, panel_nodes, split_panels

VARIANTS = ("forward", "dual", "symmetrized")
DEFAULT_GRID = {1: (4096, 40.0), 2: (256, 20.0)}


class AliasingError(ValueError):
    """The semigroup multiplier has not decayed at the grid's Nyquist edge."""


class GridMismatch(ValueError):
    """Two grid objects live on different grids."""


def axis_points(N, L):
    return -L + (2.0 * L / N) * np.arange(N)


def axis_frequencies(N, L):
    return 2 * np.pi * np.fft.fftfreq(N, d=2.0 * L / N)


def _alternating(N, d):
    s = np.where(np.fft.fftfreq(N) * N % 2 == 0, 1.0, -1.0)
    if d == 1:
        return s
    return np.multiply.outer(s, s)


def frequency_mesh(N, L, d):
    """Frequencies on the full FFT grid, shape (N,) or (N, N, 2)."""
    k = axis_frequencies(N, L)
    if d == 1:
        return k
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    return np.stack([k1, k2], axis=-1)


def space_mesh(N, L, d):
    x = axis_points(N, L)
    if d == 1:
        return x
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    return np.stack([x1, x2], axis=-1)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a function on the periodic box (-L, L]^d.

    Attributes
    ----------
    values : ndarray
        Shape (N,) or (N, N).  Real arrays mark real-valued functions.
    half_width : float
        The box half-width L.
    domain : {"space", "frequency"}
        Whether the values are samples in x or transform values in xi.
    """

    values: np.ndarray
    half_width: float
    domain: str = "space"

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim not in (1, 2) or (v.ndim == 2 and v.shape[0] != v.shape[1]):
            raise ValueError("values must be (N,) or (N, N)")
        n = v.shape[0]
        if n < 2 or n & (n - 1):
            raise ValueError("points per axis must be a power of two")
        if self.domain not in ("space", "frequency"):
            raise ValueError("domain must be 'space' or 'frequency'")
        v = np.array(v, dtype=complex if np.iscomplexobj(v) else float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def N(self):
        return self.values.shape[0]

    @property
    def L(self):
        return self.half_width

    @property
    def d(self):
        return self.values.ndim

    @property
    def h(self):
        return 2.0 * self.half_width / self.N

    @property
    def cell(self):
        """Volume element h^d."""
        return self.h ** self.d

    @property
    def is_real(self):
        return not np.iscomplexobj(self.values)

    @property
    def grid(self):
        return (self.N, self.half_width, self.d)

    def points(self):
        return space_mesh(self.N, self.half_width, self.d)

    def frequencies(self):
        return frequency_mesh(self.N, self.half_width, self.d)

    def with_values(self, values, domain=None):
        return GridFunction(values, self.half_width, domain or self.domain)

    @classmethod
    def from_function(cls, fn, N=None, L=None, d=1):
        """Sample ``fn`` on the grid; in 2-d ``fn`` receives shape (N, N, 2)."""
        n0, l0 = DEFAULT_GRID[d]
        N = N or n0
        L = L or l0
        return cls(fn(space_mesh(N, L, d)), L)

    @classmethod
    def zeros(cls, N, L, d=1):
        return cls(np.zeros((N,) * d), L)

    def check_grid(self, other):
        if self.grid != other.grid:
            raise GridMismatch("grid %r does not match %r" % (self.grid, other.grid))

    def to_bytes(self):
        """Binary layout: int64 d, int64 N, float64 L, then complex pairs."""
        head = struct.pack("<qqd", self.d, self.N, self.half_width)
        body = np.ascontiguousarray(self.values, dtype="<c16").tobytes()
        return head + body

    @classmethod
    def from_bytes(cls, blob, real=None):
        d, n, L = struct.unpack("<qqd", blob[:24])
        if d not in (1, 2):
            raise ValueError("bad header: d=%r" % d)
        vals = np.frombuffer(blob[24:], dtype="<c16")
        if vals.size != n ** d:
            raise ValueError("payload has %d values, header says %d" % (vals.size, n ** d))
        vals = vals.reshape((n,) * d)
        if real is None:
            real = not np.any(vals.imag)
        return cls(vals.real.copy() if real else vals.copy(), L)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())

    def to_csv(self):
        """CSV text with one row per grid point."""
        buf = io.StringIO()
        coords = ["x"] if self.d == 1 else ["x1", "x2"]
        if self.domain == "frequency":
            coords = ["xi"] if self.d == 1 else ["xi1", "xi2"]
            pts = self.frequencies()
        else:
            pts = self.points()
        pts = pts.reshape(-1, self.d)
        vals = self.values.reshape(-1)
        buf.write("# grid d=%d N=%d L=%r domain=%s\n" % (self.d, self.N, self.half_width,
                                                         self.domain))
        buf.write(",".join(coords + ["re", "im"]) + "\n")
        for p, v in zip(pts, vals):
            buf.write(",".join(repr(float(c)) for c in p))
            buf.write(",%r,%r\n" % (float(np.real(v)), float(np.imag(v))))
        return buf.getvalue()


# ---------------------------------------------------------------------------
# norms


def lp_norm(f, p):
    """Rectangle-rule L^p norm; ``p = np.inf`` gives the max norm."""
    v = np.abs(f.values)
    if np.isinf(p):
        return float(v.max())
    return float((np.sum(v ** p) * f.cell) ** (1.0 / p))


def lp_power(f, p):
    """The integral of |f|^p."""
    return float(np.sum(np.abs(f.values) ** p) * f.cell)


def inner(f, g):
    """Integral of f conj(g)."""
    f.check_grid(g)
    out = np.sum(f.values * np.conj(g.values)) * f.cell
    return float(out.real) if f.is_real and g.is_real else complex(out)


def wraparound_fraction(f):
    """Share of the L^1 mass of f lying outside the middle half of the box."""
    x = f.points()
    if f.d == 1:
        outside = np.abs(x) > f.half_width / 2
    else:
        outside = np.max(np.abs(x), axis=-1) > f.half_width / 2
    total = np.sum(np.abs(f.values))
    if total == 0:
        return 0.0
    return float(np.sum(np.abs(f.values[outside])) / total)


# ---------------------------------------------------------------------------
# transforms


def fourier_forward(f):
    """Discrete approximation of f_hat(xi) on the frequency grid."""
    if f.domain != "space":
        raise ValueError("expected a space-domain GridFunction")
    s = _alternating(f.N, f.d)
    vals = f.cell * s * np.fft.fftn(f.values)
    return GridFunction(vals, f.half_width, "frequency")


def fourier_inverse(F, real=False):
    """Inverse of :func:`fourier_forward`; ``real=True`` drops Im."""
    if F.domain != "frequency":
        raise ValueError("expected a frequency-domain GridFunction")
    s = _alternating(F.N, F.d)
    vals = np.fft.ifftn(F.values * s) / F.cell
    return GridFunction(vals.real if real else vals, F.half_width, "space")


# ---------------------------------------------------------------------------
# semigroups


def variant_exponent(psi, variant):
    """Exponent of P_t, its dual or its symmetrization."""
    if variant == "forward":
        return psi
    if variant == "dual":
        return psi.dual()
    if variant == "symmetrized":
        return psi.symmetrized()
    raise ValueError("variant must be one of %s" % (VARIANTS,))


@dataclass(frozen=True, eq=False)
class SemigroupOperator:
    """The Levy semigroup exp(-t psi_variant(D)) on a periodic grid."""

    psi: object
    variant: str = "forward"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError("variant must be one of %s" % (VARIANTS,))
        object.__setattr__(self, "_cache", {})

    @property
    def exponent(self):
        return variant_exponent(self.psi, self.variant)

    def symbol(self, N, L, d):
        """psi_variant on the full FFT grid (cached)."""
        key = (N, L, d)
        if key not in self._cache:
            xi = frequency_mesh(N, L, d)
            if self.variant == "symmetrized":
                val = self.psi.real_part(xi) + 0j
            else:
                val = self.psi(xi)
                if self.variant == "dual":
                    val = np.conj(val)
            self._cache[key] = val
        return self._cache[key]

    def multiplier(self, t, N, L, d):
        return np.exp(-t * self.symbol(N, L, d))

    def apply(self, t, f):
        return semigroup_apply(self, t, f)


def semigroup_apply(op, t, f):
    """P_t f computed spectrally; real input gives real output."""
    if t < 0:
        raise ValueError("time must be non-negative")
    if t == 0:
        return f
    F = fourier_forward(f)
    m = op.multiplier(t, f.N, f.half_width, f.d)
    return fourier_inverse(F.with_values(m * F.values), real=f.is_real)


def aliasing_level(psi, t, N, L, d):
    """Largest value of exp(-t Re psi) on the outer frequency shell."""
    k = axis_frequencies(N, L)
    edge = np.abs(k).max()
    if d == 1:
        xi = np.array([-edge, edge])
    else:
        rim = np.stack([np.full(N, -edge), k], axis=-1)
        xi = np.concatenate([rim, -rim, rim[:, ::-1], -rim[:, ::-1]])
    return float(np.max(np.exp(-t * psi.real_part(xi))))


def transition_density(psi, t, N=None, L=None, d=1, tol=1e-14):
    """Density of X_t on the periodic grid by Fourier inversion."""
    if not t > 0:
        raise ValueError("time must be positive")
    n0, l0 = DEFAULT_GRID[d]
    N = N or n0
    L = L or l0
    lvl = aliasing_level(psi, t, N, L, d)
    if lvl > tol:
        raise AliasingError(
            "exp(-t Re psi) = %.3g at the Nyquist edge; enlarge N or t" % lvl
        )
    xi = frequency_mesh(N, L, d)
    G = GridFunction(np.exp(-t * psi(xi)), L, "frequency")
    return fourier_inverse(G, real=True)


@dataclass(frozen=True)
class UltraConstant:
    value: float
    error: float
    mode: str


def ultra_constant(psi, t, mode="continuum", N=None, L=None, tol=1e-14, report=False):
    """C_t = (2 pi)^-d integral of exp(-t Re psi(xi)) d xi.

    ``mode="continuum"`` integrates over R^d by graded Gauss quadrature,
    extending the cutoff by doubling until the integrand is negligible.
    ``mode="periodic"`` sums over the frequency grid of the torus, which
    is the sharp constant for the periodized density; it raises
    :class:`AliasingError` if the integrand has not decayed at the edge.
    """
    if not t > 0:
        raise ValueError("time must be positive")
    d = psi.dimension
    if mode == "periodic":
        n0, l0 = DEFAULT_GRID[d]
        N = N or n0
        L = L or l0
        lvl = aliasing_level(psi, t, N, L, d)
        if lvl > tol:
            raise AliasingError("ultracontractivity sum has not converged at the grid edge "
                                "(%.3g); enlarge N" % lvl)
        xi = frequency_mesh(N, L, d)
        val = float(np.sum(np.exp(-t * psi.real_part(xi))) / (2 * L) ** d)
        out = UltraConstant(val, lvl * N ** d / (2 * L) ** d, mode)
        return out if report else out.value
    if mode != "continuum":
        raise ValueError("mode must be 'continuum' or 'periodic'")
    if d == 1:
        def radial(r):
            return np.exp(-t * psi.real_part(r)) + np.exp(-t * psi.real_part(-r))
    else:
        th, wth = panel_nodes(np.linspace(0, 2 * np.pi, 9), 16)
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)

        def radial(r):
            xi = r[:, None, None] * dirs[None, :, :]
            return (np.exp(-t * psi.real_part(xi)) @ wth) * r
    R = 1.0
    while True:
        tail = radial(np.array([R]))[0]
        if tail < 1e-18 or R > 1e12:
            break
        R *= 2.0
    edges = np.concatenate([[0.0], geometric_edges(1e-6 * R, R, ratio=1.5)])

    def integrate(ed):
        r, w = panel_nodes(ed, 16)
        return float(np.sum(w * radial(r)))

    coarse = integrate(edges)
    fine_edges = np.concatenate([[0.0, 0.5e-6 * R], split_panels(edges[1:])])
    fine = integrate(fine_edges)
    scale = (2 * np.pi) ** -d
    out = UltraConstant(scale * fine, scale * abs(fine - coarse), mode)
    return out if report else out.value
