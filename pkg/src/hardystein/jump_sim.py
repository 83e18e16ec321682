"""Monte-Carlo paths of pure-jump Levy processes and compensated integrals.

Jumps with size in a band [delta, R] form a compound Poisson process, so
they can be simulated exactly.  Finite measures are simulated in full.
Each path has its own counter-based stream, ``Philox`` keyed by
``(seed, path_index)``, so results do not depend on how paths are
scheduled across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .hardy_stein import F_value
from .levy_measures import SIDES, AtomicJumps, MixtureJumps, UniformJumps, char_exponent
from .parallel import ordered_map
from .quadrature import geometric_edges, panel_nodes
from .quadrature import side_transform
from .spectral import fourier_forward, fourier_inverse

RNG_ALGORITHM = "numpy Philox4x64-10, key=(seed, path_index), one stream per path"
CHUNK = 4096


def path_stream(seed, index):
    """Independent generator for one path."""
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# the simulated band


def _law_nodes(law, breaks, order=24):
    """Quadrature nodes of a jump law, split at the given |y| values."""
    if isinstance(law, AtomicJumps):
        return law.nodes()
    if isinstance(law, MixtureJumps):
        ys, ps = [], []
        for c, w in zip(law.components, law.weights):
            y, p = _law_nodes(c, breaks, order)
            ys.append(y)
            ps.append(w * p)
        return np.concatenate(ys), np.concatenate(ps)
    if isinstance(law, UniformJumps):
        cuts = {0.0, 1.0, -1.0}
        for b in breaks:
            cuts.update((b, -b))
        edges = np.array(sorted({law.low, law.high} | {c for c in cuts if law.low < c < law.high}))
        y, w = panel_nodes(edges, order)
        return y, w / (law.high - law.low)
    return law.nodes()


@dataclass(frozen=True, eq=False)
class Band:
    """nu restricted to delta <= |y| <= R (all of nu when it is finite)."""

    measure: object
    delta: float
    R: float

    @property
    def d(self):
        return self.measure.dimension

    def nodes(self, breaks=(), order=8, angles=16):
        """Points and weights integrating functions of y against the band.

        Weights carry the measure, so ``sum(w * h(y))`` approximates
        ``int_band h dnu``.
        """
        nu = self.measure
        if nu.is_finite:
            y, p = _law_nodes(nu.jump_law, breaks)
            keep = (np.abs(y) >= self.delta) & (np.abs(y) <= self.R)
            return y[keep], nu.rate * p[keep]
        if not np.isfinite(self.R):
            raise ValueError("band nodes need a finite outer radius")
        cuts = sorted(c for c in {1.0, *breaks} if self.delta < c < self.R)
        edges = geometric_edges(self.delta, self.R, 2.0, tuple(cuts))
        r, wr = panel_nodes(edges, order)
        pts, wts = [], []
        for side in SIDES:
            rho = nu.profile(side)
            if self.d == 1:
                pts.append(side * r)
                wts.append(wr * rho(r))
            else:
                th, wth = panel_nodes(np.array([-np.pi / 2, np.pi / 2]), angles)
                if side == -1:
                    th = th + np.pi
                R_, A = np.meshgrid(r, th, indexing="ij")
                W = np.outer(wr * rho(r) * r, wth)
                pts.append(np.stack([R_ * np.cos(A), R_ * np.sin(A)], -1).reshape(-1, 2))
                wts.append(W.ravel())
        return np.concatenate(pts), np.concatenate(wts)

    def lead(self, y):
        y = np.asarray(y, dtype=float)
        return y if self.d == 1 else y[..., 0]

    def drift(self, unit_ball_only=False):
        """int y nu(dy) over the band (optionally only |y| <= 1)."""
        nu = self.measure
        if nu.is_finite:
            y, w = self.nodes()
            if unit_ball_only:
                w = w * (np.abs(y) <= 1.0)
            return float(np.sum(w * y))
        hi = min(self.R, 1.0) if unit_ball_only else self.R
        if hi <= self.delta:
            return np.zeros(self.d) if self.d == 2 else 0.0
        sub = Band(nu, self.delta, hi)
        y, w = sub.nodes()
        if self.d == 1:
            return float(np.sum(w * y))
        return np.sum(w[:, None] * y, axis=0)

    def _dominating(self):
        """(A, alpha) per side with A r^(-1-alpha) bounding the radial band density."""
        nu = self.measure
        a = nu.alpha
        angle = 1.0 if self.d == 1 else np.pi
        out = {}
        for side in SIDES:
            rho = nu.profile(side)
            if nu.family in ("stable_asymmetric", "tempered_stable"):
                k = 0 if side == 1 else 1
                c = nu.params["c_plus"] if k == 0 else nu.params["c_minus"]
                out[side] = angle * c
            else:
                hi = self.R if np.isfinite(self.R) else nu.outer_cutoff
                r = np.geomspace(self.delta, hi, 4001)
                out[side] = angle * float(np.max(rho(r) * r ** (self.d + a))) * (1 + 1e-6)
        return out, a

    def sample(self, rng, T):
        """Jump times (sorted) and sizes for one path on [0, T]."""
        nu = self.measure
        if nu.is_finite:
            n = rng.poisson(nu.rate * T)
            times = np.sort(rng.uniform(0.0, T, n))
            sizes = nu.jump_law.sample(rng, n)
            keep = (np.abs(sizes) >= self.delta) & (np.abs(sizes) <= self.R)
            return times[keep], sizes[keep]
        dom, a = self._dominating()
        lo = self.delta ** -a
        hi = 0.0 if not np.isfinite(self.R) else self.R ** -a
        angle = 1.0 if self.d == 1 else np.pi
        exact = nu.family == "stable_asymmetric"
        times, sizes = [], []
        for side in SIDES:
            A = dom[side]
            n = rng.poisson(A * (lo - hi) / a * T)
            t = rng.uniform(0.0, T, n)
            r = (lo - rng.random(n) * (lo - hi)) ** (-1.0 / a)
            if not exact:
                ratio = angle * nu.profile(side)(r) * r ** (self.d + a) / A
                if np.any(ratio > 1 + 1e-9):
                    raise ValueError("dominating measure too small; thinning invalid")
                keep = rng.random(n) < ratio
                t, r = t[keep], r[keep]
            if self.d == 1:
                y = side * r
            else:
                th = rng.uniform(-np.pi / 2, np.pi / 2, r.size) + (0.0 if side == 1 else np.pi)
                y = np.stack([r * np.cos(th), r * np.sin(th)], -1)
            times.append(t)
            sizes.append(y)
        t = np.concatenate(times)
        y = np.concatenate(sizes)
        order = np.argsort(t, kind="stable")
        return t[order], y[order]


def make_band(nu, delta=None, R_max=None):
    if nu.is_finite:
        return Band(nu, 0.0 if delta is None else float(delta),
                    np.inf if R_max is None else float(R_max))
    if delta is None or not delta > 0:
        raise ValueError("infinite-activity measures need a small-jump cutoff delta > 0")
    R = nu.outer_cutoff if R_max is None else float(R_max)
    if not R > delta:
        raise ValueError("R_max must exceed delta")
    return Band(nu, float(delta), R)


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True, eq=False)
class JumpPath:
    """One simulated path: jumps in (0, T] with |y| in the band.

    ``drift`` is the band integral of y, so the compensated jump sum is
    ``sum y_i - t * drift``.
    """

    T: float
    times: np.ndarray
    sizes: np.ndarray
    delta: float
    R_max: float
    seed: int
    index: int
    drift: object = 0.0
    band: Band = field(default=None, repr=False)

    def compensator_drift(self, t):
        return -t * np.asarray(self.drift)

    def __len__(self):
        return len(self.times)


def _band_drift(band):
    if band.measure.is_finite or np.isfinite(band.R):
        return band.drift()
    return np.nan  # not integrable for every measure; unused by position()


def sample_path(nu, T, delta=None, seed=0, index=0, R_max=None):
    """Exact compound-Poisson path of the band-restricted measure."""
    if not T > 0:
        raise ValueError("T must be positive")
    band = make_band(nu, delta, R_max)
    t, y = band.sample(path_stream(seed, index), T)
    return JumpPath(float(T), t, y, band.delta, band.R, int(seed), int(index), _band_drift(band),
                    band)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Many paths stored flat; path k owns entries offsets[k]:offsets[k+1]."""

    T: float
    offsets: np.ndarray
    times: np.ndarray
    sizes: np.ndarray
    band: Band
    seed: int

    @property
    def n_paths(self):
        return len(self.offsets) - 1

    @property
    def owner(self):
        return np.repeat(np.arange(self.n_paths), np.diff(self.offsets))

    def path(self, k):
        a, b = self.offsets[k], self.offsets[k + 1]
        return JumpPath(self.T, self.times[a:b], self.sizes[a:b], self.band.delta, self.band.R,
                        self.seed, k, _band_drift(self.band), self.band)

    def restrict(self, delta):
        """The same paths with jumps below delta removed (a coupled coarser band)."""
        keep = np.abs(self.band.lead(self.sizes)) if self.band.d == 1 else \
            np.linalg.norm(self.sizes, axis=-1)
        keep = keep >= delta
        counts = np.bincount(self.owner[keep], minlength=self.n_paths)
        offsets = np.concatenate([[0], np.cumsum(counts)])
        return Ensemble(self.T, offsets, self.times[keep], self.sizes[keep],
                        Band(self.band.measure, delta, self.band.R), self.seed)


def sample_ensemble(nu, T, n_paths, delta=None, seed=0, R_max=None, threads=None):
    """n_paths independent paths, identical for any thread count."""
    band = make_band(nu, delta, R_max)
    starts = list(range(0, n_paths, CHUNK))

    def chunk(lo):
        ts, ys, counts = [], [], []
        for k in range(lo, min(n_paths, lo + CHUNK)):
            t, y = band.sample(path_stream(seed, k), T)
            ts.append(t)
            ys.append(y)
            counts.append(len(t))
        return ts, ys, counts

    parts = ordered_map(chunk, starts, threads)
    ts = [t for p in parts for t in p[0]]
    ys = [y for p in parts for y in p[1]]
    counts = np.array([c for p in parts for c in p[2]], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)])
    shape = (0,) if band.d == 1 else (0, 2)
    times = np.concatenate(ts) if ts else np.zeros(0)
    sizes = np.concatenate(ys) if ys else np.zeros(shape)
    return Ensemble(float(T), offsets, times, sizes.reshape((-1,) + shape[1:]), band, int(seed))


# ---------------------------------------------------------------------------
# martingale integrands


MARTINGALE_TEMPLATES = ("y_up_to_time", "const_band", "zero")


@dataclass(frozen=True)
class MartingaleSpec:
    """Predictable integrand H(s, y) from a closed template set.

    Every template is deterministic in s, so predictability is automatic.
    ``t1`` (optional for all templates) stops H after that time.
    """

    kind: str
    params: dict = field(default_factory=dict)
    M0: float = 0.0
    sup_bound: float | None = None

    def __post_init__(self):
        if self.kind not in MARTINGALE_TEMPLATES:
            raise ValueError("unknown martingale template %r" % self.kind)
        if self.kind == "const_band":
            a, b = self.band_edges
            if not 0 <= a < b:
                raise ValueError("band must satisfy 0 <= a < b")

    @property
    def t1(self):
        v = self.params.get("t1")
        return None if v is None else float(v)

    @property
    def band_edges(self):
        if self.kind != "const_band":
            return ()
        a, b = self.params.get("band", (0.0, np.inf))
        return float(a), float(b)

    def time_breaks(self, T):
        t1 = self.t1
        return (t1,) if t1 is not None and 0 < t1 < T else ()

    def active(self, s):
        t1 = self.t1
        s = np.asarray(s, dtype=float)
        return np.ones(s.shape) if t1 is None else (s <= t1).astype(float)

    def H(self, s, y, d=1):
        """H(s, y) on broadcast shapes; y is the lead coordinate in 2-d."""
        y = np.asarray(y, dtype=float)
        r = np.abs(y) if d == 1 else np.linalg.norm(y, axis=-1)
        lead = y if d == 1 else y[..., 0]
        if self.kind == "zero":
            return np.zeros(np.broadcast(np.asarray(s), lead).shape)
        if self.kind == "y_up_to_time":
            return self.active(s) * lead
        a, b = self.band_edges
        return self.active(s) * float(self.params["value"]) * ((r >= a) & (r <= b))

    def bound(self, band):
        """Declared bound, or the exact bound of the template on the band."""
        if self.sup_bound is not None:
            return float(self.sup_bound)
        if self.kind == "zero":
            return 0.0
        if self.kind == "const_band":
            return abs(float(self.params["value"]))
        y, _ = band.nodes()
        if band.measure.is_finite:
            law = band.measure.jump_law
            ext = [abs(law.low), abs(law.high)] if isinstance(law, UniformJumps) else []
            return float(max([0.0, *ext, *np.abs(band.lead(y))]))
        return float(band.R)

    def to_config(self):
        cfg = {"kind": self.kind, "M0": self.M0}
        cfg.update(self.params)
        if self.sup_bound is not None:
            cfg["sup_bound"] = self.sup_bound
        return cfg


def martingale_from_config(cfg):
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    M0 = float(cfg.pop("M0", 0.0))
    sup = cfg.pop("sup_bound", None)
    allowed = {"y_up_to_time": {"t1"}, "const_band": {"value", "band", "t1"}, "zero": set()}
    if kind not in allowed:
        raise ValueError("unknown martingale template %r" % kind)
    bad = set(cfg) - allowed[kind]
    if bad:
        raise ValueError("unknown keys for %s: %s" % (kind, sorted(bad)))
    if kind == "const_band" and "value" not in cfg:
        raise ValueError("const_band needs a value")
    if "band" in cfg:
        cfg["band"] = tuple(float(v) for v in cfg["band"])
    return MartingaleSpec(kind, cfg, M0, None if sup is None else float(sup))


def _time_integral(spec, T, order=16):
    """Nodes and weights on [0, T], split where the integrand switches off."""
    edges = np.array([0.0, *spec.time_breaks(T), T])
    return panel_nodes(edges, order)


def _breaks(spec):
    return tuple(b for b in spec.band_edges if np.isfinite(b) and b > 0)


def compensator(spec, band, t):
    """int_0^t int_band H(s, y) nu(dy) ds."""
    if spec.kind == "zero" or t <= 0:
        return 0.0
    y, w = band.nodes(_breaks(spec))
    s, ws = _time_integral(spec, t)
    h = spec.H(s[:, None], y[None], band.d)
    return float(np.sum(ws * (h @ w)))


def isometry_value(spec, band, t):
    """int_0^t int_band H^2 nu(dy) ds, the variance of M_t."""
    if spec.kind == "zero" or t <= 0:
        return 0.0
    y, w = band.nodes(_breaks(spec))
    s, ws = _time_integral(spec, t)
    h = spec.H(s[:, None], y[None], band.d)
    return float(np.sum(ws * ((h * h) @ w)))


def _check_bound(spec, band, values):
    b = spec.bound(band)
    if values.size and np.max(np.abs(values)) > b * (1 + 1e-12):
        raise ValueError("H exceeds its declared bound %g" % b)


def compensated_integral(spec, path, t=None):
    """M_t = M0 + sum_{s_i <= t} H(s_i, y_i) - int_0^t int H dnu ds."""
    t = path.T if t is None else float(t)
    if spec.kind == "zero":
        return float(spec.M0)
    band = path.band
    h = spec.H(path.times, path.sizes, band.d)
    _check_bound(spec, band, h)
    return float(spec.M0 + np.sum(h[path.times <= t]) - compensator(spec, band, t))


def _ensemble_values(spec, ens, t, strict=False):
    """M_t (or M_{t-} with ``strict``) for every path."""
    n = ens.n_paths
    if spec.kind == "zero":
        return np.full(n, float(spec.M0))
    h = spec.H(ens.times, ens.sizes, ens.band.d)
    mask = ens.times < t if strict else ens.times <= t
    s = np.bincount(ens.owner, weights=np.where(mask, h, 0.0), minlength=n)
    return spec.M0 + s - compensator(spec, ens.band, t)


def _stats(x):
    x = np.asarray(x, dtype=float)
    n = x.size
    mean = float(np.sum(x) / n)
    var = float(np.sum((x - mean) ** 2) / (n - 1)) if n > 1 else 0.0
    return mean, float(np.sqrt(var / n))


def martingale_ladder(spec, ens, ts):
    """Sample mean and standard error of M_t along a time ladder."""
    rows = []
    for t in ts:
        m, se = _stats(_ensemble_values(spec, ens, t))
        rows.append({"t": float(t), "mean": m, "std_error": se})
    return rows


# ---------------------------------------------------------------------------
# martingale Hardy-Stein


@dataclass
class MCReport:
    p: float
    T: float
    n_paths: int
    seed: int
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    difference: float
    paired_se: float
    combined_se: float
    ito_oracle: float | None
    min_F: float
    rng: str = RNG_ALGORITHM
    ladder: list = field(default_factory=list)

    @property
    def z_paired(self):
        return abs(self.difference) / self.paired_se if self.paired_se > 0 else 0.0

    @property
    def z_combined(self):
        return abs(self.difference) / self.combined_se if self.combined_se > 0 else 0.0

    def to_dict(self):
        out = dict(self.__dict__)
        out["z_paired"] = self.z_paired
        out["z_combined"] = self.z_combined
        return out


def martingale_hardy_stein_mc(spec, nu, p, T, n_paths, seed=0, delta=None, R_max=None,
                              s_order=16, threads=None, ensemble=None):
    """Both sides of the martingale Hardy-Stein identity from one ensemble.

    LHS per path is |M_T|^p - |M0|^p; RHS per path integrates
    F(M_{s-}, M_{s-} + H(s, y); p) against nu(dy) ds at Gauss times s.
    """
    if not p > 1:
        raise ValueError("p must exceed 1")
    ens = ensemble or sample_ensemble(nu, T, n_paths, delta, seed, R_max, threads)
    band = ens.band
    n = ens.n_paths
    if spec.kind == "zero":
        z = 0.0
        return MCReport(p, T, n, seed, z, z, z, z, z, z, z, 0.0 if p == 2 else None, 0.0)
    _check_bound(spec, band, spec.H(ens.times, ens.sizes, band.d))
    MT = _ensemble_values(spec, ens, T)
    lhs = np.abs(MT) ** p - abs(spec.M0) ** p
    y, w = band.nodes(_breaks(spec))
    s_nodes, s_w = _time_integral(spec, T, s_order)
    rhs = np.zeros(n)
    min_F = np.inf
    for s, ws in zip(s_nodes, s_w):
        hy = spec.H(s, y, band.d)
        if not np.any(hy):
            continue
        M = _ensemble_values(spec, ens, s, strict=True)
        F = F_value(M[:, None], M[:, None] + hy[None], p)
        min_F = min(min_F, float(F.min()))
        rhs += ws * (F @ w)
    lm, lse = _stats(lhs)
    rm, rse = _stats(rhs)
    dm, dse = _stats(lhs - rhs)
    ito = isometry_value(spec, band, T) if p == 2 else None
    return MCReport(float(p), float(T), n, int(seed), lm, lse, rm, rse, dm, dse,
                    float(np.hypot(lse, rse)), ito, min_F if np.isfinite(min_F) else 0.0)


# ---------------------------------------------------------------------------
# semigroup cross-check


def _periodic_spline(g):
    x = g.points()
    vals = np.append(g.values.real, g.values.real[0])
    return CubicSpline(np.append(x, x[0] + 2 * g.L), vals, bc_type="periodic")


def _evaluate(spline, L, z):
    return spline(np.mod(z + L, 2 * L) - L)


def small_jump_exponent(nu, xi):
    """The part of psi carried by jumps with |y| < delta (one dimension).

    Returns a function of delta.
    """
    a = np.abs(np.asarray(xi, dtype=float))
    sg = np.sign(xi)

    def part(delta):
        out = np.zeros(a.shape, dtype=complex)
        for side in SIDES:
            C, S, _, _ = side_transform(nu.profile(side), a, nu.alpha, nu.inner_cutoff,
                                        nu.outer_cutoff, lo=0.0, hi=delta)
            out += C - 1j * side * sg * S
        return out

    return part


def _semigroup_values(f, expo, t):
    F = fourier_forward(f)
    return fourier_inverse(F.with_values(F.values * np.exp(-t * expo)), real=True)


@dataclass
class CrossCheckReport:
    t: float
    xs: list
    rows: list
    ladder: list
    n_paths: int
    seed: int
    rng: str = RNG_ALGORITHM

    def to_dict(self):
        return dict(self.__dict__)


def semigroup_mc_crosscheck(nu, f, t, xs, n_paths, delta=None, seed=0, psi=None,
                            ladder_points=4, threads=None):
    """MC estimate of E f(x + X_t) against the spectral P_t f(x).

    For infinite-activity measures paths are simulated with jumps down to
    delta / 2; the delta-paths are the same paths with jumps below delta
    removed.  Each estimate is compared with the spectral semigroup of
    the band-restricted exponent (no bias expected) and with the full
    exponent (truncation bias, reported).
    """
    if f.d != 1 or nu.dimension != 1:
        raise ValueError("the semigroup cross-check is one-dimensional")
    if t < 0:
        raise ValueError("t must be non-negative")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    psi = psi or char_exponent(nu)
    xi = f.frequencies()
    full = np.asarray(psi(xi), dtype=complex)
    Pt = _periodic_spline(_semigroup_values(f, full, t))
    exact = Pt(xs)
    if t == 0:
        rows = [{"delta": None, "x": float(x), "mc": float(v), "std_error": 0.0,
                 "spectral": float(v), "band_spectral": float(v), "bias": 0.0}
                for x, v in zip(xs, exact)]
        return CrossCheckReport(0.0, xs.tolist(), rows, [], n_paths, seed)
    if nu.is_finite:
        deltas = [None]
        ens = sample_ensemble(nu, t, n_paths, None, seed, threads=threads)
    else:
        if delta is None:
            raise ValueError("infinite-activity measures need delta")
        deltas = [float(delta), float(delta) / 2]
        ens = sample_ensemble(nu, t, n_paths, deltas[-1], seed, R_max=np.inf, threads=threads)
        small = small_jump_exponent(nu, xi)
    rows, ladder = [], []
    for dlt in deltas:
        e = ens if dlt is None or dlt == deltas[-1] else ens.restrict(dlt)
        if dlt is None:
            expo = full
        else:
            expo = full - small(dlt)
        lk = e.band.drift(unit_ball_only=True)
        X_t = np.bincount(e.owner, weights=e.sizes, minlength=e.n_paths) - t * lk
        band_vals = _periodic_spline(_semigroup_values(f, expo, t))
        fs = _periodic_spline(f)
        for x, ex in zip(xs, exact):
            m, se = _stats(_evaluate(fs, f.L, x + X_t))
            bv = float(band_vals(x))
            rows.append({"delta": dlt, "x": float(x), "mc": m, "std_error": se, "spectral": float(ex),
                         "band_spectral": bv, "bias": bv - float(ex)})
        # Y_s = P_{t-s} f(x + X_s) is a martingale in s
        x0 = float(xs[0])
        for s in np.linspace(0.0, t, ladder_points):
            X_s = np.bincount(e.owner, weights=np.where(e.times <= s, e.sizes, 0.0),
                              minlength=e.n_paths) - s * lk
            Ps = _periodic_spline(_semigroup_values(f, expo, t - s))
            m, se = _stats(_evaluate(Ps, f.L, x0 + X_s))
            ladder.append({"delta": dlt, "s": float(s), "mean": m, "std_error": se})
    return CrossCheckReport(float(t), xs.tolist(), rows, ladder, n_paths, int(seed))
