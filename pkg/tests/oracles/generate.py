"""Regenerate frozen.json: reference values computed with mpmath only.

Nothing here imports the package; every value comes from direct
high-precision quadrature or closed forms.

    python3 tests/oracles/generate.py
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 60


def stable_exponent(alpha, cp, cm, xi):
    """psi(xi) = int (1 - e^{i xi y} + i xi y 1{|y|<=1}) nu(dy), nu = c_side |y|^(-1-alpha)."""
    a = mp.mpf(alpha)
    xi = mp.mpf(xi)
    rho = lambda r: r ** (-1 - a)
    # even part, split at 1 and integrated to infinity with oscillatory tail
    cos_head = mp.quad(lambda r: (1 - mp.cos(xi * r)) * rho(r), [0, 1])
    cos_tail = 1 / a - mp.quadosc(lambda r: mp.cos(xi * r) * rho(r), [1, mp.inf], omega=abs(xi))
    sin_head = mp.quad(lambda r: (mp.sin(xi * r) - xi * r) * rho(r), [0, 1])
    sin_tail = mp.quadosc(lambda r: mp.sin(xi * r) * rho(r), [1, mp.inf], omega=abs(xi))
    C = cos_head + cos_tail
    S = sin_head + sin_tail
    return (cp + cm) * C, -(cp - cm) * S


def tempered_exponent(alpha, cp, cm, tp, tm, xi):
    a = mp.mpf(alpha)
    xi = mp.mpf(xi)
    re = im = mp.mpf(0)
    for c, th, s in ((cp, tp, 1), (cm, tm, -1)):
        rho = lambda r, th=th: mp.exp(-th * r) * r ** (-1 - a)
        re += c * mp.quad(lambda r: (1 - mp.cos(xi * r)) * rho(r), [0, 1, mp.inf])
        im += -s * c * mp.quad(lambda r: (mp.sin(xi * r) - xi * r * (r <= 1)) * rho(r),
                               [0, 1, mp.inf])
    return re, im


def envelope(p, n=4000):
    """inf and sup over s != 1 of F(1, s; p) / K(1, s; p) (homogeneity reduces to a = 1)."""
    p = mp.mpf(p)

    def ratio(s):
        F = abs(s) ** p - 1 - p * (s - 1)
        K = (s - 1) ** 2 * max(1, abs(s)) ** (p - 2)
        return F / K

    pts = []
    for k in range(n + 1):
        u = -8 + 16 * mp.mpf(k) / n
        pts += [mp.mpf(10) ** u, -mp.mpf(10) ** u]
    for k in range(1, n + 1):
        e = mp.mpf(10) ** (-10 + 9 * mp.mpf(k) / n)
        pts += [1 + e, 1 - e]
    pts.append(mp.mpf(0))
    vals = [(ratio(s), s) for s in pts if s != 1]
    lo = min(vals)
    hi = max(vals)
    # polish interior extrema
    out = []
    for v, s in (lo, hi):
        sign = 1 if (v, s) == lo else -1
        try:
            s2 = mp.findroot(lambda x: mp.diff(ratio, x), s)
            v2 = ratio(s2)
            if sign * (v2 - v) < 0:
                v, s = v2, s2
        except (ValueError, ZeroDivisionError):
            pass
        out.append((float(v), float(s)))
    limits = {"s->1": float(p * (p - 1) / 2), "s->inf": 1.0, "s=0": float(p - 1)}
    # the envelope includes limits that are approached but not attained
    inf = min(out[0][0], *limits.values())
    sup = max(out[1][0], *limits.values())
    return {"inf": inf, "argmin_s": out[0][1], "sup": sup, "argmax_s": out[1][1],
            "limits": limits}


def skellam_abs_moment(mu, q, kmax=60):
    """E|N1 - N2|^q for independent Poisson(mu) counts."""
    mu = mp.mpf(mu)
    return float(sum(abs(k) ** q * mp.exp(-2 * mu) * mp.besseli(k, 2 * mu)
                     for k in range(-kmax, kmax + 1)))


def main():
    out = {}
    rows = []
    for alpha in (0.5, 1.0, 1.2, 1.7):
        for xi in (0.3, 1.0, -2.0, 4.5):
            re, im = stable_exponent(alpha, 2.0, 1.0, xi)
            rows.append({"alpha": alpha, "c_plus": 2.0, "c_minus": 1.0, "xi": xi,
                         "re": float(re), "im": float(im)})
    out["stable_exponent"] = rows
    rows = []
    for alpha in (0.7, 1.5):
        for xi in (0.5, -3.0):
            re, im = tempered_exponent(alpha, 1.0, 0.5, 2.0, 1.0, xi)
            rows.append({"alpha": alpha, "c_plus": 1.0, "c_minus": 0.5, "theta_plus": 2.0,
                         "theta_minus": 1.0, "xi": xi, "re": float(re), "im": float(im)})
    out["tempered_exponent"] = rows
    out["envelope"] = {str(p): envelope(p) for p in (1.2, 1.5, 1.9, 2.0, 3.0)}
    # f = exp(-x^2/2), psi = |xi|: (2 pi)^-1 int |f_hat|^2 (1 - exp(-2 T |xi|)) at T = 1
    T = 1
    out["plancherel_cauchy_gauss_T1"] = float(
        mp.quad(lambda x: mp.exp(-x * x) * (1 - mp.exp(-2 * T * abs(x))), [-mp.inf, 0, mp.inf]))
    out["gauss_l2_squared"] = float(mp.sqrt(mp.pi))
    out["skellam_mu1_abs3"] = skellam_abs_moment(1, 3)
    out["skellam_mu1_abs2"] = skellam_abs_moment(1, 2)
    Path(__file__).with_name("frozen.json").write_text(json.dumps(out, indent=2, sort_keys=True)
                                                       + "\n")


if __name__ == "__main__":
    main()
