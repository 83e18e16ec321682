"""Command-line front end.

Every verb reads a JSON config (optionally overridden by flags), runs one
computation and writes a report whose bytes depend only on the resolved
config: timestamps and the worker count go to a separate sidecar file.

Exit codes: 0 completed run (a numerical disagreement is data, not a
failure), 2 invalid config, 3 numerical divergence, 64 unknown verb.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .hardy_stein import verify_identity
from .increments import QuadSpec
from .jump_sim import (
    RNG_ALGORITHM,
    martingale_from_config,
    martingale_hardy_stein_mc,
    martingale_ladder,
    sample_ensemble,
)
from .levy_measures import (
    char_exponent,
    hartman_wintner_profile,
    hw_verdict,
    measure_from_config,
    symmetrize,
)
from .multipliers import (
    adjoint_identity_check,
    apply_multiplier,
    multiplier_symbol,
    phi_from_config,
)
from .parallel import set_threads
from .quadrature import QuadratureDivergence
from .spectral import DEFAULT_GRID, AliasingError, GridFunction, SemigroupOperator, lp_norm
from .square_functions import square_functions
from .testfunctions import gaussian_bump, random_smooth, zero_mean_family

VERBS = ("verify-hardy-stein", "square-function", "compute-symbol", "apply-multiplier",
         "adjoint-check", "simulate", "symmetrize", "hw-profile")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 64


class ConfigError(ValueError):
    """The config does not validate against the verb's schema."""


# ---------------------------------------------------------------------------
# config pieces


def _grid(cfg, d):
    n0, l0 = DEFAULT_GRID[d]
    g = cfg.get("grid", {})
    N, L = int(g.get("N", n0)), float(g.get("L", l0))
    if N < 2 or N & (N - 1) or not L > 0:
        raise ConfigError("grid N must be a power of two and L positive")
    return N, L


def _locate(base, name):
    """A path as given if it exists from the working directory, else beside the config."""
    p = Path(name)
    return p if p.is_absolute() or p.exists() else Path(base, name)


def _function(spec, N, L, d, base_dir):
    kind = spec.get("kind", "gaussian_bump")
    if kind == "gaussian_bump":
        return gaussian_bump(N, L, d, spec.get("center", 0.0), float(spec.get("width", 1.0)),
                             float(spec.get("height", 1.0)))
    if kind == "random_smooth":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        return random_smooth(rng, N, L, d, int(spec.get("bumps", 4)),
                             bool(spec.get("zero_mean", False)))
    if kind == "zero_mean_family":
        if d != 1:
            raise ConfigError("zero_mean_family is one-dimensional")
        return zero_mean_family(N, L)[int(spec.get("index", 0))]
    if kind == "file":
        f = GridFunction.load(_locate(base_dir, spec["path"]))
        if f.d != d:
            raise ConfigError("function file has dimension %d, measure has %d" % (f.d, d))
        return f
    raise ConfigError("unknown function kind %r" % kind)


def _measure(cfg):
    if "measure" not in cfg:
        raise ConfigError("config needs a 'measure'")
    return measure_from_config(cfg["measure"])


def _quad(cfg):
    return QuadSpec.from_config(cfg.get("quad"))


def _exponent(cfg, nu):
    return char_exponent(nu, method=cfg.get("exponent_method", "auto"))


# ---------------------------------------------------------------------------
# verbs: each returns (plan, runner); the plan is built before any output


def _verify(cfg, base):
    nu = _measure(cfg)
    N, L = _grid(cfg, nu.dimension)
    f = _function(cfg.get("f", {}), N, L, nu.dimension, base)
    p, T = float(cfg.get("p", 2.0)), float(cfg.get("T", 1.0))
    if not p > 1 or not T > 0:
        raise ConfigError("need p > 1 and T > 0")
    quad, eps = _quad(cfg), float(cfg.get("eps", 0.0))
    levels = cfg.get("levels")

    def run():
        rep = verify_identity(_exponent(cfg, nu), nu, f, p, T, quad, eps, levels)
        out = rep.to_dict()
        out["error_ratios"] = rep.error_ratios
        rows = [[r["level"], rep.lhs, r["rhs"], r["rel_error"]] for r in rep.refinement_trace]
        return out, {"refinement": (["level", "lhs", "rhs", "rel_error"], rows,
                                    "refinement level, left side, right side, signed relative error")}

    return run


def _square(cfg, base):
    nu = _measure(cfg)
    sym = symmetrize(nu)
    N, L = _grid(cfg, nu.dimension)
    f = _function(cfg.get("f", {}), N, L, nu.dimension, base)
    p_list = [float(p) for p in cfg.get("p_list", [2.0])]
    variants = cfg.get("variant", "both")
    if variants not in ("full", "starred", "both"):
        raise ConfigError("variant must be full, starred or both")
    variants = ("full", "starred") if variants == "both" else (variants,)
    T_max = cfg.get("T_max")
    quad = _quad(cfg)

    def run():
        psi = _exponent(cfg, nu)
        g2, g2s, T, tail, notes = square_functions(SemigroupOperator(psi, "symmetrized"),
                                                   sym.nu_sym, f, T_max, quad)
        norms = []
        for variant, g2v in (("full", g2), ("starred", g2s)):
            if variant not in variants:
                continue
            g = GridFunction(np.sqrt(g2v), f.L)
            for p in p_list:
                gn, fn = lp_norm(g, p), lp_norm(f, p)
                norms.append([variant, p, gn, fn, gn / fn])
        out = {"T_max": T, "tail_energy": tail, "notes": notes,
               "starred_violations": int(np.sum(g2s > g2 * (1 + 1e-12) + 1e-300)),
               "norms": [dict(zip(["variant", "p", "g_norm", "f_norm", "ratio"], r)) for r in norms]}
        tables = {"norms": (["variant", "p", "g_norm", "f_norm", "ratio"], norms,
                            "variant, exponent p, ||G f||_p, ||f||_p, ratio")}
        if f.d == 1:
            rows = np.column_stack([f.points(), np.sqrt(g2), np.sqrt(g2s)]).tolist()
            tables["g"] = (["x", "g_full", "g_starred"], rows,
                           "grid point, full square function, starred square function")
        return out, tables

    return run


def _phi(cfg):
    if "phi" not in cfg:
        raise ConfigError("config needs a 'phi'")
    return phi_from_config(cfg["phi"])


def _symbol_table(sym):
    xi = sym.frequencies()
    m = sym.m_values
    if sym.d == 1:
        order = np.argsort(xi, kind="stable")
        rows = np.column_stack([xi[order], m.real[order], m.imag[order]]).tolist()
        return (["xi", "re_m", "im_m"], rows, "frequency, Re m_phi, Im m_phi")
    flat = xi.reshape(-1, 2)
    order = np.lexsort((flat[:, 1], flat[:, 0]))
    mm = m.ravel()[order]
    rows = np.column_stack([flat[order], mm.real, mm.imag]).tolist()
    return (["xi1", "xi2", "re_m", "im_m"], rows, "frequency components, Re m_phi, Im m_phi")


def _symbol(cfg, base):
    nu, phi = _measure(cfg), _phi(cfg)
    N, L = _grid(cfg, nu.dimension)

    def run():
        sym = multiplier_symbol(phi, _exponent(cfg, nu), nu, N, L, nu.dimension)
        clean = sym.clean()
        out = {"phi": phi.description, "sup_norm_phi": phi.sup_norm, "sup_m": sym.sup(),
               "flagged": int(sym.flagged.sum()), "clean": int(clean.sum()),
               "grid": {"N": N, "L": L, "d": nu.dimension}}
        return out, {"m_phi": _symbol_table(sym)}

    return run


def _apply(cfg, base):
    nu, phi = _measure(cfg), _phi(cfg)
    src = cfg.get("input")
    if not src:
        raise ConfigError("apply-multiplier needs --input")
    f = GridFunction.load(_locate(base, src))
    if f.d != nu.dimension:
        raise ConfigError("input dimension does not match the measure")

    def run():
        sym = multiplier_symbol(phi, _exponent(cfg, nu), nu, f.N, f.L, f.d)
        g = apply_multiplier(sym, f)
        out = {"phi": phi.description, "sup_m": sym.sup(), "norm_in": lp_norm(f, 2),
               "norm_out": lp_norm(g, 2), "flagged": int(sym.flagged.sum())}
        return out, {}, g

    return run


def _adjoint(cfg, base):
    nu, phi = _measure(cfg), _phi(cfg)
    N, L = _grid(cfg, nu.dimension)
    f = _function(cfg.get("f", {"kind": "random_smooth", "seed": 1}), N, L, nu.dimension, base)
    g = _function(cfg.get("g", {"kind": "random_smooth", "seed": 2}), N, L, nu.dimension, base)
    quad, T_max = _quad(cfg), cfg.get("T_max")

    def run():
        rep = adjoint_identity_check(phi, f, g, _exponent(cfg, nu), nu, T_max, quad)
        d = rep.to_dict()
        rows = [[k, d[k]] for k in sorted(d)]
        return d, {"adjoint": (["quantity", "value"], rows, "report field, value")}

    return run


def _simulate(cfg, base):
    nu = _measure(cfg)
    if "spec" not in cfg:
        raise ConfigError("simulate needs a martingale 'spec'")
    spec = martingale_from_config(cfg["spec"])
    p, T = float(cfg.get("p", 2.0)), float(cfg.get("T", 1.0))
    n = int(cfg.get("paths", 100_000))
    seed = int(cfg.get("seed", 0))
    delta = cfg.get("delta")
    if not p > 1 or not T > 0 or n < 2:
        raise ConfigError("need p > 1, T > 0 and at least two paths")
    if not nu.is_finite and delta is None:
        raise ConfigError("infinite-activity measures need 'delta'")

    def run():
        ens = sample_ensemble(nu, T, n, delta, seed)
        rep = martingale_hardy_stein_mc(spec, nu, p, T, n, seed, delta, ensemble=ens)
        rep.ladder = martingale_ladder(spec, ens, np.linspace(0, T, 5)[1:])
        out = rep.to_dict()
        rows = [["lhs", rep.lhs, rep.lhs_se], ["rhs", rep.rhs, rep.rhs_se],
                ["difference", rep.difference, rep.paired_se]]
        if rep.ito_oracle is not None:
            rows.append(["ito_oracle", rep.ito_oracle, 0.0])
        rows += [["mean_M(t=%r)" % r["t"], r["mean"], r["std_error"]] for r in rep.ladder]
        return out, {"mc": (["quantity", "estimate", "std_error"], rows,
                            "quantity, Monte-Carlo estimate, standard error")}

    return run


def _symmetrize(cfg, base):
    nu = _measure(cfg)
    pts = cfg.get("points")
    if pts is None:
        r = np.geomspace(1e-3, 1e2, 11)
        pts = np.concatenate([-r[::-1], r]) if nu.dimension == 1 else \
            np.concatenate([np.stack([r, 0 * r], -1), np.stack([-r, 0 * r], -1)])
    pts = np.asarray(pts, dtype=float)

    def run():
        res = symmetrize(nu)
        r = res.ratio(pts)
        dens, dsym = nu.density(pts), res.nu_sym.density(pts)
        rows = [[*(np.atleast_1d(y).tolist()), a, b, c] for y, a, b, c in
                zip(pts, r, dens, dsym)]
        cols = (["y"] if nu.dimension == 1 else ["y1", "y2"]) + ["r", "density", "density_sym"]
        out = {"nu_sym": res.nu_sym.to_config(), "source": res.nu_sym.family,
               "r_table": [dict(zip(cols, row)) for row in rows],
               "max_abs_r": float(np.max(np.abs(r))),
               "reconstruction_rel_error": float(np.max(np.abs((1 + r) * dsym - dens)
                                                        / np.maximum(dens, 1e-300)))}
        return out, {"r_table": (cols, rows, "jump, ratio r, density of nu, density of nu_sym")}

    return run


def _hw(cfg, base):
    nu = _measure(cfg)
    radii = np.asarray(cfg.get("radii", np.geomspace(1.0, 1e4, 9)), dtype=float)
    n_angles = int(cfg.get("n_angles", 64))

    def run():
        prof = hartman_wintner_profile(_exponent(cfg, nu), radii, n_angles)
        rows = [[a, b] for a, b in zip(radii.tolist(), prof)]
        out = {"radii": radii.tolist(), "profile": prof, "verdict": hw_verdict(prof)}
        return out, {"hw_profile": (["R", "min_ratio"], rows,
                                    "radius, min over the circle of Re psi / log(1 + R)")}

    return run


BUILDERS = {
    "verify-hardy-stein": _verify,
    "square-function": _square,
    "compute-symbol": _symbol,
    "apply-multiplier": _apply,
    "adjoint-check": _adjoint,
    "simulate": _simulate,
    "symmetrize": _symmetrize,
    "hw-profile": _hw,
}


# ---------------------------------------------------------------------------
# serialization


def _plain(obj):
    """JSON-ready copy with numpy scalars converted and non-finite floats as null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def dumps(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _csv_text(columns, rows, doc):
    buf = io.StringIO()
    buf.write("# columns: %s\n" % doc)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def plot_data(report):
    """``{file name: CSV text}`` for every table of a report, in name order."""
    return {name + ".csv": _csv_text(t["columns"], t["rows"], t["doc"])
            for name, t in sorted(report.get("tables", {}).items())}


def emit_plot_data(report, out_dir):
    """Write every table of a report as ``<name>.csv``; returns the paths."""
    out = []
    for name, text in plot_data(report).items():
        path = Path(out_dir, name)
        path.write_text(text)
        out.append(path)
    return out


def input_hash(config, files=()):
    h = hashlib.sha256(json.dumps(_plain(config), sort_keys=True).encode())
    for f in files:
        h.update(Path(f).read_bytes())
    return h.hexdigest()


def _write_outputs(target, files):
    """Place ``{relative name: bytes}`` under target all at once.

    A new target directory is assembled in a temporary sibling and renamed
    into place; an existing one receives each file by atomic replace.
    """
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".hs-", dir=target.parent))
    try:
        for name, data in files.items():
            (tmp / name).write_bytes(data)
        if not target.exists():
            os.rename(tmp, target)
            return
        for name in files:
            os.replace(tmp / name, target / name)
    finally:
        if tmp.exists():
            shutil.rmtree(tmp, ignore_errors=True)


# ---------------------------------------------------------------------------
# entry point


def _parser():
    ap = argparse.ArgumentParser(prog="hardystein", description=__doc__.split("\n")[0])
    ap.add_argument("verb", help="one of: " + ", ".join(VERBS))
    ap.add_argument("config", nargs="?", help="JSON config file")
    ap.add_argument("--out", help="output directory, or report path ending in .json "
                                  "(apply-multiplier: output .bin)")
    ap.add_argument("--threads", type=int, help="worker cap; results do not depend on it")
    ap.add_argument("--grid-n", type=int)
    ap.add_argument("--grid-l", type=float)
    ap.add_argument("--measure", help="measure JSON file")
    ap.add_argument("--spec", help="martingale integrand JSON file")
    ap.add_argument("--phi", help="multiplier weight JSON file")
    ap.add_argument("--input", help="input grid function (.bin)")
    ap.add_argument("--p", help="exponent, or a comma list for square-function")
    ap.add_argument("--T", "--t-horizon", dest="T", type=float, help="time horizon")
    ap.add_argument("--variant", choices=("full", "starred"),
                    help="square-function: report only this variant")
    ap.add_argument("--paths", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--delta", type=float)
    return ap


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("cannot read %s: %s" % (path, exc)) from exc


def resolve_config(args):
    cfg = _load_json(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("measure", "spec", "phi"):
        v = getattr(args, key)
        if v:
            cfg[key] = _load_json(v)
    if args.p is not None:
        try:
            ps = [float(v) for v in args.p.split(",")]
        except ValueError as exc:
            raise ConfigError("--p expects numbers: %s" % args.p) from exc
        if args.verb == "square-function":
            cfg["p_list"] = ps
        elif len(ps) == 1:
            cfg["p"] = ps[0]
        else:
            raise ConfigError("%s takes a single --p" % args.verb)
    if args.variant:
        cfg["variant"] = args.variant
    for key in ("T", "paths", "seed", "delta"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    if args.input:
        cfg["input"] = args.input
    if args.grid_n or args.grid_l:
        g = dict(cfg.get("grid", {}))
        if args.grid_n:
            g["N"] = args.grid_n
        if args.grid_l:
            g["L"] = args.grid_l
        cfg["grid"] = g
    return cfg


def _destinations(verb, out):
    """(directory, report file name, binary output name or None)."""
    if out is None:
        return Path("hardystein_out", verb), "report.json", None
    out = Path(out)
    if verb == "apply-multiplier" and out.suffix == ".bin":
        return out.parent, out.stem + ".json", out.name
    if out.suffix == ".json":
        return out.parent, out.name, None
    return out, "report.json", None


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "run":
        argv = argv[1:]
    if not argv or argv[0] not in VERBS:
        if argv and argv[0] in ("-h", "--help"):
            _parser().print_help()
            return EXIT_OK
        sys.stderr.write(_parser().format_usage())
        sys.stderr.write("unknown verb; choose one of: %s\n" % ", ".join(VERBS))
        return EXIT_USAGE
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    started = time.time()
    try:
        cfg = resolve_config(args)
        base = Path(args.config).parent if args.config else Path(".")
        run = BUILDERS[args.verb](cfg, base)
    except (ConfigError, ValueError, KeyError, TypeError, IndexError) as exc:
        sys.stderr.write("config error: %s\n" % exc)
        return EXIT_CONFIG
    if args.threads:
        set_threads(args.threads)
    try:
        result = run()
    except (QuadratureDivergence, AliasingError, FloatingPointError) as exc:
        sys.stderr.write("numerical divergence: %s\n" % exc)
        return EXIT_NUMERIC
    binary = None
    if len(result) == 3:
        out, tables, binary = result
    else:
        out, tables = result
    files_in = [_locate(base, cfg["input"])] if "input" in cfg else []
    report = {
        "verb": args.verb,
        "config": cfg,
        "input_sha256": input_hash(cfg, files_in),
        "package_version": __version__,
        "rng": RNG_ALGORITHM if args.verb == "simulate" else None,
        "result": out,
        "tables": {k: {"columns": v[0], "doc": v[2], "rows": v[1]} for k, v in tables.items()},
    }
    directory, report_name, bin_name = _destinations(args.verb, args.out)
    files = {report_name: dumps(report).encode()}
    for name, text in plot_data(report).items():
        files[name] = text.encode()
    if binary is not None:
        files[bin_name or "output.bin"] = binary.to_bytes()
    sidecar = {"created_unix": started, "runtime_s": time.time() - started,
               "threads": args.threads, "report": report_name}
    files[Path(report_name).stem + ".meta.json"] = dumps(sidecar).encode()
    _write_outputs(directory, files)
    sys.stdout.write("%s\n" % Path(directory, report_name))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
