"""Command-line interface: ``heatpert <command> [options]``.

Every command prints one JSON report (or a CSV table for table-shaped
results). Reports echo the resolved configuration, the package version and
the seed, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .bounds import admissible_I, kato_gaussian_bound, sample_points, verify_membership
from .errors import DomainError, HeatpertError
from .fourg import compute_L, compute_M, maximize_gap, sample_4g, tightness_witness
from .kato import (C1, Potential, c0, heat_potential, kato_I, lhs_psup, parabolic_N_parts)
from .kernels import GaussianKernel, ck_residual, three_g_failure, three_g_radius, total_mass
from .numerics import RngStream
from .series import ENGINES, SeriesRequest, feynman_kac_mc, term_grid, tilde_p
from .superadd import SuperadditiveQ, check_superadditive, eval_Q, regularize, split

SCHEMA = "heatpert.report/1"
SEED_ENV = "HEATPERT_SEED"
# flags that steer output only; kept out of the echoed configuration
_NOT_CONFIG = {"func", "config", "output", "format", "threads"}


# helpers ---------------------------------------------------------------------

def _clean(obj):
    """Convert to plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _json_arg(text: str | dict | None) -> dict | None:
    """Inline JSON object or a path to a JSON file."""
    if text is None or isinstance(text, dict):
        return text
    path = Path(text)
    raw = path.read_text() if not text.lstrip().startswith("{") and path.exists() else text
    try:
        val = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DomainError(f"could not parse JSON argument: {exc}") from exc
    if not isinstance(val, dict):
        raise DomainError("expected a JSON object")
    return val


def _vec(text, d: int | None = None) -> np.ndarray:
    if isinstance(text, (list, tuple)):
        v = np.asarray(text, dtype=float)
    else:
        v = np.array([float(p) for p in str(text).split(",") if p.strip()], dtype=float)
    if d is not None and v.size == 1 and d > 1:
        v = np.full(d, v[0])
    if d is not None and v.size != d:
        raise DomainError(f"expected {d} coordinates, got {v.size}")
    return v


def _rng(args, stream: int = 0) -> RngStream:
    return RngStream(int(args.seed), stream)


def _potential(args) -> Potential:
    spec = _json_arg(args.potential)
    if spec is None:
        raise DomainError("--potential is required (JSON object with a 'variant' key)")
    if "variant" not in spec:
        raise DomainError("potential JSON needs a 'variant' key")
    return Potential.from_dict(spec)


def _Q(args) -> SuperadditiveQ:
    spec = _json_arg(getattr(args, "Q", None))
    if spec is not None:
        return SuperadditiveQ.from_dict(spec)
    return SuperadditiveQ.linear(float(getattr(args, "beta", 0.0) or 0.0))


# commands --------------------------------------------------------------------

def cmd_fourg(args):
    rng = _rng(args)
    if args.alpha is not None:
        if args.a is not None or args.b is not None:
            raise DomainError("give either --alpha or --a/--b, not both")
        alpha = float(args.alpha)
        if not alpha > 0:
            raise DomainError("alpha must be positive")
        L, tau_star = compute_L(alpha)
        result = {"alpha": alpha, "L": L, "tau_star": tau_star,
                  "L_minus_log1p_alpha": L - math.log1p(alpha)}
        prov = {"L": "computed: 1-D maximization over tau",
                "tau_star": "computed: argmax of the L objective"}
    else:
        if args.a is None or args.b is None:
            raise DomainError("fourg needs --alpha or both --a and --b")
        const = compute_M(float(args.a), float(args.b), int(args.d))
        alpha, L, tau_star = const.alpha, const.L, const.tau_star
        result = const.to_dict()
        prov = {"L": "computed: 1-D maximization over tau",
                "M": "formula: (b/(b-a))^(d/2) exp(d L / 2)",
                "simple_formula": "formula: (1 - a/b)^(-d), valid when a/b >= 1/(1+e^(-1/2))"}
        if args.samples:
            result["sampled_check"] = sample_4g(const.a, const.b, const.d, int(args.samples),
                                                rng.child(1), const.M)
            prov["sampled_check"] = "computed: seeded random configurations"
    w, g = tightness_witness(alpha, L, tau_star)
    result["witness"] = {"tau": w.tau, "xi": w.xi, "eta": w.eta_var, "gap": g}
    prov["witness"] = "formula: point on xi = eta/alpha at tau_star"
    if not args.no_search:
        res = maximize_gap(alpha, L, rng.child(2), starts=int(args.starts))
        p = res["point"]
        result["optimality"] = {"sup_gap": res["sup_gap"],
                                "random_sup_gap": res["random_sup_gap"],
                                "point": {"tau": p.tau, "xi": p.xi, "eta": p.eta_var},
                                "starts": int(args.starts)}
        prov["optimality"] = "computed: multi-start Nelder-Mead on the reduced gap"
    return result, prov, None


def cmd_kernel(args):
    d = int(args.d)
    k = GaussianKernel(float(args.a), d)
    x, y = _vec(args.x, d), _vec(args.y, d)
    s, t = float(args.s), float(args.t)
    result = {"kernel": k.to_dict(), "s": s, "t": t, "x": x, "y": y,
              "value": float(k(s, x, t, y)), "log_value": float(k.log(s, x, t, y))}
    prov = {"value": "formula: Gaussian kernel"}
    if s < t:
        result["total_mass"] = total_mass(k, s, x, t)
        prov["total_mass"] = "computed: adaptive quadrature per coordinate"
    if args.u is not None:
        result["ck_residual"] = ck_residual(k, s, float(args.u), t, x, y)
        prov["ck_residual"] = "computed: adaptive quadrature per coordinate"
    if args.three_g_level is not None:
        radius = three_g_radius(k.a, d, t - s if t > s else 1.0, float(args.three_g_level))
        yy = np.zeros(d)
        yy[0] = radius
        direct, closed = three_g_failure(k.a, d, t - s if t > s else 1.0, yy)
        result["three_g"] = {"level": float(args.three_g_level), "radius": radius,
                             "ratio_direct": direct, "ratio_closed_form": closed}
        prov["three_g"] = "formula: 2^(d/2) exp(a |y|^2 / (4 t)); direct from kernel values"
    return result, prov, None


def cmd_kato(args):
    d = int(args.d)
    c = float(args.c)
    result = {"d": d, "c": c}
    prov = {}
    if d >= 3:
        result["c0"] = c0(d)
        result["C1"] = C1(d, c)
        prov.update(c0="formula: Gamma(d/2-1) pi^(-d/2) / 4",
                    C1="formula: c0 (c + 2^d d (d-2))")
    if args.heat_potential:
        x = _vec(args.x, d)
        val = heat_potential(c, d, x)
        r = float(np.linalg.norm(x))
        result["heat_potential"] = {"x": x, "value": val,
                                    "closed_form": c * c0(d) * r ** (2 - d)}
        prov["heat_potential"] = "computed: improper quadrature; closed_form c c0 |x|^(2-d)"
    needs_q = args.I is not None or args.psup is not None or args.N is not None
    if needs_q:
        q = _potential(args)
        result["potential"] = q.to_dict()
        if args.I is not None:
            est = kato_I(q, float(args.I), rng=_rng(args, 1))
            result["I"] = est.to_dict()
            prov["I"] = f"computed: {est.method}"
        if args.psup is not None:
            h = float(args.psup)
            val = lhs_psup(q, c, h, rng=_rng(args, 2))
            result["psup"] = {"h": h, "value": val}
            prov["psup"] = "computed: truncated heat potential against the potential"
            if d >= 3:
                I = kato_I(q, math.sqrt(h), rng=_rng(args, 1)).value
                result["psup"].update(I_sqrt_h=I, upper=C1(d, c) * I)
        if args.N is not None:
            h = float(args.N)
            fwd, bwd = parabolic_N_parts(q, c, h, rng=_rng(args, 3))
            result["N"] = {"h": h, "forward": fwd, "backward": bwd, "value": fwd + bwd}
            prov["N"] = "computed: sup over start times of windowed space-time integrals"
    return result, prov, None


def cmd_series(args):
    q = _potential(args)
    d = q.d
    kernel = GaussianKernel(float(args.b), d)
    req = SeriesRequest(kernel, q, float(args.s), float(args.t), _vec(args.x, d),
                        _vec(args.y, d), n_terms=int(args.n_terms), engine=args.engine,
                        mc_paths=int(args.mc_paths), mc_steps=int(args.mc_steps),
                        rng=_rng(args, 4), workers=int(args.threads or 1))
    if args.engine == "monte_carlo":
        res = feynman_kac_mc(req)
        prov = {"partial_sum": "computed: Feynman-Kac Monte Carlo with antithetic bridges"}
    elif args.tilde:
        res = tilde_p(req)
        prov = {"partial_sum": "computed: grid recursion until relative term decay"}
    else:
        res = term_grid(req)
        prov = {"terms": "computed: grid recursion on bridge tables"}
    result = {"request": req.to_dict(), "p": req.p_value, **res.to_dict()}
    table = None
    if args.engine == "monte_carlo" and res.partial_sums:
        table = [["n", "partial_sum"]] + [[n, v] for n, v in enumerate(res.partial_sums)]
    elif res.terms:
        sums = res.partial_sums
        errs = res.term_errors or [""] * len(res.terms)
        table = [["n", "term", "partial_sum", "term_error"]]
        table += [[n, res.terms[n], sums[n], errs[n]] for n in range(len(res.terms))]
    return result, prov, table


def cmd_bound(args):
    d, b, a, h = int(args.d), float(args.b), float(args.a), float(args.h)
    Lam = float(args.Lambda)
    cert, bound = kato_gaussian_bound(Lam, float(args.lam), b, a, h, d, float(args.I),
                                   t_ref=float(args.t_ref))
    result = {"certificate": cert.to_dict(), "admissible_I": admissible_I(Lam, b, a, d)}
    prov = {"eta": "formula: Lambda b c0 M I", "Q_slope": "formula: Lambda 2 M I / (h |B(0,1/2)|)",
            "C": "formula: Lambda (b/a)^(d/2)", "eps": "computed: minimized bound factor",
            "M": "computed: 4G constant"}
    table = None
    if args.compare:
        # constant potential with the same Kato norm: I = q0 sigma h / 2
        from .numerics import sphere_area
        q0 = 2.0 * float(args.I) / (sphere_area(d) * h)
        gb = GaussianKernel(b, d)
        rows = [["s", "x", "t", "y", "series", "bound", "ratio"]]
        worst = math.inf
        for s, x, t, y in sample_points(d, int(args.compare), _rng(args, 5)):
            series = math.exp(q0 * (t - s)) * float(gb(s, x, t, y))
            bnd = bound(s, x, t, y)
            ratio = bnd / series if series > 0 else math.inf
            worst = min(worst, ratio)
            rows.append([s, ";".join(f"{v:.17g}" for v in x), t,
                         ";".join(f"{v:.17g}" for v in y), series, bnd, ratio])
        result["compare"] = {"q0": q0, "points": int(args.compare), "min_ratio": worst}
        prov["compare"] = "formula: closed-form series e^(q0 (t-s)) g_b for constant q0"
        table = rows
    return result, prov, table


def cmd_split(args):
    Q = _Q(args)
    if args.regularize:
        Q = regularize(Q)
    s, t, theta = float(args.s), float(args.t), float(args.theta)
    sp = split(Q, s, t, theta)
    pieces = [eval_Q(Q, lo, hi) for lo, hi in zip(sp.breakpoints[:-1], sp.breakpoints[1:])]
    result = {"Q": Q.to_dict(), "s": s, "t": t, "theta": theta, "Q_total": eval_Q(Q, s, t),
              "k": sp.k, "breakpoints": list(sp.breakpoints), "pieces": pieces}
    if args.check_samples:
        result["superadditivity_violation"] = check_superadditive(Q, int(args.check_samples),
                                                                  _rng(args, 6))
    prov = {"breakpoints": "computed: exact inversion of u -> Q(s, u)"}
    table = [["i", "lo", "hi", "Q"]]
    table += [[i, sp.breakpoints[i], sp.breakpoints[i + 1], pieces[i]] for i in range(sp.k)]
    return result, prov, table


def cmd_verify(args):
    q = _potential(args)
    d = q.d
    gb, ga = GaussianKernel(float(args.b), d), GaussianKernel(float(args.a), d)
    lam = float(args.Lambda)
    if not lam >= 1:
        raise DomainError("--Lambda must be >= 1")
    # with Lambda > 1 the stricter class (eta/Lambda, Q/Lambda) is checked
    rec = verify_membership(gb, ga, q, float(args.eta) / lam, _Q(args).scaled(1.0 / lam),
                            int(args.samples), rng=_rng(args, 7), C=args.C)
    result = rec.to_dict()
    if lam != 1.0:
        result["Lambda"] = lam
        result["implies"] = {"C": rec.C * lam, "eta": float(args.eta), "Q": _Q(args).to_dict()}
    worst = max((e["lhs"] / e["rhs"] for e in rec.verified_at if e["rhs"] > 0), default=0.0)
    result["max_lhs_over_rhs"] = worst
    prov = {"lhs": "computed: time quadrature of Gaussian expectations of q",
            "C": "formula: (b/a)^(d/2) unless given"}
    return result, prov, None


# parser ------------------------------------------------------------------------

def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    try:
        return int(raw) if raw not in (None, "") else 0
    except ValueError:
        return 0


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=_default_seed(),
                        help=f"RNG seed (default from ${SEED_ENV}, else 0)")
    common.add_argument("--config", help="JSON file or inline object of option values")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--threads", type=int, default=None, help="cap on worker threads")

    parser = argparse.ArgumentParser(prog="heatpert",
                                     description="Gaussian kernel perturbation toolkit")
    parser.add_argument("--version", action="version", version=f"heatpert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("fourg", parents=[common], help="4G constants, witness and optimality")
    p.add_argument("--alpha", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--starts", type=int, default=16)
    p.add_argument("--samples", type=int, default=0, help="random configurations to test")
    p.add_argument("--no-search", action="store_true")
    p.set_defaults(func=cmd_fourg)
    subs["fourg"] = p

    p = sub.add_parser("kernel", parents=[common], help="Gaussian kernel values and checks")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--x", default="0")
    p.add_argument("--y", default="0")
    p.add_argument("--u", type=float, help="intermediate time for the CK residual")
    p.add_argument("--three-g-level", type=float)
    p.set_defaults(func=cmd_kernel)
    subs["kernel"] = p

    p = sub.add_parser("kato", parents=[common], help="Kato-class functionals")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--x", default="1,0,0")
    p.add_argument("--heat-potential", action="store_true")
    p.add_argument("--potential", help="potential JSON (inline or path)")
    p.add_argument("--I", type=float, metavar="DELTA", help="Kato norm at radius DELTA")
    p.add_argument("--psup", type=float, metavar="H", help="heat-potential sup over [0, H]")
    p.add_argument("--N", type=float, metavar="H", help="parabolic Kato functional at H")
    p.set_defaults(func=cmd_kato)
    subs["kato"] = p

    p = sub.add_parser("series", parents=[common], help="perturbation series terms")
    p.add_argument("--potential", required=False)
    p.add_argument("--b", type=float, default=1.0, help="kernel scale")
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--x", default="0")
    p.add_argument("--y", default="0")
    p.add_argument("--engine", choices=ENGINES, default="grid_recursion")
    p.add_argument("--n-terms", type=int, default=6)
    p.add_argument("--tilde", action="store_true", help="sum to convergence")
    p.add_argument("--mc-paths", type=int, default=100_000)
    p.add_argument("--mc-steps", type=int, default=128)
    p.set_defaults(func=cmd_series)
    subs["series"] = p

    p = sub.add_parser("bound", parents=[common], help="Gaussian upper bound certificate")
    p.add_argument("--Lambda", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.9)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--I", type=float, default=1e-4,
                   help="Kato norm of q at radius sqrt(h)")
    p.add_argument("--t-ref", type=float, default=1.0)
    p.add_argument("--compare", type=int, default=0, metavar="N",
                   help="compare with the series at N sampled points (CSV table)")
    p.set_defaults(func=cmd_bound)
    subs["bound"] = p

    p = sub.add_parser("split", parents=[common], help="split an interval by Q-mass")
    p.add_argument("--Q", help="superadditive Q JSON (inline or path)")
    p.add_argument("--beta", type=float, default=1.0, help="linear Q slope if --Q is absent")
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.25)
    p.add_argument("--regularize", action="store_true")
    p.add_argument("--check-samples", type=int, default=0)
    p.set_defaults(func=cmd_split)
    subs["split"] = p

    p = sub.add_parser("verify", parents=[common], help="sample-check class membership")
    p.add_argument("--potential")
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--a", type=float, default=0.9)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--Q", help="superadditive Q JSON (inline or path)")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--C", type=float, default=None)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--Lambda", type=float, default=1.0,
                   help="check eta/Lambda and Q/Lambda (the class a Lambda-scaled kernel needs)")
    p.set_defaults(func=cmd_verify)
    subs["verify"] = p
    return parser, subs


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _json_arg(args.config)
        sp = subs[args.command]
        known = {a.dest for a in sp._actions} - {"help", "config"}
        unknown = set(cfg) - known
        if unknown:
            raise DomainError(f"unknown config keys for '{args.command}': {sorted(unknown)}")
        # config values become defaults, so explicit flags still win
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _render_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in table:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def run(args) -> str:
    _accel.set_threads(args.threads)
    result, prov, table = args.func(args)
    if args.format == "csv":
        if table is None:
            raise DomainError(f"'{args.command}' has no table output; use --format json")
        return _render_csv(table)
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG}
    report = {"schema": SCHEMA, "command": args.command, "version": __version__,
              "config": config, "result": result, "provenance": prov,
              "backend": _accel.BACKEND}
    return dumps(report)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        text = run(args)
    except HeatpertError as exc:
        err = {"schema": SCHEMA, "error": type(exc).__name__, "message": str(exc),
               "exit_code": exc.exit_code}
        if getattr(exc, "witness", None) is not None:
            err["witness"] = exc.witness
        sys.stderr.write(dumps(err))
        return exc.exit_code
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
