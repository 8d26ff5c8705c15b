"""Command-line front end.

Subcommands: spectrum | differentials | gradients | verify | eval.
Complex numbers are serialized as [re, im] pairs in JSON and as _re/_im
column pairs in CSV.  Exit codes: 0 ok, 1 check failure, 2 input error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from .config import RunConfig
from .potential import Potential

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_INPUT_ERROR = 2
EXIT_NUMERICAL = 3


def _load_potential(path: str) -> Potential:
    try:
        with open(path) as fh:
            return Potential.from_json(fh.read())
    except FileNotFoundError as exc:
        raise SystemExit2(f"potential file not found: {exc}") from exc
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise SystemExit2(f"cannot parse potential file {path}: {exc}") from exc


class SystemExit2(Exception):
    """Input error, mapped to exit code 2."""


def _config_from_args(args) -> RunConfig:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = RunConfig.from_json(fh.read())
    else:
        cfg = RunConfig()
    for name, attr in (
        ("nmax", "n_max"),
        ("K", "K"),
        ("tol", "ode_tol"),
        ("nodes", "nodes"),
        ("seed", "seed"),
        ("threads", "threads"),
    ):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, attr, val)
    if getattr(args, "format", None):
        cfg.out_format = args.format
    if cfg.K < cfg.n_max:
        cfg.K = cfg.n_max
    if cfg.threads:
        try:
            from threadpoolctl import threadpool_limits

            threadpool_limits(limits=cfg.threads)
        except ImportError:
            pass  # reductions are order-fixed; thread count only affects speed
    return cfg


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _c2(z):
    z = complex(z)
    return [z.real, z.imag]


def cmd_spectrum(args) -> int:
    from .spectrum import DiscFamily, build_isolating, build_table

    cfg = _config_from_args(args)
    v = _load_potential(args.potential)
    table = build_table(v, cfg.n_max, tol=cfg.spectral_tol)
    if cfg.out_format == "json":
        _emit(table.to_json(), args.out)
        return EXIT_OK
    iso = build_isolating(v, table, nodes=cfg.nodes)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["n", "quantity", "re", "im"])
    for n in range(-cfg.n_max, cfg.n_max + 1):
        lm, lp = table.lam_pm(n)
        rows = {
            "lambda_minus": lm,
            "lambda_plus": lp,
            "mu": table.mu_n(n),
            "lambda_dot": table.lam_dot_n(n),
            "tau": table.tau(n),
            "gamma": table.gamma(n),
            "U_center": iso.U(n)[0],
            "U_radius": iso.U(n)[1],
            "D_center": DiscFamily.D(n)[0],
            "D_radius": DiscFamily.D(n)[1],
        }
        for q, val in rows.items():
            w.writerow([n, q, complex(val).real, complex(val).imag])
    w.writerow(["*", "lambda_dot_star", table.lam_dot_star.real, table.lam_dot_star.imag])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_differentials(args) -> int:
    from .differentials import solve_sigma, verify_normalization
    from .spectrum import SpectrumTable, build_isolating, build_table

    cfg = _config_from_args(args)
    v = _load_potential(args.potential)
    n_list = [int(s) for s in args.n_list.split(",")]
    if args.table:
        with open(args.table) as fh:
            table = SpectrumTable.from_json(fh.read())
    else:
        table = build_table(v, min(cfg.n_max, cfg.K), tol=cfg.spectral_tol)
    iso = build_isolating(v, table, nodes=cfg.nodes)
    out_json = []
    csv_rows = []
    for n in n_list:
        if n < 0:
            raise SystemExit2("differentials are solved for n >= 0; use the "
                              "reflected potential for negative indices")
        sol = solve_sigma(
            table, iso, n, cfg.K, tol=cfg.newton_tol, max_iter=cfg.newton_max_iter,
            nodes=cfg.nodes,
        )
        mat, dev = verify_normalization(sol, table, iso, nodes=cfg.nodes + 32)
        out_json.append(json.loads(sol.to_json(normalization_max_dev=dev)))
        for (j, m), val in sorted(mat.items()):
            csv_rows.append([n, j, m, val.real, val.imag,
                             1.0 if (j == 1 and m == n) else 0.0])
    if cfg.out_format == "json":
        _emit(json.dumps(out_json, indent=1), args.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["n", "family", "m", "integral_re", "integral_im", "expected"])
        w.writerows(csv_rows)
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_gradients(args) -> int:
    from .gradients import (
        fd_directional,
        grad_antidiscriminant,
        grad_dirichlet,
        grad_discriminant,
        grad_periodic,
        seeded_directions,
    )
    from .monodromy import integrate
    from .spectrum import _newton_batch, build_table

    cfg = _config_from_args(args)
    v = _load_potential(args.potential)
    table = build_table(v, max(2, min(cfg.n_max, 4)), tol=cfg.spectral_tol)
    dirs = seeded_directions(cfg.seed, 3)
    tol = cfg.spectral_tol
    eps = 1e-4
    rows = []

    def add(quantity, n, analytic_fn, scalar_fn):
        for i, d in enumerate(dirs):
            ana = analytic_fn(d)
            fd = fd_directional(scalar_fn, v, d, eps)
            rel = abs(ana - fd) / max(abs(ana), abs(fd), 1e-8)
            rows.append([quantity, n, i, complex(ana), complex(fd), rel])

    lam = 1.7
    kq, kp = grad_discriminant(v, lam, tol=tol)
    add("Delta", "", lambda d: kq.pair(d) + kp.pair(d),
        lambda vv: complex(integrate(vv, lam, order=0, tol=tol).Delta))
    kqa, kpa = grad_antidiscriminant(v, lam, tol=tol)
    add("delta", "", lambda d: kqa.pair(d) + kpa.pair(d),
        lambda vv: complex(integrate(vv, lam, order=0, tol=tol).delta_anti))
    for n in (0, 1):
        kern, mu = grad_dirichlet(v, n, mu=table.mu_n(n), tol=tol)
        add("mu", n, lambda d, kern=kern: kern.pair(d),
            lambda vv, mu=mu: complex(_newton_batch(vv, [mu], "chi_D", tol=1e-13)[0]))
    if abs(table.gamma(1)) > 1e-6:
        kern, lamp = grad_periodic(v, 1, "+", lam=table.lam_pm(1)[1], tol=tol)
        add("lambda_plus", 1, lambda d, kern=kern: kern.pair(d),
            lambda vv, lamp=lamp: complex(_newton_batch(vv, [lamp], "chi_p", tol=1e-13)[0]))
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["quantity", "n", "direction", "analytic", "fd", "rel_error"])
    for row in rows:
        w.writerow(row[:3] + [str(row[3]), str(row[4]), f"{row[5]:.3e}"])
    _emit(buf.getvalue(), args.out)
    worst = max(r[5] for r in rows)
    return EXIT_OK if worst <= cfg.thresholds["gradient_fd"] else EXIT_CHECK_FAILURE


def cmd_verify(args) -> int:
    from .verification import run_suite

    cfg = _config_from_args(args)
    v = _load_potential(args.potential)
    checks = run_suite(v, cfg)
    if cfg.out_format == "json":
        payload = [
            {
                "check_id": c.check_id,
                "status": c.status,
                "metric": c.metric,
                "threshold": c.threshold,
                "trace": c.convergence_trace,
                "reason": c.reason,
            }
            for c in checks
        ]
        _emit(json.dumps(payload, indent=1), args.out)
    else:
        _emit("\n".join(c.line() for c in checks), args.out)
    failed = any(c.status == "fail" for c in checks)
    return EXIT_CHECK_FAILURE if failed else EXIT_OK


def cmd_eval(args) -> int:
    from .monodromy import integrate
    from .roots_products import CanonicalRootEvaluator
    from .spectrum import build_table

    cfg = _config_from_args(args)
    v = _load_potential(args.potential)
    try:
        re_s, im_s = args.lam.split(",")
        lam = complex(float(re_s), float(im_s))
    except ValueError as exc:
        raise SystemExit2(f"--lambda expects 're,im': {exc}") from exc
    res = integrate(v, lam, order=1, tol=cfg.ode_tol)
    table = build_table(v, 8, tol=cfg.spectral_tol)
    ev = CanonicalRootEvaluator(table, max(cfg.K, 8))
    sqrtc = complex(ev.chip(np.array([lam]))[0])
    payload = {
        "lambda": _c2(lam),
        "Delta": _c2(res.Delta),
        "delta": _c2(res.delta_anti),
        "Delta_dot": _c2(res.Delta_dot),
        "chi_p": _c2(res.chi_p),
        "chi_D": _c2(res.chi_D),
        "sqrtc_chi_p": _c2(sqrtc),
    }
    if cfg.out_format == "json":
        _emit(json.dumps(payload, indent=1), args.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["quantity", "re", "im"])
        for k, val in payload.items():
            w.writerow([k, val[0], val[1]])
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _build_parser():
    p = argparse.ArgumentParser(
        prog="shgspec",
        description="Spectral data, canonical roots and normalized "
        "differentials of the sinh-Gordon Lax operator",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("potential", help="potential JSON file")
        sp.add_argument("--config", help="RunConfig JSON file")
        sp.add_argument("--nmax", type=int)
        sp.add_argument("--K", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--nodes", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=["json", "csv"])

    sp = sub.add_parser("spectrum", help="periodic/Dirichlet spectrum table")
    common(sp)
    sp.set_defaults(fn=cmd_spectrum)

    sp = sub.add_parser("differentials", help="solve the normalization system")
    common(sp)
    sp.add_argument("--n-list", default="0,1,2")
    sp.add_argument("--table", help="inject a spectrum JSON instead of rebuilding")
    sp.set_defaults(fn=cmd_differentials)

    sp = sub.add_parser("gradients", help="gradient kernels vs finite differences")
    common(sp)
    sp.set_defaults(fn=cmd_gradients)

    sp = sub.add_parser("verify", help="run the verification suite")
    common(sp)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("eval", help="monodromy scalars at one lambda")
    common(sp)
    sp.add_argument("--lambda", dest="lam", required=True, help="re,im")
    sp.set_defaults(fn=cmd_eval)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit2 as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (ValueError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
