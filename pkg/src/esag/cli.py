"""Command-line interface: ``esag fit | simulate | gof | simstudy``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence failure.
"""
from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
import sys

import numpy as np

from .data import read_table, sidecar_path, sqrt_compose, unit_rows, write_table
from .diagnostics import gof_test
from .errors import EsagError, InvalidParameterError, OptimizationError
from .fit import FitOptions, bootstrap_se, fit_mle
from .param import OmegaParams, ag_moments, omega_to_moments
from .sampling import SeededRng, sample_esag
from .simstudy import StudyConfig, reports_csv, reports_json, run_config, table1

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 1, 2, 3

log = logging.getLogger("esag")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _tolist(x) -> list:
    return np.asarray(x, dtype=float).tolist()


def _fit_json(res, seed: int | None = None) -> dict:
    out = {"mu": _tolist(res.omega.mu), "gamma": _tolist(res.omega.gamma),
           "V": _tolist(res.moments.V), "lambda": _tolist(res.moments.lam),
           "loglik": res.loglik, "converged": res.converged,
           "iterations": res.iterations, "grad_norm": res.grad_norm}
    if seed is not None:
        out["seed"] = seed
    return out


def _emit(obj: dict, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_directions(args) -> np.ndarray:
    X, _ = read_table(args.input)
    if args.sqrt_compose:
        X = sqrt_compose(X)
    return unit_rows(X, normalize=args.normalize)


def _options(args) -> FitOptions:
    return FitOptions(max_iter=args.max_iter, gtol=args.gtol)


def cmd_fit(args) -> int:
    Y = _load_directions(args)
    res = fit_mle(Y, _options(args))
    out = _fit_json(res, args.seed if args.bootstrap else None)
    out["n"], out["d"] = Y.shape
    if args.bootstrap:
        bs = bootstrap_se(Y, args.bootstrap, SeededRng(args.seed), _options(args), args.threads)
        out["bootstrap"] = {"B": bs.B, "dropped": bs.dropped, "mu_se": _tolist(bs.mu_se),
                            "lambda_se": _tolist(bs.lam_se), "V_dispersion": bs.V_dispersion}
    _emit(out, args.output)
    return EXIT_OK if res.converged else EXIT_CONVERGENCE


def _simulation_params(args) -> dict:
    params = {}
    if args.params:
        params = json.loads(Path(args.params).read_text(encoding="utf-8"))
        if not isinstance(params, dict):
            raise UsageError("parameter file must hold a JSON object")
    for key in ("mu", "gamma", "V"):
        val = getattr(args, key)
        if val is not None:
            params[key] = val
    if "mu" not in params:
        raise UsageError("simulation needs mu (via --mu or --params)")
    if "gamma" in params and "V" in params:
        raise UsageError("give gamma (ESAG mode) or V (AG mode), not both")
    mu = np.asarray(params["mu"], dtype=float)
    d = int(params.get("d", mu.size))
    if mu.size != d:
        raise InvalidParameterError(f"mu has {mu.size} entries but d={d}")
    params["d"] = d
    return params


def cmd_simulate(args) -> int:
    params = _simulation_params(args)
    mu = np.asarray(params["mu"], dtype=float)
    d = params["d"]
    if "V" in params:
        V = np.asarray(params["V"], dtype=float).reshape(d, d)
        if not np.allclose(V, V.T):
            raise InvalidParameterError("V must be symmetric")
        lam, vec = np.linalg.eigh(V)
        if np.any(lam <= 0):
            raise InvalidParameterError("V must be positive definite")
        if not np.any(mu):
            raise InvalidParameterError("mu must be nonzero")
        moments = ag_moments(mu, lam, vec)
        echo = {"mode": "AG", "d": d, "mu": _tolist(mu), "V": _tolist(V)}
    else:
        gamma = np.asarray(params.get("gamma", np.zeros((d - 2) * (d + 1) // 2)), dtype=float)
        moments = omega_to_moments(OmegaParams(mu, gamma))
        echo = {"mode": "ESAG", "d": d, "mu": _tolist(mu), "gamma": _tolist(gamma),
                "V": _tolist(moments.V), "lambda": _tolist(moments.lam)}
    Y = sample_esag(moments, args.n, SeededRng(args.seed))
    write_table(args.output, Y, [f"y{j + 1}" for j in range(d)])
    echo.update(n=args.n, seed=args.seed)
    _emit(echo, str(sidecar_path(args.output)))
    return EXIT_OK


def cmd_gof(args) -> int:
    Y = _load_directions(args)
    res = gof_test(Y, args.B, SeededRng(args.seed), _options(args), args.threads)
    out = _fit_json(res.fit, args.seed)
    out.update(p_value=res.p_value, ks_p=res.ks_p, ks_stat=res.ks_stat, B=res.B,
               dropped=res.dropped, n=Y.shape[0], d=Y.shape[1])
    qq_path = args.qq or str(Path(args.input).with_suffix("")) + ".qq.csv"
    write_table(qq_path, res.qq, ["t1_observed", "t1_reference"])
    out["qq"] = qq_path
    _emit(out, args.output)
    return EXIT_OK


def cmd_simstudy(args) -> int:
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed config: {exc}") from None
    try:
        cfg = StudyConfig.from_dict(raw)
    except (InvalidParameterError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed config: {exc}") from None
    if args.seed is not None:
        cfg.seed = args.seed
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    reports = run_config(cfg, threads=args.threads)
    for kind in sorted({r.scenario.kind for r in reports}):
        sub = [r for r in reports if r.scenario.kind == kind]
        (outdir / f"{kind}.csv").write_text(reports_csv(sub), encoding="utf-8")
    (outdir / "summary.json").write_text(reports_json(reports, cfg), encoding="utf-8")
    (outdir / "table.tsv").write_text(table1(reports, cfg.levels[0]), encoding="utf-8")
    log.info("total runtime %.1fs", sum(r.runtime for r in reports))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="esag", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, data=True):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        if data:
            p.add_argument("input")
            p.add_argument("--sqrt-compose", action="store_true",
                           help="take component-wise square roots of compositions")
            p.add_argument("--normalize", action="store_true",
                           help="rescale rows to unit length instead of rejecting them")
            p.add_argument("--max-iter", type=int, default=FitOptions.max_iter)
            p.add_argument("--gtol", type=float, default=FitOptions.gtol)
            p.add_argument("-o", "--output", default=None, help="JSON output (default stdout)")

    p = sub.add_parser("fit", help="maximum-likelihood fit of a CSV of directions")
    common(p)
    p.add_argument("--bootstrap", type=int, default=0, metavar="B")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="draw an ESAG (or AG) sample to CSV")
    common(p, data=False)
    p.add_argument("--params", help="JSON file with d, mu and gamma (or V)")
    p.add_argument("--mu", type=_floats, help="comma list; write --mu=-1,2,3 if it starts with '-'")
    p.add_argument("--gamma", type=_floats, help="grouped comma list (same '=' rule)")
    p.add_argument("--V", type=_floats, help="row-major covariance (AG mode)")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gof", help="bootstrap goodness-of-fit test")
    common(p)
    p.add_argument("-B", type=int, default=200)
    p.add_argument("--qq", help="QQ CSV path (default <input>.qq.csv)")
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("simstudy", help="Monte Carlo rejection-rate study")
    p.add_argument("config")
    p.add_argument("output_dir")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_simstudy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
        parser.error("-n must be positive")
    if getattr(args, "B", 1) < 1:
        parser.error("-B must be positive")
    if args.command == "fit" and args.bootstrap == 1:
        parser.error("--bootstrap needs B >= 2")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"esag: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OptimizationError as exc:
        print(f"esag: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (EsagError, OSError) as exc:
        print(f"esag: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
