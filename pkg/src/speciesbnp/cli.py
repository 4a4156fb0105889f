"""Command-line front end.

Subcommands ``summarize``, ``fit``, ``estimate`` and ``simulate``.  Every
command writes one JSON document (or, for ``simulate``, a dataset) and is a
pure function of its input bytes, flags and seed.

Exit codes: 0 success, 2 parse error, 3 model pathology, 4 size guard,
5 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources

import numpy as np

from . import coverage, fit, prevalence, unseen
from .data import SampleSummary, read_sample
from .errors import ParseError, SpeciesError
from .pyp import PypParams, RngStream, sample_labels

SCHEMA_VERSION = "1.0"
_SIG = 12


def load_schema() -> dict:
    """The JSON schema every report validates against."""
    text = resources.files("speciesbnp").joinpath("report.schema.json").read_text()
    return json.loads(text)


def _num(x):
    """Round to 12 significant digits; non-finite values become ``None``."""
    if x is None:
        return None
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.{_SIG}g}")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (str, type(None))):
        return obj
    return _num(obj)


def _input_block(summary: SampleSummary, fmt: str) -> dict:
    return {"format": fmt, "n": summary.n, "k": summary.k, "fingerprint_sha256": summary.digest()}


def _envelope(command, summary=None, fmt=None, **fields) -> dict:
    env = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "input": _input_block(summary, fmt) if summary is not None else None,
        "params": None,
        "estimate": None,
        "ci": None,
        "posterior": None,
        "diagnostics": {},
        "seed": None,
    }
    env.update(fields)
    return env


def _posterior_block(post: unseen.DiscretePosterior) -> dict:
    return {
        "support_max": len(post.log_pmf) - 1,
        "log_pmf": list(post.log_pmf),
        "mean": post.mean,
        "provenance": post.provenance,
        "method": post.method,
        "replicates": post.replicates,
        "std_error": post.std_error,
    }


def _read_input(path: str, fmt: str) -> SampleSummary:
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path!r}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ParseError(f"{path!r} is not valid UTF-8") from None
    try:
        return read_sample(text, fmt)
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=False, allow_nan=False) + "\n"


# -- commands ---------------------------------------------------------------


def cmd_summarize(args) -> dict:
    s = _read_input(args.input, args.format)
    return _envelope(
        "summarize",
        s,
        args.format,
        n=s.n,
        k=s.k,
        fingerprint={str(r): m for r, m in s.fingerprint.items()},
    )


def _fit_block(rep: fit.FitReport) -> dict:
    out = {
        "alpha_hat": rep.alpha_hat,
        "theta_hat": rep.theta_hat,
        "gamma_hat": rep.gamma_hat,
        "alpha_profile": rep.alpha_profile,
        "observed_info": rep.observed_info,
        "log_lik_at_max": rep.log_lik_at_max,
        "L_hat": rep.L_hat,
        "theta_star_hat": rep.theta_star_hat,
        "method": rep.method,
    }
    return out


def _run_fit(s: SampleSummary, method: str, args=None) -> fit.FitReport:
    if method == "mle":
        return fit.mle_profile(s)
    if method == "joint":
        return fit.mle_joint(s)
    if method == "hb":
        pa = fit.parse_prior_alpha(args.prior_alpha)
        pg = fit.parse_prior_gamma(args.prior_gamma)
        grid = fit.hierarchical_posterior(
            s,
            prior_alpha=pa,
            prior_gamma=pg,
            alpha_grid_size=args.alpha_grid,
            gamma_grid_size=args.gamma_grid,
            gamma_max=args.gamma_max,
        )
        base = fit.mle_profile(s)
        summ = grid.summary()
        return fit.FitReport(
            alpha_hat=summ["alpha_mean"],
            theta_hat=summ["theta_mean"],
            log_lik_at_max=base.log_lik_at_max,
            observed_info=base.observed_info,
            method="hierarchical",
            L_hat=base.L_hat,
            theta_star_hat=base.theta_star_hat,
            alpha_profile=base.alpha_profile,
            diagnostics=summ,
            grid=grid,
        )
    raise ValueError(f"unknown fit method {method!r}")


def cmd_fit(args) -> dict:
    s = _read_input(args.input, args.format)
    try:
        rep = _run_fit(s, args.method, args)
    except ValueError as exc:
        if isinstance(exc, SpeciesError):
            raise
        raise ParseError(str(exc)) from None
    diag = dict(rep.diagnostics)
    if args.method == "hb":
        diag["prior_alpha"] = rep.grid.prior_alpha.spec()
        diag["prior_gamma"] = rep.grid.prior_gamma.spec()
        diag["alpha_grid_size"] = int(rep.grid.alpha_grid.size)
        diag["gamma_grid_size"] = int(rep.grid.gamma_grid.size)
    return _envelope(
        "fit",
        s,
        args.format,
        params={"alpha": rep.alpha_hat, "theta": rep.theta_hat, "method": rep.method},
        fit=_fit_block(rep),
        diagnostics=diag,
    )


def _params_for(args, s) -> tuple[PypParams, str, dict | None]:
    if args.fit:
        rep = _run_fit(s, args.fit)
        return PypParams(rep.alpha_hat, rep.theta_hat), rep.method, _fit_block(rep)
    if args.alpha is None or args.theta is None:
        raise ParseError("give both --alpha and --theta, or --fit")
    try:
        return PypParams(args.alpha, args.theta), "fixed", None
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def _need(value, flag, target):
    if value is None:
        raise ParseError(f"--target {target} requires {flag}")
    return value


def cmd_estimate(args) -> dict:
    s = _read_input(args.input, args.format)
    target, method = args.target, args.method
    level = args.level
    if not 0 < level < 1:
        raise ParseError("--level must lie in (0, 1)")
    if args.mc_samples < 1:
        raise ParseError("--mc-samples must be positive")
    stochastic = method == "mc"
    env = _envelope("estimate", s, args.format, target=target, seed=args.seed if stochastic else None)
    diag = env["diagnostics"]

    if method == "gt":
        if target == "coverage":
            r = _need(args.r, "--r", target)
            env["estimate"] = coverage.good_turing(s, r)
            if s.m(r + 1) == 0:
                diag["zero_count_warning"] = True
        elif target == "unseen":
            m = _need(args.m, "--m", target)
            est = unseen.good_toulmin(s, m) if args.r is None else unseen.good_toulmin_order_r(s, m, args.r)
            env["estimate"] = float(est)
            diag.update(lam=est.lam, lambda_ge_1_warning=est.unstable)
        else:
            m, r = _need(args.m, "--m", target), _need(args.r, "--r", target)
            est = prevalence.thisted_efron(s, m, r)
            env["estimate"] = float(est)
            diag.update(lam=est.lam, lambda_ge_1_warning=est.unstable)
        env["params"] = {"alpha": None, "theta": None, "method": "frequentist"}
        return env

    params, how, fit_block = _params_for(args, s)
    env["params"] = {"alpha": params.alpha, "theta": params.theta, "method": how}
    if fit_block is not None:
        env["fit"] = fit_block

    if target == "coverage":
        r = _need(args.r, "--r", target)
        if method != "exact":
            raise ParseError("coverage supports --method exact or gt")
        post = coverage.posterior(params, s, r)
        lo, hi = coverage.credible_interval(post, level)
        env["estimate"] = coverage.estimate(params, s, r)
        env["ci"] = {"lo": lo, "hi": hi, "level": level}
        diag.update(shape1=post.shape1, shape2=post.shape2, degenerate=post.degenerate)
        if params.alpha > 0:
            diag["smoothed_good_turing"] = coverage.smoothed_gap(params, s, r)
        return env

    m = _need(args.m, "--m", target)
    if target == "unseen":
        if method == "exact":
            if args.r is not None:
                raise ParseError("the order-r unseen count has no exact path; use --method mc")
            post = unseen.posterior_exact(params, s, m)
            env["estimate"] = unseen.estimator(params, s, m)
        elif method == "mc":
            rng = RngStream(args.seed)
            if args.r is None:
                post = unseen.posterior_mc(params, s, m, args.mc_samples, rng, args.threads)
            else:
                post = unseen.posterior_mc_order_r(params, s, m, args.r, args.mc_samples, rng, args.threads)
            env["estimate"] = post.mean
        else:
            raise ParseError("unseen supports --method exact, mc or gt")
    else:
        r = _need(args.r, "--r", target)
        if s.m(r) == 0:
            env["estimate"] = 0.0
            env["ci"] = {"lo": 0, "hi": 0, "level": level}
            diag["no_species_at_r"] = True
            return env
        if method == "exact":
            post = prevalence.posterior_exact(params, s, m, r)
            env["estimate"] = prevalence.estimator(params, s, m, r)
        elif method == "mc":
            post = prevalence.posterior_mc(params, s, m, r, args.mc_samples, RngStream(args.seed), args.threads, args.path)
            env["estimate"] = post.mean
        elif method == "approx":
            post = prevalence.posterior_binomial_approx(params, s, m, r)
            env["estimate"] = post.mean
        else:
            raise ParseError("unknown method")
    lo, hi = unseen.credible_interval(post, level)
    env["ci"] = {"lo": lo, "hi": hi, "level": level}
    env["posterior"] = _posterior_block(post)
    return env


def cmd_simulate(args) -> tuple[dict, str]:
    try:
        params = PypParams(args.alpha, args.theta)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    if args.n < 1:
        raise ParseError("--n must be at least 1")
    labels = sample_labels(params, args.n, RngStream(args.seed))
    if args.emit == "labels":
        data = "".join(f"sp{j}\n" for j in labels.tolist())
    else:
        s = SampleSummary.from_frequencies(np.bincount(labels).tolist())
        data = "r,m_r\n" + "".join(f"{r},{m}\n" for r, m in s.fingerprint.items())
    counts = np.bincount(labels)
    env = _envelope(
        "simulate",
        params={"alpha": params.alpha, "theta": params.theta, "method": "fixed"},
        seed=args.seed,
        n=int(args.n),
        k=int(counts.size),
        emit=args.emit,
    )
    return env, data


# -- parser -----------------------------------------------------------------


def _add_input(p):
    p.add_argument("input", help="input file, or '-' for stdin")
    p.add_argument(
        "--format",
        choices=["labels", "counts", "fingerprint"],
        default="labels",
        help="labels: one token per line; counts: CSV label,count; fingerprint: CSV r,m_r",
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write to this path instead of stdout")
    common.add_argument("--threads", type=int, default=1, help="worker threads for Monte Carlo")
    p = argparse.ArgumentParser(prog="speciesbnp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("summarize", parents=[common], help="sample size, species count and fingerprint")
    _add_input(ps)

    pf = sub.add_parser("fit", parents=[common], help="estimate (alpha, theta)")
    _add_input(pf)
    pf.add_argument("--method", choices=["mle", "joint", "hb"], default="mle")
    pf.add_argument("--prior-alpha", default="uniform", help="uniform | beta:a,b")
    pf.add_argument("--prior-gamma", default="exp:1", help="exp:rate | gamma:shape,rate | flat")
    pf.add_argument("--alpha-grid", type=int, default=400)
    pf.add_argument("--gamma-grid", type=int, default=400)
    pf.add_argument("--gamma-max", type=float, default=20.0)

    pe = sub.add_parser("estimate", parents=[common], help="posterior estimates with credible intervals")
    _add_input(pe)
    pe.add_argument("--target", choices=["coverage", "unseen", "prevalence"], required=True)
    pe.add_argument("--r", type=int)
    pe.add_argument("--m", type=int)
    pe.add_argument("--alpha", type=float)
    pe.add_argument("--theta", type=float)
    pe.add_argument("--fit", nargs="?", const="mle", choices=["mle", "joint"], help="fit (alpha, theta) first")
    pe.add_argument("--method", choices=["exact", "mc", "approx", "gt"], default="exact")
    pe.add_argument("--path", choices=["auto", "compound", "forward"], default="auto")
    pe.add_argument("--mc-samples", type=int, default=100_000)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--level", type=float, default=0.95)

    pm = sub.add_parser("simulate", parents=[common], help="draw a sample from PYP(alpha, theta)")
    pm.add_argument("--alpha", type=float, required=True)
    pm.add_argument("--theta", type=float, required=True)
    pm.add_argument("--n", type=int, required=True)
    pm.add_argument("--seed", type=int, default=0)
    pm.add_argument("--emit", choices=["labels", "fingerprint"], default="labels")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be positive")
    try:
        if args.command == "simulate":
            env, data = cmd_simulate(args)
            if args.output:
                _emit(data, args.output)
                sys.stdout.write(_dump(env))
            else:
                sys.stdout.write(data)
            return 0
        handler = {"summarize": cmd_summarize, "fit": cmd_fit, "estimate": cmd_estimate}[args.command]
        _emit(_dump(handler(args)), args.output)
        return 0
    except SpeciesError as exc:
        print(f"speciesbnp: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"speciesbnp: error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"speciesbnp: numerical error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
