"""Command-line entry point: ``wimanlab <command> [options]``.

Exit status is 0 on success, 2 when a result had to be truncated to the
memory budget (the output still records the truncation), 1 on error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import bounds, experiments, measure, series, signs, torus
from .errors import WimanError

EXIT_OK, EXIT_ERROR, EXIT_TRUNCATED = 0, 1, 2


def _emit(args, text: str):
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def _rule(args) -> series.CoefficientRule:
    if getattr(args, "table", None):
        return series.CoefficientRule.from_json(Path(args.table).read_text())
    kind = series.canonical_kind(args.rule)
    if kind == "PowerExp":
        if args.epsilon is None:
            raise ValueError("--epsilon is required for PowerExp")
        return series.CoefficientRule.power_exp(args.epsilon)
    if kind == "Geometric":
        return series.CoefficientRule.geometric(args.p)
    if kind == "ProductSqrtHalf":
        return series.CoefficientRule.product_sqrt_half(args.p)
    if kind == "SqrtHalf":
        return series.CoefficientRule.sqrt_half()
    if kind == "Sqrt":
        return series.CoefficientRule.sqrt()
    raise ValueError("Table rules are read with --table FILE")


def _radius(args, p: int) -> series.RadiusVector:
    if args.r is not None:
        r = series.RadiusVector.of(*args.r)
    elif args.k is not None:
        r = series.RadiusVector.dyadic(args.k, p)
    else:
        raise ValueError("give --r R [R ...] or --k K")
    if r.p != p:
        raise ValueError(f"radius has {r.p} components, rule has p={p}")
    return r


def _grid(args) -> torus.TorusGridSpec:
    g = torus.TorusGridSpec(oversample=args.oversample)
    if args.budget_mb is not None:
        g = replace(g, max_entries=experiments.entries_for_budget(args.budget_mb))
    return g


def _sign_model(args) -> signs.SignModel:
    return signs.SignModel(args.signs, args.seed)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_maxterm(args):
    rule = _rule(args)
    r = _radius(args, rule.p)
    mt = series.maximal_term(rule, r)
    _emit(args, _json({"r": list(r.radii), "ln_mu": mt.ln_mu, "argmax": list(mt.argmax)}))


def cmd_summod(args):
    rule = _rule(args)
    r = _radius(args, rule.p)
    _emit(args, _json({"r": list(r.radii), "ln_frak": series.sum_modulus(rule, r)}))


def cmd_maxmod(args):
    rule = _rule(args)
    r = _radius(args, rule.p)
    trunc, grid = experiments.plan_for_budget(rule, r, args.delta, _grid(args))
    real = signs.realize_signs(_sign_model(args), args.realization)
    res = torus.torus_max(rule, real, r, trunc, grid)
    out = res.to_dict()
    out.update(r=list(r.radii), truncation=trunc.to_dict(), oversample=grid.oversample)
    _emit(args, _json(out))
    return EXIT_TRUNCATED if trunc.budget_clamped else EXIT_OK


def _sweep_config(args) -> experiments.SweepConfig:
    rule = _rule(args)
    k_max = args.k_max if args.k_max is not None else (10 if rule.p == 1 else 6)
    return experiments.SweepConfig(
        rule=rule,
        sign_model=_sign_model(args),
        delta=args.delta,
        k_min=args.k_min,
        k_max=k_max,
        realizations=args.realizations,
        grid=_grid(args),
        workers=args.workers,
        output_path=args.out,
    )


def cmd_sweep(args):
    cfg = _sweep_config(args)
    rows = experiments.run_sweep(cfg)
    text = experiments.rows_to_csv(rows, cfg.p)
    if args.long_out:
        Path(args.long_out).write_text(experiments.realizations_to_csv(rows))
    _emit(args, text)
    return EXIT_TRUNCATED if any(r.budget_truncated for r in rows) else EXIT_OK


def cmd_levy(args):
    cfg = _sweep_config(args)
    res = experiments.levy_experiment(cfg)
    out = res.to_dict()
    out["config"] = cfg.to_dict()
    _emit(args, _json(out))
    return EXIT_TRUNCATED if out["budget_truncated"] else EXIT_OK


def cmd_sz_tail(args):
    grid = _grid(args)
    rows = signs.sz_tail_experiment(args.coeff, _sign_model(args), args.N, args.A, args.trials, args.p, grid)
    _emit(args, signs.tail_rows_to_csv(rows))


def cmd_deriv_check(args):
    rule = _rule(args)
    r = _radius(args, rule.p)
    chk = bounds.log_derivative_check(rule, r, args.axis, args.delta, args.h)
    _emit(args, _json({"r": list(r.radii), "axis": args.axis, "delta": args.delta, **chk._asdict()}))


def _interval_args(args, p: int):
    lo = args.lo if len(args.lo) == p else args.lo * p
    hi = args.hi if len(args.hi) == p else args.hi * p
    return measure.Box(tuple(lo), tuple(hi))


def cmd_logmeasure_box(args):
    box = _interval_args(args, max(len(args.lo), len(args.hi)))
    _emit(args, _json({"lo": list(box.lo), "hi": list(box.hi), "value": measure.box_log_measure(box)}))


def cmd_logmeasure_region(args):
    """Region where ``ln M_frak(r)`` exceeds the chosen upper functional."""
    rule = _rule(args)
    form = bounds.BoundForm(args.form)
    if form.lower:
        raise ValueError("region estimation uses an upper form")
    params = bounds.BoundParams(args.delta)
    box = _interval_args(args, rule.p)

    def violated(r):
        ln_mu = series.maximal_term(rule, r, verify=False).ln_mu
        return series.sum_modulus(rule, r) > bounds.wiman_functional(form, params, ln_mu, r)

    est = measure.region_log_measure(violated, box, args.cells)
    _emit(args, _json({**est.to_dict(), "form": form.value, "lo": list(box.lo), "hi": list(box.hi)}))


def cmd_logmeasure_estar(args):
    est = measure.estar_log_measure(args.t_star, args.upper, args.cells, args.p)
    _emit(args, _json({**est.to_dict(), "t_star": args.t_star, "upper": args.upper, "p": args.p}))


def cmd_sharpness_check_2s(args):
    if args.t is not None:
        ts = [(None, t) for t in args.t]
    else:
        ts = [(k, 1.0 - 2.0**-k) for k in range(args.k_min, args.k_max + 1)]
    rows = []
    for k, t in ts:
        chk = measure.check_2s(t, args.tol)
        rows.append({"k": k, "t": t, **chk._asdict()})
    _emit(args, _json({"rows": rows, "all_hold": all(r["holds"] for r in rows)}))


def cmd_sharpness_g(args):
    out = {}
    if args.t is not None:
        out["g"] = [{"t": t, "g": measure.g_eval(t)} for t in args.t]
    if args.v is not None:
        out["g_inverse"] = [{"v": v, "t": measure.g_inverse(v, args.tol)} for v in args.v]
    if not out:
        raise ValueError("give --t T [T ...] and/or --v V [V ...]")
    _emit(args, _json(out))


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file of option defaults (keys are flag names)")
    p.add_argument("--out", help="write output here instead of stdout")


def _rule_opts(p):
    p.add_argument("--rule", default="SqrtHalf", help="Geometric, PowerExp, SqrtHalf, Sqrt, ProductSqrtHalf")
    p.add_argument("--epsilon", type=float, help="exponent for PowerExp")
    p.add_argument("--p", type=int, default=1, help="dimension for Geometric / ProductSqrtHalf")
    p.add_argument("--table", help="JSON file with a Table rule (overrides --rule)")


def _radius_opts(p):
    p.add_argument("--r", type=float, nargs="+", help="radius components")
    p.add_argument("--k", type=float, help="diagonal dyadic radius 1 - 2^-k")


def _sign_opts(p):
    p.add_argument("--signs", default="Rademacher", help="Rademacher, UnitPhase or PlusOnly")
    p.add_argument("--seed", type=int, default=0)


def _grid_opts(p):
    p.add_argument("--oversample", type=int, default=4)
    p.add_argument("--budget-mb", type=float, help="memory cap for the padded FFT array")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="wimanlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    leaves: dict[tuple[str, ...], argparse.ArgumentParser] = {}

    def leaf(path, sp, func, help_):
        p = sp.add_parser(path[-1], help=help_)
        _common(p)
        p.set_defaults(func=func, path=path)
        leaves[path] = p
        return p

    p = leaf(("maxterm",), sub, cmd_maxterm, "maximal term mu_f(r)")
    _rule_opts(p), _radius_opts(p)

    p = leaf(("summod",), sub, cmd_summod, "sum of |a_n| r^n")
    _rule_opts(p), _radius_opts(p)

    p = leaf(("maxmod",), sub, cmd_maxmod, "maximum modulus of one sign realisation on the torus")
    _rule_opts(p), _radius_opts(p), _sign_opts(p), _grid_opts(p)
    p.add_argument("--realization", type=int, default=0)
    p.add_argument("--delta", type=float, default=0.25)

    for name, func, help_ in (
        ("sweep", cmd_sweep, "dyadic radius sweep (CSV)"),
        ("levy", cmd_levy, "paired deterministic / random sweep with slopes and their ratio"),
    ):
        p = leaf((name,), sub, func, help_)
        _rule_opts(p), _sign_opts(p), _grid_opts(p)
        p.add_argument("--delta", type=float, default=0.25)
        p.add_argument("--k-min", type=int, default=4)
        p.add_argument("--k-max", type=int, help="default 10 for p=1, 6 for p>=2")
        p.add_argument("--realizations", type=int, default=32 if name == "levy" else 1)
        p.add_argument("--workers", type=int, default=1)
        if name == "sweep":
            p.add_argument("--long-out", help="also write one line per (k, realisation) here")

    p = leaf(("sz-tail",), sub, cmd_sz_tail, "random trigonometric polynomial tail experiment (CSV)")
    _sign_opts(p), _grid_opts(p)
    p.add_argument("--coeff", type=float, default=1.0, help="constant coefficient modulus c_n")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--N", type=int, nargs="+", default=[64, 256, 1024])
    p.add_argument("--A", type=float, nargs="+", default=[1 + 0.5 * i for i in range(15)])
    p.add_argument("--trials", type=int, default=1000)

    p = leaf(("deriv-check",), sub, cmd_deriv_check, "finite-difference log-derivative diagnostic")
    _rule_opts(p), _radius_opts(p)
    p.add_argument("--axis", type=int, default=0)
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--h", type=float)

    lm = sub.add_parser("logmeasure", help="logarithmic measure").add_subparsers(dest="which", required=True)
    p = leaf(("logmeasure", "box"), lm, cmd_logmeasure_box, "closed-form box measure")
    p.add_argument("--lo", type=float, nargs="+", required=True)
    p.add_argument("--hi", type=float, nargs="+", required=True)
    p = leaf(("logmeasure", "region"), lm, cmd_logmeasure_region,
             "grid estimate of where sum |a_n| r^n exceeds a functional")
    _rule_opts(p)
    p.add_argument("--form", default="PolyDet")
    p.add_argument("--delta", type=float, default=0.25)
    p.add_argument("--lo", type=float, nargs="+", default=[0.5])
    p.add_argument("--hi", type=float, nargs="+", default=[0.999])
    p.add_argument("--cells", type=int, default=64)
    p = leaf(("logmeasure", "estar"), lm, cmd_logmeasure_estar, "measure of the sharpness set below upper")
    p.add_argument("--t-star", type=float, default=0.98)
    p.add_argument("--upper", type=float, default=1 - 2.0**-14)
    p.add_argument("--cells", type=int, default=16)
    p.add_argument("--p", type=int, default=2)

    sh = sub.add_parser("sharpness", help="sharpness profile g").add_subparsers(dest="which", required=True)
    p = leaf(("sharpness", "check-2s"), sh, cmd_sharpness_check_2s, "two-sided gap inequality")
    p.add_argument("--t", type=float, nargs="+")
    p.add_argument("--k-min", type=int, default=7)
    p.add_argument("--k-max", type=int, default=14)
    p.add_argument("--tol", type=float, default=1e-10)
    p = leaf(("sharpness", "g"), sh, cmd_sharpness_g, "evaluate g or its inverse")
    p.add_argument("--t", type=float, nargs="+")
    p.add_argument("--v", type=float, nargs="+")
    p.add_argument("--tol", type=float, default=1e-10)
    return parser, leaves


def parse_args(argv=None) -> argparse.Namespace:
    parser, leaves = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = experiments.config_from_json(Path(args.config).read_text())
        known = {a.dest for a in leaves[args.path]._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            parser.error(f"unknown config keys for {' '.join(args.path)}: {', '.join(unknown)}")
        # command-line flags win over the config file
        leaves[args.path].set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        code = args.func(args)
    except (WimanError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
