"""Command-line front end: ``truchet {render,trace,collapse,renorm,limit,mc}``.

Options may also come from a flat ``key = value`` file passed with
``--config``; keys are option names with dashes or underscores, and flags on
the command line win.  Exit status is 0 on success, 1 on domain errors and 2
on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import cocycle
from .collapse import (
    CollapseError,
    collapse,
    collapsibility,
    renormalization_report,
    repeated_renormalize,
)
from .dynamics import State, trace
from .montecarlo import (
    MeasureSpec,
    closed_fraction_report,
    estimate_p4_joint,
    estimate_return_times,
    estimate_step_measures,
    estimate_transport,
    sample_state,
)
from .render import InvalidViewport, Viewport, render_tiling
from .sequences import Sequence, sample_markov


class UsageError(Exception):
    pass


def _normal(text: str) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {text!r}") from exc
    return a, b


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(" ", "").split(",") if t]


def _flag(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` pairs; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, val = (t.strip() for t in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


# ---------------------------------------------------------------------------
# shared options


def _add_pair_options(sp, with_v: bool = True) -> None:
    sp.add_argument("--omega", help="literal for omega, e.g. '−+^+−−' (tails repeat '+')")
    sp.add_argument("--omega-prime", help="literal for omega'")
    sp.add_argument("--p", type=float, help="persistence of a Markov omega")
    sp.add_argument("--q", type=float, help="persistence of a Markov omega'")
    sp.add_argument("--measure", choices=["markov", "bernoulli", "constant"], help="law of random components")
    sp.add_argument("--seed", type=int)
    if with_v:
        sp.add_argument("--v", type=_normal, help="inward normal 'a,b' at the origin square")


def _state(args) -> State:
    """The state named by literals, or sample 0 of the seeded measure."""
    needs_random = args.omega is None or args.omega_prime is None
    if needs_random:
        _require_seed(args)
        spec = MeasureSpec(args.measure or "markov", args.p if args.p is not None else 0.5, args.q if args.q is not None else 0.5)
        x = sample_state(spec, args.seed, 0)
    w = Sequence.from_literal(args.omega) if args.omega is not None else x.omega
    wp = Sequence.from_literal(args.omega_prime) if args.omega_prime is not None else x.omega_prime
    v = args.v if getattr(args, "v", None) else (x.v if needs_random else (1, 0))
    return State(w, wp, v)


def _require_seed(args) -> None:
    if args.seed is None:
        raise UsageError("--seed is required for stochastic input")


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_render(args) -> None:
    st = _state(args)
    vp = Viewport(args.x0, args.y0, args.width, args.height)
    svg = render_tiling(
        st.omega,
        st.omega_prime,
        vp,
        highlight=args.highlight,
        budget=args.budget,
        shade=_flag(args.shade),
        dividing_lines=_flag(args.dividing_lines),
        scale=args.scale,
    )
    _emit(args, svg)


def cmd_trace(args) -> None:
    st = _state(args)
    res = trace(st, args.budget, record=_flag(args.visited))
    rec = res.to_record()
    rec["initial_normal"] = list(st.v)
    rec["final_normal"] = list(res.final_normal)
    if _flag(args.visited):
        rec["visited"] = res.visited.tolist()
    _emit(args, json.dumps(rec) + "\n")


def cmd_collapse(args) -> None:
    if args.omega is not None:
        w = Sequence.from_literal(args.omega)
    else:
        _require_seed(args)
        w = sample_markov(args.p if args.p is not None else 0.5, args.seed)
    col = collapsibility(w, args.horizon)
    cw = collapse(w, args.horizon)
    lo, hi = args.lo, args.hi
    rec = {
        "omega": w.literal(lo, hi + 1),
        "zero_collapsible": col.zero,
        "unbounded": str(col.unbounded),
        "collapsed": cw.eta.literal(lo, hi + 1),
        "kept_indices": {str(i): int(k) for i, k in zip(range(lo, hi + 1), cw.kept_indices(lo, hi))},
        "insertion_counts": {str(i): cw.rule(i) for i in range(lo, hi + 1)},
    }
    _emit(args, json.dumps(rec) + "\n")


def cmd_renorm(args) -> None:
    runs = []
    if args.samples > 1:
        _require_seed(args)
        spec = MeasureSpec(args.measure or "markov", args.p if args.p is not None else 0.5, args.q if args.q is not None else 0.5)
        for i in range(args.samples):
            runs.append(repeated_renormalize(sample_state(spec, args.seed, i), args.depth, args.horizon, args.budget))
    else:
        runs.append(repeated_renormalize(_state(args), args.depth, args.horizon, args.budget, track_period=True))
    rep = renormalization_report(runs)
    rep.update(params={"depth": args.depth, "horizon": args.horizon, "budget": args.budget, "seed": args.seed})
    if args.samples <= 1:
        rep["levels_detail"] = [lv.to_dict() for lv in runs[0]]
    _emit(args, json.dumps(rep) + "\n")


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def cmd_limit(args) -> None:
    exact = not _flag(args.float)
    kmax = args.kmax
    if exact:
        m, n = Fraction(args.m).limit_denominator(), Fraction(args.n).limit_denominator()
        if m.denominator != 1 or n.denominator != 1:
            raise UsageError("exact evaluation needs integer --m and --n; pass --float otherwise")
        m, n = int(m), int(n)
    else:
        m, n = args.m, args.n
    nu = _nu_sequence(m, n, kmax, exact)
    l11 = [None] + list(cocycle.L11_sequence(kmax, exact))
    gam = cocycle.gamma_sequence(kmax, exact)
    rows = [["k", "nu_On", "L11_partial", "gamma", "s_k"]]
    for k in range(kmax + 1):
        rows.append([str(k), _fmt(nu[k]), _fmt(l11[k]), _fmt(gam[k]), _fmt(cocycle.s_k(k) if k >= 1 else None)])
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    _emit(args, buf.getvalue())


def _nu_sequence(m, n, kmax: int, exact: bool):
    if exact:
        return cocycle.nu_On_sequence(m, n, kmax, exact=True)
    # float path accepting real m, n
    u = np.ones(6)
    out = []
    for k in range(kmax + 1):
        p, q = (m + k) / (m + k + 1), (n + k) / (n + k + 1)
        out.append(m * n / ((m + k) * (n + k)) * np.dot(cocycle.step_measure_vector(p, q), u))
        u = cocycle.matrix_Mpq(p, q).dot(u)
    return out


def cmd_mc(args) -> None:
    _require_seed(args)
    p = args.p if args.p is not None else 0.5
    q = args.q if args.q is not None else p
    exp = args.experiment
    if exp == "closed":
        spec = MeasureSpec(args.measure or "markov", p, q)
        budgets = _ints(args.budgets) if args.budgets else [args.budget]
        rep = closed_fraction_report(spec, budgets, args.samples, args.seed)
    elif exp == "transport":
        rep = estimate_transport(p, args.samples, args.seed)
    elif exp == "steps":
        rep = estimate_step_measures(p, q, args.samples, args.seed)
    elif exp == "p4":
        rep = estimate_p4_joint(p, q, args.samples, args.seed)
    else:
        rep = estimate_return_times(p, q, args.samples, args.seed, args.budget)
    _emit(args, rep.to_json() + "\n")


# ---------------------------------------------------------------------------
# parser

DEFAULTS = {
    "render": dict(x0=-8, y0=-8, width=16, height=16, budget=10_000, scale=24.0, shade=False, dividing_lines=False),
    "trace": dict(budget=10_000, visited=False),
    "collapse": dict(horizon=4096, lo=-10, hi=10),
    "renorm": dict(depth=8, horizon=4096, budget=100_000, samples=1),
    "limit": dict(m=1.0, n=1.0, kmax=50, float=False),
    "mc": dict(experiment="closed", samples=10_000, budget=10_000),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="truchet", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, argument_default=None)
        sp.add_argument("--config", help="flat key = value file")
        sp.add_argument("--out", help="write output here instead of stdout")
        return sp

    sp = add("render", "SVG of a tiling window")
    _add_pair_options(sp)
    sp.add_argument("--x0", type=int)
    sp.add_argument("--y0", type=int)
    sp.add_argument("--width", type=int)
    sp.add_argument("--height", type=int)
    sp.add_argument("--highlight", type=_normal, help="inward normal 'a,b' of the curve to highlight")
    sp.add_argument("--budget", type=int)
    sp.add_argument("--scale", type=float)
    sp.add_argument("--shade", action="store_const", const=True, help="grey squares outside the kept set")
    sp.add_argument("--dividing-lines", action="store_const", const=True)
    sp.set_defaults(func=cmd_render)

    sp = add("trace", "follow one curve and report it as JSON")
    _add_pair_options(sp)
    sp.add_argument("--budget", type=int)
    sp.add_argument("--visited", action="store_const", const=True, help="include the visited squares")
    sp.set_defaults(func=cmd_trace)

    sp = add("collapse", "collapse one sequence")
    sp.add_argument("--omega")
    sp.add_argument("--p", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--lo", type=int)
    sp.add_argument("--hi", type=int)
    sp.set_defaults(func=cmd_collapse)

    sp = add("renorm", "repeated renormalization")
    _add_pair_options(sp)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--budget", type=int)
    sp.add_argument("--samples", type=int)
    sp.set_defaults(func=cmd_renorm)

    sp = add("limit", "CSV of the exact limit approximants")
    sp.add_argument("--m", type=float)
    sp.add_argument("--n", type=float)
    sp.add_argument("--kmax", type=int)
    sp.add_argument("--float", action="store_const", const=True, help="floating-point evaluation")
    sp.set_defaults(func=cmd_limit)

    sp = add("mc", "Monte Carlo experiment report")
    sp.add_argument("--experiment", choices=["closed", "transport", "steps", "p4", "returns"])
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--measure", choices=["markov", "bernoulli", "constant"])
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--budget", type=int)
    sp.add_argument("--budgets", help="comma-separated budgets for the closed experiment")
    sp.set_defaults(func=cmd_mc)
    ap._subparsers_map = sub.choices  # for config typing
    return ap


def _apply_config(ap, args) -> None:
    sp = ap._subparsers_map[args.command]
    actions = {a.dest: a for a in sp._actions}
    cfg = read_config(args.config) if args.config else {}
    for key, raw in cfg.items():
        if key not in actions or key in ("config", "help", "func"):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        if getattr(args, key) is not None:
            continue
        act = actions[key]
        if act.const is True:
            val = _flag(raw)
        elif act.type is not None:
            try:
                val = act.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"bad value for {key}: {raw!r}") from exc
        else:
            val = raw
        if act.choices and val not in act.choices:
            raise UsageError(f"{key} must be one of {sorted(act.choices)}")
        setattr(args, key, val)
    for key, val in DEFAULTS.get(args.command, {}).items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        _apply_config(ap, args)
        args.func(args)
    except (UsageError, InvalidViewport, OSError) as exc:
        print(f"truchet {args.command}: {exc}", file=sys.stderr)
        return 2
    except (CollapseError, ValueError) as exc:
        print(f"truchet {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
