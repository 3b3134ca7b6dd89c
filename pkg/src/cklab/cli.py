"""Command line front end: pattern generation/validation, exact moments,
Monte Carlo simulation, expansion statistics, and the experiment catalog.

Exit codes: 0 success, 2 validation error (including invalid patterns),
3 computation cap exceeded."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .errors import CapExceededError, ValidationError
from .expander import (
    BipartiteMultigraph,
    c_value,
    c_value_exact,
    expansion_profile,
    mc_c_distribution,
    project,
    sample_configuration,
)
from .experiments import ExperimentConfig, list_experiments, run_experiment
from .figures import bar_figure
from .groups import PGroup
from .moments import d_split
from .patterns import (
    StairSpec,
    SupportPattern,
    band_pattern,
    block_cyclic_pattern,
    block_pattern,
    budget_pattern,
    full_pattern,
    k_step_pattern,
    nonuniversality_pattern,
    stairs_unit,
    stairs_wide,
    validate,
)
from .sampler import (
    FinitePMF,
    Haar,
    McReport,
    Rademacher,
    mc_cokernel_dist,
    mc_corank_dist,
    mc_full_rank_prob,
    mc_moment,
)


def _default_threads() -> int:
    return int(os.environ.get("CKLAB_THREADS", "1"))


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip() != "")


def _parse_partition(p: int, text: str) -> PGroup:
    try:
        return PGroup(p, tuple(json.loads(text)))
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad partition JSON {text!r}: {exc}") from exc


def _parse_dist(text: str):
    if text == "haar":
        return Haar()
    if text == "rademacher":
        return Rademacher()
    if text.startswith("pmf:"):
        text = text[4:]
    if text.startswith("{"):
        try:
            obj = json.loads(text)
            return FinitePMF(tuple(obj["values"]), tuple(obj["probs"]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValidationError(f"bad distribution spec: {exc}") from exc
    raise ValidationError(
        'distribution must be "haar", "rademacher", or '
        'pmf:{"values": [...], "probs": [...]}'
    )


def _load_pattern(args) -> SupportPattern:
    if getattr(args, "pattern", None):
        return SupportPattern.from_json(Path(args.pattern).read_text())
    if getattr(args, "n", None):
        return full_pattern(args.n, extra_cols=getattr(args, "extra_cols", 0))
    raise ValidationError("need --pattern FILE or --n N")


def _emit_report(rep: McReport, out: str | None) -> None:
    print(rep.to_json())
    if out:
        Path(out + ".json").write_text(rep.to_json() + "\n")
        Path(out + ".csv").write_text(rep.to_csv())
        cats = list(rep.estimates)
        bar_figure(
            out + ".png",
            f"{rep.kind} ({rep.trials} trials)",
            cats,
            [("estimate", [rep.estimates[c] for c in cats])],
            "probability",
        )


# ------------------------------------------------------------------ pattern


def _cmd_pattern_gen(args) -> int:
    fam = args.family
    if fam == "full":
        pat = full_pattern(args.n, extra_cols=args.extra_cols)
    elif fam == "block":
        pat = block_pattern(args.n, args.a, args.b, extra_cols=args.extra_cols)
    elif fam == "unit-stairs":
        pat = stairs_unit(args.n, args.t, extra_cols=args.extra_cols)
    elif fam == "wide-stairs":
        pat = stairs_wide(args.n, args.t, args.d, extra_cols=args.extra_cols)
    elif fam == "kstep":
        pat = k_step_pattern(
            StairSpec(args.n, _ints(args.alphas), _ints(args.betas), t=args.extra_cols)
        )
    elif fam == "band":
        pat = band_pattern(args.n, args.w, extra_cols=args.extra_cols)
    elif fam == "block-cyclic":
        pat = block_cyclic_pattern(args.n, args.p, t=args.t)
    elif fam == "nonuniversality":
        pat = nonuniversality_pattern(args.k, args.p, args.eps)
    elif fam == "budget":
        pat = budget_pattern(args.n, args.a)
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown family {fam!r}")
    text = pat.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out} (n={pat.n}, cols={pat.cols}, size={pat.size})")
    else:
        print(text)
    return 0


def _cmd_pattern_validate(args) -> int:
    pat = SupportPattern.from_json(Path(args.file).read_text())
    rep = validate(pat, p=args.p)
    print(json.dumps(asdict(rep)))
    return 0 if rep.valid else 2


# ------------------------------------------------------------------- moment


def _cmd_moment_exact(args) -> int:
    pat = SupportPattern.from_json(Path(args.pattern).read_text())
    G = PGroup.from_json(args.group)
    d0, res = d_split(pat, G, cap=args.cap)
    E = d0 + res
    print(
        json.dumps(
            {
                "moment": f"{E.numerator}/{E.denominator}",
                "d_n0": f"{d0.numerator}/{d0.denominator}",
                "residual": f"{res.numerator}/{res.denominator}",
            }
        )
    )
    return 0


# ----------------------------------------------------------------- simulate


def _cmd_simulate_cokernel(args) -> int:
    pat = _load_pattern(args)
    targets = [_parse_partition(args.p, t) for t in args.targets]
    rep = mc_cokernel_dist(
        pat, _parse_dist(args.dist), args.p, args.e, targets,
        args.trials, args.seed, args.threads,
    )
    _emit_report(rep, args.out)
    return 0


def _cmd_simulate_corank(args) -> int:
    rep = mc_corank_dist(args.n, args.p, args.trials, args.seed, args.threads)
    _emit_report(rep, args.out)
    return 0


def _cmd_simulate_moment(args) -> int:
    pat = _load_pattern(args)
    G = _parse_partition(args.p, args.group)
    rep = mc_moment(
        pat, _parse_dist(args.dist), args.p, G, args.trials, args.seed, args.threads
    )
    _emit_report(rep, args.out)
    return 0


def _cmd_simulate_fullrank(args) -> int:
    rep = mc_full_rank_prob(
        args.n, args.r, args.p, args.trials, args.seed, args.threads
    )
    _emit_report(rep, args.out)
    return 0


# ----------------------------------------------------------------- expander


def _cmd_expander_sample(args) -> int:
    g = project(sample_configuration(args.n, args.d, args.seed))
    if args.out:
        Path(args.out).write_text(g.to_json() + "\n")
        print(f"wrote {args.out} (n={g.n}, d={g.d})")
    else:
        print(g.to_json())
    return 0


def _cmd_expander_c(args) -> int:
    g = BipartiteMultigraph.from_json(Path(args.graph).read_text())
    if args.exact:
        v = c_value_exact(g, args.p)
        print(json.dumps({"c": f"{v.numerator}/{v.denominator}", "c_float": float(v)}))
    else:
        print(json.dumps({"c_float": c_value(g, args.p)}))
    return 0


def _cmd_expander_profile(args) -> int:
    if args.graph:
        g = BipartiteMultigraph.from_json(Path(args.graph).read_text())
    else:
        if not (args.n and args.d):
            raise ValidationError("need --graph FILE or both --n and --d")
        g = project(sample_configuration(args.n, args.d, args.seed))
    prof = expansion_profile(g, samples=args.samples, seed=args.seed)
    out = {
        "n": prof.n,
        "d": prof.d,
        "exact": prof.exact,
        "min_neighbors_a": list(prof.min_neighbors_a),
        "min_neighbors_b": list(prof.min_neighbors_b),
    }
    print(json.dumps(out))
    return 0


def _cmd_expander_mc(args) -> int:
    rep = mc_c_distribution(
        args.n, args.d, args.p, args.samples, args.delta, args.seed, args.threads
    )
    _emit_report(rep, args.out)
    return 0


# --------------------------------------------------------------- experiment


def _cmd_experiment_list(_args) -> int:
    for name, summary, _claim in list_experiments():
        print(f"{name:24s} {summary}")
    return 0


def _cmd_experiment_run(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_obj(json.loads(Path(args.config).read_text()))
        if args.out:
            cfg.out_dir = args.out
    else:
        if not args.name:
            raise ValidationError("need --name NAME or --config FILE")
        params = {}
        for item in args.set or []:
            if "=" not in item:
                raise ValidationError(f"--set expects key=value, got {item!r}")
            key, _, raw = item.partition("=")
            try:
                params[key] = json.loads(raw)
            except json.JSONDecodeError:
                params[key] = raw
        cfg = ExperimentConfig(args.name, params, args.out)
    record = run_experiment(cfg)
    oks = [c.get("ok") for c in record.comparisons]
    print(record.to_json())
    if cfg.out_dir:
        print(
            f"wrote {cfg.out_dir}/{record.experiment}.{{json,csv,png}} "
            f"({sum(bool(x) for x in oks)}/{len(oks)} comparisons ok)",
            file=sys.stderr,
        )
    return 0


# ------------------------------------------------------------------- parser


def _add_common_mc(sp, pattern_input=False):
    if pattern_input:
        sp.add_argument("--pattern", help="pattern JSON file")
        sp.add_argument("--n", type=int, help="shortcut: full n x n pattern")
        sp.add_argument("--extra-cols", type=int, default=0)
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=_default_threads())
    sp.add_argument("--out", help="prefix for .json/.csv/.png report files")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cklab",
        description="Cokernel statistics of random p-adic matrices "
        "with prescribed zero patterns.",
    )
    top = ap.add_subparsers(dest="command", required=True)

    # pattern
    pat = top.add_parser("pattern", help="generate and validate zero patterns")
    pats = pat.add_subparsers(dest="sub", required=True)
    g = pats.add_parser("gen", help="emit a pattern as JSON")
    g.add_argument(
        "--family",
        required=True,
        choices=[
            "full", "block", "unit-stairs", "wide-stairs", "kstep",
            "band", "block-cyclic", "nonuniversality", "budget",
        ],
    )
    g.add_argument("--n", type=int, default=0)
    g.add_argument("--t", type=int, default=None)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--a", type=int, default=0)
    g.add_argument("--b", type=int, default=0)
    g.add_argument("--w", type=int, default=1)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--p", type=int, default=2)
    g.add_argument("--eps", type=float, default=0.3)
    g.add_argument("--alphas", default="")
    g.add_argument("--betas", default="")
    g.add_argument("--extra-cols", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(fn=_cmd_pattern_gen)
    v = pats.add_parser("validate", help="check coverage and report the gauge")
    v.add_argument("--file", required=True)
    v.add_argument("--p", type=int, default=None)
    v.set_defaults(fn=_cmd_pattern_validate)

    # moment
    mom = top.add_parser("moment", help="exact rational moments")
    moms = mom.add_subparsers(dest="sub", required=True)
    me = moms.add_parser("exact", help="E_n(G), saturated term, residual")
    me.add_argument("--pattern", required=True, help="pattern JSON file")
    me.add_argument("--group", required=True, help='e.g. {"p":2,"parts":[1]}')
    me.add_argument("--cap", type=int, default=10**8)
    me.set_defaults(fn=_cmd_moment_exact)

    # simulate
    sim = top.add_parser("simulate", help="seeded Monte Carlo estimators")
    sims = sim.add_subparsers(dest="sub", required=True)
    sc = sims.add_parser("cokernel", help="cokernel isomorphism-type frequencies")
    sc.add_argument("--p", type=int, required=True)
    sc.add_argument("--e", type=int, required=True)
    sc.add_argument("--dist", default="haar")
    sc.add_argument(
        "--targets", nargs="+", default=["[]"],
        help='partitions as JSON arrays, e.g. [] [1] [1,1]',
    )
    _add_common_mc(sc, pattern_input=True)
    sc.set_defaults(fn=_cmd_simulate_cokernel)
    sr = sims.add_parser("corank", help="mod-p corank frequencies")
    sr.add_argument("--n", type=int, required=True)
    sr.add_argument("--p", type=int, required=True)
    _add_common_mc(sr)
    sr.set_defaults(fn=_cmd_simulate_corank)
    sm = sims.add_parser("moment", help="mean surjection count onto G")
    sm.add_argument("--p", type=int, required=True)
    sm.add_argument("--group", required=True, help="partition JSON, e.g. [1]")
    sm.add_argument("--dist", default="haar")
    _add_common_mc(sm, pattern_input=True)
    sm.set_defaults(fn=_cmd_simulate_moment)
    sf = sims.add_parser("fullrank", help="P(full column rank) for n x r mod p")
    sf.add_argument("--n", type=int, required=True)
    sf.add_argument("--r", type=int, required=True)
    sf.add_argument("--p", type=int, required=True)
    _add_common_mc(sf)
    sf.set_defaults(fn=_cmd_simulate_fullrank)

    # expander
    ex = top.add_parser("expander", help="bipartite multigraphs and c statistics")
    exs = ex.add_subparsers(dest="sub", required=True)
    es = exs.add_parser("sample", help="configuration-model d-regular sample")
    es.add_argument("--n", type=int, required=True)
    es.add_argument("--d", type=int, required=True)
    es.add_argument("--seed", type=int, default=0)
    es.add_argument("--out")
    es.set_defaults(fn=_cmd_expander_sample)
    ec = exs.add_parser("c", help="evaluate the expansion functional")
    ec.add_argument("--graph", required=True)
    ec.add_argument("--p", type=int, default=2)
    ec.add_argument("--exact", action="store_true")
    ec.set_defaults(fn=_cmd_expander_c)
    ep = exs.add_parser("profile", help="minimum neighborhood sizes by |S|")
    ep.add_argument("--graph")
    ep.add_argument("--n", type=int)
    ep.add_argument("--d", type=int)
    ep.add_argument("--samples", type=int, default=200)
    ep.add_argument("--seed", type=int, default=0)
    ep.set_defaults(fn=_cmd_expander_profile)
    em = exs.add_parser("mc", help="P(c < delta) over random graphs")
    em.add_argument("--n", type=int, required=True)
    em.add_argument("--d", type=int, required=True)
    em.add_argument("--p", type=int, default=2)
    em.add_argument("--delta", type=float, required=True)
    em.add_argument("--samples", type=int, default=200)
    em.add_argument("--seed", type=int, default=0)
    em.add_argument("--threads", type=int, default=_default_threads())
    em.add_argument("--out")
    em.set_defaults(fn=_cmd_expander_mc)

    # experiment
    exp = top.add_parser("experiment", help="named desk-scale reproductions")
    exps = exp.add_subparsers(dest="sub", required=True)
    el = exps.add_parser("list", help="catalog with one-line summaries")
    el.set_defaults(fn=_cmd_experiment_list)
    er = exps.add_parser("run", help="run one catalog entry")
    er.add_argument("--name")
    er.add_argument("--config", help="ExperimentConfig JSON file")
    er.add_argument("--set", action="append", metavar="KEY=VALUE")
    er.add_argument("--out", help="output directory for json/csv/png")
    er.set_defaults(fn=_cmd_experiment_run)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CapExceededError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
