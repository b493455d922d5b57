"""Batch experiment driver.

Every run writes a JSON report with sorted keys that embeds the effective
config; ``densecomp replay REPORT`` re-runs that config and must reproduce the
report byte for byte. Exit codes: 0 success, 1 usage error, 2 hypothesis not met.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from . import coding, machines, measure, oracles
from . import density as dn
from . import descriptions as ds
from .density import fmt, parse_fraction
from .literals import LiteralError, parse_set

REPORT_DIR_ENV = "DENSECOMP_REPORT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_HYPOTHESIS = 0, 1, 2
# keys that only say where output goes; excluded from the embedded config
_OUTPUT_KEYS = ("out", "csv", "config")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _split(text: str | None) -> list[str]:
    return [x for x in (text or "").split(",") if x.strip()]


def _frac(x) -> Fraction:
    try:
        return parse_fraction(x)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad rational {x!r}") from exc


def _load_json(text: str):
    """Inline JSON, ``demo``-style names are handled by callers; otherwise a file path."""
    text = str(text)
    if text.lstrip().startswith(("{", "[")):
        return json.loads(text)
    path = Path(text)
    if not path.exists():
        raise UsageError(f"no such file: {text}")
    return json.loads(path.read_text())


# -- subcommand handlers: cfg -> (result, csv rows, exit code) ----------------


def cmd_density(cfg):
    s = parse_set(cfg["set"])
    n = int(cfg["n"])
    if n < 1:
        raise UsageError("--n must be at least 1")
    result = {"set": cfg["set"], "n": n, "density": fmt(dn.density_below(s, n))}
    rows = None
    if cfg.get("depth"):
        depth = int(cfg["depth"])
        window = tuple(int(x) for x in _split(cfg.get("window"))) or None
        try:
            prof = dn.density_profile(s, depth, window)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        result["profile"] = {k: v for k, v in prof.to_dict().items() if k != "values"}
        rows = [["n", "rho"]] + [[m, fmt(prof.rho(m))] for m in range(1, depth + 1)]
    return result, rows, EXIT_OK


def cmd_blocks(cfg):
    s = parse_set(cfg["set"])
    K = int(cfg["k"])
    if K < 1:
        raise UsageError("--k must be at least 1")
    conv = dn.BlockConvention(cfg["conv"])
    rep = dn.check_block_bounds(s, K)
    result = {"set": cfg["set"], "K": K, "convention": conv.value,
              "block_densities": [fmt(dn.block_density(s, k, conv)) for k in range(K + 1)],
              "bound_check": rep.to_dict()}
    rows = [["k", "rho", "block_density", "floor"]] + [[r.k, fmt(r.rho), fmt(r.block), fmt(r.floor)] for r in rep.rows]
    return result, rows, EXIT_OK


def _description(cfg):
    try:
        return ds.from_json(_load_json(cfg["desc"]), parse_set)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad description: {exc}") from exc


def cmd_transform(cfg):
    f = _description(cfg)
    depth = int(cfg["depth"])
    op = cfg["op"]
    subset = parse_set(cfg["subset"]) if cfg.get("subset") else None
    stage = cfg.get("stage")
    if op == "edc_to_generic":
        out = ds.edc_to_generic(_expect(f, ds.BoxMap))
    elif op == "edc_to_coarse":
        out = ds.edc_to_coarse(_expect(f, ds.BoxMap))
    elif op in ("restrict", "patch"):
        if subset is None:
            raise UsageError(f"{op} needs --subset")
        f = _expect(f, ds.PartialTrace)
        out = ds.restrict_to_subset(f, subset, stage) if op == "restrict" else \
            ds.patch_to_total(f, subset, int(cfg.get("default") or 0), stage)
    elif op == "extract":
        f = _expect(f, ds.PartialTrace)
        b = ds.extract_computable_subset(f, lambda n: n * int(cfg.get("budget_factor") or 1))
        out = ds.restrict_to_subset(f, b)
    else:
        raise UsageError(f"unknown transform {op!r}")
    try:
        record = ds.to_json(out, depth, stage)
    except ds.ContainmentError as exc:
        return {"op": op, "error": str(exc), "index": exc.index}, None, EXIT_HYPOTHESIS
    result = {"op": op, "output": record, "stage": stage}
    if cfg.get("target"):
        g = ds.TotalMap.of_set(parse_set(cfg["target"]))
        result["agreement_density"] = fmt(ds.agreement_density(out, g, depth, stage))
    return result, None, EXIT_OK


def _expect(f, kind):
    if not isinstance(f, kind):
        raise UsageError(f"this transform needs a {kind.__name__}, got {type(f).__name__}")
    return f


def cmd_code(cfg):
    s = parse_set(cfg["set"])
    depth = int(cfg["depth"])
    out = coding.apply(cfg["map"], s)
    bits = out.prefix(depth)
    result = {"map": coding.CodingMap.parse(cfg["map"]).value, "set": cfg["set"], "depth": depth,
              "density": fmt(dn.density_below(out, depth)), "elements": [int(i) for i in bits.nonzero()[0][:256]]}
    rows = [["n", "member"]] + [[i, int(b)] for i, b in enumerate(bits.tolist())]
    return result, rows, EXIT_OK


def cmd_diagonal(cfg):
    kind = cfg["kind"]
    s, E = int(cfg["s"]), int(cfg["E"])
    if kind == "ndc":
        log = machines.build_ndc_diagonal(E, int(cfg["M"]), s)
        audit = machines.audit_ndc_diagonal(log)
        extra = {"audit": audit, "columns": {str(k): v for k, v in machines.column_dichotomy(log).items()}}
    elif kind == "simple":
        log = machines.build_simple_density0(s, E)
        N = int(cfg.get("check_n") or 1 << 16)
        extra = {"bound_violations": machines.density_bound_violations(log, N), "checked_to": N,
                 "density_at_check": fmt(dn.density_below(log.as_set(), N))}
    else:
        raise UsageError(f"unknown diagonal kind {kind!r}")
    rows = [["element", "stage", "reason"]] + [[e.element, e.stage, e.reason] for e in log.events]
    return {"log": log.to_json(), **extra}, rows, EXIT_OK


def cmd_realize(cfg):
    try:
        P, Q = _split(cfg.get("p")), _split(cfg.get("q"))
        ok = machines.realizable(P, Q)
        recipe = machines.witness_recipe(P, Q)
    except machines.UnknownVertex as exc:
        raise UsageError(str(exc)) from exc
    result = {"P": sorted(machines.vertex(p) for p in P), "Q": sorted(machines.vertex(q) for q in Q), "realizable": ok}
    if isinstance(recipe, machines.Unrealizable):
        result.update(recipe.to_json())
    else:
        result["recipe"] = recipe.to_json()
        result["rendered"] = recipe.render()
        result["blocks"] = {b: {"constructible": machines.BLOCKS[b].constructible,
                                "asserted": machines.BLOCKS[b].properties, "note": machines.BLOCKS[b].note}
                            for b in recipe.blocks()}
        if cfg.get("classify") and all(machines.BLOCKS[b].constructible for b in recipe.blocks()):
            depth = int(cfg.get("depth") or 1 << 12)
            built = machines.build_recipe(recipe, depth)
            result["classification"] = machines.classify(built, recipe.properties(), depth, P, Q).to_dict()
    return result, None, EXIT_OK


def _reduction(name: str):
    if name not in oracles.REDUCTION_POOL:
        raise UsageError(f"unknown reduction {name!r}; pool: {', '.join(oracles.REDUCTION_POOL)}")
    return oracles.REDUCTION_POOL[name]


def cmd_enumop(cfg):
    phi = _reduction(cfg["reduction"])
    s = parse_set(cfg["set"])
    max_n = int(cfg["max_n"])
    if cfg["mode"] == "mf":
        W = coding.mf_image_operator(phi, max_n, int(cfg.get("max_k") or max_n))
        depth = max(p for ax in W.axioms for p, _ in ax.premise | {(ax.out[0], 0)}) + 1 if W.axioms else 1
        X = oracles.graph_pairs(coding.code_R(s), depth)
    elif cfg["mode"] == "ubfb":
        W = oracles.ubfb_to_enumop(phi, max_n)
        depth = max((p for ax in W.axioms for p, _ in ax.premise), default=0) + 1
        X = oracles.graph_pairs(s, depth)
    else:
        raise UsageError("mode must be mf or ubfb")
    res = oracles.eval_enum_op(W, X, cfg.get("stage"))
    result = {"operator": W.label, "axiom_count": len(W.axioms), "input_depth": depth, "evaluation": res.to_json(),
              "meta": {k: (v if not isinstance(v, dict) else {str(a): b for a, b in v.items()}) for k, v in W.meta.items()}}
    rows = [["position", "value"]] + [list(p) for p in res.outputs]
    return result, rows, EXIT_OK if res.single_valued else EXIT_HYPOTHESIS


def cmd_ubfb(cfg):
    phi = _reduction(cfg["reduction"])
    s = parse_set(cfg["set"])
    out, rows, status = [], [["k", "n", "value", "min_query"]], EXIT_OK
    for k in range(int(cfg["k"]) + 1):
        try:
            r = oracles.ubfb_compute(phi, s, k)
        except oracles.UbfbBudgetError as exc:
            out.append({"k": k, "error": str(exc)})
            status = EXIT_HYPOTHESIS
            continue
        out.append(r.to_json())
        rows.append([k, r.n, r.value, min(r.queries) if r.queries else ""])
    return {"reduction": phi.name, "results": out}, rows, status


def _functional(cfg, seed_key="seed"):
    spec = cfg.get("functional")
    if spec and spec != "planted":
        return measure.BoundedUseFunctional.from_json(_load_json(spec)), None
    if cfg.get(seed_key) is None:
        raise UsageError("planted functionals need --seed")
    rng = random.Random(int(cfg[seed_key]))
    N = int(cfg["n"])
    target = [rng.randint(0, 1) for _ in range(N)]
    phi = measure.planted_functional(rng, target, min_mass=_frac(cfg.get("mass") or "2/3"),
                                     box=cfg.get("mode") == "edc", diverge=cfg.get("mode") == "coarse")
    return phi, target


def cmd_extract(cfg):
    mode, N = cfg["mode"], int(cfg["n"])
    phi, target = _functional(cfg)
    if target is None and cfg.get("target"):
        t = parse_set(cfg["target"])
        target = [t(n) for n in range(N)]
    if len(phi) < N:
        raise UsageError(f"functional has trees only below {len(phi)}")
    tfun = (lambda n: target[n]) if target is not None else None
    if mode in ("generic", "dense"):
        d, rep = measure.majority_extract(phi, mode, N, tfun)
        out = ds.to_json(d, N)
    elif mode == "edc":
        d, rep = measure.majority_extract_edc(phi, N)
        out = ds.to_json(d, N)
    elif mode == "coarse":
        d, rep = measure.majority_extract_coarse(phi, N)
        out = ds.to_json(d, N)
    else:
        raise UsageError("mode must be generic, dense, edc or coarse")
    masses = [measure.render_masses(measure.outcome_measures(phi, n)) for n in range(N)]
    result = {"mode": mode, "N": N, "report": rep.to_dict(), "output": out, "masses": masses, "target": target}
    rows = [["n", "output"]] + [[n, v] for n, v in enumerate(out.get("values") or _trace_column(out, N))]
    return result, rows, EXIT_OK


def _trace_column(rec, N):
    col = [""] * N
    for n, v, _ in rec["axioms"]:
        col[n] = v
    return col


def cmd_cone(cfg):
    if cfg.get("seed") is None:
        raise UsageError("cone experiments need --seed")
    depth, trials, seed = int(cfg["depth"]), int(cfg["trials"]), int(cfg["seed"])
    f = parse_set(cfg["target"]) if cfg.get("target") else None
    pool = []
    for name in _split(cfg.get("pool")):
        if name == "planted":
            rng = random.Random(seed)
            if f is None:
                raise UsageError("a planted pool member needs --target")
            pool.append(measure.planted_functional(rng, [f(n) for n in range(depth)], min_mass=Fraction(7, 8)))
        elif name.startswith("const:"):
            bits = parse_set(name.split(":", 1)[1])
            pool.append(measure.BoundedUseFunctional.constant([bits(n) for n in range(depth)]))
        else:
            pool.append(_reduction(name))
    if f is None:
        raise UsageError("cone needs --target")
    stats = measure.cone_experiment(f, pool, depth, trials, seed)
    return stats.to_dict(), None, EXIT_OK


def cmd_fubini(cfg):
    fam = cfg["family"]
    N = int(cfg["n"])
    S = measure.demo_family(N) if fam == "demo" else measure.FamilyS.from_json(_load_json(fam))
    if len(S) < N:
        raise UsageError(f"family has only {len(S)} sets")
    q, r = _frac(cfg["q"]), _frac(cfg.get("r") or 1)
    a = _frac(cfg["a"]) if cfg.get("a") is not None else None
    b = _frac(cfg["b"]) if cfg.get("b") is not None else None
    rep = measure.fubini_check(S, q, N, r, a, b)
    result = {"fubini": rep.to_dict()}
    status = EXIT_OK if rep.hypotheses_met else EXIT_HYPOTHESIS
    if cfg.get("voting"):
        vote = measure.majority_voting_density(S, q, N, r)
        result["voting"] = vote.to_dict()
        if not vote.hypotheses_met:
            status = EXIT_HYPOTHESIS
    rows = [["n", "measure"]] + [[n, fmt(c.measure)] for n, c in enumerate(S.sets[:N])]
    return result, rows, status


COMMANDS = {
    "density": cmd_density, "blocks": cmd_blocks, "transform": cmd_transform, "code": cmd_code,
    "diagonal": cmd_diagonal, "realize": cmd_realize, "enumop": cmd_enumop, "ubfb": cmd_ubfb,
    "cone": cmd_cone, "fubini": cmd_fubini, "extract": cmd_extract,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="densecomp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", help="report path (default: $%s/<command>.json or stdout)" % REPORT_DIR_ENV)
        sp.add_argument("--csv", help="also write the tabular series here")
        sp.add_argument("--config", help="JSON config file; its keys override flags")
        return sp

    sp = add("density", "prefix density and window profile")
    sp.add_argument("--set", default="evens")
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--depth", type=int)
    sp.add_argument("--window", help="lo,hi")

    sp = add("blocks", "block densities and the block-bound check")
    sp.add_argument("--set", default="evens")
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--conv", choices=[c.value for c in dn.BlockConvention], default="shifted")

    sp = add("transform", "description transformers")
    sp.add_argument("--desc", required=False, help="description JSON (inline or file)")
    sp.add_argument("--op", choices=["edc_to_generic", "edc_to_coarse", "restrict", "patch", "extract"],
                    default="edc_to_generic")
    sp.add_argument("--subset")
    sp.add_argument("--default", type=int, default=0)
    sp.add_argument("--budget-factor", type=int, default=1)
    sp.add_argument("--stage", type=int)
    sp.add_argument("--depth", type=int, default=32)
    sp.add_argument("--target")

    sp = add("code", "apply a coding map")
    sp.add_argument("--map", default="R")
    sp.add_argument("--set", default="evens")
    sp.add_argument("--depth", type=int, default=64)

    sp = add("diagonal", "c.e. constructions with logs")
    sp.add_argument("--kind", choices=["ndc", "simple"], default="ndc")
    sp.add_argument("--E", type=int, default=15)
    sp.add_argument("--M", type=int, default=256)
    sp.add_argument("--s", type=int, default=100_000)
    sp.add_argument("--check-n", type=int)

    sp = add("realize", "realizability of property combinations")
    sp.add_argument("--p", default="")
    sp.add_argument("--q", default="")
    sp.add_argument("--classify", action="store_true")
    sp.add_argument("--depth", type=int, default=1 << 12)

    sp = add("enumop", "build and evaluate an enumeration operator")
    sp.add_argument("--reduction", default="echo")
    sp.add_argument("--mode", choices=["mf", "ubfb"], default="ubfb")
    sp.add_argument("--set", default="evens")
    sp.add_argument("--max-n", type=int, default=16)
    sp.add_argument("--max-k", type=int)
    sp.add_argument("--stage", type=int)

    sp = add("ubfb", "blanking search on a strong cofinite oracle")
    sp.add_argument("--reduction", default="echo")
    sp.add_argument("--set", default="evens")
    sp.add_argument("--k", type=int, default=16)

    sp = add("cone", "sampled upper-cone experiment")
    sp.add_argument("--target", default="evens")
    sp.add_argument("--pool", default="")
    sp.add_argument("--depth", type=int, default=16)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int)

    sp = add("fubini", "measure/density trade-off and majority voting")
    sp.add_argument("--family", default="demo", help="'demo' or FamilyS JSON (inline or file)")
    sp.add_argument("--q", default="3/5")
    sp.add_argument("--r", default="1")
    sp.add_argument("--a")
    sp.add_argument("--b")
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--voting", action="store_true")

    sp = add("extract", "majority-vote extraction from a bounded-use functional")
    sp.add_argument("--functional", default="planted", help="'planted' or functional JSON (inline or file)")
    sp.add_argument("--mode", choices=["generic", "dense", "edc", "coarse"], default="generic")
    sp.add_argument("--n", type=int, default=64)
    sp.add_argument("--mass", default="2/3")
    sp.add_argument("--target")
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("replay", help="re-run the config embedded in a report")
    sp.add_argument("report")
    sp.add_argument("--out")
    sp.add_argument("--csv")
    return p


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def render_report(command: str, cfg: dict, result: dict, status: int) -> str:
    report = {"command": command, "config": {"command": command, **cfg}, "exit_code": status, "result": result,
              "provenance": {"densities": "exact rationals rendered p/q", "window": "tail window [N/2, N] unless stated"}}
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False, default=_default) + "\n"


def _default(o):
    if isinstance(o, Fraction):
        return fmt(o)
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def execute(command: str, cfg: dict) -> tuple[str, list | None, int]:
    handler = COMMANDS.get(command)
    if handler is None:
        raise UsageError(f"unknown command {command!r}")
    result, rows, status = handler(cfg)
    return render_report(command, cfg, result, status), rows, status


def _emit(command, text, rows, out, csv_path):
    out = out or (str(Path(os.environ[REPORT_DIR_ENV]) / f"{command}.json") if os.environ.get(REPORT_DIR_ENV) else None)
    if out:
        _atomic_write(Path(out), text)
    else:
        sys.stdout.write(text)
    if csv_path and rows is not None:
        _atomic_write(Path(csv_path), _csv_text(rows))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("missing subcommand")
        if args.command == "replay":
            rec = _load_json(args.report)
            cfg = dict(rec["config"])
            command = cfg.pop("command")
        else:
            command = args.command
            cfg = {k: v for k, v in vars(args).items() if k not in _OUTPUT_KEYS + ("command",)}
            if args.config:
                override = _load_json(args.config)
                unknown = set(override) - set(cfg)
                if unknown:
                    raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
                cfg.update(override)
        if command == "transform" and not cfg.get("desc"):
            raise UsageError("transform needs --desc")
        text, rows, status = execute(command, cfg)
        _emit(command, text, rows, args.out, args.csv)
        return status
    except UsageError as exc:
        sys.stderr.write(f"densecomp: usage error: {exc}\n")
        return EXIT_USAGE
    except (LiteralError, ValueError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"densecomp: usage error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
