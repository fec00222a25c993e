"""Command-line front end: ``conelab <command> --instance NAME [options]``.

Every command prints one JSON report with the keys ``command``,
``instance``, ``verdicts``, ``guards``, ``completeness`` and
``timings_ms``.  Rationals are strings ("p/q", or "p" when integral).

Exit codes: 0 done, 1 verdict or validation failure, 2 usage or parse
error, 3 a termination guard tripped.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import chamberwalk as cw
from . import conestruct as cs
from . import exactq as q
from . import groupact as ga
from . import polycone as pc
from . import rayclass as rc
from .varmodel import (
    BUNDLED,
    InstanceError,
    RayRecord,
    SchemaError,
    load_instance,
    reducible_fibre_pairs,
    relative_instance,
    trivial_subspace,
)

EXIT_OK, EXIT_VERDICT, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3

ORBIT_BUDGET = 100
UNION_TARGETS = 11
COVER_BUDGET = 40


class UsageError(Exception):
    pass


def _jsonable(x):
    if isinstance(x, Fraction):
        return q.format_rational(x)
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _rationals(text: str) -> tuple:
    try:
        return tuple(q.rational(p) for p in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse rationals from {text!r}: {exc}") from None


def _rays(text: str) -> list[tuple]:
    return [_rationals(part) for part in text.split(";") if part.strip()]


def _ints(v) -> list[int]:
    return list(q.primitive(v))


def _chamber(ch: cw.Chamber) -> dict:
    return {"frame": [list(c) for c in ch.frame], "key": [list(k) for k in ch.key]}


class Run:
    def __init__(self, args):
        self.args = args
        self.verdicts: dict = {}
        self.completeness: list[str] = []
        self.guards = {
            "flops": cw.flop_guard(),
            "chambers": cw.chamber_guard() if args.budget is None else args.budget,
            "tripped": False,
        }
        self.timings: dict = {}
        self.status = EXIT_OK

    def timed(self, name, fn, *a, **kw):
        t = time.perf_counter()
        try:
            return fn(*a, **kw)
        finally:
            self.timings[name] = round((time.perf_counter() - t) * 1000)

    def fail(self):
        self.status = max(self.status, EXIT_VERDICT)


def _divisor(run: Run, inst) -> tuple:
    if run.args.divisor is None:
        raise UsageError("--divisor is required for this command")
    d = _rationals(run.args.divisor)
    if len(d) != inst.rank:
        raise UsageError(f"--divisor has {len(d)} entries, instance rank is {inst.rank}")
    return d


def cmd_validate(run: Run, inst):
    rel = relative_instance(inst)
    gens = []
    for g in inst.group_generators:
        rep = ga.validate_group_element(inst, g)
        gens.append({"label": g.label, "valid": rep.ok, "violations": list(rep.violations)})
    run.verdicts.update(
        {
            "valid": True,
            "rank": inst.rank,
            "relative": inst.is_relative,
            "relative_rank": rel.rank,
            "vertical_divisors": inst.n,
            "wall_frame_size": len(inst.seed_frame),
            "reducible_fibres": len(reducible_fibre_pairs(inst)),
            "group_generators": gens,
        }
    )


def cmd_cones(run: Run, inst):
    mov = cs.relative_movable_cone(inst)
    pred = cs.effective_predicate(inst)
    basis, _ = trivial_subspace(inst)
    run.verdicts["relative_movable_cone"] = {
        "inequalities": [list(f) for f in mov.base.facets],
        "equations": [list(e) for e in mov.base.equations],
        "strict": [_ints(s) for s in mov.strict],
    }
    run.verdicts["effective_predicate"] = {
        "strict": [_ints(s) for s in pred.strict_piece.strict],
        "ray_generators": [list(r) for r in pred.ray_piece.rays],
        "ray_lineality": [list(r) for r in pred.ray_piece.lineality],
        "includes_zero": True,
    }
    run.verdicts["trivial_subspace_dim"] = len(basis)
    if run.args.divisor is not None:
        rel = relative_instance(inst)
        y = _rationals(run.args.divisor)
        if len(y) != rel.rank:
            raise UsageError(f"--divisor must be a relative class with {rel.rank} entries")
        ok, tag = cs.effective_membership(pred, y)
        run.verdicts["membership"] = {
            "class": list(y),
            "movable": pc.membership(mov, y),
            "effective": ok,
            "piece": tag,
        }


def cmd_make_nef(run: Run, inst):
    d = _divisor(run, inst)
    ch, path = run.timed("make_nef", cw.make_nef, inst, d)
    run.verdicts.update(
        {
            "divisor": list(d),
            "path_length": len(path),
            "path": [_ints(c) for c in path],
            "chamber": _chamber(ch),
            "contains_divisor": cw.nef_cone(inst, ch).contains(d),
        }
    )


def _sigma(run: Run, inst) -> pc.PolyCone:
    if run.args.sigma is not None:
        rays = _rays(run.args.sigma)
        if any(len(r) != inst.rank for r in rays):
            raise UsageError(f"--sigma rays must have {inst.rank} entries")
    elif "default_sigma" in inst.metadata:
        rays = [q.vector(r) for r in inst.metadata["default_sigma"]]
    else:
        raise UsageError("--sigma is required for an instance without a default Sigma")
    return pc.from_generators(rays, inst.rank)


def cmd_chambers(run: Run, inst):
    sigma = _sigma(run, inst)
    chambers = run.timed("enumerate", cw.enumerate_chambers, inst, sigma, cap=run.guards["chambers"])
    disjoint = True
    for i in range(len(chambers)):
        for j in range(i + 1, len(chambers)):
            meet = pc.intersect(cw.nef_cone(inst, chambers[i]), cw.nef_cone(inst, chambers[j]))
            if meet.is_full_dimensional:
                disjoint = False
    run.verdicts.update(
        {
            "sigma": [list(r) for r in sigma.rays],
            "count": len(chambers),
            "pairwise_interiors_disjoint": disjoint,
            "chambers": [_chamber(c) for c in chambers],
        }
    )
    if not disjoint:
        run.fail()


def cmd_orbits(run: Run, inst):
    budget = ORBIT_BUDGET if run.args.budget is None else run.args.budget
    run.guards["orbit_budget"] = budget
    res = run.timed("enumerate", cw.enumerate_up_to_group, inst, budget, run.args.word_budget or 3)
    run.verdicts.update(
        {
            "representatives": len(res.representatives),
            "chambers": [_chamber(c) for c in res.representatives],
            "visited": res.visited,
            "complete": res.complete,
            "exact_reduction": res.exact,
        }
    )
    if not res.complete:
        run.completeness.append(f"orbit enumeration stopped at budget {budget} with an open frontier")
    if not res.exact:
        run.completeness.append("orbit reduction is word-budgeted, representatives may repeat orbits")


def _word_budget(run: Run, inst) -> int:
    if run.args.word_budget is not None:
        return run.args.word_budget
    return 5 if len(inst.group_generators) <= 2 else 1


def cmd_fundamental(run: Run, inst):
    rel = relative_instance(inst)
    k = run.timed("build_k", cs.build_k, inst)
    run.verdicts["k"] = {
        "cell": k.cell_kind,
        "rays": len(k.cone.rays),
        "facets": len(k.cone.facets),
        "bounded": True,
    }
    budget = _word_budget(run, inst)
    rep = run.timed(
        "fundamental_check", ga.fundamental_domain_check, inst, k.cone, run.args.samples, budget, run.args.seed
    )
    run.verdicts["fundamental_domain"] = {
        "samples": rep.samples,
        "covered": rep.covered,
        "word_budget": rep.word_budget,
        "words_checked": rep.words_checked,
        "disjoint": rep.disjoint,
        "overlaps": [w for w, _ in rep.overlaps],
        "verdict": rep.verdict,
        "model": "relative" if rel is inst else "relative model of the absolute instance",
    }
    run.completeness.append("coverage is sample-based and disjointness is word-budgeted; neither is a proof")
    if not rep.ok:
        run.fail()
    targets = cs.chain_chambers(inst, UNION_TARGETS if inst.rank <= 3 else 2)
    cover = COVER_BUDGET if run.args.budget is None else run.args.budget
    run.guards["cover_budget"] = cover
    u = run.timed("build_u", cs.build_u, inst, None, targets, cover, True)
    run.verdicts["u"] = {
        "generators": len(u.generators),
        "facets": len(u.cone.facets),
        "record": [
            {"chamber": _chamber(e.chamber), "element": e.element.label, "point": list(e.point)} for e in u.record
        ],
        "chambers_meeting_u": len(u.covering) if u.covering_complete else f"more than {cover}",
    }
    if not u.covering_complete:
        run.completeness.append(f"chambers meeting U exceed the budget {cover}; the covering list was not finished")


def cmd_classify_rays(run: Run, inst):
    rows = []
    records = list(inst.k_negative_rays) + [RayRecord(c, "k_trivial") for c in inst.seed_frame]
    consistent = True
    for r in records:
        res = rc.classify_ray(inst, r)
        consistent = consistent and res.consistent
        rows.append(
            {
                "curve": list(r.curve),
                "declared": r.mori_type,
                "coarse": res.coarse,
                "k_pairing": res.k_pairing,
                "consistent": res.consistent,
                "issues": list(res.issues),
            }
        )
    face = rc.k_trivial_face(inst)
    divisorial = [r for r in inst.k_negative_rays if r.exceptional_divisor is not None]
    fin = rc.type_finiteness_check(inst, divisorial)
    run.verdicts.update(
        {
            "rays": rows,
            "k_trivial_face": {"verdict": face.verdict, "witness": face.witness and list(face.witness)},
            "type_finiteness": {
                "pairs_checked": fin.pairs_checked,
                "flagged": [[i, j, why] for i, j, why in fin.flagged_pairs],
                "independent_divisors": fin.independent_divisors,
                "bound": fin.bound,
                "ok": fin.ok,
            },
        }
    )
    run.completeness.append("no completeness claim for type-1 or fibre-type extremal rays")
    if not (consistent and face.verdict == "equal" and fin.ok):
        run.fail()


def cmd_lift(run: Run, inst):
    rel = relative_instance(inst)
    if run.args.divisor is None:
        raise UsageError("--divisor (a relative class) is required for lift")
    y = _rationals(run.args.divisor)
    if len(y) != rel.rank:
        raise UsageError(f"--divisor must have {rel.rank} entries (relative rank)")
    rep = cs.lift_to_absolute(inst, y)
    run.verdicts.update(
        {"input": list(rep.input_class), "lifted": list(rep.lifted_class), "m": rep.m, "nu": list(rep.nus)}
    )


COMMANDS = {
    "validate": cmd_validate,
    "cones": cmd_cones,
    "make-nef": cmd_make_nef,
    "chambers": cmd_chambers,
    "orbits": cmd_orbits,
    "fundamental": cmd_fundamental,
    "classify-rays": cmd_classify_rays,
    "lift": cmd_lift,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", required=True, help=f"bundled name ({', '.join(BUNDLED)}) or JSON path")
    common.add_argument("--divisor", help='comma-separated rationals, e.g. "1,7/2"')
    common.add_argument("--sigma", help='rays separated by ";", e.g. "1,0;1,5"')
    common.add_argument("--budget", type=int, help="chamber budget or cap")
    common.add_argument("--samples", type=int, default=1000, help="coverage samples for fundamental")
    common.add_argument("--word-budget", type=int, dest="word_budget", help="longest group word to try")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="sampling seed")
    parser = argparse.ArgumentParser(prog="conelab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _glue_negative_values(argv: Sequence[str]) -> list[str]:
    """Let ``--divisor -1,1`` through; argparse would read "-1,1" as an option."""
    out: list[str] = []
    it = iter(argv)
    for a in it:
        if a in ("--divisor", "--sigma"):
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and not nxt.startswith("--"):
                out.append(f"{a}={nxt}")
                continue
            out.append(a)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(a)
    return out


def run_command(argv: Optional[Sequence[str]] = None) -> tuple[int, Optional[dict]]:
    parser = build_parser()
    argv = _glue_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_USAGE if exc.code else EXIT_OK), None
    run = Run(args)
    report = {"command": args.command, "instance": args.instance}
    try:
        inst = run.timed("load", load_instance, args.instance)
        report["instance"] = inst.label
        run.timed("total", COMMANDS[args.command], run, inst)
    except UsageError as exc:
        print(f"conelab: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE, None
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"conelab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE, None
    except (SchemaError, InstanceError) as exc:
        run.verdicts = {"valid": False, "violations": getattr(exc, "violations", [str(exc)])}
        run.status = EXIT_VERDICT
    except cw.GuardTripped as exc:
        run.guards["tripped"] = True
        run.guards["tripped_guard"] = exc.guard
        run.completeness.append(str(exc))
        run.status = EXIT_GUARD
    except (cw.PreconditionError, cs.LiftNotFound, cs.BoundednessError, cw.BoundaryWallError, ga.NotATranslation) as exc:
        run.verdicts["error"] = str(exc)
        run.status = EXIT_VERDICT
    report.update(
        {
            "verdicts": run.verdicts,
            "guards": run.guards,
            "completeness": run.completeness,
            "timings_ms": run.timings,
        }
    )
    return run.status, _jsonable(report)


def main(argv: Optional[Sequence[str]] = None) -> int:
    status, report = run_command(argv)
    if report is not None:
        text = json.dumps(report, indent=2, ensure_ascii=False) + "\n"
        args_out = _out_path(argv)
        if args_out:
            Path(args_out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    return status


def _out_path(argv) -> Optional[str]:
    argv = list(sys.argv[1:] if argv is None else argv)
    for i, a in enumerate(argv):
        if a == "--out" and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith("--out="):
            return a.split("=", 1)[1]
    return None


if __name__ == "__main__":
    sys.exit(main())
