"""Command-line front end: ``relcheck <subcommand> ...``.

Exit status: 0 verdict true (or verification passed), 1 verdict false (or a
step failed), 2 usage or input error, 3 inconclusive (fuel or cap).
Diagnostics go to standard error as ``file:line:col: message``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, correctness, derivation, speclang
from .errors import (
    CapExceededError,
    InconclusiveError,
    NonDeterministicError,
    ParseError,
    RelcheckError,
)
from .proglang import (
    Final,
    agreement_check,
    bind_program,
    denote,
    interpret,
    parse_program,
    sufficient_fuel,
)
from .proglang.interp import FUEL
from .relcore import DEFAULT_CAP, Relation, StateSpace, parse_relation, relation_space_name

log = logging.getLogger("relcheck")

EXIT_TRUE, EXIT_FALSE, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class UsageError(RelcheckError):
    pass


# -- input loading ----------------------------------------------------------------


class Loader:
    """Reads input files, resolving each named space at most once."""

    def __init__(self, space_path=None, cap=DEFAULT_CAP, default_range=None):
        self.cap = cap
        self.default_range = default_range
        self.explicit = self._read_space(Path(space_path)) if space_path else None
        self.spaces: dict = {}

    @staticmethod
    def _read_space(path: Path) -> StateSpace:
        return speclang.parse_space(_read(path), source=str(path))

    def space_named(self, name: str | None, near: Path, what: str) -> StateSpace:
        if self.explicit is not None:
            if name is not None and name != self.explicit.name:
                raise UsageError(f"{what} is over space {name!r} but --space declares "
                                 f"{self.explicit.name!r}")
            return self.explicit
        if name is None:
            raise UsageError(f"{what} does not name its space; pass --space")
        if name in self.spaces:
            return self.spaces[name]
        for cand in (near / f"{name}.space", near / f"{name.lower()}.space",
                     near / f"{name}.spec"):
            if cand.is_file():
                if cand.suffix == ".spec":
                    space = speclang.parse_spec(_read(cand), source=str(cand)).space
                    if space is None:
                        continue
                else:
                    space = self._read_space(cand)
                if space.name != name:
                    raise UsageError(f"{cand} declares space {space.name!r}, expected {name!r}")
                self.spaces[name] = space
                return space
        raise UsageError(f"cannot find {name}.space (or a {name}.spec with a space block) "
                         f"next to {what}; pass --space")

    def program(self, path: Path, space: StateSpace | None = None):
        prog = parse_program(_read(path), source=str(path), default_range=self.default_range)
        if space is None:
            space = self.space_named(prog.space_name, path.parent, str(path))
        elif prog.space_name is not None and prog.space_name != space.name:
            raise UsageError(f"{path} is over space {prog.space_name!r}, expected {space.name!r}")
        return bind_program(prog, space)

    def relation(self, path: Path, space: StateSpace | None = None) -> Relation:
        """A ``.rel`` literal or the denotation of a ``.prog`` file."""
        if path.suffix == ".rel":
            text = _read(path)
            if space is None:
                space = self.space_named(relation_space_name(text), path.parent, str(path))
            return parse_relation(text, space, source=str(path))
        bound = self.program(path, space)
        return denote(bound, bound.space, self.cap)

    def spec(self, path: Path, space: StateSpace | None = None) -> speclang.SpecFile:
        """A ``.spec`` predicate or a ``.rel`` relation used as a specification."""
        text = _read(path)
        spec = speclang.parse_spec(text, source=str(path))
        if spec.space is not None:
            if space is not None and spec.space != space:
                raise UsageError(f"{path} declares space {spec.space.describe()}, but the "
                                 f"programs are over {space.describe()}")
            return spec
        if space is None:
            space = self.explicit
        if space is None:
            raise UsageError(f"{path} has no space block; pass --space")
        return spec.bind(space)

    def spec_relation(self, path: Path, space: StateSpace) -> Relation:
        if path.suffix == ".rel":
            return self.relation(path, space)
        return speclang.materialize(self.spec(path, space), space, cap=self.cap)

    def first_space(self, *paths) -> StateSpace:
        """The space of the first program or relation among ``paths``."""
        if self.explicit is not None:
            return self.explicit
        for p in paths:
            if p is None:
                continue
            text = _read(p)
            if p.suffix == ".rel":
                return self.space_named(relation_space_name(text), p.parent, str(p))
            if p.suffix == ".prog":
                prog = parse_program(text, source=str(p), default_range=self.default_range)
                return self.space_named(prog.space_name, p.parent, str(p))
            if p.suffix == ".spec":
                spec = speclang.parse_spec(text, source=str(p))
                if spec.space is not None:
                    return spec.space
        raise UsageError("cannot determine the state space; pass --space")


def _read(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror or e}") from None


def _parse_range(text: str):
    vals = derivation.parse_values(text)
    return vals[0], vals[-1]


def _assignments(items) -> dict:
    """``["n=1..10000", "x=0"]`` or ``["n=9,x=0"]`` -> mapping."""
    out = {}
    for item in items or []:
        for part in _split_assignments(item):
            if "=" not in part:
                raise UsageError(f"expected name=value, got {part!r}")
            name, value = part.split("=", 1)
            value = value.strip()
            try:
                out[name.strip()] = int(value)
            except ValueError:
                out[name.strip()] = value
    return out


def _split_assignments(item: str):
    # "n=1,4,9" is one list, "n=9,x=0" two assignments
    parts, cur = [], ""
    for piece in item.split(","):
        if "=" in piece or not cur:
            if cur:
                parts.append(cur)
            cur = piece
        else:
            cur += "," + piece
    if cur:
        parts.append(cur)
    return [p.strip() for p in parts if p.strip()]


# -- output ------------------------------------------------------------------------


def _emit(args, record: dict, lines):
    if args.format == "json":
        sys.stdout.write(json.dumps(record, indent=2) + "\n")
    else:
        text = lines if isinstance(lines, str) else "\n".join(lines) + "\n"
        sys.stdout.write(text)


def _judgment(args, j: correctness.Judgment, inputs: dict) -> int:
    rec = j.to_record()
    rec["inputs"] = inputs
    _emit(args, rec, j.lines())
    return EXIT_TRUE if j.verdict else EXIT_FALSE


# -- subcommands -------------------------------------------------------------------


def cmd_refines(args, ld: Loader) -> int:
    lhs, rhs = Path(args.lhs), Path(args.rhs)
    space = ld.first_space(lhs, rhs)
    r2 = ld.relation(lhs, space)
    r1 = ld.relation(rhs, space)
    return _judgment(args, correctness.refines(r2, r1), {"lhs": args.lhs, "rhs": args.rhs})


def cmd_correct(args, ld: Loader) -> int:
    prog, spec = Path(args.program), Path(args.spec)
    space = ld.first_space(prog, spec)
    p = ld.relation(prog, space)
    r = ld.spec_relation(spec, space)
    fn = correctness.is_partially_correct if args.partial else correctness.is_correct
    return _judgment(args, fn(p, r), {"program": args.program, "spec": args.spec})


def cmd_more_correct(args, ld: Loader) -> int:
    cand, base, spec = Path(args.candidate), Path(args.baseline), Path(args.spec)
    space = ld.first_space(cand, base, spec)
    p2 = ld.relation(cand, space)
    p1 = ld.relation(base, space)
    r = ld.spec_relation(spec, space)
    det = p1.is_deterministic() and p2.is_deterministic()
    inputs = {"candidate": args.candidate, "baseline": args.baseline, "spec": args.spec}
    if args.strict:
        return _judgment(args, correctness.strictly_more_correct_det(p2, p1, r), inputs)
    if det and not args.nondet:
        return _judgment(args, correctness.more_correct_det(p2, p1, r), inputs)
    return _judgment(args, correctness.more_correct_nondet(p2, p1, r), inputs)


def cmd_competence(args, ld: Loader) -> int:
    prog, spec = Path(args.program), Path(args.spec)
    space = ld.first_space(prog, spec)
    p = ld.relation(prog, space)
    r = ld.spec_relation(spec, space)
    comp = correctness.competence_domain(p, r)
    dom = r.domain()
    rec = {
        "kind": "competence",
        "space": space.describe(),
        "inputs": {"program": args.program, "spec": args.spec},
        "competence": len(comp),
        "dom(R)": len(dom),
        "states": [space.format_values(space.values(int(i))) for i in comp.indices],
    }
    lines = [f"competence domain: {len(comp)} of {len(dom)} states of dom(R)",
             f"  {comp.describe(limit=args.limit)}"]
    _emit(args, rec, lines)
    return EXIT_TRUE


def cmd_reliability(args, ld: Loader) -> int:
    prog, spec_path = Path(args.program), Path(args.spec)
    space = ld.first_space(prog, spec_path)
    spec = ld.spec(spec_path, space)
    bound = ld.program(prog, space)
    region = (derivation.region_from_mapping(space, _assignments(args.region))
              if args.region else derivation.Region.full(space))
    model = (derivation.ReliabilityModel.from_expression(args.distribution)
             if args.distribution else derivation.ReliabilityModel.uniform())
    rel = derivation.reliability(bound, spec, model, region, args.fuel)
    rec = {
        "kind": "reliability",
        "space": space.describe(),
        "inputs": {"program": args.program, "spec": args.spec},
        "region": region.describe(),
        "distribution": model.describe(),
        **rel.to_record(),
    }
    lines = [f"reliability: {rel.render()} ({rel.competent} of {rel.domain} states of "
             f"dom(R) in the competence domain; exact {rec['exact']})",
             f"  region: {region.describe()}; distribution: {model.describe()}"]
    _emit(args, rec, lines)
    return EXIT_TRUE


def cmd_verify_chain(args, ld: Loader) -> int:
    from fractions import Fraction

    chain = derivation.load_chain(args.chain, cap=args.cap_given, default_range=ld.default_range)
    if args.threshold is not None:
        chain.threshold = Fraction(args.threshold)
    if args.fuel is not None:
        chain.fuel = args.fuel
    report = derivation.verify_chain(chain)
    rec = report.to_record()
    rec["inputs"] = {"chain": args.chain}
    _emit(args, rec, report.render())
    if report.inconclusive and report.verified:
        return EXIT_INCONCLUSIVE
    return EXIT_TRUE if report.verified else EXIT_FALSE


def cmd_denote(args, ld: Loader) -> int:
    path = Path(args.program)
    bound = ld.program(path)
    rel = denote(bound, bound.space, ld.cap)
    rec = {
        "kind": "denote",
        "space": bound.space.describe(),
        "inputs": {"program": args.program},
        "pairs": len(rel),
        "deterministic": rel.is_deterministic(),
        "relation": [[list(map(int, a)), list(map(int, b))] for a, b in
                     ((bound.space.values(i), bound.space.values(j)) for i, j in rel.pairs())],
    }
    for w in bound.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(args, rec, rel.to_literal())
    return EXIT_TRUE


def cmd_interpret(args, ld: Loader) -> int:
    path = Path(args.program)
    bound = ld.program(path)
    space = bound.space
    values = _assignments(args.state)
    missing = [n for n in space.names if n not in values]
    if missing:
        raise UsageError(f"--state leaves {', '.join(missing)} unset")
    extra = [n for n in values if n not in space.names]
    if extra:
        raise UsageError(f"--state sets unknown variables {', '.join(extra)}")
    for n, v in values.items():
        if not isinstance(v, int):
            raise UsageError(f"--state needs one integer for {n}, got {v!r}")
    s = space.state(**values)
    out = interpret(bound, s, fuel=args.fuel)
    rec = {"kind": "interpret", "space": space.describe(), "inputs": {"program": args.program},
           "initial": s.as_dict(), "fuel": args.fuel}
    if isinstance(out, Final):
        rec.update(outcome="final", final=out.state.as_dict())
        _emit(args, rec, [f"final {out.state}"])
        return EXIT_TRUE
    rec["outcome"] = out.reason
    line = out.reason
    code = EXIT_FALSE
    if out.reason == FUEL:
        bound_fuel = sufficient_fuel(bound, space)
        if args.fuel >= bound_fuel:
            rec["outcome"] = line = "diverges"
        else:
            code = EXIT_INCONCLUSIVE
            line = f"{out.reason} (sufficient fuel is {bound_fuel})"
    _emit(args, rec, [line])
    return code


def cmd_agreement(args, ld: Loader) -> int:
    path = Path(args.program)
    bound = ld.program(path)
    report = agreement_check(bound, bound.space, fuel=args.fuel, cap=ld.cap, engine=args.engine)
    rec = {
        "kind": "agreement",
        "space": bound.space.describe(),
        "inputs": {"program": args.program},
        "engine": args.engine,
        "fuel": args.fuel,
        "checked": report.checked,
        "finals": report.finals,
        "blocked": report.blocked,
        "diverging": report.diverging,
        "mismatches": [{"state": str(m.state), "outcome": str(m.outcome),
                        "images": [str(x) for x in m.images]} for m in report.mismatches],
        "inconclusive": [str(s) for s in report.inconclusive],
    }
    lines = [report.summary()]
    lines += [f"  mismatch at {m.state}: {m.outcome}; denotation gives "
              f"{', '.join(map(str, m.images)) or 'nothing'}" for m in report.mismatches[:10]]
    _emit(args, rec, lines)
    if report.mismatches:
        return EXIT_FALSE
    return EXIT_INCONCLUSIVE if report.inconclusive else EXIT_TRUE


def cmd_validate_domain(args, ld: Loader) -> int:
    path = Path(args.spec)
    spec = ld.spec(path)
    space = spec.require_space()
    region = (derivation.region_from_mapping(space, _assignments(args.region))
              if args.region else derivation.Region.full(space))
    witness = {k: _parse_range(str(v)) for k, v in _assignments(args.witness).items()}
    report = speclang.validate_domain_clause(spec, region, witness or None)
    rec = {
        "kind": "validate-domain",
        "space": space.describe(),
        "inputs": {"spec": args.spec},
        "region": region.describe(),
        "checked": report.checked,
        "nothing_to_validate": report.nothing_to_validate,
        "complete_search": report.complete_search,
        "violations": [{"state": str(s), "clause": c, "witness": w}
                       for s, c, w in report.violations],
        "inconclusive": [str(s) for s in report.inconclusive],
    }
    lines = [report.summary()]
    for s, c, w in report.violations[:10]:
        if c:
            lines.append(f"  {s}: clause admits it but no witness exists")
        else:
            lines.append(f"  {s}: clause rejects it but {w} is a witness")
    _emit(args, rec, lines)
    if report.violations:
        return EXIT_FALSE
    return EXIT_INCONCLUSIVE if report.inconclusive else EXIT_TRUE


# -- argument parsing --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "json"), default="table",
                        help="output format (default: table)")
    common.add_argument("--space", help=".space file for inputs that do not name one")
    common.add_argument("--cap", type=int, default=None,
                        help=f"largest state space to enumerate (default {DEFAULT_CAP})")
    common.add_argument("--default-range", metavar="LO..HI",
                        help="range for program locals declared without one")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(
        prog="relcheck",
        description="Refinement, correctness and relative correctness of programs "
                    "given as relations.",
    )
    parser.add_argument("--version", action="version", version=f"relcheck {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=fn)
        return p

    p = add("refines", cmd_refines, "does LHS refine RHS?")
    p.add_argument("--lhs", required=True, help="refining program or relation")
    p.add_argument("--rhs", required=True, help="refined program or relation")

    p = add("correct", cmd_correct, "is PROGRAM correct with respect to SPEC?")
    p.add_argument("--program", required=True)
    p.add_argument("--spec", required=True, help=".spec predicate or .rel relation")
    p.add_argument("--partial", action="store_true", help="partial correctness instead")

    p = add("more-correct", cmd_more_correct,
            "is CANDIDATE more correct than BASELINE with respect to SPEC?")
    p.add_argument("--candidate", required=True)
    p.add_argument("--baseline", required=True)
    p.add_argument("--spec", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--strict", action="store_true", help="strictly more correct (deterministic)")
    g.add_argument("--nondet", action="store_true",
                   help="use the two-clause judgment even for deterministic inputs")

    p = add("competence", cmd_competence, "competence domain of PROGRAM with respect to SPEC")
    p.add_argument("--program", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--limit", type=int, default=20, help="states to list in table output")

    p = add("reliability", cmd_reliability,
            "probability that a state of dom(R) is in PROGRAM's competence domain")
    p.add_argument("--program", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--region", action="append", metavar="VAR=VALUES",
                   help="enumerate (n=1..10000) or pin (x=0) a variable; repeatable")
    p.add_argument("--fuel", type=int, default=10_000, help="loop iterations per run")
    p.add_argument("--distribution", metavar="EXPR",
                   help="integer weight expression over the variables (default uniform)")

    p = add("verify-chain", cmd_verify_chain, "verify a derivation chain manifest")
    p.add_argument("chain", help=".chain manifest")
    p.add_argument("--threshold", help="reliability threshold, overrides the manifest")
    p.add_argument("--fuel", type=int, default=None, help="overrides the manifest")

    p = add("denote", cmd_denote, "print the relation a program computes")
    p.add_argument("program")

    p = add("interpret", cmd_interpret, "run a program on one state")
    p.add_argument("program")
    p.add_argument("--state", action="append", required=True, metavar="VAR=V,...",
                   help="initial values, e.g. n=9,x=0,y=0")
    p.add_argument("--fuel", type=int, default=10_000)

    p = add("agreement", cmd_agreement,
            "compare execution with the denotation on every state")
    p.add_argument("program")
    p.add_argument("--fuel", type=int, default=500)
    p.add_argument("--engine", choices=("batch", "interpret"), default="batch")

    p = add("validate-domain", cmd_validate_domain,
            "check a spec's domain clause against witness search")
    p.add_argument("spec")
    p.add_argument("--region", action="append", metavar="VAR=VALUES")
    p.add_argument("--witness", action="append", metavar="VAR=LO..HI",
                   help="bounds for the witness search over primed variables")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        default_range = _parse_range(args.default_range) if args.default_range else None
        args.cap_given = args.cap
        ld = Loader(args.space, args.cap if args.cap is not None else DEFAULT_CAP,
                    default_range)
        return args.func(args, ld)
    except ParseError as e:
        print(f"{e}", file=sys.stderr)
        return EXIT_ERROR
    except (CapExceededError, InconclusiveError) as e:
        print(f"relcheck: inconclusive: {e}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (NonDeterministicError, RelcheckError, ValueError) as e:
        print(f"relcheck: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
