"""Cross-validation of the denotational and operational semantics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..relcore import DEFAULT_CAP, Relation, State, StateSpace
from .compiled import NOFUEL, OK, REASONS, batch_runner
from .interp import FUEL, Final, NoOutcome, interpret, sufficient_fuel
from .semantics import denote


@dataclass
class Mismatch:
    state: State
    outcome: object  # Final | NoOutcome
    images: list  # states related to `state` by the denotation

    def __str__(self):
        imgs = ", ".join(str(s) for s in self.images) or "none"
        return f"{self.state}: interpreter {self.outcome}; denotation images {imgs}"


@dataclass
class AgreementReport:
    space: StateSpace
    fuel: int
    sufficient_fuel: int
    checked: int = 0
    finals: int = 0
    blocked: int = 0  # aborted or undefined
    diverging: int = 0  # fuel exhausted with sufficient fuel
    mismatches: list = field(default_factory=list)
    inconclusive: list = field(default_factory=list)  # states that ran out of fuel

    @property
    def ok(self) -> bool:
        return not self.mismatches

    @property
    def clean(self) -> bool:
        return not self.mismatches and not self.inconclusive

    def summary(self) -> str:
        return (
            f"checked {self.checked} states (fuel {self.fuel}, sufficient {self.sufficient_fuel}): "
            f"{self.finals} final, {self.blocked} blocked, {self.diverging} diverging, "
            f"{len(self.mismatches)} mismatches, {len(self.inconclusive)} inconclusive"
        )


def agreement_check(prog, space: StateSpace, fuel: int = 500, cap: int = DEFAULT_CAP,
                    engine: str = "batch", relation: Relation | None = None) -> AgreementReport:
    """Compare ``interpret`` with ``denote`` on every state of ``space``.

    ``engine="batch"`` runs the compiled executor; ``"interpret"`` walks the
    tree state by state.  Fuel exhaustion counts as divergence when ``fuel``
    reaches :func:`sufficient_fuel`, and as inconclusive otherwise.
    """
    rel = relation if relation is not None else denote(prog, space, cap)
    bound_fuel = sufficient_fuel(prog, space)
    report = AgreementReport(space, fuel, bound_fuel)
    n = space.size
    keys = rel.keys()
    rows = keys // n
    cols = keys % n
    starts = np.searchsorted(rows, np.arange(n + 1))
    status, finals = _run_all(prog, space, fuel, engine)
    final_idx = np.zeros(n, dtype=np.int64)
    ok = status == OK
    if ok.any():
        final_idx[ok] = space.indices_of(finals[ok])
    counts = starts[1:] - starts[:-1]
    # a state agrees when its only image is the interpreter's final state,
    # or when it has no image and the interpreter produced none
    first = np.full(n, -1, dtype=np.int64)
    has = counts > 0
    first[has] = cols[starts[:-1][has]]
    agree_final = ok & (counts == 1) & (first == final_idx)
    diverge = (status == NOFUEL) & (fuel >= bound_fuel)
    agree_none = (~ok) & (status != NOFUEL) & (counts == 0)
    agree_div = diverge & (counts == 0)
    report.checked = n
    report.finals = int(ok.sum())
    report.blocked = int(((~ok) & (status != NOFUEL)).sum())
    report.diverging = int(diverge.sum())
    short = (status == NOFUEL) & ~diverge
    for i in np.flatnonzero(short):
        report.inconclusive.append(space.state_at(int(i)))
    for i in np.flatnonzero(~(agree_final | agree_none | agree_div | short)):
        i = int(i)
        if status[i] == OK:
            outcome = Final(space.state(tuple(int(v) for v in finals[i])))
        else:
            outcome = NoOutcome(REASONS[int(status[i])])
        images = [space.state_at(int(j)) for j in cols[starts[i]:starts[i + 1]]]
        report.mismatches.append(Mismatch(space.state_at(i), outcome, images))
    return report


def _run_all(prog, space, fuel, engine):
    if engine == "batch":
        values = space.values_of(np.arange(space.size, dtype=np.int64))
        return batch_runner(prog, space).run(values, fuel)
    if engine != "interpret":
        raise ValueError(f"unknown engine {engine!r}")
    status = np.zeros(space.size, dtype=np.int8)
    finals = np.zeros((space.size, len(space.names)), dtype=np.int64)
    codes = {v: k for k, v in REASONS.items()}
    for i, s in enumerate(space.states()):
        out = interpret(prog, s, fuel)
        if isinstance(out, Final):
            finals[i] = out.state.values
        else:
            status[i] = codes[out.reason]
    return status, finals


__all__ = ["agreement_check", "AgreementReport", "Mismatch", "FUEL"]
