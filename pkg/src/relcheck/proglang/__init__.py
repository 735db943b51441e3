"""The C-like program language: syntax, relational denotation, execution."""

from .agreement import AgreementReport, Mismatch, agreement_check
from .compiled import BatchRunner, batch_runner
from .interp import ABORTED, FUEL, UNDEFINED, Final, NoOutcome, interpret, sufficient_fuel
from .semantics import condition_sets, denote, extended_size
from .syntax import (
    Abort,
    Assign,
    Block,
    BoundProgram,
    If,
    IfElse,
    Program,
    Seq,
    Skip,
    While,
    bind_program,
    parse_program,
    pretty_program,
    uninitialized_reads,
)

__all__ = [
    "ABORTED", "FUEL", "UNDEFINED", "Abort", "AgreementReport", "Assign", "BatchRunner",
    "Block", "BoundProgram", "Final", "If", "IfElse", "Mismatch", "NoOutcome", "Program",
    "Seq", "Skip", "While", "agreement_check", "batch_runner", "bind_program",
    "condition_sets", "denote", "extended_size", "interpret", "parse_program",
    "pretty_program", "sufficient_fuel", "uninitialized_reads",
]
