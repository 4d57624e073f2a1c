"""Distributed architectures: processes, their variables and guarantee alphabets."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

log = logging.getLogger(__name__)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Process:
    name: str
    inputs: frozenset[str]
    outputs: frozenset[str]

    @property
    def variables(self) -> frozenset[str]:
        return self.inputs | self.outputs


@dataclass(frozen=True)
class Architecture:
    processes: tuple[Process, ...]
    env_outputs: frozenset[str]

    @classmethod
    def build(cls, processes: Iterable[tuple[str, Iterable[str], Iterable[str]]],
              env_outputs: Iterable[str]) -> Architecture:
        return cls(
            tuple(Process(n, frozenset(i), frozenset(o)) for n, i, o in processes),
            frozenset(env_outputs),
        )

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.processes]

    def process(self, name: str) -> Process:
        for p in self.processes:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def variables(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for p in self.processes:
            out |= p.variables
        return out

    @property
    def inp(self) -> frozenset[str]:
        return frozenset().union(*(p.inputs for p in self.processes))

    @property
    def out(self) -> frozenset[str]:
        return frozenset().union(*(p.outputs for p in self.processes))

    @property
    def is_distributed(self) -> bool:
        return len(self.processes) >= 2

    def owner(self, var: str) -> str | None:
        """Name of the process producing ``var``; ``None`` for environment outputs."""
        for p in self.processes:
            if var in p.outputs:
                return p.name
        return None


class ArchitectureError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def validate(arch: Architecture) -> list[str]:
    """Return every violated architecture condition (empty when valid)."""
    errors = []
    names = arch.names
    if not names:
        errors.append("architecture has no system process")
    for n in sorted({n for n in names if names.count(n) > 1}):
        errors.append(f"duplicate process name {n!r}")
    every = set(arch.env_outputs)
    for p in arch.processes:
        every |= p.variables
    for v in sorted(every):
        if not _IDENT.match(v):
            errors.append(f"invalid variable name {v!r}")
    for p in arch.processes:
        for v in sorted(p.inputs & p.outputs):
            errors.append(f"process {p.name!r} has {v!r} as both input and output")
        for v in sorted(p.outputs & arch.env_outputs):
            errors.append(f"output {v!r} of process {p.name!r} is also an environment output")
    for a, b in ((a, b) for i, a in enumerate(arch.processes) for b in arch.processes[i + 1:]):
        for v in sorted(a.outputs & b.outputs):
            errors.append(f"output overlap: {v!r} produced by {a.name!r} and {b.name!r}")
    produced = arch.out | arch.env_outputs
    for p in arch.processes:
        for v in sorted(p.inputs - produced):
            errors.append(f"input {v!r} of process {p.name!r} is produced by nobody")
    for v in sorted(arch.env_outputs - arch.inp):
        errors.append(f"environment output {v!r} is read by no process")
    if len(arch.processes) == 1:
        log.warning("architecture is monolithic (one system process)")
    return errors


def check(arch: Architecture) -> Architecture:
    errors = validate(arch)
    if errors:
        raise ArchitectureError(errors)
    return arch


@dataclass(frozen=True)
class GuaranteeAlphabet:
    guarantee_outputs: Mapping[str, frozenset[str]]
    guarantee_variables: Mapping[str, frozenset[str]]
    associated_outputs: Mapping[str, frozenset[str]]


def guarantee_outputs(arch: Architecture) -> dict[str, frozenset[str]]:
    inp = arch.inp
    return {p.name: p.outputs & inp for p in arch.processes}


def guarantee_alphabet(arch: Architecture, relevant: Mapping[str, Iterable[str]]) -> GuaranteeAlphabet:
    """Guarantee outputs ``O_i & inp`` and the associated outputs a process has to track.

    Associated outputs are the guarantee outputs of relevant processes that the
    process actually reads.
    """
    og = guarantee_outputs(arch)
    gv = {p.name: p.inputs | og[p.name] for p in arch.processes}
    assoc = {}
    for p in arch.processes:
        acc: frozenset[str] = frozenset()
        for k in relevant.get(p.name, ()):
            acc |= og[k] & p.inputs
        assoc[p.name] = acc
    return GuaranteeAlphabet(og, gv, assoc)
