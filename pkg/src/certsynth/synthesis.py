"""The bounded certifying-synthesis loop."""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .architecture import Architecture, check
from .automata import DEFAULT_STATE_CAP, UniversalCoBuchi, conjunction_uca, ltl_to_uca, spec_uca
from .encoding import Bounds, CnfInstance, encode, to_dimacs
from .logic import ConjunctiveSpec, Formula, check_atoms, decompose, relevant_processes
from .machines import GuaranteeTs, LocalStrategy, MooreTs, extend
from .solving import SolverBackend, decode, solve
from .verification import Report, verify_solution

log = logging.getLogger(__name__)

POLICIES = ("certificate-first", "strategy-first")


class VerificationError(AssertionError):
    """A decoded model failed independent verification (an encoder or solver bug)."""


@dataclass
class Solution:
    strategies: dict[str, MooreTs]
    local: dict[str, LocalStrategy]
    certificates: dict[str, GuaranteeTs]
    bounds: Bounds
    stats: dict = field(default_factory=dict)
    report: Report | None = None
    status: str = "realizable"


@dataclass
class Unrealizable:
    max_bounds: tuple[int, int]
    attempts: list[dict] = field(default_factory=list)
    status: str = "unrealizable"


@dataclass
class Unknown:
    bounds: Bounds
    attempts: list[dict] = field(default_factory=list)
    status: str = "unknown"


def bound_schedule(max_strategy: int, max_certificate: int,
                   policy: str = "certificate-first") -> Iterator[tuple[int, int]]:
    """Uniform ``(strategy, certificate)`` pairs by increasing sum.

    Ties go to the smaller strategy under ``certificate-first`` and to the
    smaller certificate under ``strategy-first``.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    if max_strategy < 1 or max_certificate < 1:
        raise ValueError("bounds must be positive")
    pairs = [(s, c) for s in range(1, max_strategy + 1) for c in range(1, max_certificate + 1)]
    if policy == "certificate-first":
        pairs.sort(key=lambda p: (p[0] + p[1], p[0]))
    else:
        pairs.sort(key=lambda p: (p[0] + p[1], p[1]))
    yield from pairs


class UcaCache:
    """Per-conjunct automata shared between processes."""

    def __init__(self, state_cap: int = DEFAULT_STATE_CAP):
        self.state_cap = state_cap
        self._cache: dict[Formula, UniversalCoBuchi] = {}

    def conjunct(self, f: Formula) -> UniversalCoBuchi:
        if f not in self._cache:
            self._cache[f] = ltl_to_uca(f, max_states=self.state_cap)
        return self._cache[f]

    def spec(self, spec: ConjunctiveSpec) -> UniversalCoBuchi:
        if not spec.conjuncts:
            return spec_uca([])
        return conjunction_uca([self.conjunct(c) for c in spec.conjuncts])


def write_dimacs(cnf: CnfInstance, directory: str, stem: str) -> str:
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, f"{stem}.cnf")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(to_dimacs(cnf) + "\n")
    with open(os.path.join(directory, f"{stem}.vars.json"), "w", encoding="utf-8") as fh:
        json.dump(cnf.registry.to_json(), fh, indent=0, sort_keys=True)
    return path


def synthesize(arch: Architecture, spec: ConjunctiveSpec, max_strategy: int = 2, max_certificate: int = 2,
               policy: str = "certificate-first", backend: SolverBackend = SolverBackend(),
               mode: str = "moore", dimacs_dir: str | None = None,
               state_cap: int = DEFAULT_STATE_CAP,
               decomposition: Mapping[str, ConjunctiveSpec] | None = None) -> Solution | Unrealizable | Unknown:
    """Search bound pairs until the constraint system becomes satisfiable.

    Solutions are decoded, completed with each process's own certificate and
    verified before being returned.  ``decomposition`` overrides the default
    assignment of conjuncts to processes.
    """
    check(arch)
    check_atoms(spec, arch)
    dec = dict(decomposition) if decomposition is not None else decompose(spec, arch)
    relevant = relevant_processes(dec, arch)
    for p in arch.processes:
        outside = dec[p.name].props() - p.variables
        if outside:
            log.warning("process %s: subspecification mentions %s outside its variables; "
                        "solutions may be missed", p.name, sorted(outside))
    cache = UcaCache(state_cap)
    ucas = {name: cache.spec(dec[name]) for name in arch.names}
    attempts: list[dict] = []
    for s, c in bound_schedule(max_strategy, max_certificate, policy):
        bounds = Bounds.uniform(arch.names, s, c)
        started = time.monotonic()
        cnf = encode(arch, dec, relevant, ucas, bounds, mode)
        encode_time = time.monotonic() - started
        if dimacs_dir:
            write_dimacs(cnf, dimacs_dir, f"bounds_s{s}_c{c}")
        result = solve(cnf, backend)
        attempt = {"strategy": s, "certificate": c, "status": result.status,
                   "encode_seconds": round(encode_time, 3), "solve_seconds": round(result.seconds, 3),
                   **cnf.stats()}
        attempts.append(attempt)
        log.info("bounds (%d, %d): %s, %d vars, %d clauses, %.2fs", s, c, result.status,
                 cnf.num_vars, len(cnf.clauses), result.seconds)
        if result.status == "unknown":
            return Unknown(bounds, attempts)
        if result.status == "unsat":
            continue
        decoded = decode(result.model, cnf)
        local = {n: d.local for n, d in decoded.items()}
        certificates = {n: d.certificate for n, d in decoded.items()}
        strategies = {n: extend(local[n], certificates[n]) for n in arch.names}
        sol = Solution(strategies, local, certificates, bounds, {"attempts": attempts})
        sol.report = verify_solution(arch, spec, sol, process_ucas=ucas, decomposition=dec)
        if not sol.report.realizable:
            failed = ", ".join(ch.name for ch in sol.report.failures())
            raise VerificationError(f"decoded solution failed verification: {failed}")
        return sol
    return Unrealizable((max_strategy, max_certificate), attempts)
