"""Independent checks for synthesized strategies and certificates."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from .architecture import Architecture, guarantee_alphabet
from .automata import (
    RunGraph, UniversalCoBuchi, build_run_graph, find_valid_annotation, rejecting_cycles, spec_uca,
)
from .logic import ConjunctiveSpec, decompose, relevant_processes
from .machines import MooreTs, compose, letters_over


@dataclass
class Check:
    name: str
    status: str  # "pass" | "fail" | "info"
    detail: str = ""
    witness: dict | None = None

    def to_dict(self) -> dict:
        out = {"name": self.name, "status": self.status}
        if self.detail:
            out["detail"] = self.detail
        if self.witness is not None:
            out["witness"] = self.witness
        return out


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    @property
    def realizable(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.status == "fail"]

    def by_name(self, name: str) -> Check:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> dict:
        return {"checks": [c.to_dict() for c in self.checks], "realizable": self.realizable}


def _letters(xs) -> list[list[str]]:
    return [sorted(x) for x in xs]


def counterexample_lasso(rg: RunGraph) -> tuple[list[frozenset[str]], list[frozenset[str]]] | None:
    """A reachable cycle through a rejecting node as ``(stem, loop)`` letters, or None."""
    comps = rejecting_cycles(rg)
    if not comps:
        return None
    comp = comps[0]
    members = set(comp)
    target = next(n for n in rg.nodes if n in members and n in rg.rejecting)
    stem = [] if target == rg.initial else _edge_path(rg, rg.initial, target, lambda n: True)
    loop = _edge_path(rg, target, target, members.__contains__)
    return stem, loop


def _edge_path(rg: RunGraph, src, dst, allowed) -> list[frozenset[str]]:
    """Letters along a shortest nonempty path from ``src`` to ``dst`` through allowed nodes."""
    prev: dict = {}
    queue: deque = deque()
    for m in rg.successors(src):
        if allowed(m) and m not in prev:
            prev[m] = src
            queue.append(m)
    while queue:
        n = queue.popleft()
        if n == dst:
            nodes = [n]
            while True:
                nodes.append(prev[nodes[-1]])
                if nodes[-1] == src:
                    break
            nodes.reverse()
            return [rg.letters[(a, b)] for a, b in zip(nodes, nodes[1:])]
        for m in rg.successors(n):
            if allowed(m) and m not in prev:
                prev[m] = n
                queue.append(m)
    raise AssertionError("no path inside the component")


def _simulation_witness(abstract: MooreTs, concrete: MooreTs, observed: frozenset[str]) -> list[list[str]] | None:
    """Input sequence on which the deterministic ``abstract`` stops matching ``concrete``."""
    start = (concrete.initial, abstract.initial)
    prev = {start: None}
    queue = deque([start])
    while queue:
        t, u = queue.popleft()
        for i in concrete.letters():
            t2 = concrete.step(t, i)
            if t2 is None:
                continue
            mismatch = concrete.output(t, i) & observed != abstract.output(u, i) & observed
            u2 = abstract.step(u, i)
            if mismatch or u2 is None:
                trail = [sorted(i)]
                node = (t, u)
                while prev[node] is not None:
                    node, inp = prev[node]
                    trail.append(inp)
                return list(reversed(trail))
            if (t2, u2) not in prev:
                prev[(t2, u2)] = ((t, u), sorted(i))
                queue.append((t2, u2))
    return None


def _tracking_witness(cert: MooreTs, local: MooreTs, shared_out: frozenset[str]) -> list | None:
    """Explore certificate/local-strategy pairs along inputs agreeing on shared variables."""
    own_only = tuple(sorted(local.inputs - cert.inputs))
    start = (cert.initial, local.initial)
    prev = {start: None}
    queue = deque([start])
    while queue:
        u, t = queue.popleft()
        for i in cert.letters():
            for rest in letters_over(own_only):
                i2 = (i & local.inputs) | rest
                t2 = local.step(t, i2)
                if t2 is None:
                    continue
                if local.output(t, i2) & shared_out != cert.output(u, i) & shared_out:
                    trail = [[sorted(i), sorted(i2)]]
                    node = (u, t)
                    while prev[node] is not None:
                        node, inp = prev[node]
                        trail.append(inp)
                    return list(reversed(trail))
                nxt = (cert.step(u, i), t2)
                if nxt not in prev:
                    prev[nxt] = ((u, t), [sorted(i), sorted(i2)])
                    queue.append(nxt)
    return None


def _local_totality_issue(local: MooreTs, associated: frozenset[str], mealy: bool) -> dict | None:
    env = local.inputs - associated
    for t in local.reachable():
        for i in local.letters():
            defined = local.step(t, i) is not None
            if mealy:
                if defined and local.output(t, i) & associated != i & associated:
                    return {"state": t, "input": sorted(i), "problem": "transition on an invalid input"}
                continue
            valid = local.labels[t] & associated == i & associated
            if valid != defined:
                problem = "missing transition" if valid else "transition on an invalid input"
                return {"state": t, "input": sorted(i), "problem": problem}
        if mealy:
            for e in letters_over(env):
                if not any(local.step(t, e | a) is not None for a in letters_over(associated)):
                    return {"state": t, "input": sorted(e), "problem": "no transition for environment input"}
    return None


def verify_solution(arch: Architecture, spec: ConjunctiveSpec, sol, relevant: Mapping | None = None,
                    global_uca: UniversalCoBuchi | None = None, process_ucas: Mapping | None = None,
                    decomposition: Mapping[str, ConjunctiveSpec] | None = None) -> Report:
    """Check a solution: certificates simulate strategies and the composition satisfies the spec.

    ``sol`` needs ``strategies`` and ``certificates`` (per process name) and
    may carry ``local`` strategies, which enables the checks on them.
    """
    report = Report()
    dec = dict(decomposition) if decomposition is not None else decompose(spec, arch)
    if relevant is None:
        relevant = relevant_processes(dec, arch)
    alpha = guarantee_alphabet(arch, relevant)
    strategies: Mapping[str, MooreTs] = sol.strategies
    certificates: Mapping[str, MooreTs] = sol.certificates
    local: Mapping[str, MooreTs] = getattr(sol, "local", None) or {}

    for p in arch.processes:
        s = strategies.get(p.name)
        g = certificates.get(p.name)
        if s is None or g is None:
            raise ValueError(f"solution lacks machines for process {p.name!r}")
        if s.inputs != p.inputs or s.outputs != p.outputs:
            raise ValueError(f"strategy of {p.name!r} does not match the architecture")
        if g.inputs != p.inputs or g.outputs != alpha.guarantee_outputs[p.name]:
            raise ValueError(f"certificate of {p.name!r} does not match the architecture")
        og = alpha.guarantee_outputs[p.name]
        witness = _simulation_witness(g, s, og)
        if witness is None:
            report.checks.append(Check(f"simulation/{p.name}", "pass"))
        else:
            report.checks.append(Check(f"simulation/{p.name}", "fail",
                                       "certificate does not simulate the strategy", {"inputs": witness}))

    for p in arch.processes:
        s = local.get(p.name)
        if s is None:
            continue
        g = certificates[p.name]
        w = _simulation_witness(g, s, alpha.guarantee_outputs[p.name])
        report.checks.append(Check(f"local_simulation/{p.name}", "pass" if w is None else "fail",
                                   "" if w is None else "certificate does not simulate the local strategy",
                                   None if w is None else {"inputs": w}))
        for k in sorted(relevant.get(p.name, ()), key=arch.names.index):
            shared = alpha.associated_outputs[p.name] & alpha.guarantee_outputs[k]
            w = _tracking_witness(certificates[k], s, shared)
            report.checks.append(Check(f"tracking/{p.name}/{k}", "pass" if w is None else "fail",
                                       "" if w is None else "associated outputs diverge from the certificate",
                                       None if w is None else {"inputs": w}))
        issue = _local_totality_issue(s, alpha.associated_outputs[p.name], s.mealy)
        report.checks.append(Check(f"local_totality/{p.name}", "pass" if issue is None else "fail",
                                   "" if issue is None else issue["problem"], issue))
        uca = (process_ucas or {}).get(p.name) or spec_uca(dec[p.name].conjuncts)
        rg = build_run_graph(s, uca)
        if find_valid_annotation(rg) is None:
            stem, loop = counterexample_lasso(rg)
            report.checks.append(Check(f"local_satisfaction/{p.name}", "fail",
                                       "local strategy violates its subspecification",
                                       {"stem": _letters(stem), "loop": _letters(loop)}))
        else:
            report.checks.append(Check(f"local_satisfaction/{p.name}", "pass"))

    composed = compose([strategies[n] for n in arch.names])
    uca = global_uca or spec_uca(spec.conjuncts)
    rg = build_run_graph(composed, uca)
    if find_valid_annotation(rg) is None:
        stem, loop = counterexample_lasso(rg)
        report.checks.append(Check("global", "fail", "composition violates the specification",
                                   {"stem": _letters(stem), "loop": _letters(loop)}))
    else:
        report.checks.append(Check("global", "pass", f"{len(rg.nodes)} run graph nodes"))

    for p in arch.processes:
        outside = dec[p.name].props() - p.variables
        detail = "prop(phi) within the process variables" if not outside else \
            f"subspecification mentions {sorted(outside)}; completeness not guaranteed"
        report.checks.append(Check(f"completeness/{p.name}", "info", detail))
    return report
