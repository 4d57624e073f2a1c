"""SAT backends and decoding of models into machines."""

from __future__ import annotations

import heapq
import os
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .encoding import Clause, CnfInstance, ProcessLayout, to_dimacs
from .machines import GuaranteeTs, LocalStrategy


class SolverError(RuntimeError):
    pass


class DecodeError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# embedded CDCL solver


def _luby(i: int) -> int:
    """i-th element (0-based) of the Luby sequence 1 1 2 1 1 2 4 ..."""
    size, seq = 1, 0
    while size < i + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != i:
        size = (size - 1) >> 1
        seq -= 1
        i %= size
    return 1 << seq


class Cdcl:
    """Conflict-driven clause learning with two watched literals.

    First-UIP learning, VSIDS-style variable activities, phase saving, Luby
    restarts and periodic removal of long learnt clauses.  Deterministic.
    """

    def __init__(self, num_vars: int, clauses: Iterable[Sequence[int]]):
        n = num_vars
        self.n = n
        self.assign = [0] * (n + 1)
        self.level = [0] * (n + 1)
        self.reason: list[list[int] | None] = [None] * (n + 1)
        self.activity = [0.0] * (n + 1)
        self.phase = [False] * (n + 1)
        self.watches: list[list[list[int]]] = [[] for _ in range(2 * n + 2)]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.var_inc = 1.0
        self.heap = [(0.0, v) for v in range(1, n + 1)]
        self.learnts: list[list[int]] = []
        self.ok = True
        self.conflicts = 0
        units = []
        for raw in clauses:
            c = sorted(set(raw), key=abs)
            if any(-lit in c for lit in c if lit > 0):
                continue
            for lit in c:
                if lit == 0 or abs(lit) > n:
                    raise SolverError(f"literal {lit} out of range")
            if not c:
                self.ok = False
            elif len(c) == 1:
                units.append(c[0])
            else:
                self._attach(c)
        for lit in units:
            val = self._value(lit)
            if val == -1:
                self.ok = False
            elif val == 0:
                self._enqueue(lit, None)
        if self.ok and self._propagate() is not None:
            self.ok = False

    @staticmethod
    def _w(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def _attach(self, c: list[int]):
        self.watches[self._w(c[0])].append(c)
        self.watches[self._w(c[1])].append(c)

    def _value(self, lit: int) -> int:
        a = self.assign[lit if lit > 0 else -lit]
        return a if lit > 0 else -a

    def _enqueue(self, lit: int, reason):
        v = lit if lit > 0 else -lit
        self.assign[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self):
        assign, watches, trail = self.assign, self.watches, self.trail
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            false_lit = -p
            wi = 2 * false_lit if false_lit > 0 else -2 * false_lit + 1
            ws = watches[wi]
            keep = []
            n_ws = len(ws)
            k = 0
            while k < n_ws:
                c = ws[k]
                k += 1
                if not c:
                    continue  # deleted clause
                if c[0] == false_lit:
                    c[0], c[1] = c[1], false_lit
                first = c[0]
                a = assign[first if first > 0 else -first]
                if (a if first > 0 else -a) == 1:
                    keep.append(c)
                    continue
                for m in range(2, len(c)):
                    lit = c[m]
                    b = assign[lit if lit > 0 else -lit]
                    if (b if lit > 0 else -b) != -1:
                        c[1], c[m] = lit, false_lit
                        watches[2 * lit if lit > 0 else -2 * lit + 1].append(c)
                        break
                else:
                    keep.append(c)
                    if (a if first > 0 else -a) == -1:
                        keep.extend(x for x in ws[k:] if x)
                        watches[wi] = keep
                        return c
                    self._enqueue(first, c)
            watches[wi] = keep
        return None

    def _bump(self, v: int):
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.n + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.n + 1) if self.assign[u] == 0]
            heapq.heapify(self.heap)
        elif self.assign[v] == 0:
            heapq.heappush(self.heap, (-self.activity[v], v))

    def _analyze(self, confl: list[int]):
        seen = set()
        learnt = [0]
        counter = 0
        p = None
        idx = len(self.trail) - 1
        cur = len(self.trail_lim)
        c = confl
        while True:
            for q in (c if p is None else c[1:]):
                v = q if q > 0 else -q
                if v not in seen and self.level[v] > 0:
                    seen.add(v)
                    self._bump(v)
                    if self.level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while True:
                lit = self.trail[idx]
                idx -= 1
                if (lit if lit > 0 else -lit) in seen:
                    break
            p = lit
            v = p if p > 0 else -p
            c = self.reason[v]
            seen.discard(v)
            counter -= 1
            if counter == 0:
                break
        learnt[0] = -p
        # drop literals implied by the rest of the clause
        marked = {abs(q) for q in learnt}
        kept = [learnt[0]]
        for q in learnt[1:]:
            r = self.reason[abs(q)]
            if r is None or any(abs(x) not in marked and self.level[abs(x)] > 0 for x in r[1:]):
                kept.append(q)
        learnt = kept
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda k: self.level[abs(learnt[k])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _cancel_until(self, lvl: int):
        if len(self.trail_lim) <= lvl:
            return
        start = self.trail_lim[lvl]
        for lit in self.trail[start:]:
            v = lit if lit > 0 else -lit
            self.phase[v] = lit > 0
            self.assign[v] = 0
            self.reason[v] = None
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)
        if len(self.heap) > 4 * self.n + 64:
            self.heap = [(-self.activity[u], u) for u in range(1, self.n + 1) if self.assign[u] == 0]
            heapq.heapify(self.heap)

    def _decide(self) -> int | None:
        heap = self.heap
        while heap:
            _, v = heapq.heappop(heap)
            if self.assign[v] == 0:
                return v if self.phase[v] else -v
        return None

    def _reduce(self):
        locked = set()
        for lit in self.trail:
            r = self.reason[abs(lit)]
            if r is not None:
                locked.add(id(r))
        self.learnts.sort(key=len)
        half = len(self.learnts) // 2
        survivors = self.learnts[:half]
        for c in self.learnts[half:]:
            if id(c) in locked or len(c) <= 2:
                survivors.append(c)
            else:
                c.clear()
        self.learnts = survivors

    def solve(self, timeout: float | None = None) -> bool | None:
        """True (sat), False (unsat) or None when the time limit is hit."""
        if not self.ok:
            return False
        deadline = None if timeout is None else time.monotonic() + timeout
        restart = 0
        max_learnts = max(2000, self.n // 2)
        while True:
            budget = 100 * _luby(restart)
            restart += 1
            status = self._search(budget, deadline, max_learnts)
            if status is not None:
                return status
            if deadline is not None and time.monotonic() > deadline:
                return None
            max_learnts = int(max_learnts * 1.05)

    def _search(self, budget: int, deadline, max_learnts: int):
        conflicts = 0
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                conflicts += 1
                if not self.trail_lim:
                    return False
                learnt, back = self._analyze(confl)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self._attach(learnt)
                    self.learnts.append(learnt)
                    self._enqueue(learnt[0], learnt)
                self.var_inc *= 1.05
                if self.conflicts % 256 == 0 and deadline is not None and time.monotonic() > deadline:
                    self._cancel_until(0)
                    return None
                continue
            if conflicts >= budget:
                self._cancel_until(0)
                return None
            if len(self.learnts) - len(self.trail) >= max_learnts:
                self._reduce()
            lit = self._decide()
            if lit is None:
                return True
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)

    def model(self) -> list[bool]:
        return [False] + [self.assign[v] == 1 for v in range(1, self.n + 1)]


# ---------------------------------------------------------------------------
# backends


@dataclass(frozen=True)
class Model:
    """Assignment indexed by variable (index 0 unused)."""

    values: tuple[bool, ...]

    def __getitem__(self, v: int) -> bool:
        return self.values[v]

    def lit(self, lit: int) -> bool:
        return self.values[lit] if lit > 0 else not self.values[-lit]

    def satisfies(self, clauses: Iterable[Sequence[int]]) -> bool:
        return all(any(self.lit(x) for x in c) for c in clauses)

    def __len__(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class SolveResult:
    status: str  # "sat" | "unsat" | "unknown"
    model: Model | None = None
    seconds: float = 0.0
    stats: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class SolverBackend:
    """``kind`` is ``"embedded"`` or the path of an external DIMACS solver."""

    kind: str = "embedded"
    timeout: float | None = None
    workdir: str | None = None

    @property
    def embedded(self) -> bool:
        return self.kind in ("embedded", "builtin")


def solve_clauses(num_vars: int, clauses: Sequence[Sequence[int]],
                  backend: SolverBackend = SolverBackend()) -> SolveResult:
    start = time.monotonic()
    if backend.embedded:
        solver = Cdcl(num_vars, clauses)
        answer = solver.solve(backend.timeout)
        stats = {"conflicts": solver.conflicts}
        values = tuple(solver.model()) if answer else None
    else:
        answer, values = _run_external(num_vars, clauses, backend)
        stats = {}
    seconds = time.monotonic() - start
    if answer is None:
        return SolveResult("unknown", None, seconds, stats)
    if not answer:
        return SolveResult("unsat", None, seconds, stats)
    model = Model(values)
    bad = next((c for c in clauses if not any(model.lit(x) for x in c)), None)
    if bad is not None:
        raise SolverError(f"solver model violates clause {bad}")
    return SolveResult("sat", model, seconds, stats)


def solve(cnf: CnfInstance, backend: SolverBackend = SolverBackend()) -> SolveResult:
    return solve_clauses(cnf.num_vars, cnf.clauses, backend)


def _run_external(num_vars: int, clauses, backend: SolverBackend):
    if not os.path.exists(backend.kind):
        raise SolverError(f"solver {backend.kind!r} not found")
    with tempfile.TemporaryDirectory(dir=backend.workdir) as tmp:
        path = os.path.join(tmp, "instance.cnf")
        with open(path, "w") as fh:
            fh.write(to_dimacs((num_vars, clauses)) + "\n")
        try:
            proc = subprocess.run([backend.kind, path], capture_output=True, text=True,
                                  timeout=backend.timeout)
        except subprocess.TimeoutExpired:
            return None, None
        except OSError as exc:
            raise SolverError(f"cannot launch {backend.kind!r}: {exc}") from exc
    return parse_solver_output(proc.stdout, num_vars)


def parse_solver_output(text: str, num_vars: int):
    """Read SAT-competition style output: ``s`` status line and ``v`` model lines."""
    status = None
    seen_status = False
    values = [False] * (num_vars + 1)
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("s "):
            word = line[2:].strip()
            if word not in ("SATISFIABLE", "UNSATISFIABLE", "UNKNOWN"):
                raise SolverError(f"malformed status line {line!r}")
            status = {"SATISFIABLE": True, "UNSATISFIABLE": False, "UNKNOWN": None}[word]
            seen_status = True
        elif line.startswith("v "):
            for tok in line[2:].split():
                try:
                    lit = int(tok)
                except ValueError as exc:
                    raise SolverError(f"malformed model token {tok!r}") from exc
                if lit != 0 and abs(lit) <= num_vars:
                    values[abs(lit)] = lit > 0
    if not seen_status:
        raise SolverError("solver printed no status line")
    return status, (tuple(values) if status else None)


# ---------------------------------------------------------------------------
# decoding


@dataclass(frozen=True)
class DecodedProcess:
    local: LocalStrategy
    certificate: GuaranteeTs


def _decode_local(model: Model, cnf: CnfInstance, lay: ProcessLayout) -> LocalStrategy:
    reg, j, T = cnf.registry, lay.name, lay.strategy_size
    mealy = cnf.mode == "mealy"
    table = {}
    for t in range(T):
        for i in lay.cubes():
            succ = [t2 for t2 in range(T) if model[reg.get("trans_T", j, t, i, t2)]]
            if len(succ) > 1:
                raise DecodeError(f"{j}: state {t} has several successors on {sorted(i)}")
            if succ:
                table[(t, i)] = succ[0]
    if mealy:
        labels = tuple(frozenset() for _ in range(T))
        outs = {
            (t, i): frozenset(v for v in lay.label_vars if model[reg.get("out_T", j, t, i, v)])
            for (t, i) in table
        }
    else:
        labels = tuple(frozenset(v for v in lay.label_vars if model[reg.get("out_T", j, t, v)]) for t in range(T))
        outs = None
    return LocalStrategy(T, 0, frozenset(lay.inputs), lay.outputs, table, labels, lay.associated, outs)


def _decode_certificate(model: Model, cnf: CnfInstance, lay: ProcessLayout) -> GuaranteeTs:
    reg, j, G = cnf.registry, lay.name, lay.certificate_size
    table = {}
    for u in range(G):
        for i in lay.cubes():
            succ = [u2 for u2 in range(G) if model[reg.get("trans_G", j, u, i, u2)]]
            if len(succ) != 1:
                raise DecodeError(f"{j}: certificate state {u} has {len(succ)} successors on {sorted(i)}")
            table[(u, i)] = succ[0]
    labels = tuple(
        frozenset(v for v in lay.guarantee_outputs if model[reg.get("out_G", j, u, v)]) for u in range(G)
    )
    return GuaranteeTs(G, 0, frozenset(lay.inputs), lay.guarantee_outputs, table, labels)


def decode(model: Model, cnf: CnfInstance) -> dict[str, DecodedProcess]:
    """Local strategies and certificates per process, read off the model."""
    return {
        name: DecodedProcess(_decode_local(model, cnf, lay), _decode_certificate(model, cnf, lay))
        for name, lay in cnf.layouts.items()
    }


def machine_units(cnf: CnfInstance, decoded: Mapping[str, DecodedProcess]) -> list[Clause]:
    """Unit clauses pinning every transition and label variable to the decoded machines."""
    reg = cnf.registry
    units: list[Clause] = []
    for name, lay in cnf.layouts.items():
        local, cert = decoded[name].local, decoded[name].certificate
        for t in range(lay.strategy_size):
            for i in lay.cubes():
                for t2 in range(lay.strategy_size):
                    v = reg.get("trans_T", name, t, i, t2)
                    units.append((v,) if local.transitions.get((t, i)) == t2 else (-v,))
                if cnf.mode == "mealy" and (t, i) in local.transitions:
                    for w in lay.label_vars:
                        v = reg.get("out_T", name, t, i, w)
                        units.append((v,) if w in local.mealy_outputs[(t, i)] else (-v,))
            if cnf.mode != "mealy":
                for w in lay.label_vars:
                    v = reg.get("out_T", name, t, w)
                    units.append((v,) if w in local.labels[t] else (-v,))
        for u in range(lay.certificate_size):
            for i in lay.cubes():
                for u2 in range(lay.certificate_size):
                    v = reg.get("trans_G", name, u, i, u2)
                    units.append((v,) if cert.transitions[(u, i)] == u2 else (-v,))
            for w in sorted(lay.guarantee_outputs):
                v = reg.get("out_G", name, u, w)
                units.append((v,) if w in cert.labels[u] else (-v,))
    return units


def roundtrip_consistent(cnf: CnfInstance, decoded: Mapping[str, DecodedProcess],
                         backend: SolverBackend = SolverBackend()) -> bool:
    """Re-solve with the decoded machines fixed; a consistent decoding stays satisfiable."""
    res = solve_clauses(cnf.num_vars, list(cnf.clauses) + machine_units(cnf, decoded), backend)
    return res.status == "sat"


__all__ = [
    "Cdcl", "Model", "SolveResult", "SolverBackend", "SolverError", "DecodeError", "DecodedProcess",
    "solve", "solve_clauses", "parse_solver_output", "decode", "machine_units", "roundtrip_consistent",
]
