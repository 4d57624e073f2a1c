"""Propositional encoding of bounded certifying synthesis with local strategies."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .architecture import Architecture, guarantee_alphabet
from .automata import UniversalCoBuchi
from .logic import ConjunctiveSpec
from .machines import Letter, letters_over

log = logging.getLogger(__name__)

MAX_LOCAL_INPUTS = 12
DEFAULT_CLAUSE_CAP = 20_000_000

Clause = tuple[int, ...]


class EncodingError(ValueError):
    pass


class EncodingSizeError(RuntimeError):
    pass


@dataclass(frozen=True)
class Bounds:
    """Strategy and certificate sizes per process."""

    strategy: Mapping[str, int]
    certificate: Mapping[str, int]

    def __post_init__(self):
        for kind, table in (("strategy", self.strategy), ("certificate", self.certificate)):
            for name, size in table.items():
                if size < 1:
                    raise ValueError(f"{kind} bound of {name!r} must be positive")

    @classmethod
    def uniform(cls, names: Iterable[str], strategy: int, certificate: int) -> Bounds:
        names = list(names)
        return cls({n: strategy for n in names}, {n: certificate for n in names})

    def pair(self) -> tuple[int, int]:
        """``(max strategy, max certificate)`` over all processes."""
        return max(self.strategy.values()), max(self.certificate.values())

    def to_dict(self) -> dict:
        return {"strategy": dict(self.strategy), "certificate": dict(self.certificate)}


def _cube_name(i: Letter) -> str:
    return "+".join(sorted(i)) if i else "-"


class VariableRegistry:
    """Bijection between semantic variables and DIMACS indices."""

    def __init__(self):
        self._index: dict[tuple, int] = {}
        self._keys: list[tuple | None] = [None]

    def var(self, *key) -> int:
        v = self._index.get(key)
        if v is None:
            v = len(self._keys)
            self._index[key] = v
            self._keys.append(key)
        return v

    def get(self, *key) -> int | None:
        return self._index.get(key)

    def fresh(self, kind: str = "aux") -> int:
        return self.var(kind, len(self._keys))

    def key(self, v: int) -> tuple:
        return self._keys[v]

    def __len__(self) -> int:
        return len(self._keys) - 1

    def __contains__(self, key) -> bool:
        return key in self._index

    def items(self):
        return self._index.items()

    @staticmethod
    def name_of(key: tuple) -> str:
        return "/".join(_cube_name(x) if isinstance(x, frozenset) else str(x) for x in key)

    def to_json(self) -> dict[str, int]:
        return {self.name_of(k): v for k, v in self._index.items()}

    @classmethod
    def from_json(cls, data: Mapping[str, int]) -> VariableRegistry:
        """Rebuild with string keys only (enough for reading models by name)."""
        reg = cls()
        reg._keys = [None] * (max(data.values(), default=0) + 1)
        for name, v in data.items():
            reg._index[(name,)] = v
            reg._keys[v] = (name,)
        return reg


@dataclass(frozen=True)
class ProcessLayout:
    name: str
    inputs: tuple[str, ...]
    outputs: frozenset[str]
    guarantee_outputs: frozenset[str]
    associated: frozenset[str]
    strategy_size: int
    certificate_size: int
    uca: UniversalCoBuchi = field(repr=False)
    relevant: tuple[str, ...] = ()

    @property
    def label_vars(self) -> tuple[str, ...]:
        return tuple(sorted(self.outputs | self.associated))

    def cubes(self) -> tuple[Letter, ...]:
        return letters_over(self.inputs)


@dataclass
class CnfInstance:
    clauses: list[Clause]
    registry: VariableRegistry
    layouts: dict[str, ProcessLayout]
    bounds: Bounds | None
    mode: str = "moore"

    @property
    def num_vars(self) -> int:
        return len(self.registry)

    def stats(self) -> dict:
        return {"variables": self.num_vars, "clauses": len(self.clauses)}


# ---------------------------------------------------------------------------
# helpers


def exactly_one(lits: Sequence[int]) -> list[Clause]:
    return [tuple(lits)] + at_most_one(lits)


def at_most_one(lits: Sequence[int]) -> list[Clause]:
    return [(-a, -b) for k, a in enumerate(lits) for b in lits[k + 1:]]


def comparator(reg: VariableRegistry, a: Sequence[int], b: Sequence[int], strict: bool) -> tuple[int, list[Clause]]:
    """Literal ``x`` with ``x -> a > b`` (or ``>=``), bit vectors most significant first.

    One-sided lexicographic chain: ``x_k -> a_k >= b_k`` and
    ``x_k -> (a_k > b_k or x_{k-1})``; the chain bottoms out in true for ``>=``
    and false for ``>``.
    """
    clauses: list[Clause] = []
    below: int | None = None  # None encodes the constant base
    for ak, bk in zip(reversed(a), reversed(b)):
        x = reg.fresh("cmp")
        clauses.append((-x, ak, -bk))
        if below is None:
            if strict:
                clauses.append((-x, ak))
                clauses.append((-x, -bk))
        else:
            clauses.append((-x, ak, below))
            clauses.append((-x, -bk, below))
        below = x
    if below is None:
        # zero-width vectors: >= holds, > does not
        x = reg.fresh("cmp")
        if strict:
            clauses.append((-x,))
        return x, clauses
    return below, clauses


def bit_width(strategy_size: int, automaton_size: int) -> int:
    return max(1, (strategy_size * automaton_size).bit_length())


# ---------------------------------------------------------------------------
# the encoder


class _Encoder:
    def __init__(self, arch: Architecture, dec: Mapping[str, ConjunctiveSpec],
                 relevant: Mapping[str, Iterable[str]], ucas: Mapping[str, UniversalCoBuchi],
                 bounds: Bounds, mode: str, max_clauses: int):
        if mode not in ("moore", "mealy"):
            raise EncodingError(f"unknown mode {mode!r}")
        self.arch = arch
        self.mode = mode
        self.max_clauses = max_clauses
        self.reg = VariableRegistry()
        self.clauses: list[Clause] = []
        alpha = guarantee_alphabet(arch, relevant)
        order = {n: k for k, n in enumerate(arch.names)}
        self.layouts: dict[str, ProcessLayout] = {}
        for p in arch.processes:
            if len(p.inputs) > MAX_LOCAL_INPUTS:
                raise EncodingError(
                    f"process {p.name!r} has {len(p.inputs)} inputs; at most {MAX_LOCAL_INPUTS} supported")
            props = dec[p.name].props()
            if not props <= p.variables:
                log.debug("process %s: subspecification mentions %s outside its variables; "
                            "the encoding may be incomplete", p.name, sorted(props - p.variables))
            self.layouts[p.name] = ProcessLayout(
                p.name, tuple(sorted(p.inputs)), p.outputs, alpha.guarantee_outputs[p.name],
                alpha.associated_outputs[p.name], bounds.strategy[p.name], bounds.certificate[p.name],
                ucas[p.name], tuple(sorted(relevant.get(p.name, ()), key=order.__getitem__)),
            )
        self.bounds = bounds

    # variable constructors
    def trans_T(self, j, t, i, t2):
        return self.reg.var("trans_T", j, t, i, t2)

    def trans_G(self, j, u, i, u2):
        return self.reg.var("trans_G", j, u, i, u2)

    def out_T(self, j, t, v, i=None):
        if self.mode == "mealy":
            return self.reg.var("out_T", j, t, i, v)
        return self.reg.var("out_T", j, t, v)

    def out_G(self, j, u, v):
        return self.reg.var("out_G", j, u, v)

    def sim_TG(self, j, t, u):
        return self.reg.var("sim_TG", j, t, u)

    def sim_GT(self, k, j, u, t):
        return self.reg.var("sim_GT", k, j, u, t)

    def reach(self, j, t, q):
        return self.reg.var("reach", j, t, q)

    def bound_bits(self, j, t, q, width):
        return [self.reg.var("bound", j, t, q, b) for b in range(width)]

    def emit(self, clauses: Iterable[Clause]):
        self.clauses.extend(clauses)
        if len(self.clauses) > self.max_clauses:
            raise EncodingSizeError(f"more than {self.max_clauses} clauses")

    def declare(self, lay: ProcessLayout):
        """Register the machine variables up front so their indices do not depend on clause order."""
        j = lay.name
        for t in range(lay.strategy_size):
            for i in lay.cubes():
                for t2 in range(lay.strategy_size):
                    self.trans_T(j, t, i, t2)
            if self.mode == "mealy":
                for i in lay.cubes():
                    for v in lay.label_vars:
                        self.out_T(j, t, v, i)
            else:
                for v in lay.label_vars:
                    self.out_T(j, t, v)
        for u in range(lay.certificate_size):
            for i in lay.cubes():
                for u2 in range(lay.certificate_size):
                    self.trans_G(j, u, i, u2)
            for v in sorted(lay.guarantee_outputs):
                self.out_G(j, u, v)

    # (a)
    def guarantee_total(self, lay: ProcessLayout) -> list[Clause]:
        j, G = lay.name, lay.certificate_size
        out = []
        for u in range(G):
            for i in lay.cubes():
                out += exactly_one([self.trans_G(j, u, i, u2) for u2 in range(G)])
        return out

    # (b)
    def self_simulation(self, lay: ProcessLayout) -> list[Clause]:
        j, T, G = lay.name, lay.strategy_size, lay.certificate_size
        out: list[Clause] = [(self.sim_TG(j, 0, 0),)]
        for t in range(T):
            for u in range(G):
                s = self.sim_TG(j, t, u)
                for v in sorted(lay.guarantee_outputs):
                    g = self.out_G(j, u, v)
                    for i in (lay.cubes() if self.mode == "mealy" else (None,)):
                        a = self.out_T(j, t, v, i)
                        out += [(-s, -a, g), (-s, a, -g)]
                for i in lay.cubes():
                    for t2 in range(T):
                        tt = self.trans_T(j, t, i, t2)
                        for u2 in range(G):
                            out.append((-s, -tt, -self.trans_G(j, u, i, u2), self.sim_TG(j, t2, u2)))
        return out

    def valid(self, lay: ProcessLayout, t: int, i: Letter) -> int | None:
        """Literal for "input ``i`` agrees with the associated labels at ``t``"; None means always."""
        if not lay.associated:
            return None
        if self.mode == "moore":
            i = i & lay.associated
        key = ("valid", lay.name, t, i)
        if key in self.reg:
            return self.reg.get(*key)
        x = self.reg.var(*key)
        lits = []
        for v in sorted(lay.associated):
            o = self.out_T(lay.name, t, v, i)
            lits.append(o if v in i else -o)
        self.emit([(-x, lit) for lit in lits])
        self.emit([tuple(-lit for lit in lits) + (x,)])
        return x

    # (c)
    def cross_simulation(self, k_lay: ProcessLayout, lay: ProcessLayout) -> list[Clause]:
        k, j = k_lay.name, lay.name
        T, Gk = lay.strategy_size, k_lay.certificate_size
        Ij, Ik = frozenset(lay.inputs), frozenset(k_lay.inputs)
        own_only = tuple(sorted(Ij - Ik))
        shared_out = sorted(lay.associated & k_lay.guarantee_outputs)
        out: list[Clause] = [(self.sim_GT(k, j, 0, 0),)]
        pairs = [(i, (i & Ij) | rest) for i in k_lay.cubes() for rest in letters_over(own_only)]
        for u in range(Gk):
            for t in range(T):
                s = self.sim_GT(k, j, u, t)
                for v in shared_out:
                    g = self.out_G(k, u, v)
                    if self.mode == "mealy":
                        for i2 in lay.cubes():
                            val = self.valid(lay, t, i2)
                            a = self.out_T(j, t, v, i2)
                            guard = (-s,) if val is None else (-s, -val)
                            out += [guard + (-a, g), guard + (a, -g)]
                    else:
                        a = self.out_T(j, t, v)
                        out += [(-s, -a, g), (-s, a, -g)]
                # the valid(t, i2) premise is implied by the strategy transition under (d)
                for i, i2 in pairs:
                    for u2 in range(Gk):
                        gt = self.trans_G(k, u, i, u2)
                        for t2 in range(T):
                            out.append((-s, -gt, -self.trans_T(j, t, i2, t2), self.sim_GT(k, j, u2, t2)))
        return out

    # (d)
    def local_totality(self, lay: ProcessLayout) -> list[Clause]:
        j, T = lay.name, lay.strategy_size
        out: list[Clause] = []
        for t in range(T):
            for i in lay.cubes():
                succ = [self.trans_T(j, t, i, t2) for t2 in range(T)]
                val = self.valid(lay, t, i)
                if val is None:
                    out.append(tuple(succ))
                else:
                    out.append((-val,) + tuple(succ))
                    out += [(-x, val) for x in succ]
                out += at_most_one(succ)
        return out

    # Mealy only
    def env_totality(self, lay: ProcessLayout) -> list[Clause]:
        j, T = lay.name, lay.strategy_size
        env = tuple(sorted(frozenset(lay.inputs) - lay.associated))
        out: list[Clause] = []
        for t in range(T):
            for e in letters_over(env):
                lits = [self.trans_T(j, t, e | a, t2)
                        for a in letters_over(lay.associated) for t2 in range(T)]
                out.append(tuple(lits))
        return out

    # (e)
    def annotation(self, lay: ProcessLayout) -> list[Clause]:
        j, T, uca = lay.name, lay.strategy_size, lay.uca
        width = bit_width(T, uca.num_states)
        inputs = frozenset(lay.inputs)
        out: list[Clause] = [(self.reach(j, 0, uca.initial),)]
        succ_aux: dict[tuple[int, int, int, int], int] = {}

        def successor(t, q, t2, q2):
            key = (t, q, t2, q2)
            x = succ_aux.get(key)
            if x is None:
                x = self.reg.var("succ", j, t, q, t2, q2)
                succ_aux[key] = x
                cmp, cl = comparator(self.reg, self.bound_bits(j, t2, q2, width),
                                     self.bound_bits(j, t, q, width), q2 in uca.rejecting)
                out.append((-x, self.reach(j, t2, q2)))
                out.append((-x, cmp))
                out.extend(cl)
            return x

        for q in range(uca.num_states):
            for g, q2 in uca.out_edges(q):
                pos_in, neg_in = g.pos & inputs, g.neg & inputs
                pos_out, neg_out = g.pos & lay.outputs, g.neg & lay.outputs
                for i in lay.cubes():
                    if not pos_in <= i or neg_in & i:
                        continue
                    for t in range(T):
                        guard = [-self.out_T(j, t, o, i) for o in sorted(pos_out)]
                        guard += [self.out_T(j, t, o, i) for o in sorted(neg_out)]
                        r = self.reach(j, t, q)
                        for t2 in range(T):
                            out.append(tuple([-r] + guard + [-self.trans_T(j, t, i, t2), successor(t, q, t2, q2)]))
        return out

    def run(self) -> CnfInstance:
        for lay in self.layouts.values():
            self.declare(lay)
        for lay in self.layouts.values():
            self.emit(self.guarantee_total(lay))
            self.emit(self.self_simulation(lay))
            for k in lay.relevant:
                self.emit(self.cross_simulation(self.layouts[k], lay))
            self.emit(self.local_totality(lay))
            if self.mode == "mealy":
                self.emit(self.env_totality(lay))
            self.emit(self.annotation(lay))
        return CnfInstance(self.clauses, self.reg, self.layouts, self.bounds, self.mode)


def encode(arch: Architecture, dec: Mapping[str, ConjunctiveSpec], relevant: Mapping[str, Iterable[str]],
           ucas: Mapping[str, UniversalCoBuchi], bounds: Bounds, mode: str = "moore",
           max_clauses: int = DEFAULT_CLAUSE_CAP) -> CnfInstance:
    """Constraint system whose models are certifying-synthesis solutions within ``bounds``.

    Clauses come grouped by process (architecture order) and then by family:
    certificate totality, self simulation, cross simulation per relevant
    process, local totality, (Mealy) environment totality, annotation.
    """
    return _Encoder(arch, dec, relevant, ucas, bounds, mode, max_clauses).run()


def constraint_families(arch, dec, relevant, ucas, bounds, mode="moore") -> dict[str, dict[str, list[Clause]]]:
    """The clause families per process, separately (for inspection and tests)."""
    enc = _Encoder(arch, dec, relevant, ucas, bounds, mode, DEFAULT_CLAUSE_CAP)
    for lay in enc.layouts.values():
        enc.declare(lay)
    result = {}
    for lay in enc.layouts.values():
        fam = {
            "guarantee_total": enc.guarantee_total(lay),
            "self_simulation": enc.self_simulation(lay),
        }
        for k in lay.relevant:
            fam[f"cross_simulation/{k}"] = enc.cross_simulation(enc.layouts[k], lay)
        fam["local_totality"] = enc.local_totality(lay)
        fam["env_totality"] = enc.env_totality(lay) if mode == "mealy" else []
        fam["annotation"] = enc.annotation(lay)
        result[lay.name] = fam
    return result


# ---------------------------------------------------------------------------
# DIMACS


def to_dimacs(cnf: CnfInstance | tuple[int, Sequence[Clause]]) -> str:
    if isinstance(cnf, CnfInstance):
        num_vars, clauses = cnf.num_vars, cnf.clauses
    else:
        num_vars, clauses = cnf
    lines = [f"p cnf {num_vars} {len(clauses)}"]
    lines += [" ".join(map(str, c)) + " 0" for c in clauses]
    return "\n".join(lines)


class DimacsError(ValueError):
    pass


def parse_dimacs(text: str) -> tuple[int, list[Clause]]:
    num_vars = num_clauses = None
    clauses: list[Clause] = []
    current: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"bad header {line!r}")
            num_vars, num_clauses = int(parts[2]), int(parts[3])
            continue
        if num_vars is None:
            raise DimacsError("clause before header")
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                if abs(lit) > num_vars:
                    raise DimacsError(f"literal {lit} exceeds declared variables")
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    if num_vars is None:
        raise DimacsError("missing header")
    if len(clauses) != num_clauses:
        raise DimacsError(f"header declares {num_clauses} clauses, found {len(clauses)}")
    return num_vars, clauses
