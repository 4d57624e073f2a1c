"""Büchi / universal co-Büchi automata, run graphs and annotations.

LTL formulas are translated by negating, converting to negation normal form,
expanding a tableau into a transition-based generalized Büchi automaton and
degeneralizing it.  Reading the resulting Büchi automaton for ``!f`` universally,
with the accepting states as rejecting ones, gives a universal co-Büchi
automaton for ``f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

from .logic import Formula, Not, atomic_props, nnf, to_text


class AutomatonSizeError(RuntimeError):
    pass


DEFAULT_STATE_CAP = 5000


@dataclass(frozen=True, order=True)
class Guard:
    """Conjunction of literals: ``pos`` must hold, ``neg`` must not."""

    pos: frozenset[str] = frozenset()
    neg: frozenset[str] = frozenset()

    def holds(self, letter: frozenset[str]) -> bool:
        return self.pos <= letter and not (self.neg & letter)

    def consistent(self, letter: frozenset[str], known: frozenset[str]) -> bool:
        """True if some valuation of the atoms outside ``known`` makes the guard hold."""
        return (self.pos & known) <= letter and not (self.neg & known & letter)

    def implies(self, other: Guard) -> bool:
        return other.pos <= self.pos and other.neg <= self.neg

    @property
    def atoms(self) -> frozenset[str]:
        return self.pos | self.neg

    def __str__(self) -> str:
        lits = sorted(self.pos) + [f"!{a}" for a in sorted(self.neg)]
        return " & ".join(lits) if lits else "true"


Edge = tuple[int, Guard, int]


@dataclass(frozen=True)
class BuchiAutomaton:
    num_states: int
    initial: int
    edges: tuple[Edge, ...]
    accepting: frozenset[int]
    alphabet: frozenset[str]

    def successors(self, q: int, letter: frozenset[str]) -> list[int]:
        return [d for s, g, d in self.edges if s == q and g.holds(letter)]


@dataclass(frozen=True)
class UniversalCoBuchi:
    num_states: int
    initial: int
    edges: tuple[Edge, ...]
    rejecting: frozenset[int]
    alphabet: frozenset[str]
    _out: dict = field(default=None, compare=False, repr=False, hash=False)

    def out_edges(self, q: int) -> list[tuple[Guard, int]]:
        if self._out is None:
            table: dict[int, list[tuple[Guard, int]]] = {s: [] for s in range(self.num_states)}
            for s, g, d in self.edges:
                table[s].append((g, d))
            object.__setattr__(self, "_out", table)
        return self._out[q]

    def successors(self, q: int, letter: frozenset[str]) -> list[int]:
        return [d for g, d in self.out_edges(q) if g.holds(letter)]


# ---------------------------------------------------------------------------
# graph helpers


def sccs(nodes: Iterable[Hashable], succ: Callable[[Hashable], Iterable[Hashable]]) -> list[list]:
    """Tarjan's algorithm, iterative; components come out sinks first."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    result: list[list] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                result.append(comp)
    return result


def _is_cyclic(comp: list, succ) -> bool:
    return len(comp) > 1 or comp[0] in set(succ(comp[0]))


def reachable(start: Hashable, succ) -> list:
    seen = {start}
    order = [start]
    for v in order:
        for w in succ(v):
            if w not in seen:
                seen.add(w)
                order.append(w)
    return order


# ---------------------------------------------------------------------------
# LTL -> Büchi


def _covers(obligations: frozenset[Formula]):
    """All ways to satisfy ``obligations`` in one step.

    Yields ``(pos, neg, next_obligations, postponed_untils)``.
    """
    results = []

    def go(todo, done, pos, neg, nxt, post):
        while todo:
            f, todo = todo[0], todo[1:]
            if f in done:
                continue
            done = done | {f}
            match f.op:
                case "true":
                    pass
                case "false":
                    return
                case "atom":
                    if f.name in neg:
                        return
                    pos = pos | {f.name}
                case "not":
                    name = f.args[0].name
                    if name in pos:
                        return
                    neg = neg | {name}
                case "and":
                    todo = f.args + todo
                case "next":
                    nxt = nxt | {f.args[0]}
                case "or":
                    go((f.args[0],) + todo, done, pos, neg, nxt, post)
                    go((f.args[1],) + todo, done, pos, neg, nxt, post)
                    return
                case "until":
                    a, b = f.args
                    go((b,) + todo, done, pos, neg, nxt, post)
                    go((a,) + todo, done, pos, neg, nxt | {f}, post | {f})
                    return
                case "release":
                    a, b = f.args
                    go((a, b) + todo, done, pos, neg, nxt, post)
                    go((b,) + todo, done, pos, neg, nxt | {f}, post)
                    return
                case _:
                    raise ValueError(f"not in negation normal form: {f.op}")
        results.append((frozenset(pos), frozenset(neg), frozenset(nxt), frozenset(post)))

    start = tuple(sorted(obligations, key=to_text))
    empty: frozenset = frozenset()
    go(start, empty, empty, empty, empty, empty)
    return results


def _untils(f: Formula) -> list[Formula]:
    found: list[Formula] = []

    def walk(g):
        if g.op == "until" and g not in found:
            found.append(g)
        for a in g.args:
            walk(a)

    walk(f)
    return found


def ltl_to_nba(f: Formula, alphabet: Iterable[str] | None = None,
               max_states: int = DEFAULT_STATE_CAP) -> BuchiAutomaton:
    """Büchi automaton with language exactly ``L(f)``."""
    alphabet = frozenset(alphabet) if alphabet is not None else atomic_props(f)
    missing = atomic_props(f) - alphabet
    if missing:
        raise ValueError(f"atoms outside the alphabet: {sorted(missing)}")
    root = nnf(f)
    untils = _untils(root)
    k = len(untils)

    # transition-based generalized Büchi automaton over obligation sets
    start = frozenset([root])
    ids = {start: 0}
    order = [start]
    tgba: list[tuple[int, Guard, int, frozenset[int]]] = []
    for obligations in order:
        src = ids[obligations]
        for pos, neg, nxt, post in _covers(obligations):
            if nxt not in ids:
                if len(ids) >= max_states:
                    raise AutomatonSizeError(f"more than {max_states} tableau states")
                ids[nxt] = len(order)
                order.append(nxt)
            acc = frozenset(n for n, u in enumerate(untils) if u not in post)
            tgba.append((src, Guard(pos, neg), ids[nxt], acc))

    # degeneralize: level k marks completion of a round through all sets
    def advance(level: int, acc: frozenset[int]) -> int:
        if level == k:
            level = 0
        while level < k and level in acc:
            level += 1
        return level

    by_src: dict[int, list] = {}
    for s, g, d, acc in tgba:
        by_src.setdefault(s, []).append((g, d, acc))
    sids = {(0, 0): 0}
    sorder = [(0, 0)]
    edges: list[Edge] = []
    for node in sorder:
        s, level = node
        for g, d, acc in by_src.get(s, ()):
            tgt = (d, advance(level, acc))
            if tgt not in sids:
                if len(sids) >= max_states:
                    raise AutomatonSizeError(f"more than {max_states} automaton states")
                sids[tgt] = len(sorder)
                sorder.append(tgt)
            edges.append((sids[node], g, sids[tgt]))
    accepting = frozenset(i for i, (_, level) in enumerate(sorder) if level == k)
    return _prune(len(sorder), 0, edges, accepting, alphabet)


def _prune(n: int, initial: int, edges: list[Edge], accepting: frozenset[int],
           alphabet: frozenset[str]) -> BuchiAutomaton:
    """Drop states that cannot reach an accepting cycle and redundant edges."""
    succ: dict[int, set[int]] = {q: set() for q in range(n)}
    pred: dict[int, set[int]] = {q: set() for q in range(n)}
    for s, _, d in edges:
        succ[s].add(d)
        pred[d].add(s)
    good = set()
    for comp in sccs(range(n), lambda q: succ[q]):
        if _is_cyclic(comp, lambda q: succ[q]) and any(q in accepting for q in comp):
            good.update(comp)
    useful = set()
    for q in good:
        if q not in useful:
            useful.update(reachable(q, lambda x: pred[x]))
    keep = [q for q in reachable(initial, lambda x: succ[x]) if q in useful]
    if initial not in useful:
        keep = [initial]
    renum = {q: i for i, q in enumerate(keep)}
    raw = sorted({(renum[s], g, renum[d]) for s, g, d in edges if s in useful and d in useful
                  and s in renum and d in renum}, key=lambda e: (e[0], e[2], str(e[1])))
    kept: list[Edge] = []
    for e in raw:
        if any(o[0] == e[0] and o[2] == e[2] and o is not e and e[1].implies(o[1]) and o[1] != e[1]
               for o in raw):
            continue
        kept.append(e)
    return BuchiAutomaton(len(keep), 0, tuple(kept),
                          frozenset(renum[q] for q in keep if q in accepting and q in useful),
                          alphabet)


def nba_to_uca(nba: BuchiAutomaton) -> UniversalCoBuchi:
    """Read a Büchi automaton for ``!f`` universally: a co-Büchi automaton for ``f``."""
    return UniversalCoBuchi(nba.num_states, nba.initial, nba.edges, nba.accepting, nba.alphabet)


def ltl_to_uca(f: Formula, alphabet: Iterable[str] | None = None,
               max_states: int = DEFAULT_STATE_CAP) -> UniversalCoBuchi:
    alphabet = frozenset(alphabet) if alphabet is not None else atomic_props(f)
    return nba_to_uca(ltl_to_nba(Not(f), alphabet, max_states))


def conjunction_uca(ucas: Sequence[UniversalCoBuchi]) -> UniversalCoBuchi:
    """Universal automaton for the conjunction: a fresh initial state branching into all parts."""
    alphabet = frozenset().union(*(u.alphabet for u in ucas)) if ucas else frozenset()
    if len(ucas) == 1:
        return ucas[0]
    edges: list[Edge] = []
    rejecting: set[int] = set()
    offset = 1
    for u in ucas:
        for s, g, d in u.edges:
            edges.append((s + offset, g, d + offset))
            if s == u.initial:
                edges.append((0, g, d + offset))
        rejecting.update(q + offset for q in u.rejecting)
        offset += u.num_states
    return UniversalCoBuchi(offset, 0, tuple(edges), frozenset(rejecting), alphabet)


def spec_uca(conjuncts: Iterable[Formula], alphabet: Iterable[str] | None = None,
             max_states: int = DEFAULT_STATE_CAP) -> UniversalCoBuchi:
    conjuncts = list(conjuncts)
    if alphabet is None:
        alphabet = frozenset().union(*(atomic_props(c) for c in conjuncts)) if conjuncts else frozenset()
    parts = [ltl_to_uca(c, alphabet, max_states) for c in conjuncts]
    if not parts:
        return UniversalCoBuchi(1, 0, (), frozenset(), frozenset(alphabet))
    return conjunction_uca(parts)


# ---------------------------------------------------------------------------
# acceptance of lasso words


def _lasso_product(edges_of, initial: int, marked: frozenset[int],
                   stem: Sequence[frozenset[str]], loop: Sequence[frozenset[str]]) -> bool:
    """True iff some run on ``stem loop^omega`` visits a marked state infinitely often."""
    word = [frozenset(x) for x in stem] + [frozenset(x) for x in loop]
    n = len(word)

    def succ(node):
        q, p = node
        nxt = p + 1 if p + 1 < n else len(stem)
        return [(d, nxt) for g, d in edges_of(q) if g.holds(word[p])]

    nodes = reachable((initial, 0), succ)
    for comp in sccs(nodes, succ):
        if _is_cyclic(comp, succ) and any(q in marked for q, _ in comp):
            return True
    return False


def nba_accepts_lasso(nba: BuchiAutomaton, stem, loop) -> bool:
    table: dict[int, list] = {}
    for s, g, d in nba.edges:
        table.setdefault(s, []).append((g, d))
    return _lasso_product(lambda q: table.get(q, ()), nba.initial, nba.accepting, stem, loop)


def uca_accepts_lasso(uca: UniversalCoBuchi, stem, loop) -> bool:
    return not _lasso_product(uca.out_edges, uca.initial, uca.rejecting, stem, loop)


# ---------------------------------------------------------------------------
# run graphs


Node = tuple[Hashable, int]


@dataclass(frozen=True)
class RunGraph:
    initial: Node
    nodes: tuple[Node, ...]
    succ: dict
    rejecting: frozenset
    letters: dict = field(default_factory=dict, compare=False)

    @property
    def edges(self) -> frozenset[tuple[Node, Node]]:
        return frozenset((a, b) for a in self.nodes for b in self.succ[a])

    def successors(self, node: Node):
        return self.succ[node]


def build_run_graph(ts, uca: UniversalCoBuchi) -> RunGraph:
    """Product of a transition system and a universal co-Büchi automaton.

    ``ts`` provides ``initial``, ``inputs``, ``own_outputs``, ``letters()``,
    ``step(t, i)`` (``None`` where undefined) and ``output(t, i)``.  Atoms of
    the automaton the system does not know about are unconstrained.
    Only nodes reachable from the initial pair are kept.
    """
    if ts.inputs & ts.own_outputs:
        raise ValueError(f"inputs and outputs overlap: {sorted(ts.inputs & ts.own_outputs)}")
    known = ts.inputs | ts.own_outputs
    cubes = ts.letters()
    start = (ts.initial, uca.initial)
    succ: dict[Node, tuple[Node, ...]] = {}
    letters: dict[tuple[Node, Node], frozenset[str]] = {}
    order = [start]
    seen = {start}
    for node in order:
        t, q = node
        out: list[Node] = []
        for i in cubes:
            t2 = ts.step(t, i)
            if t2 is None:
                continue
            letter = i | (ts.output(t, i) & ts.own_outputs)
            for g, q2 in uca.out_edges(q):
                if g.consistent(letter, known):
                    nxt = (t2, q2)
                    if (node, nxt) not in letters:
                        # free atoms take the values the guard asks for
                        letters[(node, nxt)] = letter | (g.pos - known)
                        out.append(nxt)
                    if nxt not in seen:
                        seen.add(nxt)
                        order.append(nxt)
        succ[node] = tuple(out)
    rejecting = frozenset(n for n in order if n[1] in uca.rejecting)
    return RunGraph(start, tuple(order), succ, rejecting, letters)


def rejecting_cycles(rg: RunGraph) -> list[list[Node]]:
    """Reachable cyclic components of the run graph that contain a rejecting node."""
    return [comp for comp in sccs(reachable(rg.initial, rg.successors), rg.successors)
            if _is_cyclic(comp, rg.successors) and any(n in rg.rejecting for n in comp)]


def find_valid_annotation(rg: RunGraph) -> dict[Node, int] | None:
    """A valid annotation, or ``None`` when a reachable cycle visits a rejecting node.

    Each node gets the largest number of rejecting nodes entered on a path
    from the initial node.  Unreachable nodes are left unannotated.
    """
    comps = sccs(reachable(rg.initial, rg.successors), rg.successors)
    for comp in comps:
        if _is_cyclic(comp, rg.successors) and any(n in rg.rejecting for n in comp):
            return None
    comp_of = {n: i for i, comp in enumerate(comps) for n in comp}
    value: dict[Node, int] = {n: 0 for n in comp_of}
    # Tarjan emits sinks first, so walk components in reverse
    for comp in reversed(comps):
        best = max(value[n] for n in comp)
        for n in comp:
            value[n] = best
        for n in comp:
            for m in rg.successors(n):
                if comp_of[m] != comp_of[n]:
                    value[m] = max(value[m], best + (1 if m in rg.rejecting else 0))
    return value


def is_valid_annotation(rg: RunGraph, annotation: dict[Node, int | None]) -> bool:
    if annotation.get(rg.initial) is None:
        return False
    for n in rg.nodes:
        a = annotation.get(n)
        if a is None:
            continue
        for m in rg.successors(n):
            b = annotation.get(m)
            if b is None:
                return False
            if m in rg.rejecting and not b > a:
                return False
            if m not in rg.rejecting and not b >= a:
                return False
    return True


# ---------------------------------------------------------------------------
# DOT


def automaton_to_dot(aut: BuchiAutomaton | UniversalCoBuchi, name: str = "A") -> str:
    marked = aut.accepting if isinstance(aut, BuchiAutomaton) else aut.rejecting
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  init [shape=point];', f"  init -> q{aut.initial};"]
    for q in range(aut.num_states):
        shape = "doublecircle" if q in marked else "circle"
        lines.append(f'  q{q} [shape={shape}, label="{q}"];')
    for s, g, d in aut.edges:
        lines.append(f'  q{s} -> q{d} [label="{g}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def run_graph_to_dot(rg: RunGraph, name: str = "G") -> str:
    ids = {n: i for i, n in enumerate(rg.nodes)}
    lines = [f"digraph {name} {{"]
    for n, i in ids.items():
        shape = "doublecircle" if n in rg.rejecting else "circle"
        lines.append(f'  n{i} [shape={shape}, label="{n[0]},{n[1]}"];')
    for n in rg.nodes:
        for m in rg.successors(n):
            lines.append(f"  n{ids[n]} -> n{ids[m]};")
    lines.append("}")
    return "\n".join(lines) + "\n"
