"""Transition systems: strategies, guarantee systems and local strategies."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

Letter = frozenset[str]


@lru_cache(maxsize=None)
def cubes(variables: tuple[str, ...]) -> tuple[Letter, ...]:
    """All valuations of ``variables`` in binary counting order (first variable = bit 0)."""
    return tuple(
        frozenset(v for b, v in enumerate(variables) if k >> b & 1)
        for k in range(1 << len(variables))
    )


def letters_over(variables: Iterable[str]) -> tuple[Letter, ...]:
    return cubes(tuple(sorted(variables)))


@dataclass(frozen=True)
class MooreTs:
    """Deterministic transition system with state labels.

    ``transitions`` maps ``(state, input letter)`` to a successor; missing keys
    are undefined transitions.  ``labels[t]`` ranges over ``outputs`` plus
    ``associated`` (outputs of other processes the machine keeps track of).
    When ``mealy_outputs`` is set the output depends on the input as well and
    is read from that map instead of ``labels``.
    """

    num_states: int
    initial: int
    inputs: frozenset[str]
    outputs: frozenset[str]
    transitions: Mapping[tuple[int, Letter], int] = field(hash=False)
    labels: tuple[Letter, ...]
    associated: frozenset[str] = frozenset()
    mealy_outputs: Mapping[tuple[int, Letter], Letter] | None = field(default=None, hash=False)

    def __post_init__(self):
        if not 0 <= self.initial < self.num_states:
            raise ValueError("initial state out of range")
        if len(self.labels) != self.num_states:
            raise ValueError("one label per state required")
        if self.inputs & self.outputs:
            raise ValueError(f"inputs and outputs overlap: {sorted(self.inputs & self.outputs)}")
        for (t, i), t2 in self.transitions.items():
            if not (0 <= t < self.num_states and 0 <= t2 < self.num_states):
                raise ValueError(f"transition {t} -> {t2} out of range")
            if not i <= self.inputs:
                raise ValueError(f"transition letter {sorted(i)} not over the inputs")

    @property
    def mealy(self) -> bool:
        return self.mealy_outputs is not None

    @property
    def own_outputs(self) -> frozenset[str]:
        return self.outputs

    @property
    def label_vars(self) -> frozenset[str]:
        return self.outputs | self.associated

    def letters(self) -> tuple[Letter, ...]:
        return letters_over(self.inputs)

    def step(self, t: int, i: Iterable[str]) -> int | None:
        return self.transitions.get((t, frozenset(i) & self.inputs))

    def output(self, t: int, i: Iterable[str] = frozenset()) -> Letter:
        if self.mealy_outputs is not None:
            return self.mealy_outputs.get((t, frozenset(i) & self.inputs), frozenset())
        return self.labels[t]

    def defined_inputs(self, t: int) -> frozenset[Letter]:
        return frozenset(i for i in self.letters() if (t, i) in self.transitions)

    def is_total(self) -> bool:
        return all((t, i) in self.transitions for t in range(self.num_states) for i in self.letters())

    def reachable(self) -> list[int]:
        order = [self.initial]
        seen = {self.initial}
        for t in order:
            for i in self.letters():
                t2 = self.transitions.get((t, i))
                if t2 is not None and t2 not in seen:
                    seen.add(t2)
                    order.append(t2)
        return order


@dataclass(frozen=True)
class GuaranteeTs(MooreTs):
    """Certificate: a total transition system over a process's inputs and guarantee outputs."""

    def __post_init__(self):
        super().__post_init__()
        if not self.is_total():
            raise ValueError("guarantee transition systems must be total")


@dataclass(frozen=True)
class LocalStrategy(MooreTs):
    """Strategy with a partial transition function."""


def moore(num_states: int, initial: int, inputs: Iterable[str], outputs: Iterable[str],
          transitions: Mapping[tuple[int, Iterable[str]], int], labels: Sequence[Iterable[str]],
          kind: type[MooreTs] = MooreTs, associated: Iterable[str] = ()) -> MooreTs:
    """Convenience constructor accepting plain iterables."""
    return kind(num_states, initial, frozenset(inputs), frozenset(outputs),
                {(t, frozenset(i)): t2 for (t, i), t2 in transitions.items()},
                tuple(frozenset(x) for x in labels), frozenset(associated))


def from_guards(num_states: int, initial: int, inputs: Iterable[str], outputs: Iterable[str],
                edges: Iterable[tuple[int, Iterable[str], Iterable[str], int]],
                labels: Sequence[Iterable[str]], kind: type[MooreTs] = MooreTs,
                associated: Iterable[str] = ()) -> MooreTs:
    """Build a system from edges given as ``(src, positive, negative, dst)`` literal cubes."""
    inputs = frozenset(inputs)
    table: dict[tuple[int, Letter], int] = {}
    for src, pos, neg, dst in edges:
        pos, neg = frozenset(pos), frozenset(neg)
        for i in letters_over(inputs):
            if pos <= i and not (neg & i):
                if table.get((src, i), dst) != dst:
                    raise ValueError(f"nondeterministic edges at state {src} on {sorted(i)}")
                table[(src, i)] = dst
    return kind(num_states, initial, inputs, frozenset(outputs), table,
                tuple(frozenset(x) for x in labels), frozenset(associated))


# ---------------------------------------------------------------------------
# computations


def compute(ts: MooreTs, inputs: Sequence[Iterable[str]]) -> list[Letter]:
    """Letters ``i_k ∪ o_k`` while transitions are defined; empty input gives an empty trace."""
    trace = []
    t = ts.initial
    for raw in inputs:
        i = frozenset(raw) & ts.inputs
        t2 = ts.step(t, i)
        if t2 is None:
            break
        trace.append(i | (ts.output(t, i) & ts.outputs))
        t = t2
    return trace


def compose(systems: Sequence[MooreTs]) -> MooreTs:
    """Parallel composition, restricted to the reachable product.

    Each component reads the environment letter together with the current
    outputs of the others.  For Mealy components the internal outputs of a
    step are the unique fixed point; anything else is an error.
    """
    systems = list(systems)
    if not systems:
        raise ValueError("nothing to compose")
    seen_out: set[str] = set()
    for s in systems:
        if seen_out & s.outputs:
            raise ValueError(f"output overlap: {sorted(seen_out & s.outputs)}")
        seen_out |= s.outputs
    outputs = frozenset(seen_out)
    inputs = frozenset().union(*(s.inputs for s in systems)) - outputs
    internal = tuple(sorted(outputs & frozenset().union(*(s.inputs for s in systems))))
    mealy = any(s.mealy for s in systems)
    env_letters = letters_over(inputs)

    def joint(states, e):
        """Internal valuation and per-component successors, or None if some component is stuck."""
        if not mealy:
            w = frozenset().union(*(s.output(t) & s.outputs for s, t in zip(systems, states)))
            full = e | w
            nxt = tuple(s.step(t, full) for s, t in zip(systems, states))
            return (w, nxt) if None not in nxt else None
        found = []
        for w in cubes(internal):
            full = e | w
            if any(s.step(t, full) is None for s, t in zip(systems, states)):
                continue
            produced = frozenset().union(*(s.output(t, full) & s.outputs for s, t in zip(systems, states)))
            if produced & frozenset(internal) == w:
                found.append((full | produced, tuple(s.step(t, full) for s, t in zip(systems, states))))
        if len(found) > 1:
            raise ValueError(f"composition not well defined at {states} on {sorted(e)}")
        return found[0] if found else None

    start = tuple(s.initial for s in systems)
    ids = {start: 0}
    order = [start]
    table: dict[tuple[int, Letter], int] = {}
    mealy_out: dict[tuple[int, Letter], Letter] = {}
    for states in order:
        for e in env_letters:
            res = joint(states, e)
            if res is None:
                continue
            full, nxt = res
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
            table[(ids[states], e)] = ids[nxt]
            if mealy:
                mealy_out[(ids[states], e)] = full & outputs
    labels = tuple(
        frozenset().union(*(s.labels[t] & s.outputs for s, t in zip(systems, states))) for states in order
    )
    return MooreTs(len(order), 0, inputs, outputs, table, labels,
                   mealy_outputs=mealy_out if mealy else None)


def parallel_compose(a: MooreTs, b: MooreTs) -> MooreTs:
    return compose([a, b])


# ---------------------------------------------------------------------------
# simulation


def simulates(abstract: MooreTs, concrete: MooreTs, observed: Iterable[str]) -> frozenset[tuple[int, int]] | None:
    """Greatest simulation ``R ⊆ T_concrete × T_abstract`` over ``observed``, or None.

    Related states agree on the observed outputs, and every defined concrete
    transition is matched by the abstract one on the same input.
    """
    observed = frozenset(observed)
    if abstract.inputs != concrete.inputs:
        raise ValueError("simulation needs identical inputs")
    if not observed <= abstract.label_vars or not observed <= concrete.label_vars:
        raise ValueError(f"observed outputs {sorted(observed)} not produced by both systems")
    letters = concrete.letters()

    def agree(t, u):
        if concrete.mealy or abstract.mealy:
            return all(concrete.output(t, i) & observed == abstract.output(u, i) & observed
                       for i in letters if concrete.step(t, i) is not None)
        return concrete.labels[t] & observed == abstract.labels[u] & observed

    rel = {(t, u) for t in range(concrete.num_states) for u in range(abstract.num_states) if agree(t, u)}
    changed = True
    while changed:
        changed = False
        for t, u in sorted(rel):
            for i in letters:
                t2 = concrete.step(t, i)
                if t2 is None:
                    continue
                u2 = abstract.step(u, i)
                if u2 is None or (t2, u2) not in rel:
                    rel.discard((t, u))
                    changed = True
                    break
    if (concrete.initial, abstract.initial) not in rel:
        return None
    return frozenset(rel)


# ---------------------------------------------------------------------------
# valid histories, restriction and extension


def is_valid_history(prefix: Sequence[Iterable[str]], guarantees: Iterable[MooreTs]) -> bool:
    for g in guarantees:
        u = g.initial
        for raw in prefix:
            letter = frozenset(raw)
            if letter & g.outputs != g.output(u, letter) & g.outputs:
                return False
            u = g.step(u, letter)
            if u is None:
                return False
    return True


def restrict(s: MooreTs, guarantees: Sequence[MooreTs]) -> LocalStrategy:
    """Drop the transitions of ``s`` that are only taken when some certificate is violated.

    The guarantee systems are tracked through a subset construction since
    they may read variables ``s`` cannot see.  Hidden variables produced by a
    tracked guarantee take that guarantee's output; other hidden variables are
    unconstrained.  Associated labels record the tracked outputs ``s`` reads.
    """
    guarantees = list(guarantees)
    visible = s.inputs | s.outputs
    associated = frozenset().union(*(g.outputs for g in guarantees)) & s.inputs if guarantees else frozenset()
    hidden = (frozenset().union(*(g.inputs | g.outputs for g in guarantees)) - visible) if guarantees else frozenset()
    determined = frozenset().union(*(g.outputs for g in guarantees)) & hidden if guarantees else frozenset()
    free = tuple(sorted(hidden - determined))

    def consistent(tup, i):
        return all(g.labels[u] & g.outputs & s.inputs == i & g.outputs for g, u in zip(guarantees, tup))

    def successors(t, tup, i):
        base = i | (s.output(t, i) & s.outputs)
        base |= frozenset().union(*(g.labels[u] & g.outputs for g, u in zip(guarantees, tup))) & determined
        return {tuple(g.step(u, base | h) for g, u in zip(guarantees, tup)) for h in cubes(free)}

    start = (s.initial, frozenset([tuple(g.initial for g in guarantees)]))
    ids = {start: 0}
    order = [start]
    table: dict[tuple[int, Letter], int] = {}
    for node in order:
        t, belief = node
        for i in s.letters():
            t2 = s.step(t, i)
            if t2 is None:
                continue
            nxt: set = set()
            for tup in belief:
                if consistent(tup, i):
                    nxt |= successors(t, tup, i)
            if not nxt:
                continue
            target = (t2, frozenset(nxt))
            if target not in ids:
                ids[target] = len(order)
                order.append(target)
            table[(ids[node], i)] = ids[target]

    def assoc_label(belief):
        labels = {frozenset().union(*(g.labels[u] & associated for g, u in zip(guarantees, tup)))
                  for tup in belief}
        return frozenset.intersection(*labels) if labels else frozenset()

    beliefs: dict[int, set] = {}
    for t, belief in order:
        beliefs.setdefault(t, set()).add(belief)
    if all(len(b) == 1 for b in beliefs.values()):
        # every strategy state is reached with one belief: keep the state space of s
        kept: dict[tuple[int, Letter], int] = {}
        for (t, i), t2 in s.transitions.items():
            if t not in beliefs:
                kept[(t, i)] = t2
        for (n, i), m in table.items():
            kept[(order[n][0], i)] = order[m][0]
        labels = tuple(
            (s.labels[t] & s.outputs) | (assoc_label(next(iter(beliefs[t]))) if t in beliefs else frozenset())
            for t in range(s.num_states)
        )
        mealy = None
        if s.mealy:
            mealy = {k: s.mealy_outputs[k] | _assoc_of(k[1], associated) for k in kept if k in s.mealy_outputs}
        return LocalStrategy(s.num_states, s.initial, s.inputs, s.outputs, kept, labels, associated, mealy)
    labels = tuple((s.labels[t] & s.outputs) | assoc_label(b) for t, b in order)
    mealy = None
    if s.mealy:
        mealy = {(n, i): s.mealy_outputs[(order[n][0], i)] | _assoc_of(i, associated) for (n, i) in table}
    return LocalStrategy(len(order), 0, s.inputs, s.outputs, table, labels, associated, mealy)


def _assoc_of(i: Letter, associated: frozenset[str]) -> Letter:
    return i & associated


def extend(s: MooreTs, own: MooreTs) -> MooreTs:
    """Complete a local strategy: behave as ``s`` until it gets stuck, then as ``own``.

    Outputs outside the certificate are empty after the switch.
    """
    if simulates(own, s, own.outputs) is None:
        raise ValueError("certificate does not simulate the local strategy")
    if s.is_total():
        labels = tuple(x & s.outputs for x in s.labels)
        mealy = {k: v & s.outputs for k, v in s.mealy_outputs.items()} if s.mealy else None
        return MooreTs(s.num_states, s.initial, s.inputs, s.outputs, dict(s.transitions), labels,
                       mealy_outputs=mealy)
    mealy = s.mealy or own.mealy
    start = (s.initial, own.initial)
    ids = {start: 0}
    order = [start]
    table: dict[tuple[int, Letter], int] = {}
    mealy_out: dict[tuple[int, Letter], Letter] = {}
    for node in order:
        t, u = node
        for i in s.letters():
            u2 = own.step(u, i)
            t2 = s.step(t, i) if t >= 0 else None
            target = (t2 if t2 is not None else -1, u2)
            if target not in ids:
                ids[target] = len(order)
                order.append(target)
            table[(ids[node], i)] = ids[target]
            if mealy:
                out = s.output(t, i) & s.outputs if t2 is not None else own.output(u, i) & own.outputs
                mealy_out[(ids[node], i)] = out
    labels = tuple(s.labels[t] & s.outputs if t >= 0 else own.labels[u] & own.outputs for t, u in order)
    return MooreTs(len(order), 0, s.inputs, s.outputs, table, labels,
                   mealy_outputs=mealy_out if mealy else None)


# ---------------------------------------------------------------------------
# serialization


class MachineFormatError(ValueError):
    pass


_KINDS = {"strategy": MooreTs, "certificate": GuaranteeTs, "local": LocalStrategy}


def to_dict(ts: MooreTs) -> dict:
    kind = {MooreTs: "strategy", GuaranteeTs: "certificate", LocalStrategy: "local"}[type(ts)]
    data = {
        "kind": kind,
        "states": ts.num_states,
        "initial": ts.initial,
        "inputs": sorted(ts.inputs),
        "outputs": sorted(ts.outputs),
        "associated": sorted(ts.associated),
        "labels": [sorted(x) for x in ts.labels],
        "transitions": [
            {"from": t, "input": sorted(i), "to": t2}
            for (t, i), t2 in sorted(ts.transitions.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1])))
        ],
    }
    if ts.mealy:
        data["mealy_outputs"] = [
            {"from": t, "input": sorted(i), "output": sorted(o)}
            for (t, i), o in sorted(ts.mealy_outputs.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1])))
        ]
    return data


def from_dict(data: Mapping) -> MooreTs:
    try:
        kind = _KINDS[data.get("kind", "strategy")]
        table = {(int(e["from"]), frozenset(e["input"])): int(e["to"]) for e in data["transitions"]}
        mealy = None
        if "mealy_outputs" in data:
            mealy = {(int(e["from"]), frozenset(e["input"])): frozenset(e["output"]) for e in data["mealy_outputs"]}
        return kind(int(data["states"]), int(data["initial"]), frozenset(data["inputs"]),
                    frozenset(data["outputs"]), table, tuple(frozenset(x) for x in data["labels"]),
                    frozenset(data.get("associated", ())), mealy)
    except (KeyError, TypeError, ValueError) as exc:
        raise MachineFormatError(f"malformed machine: {exc}") from exc


def dumps(ts: MooreTs) -> str:
    return json.dumps(to_dict(ts), indent=2)


def loads(text: str) -> MooreTs:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MachineFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MachineFormatError("machine must be a JSON object")
    return from_dict(data)


def _cube_text(i: Letter, variables: frozenset[str]) -> str:
    lits = [v if v in i else f"!{v}" for v in sorted(variables)]
    return " & ".join(lits) if lits else "true"


def to_dot(ts: MooreTs, name: str = "M") -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", "  init [shape=point];", f"  init -> s{ts.initial};"]
    for t in range(ts.num_states):
        label = "{" + ", ".join(sorted(ts.labels[t])) + "}"
        lines.append(f'  s{t} [shape=circle, label="{t}\\n{label}"];')
    grouped: dict[tuple[int, int], list[str]] = {}
    for (t, i), t2 in sorted(ts.transitions.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1]))):
        text = _cube_text(i, ts.inputs)
        if ts.mealy:
            text += " / " + ",".join(sorted(ts.mealy_outputs.get((t, i), ())))
        grouped.setdefault((t, t2), []).append(text)
    for (t, t2), texts in grouped.items():
        joined = "\\n".join(texts)
        lines.append(f'  s{t} -> s{t2} [label="{joined}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def rename_states(ts: MooreTs, kind: type[MooreTs]) -> MooreTs:
    """Same machine with a different class (e.g. to mark a strategy as a certificate)."""
    return kind(ts.num_states, ts.initial, ts.inputs, ts.outputs, dict(ts.transitions), ts.labels,
                ts.associated, ts.mealy_outputs)


__all__ = [
    "Letter", "MooreTs", "GuaranteeTs", "LocalStrategy", "cubes", "letters_over", "moore", "from_guards",
    "compute", "compose", "parallel_compose", "simulates", "is_valid_history", "restrict", "extend",
    "MachineFormatError", "to_dict", "from_dict", "dumps", "loads", "to_dot", "rename_states",
]
