"""Scalable benchmark families."""

from __future__ import annotations

from .architecture import Architecture
from .formats import SpecFile
from .logic import ConjunctiveSpec

FAMILIES = ("latch", "shift", "robots", "adder")


class BenchmarkError(ValueError):
    pass


def _make(procs, env, conjuncts) -> SpecFile:
    return SpecFile(Architecture.build(procs, env), ConjunctiveSpec.parse(conjuncts), tuple(conjuncts))


def latch(n: int) -> SpecFile:
    """n independent latch bits: on ``upd`` store ``inp_i``, otherwise keep ``out_i``."""
    if n < 1:
        raise BenchmarkError("latch needs at least one bit")
    procs = [(f"p{i}", [f"inp_{i}", "upd"], [f"out_{i}"]) for i in range(1, n + 1)]
    env = [f"inp_{i}" for i in range(1, n + 1)] + ["upd"]
    conjuncts = []
    for i in range(1, n + 1):
        conjuncts.append(f"G (upd -> (X out_{i} <-> inp_{i}))")
        conjuncts.append(f"G (!upd -> (X out_{i} <-> out_{i}))")
    return _make(procs, env, conjuncts)


def shift(n: int) -> SpecFile:
    """Every ``p_j`` sees all inputs and repeats input ``j+1`` (cyclically) one step later."""
    if n < 1:
        raise BenchmarkError("shift needs at least one process")
    inputs = [f"i_{k}" for k in range(1, n + 1)]
    procs = [(f"p{j}", inputs, [f"o_{j}"]) for j in range(1, n + 1)]
    conjuncts = [f"G (X o_{j} <-> i_{j % n + 1})" for j in range(1, n + 1)]
    return _make(procs, inputs, conjuncts)


def _next(k: int, body: str) -> str:
    return "X " * k + body


def robots(n1: int = 0, n2: int = 0) -> SpecFile:
    """Two robots sharing a crossing; ``n_i > 0`` adds a machine visit every ``n_i`` steps."""
    procs = [
        ("r1", ["at_crossing_1", "at_crossing_2", "go_2"], ["go_1", "m_1"]),
        ("r2", ["at_crossing_1", "at_crossing_2", "go_1"], ["go_2", "m_2"]),
    ]
    env = ["at_crossing_1", "at_crossing_2"]
    conjuncts = ["G !((at_crossing_1 && X go_1) && (at_crossing_2 && X go_2))"]
    for i in (1, 2):
        conjuncts.append(f"G (at_crossing_{i} -> X F go_{i})")
    for i, n in ((1, n1), (2, n2)):
        if n < 0:
            raise BenchmarkError("robot parameters must be non-negative")
        if n == 0:
            continue
        steps = [_next(k, f"!m_{i}") for k in range(1, n)] + [_next(n, f"m_{i}")]
        body = " && ".join(f"({s})" for s in steps)
        conjuncts.append(f"m_{i} && G (m_{i} -> ({body}))")
    return _make(procs, env, conjuncts)


def _full_adder(x: str, y: str, c: str, s: str, cout: str) -> list[str]:
    carry = f"G (X {cout} <-> (({x} && {y}) || ({c} && (({x} && !{y}) || (!{x} && {y})))))"
    total = (f"G (X {s} <-> ((({x} && !{y}) && !{c}) || ((!{x} && {y}) && !{c})"
             f" || ((!{x} && !{y}) && {c}) || (({x} && {y}) && {c})))")
    return [carry, total]


def adder(n: int) -> SpecFile:
    """Ripple-carry adder over bits ``0..n-1``; bit ``i`` is computed by process ``p{i}``."""
    if n < 1:
        raise BenchmarkError("adder needs at least one bit")
    procs = []
    for i in range(n):
        carry_in = "c_in" if i == 0 else f"c_{i - 1}"
        procs.append((f"p{i}", [f"x_{i}", f"y_{i}", carry_in], [f"s_{i}", f"c_{i}"]))
    env = ["c_in"] + [f"x_{i}" for i in range(n)] + [f"y_{i}" for i in range(n)]
    conjuncts = _full_adder("x_0", "y_0", "c_in", "s_0", "c_0")
    for i in range(1, n):
        conjuncts += _full_adder(f"x_{i}", f"y_{i}", f"c_{i - 1}", f"s_{i}", f"c_{i}")
    return _make(procs, env, conjuncts)


def generate(family: str, param: str | int) -> SpecFile:
    text = str(param).strip()
    match family:
        case "robots":
            parts = [p for p in text.replace(" ", "").split(",") if p]
            if len(parts) == 1:
                parts = parts * 2
            if len(parts) != 2 or not all(p.isdigit() for p in parts):
                raise BenchmarkError(f"robots expects 'n1,n2', got {text!r}")
            return robots(int(parts[0]), int(parts[1]))
        case "latch" | "shift" | "adder":
            if not text.isdigit():
                raise BenchmarkError(f"{family} expects a positive integer, got {text!r}")
            return {"latch": latch, "shift": shift, "adder": adder}[family](int(text))
        case _:
            raise BenchmarkError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
