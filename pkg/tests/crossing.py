"""The two-robot crossing machines used across the tests."""

from certsynth.architecture import Architecture
from certsynth.logic import ConjunctiveSpec
from certsynth.machines import GuaranteeTs, MooreTs, from_guards

AC1, AC2, GO1, GO2 = "at_crossing_1", "at_crossing_2", "go_1", "go_2"
I1 = (AC1, AC2, GO2)
I2 = (AC1, AC2, GO1)

SAFE = "G !((at_crossing_1 && X go_1) && (at_crossing_2 && X go_2))"
CROSS1 = "G (at_crossing_1 -> X F go_1)"
CROSS2 = "G (at_crossing_2 -> X F go_2)"


def robots_arch() -> Architecture:
    return Architecture.build(
        [("r1", I1, (GO1, "m_1")), ("r2", I2, (GO2, "m_2"))],
        (AC1, AC2),
    )


def robots_spec(*texts) -> ConjunctiveSpec:
    return ConjunctiveSpec.parse(texts or (SAFE, CROSS1, CROSS2))


def g2() -> GuaranteeTs:
    # left state: r1 at the crossing, so go_2 stays off
    edges = [(0, [AC1], [], 0), (0, [], [AC1], 1), (1, [AC1], [], 0), (1, [], [AC1], 1)]
    return from_guards(2, 0, I2, [GO2], edges, [[], [GO2]], GuaranteeTs)


def g1() -> GuaranteeTs:
    edges = [(0, [AC1], [], 0), (0, [], [AC1], 1), (1, [AC1], [], 0), (1, [], [AC1], 1)]
    return from_guards(2, 0, I1, [GO1], edges, [[GO1], []], GuaranteeTs)


S1_BLACK = [(0, [AC1], [GO2], 0), (0, [], [GO2, AC1], 1), (1, [GO2, AC1], [], 0), (1, [GO2], [AC1], 1)]
S1_GRAY = [(0, [GO2, AC1], [], 0), (0, [GO2], [AC1], 1), (1, [AC1], [GO2], 0), (1, [], [GO2, AC1], 1)]


def s1() -> MooreTs:
    """Total strategy of r1; the gray edges are the ones taken only if r2 breaks its certificate."""
    return from_guards(2, 0, I1, [GO1, "m_1"], S1_BLACK + S1_GRAY, [[GO1], []])


def s2() -> MooreTs:
    edges = [
        (0, [GO1, AC1], [], 0), (0, [GO1], [AC1], 1), (1, [AC1], [GO1], 0), (1, [], [GO1, AC1], 1),
        (0, [AC1], [GO1], 0), (0, [], [GO1, AC1], 1), (1, [GO1, AC1], [], 0), (1, [GO1], [AC1], 1),
    ]
    return from_guards(2, 0, I2, [GO2, "m_2"], edges, [[], [GO2]])
