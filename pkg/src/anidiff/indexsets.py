"""Good/bad classification of missing-dissipation direction assignments.

Each velocity component u_k is damped in exactly two of the three coordinate
directions; i_k labels the direction it misses.  For MHD, j_l plays the same
role for the magnetic component b_l.  An assignment is "bad" when it falls in
the combinatorial obstruction set for the energy method; the complements
number 18 (velocity-only) and 137 (coupled).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

__all__ = [
    "NsAssignment",
    "MhdAssignment",
    "Clause",
    "is_bad_ns",
    "is_bad_mhd",
    "enumerate_good_ns",
    "enumerate_good_mhd",
    "explain_bad",
    "uniqueness_gates",
]

_AXES = (1, 2, 3)


@dataclass(frozen=True, order=True)
class NsAssignment:
    """Missing-direction labels (i1, i2, i3); u_k has no damping along x_{i_k}."""

    i1: int
    i2: int
    i3: int

    def __post_init__(self):
        for v in (self.i1, self.i2, self.i3):
            if v not in _AXES:
                raise ValueError(f"direction label must be in {{1,2,3}}, got {v}")

    def i(self, k: int) -> int:
        """Missing direction of component k (1-based)."""
        return (self.i1, self.i2, self.i3)[k - 1]

    @property
    def labels(self) -> tuple[int, int, int]:
        return (self.i1, self.i2, self.i3)


@dataclass(frozen=True, order=True)
class MhdAssignment:
    """Velocity labels plus (j1, j2, j3); b_l has no damping along x_{j_l}."""

    ns: NsAssignment
    j1: int
    j2: int
    j3: int

    def __post_init__(self):
        for v in (self.j1, self.j2, self.j3):
            if v not in _AXES:
                raise ValueError(f"direction label must be in {{1,2,3}}, got {v}")

    @classmethod
    def from_labels(cls, i1, i2, i3, j1, j2, j3) -> "MhdAssignment":
        return cls(NsAssignment(i1, i2, i3), j1, j2, j3)

    def i(self, k: int) -> int:
        return self.ns.i(k)

    def j(self, l: int) -> int:
        return (self.j1, self.j2, self.j3)[l - 1]

    @property
    def labels(self) -> tuple[int, int, int, int, int, int]:
        return self.ns.labels + (self.j1, self.j2, self.j3)


@dataclass(frozen=True)
class Clause:
    """One violated obstruction clause.

    rule is "uu" for a velocity-only clause (components k and l miss the same
    direction, which is the remaining coordinate) and "ub" for the coupled
    clause i_k = j_l with the shared value outside {k, l}.
    """

    rule: str
    k: int
    l: int
    value: int

    def __str__(self) -> str:
        if self.rule == "uu":
            return f"uu: i{self.k}=i{self.l}={self.value}"
        return f"ub: i{self.k}=j{self.l}={self.value}"


def is_bad_ns(a: NsAssignment) -> bool:
    """True iff the velocity assignment is obstructed.

    The three clauses are exactly the pairs of components that share a missing
    direction equal to the remaining coordinate.
    """
    return (
        (a.i1 == a.i2 == 3)
        or (a.i2 == a.i3 == 1)
        or (a.i1 == a.i3 == 2)
    )


def is_bad_mhd(a: MhdAssignment) -> bool:
    """True iff the coupled assignment is obstructed.

    Bad when the velocity part alone is bad, or when some i_k equals some j_l
    with the shared value outside {k, l}.  Ordered pairs with k = l count
    (the exclusion set then has two elements); this reading reproduces the
    137 good assignments.
    """
    if is_bad_ns(a.ns):
        return True
    for k in _AXES:
        v = a.i(k)
        if v == k:
            continue  # v must lie outside {k, l}, so v != k always
        for l in _AXES:
            if v == a.j(l) and v != l:
                return True
    return False


def enumerate_good_ns() -> list[NsAssignment]:
    """All 18 unobstructed velocity assignments, lexicographic order."""
    return [
        a
        for a in (NsAssignment(*t) for t in product(_AXES, repeat=3))
        if not is_bad_ns(a)
    ]


def enumerate_good_mhd() -> list[MhdAssignment]:
    """All 137 unobstructed coupled assignments, lexicographic order."""
    return [
        a
        for a in (
            MhdAssignment.from_labels(*t) for t in product(_AXES, repeat=6)
        )
        if not is_bad_mhd(a)
    ]


def explain_bad(a: MhdAssignment | NsAssignment) -> list[Clause]:
    """Every obstruction clause the assignment violates; empty iff good.

    Velocity clauses are reported as ``uu`` with the offending component pair;
    coupled clauses as ``ub`` naming (k, l) and the shared direction.
    """
    ns = a if isinstance(a, NsAssignment) else a.ns
    clauses = []
    for (k, l, m) in ((1, 2, 3), (2, 3, 1), (1, 3, 2)):
        if ns.i(k) == ns.i(l) == m:
            clauses.append(Clause("uu", k, l, m))
    if isinstance(a, MhdAssignment):
        for k in _AXES:
            v = a.i(k)
            for l in _AXES:
                if v == a.j(l) and v != k and v != l:
                    clauses.append(Clause("ub", k, l, v))
    return clauses


def uniqueness_gates(a: MhdAssignment | NsAssignment) -> list[tuple[str, int, int]]:
    """Component pairs that require extra regularity for uniqueness.

    Returns ("u", k, l) when k != l and i_k = i_l = k: the comparison solution
    needs the 9/4-order derivative of u_l along x_k to be square-integrable in
    time.  For coupled assignments, ("b", k, l) when k != l and i_k = j_l = k
    (same requirement on b_l).  These are exactly the assignments on which the
    Kronecker-gated terms of the uniqueness rate functions activate.
    """
    ns = a if isinstance(a, NsAssignment) else a.ns
    gates = []
    for k in _AXES:
        for l in _AXES:
            if k != l and ns.i(k) == ns.i(l) == k:
                gates.append(("u", k, l))
    if isinstance(a, MhdAssignment):
        for k in _AXES:
            for l in _AXES:
                if k != l and a.i(k) == k and a.j(l) == k:
                    gates.append(("b", k, l))
    return gates
