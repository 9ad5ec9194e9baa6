"""Assignment-classification tests, cross-checked against a brute-force oracle.

The oracle below re-derives good/bad membership from the raw clause text with
explicit loops and a permutation-based formulation, independently of the
library's predicates.
"""

from itertools import permutations, product

import pytest

from anidiff.indexsets import (
    Clause,
    MhdAssignment,
    NsAssignment,
    enumerate_good_mhd,
    enumerate_good_ns,
    explain_bad,
    is_bad_mhd,
    is_bad_ns,
    uniqueness_gates,
)


# ---------------------------------------------------------------------------
# independent oracle: permutation-based bad set plus explicit double loop
# ---------------------------------------------------------------------------

def oracle_bad_ns(i1, i2, i3):
    labels = {1: i1, 2: i2, 3: i3}
    for (k, l, m) in permutations((1, 2, 3)):
        if k < l and labels[k] == labels[l] == m:
            return True
    return False


def oracle_bad_mhd(i, j):
    if oracle_bad_ns(*i):
        return True
    for kp in (1, 2, 3):
        for lp in (1, 2, 3):
            shared = set((1, 2, 3)) - {kp, lp}
            if i[kp - 1] == j[lp - 1] and i[kp - 1] in shared:
                return True
    return False


def oracle_good_ns():
    return [t for t in product((1, 2, 3), repeat=3) if not oracle_bad_ns(*t)]


def oracle_good_mhd():
    out = []
    for i in product((1, 2, 3), repeat=3):
        for j in product((1, 2, 3), repeat=3):
            if not oracle_bad_mhd(i, j):
                out.append(i + j)
    return out


class TestNsClassification:
    def test_spec_examples(self):
        assert is_bad_ns(NsAssignment(3, 3, 1)) is True
        assert is_bad_ns(NsAssignment(3, 1, 2)) is False
        assert is_bad_ns(NsAssignment(3, 3, 3)) is True
        # i2 = i3 = 1 clause applies by direct substitution
        assert is_bad_ns(NsAssignment(1, 1, 1)) is True

    def test_count_and_membership(self):
        good = enumerate_good_ns()
        assert len(good) == 18
        assert NsAssignment(3, 1, 2) in good
        assert NsAssignment(3, 3, 3) not in good

    def test_lexicographic_order(self):
        good = enumerate_good_ns()
        assert [a.labels for a in good] == sorted(a.labels for a in good)

    def test_matches_oracle(self):
        assert [a.labels for a in enumerate_good_ns()] == oracle_good_ns()

    def test_partition_of_27(self):
        n_bad = sum(
            is_bad_ns(NsAssignment(*t)) for t in product((1, 2, 3), repeat=3)
        )
        assert len(enumerate_good_ns()) + n_bad == 27

    def test_clause_vs_permutation_formulation(self):
        for t in product((1, 2, 3), repeat=3):
            assert is_bad_ns(NsAssignment(*t)) == oracle_bad_ns(*t)

    def test_invalid_label_rejected(self):
        with pytest.raises(ValueError):
            NsAssignment(0, 1, 2)
        with pytest.raises(ValueError):
            MhdAssignment.from_labels(1, 1, 2, 3, 3, 4)


class TestMhdClassification:
    def test_bad_ns_part_is_monotone(self):
        for i in product((1, 2, 3), repeat=3):
            if not is_bad_ns(NsAssignment(*i)):
                continue
            for j in product((1, 2, 3), repeat=3):
                assert is_bad_mhd(MhdAssignment.from_labels(*i, *j))

    def test_derived_clause_example(self):
        # frozen from brute-force clause evaluation: i_1 = 3 = j_1 with the
        # shared value outside {1, 1}
        a = MhdAssignment.from_labels(3, 1, 2, 3, 3, 3)
        assert oracle_bad_mhd((3, 1, 2), (3, 3, 3)) is True
        assert is_bad_mhd(a) is True

    def test_yjwm_type_configuration(self):
        # closest expressible analogue of the known well-posed reference
        # system: u2 misses x1, u3 misses x2, every b component misses x3
        a = MhdAssignment.from_labels(1, 1, 2, 3, 3, 3)
        assert is_bad_mhd(a) is False

    def test_count_and_oracle(self):
        good = enumerate_good_mhd()
        assert len(good) == 137
        assert [a.labels for a in good] == oracle_good_mhd()

    def test_partition_of_729(self):
        n_bad = sum(
            is_bad_mhd(MhdAssignment.from_labels(*t))
            for t in product((1, 2, 3), repeat=6)
        )
        assert len(enumerate_good_mhd()) + n_bad == 729

    def test_every_good_has_good_ns(self):
        for a in enumerate_good_mhd():
            assert not is_bad_ns(a.ns)

    def test_lexicographic_order(self):
        good = enumerate_good_mhd()
        assert [a.labels for a in good] == sorted(a.labels for a in good)


class TestExplain:
    def test_good_assignment_empty(self):
        assert explain_bad(MhdAssignment.from_labels(1, 1, 2, 3, 3, 3)) == []

    def test_ns_clause_descriptor(self):
        clauses = explain_bad(NsAssignment(3, 3, 1))
        assert any(str(c) == "uu: i1=i2=3" for c in clauses)

    def test_mhd_only_clause_names_pair(self):
        a = MhdAssignment.from_labels(3, 1, 2, 3, 3, 3)
        clauses = explain_bad(a)
        assert all(c.rule == "ub" for c in clauses)
        assert Clause("ub", 1, 2, 3) in clauses
        # oracle agreement on the witness pair
        assert oracle_bad_mhd((3, 1, 2), (3, 3, 3))

    def test_empty_iff_good(self):
        for t in product((1, 2, 3), repeat=6):
            a = MhdAssignment.from_labels(*t)
            assert (explain_bad(a) == []) == (not is_bad_mhd(a))

    def test_empty_iff_good_ns(self):
        for t in product((1, 2, 3), repeat=3):
            a = NsAssignment(*t)
            assert (explain_bad(a) == []) == (not is_bad_ns(a))


class TestUniquenessGates:
    def test_known_gate(self):
        # i_1 = i_2 = 1: component pair (k, l) = (1, 2) needs extra regularity
        gates = uniqueness_gates(NsAssignment(1, 1, 2))
        assert gates == [("u", 1, 2)]

    def test_no_gates(self):
        assert uniqueness_gates(NsAssignment(3, 1, 2)) == []

    def test_magnetic_gate(self):
        # i_2 = 2 and j_1 = 2: pair (k, l) = (2, 1) on the magnetic side
        a = MhdAssignment.from_labels(1, 2, 1, 2, 3, 3)
        assert not is_bad_mhd(a)
        assert ("b", 2, 1) in uniqueness_gates(a)

    def test_gate_definition_on_all_good(self):
        for a in enumerate_good_mhd():
            expected = []
            for k in (1, 2, 3):
                for l in (1, 2, 3):
                    if k != l and a.i(k) == a.i(l) == k:
                        expected.append(("u", k, l))
            for k in (1, 2, 3):
                for l in (1, 2, 3):
                    if k != l and a.i(k) == k and a.j(l) == k:
                        expected.append(("b", k, l))
            assert uniqueness_gates(a) == expected
