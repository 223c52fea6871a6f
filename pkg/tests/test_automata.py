"""The automaton model: simulation, determinism check, serialization."""

import random
from fractions import Fraction

import pytest

from ecidpda import (AutomatonError, CallRule, DETERMINISTIC, Ecidpda,
                     InternalRule, NondeterminismWitness, ReturnRule, TRUE,
                     atom, desugar, embed_untimed, hist, is_deterministic,
                     parse_guard, simulate, stack_pred, xi)
from ecidpda.constraints import sorted_atoms
from ecidpda.generate import random_automaton, random_timed_string
from ecidpda.timed import PartitionedAlphabet, TimedString

from .conftest import timed

F = Fraction


def trivial_automaton(alphabet) -> Ecidpda:
    return Ecidpda(alphabet, ["q0"], ["q0"], ["q0"], [], [])


class TestValidation:
    def test_needs_initial_state(self, bracket_alphabet):
        with pytest.raises(AutomatonError):
            Ecidpda(bracket_alphabet, ["q0"], [], ["q0"], [], [])

    def test_rule_symbol_class_must_match(self, bracket_alphabet):
        with pytest.raises(AutomatonError):
            Ecidpda(bracket_alphabet, ["q0"], ["q0"], [], ["g"],
                    [InternalRule("q0", "<", TRUE, "q0")])

    def test_unknown_stack_symbol(self, bracket_alphabet):
        with pytest.raises(AutomatonError):
            Ecidpda(bracket_alphabet, ["q0"], ["q0"], [], ["g"],
                    [CallRule("q0", "<", TRUE, "q0", "h")])

    def test_unknown_state(self, bracket_alphabet):
        with pytest.raises(AutomatonError):
            Ecidpda(bracket_alphabet, ["q0"], ["q0"], [], [],
                    [InternalRule("q0", "c", TRUE, "q1")])


class TestSimulate:
    def test_empty_string_accepting_initial(self, bracket_alphabet):
        a = trivial_automaton(bracket_alphabet)
        w = TimedString(bracket_alphabet, [])
        assert simulate(a, w).accepted

    def test_no_rule_rejects(self, bracket_alphabet):
        a = trivial_automaton(bracket_alphabet)
        w = TimedString(bracket_alphabet, [("c", F(1, 2))])
        result = simulate(a, w)
        assert not result.accepted
        assert result.final_configs == frozenset()

    def test_trace_length(self, bracket_alphabet):
        a = trivial_automaton(bracket_alphabet)
        w = timed(bracket_alphabet, "c c")
        assert len(simulate(a, w).trace) == 3

    def test_symbol_outside_alphabet(self, bracket_alphabet):
        a = trivial_automaton(bracket_alphabet)
        other = PartitionedAlphabet({"<"}, {">"}, {"z"})
        w = timed(other, "z")
        with pytest.raises(AutomatonError):
            simulate(a, w)

    def test_bottom_return_fires_on_empty_stack(self, bracket_alphabet):
        a = Ecidpda(bracket_alphabet, ["q0", "q1"], ["q0"], ["q1"], ["g"], [
            ReturnRule("q0", ">", None, TRUE, "q1"),
        ])
        assert simulate(a, timed(bracket_alphabet, ">")).accepted

    def test_matched_return_pops(self, bracket_alphabet):
        a = Ecidpda(bracket_alphabet, ["q0", "q1"], ["q0"], ["q1"], ["g"], [
            CallRule("q0", "<", TRUE, "q0", "g"),
            ReturnRule("q0", ">", "g", TRUE, "q1"),
        ])
        assert simulate(a, timed(bracket_alphabet, "< >")).accepted
        # Bottom rule absent: a bare return dies.
        assert not simulate(a, timed(bracket_alphabet, ">")).accepted

    def test_stack_height_synchrony(self, bracket_alphabet):
        rng = random.Random(7)
        for _ in range(50):
            a = random_automaton(rng)
            w = random_timed_string(rng, a.alphabet)
            for configs in simulate(a, w).trace:
                heights = {len(stack) for _, stack in configs}
                assert len(heights) <= 1

    def test_monotone_under_rule_addition(self, bracket_alphabet):
        rng = random.Random(8)
        for _ in range(30):
            a = random_automaton(rng)
            extra = InternalRule(rng.choice(sorted(a.states)), "c", TRUE,
                                 rng.choice(sorted(a.states)))
            bigger = Ecidpda(a.alphabet, a.states, a.initial, a.accepting,
                             a.stack, a.rules + (extra,))
            for _ in range(10):
                w = random_timed_string(rng, a.alphabet)
                if simulate(a, w).accepted:
                    assert simulate(bigger, w).accepted


class TestIsDeterministic:
    def test_xi_guarded_siblings(self, bracket_alphabet):
        universe = sorted_atoms([atom(hist("c"), "<=", 1),
                                 atom(stack_pred(), ">=", 1)])
        a = Ecidpda(bracket_alphabet, ["q0", "q1"], ["q0"], [], ["g"], [
            CallRule("q0", "<", xi(universe, frozenset()), "q0", "g"),
            CallRule("q0", "<", xi(universe, frozenset(universe)), "q1", "g"),
        ])
        assert is_deterministic(a) == DETERMINISTIC

    def test_overlapping_true_guards(self, bracket_alphabet):
        a = Ecidpda(bracket_alphabet, ["q0", "q1"], ["q0"], [], [], [
            InternalRule("q0", "c", TRUE, "q0"),
            InternalRule("q0", "c", TRUE, "q1"),
        ])
        verdict = is_deterministic(a)
        assert isinstance(verdict, NondeterminismWitness)
        assert len(verdict.rules) == 2

    def test_two_initial_states(self, bracket_alphabet):
        a = Ecidpda(bracket_alphabet, ["q0", "q1"], ["q0", "q1"], [], [], [])
        verdict = is_deterministic(a)
        assert isinstance(verdict, NondeterminismWitness)
        assert "initial" in verdict.reason

    def test_returns_keyed_by_pop_symbol(self, bracket_alphabet):
        a = Ecidpda(bracket_alphabet, ["q0"], ["q0"], [], ["g", "h"], [
            ReturnRule("q0", ">", "g", TRUE, "q0"),
            ReturnRule("q0", ">", "h", TRUE, "q0"),
            ReturnRule("q0", ">", None, TRUE, "q0"),
        ])
        assert is_deterministic(a) == DETERMINISTIC


class TestEmbedUntimed:
    def test_single_rule(self, bracket_alphabet):
        a = embed_untimed(["q0", "q1"], ["q0"], ["q1"], [], bracket_alphabet,
                          internal=[("q0", "c", "q1")])
        assert a.rules == (InternalRule("q0", "c", TRUE, "q1"),)

    def test_empty_rule_set_accepts_only_empty(self, bracket_alphabet):
        a = embed_untimed(["q0"], ["q0"], ["q0"], [], bracket_alphabet)
        assert simulate(a, TimedString(bracket_alphabet, [])).accepted
        assert not simulate(a, timed(bracket_alphabet, "c")).accepted

    def test_retiming_invariance(self, bracket_alphabet):
        rng = random.Random(9)
        for _ in range(100):
            a = random_automaton(rng, timed=False)
            w = random_timed_string(rng, a.alphabet)
            if len(w) == 0:
                continue
            offset = F(rng.randint(0, 5))
            retimed = TimedString(a.alphabet,
                                  [(sym, t * 3 + offset)
                                   for sym, t in w.events])
            assert (simulate(a, w).accepted
                    == simulate(a, retimed).accepted)


class TestSerialization:
    def test_round_trip(self):
        rng = random.Random(10)
        for _ in range(20):
            a = random_automaton(rng)
            again = Ecidpda.from_json(a.to_json())
            assert again.states == a.states
            assert again.initial == a.initial
            assert again.accepting == a.accepting
            assert again.stack == a.stack
            # Chained conjunctions may re-associate through the text form,
            # so compare the stable serialization instead of raw ASTs.
            assert again.to_json() == a.to_json()
            assert Ecidpda.from_json(again.to_json()).rules == again.rules

    def test_bottom_pop_serialized_as_keyword(self, bracket_alphabet):
        a = Ecidpda(bracket_alphabet, ["q0"], ["q0"], [], [],
                    [ReturnRule("q0", ">", None, TRUE, "q0")])
        data = a.to_json()
        assert data["transitions"][0]["pop"] == "bottom"
        assert Ecidpda.from_json(data).rules[0].pop is None

    def test_guards_survive_round_trip(self, bracket_alphabet):
        guard = parse_guard("stackhist > 0.1 or pred(c) >= 0")
        a = Ecidpda(bracket_alphabet, ["q0"], ["q0"], [], [],
                    [ReturnRule("q0", ">", None, guard, "q0")])
        assert Ecidpda.from_json(a.to_json()).rules[0].guard == guard

    def test_save_load(self, tmp_path):
        rng = random.Random(11)
        a = random_automaton(rng)
        path = tmp_path / "a.json"
        a.save(str(path))
        b = Ecidpda.load(str(path))
        assert b.to_json() == a.to_json()
