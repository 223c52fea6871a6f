"""Command-line front end: run, determinize, check-det, diff, witness.

Exit codes: 0 = accept / success, 1 = reject / mismatch found,
2 = usage or parse error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import random
import sys
import time
from typing import Optional

from .automata import (AutomatonError, DETERMINISTIC, Ecidpda, RuleIndex,
                       is_deterministic, simulate)
from .constraints import ConstraintError
from .determinize import (determinize_direct, determinize_no_stack_prediction,
                          determinize_untimed)
from .generate import random_automaton, random_timed_string
from .timed import TimedStringError, load_timed_string
from .witness import (TimingScheme, WitnessError, WitnessSpec,
                      build_well_formed, build_witness_nfa, is_valid,
                      load_witness_spec)

EXIT_ACCEPT = 0
EXIT_REJECT = 1
EXIT_ERROR = 2

_MODES = {
    "untimed": determinize_untimed,
    "direct": determinize_direct,
    "nostackpred": determinize_no_stack_prediction,
}


def _theoretical_bounds(source: Ecidpda, mode: str) -> tuple[int, int]:
    n = len(source.states)
    k = len(source.atom_set())
    calls = max(1, len(source.alphabet.calls))
    if mode == "untimed":
        return 2 ** (n * n), calls * 2 ** (n * n)
    if mode == "direct":
        return 2 ** (n * n), calls * 2 ** (n * n + k)
    # Mirrored atoms can only replace stack prediction atoms one for one, so
    # k also bounds the tracked universe of the improved construction.
    return (2 ** (n * n) * 2 ** n,
            calls * 2 ** (n * n) * 2 ** n * 2 ** k)


def cmd_run(args) -> int:
    automaton = Ecidpda.load(args.automaton)
    w = load_timed_string(args.string)
    started = time.perf_counter()
    result = simulate(automaton, w)
    elapsed = time.perf_counter() - started
    for pos, configs in enumerate(result.trace):
        states = sorted({q for q, _ in configs})
        heights = sorted({len(st) for _, st in configs})
        height = heights[0] if heights else "-"
        print(f"  step {pos}: states={{{','.join(states)}}} "
              f"stack_height={height}")
    verdict = "ACCEPT" if result.accepted else "REJECT"
    print(f"{verdict} ({len(w)} events, {elapsed:.4f}s)")
    return EXIT_ACCEPT if result.accepted else EXIT_REJECT


def cmd_determinize(args) -> int:
    source = Ecidpda.load(args.automaton)
    build = _MODES[args.mode]
    result = build(source)
    result.save(args.output)
    state_bound, stack_bound = _theoretical_bounds(source, args.mode)
    guards = {str(rule.guard) for rule in result.rules}
    report = {
        "mode": args.mode,
        "source": {"states": len(source.states),
                   "stack": len(source.stack),
                   "atoms": len(source.atom_set())},
        "output": {"states": len(result.states),
                   "stack": len(result.stack),
                   "guards": len(guards)},
        "bounds": {"states": state_bound, "stack": stack_bound,
                   "within": (len(result.states) <= state_bound
                              and len(result.stack) <= stack_bound)},
    }
    print(json.dumps(report, indent=2))
    if not report["bounds"]["within"]:
        return EXIT_REJECT
    return EXIT_ACCEPT


def cmd_check_det(args) -> int:
    automaton = Ecidpda.load(args.automaton)
    verdict = is_deterministic(automaton)
    if verdict == DETERMINISTIC:
        print("deterministic")
        return EXIT_ACCEPT
    print(f"nondeterministic: {verdict.reason}")
    for rule in verdict.rules:
        print(f"  {rule}")
    return EXIT_REJECT


def cmd_diff(args) -> int:
    if args.trials < 1:
        print("trials must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    build = _MODES[args.mode]
    master = random.Random(args.seed)
    mismatches = []
    for trial in range(args.trials):
        automaton_seed = master.getrandbits(64)
        string_seed = master.getrandbits(64)
        rng = random.Random(automaton_seed)
        source = random_automaton(
            rng, max_states=args.max_states, max_stack=args.max_stack,
            max_atoms=args.max_atoms, timed=(args.mode != "untimed"))
        det = build(source)
        src_index, det_index = RuleIndex(source), RuleIndex(det)
        srng = random.Random(string_seed)
        for _ in range(args.strings):
            w = random_timed_string(srng, source.alphabet,
                                    max_len=args.max_len)
            got_a = simulate(source, w, src_index).accepted
            got_d = simulate(det, w, det_index).accepted
            if got_a != got_d:
                mismatches.append({"automaton_seed": automaton_seed,
                                   "string_seed": string_seed,
                                   "source": got_a, "determinized": got_d})
    report = {"mode": args.mode, "trials": args.trials,
              "strings_per_trial": args.strings, "seed": args.seed,
              "mismatches": sorted(mismatches,
                                   key=lambda m: m["automaton_seed"])}
    print(json.dumps(report, indent=2))
    return EXIT_ACCEPT if not mismatches else EXIT_REJECT


def _enumerate_specs(n: int, k: int, m: int):
    numbers = list(range(n))
    pairs = list(itertools.product(numbers, repeat=2))
    relations = [frozenset(sub) for size in range(len(pairs) + 1)
                 for sub in itertools.combinations(pairs, size)]
    events = list(range(1, k + 1))
    subsets = [frozenset(sub) for size in range(k + 1)
               for sub in itertools.combinations(events, size)]
    for s in itertools.product(numbers, repeat=m + 1):
        for rel_vec in itertools.product(relations, repeat=m):
            for x_vec in itertools.product(subsets, repeat=m):
                for y_vec in itertools.product(subsets, repeat=m):
                    yield WitnessSpec(n, k, m, s, rel_vec, x_vec, y_vec)


def cmd_witness(args) -> int:
    if args.exhaustive and (args.n > 3 or args.k > 2 or args.m > 2):
        print("exhaustive mode is limited to n <= 3, k <= 2, m <= 2",
              file=sys.stderr)
        return EXIT_ERROR
    nfa = build_witness_nfa(args.n, args.k)
    if args.nfa_out:
        nfa.save(args.nfa_out)
    det = determinize_direct(nfa)
    scheme = TimingScheme()
    disagreements = 0

    if args.spec:
        specs = [load_witness_spec(args.spec)]
    elif args.exhaustive:
        specs = list(_enumerate_specs(args.n, args.k, args.m))
    else:
        print("pass --spec FILE or --exhaustive", file=sys.stderr)
        return EXIT_ERROR

    print(f"{'spec':<50} {'valid':<6} {'nfa':<6} {'det':<6}")
    checked = 0
    for spec in specs:
        w = build_well_formed(spec, scheme)
        expected = is_valid(spec)
        got_nfa = simulate(nfa, w).accepted
        got_det = simulate(det, w).accepted
        checked += 1
        label = json.dumps(spec.to_json(), separators=(",", ":"))
        if expected != got_nfa or expected != got_det or args.spec:
            print(f"{label:<50} {expected!s:<6} {got_nfa!s:<6} {got_det!s:<6}")
        if expected != got_nfa or expected != got_det:
            disagreements += 1
    print(f"checked {checked} specs, {disagreements} disagreements")
    return EXIT_ACCEPT if disagreements == 0 else EXIT_REJECT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecidpda",
        description="Event-clock input-driven pushdown automata toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate an automaton on a string")
    p_run.add_argument("automaton")
    p_run.add_argument("string")
    p_run.set_defaults(func=cmd_run)

    p_det = sub.add_parser("determinize", help="determinize an automaton")
    p_det.add_argument("automaton")
    p_det.add_argument("--mode", choices=sorted(_MODES), required=True)
    p_det.add_argument("--output", "-o", required=True)
    p_det.set_defaults(func=cmd_determinize)

    p_chk = sub.add_parser("check-det", help="check determinism")
    p_chk.add_argument("automaton")
    p_chk.set_defaults(func=cmd_check_det)

    p_diff = sub.add_parser("diff",
                            help="randomized differential determinization test")
    p_diff.add_argument("--mode", choices=sorted(_MODES), required=True)
    p_diff.add_argument("--trials", type=int, default=100)
    p_diff.add_argument("--strings", type=int, default=20)
    p_diff.add_argument("--seed", type=int, default=0)
    p_diff.add_argument("--max-states", type=int, default=3)
    p_diff.add_argument("--max-stack", type=int, default=2)
    p_diff.add_argument("--max-atoms", type=int, default=3)
    p_diff.add_argument("--max-len", type=int, default=12)
    p_diff.set_defaults(func=cmd_diff)

    p_wit = sub.add_parser("witness",
                           help="lower-bound witness family verification")
    p_wit.add_argument("--n", type=int, required=True)
    p_wit.add_argument("--k", type=int, required=True)
    p_wit.add_argument("--m", type=int, default=1)
    p_wit.add_argument("--exhaustive", action="store_true")
    p_wit.add_argument("--spec")
    p_wit.add_argument("--nfa-out")
    p_wit.set_defaults(func=cmd_witness)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (AutomatonError, ConstraintError, TimedStringError, WitnessError,
            FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
