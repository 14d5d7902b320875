"""Oracle-equivalence and invariant suites run by ``crt-armor selftest``.

Each suite draws random instances from a fixed seed, compares the fast
implementation against an independent reference or checks an invariant,
and reports how many instances passed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .arbitrary import build_cut_plan, pruned_cuts, reconstruct_arbitrary
from .errors import CRTError, NoSolution
from .gcrtmn import QuotientTable, gcrtmn_robust, oracle_solutions
from .modular import ModulusSystem, prod, validate_system
from .remainder_code import ResidueVector, encode, oracle_decode, unique_decode
from .sim import adversarial_instance

SCALES = {"small": 1, "full": 10}
BASE_TRIALS = {"remainder_code": 200, "gcrtmn": 100, "pruning": 50, "trimming": 100}

# the N=2, K=4, L=6 system of the simulation protocol; the folding-number
# range is kept small enough for the multi-integer reconstruction to be unique
PROTOCOL_SYSTEM = dict(N=2, delta=4, M=(3, 5, 7, 11, 13, 17), K=4, q_range=60)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: int
    total: int

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def same_integers(a, b, Gamma: int) -> bool:
    """True when two estimate lists identify the same integers (paired within ``Gamma / 2``)."""
    if len(a) != len(b):
        return False
    cost = np.abs(np.subtract.outer(np.asarray(a, float), np.asarray(b, float)))
    rows, cols = linear_sum_assignment(cost)
    return bool(np.all(cost[rows, cols] < Gamma / 2))


def remainder_code_suite(n: int, rng: np.random.Generator,
                         decoder: Callable[[ResidueVector, int], int] = unique_decode) -> SuiteResult:
    M, K = (3, 5, 7, 11, 13), 3
    passed = 0
    for _ in range(n):
        X = int(rng.integers(0, prod(M[:K])))
        v = list(encode(X, M, K).entries)
        l = int(rng.integers(0, len(M)))
        v[l] = (v[l] + int(rng.integers(1, M[l]))) % M[l]
        vec = ResidueVector(tuple(v), M)
        expected = [x for x, _ in oracle_decode(vec, K)]
        try:
            got = [decoder(vec, K)]
        except CRTError:
            got = None
        passed += got == expected
    return SuiteResult("remainder-code oracle", passed, n)


def gcrtmn_suite(n: int, rng: np.random.Generator) -> SuiteResult:
    passed = 0
    for _ in range(n):
        M = (3, 5, 7, 11, 13)[: int(rng.integers(3, 6))]
        N = int(rng.integers(1, 4))
        K = int(rng.integers(1, len(M)))
        lam = int(rng.integers(0, len(M) - K + 1))
        q_range = prod(M[:K])
        X = rng.integers(0, q_range, size=N)
        sets = []
        for m in M:
            row = [int(x % m) for x in X]
            if rng.random() < 0.2:
                row = [int(r) for r in rng.integers(0, m, size=N)]
            sets.append(tuple(row))
        table = QuotientTable.build(sets, M)
        expected = oracle_solutions(table, N, lam, q_range)
        try:
            sol = gcrtmn_robust(table, K, N, lam, q_range=q_range)
            got = (sol.values, sol.alternatives)
        except NoSolution:
            got = None
        passed += got == ((expected[0], len(expected)) if expected else None)
    return SuiteResult("GCRTMN oracle", passed, n)


def _reconstruct(table, system, use_pruning):
    try:
        return [r.X for r in reconstruct_arbitrary(table, system, use_pruning=use_pruning,
                                                   exhaustive_fallback=False)]
    except CRTError as exc:
        return type(exc).__name__


def pruning_suite(n: int, rng: np.random.Generator,
                  system: ModulusSystem | None = None) -> SuiteResult:
    """Pruned cut enumeration yields at most ``N`` cuts and the same integers as full enumeration."""
    system = system or validate_system(**PROTOCOL_SYSTEM)
    passed = 0
    for _ in range(n):
        inst = adversarial_instance(system, rng)
        size_ok = len(pruned_cuts(build_cut_plan(inst.table, system))) <= system.N
        a = _reconstruct(inst.table, system, True)
        b = _reconstruct(inst.table, system, False)
        if isinstance(a, list) and isinstance(b, list):
            same = same_integers(a, b, system.Gamma)
        else:
            same = a == b
        passed += size_ok and same
    return SuiteResult("pruning equivalence", passed, n)


def trimming_suite(n: int, rng: np.random.Generator,
                   system: ModulusSystem | None = None) -> SuiteResult:
    """Trimmed sets spread at most ``4*delta`` and keep every uncorrupted set that survived the cut."""
    system = system or validate_system(**PROTOCOL_SYSTEM)
    passed = 0
    for _ in range(n):
        inst = adversarial_instance(system, rng)
        try:
            recs = reconstruct_arbitrary(inst.table, system, use_pruning=False)
        except CRTError:
            continue
        ok = True
        for r in recs:
            kept_good = set(inst.good_sets) - set(r.removed)
            ok &= r.trimmed.spread <= 4 * system.delta + 1e-9 and kept_good <= r.trimmed.H
        passed += ok
    return SuiteResult("trimming spread", passed, n)


def run_selftest(scale: str = "small", seed: int = 0,
                 decoder: Callable[[ResidueVector, int], int] = unique_decode) -> list[SuiteResult]:
    """Run every suite; ``decoder`` may be swapped for a deliberately broken one."""
    k = SCALES[scale]
    rng = np.random.default_rng(seed)
    return [
        remainder_code_suite(BASE_TRIALS["remainder_code"] * k, rng, decoder),
        gcrtmn_suite(BASE_TRIALS["gcrtmn"] * k, rng),
        pruning_suite(BASE_TRIALS["pruning"] * k, rng),
        trimming_suite(BASE_TRIALS["trimming"] * k, rng),
    ]
