"""Generalized CRT for multiple integers over unordered residue sets.

Each residue set holds the residues of ``N`` unknown integers modulo one
modulus, with the residue-to-integer correspondence unknown. Candidate
integers are generated by CRT from every choice of one residue per set in a
size-``K`` subset of sets, scored by how many sets contain their residue, and
assembled into ``N``-element multisets. A multiset *explains* a set when its
residues modulo that set's modulus reproduce the set: as a multiset when the
set holds ``N`` entries, otherwise as the set of distinct values (a short set
is read as one whose coinciding residues were merged).
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement, product as cartesian
from math import comb
from typing import Sequence

import numpy as np

from .errors import CombinatorialBlowup, InputError, NoSolution, OutOfRange
from .modular import check_coprime, crt_coefficients, prod

DEFAULT_MAX_WORK = 10**8
_INT64_SAFE = 2**62


@dataclass(frozen=True)
class QuotientTable:
    """Integer residue sets ``sets[k]`` modulo ``moduli[k]``, from original set ``labels[k]``."""

    sets: tuple[tuple[int, ...], ...]
    moduli: tuple[int, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        if not len(self.sets) == len(self.moduli) == len(self.labels):
            raise InputError("sets, moduli and labels must have equal length")
        check_coprime(self.moduli)
        for s, m in zip(self.sets, self.moduli):
            for r in s:
                if not 0 <= r < m:
                    raise OutOfRange(f"residue {r} not in [0, {m})")

    @classmethod
    def build(cls, sets: Sequence[Sequence[int]], moduli: Sequence[int],
              labels: Sequence[int] | None = None) -> "QuotientTable":
        labels = range(len(sets)) if labels is None else labels
        return cls(tuple(tuple(int(r) for r in s) for s in sets),
                   tuple(int(m) for m in moduli), tuple(int(l) for l in labels))


@dataclass(frozen=True)
class MultiSolution:
    """Reconstructed integers in ascending order.

    ``correspondence[i][k]`` is the residue of ``values[i]`` in table set ``k``
    when that set contains it, else ``None``. ``explained`` counts the sets
    reproduced exactly; ``alternatives`` is the number of solutions sharing
    the maximal ``explained`` count (1 when ``unique``).
    """

    values: tuple[int, ...]
    correspondence: tuple[tuple[int | None, ...], ...]
    agreement: tuple[int, ...]
    unique: bool
    explained: int
    alternatives: int


def _combine(residue_rows: np.ndarray, coeffs: tuple[int, ...], P: int, max_m: int) -> np.ndarray:
    k = len(coeffs)
    if k * P * max_m < _INT64_SAFE:
        return (residue_rows @ np.asarray(coeffs, dtype=np.int64)) % P
    rows = residue_rows.tolist()
    return np.array([sum(r * e for r, e in zip(row, coeffs)) % P for row in rows], dtype=object)


def candidate_integers(table: QuotientTable, K: int, lam: int, q_range: int,
                       max_work: int = DEFAULT_MAX_WORK) -> dict[int, int]:
    """Integers in ``[0, q_range)`` contained in at least ``S - lam`` sets, with their agreement.

    Such an integer misses at most ``lam`` sets, so it agrees with at least
    ``K`` of any ``K + lam`` sets; enumerating the size-``K`` subsets of the
    first ``K + lam`` sets therefore finds every one of them.
    """
    S = len(table.sets)
    if K < 1:
        raise InputError("K must be >= 1")
    if S < K:
        raise NoSolution(f"only {S} residue sets for K={K}")
    distinct = [sorted(set(s)) for s in table.sets]
    pool = min(S, K + lam)
    subsets = list(combinations(range(pool), K))
    work = sum(prod(len(distinct[j]) for j in sub) for sub in subsets)
    if work > max_work:
        raise CombinatorialBlowup(f"{work} CRT evaluations exceed the limit {max_work}")

    found: set[int] = set()
    for sub in subsets:
        if any(not distinct[j] for j in sub):
            continue
        moduli = tuple(table.moduli[j] for j in sub)
        P, coeffs = crt_coefficients(moduli)
        rows = np.array(list(cartesian(*(distinct[j] for j in sub))), dtype=np.int64)
        values = _combine(rows, coeffs, P, max(moduli))
        found.update(int(x) for x in values[values < q_range].tolist())
    if not found:
        return {}
    cands = np.array(sorted(found), dtype=np.int64)

    agree = np.zeros(cands.size, dtype=np.int64)
    for s, m in zip(table.sets, table.moduli):
        member = np.zeros(m, dtype=bool)
        member[list(s)] = True
        agree += member[cands % m]
    keep = agree >= S - lam
    return {int(x): int(a) for x, a in zip(cands[keep], agree[keep])}


def _target(s: Sequence[int], N: int):
    return tuple(sorted(s)) if len(s) == N else frozenset(s)


def _explains(values: Sequence[int], target, m: int) -> bool:
    if isinstance(target, tuple):
        return tuple(sorted(v % m for v in values)) == target
    return {v % m for v in values} == target


def gcrtmn_robust(table: QuotientTable, K: int, N: int, lam: int,
                  q_range: int | None = None,
                  max_work: int = DEFAULT_MAX_WORK) -> MultiSolution:
    """Reconstruct ``N`` integers when up to ``lam`` sets may be arbitrary.

    A multiset of candidates is admissible when it explains at least
    ``S - lam`` of the ``S`` sets. The admissible multisets with the most
    explained sets are the maximal solutions; the result is ``unique`` iff
    there is exactly one. With several, the smallest (lexicographically) is
    returned with ``unique=False``.

    Raises
    ------
    NoSolution
        No admissible multiset exists.
    CombinatorialBlowup
        Candidate generation or assembly would exceed ``max_work``.
    """
    if N < 1:
        raise InputError("N must be >= 1")
    if lam < 0:
        raise InputError("lambda must be non-negative")
    check_coprime(table.moduli)
    S = len(table.sets)
    if q_range is None:
        q_range = prod(sorted(table.moduli)[:K])
    cands = candidate_integers(table, K, lam, q_range, max_work)
    if not cands:
        raise NoSolution("no candidate integer is consistent with enough residue sets")

    ordered = sorted(cands)
    n_multisets = comb(len(ordered) + N - 1, N)
    if n_multisets > max_work:
        raise CombinatorialBlowup(f"{n_multisets} candidate multisets exceed the limit {max_work}")

    targets = [_target(s, N) for s in table.sets]
    # bit l of masks[k] is set when set l contains ordered[k]'s residue; a
    # multiset explains no set outside the AND of its members' masks
    masks = [sum(1 << l for l, (t, m) in enumerate(zip(targets, table.moduli)) if v % m in t)
             for v in ordered]
    full = (1 << S) - 1
    best: list[tuple[int, ...]] = []
    best_score = S - lam

    def extend(start: int, chosen: list[int], mask: int):
        nonlocal best, best_score
        if mask.bit_count() < best_score:
            return
        if len(chosen) == N:
            combo = tuple(ordered[k] for k in chosen)
            score = sum(_explains(combo, targets[l], table.moduli[l])
                        for l in range(S) if mask >> l & 1)
            if score > best_score or (score == best_score and not best):
                best, best_score = [combo], score
            elif score == best_score:
                best.append(combo)
            return
        for k in range(start, len(ordered)):
            chosen.append(k)
            extend(k, chosen, mask & masks[k])
            chosen.pop()

    extend(0, [], full)
    if not best:
        raise NoSolution("no multiset of candidates explains enough residue sets")

    values = best[0]
    corr = tuple(
        tuple(v % m if v % m in t else None for t, m in zip(targets, table.moduli))
        for v in values
    )
    return MultiSolution(
        values=tuple(values),
        correspondence=corr,
        agreement=tuple(cands[v] for v in values),
        unique=len(best) == 1,
        explained=best_score,
        alternatives=len(best),
    )


def gcrtmn_exact(table: QuotientTable, K: int, N: int, q_range: int | None = None,
                 max_work: int = DEFAULT_MAX_WORK) -> MultiSolution:
    """Error-free reconstruction: every set must be explained exactly."""
    return gcrtmn_robust(table, K, N, 0, q_range=q_range, max_work=max_work)


def oracle_solutions(table: QuotientTable, N: int, lam: int, q_range: int) -> list[tuple[int, ...]]:
    """Maximal solutions by brute force over the whole range (test oracle).

    Scans every integer below ``q_range``, keeps those contained in at least
    ``S - lam`` sets, and scores every ``N``-multiset of them directly.
    """
    def explained(combo, s, m):
        if len(s) == N:
            return Counter(v % m for v in combo) == Counter(s)
        return {v % m for v in combo} == set(s)

    S = len(table.sets)
    xs = np.arange(q_range, dtype=np.int64)
    agree = np.zeros(q_range, dtype=np.int64)
    for s, m in zip(table.sets, table.moduli):
        agree += np.isin(xs % m, list(s))
    pool = [int(x) for x in xs[agree >= S - lam]]
    scored = []
    for combo in combinations_with_replacement(pool, N):
        score = sum(explained(combo, s, m) for s, m in zip(table.sets, table.moduli))
        if score >= S - lam:
            scored.append((score, combo))
    if not scored:
        return []
    top = max(score for score, _ in scored)
    return sorted(combo for score, combo in scored if score == top)
