"""Remainder (CRT) code over coprime moduli with Hamming-metric decoding.

A codeword is the residue vector of an integer ``X`` in
``[0, M_1 * ... * M_K)``. Any two codewords differ in at least ``L - K + 1``
coordinates, so up to ``(L - K) // 2`` corrupted coordinates are uniquely
correctable and up to ``L - K`` are list-decodable.

Decoding enumerates every size-``K`` coordinate subset, reconstructs a
candidate from it by CRT and scores candidates by agreement. When at most
``L - K`` coordinates are corrupted some subset is error free, so the
transmitted integer is always among the candidates.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import (
    Ambiguous,
    DecodeFailure,
    InputError,
    LambdaTooLarge,
    OutOfRange,
    RangeTooLarge,
)
from .modular import check_coprime, crt_coefficients, prod

ORACLE_LIMIT = 10**7


@dataclass(frozen=True)
class ResidueVector:
    entries: tuple[int, ...]
    moduli: tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) != len(self.moduli):
            raise InputError("entries and moduli must have equal length")
        for x, m in zip(self.entries, self.moduli):
            if not 0 <= x < m:
                raise OutOfRange(f"residue {x} not in [0, {m})")

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class DecodeResult:
    candidates: list[tuple[int, int]]
    unique: bool

    @property
    def values(self) -> list[int]:
        return [x for x, _ in self.candidates]


def encode(X: int, M: Sequence[int], K: int | None = None) -> ResidueVector:
    M = tuple(int(m) for m in M)
    K = len(M) if K is None else K
    limit = prod(M[:K])
    if not 0 <= X < limit:
        raise OutOfRange(f"X={X} outside [0, {limit})")
    return ResidueVector(tuple(X % m for m in M), M)


def agreement(X: int, v: ResidueVector) -> int:
    return sum(X % m == x for x, m in zip(v.entries, v.moduli))


def _candidates(v: ResidueVector, K: int) -> dict[int, int]:
    """All distinct integers reconstructed from size-K subsets, mapped to their agreement."""
    L = len(v)
    if not 1 <= K <= L:
        raise InputError(f"K must lie in [1, {L}], got {K}")
    check_coprime(v.moduli)
    limit = prod(v.moduli[:K])
    found: dict[int, int] = {}
    for subset in combinations(range(L), K):
        P, coeffs = crt_coefficients(tuple(v.moduli[j] for j in subset))
        X = sum(v.entries[j] * e for j, e in zip(subset, coeffs)) % P
        if X < limit and X not in found:
            found[X] = agreement(X, v)
    return found


def list_decode(v: ResidueVector, K: int, lam: int) -> DecodeResult:
    """Every codeword agreeing with ``v`` on at least ``L - lam`` coordinates.

    Candidates are ordered by decreasing agreement, then by value.
    """
    L = len(v)
    if lam > L - K:
        raise LambdaTooLarge(f"lambda={lam} exceeds L-K={L - K}")
    if lam < 0:
        raise InputError("lambda must be non-negative")
    found = _candidates(v, K)
    keep = sorted(((x, a) for x, a in found.items() if a >= L - lam),
                  key=lambda c: (-c[1], c[0]))
    return DecodeResult(keep, len(keep) == 1)


def unique_decode(v: ResidueVector, K: int) -> int:
    """Decode ``v`` assuming at most ``(L - K) // 2`` corrupted coordinates."""
    L = len(v)
    result = list_decode(v, K, (L - K) // 2)
    if not result.candidates:
        raise DecodeFailure(f"no codeword within distance {(L - K) // 2} of {v.entries}")
    if not result.unique:
        raise Ambiguous(f"several codewords within the unique radius: {result.values}")
    return result.candidates[0][0]


def oracle_decode(v: ResidueVector, K: int) -> list[tuple[int, int]]:
    """Brute-force nearest codewords: ``[(X, hamming_distance), ...]`` in ascending X."""
    limit = prod(v.moduli[:K])
    if limit > ORACLE_LIMIT:
        raise RangeTooLarge(f"range {limit} exceeds the oracle limit {ORACLE_LIMIT}")
    xs = np.arange(limit, dtype=np.int64)
    dist = np.zeros(limit, dtype=np.int64)
    for x, m in zip(v.entries, v.moduli):
        dist += (xs % m) != x
    best = int(dist.min())
    return [(int(X), best) for X in np.flatnonzero(dist == best)]
