"""Exact modular arithmetic, modulus systems and the circular metric.

Integers (unknowns, folding numbers, moduli) are Python ints; residues and
errors are floats. Real residues that agree within ``TOL`` after wrapping are
treated as equal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from itertools import combinations
from typing import Iterable, Sequence

from .errors import (
    InputError,
    NonIntegerGamma,
    NotAscending,
    NotCoprime,
    OutOfRange,
)

TOL = 1e-9


def prod(values: Iterable[int]) -> int:
    return reduce(lambda a, b: a * b, values, 1)


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended Euclid: return ``(g, s, t)`` with ``s*a + t*b == g == gcd(a, b)``."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return a, s0, t0


def check_coprime(moduli: Sequence[int]) -> None:
    for a, b in combinations(moduli, 2):
        if math.gcd(a, b) != 1:
            raise NotCoprime(f"moduli {a} and {b} share the factor {math.gcd(a, b)}")


@dataclass(frozen=True)
class ModulusSystem:
    """Problem geometry: ``N`` unknowns, error bound ``delta`` and moduli ``Gamma * M_l``.

    ``q_range`` is the number of admissible folding numbers; the unknowns must
    lie in ``[0, Gamma * q_range)``. It defaults to the product of the ``K``
    smallest ``M_l`` less two, which leaves room for an error to carry an
    integer one folding number past either end of the range. Larger values
    up to the full product are accepted, but integers within ``delta`` of
    the range ends may then alias. It may be set lower when the product is
    not large enough for the multi-integer reconstruction to be unique.
    """

    N: int
    delta: float
    Gamma: int
    M: tuple[int, ...]
    K: int
    q_range: int
    m: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(self.Gamma * Ml for Ml in self.M))

    @property
    def L(self) -> int:
        return len(self.M)

    @property
    def max_bad(self) -> int:
        """Number of arbitrarily corrupted residue sets that can be tolerated."""
        return (self.L - self.K) // 2

    @property
    def info_range(self) -> int:
        return prod(self.M[: self.K])

    @property
    def search_range(self) -> int:
        """Width of the signed folding-number window ``[-1, search_range - 1)``.

        An error can move an integer across either end of ``[0, x_limit)``
        and unwrapping can raise its folding number by one, so the window
        extends one value below zero and one above ``q_range - 1`` when the
        information range allows it.
        """
        return min(self.q_range + 2, self.info_range)

    @property
    def x_limit(self) -> int:
        return self.Gamma * self.q_range

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "delta": self.delta,
            "M": list(self.M),
            "K": self.K,
            "q_range": self.q_range,
        }


def validate_system(
    N: int,
    delta: float,
    M: Sequence[int],
    K: int,
    q_range: int | None = None,
) -> ModulusSystem:
    """Build a :class:`ModulusSystem`, enforcing ``Gamma = 4*N*delta``.

    Raises
    ------
    NotCoprime, NotAscending, NonIntegerGamma
        On the corresponding violation.
    InputError
        For empty ``M``, entries below 2, or ``K``/``N``/``q_range`` out of bounds.
    """
    M = tuple(int(x) for x in M)
    if not M:
        raise InputError("M must be non-empty")
    if any(x < 2 for x in M):
        raise InputError(f"every modulus must be >= 2, got {list(M)}")
    if any(b <= a for a, b in zip(M, M[1:])):
        raise NotAscending(f"moduli must be strictly ascending, got {list(M)}")
    check_coprime(M)
    if N < 1:
        raise InputError(f"N must be >= 1, got {N}")
    if not 1 <= K <= len(M):
        raise InputError(f"K must lie in [1, {len(M)}], got {K}")
    if delta <= 0:
        raise InputError(f"delta must be positive, got {delta}")
    gamma = 4 * N * delta
    if abs(gamma - round(gamma)) > TOL or round(gamma) < 1:
        raise NonIntegerGamma(f"4*N*delta = {gamma} is not a positive integer")
    info = prod(M[:K])
    if q_range is None:
        q_range = max(1, info - 2)
    if not 1 <= q_range <= info:
        raise InputError(f"q_range must lie in [1, {info}], got {q_range}")
    return ModulusSystem(N=int(N), delta=float(delta), Gamma=int(round(gamma)),
                         M=M, K=int(K), q_range=int(q_range))


@dataclass(frozen=True)
class WrappedValue:
    """A real value on the circle of circumference ``modulus``."""

    value: float
    modulus: int

    def __post_init__(self):
        if not 0 <= self.value < self.modulus:
            raise OutOfRange(f"{self.value} not in [0, {self.modulus})")

    def __float__(self):
        return float(self.value)


def wrap(r: float, modulus: float) -> float:
    """Reduce ``r`` into ``[0, modulus)``, snapping values within TOL of the modulus to 0."""
    v = math.fmod(r, modulus)
    if v < 0:
        v += modulus
    if v >= modulus - TOL:
        v = 0.0
    return v


def common_residue(r: float, Gamma: int) -> WrappedValue:
    return WrappedValue(wrap(r, Gamma), Gamma)


def circle_distance(x: float, y: float, Gamma: float) -> float:
    """Shortest distance between ``x`` and ``y`` on the circle modulo ``Gamma``."""
    d = math.fmod(x - y, Gamma)
    if d < 0:
        d += Gamma
    return min(d, Gamma - d)


@lru_cache(maxsize=4096)
def crt_coefficients(moduli: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Return ``(P, e)`` with ``sum(x_j * e_j) % P`` the CRT solution for residues ``x_j``.

    ``e_j`` is 1 modulo ``moduli[j]`` and 0 modulo every other modulus.
    """
    check_coprime(moduli)
    P = prod(moduli)
    coeffs = []
    for mj in moduli:
        rest = P // mj
        g, s, _ = xgcd(rest % mj, mj)
        if g != 1:
            raise NotCoprime(f"modulus {mj} is not coprime to the others")
        coeffs.append((rest * s) % P)
    return P, tuple(coeffs)


def crt_reconstruct(residues: Sequence[tuple[int, int]]) -> int:
    """Solve ``X = value (mod modulus)`` for every pair by pairwise merging.

    >>> crt_reconstruct([(0, 3), (1, 5)])
    6
    """
    x, n = 0, 1
    for value, modulus in residues:
        value, modulus = int(value), int(modulus)
        if modulus < 1 or not 0 <= value < modulus:
            raise OutOfRange(f"residue {value} not in [0, {modulus})")
        g, s, _ = xgcd(n, modulus)
        if g != 1:
            raise NotCoprime(f"modulus {modulus} shares the factor {g} with earlier moduli")
        # x + n*k = value (mod modulus)  =>  k = (value - x) * n^-1
        k = ((value - x) * s) % modulus
        x += n * k
        n *= modulus
    return x % n


@dataclass(frozen=True)
class ResidueTable:
    """Observed residue sets: ``sets[l]`` holds real residues modulo ``m_l``, order unknown."""

    sets: tuple[tuple[float, ...], ...]

    @classmethod
    def build(cls, sets: Sequence[Sequence[float]],
              system: ModulusSystem | None = None) -> "ResidueTable":
        table = cls(tuple(tuple(float(r) for r in s) for s in sets))
        if system is not None:
            table.check(system)
        return table

    @property
    def L(self) -> int:
        return len(self.sets)

    def check(self, system: ModulusSystem) -> None:
        if self.L != system.L:
            raise InputError(f"expected {system.L} residue sets, got {self.L}")
        for l, (s, m) in enumerate(zip(self.sets, system.m)):
            if not s:
                raise InputError(f"residue set {l} is empty")
            if len(s) > system.N:
                raise InputError(f"residue set {l} has {len(s)} entries, more than N={system.N}")
            for r in s:
                if not (math.isfinite(r) and 0 <= r < m):
                    raise OutOfRange(f"residue {r} in set {l} not in [0, {m})")
