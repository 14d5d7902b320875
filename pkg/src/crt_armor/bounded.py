"""Reconstruction of several integers when every residue error is below delta.

The common residues (residues modulo ``Gamma``) are sorted on the circle and
cut open at a gap wider than ``2*delta``. Unwrapping every common residue
relative to the cut keeps, for each integer, the relative order of its
errors, so ``(r - hat) / Gamma`` is a consistent residue of the integer's
folding number in every set. Those folding-number residues are fed to the
multi-integer CRT, and each estimate is ``Gamma*q + round(mean(hat))``.

Labels and positions are 0-based throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import permutations, product
from typing import Sequence

import numpy as np

from .errors import AmbiguousReconstruction, NoGap, NonIntegralQuotient
from .gcrtmn import DEFAULT_MAX_WORK, MultiSolution, QuotientTable, gcrtmn_robust
from .mle import TrimmedSet
from .modular import TOL, ModulusSystem, ResidueTable, wrap


@dataclass(frozen=True)
class CommonResidue:
    gamma: float
    label: int
    slot: int


@dataclass(frozen=True)
class CommonResidueList:
    entries: tuple[CommonResidue, ...]
    Gamma: int

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, j) -> CommonResidue:
        return self.entries[j]

    @property
    def gammas(self) -> list[float]:
        return [e.gamma for e in self.entries]


@dataclass(frozen=True)
class UnwrappedTable:
    """Unwrapped common residues ``hats[l][slot]``; ``None`` marks a deleted set."""

    hats: tuple[tuple[float, ...] | None, ...]
    cut: float

    def surviving(self) -> list[int]:
        return [l for l, h in enumerate(self.hats) if h is not None]


@dataclass(frozen=True)
class Reconstruction:
    """Estimate of one unknown integer.

    ``slots[l]`` is the index within residue set ``l`` matched to this
    integer (``None`` when unmatched or deleted) and ``hats[l]`` its
    unwrapped common residue. ``estimate`` is the common-residue estimate
    before rounding; ``X = Gamma*q + round(estimate)``.
    """

    X: int
    q: int
    estimate: float
    slots: tuple[int | None, ...]
    hats: tuple[float | None, ...]
    cut: int | None = None
    removed: tuple[int, ...] = ()
    trimmed: TrimmedSet | None = None
    unique: bool = True

    @property
    def matched(self) -> list[int]:
        return [l for l, s in enumerate(self.slots) if s is not None]

    def to_dict(self) -> dict:
        return {
            "X": self.X,
            "q": self.q,
            "estimate": self.estimate,
            "correspondence": list(self.slots),
            "hats": list(self.hats),
            "cut": self.cut,
            "removed": list(self.removed),
            "kept": None if self.trimmed is None else list(self.trimmed.labels),
        }


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def sorted_common_residues(table: ResidueTable, system: ModulusSystem,
                           labels: Sequence[int] | None = None) -> CommonResidueList:
    """Common residues of the given sets (all by default), ascending by (gamma, label, slot)."""
    labels = range(table.L) if labels is None else labels
    entries = [CommonResidue(wrap(r, system.Gamma), l, s)
               for l in labels for s, r in enumerate(table.sets[l])]
    entries.sort(key=lambda e: (e.gamma, e.label, e.slot))
    return CommonResidueList(tuple(entries), system.Gamma)


def find_gap(commons: CommonResidueList, system: ModulusSystem) -> int:
    """Smallest ``j0`` whose clockwise gap to the next common residue exceeds ``2*delta``.

    The wrap-around gap from the last entry back to the first is checked
    last, giving ``j0 = len(commons) - 1``.
    """
    g = commons.gammas
    width = 2 * system.delta
    for j in range(len(g) - 1):
        if g[j + 1] - g[j] > width + TOL:
            return j
    if g and g[0] - g[-1] + system.Gamma > width + TOL:
        return len(g) - 1
    raise NoGap(f"no gap wider than 2*delta={width} among {len(g)} common residues")


def unwrap_at(table: ResidueTable, cut: float, Gamma: int,
              labels: Sequence[int] | None = None) -> UnwrappedTable:
    """Shift common residues above ``cut`` down by ``Gamma``; sets outside ``labels`` are deleted."""
    keep = set(range(table.L) if labels is None else labels)
    hats = []
    for l, s in enumerate(table.sets):
        if l not in keep:
            hats.append(None)
            continue
        row = []
        for r in s:
            c = wrap(r, Gamma)
            row.append(c - Gamma if c > cut + TOL else c)
        hats.append(tuple(row))
    return UnwrappedTable(tuple(hats), cut)


def unwrap_residues(table: ResidueTable, commons: CommonResidueList, j0: int) -> UnwrappedTable:
    return unwrap_at(table, commons[j0].gamma, commons.Gamma)


def quotient_residues(table: ResidueTable, unwrapped: UnwrappedTable,
                      system: ModulusSystem) -> QuotientTable:
    """Folding-number residues ``<(r - hat) / Gamma>_{M_l}`` of the surviving sets."""
    sets, moduli, labels = [], [], []
    for l in unwrapped.surviving():
        row = []
        for r, h in zip(table.sets[l], unwrapped.hats[l]):
            q = (r - h) / system.Gamma
            qi = round(q)
            if abs(q - qi) * system.Gamma > TOL * max(1.0, abs(r)):
                raise NonIntegralQuotient(f"(r - hat)/Gamma = {q} is not an integer (set {l})")
            row.append(qi % system.M[l])
        sets.append(tuple(row))
        moduli.append(system.M[l])
        labels.append(l)
    return QuotientTable(tuple(sets), tuple(moduli), tuple(labels))


MATCH_LIMIT = 4096


def match_slots(solution: MultiSolution, qtable: QuotientTable, unwrapped: UnwrappedTable,
                width: float | None = None) -> list[dict[int, int]]:
    """Map each reconstructed integer to one slot per matched set (keyed by label).

    When integers share a folding-number residue in some set, every way of
    handing out the matching slots is scored jointly: first by how many
    residues of each integer fit in one ``width`` window (when given), then
    by how many sets would have to be corrupted, then by the within-integer
    sum of squared deviations. Beyond ``MATCH_LIMIT`` combinations each set
    is assigned greedily against the mean of the unambiguous residues.
    """
    N = len(solution.values)
    options: list[dict[int, list[int]]] = [dict() for _ in range(N)]
    for k, l in enumerate(qtable.labels):
        for i in range(N):
            v = solution.correspondence[i][k]
            if v is not None:
                options[i][l] = [s for s, q in enumerate(qtable.sets[k]) if q == v]

    fixed: list[dict[int, int]] = [dict() for _ in range(N)]
    choices = []
    for l in qtable.labels:
        groups: dict[tuple[int, ...], list[int]] = {}
        for i in range(N):
            if l in options[i]:
                groups.setdefault(tuple(options[i][l]), []).append(i)
        for slots, members in groups.items():
            if len(slots) == 1:
                for i in members:
                    fixed[i][l] = slots[0]
            elif len(slots) >= len(members):
                choices.append((l, members, list(permutations(slots, len(members)))))
            else:
                choices.append((l, members, list(product(slots, repeat=len(members)))))

    if not choices:
        return fixed
    if math.prod(len(c) for _, _, c in choices) > MATCH_LIMIT:
        return _greedy(fixed, choices, unwrapped)

    best, best_score = None, None
    for combo in product(*(c for _, _, c in choices)):
        chosen = [dict(f) for f in fixed]
        for (l, members, _), pick in zip(choices, combo):
            for i, s in zip(members, pick):
                chosen[i][l] = s
        score = _score(chosen, unwrapped, width, qtable.labels)
        if best_score is None or score < best_score:
            best, best_score = chosen, score
    return best


def _best_window(v: np.ndarray, width: float) -> np.ndarray:
    """Mask of the ``width`` window holding the most values, ties broken by spread."""
    best, best_key = None, None
    for a in v:
        inside = (v >= a - TOL) & (v <= a + width + TOL)
        w = v[inside]
        key = (-int(inside.sum()), float(((w - w.mean()) ** 2).sum()))
        if best_key is None or key < best_key:
            best, best_key = inside, key
    return best


def _score(chosen, unwrapped, width, labels):
    """Rank a slot assignment; smaller is better.

    The uncorrupted residues of one integer fit in a single ``width``
    window. Keys, in order: more values inside each integer's fullest
    window; fewer residue sets that some integer leaves unmatched or outside
    that window (each such set must be corrupted); smaller spread of the
    windowed values.
    """
    kept, sse = 0, 0.0
    suspects = set()
    for c in chosen:
        ls = list(c)
        v = np.array([unwrapped.hats[l][c[l]] for l in ls])
        suspects |= set(labels) - set(ls)
        if not v.size:
            continue
        if width is not None:
            mask = _best_window(v, width)
            kept += int(mask.sum())
            suspects |= {l for l, m in zip(ls, mask) if not m}
            v = v[mask]
        sse += float(((v - v.mean()) ** 2).sum())
    return (-kept, len(suspects), sse)


def _greedy(fixed, choices, unwrapped):
    chosen = [dict(f) for f in fixed]
    refs = []
    for c in fixed:
        v = [unwrapped.hats[l][s] for l, s in c.items()]
        refs.append(sum(v) / len(v) if v else 0.0)
    for l, members, picks in choices:
        hats = unwrapped.hats[l]
        pick = min(picks, key=lambda p: sum((hats[s] - refs[i]) ** 2 for s, i in zip(p, members)))
        for i, s in zip(members, pick):
            chosen[i][l] = s
    return chosen


def solve_folding(qtable: QuotientTable, system: ModulusSystem, lam: int = 0,
                  max_work: int = DEFAULT_MAX_WORK) -> MultiSolution:
    """Folding numbers from the quotient table over the window ``[-1, search_range - 1)``.

    The residues are shifted up by one so the search runs over non-negative
    values, and the solution is shifted back.
    """
    shifted = QuotientTable(tuple(tuple((r + 1) % m for r in s) for s, m in zip(qtable.sets, qtable.moduli)),
                            qtable.moduli, qtable.labels)
    sol = gcrtmn_robust(shifted, system.K, system.N, lam, q_range=system.search_range,
                        max_work=max_work)
    corr = tuple(tuple(None if r is None else (r - 1) % m for r, m in zip(row, qtable.moduli))
                 for row in sol.correspondence)
    return replace(sol, values=tuple(v - 1 for v in sol.values), correspondence=corr)


def _slot_tuples(L: int, chosen: dict[int, int], unwrapped: UnwrappedTable):
    slots = tuple(chosen.get(l) for l in range(L))
    hats = tuple(None if s is None else unwrapped.hats[l][s] for l, s in enumerate(slots))
    return slots, hats


def reconstruct_bounded(table: ResidueTable, system: ModulusSystem) -> list[Reconstruction]:
    """Recover all ``N`` integers when every error satisfies ``|Delta| < delta``.

    Raises
    ------
    NoGap
        The error bound is violated.
    NoSolution, AmbiguousReconstruction
        The folding numbers cannot be determined (uniquely).
    """
    table.check(system)
    commons = sorted_common_residues(table, system)
    j0 = find_gap(commons, system)
    unwrapped = unwrap_residues(table, commons, j0)
    qtable = quotient_residues(table, unwrapped, system)
    solution = solve_folding(qtable, system)
    if not solution.unique:
        raise AmbiguousReconstruction(
            f"{solution.alternatives} sets of folding numbers explain the residues")
    out = []
    matched = match_slots(solution, qtable, unwrapped, 2 * system.delta)
    for q, chosen in zip(solution.values, matched):
        slots, hats = _slot_tuples(table.L, chosen, unwrapped)
        used = [h for h in hats if h is not None]
        est = sum(used) / len(used)
        out.append(Reconstruction(X=system.Gamma * q + round_half_away(est), q=q,
                                  estimate=est, slots=slots, hats=hats))
    return out
