"""Reconstruction tolerating arbitrary errors in up to ``(L - K) // 2`` residue sets.

For each common residue ``gamma_j`` the arc ``I_j = (gamma_j, gamma_j + 2*delta]``
collects the labels of the residues falling inside it. A cut candidate is an
index whose arc holds at most ``(L - K) // 2`` labels, none equal to its own.
Deleting every set labelled in the arc leaves an empty stretch after the cut,
so the surviving good sets unwrap consistently; the folding numbers are then
recovered with error-tolerant multi-integer CRT. Cut candidates are tried in
ascending order until one yields a unique solution.

Dense indices (arcs holding at least ``K + (L - K) // 2`` labels, counting
the residue's own) group into at most ``N`` runs, and only one candidate
before each run is tried when pruning. Pruning relies on ``K`` being large
next to ``(L - K) // 2``; with little redundancy it can miss the right cut,
which full enumeration still finds.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .bounded import (
    CommonResidueList,
    Reconstruction,
    _slot_tuples,
    match_slots,
    quotient_residues,
    round_half_away,
    solve_folding,
    sorted_common_residues,
    unwrap_at,
)
from .errors import (
    AmbiguousReconstruction,
    EmptyScriptN,
    InputError,
    NoSolution,
    TooFewSurvivors,
)
from .gcrtmn import DEFAULT_MAX_WORK
from .mle import NoiseModel, mle_closed_form, trim_outliers
from .modular import TOL, ModulusSystem, ResidueTable


@dataclass(frozen=True)
class CutPlan:
    """Cut-point bookkeeping over the sorted common residues.

    ``members[j]`` is the label set inside ``I_j``; ``candidates`` the
    admissible cut indices; ``dense`` the dense indices and ``runs`` their
    partition into maximal consecutive groups, each listed from its first
    (most counterclockwise) element. ``width`` is the arc length ``2*delta``.
    """

    commons: CommonResidueList
    members: tuple[frozenset[int], ...]
    candidates: tuple[int, ...]
    dense: tuple[int, ...]
    runs: tuple[tuple[int, ...], ...]
    width: float


def _arc_contains(start: float, point: float, width: float, Gamma: int) -> bool:
    d = (point - start) % Gamma
    return TOL < d <= width + TOL and d < Gamma - TOL


def build_cut_plan(table: ResidueTable, system: ModulusSystem) -> CutPlan:
    if system.L <= system.K:
        raise InputError("arbitrary-error reconstruction needs redundant moduli (L > K)")
    commons = sorted_common_residues(table, system)
    width = 2 * system.delta
    G = system.Gamma
    lam = system.max_bad
    kappa = len(commons)
    members = tuple(
        frozenset(commons[k].label for k in range(kappa)
                  if _arc_contains(commons[j].gamma, commons[k].gamma, width, G))
        for j in range(kappa)
    )
    candidates = tuple(j for j in range(kappa)
                       if len(members[j]) <= lam and commons[j].label not in members[j])
    # a residue's own label counts towards density: the arc is open at its start
    dense = tuple(j for j in range(kappa)
                  if len(members[j] | {commons[j].label}) >= system.K + lam)
    return CutPlan(commons, members, candidates, dense, _runs(commons, dense, width, G), width)


def _runs(commons: CommonResidueList, dense: Sequence[int], width: float,
          Gamma: int) -> tuple[tuple[int, ...], ...]:
    parent = {j: j for j in dense}

    def find(j):
        while parent[j] != j:
            parent[j] = parent[parent[j]]
            j = parent[j]
        return j

    for a in dense:
        for b in dense:
            ga, gb = commons[a].gamma, commons[b].gamma
            # coinciding points are consecutive as well
            if a < b and (abs(ga - gb) <= TOL
                          or _arc_contains(ga, gb, width, Gamma)
                          or _arc_contains(gb, ga, width, Gamma)):
                parent[find(a)] = find(b)
    groups: dict[int, list[int]] = {}
    for j in dense:
        groups.setdefault(find(j), []).append(j)

    runs = []
    for group in groups.values():
        group.sort()
        # the run starts right after its widest counterclockwise gap
        gaps = [(commons[group[k]].gamma - commons[group[k - 1]].gamma) % Gamma
                if k else (commons[group[0]].gamma - commons[group[-1]].gamma) % Gamma
                for k in range(len(group))]
        if len(group) == 1:
            start = 0
        else:
            start = max(range(len(group)), key=lambda k: (gaps[k], -k))
        runs.append(tuple(group[start:] + group[:start]))
    runs.sort(key=lambda r: r[0])
    return tuple(runs)


def pruned_cuts(plan: CutPlan) -> list[int]:
    """One cut candidate per dense run, at most ``N`` in total.

    For each run the candidates are scanned counterclockwise from the run's
    first element; the first one whose arc does not reach that element is
    taken (the nearest one when every arc reaches it). A candidate whose arc
    reaches into the run would delete residues of the cluster it precedes.
    Without dense runs the smallest candidate is returned.
    """
    if not plan.candidates:
        raise EmptyScriptN("no admissible cut point; too many corrupted residue sets")
    if not plan.runs:
        return [min(plan.candidates)]
    kappa = len(plan.commons)
    picks = set()
    for run in plan.runs:
        first = plan.commons[run[0]]
        order = sorted(plan.candidates, key=lambda n: (run[0] - n) % kappa)
        clear = [n for n in order
                 if not _arc_contains(plan.commons[n].gamma, first.gamma, plan.width,
                                       plan.commons.Gamma)]
        picks.add(clear[0] if clear else order[0])
    return sorted(picks)


def _estimate(pairs: list[tuple[int, float]], kept, use_mle: bool,
              variances: NoiseModel | Mapping[int, float] | None):
    if not use_mle:
        return sum(h for _, h in pairs) / len(pairs), None
    return mle_closed_form(kept, variances), kept


def reconstruct_at_cut(table: ResidueTable, system: ModulusSystem, plan: CutPlan, t: int,
                       use_mle: bool = True,
                       variances: NoiseModel | Mapping[int, float] | None = None,
                       max_work: int = DEFAULT_MAX_WORK) -> list[Reconstruction] | None:
    """Try a single cut; ``None`` when the folding numbers are not unique there.

    A unique solution is also rejected when one of its integers has fewer
    than ``K`` matched residues within a single ``2*delta`` window.
    """
    removed = plan.members[t]
    surviving = [l for l in range(system.L) if l not in removed]
    unwrapped = unwrap_at(table, plan.commons[t].gamma, system.Gamma, surviving)
    qtable = quotient_residues(table, unwrapped, system)
    try:
        solution = solve_folding(qtable, system, system.max_bad, max_work)
    except NoSolution:
        return None
    if not solution.unique:
        return None
    out = []
    matched = match_slots(solution, qtable, unwrapped, plan.width)
    for q, chosen in zip(solution.values, matched):
        slots, hats = _slot_tuples(system.L, chosen, unwrapped)
        pairs = [(l, h) for l, h in enumerate(hats) if h is not None]
        try:
            # an integer without K matched residues inside one 2*delta window
            # cannot be genuine, so the cut is rejected
            kept = trim_outliers(pairs, system.delta, system.K)
        except TooFewSurvivors:
            return None
        est, trimmed = _estimate(pairs, kept, use_mle, variances)
        out.append(Reconstruction(X=system.Gamma * q + round_half_away(est), q=q, estimate=est,
                                  slots=slots, hats=hats, cut=t, removed=tuple(sorted(removed)),
                                  trimmed=trimmed))
    return out


def reconstruct_arbitrary(table: ResidueTable, system: ModulusSystem,
                          use_pruning: bool = True, use_mle: bool = True,
                          variances: NoiseModel | Mapping[int, float] | None = None,
                          max_work: int = DEFAULT_MAX_WORK,
                          exhaustive_fallback: bool = True) -> list[Reconstruction]:
    """Recover all ``N`` integers despite up to ``(L - K) // 2`` arbitrarily wrong sets.

    With ``use_pruning`` only the pruned cuts are tried at first; when none
    gives a unique solution and ``exhaustive_fallback`` is set, the remaining
    admissible cuts follow in ascending order. With ``use_mle`` the unwrapped
    residues of each integer are trimmed of outliers and combined by
    inverse-variance weighting; otherwise they are averaged as they are.

    Raises
    ------
    EmptyScriptN
        No admissible cut exists.
    AmbiguousReconstruction
        No tried cut produced a unique solution.
    """
    table.check(system)
    plan = build_cut_plan(table, system)
    if not plan.candidates:
        raise EmptyScriptN("no admissible cut point; too many corrupted residue sets")
    cuts = pruned_cuts(plan) if use_pruning else list(plan.candidates)
    if use_pruning and exhaustive_fallback:
        cuts += [t for t in plan.candidates if t not in cuts]
    for t in cuts:
        result = reconstruct_at_cut(table, system, plan, t, use_mle, variances, max_work)
        if result is not None:
            return result
    raise AmbiguousReconstruction(f"none of the {len(cuts)} cuts gave unique folding numbers")
