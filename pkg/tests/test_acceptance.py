"""Exit criteria, each run at its stated trial count, tolerance and time budget."""
import itertools
import math
import time

import numpy as np
import pytest
from scipy.stats import norm

from crt_armor.arbitrary import build_cut_plan, pruned_cuts, reconstruct_arbitrary
from crt_armor.bounded import reconstruct_bounded
from crt_armor.cli import resolve_config
from crt_armor.errors import CRTError
from crt_armor.mle import NoiseModel, TrimmedSet, circular_objective, mle_closed_form
from crt_armor.modular import circle_distance, crt_reconstruct, prod, validate_system
from crt_armor.remainder_code import ResidueVector, encode, list_decode, oracle_decode, unique_decode
from crt_armor.selftest import same_integers
from crt_armor.sim import SimConfig, adversarial_instance, is_success, residue_table, snr_sweep, snr_to_sigma

pytestmark = pytest.mark.acceptance

# bounded-error systems per number of unknowns: (M, K, q_range)
BOUNDED_SYSTEMS = {
    1: ((3, 5, 7, 11), 4, None),
    2: ((3, 5, 7, 11, 13, 17), 6, 300),
    3: ((5, 7, 9, 11, 13, 17, 19), 7, 100),
}
# arbitrary-error systems: (N, delta, M, K, q_range)
ARBITRARY_SYSTEMS = (
    (1, 1, (3, 5, 7, 11), 2, None),
    (2, 4, (3, 5, 7, 11, 13, 17), 4, 60),
)


def test_criterion_01_crt_round_trip(criterion):
    t0 = time.perf_counter()
    bad = 0
    for M in ((3, 5, 7), (3, 5, 7, 11)):
        for X in range(prod(M)):
            bad += crt_reconstruct([(X % m, m) for m in M]) != X
    dt = time.perf_counter() - t0
    criterion(1, bad == 0 and dt < 1, f"CRT round trip, {105 + 1155} values, {bad} wrong, {dt:.2f}s")


def test_criterion_02_unique_decoding(criterion):
    M, K = (3, 5, 7, 11, 13), 3
    t0 = time.perf_counter()
    wrong, total = 0, 0
    for X in range(prod(M[:K])):
        clean = encode(X, M).entries
        for l, m in enumerate(M):
            for r in range(m):
                if r == clean[l]:
                    continue
                v = list(clean)
                v[l] = r
                total += 1
                wrong += unique_decode(ResidueVector(tuple(v), M), K) != X
    rng = np.random.default_rng(2)
    mismatch = 0
    for _ in range(10**4):
        X = int(rng.integers(0, prod(M[:K])))
        v = list(encode(X, M).entries)
        l = int(rng.integers(0, len(M)))
        v[l] = int(rng.integers(0, M[l]))
        vec = ResidueVector(tuple(v), M)
        mismatch += [(unique_decode(vec, K), sum(a != b for a, b in zip(encode(unique_decode(vec, K), M).entries, v)))] != oracle_decode(vec, K)
    dt = time.perf_counter() - t0
    ok = wrong == 0 and mismatch == 0 and dt < 30
    criterion(2, ok, f"unique decoding, {total} single corruptions ({wrong} wrong), "
                     f"1e4 oracle trials ({mismatch} mismatches), {dt:.1f}s")


def test_criterion_03_list_decoding(criterion):
    M, K = (3, 5, 7, 11, 13), 3
    lam = len(M) - K
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    missed = 0
    for _ in range(10**4):
        X = int(rng.integers(0, prod(M[:K])))
        v = list(encode(X, M).entries)
        for l in rng.choice(len(M), size=lam, replace=False):
            v[l] = (v[l] + int(rng.integers(1, M[l]))) % M[l]
        missed += X not in list_decode(ResidueVector(tuple(v), M), K, lam).values
    dt = time.perf_counter() - t0
    criterion(3, missed == 0 and dt < 60, f"list decoding at lambda={lam}, 1e4 trials, {missed} missed, {dt:.1f}s")


def test_criterion_04_bounded_error(criterion):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    fails = 0
    for _ in range(10**4):
        N = int(rng.integers(1, 4))
        delta = int(rng.integers(2, 51))
        M, K, q_range = BOUNDED_SYSTEMS[N]
        s = validate_system(N, delta, M, K, q_range)
        q = rng.choice(s.q_range, size=N, replace=False)
        X = q * s.Gamma + rng.integers(0, s.Gamma, size=N)
        d = rng.uniform(-delta, delta, size=(N, s.L))
        try:
            est = [r.X for r in reconstruct_bounded(residue_table(s, X, d), s)]
        except CRTError:
            fails += 1
            continue
        fails += not is_success(est, X, delta)
    dt = time.perf_counter() - t0
    criterion(4, fails == 0 and dt < 120, f"bounded reconstruction |error| <= delta, 1e4 instances, {fails} failures, {dt:.1f}s")


@pytest.fixture(scope="module")
def arbitrary_runs():
    """Criterion 5 trials, kept for the trimmed-set checks of criterion 7."""
    out = {}
    for k, (N, delta, M, K, q_range) in enumerate(ARBITRARY_SYSTEMS):
        s = validate_system(N, delta, M, K, q_range)
        rng = np.random.default_rng(50 + k)
        t0 = time.perf_counter()
        runs = []
        for _ in range(10**4):
            inst = adversarial_instance(s, rng)
            try:
                recs = reconstruct_arbitrary(inst.table, s, use_pruning=False, use_mle=True)
            except CRTError as exc:
                recs = exc
            runs.append((inst, recs))
        out[(N, K, s.L)] = (s, runs, time.perf_counter() - t0)
    return out


def test_criterion_05_arbitrary_errors(criterion, arbitrary_runs):
    ok, lines = True, []
    total = 0.0
    for (N, K, L), (s, runs, dt) in arbitrary_runs.items():
        fails = 0
        for inst, recs in runs:
            if isinstance(recs, Exception):
                fails += 1
                continue
            recs = sorted(recs, key=lambda r: r.X)
            truth = sorted(inst.truth)
            folds = [round((x - r.estimate) / s.Gamma) == r.q for x, r in zip(truth, recs)]
            close = [abs(r.X - x) <= 3 * s.delta for x, r in zip(truth, recs)]
            fails += not (all(folds) and all(close))
        total += dt
        ok &= fails == 0
        lines.append(f"(N={N},K={K},L={L}) {fails} failures")
    ok &= total < 300
    criterion(5, ok, f"arbitrary-error reconstruction, 1e4 instances each: {'; '.join(lines)}, {total:.0f}s")


def test_criterion_06_pruning(criterion, system_n2):
    s = system_n2
    rng = np.random.default_rng(6)
    t0 = time.perf_counter()
    oversize = differ = 0
    for _ in range(10**3):
        inst = adversarial_instance(s, rng)
        oversize += len(pruned_cuts(build_cut_plan(inst.table, s))) > s.N
        res = []
        for pruning in (True, False):
            try:
                recs = reconstruct_arbitrary(inst.table, s, use_pruning=pruning, exhaustive_fallback=False)
                res.append([r.X for r in recs])
            except CRTError as exc:
                res.append(type(exc).__name__)
        if isinstance(res[0], list) and isinstance(res[1], list):
            differ += not same_integers(res[0], res[1], s.Gamma)
        else:
            differ += res[0] != res[1]
    dt = time.perf_counter() - t0
    criterion(6, oversize == 0 and differ == 0 and dt < 120,
              f"pruning, 1e3 instances: {oversize} over N cuts, {differ} differ from full enumeration, {dt:.1f}s")


def test_criterion_07_trimming(criterion, arbitrary_runs):
    checked = spread = missing = 0
    for s, runs, _ in arbitrary_runs.values():
        for inst, recs in runs:
            if isinstance(recs, Exception):
                continue
            for r in recs:
                checked += 1
                spread += r.trimmed.spread > 4 * s.delta + 1e-9
                # good sets deleted by the cut itself cannot reappear after trimming
                missing += not (set(inst.good_sets) - set(r.removed)) <= r.trimmed.H
    ok = spread == 0 and missing == 0 and checked >= 10**4
    criterion(7, ok, f"trimmed sets, {checked} checked: {spread} spread > 4 delta, {missing} lose a good label")


def test_criterion_08_closed_form_optimality(criterion):
    rng = np.random.default_rng(8)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(10**3):
        N, delta = int(rng.integers(1, 4)), float(rng.integers(1, 20))
        Gamma = 4 * N * delta
        n = int(rng.integers(1, 8))
        centre = rng.uniform(0, Gamma)
        values = centre + rng.uniform(-delta, delta, size=n)
        var = rng.uniform(0.1, 4.0, size=n)
        x = mle_closed_form(TrimmedSet(tuple(range(n)), tuple(values)), NoiseModel(tuple(var)))
        grid = np.arange(0.0, Gamma, Gamma * 1e-5)
        diff = np.abs(values[None, :] - grid[:, None]) % Gamma
        d = np.minimum(diff, Gamma - diff)
        best = grid[np.argmin((d ** 2 / var).sum(axis=1))]
        worst = max(worst, circle_distance(x, best, Gamma) / Gamma)
    dt = time.perf_counter() - t0
    criterion(8, worst <= 1e-4 and dt < 30,
              f"closed-form MLE vs grid search, 1e3 inputs, worst gap {worst:.2e} Gamma, {dt:.1f}s")


@pytest.fixture(scope="module")
def protocol_csv(tmp_path_factory):
    config = SimConfig.from_json(resolve_config("n2k4l6"))
    path = tmp_path_factory.mktemp("protocol") / "n2k4l6.csv"
    t0 = time.perf_counter()
    report = snr_sweep(config)
    report.write_csv(path)
    return config, report, path, time.perf_counter() - t0


def test_criterion_09_protocol_trend(criterion, protocol_csv):
    config, report, _, dt = protocol_csv
    rows = report.rows
    z = norm.ppf(0.995)
    dips = []
    for a, b in zip(rows, rows[1:]):
        p = (a.successes + b.successes) / (a.trials + b.trials)
        slack = z * math.sqrt(p * (1 - p) * (1 / a.trials + 1 / b.trials))
        if b.success_rate < a.success_rate - slack:
            dips.append(b.snr_db)
    top = rows[-1]
    sigma_ok = math.isclose(snr_to_sigma(-60), 1000) and abs(snr_to_sigma(-10) - 3.1623) < 1e-4
    ok = (top.sigma <= config.system.delta / 4 and top.success_rate >= 0.99 and not dips
          and sigma_ok and config.n_trials == 2000 and dt < 600)
    curve = " ".join(f"{r.snr_db:g}:{r.success_rate:.3f}" for r in rows)
    criterion(9, ok, f"SNR trend, top {top.success_rate:.4f} at sigma {top.sigma:.3f}, "
                     f"dips {dips}, {dt:.0f}s [{curve}]")


def test_criterion_10_determinism(criterion, protocol_csv, tmp_path):
    config, _, first, _ = protocol_csv
    again = tmp_path / "again.csv"
    snr_sweep(config).write_csv(again)
    same = first.read_bytes() == again.read_bytes()
    criterion(10, same, "repeated protocol run gives byte-identical CSV")
