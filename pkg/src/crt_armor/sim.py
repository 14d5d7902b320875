"""Monte-Carlo robustness harness and a toy undersampled-DFT front end.

Each trial draws ``N`` integers with distinct folding numbers, perturbs their
residues with Gaussian errors (plus uniformly random residues on a number of
corrupted sets), reconstructs them, and counts a success when every estimate
is within ``3*Gamma/(4N)`` of its ground-truth partner. Noise is given as
``SNR = -20*log10(sigma)``.

All randomness derives from ``(seed, snr_index, trial_index)``, so results do
not depend on how trials are scheduled across workers.
"""
from __future__ import annotations

import io
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .arbitrary import reconstruct_arbitrary
from .errors import CRTError, InputError, PeakCountMismatch
from .modular import ModulusSystem, ResidueTable, validate_system, wrap

ESTIMATORS = ("plain_mean", "mle")
CSV_HEADER = "snr_db,sigma,trials,successes,success_rate"
THREADS_ENV = "CRT_ARMOR_THREADS"

_SYSTEM_KEYS = ("N", "delta", "M", "K", "q_range")
_CONFIG_KEYS = ("n_trials", "snr_db", "bad_set_count", "noise", "seed", "x_range",
                "estimator", "use_pruning")


def snr_to_sigma(snr_db: float) -> float:
    return 10.0 ** (-snr_db / 20.0)


@dataclass(frozen=True)
class SimConfig:
    system: ModulusSystem
    n_trials: int
    snr_db: tuple[float, ...]
    bad_set_count: int = 0
    noise: tuple[float, ...] | None = None
    seed: int = 0
    x_range: tuple[int, int] | None = None
    estimator: str = "mle"
    use_pruning: bool = True

    def __post_init__(self):
        s = self.system
        if self.n_trials < 1:
            raise InputError("n_trials must be >= 1")
        if not self.snr_db:
            raise InputError("snr_db must be non-empty")
        if not 0 <= self.bad_set_count <= s.max_bad:
            raise InputError(f"bad_set_count must lie in [0, {s.max_bad}]")
        if self.noise is not None and (len(self.noise) != s.L or min(self.noise) < 0):
            raise InputError(f"noise needs {s.L} non-negative scale factors")
        if self.estimator not in ESTIMATORS:
            raise InputError(f"estimator must be one of {ESTIMATORS}")
        lo, hi = self.truth_range
        if not 0 <= lo < hi <= s.x_limit:
            raise InputError(f"x_range must lie within [0, {s.x_limit}]")
        if (hi - 1) // s.Gamma - lo // s.Gamma + 1 < s.N:
            raise InputError(f"x_range holds fewer than N={s.N} folding numbers")

    @property
    def truth_range(self) -> tuple[int, int]:
        """Half-open sampling range of the ground truth, ``[0, Gamma*q_range)`` by default."""
        if self.x_range is not None:
            return tuple(self.x_range)
        return 0, self.system.x_limit

    @property
    def scales(self) -> np.ndarray:
        return np.ones(self.system.L) if self.noise is None else np.asarray(self.noise, float)

    def with_(self, **changes) -> "SimConfig":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return SimConfig(**data)

    def to_dict(self) -> dict:
        d = self.system.to_dict()
        d.update(n_trials=self.n_trials, snr_db=list(self.snr_db),
                 bad_set_count=self.bad_set_count,
                 noise=None if self.noise is None else list(self.noise),
                 seed=self.seed, x_range=list(self.truth_range),
                 estimator=self.estimator, use_pruning=self.use_pruning)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        unknown = set(d) - set(_SYSTEM_KEYS) - set(_CONFIG_KEYS)
        if unknown:
            warnings.warn(f"ignoring unknown config keys: {sorted(unknown)}")
        try:
            system = validate_system(d["N"], d["delta"], d["M"], d["K"], d.get("q_range"))
            snr = d["snr_db"]
            if isinstance(snr, dict):
                snr = np.arange(snr["start"], snr["stop"] + snr["step"] / 2, snr["step"]).tolist()
            return cls(
                system=system,
                n_trials=int(d["n_trials"]),
                snr_db=tuple(float(x) for x in snr),
                bad_set_count=int(d.get("bad_set_count", 0)),
                noise=None if d.get("noise") is None else tuple(float(x) for x in d["noise"]),
                seed=int(d.get("seed", 0)),
                x_range=None if d.get("x_range") is None else tuple(int(x) for x in d["x_range"]),
                estimator=d.get("estimator", "mle"),
                use_pruning=bool(d.get("use_pruning", True)),
            )
        except KeyError as exc:
            raise InputError(f"missing config key {exc}") from None

    @classmethod
    def from_json(cls, path: str | Path) -> "SimConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class SimRow:
    snr_db: float
    sigma: float
    trials: int
    successes: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials


@dataclass(frozen=True)
class SimReport:
    rows: tuple[SimRow, ...]
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key}: {json.dumps(self.metadata[key], sort_keys=True)}\n")
        buf.write(CSV_HEADER + "\n")
        for r in self.rows:
            buf.write(f"{r.snr_db!r},{r.sigma!r},{r.trials},{r.successes},{r.success_rate!r}\n")
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "SimReport":
        meta, rows = {}, []
        lines = [ln for ln in text.splitlines() if ln.strip()]
        for ln in lines:
            if ln.startswith("#"):
                key, _, value = ln[1:].strip().partition(": ")
                meta[key] = json.loads(value)
        body = [ln for ln in lines if not ln.startswith("#")]
        if not body or body[0] != CSV_HEADER:
            raise InputError("missing CSV header")
        for ln in body[1:]:
            snr, sigma, trials, successes, _ = ln.split(",")
            rows.append(SimRow(float(snr), float(sigma), int(trials), int(successes)))
        return cls(tuple(rows), meta)


def _rng(trial_seed, stream: int) -> np.random.Generator:
    seed = list(trial_seed) if isinstance(trial_seed, (tuple, list)) else [int(trial_seed)]
    return np.random.default_rng([*seed, stream])


def draw_truth(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """``N`` integers from the truth range with pairwise distinct folding numbers."""
    lo, hi = config.truth_range
    G, N = config.system.Gamma, config.system.N
    while True:
        X = rng.integers(lo, hi, size=N)
        if len(set((X // G).tolist())) == N:
            return np.sort(X)


def _sample(config: SimConfig, sigma: float, rng: np.random.Generator):
    s = config.system
    delta = rng.standard_normal((s.N, s.L)) * (sigma * config.scales)
    bad = np.sort(rng.choice(s.L, size=config.bad_set_count, replace=False))
    for l in bad:
        delta[:, l] = rng.uniform(0.0, s.m[l], size=s.N)
    return delta, bad


def sample_errors(config: SimConfig, sigma: float, trial_seed) -> np.ndarray:
    """Error matrix ``Delta[i, l]``: Gaussian, except uniform over ``[0, m_l)`` on corrupted sets."""
    return _sample(config, sigma, _rng(trial_seed, 1))[0]


def residue_table(system: ModulusSystem, X: Sequence[int], delta: np.ndarray) -> ResidueTable:
    return ResidueTable(tuple(
        tuple(wrap(float(x) + float(delta[i, l]), m) for i, x in enumerate(X))
        for l, m in enumerate(system.m)
    ))


@dataclass(frozen=True)
class Instance:
    """A synthetic problem with its ground truth."""

    truth: tuple[int, ...]
    errors: np.ndarray
    bad_sets: tuple[int, ...]
    table: ResidueTable

    @property
    def good_sets(self) -> tuple[int, ...]:
        return tuple(l for l in range(self.errors.shape[1]) if l not in self.bad_sets)


def adversarial_instance(system: ModulusSystem, rng: np.random.Generator,
                         n_bad: int | None = None) -> Instance:
    """Good errors uniform in ``(-delta, delta)``; ``n_bad`` sets (default the maximum) uniform over ``[0, m_l)``.

    The unknowns are uniform over ``[0, Gamma*q_range)`` with distinct folding numbers.
    """
    s = system
    n_bad = s.max_bad if n_bad is None else n_bad
    while True:
        X = rng.integers(0, s.x_limit, size=s.N)
        if len(set((X // s.Gamma).tolist())) == s.N:
            break
    X = np.sort(X)
    delta = rng.uniform(-s.delta, s.delta, size=(s.N, s.L))
    bad = np.sort(rng.choice(s.L, size=n_bad, replace=False))
    for l in bad:
        delta[:, l] = rng.uniform(0.0, s.m[l], size=s.N)
    return Instance(tuple(int(x) for x in X), delta, tuple(int(b) for b in bad),
                    residue_table(s, X, delta))


def is_success(estimates: Sequence[int], truth: Sequence[int], tol: float) -> bool:
    """Match estimates to ground truth by minimum total deviation, then check every pair."""
    if len(estimates) != len(truth):
        return False
    cost = np.abs(np.subtract.outer(np.asarray(estimates, float), np.asarray(truth, float)))
    rows, cols = linear_sum_assignment(cost)
    return bool(np.all(cost[rows, cols] <= tol + 1e-9))


@dataclass(frozen=True)
class TrialOutcome:
    truth: tuple[int, ...]
    estimates: tuple[int, ...] | None
    bad_sets: tuple[int, ...]
    success: bool
    error: str | None = None


def trial_outcome(config: SimConfig, sigma: float, trial_seed) -> TrialOutcome:
    s = config.system
    X = draw_truth(config, _rng(trial_seed, 0))
    delta, bad = _sample(config, sigma, _rng(trial_seed, 1))
    table = residue_table(s, X, delta)
    truth = tuple(int(x) for x in X)
    try:
        recs = reconstruct_arbitrary(table, s, use_pruning=config.use_pruning,
                                     use_mle=config.estimator == "mle")
    except CRTError as exc:
        return TrialOutcome(truth, None, tuple(bad.tolist()), False, type(exc).__name__)
    est = tuple(r.X for r in recs)
    ok = is_success(est, truth, 3 * s.Gamma / (4 * s.N))
    return TrialOutcome(truth, est, tuple(bad.tolist()), ok)


def run_trial(config: SimConfig, sigma: float, trial_seed) -> bool:
    return trial_outcome(config, sigma, trial_seed).success


def _run_point(args) -> SimRow:
    config, p, snr = args
    sigma = snr_to_sigma(snr)
    wins = sum(run_trial(config, sigma, (config.seed, p, t)) for t in range(config.n_trials))
    return SimRow(snr, sigma, config.n_trials, wins)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def snr_sweep(config: SimConfig, workers: int | None = None) -> SimReport:
    """Success rate at every SNR point of ``config``."""
    workers = default_workers() if workers is None else max(1, workers)
    jobs = [(config, p, snr) for p, snr in enumerate(config.snr_db)]
    if workers == 1:
        rows = [_run_point(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_point, jobs))
    return SimReport(tuple(rows), config.to_dict())


def undersample_frequencies(freqs: Sequence[int], amps: Sequence[complex],
                            system: ModulusSystem | Sequence[int],
                            max_peaks: int | None = None) -> ResidueTable:
    """Residue sets read off the peaks of ``m_l``-point DFTs of undersampled tones.

    For each modulus ``m`` the samples ``x[n] = sum_i A_i exp(2j*pi*X_i*n/m)``,
    ``n = 0..m-1``, are transformed; tones sharing a bin merge into one peak.
    """
    if isinstance(system, ModulusSystem):
        moduli, max_peaks = system.m, system.N if max_peaks is None else max_peaks
    else:
        moduli = tuple(int(m) for m in system)
    freqs = np.asarray(freqs, dtype=np.int64)
    amps = np.asarray(amps, dtype=complex)
    if freqs.size != amps.size or freqs.size == 0:
        raise InputError("freqs and amps must be non-empty and of equal length")
    if np.any(amps == 0):
        raise InputError("amplitudes must be nonzero")
    if len(set(freqs.tolist())) != freqs.size:
        raise InputError("frequencies must be distinct")
    floor = 1e-6 * float(np.abs(amps).max())
    sets = []
    for m in moduli:
        n = np.arange(m)
        x = (amps[:, None] * np.exp(2j * math.pi * np.outer(freqs % m, n) / m)).sum(axis=0)
        spectrum = np.abs(np.fft.fft(x)) / m
        peaks = np.flatnonzero(spectrum > floor)
        if max_peaks is not None and peaks.size > max_peaks:
            raise PeakCountMismatch(f"{peaks.size} peaks modulo {m} exceed N={max_peaks}")
        sets.append(tuple(float(k) for k in peaks))
    return ResidueTable(tuple(sets))
