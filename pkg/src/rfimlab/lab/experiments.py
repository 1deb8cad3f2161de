"""Experiment pipelines.

Every task draws its randomness from ``SeedSequence(seed, spawn_key=...)``
keyed by task indices only, so results do not depend on how tasks are
scheduled over workers.  Results are merged in task order.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from ..coarsegrain import (CoarseSample, calibrate_cg, coarse_grain, estimate_goodbox_probability,
                           origin_cluster_contained, sample_aux)
from ..disorder import sample_field
from ..fkising import SWChain
from ..lattice import CoarseGrid, lattice_graph
from ..metricpartition import partition_boundary_set
from ..stats import batch_means
from .config import ExperimentConfig

MIN_BIN_COUNT = 30

# spawn-key prefixes keep the streams of different purposes apart
_DISORDER, _CHAIN, _AUX, _GOODBOX, _PARTITION = range(5)


def task_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def disorder_seed(seed: int, replica: int, N: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(_DISORDER, replica, N))
    return int(ss.generate_state(1, np.uint64)[0])


def run_tasks(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


# --------------------------------------------------------------------------
# boundary influence


@dataclass(frozen=True)
class InfluenceRecord:
    T: float
    eps: float
    N: int
    replica: int
    m_hat: float
    stderr: float
    sweeps: int
    seconds: float | None = None

    @property
    def fkg_ok(self) -> bool:
        return self.m_hat + 3.0 * self.stderr >= 0.0


def _chain_series(graph, h, eps, T, bc, rng, cfg: ExperimentConfig):
    chain = SWChain(graph, h, eps, T, bc, rng)
    if cfg.burn_in:
        chain.run(cfg.burn_in)
    sig, rb = chain.run(cfg.sweeps)
    if cfg.estimator == "rao-blackwell":
        return 1.0 - rb
    return (sig == 1).astype(np.float64)


def _influence_task(args):
    cfg, iT, ie, iN, rep = args
    T, eps, N = cfg.T[iT], cfg.eps[ie], cfg.N[iN]
    t0 = time.perf_counter()
    graph = lattice_graph(N)
    h = sample_field(N, disorder_seed(cfg.seed, rep, N))
    means, errs = [], []
    for c in range(cfg.chains):
        plus = _chain_series(graph, h, eps, T, "plus", task_rng(cfg.seed, _CHAIN, iT, ie, iN, rep, c, 0), cfg)
        minus = _chain_series(graph, h, eps, T, "minus", task_rng(cfg.seed, _CHAIN, iT, ie, iN, rep, c, 1), cfg)
        m, e = batch_means(plus - minus, cfg.batches)
        means.append(m)
        errs.append(e)
    m_hat = float(np.mean(means))
    stderr = float(math.sqrt(np.sum(np.square(errs))) / len(errs))
    seconds = time.perf_counter() - t0 if cfg.timing else None
    return InfluenceRecord(float(T), float(eps), int(N), int(rep), m_hat, stderr,
                           int(cfg.sweeps), seconds)


def influence_tasks(cfg: ExperimentConfig):
    return [(cfg, iT, ie, iN, rep)
            for iT in range(len(cfg.T)) for ie in range(len(cfg.eps))
            for iN in range(len(cfg.N)) for rep in range(cfg.replicas)]


def run_influence_sweep(cfg: ExperimentConfig) -> list[InfluenceRecord]:
    """``m = mu+(sigma_o = 1) - mu-(sigma_o = 1)`` per (T, eps, N, replica)."""
    return run_tasks(_influence_task, influence_tasks(cfg), cfg.workers)


def replica_average(records, T, eps, N) -> tuple[float, float, int]:
    """Mean over disorder replicas and its standard error (replica spread
    when there are several replicas, chain error otherwise)."""
    sel = [r for r in records if r.T == T and r.eps == eps and r.N == N]
    if not sel:
        raise KeyError((T, eps, N))
    m = np.array([r.m_hat for r in sel])
    if len(sel) == 1:
        return float(m[0]), sel[0].stderr, 1
    return float(m.mean()), float(m.std(ddof=1) / math.sqrt(len(m))), len(m)


# --------------------------------------------------------------------------
# coarse-grained decay


@dataclass
class DecayRecord:
    L_values: np.ndarray
    counts: np.ndarray
    samples: int
    slope: float | None
    slope_ci: tuple | None
    fit_bins: int
    flagged: bool
    containment_failures: int
    containment_checked: int
    boundary_sets: list = field(default_factory=list, repr=False)

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.samples

    @property
    def prob_stderr(self) -> np.ndarray:
        p = self.probs
        return np.sqrt(p * (1 - p) / self.samples)

    @property
    def p_zero(self) -> float:
        hit = self.L_values == 0
        return float(self.probs[hit].sum())


def fit_survival(L_values, counts, samples, min_count: int = MIN_BIN_COUNT):
    """Least-squares slope of ``log P(L >= l)`` over bins with enough counts.

    Returns ``(slope, (lo, hi), n_bins)``; the interval is a two-sided 95%
    t interval.  Fewer than three usable bins gives ``(None, None, n)``.
    """
    L_values = np.asarray(L_values)
    counts = np.asarray(counts)
    surv = np.cumsum(counts[::-1])[::-1] / samples
    use = counts >= min_count
    x, y = L_values[use].astype(float), np.log(surv[use])
    if use.sum() < 3:
        return None, None, int(use.sum())
    fit = sps.linregress(x, y)
    t = sps.t.ppf(0.975, len(x) - 2)
    return float(fit.slope), (float(fit.slope - t * fit.stderr),
                              float(fit.slope + t * fit.stderr)), int(use.sum())


def _decay_task(args):
    cfg, iN, rep = args
    T, eps, N = cfg.T[0], cfg.eps[0], cfg.N[iN]
    graph = lattice_graph(N)
    grid = CoarseGrid(N, cfg.q)
    h = sample_field(N, disorder_seed(cfg.seed, rep, N))
    chain = SWChain(graph, h, eps, T, "plus", task_rng(cfg.seed, _CHAIN, 0, 0, iN, rep, 0, 0))
    aux_rng = task_rng(cfg.seed, _AUX, iN, rep)
    if cfg.burn_in:
        chain.run(cfg.burn_in)
    Ls, sets, fails, checked = [], [], 0, 0
    for _ in range(cfg.samples):
        chain.run(cfg.thin)
        omega = chain.bonds
        s: CoarseSample = coarse_grain(graph, omega, grid, sample_aux(grid, cfg.c_g, aux_rng),
                                       cfg.k, decompose_boundary=False)
        Ls.append(s.L)
        if s.L:
            sets.append(grid.sites_of(s.B | s.B_prime))
        ok = origin_cluster_contained(graph, omega, grid, s.B, s.B_prime, cfg.k)
        if ok is not None:
            checked += 1
            fails += not ok
    return np.array(Ls), sets, fails, checked


def run_decay_experiment(cfg: ExperimentConfig, keep_sets: bool = False) -> DecayRecord:
    """Law of ``L = |B u B'|`` under the plus FK measure with field."""
    tasks = [(cfg, iN, rep) for iN in range(len(cfg.N)) for rep in range(cfg.replicas)]
    out = run_tasks(_decay_task, tasks, cfg.workers)
    L = np.concatenate([o[0] for o in out])
    values, counts = np.unique(L, return_counts=True)
    slope, ci, nb = fit_survival(values, counts, len(L))
    return DecayRecord(values, counts, len(L), slope, ci, nb, slope is None,
                       sum(o[2] for o in out), sum(o[3] for o in out),
                       [s for o in out for s in o[1]] if keep_sets else [])


# --------------------------------------------------------------------------
# good-box calibration


def _goodbox_task(args):
    cfg, iq, ib = args
    bc = ("wired", "free")[ib]
    return estimate_goodbox_probability(cfg.T[0], cfg.q_grid[iq], bc, cfg.samples,
                                        task_rng(cfg.seed, _GOODBOX, iq, ib),
                                        burn_in=cfg.burn_in, thin=cfg.thin,
                                        n_batches=cfg.batches)


def run_goodbox_calibration(cfg: ExperimentConfig) -> dict:
    tasks = [(cfg, iq, ib) for iq in range(len(cfg.q_grid)) for ib in range(2)]
    est = run_tasks(_goodbox_task, tasks, cfg.workers)
    wired = [e for e in est if e.bc == "wired"]
    cal = calibrate_cg(wired)
    return {"estimates": est, "c_g": cal["c_g"], "c_g_per_q": cal["per_q"]}


# --------------------------------------------------------------------------
# boundary-set partition


def load_points(path) -> np.ndarray:
    pts = np.loadtxt(path, dtype=np.int64, ndmin=2)
    if pts.shape[1] != 3:
        raise ValueError("points file needs three integer columns")
    return pts


def run_partition(cfg: ExperimentConfig):
    """Partition a boundary set: from ``points`` if given, otherwise the
    first nonempty ``B u B'`` of a short decay run."""
    if cfg.points:
        pts = load_points(cfg.points)
    else:
        rec = run_decay_experiment(cfg, keep_sets=True)
        if not rec.boundary_sets:
            raise RuntimeError("no nonempty boundary set was sampled")
        pts = rec.boundary_sets[0]
    return pts, partition_boundary_set(pts, cfg.q, task_rng(cfg.seed, _PARTITION), cfg.r)
