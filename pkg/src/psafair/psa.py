"""Pareto simulated annealing over logistic-regression weights.

Each chain starts from a random ``theta`` and repeatedly perturbs a single
coordinate with Gaussian noise. Candidates that weakly dominate the current
solution are always taken; the rest are taken with a Boltzmann probability
whose exponent sums each objective's weighted improvement divided by that
objective's own temperature. Both temperatures cool geometrically. Every
accepted state is archived and the union over chains is reduced to its
non-dominated subset at the end.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import AnnealConfig, Dataset, ModelParams, ObjectiveValues, Solution, validate_dataset
from .errors import DegenerateDenominator, DegenerateObjective, EmptyArchive
from .metrics import cell_base, confusion_from_cells, objectives_from_confusion
from .model import DEFAULT_THRESHOLD, predict_proba

log = logging.getLogger(__name__)


def dominates(a: ObjectiveValues, b: ObjectiveValues) -> bool:
    """Pareto dominance: ``a`` is no worse on both objectives and better on one."""
    return (a.ba >= b.ba and a.us_dev <= b.us_dev) and (a.ba > b.ba or a.us_dev < b.us_dev)


def weakly_dominates(a: ObjectiveValues, b: ObjectiveValues) -> bool:
    return a.ba >= b.ba and a.us_dev <= b.us_dev


def acceptance_probability(
    cur: ObjectiveValues,
    cand: ObjectiveValues,
    t_ba: float,
    t_us: float,
    lambda_ba: float = 1.0,
    lambda_us: float = 1.0,
) -> float:
    """``min(1, exp(sum_i lambda_i * improvement_i / T_i))``.

    Balanced accuracy improves upwards and ``us_dev`` downwards, hence the
    flipped difference for the second term.
    """
    if t_ba <= 0 or t_us <= 0:
        raise ValueError("temperatures must be positive")
    exponent = lambda_ba * (cand.ba - cur.ba) / t_ba + lambda_us * (cur.us_dev - cand.us_dev) / t_us
    if exponent >= 0:
        return 1.0
    return math.exp(exponent)


def perturb(params: ModelParams, beta: float, rng: np.random.Generator) -> ModelParams:
    """Add ``Normal(0, beta**2)`` noise to one uniformly chosen coordinate."""
    theta = params.theta.copy()
    i = rng.integers(theta.size)
    theta[i] += rng.normal(0.0, beta)
    return ModelParams(theta)


def chain_rng(seed: int, chain_id: int) -> np.random.Generator:
    """Independent generator per (seed, chain); unaffected by scheduling order."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(chain_id)])
    )


def random_init(n_params: int, rng: np.random.Generator) -> ModelParams:
    return ModelParams(rng.standard_normal(n_params))


class Objective:
    """Objective evaluator bound to one dataset (the training split)."""

    def __init__(self, data: Dataset, threshold: float = DEFAULT_THRESHOLD):
        self.data = data
        self.threshold = threshold
        self._base = cell_base(data.target, data.sensitive)

    def __call__(self, params: ModelParams) -> ObjectiveValues:
        labels = predict_proba(params, self.data.features) >= self.threshold
        try:
            return objectives_from_confusion(confusion_from_cells(self._base + labels))
        except DegenerateDenominator as exc:
            raise DegenerateObjective(str(exc)) from exc


def evaluate(params: ModelParams, data: Dataset) -> ObjectiveValues:
    """Objectives of ``params`` on ``data``; undefined metrics raise DegenerateObjective."""
    return Objective(data)(params)


@dataclass
class Chain:
    current: Solution
    rng: np.random.Generator
    t_ba: float
    t_us: float
    accepted_in_epoch: int = 0

    def cool(self, alpha: float) -> None:
        self.t_ba *= alpha
        self.t_us *= alpha


def run_chain(
    data: Dataset,
    init: ModelParams,
    cfg: AnnealConfig,
    chain_id: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> list[Solution]:
    """Anneal one chain; returns every accepted solution, starting with ``init`` at step 0.

    The outer loop stops once either temperature reaches ``cfg.t_min`` or an
    entire temperature epoch passes without a single acceptance.
    """
    if rng is None:
        rng = chain_rng(cfg.seed, chain_id)
    evaluate = Objective(data)
    start = Solution(init, evaluate(init), chain_id, 0)
    chain = Chain(start, rng, cfg.t_ba, cfg.t_us)
    accepted = [start]
    step = 0
    n_degenerate = 0
    while chain.t_ba > cfg.t_min and chain.t_us > cfg.t_min:
        chain.accepted_in_epoch = 0
        for _ in range(cfg.iters_per_temp):
            step += 1
            cand = perturb(chain.current.params, cfg.beta, rng)
            try:
                obj = evaluate(cand)
            except DegenerateObjective:
                n_degenerate += 1
                continue
            cur = chain.current.objectives
            if weakly_dominates(obj, cur):
                take = True
            else:
                p = acceptance_probability(
                    cur, obj, chain.t_ba, chain.t_us, cfg.lambda_ba, cfg.lambda_us
                )
                # p == 1 needs no draw; keeps the random stream aligned with
                # single-objective annealing when lambda_us == 0.
                take = p >= 1.0 or rng.random() < p
            if take:
                chain.current = Solution(cand, obj, chain_id, step)
                accepted.append(chain.current)
                chain.accepted_in_epoch += 1
        if chain.accepted_in_epoch == 0:
            break
        chain.cool(cfg.alpha)
    if n_degenerate:
        log.warning("chain %d rejected %d degenerate candidates", chain_id, n_degenerate)
    log.debug("chain %d: %d steps, %d accepted", chain_id, step, len(accepted))
    return accepted


@dataclass(frozen=True)
class ParetoArchive:
    entries: tuple[Solution, ...]
    capacity: Optional[int] = None

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def objectives(self) -> np.ndarray:
        """``(n, 2)`` array of ``(ba, us_dev)``."""
        return np.array([(s.objectives.ba, s.objectives.us_dev) for s in self.entries])


def non_dominated(entries: Sequence[Solution]) -> list[Solution]:
    """Non-dominated subset, sorted by ``ba`` descending.

    Solutions with identical objective pairs are collapsed onto the earliest
    ``(chain_id, step)``. Runs in O(n log n) via a sweep over ``ba``.
    """
    order = sorted(
        entries,
        key=lambda s: (-s.objectives.ba, s.objectives.us_dev, s.chain_id, s.step),
    )
    front: list[Solution] = []
    best_us = math.inf
    prev_ba = None
    for sol in order:
        ba, us = sol.objectives.ba, sol.objectives.us_dev
        if ba == prev_ba:
            # only the first (lowest us_dev, earliest) entry of a ba level can survive
            continue
        prev_ba = ba
        if us < best_us:
            front.append(sol)
            best_us = us
    return front


def _crowding(points: np.ndarray) -> np.ndarray:
    n = len(points)
    dist = np.zeros(n)
    for k in range(points.shape[1]):
        order = np.argsort(points[:, k], kind="stable")
        span = points[order[-1], k] - points[order[0], k]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span > 0 and n > 2:
            dist[order[1:-1]] += (points[order[2:], k] - points[order[:-2], k]) / span
    return dist


def _prune(front: list[Solution], capacity: int) -> list[Solution]:
    # front is sorted by ba descending, so both ends are the objective extremes
    kept = list(front)
    while len(kept) > capacity:
        pts = np.array([(s.objectives.ba, s.objectives.us_dev) for s in kept])
        d = _crowding(pts)
        d[0] = d[-1] = np.inf
        del kept[int(np.argmin(d))]
    return kept


def finalize_archive(entries: Sequence[Solution], capacity: Optional[int] = None) -> ParetoArchive:
    if len(entries) == 0:
        raise EmptyArchive("cannot finalize an empty archive")
    front = non_dominated(entries)
    if capacity is not None:
        if capacity < 2:
            raise ValueError("archive capacity must be >= 2")
        front = _prune(front, capacity)
    return ParetoArchive(tuple(front), capacity)


def _chain_job(data: Dataset, cfg: AnnealConfig, chain_id: int) -> list[Solution]:
    rng = chain_rng(cfg.seed, chain_id)
    init = random_init(data.n_features + 1, rng)
    return run_chain(data, init, cfg, chain_id, rng)


def run_psa(
    data: Dataset,
    cfg: AnnealConfig,
    workers: int = 1,
    capacity: Optional[int] = None,
) -> ParetoArchive:
    """Run ``cfg.n_chains`` independent chains and return the merged Pareto archive.

    With ``workers > 1`` chains run in a process pool. Each chain owns a
    generator derived from ``(cfg.seed, chain_id)`` and results are merged in
    chain order, so the archive does not depend on scheduling.
    """
    validate_dataset(data)
    ids = range(cfg.n_chains)
    if workers > 1 and cfg.n_chains > 1:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.n_chains)) as pool:
            traces = list(pool.map(_chain_job, [data] * cfg.n_chains, [cfg] * cfg.n_chains, ids))
    else:
        traces = [_chain_job(data, cfg, i) for i in ids]
    merged = [s for trace in traces for s in trace]
    log.info("psa: %d chains, %d accepted states", cfg.n_chains, len(merged))
    return finalize_archive(merged, capacity)
