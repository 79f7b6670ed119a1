"""Reference optimizers: single-objective annealing on balanced accuracy and
full-batch gradient descent on log-loss."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import AnnealConfig, Dataset, ModelParams, Solution, validate_dataset
from .errors import ConfigError, DegenerateObjective, Divergence
from .metrics import log_loss
from .model import log_loss_gradient, predict_proba
from .psa import Objective, chain_rng, evaluate, perturb, random_init

log = logging.getLogger(__name__)

DIVERGENCE_PATIENCE = 10


def boltzmann_acceptance(cur_ba: float, cand_ba: float, t: float) -> float:
    """``min(1, exp((cand - cur) / t))`` for a maximised objective."""
    delta = (cand_ba - cur_ba) / t
    return 1.0 if delta >= 0 else math.exp(delta)


def anneal_ba(
    data: Dataset,
    cfg: AnnealConfig,
    init: Optional[ModelParams] = None,
    chain_id: int = 0,
) -> list[Solution]:
    """Single-objective annealing trace: every accepted state, in order.

    Uses the same perturbation, cooling and stopping rule as the Pareto chains
    but ignores the underestimation objective entirely.
    """
    rng = chain_rng(cfg.seed, chain_id)
    if init is None:
        init = random_init(data.n_features + 1, rng)
    objective = Objective(data)
    current = Solution(init, objective(init), chain_id, 0)
    trace = [current]
    t = cfg.t_ba
    step = 0
    while t > cfg.t_min:
        n_acc = 0
        for _ in range(cfg.iters_per_temp):
            step += 1
            cand = perturb(current.params, cfg.beta, rng)
            try:
                obj = objective(cand)
            except DegenerateObjective:
                continue
            p = boltzmann_acceptance(current.objectives.ba, obj.ba, t)
            if p >= 1.0 or rng.random() < p:
                current = Solution(cand, obj, chain_id, step)
                trace.append(current)
                n_acc += 1
        if n_acc == 0:
            break
        t *= cfg.alpha
    return trace


def run_sa_ba(data: Dataset, cfg: AnnealConfig, init: Optional[ModelParams] = None) -> Solution:
    """Best-balanced-accuracy state visited by :func:`anneal_ba` (earliest on ties)."""
    validate_dataset(data)
    trace = anneal_ba(data, cfg, init)
    best = trace[0]
    for sol in trace[1:]:
        if sol.objectives.ba > best.objectives.ba:
            best = sol
    return best


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.1
    max_epochs: int = 10_000
    tol: float = 1e-8
    seed: int = 0  # recorded for provenance; full-batch descent draws no random numbers

    def __post_init__(self):
        if not (self.learning_rate >= 0 and self.max_epochs >= 1 and self.tol > 0):
            raise ConfigError("invalid SgdConfig: need learning_rate >= 0, max_epochs >= 1, tol > 0")


@dataclass(frozen=True, eq=False)
class DescentResult:
    solution: Solution
    losses: np.ndarray
    epochs: int
    converged: bool


def gradient_descent(
    data: Dataset,
    cfg: SgdConfig,
    init: Optional[ModelParams] = None,
) -> DescentResult:
    X, y = data.features, data.target
    theta = np.zeros(data.n_features + 1) if init is None else init.theta.copy()
    loss = log_loss(y, predict_proba(theta, X))
    losses = [loss]
    rising = 0
    converged = False
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        theta = theta - cfg.learning_rate * log_loss_gradient(theta, X, y)
        new_loss = log_loss(y, predict_proba(theta, X))
        losses.append(new_loss)
        if not np.isfinite(new_loss) or not np.all(np.isfinite(theta)):
            raise Divergence(f"non-finite loss or parameters at epoch {epoch}")
        if new_loss > loss:
            rising += 1
            if rising >= DIVERGENCE_PATIENCE:
                raise Divergence(
                    f"log-loss rose for {rising} consecutive epochs "
                    f"(epoch {epoch}, loss {new_loss:.6g}, lr {cfg.learning_rate})"
                )
        else:
            rising = 0
        improvement = loss - new_loss
        loss = new_loss
        if 0 <= improvement < cfg.tol:
            converged = True
            break
    params = ModelParams(theta)
    sol = Solution(params, evaluate(params, data), 0, epoch)
    return DescentResult(sol, np.array(losses), epoch, converged)


def run_gd_logloss(data: Dataset, cfg: SgdConfig, init: Optional[ModelParams] = None) -> Solution:
    validate_dataset(data)
    res = gradient_descent(data, cfg, init)
    log.info("gd: %d epochs, final loss %.6g, converged=%s", res.epochs, res.losses[-1], res.converged)
    return res.solution
