"""
Non-adaptive baselines: a finite-armed bandit over a fixed candidate set.

The candidate contracts are randomly permuted with the run's generator before being
handed to the policy. Policies:
  - ucb1:          mean + sqrt(2 ln t / n)
  - ucb1_constant: mean + c / sqrt(n)
  - thompson:      Gaussian prior and likelihood, pull the arm with the largest draw
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Optional

import numpy as np

from src.algorithms.records import RoundLog, RunRecord
from src.envs.supply import SupplyModel
from src.mesh.candidates import CandidateSet
from src.model.contracts import Contract
from src.utils.helpers import resolve_config
from src.utils.logger import get_logger, run_logger

logger = get_logger(__name__)

POLICIES = ('ucb1', 'ucb1_constant', 'thompson')


class ArmStats:
    """Pull counts and reward sums of K arms, plus the global round counter."""

    def __init__(self, arms: int):
        self.pulls = np.zeros(arms, dtype=np.int64)
        self.sums = np.zeros(arms, dtype=float)
        self.t = 0

    def update(self, arm: int, reward: float) -> None:
        self.pulls[arm] += 1
        self.sums[arm] += reward
        self.t += 1


def ucb1_index(pulls, sums, t: int, variant: str = 'ucb1', c: float = 1.0):
    """
    UCB1 index per arm; +inf for unpulled arms.

    Works on scalars or arrays of pulls and sums.
    """
    pulls = np.asarray(pulls, dtype=float)
    sums = np.asarray(sums, dtype=float)
    safe = np.maximum(pulls, 1.0)
    mean = sums / safe
    if variant == 'ucb1':
        bonus = np.sqrt(2.0 * math.log(max(t, 1)) / safe)
    elif variant == 'ucb1_constant':
        bonus = c / np.sqrt(safe)
    else:
        raise ValueError(f"Unknown UCB variant '{variant}'")
    result = np.where(pulls > 0, mean + bonus, np.inf)
    return float(result) if result.ndim == 0 else result


@dataclass(frozen=True)
class GaussianPrior:
    mean: float = 0.5
    variance: float = 1.0
    noise_variance: float = 1.0

    def posterior(self, pulls, sums):
        """Posterior mean and variance per arm."""
        precision = 1.0 / self.variance + np.asarray(pulls, dtype=float) / self.noise_variance
        mean = (self.mean / self.variance + np.asarray(sums, dtype=float) / self.noise_variance)
        return mean / precision, 1.0 / precision


def thompson_draw(pulls, sums, rng: np.random.Generator,
                  prior: GaussianPrior = GaussianPrior()):
    """One posterior sample per arm (scalar in, scalar out)."""
    mean, variance = prior.posterior(pulls, sums)
    draw = rng.normal(mean, np.sqrt(variance))
    return float(draw) if np.ndim(draw) == 0 else draw


class BanditPolicy:
    """Arm selection for one policy; rewards are fed back through update()."""

    def __init__(self, policy: str, arms: int, custom_config: Optional[Dict[str, Any]] = None):
        if policy not in POLICIES:
            raise ValueError(f"Unknown policy '{policy}'; expected one of {POLICIES}")
        if arms < 1:
            raise ValueError("A bandit needs at least one arm")
        config = resolve_config(custom_config)['baselines']
        self.policy = policy
        self.stats = ArmStats(arms)
        self.constant = float(config['ucb_constant'])
        thompson = config['thompson']
        self.prior = GaussianPrior(float(thompson['prior_mean']),
                                   float(thompson['prior_variance']),
                                   float(thompson['noise_variance']))

    def select(self, rng: np.random.Generator) -> int:
        stats = self.stats
        if self.policy == 'thompson':
            return int(np.argmax(thompson_draw(stats.pulls, stats.sums, rng, self.prior)))
        # initialization sweep: every arm once, in order
        if stats.t < len(stats.pulls):
            return stats.t
        return int(np.argmax(ucb1_index(stats.pulls, stats.sums, stats.t + 1,
                                        self.policy, self.constant)))

    def update(self, arm: int, reward: float) -> None:
        self.stats.update(arm, reward)


def run_policy(policy: BanditPolicy, pull: Callable[[int, np.random.Generator], float],
               horizon: int, rng: np.random.Generator) -> np.ndarray:
    """Run a policy against an arbitrary reward function; returns the arm pulled each round."""
    chosen = np.empty(horizon, dtype=np.int64)
    for t in range(horizon):
        arm = policy.select(rng)
        policy.update(arm, pull(arm, rng))
        chosen[t] = arm
    return chosen


def nonadaptive_run(env: SupplyModel, candidates: CandidateSet, policy: str, horizon: int,
                    seed=None, run_id: int = 0,
                    custom_config: Optional[Dict[str, Any]] = None) -> RunRecord:
    """
    Run a finite-armed policy over the permuted candidate set.

    Raises:
        ValueError: if the candidate set is infinite or the policy unknown
    """
    if not candidates.finite:
        raise ValueError("Non-adaptive baselines need a finite candidate set")
    rng = np.random.default_rng(seed)
    increments = candidates.increments_array(env.m)
    arms = [Contract(tuple(row)) for row in increments[rng.permutation(len(increments))]]
    bandit = BanditPolicy(policy, len(arms), custom_config)

    record = RunRecord(run_id=run_id, policy=policy, horizon=horizon, m=env.m)
    record.metadata = {'policy': policy, 'arms': len(arms), 'candidates': candidates.describe(),
                       'ucb_constant': bandit.constant, 'thompson_prior': asdict(bandit.prior)}
    for t in range(1, horizon + 1):
        arm = bandit.select(rng)
        contract = arms[arm]
        result = env.play_round(contract, rng)
        bandit.update(arm, result.utility)
        record.append(RoundLog(
            t=t,
            cell=contract.label,
            anchor='arm',
            increments=contract.increments,
            outcome=result.outcome,
            value=result.value,
            payment=result.payment,
            utility=result.utility,
            zoomed=False,
            active_cell_count=len(arms),
        ))
    run_logger(__name__, policy, run_id).debug(f"U-hat={record.time_averaged_utility:.4f}")
    return record
