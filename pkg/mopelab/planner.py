"""
Entropy-bonus CEM planning over a learned ensemble, with a progressive temperature schedule.

Every candidate trajectory is assigned one ensemble member for its whole horizon. All
randomness of one CEM iteration (action noise, member assignment, state noise) is drawn
up front from that iteration's stream in a fixed (candidate, time, dim) layout, so a
candidate's rollout does not depend on how the batch is evaluated.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Protocol, Tuple

import numpy as np

from mopelab.errors import ConfigError, NumericError, PlanningError, ShapeError
from mopelab.gaussian import entropyFromVariance
from mopelab.rng import RngStream

logger = logging.getLogger(__name__)

PROGRESSIVE = 'progressive'
FIXED = 'fixed'
OFF = 'off'
SCHEDULE_MODES = [PROGRESSIVE, FIXED, OFF]


class DynamicsModel(Protocol):
    stateDim: int
    actionDim: int

    @property
    def numMembers(self) -> int:
        ...

    def predictMoments(self, memberIndex: int, states: np.ndarray, actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ...


class RewardModel(Protocol):

    def predictRewards(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        ...


@dataclass
class PlanConfig:
    numCandidates: int = 500
    horizon: int = 30
    eliteCount: int = 100
    alpha: float = 0.01
    maxIterations: int = 20
    # 0 disables early stopping
    convergenceTol: float = 1e-3
    gamma: float = 1.0
    mu0: float = 0.0
    sigma0: float = 0.1
    varianceFloor: float = 1e-6
    fitFirstActionOnly: bool = False

    def validate(self):
        loc = "PlanConfig.validate()"
        if self.numCandidates < 1:
            raise ConfigError(loc, f"plan.numCandidates must be >= 1, got {self.numCandidates}")
        if not 1 <= self.eliteCount <= self.numCandidates:
            raise ConfigError(
                loc, f"plan.eliteCount must be in [1, plan.numCandidates={self.numCandidates}], got {self.eliteCount}"
            )
        if self.horizon < 1:
            raise ConfigError(loc, f"plan.horizon must be >= 1, got {self.horizon}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(loc, f"plan.alpha must be in (0, 1], got {self.alpha}")
        if self.maxIterations < 1:
            raise ConfigError(loc, f"plan.maxIterations must be >= 1, got {self.maxIterations}")
        if self.convergenceTol < 0:
            raise ConfigError(loc, f"plan.convergenceTol must be >= 0, got {self.convergenceTol}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(loc, f"plan.gamma must be in [0, 1], got {self.gamma}")
        if not self.sigma0 > 0:
            raise ConfigError(loc, f"plan.sigma0 must be > 0, got {self.sigma0}")
        if not self.varianceFloor > 0:
            raise ConfigError(loc, f"plan.varianceFloor must be > 0, got {self.varianceFloor}")


@dataclass
class ExplorationSchedule:
    betaMin: float = 0.0
    betaMax: float = 1.0
    eMin: int = 50
    eMax: int = 300
    mode: str = PROGRESSIVE
    # Used in fixed mode, defaults to betaMax
    fixedBeta: Optional[float] = None

    def validate(self):
        loc = "ExplorationSchedule.validate()"
        if self.mode not in SCHEDULE_MODES:
            raise ConfigError(loc, f"schedule.mode must be one of {SCHEDULE_MODES}, got '{self.mode}'")
        if not self.eMin < self.eMax:
            raise ConfigError(loc, f"schedule.eMin < schedule.eMax required, got {self.eMin} >= {self.eMax}")
        if not self.betaMin <= self.betaMax:
            raise ConfigError(loc, f"schedule.betaMin <= schedule.betaMax required, got {self.betaMin} > {self.betaMax}")


def temperature(schedule: ExplorationSchedule, epoch: int) -> float:
    """
    beta = min(max(betaMin + (e - eMin) / (eMax - eMin), betaMin), betaMax) in progressive mode
    """
    if schedule.mode == OFF:
        return 0.0
    if schedule.mode == FIXED:
        return float(schedule.betaMax if schedule.fixedBeta is None else schedule.fixedBeta)
    ramp = schedule.betaMin + (epoch - schedule.eMin) / (schedule.eMax - schedule.eMin)
    return float(min(max(ramp, schedule.betaMin), schedule.betaMax))


class ImaginedTrajectory:

    def __init__(self, actions: np.ndarray, states: np.ndarray, extrinsicRewards: np.ndarray, entropies: np.ndarray,
                 memberIndex: int, valid: bool = True, totalReturn: Optional[float] = None):
        self.actions = actions
        self.states = states
        self.extrinsicRewards = extrinsicRewards
        self.entropies = entropies
        self.memberIndex = memberIndex
        self.valid = valid
        # Set once the trajectory has been scored
        self.totalReturn = totalReturn

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]


class TrajectoryBatch:
    """
    K trajectories stored as stacked arrays
    """

    def __init__(self, actions: np.ndarray, states: np.ndarray, rewards: np.ndarray, entropies: np.ndarray,
                 members: np.ndarray, valid: np.ndarray):
        self.actions = actions
        self.states = states
        self.rewards = rewards
        self.entropies = entropies
        self.members = members
        self.valid = valid
        self.returns: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.actions.shape[0]

    def trajectory(self, idx: int) -> ImaginedTrajectory:
        return ImaginedTrajectory(
            self.actions[idx], self.states[idx], self.rewards[idx], self.entropies[idx], int(self.members[idx]),
            bool(self.valid[idx]), None if self.returns is None else float(self.returns[idx])
        )


def rolloutBatch(model: DynamicsModel, reward: RewardModel, s0: np.ndarray, actions: np.ndarray, members: np.ndarray,
                 stateNoise: np.ndarray) -> TrajectoryBatch:
    """
    Rolls out K action sequences (K, H, A) through the model.
    stateNoise holds standard normal draws of shape (K, H - 1, stateDim).
    Non-finite rollouts are marked invalid, a non-finite start state is an error.
    """
    numCand, horizon, _ = actions.shape
    stateDim = model.stateDim
    s0 = np.asarray(s0, dtype=np.float64)
    if s0.shape != (stateDim, ):
        raise ShapeError("rolloutBatch()", f"expected start state of shape {(stateDim, )}, got {s0.shape}")
    if not np.all(np.isfinite(s0)):
        raise NumericError("rolloutBatch()", f"start state is not finite: {s0}")
    if stateNoise.shape != (numCand, horizon - 1, stateDim):
        raise ShapeError(
            "rolloutBatch()", f"expected state noise {(numCand, horizon - 1, stateDim)}, got {stateNoise.shape}"
        )

    states = np.empty((numCand, horizon, stateDim))
    states[:, 0] = s0
    rewards = np.empty((numCand, horizon))
    entropies = np.empty((numCand, horizon))
    valid = np.ones(numCand, dtype=bool)
    memberIds = np.unique(members)

    with np.errstate(over='ignore', invalid='ignore'):
        for t in range(horizon):
            st = states[:, t]
            at = actions[:, t]
            rewards[:, t] = reward.predictRewards(st, at)

            mean = np.empty((numCand, stateDim))
            var = np.empty((numCand, stateDim))
            for m in memberIds:
                sel = members == m
                mean[sel], var[sel] = model.predictMoments(int(m), st[sel], at[sel])
            entropies[:, t] = entropyFromVariance(var)

            if t + 1 < horizon:
                nxt = mean + np.sqrt(var) * stateNoise[:, t]
                ok = np.all(np.isfinite(nxt), axis=1)
                valid &= ok
                nxt[~ok] = 0.0
                states[:, t + 1] = nxt

    valid &= np.all(np.isfinite(rewards), axis=1) & np.all(np.isfinite(entropies), axis=1)
    return TrajectoryBatch(actions, states, rewards, entropies, members, valid)


def rollout(model: DynamicsModel, reward: RewardModel, s0, actionSeq, memberIndex: int,
            rng: RngStream) -> ImaginedTrajectory:
    if not 0 <= memberIndex < model.numMembers:
        raise ShapeError("rollout()", f"member index {memberIndex} out of range [0, {model.numMembers})")
    actionSeq = np.asarray(actionSeq, dtype=np.float64)
    if actionSeq.ndim == 1:
        actionSeq = actionSeq[:, None]
    horizon = actionSeq.shape[0]
    noise = rng.standardNormal((1, horizon - 1, model.stateDim))
    batch = rolloutBatch(model, reward, s0, actionSeq[None], np.array([memberIndex]), noise)
    return batch.trajectory(0)


def _discounts(gamma: float, horizon: int) -> np.ndarray:
    return gamma**np.arange(horizon, dtype=np.float64)


def score(traj: ImaginedTrajectory, beta: float, gamma: float) -> float:
    """
    J = sum_t gamma^t [r_t + beta * H_t]
    """
    if not traj.valid:
        return -np.inf
    return float(np.sum(_discounts(gamma, traj.horizon) * (traj.extrinsicRewards + beta * traj.entropies)))


def scoreBatch(batch: TrajectoryBatch, beta: float, gamma: float) -> np.ndarray:
    """
    Scores every trajectory of the batch and keeps the returns on it
    """
    horizon = batch.rewards.shape[1]
    with np.errstate(invalid='ignore'):
        returns = (batch.rewards + beta * batch.entropies) @ _discounts(gamma, horizon)
    batch.returns = np.where(batch.valid, returns, -np.inf)
    return batch.returns


def selectElites(returns: np.ndarray, eliteCount: int) -> np.ndarray:
    """
    Indices of the eliteCount highest finite returns, best first. Ties keep candidate order.
    """
    numFinite = int(np.sum(np.isfinite(returns)))
    order = np.argsort(-returns, kind='stable')
    return order[:min(eliteCount, numFinite)]


def cemUpdate(mean: np.ndarray, var: np.ndarray, eliteActions: np.ndarray, alpha: float, varianceFloor: float,
              firstActionOnly: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    mu = (1 - alpha) mu + alpha mu', Sigma = (1 - alpha) Sigma + alpha Sigma' from elite sequences (E, H, A)
    """
    eliteMean = eliteActions.mean(axis=0)
    eliteVar = eliteActions.var(axis=0)
    newMean = (1.0 - alpha) * mean + alpha * eliteMean
    newVar = np.maximum((1.0 - alpha) * var + alpha * eliteVar, varianceFloor)
    if firstActionOnly:
        newMean[1:] = mean[1:]
        newVar[1:] = var[1:]
    return newMean, newVar


@dataclass
class PlanDiagnostics:
    epoch: int
    beta: float
    iterationsUsed: int = 0
    bestReturn: float = -np.inf
    iterationBest: List[float] = field(default_factory=list)
    eliteReturnMean: float = float('nan')
    eliteReturnStd: float = float('nan')
    bestEntropyMean: float = float('nan')

    def toJSON(self) -> Dict[str, Any]:
        return asdict(self)


def planAction(model: DynamicsModel, reward: RewardModel, s0, epoch: int, cfg: PlanConfig,
               schedule: ExplorationSchedule, rng: RngStream, actionLow, actionHigh) -> Tuple[np.ndarray, PlanDiagnostics]:
    """
    Runs up to cfg.maxIterations CEM iterations from s0 and returns the first action of the
    best trajectory seen, with diagnostics
    """
    s0 = np.asarray(s0, dtype=np.float64)
    low = np.asarray(actionLow, dtype=np.float64).reshape(-1)
    high = np.asarray(actionHigh, dtype=np.float64).reshape(-1)
    actionDim = low.shape[0]
    numCand = cfg.numCandidates
    horizon = cfg.horizon

    beta = temperature(schedule, epoch)
    diag = PlanDiagnostics(epoch, beta)

    mean = np.full((horizon, actionDim), cfg.mu0, dtype=np.float64)
    var = np.full((horizon, actionDim), cfg.sigma0**2, dtype=np.float64)

    bestAction: Optional[np.ndarray] = None
    prevBest: Optional[float] = None

    for it in range(cfg.maxIterations):
        stream = rng.substream(it)
        actionNoise = stream.standardNormal((numCand, horizon, actionDim))
        members = stream.integers(0, model.numMembers, numCand)
        stateNoise = stream.standardNormal((numCand, horizon - 1, model.stateDim))

        actions = np.clip(mean + np.sqrt(var) * actionNoise, low, high)
        batch = rolloutBatch(model, reward, s0, actions, members, stateNoise)
        returns = scoreBatch(batch, beta, cfg.gamma)

        elites = selectElites(returns, cfg.eliteCount)
        if elites.size == 0:
            raise PlanningError("planAction()", f"all {numCand} candidate trajectories diverged in iteration {it}")
        best = batch.trajectory(int(elites[0]))
        iterBest = best.totalReturn

        if iterBest > diag.bestReturn:
            diag.bestReturn = iterBest
            bestAction = best.actions[0].copy()
            diag.bestEntropyMean = float(np.mean(best.entropies))

        diag.iterationBest.append(iterBest)
        diag.iterationsUsed = it + 1
        diag.eliteReturnMean = float(np.mean(returns[elites]))
        diag.eliteReturnStd = float(np.std(returns[elites]))

        mean, var = cemUpdate(mean, var, actions[elites], cfg.alpha, cfg.varianceFloor, cfg.fitFirstActionOnly)
        logger.debug("cem iteration %d best %.5f elite mean %.5f", it, iterBest, diag.eliteReturnMean)

        if cfg.convergenceTol > 0 and prevBest is not None and iterBest - prevBest < cfg.convergenceTol:
            break
        prevBest = iterBest

    assert bestAction is not None
    return bestAction, diag
