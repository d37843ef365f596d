"""
The interaction loop: warmup with random actions, then plan every step with the
entropy-bonus planner, record every transition and retrain both models on the whole
buffer at the end of each epoch.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from mopelab.buffer import ReplayBuffer
from mopelab.config import RunConfig
from mopelab.dynamics import EnsembleModel, RewardNet, trainModels
from mopelab.envs import Environment, makeEnv
from mopelab.errors import ConfigError, PlanningError
from mopelab.planner import OFF, ExplorationSchedule, PlanConfig, PlanDiagnostics, planAction, temperature
from mopelab.rng import (STREAM_EVAL, STREAM_MODEL_INIT, STREAM_PLAN, STREAM_RESET, STREAM_TRAIN, STREAM_WARMUP,
                         RngStream)

logger = logging.getLogger(__name__)


@dataclass
class EpochRecord:
    epoch: int
    # Sum of true rewards collected during the epoch
    trueReturn: float
    beta: float
    modelLossMean: Optional[float] = None
    rewardLoss: Optional[float] = None
    plannerBestReturn: Optional[float] = None
    plannerIterationsMean: Optional[float] = None
    # Mean errors of the models on this epoch's transitions, measured before retraining
    rewardError: Optional[float] = None
    dynamicsError: Optional[float] = None
    evalReturnMean: Optional[float] = None
    evalReturnStd: Optional[float] = None
    # Epoch whose end triggered the training step, None when no training happened
    trainedAt: Optional[int] = None
    gradientSteps: int = 0
    bufferSize: int = 0

    def getJSON(self) -> Dict[str, Any]:
        return asdict(self)


class Agent:
    """
    Ties one environment, the learned models and the replay buffer of a single seeded run
    """

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.env: Environment = makeEnv(cfg.env.name, cfg.env.horizon, cfg.env.args)
        stateDim = self.env.STATE_DIM
        actionDim = self.env.ACTION_DIM
        init = RngStream(cfg.seed, STREAM_MODEL_INIT)
        self.model = EnsembleModel(stateDim, actionDim, cfg.model, init.substream(0))
        self.reward = RewardNet(stateDim, actionDim, cfg.model.rewardHidden, init.substream(1))
        self.buffer = ReplayBuffer(stateDim, actionDim)
        self.episode = 0
        self.trained = False

    def resetEnv(self) -> np.ndarray:
        state = self.env.reset(RngStream(self.cfg.seed, STREAM_RESET, (self.episode,)))
        self.episode += 1
        return state

    def randomAction(self, epoch: int, step: int) -> np.ndarray:
        stream = RngStream(self.cfg.seed, STREAM_WARMUP, (epoch, step))
        return stream.uniform(self.env.actionLow, self.env.actionHigh)

    def plan(self, state: np.ndarray, epoch: int, step: int) -> Tuple[np.ndarray, PlanDiagnostics]:
        stream = RngStream(self.cfg.seed, STREAM_PLAN, (epoch, step))
        try:
            return planAction(
                self.model, self.reward, state, epoch, self.cfg.plan, self.cfg.schedule, stream, self.env.actionLow,
                self.env.actionHigh
            )
        except PlanningError as err:
            raise PlanningError("Agent.plan()", f"epoch {epoch} step {step}: {err.reason}") from None

    def estimationErrors(self, count: int) -> Tuple[float, float]:
        """
        Mean |r_hat - r| and mean ||mean_ensemble(s, a) - s'|| over the last count transitions
        """
        fresh = self.buffer.tail(count)
        rewardErr = float(np.mean(np.abs(self.reward.predictRewards(fresh.states, fresh.actions) - fresh.rewards)))
        pred = self.model.ensembleMean(fresh.states, fresh.actions)
        dynErr = float(np.mean(np.linalg.norm(pred - fresh.nextStates, axis=1)))
        return rewardErr, dynErr


def evaluatePolicy(model: EnsembleModel, reward: RewardNet, env: Environment, episodes: int, cfg: PlanConfig,
                   rng: RngStream) -> Tuple[float, float]:
    """
    Runs full episodes planning with the exploration bonus switched off.
    Returns mean and population std of the true episodic return.
    """
    if episodes < 1:
        raise ConfigError("evaluatePolicy()", f"episodes must be >= 1, got {episodes}")
    exploit = ExplorationSchedule(mode=OFF)
    returns = []
    for ep in range(episodes):
        stream = rng.substream(ep)
        state = env.reset(stream.substream(0))
        total = 0.0
        step = 0
        done = False
        while not done:
            action, _ = planAction(
                model, reward, state, 0, cfg, exploit, stream.substream(1, step), env.actionLow, env.actionHigh
            )
            res = env.step(action)
            total += res.reward
            state = res.nextState
            done = res.done
            step += 1
        returns.append(total)
        logger.debug("evaluation episode %d return %.4f", ep, total)
    return float(np.mean(returns)), float(np.std(returns))


def run(cfg: RunConfig, writer=None) -> List[EpochRecord]:
    """
    Runs cfg.totalEpochs epochs of cfg.stepsPerEpoch environment steps.
    Fully determined by cfg, writer only observes.
    """
    cfg.validate()
    agent = Agent(cfg)
    env = agent.env
    if writer is not None:
        writer.start(cfg)

    records: List[EpochRecord] = []
    state = agent.resetEnv()

    for epoch in range(cfg.totalEpochs):
        warmup = epoch < cfg.warmupEpochs
        beta = temperature(cfg.schedule, epoch)
        record = EpochRecord(epoch=epoch, trueReturn=0.0, beta=beta)
        diags: List[PlanDiagnostics] = []
        actions = np.empty((cfg.stepsPerEpoch, env.ACTION_DIM))

        for step in range(cfg.stepsPerEpoch):
            if warmup:
                action = agent.randomAction(epoch, step)
            else:
                action, diag = agent.plan(state, epoch, step)
                diags.append(diag)

            res = env.step(action)
            agent.buffer.add(state, action, res.nextState, res.reward)
            actions[step] = action
            record.trueReturn += res.reward
            state = agent.resetEnv() if res.done else res.nextState

        if agent.trained:
            record.rewardError, record.dynamicsError = agent.estimationErrors(cfg.stepsPerEpoch)
        if diags:
            record.plannerBestReturn = float(np.mean([d.bestReturn for d in diags]))
            record.plannerIterationsMean = float(np.mean([d.iterationsUsed for d in diags]))

        # Training starts at the end of the last warmup epoch
        if epoch >= cfg.warmupEpochs - 1:
            report = trainModels(
                agent.model, agent.reward, agent.buffer, cfg.train, RngStream(cfg.seed, STREAM_TRAIN, (epoch,)), epoch
            )
            agent.trained = True
            record.modelLossMean = report.modelLossMean
            record.rewardLoss = report.rewardMse
            record.trainedAt = report.epoch
            record.gradientSteps = report.gradientSteps
        record.bufferSize = len(agent.buffer)

        last = epoch == cfg.totalEpochs - 1
        periodic = cfg.evalEvery > 0 and (epoch + 1) % cfg.evalEvery == 0
        if cfg.evalEpisodes > 0 and agent.trained and (last or periodic):
            evalEnv = makeEnv(cfg.env.name, cfg.env.horizon, cfg.env.args)
            record.evalReturnMean, record.evalReturnStd = evaluatePolicy(
                agent.model, agent.reward, evalEnv, cfg.evalEpisodes, cfg.plan,
                RngStream(cfg.seed, STREAM_EVAL, (epoch,))
            )

        logger.info(
            "epoch %d beta %.3f return %.3f model loss %s", epoch, beta, record.trueReturn,
            'n/a' if record.modelLossMean is None else f'{record.modelLossMean:.4f}'
        )

        records.append(record)
        if writer is not None:
            writer.writeEpoch(record)
            writer.writePlanner(diags)
            writer.writeActions(epoch, actions)

    if writer is not None:
        writer.writeCheckpoint(agent.model, agent.reward)
        final = records[-1]
        if final.evalReturnMean is not None:
            writer.writeEval(cfg.seed, cfg.evalEpisodes, final.evalReturnMean, final.evalReturnStd)

    return records
