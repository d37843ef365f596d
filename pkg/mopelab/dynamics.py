"""
Learned dynamics and reward models.

The dynamics model is an ensemble of probabilistic feedforward nets. Each member maps a
normalized (state, action) pair to a diagonal Gaussian over the next state; the mean head
predicts the state delta and the log-variance head is soft-clamped into
[logvarMin, logvarMax] before exponentiation.
"""
import json
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from mopelab.buffer import ReplayBuffer, TransitionBatch
from mopelab.errors import ConfigError, NumericError, PersistenceError, ShapeError
from mopelab.gaussian import DiagonalGaussian
from mopelab.nets import Adam, FeedforwardNet
from mopelab.rng import RngStream

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

_META = 'meta'
_VERSION = 'version'
_STATE_DIM = 'stateDim'
_ACTION_DIM = 'actionDim'
_ENSEMBLE_SIZE = 'ensembleSize'
_HIDDEN = 'hidden'
_REWARD_HIDDEN = 'rewardHidden'
_LOGVAR_MIN = 'logvarMin'
_LOGVAR_MAX = 'logvarMax'


@dataclass
class ModelConfig:
    ensembleSize: int = 4
    hidden: Tuple[int, ...] = (64, 64)
    rewardHidden: Tuple[int, ...] = (64, 64)
    logvarMin: float = -10.0
    logvarMax: float = 4.0

    def validate(self):
        if self.ensembleSize < 1:
            raise ConfigError("ModelConfig.validate()", f"model.ensembleSize must be >= 1, got {self.ensembleSize}")
        if len(self.hidden) == 0 or any(h < 1 for h in self.hidden):
            raise ConfigError("ModelConfig.validate()", f"model.hidden must be positive widths, got {self.hidden}")
        if len(self.rewardHidden) == 0 or any(h < 1 for h in self.rewardHidden):
            raise ConfigError(
                "ModelConfig.validate()", f"model.rewardHidden must be positive widths, got {self.rewardHidden}"
            )
        # A zero raw head output maps to unit variance only when the range straddles 0
        if not self.logvarMin < 0.0 < self.logvarMax:
            raise ConfigError(
                "ModelConfig.validate()",
                f"model.logvarMin < 0 < model.logvarMax required, got [{self.logvarMin}, {self.logvarMax}]"
            )


@dataclass
class TrainConfig:
    epochs: int = 5
    batchSize: int = 32
    learningRate: float = 1e-3
    bootstrap: bool = True

    def validate(self):
        if self.epochs < 1:
            raise ConfigError("TrainConfig.validate()", f"train.epochs must be >= 1, got {self.epochs}")
        if self.batchSize < 1:
            raise ConfigError("TrainConfig.validate()", f"train.batchSize must be >= 1, got {self.batchSize}")
        if not self.learningRate > 0:
            raise ConfigError("TrainConfig.validate()", f"train.learningRate must be > 0, got {self.learningRate}")


class InputNormalizer:
    """
    Per-feature mean/std of the concatenated (state, action) inputs
    """

    def __init__(self, dim: int):
        self.mean = np.zeros(dim)
        self.std = np.ones(dim)

    def fit(self, states: np.ndarray, actions: np.ndarray):
        x = np.concatenate([states, actions], axis=1)
        self.mean = x.mean(axis=0)
        std = x.std(axis=0)
        self.std = np.where(std < 1e-12, 1.0, std)

    def apply(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return (np.concatenate([states, actions], axis=1) - self.mean) / self.std


def softClampLogVar(raw: np.ndarray, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Smoothly squashes raw outputs into (lo, hi), with raw = 0 mapping to 0.
    Returns the clamped values and their derivative w.r.t. raw.
    """
    s = expit(raw + np.log(-lo / hi))
    return lo + (hi - lo) * s, (hi - lo) * s * (1.0 - s)


class EnsembleModel:

    def __init__(self, stateDim: int, actionDim: int, cfg: ModelConfig, rng: RngStream, zeroOutput: bool = False):
        cfg.validate()
        self.stateDim = stateDim
        self.actionDim = actionDim
        self.cfg = cfg
        self.normalizer = InputNormalizer(stateDim + actionDim)
        self.members: List[FeedforwardNet] = [
            FeedforwardNet(stateDim + actionDim, cfg.hidden, 2 * stateDim, rng.substream(idx), zeroOutput)
            for idx in range(cfg.ensembleSize)
        ]

    @property
    def numMembers(self) -> int:
        return len(self.members)

    def memberForward(self, memberIndex: int, states: np.ndarray, actions: np.ndarray):
        """
        Returns (mean, logVariance, dLogVar/dRaw, cache) for one member
        """
        out, cache = self.members[memberIndex].forward(self.normalizer.apply(states, actions))
        delta = out[:, :self.stateDim]
        logvar, dLogvar = softClampLogVar(out[:, self.stateDim:], self.cfg.logvarMin, self.cfg.logvarMax)
        return states + delta, logvar, dLogvar, cache

    def predictMoments(self, memberIndex: int, states: np.ndarray, actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        mean, logvar, _, _ = self.memberForward(memberIndex, states, actions)
        return mean, np.exp(logvar)

    def predict(self, memberIndex: int, state, action) -> DiagonalGaussian:
        if not 0 <= memberIndex < self.numMembers:
            raise ShapeError("EnsembleModel.predict()", f"member index {memberIndex} out of range [0, {self.numMembers})")
        state = np.asarray(state, dtype=np.float64).reshape(1, -1)
        action = np.asarray(action, dtype=np.float64).reshape(1, -1)
        if state.shape[1] != self.stateDim or action.shape[1] != self.actionDim:
            raise ShapeError(
                "EnsembleModel.predict()",
                f"expected state dim {self.stateDim} and action dim {self.actionDim}, "
                f"got {state.shape[1]} and {action.shape[1]}"
            )
        if not (np.all(np.isfinite(state)) and np.all(np.isfinite(action))):
            raise NumericError("EnsembleModel.predict()", "non-finite state or action")
        mean, var = self.predictMoments(memberIndex, state, action)
        return DiagonalGaussian(mean[0], var[0])

    def ensembleMean(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return np.mean([self.predictMoments(i, states, actions)[0] for i in range(self.numMembers)], axis=0)


class RewardNet:

    def __init__(self, stateDim: int, actionDim: int, hidden, rng: RngStream, zeroOutput: bool = False):
        self.stateDim = stateDim
        self.actionDim = actionDim
        self.normalizer = InputNormalizer(stateDim + actionDim)
        self.net = FeedforwardNet(stateDim + actionDim, hidden, 1, rng, zeroOutput)

    def predictRewards(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        out, _ = self.net.forward(self.normalizer.apply(states, actions))
        return out[:, 0]

    def predictReward(self, state, action) -> float:
        state = np.asarray(state, dtype=np.float64).reshape(1, -1)
        action = np.asarray(action, dtype=np.float64).reshape(1, -1)
        return float(self.predictRewards(state, action)[0])


def memberNll(model: EnsembleModel, memberIndex: int, batch: TransitionBatch) -> float:
    mean, logvar, _, _ = model.memberForward(memberIndex, batch.states, batch.actions)
    resid = mean - batch.nextStates
    return float(np.sum(resid * resid * np.exp(-logvar) + logvar))


def nllLoss(model: EnsembleModel, memberIndex: int, batch: TransitionBatch) -> Tuple[float, List[np.ndarray]]:
    """
    sum_n (mu - s')^T Sigma^-1 (mu - s') + log det Sigma, with exact parameter gradients
    """
    if len(batch) == 0:
        raise ShapeError("nllLoss()", "empty batch")

    mean, logvar, dLogvar, cache = model.memberForward(memberIndex, batch.states, batch.actions)
    resid = mean - batch.nextStates
    invVar = np.exp(-logvar)
    sq = resid * resid * invVar
    loss = float(np.sum(sq + logvar))

    dMean = 2.0 * resid * invVar
    dRaw = (1.0 - sq) * dLogvar
    grads = model.members[memberIndex].backward(np.concatenate([dMean, dRaw], axis=1), cache)
    return loss, grads


def rewardMse(reward: RewardNet, batch: TransitionBatch) -> Tuple[float, List[np.ndarray]]:
    out, cache = reward.net.forward(reward.normalizer.apply(batch.states, batch.actions))
    resid = out[:, 0] - batch.rewards
    n = len(batch)
    loss = float(np.mean(resid * resid))
    grads = reward.net.backward((2.0 * resid / n)[:, None], cache)
    return loss, grads


@dataclass
class TrainingReport:
    epoch: Optional[int]
    gradientSteps: int = 0
    memberLosses: List[List[float]] = field(default_factory=list)
    rewardLosses: List[float] = field(default_factory=list)

    @property
    def modelLossMean(self) -> float:
        """
        Mean over members of the final per-sample training NLL
        """
        return float(np.mean([losses[-1] for losses in self.memberLosses]))

    @property
    def rewardMse(self) -> float:
        return self.rewardLosses[-1]


def bootstrapView(stream: RngStream, n: int, bootstrap: bool = True) -> np.ndarray:
    """
    One member's training indices: n draws with replacement, or all of 0..n-1
    """
    return stream.integers(0, n, n) if bootstrap else np.arange(n)


def trainModels(model: EnsembleModel, reward: RewardNet, buffer: ReplayBuffer, cfg: TrainConfig, rng: RngStream,
                epoch: Optional[int] = None) -> TrainingReport:
    """
    Refits normalizers on the buffer, then trains every member on its own bootstrap view
    with the Gaussian NLL and the reward net with MSE on the full buffer.
    """
    data = buffer.batch()
    n = len(data)
    if n == 0:
        raise ShapeError("trainModels()", "cannot train on an empty replay buffer")

    model.normalizer.fit(data.states, data.actions)
    reward.normalizer.fit(data.states, data.actions)

    report = TrainingReport(epoch)

    for idx, member in enumerate(model.members):
        stream = rng.substream(idx)
        view = bootstrapView(stream, n, cfg.bootstrap)
        viewBatch = data.take(view)
        opt = Adam(member.params, lr=cfg.learningRate)
        losses = []
        for _ in range(cfg.epochs):
            order = stream.permutation(view)
            for start in range(0, n, cfg.batchSize):
                sel = order[start:start + cfg.batchSize]
                _, grads = nllLoss(model, idx, data.take(sel))
                opt.step([g / len(sel) for g in grads])
                report.gradientSteps += 1
            losses.append(memberNll(model, idx, viewBatch) / n)
        report.memberLosses.append(losses)
        logger.debug("member %d nll %s", idx, ", ".join(f'{x:.4f}' for x in losses))

    stream = rng.substream(model.numMembers)
    opt = Adam(reward.net.params, lr=cfg.learningRate)
    for _ in range(cfg.epochs):
        order = stream.permutation(n)
        for start in range(0, n, cfg.batchSize):
            _, grads = rewardMse(reward, data.take(order[start:start + cfg.batchSize]))
            opt.step(grads)
            report.gradientSteps += 1
        report.rewardLosses.append(rewardMse(reward, data)[0])

    return report


def saveCheckpoint(filename: str, model: EnsembleModel, reward: RewardNet):
    meta = {
        _VERSION: CHECKPOINT_VERSION,
        _STATE_DIM: model.stateDim,
        _ACTION_DIM: model.actionDim,
        _ENSEMBLE_SIZE: model.numMembers,
        _HIDDEN: list(model.cfg.hidden),
        _REWARD_HIDDEN: reward.net.hidden,
        _LOGVAR_MIN: model.cfg.logvarMin,
        _LOGVAR_MAX: model.cfg.logvarMax,
    }
    arrays = {
        _META: np.array(json.dumps(meta)),
        'normMean': model.normalizer.mean,
        'normStd': model.normalizer.std,
        'rewardNormMean': reward.normalizer.mean,
        'rewardNormStd': reward.normalizer.std,
    }
    for m, member in enumerate(model.members):
        for p, param in enumerate(member.params):
            arrays[f'member{m}_{p}'] = param
    for p, param in enumerate(reward.net.params):
        arrays[f'reward_{p}'] = param

    try:
        with open(filename, mode='wb') as f:
            np.savez(f, **arrays)
    except OSError as err:
        raise PersistenceError("saveCheckpoint()", f"Cannot write checkpoint {filename}: {err}") from None


def loadCheckpoint(filename: str) -> Tuple[EnsembleModel, RewardNet]:
    try:
        with np.load(filename, allow_pickle=False) as data:
            arrays = {key: data[key] for key in data.files}
    except (OSError, ValueError) as err:
        raise PersistenceError("loadCheckpoint()", f"Cannot read checkpoint {filename}: {err}") from None

    try:
        meta = json.loads(str(arrays[_META]))
    except (KeyError, json.JSONDecodeError):
        raise PersistenceError("loadCheckpoint()", f"{filename}: missing or corrupt metadata") from None

    if meta.get(_VERSION) != CHECKPOINT_VERSION:
        raise PersistenceError(
            "loadCheckpoint()", f"{filename}: unsupported checkpoint version {meta.get(_VERSION)}"
        )

    cfg = ModelConfig(
        ensembleSize=meta[_ENSEMBLE_SIZE],
        hidden=tuple(meta[_HIDDEN]),
        rewardHidden=tuple(meta[_REWARD_HIDDEN]),
        logvarMin=meta[_LOGVAR_MIN],
        logvarMax=meta[_LOGVAR_MAX],
    )
    # Parameters are overwritten below, the init stream does not matter
    model = EnsembleModel(meta[_STATE_DIM], meta[_ACTION_DIM], cfg, RngStream(0))
    reward = RewardNet(meta[_STATE_DIM], meta[_ACTION_DIM], cfg.rewardHidden, RngStream(0))

    model.normalizer.mean = arrays['normMean']
    model.normalizer.std = arrays['normStd']
    reward.normalizer.mean = arrays['rewardNormMean']
    reward.normalizer.std = arrays['rewardNormStd']
    for m, member in enumerate(model.members):
        member.loadParams([arrays[f'member{m}_{p}'] for p in range(len(member.params))])
    reward.net.loadParams([arrays[f'reward_{p}'] for p in range(len(reward.net.params))])

    return model, reward
