"""
Stand-in dynamics and reward models for exercising the planner and agent loop
without training anything
"""
from typing import Callable, Tuple

import numpy as np

from mopelab.envs import Environment


class LinearStubModel:
    """
    s' ~ N(s A^T + a B^T, variance) for every member
    """

    def __init__(self, A: np.ndarray, B: np.ndarray, variance: float = 1e-4, numMembers: int = 1):
        self.A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        self.B = np.atleast_2d(np.asarray(B, dtype=np.float64))
        self.stateDim = self.A.shape[0]
        self.actionDim = self.B.shape[1]
        self.variance = variance
        self._numMembers = numMembers

    @property
    def numMembers(self) -> int:
        return self._numMembers

    def predictMoments(self, memberIndex: int, states: np.ndarray, actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        mean = states @ self.A.T + actions @ self.B.T
        return mean, np.full_like(mean, self.variance)


class RegionVarianceModel:
    """
    s' = s + a with variance highVar where the first state coordinate is > 0 and lowVar elsewhere.
    Member m scales both variances by (1 + m * memberSpread).
    """

    def __init__(self, stateDim: int = 1, lowVar: float = 1e-3, highVar: float = 1.0, numMembers: int = 2,
                 memberSpread: float = 0.0):
        self.stateDim = stateDim
        self.actionDim = stateDim
        self.lowVar = lowVar
        self.highVar = highVar
        self._numMembers = numMembers
        self.memberSpread = memberSpread

    @property
    def numMembers(self) -> int:
        return self._numMembers

    def predictMoments(self, memberIndex: int, states: np.ndarray, actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        mean = states + actions
        var = np.where(states[:, :1] > 0, self.highVar, self.lowVar) * np.ones_like(mean)
        return mean, var * (1.0 + memberIndex * self.memberSpread)


class DivergingModel:
    """
    Predicts non-finite next states everywhere
    """

    def __init__(self, stateDim: int = 1, actionDim: int = 1):
        self.stateDim = stateDim
        self.actionDim = actionDim

    @property
    def numMembers(self) -> int:
        return 1

    def predictMoments(self, memberIndex: int, states: np.ndarray, actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        mean = np.full((states.shape[0], self.stateDim), np.nan)
        return mean, np.ones_like(mean)


class OracleModel:
    """
    Wraps an environment's noise-free dynamics as a near-deterministic one-member ensemble
    """

    def __init__(self, env: Environment, variance: float = 1e-12):
        self.env = env
        self.stateDim = env.STATE_DIM
        self.actionDim = env.ACTION_DIM
        self.variance = variance

    @property
    def numMembers(self) -> int:
        return 1

    def predictMoments(self, memberIndex: int, states: np.ndarray, actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        mean = self.env.trueDynamics(states, actions)
        return mean, np.full_like(mean, self.variance)


class OracleReward:

    def __init__(self, env: Environment):
        self.env = env

    def predictRewards(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return self.env.trueReward(states, actions)


class FunctionRewardModel:
    """
    Reward given as fn(states, actions) -> (N,), or fn(actions) when actionOnly
    """

    def __init__(self, fn: Callable[..., np.ndarray], actionOnly: bool = False):
        self.fn = fn
        self.actionOnly = actionOnly

    def predictRewards(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        if self.actionOnly:
            return np.asarray(self.fn(actions), dtype=np.float64)
        return np.asarray(self.fn(states, actions), dtype=np.float64)


def zeroReward() -> FunctionRewardModel:
    return FunctionRewardModel(lambda s, a: np.zeros(s.shape[0]))


def randomPolicyReturn(env: Environment, rng, episodes: int = 5) -> Tuple[float, float]:
    """
    Mean and std of the episodic return of uniform random actions
    """
    returns = []
    for ep in range(episodes):
        stream = rng.substream(ep)
        env.reset(stream.substream(0))
        total = 0.0
        done = False
        step = 0
        while not done:
            action = stream.substream(1, step).uniform(env.actionLow, env.actionHigh)
            res = env.step(action)
            total += res.reward
            done = res.done
            step += 1
        returns.append(total)
    return float(np.mean(returns)), float(np.std(returns))
