import numpy as np

from mopelab.argtypes import FLOAT, EnvArg
from mopelab.envs.environment import Environment
from mopelab.rng import RngStream


class DeceptivePointMass(Environment):
    """
    A unit point mass in a walled square arena. A small reward bump sits next to the start,
    a large one further away. With the default geometry the far bump lies beyond a short
    planning horizon, so even a planner with the true model settles on the near one. With a
    closer far bump the trap is the learned reward model: random warmup data never reaches
    the far bump, and an agent without an exploration bonus never collects the data that
    would reveal it.
    """
    _ARGS = Environment._ARGS + [
        EnvArg("dt", FLOAT, "Control period in seconds", 0.1),
        EnvArg("friction", FLOAT, "Linear velocity damping", 0.1),
        EnvArg("arenaSize", FLOAT, "Walls at |x| = |y| = arenaSize", 5.0),
        EnvArg("distractorX", FLOAT, "Near bump center x", 0.6),
        EnvArg("distractorY", FLOAT, "Near bump center y", 0.0),
        EnvArg("distractorReward", FLOAT, "Near bump height", 1.0),
        EnvArg("distractorWidth", FLOAT, "Near bump std", 0.3),
        EnvArg("goalX", FLOAT, "Far bump center x", 3.0),
        EnvArg("goalY", FLOAT, "Far bump center y", 3.0),
        EnvArg("goalReward", FLOAT, "Far bump height", 10.0),
        EnvArg("goalWidth", FLOAT, "Far bump std", 0.5),
        EnvArg("actionCost", FLOAT, "Quadratic action penalty", 0.01),
    ]
    ENVTYPE = "point-mass"
    STATE_DIM = 4
    ACTION_DIM = 2

    DESCRIPTION = "2D point mass, state (x, y, vx, vy), starts at rest at the origin. " \
                  "v' = v + dt (a - friction v), p' = p + dt v'. Reward is the sum of two Gaussian bumps " \
                  "minus actionCost |a|^2."

    def setup(self) -> None:
        self.dt = self.arg("dt")
        self.friction = self.arg("friction")
        self.arenaSize = self.arg("arenaSize")
        self.distractor = np.array([self.arg("distractorX"), self.arg("distractorY")])
        self.distractorReward = self.arg("distractorReward")
        self.distractorWidth = self.arg("distractorWidth")
        self.goal = np.array([self.arg("goalX"), self.arg("goalY")])
        self.goalReward = self.arg("goalReward")
        self.goalWidth = self.arg("goalWidth")
        self.actionCost = self.arg("actionCost")

    @property
    def actionLow(self) -> np.ndarray:
        return -np.ones(2)

    @property
    def actionHigh(self) -> np.ndarray:
        return np.ones(2)

    @property
    def rMax(self) -> float:
        return abs(self.distractorReward) + abs(self.goalReward) + 2.0 * self.actionCost

    def _initialState(self, rng: RngStream) -> np.ndarray:
        return np.zeros(4)

    def _dynamics(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        pos = states[:, :2]
        vel = states[:, 2:] + self.dt * (actions - self.friction * states[:, 2:])
        pos = pos + self.dt * vel

        hitWall = np.abs(pos) > self.arenaSize
        pos = np.clip(pos, -self.arenaSize, self.arenaSize)
        vel = np.where(hitWall, 0.0, vel)
        return np.concatenate([pos, vel], axis=1)

    def _constrain(self, states: np.ndarray) -> np.ndarray:
        pos = np.clip(states[:, :2], -self.arenaSize, self.arenaSize)
        return np.concatenate([pos, states[:, 2:]], axis=1)

    def _bump(self, pos: np.ndarray, center: np.ndarray, width: float) -> np.ndarray:
        sq = np.sum((pos - center)**2, axis=1)
        return np.exp(-sq / (2.0 * width**2))

    def _reward(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        pos = states[:, :2]
        return self.distractorReward * self._bump(pos, self.distractor, self.distractorWidth) \
            + self.goalReward * self._bump(pos, self.goal, self.goalWidth) \
            - self.actionCost * np.sum(actions**2, axis=1)
