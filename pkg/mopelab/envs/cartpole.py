import math

import numpy as np

from mopelab.argtypes import FLOAT, EnvArg
from mopelab.envs.environment import Environment
from mopelab.envs.pendulum import wrapAngle
from mopelab.rng import RngStream


class ContinuousCartPole(Environment):
    _ARGS = Environment._ARGS + [
        EnvArg("dt", FLOAT, "Control period in seconds", 0.05),
        EnvArg("gravity", FLOAT, "Gravitational acceleration", 9.8),
        EnvArg("cartMass", FLOAT, "Cart mass", 1.0),
        EnvArg("poleMass", FLOAT, "Pole mass", 0.1),
        EnvArg("poleHalfLength", FLOAT, "Half the pole length", 0.5),
        EnvArg("maxForce", FLOAT, "Force bound, actions live in [-maxForce, maxForce]", 10.0),
        EnvArg("trackLimit", FLOAT, "Cart position is stopped at |x| = trackLimit", 3.0),
        EnvArg("maxCartSpeed", FLOAT, "Cart velocity clip", 10.0),
        EnvArg("maxPoleSpeed", FLOAT, "Pole angular velocity clip", 20.0),
    ]
    ENVTYPE = "cartpole"
    STATE_DIM = 4
    ACTION_DIM = 1

    DESCRIPTION = "Cart-pole swing-up with force actuation. State (x, x', angle, angle'), angle 0 is " \
                  "upright; starts hanging (angle pi) with uniform jitter of 0.1 on every coordinate. " \
                  "Reward -(angle^2 + 0.1 x^2 + 0.01 x'^2 + 0.01 angle'^2 + 0.001 a^2)."

    def setup(self) -> None:
        self.dt = self.arg("dt")
        self.gravity = self.arg("gravity")
        self.cartMass = self.arg("cartMass")
        self.poleMass = self.arg("poleMass")
        self.halfLength = self.arg("poleHalfLength")
        self.maxForce = self.arg("maxForce")
        self.trackLimit = self.arg("trackLimit")
        self.maxCartSpeed = self.arg("maxCartSpeed")
        self.maxPoleSpeed = self.arg("maxPoleSpeed")

    @property
    def actionLow(self) -> np.ndarray:
        return np.array([-self.maxForce])

    @property
    def actionHigh(self) -> np.ndarray:
        return np.array([self.maxForce])

    @property
    def rMax(self) -> float:
        return math.pi**2 + 0.1 * self.trackLimit**2 + 0.01 * self.maxCartSpeed**2 \
            + 0.01 * self.maxPoleSpeed**2 + 0.001 * self.maxForce**2

    def _initialState(self, rng: RngStream) -> np.ndarray:
        jitter = rng.uniform(-0.1, 0.1, 4)
        state = jitter + np.array([0.0, 0.0, math.pi, 0.0])
        state[2] = wrapAngle(state[2])
        return state

    def _dynamics(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        x, xDot, theta, thetaDot = states.T
        force = actions[:, 0]
        total = self.cartMass + self.poleMass
        sinT = np.sin(theta)
        cosT = np.cos(theta)

        temp = (force + self.poleMass * self.halfLength * thetaDot**2 * sinT) / total
        thetaAcc = (self.gravity * sinT - cosT * temp) \
            / (self.halfLength * (4.0 / 3.0 - self.poleMass * cosT**2 / total))
        xAcc = temp - self.poleMass * self.halfLength * thetaAcc * cosT / total

        xDot = np.clip(xDot + self.dt * xAcc, -self.maxCartSpeed, self.maxCartSpeed)
        thetaDot = np.clip(thetaDot + self.dt * thetaAcc, -self.maxPoleSpeed, self.maxPoleSpeed)
        x = x + self.dt * xDot
        theta = theta + self.dt * thetaDot

        atWall = np.abs(x) > self.trackLimit
        x = np.clip(x, -self.trackLimit, self.trackLimit)
        xDot = np.where(atWall, 0.0, xDot)

        return np.stack([x, xDot, wrapAngle(theta), thetaDot], axis=1)

    def _constrain(self, states: np.ndarray) -> np.ndarray:
        x, xDot, theta, thetaDot = states.T
        return np.stack([
            np.clip(x, -self.trackLimit, self.trackLimit),
            np.clip(xDot, -self.maxCartSpeed, self.maxCartSpeed),
            wrapAngle(theta),
            np.clip(thetaDot, -self.maxPoleSpeed, self.maxPoleSpeed),
        ], axis=1)

    def _reward(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        x, xDot, theta, thetaDot = states.T
        angle = wrapAngle(theta)
        return -(angle**2 + 0.1 * x**2 + 0.01 * xDot**2 + 0.01 * thetaDot**2 + 0.001 * actions[:, 0]**2)
