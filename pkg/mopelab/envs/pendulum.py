import math

import numpy as np

from mopelab.argtypes import FLOAT, INT, EnumEnvArg, EnvArg
from mopelab.envs.environment import Environment
from mopelab.rng import RngStream

EULER = 'semi-implicit-euler'
RK4 = 'rk4'


def wrapAngle(theta: np.ndarray) -> np.ndarray:
    """
    Wraps into [-pi, pi)
    """
    return np.mod(theta + math.pi, 2.0 * math.pi) - math.pi


class PendulumSwingUp(Environment):
    """
    Angle is measured from upright (0 = balanced). theta'' = (g/l) sin(theta) - c w / (m l^2) + a / (m l^2)
    """
    _ARGS = Environment._ARGS + [
        EnvArg("dt", FLOAT, "Control period in seconds", 0.05),
        EnvArg("gravity", FLOAT, "Gravitational acceleration", 9.81),
        EnvArg("length", FLOAT, "Pole length", 1.0),
        EnvArg("mass", FLOAT, "Point mass at the pole tip", 1.0),
        EnvArg("damping", FLOAT, "Viscous damping coefficient", 0.0),
        EnvArg("maxTorque", FLOAT, "Torque bound, actions live in [-maxTorque, maxTorque]", 2.0),
        EnvArg("maxSpeed", FLOAT, "Angular velocity is clipped to [-maxSpeed, maxSpeed]", 8.0),
        EnvArg("substeps", INT, "Integration substeps per control period", 1),
        EnumEnvArg("integrator", "Integration scheme", EULER, [EULER, RK4]),
    ]
    ENVTYPE = "pendulum"
    STATE_DIM = 2
    ACTION_DIM = 1

    DESCRIPTION = "Torque-limited pendulum swing-up. State (angle, angular velocity), initial angle " \
                  "uniform in [-pi, pi), initial velocity uniform in [-1, 1]. " \
                  "Reward -(angle^2 + 0.1 w^2 + 0.001 a^2)."

    def setup(self) -> None:
        self.dt = self.arg("dt")
        self.gravity = self.arg("gravity")
        self.length = self.arg("length")
        self.mass = self.arg("mass")
        self.damping = self.arg("damping")
        self.maxTorque = self.arg("maxTorque")
        self.maxSpeed = self.arg("maxSpeed")
        self.substeps = self.arg("substeps")
        self.integrator = self.arg("integrator")

    @property
    def actionLow(self) -> np.ndarray:
        return np.array([-self.maxTorque])

    @property
    def actionHigh(self) -> np.ndarray:
        return np.array([self.maxTorque])

    @property
    def rMax(self) -> float:
        return math.pi**2 + 0.1 * self.maxSpeed**2 + 0.001 * self.maxTorque**2

    def energy(self, state: np.ndarray) -> float:
        theta, omega = state
        inertia = self.mass * self.length**2
        return float(0.5 * inertia * omega**2 + self.mass * self.gravity * self.length * math.cos(theta))

    def _initialState(self, rng: RngStream) -> np.ndarray:
        return np.array([rng.uniform(-math.pi, math.pi), rng.uniform(-1.0, 1.0)])

    def _accel(self, theta: np.ndarray, omega: np.ndarray, torque: np.ndarray) -> np.ndarray:
        inertia = self.mass * self.length**2
        return self.gravity / self.length * np.sin(theta) + (torque - self.damping * omega) / inertia

    def _dynamics(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        theta = states[:, 0].copy()
        omega = states[:, 1].copy()
        torque = actions[:, 0]
        h = self.dt / self.substeps

        for _ in range(self.substeps):
            if self.integrator == RK4:
                k1t, k1w = omega, self._accel(theta, omega, torque)
                k2t, k2w = omega + 0.5 * h * k1w, self._accel(theta + 0.5 * h * k1t, omega + 0.5 * h * k1w, torque)
                k3t, k3w = omega + 0.5 * h * k2w, self._accel(theta + 0.5 * h * k2t, omega + 0.5 * h * k2w, torque)
                k4t, k4w = omega + h * k3w, self._accel(theta + h * k3t, omega + h * k3w, torque)
                theta = theta + h / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t)
                omega = omega + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
            else:
                omega = omega + h * self._accel(theta, omega, torque)
                theta = theta + h * omega
            omega = np.clip(omega, -self.maxSpeed, self.maxSpeed)

        return np.stack([wrapAngle(theta), omega], axis=1)

    def _constrain(self, states: np.ndarray) -> np.ndarray:
        return np.stack([wrapAngle(states[:, 0]), np.clip(states[:, 1], -self.maxSpeed, self.maxSpeed)], axis=1)

    def _reward(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        angle = wrapAngle(states[:, 0])
        return -(angle**2 + 0.1 * states[:, 1]**2 + 0.001 * actions[:, 0]**2)
