from typing import Any, Dict, Optional

from mopelab.envs.environment import DEFAULT_HORIZON, Environment, EnvRegistry, StepResult
from mopelab.envs.cartpole import ContinuousCartPole
from mopelab.envs.pendulum import PendulumSwingUp
from mopelab.envs.pointmass import DeceptivePointMass

REGISTRY = EnvRegistry()
REGISTRY.registerEnvClass(PendulumSwingUp)
REGISTRY.registerEnvClass(DeceptivePointMass)
REGISTRY.registerEnvClass(ContinuousCartPole)


def makeEnv(name: str, horizon: int = DEFAULT_HORIZON, args: Optional[Dict[str, Any]] = None) -> Environment:
    return REGISTRY.make(name, horizon, args)
