from typing import Any, Dict, Iterator, List, Optional, Type

import numpy as np

from mopelab.argtypes import FLOAT, EnvArg
from mopelab.errors import ConfigError, NumericError, ShapeError
from mopelab.rng import RngStream

ENV_ERR_CN = "__ERROR__"

DEFAULT_HORIZON = 200


class StepResult:

    def __init__(self, nextState: np.ndarray, reward: float, done: bool, clipped: bool):
        self.nextState = nextState
        self.reward = reward
        self.done = done
        # True when the requested action was outside the action box
        self.clipped = clipped

    def __iter__(self):
        return iter((self.nextState, self.reward, self.done))


class Environment:
    """
    Noise-free analytic control task. Subclasses declare their parameters in _ARGS and
    implement the batched closed forms _initialState(), _dynamics() and _reward().
    """
    _ARGS: List[EnvArg] = [
        EnvArg("processNoise", FLOAT, "Std of additive Gaussian noise on the next state, 0 disables", 0.0),
    ]
    ENVTYPE = ENV_ERR_CN
    STATE_DIM = 0
    ACTION_DIM = 0

    DESCRIPTION: str = "No Description Provided"

    _DOC_CACHE = None

    def __init__(self, horizon: int = DEFAULT_HORIZON, args: Optional[Dict[str, Any]] = None):
        if horizon < 1:
            raise ConfigError("Environment.init()", f"env.horizon must be >= 1, got {horizon}")
        self.horizon = horizon
        self.args: Dict[str, EnvArg] = {
            x.name: x.copy()
            for x in self._ARGS
        }
        if args is not None:
            self.loadArgs(args)
        self.setup()

        self.state = np.zeros(self.STATE_DIM)
        self.stepCount = 0
        self._noise: Optional[RngStream] = None

    def unloadArgs(self) -> Dict[str, Any]:
        return {
            x.name: x.getJSON()
            for x in self.args.values()
        }

    def loadArgs(self, args: Dict[str, Any]) -> None:
        for key, val in args.items():
            try:
                self.args[key].loadJSON(val)
            except KeyError:
                raise ConfigError("Environment.loadArgs()", f"{self} invalid argument env.args.{key}: {val}") from None

    def arg(self, name: str) -> Any:
        return self.args[name].value

    def setup(self) -> None:
        """
        Override to read arguments into attributes. Called once after args are loaded
        """
        raise NotImplementedError(f'Environment: {self.ENVTYPE}.setup() not implemented')

    @property
    def actionLow(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def actionHigh(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def rMax(self) -> float:
        """
        Upper bound on |reward| over all reachable states and in-bounds actions
        """
        raise NotImplementedError

    def _initialState(self, rng: RngStream) -> np.ndarray:
        raise NotImplementedError

    def _dynamics(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _reward(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _constrain(self, states: np.ndarray) -> np.ndarray:
        """
        Maps batched states back into the reachable set _dynamics() keeps them in. Applied after process noise
        """
        return states

    def trueDynamics(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """
        Batched noise-free next states for in-bounds actions
        """
        return self._dynamics(np.atleast_2d(states), np.atleast_2d(actions))

    def trueReward(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return self._reward(np.atleast_2d(states), np.atleast_2d(actions))

    def reset(self, rng: RngStream) -> np.ndarray:
        self.state = np.asarray(self._initialState(rng.substream(0)), dtype=np.float64)
        self.stepCount = 0
        self._noise = rng.substream(1)
        return self.state.copy()

    def step(self, action) -> StepResult:
        action = np.asarray(action, dtype=np.float64).reshape(-1)
        if action.shape[0] != self.ACTION_DIM:
            raise ShapeError("Environment.step()", f"{self}: expected action dim {self.ACTION_DIM}, got {action.shape[0]}")
        if not np.all(np.isfinite(action)):
            raise NumericError("Environment.step()", f"{self}: non-finite action {action}")

        clippedAction = np.clip(action, self.actionLow, self.actionHigh)
        clipped = bool(np.any(clippedAction != action))

        reward = float(self._reward(self.state[None], clippedAction[None])[0])
        nextState = self._dynamics(self.state[None], clippedAction[None])[0]

        noise = self.arg("processNoise")
        if noise > 0:
            if self._noise is None:
                raise NumericError("Environment.step()", f"{self}: step() called before reset()")
            nextState = nextState + noise * self._noise.standardNormal(self.STATE_DIM)
            nextState = self._constrain(nextState[None])[0]

        self.state = nextState
        self.stepCount += 1
        return StepResult(nextState.copy(), reward, self.stepCount >= self.horizon, clipped)

    def __str__(self):
        return f'{self.__class__.__name__}'

    @classmethod
    def docs(cls) -> str:
        if cls._DOC_CACHE is None:
            out = f'{cls.ENVTYPE}\n' \
                  f'-----------------------------------------------\n' \
                  f'{cls.DESCRIPTION}\n'

            if len(cls._ARGS) > 0:
                out += "\nOptions:\n"
                for arg in cls._ARGS:
                    out += f' - {arg.name} [{arg.argType}] = {arg.value}: {arg.descr}\n'
            cls._DOC_CACHE = out

        return cls._DOC_CACHE


class EnvRegistry:

    def __init__(self):
        self._envTypes: Dict[str, Type[Environment]] = {}

    def __iter__(self) -> Iterator[Type[Environment]]:
        return iter(sorted(self._envTypes.values(), key=lambda e: e.ENVTYPE))

    def names(self) -> List[str]:
        return sorted(self._envTypes.keys())

    def registerEnvClass(self, envType: Type[Environment]):
        if envType.ENVTYPE == ENV_ERR_CN:
            raise ConfigError(
                "EnvRegistry.registerEnvClass()", f"Env class {envType.__name__}, ENVTYPE class variable not set"
            )
        try:
            x = self._envTypes[envType.ENVTYPE]
            if x != envType:
                raise ConfigError(
                    'EnvRegistry.registerEnvClass()',
                    f'Env Type "{envType.ENVTYPE}" '
                    f'already defined as {x.__name__}, cannot redefine as {envType.__name__}'
                )
            return
        except KeyError:
            pass

        self._envTypes[envType.ENVTYPE] = envType

    def envClass(self, name: str) -> Type[Environment]:
        try:
            return self._envTypes[name]
        except KeyError:
            raise ConfigError("EnvRegistry.envClass()", f"env.name: unknown environment '{name}', known: {self.names()}") from None

    def make(self, name: str, horizon: int = DEFAULT_HORIZON, args: Optional[Dict[str, Any]] = None) -> Environment:
        return self.envClass(name)(horizon, args)
