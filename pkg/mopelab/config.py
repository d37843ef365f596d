"""
Run configuration.

A run is described by a JSON document layered as: preset values, then the file's own
keys, then dotted --set overrides. The resolved RunConfig carries every parameter
explicitly, environment arguments included, and its JSON form re-parses to an equal
RunConfig.
"""
import copy
import dataclasses
import json
import logging
import typing
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from mopelab.dynamics import ModelConfig, TrainConfig
from mopelab.envs import DEFAULT_HORIZON, REGISTRY
from mopelab.errors import ConfigError
from mopelab.planner import ExplorationSchedule, PlanConfig

logger = logging.getLogger(__name__)

DESK = 'desk'
FULL = 'full'

# Alternative names accepted for the preset key, resolved to their canonical preset
PRESET_ALIASES: Dict[str, str] = {'paper': FULL}

_ENV = 'env'
_PLAN = 'plan'
_SCHEDULE = 'schedule'
_TRAIN = 'train'
_MODEL = 'model'
_PRESET = 'preset'
_NAME = 'name'
_ARGS = 'args'

PRESETS: Dict[str, Dict[str, Any]] = {
    DESK: {
        _PLAN: {
            'numCandidates': 200,
            'horizon': 15,
            'eliteCount': 20,
            'alpha': 0.1,
            'maxIterations': 5,
            'sigma0': 0.5,
        },
        _SCHEDULE: {
            'betaMin': 0.0,
            'betaMax': 1.0,
            'eMin': 2,
            'eMax': 10,
        },
        _MODEL: {
            'ensembleSize': 4,
            'hidden': [64, 64],
            'rewardHidden': [64, 64],
        },
        _TRAIN: {
            'epochs': 5,
            'batchSize': 32,
            'learningRate': 1e-3,
        },
        'stepsPerEpoch': 200,
        'totalEpochs': 15,
        'warmupEpochs': 1,
        'evalEpisodes': 1,
    },
    FULL: {
        _ENV: {
            'horizon': 1000,
        },
        _PLAN: {
            'numCandidates': 500,
            'horizon': 30,
            'eliteCount': 100,
            'alpha': 0.01,
            'maxIterations': 20,
            'mu0': 0.0,
            'sigma0': 0.1,
        },
        _SCHEDULE: {
            'betaMin': 0.0,
            'betaMax': 1.0,
            'eMin': 50,
            'eMax': 300,
        },
        _MODEL: {
            'ensembleSize': 4,
            'hidden': [500, 500, 500],
            'rewardHidden': [500, 500, 500],
        },
        'stepsPerEpoch': 1000,
        'totalEpochs': 1000,
        'warmupEpochs': 1,
        'evalEpisodes': 5,
    },
}


@dataclass
class EnvConfig:
    name: str = ''
    horizon: int = DEFAULT_HORIZON
    args: Dict[str, Any] = field(default_factory=dict)


@dataclass
class RunConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    plan: PlanConfig = field(default_factory=PlanConfig)
    schedule: ExplorationSchedule = field(default_factory=ExplorationSchedule)
    train: TrainConfig = field(default_factory=TrainConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    stepsPerEpoch: int = 200
    totalEpochs: int = 15
    warmupEpochs: int = 1
    evalEpisodes: int = 1
    # Evaluate every evalEvery epochs, 0 evaluates after the last epoch only
    evalEvery: int = 0
    seed: int = 0
    name: str = 'run'
    preset: str = DESK

    def validate(self):
        loc = "RunConfig.validate()"
        if not self.env.name:
            raise ConfigError(loc, "missing required key env.name")
        if self.stepsPerEpoch < 1:
            raise ConfigError(loc, f"stepsPerEpoch must be >= 1, got {self.stepsPerEpoch}")
        if self.warmupEpochs < 1:
            raise ConfigError(loc, f"warmupEpochs must be >= 1, got {self.warmupEpochs}")
        if not self.totalEpochs > self.warmupEpochs:
            raise ConfigError(
                loc, f"totalEpochs must exceed warmupEpochs={self.warmupEpochs}, got {self.totalEpochs}"
            )
        if self.evalEpisodes < 0:
            raise ConfigError(loc, f"evalEpisodes must be >= 0, got {self.evalEpisodes}")
        if self.evalEvery < 0:
            raise ConfigError(loc, f"evalEvery must be >= 0, got {self.evalEvery}")
        if self.seed < 0:
            raise ConfigError(loc, f"seed must be >= 0, got {self.seed}")
        self.plan.validate()
        self.schedule.validate()
        self.train.validate()
        self.model.validate()

    def withSeed(self, seed: int) -> 'RunConfig':
        out = copy.deepcopy(self)
        out.seed = seed
        return out

    def getJSON(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def _coerce(value: Any, tp: Any, path: str) -> Any:
    origin = typing.get_origin(tp)
    typeArgs = typing.get_args(tp)

    if origin is typing.Union:
        inner = [x for x in typeArgs if x is not type(None)]
        if value is None:
            return None
        return _coerce(value, inner[0], path)

    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError("config", f"{path}: expected a list, got {value!r}")
        return tuple(_coerce(x, typeArgs[0], f'{path}[{i}]') for i, x in enumerate(value))

    if origin is dict or tp is dict:
        if not isinstance(value, dict):
            raise ConfigError("config", f"{path}: expected an object, got {value!r}")
        return dict(value)

    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError("config", f"{path}: expected a bool, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError("config", f"{path}: expected an int, got {value!r}")
        return int(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("config", f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError("config", f"{path}: expected a string, got {value!r}")
        return value
    return value


def _buildSection(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path}: expected an object, got {data!r}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        keyPath = f'{path}.{key}' if path else key
        if key not in names:
            raise ConfigError("config", f"unknown key {keyPath}")
        tp = hints[key]
        if dataclasses.is_dataclass(tp):
            kwargs[key] = _buildSection(tp, value, keyPath)
        else:
            kwargs[key] = _coerce(value, tp, keyPath)
    return cls(**kwargs)


def _merge(base: Dict[str, Any], top: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for key, value in top.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parseOverride(text: str):
    """
    'a.b=value' -> (['a', 'b'], value), value parsed as JSON when possible
    """
    key, sep, raw = text.partition('=')
    if not sep or not key.strip():
        raise ConfigError("parseOverride()", f"override must look like key.path=value, got '{text}'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split('.'), value


def applyOverrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    out = copy.deepcopy(data)
    for text in overrides:
        keys, value = parseOverride(text)
        node = out
        for idx, key in enumerate(keys[:-1]):
            child = node.get(key)
            if child is None:
                child = {}
                node[key] = child
            elif not isinstance(child, dict):
                raise ConfigError("applyOverrides()", f"{'.'.join(keys[:idx + 1])} is not a section")
            node = child
        node[keys[-1]] = value
    return out


def resolveConfig(data: Dict[str, Any], overrides: Sequence[str] = ()) -> RunConfig:
    """
    Layers preset, data and overrides, validates and expands the environment arguments
    """
    if not isinstance(data, dict):
        raise ConfigError("resolveConfig()", "config must be a JSON object")
    layered = applyOverrides(data, overrides)
    preset = layered.get(_PRESET, DESK)
    if not isinstance(preset, str):
        raise ConfigError("resolveConfig()", f"preset must be a string, got {preset!r}")
    preset = PRESET_ALIASES.get(preset, preset)
    if preset not in PRESETS:
        known = sorted([*PRESETS, *PRESET_ALIASES])
        raise ConfigError("resolveConfig()", f"preset: unknown preset '{preset}', known: {known}")

    merged = _merge(PRESETS[preset], layered)
    merged[_PRESET] = preset

    envData = merged.get(_ENV)
    if not isinstance(envData, dict) or not envData.get(_NAME):
        raise ConfigError("resolveConfig()", "missing required key env.name")

    cfg: RunConfig = _buildSection(RunConfig, merged, '')
    cfg.validate()

    env = REGISTRY.make(cfg.env.name, cfg.env.horizon, cfg.env.args)
    cfg.env.args = env.unloadArgs()
    logger.debug("resolved config %s (preset %s, %d overrides)", cfg.name, preset, len(overrides))
    return cfg


def loadRunConfig(filename: str, overrides: Sequence[str] = ()) -> RunConfig:
    try:
        with open(filename, mode='r') as f:
            data = json.load(f)
    except OSError as err:
        raise ConfigError("loadRunConfig()", f"cannot read config {filename}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError("loadRunConfig()", f"{filename} is not valid JSON: {err}") from None
    return resolveConfig(data, overrides)


def saveRunConfig(filename: str, cfg: RunConfig):
    with open(filename, mode='w') as f:
        json.dump(cfg.getJSON(), f, indent=2)


def splitList(text: Optional[str], cast=int) -> List:
    """
    '0,1,2' -> [0, 1, 2]
    """
    if text is None or text.strip() == '':
        return []
    try:
        return [cast(x) for x in text.split(',') if x.strip() != '']
    except ValueError:
        raise ConfigError("splitList()", f"cannot parse list '{text}'") from None
