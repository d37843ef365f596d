"""
Run directory writer and readers.

Layout of one run directory:
    config.json, manifest.json, metrics.jsonl, metrics.csv, planner.jsonl,
    actions/epoch_NNNN.npy, eval.csv, checkpoint.npz
"""
import csv
import json
import logging
import os
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from mopelab import __version__
from mopelab.config import RunConfig, saveRunConfig
from mopelab.dynamics import EnsembleModel, RewardNet, saveCheckpoint
from mopelab.errors import PersistenceError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

OUTPUT_ROOT_ENV = 'MOPELAB_OUTPUT_ROOT'
DEFAULT_OUTPUT_ROOT = 'runs'

CONFIG_FILE = 'config.json'
MANIFEST_FILE = 'manifest.json'
METRICS_JSONL = 'metrics.jsonl'
METRICS_CSV = 'metrics.csv'
PLANNER_JSONL = 'planner.jsonl'
ACTIONS_DIR = 'actions'
EVAL_CSV = 'eval.csv'
CHECKPOINT_FILE = 'checkpoint.npz'

METRICS_HEADER = ['epoch', 'true_return', 'beta', 'model_loss_mean', 'planner_best_return']
EVAL_HEADER = ['seed', 'episodes', 'return_mean', 'return_std']

_RUN_ID = 'runId'
_CODE_VERSION = 'codeVersion'
_SEEDS = 'seeds'
_SCHEMA_VERSION = 'schemaVersion'
_LAYOUT = 'layout'
_CONFIG = 'config'


def outputRoot(override: Optional[str] = None) -> str:
    if override:
        return override
    return os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT)


def runId(cfg: RunConfig) -> str:
    return f'{cfg.name}-seed{cfg.seed}'


def actionsFile(runDir: str, epoch: int) -> str:
    return os.path.join(runDir, ACTIONS_DIR, f'epoch_{epoch:04d}.npy')


def _csvValue(value: Optional[float]) -> str:
    if value is None:
        return ''
    return repr(float(value))


class RunWriter:
    """
    Owns one run directory. Every write is flushed before returning so an interrupted
    run leaves complete records for all finished epochs.
    """

    def __init__(self, runDir: str):
        self.runDir = runDir
        try:
            os.makedirs(os.path.join(runDir, ACTIONS_DIR), exist_ok=True)
        except OSError as err:
            raise PersistenceError("RunWriter.init()", f"cannot create run directory {runDir}: {err}") from None

    def _path(self, name: str) -> str:
        return os.path.join(self.runDir, name)

    def _guard(self, name: str, fn):
        try:
            fn()
        except OSError as err:
            raise PersistenceError("RunWriter", f"cannot write {self._path(name)}: {err}") from None

    def start(self, cfg: RunConfig):
        """
        Writes config.json and manifest.json and truncates the metric streams
        """

        def write():
            saveRunConfig(self._path(CONFIG_FILE), cfg)
            manifest = {
                _RUN_ID: runId(cfg),
                _CODE_VERSION: __version__,
                _SEEDS: [cfg.seed],
                _SCHEMA_VERSION: SCHEMA_VERSION,
                _LAYOUT: {
                    'config': CONFIG_FILE,
                    'metricsJsonl': METRICS_JSONL,
                    'metricsCsv': METRICS_CSV,
                    'planner': PLANNER_JSONL,
                    'actions': f'{ACTIONS_DIR}/epoch_NNNN.npy',
                    'eval': EVAL_CSV,
                    'checkpoint': CHECKPOINT_FILE,
                },
                _CONFIG: cfg.getJSON(),
            }
            with open(self._path(MANIFEST_FILE), mode='w') as f:
                json.dump(manifest, f, indent=2)
            with open(self._path(METRICS_CSV), mode='w', newline='') as f:
                csv.writer(f).writerow(METRICS_HEADER)
            for name in (METRICS_JSONL, PLANNER_JSONL):
                open(self._path(name), mode='w').close()

        self._guard(MANIFEST_FILE, write)

    def writeEpoch(self, record):
        row = record.getJSON()

        def write():
            with open(self._path(METRICS_JSONL), mode='a') as f:
                f.write(json.dumps(row) + '\n')
            with open(self._path(METRICS_CSV), mode='a', newline='') as f:
                csv.writer(f).writerow([
                    record.epoch,
                    _csvValue(record.trueReturn),
                    _csvValue(record.beta),
                    _csvValue(record.modelLossMean),
                    _csvValue(record.plannerBestReturn),
                ])

        self._guard(METRICS_JSONL, write)

    def writePlanner(self, diags: Iterable):

        def write():
            with open(self._path(PLANNER_JSONL), mode='a') as f:
                for diag in diags:
                    f.write(json.dumps(diag.toJSON()) + '\n')

        self._guard(PLANNER_JSONL, write)

    def writeActions(self, epoch: int, actions: np.ndarray):
        self._guard(ACTIONS_DIR, lambda: np.save(actionsFile(self.runDir, epoch), np.asarray(actions)))

    def writeEval(self, seed: int, episodes: int, mean: float, std: float):

        def write():
            with open(self._path(EVAL_CSV), mode='w', newline='') as f:
                writer = csv.writer(f)
                writer.writerow(EVAL_HEADER)
                writer.writerow([seed, episodes, repr(float(mean)), repr(float(std))])

        self._guard(EVAL_CSV, write)

    def writeCheckpoint(self, model: EnsembleModel, reward: RewardNet):
        saveCheckpoint(self._path(CHECKPOINT_FILE), model, reward)


def readEvalCsv(runDir: str) -> Dict[str, Any]:
    try:
        with open(os.path.join(runDir, EVAL_CSV), mode='r', newline='') as f:
            rows = list(csv.DictReader(f))
    except OSError as err:
        raise PersistenceError("readEvalCsv()", f"cannot read evaluation of {runDir}: {err}") from None
    if len(rows) != 1:
        raise PersistenceError("readEvalCsv()", f"{runDir}: expected one evaluation row, found {len(rows)}")
    row = rows[0]
    return {
        'seed': int(row['seed']),
        'episodes': int(row['episodes']),
        'return_mean': float(row['return_mean']),
        'return_std': float(row['return_std']),
    }


def availableActionEpochs(runDir: str) -> List[int]:
    folder = os.path.join(runDir, ACTIONS_DIR)
    if not os.path.isdir(folder):
        return []
    out = []
    for name in os.listdir(folder):
        if name.startswith('epoch_') and name.endswith('.npy'):
            try:
                out.append(int(name[len('epoch_'):-len('.npy')]))
            except ValueError:
                continue
    return sorted(out)


def loadActions(runDir: str, epoch: int) -> np.ndarray:
    try:
        return np.load(actionsFile(runDir, epoch), allow_pickle=False)
    except (OSError, ValueError) as err:
        raise PersistenceError("loadActions()", f"cannot read actions of epoch {epoch} in {runDir}: {err}") from None
