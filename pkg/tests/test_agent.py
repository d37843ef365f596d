"""The interaction loop on tiny configurations."""

import numpy as np
import pytest

from mopelab import agent as agentModule
from mopelab.agent import evaluatePolicy, run
from mopelab.config import resolveConfig
from mopelab.envs import makeEnv
from mopelab.errors import ConfigError, PlanningError
from mopelab.planner import PlanConfig, temperature
from mopelab.rng import RngStream
from mopelab.testing.stubs import OracleModel, OracleReward, randomPolicyReturn


def tinyConfig(*overrides, **top):
    data = {
        'env': {'name': 'pendulum', 'horizon': 10},
        'plan': {'numCandidates': 16, 'horizon': 3, 'eliteCount': 4, 'maxIterations': 2},
        'schedule': {'eMin': 0, 'eMax': 2},
        'model': {'ensembleSize': 2, 'hidden': [8], 'rewardHidden': [8]},
        'train': {'epochs': 1, 'batchSize': 16},
        'stepsPerEpoch': 15,
        'totalEpochs': 3,
        'warmupEpochs': 1,
        'evalEpisodes': 1,
    }
    data.update(top)
    return resolveConfig(data, list(overrides))


class TestRunContract:

    def test_buffer_growth_and_indexing(self):
        cfg = tinyConfig()
        records = run(cfg)
        assert [r.epoch for r in records] == [0, 1, 2]
        assert [r.bufferSize for r in records] == [15, 30, 45]

    def test_single_post_warmup_epoch(self):
        cfg = tinyConfig(totalEpochs=3, warmupEpochs=2)
        records = run(cfg)
        assert records[-1].bufferSize == cfg.stepsPerEpoch * (cfg.warmupEpochs + 1)

    def test_beta_trace(self):
        cfg = tinyConfig(totalEpochs=4)
        records = run(cfg)
        assert [r.beta for r in records] == [temperature(cfg.schedule, e) for e in range(4)]
        assert [r.beta for r in records] == [0.0, 0.5, 1.0, 1.0]

    def test_schedule_off_is_beta_zero(self):
        records = run(tinyConfig('schedule.mode=off'))
        assert all(r.beta == 0.0 for r in records)

    def test_warmup_purity(self):
        cfg = tinyConfig(totalEpochs=4, warmupEpochs=2)
        records = run(cfg)
        assert records[0].trainedAt is None
        assert records[0].gradientSteps == 0
        assert records[0].modelLossMean is None
        trained = [r.trainedAt for r in records if r.trainedAt is not None]
        assert trained == [1, 2, 3]
        assert min(trained) >= cfg.warmupEpochs - 1

    def test_warmup_has_no_planner_or_estimation_stats(self):
        records = run(tinyConfig(totalEpochs=3, warmupEpochs=2))
        for r in records[:2]:
            assert r.plannerBestReturn is None
        assert records[0].rewardError is None and records[0].dynamicsError is None
        assert records[2].plannerBestReturn is not None
        assert records[2].rewardError >= 0.0 and records[2].dynamicsError >= 0.0

    def test_final_evaluation_recorded(self):
        records = run(tinyConfig())
        assert records[-1].evalReturnMean is not None
        assert records[-1].evalReturnStd == 0.0
        assert all(r.evalReturnMean is None for r in records[:-1])

    def test_deterministic(self):
        a = [r.getJSON() for r in run(tinyConfig(seed=3))]
        b = [r.getJSON() for r in run(tinyConfig(seed=3))]
        assert a == b

    def test_seed_changes_run(self):
        a = [r.trueReturn for r in run(tinyConfig(seed=3))]
        b = [r.trueReturn for r in run(tinyConfig(seed=4))]
        assert a != b

    def test_planning_error_carries_context(self, monkeypatch):

        def failing(*args, **kwargs):
            raise PlanningError("planAction()", "all candidates diverged")

        monkeypatch.setattr(agentModule, 'planAction', failing)
        with pytest.raises(PlanningError) as info:
            run(tinyConfig())
        assert 'epoch 1 step 0' in str(info.value)
        assert 'all candidates diverged' in str(info.value)


class TestEvaluatePolicy:

    def test_single_episode_has_zero_std(self):
        env = makeEnv('pendulum', horizon=5)
        cfg = PlanConfig(numCandidates=16, horizon=3, eliteCount=4, maxIterations=2)
        mean, std = evaluatePolicy(OracleModel(env), OracleReward(env), env, 1, cfg, RngStream(0))
        assert std == 0.0
        assert np.isfinite(mean)

    def test_zero_episodes_rejected(self):
        env = makeEnv('pendulum', horizon=5)
        cfg = PlanConfig(numCandidates=16, horizon=3, eliteCount=4, maxIterations=2)
        with pytest.raises(ConfigError):
            evaluatePolicy(OracleModel(env), OracleReward(env), env, 0, cfg, RngStream(0))

    def test_oracle_beats_random(self):
        env = makeEnv('pendulum', horizon=30)
        cfg = PlanConfig(numCandidates=100, horizon=10, eliteCount=10, alpha=0.5, maxIterations=3, sigma0=1.0)
        rng = RngStream(5)
        oracle, _ = evaluatePolicy(OracleModel(env), OracleReward(env), env, 5, cfg, rng)
        baseline, _ = randomPolicyReturn(makeEnv('pendulum', horizon=30), rng, episodes=5)
        assert oracle > baseline
