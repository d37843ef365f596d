"""Analytic control tasks and their registry."""

import math

import numpy as np
import pytest

from mopelab.envs import REGISTRY, makeEnv
from mopelab.envs.pendulum import RK4, wrapAngle
from mopelab.errors import ConfigError, NumericError, ShapeError
from mopelab.rng import RngStream


class TestRegistry:

    def test_names(self):
        assert REGISTRY.names() == ['cartpole', 'pendulum', 'point-mass']

    def test_unknown(self):
        with pytest.raises(ConfigError) as info:
            makeEnv('half-cheetah')
        assert 'pendulum' in str(info.value)

    def test_unknown_arg(self):
        with pytest.raises(ConfigError) as info:
            makeEnv('pendulum', args={'lenght': 2.0})
        assert 'env.args.lenght' in str(info.value)

    def test_bad_arg_type(self):
        with pytest.raises(ConfigError):
            makeEnv('pendulum', args={'substeps': 1.5})

    def test_args_expand(self):
        env = makeEnv('pendulum', args={'dt': 0.02})
        args = env.unloadArgs()
        assert args['dt'] == 0.02
        assert args['maxTorque'] == 2.0
        assert args['processNoise'] == 0.0

    def test_docs(self):
        for envType in REGISTRY:
            doc = envType.docs()
            assert envType.ENVTYPE in doc
            assert 'processNoise' in doc


class TestStepContract:

    @pytest.mark.parametrize('name', ['pendulum', 'point-mass', 'cartpole'])
    def test_shapes_and_done(self, name):
        env = makeEnv(name, horizon=5)
        state = env.reset(RngStream(42))
        assert state.shape == (env.STATE_DIM,)
        done = False
        steps = 0
        while not done:
            nextState, reward, done = env.step(np.zeros(env.ACTION_DIM))
            assert nextState.shape == (env.STATE_DIM,)
            assert np.isfinite(reward)
            steps += 1
        assert steps == 5

    @pytest.mark.parametrize('name', ['pendulum', 'point-mass', 'cartpole'])
    def test_deterministic_reset(self, name):
        a = makeEnv(name).reset(RngStream(42, 1, (3,)))
        b = makeEnv(name).reset(RngStream(42, 1, (3,)))
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize('name', ['pendulum', 'point-mass', 'cartpole'])
    def test_reward_bounded_by_r_max(self, name):
        env = makeEnv(name, horizon=300)
        rng = RngStream(7)
        env.reset(rng.substream(0))
        done = False
        step = 0
        while not done:
            action = rng.substream(1, step).uniform(env.actionLow, env.actionHigh)
            res = env.step(action)
            assert abs(res.reward) <= env.rMax
            done = res.done
            step += 1

    @pytest.mark.parametrize('name', ['pendulum', 'point-mass', 'cartpole'])
    def test_reward_bounded_under_process_noise(self, name):
        env = makeEnv(name, horizon=300, args={'processNoise': 5.0})
        rng = RngStream(9)
        env.reset(rng.substream(0))
        done = False
        step = 0
        while not done:
            action = rng.substream(1, step).uniform(env.actionLow, env.actionHigh)
            res = env.step(action)
            assert abs(res.reward) <= env.rMax
            done = res.done
            step += 1

    def test_noisy_pendulum_stays_in_speed_limit(self):
        env = makeEnv('pendulum', horizon=200, args={'processNoise': 20.0})
        env.reset(RngStream(4))
        for _ in range(200):
            state = env.step([0.0]).nextState
            assert abs(state[1]) <= env.maxSpeed
            assert -math.pi <= state[0] < math.pi

    def test_out_of_bounds_action_is_clipped(self):
        env = makeEnv('pendulum')
        start = env.reset(RngStream(1))
        res = env.step([10.0])
        assert res.clipped

        ref = makeEnv('pendulum')
        ref.reset(RngStream(1))
        np.testing.assert_array_equal(ref.step([2.0]).nextState, res.nextState)
        np.testing.assert_array_equal(ref.state, env.state)
        assert start.shape == (2,)

    def test_non_finite_action(self):
        env = makeEnv('pendulum')
        env.reset(RngStream(1))
        with pytest.raises(NumericError):
            env.step([np.nan])

    def test_wrong_action_dim(self):
        env = makeEnv('point-mass')
        env.reset(RngStream(1))
        with pytest.raises(ShapeError):
            env.step([0.0])

    def test_process_noise(self):
        quiet = makeEnv('point-mass')
        noisy = makeEnv('point-mass', args={'processNoise': 0.1})
        quiet.reset(RngStream(3))
        noisy.reset(RngStream(3))
        a = quiet.step([0.5, 0.5]).nextState
        b = noisy.step([0.5, 0.5]).nextState
        assert not np.allclose(a, b)

        again = makeEnv('point-mass', args={'processNoise': 0.1})
        again.reset(RngStream(3))
        np.testing.assert_array_equal(again.step([0.5, 0.5]).nextState, b)

    def test_batched_matches_step(self):
        env = makeEnv('cartpole')
        state = env.reset(RngStream(11))
        action = np.array([3.0])
        batched = env.trueDynamics(state[None], action[None])[0]
        r = env.trueReward(state[None], action[None])[0]
        res = env.step(action)
        np.testing.assert_array_equal(batched, res.nextState)
        assert r == res.reward


class TestPendulumPhysics:

    def test_wrap_angle(self):
        x = np.array([0.0, math.pi, -math.pi, 3 * math.pi, 0.5])
        w = wrapAngle(x)
        assert np.all(w >= -math.pi) and np.all(w < math.pi)
        np.testing.assert_allclose(np.cos(w), np.cos(x), atol=1e-12)

    def test_upright_is_equilibrium(self):
        env = makeEnv('pendulum')
        nxt = env.trueDynamics(np.zeros((1, 2)), np.zeros((1, 1)))
        np.testing.assert_array_equal(nxt, 0.0)

    def test_reward_at_upright(self):
        env = makeEnv('pendulum')
        assert env.trueReward(np.zeros((1, 2)), np.zeros((1, 1)))[0] == 0.0

    def test_energy_conserved_rk4(self):
        """Zero torque and damping: relative energy drift per step stays below 1e-6."""
        env = makeEnv('pendulum', horizon=400, args={'integrator': RK4, 'substeps': 4})
        env.reset(RngStream(0))
        env.state = np.array([2.0, 0.0])
        prev = env.energy(env.state)
        for _ in range(400):
            res = env.step([0.0])
            cur = env.energy(res.nextState)
            assert abs(cur - prev) / abs(prev) <= 1e-6
            prev = cur

    def test_energy_bounded_euler(self):
        """Semi-implicit Euler does not drift: energy oscillates in a narrow band."""
        env = makeEnv('pendulum', horizon=2000)
        env.reset(RngStream(0))
        env.state = np.array([2.5, 0.0])
        start = env.energy(env.state)
        worst = 0.0
        for _ in range(2000):
            res = env.step([0.0])
            worst = max(worst, abs(env.energy(res.nextState) - start) / abs(start))
        assert worst < 0.1

    def test_energy_band_shrinks_with_dt(self):
        def band(dt):
            env = makeEnv('pendulum', horizon=int(20 / dt), args={'dt': dt})
            env.reset(RngStream(0))
            env.state = np.array([2.5, 0.0])
            start = env.energy(env.state)
            worst = 0.0
            done = False
            while not done:
                res = env.step([0.0])
                worst = max(worst, abs(env.energy(res.nextState) - start) / abs(start))
                done = res.done
            return worst

        assert band(0.01) < band(0.05)


class TestPointMass:

    def test_starts_at_origin(self):
        env = makeEnv('point-mass')
        np.testing.assert_array_equal(env.reset(RngStream(5)), np.zeros(4))

    def test_goal_beats_distractor(self):
        env = makeEnv('point-mass')
        near = env.trueReward(np.array([[0.6, 0.0, 0.0, 0.0]]), np.zeros((1, 2)))[0]
        far = env.trueReward(np.array([[3.0, 3.0, 0.0, 0.0]]), np.zeros((1, 2)))[0]
        start = env.trueReward(np.zeros((1, 4)), np.zeros((1, 2)))[0]
        assert far > 5 * near
        assert near > start > 0

    def test_walls(self):
        env = makeEnv('point-mass')
        nxt = env.trueDynamics(np.array([[4.99, 0.0, 5.0, 0.0]]), np.array([[1.0, 0.0]]))[0]
        assert nxt[0] == 5.0
        assert nxt[2] == 0.0


class TestCartPole:

    def test_starts_hanging(self):
        env = makeEnv('cartpole')
        state = env.reset(RngStream(2))
        assert abs(abs(state[2]) - math.pi) <= 0.1 + 1e-12
        assert np.all(np.abs(state[[0, 1, 3]]) <= 0.1)

    def test_track_limit(self):
        env = makeEnv('cartpole', horizon=400)
        env.reset(RngStream(2))
        for _ in range(400):
            res = env.step([10.0])
            assert abs(res.nextState[0]) <= 3.0
