"""
Exact verification of the trajectory-reward-estimation (TREE) error bound on tabular MDPs.

For a start pair (s0, a0), a stochastic policy and a horizon H, the TREE error is
J_env - J_model, the gap between the finite-horizon discounted returns under the true
and the model dynamics/rewards. The bound checked is

    (1 - g^H) eps_r / (1 - g) + 2 r_max (g - g^H) eps_m / (1 - g)

with eps_r the largest reward gap, eps_m the largest one-step total variation between
true and model transitions and r_max the largest absolute true reward. Next to it the
compounded bound, whose model term at step t uses min(1, t eps_m) for the drift of the
t-step state-action marginal, is always evaluated as a self-check.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from mopelab.errors import BoundError, ShapeError
from mopelab.rng import RngStream

logger = logging.getLogger(__name__)

# Stream id for generated verification instances
STREAM_TABULAR = 100

ROW_SUM_TOL = 1e-12
HOLD_TOL = 1e-9


def _checkStochastic(loc: str, name: str, table: np.ndarray):
    if np.any(table < 0):
        raise ShapeError(loc, f"{name} has negative entries")
    sums = table.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise ShapeError(loc, f"{name} rows must sum to 1, worst deviation {worst:.3e}")


class TabularModel:
    """
    Transition tensor p(s'|s,a) of shape (S, A, S) and reward table r(s,a) of shape (S, A)
    """

    def __init__(self, transition: np.ndarray, reward: np.ndarray):
        transition = np.asarray(transition, dtype=np.float64)
        reward = np.asarray(reward, dtype=np.float64)
        loc = f"{self.__class__.__name__}.init()"
        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise ShapeError(loc, f"transition must have shape (S, A, S), got {transition.shape}")
        if reward.shape != transition.shape[:2]:
            raise ShapeError(loc, f"reward must have shape {transition.shape[:2]}, got {reward.shape}")
        _checkStochastic(loc, "transition", transition)
        self.transition = transition
        self.reward = reward

    @property
    def numStates(self) -> int:
        return self.transition.shape[0]

    @property
    def numActions(self) -> int:
        return self.transition.shape[1]


class TabularMDP(TabularModel):

    def __init__(self, transition: np.ndarray, reward: np.ndarray, gamma: float):
        super().__init__(transition, reward)
        if not 0.0 <= gamma < 1.0:
            raise BoundError("TabularMDP.init()", f"gamma must be in [0, 1), got {gamma}")
        self.gamma = float(gamma)


class TabularPolicy:

    def __init__(self, table: np.ndarray):
        table = np.asarray(table, dtype=np.float64)
        if table.ndim != 2:
            raise ShapeError("TabularPolicy.init()", f"policy must have shape (S, A), got {table.shape}")
        _checkStochastic("TabularPolicy.init()", "policy", table)
        self.table = table


@dataclass
class BoundReport:
    treeError: float
    boundValue: float
    epsilonRMax: float
    epsilonM: float
    rMax: float
    rewardGapTerm: float
    modelErrorTerm: float
    holds: bool
    compoundedBound: float
    holdsCompounded: bool

    @property
    def ratio(self) -> Optional[float]:
        """
        treeError / boundValue, None when the bound is exactly zero
        """
        if self.boundValue == 0.0:
            return None
        return self.treeError / self.boundValue


def expectedReturn(transition: np.ndarray, reward: np.ndarray, policy: Union[TabularPolicy, np.ndarray], s0: int,
                   a0: int, gamma: float, H: int) -> float:
    """
    sum_{t<H} gamma^t E[r(s_t, a_t)] with (s_0, a_0) fixed and a_t ~ pi(.|s_t) afterwards,
    by forward propagation of the state-action occupancy
    """
    table = policy.table if isinstance(policy, TabularPolicy) else np.asarray(policy, dtype=np.float64)
    transition = np.asarray(transition, dtype=np.float64)
    reward = np.asarray(reward, dtype=np.float64)
    if transition.ndim != 3 or reward.shape != transition.shape[:2] or table.shape != reward.shape:
        raise ShapeError(
            "expectedReturn()",
            f"shape mismatch: transition {transition.shape}, reward {reward.shape}, policy {table.shape}"
        )
    if H < 1:
        raise ShapeError("expectedReturn()", f"H must be >= 1, got {H}")

    occupancy = np.zeros_like(reward)
    occupancy[s0, a0] = 1.0
    total = 0.0
    discount = 1.0
    for t in range(H):
        total += discount * float(np.sum(occupancy * reward))
        if t + 1 < H:
            stateDist = np.einsum('sa,sap->p', occupancy, transition)
            occupancy = stateDist[:, None] * table
            discount *= gamma
    return total


def modelErrorTV(mdp: TabularModel, model: TabularModel) -> float:
    """
    max over (s, a) of (1/2) sum_s' |p(s'|s,a) - p_hat(s'|s,a)|
    """
    if mdp.transition.shape != model.transition.shape:
        raise ShapeError(
            "modelErrorTV()", f"shape mismatch: {mdp.transition.shape} != {model.transition.shape}"
        )
    return float(np.max(0.5 * np.sum(np.abs(mdp.transition - model.transition), axis=2)))


def verifyBound(mdp: TabularMDP, model: TabularModel, policy: TabularPolicy, s0: int, a0: int, H: int) -> BoundReport:
    gamma = mdp.gamma
    if gamma >= 1.0:
        raise BoundError("verifyBound()", f"the bound is undefined for gamma = {gamma}")
    if mdp.reward.shape != model.reward.shape:
        raise ShapeError("verifyBound()", f"reward shape mismatch: {mdp.reward.shape} != {model.reward.shape}")

    jEnv = expectedReturn(mdp.transition, mdp.reward, policy, s0, a0, gamma, H)
    jModel = expectedReturn(model.transition, model.reward, policy, s0, a0, gamma, H)

    epsR = float(np.max(np.abs(mdp.reward - model.reward)))
    epsM = modelErrorTV(mdp, model)
    rMax = float(np.max(np.abs(mdp.reward)))

    gH = gamma**H
    rewardGap = (1.0 - gH) * epsR / (1.0 - gamma)
    modelTerm = 2.0 * rMax * (gamma - gH) * epsM / (1.0 - gamma)
    bound = rewardGap + modelTerm

    steps = np.arange(1, H)
    compounded = rewardGap + 2.0 * rMax * float(np.sum(gamma**steps * np.minimum(1.0, steps * epsM)))

    tree = jEnv - jModel
    return BoundReport(
        treeError=tree,
        boundValue=bound,
        epsilonRMax=epsR,
        epsilonM=epsM,
        rMax=rMax,
        rewardGapTerm=rewardGap,
        modelErrorTerm=modelTerm,
        holds=bool(tree <= bound + HOLD_TOL),
        compoundedBound=compounded,
        holdsCompounded=bool(tree <= compounded + HOLD_TOL),
    )


def randomMDP(rng: RngStream, numStates: int, numActions: int, gamma: float) -> TabularMDP:
    transition = rng.dirichlet(np.ones(numStates), size=(numStates, numActions))
    reward = rng.uniform(-1.0, 1.0, (numStates, numActions))
    return TabularMDP(transition, reward, gamma)


def perturbModel(mdp: TabularModel, rng: RngStream, scale: float, rewardNoise: float) -> TabularModel:
    """
    Rows mixed (1 - scale) p + scale q with q ~ Dirichlet(1); rewards shifted by
    uniform noise of amplitude scale * rewardNoise. scale = 0 reproduces mdp exactly.
    """
    S, A, _ = mdp.transition.shape
    resampled = rng.dirichlet(np.ones(S), size=(S, A))
    transition = (1.0 - scale) * mdp.transition + scale * resampled
    reward = mdp.reward + scale * rewardNoise * rng.uniform(-1.0, 1.0, (S, A))
    return TabularModel(transition, reward)


def randomPolicy(rng: RngStream, numStates: int, numActions: int) -> TabularPolicy:
    return TabularPolicy(rng.dirichlet(np.ones(numActions), size=numStates))


def greedyPolicy(model: TabularModel, gamma: float, H: int) -> TabularPolicy:
    """
    Deterministic policy greedy w.r.t. the model's H-step action values, lowest action index on ties
    """
    value = np.zeros(model.numStates)
    q = model.reward.copy()
    for _ in range(H):
        q = model.reward + gamma * model.transition @ value
        value = q.max(axis=1)
    table = np.zeros_like(q)
    table[np.arange(model.numStates), np.argmax(q, axis=1)] = 1.0
    return TabularPolicy(table)


@dataclass
class StressConfig:
    instances: int = 1000
    seed: int = 0
    maxStates: int = 8
    maxActions: int = 4
    maxHorizon: int = 10
    gammas: Tuple[float, ...] = (0.9, 0.99)
    scales: Tuple[float, ...] = (0.0, 0.01, 0.05, 0.1, 0.2, 0.5)
    rewardNoise: float = 0.5
    greedyFraction: float = 0.5

    def validate(self):
        for g in self.gammas:
            if not 0.0 <= g < 1.0:
                raise BoundError("StressConfig.validate()", f"every gamma must be in [0, 1), got {g}")
        if self.instances < 1:
            raise BoundError("StressConfig.validate()", f"instances must be >= 1, got {self.instances}")
        if self.maxStates < 1 or self.maxActions < 1 or self.maxHorizon < 1:
            raise BoundError("StressConfig.validate()", "maxStates, maxActions and maxHorizon must be >= 1")


@dataclass
class Instance:
    index: int
    numStates: int
    numActions: int
    horizon: int
    gamma: float
    scale: float
    greedy: bool
    s0: int
    a0: int
    report: Optional[BoundReport] = None


def generateInstance(cfg: StressConfig, index: int, gamma: Optional[float] = None, horizon: Optional[int] = None,
                     scale: Optional[float] = None) -> Tuple[Instance, TabularMDP, TabularModel, TabularPolicy]:
    """
    Builds instance number index from its own stream. Fixed gamma/horizon/scale override the sampled ones.
    """
    rng = RngStream(cfg.seed, STREAM_TABULAR, (index,))
    numStates = int(rng.integers(1, cfg.maxStates + 1))
    numActions = int(rng.integers(1, cfg.maxActions + 1))
    sampledH = int(rng.integers(1, cfg.maxHorizon + 1))
    sampledGamma = float(cfg.gammas[int(rng.integers(0, len(cfg.gammas)))])
    sampledScale = float(cfg.scales[int(rng.integers(0, len(cfg.scales)))])
    greedy = bool(rng.uniform(0.0, 1.0) < cfg.greedyFraction)

    H = sampledH if horizon is None else horizon
    g = sampledGamma if gamma is None else gamma
    sc = sampledScale if scale is None else scale

    mdp = randomMDP(rng.substream(0), numStates, numActions, g)
    model = perturbModel(mdp, rng.substream(1), sc, cfg.rewardNoise)
    policy = greedyPolicy(model, g, H) if greedy else randomPolicy(rng.substream(2), numStates, numActions)
    s0 = int(rng.integers(0, numStates))
    a0 = int(rng.integers(0, numActions))

    inst = Instance(index, numStates, numActions, H, g, sc, greedy, s0, a0)
    return inst, mdp, model, policy


def _runInstance(args: Tuple[StressConfig, int]) -> Instance:
    cfg, index = args
    inst, mdp, model, policy = generateInstance(cfg, index)
    inst.report = verifyBound(mdp, model, policy, inst.s0, inst.a0, inst.horizon)
    return inst


def runStress(cfg: StressConfig, workers: int = 1) -> List[Instance]:
    """
    Verifies cfg.instances generated instances. Results do not depend on workers.
    """
    cfg.validate()
    jobs = [(cfg, idx) for idx in range(cfg.instances)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_runInstance, jobs, chunksize=64))
    else:
        results = [_runInstance(job) for job in jobs]

    failures = sum(1 for r in results if r.report is not None and not r.report.holds)
    logger.info("verified %d instances, %d violate the bound", len(results), failures)
    return results


@dataclass
class SweepRow:
    gamma: float
    horizon: int
    scale: float
    instances: int
    zeroCases: int
    violations: int
    compoundedViolations: int
    meanTreeError: float
    meanAbsTreeError: float
    meanRatio: Optional[float]
    maxRatio: Optional[float]
    ratios: List[float] = field(default_factory=list, repr=False)


def tightnessSweep(cfg: StressConfig, horizons: Sequence[int] = (1, 2, 5, 10), perCell: int = 50) -> List[SweepRow]:
    """
    For every (gamma, H, scale) cell, verifies perCell instances and summarizes treeError / bound
    """
    cfg.validate()
    rows = []
    index = 0
    for gamma in cfg.gammas:
        for horizon in horizons:
            for scale in cfg.scales:
                trees = []
                ratios = []
                zero = 0
                viol = 0
                compViol = 0
                for _ in range(perCell):
                    inst, mdp, model, policy = generateInstance(cfg, index, gamma, horizon, scale)
                    index += 1
                    rep = verifyBound(mdp, model, policy, inst.s0, inst.a0, horizon)
                    trees.append(rep.treeError)
                    if rep.ratio is None:
                        zero += 1
                    else:
                        ratios.append(rep.ratio)
                    viol += int(not rep.holds)
                    compViol += int(not rep.holdsCompounded)

                rows.append(
                    SweepRow(
                        gamma=gamma,
                        horizon=horizon,
                        scale=scale,
                        instances=perCell,
                        zeroCases=zero,
                        violations=viol,
                        compoundedViolations=compViol,
                        meanTreeError=float(np.mean(trees)),
                        meanAbsTreeError=float(np.mean(np.abs(trees))),
                        meanRatio=float(np.mean(ratios)) if ratios else None,
                        maxRatio=float(np.max(ratios)) if ratios else None,
                        ratios=ratios,
                    )
                )
    return rows
