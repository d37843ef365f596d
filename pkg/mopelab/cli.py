"""
Command line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure,
3 bound violation (verify-bound only).
"""
import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from mopelab import __version__
from mopelab.agent import evaluatePolicy, run
from mopelab.config import RunConfig, loadRunConfig, splitList
from mopelab.dynamics import loadCheckpoint
from mopelab.envs import makeEnv
from mopelab.errors import BoundError, ConfigError, MopeError
from mopelab.metrics import (CHECKPOINT_FILE, CONFIG_FILE, RunWriter, availableActionEpochs, loadActions, outputRoot,
                             readEvalCsv, runId)
from mopelab.pca import boundingBoxArea, pcaTop2
from mopelab.planner import FIXED, OFF, PROGRESSIVE
from mopelab.rng import STREAM_EVAL, RngStream
from mopelab.tabular import StressConfig, runStress, tightnessSweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_VIOLATION = 3

LITERAL = 'literal'
COMPOUNDED = 'compounded'

ABLATION_HEADER = ['variant', 'mode', 'beta_max', 'seeds', 'return_mean', 'return_std']
SWEEP_HEADER = [
    'gamma', 'horizon', 'scale', 'instances', 'zero_cases', 'violations', 'compounded_violations', 'mean_tree_error',
    'mean_abs_tree_error', 'mean_ratio', 'max_ratio'
]


class _Parser(argparse.ArgumentParser):

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f'{self.prog}: error: {message}\n')


def _positiveInt(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid int value: '{text}'") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _runOne(job: Tuple[RunConfig, str]) -> str:
    cfg, runDir = job
    run(cfg, RunWriter(runDir))
    return runDir


def runSeeds(configs: Sequence[RunConfig], root: str, workers: int = 1) -> List[str]:
    """
    One run directory per config under root. Runs share nothing, so worker count does not change results.
    """
    jobs = [(cfg, os.path.join(root, runId(cfg))) for cfg in configs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_runOne, jobs))
    return [_runOne(job) for job in jobs]


def _seededConfigs(cfg: RunConfig, seeds: List[int]) -> List[RunConfig]:
    if not seeds:
        return [cfg]
    return [cfg.withSeed(seed) for seed in seeds]


def cmdTrain(args) -> int:
    cfg = loadRunConfig(args.config, args.set)
    configs = _seededConfigs(cfg, splitList(args.seeds))
    root = outputRoot(args.out)
    for runDir in runSeeds(configs, root, args.workers):
        print(runDir)
    return EXIT_OK


def cmdEval(args) -> int:
    cfg = loadRunConfig(os.path.join(args.run, CONFIG_FILE))
    model, reward = loadCheckpoint(os.path.join(args.run, CHECKPOINT_FILE))
    episodes = args.episodes if args.episodes is not None else max(cfg.evalEpisodes, 1)
    seed = args.seed if args.seed is not None else cfg.seed
    env = makeEnv(cfg.env.name, cfg.env.horizon, cfg.env.args)
    mean, std = evaluatePolicy(model, reward, env, episodes, cfg.plan, RngStream(seed, STREAM_EVAL))
    print(json.dumps({'run': args.run, 'seed': seed, 'episodes': episodes, 'return_mean': mean, 'return_std': std}))
    return EXIT_OK


def ablationVariants(cfg: RunConfig, betaMaxSweep: List[float]) -> List[Tuple[str, RunConfig]]:
    """
    progressive, fixed(betaMax) and off, plus one progressive variant per swept betaMax
    """
    out = []
    for mode in (PROGRESSIVE, FIXED, OFF):
        variant = cfg.withSeed(cfg.seed)
        variant.schedule.mode = mode
        variant.schedule.fixedBeta = None
        variant.name = f'{cfg.name}-{mode}'
        out.append((mode, variant))
    for betaMax in betaMaxSweep:
        variant = cfg.withSeed(cfg.seed)
        variant.schedule.mode = PROGRESSIVE
        variant.schedule.betaMax = betaMax
        variant.name = f'{cfg.name}-{PROGRESSIVE}-bmax{betaMax:g}'
        variant.validate()
        out.append((f'{PROGRESSIVE}-bmax{betaMax:g}', variant))
    return out


def summarizeAblation(variants: List[Tuple[str, RunConfig]], runDirs: Dict[str, List[str]]) -> List[Dict[str, Any]]:
    rows = []
    for label, variant in variants:
        finals = [readEvalCsv(runDir)['return_mean'] for runDir in runDirs[label]]
        rows.append({
            'variant': label,
            'mode': variant.schedule.mode,
            'beta_max': variant.schedule.betaMax,
            'seeds': len(finals),
            'return_mean': float(np.mean(finals)),
            'return_std': float(np.std(finals)),
        })
    return rows


def cmdAblate(args) -> int:
    cfg = loadRunConfig(args.config, args.set)
    if cfg.evalEpisodes < 1:
        raise ConfigError("cmdAblate()", "evalEpisodes must be >= 1 to compare variants")
    seeds = splitList(args.seeds) or [cfg.seed]
    variants = ablationVariants(cfg, splitList(args.beta_max_sweep, float))
    root = os.path.join(outputRoot(args.out), f'ablate-{cfg.name}')

    configs = []
    labels = []
    for label, variant in variants:
        for vCfg in _seededConfigs(variant, seeds):
            configs.append(vCfg)
            labels.append(label)
    dirs = runSeeds(configs, root, args.workers)

    byVariant: Dict[str, List[str]] = {label: [] for label, _ in variants}
    for label, runDir in zip(labels, dirs):
        byVariant[label].append(runDir)

    rows = summarizeAblation(variants, byVariant)
    summary = os.path.join(root, 'ablation.csv')
    with open(summary, mode='w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=ABLATION_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    logger.info("ablation of %d runs summarized in %s", len(dirs), summary)
    for row in rows:
        print(f"{row['variant']:>24s}  {row['return_mean']:12.4f} +- {row['return_std']:.4f}  ({row['seeds']} seeds)")
    return EXIT_OK


def cmdVerifyBound(args) -> int:
    cfg = StressConfig(
        instances=args.instances,
        seed=args.seed,
        maxStates=args.max_states,
        maxActions=args.max_actions,
        maxHorizon=args.max_horizon,
        gammas=tuple(splitList(args.gamma, float)),
        scales=tuple(splitList(args.scales, float)),
        rewardNoise=args.reward_noise,
    )
    if not cfg.gammas or not cfg.scales:
        raise ConfigError("cmdVerifyBound()", "--gamma and --scales must not be empty")

    results = runStress(cfg, args.workers)
    reports = [r.report for r in results]
    violations = sum(1 for r in reports if not r.holds)
    compViolations = sum(1 for r in reports if not r.holdsCompounded)
    ratios = [r.ratio for r in reports if r.ratio is not None]
    summary = {
        'instances': len(reports),
        'violations': violations,
        'compoundedViolations': compViolations,
        'zeroCases': len(reports) - len(ratios),
        'maxRatio': max(ratios) if ratios else None,
        'check': args.check,
    }

    if args.report:
        with open(args.report, mode='w') as f:
            json.dump({
                'summary': summary,
                'instances': [asdict(r) for r in results],
            }, f, indent=2)

    if args.sweep:
        rows = tightnessSweep(cfg, splitList(args.sweep_horizons), args.sweep_per_cell)
        with open(args.sweep, mode='w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(SWEEP_HEADER)
            for row in rows:
                writer.writerow([
                    row.gamma, row.horizon, row.scale, row.instances, row.zeroCases, row.violations,
                    row.compoundedViolations, row.meanTreeError, row.meanAbsTreeError,
                    '' if row.meanRatio is None else row.meanRatio, '' if row.maxRatio is None else row.maxRatio
                ])

    print(json.dumps(summary))
    failed = violations if args.check == LITERAL else compViolations
    if failed > 0:
        logger.warning("%d of %d instances violate the %s bound", failed, len(reports), args.check)
        return EXIT_VIOLATION
    return EXIT_OK


def _runLabels(runDirs: Sequence[str]) -> List[str]:
    labels = [os.path.basename(os.path.normpath(x)) for x in runDirs]
    if len(set(labels)) != len(labels):
        labels = [f'{idx}-{label}' for idx, label in enumerate(labels)]
    return labels


def _actionRanges(labels: List[str], actions: List[np.ndarray], outDir: str, epoch: int) -> Dict[str, Any]:
    perRun = {}
    for label, acts in zip(labels, actions):
        np.savetxt(
            os.path.join(outDir, f'epoch_{epoch:04d}_{label}.csv'), acts, delimiter=',', header='a1', comments=''
        )
        perRun[label] = {'points': int(acts.shape[0]), 'range': float(np.ptp(acts[:, 0]))}
    return {'actionDim': 1, 'runs': perRun}


def analyzeActions(runDirs: Sequence[str], epochs: Optional[List[int]], outDir: str) -> Dict[str, Any]:
    """
    Fits one PCA per epoch on the union of the runs' executed actions and writes every
    run's 2D projection next to a JSON summary. Scalar actions are written as they are,
    summarized by their range.
    """
    available = {runDir: availableActionEpochs(runDir) for runDir in runDirs}
    if not epochs:
        common = set.intersection(*(set(x) for x in available.values()))
        if not common:
            raise ConfigError("analyzeActions()", f"runs share no logged epoch, available: {available}")
        epochs = [max(common)]

    for runDir, eps in available.items():
        missing = [e for e in epochs if e not in eps]
        if missing:
            raise ConfigError("analyzeActions()", f"epochs {missing} not logged in {runDir}, available epochs: {eps}")

    os.makedirs(outDir, exist_ok=True)
    labels = _runLabels(runDirs)
    summary: Dict[str, Any] = {'runs': dict(zip(labels, runDirs)), 'epochs': {}}

    for epoch in epochs:
        actions = [loadActions(runDir, epoch) for runDir in runDirs]
        actions = [acts.reshape(acts.shape[0], -1) for acts in actions]
        if actions[0].shape[1] == 1:
            summary['epochs'][str(epoch)] = _actionRanges(labels, actions, outDir, epoch)
            continue

        pca = pcaTop2(np.concatenate(actions, axis=0))
        perRun = {}
        for label, acts in zip(labels, actions):
            proj = pca.project(acts)
            np.savetxt(
                os.path.join(outDir, f'epoch_{epoch:04d}_{label}.csv'), proj, delimiter=',', header='pc1,pc2',
                comments=''
            )
            perRun[label] = {'points': int(proj.shape[0]), 'boundingBoxArea': boundingBoxArea(proj)}
        summary['epochs'][str(epoch)] = {
            'actionDim': int(actions[0].shape[1]),
            'explainedVarianceRatio': pca.explainedVarianceRatio.tolist(),
            'components': pca.components.tolist(),
            'runs': perRun,
        }

    with open(os.path.join(outDir, 'actions_summary.json'), mode='w') as f:
        json.dump(summary, f, indent=2)
    return summary


def cmdAnalyzeActions(args) -> int:
    outDir = args.out or os.path.join(outputRoot(), 'analysis')
    summary = analyzeActions(args.runs, splitList(args.epochs), outDir)
    for epoch, info in summary['epochs'].items():
        if info['actionDim'] == 1:
            ranges = ', '.join(f"{k}: {v['range']:.4f}" for k, v in info['runs'].items())
            print(f'epoch {epoch}: scalar actions, ranges {{{ranges}}}')
            continue
        ratio = ', '.join(f'{x:.3f}' for x in info['explainedVarianceRatio'])
        areas = ', '.join(f"{k}: {v['boundingBoxArea']:.4f}" for k, v in info['runs'].items())
        print(f'epoch {epoch}: explained variance [{ratio}]  box areas {{{areas}}}')
    return EXIT_OK


def buildParser() -> argparse.ArgumentParser:
    parser = _Parser(prog='mopelab', description="Entropy-driven exploration for model-based RL")
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    def runArgs(p):
        p.add_argument('config', help="JSON run config")
        p.add_argument('--set', action='append', default=[], metavar='KEY=VALUE', help="Dotted config override")
        p.add_argument('--seeds', default=None, help="Comma separated seeds, defaults to the config seed")
        p.add_argument('--out', default=None, help="Output root, defaults to $MOPELAB_OUTPUT_ROOT or ./runs")
        p.add_argument('--workers', type=_positiveInt, default=1, help="Worker processes for seed fan-out")

    train = sub.add_parser('train', help="Run the agent loop, one run directory per seed")
    runArgs(train)
    train.set_defaults(func=cmdTrain)

    evaluate = sub.add_parser('eval', help="Evaluate a run's final checkpoint without the exploration bonus")
    evaluate.add_argument('run', help="Run directory")
    evaluate.add_argument('--episodes', type=_positiveInt, default=None)
    evaluate.add_argument('--seed', type=int, default=None)
    evaluate.set_defaults(func=cmdEval)

    ablate = sub.add_parser('ablate', help="Compare progressive, fixed and no exploration schedules")
    runArgs(ablate)
    ablate.add_argument('--beta-max-sweep', default=None, help="Comma separated betaMax values, e.g. 0.25,0.5,1,2")
    ablate.set_defaults(func=cmdAblate)

    verify = sub.add_parser('verify-bound', help="Check the TREE error bound on random tabular MDPs")
    verify.add_argument('--instances', type=_positiveInt, default=1000)
    verify.add_argument('--seed', type=int, default=0)
    verify.add_argument('--gamma', default='0.9,0.99', help="Comma separated discount factors, each in [0, 1)")
    verify.add_argument('--scales', default='0,0.01,0.05,0.1,0.2,0.5', help="Comma separated perturbation scales")
    verify.add_argument('--reward-noise', type=float, default=0.5)
    verify.add_argument('--max-states', type=int, default=8)
    verify.add_argument('--max-actions', type=int, default=4)
    verify.add_argument('--max-horizon', type=int, default=10)
    verify.add_argument('--check', choices=[LITERAL, COMPOUNDED], default=LITERAL,
                        help="Which bound decides the exit code")
    verify.add_argument('--report', default=None, help="Write per-instance results as JSON")
    verify.add_argument('--sweep', default=None, help="Write a tightness sweep CSV")
    verify.add_argument('--sweep-horizons', default='1,2,5,10')
    verify.add_argument('--sweep-per-cell', type=int, default=50)
    verify.add_argument('--workers', type=_positiveInt, default=1)
    verify.set_defaults(func=cmdVerifyBound)

    analyze = sub.add_parser('analyze-actions', help="PCA of executed actions across runs")
    analyze.add_argument('runs', nargs='+', help="Run directories")
    analyze.add_argument('--epochs', default=None, help="Comma separated epochs, defaults to the last common one")
    analyze.add_argument('--out', default=None)
    analyze.set_defaults(func=cmdAnalyzeActions)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = buildParser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except (ConfigError, BoundError) as err:
        logger.error("%s (%s)", err, err.loc)
        return EXIT_CONFIG
    except MopeError as err:
        logger.error("%s (%s)", err, err.loc)
        return EXIT_RUNTIME
    except OSError as err:
        logger.error("%s", err)
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
