from functools import partial
from itertools import product
from os import path
import argparse
import logging

import pandas as pd
import yaml

from rmabm.analysis.figures import gdp_table, reward_table, strategy_table, write_table
from rmabm.analysis.irf import impulse_response
from rmabm.errors import ConfigurationError, RMABMError
from rmabm.harness.training import evaluate, evaluation_seed, parallel_map, train, train_seed
from rmabm.params import resolve_key, config_to_dict, load_config
from rmabm.policy.agents import read_policy_set
from rmabm.policy.qlearning import action_grid, obs_poles
from rmabm.store import DEFAULT_ROOT, OUT_ENV, output_root, run_output


logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
POLICY_FILE = 'policy.msgpack'


def _overrides(args):
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f'experiment.base_seed={args.seed}')
    return overrides


def _write_yaml(file_path, data):
    with open(file_path, 'w') as outfile:
        yaml.safe_dump(data, outfile, sort_keys=False)


def _load_policies(cfg, policy_path, root):
    if cfg.num_rl_agents == 0:
        return None, None

    policy_path = policy_path or path.join(root, cfg.name, 'train', 'policy', POLICY_FILE)
    return read_policy_set(policy_path), policy_path


def _write_training(run, cfg, result):
    policies = result.policies
    policies.write(run.artifact('policy', POLICY_FILE))

    for k, q in enumerate(policies.tables):
        q.write_tsv(run.artifact('policy', f'qtable-{k}.tsv'), obs_poles(cfg.rl), action_grid(cfg.rl))

    write_table(result.curves, run.artifact('summary', 'training_curves.tsv'))


def _write_evaluation(run, result):
    for frames_path in result.frames_paths:
        run.add(frames_path)

    write_table(result.firms, run.artifact('summary', 'agents.tsv'))
    write_table(result.episodes, run.artifact('summary', 'episodes.tsv'))
    _write_yaml(run.artifact('summary', 'summary.yaml'), result.summary)


def cmd_train(args):
    overrides = _overrides(args)
    cfg = load_config(args.config, overrides)

    if cfg.num_rl_agents == 0:
        logger.warning('cmd_train: N=0, the policy set will stay untrained')

    with run_output(output_root(args.out), cfg.name, 'train') as run:
        result = train(cfg)
        _write_training(run, cfg, result)
        run.write_manifest(cfg, command='train', overrides=overrides,
                           seeds=[train_seed(cfg, tau) for tau in range(1, cfg.t_train + 1)])

    return 0


def cmd_evaluate(args):
    overrides = _overrides(args)
    cfg = load_config(args.config, overrides)
    root = output_root(args.out)
    policies, policy_path = _load_policies(cfg, args.policy, root)

    with run_output(root, cfg.name, 'evaluate') as run:
        result = evaluate(cfg, policies, jobs=args.jobs, frames_dir=run.subdir('frames'))
        _write_evaluation(run, result)
        run.write_manifest(cfg, command='evaluate', overrides=overrides,
                           seeds=[evaluation_seed(cfg, k) for k in range(cfg.t_test)],
                           extra={'policy': policy_path})

    return 0


def parse_grid(entries):
    """`--grid z_c=2,5,10` entries as (override key, values) pairs."""
    grid = []
    for entry in entries or ():
        if '=' not in entry:
            raise ConfigurationError(f'grid entries must look like key=v1,v2,..., got {entry!r}', key=entry)

        key, raw = entry.split('=', 1)
        values = [yaml.safe_load(v) for v in raw.split(',') if v.strip()]
        if not values:
            raise ConfigurationError(f'grid entry {key} has no values', key=key)

        grid.append((key.strip(), values))
    return grid


def _cell_name(cell):
    return '_'.join(f'{key.split(".")[-1]}-{value}' for key, value in cell)


def _sweep_cell(config_path, base_overrides, root, write_frames, cell):
    overrides = base_overrides + [f'{key}={value}' for key, value in cell]
    cfg = load_config(config_path, overrides)
    name = _cell_name(cell)

    with run_output(root, cfg.name, name) as run:
        policies = None
        if cfg.num_rl_agents > 0:
            result = train(cfg)
            _write_training(run, cfg, result)
            policies = result.policies

        frames_dir = run.subdir('frames') if write_frames else None
        evaluation = evaluate(cfg, policies, jobs=1, frames_dir=frames_dir)
        _write_evaluation(run, evaluation)

        run.write_manifest(cfg, command='sweep', overrides=overrides,
                           seeds=[evaluation_seed(cfg, k) for k in range(cfg.t_test)])

    columns = {'cell': name, 'policy_mode': cfg.rl.policy_mode, 'num_rl_agents': cfg.num_rl_agents, 'search_depth': cfg.model.search_depth}
    episodes = evaluation.episodes.assign(**columns)
    firms = evaluation.firms.assign(**columns)

    logger.info('cmd_sweep: cell %s done', name)
    return episodes, firms


def cmd_sweep(args):
    overrides = _overrides(args)
    cfg = load_config(args.config, overrides)
    root = output_root(args.out)

    grid = parse_grid(args.grid)
    if not grid:
        raise ConfigurationError('sweep needs at least one --grid entry', key='grid')

    base = config_to_dict(cfg)
    for key, _ in grid:
        resolve_key(base, key)

    cells = [tuple(zip([k for k, _ in grid], values)) for values in product(*[v for _, v in grid])]
    logger.info('cmd_sweep: %d cells over %s', len(cells), ', '.join(k for k, _ in grid))

    with run_output(root, cfg.name, 'sweep') as run:
        results = parallel_map(partial(_sweep_cell, args.config, overrides, root, args.frames), cells, args.jobs)

        episodes = pd.concat([e for e, _ in results], ignore_index=True)
        firms = pd.concat([f for _, f in results], ignore_index=True)

        write_table(episodes, run.artifact('summary', 'episodes.tsv'))
        write_table(firms, run.artifact('summary', 'agents.tsv'))
        write_table(strategy_table(firms), run.artifact('summary', 'strategies.tsv'))
        write_table(gdp_table(episodes), run.artifact('summary', 'gdp.tsv'))
        write_table(reward_table(episodes), run.artifact('summary', 'rewards.tsv'))

        run.write_manifest(cfg, command='sweep', overrides=overrides,
                           seeds=[evaluation_seed(cfg, k) for k in range(cfg.t_test)],
                           extra={'grid': {key: values for key, values in grid}, 'cells': [_cell_name(c) for c in cells]})

    return 0


def cmd_irf(args):
    overrides = _overrides(args)
    cfg = load_config(args.config, overrides)
    root = output_root(args.out)
    policies, policy_path = _load_policies(cfg, args.policy, root)

    with run_output(root, cfg.name, 'irf') as run:
        result = impulse_response(cfg, policies, shock_size=args.shock_size, t_shock=args.t_shock,
                                  num_seeds=args.seeds, shock_duration=args.shock_duration, jobs=args.jobs)

        write_table(result.to_dataframe(), run.artifact('summary', 'irf.tsv'))
        run.write_manifest(cfg, command='irf', overrides=overrides, seeds=result.seeds,
                           extra={'policy': policy_path, 'shock': result.shock._asdict()})

    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog='rmabm', description='Macro agent-based model with Q-learning C-firms')
    parser.add_argument('--verbose', action='store_true', help='log at DEBUG level')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML config file (default: packaged defaults)')
    common.add_argument('--set', action='append', metavar='KEY=VALUE', help='override a config value (repeatable)')
    common.add_argument('--seed', type=int, help='base seed (experiment.base_seed)')
    common.add_argument('--out', help=f'output root (default: ${OUT_ENV} or ./{DEFAULT_ROOT})')
    common.add_argument('--jobs', type=int, default=1, help='worker processes')

    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('train', parents=[common], help='train the RL firms')
    p.set_defaults(run=cmd_train)

    p = commands.add_parser('evaluate', parents=[common], help='run greedy test episodes')
    p.add_argument('--policy', help='policy dump (default: <out>/<name>/train/policy/policy.msgpack)')
    p.set_defaults(run=cmd_evaluate)

    p = commands.add_parser('sweep', parents=[common], help='train and evaluate every cell of a grid')
    p.add_argument('--grid', action='append', metavar='KEY=V1,V2', help='grid axis, e.g. z_c=2,5,10 (repeatable)')
    p.add_argument('--frames', action='store_true', help='also write per-episode frame streams')
    p.set_defaults(run=cmd_sweep)

    p = commands.add_parser('irf', parents=[common], help='impulse response to a propensity-to-consume shock')
    p.add_argument('--policy', help='policy dump (default: <out>/<name>/train/policy/policy.msgpack)')
    p.add_argument('--shock-size', type=float, help='relative shock to both propensities (default 0.30)')
    p.add_argument('--shock-duration', type=int, help='steps the shock lasts (default 1)')
    p.add_argument('--t-shock', type=int, help='step of the shock')
    p.add_argument('--seeds', type=int, help='number of paired runs')
    p.set_defaults(run=cmd_irf)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)

    try:
        return args.run(args)
    except (RMABMError, LookupError) as exc:
        logger.error('%s: %s', args.command, exc)
        return 2
