#
# Part of bcmlab: bidirectional consistency models on toy densities
# Copyright (C) 2024-2026 The bcmlab developers
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the GNU
# General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <http://www.gnu.org/licenses/>.
#
"""The ``bcmlab`` command line.

Every command writes into a fresh run directory under ``--out`` and
finishes by appending a record to its ``manifest.jsonl``. Exit codes:
0 on success, 1 for usage, configuration and checksum errors, 2 when
training aborts on a non-finite value.

"""

import argparse
import logging
import os
import sys
import time

import numpy as np

from ..__version__ import __version__
from ..core.inversion_apps import (LADDERS, INPAINT_SCALE, Mask, inpaint,
                                   invert, parse_ladder, roundtrip_mse,
                                   slerp_interpolate)
from ..core.network import ConsistencyModel
from ..core.samplers import (NOISE_MODES, PLAN_PRESETS, preset_plan, sample)
from ..core.training import run_training
from ..data.densities import PRESETS, make_density
from ..data.metrics import sliced_wasserstein
from ..data.oracle import GaussianFlowModel, OdeFlowModel
from ..errors import BCMError, NumericAbort
from ..pmath.rand import random_stream, STREAM_DATA, STREAM_EVAL
from ..pmath.schedules import (build_grid, coverage_records, noise_pmf,
                               pair_coverage_pmf, RHO, T_MAX, T_MIN, P_MEAN,
                               P_STD)
from . import plot
from .checkpoint import file_sha256, load_checkpoint, save_checkpoint
from .config import dump_config, load_config
from .manifest import RunManifest, make_run_dir, read_manifest, write_manifest
from .tables import read_matrix, write_matrix, write_table, write_trajectory

__all__ = ['main', 'build_parser', 'UsageError', 'EXIT_OK', 'EXIT_USAGE',
           'EXIT_ABORT', 'METRICS', 'ORACLE_PREFIX']

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ABORT = 2

METRICS = ('sw', 'mse', 'coverage')

# ``--checkpoint oracle:<preset>`` uses an exact flow instead of weights.
ORACLE_PREFIX = 'oracle:'

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class UsageError(BCMError):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _Run:
    """Output directory, produced files and manifest fields of a command."""

    def __init__(self, root):
        self.root = root
        self.dir = None
        self.outputs = []
        self.config = {}
        self.checksum = None
        self.seed = None

    def open(self, seed):
        self.seed = seed
        self.dir = make_run_dir(self.root, seed)
        logger.info("Writing to %s", self.dir)
        return self.dir

    def path(self, name):
        self.outputs.append(name)
        return os.path.join(self.dir, name)


def _csv_floats(text):
    try:
        return [float(v) for v in text.split(',')]
    except ValueError:
        raise UsageError("Expected comma-separated numbers, got '{}'".format(text))


def _add_common(parser, seed_default=0):
    parser.add_argument('--seed', type=int, default=seed_default,
                        help='master seed for every random stream')
    parser.add_argument('--out', default='out',
                        help='root directory for run directories')
    parser.add_argument('--plots', action='store_true',
                        help='also render PNG previews')


def _add_model(parser):
    parser.add_argument('--checkpoint', required=True,
                        help="checkpoint file, or 'oracle:<dataset>'")


def _add_points(parser, n_default=1000):
    parser.add_argument('--input', help='CSV of data vectors')
    parser.add_argument('--dataset', default='single_gaussian',
                        help='preset ({}) or CSV path used when --input is '
                             'absent'.format(', '.join(sorted(PRESETS))))
    parser.add_argument('--n', type=int, default=n_default,
                        help='number of points')


def build_parser():
    parser = _Parser(prog='bcmlab',
                     description='Bidirectional consistency models on toy '
                                 'densities.')
    parser.add_argument('--verbose', '-v', action='store_true')
    parser.add_argument('--version', action='version', version=__version__)
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True

    cmd = sub.add_parser('train', help='train a model from a config file')
    cmd.add_argument('--config', required=True)
    _add_common(cmd, seed_default=None)

    cmd = sub.add_parser('sample', help='generate samples')
    _add_model(cmd)
    cmd.add_argument('--plan', default='one_step', choices=list(PLAN_PRESETS))
    cmd.add_argument('--noise-mode', default='amplify', choices=NOISE_MODES)
    cmd.add_argument('--n', type=int, default=1000)
    cmd.add_argument('--trajectory', action='store_true',
                     help='also dump every intermediate state')
    _add_common(cmd)

    cmd = sub.add_parser('invert', help='map data to noise')
    _add_model(cmd)
    cmd.add_argument('--ladder', default='nfe2',
                     help='ladder name ({}) or comma-separated '
                          'times'.format(', '.join(LADDERS)))
    _add_points(cmd)
    _add_common(cmd)

    cmd = sub.add_parser('roundtrip', help='invert and regenerate, report MSE')
    _add_model(cmd)
    cmd.add_argument('--ladder', default='nfe2')
    cmd.add_argument('--plan', choices=list(PLAN_PRESETS),
                     help='generation plan (default: one step from the '
                          'top of the ladder)')
    _add_points(cmd)
    _add_common(cmd)

    cmd = sub.add_parser('interpolate', help='slerp between two data points')
    _add_model(cmd)
    cmd.add_argument('--ladder', default='nfe3')
    cmd.add_argument('--steps', type=int, default=9)
    _add_points(cmd, n_default=2)
    _add_common(cmd)

    cmd = sub.add_parser('inpaint', help='fill masked coordinates')
    _add_model(cmd)
    cmd.add_argument('--ladder', default='inpaint')
    cmd.add_argument('--mask', required=True,
                     help="comma-separated 0/1 per coordinate, 1 = missing")
    cmd.add_argument('--scale', type=float, default=INPAINT_SCALE)
    _add_points(cmd)
    _add_common(cmd)

    cmd = sub.add_parser('eval', help='distribution metrics of a model')
    _add_model(cmd)
    cmd.add_argument('--metrics', default=','.join(METRICS))
    cmd.add_argument('--config', help='schedule for the coverage export')
    cmd.add_argument('--coverage-steps', type=int, default=161)
    _add_points(cmd, n_default=2000)
    _add_common(cmd)

    cmd = sub.add_parser('make-data', help='export a seeded dataset')
    cmd.add_argument('--dataset', default='single_gaussian')
    cmd.add_argument('--n', type=int, default=10000)
    _add_common(cmd)

    cmd = sub.add_parser('replay', help='rerun the command of a manifest')
    cmd.add_argument('--manifest', required=True)
    cmd.add_argument('--out', default='out')
    return parser


def _try_plot(render, *args, **kwargs):
    try:
        render(*args, **kwargs)
    except Exception as exc:
        logger.warning("Skipping plot %s: %s", args[0] if args else '', exc)


def _load_model(args, run):
    spec = args.checkpoint
    if spec.startswith(ORACLE_PREFIX):
        name = spec[len(ORACLE_PREFIX):]
        density = make_density(name)
        run.config['model'] = spec
        if name == 'single_gaussian':
            return GaussianFlowModel(density.means[0], dim=density.dim)
        return OdeFlowModel(density)
    params = load_checkpoint(spec)
    run.checksum = file_sha256(spec)
    return ConsistencyModel(params)


def _load_points(args, dim, size=None):
    if args.input:
        points = read_matrix(args.input)
    else:
        density = make_density(args.dataset)
        points = density.sample(random_stream(args.seed, STREAM_DATA),
                                size or args.n)
    if points.shape[1] != dim:
        raise ValueError("Data has {} dimensions, model expects {}".format(
            points.shape[1], dim))
    return points


def _cmd_train(args, run):
    overrides = {'seed': args.seed} if args.seed is not None else None
    config = load_config(args.config, overrides)
    run.open(config.seed)
    density = make_density(config.dataset, config.sigma_data)
    config.data_dim = density.dim
    with open(run.path('config.cfg'), 'w') as f:
        f.write(dump_config(config))
    try:
        result = run_training(config, density, dump_dir=run.dir)
    finally:
        run.config = config.to_dict()
    run.checksum = save_checkpoint(run.path('checkpoint.bcm'), result.ema)
    run.outputs.append('checkpoint.bcm.manifest')
    write_table(run.path('loss.csv'), ['k', 'N_k', 'ct', 'st', 'total'],
                result.history)
    if args.plots and result.history:
        history = np.asarray(result.history)
        _try_plot(plot.line_plot, run.path('loss.png'), history[:, 0],
                  {'ct': history[:, 2], 'st': history[:, 3]}, log_y=True)
    print(os.path.join(run.dir, 'checkpoint.bcm'))


def _cmd_sample(args, run):
    run.open(args.seed)
    model = _load_model(args, run)
    plan = preset_plan(args.plan, args.seed, args.noise_mode)
    traj = sample(model, plan, size=args.n)
    run.config.update(plan=args.plan, noise_mode=args.noise_mode, n=args.n)
    write_matrix(run.path('samples.csv'), traj.final,
                 comments=['plan={} nfe={}'.format(args.plan, traj.nfe)])
    if args.trajectory:
        write_trajectory(run.path('trajectory.csv'), traj)
    if args.plots and model.dim >= 2:
        _try_plot(plot.scatter_plot, run.path('samples.png'),
                  {args.plan: traj.final})
    print('nfe={}'.format(traj.nfe))


def _cmd_invert(args, run):
    run.open(args.seed)
    model = _load_model(args, run)
    plan = parse_ladder(args.ladder, args.seed)
    points = _load_points(args, model.dim)
    traj = invert(model, plan, points)
    run.config.update(ladder=plan.times, n=len(points))
    write_matrix(run.path('noise.csv'), traj.final,
                 comments=['ladder={} nfe={}'.format(plan.times, traj.nfe)])
    print('nfe={}'.format(traj.nfe))


def _cmd_roundtrip(args, run):
    run.open(args.seed)
    model = _load_model(args, run)
    plan = parse_ladder(args.ladder, args.seed)
    gen_plan = preset_plan(args.plan, args.seed) if args.plan else None
    points = _load_points(args, model.dim)
    mse = roundtrip_mse(model, plan, gen_plan, points)
    run.config.update(ladder=plan.times, plan=args.plan, n=len(points))
    write_table(run.path('roundtrip.csv'), ['ladder', 'nfe', 'mse'],
                [[' '.join(repr(t) for t in plan.times), plan.nfe, mse]],
                ['mse is per dimension after mapping each dimension to '
                 '[0, 1] with the data min/max'])
    print('nfe={} mse={!r}'.format(plan.nfe, mse))


def _cmd_interpolate(args, run):
    run.open(args.seed)
    model = _load_model(args, run)
    plan = parse_ladder(args.ladder, args.seed)
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    points = _load_points(args, model.dim, size=2)
    if len(points) < 2:
        raise ValueError("Interpolation needs two input rows.")
    alphas = np.linspace(0.0, 1.0, args.steps)
    frames = slerp_interpolate(model, points[0], points[1], alphas, plan)
    run.config.update(ladder=plan.times, steps=args.steps)
    rows = [[alpha] + list(np.ravel(frame)) for alpha, frame in zip(alphas, frames)]
    write_table(run.path('interpolation.csv'),
                ['alpha'] + ['x{}'.format(i) for i in range(model.dim)], rows)
    print('frames={}'.format(len(frames)))


def _cmd_inpaint(args, run):
    run.open(args.seed)
    model = _load_model(args, run)
    plan = parse_ladder(args.ladder, args.seed)
    mask = Mask(_csv_floats(args.mask), args.scale)
    points = _load_points(args, model.dim)
    masked = mask.hide(points)
    filled = inpaint(model, masked, mask, plan)
    run.config.update(ladder=plan.times, mask=args.mask, scale=args.scale,
                      n=len(points))
    write_matrix(run.path('masked.csv'), masked)
    write_matrix(run.path('inpainted.csv'), filled)
    print('nfe={}'.format(plan.nfe + 1))


def _coverage(args):
    if args.config:
        cfg = load_config(args.config)
        grid = build_grid(cfg.t_min, cfg.t_max, args.coverage_steps, cfg.rho)
        pmf = noise_pmf(grid, cfg.p_mean, cfg.p_std)
    else:
        grid = build_grid(T_MIN, T_MAX, args.coverage_steps, RHO)
        pmf = noise_pmf(grid, P_MEAN, P_STD)
    return grid, pair_coverage_pmf(grid, pmf)


def _cmd_eval(args, run):
    metrics = [m.strip() for m in args.metrics.split(',') if m.strip()]
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise UsageError("Unknown metrics {}; choose from {}".format(
            ", ".join(unknown), ", ".join(METRICS)))
    run.open(args.seed)
    model = _load_model(args, run)
    run.config.update(metrics=metrics, n=args.n)
    rows = []
    data = None
    if 'sw' in metrics or 'mse' in metrics:
        data = _load_points(args, model.dim)
    if 'sw' in metrics:
        for name in PLAN_PRESETS:
            traj = sample(model, preset_plan(name, args.seed), size=len(data))
            value = sliced_wasserstein(traj.final, data, 128,
                                       random_stream(args.seed, STREAM_EVAL))
            rows.append([name, 'sliced_wasserstein', value])
            rows.append([name, 'nfe', traj.nfe])
            if args.plots and model.dim >= 2:
                _try_plot(plot.scatter_plot, run.path('samples_{}.png'.format(name)),
                          {'data': data, name: traj.final})
    if 'mse' in metrics:
        low, high = data.min(axis=0), data.max(axis=0)
        subset = data[:1000]
        for name in ('nfe1', 'nfe2', 'nfe4'):
            plan = parse_ladder(name, args.seed)
            rows.append([name, 'roundtrip_mse',
                         roundtrip_mse(model, plan, None, subset, (low, high))])
    if 'coverage' in metrics:
        grid, joint = _coverage(args)
        write_table(run.path('coverage.csv'),
                    ['n', 'n_prime', 't_n', 't_n_prime', 'prob'],
                    coverage_records(grid, joint))
        if args.plots:
            _try_plot(plot.heatmap_plot, run.path('coverage.png'), joint)
    write_table(run.path('metrics.csv'), ['plan', 'metric', 'value'], rows)
    for row in rows:
        print('{} {} {!r}'.format(*row))


def _cmd_make_data(args, run):
    run.open(args.seed)
    density = make_density(args.dataset)
    points = density.sample(random_stream(args.seed, STREAM_DATA), args.n)
    run.config.update(dataset=args.dataset, n=args.n)
    write_matrix(run.path('data.csv'), points,
                 comments=['dataset={} seed={}'.format(args.dataset, args.seed)])
    print(os.path.join(run.dir, 'data.csv'))


HANDLERS = {
    'train': _cmd_train,
    'sample': _cmd_sample,
    'invert': _cmd_invert,
    'roundtrip': _cmd_roundtrip,
    'interpolate': _cmd_interpolate,
    'inpaint': _cmd_inpaint,
    'eval': _cmd_eval,
    'make-data': _cmd_make_data,
}


def _replay_argv(manifest_file, out):
    record = read_manifest(manifest_file)
    argv = list(record['argv'])
    if record['command'] == 'train':
        folder = manifest_file if os.path.isdir(manifest_file) else \
            os.path.dirname(manifest_file)
        argv[argv.index('--config') + 1] = os.path.join(folder, 'config.cfg')
    return argv + ['--out', out]


def _configure_logging(verbose):
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(format=LOG_FORMAT)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def main(argv=None):
    """Run the command line; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print('bcmlab: error: {}'.format(exc), file=sys.stderr)
        return EXIT_USAGE
    _configure_logging(args.verbose)

    if args.command == 'replay':
        try:
            replayed = _replay_argv(args.manifest, args.out)
        except (OSError, ValueError, KeyError) as exc:
            logger.error("Can't replay %s: %s", args.manifest, exc)
            return EXIT_USAGE
        logger.info("Replaying: bcmlab %s", ' '.join(replayed))
        return main(replayed)

    run = _Run(args.out)
    start = time.perf_counter()
    code = EXIT_OK
    try:
        HANDLERS[args.command](args, run)
    except NumericAbort as exc:
        logger.error("%s", exc)
        code = EXIT_ABORT
    except (BCMError, ValueError, KeyError, OSError) as exc:
        logger.error("%s", exc)
        code = EXIT_USAGE
    if run.dir is not None:
        status = {EXIT_OK: 'ok', EXIT_USAGE: 'error',
                  EXIT_ABORT: 'numeric-abort'}[code]
        write_manifest(run.dir, RunManifest(
            args.command, argv, run.config, run.seed, run.checksum,
            __version__, time.perf_counter() - start, run.outputs, status))
    return code
