import argparse
import logging
import os
import sys
from functools import partial

from posepick import proxy, scoring
from posepick._workers import ordered_map
from posepick.candidates import (
    PerturbConfig, generate_pool, read_pool, write_pool)
from posepick.config import DEFAULTS, RunConfig
from posepick.metrics import ObservabilityConfig
from posepick.pipeline import (
    StageError, describe_poses, descriptor_grid, load_poses, observe_pool,
    provenance, real_source, require_file, run_compare, run_pipeline, stage,
    synthetic_source, write_compare, zero_shot_errors)
from posepick.poses import compute_stats, write_poses
from posepick.render import (
    ToyRenderer, ToyScene, toy_trajectory, write_triplet)

logger = logging.getLogger(__name__)

PROG = 'posepick'

# Short spellings of config keys, per subcommand.
ALIASES = {
    'paths.train': '--train',
    'paths.test': '--test',
    'paths.views': '--views',
    'paths.train_views': '--train-views',
    'paths.errors': '--errors',
    'select.k': '--k',
}


def _config_dest(key):
    return 'cfg:' + key


def _add_config_flags(parser):
    parser.add_argument('--config', metavar='FILE',
                        help='config file of "key = value" lines')
    group = parser.add_argument_group('configuration')
    for key, default in DEFAULTS.items():
        flags = ['--' + key]
        if key in ALIASES:
            flags.append(ALIASES[key])
        group.add_argument(*flags, dest=_config_dest(key), metavar='VALUE',
                           help='default: %s' % (default or 'unset',))


def build_config(opts):
    """ Defaults, then the ``--config`` file, then flags. """
    config = RunConfig()
    if opts.config:
        config.load(require_file(opts.config, 'config'))
    for key in DEFAULTS:
        value = getattr(opts, _config_dest(key), None)
        if value is not None:
            config.set(key, value)
    return config


def cmd_gen_candidates(opts, config):
    train = load_poses(config.get('paths.train', required=True))
    cfg = PerturbConfig.from_config(config)
    with stage('gen-candidates'):
        pool = generate_pool(train, cfg)
        write_pool(opts.out, pool)
    print('N=%d M=%d pool=%d' % (len(train), cfg.m_per_pose, len(pool)))


def cmd_render_toy(opts, config):
    scene = ToyScene.from_config(config)
    if not os.path.isdir(opts.out_dir):
        os.makedirs(opts.out_dir)
    if opts.trajectory is not None:
        poses = toy_trajectory(scene, opts.trajectory,
                               seed=config.get_int('run.seed'),
                               radius=config.get_float('toy.radius'))
        write_poses(os.path.join(opts.out_dir, 'train.txt'), poses)
    else:
        poses = load_poses(opts.poses)
    renderer = ToyRenderer(scene, artifacts=not opts.clean)
    with stage('render'):
        triplets = ordered_map(renderer.triplet, poses,
                               config.get_int('run.workers'))
        for triplet in triplets:
            write_triplet(opts.out_dir, triplet)
    print('rendered %d view triplets into %s' % (len(triplets), opts.out_dir))


def cmd_score(opts, config):
    seed = config.get_int('run.seed')
    workers = config.get_int('run.workers')
    pool = read_pool(require_file(opts.pool, 'pool'))
    train = load_poses(config.get('paths.train', required=True))
    scene = ToyScene.from_config(config)
    grid = descriptor_grid(config)
    with stage('render'):
        f_gs, _ = observe_pool(pool, synthetic_source(config, scene),
                               ObservabilityConfig.from_config(config),
                               workers=workers)
    with stage('score'):
        errors, error_source = zero_shot_errors(
            config, train,
            partial(describe_poses, train, real_source(config, scene), grid,
                    workers))
        if opts.errors_out:
            scoring.write_errors(opts.errors_out, errors,
                                 note='errors: %s' % (error_source,))
        scores = scoring.score_pool(pool, train, errors, f_gs,
                                    scoring.ScoringConfig.from_config(config),
                                    compute_stats(train))
        ranked = scoring.select_top_k(
            scores, 0, provenance(config, seed, errors=error_source))
        scoring.write_scores(opts.out, ranked.ranked, ranked.provenance)
    print('scored %d candidates (errors: %s)' % (len(pool), error_source))


def cmd_select(opts, config):
    scores, info = scoring.read_scores(require_file(opts.scores, 'score'))
    with stage('select'):
        manifest = scoring.select_top_k(scores, config.get_int('select.k'),
                                        info)
        scoring.write_manifest(opts.out, manifest)
    print('selected %d of %d candidates' % (manifest.k, len(manifest)))


def cmd_eval_proxy(opts, config):
    seed = config.get_int('run.seed')
    workers = config.get_int('run.workers')
    grid = descriptor_grid(config)
    scene = ToyScene.from_config(config)
    train = load_poses(config.get('paths.train', required=True))
    test = load_poses(config.get('paths.test', required=True))
    chosen = []
    if opts.manifest:
        manifest = scoring.read_manifest(require_file(opts.manifest,
                                                      'manifest'))
        by_id = dict((c.id, c) for c in read_pool(require_file(opts.pool,
                                                               'pool')))
        missing = [i for i in manifest.selected_ids if i not in by_id]
        if missing:
            raise ValueError('manifest candidates %s are not in the pool'
                             % (', '.join(str(i) for i in missing[:10]),))
        chosen = [by_id[i] for i in manifest.selected_ids]
    method = opts.method or ('value' if opts.manifest else 'none')

    with stage('render'):
        real = real_source(config, scene)
        train_desc = describe_poses(train, real, grid, workers)
        test_desc = describe_poses(test, real, grid, workers)
        syn_desc = describe_poses(chosen, synthetic_source(config, scene),
                                  grid, workers)
    with stage('eval-proxy'):
        database = proxy.PoseDatabase(train_desc, train).extend(
            syn_desc, [c.pose for c in chosen])
        report = proxy.evaluate_database(database, test, test_desc, method,
                                         seed, len(chosen))
        proxy.write_report(opts.out, report)
    print(','.join(proxy.SUMMARY_COLUMNS))
    print(report.summary_line())


def cmd_compare(opts, config):
    rows, summary = run_compare(config)
    write_compare(opts.out, rows, summary)
    for s in summary:
        print('ratio=%g K=%d %s: wins %d/%d, mean relative improvement '
              '%.1f%%%s' % (s.train_ratio, s.k, s.method, s.wins, s.seeds,
                            100.0 * s.mean_rel_improvement,
                            '' if s.monotone is None else
                            ', monotone=%s' % (s.monotone,)))


def cmd_pipeline(opts, config):
    result = run_pipeline(config, opts.run_dir)
    print('N=%d pool=%d selected=%d' % (len(result.train), len(result.pool),
                                        result.manifest.k))
    print(result.report.summary_line())


def build_parser():
    parser = argparse.ArgumentParser(
        prog=PROG,
        description='Value-based selection of synthetic camera poses.')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true',
                           help='log debug messages')
    verbosity.add_argument('-q', '--quiet', action='store_true',
                           help='log warnings and errors only')
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    def command(name, func, help):
        sub = commands.add_parser(name, help=help, description=help)
        sub.set_defaults(func=func)
        return sub

    sub = command('gen-candidates', cmd_gen_candidates,
                  'generate candidate poses around the training poses')
    sub.add_argument('--out', required=True, metavar='POOL')
    _add_config_flags(sub)

    sub = command('render-toy', cmd_render_toy,
                  'render view triplets of poses with the toy renderer')
    source = sub.add_mutually_exclusive_group(required=True)
    source.add_argument('--poses', metavar='POSES')
    source.add_argument('--trajectory', type=int, metavar='N',
                        help='render a toy trajectory of N poses, written '
                             'to train.txt in the output directory')
    sub.add_argument('--out-dir', required=True, metavar='DIR')
    sub.add_argument('--clean', action='store_true',
                     help='render without artifacts')
    _add_config_flags(sub)

    sub = command('score', cmd_score, 'score every candidate of a pool')
    sub.add_argument('--pool', required=True, metavar='POOL')
    sub.add_argument('--out', required=True, metavar='SCORES')
    sub.add_argument('--errors-out', metavar='FILE',
                     help='write the zero-shot errors used')
    _add_config_flags(sub)

    sub = command('select', cmd_select, 'select the top-K candidates')
    sub.add_argument('--scores', required=True, metavar='SCORES')
    sub.add_argument('--out', required=True, metavar='MANIFEST')
    _add_config_flags(sub)

    sub = command('eval-proxy', cmd_eval_proxy,
                  'evaluate a selection with the retrieval proxy')
    sub.add_argument('--pool', metavar='POOL')
    sub.add_argument('--manifest', metavar='MANIFEST')
    sub.add_argument('--method', help='label of the report')
    sub.add_argument('--out', required=True, metavar='REPORT')
    _add_config_flags(sub)

    sub = command('compare', cmd_compare,
                  'compare value-based and random selection')
    sub.add_argument('--out', required=True, metavar='REPORT')
    _add_config_flags(sub)

    sub = command('pipeline', cmd_pipeline, 'run every stage')
    sub.add_argument('--run-dir', required=True, metavar='DIR')
    _add_config_flags(sub)

    return parser


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else (
        logging.WARNING if quiet else logging.INFO)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')


def _error(message):
    print('%s: error: %s' % (PROG, message), file=sys.stderr)


def main(args=None):
    """
    Run the command line. Returns the exit code: 0 on success, 2 for
    invalid input or configuration, 1 for any other failure.
    """
    opts = build_parser().parse_args(args)
    configure_logging(opts.verbose, opts.quiet)
    try:
        if opts.command == 'eval-proxy' and opts.manifest and not opts.pool:
            raise ValueError('--manifest needs the --pool it was selected '
                             'from')
        opts.func(opts, build_config(opts))
    except StageError as e:
        _error(e)
        return 2 if isinstance(e.__cause__, ValueError) else 1
    except ValueError as e:
        _error(e)
        return 2
    except Exception as e:
        logger.debug('unexpected failure', exc_info=True)
        _error(e)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
