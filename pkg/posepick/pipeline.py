"""
The stages of a run (candidate generation, rendering, scoring, selection
and proxy evaluation), chained into a full pipeline, and the paired sweep
comparing value-based selection with random selection.
"""
import csv
import logging
import math
import os
from collections import OrderedDict, namedtuple
from contextlib import contextmanager
from functools import partial

import numpy as np

from posepick import proxy, scoring
from posepick._workers import ordered_map
from posepick.candidates import (
    PerturbConfig, derive_seed, generate_pool, read_pool, write_pool)
from posepick.config import ConfigError
from posepick.metrics import ObservabilityConfig
from posepick.poses import compute_stats, read_poses, write_poses
from posepick.render import (
    ImageDirectory, ToyRenderer, ToyScene, toy_trajectory)
from posepick.scoring import COMPONENTS, ScoringConfig, parse_components

logger = logging.getLogger(__name__)

RANDOM = 'random'
VALUE = 'value'

LEAVE_ONE_OUT = 'leave-one-out'


class StageError(RuntimeError):
    """ A pipeline stage failed. The original exception is the cause. """

    def __init__(self, stage_name, cause):
        self.stage = stage_name
        super(StageError, self).__init__('%s: %s' % (stage_name, cause))


@contextmanager
def stage(name):
    """ Label any failure inside the block with the stage ``name``. """
    logger.info('%s: started', name)
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e
    logger.info('%s: done', name)


def require_file(path, what):
    if not os.path.isfile(path):
        raise ConfigError('%s file %s does not exist' % (what, path))
    return path


def load_poses(path):
    """
    Poses of a pose list, or of a candidate pool (pose list plus a parent
    column).
    """
    require_file(path, 'pose')
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith('#'):
                if len(line.split()) == 9:
                    return [c.pose for c in read_pool(path)]
                break
    return read_poses(path)


def descriptor_grid(config):
    grid = config.get_ints('eval.descriptor_grid')
    if len(grid) != 2:
        raise ConfigError('eval.descriptor_grid must be "rows,cols"')
    return tuple(grid)


def synthetic_source(config, scene):
    """ Views of candidates: an ingestion directory or the toy renderer. """
    path = config.get('paths.views')
    if path:
        return ImageDirectory(path)
    return ToyRenderer(scene, artifacts=True)


def real_source(config, scene):
    """
    Views of training and test poses. Without a directory of real views the
    toy renderer stands in, with artifacts disabled.
    """
    path = config.get('paths.train_views')
    if path:
        return ImageDirectory(path)
    return ToyRenderer(scene, artifacts=False)


def training_poses(config, scene, seed):
    path = config.get('paths.train')
    if path:
        return load_poses(path)
    return toy_trajectory(scene, config.get_int('toy.n_train'), seed=seed,
                          radius=config.get_float('toy.radius'))


def held_out_poses(config, train, seed):
    """
    The test poses: a pose file, or one perturbed pose per training pose
    drawn with a seed derived from ``seed``.
    """
    path = config.get('paths.test')
    if path:
        return load_poses(path)
    cfg = PerturbConfig.from_config(config).with_seed(
        derive_seed(seed, 'test'), m_per_pose=1)
    return [c.pose for c in generate_pool(train, cfg)]


def _observe(source, ocfg, grid, candidate):
    triplet = source.triplet(candidate)
    f_gs = scoring.observability(triplet, ocfg)
    if grid is None:
        return f_gs, None
    return f_gs, proxy.descriptor(triplet.central, grid)


def observe_pool(pool, source, ocfg, grid=None, workers=1):
    """
    Observability of every candidate and, with a ``grid``, the descriptor of
    its central view.
    """
    results = ordered_map(partial(_observe, source, ocfg, grid), pool, workers)
    f_gs = [r[0] for r in results]
    if grid is None:
        return f_gs, None
    descriptors = np.array([r[1] for r in results]).reshape(
        len(results), grid[0] * grid[1])
    return f_gs, descriptors


def _describe(source, grid, pose):
    return proxy.descriptor(source.central(pose), grid)


def describe_poses(poses, source, grid, workers=1):
    poses = list(poses)
    descriptors = ordered_map(partial(_describe, source, grid), poses,
                              workers)
    return np.array(descriptors).reshape(len(poses), grid[0] * grid[1])


def _central(source, candidate):
    return source.central(candidate)


def zero_shot_errors(config, train, describe_train):
    """
    Returns ``(errors, source)``: the configured error file, or leave-one-out
    errors of the retrieval proxy when none is given.

    :param describe_train: callable returning the training descriptors
    """
    path = config.get('paths.errors')
    if path:
        require_file(path, 'error')
        return scoring.read_errors(path), path
    logger.info('no error file given, using leave-one-out errors of the '
                'retrieval proxy')
    return proxy.leave_one_out(train, describe_train()), LEAVE_ONE_OUT


def provenance(config, seed, **extra):
    info = OrderedDict([('seed', seed), ('config_digest', config.digest())])
    info.update(extra)
    return info


def random_ranking(pool, seed):
    """
    Pool indices in the order of a uniform random permutation. Its first K
    entries are a uniform sample without replacement.
    """
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, RANDOM)))
    return [int(i) for i in rng.permutation(len(pool))]


def value_ranking(pool, f_diff, f_nov, f_gs, cfg):
    """ Pool indices in descending value order. """
    index = dict((c.id, i) for i, c in enumerate(pool))
    manifest = scoring.select_top_k(
        scoring.fuse_pool(pool, f_diff, f_nov, f_gs, cfg), 0)
    return [index[s.candidate_id] for s in manifest.ranked]


def parse_budget(text, n):
    """
    A selection budget: an integer, or a multiple of the training set size
    ``n`` such as ``0.5N`` or ``N``, rounded to the nearest integer.
    """
    text = text.strip()
    try:
        if text.endswith('N'):
            factor = float(text[:-1]) if text[:-1] else 1.0
            k = int(math.floor(factor * n + 0.5))
        else:
            k = int(text)
    except ValueError:
        raise ConfigError('budgets must be integers or multiples of N such '
                          'as "0.5N", got "%s"' % (text,))
    if k < 0:
        raise ConfigError('budgets must be >= 0, got "%s"' % (text,))
    return k


def subsample(n, ratio, seed):
    """
    Sorted indices of a seeded subsample of ``ratio * n`` training poses (at
    least 2). A ratio of 1 keeps every pose.
    """
    if not 0.0 < ratio <= 1.0:
        raise ConfigError('train ratios must lie in (0, 1], got %r' % (ratio,))
    if ratio == 1.0:
        return np.arange(n)
    size = max(2, int(math.floor(ratio * n + 0.5)))
    rng = np.random.Generator(
        np.random.PCG64(derive_seed(seed, 'ratio:%r' % (ratio,))))
    return np.sort(rng.choice(n, size=size, replace=False))


def check_budget(k, pool):
    if k > len(pool):
        raise ValueError('K=%d exceeds the pool size %d' % (k, len(pool)))


RunResult = namedtuple('RunResult', ['train', 'test', 'pool', 'manifest',
                                     'report'])


def run_pipeline(config, run_dir):
    """
    Generate, render, score, select and evaluate, writing every
    intermediate file into ``run_dir``.
    """
    seed = config.get_int('run.seed')
    workers = config.get_int('run.workers')
    k = config.get_int('select.k')
    grid = descriptor_grid(config)
    scene = ToyScene.from_config(config)
    views_dir = os.path.join(run_dir, 'views')
    os.makedirs(views_dir, exist_ok=True)

    def out(name):
        return os.path.join(run_dir, name)

    with open(out('config.snapshot'), 'w') as f:
        f.write(config.snapshot())

    with stage('gen-candidates'):
        train = training_poses(config, scene, seed)
        test = held_out_poses(config, train, seed)
        pool = generate_pool(train, PerturbConfig.from_config(config, seed))
        check_budget(k, pool)
        write_poses(out('train.txt'), train)
        write_poses(out('test.txt'), test)
        write_pool(out('pool.txt'), pool)

    with stage('render'):
        synthetic = synthetic_source(config, scene)
        real = real_source(config, scene)
        f_gs, syn_desc = observe_pool(
            pool, synthetic, ObservabilityConfig.from_config(config), grid,
            workers)
        train_desc = describe_poses(train, real, grid, workers)
        test_desc = describe_poses(test, real, grid, workers)

    with stage('score'):
        errors, error_source = zero_shot_errors(
            config, train, lambda: train_desc)
        scoring.write_errors(out('errors.txt'), errors,
                             note='errors: %s' % (error_source,))
        scores = scoring.score_pool(pool, train, errors, f_gs,
                                    ScoringConfig.from_config(config),
                                    compute_stats(train))

    with stage('select'):
        manifest = scoring.select_top_k(
            scores, k, provenance(config, seed, errors=error_source))
        scoring.write_scores(out('scores.csv'), manifest.ranked,
                             manifest.provenance)
        scoring.write_manifest(out('manifest.csv'), manifest)
        index = dict((c.id, i) for i, c in enumerate(pool))
        selected = [index[i] for i in manifest.selected_ids]
        views = ordered_map(partial(_central, synthetic),
                            [pool[i] for i in selected], workers)
        for i, view in zip(selected, views):
            view.write_png(os.path.join(views_dir, '%d_c.png' % (pool[i].id,)))

    with stage('eval-proxy'):
        database = proxy.PoseDatabase(train_desc, train).extend(
            syn_desc[selected], [pool[i].pose for i in selected])
        report = proxy.evaluate_database(database, test, test_desc, VALUE,
                                         seed, k)
        proxy.write_report(out('report.csv'), report)

    return RunResult(train, test, pool, manifest, report)


def compare_arms(config):
    """
    ``(name, components)`` of every comparison arm; ``components`` is None
    for random selection.
    """
    arms = OrderedDict()
    for variant in config.get_list('compare.variants'):
        if variant == RANDOM:
            arms[variant] = None
        elif variant == VALUE:
            arms[variant] = COMPONENTS
        else:
            arms[variant] = parse_components(variant)
    if RANDOM not in arms:
        raise ConfigError('compare.variants must include "%s"' % (RANDOM,))
    if len(arms) < 2:
        raise ConfigError('compare.variants needs at least one arm besides '
                          '"%s"' % (RANDOM,))
    return arms


CompareRow = namedtuple('CompareRow', [
    'train_ratio', 'method', 'seed', 'k', 'median_t_cm', 'median_r_deg'])

SummaryRow = namedtuple('SummaryRow', [
    'train_ratio', 'k', 'method', 'wins', 'seeds', 'win_rate',
    'mean_rel_improvement', 'monotone'])


def run_compare(config):
    """
    For every seed, training ratio and budget, select K candidates with
    every arm from one shared pool and evaluate each selection with the
    retrieval proxy. Arms of a seed share the pool, its renderings and the
    test set; only the selection rule differs.

    Returns ``(rows, summary)``.
    """
    seeds = config.get_ints('compare.seeds')
    ratios = config.get_floats('compare.train_ratios')
    budgets = config.get_list('compare.budgets')
    arms = compare_arms(config)
    workers = config.get_int('run.workers')
    grid = descriptor_grid(config)
    scene = ToyScene.from_config(config)
    ocfg = ObservabilityConfig.from_config(config)
    scfg = ScoringConfig.from_config(config)
    perturb = PerturbConfig.from_config(config)
    synthetic = synthetic_source(config, scene)
    real = real_source(config, scene)

    rows = []
    for seed in seeds:
        logger.info('comparison seed %d', seed)
        with stage('gen-candidates'):
            train_full = training_poses(config, scene, seed)
            test = held_out_poses(config, train_full, seed)
        with stage('render'):
            full_desc = describe_poses(train_full, real, grid, workers)
            test_desc = describe_poses(test, real, grid, workers)

        for ratio in ratios:
            with stage('gen-candidates'):
                keep = subsample(len(train_full), ratio, seed)
                train = [train_full[i] for i in keep]
                train_desc = full_desc[keep]
                pool = generate_pool(train, perturb.with_seed(seed))
                ks = [parse_budget(b, len(train)) for b in budgets]
                for k in ks:
                    check_budget(k, pool)
            with stage('render'):
                f_gs, syn_desc = observe_pool(pool, synthetic, ocfg, grid,
                                              workers)
            with stage('score'):
                errors, _ = zero_shot_errors(config, train,
                                             lambda: train_desc)
                stats = compute_stats(train)
                ratio_scfg = scfg
                if scfg.k_neighbors > len(train):
                    logger.warning(
                        'train ratio %g keeps %d training poses: scoring '
                        'difficulty over %d neighbors instead of %d',
                        ratio, len(train), len(train), scfg.k_neighbors)
                    ratio_scfg = scfg.with_k_neighbors(len(train))
                f_diff = scoring.difficulties(pool, train, errors, stats,
                                              ratio_scfg)
                f_nov = scoring.novelties(pool, train, stats, ratio_scfg)
                rankings = OrderedDict()
                for name, components in arms.items():
                    if components is None:
                        rankings[name] = random_ranking(pool, seed)
                    else:
                        rankings[name] = value_ranking(
                            pool, f_diff, f_nov, f_gs,
                            ratio_scfg.with_components(components))
            with stage('eval-proxy'):
                base = proxy.PoseDatabase(train_desc, train)
                for k in ks:
                    for name, ranking in rankings.items():
                        chosen = ranking[:k]
                        database = base.extend(
                            syn_desc[chosen], [pool[i].pose for i in chosen])
                        report = proxy.evaluate_database(
                            database, test, test_desc, name, seed, k)
                        rows.append(CompareRow(
                            ratio, name, seed, k,
                            100.0 * report.median_t_error,
                            report.median_r_error))

    return rows, summarize(rows)


def _unique(values):
    return list(OrderedDict.fromkeys(values))


def summarize(rows):
    """
    Paired summary per (training ratio, K, arm): how often the arm beats
    random selection on median translation error, and the mean relative
    improvement ``(random - arm) / random``. For the ``value`` arm,
    ``monotone`` tells whether its seed-averaged median error never grows
    with K.
    """
    table = dict(((r.train_ratio, r.method, r.seed, r.k), r.median_t_cm)
                 for r in rows)
    summary = []
    for ratio in _unique(r.train_ratio for r in rows):
        subset = [r for r in rows if r.train_ratio == ratio]
        seeds = _unique(r.seed for r in subset)
        ks = sorted(set(r.k for r in subset))
        for method in _unique(r.method for r in subset):
            if method == RANDOM:
                continue
            monotone = None
            if method == VALUE:
                means = [np.mean([table[(ratio, method, s, k)] for s in seeds])
                         for k in ks]
                monotone = all(b <= a for a, b in zip(means, means[1:]))
            for k in ks:
                wins = 0
                improvements = []
                for s in seeds:
                    arm = table[(ratio, method, s, k)]
                    baseline = table[(ratio, RANDOM, s, k)]
                    wins += arm < baseline
                    improvements.append(
                        (baseline - arm) / baseline if baseline > 0 else 0.0)
                summary.append(SummaryRow(
                    ratio, k, method, wins, len(seeds),
                    wins / float(len(seeds)), float(np.mean(improvements)),
                    monotone))
    return summary


ROW_COLUMNS = ['train_ratio', 'method', 'seed', 'K', 'median_t_cm',
               'median_r_deg']
SUMMARY_COLUMNS = ['train_ratio', 'K', 'method', 'wins', 'seeds', 'win_rate',
                   'mean_rel_improvement', 'monotone']


def _flag(value):
    return '' if value is None else ('1' if value else '0')


def write_compare(path, rows, summary):
    """ The per-run table, a blank line, then the paired summary. """
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(ROW_COLUMNS)
        for r in rows:
            writer.writerow([repr(float(r.train_ratio)), r.method, r.seed,
                             r.k, repr(float(r.median_t_cm)),
                             repr(float(r.median_r_deg))])
        f.write('\n')
        writer.writerow(SUMMARY_COLUMNS)
        for s in summary:
            writer.writerow([repr(float(s.train_ratio)), s.k, s.method,
                             s.wins, s.seeds, repr(float(s.win_rate)),
                             repr(float(s.mean_rel_improvement)),
                             _flag(s.monotone)])


def read_compare(path):
    with open(path, newline='') as f:
        lines = f.read().split('\n\n', 1)
    if len(lines) != 2:
        raise ValueError('%s is not a comparison report' % (path,))
    table = list(csv.reader(lines[0].splitlines()))
    summary_table = list(csv.reader(lines[1].splitlines()))
    if table[0] != ROW_COLUMNS or summary_table[0] != SUMMARY_COLUMNS:
        raise ValueError('%s is not a comparison report' % (path,))
    rows = [CompareRow(float(r[0]), r[1], int(r[2]), int(r[3]), float(r[4]),
                       float(r[5])) for r in table[1:]]
    summary = [SummaryRow(float(s[0]), int(s[1]), s[2], int(s[3]), int(s[4]),
                          float(s[5]), float(s[6]),
                          None if s[7] == '' else s[7] == '1')
               for s in summary_table[1:]]
    return rows, summary
