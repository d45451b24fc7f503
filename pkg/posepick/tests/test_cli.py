import os

import numpy as np
from testtools import ExpectedException
from testtools.assertions import assert_that
from testtools.matchers import (
    Equals, FileExists, HasLength, MatchesRegex, MatchesStructure, StartsWith)

from posepick.candidates import PerturbConfig, generate_pool, read_pool
from posepick.cli import main
from posepick.config import RunConfig
from posepick.pipeline import read_compare
from posepick.poses import write_poses
from posepick.render import ToyScene, toy_trajectory
from posepick.scoring import (
    ScoringConfig, fuse_pool, read_manifest, select_top_k, write_scores)
from posepick.tests.helpers import (
    captured_lines, random_poses, read_text, write_text)

SMALL = ['--toy.n_train', '8', '--perturb.m_per_pose', '2', '--k', '4',
         '--scoring.k_neighbors', '4', '--eval.descriptor_grid', '8,8']


def train_file(tmp_path, n=4):
    path = str(tmp_path / 'train.txt')
    write_poses(path, random_poses(np.random.default_rng(0), n))
    return path


def scores_file(tmp_path, n=12):
    pool = generate_pool(random_poses(np.random.default_rng(1), n // 2),
                         PerturbConfig(m_per_pose=2))
    rng = np.random.default_rng(2)
    scores = fuse_pool(pool, rng.uniform(size=n), rng.uniform(size=n),
                       rng.uniform(size=n), ScoringConfig())
    manifest = select_top_k(scores, 0, {'seed': 0})
    path = str(tmp_path / 'scores.csv')
    write_scores(path, manifest.ranked, manifest.provenance)
    return path


def run_files(run_dir):
    files = {}
    for root, _, names in os.walk(run_dir):
        for name in names:
            path = os.path.join(root, name)
            with open(path, 'rb') as f:
                files[os.path.relpath(path, run_dir)] = f.read()
    return files


class TestGenCandidates(object):
    def test_pool(self, tmp_path, capfd):
        out = str(tmp_path / 'pool.txt')
        code = main(['gen-candidates', '--train', train_file(tmp_path),
                     '--out', out, '--perturb.m_per_pose', '3'])

        assert_that(code, Equals(0))
        out_lines, _ = captured_lines(capfd)
        assert_that(out_lines, Equals(['N=4 M=3 pool=12']))
        assert_that(read_pool(out), HasLength(12))

    def test_deterministic(self, tmp_path):
        """ The same seed writes the same pool, byte for byte. """
        train = train_file(tmp_path)
        first = str(tmp_path / 'a.txt')
        second = str(tmp_path / 'b.txt')
        main(['gen-candidates', '--train', train, '--out', first,
              '--run.seed', '4'])
        main(['gen-candidates', '--train', train, '--out', second,
              '--run.seed', '4'])
        assert_that(read_text(second), Equals(read_text(first)))

    def test_config_file(self, tmp_path, capfd):
        """ Flags override the config file. """
        config = write_text(tmp_path / 'run.cfg', (
            'perturb.m_per_pose = 5\n'
            'perturb.profile = outdoor\n'))
        main(['gen-candidates', '--config', config, '--train',
              train_file(tmp_path), '--out', str(tmp_path / 'pool.txt'),
              '--perturb.m_per_pose', '2'])
        out_lines, _ = captured_lines(capfd)
        assert_that(out_lines, Equals(['N=4 M=2 pool=8']))

    def test_malformed_line(self, tmp_path, capfd):
        """ A malformed pose line is an input error naming the line. """
        path = write_text(tmp_path / 'train.txt', (
            '# id tx ty tz qw qx qy qz\n'
            '0 0 0 0 1 0 0 0\n'
            '1 0 0 0 1 0 0\n'))
        code = main(['gen-candidates', '--train', path, '--out',
                     str(tmp_path / 'pool.txt')])

        assert_that(code, Equals(2))
        _, err_lines = captured_lines(capfd)
        assert_that(err_lines[-1], MatchesRegex(
            r'posepick: error: .*train.txt: line 3: expected 8 fields'))

    def test_missing_train(self, tmp_path, capfd):
        code = main(['gen-candidates', '--out', str(tmp_path / 'pool.txt')])

        assert_that(code, Equals(2))
        _, err_lines = captured_lines(capfd)
        assert_that(err_lines[-1:], Equals([
            'posepick: error: Config key "paths.train" is required to '
            'determine the input files']))

    def test_unknown_config_key(self, tmp_path, capfd):
        config = write_text(tmp_path / 'run.cfg', 'perturb.m = 5\n')
        code = main(['gen-candidates', '--config', config, '--train',
                     train_file(tmp_path), '--out',
                     str(tmp_path / 'pool.txt')])

        assert_that(code, Equals(2))
        _, err_lines = captured_lines(capfd)
        assert_that(err_lines[-1], MatchesRegex(
            r'.*run.cfg: line 1: unknown config key "perturb.m"'))

    def test_bad_value(self, tmp_path, capfd):
        code = main(['gen-candidates', '--train', train_file(tmp_path),
                     '--out', str(tmp_path / 'pool.txt'),
                     '--perturb.m_per_pose', 'many'])

        assert_that(code, Equals(2))
        _, err_lines = captured_lines(capfd)
        assert_that(err_lines[-1:], Equals([
            'posepick: error: Config key "perturb.m_per_pose" must be an '
            'integer, got "many"']))


class TestSelect(object):
    def test_budgets(self, tmp_path, capfd):
        """ K = 0 selects nothing and K = pool size selects everything. """
        scores = scores_file(tmp_path)
        empty = str(tmp_path / 'empty.csv')
        full = str(tmp_path / 'full.csv')

        assert_that(main(['select', '--scores', scores, '--out', empty,
                          '--k', '0']), Equals(0))
        assert_that(main(['select', '--scores', scores, '--out', full,
                          '--k', '12']), Equals(0))

        out_lines, _ = captured_lines(capfd)
        assert_that(out_lines, Equals(['selected 0 of 12 candidates',
                                       'selected 12 of 12 candidates']))
        assert_that(read_manifest(empty).selected, HasLength(0))
        assert_that(read_manifest(full), MatchesStructure.byEquality(k=12))

    def test_budget_too_large(self, tmp_path, capfd):
        code = main(['select', '--scores', scores_file(tmp_path), '--out',
                     str(tmp_path / 'manifest.csv'), '--k', '13'])

        assert_that(code, Equals(2))
        _, err_lines = captured_lines(capfd)
        assert_that(err_lines[-1:], Equals([
            'posepick: error: select: K=13 must lie between 0 and the pool '
            'size 12']))

    def test_missing_scores(self, tmp_path, capfd):
        code = main(['select', '--scores', str(tmp_path / 'nope.csv'),
                     '--out', str(tmp_path / 'manifest.csv')])

        assert_that(code, Equals(2))
        _, err_lines = captured_lines(capfd)
        assert_that(err_lines[-1], MatchesRegex(
            r'posepick: error: score file .*nope.csv does not exist'))


class TestRenderToy(object):
    def test_trajectory(self, tmp_path, capfd):
        out_dir = str(tmp_path / 'views')
        code = main(['render-toy', '--trajectory', '3', '--out-dir', out_dir])

        assert_that(code, Equals(0))
        assert_that(sorted(os.listdir(out_dir)), Equals(sorted(
            ['train.txt'] + ['%d_%s.png' % (i, s) for i in range(3)
                             for s in 'cpma'])))
        out_lines, _ = captured_lines(capfd)
        assert_that(out_lines, Equals(
            ['rendered 3 view triplets into %s' % (out_dir,)]))

    def test_output_is_a_file(self, tmp_path, capfd):
        """ Failures that are not input errors exit with 1. """
        out_dir = write_text(tmp_path / 'views', '')
        code = main(['render-toy', '--trajectory', '2', '--out-dir',
                     out_dir])

        assert_that(code, Equals(1))
        _, err_lines = captured_lines(capfd)
        assert_that(err_lines[-1], StartsWith('posepick: error: '))


class TestStages(object):
    def test_chain(self, tmp_path, capfd):
        """
        Candidates rendered by render-toy, then scored, selected and
        evaluated stage by stage.
        """
        scene = ToyScene.from_config(RunConfig())
        train = str(tmp_path / 'train.txt')
        write_poses(train, toy_trajectory(scene, 6))
        pool = str(tmp_path / 'pool.txt')
        test = str(tmp_path / 'test.txt')
        views = str(tmp_path / 'views')
        scores = str(tmp_path / 'scores.csv')
        errors = str(tmp_path / 'errors.txt')
        manifest = str(tmp_path / 'manifest.csv')
        report = str(tmp_path / 'report.csv')
        common = ['--train', train, '--scoring.k_neighbors', '4',
                  '--eval.descriptor_grid', '8,8']

        assert_that(main(['gen-candidates', '--out', pool,
                          '--perturb.m_per_pose', '2'] + common), Equals(0))
        assert_that(main(['gen-candidates', '--out', test, '--run.seed', '9',
                          '--perturb.m_per_pose', '1'] + common), Equals(0))
        assert_that(main(['render-toy', '--poses', pool, '--out-dir', views]),
                    Equals(0))
        assert_that(main(['score', '--pool', pool, '--out', scores,
                          '--errors-out', errors, '--views', views] + common),
                    Equals(0))
        assert_that(main(['select', '--scores', scores, '--out', manifest,
                          '--k', '3']), Equals(0))
        assert_that(main(['eval-proxy', '--pool', pool, '--manifest',
                          manifest, '--test', test, '--views', views] +
                         common + ['--out', report]), Equals(0))

        out_lines, _ = captured_lines(capfd)
        assert_that(out_lines[-2],
                    Equals('method,seed,K,median_t_cm,median_r_deg'))
        assert_that(out_lines[-1], StartsWith('value,0,3,'))
        assert_that(errors, FileExists())
        assert_that(read_manifest(manifest).selected, HasLength(3))

    def test_eval_manifest_needs_pool(self, tmp_path, capfd):
        code = main(['eval-proxy', '--manifest', 'm.csv', '--out',
                     str(tmp_path / 'report.csv')])

        assert_that(code, Equals(2))
        _, err_lines = captured_lines(capfd)
        assert_that(err_lines[-1:], Equals([
            'posepick: error: --manifest needs the --pool it was selected '
            'from']))


class TestCompare(object):
    def test_small_train_ratio(self, tmp_path):
        """
        A training ratio keeping fewer poses than the default difficulty
        neighborhood still runs, scoring over the poses that are left.
        """
        out = str(tmp_path / 'compare.csv')
        code = main(['compare', '--out', out, '--toy.n_train', '32',
                     '--compare.train_ratios', '0.25,1.0',
                     '--compare.seeds', '0', '--compare.budgets', 'N',
                     '--perturb.m_per_pose', '2',
                     '--eval.descriptor_grid', '8,8'])

        assert_that(code, Equals(0))
        rows, _ = read_compare(out)
        assert_that(sorted(set((r.train_ratio, r.k) for r in rows)),
                    Equals([(0.25, 8), (1.0, 32)]))


class TestPipeline(object):
    def test_run(self, tmp_path, capfd):
        code = main(['pipeline', '--run-dir', str(tmp_path / 'run')] + SMALL)

        assert_that(code, Equals(0))
        out_lines, _ = captured_lines(capfd)
        assert_that(out_lines[0], Equals('N=8 pool=16 selected=4'))
        assert_that(out_lines[1], StartsWith('value,0,4,'))

    def test_workers_do_not_change_outputs(self, tmp_path):
        """ Runs with 1 and 4 workers write identical files. """
        one = str(tmp_path / 'one')
        four = str(tmp_path / 'four')
        assert_that(main(['pipeline', '--run-dir', one, '--run.workers', '1']
                         + SMALL), Equals(0))
        assert_that(main(['pipeline', '--run-dir', four, '--run.workers', '4']
                         + SMALL), Equals(0))

        assert_that(run_files(four), Equals(run_files(one)))

    def test_stage_failure(self, tmp_path, capfd):
        code = main(['pipeline', '--run-dir', str(tmp_path / 'run')] +
                    SMALL + ['--k', '17'])

        assert_that(code, Equals(2))
        _, err_lines = captured_lines(capfd)
        assert_that(err_lines[-1], Equals(
            'posepick: error: gen-candidates: K=17 exceeds the pool size 16'))


def test_usage(capfd):
    """ A missing command is a usage error. """
    with ExpectedException(SystemExit, MatchesStructure(code=Equals(2))):
        main([])
    _, err_lines = captured_lines(capfd)
    assert_that(err_lines[0], StartsWith('usage: posepick'))
