"""
Retrieval proxy for a pose regressor: a view is described by a small
grayscale thumbnail and its pose is predicted as the pose of the nearest
database view. The proxy supplies leave-one-out zero-shot errors for
difficulty scoring and measures how much a set of synthetic views improves
localization of held-out test views.
"""
import csv
import logging
from functools import lru_cache, partial

import numpy as np

from posepick._workers import ordered_map
from posepick.metrics import to_gray
from posepick.poses import rotation_distance
from posepick.scoring import TrainError

logger = logging.getLogger(__name__)

DEFAULT_GRID = (16, 16)


@lru_cache(maxsize=32)
def _area_weights(n_in, n_out):
    """
    ``(n_out, n_in)`` matrix averaging ``n_in`` pixels into ``n_out`` cells
    of equal width, pixels weighted by their overlap with each cell.
    """
    scale = n_in / float(n_out)
    lo = np.arange(n_out, dtype=float)[:, None] * scale
    hi = lo + scale
    edges = np.arange(n_in + 1, dtype=float)
    overlap = (np.minimum(hi, edges[None, 1:]) -
               np.maximum(lo, edges[None, :-1]))
    weights = np.clip(overlap, 0.0, None) / scale
    weights.flags.writeable = False
    return weights


def _check_grid(grid):
    rows, cols = (int(v) for v in grid)
    if rows < 1 or cols < 1:
        raise ValueError('descriptor grid must be at least 1x1, got %dx%d'
                         % (rows, cols))
    return rows, cols


def descriptor(img, grid=DEFAULT_GRID):
    """
    Area-averaged grayscale thumbnail of ``img`` with ``grid = (rows,
    cols)`` cells, flattened row-major.
    """
    rows, cols = _check_grid(grid)
    gray = to_gray(img)
    return (_area_weights(gray.shape[0], rows) @ gray @
            _area_weights(gray.shape[1], cols).T).ravel()


class PoseDatabase(object):
    """
    Descriptors of reference views and their poses.

    :param descriptors: array of shape ``(n, d)``
    :param poses: the ``n`` poses, in the same order
    """

    def __init__(self, descriptors, poses):
        poses = list(poses)
        if not poses:
            raise ValueError('the pose database is empty')
        descriptors = np.asarray(descriptors, dtype=float)
        if descriptors.ndim != 2 or descriptors.shape[0] != len(poses):
            raise ValueError('expected %d descriptors, got an array of shape '
                             '%r' % (len(poses), descriptors.shape))
        if not np.all(np.isfinite(descriptors)):
            raise ValueError('descriptors must be finite')
        self.descriptors = descriptors
        self.poses = poses
        self.ids = np.array([p.id for p in poses], dtype=np.int64)

    @classmethod
    def from_entries(cls, entries):
        """ Build a database from ``(descriptor, pose)`` pairs. """
        entries = list(entries)
        if not entries:
            raise ValueError('the pose database is empty')
        return cls(np.array([d for d, _ in entries]), [p for _, p in entries])

    def __len__(self):
        return len(self.poses)

    def extend(self, descriptors, poses):
        """ A new database holding these entries followed by the given. """
        poses = list(poses)
        if not poses:
            return self
        return PoseDatabase(
            np.concatenate([self.descriptors,
                            np.asarray(descriptors, dtype=float)]),
            self.poses + poses)

    def nearest(self, query, exclude=None):
        """
        Index of the entry closest to ``query`` in squared Euclidean
        distance. Ties go to the lowest pose id, then to the earlier entry.

        :param exclude: index of an entry to leave out
        """
        d = np.sum((self.descriptors - np.asarray(query, dtype=float)) ** 2,
                   axis=1)
        if exclude is not None:
            d[exclude] = np.inf
        return int(np.lexsort((self.ids, d))[0])

    def predict(self, query, exclude=None):
        return self.poses[self.nearest(query, exclude)]


def predict_pose(query, database):
    """
    Pose of the database view nearest to ``query``.

    :param database: a :class:`PoseDatabase` or a list of
        ``(descriptor, pose)`` pairs
    """
    if not isinstance(database, PoseDatabase):
        database = PoseDatabase.from_entries(database)
    return database.predict(query)


def pose_errors(predicted, truth):
    """ Translation error in meters and rotation error in radians. """
    return (float(np.linalg.norm(predicted.t - truth.t)),
            rotation_distance(predicted.q, truth.q))


def describe_views(images, grid=DEFAULT_GRID, workers=1):
    """ Descriptors of many images as an ``(n, d)`` array. """
    images = list(images)
    if not images:
        return np.zeros((0, np.prod(_check_grid(grid))))
    return np.array(ordered_map(partial(descriptor, grid=grid), images,
                                workers))


def leave_one_out(poses, descriptors):
    """
    Zero-shot errors from precomputed descriptors: every pose is predicted
    from the database of all other views.
    """
    poses = list(poses)
    if len(poses) < 2:
        raise ValueError('leave-one-out errors need at least 2 training '
                         'views, got %d' % (len(poses),))
    database = PoseDatabase(descriptors, poses)
    errors = []
    for i, pose in enumerate(poses):
        e_t, e_r = pose_errors(
            database.predict(database.descriptors[i], exclude=i), pose)
        errors.append(TrainError(pose.id, e_t, e_r))
    logger.info('computed leave-one-out errors for %d training views',
                len(poses))
    return errors


def leave_one_out_errors(train_views, grid=DEFAULT_GRID, workers=1):
    """
    Leave-one-out zero-shot errors of ``(pose, image)`` training views.
    """
    train_views = list(train_views)
    if len(train_views) < 2:
        raise ValueError('leave-one-out errors need at least 2 training '
                         'views, got %d' % (len(train_views),))
    descriptors = describe_views((img for _, img in train_views), grid,
                                 workers)
    return leave_one_out([pose for pose, _ in train_views], descriptors)


class EvalReport(object):
    """
    Localization errors of test queries against an (augmented) database.

    :param method: label of the augmentation (``none``, ``random``,
        ``value`` ...)
    :param seed: run seed
    :param k: number of synthetic views added
    :param query_ids: ids of the test poses
    :param t_errors: translation errors, meters
    :param r_errors: rotation errors, degrees
    """

    def __init__(self, method, seed, k, query_ids, t_errors, r_errors):
        self.method = method
        self.seed = int(seed)
        self.k = int(k)
        self.query_ids = [int(i) for i in query_ids]
        self.t_errors = [float(e) for e in t_errors]
        self.r_errors = [float(e) for e in r_errors]
        if not self.query_ids:
            raise ValueError('an evaluation report needs at least one query')
        if not len(self.query_ids) == len(self.t_errors) == len(self.r_errors):
            raise ValueError('per-query error lists differ in length')
        if min(self.t_errors) < 0.0 or min(self.r_errors) < 0.0:
            raise ValueError('errors must be >= 0')

    @property
    def median_t_error(self):
        """ Median translation error, meters. """
        return float(np.median(self.t_errors))

    @property
    def median_r_error(self):
        """ Median rotation error, degrees. """
        return float(np.median(self.r_errors))

    def summary_row(self):
        return [self.method, str(self.seed), str(self.k),
                repr(100.0 * self.median_t_error), repr(self.median_r_error)]

    def summary_line(self):
        return ','.join(self.summary_row())


SUMMARY_COLUMNS = ['method', 'seed', 'K', 'median_t_cm', 'median_r_deg']
QUERY_COLUMNS = ['query_id', 't_error_m', 'r_error_deg']


def evaluate_database(database, test_poses, test_descriptors, method='none',
                      seed=0, k=0):
    """ Predict every test pose from ``database`` and collect the errors. """
    test_poses = list(test_poses)
    if not test_poses:
        raise ValueError('evaluation needs at least one test view')
    t_errors = []
    r_errors = []
    for pose, query in zip(test_poses, test_descriptors):
        e_t, e_r = pose_errors(database.predict(query), pose)
        t_errors.append(e_t)
        r_errors.append(np.degrees(e_r))
    report = EvalReport(method, seed, k, [p.id for p in test_poses],
                        t_errors, r_errors)
    logger.debug('%s: K=%d median errors %.2f cm / %.2f deg', method, k,
                 100.0 * report.median_t_error, report.median_r_error)
    return report


def evaluate_augmentation(train, synthetic, test, grid=DEFAULT_GRID,
                          method='none', seed=0, workers=1):
    """
    Localize the test views against the training views augmented with the
    synthetic views. Every argument is a list of ``(pose, image)`` pairs;
    ``synthetic`` may be empty.
    """
    train = list(train)
    synthetic = list(synthetic)
    test = list(test)
    if not train or not test:
        raise ValueError('evaluation needs non-empty training and test sets')
    database = PoseDatabase(
        describe_views((img for _, img in train + synthetic), grid, workers),
        [pose for pose, _ in train + synthetic])
    return evaluate_database(
        database, [pose for pose, _ in test],
        describe_views((img for _, img in test), grid, workers),
        method, seed, len(synthetic))


def write_report(path, report):
    """
    Write the one-line summary table, a blank line and the per-query table.
    """
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerow(report.summary_row())
        f.write('\n')
        writer.writerow(QUERY_COLUMNS)
        for row in zip(report.query_ids, report.t_errors, report.r_errors):
            writer.writerow([str(row[0]), repr(row[1]), repr(row[2])])


def read_report(path):
    with open(path, newline='') as f:
        rows = [row for row in csv.reader(f) if row]
    if (len(rows) < 3 or rows[0] != SUMMARY_COLUMNS or
            rows[2] != QUERY_COLUMNS):
        raise ValueError('%s is not an evaluation report' % (path,))
    method, seed, k = rows[1][:3]
    queries = rows[3:]
    return EvalReport(method, int(seed), int(k),
                      [int(r[0]) for r in queries],
                      [float(r[1]) for r in queries],
                      [float(r[2]) for r in queries])
