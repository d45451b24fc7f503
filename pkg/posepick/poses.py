"""
Camera poses, the hybrid translation/rotation distance used to compare them
and the pose list text format shared by every stage.

A pose maps camera coordinates to world coordinates. Quaternions are stored
scalar-first, ``(w, x, y, z)``, normalized and with a non-negative ``w``.
"""
import logging
from collections import namedtuple

import numpy as np
from scipy.spatial.transform import Rotation

logger = logging.getLogger(__name__)

MIN_ID = 0
MAX_ID = (1 << 63) - 1

UNIT_TOLERANCE = 1e-12


def _to_id(arg):
    _id = int(arg)
    if _id < MIN_ID or _id > MAX_ID:
        raise ValueError(
            'pose ids must be in range %d-%d' % (MIN_ID, MAX_ID))
    return _id


def _canonical_quaternion(q):
    q = np.array(q, dtype=float)
    if q.shape != (4,):
        raise ValueError('quaternion must have 4 components (w, x, y, z)')
    norm = np.linalg.norm(q)
    if not np.isfinite(norm) or norm == 0.0:
        raise ValueError('quaternion must have a finite, non-zero norm')
    # Unit quaternions are kept bit for bit so that parsing a written pose
    # gives back the same values.
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        q /= norm
    # q and -q are the same rotation: pick the one whose first non-zero
    # component is positive so that serialization is deterministic.
    for component in q:
        if component != 0.0:
            if component < 0.0:
                q = -q
            break
    return q


def _frozen(array):
    array.flags.writeable = False
    return array


class Pose(object):
    """
    A 6-DoF camera pose with an integer identifier.

    :param pose_id: non-negative integer identifier
    :param t: translation 3-vector in meters
    :param q: rotation quaternion ``(w, x, y, z)``, normalized on construction
    """
    __slots__ = ('id', 't', 'q')

    def __init__(self, pose_id, t, q):
        t = np.array(t, dtype=float)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise ValueError('translation must be 3 finite values')
        self.id = _to_id(pose_id)
        self.t = _frozen(t)
        self.q = _frozen(_canonical_quaternion(q))

    @classmethod
    def from_rotation(cls, pose_id, t, rotation):
        """ Build a pose from a :class:`scipy.spatial.transform.Rotation`. """
        x, y, z, w = rotation.as_quat()
        return cls(pose_id, t, (w, x, y, z))

    @classmethod
    def from_matrix(cls, pose_id, t, matrix):
        return cls.from_rotation(pose_id, t, Rotation.from_matrix(matrix))

    @classmethod
    def from_fields(cls, fields):
        """
        Initialise a pose from the fields of one pose list line:
        ``id tx ty tz qw qx qy qz``.
        """
        if len(fields) != 8:
            raise ValueError(
                'expected 8 fields "id tx ty tz qw qx qy qz", got %d'
                % (len(fields),))
        try:
            pose_id = _to_id(fields[0])
        except ValueError as e:
            raise ValueError('invalid pose id "%s": %s' % (fields[0], e))
        try:
            values = [float(f) for f in fields[1:]]
        except ValueError:
            raise ValueError('non-numeric pose field in "%s"'
                             % (' '.join(fields[1:]),))
        try:
            t = values[:3]
            q = values[3:]
            return cls(pose_id, t, q)
        except ValueError as e:
            raise ValueError('invalid pose %d: %s' % (pose_id, e))

    def to_fields(self):
        return ([str(self.id)] +
                [repr(float(v)) for v in self.t] +
                [repr(float(v)) for v in self.q])

    def rotation(self):
        w, x, y, z = self.q
        return Rotation.from_quat([x, y, z, w])

    def matrix(self):
        """ The 3x3 camera-to-world rotation matrix. """
        return self.rotation().as_matrix()

    def with_id(self, pose_id):
        return Pose(pose_id, self.t, self.q)

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return (self.id == other.id and
                np.array_equal(self.t, other.t) and
                np.array_equal(self.q, other.q))

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self):
        return hash((self.id, self.t.tobytes(), self.q.tobytes()))

    def __repr__(self):
        return 'Pose(id=%d, t=%r, q=%r)' % (
            self.id, self.t.tolist(), self.q.tolist())


class DatasetStats(namedtuple('DatasetStats', ['sigma_t', 'n_train'])):
    """
    Scene-level statistics of a training set: ``sigma_t`` is the scalar
    translation standard deviation in meters.
    """
    __slots__ = ()


class MetricConfig(object):
    """
    Configuration of :func:`hybrid_distance`.

    :param lam: weight of the rotation term, per radian (``metric.lambda``)
    """

    def __init__(self, lam=1.0):
        lam = float(lam)
        if not lam >= 0.0:
            raise ValueError('metric.lambda must be >= 0, got %r' % (lam,))
        self.lam = lam

    @classmethod
    def from_config(cls, config):
        return cls(lam=config.get_float('metric.lambda'))


def rotation_angles(qa, qb):
    """
    Element-wise geodesic angle in radians between two arrays of unit
    quaternions with shape ``(..., 4)``.

    The angle equals ``arccos((tr(Ra^T Rb) - 1) / 2)``. It is evaluated from
    the chord lengths ``|qa - qb|`` and ``|qa + qb|`` which keeps full
    precision near 0 and pi, gives exactly 0 for identical inputs and does
    not depend on the quaternion signs.
    """
    qa = np.asarray(qa, dtype=float)
    qb = np.asarray(qb, dtype=float)
    minus = np.linalg.norm(qa - qb, axis=-1)
    plus = np.linalg.norm(qa + qb, axis=-1)
    return 4.0 * np.arctan2(np.minimum(minus, plus), np.maximum(minus, plus))


def rotation_distance(q_i, q_j):
    """ Geodesic angle in radians, in [0, pi], between two rotations. """
    return float(rotation_angles(q_i, q_j))


def hybrid_distance(p_i, p_j, stats, cfg):
    """
    Scene-normalized pose distance:
    ``|t_i - t_j| / sigma_t + lambda * angle(R_i, R_j)``.
    """
    if not stats.sigma_t > 0.0:
        raise ValueError('sigma_t must be > 0, got %r' % (stats.sigma_t,))
    return float(np.linalg.norm(p_i.t - p_j.t) / stats.sigma_t +
                 cfg.lam * rotation_distance(p_i.q, p_j.q))


def pose_arrays(poses):
    """ Stack poses into ``(ids, translations, quaternions)`` arrays. """
    poses = list(poses)
    ids = np.array([p.id for p in poses], dtype=np.int64)
    ts = np.array([p.t for p in poses], dtype=float).reshape(-1, 3)
    qs = np.array([p.q for p in poses], dtype=float).reshape(-1, 4)
    return ids, ts, qs


def pairwise_distances(poses_a, poses_b, stats, cfg):
    """
    Matrix of :func:`hybrid_distance` values with shape
    ``(len(poses_a), len(poses_b))``.
    """
    if not stats.sigma_t > 0.0:
        raise ValueError('sigma_t must be > 0, got %r' % (stats.sigma_t,))
    _, ta, qa = pose_arrays(poses_a)
    _, tb, qb = pose_arrays(poses_b)
    trans = np.linalg.norm(ta[:, None, :] - tb[None, :, :], axis=-1)
    rot = rotation_angles(qa[:, None, :], qb[None, :, :])
    return trans / stats.sigma_t + cfg.lam * rot


def compute_stats(train):
    """
    Compute :class:`DatasetStats` for a training set. ``sigma_t`` is the
    population standard deviation of the translations about their centroid,
    i.e. the root-mean-square distance to the centroid.
    """
    train = list(train)
    if len(train) < 2:
        raise ValueError(
            'at least 2 training poses are required, got %d' % (len(train),))
    _, ts, _ = pose_arrays(train)
    deviations = ts - ts.mean(axis=0)
    sigma_t = float(np.sqrt(np.mean(np.sum(deviations ** 2, axis=1))))
    if not sigma_t > 0.0:
        raise ValueError('all training translations are identical, so the '
                         'translation standard deviation is 0')
    return DatasetStats(sigma_t=sigma_t, n_train=len(train))


class PoseFileError(ValueError):
    """ A pose list file could not be parsed. """

    def __init__(self, path, line_no, message):
        self.path = path
        self.line_no = line_no
        super(PoseFileError, self).__init__(
            '%s: line %d: %s' % (path, line_no, message))


def iter_pose_records(lines, path='<poses>', extra_columns=0):
    """
    Parse pose list lines, yielding ``(line_no, pose, extras)`` tuples where
    ``extras`` holds the values of any trailing integer columns. Comment
    lines (``#``) and blank lines are skipped; ids must be unique.
    """
    seen = {}
    for line_no, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        fields = line.split()
        n_fields = 8 + extra_columns
        if len(fields) != n_fields:
            raise PoseFileError(
                path, line_no, 'expected %d fields, got %d'
                % (n_fields, len(fields)))
        try:
            pose = Pose.from_fields(fields[:8])
            extras = tuple(_to_id(f) for f in fields[8:])
        except ValueError as e:
            raise PoseFileError(path, line_no, str(e))
        if pose.id in seen:
            raise PoseFileError(
                path, line_no, 'duplicate pose id %d (first seen on line %d)'
                % (pose.id, seen[pose.id]))
        seen[pose.id] = line_no
        yield line_no, pose, extras


def read_poses(path, extra_columns=0):
    """ Read a pose list file. Poses are returned sorted by id. """
    with open(path) as f:
        records = list(iter_pose_records(f, path, extra_columns))
    poses = sorted((pose for _, pose, _ in records), key=lambda p: p.id)
    logger.debug('read %d poses from %s', len(poses), path)
    return poses


def format_poses(poses, extra=None):
    """
    Render poses as pose list lines. ``extra`` optionally maps a pose to a
    list of additional column values.
    """
    lines = []
    for pose in poses:
        fields = pose.to_fields()
        if extra is not None:
            fields.extend(str(v) for v in extra(pose))
        lines.append(' '.join(fields) + '\n')
    return lines


def write_poses(path, poses, header=None):
    with open(path, 'w') as f:
        f.write('# id tx ty tz qw qx qy qz\n' if header is None else header)
        f.writelines(format_poses(poses))
