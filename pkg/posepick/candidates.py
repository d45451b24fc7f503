"""
Trajectory-constrained candidate generation: every training pose spawns M
candidates by bounded uniform perturbation of its translation and rotation.
"""
import hashlib
import logging
from collections import namedtuple

import numpy as np
from scipy.spatial.transform import Rotation

from posepick.poses import Pose, format_poses, iter_pose_records

logger = logging.getLogger(__name__)

# (delta_t meters, delta_r degrees)
PROFILES = {
    'indoor': (0.20, 10.0),
    'outdoor': (1.50, 4.0),
}


def derive_seed(seed, label):
    """
    Derive an independent 64-bit seed for a named purpose (e.g. the test
    set or the random baseline) from a run seed.
    """
    digest = hashlib.sha256(('%d:%s' % (seed, label)).encode('ascii'))
    return int.from_bytes(digest.digest()[:8], 'big')


def parent_rng(seed, index):
    """
    The generator used for the training pose at ``index`` (poses sorted by
    id): PCG64 seeded with ``SeedSequence([seed, index])``.
    """
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([seed, index])))


class PerturbConfig(object):
    """
    Perturbation ranges for candidate generation.

    :param delta_t: max translation offset per axis in meters
    :param delta_r: max rotation offset per axis in degrees
    :param m_per_pose: number of candidates per training pose (M)
    :param seed: 64-bit seed of the candidate RNG streams
    :param profile: ``indoor`` or ``outdoor``, supplies the defaults for
        ``delta_t`` and ``delta_r``
    """

    def __init__(self, delta_t=None, delta_r=None, m_per_pose=32, seed=0,
                 profile='indoor'):
        if profile not in PROFILES:
            raise ValueError('unknown perturbation profile "%s", expected one '
                             'of %s' % (profile, ', '.join(sorted(PROFILES))))
        default_t, default_r = PROFILES[profile]
        self.profile = profile
        self.delta_t = float(default_t if delta_t is None else delta_t)
        self.delta_r = float(default_r if delta_r is None else delta_r)
        self.m_per_pose = int(m_per_pose)
        self.seed = int(seed)

        if not self.delta_t > 0.0:
            raise ValueError('delta_t must be > 0, got %r' % (self.delta_t,))
        if not self.delta_r > 0.0:
            raise ValueError('delta_r must be > 0, got %r' % (self.delta_r,))
        if self.m_per_pose < 1:
            raise ValueError(
                'm_per_pose must be >= 1, got %d' % (self.m_per_pose,))
        if self.seed < 0:
            raise ValueError('seed must be >= 0, got %d' % (self.seed,))

    @classmethod
    def from_config(cls, config, seed=None):
        return cls(
            delta_t=config.get_float('perturb.delta_t', required=False),
            delta_r=config.get_float('perturb.delta_r', required=False),
            m_per_pose=config.get_int('perturb.m_per_pose'),
            seed=config.get_int('run.seed') if seed is None else seed,
            profile=config.get('perturb.profile', required=True))

    def with_seed(self, seed, m_per_pose=None):
        return PerturbConfig(
            self.delta_t, self.delta_r,
            self.m_per_pose if m_per_pose is None else m_per_pose,
            seed, self.profile)

    @property
    def max_rotation_offset(self):
        """ Upper bound of the geodesic rotation offset, in radians. """
        return np.sqrt(3.0) * np.radians(self.delta_r)


class CandidatePose(namedtuple('CandidatePose', ['pose', 'parent_id'])):
    """ A perturbed pose and the id of the training pose it came from. """
    __slots__ = ()

    @property
    def id(self):
        return self.pose.id


def perturb_pose(pose, offset_t, offset_r, pose_id):
    """
    Offset ``pose`` by ``offset_t`` meters (world axes) and by the rotation
    vector ``offset_r`` (degrees, camera axes).

    The three angle offsets form one rotation vector instead of three
    successive Euler turns. The geodesic offset is then exactly
    ``|offset_r|``, never more than ``sqrt(3) * delta_r``; chaining the
    turns one after another can overshoot that bound at second order.
    """
    delta = Rotation.from_rotvec(np.radians(offset_r))
    return Pose.from_rotation(
        pose_id, pose.t + np.asarray(offset_t, dtype=float),
        pose.rotation() * delta)


def generate_pool(train, cfg):
    """
    Generate ``cfg.m_per_pose`` candidates for every training pose.

    Training poses are processed in id order; the candidates of the pose at
    index ``i`` get ids ``i * M`` to ``i * M + M - 1`` and are drawn from
    their own RNG stream, so the pool does not depend on how the work is
    split.
    """
    train = sorted(train, key=lambda p: p.id)
    if not train:
        raise ValueError('cannot generate candidates from an empty training '
                         'set')
    m = cfg.m_per_pose
    pool = []
    for index, parent in enumerate(train):
        rng = parent_rng(cfg.seed, index)
        offsets_t = rng.uniform(-cfg.delta_t, cfg.delta_t, size=(m, 3))
        offsets_r = rng.uniform(-cfg.delta_r, cfg.delta_r, size=(m, 3))
        for j in range(m):
            pose = perturb_pose(parent, offsets_t[j], offsets_r[j],
                                index * m + j)
            pool.append(CandidatePose(pose, parent.id))

    logger.info('generated %d candidates from %d training poses (M=%d, '
                'delta_t=%g m, delta_r=%g deg)', len(pool), len(train), m,
                cfg.delta_t, cfg.delta_r)
    return pool


def read_pool(path):
    """ Read a candidate pool file, sorted by candidate id. """
    with open(path) as f:
        records = list(iter_pose_records(f, path, extra_columns=1))
    pool = [CandidatePose(pose, extras[0]) for _, pose, extras in records]
    return sorted(pool, key=lambda c: c.id)


def write_pool(path, pool):
    by_id = dict((c.id, c.parent_id) for c in pool)
    with open(path, 'w') as f:
        f.write('# id tx ty tz qw qx qy qz parent_id\n')
        f.writelines(format_poses(
            (c.pose for c in pool), extra=lambda p: [by_id[p.id]]))
