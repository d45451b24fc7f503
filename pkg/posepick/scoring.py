"""
Value-based ranking of candidate poses.

Every candidate gets three raw scores (localization difficulty, coverage
novelty, rendering observability). Each is quantile-normalized over the
whole pool, the normalized scores are fused multiplicatively into a value
and the K highest-value candidates are selected.
"""
import csv
import logging
from collections import OrderedDict, namedtuple

import numpy as np
from scipy.stats import rankdata

from posepick import metrics
from posepick.metrics import ObservabilityConfig
from posepick.poses import MetricConfig, pairwise_distances

logger = logging.getLogger(__name__)

COMPONENTS = ('diff', 'nov', 'gs')

MIN_BANDWIDTH = 1e-6


class TrainError(namedtuple('TrainError', ['pose_id', 'e_t', 'e_r'])):
    """
    Zero-shot error of a training pose: translation in meters, rotation in
    radians.
    """
    __slots__ = ()


def parse_components(text):
    components = tuple(c.strip() for c in text.replace('+', ',').split(',')
                       if c.strip())
    unknown = set(components) - set(COMPONENTS)
    if unknown or not components:
        raise ValueError('components must be a non-empty subset of %s, got '
                         '"%s"' % (','.join(COMPONENTS), text))
    return tuple(c for c in COMPONENTS if c in components)


class ScoringConfig(object):
    """
    Configuration of the value function.

    :param alpha: exponent of normalized difficulty
    :param beta: exponent of one plus normalized novelty
    :param gamma: exponent of normalized observability
    :param k_neighbors: training poses aggregated for difficulty
    :param bandwidth: ``'median'`` for a per-candidate bandwidth equal to
        the median neighbor distance, or a fixed positive bandwidth
    :param metric: :class:`posepick.poses.MetricConfig`
    :param observability: :class:`posepick.metrics.ObservabilityConfig`
    :param components: the value dimensions that take part in the fusion;
        a left out dimension contributes a factor of 1
    """

    def __init__(self, alpha=1.5, beta=1.0, gamma=2.0, k_neighbors=32,
                 bandwidth='median', metric=None, observability=None,
                 components=COMPONENTS):
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.gamma = float(gamma)
        if min(self.alpha, self.beta, self.gamma) < 0.0:
            raise ValueError('value exponents must be >= 0')
        self.k_neighbors = int(k_neighbors)
        if self.k_neighbors < 1:
            raise ValueError('k_neighbors must be >= 1, got %d'
                             % (self.k_neighbors,))
        if bandwidth != 'median':
            bandwidth = float(bandwidth)
            if not bandwidth > 0.0:
                raise ValueError('bandwidth must be "median" or > 0')
        self.bandwidth = bandwidth
        self.metric = MetricConfig() if metric is None else metric
        self.observability = (ObservabilityConfig() if observability is None
                              else observability)
        if isinstance(components, str):
            components = parse_components(components)
        self.components = tuple(components)

    @classmethod
    def from_config(cls, config):
        return cls(
            alpha=config.get_float('scoring.alpha'),
            beta=config.get_float('scoring.beta'),
            gamma=config.get_float('scoring.gamma'),
            k_neighbors=config.get_int('scoring.k_neighbors'),
            bandwidth=config.get('scoring.bandwidth', required=True),
            metric=MetricConfig.from_config(config),
            observability=ObservabilityConfig.from_config(config),
            components=config.get('scoring.components', required=True))

    def with_components(self, components):
        return ScoringConfig(self.alpha, self.beta, self.gamma,
                             self.k_neighbors, self.bandwidth, self.metric,
                             self.observability, components)

    def with_k_neighbors(self, k_neighbors):
        return ScoringConfig(self.alpha, self.beta, self.gamma, k_neighbors,
                             self.bandwidth, self.metric, self.observability,
                             self.components)

    @property
    def exponents(self):
        """ ``(alpha, beta, gamma)`` with left out components set to 0. """
        return tuple(e if c in self.components else 0.0
                     for c, e in zip(COMPONENTS,
                                     (self.alpha, self.beta, self.gamma)))


SCORE_COLUMNS = ['id', 'parent_id', 'f_diff', 'f_nov', 'f_gs', 'f_diff_n',
                 'f_nov_n', 'f_gs_n', 'value', 'rank', 'selected']


class ValueScore(namedtuple('ValueScore', [
        'candidate_id', 'parent_id', 'f_diff', 'f_nov', 'f_gs', 'f_diff_n',
        'f_nov_n', 'f_gs_n', 'value', 'rank', 'selected'])):
    """
    Raw and normalized scores and the fused value of one candidate. ``rank``
    is None until the pool is ranked by :func:`select_top_k`.
    """
    __slots__ = ()

    def to_row(self):
        return ([str(self.candidate_id), str(self.parent_id)] +
                [repr(float(v)) for v in self[2:9]] +
                ['' if self.rank is None else str(self.rank),
                 '1' if self.selected else '0'])

    @classmethod
    def from_row(cls, row):
        if len(row) != len(SCORE_COLUMNS):
            raise ValueError('expected %d columns, got %d'
                             % (len(SCORE_COLUMNS), len(row)))
        floats = [float(v) for v in row[2:9]]
        return cls(int(row[0]), int(row[1]), *floats,
                   rank=int(row[9]) if row[9] else None,
                   selected=row[10] == '1')


def _pose_of(candidate):
    return getattr(candidate, 'pose', candidate)


def _scalar_errors(train, errors, stats, cfg):
    by_id = dict((e.pose_id, e) for e in errors)
    missing = [p.id for p in train if p.id not in by_id]
    if missing:
        raise ValueError('no zero-shot error for training poses %s'
                         % (', '.join(str(i) for i in missing[:10]),))
    return np.array([by_id[p.id].e_t / stats.sigma_t +
                     cfg.metric.lam * by_id[p.id].e_r for p in train])


def difficulties(candidates, train, errors, stats, cfg, chunk_size=256):
    """
    Raw difficulty of every candidate: the Gaussian-kernel weighted mean of
    the scalarized zero-shot errors ``e_t / sigma_t + lambda * e_r`` of the
    ``k`` nearest training poses under the hybrid distance. Neighbors at
    equal distance are taken in ascending id order.
    """
    train = sorted(train, key=lambda p: p.id)
    k = cfg.k_neighbors
    if k > len(train):
        raise ValueError('k_neighbors=%d exceeds the %d training poses'
                         % (k, len(train)))
    scalar = _scalar_errors(train, errors, stats, cfg)
    poses = [_pose_of(c) for c in candidates]

    result = []
    for start in range(0, len(poses), chunk_size):
        d = pairwise_distances(poses[start:start + chunk_size], train, stats,
                               cfg.metric)
        order = np.argsort(d, axis=1, kind='stable')[:, :k]
        near = np.take_along_axis(d, order, axis=1)
        if cfg.bandwidth == 'median':
            h = np.maximum(np.median(near, axis=1), MIN_BANDWIDTH)
        else:
            h = np.full(len(near), cfg.bandwidth)
        # Shifting by the nearest distance leaves the weight ratios alone
        # and keeps the largest weight at 1.
        w = np.exp(-(near ** 2 - near[:, :1] ** 2) / (2.0 * h[:, None] ** 2))
        result.extend(np.sum(w * scalar[order], axis=1) / np.sum(w, axis=1))
    return [float(v) for v in result]


def difficulty(candidate, train, errors, stats, cfg):
    """ Raw localization difficulty of one candidate. """
    return difficulties([candidate], train, errors, stats, cfg)[0]


def novelties(candidates, train, stats, cfg, chunk_size=256):
    """ Minimum hybrid distance of every candidate to the training poses. """
    if not train:
        raise ValueError('novelty needs a non-empty training set')
    poses = [_pose_of(c) for c in candidates]
    result = []
    for start in range(0, len(poses), chunk_size):
        d = pairwise_distances(poses[start:start + chunk_size], train, stats,
                               cfg.metric)
        result.extend(d.min(axis=1))
    return [float(v) for v in result]


def novelty(candidate, train, stats, cfg):
    """ Raw coverage novelty of one candidate. """
    return novelties([candidate], train, stats, cfg)[0]


def observability(triplet, cfg=None):
    """
    Raw rendering observability of a view triplet: stability times the
    image mean of visibility x normalized gradient x symmetric response.

    :param cfg: :class:`ObservabilityConfig` (or a :class:`ScoringConfig`)
    """
    if cfg is None:
        cfg = metrics.DEFAULT_CONFIG
    cfg = getattr(cfg, 'observability', cfg)
    s = metrics.stability(triplet, cfg)
    g_hat = metrics.normalized_gradient(triplet.central, cfg)
    r = metrics.symmetric_response(triplet.plus, triplet.minus, cfg)
    w = metrics.visibility_mask(triplet.opacity_central, triplet.central, cfg)
    return float(s * np.mean(w * g_hat * r))


def quantile_normalize(raw):
    """
    Map scores onto [0, 1] by rank: ``(average rank - 1) / (n - 1)``, ties
    sharing their average rank. A single score maps to 0.5.
    """
    values = np.asarray(raw, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError('quantile normalization needs at least one score')
    if not np.all(np.isfinite(values)):
        raise ValueError('scores must be finite')
    if values.size == 1:
        return np.array([0.5])
    return (rankdata(values, method='average') - 1.0) / (values.size - 1.0)


def fuse_value(f_diff_n, f_nov_n, f_gs_n, cfg):
    """
    ``f_diff_n ** alpha * (1 + f_nov_n) ** beta * f_gs_n ** gamma``; a zero
    difficulty or observability vetoes the candidate.
    """
    alpha, beta, gamma = cfg.exponents
    return (float(f_diff_n) ** alpha *
            (1.0 + float(f_nov_n)) ** beta *
            float(f_gs_n) ** gamma)


def fuse_pool(pool, f_diff, f_nov, f_gs, cfg):
    """
    Normalize the raw scores over the whole pool and fuse them. Returns
    unranked :class:`ValueScore` records in pool order.
    """
    pool = list(pool)
    if not (len(pool) == len(f_diff) == len(f_nov) == len(f_gs)):
        raise ValueError('raw score lists do not match the pool size %d'
                         % (len(pool),))
    diff_n = quantile_normalize(f_diff)
    nov_n = quantile_normalize(f_nov)
    gs_n = quantile_normalize(f_gs)
    scores = []
    for i, candidate in enumerate(pool):
        scores.append(ValueScore(
            candidate_id=candidate.id,
            parent_id=getattr(candidate, 'parent_id', candidate.id),
            f_diff=float(f_diff[i]), f_nov=float(f_nov[i]),
            f_gs=float(f_gs[i]), f_diff_n=float(diff_n[i]),
            f_nov_n=float(nov_n[i]), f_gs_n=float(gs_n[i]),
            value=fuse_value(diff_n[i], nov_n[i], gs_n[i], cfg),
            rank=None, selected=False))
    return scores


def score_pool(pool, train, errors, f_gs, cfg, stats):
    """
    Score a candidate pool given the observability of every candidate
    (computed from its view triplet) and the zero-shot training errors.
    """
    pool = list(pool)
    logger.info('scoring %d candidates against %d training poses',
                len(pool), len(train))
    f_diff = difficulties(pool, train, errors, stats, cfg)
    f_nov = novelties(pool, train, stats, cfg)
    return fuse_pool(pool, f_diff, f_nov, f_gs, cfg)


class SelectionManifest(object):
    """
    A ranked pool: every score with its 1-based rank, the first ``k``
    flagged as selected, plus provenance (seed, config digest, pool size,
    K).
    """

    def __init__(self, ranked, k, provenance=None):
        self.ranked = list(ranked)
        self.k = k
        self.provenance = OrderedDict(provenance or ())

    @property
    def selected(self):
        return self.ranked[:self.k]

    @property
    def selected_ids(self):
        return [s.candidate_id for s in self.selected]

    def __len__(self):
        return len(self.ranked)


def select_top_k(scores, k, provenance=None):
    """
    Rank candidates by value (descending, ties by ascending candidate id)
    and select the first ``k``. For a fixed value per candidate this is the
    best K-subset under the additive objective.
    """
    scores = list(scores)
    k = int(k)
    if k < 0 or k > len(scores):
        raise ValueError('K=%d must lie between 0 and the pool size %d'
                         % (k, len(scores)))
    ordered = sorted(scores, key=lambda s: (-s.value, s.candidate_id))
    ranked = [s._replace(rank=i + 1, selected=i < k)
              for i, s in enumerate(ordered)]
    info = OrderedDict(provenance or ())
    info['pool_size'] = len(scores)
    info['k'] = k
    return SelectionManifest(ranked, k, info)


def read_errors(path):
    """
    Read an error file: ``pose_id e_t_meters e_r_degrees`` per line, ``#``
    comments allowed. Rotation errors are returned in radians.
    """
    errors = []
    seen = set()
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            fields = line.split()
            try:
                if len(fields) != 3:
                    raise ValueError('expected "pose_id e_t e_r_deg"')
                pose_id = int(fields[0])
                e_t, e_r = float(fields[1]), float(fields[2])
                if not (e_t >= 0.0 and e_r >= 0.0):
                    raise ValueError('errors must be >= 0')
                if pose_id in seen:
                    raise ValueError('duplicate pose id %d' % (pose_id,))
            except ValueError as e:
                raise ValueError('%s: line %d: %s' % (path, line_no, e))
            seen.add(pose_id)
            errors.append(TrainError(pose_id, e_t, float(np.radians(e_r))))
    return errors


def write_errors(path, errors, note=None):
    with open(path, 'w') as f:
        if note:
            f.write('# %s\n' % (note,))
        f.write('# pose_id e_t_meters e_r_degrees\n')
        for e in sorted(errors):
            f.write('%d %r %r\n' % (e.pose_id, float(e.e_t),
                                    float(np.degrees(e.e_r))))


def _write_table(path, provenance, scores):
    with open(path, 'w', newline='') as f:
        for key, value in provenance.items():
            f.write('# %s=%s\n' % (key, value))
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(SCORE_COLUMNS)
        for score in scores:
            writer.writerow(score.to_row())


def _read_table(path):
    provenance = OrderedDict()
    rows = []
    with open(path, newline='') as f:
        lines = []
        for line in f:
            if line.startswith('#'):
                key, _, value = line[1:].strip().partition('=')
                provenance[key.strip()] = value.strip()
            else:
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader, None)
    if header != SCORE_COLUMNS:
        raise ValueError('%s: expected header %s' % (path,
                                                     ','.join(SCORE_COLUMNS)))
    for row_no, row in enumerate(reader, 2):
        try:
            rows.append(ValueScore.from_row(row))
        except ValueError as e:
            raise ValueError('%s: row %d: %s' % (path, row_no, e))
    return provenance, rows


def write_scores(path, scores, provenance=None):
    """ Write the full score table, in rank order when ranked. """
    _write_table(path, OrderedDict(provenance or ()), scores)


def read_scores(path):
    """ Returns ``(scores, provenance)``. """
    provenance, rows = _read_table(path)
    return rows, provenance


def write_manifest(path, manifest):
    _write_table(path, manifest.provenance, manifest.selected)


def read_manifest(path):
    provenance, rows = _read_table(path)
    k = int(provenance.get('k', len(rows)))
    if k != len(rows):
        raise ValueError('%s: manifest lists %d rows but K=%d'
                         % (path, len(rows), k))
    return SelectionManifest(rows, k, provenance)
