"""
Run configuration: a flat ``key = value`` text format with section prefixes
(``perturb.delta_t = 0.20``) and ``#`` comments. Every key has a default in
:data:`DEFAULTS`; values are kept as text and converted on access.
"""
import hashlib
import logging
from collections import OrderedDict

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """ An unknown, missing or unparsable configuration value. """


DEFAULTS = OrderedDict([
    ('run.seed', '0'),
    ('run.workers', '1'),

    ('perturb.profile', 'indoor'),
    # Empty: taken from the profile.
    ('perturb.delta_t', ''),
    ('perturb.delta_r', ''),
    ('perturb.m_per_pose', '32'),

    ('metric.lambda', '1.0'),

    ('scoring.alpha', '1.5'),
    ('scoring.beta', '1.0'),
    ('scoring.gamma', '2.0'),
    ('scoring.k_neighbors', '32'),
    ('scoring.bandwidth', 'median'),
    ('scoring.components', 'diff,nov,gs'),

    ('observability.tau_alpha', '0.5'),
    ('observability.tau_b', '0.2'),
    ('observability.tau_h', '3.0'),
    ('observability.steepness', '10.0'),
    ('observability.epsilon', '1e-8'),
    ('observability.entropy_window', '9'),
    ('observability.entropy_bins', '32'),
    ('observability.ssim_window', '11'),
    ('observability.ssim_sigma', '1.5'),
    ('observability.ssim_k1', '0.01'),
    ('observability.ssim_k2', '0.03'),

    ('scene.half_extents', '2.6,2.6,1.0'),
    ('scene.wall.x-', '0.35,0.42,0.58'),
    ('scene.wall.x+', '0.3,0.44,0.56'),
    ('scene.wall.y-', '0.4,0.4,0.55'),
    ('scene.wall.y+', '0.35,0.45,0.6'),
    ('scene.wall.z-', '0.5,0.4,0.5'),
    ('scene.wall.z+', '0.3,0.45,0.55'),
    ('scene.open_face', 'z+'),
    ('scene.detail_contrast', '0.2'),
    ('scene.texture_seed', '0'),
    ('scene.pillar_count', '16'),
    ('scene.pillar_radius', '2.1'),
    ('scene.pillar_half_width', '0.12'),
    ('scene.pillar_texture', '0.5,0.42,0.58'),
    ('scene.textureless', 'y+:-0.6:-0.45:0.6:0.45'),
    ('scene.textureless_albedo', '0.5'),
    ('scene.artifacts', 'x+:-2.0:-1.0:2.0:1.0;y-:-2.0:-1.0:2.0:1.0'),
    ('scene.artifact_strength', '1.0'),
    ('scene.artifact_inset', '0.7'),
    ('scene.focal', '40.0'),
    ('scene.principal', ''),
    ('scene.image_size', '64,48'),

    ('select.k', '64'),

    ('eval.descriptor_grid', '16,16'),

    ('toy.n_train', '64'),
    ('toy.radius', '1.2'),

    ('compare.seeds', '0,1,2,3,4,5,6,7,8,9'),
    ('compare.budgets', '0.2N,0.5N,N'),
    ('compare.variants', 'value,random'),
    ('compare.train_ratios', '1.0'),

    ('paths.train', ''),
    ('paths.test', ''),
    ('paths.views', ''),
    ('paths.train_views', ''),
    ('paths.errors', ''),
])

# Keys that change how a run is executed but not what it produces.
EXECUTION_KEYS = frozenset(['run.workers'])

_SECTIONS = {
    'run': 'the run setup',
    'perturb': 'the candidate perturbation',
    'metric': 'the pose distance',
    'scoring': 'the value function',
    'observability': 'the observability measurements',
    'scene': 'the toy scene',
    'select': 'the selection budget',
    'eval': 'the proxy evaluation',
    'toy': 'the toy trajectory',
    'compare': 'the comparison sweep',
    'paths': 'the input files',
}


class RunConfig(object):
    """
    The effective configuration of a run. ``set``, ``update`` and ``load``
    return the config so calls can be chained::

        RunConfig().load('run.cfg').set('run.seed', 3)
    """

    def __init__(self):
        self._values = OrderedDict(DEFAULTS)
        self._sources = []

    def set(self, key, value):
        """ Set ``key`` to ``value`` (converted to text). """
        if key not in self._values:
            raise ConfigError('unknown config key "%s"' % (key,))
        self._values[key] = str(value).strip()
        return self

    def update(self, items):
        """ Set every ``(key, value)`` pair of a mapping or iterable. """
        if hasattr(items, 'items'):
            items = items.items()
        for key, value in items:
            self.set(key, value)
        return self

    def load(self, path):
        """
        Read a config file. Later files and later ``set`` calls take
        precedence.
        """
        with open(path) as f:
            for line_no, line in enumerate(f, 1):
                line = line.strip()
                if not line or line.startswith('#'):
                    continue
                key, sep, value = line.partition('=')
                if not sep:
                    raise ConfigError('%s: line %d: expected "key = value"'
                                      % (path, line_no))
                try:
                    self.set(key.strip(), value)
                except ConfigError as e:
                    raise ConfigError('%s: line %d: %s' % (path, line_no, e))
        self._sources.append(path)
        logger.debug('loaded config file %s', path)
        return self

    @property
    def sources(self):
        return list(self._sources)

    def get(self, key, default=None, required=False):
        """
        Text value of ``key``; empty values count as unset.

        :param default: returned when the key is unset
        :param required: raise :class:`ConfigError` when the key is unset
        """
        return self._lookup(key, default, required)

    def _lookup(self, key, default, required):
        """ Shared logic to fetch a config value. """
        if key not in self._values:
            raise ConfigError('unknown config key "%s"' % (key,))
        value = self._values[key]
        if value == '':
            value = default

        if required and value is None:
            raise ConfigError(
                'Config key "%s" is required to determine %s'
                % (key, _SECTIONS.get(key.split('.', 1)[0], 'the run')))

        return value

    def _typed(self, key, required, convert, kind):
        value = self._lookup(key, None, required)
        if value is None:
            return None
        try:
            return convert(value)
        except ValueError:
            raise ConfigError('Config key "%s" must be %s, got "%s"'
                              % (key, kind, value))

    def get_int(self, key, required=True):
        return self._typed(key, required, int, 'an integer')

    def get_float(self, key, required=True):
        return self._typed(key, required, float, 'a number')

    def get_list(self, key, required=True):
        """ Comma-separated items, stripped, empty items dropped. """
        return self._typed(
            key, required,
            lambda v: [item.strip() for item in v.split(',') if item.strip()],
            'a list')

    def get_floats(self, key, required=True):
        return self._typed(
            key, required,
            lambda v: [float(item) for item in v.split(',')],
            'a comma-separated list of numbers')

    def get_ints(self, key, required=True):
        return self._typed(
            key, required,
            lambda v: [int(item) for item in v.split(',')],
            'a comma-separated list of integers')

    def snapshot(self):
        """
        The effective configuration as ``key = value`` lines sorted by key,
        leaving out keys that only affect execution (worker count).
        """
        return ''.join('%s = %s\n' % (key, self._values[key])
                       for key in sorted(self._values)
                       if key not in EXECUTION_KEYS)

    def digest(self):
        """ SHA-256 hex digest of :meth:`snapshot`. """
        return hashlib.sha256(self.snapshot().encode('utf-8')).hexdigest()
