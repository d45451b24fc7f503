"""
View triplets for candidates: a central view, two views perturbed by
+/-2 cm and +/-2 degrees, and the central opacity map. Views come either
from a small procedural raycaster (:class:`ToyRenderer`) or from a directory
of externally rendered PNG files (:class:`ImageDirectory`).
"""
import functools
import hashlib
import logging
import os
from collections import namedtuple

import numpy as np
from PIL import Image
from scipy import ndimage
from scipy.spatial.transform import Rotation

from posepick.poses import Pose

logger = logging.getLogger(__name__)

LUMA = np.array([0.299, 0.587, 0.114])

OBSERVABILITY_SHIFT = 0.02  # meters, along the camera right axis
OBSERVABILITY_YAW = 2.0  # degrees, about the camera y axis

MIN_IMAGE_SIZE = 16


class ImageError(ValueError):
    """ A view image is missing, unreadable or has the wrong size. """


class ImageBuffer(object):
    """
    An immutable image with intensities in [0, 1].

    :param data: array of shape ``(height, width)`` (gray) or
        ``(height, width, 3)`` (RGB)
    """
    __slots__ = ('data',)

    def __init__(self, data):
        data = np.array(data, dtype=float)
        if data.ndim == 3 and data.shape[2] == 1:
            data = data[:, :, 0]
        if not (data.ndim == 2 or (data.ndim == 3 and data.shape[2] == 3)):
            raise ValueError('images must be (h, w) or (h, w, 3) arrays, got '
                             'shape %r' % (data.shape,))
        if data.size == 0:
            raise ValueError('images must not be empty')
        if not np.all(np.isfinite(data)):
            raise ValueError('image intensities must be finite')
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError('image intensities must lie in [0, 1]')
        data.flags.writeable = False
        self.data = data

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return 1 if self.data.ndim == 2 else 3

    @property
    def size(self):
        return (self.width, self.height)

    def gray(self):
        """ Intensities as a 2-D array, RGB converted by luminance. """
        if self.channels == 1:
            return self.data
        return self.data @ LUMA

    @classmethod
    def read_png(cls, path, gray=False):
        """
        Read an 8-bit grayscale or RGB PNG. Other modes are converted to RGB
        (or to grayscale when ``gray`` is set).
        """
        try:
            with Image.open(path) as img:
                if gray:
                    img = img.convert('L')
                elif img.mode not in ('L', 'RGB'):
                    img = img.convert('RGB')
                data = np.asarray(img, dtype=np.uint8)
        except FileNotFoundError:
            raise ImageError('missing view file %s' % (path,))
        except OSError as e:
            raise ImageError('unreadable view file %s: %s' % (path, e))
        return cls(data / 255.0)

    def write_png(self, path):
        data = np.rint(self.data * 255.0).astype(np.uint8)
        Image.fromarray(data).save(path)

    def __repr__(self):
        return 'ImageBuffer(%dx%dx%d)' % (
            self.width, self.height, self.channels)


class ViewTriplet(object):
    """
    Central view, the two perturbed views and the central opacity map of one
    candidate. All buffers share their dimensions.
    """
    __slots__ = ('candidate_id', 'central', 'plus', 'minus', 'opacity_central')

    def __init__(self, candidate_id, central, plus, minus, opacity_central):
        for name, img in (('plus', plus), ('minus', minus),
                          ('opacity', opacity_central)):
            if img.size != central.size:
                raise ImageError(
                    'candidate %d: %s view is %dx%d but the central view is '
                    '%dx%d' % ((candidate_id, name) + img.size + central.size))
        if opacity_central.channels != 1:
            raise ImageError(
                'candidate %d: opacity map must be single-channel'
                % (candidate_id,))
        self.candidate_id = candidate_id
        self.central = central
        self.plus = plus
        self.minus = minus
        self.opacity_central = opacity_central


def perturb_for_observability(pose, shift=OBSERVABILITY_SHIFT,
                              yaw=OBSERVABILITY_YAW):
    """
    Return ``(plus, minus)``: ``pose`` moved ``shift`` meters along its
    right axis and turned ``yaw`` degrees about its y axis, and the mirrored
    negative offsets.
    """
    rotation = pose.rotation()
    right = rotation.apply([1.0, 0.0, 0.0])
    turn = Rotation.from_rotvec([0.0, np.radians(yaw), 0.0])
    plus = Pose.from_rotation(pose.id, pose.t + shift * right,
                              rotation * turn)
    minus = Pose.from_rotation(pose.id, pose.t - shift * right,
                               rotation * turn.inv())
    return plus, minus


FACES = ('x-', 'x+', 'y-', 'y+', 'z-', 'z+')

# face -> (normal axis, in-plane u axis, in-plane v axis)
_FACE_AXES = {
    'x-': (0, 1, 2), 'x+': (0, 1, 2),
    'y-': (1, 0, 2), 'y+': (1, 0, 2),
    'z-': (2, 0, 1), 'z+': (2, 0, 1),
}

# (lattice spacing in meters, weight) of the texture octaves
TEXTURE_OCTAVES = ((0.8, 0.5), (0.3, 0.7), (0.12, 0.4))

ARTIFACT_GRAIN = 0.08  # half-width of the uniform grain inside floaters


class WallTexture(namedtuple('WallTexture',
                             ['checker_freq', 'albedo_low', 'albedo_high'])):
    """ Checker squares per meter and the two albedo levels of a wall. """
    __slots__ = ()

    @classmethod
    def parse(cls, text):
        values = [float(v) for v in text.split(',')]
        if len(values) != 3:
            raise ValueError('wall texture must be "freq, low, high", got "%s"'
                             % (text,))
        return cls(*values)

    @property
    def mean(self):
        return 0.5 * (self.albedo_low + self.albedo_high)

    def checker(self, u, v):
        parity = (np.floor(u * self.checker_freq) +
                  np.floor(v * self.checker_freq)) % 2
        return np.where(parity == 0, self.albedo_low, self.albedo_high)


@functools.lru_cache(maxsize=1024)
def _lattice(entropy, cell, extent):
    n = int(np.ceil(2.0 * extent / cell)) + 4
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(list(entropy))))
    coeffs = ndimage.spline_filter(rng.standard_normal((n, n)), order=3)
    coeffs.flags.writeable = False
    return coeffs


def detail_field(seed, u, v, extent):
    """
    Zero-mean random detail at in-plane coordinates ``(u, v)`` in meters,
    ``|u|, |v| <= extent``: a weighted sum of cubic-spline interpolated
    Gaussian lattices, one per octave of :data:`TEXTURE_OCTAVES`. ``seed``
    is a tuple of non-negative integers naming the surface.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    coords = np.stack([u.ravel(), v.ravel()]) + extent
    values = np.zeros(u.size)
    for octave, (cell, weight) in enumerate(TEXTURE_OCTAVES):
        coeffs = _lattice(tuple(seed) + (octave,), cell, float(extent))
        values += weight * ndimage.map_coordinates(
            coeffs, coords / cell + 1.0, order=3, mode='nearest',
            prefilter=False)
    return values.reshape(u.shape)


class Patch(namedtuple('Patch', ['face', 'u0', 'v0', 'u1', 'v1'])):
    """ A rectangle on a wall, in the wall's (u, v) coordinates, meters. """
    __slots__ = ()

    @classmethod
    def parse(cls, text):
        parts = text.split(':')
        if len(parts) != 5 or parts[0] not in FACES:
            raise ValueError('patch must be "face:u0:v0:u1:v1", got "%s"'
                             % (text,))
        u0, v0, u1, v1 = (float(p) for p in parts[1:])
        return cls(parts[0], min(u0, u1), min(v0, v1), max(u0, u1),
                   max(v0, v1))

    def contains(self, u, v):
        return ((u >= self.u0) & (u <= self.u1) &
                (v >= self.v0) & (v <= self.v1))


def _parse_patches(text):
    return tuple(Patch.parse(p.strip()) for p in text.split(';') if p.strip())


class Pillar(namedtuple('Pillar', ['x', 'y', 'half_width'])):
    """ A square floor-to-ceiling column centred on ``(x, y)``. """
    __slots__ = ()

    def contains(self, t):
        return (abs(t[0] - self.x) < self.half_width and
                abs(t[1] - self.y) < self.half_width)


def colonnade(count, radius, half_width):
    """
    ``count`` pillars evenly spaced on a circle of ``radius`` meters, the
    first half a spacing past the world x axis.
    """
    if count < 0:
        raise ValueError('pillar count must be >= 0, got %d' % (count,))
    angles = 2.0 * np.pi * (np.arange(count) + 0.5) / max(count, 1)
    return tuple(Pillar(float(radius * np.cos(a)), float(radius * np.sin(a)),
                        float(half_width)) for a in angles)


DEFAULT_WALLS = {
    'x-': WallTexture(0.35, 0.42, 0.58),
    'x+': WallTexture(0.3, 0.44, 0.56),
    'y-': WallTexture(0.4, 0.4, 0.55),
    'y+': WallTexture(0.35, 0.45, 0.6),
    'z-': WallTexture(0.5, 0.4, 0.5),
    'z+': WallTexture(0.3, 0.45, 0.55),
}

DEFAULT_PILLAR_TEXTURE = WallTexture(0.5, 0.42, 0.58)


class ToyScene(object):
    """
    An axis-aligned box room centred on the origin, seen through a pinhole
    camera (x right, y down, z forward).

    Walls and pillars carry a coarse checker of two albedo levels under
    non-repeating random detail of amplitude ``detail_contrast``, seeded by
    ``texture_seed`` and the surface, so every part of the room looks
    different. The pillars standing in front of the walls give parallax.
    Textureless patches render a constant albedo. Artifact patches are
    floaters: hazy sheets hanging ``artifact_inset`` meters in
    front of their wall, rendering the wall's mean albedo plus fine grain
    seeded by the camera pose, so neighbouring poses disagree there and the
    views turn flat and featureless the way badly reconstructed regions of
    a splatting model do. Rays leaving through ``open_face`` hit nothing.
    """

    def __init__(self, half_extents=(2.6, 2.6, 1.0), walls=None,
                 open_face='z+', detail_contrast=0.2, texture_seed=0,
                 pillars=(), pillar_texture=DEFAULT_PILLAR_TEXTURE,
                 textureless=(),
                 textureless_albedo=0.5, artifacts=(), artifact_strength=1.0,
                 artifact_inset=0.7, focal=40.0, principal=None,
                 image_size=(64, 48)):
        self.half_extents = np.array(half_extents, dtype=float)
        if self.half_extents.shape != (3,) or np.any(self.half_extents <= 0):
            raise ValueError('half_extents must be 3 positive values')
        self.walls = dict(DEFAULT_WALLS)
        self.walls.update(walls or {})
        if open_face is not None and open_face not in FACES:
            raise ValueError('unknown open face "%s"' % (open_face,))
        self.open_face = open_face
        self.detail_contrast = float(detail_contrast)
        self.texture_seed = int(texture_seed)
        if self.texture_seed < 0:
            raise ValueError('texture_seed must be >= 0')
        self.pillars = tuple(pillars)
        self.pillar_texture = pillar_texture
        self.textureless = tuple(textureless)
        self.textureless_albedo = float(textureless_albedo)
        self.artifacts = tuple(artifacts)
        self.artifact_strength = float(artifact_strength)
        if not 0.0 <= self.artifact_strength <= 1.0:
            raise ValueError('artifact_strength must lie in [0, 1]')
        self.artifact_inset = float(artifact_inset)

        width, height = (int(v) for v in image_size)
        if width < MIN_IMAGE_SIZE or height < MIN_IMAGE_SIZE:
            raise ValueError('image size must be at least %dx%d, got %dx%d'
                             % (MIN_IMAGE_SIZE, MIN_IMAGE_SIZE, width, height))
        self.image_size = (width, height)
        self.focal = float(focal)
        if not self.focal > 0.0:
            raise ValueError('focal length must be > 0')
        if principal is None:
            principal = (width / 2.0, height / 2.0)
        self.principal = tuple(float(v) for v in principal)

        for patch in self.textureless + self.artifacts:
            u_min, u_max, v_min, v_max = self.wall_bounds(patch.face)
            if (patch.u0 < u_min or patch.u1 > u_max or
                    patch.v0 < v_min or patch.v1 > v_max):
                raise ValueError('patch %r lies outside wall %s'
                                 % (tuple(patch), patch.face))
        for patch in self.artifacts:
            normal = _FACE_AXES[patch.face][0]
            if not 0.0 <= self.artifact_inset < self.half_extents[normal]:
                raise ValueError(
                    'artifact_inset %g puts the %s floaters outside the room'
                    % (self.artifact_inset, patch.face))
        for pillar in self.pillars:
            if (abs(pillar.x) + pillar.half_width > self.half_extents[0] or
                    abs(pillar.y) + pillar.half_width > self.half_extents[1]
                    or not pillar.half_width > 0.0):
                raise ValueError('pillar %r lies outside the room'
                                 % (tuple(pillar),))
        self.texture_extent = float(self.half_extents.max())

    @classmethod
    def from_config(cls, config):
        walls = dict(
            (face, WallTexture.parse(config.get('scene.wall.' + face)))
            for face in FACES)
        open_face = config.get('scene.open_face', required=True)
        pillars = colonnade(config.get_int('scene.pillar_count'),
                            config.get_float('scene.pillar_radius'),
                            config.get_float('scene.pillar_half_width'))
        return cls(
            half_extents=config.get_floats('scene.half_extents'),
            walls=walls,
            open_face=None if open_face == 'none' else open_face,
            detail_contrast=config.get_float('scene.detail_contrast'),
            texture_seed=config.get_int('scene.texture_seed'),
            pillars=pillars,
            pillar_texture=WallTexture.parse(
                config.get('scene.pillar_texture', required=True)),
            textureless=_parse_patches(config.get('scene.textureless', '')),
            textureless_albedo=config.get_float('scene.textureless_albedo'),
            artifacts=_parse_patches(config.get('scene.artifacts', '')),
            artifact_strength=config.get_float('scene.artifact_strength'),
            artifact_inset=config.get_float('scene.artifact_inset'),
            focal=config.get_float('scene.focal'),
            principal=config.get_floats('scene.principal', required=False),
            image_size=config.get_floats('scene.image_size'))

    def wall_bounds(self, face):
        _, u_axis, v_axis = _FACE_AXES[face]
        ext = self.half_extents
        return -ext[u_axis], ext[u_axis], -ext[v_axis], ext[v_axis]

    def contains(self, t):
        """ Whether ``t`` lies inside the room and outside every pillar. """
        t = np.asarray(t)
        if not np.all(np.abs(t) < self.half_extents):
            return False
        return not any(pillar.contains(t) for pillar in self.pillars)

    def ray_directions(self):
        """ Camera-frame ray directions through the pixel centres. """
        width, height = self.image_size
        cx, cy = self.principal
        xs = (np.arange(width) + 0.5 - cx) / self.focal
        ys = (np.arange(height) + 0.5 - cy) / self.focal
        x, y = np.meshgrid(xs, ys)
        return np.stack([x, y, np.ones_like(x)], axis=-1)

    def _albedo(self, texture, seed, u, v):
        detail = detail_field((self.texture_seed,) + seed, u, v,
                              self.texture_extent)
        return texture.checker(u, v) + self.detail_contrast * detail

    def wall_albedo(self, face, u, v):
        values = self._albedo(self.walls[face], (FACES.index(face),), u, v)
        for patch in self.textureless:
            if patch.face == face:
                values[patch.contains(u, v)] = self.textureless_albedo
        return values

    def pillar_albedo(self, index, side, u, v):
        return self._albedo(self.pillar_texture,
                            (len(FACES), index, side), u, v)


def _pose_seed(pose):
    digest = hashlib.sha256(
        np.asarray(pose.t, dtype='<f8').tobytes() +
        np.asarray(pose.q, dtype='<f8').tobytes())
    return int.from_bytes(digest.digest()[:8], 'little')


def _pillar_entry(pillar, origin, dirs):
    """
    Distance along every ray to where it enters ``pillar`` (inf on a miss)
    and the horizontal axis of the face it enters through.
    """
    lo = np.array([pillar.x, pillar.y]) - pillar.half_width
    hi = np.array([pillar.x, pillar.y]) + pillar.half_width
    o = origin[:2]
    d = dirs[..., :2]
    with np.errstate(divide='ignore', invalid='ignore'):
        t1 = (lo - o) / d
        t2 = (hi - o) / d
    parallel = d == 0
    inside = (o >= lo) & (o <= hi)
    t_min = np.where(parallel, np.where(inside, -np.inf, np.inf),
                     np.minimum(t1, t2))
    t_max = np.where(parallel, np.where(inside, np.inf, -np.inf),
                     np.maximum(t1, t2))
    axis = np.argmax(t_min, axis=-1)
    near = t_min.max(axis=-1)
    far = t_max.min(axis=-1)
    return np.where((near <= far) & (near > 0), near, np.inf), axis


def render_toy(scene, pose, artifacts=True):
    """
    Raycast ``scene`` from ``pose``. Returns ``(rgb, opacity)`` buffers.

    :param artifacts: render the floaters; views standing in for real
        captures are rendered without them
    """
    if not scene.contains(pose.t):
        raise ValueError('pose %d at %r lies outside the room'
                         % (pose.id, pose.t.tolist()))
    dirs = scene.ray_directions() @ pose.matrix().T
    ext = scene.half_extents
    with np.errstate(divide='ignore', invalid='ignore'):
        dist = (np.where(dirs > 0, ext, -ext) - pose.t) / dirs
    dist[dirs == 0] = np.inf
    axis = np.argmin(dist, axis=-1)
    depth = np.take_along_axis(dist, axis[..., None], axis=-1)[..., 0]
    positive = np.take_along_axis(dirs, axis[..., None], axis=-1)[..., 0] > 0
    face_index = 2 * axis + positive

    # -1 where a wall is hit first, else the index of the nearest pillar.
    pillar_index = np.full(depth.shape, -1)
    pillar_axis = np.zeros(depth.shape, dtype=int)
    for index, pillar in enumerate(scene.pillars):
        near, entry_axis = _pillar_entry(pillar, pose.t, dirs)
        closer = near < depth
        depth = np.where(closer, near, depth)
        pillar_index[closer] = index
        pillar_axis[closer] = entry_axis[closer]
    hit = pose.t + dirs * depth[..., None]

    albedo = np.zeros(depth.shape)
    opacity = np.ones(depth.shape)
    on_wall = pillar_index < 0
    for index, face in enumerate(FACES):
        mask = on_wall & (face_index == index)
        if not mask.any():
            continue
        if face == scene.open_face:
            opacity[mask] = 0.0
            continue
        _, u_axis, v_axis = _FACE_AXES[face]
        albedo[mask] = scene.wall_albedo(face, hit[mask][:, u_axis],
                                         hit[mask][:, v_axis])
    for index, pillar in enumerate(scene.pillars):
        for entry_axis in (0, 1):
            mask = (pillar_index == index) & (pillar_axis == entry_axis)
            if not mask.any():
                continue
            side = 2 * entry_axis + (dirs[mask][:, entry_axis] < 0)
            centre = (pillar.y, pillar.x)[entry_axis]
            u = hit[mask][:, 1 - entry_axis] - centre
            values = np.zeros(u.shape)
            for s in np.unique(side):
                on_side = side == s
                values[on_side] = scene.pillar_albedo(
                    index, int(s), u[on_side], hit[mask][on_side, 2])
            albedo[mask] = values

    if artifacts and scene.artifacts and scene.artifact_strength > 0.0:
        haze = np.full(depth.shape, np.nan)
        for patch in scene.artifacts:
            normal, u_axis, v_axis = _FACE_AXES[patch.face]
            sign = 1.0 if patch.face.endswith('+') else -1.0
            plane = sign * (ext[normal] - scene.artifact_inset)
            with np.errstate(divide='ignore', invalid='ignore'):
                reach = (plane - pose.t[normal]) / dirs[..., normal]
            crossed = np.isfinite(reach) & (reach > 0) & (reach < depth)
            point = pose.t + dirs * np.where(crossed, reach, 0.0)[..., None]
            crossed &= patch.contains(point[..., u_axis], point[..., v_axis])
            haze[crossed] = scene.walls[patch.face].mean
        hazed = ~np.isnan(haze)
        if hazed.any():
            rng = np.random.Generator(np.random.PCG64(_pose_seed(pose)))
            grain = rng.uniform(-ARTIFACT_GRAIN, ARTIFACT_GRAIN,
                                size=depth.shape)
            strength = scene.artifact_strength
            albedo[hazed] = ((1.0 - strength) * albedo[hazed] +
                             strength * (haze[hazed] + grain[hazed]))
            opacity[hazed] = np.maximum(opacity[hazed], strength)

    albedo = np.clip(albedo, 0.0, 1.0)
    rgb = np.repeat(albedo[..., None], 3, axis=-1)
    return ImageBuffer(rgb), ImageBuffer(opacity)


def toy_trajectory(scene, n, seed=0, radius=1.2):
    """
    ``n`` training poses on a horizontal circle of ``radius`` meters around
    the room centre, looking outward, with seeded jitter of position
    (+/-0.15 m), heading (+/-15 deg) and pitch (+/-5 deg). Ids are 0..n-1.
    """
    if n < 1:
        raise ValueError('trajectory needs at least 1 pose, got %d' % (n,))
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([seed, 0x7a1])))
    base = 2.0 * np.pi * np.arange(n) / n
    positions = np.stack(
        [radius * np.cos(base), radius * np.sin(base), np.zeros(n)], axis=1)
    positions += rng.uniform(-0.15, 0.15, size=(n, 3))
    headings = base + np.radians(rng.uniform(-15.0, 15.0, size=n))
    pitches = np.radians(rng.uniform(-5.0, 5.0, size=n))

    poses = []
    for i in range(n):
        if not scene.contains(positions[i]):
            raise ValueError('trajectory radius %g leaves the room'
                             % (radius,))
        poses.append(heading_pose(i, positions[i], headings[i], pitches[i]))
    return poses


def heading_pose(pose_id, t, heading, pitch=0.0):
    """
    A camera at ``t`` looking along ``heading`` (radians from the world x
    axis towards y) tilted up by ``pitch`` radians, world z up.
    """
    forward = np.array([np.cos(pitch) * np.cos(heading),
                        np.cos(pitch) * np.sin(heading),
                        np.sin(pitch)])
    right = np.array([np.sin(heading), -np.cos(heading), 0.0])
    down = np.cross(forward, right)
    matrix = np.stack([right, down, forward], axis=1)
    return Pose.from_matrix(pose_id, t, matrix)


def _pose_of(candidate):
    return getattr(candidate, 'pose', candidate)


class ToyRenderer(object):
    """ View source backed by :func:`render_toy`. """

    def __init__(self, scene, artifacts=True):
        self.scene = scene
        self.artifacts = artifacts

    def central(self, pose):
        rgb, _ = render_toy(self.scene, _pose_of(pose), self.artifacts)
        return rgb

    def triplet(self, candidate):
        pose = _pose_of(candidate)
        plus_pose, minus_pose = perturb_for_observability(pose)
        central, opacity = render_toy(self.scene, pose, self.artifacts)
        plus, _ = render_toy(self.scene, plus_pose, self.artifacts)
        minus, _ = render_toy(self.scene, minus_pose, self.artifacts)
        return ViewTriplet(pose.id, central, plus, minus, opacity)


class ImageDirectory(object):
    """
    View source reading externally rendered views: ``<id>_c.png``,
    ``<id>_p.png``, ``<id>_m.png`` and an optional ``<id>_a.png`` opacity
    map, which defaults to all ones.
    """

    def __init__(self, path):
        if not os.path.isdir(path):
            raise ImageError('view directory %s does not exist' % (path,))
        self.path = path

    def _file(self, pose_id, suffix):
        return os.path.join(self.path, '%d_%s.png' % (pose_id, suffix))

    def central(self, pose):
        return ImageBuffer.read_png(self._file(_pose_of(pose).id, 'c'))

    def triplet(self, candidate):
        pose_id = _pose_of(candidate).id
        central = ImageBuffer.read_png(self._file(pose_id, 'c'))
        plus = ImageBuffer.read_png(self._file(pose_id, 'p'))
        minus = ImageBuffer.read_png(self._file(pose_id, 'm'))
        alpha_path = self._file(pose_id, 'a')
        if os.path.exists(alpha_path):
            opacity = ImageBuffer.read_png(alpha_path, gray=True)
        else:
            opacity = ImageBuffer(np.ones((central.height, central.width)))
        return ViewTriplet(pose_id, central, plus, minus, opacity)


def make_triplet(source, candidate):
    """
    Build the :class:`ViewTriplet` of ``candidate`` from a view source
    (:class:`ToyRenderer` or :class:`ImageDirectory`).
    """
    return source.triplet(candidate)


def write_triplet(directory, triplet):
    """ Write a triplet in the layout :class:`ImageDirectory` reads. """
    prefix = os.path.join(directory, '%d_' % (triplet.candidate_id,))
    triplet.central.write_png(prefix + 'c.png')
    triplet.plus.write_png(prefix + 'p.png')
    triplet.minus.write_png(prefix + 'm.png')
    triplet.opacity_central.write_png(prefix + 'a.png')
