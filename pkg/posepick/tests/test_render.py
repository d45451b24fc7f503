import os

import numpy as np
from testtools import ExpectedException
from testtools.assertions import assert_that
from testtools.matchers import (
    Equals, GreaterThan, HasLength, LessThan, MatchesStructure)

from posepick.config import RunConfig
from posepick.metrics import stability
from posepick.poses import rotation_distance
from posepick.render import (
    ImageBuffer, ImageDirectory, ImageError, Patch, Pillar, ToyRenderer,
    ToyScene, ViewTriplet, WallTexture, colonnade, heading_pose,
    make_triplet, perturb_for_observability, render_toy, toy_trajectory,
    write_triplet)
from posepick.tests.helpers import AllClose, CloseTo, make_pose


class TestImageBuffer(object):
    def test_gray_and_rgb(self):
        gray = ImageBuffer(np.full((4, 5), 0.5))
        rgb = ImageBuffer(np.full((4, 5, 3), 0.5))

        assert_that(gray, MatchesStructure.byEquality(
            width=5, height=4, channels=1, size=(5, 4)))
        assert_that(rgb.channels, Equals(3))
        assert_that(rgb.gray(), AllClose(np.full((4, 5), 0.5)))

    def test_luminance(self):
        data = np.zeros((2, 2, 3))
        data[..., 1] = 1.0
        assert_that(ImageBuffer(data).gray(), AllClose(np.full((2, 2), 0.587)))

    def test_out_of_range(self):
        with ExpectedException(ValueError, r'image intensities must lie in'):
            ImageBuffer(np.full((4, 4), 1.5))

    def test_bad_shape(self):
        with ExpectedException(ValueError, r'images must be \(h, w\)'):
            ImageBuffer(np.zeros((4, 4, 2)))

    def test_png_round_trip(self, tmp_path):
        """ 8-bit intensities survive writing and reading a PNG. """
        data = (np.arange(48 * 3).reshape(4, 12, 3) % 256) / 255.0
        path = str(tmp_path / 'img.png')
        ImageBuffer(data).write_png(path)
        assert_that(ImageBuffer.read_png(path).data, AllClose(data))

    def test_missing_png(self, tmp_path):
        with ExpectedException(ImageError, r'missing view file'):
            ImageBuffer.read_png(str(tmp_path / 'nope.png'))


class TestViewTriplet(object):
    def test_size_mismatch(self):
        """ Every view of a triplet must have the central view's size. """
        central = ImageBuffer(np.zeros((16, 32)))
        plus = ImageBuffer(np.zeros((16, 16)))
        with ExpectedException(ImageError,
                               r'candidate 3: plus view is 16x16 but the '
                               r'central view is 32x16'):
            ViewTriplet(3, central, plus, central, central)

    def test_opacity_channels(self):
        rgb = ImageBuffer(np.zeros((16, 16, 3)))
        with ExpectedException(ImageError, r'candidate 0: opacity map'):
            ViewTriplet(0, rgb, rgb, rgb, rgb)


class TestObservabilityPerturbation(object):
    def test_symmetric_offsets(self):
        """
        The plus and minus views are 2 cm to either side along the camera
        right axis and turned 2 degrees either way.
        """
        pose = heading_pose(5, (0.5, -0.2, 0.1), np.radians(30.0))
        plus, minus = perturb_for_observability(pose)
        right = pose.matrix()[:, 0]

        assert_that(plus.t, AllClose(pose.t + 0.02 * right))
        assert_that(minus.t, AllClose(pose.t - 0.02 * right))
        assert_that(rotation_distance(plus.q, pose.q),
                    CloseTo(np.radians(2.0), 1e-12))
        assert_that(rotation_distance(plus.q, minus.q),
                    CloseTo(np.radians(4.0), 1e-12))
        assert_that((plus.id, minus.id), Equals((5, 5)))


class TestHeadingPose(object):
    def test_axes(self):
        """ The camera looks along the heading with y pointing down. """
        matrix = heading_pose(0, (0, 0, 0), np.radians(90.0)).matrix()

        assert_that(matrix[:, 2], AllClose([0.0, 1.0, 0.0]))
        assert_that(matrix[:, 1], AllClose([0.0, 0.0, -1.0]))
        assert_that(np.linalg.det(matrix), CloseTo(1.0, 1e-12))


class TestToyScene(object):
    def test_parse_patch(self):
        assert_that(Patch.parse('x+:1:0.5:-1:-0.5'),
                    Equals(Patch('x+', -1.0, -0.5, 1.0, 0.5)))

    def test_bad_patch(self):
        with ExpectedException(ValueError,
                               r'patch must be "face:u0:v0:u1:v1"'):
            Patch.parse('w+:0:0:1:1')

    def test_bad_wall(self):
        with ExpectedException(ValueError, r'wall texture must be'):
            WallTexture.parse('1,2')

    def test_wall_mean(self):
        assert_that(WallTexture(0.5, 0.4, 0.6).mean, CloseTo(0.5, 1e-12))

    def test_patch_outside_wall(self):
        with ExpectedException(ValueError, r'patch .* lies outside wall x\+'):
            ToyScene(artifacts=[Patch('x+', -1.0, -2.0, 1.0, 0.0)])

    def test_inset_outside_room(self):
        """ Floaters must hang inside the room. """
        with ExpectedException(ValueError,
                               r'artifact_inset 2.6 puts the x\+ floaters'):
            ToyScene(artifacts=[Patch('x+', -1.0, -1.0, 1.0, 1.0)],
                     artifact_inset=2.6)

    def test_pillar_outside_room(self):
        with ExpectedException(ValueError, r'pillar .* lies outside'):
            ToyScene(pillars=[Pillar(2.5, 0.0, 0.2)])

    def test_small_image(self):
        with ExpectedException(ValueError, r'image size must be at least'):
            ToyScene(image_size=(8, 8))

    def test_colonnade(self):
        """ Pillars start half a spacing past the x axis. """
        pillars = colonnade(4, 2.0, 0.1)
        s = np.sqrt(2.0)

        assert_that([(p.x, p.y) for p in pillars],
                    AllClose([(s, s), (-s, s), (-s, -s), (s, -s)]))
        assert_that(set(p.half_width for p in pillars), Equals({0.1}))
        assert_that(colonnade(0, 2.0, 0.1), Equals(()))

    def test_contains_excludes_pillars(self):
        scene = ToyScene(pillars=[Pillar(1.0, 0.0, 0.2)])
        assert not scene.contains([1.1, 0.1, 0.0])
        assert scene.contains([1.3, 0.0, 0.0])
        assert not scene.contains([3.0, 0.0, 0.0])

    def test_from_config_defaults(self):
        """ The default configuration describes the default scene. """
        scene = ToyScene.from_config(RunConfig())
        default = ToyScene()

        assert_that(scene.image_size, Equals((64, 48)))
        assert_that(scene.half_extents.tolist(), Equals([2.6, 2.6, 1.0]))
        assert_that(scene.walls, Equals(default.walls))
        assert_that(scene.pillar_texture, Equals(default.pillar_texture))
        assert_that(scene.open_face, Equals('z+'))
        assert_that(scene.pillars, Equals(colonnade(16, 2.1, 0.12)))
        assert_that(scene.textureless,
                    Equals((Patch('y+', -0.6, -0.45, 0.6, 0.45),)))
        assert_that(scene.artifacts,
                    Equals((Patch('x+', -2.0, -1.0, 2.0, 1.0),
                            Patch('y-', -2.0, -1.0, 2.0, 1.0))))

    def test_default_pillars_clear_of_floaters(self):
        """
        Every default pillar stands behind the floater sheets, so views
        through a sheet are hazed everywhere the sheet covers.
        """
        scene = ToyScene.from_config(RunConfig())
        inset = scene.half_extents[0] - scene.artifact_inset
        for pillar in scene.pillars:
            assert_that(max(abs(pillar.x), abs(pillar.y)) -
                        pillar.half_width, GreaterThan(inset))


def _toy_views(seed, count):
    """
    Poses on the x+ side of the default room, looking at the x+ floaters.
    """
    rng = np.random.default_rng(seed)
    for i in range(count):
        t = rng.uniform([0.9, -0.3, -0.2], [1.5, 0.3, 0.2])
        yield heading_pose(i, t, np.radians(rng.uniform(-15.0, 15.0)),
                           np.radians(rng.uniform(-5.0, 5.0)))


class TestRenderToy(object):
    def test_size(self):
        rgb, opacity = render_toy(ToyScene(), make_pose(0))
        assert_that(rgb.size, Equals((64, 48)))
        assert_that(opacity.channels, Equals(1))

    def test_deterministic(self):
        """ Rendering the same pose twice gives identical images. """
        scene = ToyScene(artifacts=[Patch('x+', -1.5, -1.0, 1.5, 1.0)])
        pose = heading_pose(0, (1.2, 0.0, 0.0), 0.0)
        a, _ = render_toy(scene, pose)
        b, _ = render_toy(scene, pose)
        assert_that(a.data.tolist(), Equals(b.data.tolist()))

    def test_floaters_only_when_enabled(self):
        """
        Looking straight through a floater sheet, the view turns into flat
        grain around the wall's mean albedo; without artifacts the textured
        wall shows.
        """
        scene = ToyScene(artifacts=[Patch('x+', -1.5, -1.0, 1.5, 1.0)])
        pose = heading_pose(0, (1.2, 0.0, 0.0), 0.0)
        hazy, opacity = render_toy(scene, pose, artifacts=True)
        clean, _ = render_toy(scene, pose, artifacts=False)

        assert_that(abs(hazy.gray().mean() - 0.5), LessThan(0.01))
        assert_that(hazy.gray().std(), LessThan(0.06))
        assert_that(clean.gray().std(), GreaterThan(0.08))
        assert_that(opacity.data.min(), Equals(1.0))

    def test_floaters_behind_camera(self):
        """ A camera past the floater sheet sees the clean wall. """
        scene = ToyScene(artifacts=[Patch('x+', -1.5, -1.0, 1.5, 1.0)])
        pose = heading_pose(0, (2.2, 0.0, 0.0), 0.0)
        hazy, _ = render_toy(scene, pose, artifacts=True)
        clean, _ = render_toy(scene, pose, artifacts=False)
        assert_that(hazy.data.tolist(), Equals(clean.data.tolist()))

    def test_floaters_destabilize_views(self):
        """
        Over 50 views of the default room facing the x+ floaters, the
        stability of the rendered triplet is lower with artifacts than
        without.
        """
        scene = ToyScene.from_config(RunConfig())
        hazy = ToyRenderer(scene, artifacts=True)
        clean = ToyRenderer(scene, artifacts=False)
        for pose in _toy_views(8, 50):
            assert_that(stability(hazy.triplet(pose)),
                        LessThan(stability(clean.triplet(pose))))

    def test_pillar_face(self):
        """
        The central ray of a camera facing a pillar hits its x- face, 0.8 m
        ahead, and shows that face's texture.
        """
        scene = ToyScene(pillars=[Pillar(1.0, 0.0, 0.2)])
        pose = heading_pose(0, (0.0, 0.0, 0.0), 0.0)
        rgb, _ = render_toy(scene, pose, artifacts=False)
        # pixel (32, 24) looks along (1, -0.0125, -0.0125)
        expected = scene.pillar_albedo(0, 0, np.array([-0.01]),
                                       np.array([-0.01]))[0]

        assert_that(rgb.data[24, 32, 0],
                    CloseTo(np.clip(expected, 0.0, 1.0), 1e-12))

    def test_walls_differ(self):
        """
        Opposite walls with the same checker carry different detail, so
        mirrored views do not repeat.
        """
        wall = WallTexture(0.3, 0.45, 0.55)
        scene = ToyScene(walls={'x-': wall, 'x+': wall})
        east, _ = render_toy(scene, heading_pose(0, (1.0, 0, 0), 0.0))
        west, _ = render_toy(scene, heading_pose(1, (-1.0, 0, 0), np.pi))
        assert_that(np.abs(east.gray() - west.gray()).mean(),
                    GreaterThan(0.05))

    def test_open_face(self):
        """ Looking at the open ceiling, nothing is hit. """
        pose = heading_pose(0, (0, 0, 0), 0.0, pitch=np.pi / 2)
        rgb, opacity = render_toy(ToyScene(), pose)
        assert_that(opacity.data.max(), Equals(0.0))
        assert_that(rgb.data.max(), Equals(0.0))

    def test_closed_walls_opaque(self):
        pose = heading_pose(0, (-2.5, 0.0, 0.0), np.pi)
        _, opacity = render_toy(ToyScene(), pose)
        assert_that(opacity.data.min(), Equals(1.0))

    def test_textureless_patch(self):
        """ Inside a textureless patch the view is flat. """
        scene = ToyScene(textureless=[Patch('y+', -2.6, -1.0, 2.6, 1.0)],
                         textureless_albedo=0.4)
        pose = heading_pose(0, (0.0, 2.0, 0.0), np.pi / 2)
        rgb, _ = render_toy(scene, pose)
        assert_that(rgb.gray(), AllClose(np.full((48, 64), 0.4)))

    def test_outside_room(self):
        with ExpectedException(ValueError, r'pose 4 at .* lies outside'):
            render_toy(ToyScene(), make_pose(4, (5.0, 0.0, 0.0)))

    def test_inside_pillar(self):
        scene = ToyScene(pillars=[Pillar(1.0, 0.0, 0.2)])
        with ExpectedException(ValueError, r'pose 4 at .* lies outside'):
            render_toy(scene, make_pose(4, (1.0, 0.1, 0.0)))


class TestToyTrajectory(object):
    def test_poses(self):
        scene = ToyScene()
        poses = toy_trajectory(scene, 16, seed=2)

        assert_that(poses, HasLength(16))
        assert_that([p.id for p in poses], Equals(list(range(16))))
        for pose in poses:
            assert scene.contains(pose.t)
            assert_that(abs(np.linalg.norm(pose.t[:2]) - 1.2),
                        LessThan(0.25))

    def test_seeded(self):
        scene = ToyScene()
        assert_that(toy_trajectory(scene, 8, seed=1),
                    Equals(toy_trajectory(scene, 8, seed=1)))
        assert toy_trajectory(scene, 8, seed=1) != toy_trajectory(
            scene, 8, seed=2)

    def test_radius_too_large(self):
        with ExpectedException(ValueError, r'trajectory radius 5 leaves'):
            toy_trajectory(ToyScene(), 4, radius=5.0)


class TestViewSources(object):
    def test_directory_round_trip(self, tmp_path):
        """
        Triplets written by the toy renderer read back from the ingestion
        layout with 8-bit precision.
        """
        renderer = ToyRenderer(ToyScene())
        pose = heading_pose(12, (0.3, 0.2, 0.0), 1.0)
        triplet = make_triplet(renderer, pose)
        write_triplet(str(tmp_path), triplet)
        read_back = make_triplet(ImageDirectory(str(tmp_path)), pose)

        assert_that(read_back.candidate_id, Equals(12))
        for name in ('central', 'plus', 'minus', 'opacity_central'):
            assert_that(getattr(read_back, name).data,
                        AllClose(getattr(triplet, name).data, 0.5 / 255))

    def test_central_view(self):
        """ The central view of a toy triplet is the plain rendering. """
        scene = ToyScene.from_config(RunConfig())
        pose = heading_pose(2, (1.1, 0.2, 0.1), 0.3, 0.05)
        rgb, opacity = render_toy(scene, pose)
        triplet = make_triplet(ToyRenderer(scene), pose)

        assert_that(triplet.central.data.tolist(), Equals(rgb.data.tolist()))
        assert_that(triplet.opacity_central.data.tolist(),
                    Equals(opacity.data.tolist()))

    def test_default_opacity(self, tmp_path):
        """ Without an opacity file, every pixel counts as opaque. """
        renderer = ToyRenderer(ToyScene())
        pose = heading_pose(3, (0.0, 0.0, 0.0), 2.0)
        write_triplet(str(tmp_path), renderer.triplet(pose))
        os.remove(str(tmp_path / '3_a.png'))

        triplet = ImageDirectory(str(tmp_path)).triplet(pose)
        assert_that(triplet.opacity_central.data.min(), Equals(1.0))

    def test_missing_view(self, tmp_path):
        with ExpectedException(ImageError, r'missing view file .*7_c.png'):
            ImageDirectory(str(tmp_path)).triplet(make_pose(7))

    def test_missing_directory(self, tmp_path):
        with ExpectedException(ImageError, r'view directory .* does not'):
            ImageDirectory(str(tmp_path / 'nowhere'))
