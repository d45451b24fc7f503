import numpy as np
from scipy.spatial.transform import Rotation
from testtools.matchers import Mismatch

from posepick.poses import Pose
from posepick.render import ImageBuffer, ViewTriplet


def captured_lines(capfd):
    """ Read the captured stdout and stderr and parse into lines. """
    out, err = capfd.readouterr()

    out_lines = out.split('\n')
    # Last line of captured output should always be blank
    assert out_lines.pop() == ''

    err_lines = err.split('\n')
    assert err_lines.pop() == ''

    return out_lines, err_lines


class CloseTo(object):
    """ Matches a number within ``tol`` (absolute) of ``expected``. """

    def __init__(self, expected, tol=1e-12):
        self.expected = expected
        self.tol = tol

    def __str__(self):
        return 'CloseTo(%r, tol=%r)' % (self.expected, self.tol)

    def match(self, actual):
        if abs(actual - self.expected) <= self.tol:
            return None
        return Mismatch('%r is not within %r of %r'
                        % (actual, self.tol, self.expected))


class AllClose(object):
    """ Matches an array element-wise within ``tol`` of ``expected``. """

    def __init__(self, expected, tol=1e-12):
        self.expected = np.asarray(expected, dtype=float)
        self.tol = tol

    def __str__(self):
        return 'AllClose(%r, tol=%r)' % (self.expected, self.tol)

    def match(self, actual):
        actual = np.asarray(actual, dtype=float)
        if actual.shape != self.expected.shape:
            return Mismatch('shape %r != %r'
                            % (actual.shape, self.expected.shape))
        deviation = np.max(np.abs(actual - self.expected), initial=0.0)
        if deviation <= self.tol:
            return None
        return Mismatch('max deviation %r exceeds %r' % (deviation, self.tol))


def make_pose(pose_id, t=(0.0, 0.0, 0.0), rotvec_deg=(0.0, 0.0, 0.0)):
    """ A pose from a translation and a rotation vector in degrees. """
    return Pose.from_rotation(
        pose_id, t, Rotation.from_rotvec(np.radians(rotvec_deg)))


def random_poses(rng, n, start_id=0, spread=1.0):
    rotations = Rotation.random(n, random_state=rng.integers(1 << 31))
    return [Pose.from_rotation(start_id + i,
                               rng.uniform(-spread, spread, size=3),
                               rotations[i])
            for i in range(n)]


def checker(height, width, square=1, low=0.0, high=1.0):
    """ A gray checkerboard with ``square``-pixel squares. """
    y, x = np.mgrid[0:height, 0:width]
    parity = (y // square + x // square) % 2
    return np.where(parity == 0, low, high)


def make_triplet(central, plus=None, minus=None, opacity=None,
                 candidate_id=0):
    """ A view triplet from arrays; missing views copy the central one. """
    central = np.asarray(central, dtype=float)
    return ViewTriplet(
        candidate_id, ImageBuffer(central),
        ImageBuffer(central if plus is None else plus),
        ImageBuffer(central if minus is None else minus),
        ImageBuffer(np.ones(central.shape[:2]) if opacity is None
                    else opacity))


def write_text(path, text):
    with open(str(path), 'w') as f:
        f.write(text)
    return str(path)


def read_text(path):
    with open(str(path)) as f:
        return f.read()


# Pixel-by-pixel reference implementations of the image measurements,
# written independently of scipy.ndimage.

def _windows(img, size):
    r = size // 2
    padded = np.pad(img, r, mode='edge')
    return np.lib.stride_tricks.sliding_window_view(padded, (size, size))


def naive_ssim(x, y, size=11, sigma=1.5, k1=0.01, k2=0.03):
    m = (size - 1) / 2.0
    yy, xx = np.mgrid[-m:m + 1, -m:m + 1]
    kernel = np.exp(-(xx ** 2 + yy ** 2) / (2.0 * sigma ** 2))
    kernel /= kernel.sum()
    wx = _windows(x, size)
    wy = _windows(y, size)
    total = 0.0
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            px = wx[i, j]
            py = wy[i, j]
            mx = np.sum(kernel * px)
            my = np.sum(kernel * py)
            vx = np.sum(kernel * px * px) - mx * mx
            vy = np.sum(kernel * py * py) - my * my
            cxy = np.sum(kernel * px * py) - mx * my
            c1 = k1 ** 2
            c2 = k2 ** 2
            total += (((2 * mx * my + c1) * (2 * cxy + c2)) /
                      ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return total / x.size


def naive_gradient(img):
    p = np.pad(img, 1, mode='edge')
    out = np.zeros(img.shape)
    for i in range(img.shape[0]):
        for j in range(img.shape[1]):
            dx = (p[i + 1, j + 2] - p[i + 1, j]) / 2.0
            dy = (p[i + 2, j + 1] - p[i, j + 1]) / 2.0
            out[i, j] = np.sqrt(dx * dx + dy * dy)
    return out


def naive_normalized_gradient(img, epsilon=1e-8):
    g = naive_gradient(img)
    return g / (g.mean() + epsilon)


def naive_response(plus, minus, epsilon=1e-8):
    return np.abs(plus - minus) / (np.abs(plus) + np.abs(minus) + epsilon)


def naive_entropy(img, size=9, bins=32):
    index = np.minimum(np.floor(img * bins).astype(int), bins - 1)
    windows = _windows(index, size)
    out = np.zeros(img.shape)
    for i in range(img.shape[0]):
        for j in range(img.shape[1]):
            counts = np.bincount(windows[i, j].ravel(), minlength=bins)
            p = counts[counts > 0] / float(size * size)
            out[i, j] = -np.sum(p * np.log2(p))
    return out


def naive_sigmoid(z, tau, k):
    return 1.0 / (1.0 + np.exp(-k * (z - tau)))


def naive_visibility(opacity, central, tau_alpha=0.5, tau_b=0.2, tau_h=3.0,
                     k=10.0):
    return (naive_sigmoid(opacity, tau_alpha, k) *
            naive_sigmoid(central, tau_b, k) *
            naive_sigmoid(naive_entropy(central), tau_h, k))


def naive_observability(central, plus, minus, opacity):
    """ Observability of gray arrays with the default parameters. """
    s = min(naive_ssim(plus, central), naive_ssim(minus, central))
    w = naive_visibility(opacity, central)
    return s * np.mean(w * naive_normalized_gradient(central) *
                       naive_response(plus, minus))
