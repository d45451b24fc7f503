"""
Image measurements behind the observability score: SSIM stability,
scene-normalized gradient, symmetric photometric response, local entropy
and the sigmoid visibility gate. Per-pixel maps are returned as 2-D arrays.
Borders are replicated everywhere.
"""
import numpy as np
from scipy import ndimage
from scipy.special import expit

from posepick.render import LUMA


def _odd_window(name, size):
    size = int(size)
    if size < 3 or size % 2 == 0:
        raise ValueError('%s must be odd and >= 3, got %d' % (name, size))
    return size


class ObservabilityConfig(object):
    """
    Thresholds and window parameters of the observability measurements.

    :param tau_alpha: opacity gate threshold
    :param tau_b: brightness gate threshold (luminance in [0, 1])
    :param tau_h: local entropy gate threshold, bits
    :param steepness: sigmoid steepness ``k`` of all three gates
    :param epsilon: stabilizer of the gradient and response ratios
    :param entropy_window: side of the square entropy window, pixels
    :param entropy_bins: histogram bins over [0, 1]
    :param ssim_window: side of the Gaussian SSIM window, pixels
    :param ssim_sigma: standard deviation of the SSIM window, pixels
    :param ssim_k1: SSIM luminance stabilizer constant
    :param ssim_k2: SSIM contrast stabilizer constant
    """

    def __init__(self, tau_alpha=0.5, tau_b=0.2, tau_h=3.0, steepness=10.0,
                 epsilon=1e-8, entropy_window=9, entropy_bins=32,
                 ssim_window=11, ssim_sigma=1.5, ssim_k1=0.01, ssim_k2=0.03):
        self.tau_alpha = float(tau_alpha)
        self.tau_b = float(tau_b)
        self.tau_h = float(tau_h)
        self.steepness = float(steepness)
        self.epsilon = float(epsilon)
        self.entropy_window = _odd_window('entropy_window', entropy_window)
        self.entropy_bins = int(entropy_bins)
        self.ssim_window = _odd_window('ssim_window', ssim_window)
        self.ssim_sigma = float(ssim_sigma)
        self.ssim_k1 = float(ssim_k1)
        self.ssim_k2 = float(ssim_k2)

        values = (self.tau_alpha, self.tau_b, self.tau_h, self.steepness)
        if not all(np.isfinite(v) for v in values):
            raise ValueError('gate thresholds and steepness must be finite')
        if not self.epsilon > 0.0:
            raise ValueError('epsilon must be > 0, got %r' % (self.epsilon,))
        if self.entropy_bins < 2:
            raise ValueError('entropy_bins must be >= 2')
        if not self.ssim_sigma > 0.0:
            raise ValueError('ssim_sigma must be > 0')

    @classmethod
    def from_config(cls, config):
        return cls(**dict(
            (name, config.get_float('observability.' + name))
            for name in ('tau_alpha', 'tau_b', 'tau_h', 'steepness',
                         'epsilon', 'entropy_window', 'entropy_bins',
                         'ssim_window', 'ssim_sigma', 'ssim_k1', 'ssim_k2')))


DEFAULT_CONFIG = ObservabilityConfig()


def to_gray(img):
    """ Grayscale intensities of an ImageBuffer or array. """
    if hasattr(img, 'gray'):
        return img.gray()
    data = np.asarray(img, dtype=float)
    if data.ndim == 3:
        return data @ LUMA
    return data


def _gray_pair(a, b):
    x, y = to_gray(a), to_gray(b)
    if x.shape != y.shape:
        raise ValueError('image dimensions differ: %r vs %r'
                         % (x.shape[::-1], y.shape[::-1]))
    return x, y


def ssim(a, b, cfg=DEFAULT_CONFIG):
    """
    Mean structural similarity of two images over a Gaussian window, with
    stabilizers for a [0, 1] dynamic range.
    """
    x, y = _gray_pair(a, b)
    radius = cfg.ssim_window // 2

    def blur(im):
        # Gaussian window cut at the window radius
        return ndimage.gaussian_filter(im, cfg.ssim_sigma, mode='nearest',
                                       truncate=radius / cfg.ssim_sigma)

    c1 = cfg.ssim_k1 ** 2
    c2 = cfg.ssim_k2 ** 2
    mu_x = blur(x)
    mu_y = blur(y)
    sigma_xx = blur(x * x) - mu_x * mu_x
    sigma_yy = blur(y * y) - mu_y * mu_y
    sigma_xy = blur(x * y) - mu_x * mu_y
    ssim_map = (((2.0 * mu_x * mu_y + c1) * (2.0 * sigma_xy + c2)) /
                ((mu_x * mu_x + mu_y * mu_y + c1) *
                 (sigma_xx + sigma_yy + c2)))
    return float(ssim_map.mean())


def stability(triplet, cfg=DEFAULT_CONFIG):
    """
    Photometric stability of a view triplet: the worse of the SSIMs of the
    two perturbed views against the central view.
    """
    return min(ssim(triplet.plus, triplet.central, cfg),
               ssim(triplet.minus, triplet.central, cfg))


def gradient_magnitude(img):
    """ Central-difference gradient magnitude. """
    g = to_gray(img)
    dx = ndimage.correlate1d(g, [-0.5, 0.0, 0.5], axis=1, mode='nearest')
    dy = ndimage.correlate1d(g, [-0.5, 0.0, 0.5], axis=0, mode='nearest')
    return np.hypot(dx, dy)


def normalized_gradient(img, cfg=DEFAULT_CONFIG):
    """ Gradient magnitude divided by its image mean (plus epsilon). """
    magnitude = gradient_magnitude(img)
    return magnitude / (magnitude.mean() + cfg.epsilon)


def symmetric_response(plus, minus, cfg=DEFAULT_CONFIG):
    """ ``|I+ - I-| / (|I+| + |I-| + epsilon)`` per pixel. """
    p, m = _gray_pair(plus, minus)
    return np.abs(p - m) / (np.abs(p) + np.abs(m) + cfg.epsilon)


def local_entropy(img, cfg=DEFAULT_CONFIG):
    """
    Shannon entropy in bits of the intensity histogram in the window around
    every pixel.
    """
    g = to_gray(img)
    bins = cfg.entropy_bins
    size = cfg.entropy_window
    area = float(size * size)
    index = np.minimum((g * bins).astype(int), bins - 1)

    entropy = np.zeros(g.shape)
    for b in np.unique(index):
        counts = np.rint(area * ndimage.uniform_filter(
            (index == b).astype(float), size=size, mode='nearest'))
        p = counts / area
        present = p > 0
        entropy[present] -= p[present] * np.log2(p[present])
    return entropy


def soft_gate(z, tau, steepness):
    """ ``1 / (1 + exp(-k (z - tau)))`` """
    return expit(steepness * (np.asarray(z, dtype=float) - tau))


def visibility_mask(opacity, central, cfg=DEFAULT_CONFIG):
    """
    Soft visibility weight per pixel from opacity, brightness and local
    entropy of the central view.
    """
    alpha, b = _gray_pair(opacity, central)
    h = local_entropy(central, cfg)
    k = cfg.steepness
    return (soft_gate(alpha, cfg.tau_alpha, k) *
            soft_gate(b, cfg.tau_b, k) *
            soft_gate(h, cfg.tau_h, k))
