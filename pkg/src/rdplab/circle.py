"""Unit-circle source coding with shared randomness.

The source X is uniform on the unit circle. A code with m arcs and n shared
seeds partitions the circle, for each seed value, into m equal half-open
arcs; different seeds rotate the partition by multiples of 2*pi/(m*n). The
decoder family built here: conditional-mean reconstruction at radius
m*sin(pi/m)/pi, a perceptually perfect sampler uniform on the fine arc of
width 2*pi/(m*n) around the reconstruction angle, and the convex
interpolation between the two that trades distortion against perception.

Closed forms (all for the uniform circle source, squared-error distortion,
squared-W2 perception):

    distortion(m)       = 1 - m^2 sin^2(pi/m) / pi^2
    perception(m, n)    = 1 - m^2 (2 n sin(pi/(m n)) - sin(pi/m)) sin(pi/m) / pi^2
    perception(m, inf)  = (1 - m sin(pi/m) / pi)^2
    tradeoff(m, n, P)   = distortion(m) + [(sqrt(perception(m,n)) - sqrt(P))_+]^2

The n -> infinity mode is the distinguished value CONTINUOUS_DITHER with its
own continuous-dither sampler; the finite-n formulas converge to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .transport import w2_empirical

TWO_PI = 2.0 * math.pi

# Unlimited shared randomness: the rotation offset becomes a continuous
# dither uniform on [0, 2*pi/m) instead of an index into n rotations.
CONTINUOUS_DITHER = float("inf")


def wrap_angle(theta):
    """Reduce angles into [0, 2*pi)."""
    return np.mod(theta, TWO_PI)


@dataclass(frozen=True)
class CirclePoint:
    """A point on the unit circle, stored as its angle in [0, 2*pi)."""

    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"non-finite angle {self.theta}")
        object.__setattr__(self, "theta", float(wrap_angle(self.theta)))

    @property
    def xy(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta)])

    @classmethod
    def from_xy(cls, point) -> "CirclePoint":
        x, y = np.asarray(point, dtype=float)
        return cls(math.atan2(y, x))


@dataclass(frozen=True)
class AngularCode:
    """An (m, n) unit-circle code: m arcs per partition, n shared seeds.

    ``m`` is the codebook size (rate log2 m bits); ``n`` is the number of
    shared seed values (common-randomness rate log2 n bits) or
    CONTINUOUS_DITHER for the unlimited-seed mode.
    """

    m: int
    n: float  # positive int, or CONTINUOUS_DITHER

    def __post_init__(self):
        if not (isinstance(self.m, (int, np.integer)) and self.m >= 1):
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        if self.n == CONTINUOUS_DITHER:
            object.__setattr__(self, "n", CONTINUOUS_DITHER)
            return
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError(
                f"n must be a positive integer or CONTINUOUS_DITHER, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def is_dithered(self) -> bool:
        return self.n == CONTINUOUS_DITHER

    @property
    def rate(self) -> float:
        return math.log2(self.m)

    @property
    def common_rate(self) -> float:
        return CONTINUOUS_DITHER if self.is_dithered else math.log2(self.n)

    @property
    def arc_width(self) -> float:
        """Width of one encoder cell, 2*pi/m."""
        return TWO_PI / self.m

    @property
    def fine_arc_width(self) -> float:
        """Width of the perfect-sampler arc, 2*pi/(m*n); zero in dither mode."""
        return 0.0 if self.is_dithered else TWO_PI / (self.m * self.n)

    def seed_offset(self, k) -> np.ndarray | float:
        """Rotation offset of the seed-k partition.

        For finite n the seed is an integer in [0, n) and the offset is
        2*pi*k/(m*n); in dither mode the seed IS the offset, a float in
        [0, 2*pi/m).
        """
        if self.is_dithered:
            k = np.asarray(k, dtype=float)
            if np.any(k < 0) or np.any(k >= self.arc_width):
                raise ValueError(
                    f"dither must lie in [0, {self.arc_width:.6g}), got {k!r}")
            return k
        k = np.asarray(k)
        if not np.issubdtype(k.dtype, np.integer):
            raise ValueError(f"seed must be an integer for finite n, got {k!r}")
        if np.any(k < 0) or np.any(k >= self.n):
            raise ValueError(f"seed out of range [0, {self.n}): {k!r}")
        return TWO_PI * k / (self.m * self.n)


def centroid_radius(m: int) -> float:
    """Radius of the conditional-mean reconstruction, m*sin(pi/m)/pi."""
    return m * math.sin(math.pi / m) / math.pi


def encode(theta, k, code: AngularCode):
    """Index of the half-open arc containing ``theta`` under seed ``k``.

    Cell j (for seed k, finite n) is [((2j-1)n + 2k) pi/(m n),
    ((2j+1)n + 2k) pi/(m n)) reduced mod 2*pi; every boundary angle belongs
    to the single arc whose closed lower endpoint it is, so the assignment
    is total and deterministic. Accepts scalars or arrays.
    """
    offset = code.seed_offset(k)
    u = np.asarray(theta, dtype=float) - offset
    j = np.floor(u * code.m / TWO_PI + 0.5).astype(int) % code.m
    if np.ndim(theta) == 0 and np.ndim(k) == 0:
        return int(j)
    return j


def reconstruction_angle(j, k, code: AngularCode):
    """Center angle of cell (j, k): 2*pi*j/m + seed offset."""
    offset = code.seed_offset(k)
    return wrap_angle(TWO_PI * np.asarray(j) / code.m + offset)


def mmse_reconstruct(j, k, code: AngularCode) -> np.ndarray:
    """Conditional mean of X given (j, k): the cell centroid.

    Returns m*sin(pi/m)/pi * (cos phi, sin phi) with phi the cell's center
    angle. Scalar inputs give shape (2,), arrays shape (..., 2).
    """
    j = np.asarray(j)
    if np.any(j < 0) or np.any(j >= code.m):
        raise ValueError(f"index out of range [0, {code.m}): {j!r}")
    phi = reconstruction_angle(j, k, code)
    r = centroid_radius(code.m)
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)


def analytic_distortion(m: int) -> float:
    """Mean squared error of the conditional-mean decoder, 1 - m^2 sin^2(pi/m)/pi^2."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return 1.0 - (m * math.sin(math.pi / m) / math.pi) ** 2


def analytic_perception(m: int, n) -> float:
    """Squared W2 between the source and the conditional-mean reconstruction.

    Finite n: 1 - m^2 (2 n sin(pi/(m n)) - sin(pi/m)) sin(pi/m) / pi^2.
    CONTINUOUS_DITHER: the n -> infinity limit (1 - m sin(pi/m)/pi)^2.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    s = math.sin(math.pi / m)
    if n == CONTINUOUS_DITHER:
        return (1.0 - m * s / math.pi) ** 2
    if n < 1:
        raise ValueError(f"n must be >= 1 or CONTINUOUS_DITHER, got {n}")
    return 1.0 - m * m * (2.0 * n * math.sin(math.pi / (m * n)) - s) * s / math.pi ** 2


def interpolation_weight(m: int, n, p) -> float:
    """Weight on the conditional mean: min(sqrt(P / perception(m,n)), 1).

    ``p=None`` means no perception constraint and gives weight 1.
    """
    if p is None:
        return 1.0
    if p < 0:
        raise ValueError(f"perception level must be >= 0, got {p}")
    w2sq = analytic_perception(m, n)
    if p >= w2sq:
        return 1.0
    return math.sqrt(p / w2sq)


def analytic_tradeoff(m: int, n, p) -> float:
    """Minimum distortion of the (m, n) scheme at perception level ``p``.

    distortion(m) + [(sqrt(perception(m, n)) - sqrt(p))_+]^2; ``p=None``
    removes the perception constraint.
    """
    d = analytic_distortion(m)
    if p is None:
        return d
    if p < 0:
        raise ValueError(f"perception level must be >= 0, got {p}")
    w2 = math.sqrt(analytic_perception(m, n))
    gap = max(w2 - math.sqrt(p), 0.0)
    return d + gap * gap


def sample_perfect(j, k, code: AngularCode, rng: np.random.Generator) -> np.ndarray:
    """Perceptually perfect sample: uniform on the fine arc around cell (j, k).

    The arc has width 2*pi/(m*n) and is centered at the reconstruction angle;
    marginalized over (j, k) the output is uniform on the unit circle. In
    dither mode the arc degenerates to the reconstruction angle itself.
    """
    j = np.asarray(j)
    if np.any(j < 0) or np.any(j >= code.m):
        raise ValueError(f"index out of range [0, {code.m}): {j!r}")
    phi = reconstruction_angle(j, k, code)
    half = code.fine_arc_width / 2.0
    if half > 0.0:
        phi = phi + rng.uniform(-half, half, size=np.shape(phi))
    return np.stack([np.cos(phi), np.sin(phi)], axis=-1)


@dataclass(frozen=True)
class CircleReconstruction:
    """The three decoder outputs for one encoded sample.

    x_tilde: conditional-mean estimate (radius m*sin(pi/m)/pi);
    x_prime: perceptually perfect sample (unit norm);
    x_hat = (1-alpha)*x_prime + alpha*x_tilde.
    """

    x_tilde: np.ndarray
    x_prime: np.ndarray
    x_hat: np.ndarray
    alpha: float


def interpolated_reconstruction(theta: float, k, code: AngularCode, p,
                                rng: np.random.Generator) -> CircleReconstruction:
    """Encode ``theta`` under seed ``k`` and decode at perception level ``p``.

    The interpolation weight is min(sqrt(P/perception(m,n)), 1), so
    conditioned on the cell, x_hat is uniform on an arc of radius (1-alpha)
    centered at alpha*x_tilde (a circle of radius 1-alpha*(1-r_m) in dither
    mode). ``p=None`` means unconstrained and returns x_tilde.
    """
    j = encode(theta, k, code)
    x_tilde = mmse_reconstruct(j, k, code)
    x_prime = sample_perfect(j, k, code, rng)
    alpha = interpolation_weight(code.m, code.n, p)
    x_hat = (1.0 - alpha) * x_prime + alpha * x_tilde
    return CircleReconstruction(x_tilde=x_tilde, x_prime=x_prime, x_hat=x_hat, alpha=alpha)


def dithered_encode_decode(theta, dither, m: int) -> np.ndarray:
    """Subtractive dithered quantization in the angular domain.

    Shift by the dither, round to the nearest multiple of 2*pi/m, shift back,
    and scale to radius m*sin(pi/m)/pi. This is the unlimited-seed limit of
    encode followed by mmse_reconstruct.
    """
    dither_arr = np.asarray(dither, dtype=float)
    if np.any(dither_arr < 0) or np.any(dither_arr >= TWO_PI / m):
        raise ValueError(f"dither must lie in [0, {TWO_PI / m:.6g})")
    code = AngularCode(m, CONTINUOUS_DITHER)
    j = encode(theta, dither, code)
    return mmse_reconstruct(j, dither, code)


@dataclass(frozen=True)
class TradeoffPoint:
    """One point on a distortion-perception curve.

    ``perception`` is the achieved squared W2 (analytic, or the empirical
    paired-sample estimate for Monte Carlo points). ``distortion_se`` is the
    standard error of the Monte Carlo distortion mean.
    """

    rate: float
    common_rate: float
    distortion: float
    perception: float
    provenance: str  # "analytic" | "monte-carlo"
    n_samples: int | None = None
    distortion_se: float | None = None


def analytic_tradeoff_point(m: int, n, p) -> TradeoffPoint:
    """Closed-form tradeoff point; achieved perception is min(p, perception(m,n))."""
    w2sq = analytic_perception(m, n)
    achieved_p = w2sq if p is None else min(p, w2sq)
    return TradeoffPoint(
        rate=math.log2(m),
        common_rate=CONTINUOUS_DITHER if n == CONTINUOUS_DITHER else math.log2(n),
        distortion=analytic_tradeoff(m, n, p),
        perception=achieved_p,
        provenance="analytic",
    )


def run_scheme(code: AngularCode, p, n_samples: int, rng: np.random.Generator
               ) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized end-to-end run; returns (source points, reconstructions)."""
    thetas = rng.uniform(0.0, TWO_PI, n_samples)
    if code.is_dithered:
        seeds = rng.uniform(0.0, code.arc_width, n_samples)
    else:
        seeds = rng.integers(0, code.n, n_samples)
    j = encode(thetas, seeds, code)
    phi = reconstruction_angle(j, seeds, code)
    half = code.fine_arc_width / 2.0
    psi = phi + rng.uniform(-half, half, n_samples) if half > 0.0 else phi
    alpha = interpolation_weight(code.m, code.n, p)
    r = centroid_radius(code.m)
    x = np.column_stack([np.cos(thetas), np.sin(thetas)])
    x_hat = np.column_stack([
        alpha * r * np.cos(phi) + (1.0 - alpha) * np.cos(psi),
        alpha * r * np.sin(phi) + (1.0 - alpha) * np.sin(psi),
    ])
    return x, x_hat


def monte_carlo_scheme_eval(code: AngularCode, p, n_samples: int,
                            rng: np.random.Generator,
                            n_perception: int = 2000) -> TradeoffPoint:
    """Empirical tradeoff point from ``n_samples`` end-to-end runs.

    Distortion is the mean squared error over all samples; perception is the
    empirical squared W2 (exact assignment) between the first
    ``n_perception`` paired source/reconstruction samples.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x, x_hat = run_scheme(code, p, n_samples, rng)
    sq_err = np.sum((x - x_hat) ** 2, axis=1)
    n_p = min(n_perception, n_samples)
    return TradeoffPoint(
        rate=code.rate,
        common_rate=code.common_rate,
        distortion=float(sq_err.mean()),
        perception=w2_empirical(x[:n_p], x_hat[:n_p]),
        provenance="monte-carlo",
        n_samples=n_samples,
        distortion_se=float(sq_err.std(ddof=1) / math.sqrt(n_samples)),
    )


@dataclass(frozen=True)
class SupportGeometry:
    """Geometry of the decoder-output supports for one (m, n, P) setting.

    For finite n the interpolated output lives on m*n arcs of radius
    ``arc_radius`` centered at ``arc_centers`` (= alpha * centroid points),
    each spanning ``arc_half_width`` to either side of the centroid angle.
    In dither mode the supports are full circles and ``x_hat_radius`` is the
    radius of the interpolated one.
    """

    m: int
    n: float
    p: float | None
    alpha: float
    centroid_radius: float
    centroid_angles: np.ndarray
    arc_radius: float
    arc_center_radius: float
    arc_half_width: float
    x_hat_radius: float  # dither mode only; equals 1 - alpha*(1 - r_m)

    @property
    def centroids(self) -> np.ndarray:
        return self.centroid_radius * np.column_stack(
            [np.cos(self.centroid_angles), np.sin(self.centroid_angles)])

    @property
    def arc_centers(self) -> np.ndarray:
        return self.arc_center_radius * np.column_stack(
            [np.cos(self.centroid_angles), np.sin(self.centroid_angles)])


def support_geometry(m: int, n, p) -> SupportGeometry:
    """Closed-form support geometry of x_tilde, x_prime and x_hat."""
    alpha = interpolation_weight(m, n, p)
    r = centroid_radius(m)
    if n == CONTINUOUS_DITHER:
        angles = np.array([])
        half = 0.0
    else:
        angles = wrap_angle(TWO_PI * np.arange(m * n) / (m * n))
        half = math.pi / (m * n)
    return SupportGeometry(
        m=m, n=n, p=p, alpha=alpha,
        centroid_radius=r,
        centroid_angles=angles,
        arc_radius=1.0 - alpha,
        arc_center_radius=alpha * r,
        arc_half_width=half,
        x_hat_radius=1.0 - alpha * (1.0 - r),
    )
