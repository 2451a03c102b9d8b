"""Coordinate tori: grids, coordinate loops, quadrature and periodic differentiation."""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import BadAxis, BadDimension, BadResolution, GridMismatch, SampleCountMismatch

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
SUPPORTED_DIMS = (3, 4)
MIN_RESOLUTION = 8
MIN_LOOP_SAMPLES = 16
DEFAULT_Q_REF = (0.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class Point:
    """A point of the torus, coordinates reduced mod 2π."""

    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) % TWO_PI for c in self.coords))

    @property
    def dim(self):
        return len(self.coords)

    def as_array(self):
        return np.array(self.coords, dtype=float)


@dataclass(frozen=True)
class Chart:
    """The torus [0, 2π)^dim sampled on a uniform grid of `resolution` points per axis."""

    dim: int
    resolution: int
    q_ref: tuple = field(default=None)

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise BadDimension(f"dimension must be 3 or 4, got {self.dim}")
        if int(self.resolution) != self.resolution or self.resolution < MIN_RESOLUTION:
            raise BadResolution(
                f"resolution must be an integer >= {MIN_RESOLUTION}, got {self.resolution}"
            )
        if self.dim == 4:
            q_ref = DEFAULT_Q_REF if self.q_ref is None else tuple(float(q) for q in self.q_ref)
            if len(q_ref) != 4:
                raise BadDimension(f"q_ref needs 4 components, got {len(q_ref)}")
            object.__setattr__(self, "q_ref", q_ref)
        elif self.q_ref is not None:
            raise BadDimension("q_ref is only meaningful on a 4-dimensional chart")

    @property
    def spacing(self):
        return TWO_PI / self.resolution

    @property
    def grid_shape(self):
        return (self.resolution,) * self.dim

    @property
    def size(self):
        return self.resolution**self.dim

    @property
    def volume(self):
        return TWO_PI**self.dim

    @cached_property
    def axis_coordinates(self):
        coords = np.arange(self.resolution) * self.spacing
        coords.setflags(write=False)
        return coords

    @cached_property
    def points(self):
        """Grid points in row-major order, shape (resolution**dim, dim)."""
        mesh = np.meshgrid(*([self.axis_coordinates] * self.dim), indexing="ij")
        points = np.stack([m.reshape(-1) for m in mesh], axis=-1)
        points.setflags(write=False)
        return points

    @cached_property
    def wavenumbers(self):
        k = np.fft.fftfreq(self.resolution, d=1.0 / self.resolution)
        if self.resolution % 2 == 0:
            k[self.resolution // 2] = 0.0
        k.setflags(write=False)
        return k

    def to_grid(self, samples):
        values = np.asarray(samples)
        if values.shape[0] != self.size:
            raise SampleCountMismatch(
                f"expected {self.size} grid samples, got {values.shape[0]}"
            )
        return values.reshape(self.grid_shape + values.shape[1:])

    def from_grid(self, values):
        values = np.asarray(values)
        return values.reshape((self.size,) + values.shape[self.dim :])

    def indices_of(self, points):
        """Flat grid indices of `points`; raises GridMismatch for off-grid points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dim:
            raise GridMismatch(f"points have {points.shape[1]} coordinates, chart has {self.dim}")
        scaled = np.mod(points, TWO_PI) / self.spacing
        nearest = np.rint(scaled)
        if np.max(np.abs(scaled - nearest), initial=0.0) > 1e-8:
            raise GridMismatch("points do not lie on the chart grid")
        nearest = nearest.astype(int) % self.resolution
        return np.ravel_multi_index(tuple(nearest.T), self.grid_shape)


def make_chart(dim, resolution, q_ref=None):
    chart = Chart(dim=dim, resolution=resolution, q_ref=q_ref)
    logger.debug("chart T^%d with %d points", chart.dim, chart.size)
    return chart


def loop_samples(chart, axis, n):
    """`n` points on the coordinate circle through the origin along `axis` (1-based)."""
    if not 1 <= axis <= chart.dim:
        raise BadAxis(f"axis must be in 1..{chart.dim}, got {axis}")
    if n < MIN_LOOP_SAMPLES:
        raise SampleCountMismatch(
            f"a loop needs at least {MIN_LOOP_SAMPLES} samples, got {n}"
        )
    points = np.zeros((n, chart.dim))
    points[:, axis - 1] = np.arange(n) * (TWO_PI / n)
    return points


def integrate_periodic(chart, samples, over="grid"):
    """Rectangle rule on the periodic grid (`over="grid"`) or on one coordinate loop."""
    values = np.asarray(samples)
    if over == "grid":
        if values.shape[0] != chart.size:
            raise SampleCountMismatch(
                f"expected {chart.size} grid samples, got {values.shape[0]}"
            )
        return values.mean(axis=0) * chart.volume
    if over == "loop":
        if values.shape[0] == 0:
            raise SampleCountMismatch("empty loop")
        return values.mean(axis=0) * TWO_PI
    raise ValueError(f"unknown integration domain {over!r}")


# --------------------------
# Periodic differentiation
# --------------------------
def spectral_gradient(chart, samples):
    """Partial derivatives of grid samples, shape (P, dim) + trailing shape."""
    values = np.asarray(samples)
    grid = chart.to_grid(values)
    tail = values.shape[1:]
    axes = tuple(range(chart.dim))
    coefficients = np.fft.fftn(grid, axes=axes)
    result = np.empty((chart.size, chart.dim) + tail, dtype=complex)
    for axis in range(chart.dim):
        shape = [1] * grid.ndim
        shape[axis] = chart.resolution
        derivative = np.fft.ifftn(coefficients * (1j * chart.wavenumbers).reshape(shape), axes=axes)
        result[:, axis] = derivative.reshape((chart.size,) + tail)
    if np.iscomplexobj(values):
        return result
    return result.real


def central_gradient(chart, samples):
    """Fourth-order central differences; fallback for sampled sections."""
    values = np.asarray(samples)
    grid = chart.to_grid(values)
    h = chart.spacing
    result = np.empty((chart.size, chart.dim) + values.shape[1:], dtype=values.dtype)
    for axis in range(chart.dim):
        derivative = (
            -np.roll(grid, -2, axis=axis)
            + 8.0 * np.roll(grid, -1, axis=axis)
            - 8.0 * np.roll(grid, 1, axis=axis)
            + np.roll(grid, 2, axis=axis)
        ) / (12.0 * h)
        result[:, axis] = chart.from_grid(derivative)
    return result


def spectral_antiderivative(chart, one_form):
    """Periodic ψ with zero mean whose gradient is the oscillating part of `one_form`.

    Returns (ψ samples, mean of each component). For a closed form the mean components
    are the periods divided by 2π.
    """
    omega = np.asarray(one_form)
    if omega.shape != (chart.size, chart.dim):
        raise SampleCountMismatch(
            f"expected a 1-form of shape {(chart.size, chart.dim)}, got {omega.shape}"
        )
    means = omega.mean(axis=0)
    axes = tuple(range(chart.dim))
    k = np.meshgrid(*([chart.wavenumbers] * chart.dim), indexing="ij")
    k_squared = sum(kj**2 for kj in k)
    numerator = np.zeros(chart.grid_shape, dtype=complex)
    for axis in range(chart.dim):
        component = chart.to_grid(omega[:, axis] - means[axis])
        numerator += -1j * k[axis] * np.fft.fftn(component, axes=axes)
    coefficients = np.divide(
        numerator, k_squared, out=np.zeros_like(numerator), where=k_squared > 0
    )
    psi = np.fft.ifftn(coefficients, axes=axes)
    if not np.iscomplexobj(omega):
        psi = psi.real
    return chart.from_grid(psi), means
