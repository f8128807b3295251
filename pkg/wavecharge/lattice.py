#
# Copyright 2026 The wavecharge Authors. All rights reserved.
#
#
# Licensed under the Apache License, Version 2.0 (the "License"); you may not
# use this file except in compliance with the License. You may obtain a copy of
# the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
# WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
# License for the specific language governing permissions and limitations under
# the License.
#

"""Periodic-box discretization, fast trigonometric transforms, the exact
free half-wave propagator and free Duhamel integrals.

Grid point ``i`` along each axis sits at ``-L/2 + i*h``; the box is centered
at the origin and wraps periodically. Spectral work uses the real FFTs of
``scipy.fft`` (half spectrum along the last axis).
"""

import dataclasses
import functools
import logging

import numpy as np
from numpy.polynomial import legendre
from scipy import fft as sfft
from scipy import ndimage

from wavecharge import convert
from wavecharge import exceptions

logger = logging.getLogger(__name__)

MIN_POINTS_PER_AXIS = 16


@dataclasses.dataclass(frozen=True)
class BoxGrid:
  """A cube of side ``box_length`` with ``n_per_axis`` cells per axis."""

  n_per_axis: int
  box_length: float

  def __post_init__(self):
    n = self.n_per_axis
    if int(n) != n or n < MIN_POINTS_PER_AXIS or (n & (n - 1)) != 0:
      raise ValueError("n_per_axis must be a power of two >= %d, got %r"
                       % (MIN_POINTS_PER_AXIS, n))
    if not self.box_length > 0:
      raise ValueError("box_length must be positive, got %r" % self.box_length)
    object.__setattr__(self, "n_per_axis", int(n))
    object.__setattr__(self, "box_length", float(self.box_length))

  @property
  def spacing(self):
    return self.box_length / self.n_per_axis

  @property
  def cell_volume(self):
    return self.spacing ** 3

  @property
  def shape(self):
    return (self.n_per_axis,) * 3

  @property
  def size(self):
    return self.n_per_axis ** 3

  @property
  def origin(self):
    return -0.5 * self.box_length

  @functools.cached_property
  def axis(self):
    """Coordinates of the grid points along one axis."""
    return self.origin + self.spacing * np.arange(self.n_per_axis)

  @functools.cached_property
  def mesh(self):
    """Tuple (X, Y, Z) of coordinate arrays, indexing 'ij'."""
    return tuple(np.meshgrid(self.axis, self.axis, self.axis, indexing="ij"))

  @functools.cached_property
  def wavenumbers(self):
    """Angular wavenumbers along one axis, FFT order."""
    return 2.0 * np.pi * sfft.fftfreq(self.n_per_axis, d=self.spacing)

  @functools.cached_property
  def half_wavenumbers(self):
    """Angular wavenumbers along the halved (last) axis of a real FFT."""
    return 2.0 * np.pi * sfft.rfftfreq(self.n_per_axis, d=self.spacing)

  @functools.cached_property
  def half_k(self):
    """Tuple (KX, KY, KZ) broadcastable over the real-FFT half spectrum."""
    k = self.wavenumbers
    kz = self.half_wavenumbers
    return (k[:, None, None], k[None, :, None], kz[None, None, :])

  @functools.cached_property
  def half_k2(self):
    kx, ky, kz = self.half_k
    return kx ** 2 + ky ** 2 + kz ** 2

  @functools.cached_property
  def half_kabs(self):
    return np.sqrt(self.half_k2)

  @functools.cached_property
  def half_weights(self):
    """Parseval multiplicities of the half spectrum (2 for interior kz)."""
    n = self.n_per_axis
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return np.broadcast_to(w[None, None, :], (n, n, n // 2 + 1))

  def wrap(self, d):
    """Minimum-image representative of a displacement (any shape)."""
    L = self.box_length
    return (np.asarray(d, dtype=float) + 0.5 * L) % L - 0.5 * L

  def radius_from(self, center):
    """Minimum-image distance of every grid point from center."""
    c = convert.normalize_point(center)
    X, Y, Z = self.mesh
    return np.sqrt(self.wrap(X - c[0]) ** 2 + self.wrap(Y - c[1]) ** 2
                   + self.wrap(Z - c[2]) ** 2)

  def index_coordinates(self, points):
    """Fractional grid indices of physical points, shape (3, m)."""
    pts = convert.point_list(points)
    return ((pts - self.origin) / self.spacing).T

  def describe(self):
    return {"n_per_axis": self.n_per_axis, "box_length": self.box_length}


@dataclasses.dataclass
class ScalarField:
  """Real samples of a field on a BoxGrid."""

  grid: BoxGrid
  values: np.ndarray

  def __post_init__(self):
    self.values = np.asarray(self.values, dtype=float)
    if self.values.shape != self.grid.shape:
      raise ValueError("Field shape %s does not match grid %s"
                       % (self.values.shape, self.grid.shape))
    if not np.isfinite(self.values).all():
      raise ValueError("Field contains non-finite values")

  @classmethod
  def zeros(cls, grid):
    return cls(grid, np.zeros(grid.shape))

  @classmethod
  def from_function(cls, grid, func):
    """Samples func(X, Y, Z) at the grid points."""
    return cls(grid, func(*grid.mesh))

  def copy(self):
    return ScalarField(self.grid, self.values.copy())

  def inner(self, other):
    """L2 inner product with cell-volume weights."""
    check_same_grid(self, other)
    return float(np.vdot(self.values, other.values)) * self.grid.cell_volume

  def norm(self):
    return np.sqrt(max(self.inner(self), 0.0))

  def __add__(self, other):
    check_same_grid(self, other)
    return ScalarField(self.grid, self.values + other.values)

  def __sub__(self, other):
    check_same_grid(self, other)
    return ScalarField(self.grid, self.values - other.values)

  def __mul__(self, scalar):
    return ScalarField(self.grid, self.values * float(scalar))

  __rmul__ = __mul__


@dataclasses.dataclass
class WaveState:
  """The pair (u, u_t) at one time."""

  u: ScalarField
  ut: ScalarField
  time: float = 0.0

  def __post_init__(self):
    check_same_grid(self.u, self.ut)
    self.time = float(self.time)

  @property
  def grid(self):
    return self.u.grid

  @classmethod
  def zeros(cls, grid, time=0.0):
    return cls(ScalarField.zeros(grid), ScalarField.zeros(grid), time)

  @classmethod
  def from_arrays(cls, grid, u, ut, time=0.0):
    return cls(ScalarField(grid, u), ScalarField(grid, ut), time)

  def copy(self):
    return WaveState(self.u.copy(), self.ut.copy(), self.time)

  def scaled(self, factor):
    return WaveState(self.u * factor, self.ut * factor, self.time)

  def __add__(self, other):
    return WaveState(self.u + other.u, self.ut + other.ut, self.time)


@dataclasses.dataclass
class SpectralMultiplier:
  """A nonnegative Fourier multiplier on the real-FFT half spectrum."""

  grid: BoxGrid
  symbol: np.ndarray

  def __post_init__(self):
    if np.any(self.symbol < 0):
      raise ValueError("Spectral symbol must be nonnegative")
    if self.symbol[0, 0, 0] != 0:
      raise ValueError("Spectral symbol must vanish at k=0")

  @classmethod
  def sqrt_laplacian(cls, grid):
    """A = sqrt(-Laplacian)."""
    return cls(grid, grid.half_kabs)

  @classmethod
  def laplacian(cls, grid):
    """-Laplacian."""
    return cls(grid, grid.half_k2)

  def apply(self, field):
    check_same_grid(field, self)
    return ScalarField(self.grid, sfft.irfftn(
      self.symbol * sfft.rfftn(field.values), s=self.grid.shape))


def check_same_grid(a, b):
  """Raises GridMismatchError unless a and b carry the same grid."""
  ga = getattr(a, "grid", a)
  gb = getattr(b, "grid", b)
  if ga != gb:
    raise exceptions.GridMismatchError(ga, gb)


def forward_transform(field):
  """Real FFT of a field (half spectrum along the z axis).

    :param field: The field to transform.
    :type field: ScalarField

    :rtype: numpy.ndarray of complex, shape (n, n, n//2 + 1)
    """
  return sfft.rfftn(field.values)


def inverse_transform(coefficients, grid):
  """Inverse of forward_transform.

    :rtype: ScalarField
    """
  return ScalarField(grid, sfft.irfftn(coefficients, s=grid.shape))


def half_wave_rotation(grid, dt):
  """Mode-wise coefficients of the free flow over dt.

    Returns (cos, sin_over_k, k_sin) on the half spectrum; the k=0 mode
    uses the limits (1, dt, 0).
    """
  k = grid.half_kabs
  phase = k * dt
  cos = np.cos(phase)
  k_sin = k * np.sin(phase)
  with np.errstate(divide="ignore", invalid="ignore"):
    sin_over_k = np.where(k > 0, np.sin(phase) / np.where(k > 0, k, 1.0), dt)
  return cos, sin_over_k, k_sin


def rotate_spectra(u_hat, ut_hat, rotation):
  """Applies a half_wave_rotation to spectral coefficients."""
  cos, sin_over_k, k_sin = rotation
  return (cos * u_hat + sin_over_k * ut_hat,
          -k_sin * u_hat + cos * ut_hat)


def free_half_wave(state, dt):
  """Exact free evolution of (u, u_t) over dt (any sign).

    u <- cos(dt A) u + sin(dt A)/A u_t,  u_t <- -A sin(dt A) u + cos(dt A) u_t
    with A = sqrt(-Laplacian), mode by mode.

    :param state: The state to evolve.
    :type state: WaveState

    :param dt: The time step; may be negative.
    :type dt: float

    :rtype: WaveState
    """
  grid = state.grid
  u_hat, ut_hat = rotate_spectra(sfft.rfftn(state.u.values),
                                 sfft.rfftn(state.ut.values),
                                 half_wave_rotation(grid, float(dt)))
  return WaveState.from_arrays(grid, sfft.irfftn(u_hat, s=grid.shape),
                               sfft.irfftn(ut_hat, s=grid.shape),
                               state.time + dt)


def spectral_power(grid, coefficients, symbol=None):
  """Sum over cells (times cell volume) of |f|^2, or of |sqrt(symbol) f|^2,
    computed from half-spectrum coefficients by Parseval."""
  weight = grid.half_weights if symbol is None else grid.half_weights * symbol
  total = np.sum(weight * (coefficients.real ** 2 + coefficients.imag ** 2))
  return float(total) * grid.cell_volume / grid.size


def free_energy(state):
  """Free energy: integral of |grad u|^2 + |u_t|^2."""
  grid = state.grid
  gradient = spectral_power(grid, sfft.rfftn(state.u.values), grid.half_k2)
  kinetic = float(np.sum(state.ut.values ** 2)) * grid.cell_volume
  return gradient + kinetic


def gradient_energy(field):
  """Integral of |grad u|^2."""
  grid = field.grid
  return spectral_power(grid, sfft.rfftn(field.values), grid.half_k2)


def spectral_gradient(values, grid):
  """Spectral gradient of a sample array; tuple of three arrays."""
  f_hat = sfft.rfftn(values)
  return tuple(sfft.irfftn(1j * k * f_hat, s=grid.shape) for k in grid.half_k)


def shift_field(values, grid, displacement):
  """Samples of x -> f(x + displacement) on the grid, by spectral phase
    shift (exact for band-limited data)."""
  d = convert.normalize_point(displacement)
  if not np.any(d):
    return np.array(values, dtype=float, copy=True)
  kx, ky, kz = grid.half_k
  phase = np.exp(1j * (kx * d[0] + ky * d[1] + kz * d[2]))
  return sfft.irfftn(phase * sfft.rfftn(values), s=grid.shape)


def spectral_eval(values, grid, points):
  """Evaluates the trigonometric interpolant of a sample array at
    arbitrary points.

    :param values: Samples indexed [ix, iy, iz].
    :type values: numpy.ndarray

    :param points: One point or a list of points.

    :rtype: numpy.ndarray of shape (m,)
    """
  return _eval_coefficients(sfft.fftn(values), grid, points)


def _eval_coefficients(coefficients, grid, points):
  pts = convert.point_list(points) - grid.origin
  k = grid.wavenumbers
  ex = np.exp(1j * np.outer(pts[:, 0], k))
  ey = np.exp(1j * np.outer(pts[:, 1], k))
  ez = np.exp(1j * np.outer(pts[:, 2], k))
  partial = np.einsum("ijk,mk->mij", coefficients, ez)
  total = np.einsum("mij,mi,mj->m", partial, ex, ey)
  return total.real / grid.size


def interpolate_trilinear(values, grid, points):
  """Periodic trilinear interpolation at arbitrary points."""
  return ndimage.map_coordinates(values, grid.index_coordinates(points),
                                 order=1, mode="grid-wrap")


@functools.lru_cache(maxsize=8)
def sphere_rule(n_theta=24, n_phi=48):
  """Product quadrature on the unit sphere: Gauss-Legendre in cos(theta),
    uniform in phi. Weights sum to 4*pi.

    :rtype: tuple (nodes of shape (m, 3), weights of shape (m,))
    """
  mu, w_mu = legendre.leggauss(n_theta)
  phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
  sin_theta = np.sqrt(1.0 - mu ** 2)
  nodes = np.stack([
    np.outer(sin_theta, np.cos(phi)).ravel(),
    np.outer(sin_theta, np.sin(phi)).ravel(),
    np.repeat(mu, n_phi),
  ], axis=1)
  weights = np.repeat(w_mu, n_phi) * (2.0 * np.pi / n_phi)
  return nodes, weights


def _check_kirchhoff_horizon(grid, t):
  if not t > 0:
    raise ValueError("Kirchhoff radius must be positive, got %r" % t)
  if t >= grid.box_length / 4:
    raise exceptions.HorizonError(t, grid.box_length / 4, "Kirchhoff radius")


def kirchhoff_eval(f, t, x, rule=None):
  """Retarded spherical mean (1/(4 pi t)) * integral of f over the sphere
    |x - y| = t, i.e. the free solution at x for data (0, f).

    :param f: The velocity datum.
    :type f: ScalarField

    :param t: Sphere radius (elapsed time), 0 < t < box_length/4.
    :type t: float

    :param x: The evaluation point.

    :raises HorizonError: when t >= box_length/4.

    :rtype: float
    """
  grid = f.grid
  _check_kirchhoff_horizon(grid, t)
  nodes, weights = rule or sphere_rule()
  pts = convert.normalize_point(x)[None, :] + t * nodes
  samples = _eval_coefficients(sfft.fftn(f.values), grid, pts)
  return t * float(np.dot(weights, samples)) / (4.0 * np.pi)


def kirchhoff_position(g, t, x, rule=None):
  """The free solution at x for data (g, 0): d/dt of t times the
    spherical mean, i.e. M_t g + t * mean(omega . grad g(x + t omega)).

    :rtype: float
    """
  grid = g.grid
  _check_kirchhoff_horizon(grid, t)
  nodes, weights = rule or sphere_rule()
  pts = convert.normalize_point(x)[None, :] + t * nodes
  g_hat = sfft.fftn(g.values)
  mean = _eval_coefficients(g_hat, grid, pts)
  k = grid.wavenumbers
  ks = (k[:, None, None], k[None, :, None], k[None, None, :])
  radial = np.zeros(len(pts))
  for axis in range(3):
    radial += nodes[:, axis] * _eval_coefficients(1j * ks[axis] * g_hat,
                                                  grid, pts)
  return float(np.dot(weights, mean + t * radial)) / (4.0 * np.pi)


def free_duhamel(forcing, dt, t):
  """Integral over s in [0, t] of sin((t-s)A)/A F(s), trapezoid in s.

    The samples are folded in with free_half_wave steps: the running state
    is advanced by dt and the next weighted sample is added to its
    velocity.

    :param forcing: Samples F(j*dt), j = 0..t/dt.
    :type forcing: list of ScalarField

    :param dt: Sample cadence.
    :type dt: float

    :param t: Final time.
    :type t: float

    :raises CadenceError: when the sample count does not match t/dt.

    :rtype: ScalarField
    """
  if not dt > 0:
    raise ValueError("dt must be positive")
  steps = int(round(t / dt))
  if abs(steps * dt - t) > 1e-9 * max(abs(t), 1.0) or len(forcing) != steps + 1:
    raise exceptions.CadenceError(
      "Expected %d samples at cadence %.6g up to t=%.6g, got %d"
      % (steps + 1, dt, t, len(forcing)))
  grid = forcing[0].grid
  if steps == 0:
    return ScalarField.zeros(grid)
  weights = np.full(steps + 1, dt)
  weights[0] = weights[-1] = 0.5 * dt
  state = WaveState(ScalarField.zeros(grid), forcing[0] * weights[0])
  for j in range(1, steps + 1):
    check_same_grid(forcing[j], grid)
    state = free_half_wave(state, dt)
    state = WaveState(state.u, state.ut + forcing[j] * weights[j], state.time)
  return state.u


def truncated_newton_kernel(h, x, y):
  """1/|x-y| where |x-y| >= h, else 0. Broadcasts over leading axes.

    :param h: Truncation radius, h >= 0.
    :type h: float
    """
  if h < 0:
    raise ValueError("h must be nonnegative")
  d = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float),
                     axis=-1)
  with np.errstate(divide="ignore"):
    return np.where(d >= h, 1.0 / d, 0.0)


def truncated_newton_apply(field, h):
  """Grid convolution with the truncated Newton kernel divided by 4 pi
    (minimum-image distances; the self cell is excluded).

    :rtype: ScalarField
    """
  grid = field.grid
  r = grid.radius_from((0.0, 0.0, 0.0))
  # grid point i sits at origin + i*h, so roll the kernel to put r=0 at index 0
  shift = grid.n_per_axis // 2
  with np.errstate(divide="ignore"):
    kernel = np.where((r >= h) & (r > 0), 1.0 / np.where(r > 0, r, 1.0), 0.0)
  kernel = np.roll(kernel, (-shift, -shift, -shift), axis=(0, 1, 2))
  conv = sfft.irfftn(sfft.rfftn(kernel) * sfft.rfftn(field.values),
                     s=grid.shape)
  return ScalarField(grid, conv * grid.cell_volume / (4.0 * np.pi))


def write_field(path, field, time=0.0):
  """Writes a field in the WCL1 binary format."""
  with open(path, "wb") as f:
    f.write(convert.encode_field(field.values, field.grid.box_length, time))


def read_field(path):
  """Reads a WCL1 field file.

    :rtype: tuple (ScalarField, time)
    """
  with open(path, "rb") as f:
    values, box_length, time = convert.decode_field(f.read())
  return ScalarField(BoxGrid(values.shape[0], box_length), values), time
