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

"""Potential catalog, Hamiltonian application, bound states of the static
Hamiltonians H1 and (Lorentz-compressed) H2, spectral projections and
exponential-decay diagnostics.

Potentials are wells: V(x) = -sum_j depth_j * exp(-|(x - c - o_j)/sigma_j|^2 / 2)
with per-axis widths sigma_j, evaluated with minimum-image displacements.
"""

import dataclasses
import json
import logging
import os

import numpy as np
from scipy import fft as sfft
from scipy import linalg as sla
from scipy.sparse import linalg as spla

from wavecharge import convert
from wavecharge import exceptions
from wavecharge import lattice

logger = logging.getLogger(__name__)

THRESHOLD_FRACTION = 1e-3
EIGEN_TOLERANCE = 1e-8
RESIDUAL_TOLERANCE = 1e-6
MAX_OUTER_ITERATIONS = 500
MIN_WIDTH_SPACINGS = 4
OUTER_MASS_LIMIT = 1e-4


@dataclasses.dataclass(frozen=True)
class GaussianWell:
  """One Gaussian term of a potential."""

  depth: float
  width: tuple
  offset: tuple = (0.0, 0.0, 0.0)

  def __post_init__(self):
    object.__setattr__(self, "depth", float(self.depth))
    object.__setattr__(self, "width",
                       tuple(convert.broadcast_vector(self.width).tolist()))
    object.__setattr__(self, "offset",
                       tuple(convert.normalize_point(self.offset).tolist()))
    if min(self.width) <= 0:
      raise ValueError("Gaussian widths must be positive")


@dataclasses.dataclass(frozen=True)
class PotentialSpec:
  """A potential shape translated to center and moving at velocity."""

  wells: tuple
  center: tuple = (0.0, 0.0, 0.0)
  velocity: tuple = (0.0, 0.0, 0.0)

  def __post_init__(self):
    object.__setattr__(self, "wells", tuple(self.wells))
    object.__setattr__(self, "center",
                       tuple(convert.normalize_point(self.center).tolist()))
    object.__setattr__(self, "velocity",
                       tuple(convert.normalize_point(self.velocity).tolist()))
    if self.speed >= 1.0:
      raise exceptions.SuperluminalError(self.speed)

  @classmethod
  def gaussian_well(cls, depth, width, center=(0.0, 0.0, 0.0),
                    velocity=(0.0, 0.0, 0.0)):
    return cls((GaussianWell(depth, width),), center, velocity)

  @classmethod
  def sum_of_gaussians(cls, terms, center=(0.0, 0.0, 0.0),
                       velocity=(0.0, 0.0, 0.0)):
    """:param terms: dicts or tuples (depth, width[, offset])."""
    wells = []
    for term in terms:
      if isinstance(term, GaussianWell):
        wells.append(term)
      elif isinstance(term, dict):
        wells.append(GaussianWell(**term))
      else:
        wells.append(GaussianWell(*term))
    return cls(tuple(wells), center, velocity)

  @classmethod
  def zero(cls):
    return cls(())

  @property
  def speed(self):
    return float(np.linalg.norm(self.velocity))

  @property
  def is_static(self):
    return self.speed == 0.0

  @property
  def total_depth(self):
    return float(sum(w.depth for w in self.wells))

  @property
  def min_width(self):
    return min((min(w.width) for w in self.wells), default=np.inf)

  @property
  def max_width(self):
    return max((max(w.width) for w in self.wells), default=0.0)

  @property
  def core_radius(self):
    """Radius beyond which every term is below exp(-2) of its depth."""
    return max((2.0 * max(w.width) + np.linalg.norm(w.offset)
                for w in self.wells), default=0.0)

  def center_at(self, t):
    return np.asarray(self.center) + t * np.asarray(self.velocity)

  def frozen_at(self, t):
    """The static potential this spec equals at time t."""
    return PotentialSpec(self.wells, tuple(self.center_at(t)))

  def evaluate(self, grid, X, Y, Z, t=0.0):
    """V at coordinate arrays (minimum image w.r.t. the moving center)."""
    c = self.center_at(t)
    result = np.zeros(np.broadcast(X, Y, Z).shape)
    for well in self.wells:
      dx = grid.wrap(X - c[0] - well.offset[0]) / well.width[0]
      dy = grid.wrap(Y - c[1] - well.offset[1]) / well.width[1]
      dz = grid.wrap(Z - c[2] - well.offset[2]) / well.width[2]
      result -= well.depth * np.exp(-0.5 * (dx ** 2 + dy ** 2 + dz ** 2))
    return result

  def sample(self, grid, t=0.0):
    """V(x - v t) at the grid points."""
    return self.evaluate(grid, *grid.mesh, t=t)

  def gradient(self, grid, t=0.0):
    """Analytic gradient of V(x - v t) at the grid points."""
    c = self.center_at(t)
    X, Y, Z = grid.mesh
    grads = [np.zeros(grid.shape) for _ in range(3)]
    for well in self.wells:
      d = [grid.wrap(C - c[a] - well.offset[a]) for a, C in enumerate((X, Y, Z))]
      g = -well.depth * np.exp(-0.5 * sum((d[a] / well.width[a]) ** 2
                                          for a in range(3)))
      for a in range(3):
        grads[a] -= g * d[a] / well.width[a] ** 2
    return tuple(grads)

  def describe(self):
    return {
      "wells": [{"depth": w.depth, "width": list(w.width),
                 "offset": list(w.offset)} for w in self.wells],
      "center": list(self.center),
      "velocity": list(self.velocity),
    }

  @classmethod
  def from_description(cls, description):
    """Inverse of describe."""
    return cls.sum_of_gaussians(description["wells"], description["center"],
                                description["velocity"])


@dataclasses.dataclass
class BoundStateSet:
  """Eigenpairs H w = -lambda^2 w of a static Hamiltonian."""

  hamiltonian: str
  grid: lattice.BoxGrid
  eigenvalues: list = dataclasses.field(default_factory=list)
  eigenfunctions: list = dataclasses.field(default_factory=list)
  residuals: list = dataclasses.field(default_factory=list)
  spec: PotentialSpec = None

  def __len__(self):
    return len(self.eigenvalues)

  @property
  def lambdas(self):
    return [float(np.sqrt(-e)) for e in self.eigenvalues]

  def describe(self):
    return {
      "hamiltonian": self.hamiltonian,
      "grid": self.grid.describe(),
      "eigenvalues": [float(e) for e in self.eigenvalues],
      "residuals": [float(r) for r in self.residuals],
    }


def _spectral_laplacian(values, grid):
  return sfft.irfftn(grid.half_k2 * sfft.rfftn(values), s=grid.shape)


def apply_hamiltonian(spec, f, t=0.0):
  """Returns -Laplacian f + V(. - v t) f, the Laplacian applied spectrally.

    :param spec: The potential, frozen at time t.
    :type spec: PotentialSpec

    :param f: The field.
    :type f: lattice.ScalarField

    :rtype: lattice.ScalarField
    """
  grid = f.grid
  return lattice.ScalarField(
    grid, _spectral_laplacian(f.values, grid) + spec.sample(grid, t) * f.values)


def compressed_potential(spec):
  """The static potential H2 sees in the frame moving with spec.

    The x1 argument is scaled by sqrt(1 - v^2): widths, offsets and the
    center along x1 are stretched by gamma.

    :raises SuperluminalError: when |v| >= 1.
    :raises ValueError: when the velocity is not along x1.

    :rtype: PotentialSpec
    """
  v = np.asarray(spec.velocity)
  if spec.speed >= 1.0:
    raise exceptions.SuperluminalError(spec.speed)
  if v[1] != 0.0 or v[2] != 0.0:
    raise ValueError("Only boosts along x1 are supported; velocity %s"
                     % (tuple(v),))
  gamma = 1.0 / np.sqrt(1.0 - v[0] ** 2)
  stretch = np.array([gamma, 1.0, 1.0])
  wells = tuple(GaussianWell(w.depth, tuple(np.asarray(w.width) * stretch),
                             tuple(np.asarray(w.offset) * stretch))
                for w in spec.wells)
  return PotentialSpec(wells, tuple(np.asarray(spec.center) * stretch))


def _hamiltonian_operator(grid, potential, shift=0.0):
  n = grid.size

  def matvec(x):
    values = np.reshape(x, grid.shape)
    out = _spectral_laplacian(values, grid) + (potential - shift) * values
    return out.ravel()

  return spla.LinearOperator((n, n), matvec=matvec, rmatvec=matvec,
                             dtype=float)


def compute_bound_states(spec, grid, count=1, shift=None, samples=None,
                         max_iterations=MAX_OUTER_ITERATIONS, tag="H1"):
  """Lowest eigenpairs below -delta0 of -Laplacian + V by shifted inverse
    power iteration with conjugate-gradient inner solves.

    Converged states are deflated by explicit orthogonalization. Only
    eigenvalues <= -delta0, delta0 = 1e-3 * total depth, are returned.

    :param spec: A static potential.
    :type spec: PotentialSpec

    :param grid: The grid.
    :type grid: lattice.BoxGrid

    :param count: Maximum number of states.
    :type count: int

    :param shift: Shift below the ground state. Defaults to a value below
        the form bound -total_depth.
    :type shift: float

    :param samples: Potential samples overriding spec.sample(grid).
    :type samples: numpy.ndarray

    :param tag: Label of the Hamiltonian ("H1" or "H2").
    :type tag: string

    :raises ConvergenceError: after max_iterations outer steps.
    :raises DegenerateShiftError: when the shift meets the spectrum.

    :rtype: BoundStateSet
    """
  if not spec.is_static:
    raise ValueError("compute_bound_states needs a static potential; "
                     "use compressed_potential or frozen_at first")
  potential = spec.sample(grid) if samples is None else np.asarray(samples)
  depth = spec.total_depth if samples is None else float(-potential.min())
  states = BoundStateSet(tag, grid, spec=spec)
  if depth <= 0:
    return states
  if spec.wells and spec.min_width < MIN_WIDTH_SPACINGS * grid.spacing:
    logger.warning("Potential width %.3g is under %d grid spacings (%.3g)",
                   spec.min_width, MIN_WIDTH_SPACINGS, grid.spacing)
  delta0 = THRESHOLD_FRACTION * depth
  if shift is None:
    shift = -1.05 * depth - 0.01
  operator = _hamiltonian_operator(grid, potential, shift)
  plain = _hamiltonian_operator(grid, potential)
  dv = grid.cell_volume
  rng = np.random.default_rng(20160)
  basis = []

  for index in range(count):
    x = rng.standard_normal(grid.size)
    x = _orthonormalize(x, basis, dv)
    energy, residual = np.inf, np.inf
    for iteration in range(1, max_iterations + 1):
      y, info = spla.cg(operator, x, rtol=EIGEN_TOLERANCE, atol=0.0,
                        maxiter=10 * grid.n_per_axis ** 2)
      if info != 0:
        raise exceptions.DegenerateShiftError(iteration, float("nan"),
                                              "inner CG solve")
      x = _orthonormalize(y, basis, dv)
      hx = plain.matvec(x)
      energy = float(np.dot(x, hx)) * dv
      residual = float(np.sqrt(np.sum((hx - energy * x) ** 2) * dv))
      logger.debug("state %d iteration %d energy %.10g residual %.3e",
                   index, iteration, energy, residual)
      if energy <= shift:
        raise exceptions.DegenerateShiftError(iteration, residual,
                                              "shifted inverse iteration")
      if residual <= RESIDUAL_TOLERANCE:
        break
    else:
      raise exceptions.ConvergenceError(max_iterations, residual,
                                        "shifted inverse iteration")
    if energy > -delta0:
      if energy < delta0:
        logger.warning("Eigenvalue %.3e inside the threshold band (+-%.3e)",
                       energy, delta0)
      break
    basis.append(x)
    states.eigenvalues.append(energy)
    states.residuals.append(residual)
    logger.info("bound state %d: E=%.8g (lambda=%.6g), residual %.2e",
                index, energy, np.sqrt(-energy), residual)

  states.eigenfunctions = [lattice.ScalarField(grid, b.reshape(grid.shape))
                           for b in basis]
  return states


def _orthonormalize(x, basis, dv):
  x = np.array(x, dtype=float)
  for _ in range(2):
    for b in basis:
      x -= np.dot(b, x) * dv * b
  return x / np.sqrt(np.dot(x, x) * dv)


def project_continuous(states, f):
  """P_c f = f - sum_i <f, w_i> w_i.

    :rtype: lattice.ScalarField
    """
  lattice.check_same_grid(states.grid, f)
  values = f.values.copy()
  for w in states.eigenfunctions:
    values -= w.inner(lattice.ScalarField(f.grid, values)) * w.values
  return lattice.ScalarField(f.grid, values)


def project_bound(states, f):
  """P_b f = sum_i <f, w_i> w_i."""
  return f - project_continuous(states, f)


def bound_coefficients(states, f):
  """The coefficients <f, w_i>."""
  lattice.check_same_grid(states.grid, f)
  return np.array([w.inner(f) for w in states.eigenfunctions])


def agmon_decay_check(states, inner_radius=None, outer_radius=None):
  """Fits the exponential decay rate of each eigenfunction.

    On spherical shells of thickness h/2 about the eigenfunction's peak,
    log(r * rms|w|) is regressed on r; the negated slope is compared with
    lambda. The default fit window is r in [3 sigma, L/4], sigma the largest
    well width of states.spec (4h when the set carries no potential). On
    coarse boxes with wide wells that window is empty; pass the radii
    explicitly there.

    :raises EmptyBoundStateError: for an empty set.
    :raises BoundaryMassError: when more than 1e-4 of the L2 mass sits in
        the outer region (max-norm distance >= 3L/8 from the peak).
    :raises ValueError: when fewer than three shells fit in the window.

    :rtype: list of dicts
    """
  if not len(states):
    raise exceptions.EmptyBoundStateError("agmon_decay_check needs bound states")
  grid = states.grid
  h = grid.spacing
  L = grid.box_length
  if inner_radius is None:
    sigma = MIN_WIDTH_SPACINGS * h
    if states.spec is not None and states.spec.wells:
      sigma = states.spec.max_width
    inner_radius = 3 * sigma
  if outer_radius is None:
    outer_radius = L / 4
  edges = np.arange(inner_radius, outer_radius + 0.25 * h, 0.5 * h)
  if len(edges) < 4:
    raise ValueError("Too few shells between radii %.3g and %.3g"
                     % (inner_radius, outer_radius))
  X, Y, Z = grid.mesh
  report = []
  for lam, w in zip(states.lambdas, states.eigenfunctions):
    peak = np.unravel_index(np.argmax(np.abs(w.values)), grid.shape)
    center = np.array([grid.axis[i] for i in peak])
    dx, dy, dz = (grid.wrap(C - c) for C, c in zip((X, Y, Z), center))
    r = np.sqrt(dx ** 2 + dy ** 2 + dz ** 2)
    box_distance = np.maximum(np.maximum(np.abs(dx), np.abs(dy)), np.abs(dz))
    mass = w.values ** 2
    outer_fraction = float(mass[box_distance >= 3 * L / 8].sum() / mass.sum())
    if outer_fraction >= OUTER_MASS_LIMIT:
      raise exceptions.BoundaryMassError(outer_fraction)
    radii, levels = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
      shell = (r >= lo) & (r < hi)
      if shell.any():
        rms = np.sqrt(np.mean(mass[shell]))
        if rms > 0:
          radii.append(np.mean(r[shell]))
          levels.append(np.log(np.mean(r[shell]) * rms))
    if len(radii) < 3:
      raise ValueError("Too few shells between radii %.3g and %.3g"
                       % (inner_radius, outer_radius))
    slope, _ = np.polyfit(radii, levels, 1)
    report.append({
      "lambda": lam,
      "fitted_rate": float(-slope),
      "relative_error": float(abs(-slope - lam) / lam),
      "outer_mass_fraction": outer_fraction,
      "shells": len(radii),
    })
  return report


def spectral_matrix_1d(grid):
  """Dense matrix of -d^2/dx^2 on one periodic axis (spectral)."""
  n = grid.n_per_axis
  k2 = grid.wavenumbers ** 2
  return np.real(np.fft.ifft(k2[:, None] * np.fft.fft(np.eye(n), axis=0),
                             axis=0))


def dense_hamiltonian(spec, grid, t=0.0):
  """Dense matrix of -Laplacian + V on the grid, C-order flattening.

    Meant for 16^3 oracles (a 4096 x 4096 matrix).
    """
  d = spectral_matrix_1d(grid)
  eye = np.eye(grid.n_per_axis)
  lap = (np.kron(np.kron(d, eye), eye) + np.kron(np.kron(eye, d), eye)
         + np.kron(np.kron(eye, eye), d))
  return lap + np.diag(spec.sample(grid, t).ravel())


def dense_lowest_eigenvalues(spec, grid, count=1):
  """Lowest eigenvalues by a dense symmetric eigensolve."""
  return sla.eigh(dense_hamiltonian(spec, grid), eigvals_only=True,
                  subset_by_index=[0, count - 1])


def lanczos_lowest(spec, grid, count=1):
  """Lowest eigenvalues by Lanczos (ARPACK) on the matrix-free operator."""
  operator = _hamiltonian_operator(grid, spec.sample(grid))
  values = spla.eigsh(operator, k=count, which="SA",
                      return_eigenvectors=False, tol=1e-10)
  return np.sort(values)


def save_bound_states(states, directory):
  """Writes manifest.json plus one WCL1 file per eigenfunction.

    :rtype: string (manifest path)
    """
  os.makedirs(directory, exist_ok=True)
  manifest = states.describe()
  manifest["spec"] = states.spec.describe() if states.spec is not None \
    else None
  manifest["files"] = []
  for i, w in enumerate(states.eigenfunctions):
    name = "w%d.wcl" % i
    lattice.write_field(os.path.join(directory, name), w)
    manifest["files"].append(name)
  path = os.path.join(directory, "manifest.json")
  with open(path, "w") as f:
    json.dump(manifest, f, indent=2, sort_keys=True)
  return path


def load_bound_states(directory):
  """Reads a set written by save_bound_states, potential included.

    :rtype: BoundStateSet
    """
  with open(os.path.join(directory, "manifest.json")) as f:
    manifest = json.load(f)
  grid = lattice.BoxGrid(**manifest["grid"])
  fields = [lattice.read_field(os.path.join(directory, name))[0]
            for name in manifest["files"]]
  spec = manifest.get("spec")
  if spec is not None:
    spec = PotentialSpec.from_description(spec)
  return BoundStateSet(manifest["hamiltonian"], grid,
                       list(manifest["eigenvalues"]), fields,
                       list(manifest["residuals"]), spec)
