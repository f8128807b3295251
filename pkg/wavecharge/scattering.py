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

"""Bound-state coefficient dynamics and the scattering check.

The overlap a(t) = <u(t), w> with the H1 ground state w obeys

    a'' - lambda^2 a + c(t) a + h(t) = 0,

c(t) = <V2(. - v t) w, w>, h(t) = <V2(. - v t)(u - a w), w>. Shooting on
a'(0) removes the growing branch. The half-wave variable U = A u + i u_t
(A = sqrt(-Laplacian)) evolves freely as exp(-i t A); the wave operator
data U0 = U(0) - i int exp(i s A) (W u)(s) ds is the free state the
solution approaches.
"""

import dataclasses
import functools
import logging

import numpy as np
from scipy import fft as sfft

from wavecharge import evolution
from wavecharge import exceptions
from wavecharge import lattice
from wavecharge import norms
from wavecharge import reports

logger = logging.getLogger(__name__)

MIN_GROWTH_SEPARATION = 5.0
SHOOT_TOLERANCE = 1e-8
MAX_SECANT_STEPS = 20
CAUCHY_LIMIT = 0.2
DEVIATION_LIMIT = 0.1
JITTER = 0.05


def overlap_c(spec, w, t):
  """c(t) = <V2(. - v t) w, w>.

    :param spec: The second potential.
    :type spec: potentials.PotentialSpec

    :param w: A normalized eigenfunction.
    :type w: lattice.ScalarField

    :rtype: float
    """
  grid = w.grid
  return float(np.sum(spec.sample(grid, t) * w.values ** 2)) * grid.cell_volume


def overlap_series(history, w):
  """<u(t), w> at every snapshot.

    :rtype: tuple (times, values)
    """
  lattice.check_same_grid(history.grid, w)
  dv = history.grid.cell_volume
  values = np.array([float(np.vdot(u, w.values)) * dv for u in history.u])
  return history.times.copy(), values


def overlap_h(history, spec, w):
  """h(t) = <V2(. - v t)(u - a w), w> with a = <u, w>, at every snapshot.

    :rtype: tuple (times, values)
    """
  times, a = overlap_series(history, w)
  dv = history.grid.cell_volume
  values = []
  for k, t in enumerate(times):
    rest = history.u[k] - a[k] * w.values
    values.append(float(np.sum(spec.sample(history.grid, t) * rest
                               * w.values)) * dv)
  return times, np.array(values)


@dataclasses.dataclass
class CoeffODEState:
  """Data of a'' = lambda^2 a - c a - h.

    c and h are tables at cadence table_dt starting at t = 0, or callables
    of t, or None for zero.
    """

  lam: float
  a: float
  a_dot: float
  c_table: object = None
  h_table: object = None
  table_dt: float = None

  def __post_init__(self):
    if not self.lam > 0:
      raise ValueError("lambda must be positive, got %r" % self.lam)
    for name in ("c_table", "h_table"):
      table = getattr(self, name)
      if table is not None and not callable(table):
        setattr(self, name, np.asarray(table, dtype=float))
        if self.table_dt is None or not self.table_dt > 0:
          raise ValueError("Tabulated coefficients need a positive table_dt")

  @property
  def tabulated(self):
    return any(t is not None and not callable(t)
               for t in (self.c_table, self.h_table))

  def coverage(self):
    """Largest time every table covers."""
    lengths = [len(t) for t in (self.c_table, self.h_table)
               if t is not None and not callable(t)]
    if not lengths:
      return np.inf
    return (min(lengths) - 1) * self.table_dt

  def _lookup(self, table, t):
    if table is None:
      return 0.0
    if callable(table):
      return float(table(t))
    return float(table[int(round(t / self.table_dt))])

  def c(self, t):
    return self._lookup(self.c_table, t)

  def h(self, t):
    return self._lookup(self.h_table, t)

  def with_a_dot(self, a_dot):
    return dataclasses.replace(self, a_dot=float(a_dot))


@dataclasses.dataclass
class CoeffSolution:
  times: np.ndarray
  a: np.ndarray
  a_dot: np.ndarray
  damping_integral: float

  def energy(self, lam):
    """a'^2 - lambda^2 a^2, constant when c = h = 0."""
    return self.a_dot ** 2 - lam ** 2 * self.a ** 2


def solve_coeff_ode(state, T, dt=None):
  """Classical RK4 on (a, a', I) with I' = exp(-lambda t) N(t),
    N = -(c a + h).

    With tables the step is twice the table cadence, so the midpoint
    stage lands on a table entry. A tabulated run is refined by halving
    table_dt; the step follows it. dt is honoured only for callables.

    :param state: The ODE data.
    :type state: CoeffODEState

    :param T: Final time.
    :type T: float

    :raises CadenceError: when the tables do not cover [0, T] or T is not
        a multiple of the step.

    :rtype: CoeffSolution
    """
  lam = state.lam
  if state.tabulated:
    dt = 2.0 * state.table_dt
    if state.coverage() < T - 1e-9:
      raise exceptions.CadenceError(
        "Tables cover [0, %.6g], need [0, %.6g]" % (state.coverage(), T))
  elif dt is None:
    dt = 0.01
  steps = int(round(T / dt))
  if abs(steps * dt - T) > 1e-9 * max(T, 1.0):
    raise exceptions.CadenceError(
      "T=%.6g is not a multiple of the RK4 step %.6g" % (T, dt))

  def rhs(t, y):
    a, a_dot, _ = y
    n = -(state.c(t) * a + state.h(t))
    return np.array([a_dot, lam * lam * a + n, np.exp(-lam * t) * n])

  y = np.array([state.a, state.a_dot, 0.0])
  out = [y]
  for k in range(steps):
    t = k * dt
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rhs(t + dt, y + dt * k3)
    y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    out.append(y)
  out = np.array(out)
  return CoeffSolution(dt * np.arange(steps + 1), out[:, 0], out[:, 1],
                       float(out[-1, 2]))


def stability_residual(state, T, dt=None):
  """a(0) + a'(0)/lambda + (1/lambda) int_0^T exp(-lambda s) N(s) ds."""
  sol = solve_coeff_ode(state, T, dt)
  return state.a + state.a_dot / state.lam + sol.damping_integral / state.lam


@dataclasses.dataclass
class ShootResult:
  a_dot: float
  residual: float
  iterations: int
  solution: CoeffSolution


def stability_shoot(state, T, dt=None, tolerance=SHOOT_TOLERANCE,
                    max_steps=MAX_SECANT_STEPS):
  """Secant iteration on a'(0) until the truncated stability condition
    holds.

    :raises ValueError: when lambda T < 5.
    :raises ConvergenceError: after max_steps secant steps.

    :rtype: ShootResult
    """
  if state.lam * T < MIN_GROWTH_SEPARATION:
    raise ValueError("Need lambda*T >= %g for growth separation, got %.3g"
                     % (MIN_GROWTH_SEPARATION, state.lam * T))
  scale = max(1.0, abs(state.a))
  x0 = state.a_dot
  r0 = stability_residual(state, T, dt)
  x1 = -state.lam * state.a
  if x1 == x0:
    x1 = x0 + 1e-3 * max(1.0, abs(x0))
  r1 = stability_residual(state.with_a_dot(x1), T, dt)
  steps = 1
  while abs(r1) > tolerance * scale:
    if steps >= max_steps or r1 == r0:
      raise exceptions.ConvergenceError(steps, abs(r1), "stability shooting")
    x0, x1 = x1, x1 - r1 * (x1 - x0) / (r1 - r0)
    r0 = r1
    r1 = stability_residual(state.with_a_dot(x1), T, dt)
    steps += 1
    logger.debug("shoot step %d: a_dot=%.12g residual=%.3e", steps, x1, r1)
  solution = solve_coeff_ode(state.with_a_dot(x1), T, dt)
  logger.info("stability shoot: a_dot(0)=%.10g residual=%.3e in %d steps",
              x1, r1, steps)
  return ShootResult(float(x1), float(r1), steps, solution)


def tabulated_ode_state(history, states1, spec2):
  """CoeffODEState with c and h tabulated at the snapshot cadence."""
  w = states1.eigenfunctions[0]
  lam = states1.lambdas[0]
  idx = np.flatnonzero(history.times >= -1e-12)
  times = history.times[idx]
  if len(times) < 3:
    raise exceptions.CadenceError("Need at least three snapshots")
  cadence = float(times[1] - times[0])
  if not np.allclose(np.diff(times), cadence, rtol=1e-9, atol=1e-12):
    raise exceptions.CadenceError("Snapshots are not evenly spaced")
  c = np.array([overlap_c(spec2, w, t) for t in times])
  _, h = overlap_h(history, spec2, w)
  h = h[idx]
  a0 = w.inner(history.initial_state().u)
  a_dot0 = w.inner(history.initial_state().ut)
  return CoeffODEState(lam, a0, a_dot0, c, h, cadence)


def correct_initial_data(template, initial, states1, spec2, iterations=3):
  """Iterated shooting against the full PDE.

    Each pass evolves the data, freezes h(t) from the run, shoots a'(0) and
    moves the velocity datum along w so that <u_t(0), w> equals the shot
    value.

    :param template: Grid, potentials, dt, horizon and stride to use.
    :type template: evolution.EvolutionConfig

    :param initial: Data at t = 0.
    :type initial: lattice.WaveState

    :rtype: tuple (lattice.WaveState, list of ShootResult)
    """
  if not len(states1):
    raise exceptions.EmptyBoundStateError("correction needs an H1 bound state")
  w = states1.eigenfunctions[0]
  state = initial.copy()
  results = []
  T = template.horizon
  even = 2 * template.snapshot_stride
  steps = template.forward_steps
  if steps % even:
    raise exceptions.CadenceError(
      "Forward steps %d must be a multiple of twice the stride" % steps)
  for i in range(iterations):
    history = evolution.evolve(template, state)
    ode = tabulated_ode_state(history, states1, spec2)
    result = stability_shoot(ode, T)
    results.append(result)
    delta = result.a_dot - w.inner(state.ut)
    state = lattice.WaveState(state.u, state.ut + w * delta, state.time)
    logger.info("correction pass %d: a_dot(0) -> %.10g", i + 1, result.a_dot)
    if abs(delta) <= SHOOT_TOLERANCE * max(1.0, abs(result.a_dot)):
      break
  return state, results


@dataclasses.dataclass
class EvolutionDecomposition:
  """u = a(t) w + b(gamma (t - v x1)) m_v + r at every snapshot."""

  times: np.ndarray
  a_series: np.ndarray
  b_times: np.ndarray
  b_series: np.ndarray
  b_terms: np.ndarray
  remainders: np.ndarray
  w: lattice.ScalarField
  covered: np.ndarray = None

  def reassemble(self, k):
    return self.a_series[k] * self.w.values + self.b_terms[k] \
      + self.remainders[k]

  def reassembly_error(self, history):
    """max over snapshots of ||reassembly - u|| / ||u|| (0 for u = 0)."""
    worst = 0.0
    for k in range(len(self.times)):
      scale = np.linalg.norm(history.u[k])
      diff = np.linalg.norm(self.reassemble(k) - history.u[k])
      if scale > 0:
        worst = max(worst, diff / scale)
      else:
        worst = max(worst, diff)
    return worst

  def orthogonality_defect(self):
    dv = self.w.grid.cell_volume
    return float(max(abs(np.vdot(r, self.w.values)) * dv
                     for r in self.remainders))


def _resample_x1(values, grid, positions):
  """Trigonometric interpolation along axis 0 at per-row positions:
    out[i] = f(positions[i], ., .)."""
  coeffs = sfft.fft(values, axis=0)
  phase = np.exp(1j * np.outer(np.asarray(positions) - grid.origin,
                               grid.wavenumbers))
  return np.real(np.tensordot(phase, coeffs, axes=1)) / grid.n_per_axis


def moving_profile(m, boost, t):
  """m_v(x, t) = m(gamma (x1 - v t), x2, x3) on the grid."""
  grid = m.grid
  return _resample_x1(m.values, grid, boost.gamma * (grid.axis - boost.v * t))


def decompose_evolution(history, states1, states2=None, boost=None,
                        window=None, covered_only=False):
  """Splits each snapshot into a w + b m_v + r.

    b(t') = <u_L(t'), m> is read in the boosted frame and mapped back
    column by column through t' = gamma (t - v x1); a = <u - b m_v, w>
    makes r orthogonal to w.

    :param states1: H1 bound states (the first one is used).
    :param states2: Bound states of the compressed H2, or None.
    :param boost: The boost of the second potential.
    :param window: (x1' center, half width) of the boosted window.
    :param covered_only: Leave b = 0 at snapshots whose boosted slices are
        not all stored (flagged in covered) instead of raising.

    :raises OutsideHistoryError: when a needed boosted slice leaves the
        stored history and covered_only is False.

    :rtype: EvolutionDecomposition
    """
  from wavecharge import lorentz

  if not len(states1):
    raise exceptions.EmptyBoundStateError("decomposition needs an H1 state")
  if len(states1) > 1:
    logger.warning("Using the first of %d H1 bound states", len(states1))
  grid = history.grid
  w = states1.eigenfunctions[0]
  dv = grid.cell_volume
  n = len(history.times)
  b_terms = np.zeros((n,) + grid.shape)
  b_times = np.zeros(0)
  b_series = np.zeros(0)
  covered = np.ones(n, dtype=bool)
  if states2 is not None and len(states2) and boost is not None:
    m = states2.eigenfunctions[0]
    if window is None:
      center = states2.spec.center[0] if states2.spec is not None else 0.0
      window = (center, grid.box_length / 4)
    lo, hi = lorentz.boosted_time_range(history, boost, window)
    step = float(history.times[1] - history.times[0])
    b_times = np.arange(lo, hi + 1e-9, step)
    b_series = np.array([
      m.inner(lorentz.resample_boosted(history, boost, tp, window).u)
      for tp in b_times])
    center, half_width = window
    g, v = boost.gamma, boost.v
    for k, t in enumerate(history.times):
      xb = g * (grid.axis - v * t)
      cols = np.flatnonzero(np.abs(xb - center) <= half_width)
      if not len(cols):
        continue
      tp = g * (t - v * grid.axis[cols])
      if tp.min() < b_times[0] - 1e-9 or tp.max() > b_times[-1] + 1e-9:
        if covered_only:
          covered[k] = False
          continue
        raise exceptions.OutsideHistoryError(
          float(tp.min() if tp.min() < b_times[0] else tp.max()),
          float(b_times[0]), float(b_times[-1]))
      profile = moving_profile(m, boost, t)
      coeff = np.interp(tp, b_times, b_series)
      b_terms[k][cols] = coeff[:, None, None] * profile[cols]
  a = np.array([float(np.vdot(history.u[k] - b_terms[k], w.values)) * dv
                for k in range(n)])
  remainders = history.u - a[:, None, None, None] * w.values[None] - b_terms
  if not covered.all():
    logger.info("b term left out at %d of %d snapshots", n - covered.sum(), n)
  return EvolutionDecomposition(history.times.copy(), a, b_times, b_series,
                                b_terms, remainders, w, covered)


@functools.lru_cache(maxsize=8)
def _full_kabs(grid):
  k = grid.wavenumbers
  return np.sqrt(k[:, None, None] ** 2 + k[None, :, None] ** 2
                 + k[None, None, :] ** 2)


@dataclasses.dataclass
class ComplexHalfWave:
  """U = A u + i u_t on the grid, with the mean of u kept aside."""

  grid: lattice.BoxGrid
  U: np.ndarray
  time: float = 0.0
  mean: float = 0.0
  diagnostics: dict = dataclasses.field(default_factory=dict)

  def norm(self):
    return float(np.sqrt(np.sum(np.abs(self.U) ** 2) * self.grid.cell_volume))

  def free_flow(self, t):
    """exp(-i t A) U."""
    phase = np.exp(-1j * t * _full_kabs(self.grid))
    return ComplexHalfWave(self.grid, sfft.ifftn(phase * sfft.fftn(self.U)),
                           self.time + t, self.mean)

  def __add__(self, other):
    lattice.check_same_grid(self, other)
    return ComplexHalfWave(self.grid, self.U + other.U, self.time,
                           self.mean + other.mean)

  def __sub__(self, other):
    lattice.check_same_grid(self, other)
    return ComplexHalfWave(self.grid, self.U - other.U, self.time,
                           self.mean - other.mean)


def to_half_wave(state):
  """(u, u_t) -> A u + i u_t; A is applied spectrally and the mean of u is
    stored separately.

    :type state: lattice.WaveState

    :rtype: ComplexHalfWave
    """
  grid = state.grid
  au = sfft.irfftn(grid.half_kabs * sfft.rfftn(state.u.values), s=grid.shape)
  return ComplexHalfWave(grid, au + 1j * state.ut.values, state.time,
                         float(np.mean(state.u.values)))


def from_half_wave(half_wave):
  """Inverse of to_half_wave.

    :rtype: lattice.WaveState
    """
  grid = half_wave.grid
  k = grid.half_kabs
  coeffs = sfft.rfftn(half_wave.U.real)
  with np.errstate(divide="ignore", invalid="ignore"):
    coeffs = np.where(k > 0, coeffs / np.where(k > 0, k, 1.0), 0.0)
  u = sfft.irfftn(coeffs, s=grid.shape) + half_wave.mean
  return lattice.WaveState.from_arrays(grid, u, half_wave.U.imag.copy(),
                                       half_wave.time)


def _interaction(history, k):
  """(W u)(t_k) = V(t_k) u - F(t_k)."""
  t = float(history.times[k])
  values = history.potential_at(t) * history.u[k]
  if history.forcing is not None:
    values = values - history.forcing(t, history.grid)
  return values


def wave_operator_data(history, certification=None):
  """U0 = U(0) - i int_0^T exp(i s A) (W u)(s) ds, trapezoid over the
    forward snapshots.

    diagnostics carries the norms of the partial integrals over [0, T/2],
    [T/2, T] and [3T/4, T] and the Cauchy ratio of the second to the first.

    :param certification: Result of evolution.track_projection_decay.

    :raises CertificationError: when the certification did not pass.

    :rtype: ComplexHalfWave
    """
  if certification is not None and not certification.certified:
    raise exceptions.CertificationError(certification.reason)
  grid = history.grid
  idx = np.flatnonzero(history.times >= -1e-12)
  times = history.times[idx]
  T = float(times[-1])
  kabs = _full_kabs(grid)
  split = int(np.argmin(np.abs(times - 0.5 * T)))
  quarter = int(np.argmin(np.abs(times - 0.75 * T)))

  def partial(lo, hi):
    total = np.zeros(grid.shape, dtype=complex)
    if hi <= lo:
      return total
    w = norms.trapezoid_weights(times[lo:hi + 1])
    for wk, j in zip(w, range(lo, hi + 1)):
      total += wk * np.exp(1j * times[j] * kabs) * sfft.fftn(
        _interaction(history, idx[j]))
    return total

  first = partial(0, split)
  second = partial(split, len(times) - 1)
  tail = partial(quarter, len(times) - 1)
  integral = sfft.ifftn(first + second)
  U = to_half_wave(history.initial_state())
  result = ComplexHalfWave(grid, U.U - 1j * integral, 0.0, U.mean)

  def spectral_norm(coeffs):
    return float(np.sqrt(np.sum(np.abs(coeffs) ** 2) * grid.cell_volume
                         / grid.size))

  n_first, n_second = spectral_norm(first), spectral_norm(second)
  result.diagnostics = {
    "first_half": n_first,
    "second_half": n_second,
    "tail": spectral_norm(tail),
    "cauchy_ratio": n_second / n_first if n_first > 0 else 0.0,
    "horizon": T,
  }
  if result.diagnostics["cauchy_ratio"] > CAUCHY_LIMIT:
    logger.warning("Wave-operator partial sums not Cauchy: ratio %.3g",
                   result.diagnostics["cauchy_ratio"])
  return result


@dataclasses.dataclass
class DeviationSeries:
  """d(t) = ||U(t) - exp(-i t A) U0|| at the forward snapshots."""

  times: np.ndarray
  deviations: np.ndarray
  reference: float

  def acceptable(self, limit=DEVIATION_LIMIT, jitter=JITTER):
    """d(T) <= limit * ||U(0)|| and d nonincreasing over the last half up to
      the jitter fraction. Deviations under 1e-12 ||U(0)|| count as zero."""
    if self.reference == 0:
      return bool(np.all(self.deviations == 0))
    if self.deviations[-1] > limit * self.reference:
      return False
    half = self.times >= 0.5 * self.times[-1]
    tail = self.deviations[half]
    running_min = np.minimum.accumulate(tail)
    floor = 1e-12 * self.reference
    return bool(np.all(tail <= running_min * (1 + jitter) + floor))

  def write_csv(self, path, config_hash=None):
    return reports.write_csv(path, ["t", "deviation"],
                             list(zip(self.times, self.deviations)),
                             config_hash)


def scattering_convergence(history, U0):
  """d(t) = ||U(t) - exp(-i t A) U0||_{L^2} at every forward snapshot.

    :type U0: ComplexHalfWave

    :rtype: DeviationSeries
    """
  grid = history.grid
  kabs = _full_kabs(grid)
  U0_hat = sfft.fftn(U0.U)
  idx = np.flatnonzero(history.times >= -1e-12)
  deviations = []
  for k in idx:
    U = to_half_wave(history.snapshot(k))
    diff = sfft.fftn(U.U) - np.exp(-1j * history.times[k] * kabs) * U0_hat
    deviations.append(float(np.sqrt(np.sum(np.abs(diff) ** 2)
                                    * grid.cell_volume / grid.size)))
  reference = to_half_wave(history.initial_state()).norm()
  return DeviationSeries(history.times[idx].copy(), np.array(deviations),
                         reference)
