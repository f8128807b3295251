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

"""Time integration of u_tt + H(t) u = F with Strang splitting: a half
potential kick, the exact free flight, and a second half kick.

Also records space-time histories (snapshots, probe traces along fixed and
slanted trajectories, the energy ledger) and runs the diagnostics that
read them: bound-state projection decay, channel decomposition and the
energy-derivative identity.
"""

import dataclasses
import json
import logging
import os

import numpy as np
from scipy import fft as sfft

from wavecharge import convert
from wavecharge import exceptions
from wavecharge import lattice
from wavecharge import potentials as potentials_mod
from wavecharge import reports

logger = logging.getLogger(__name__)

DEFAULT_DT_FRACTION = 0.25
CERTIFICATION_FRACTION = 0.1
CERTIFICATION_FLOOR = 1e-6
TRACE_INTERPOLATIONS = ("trilinear", "spectral")


@dataclasses.dataclass(frozen=True)
class ForcingSpec:
  """F(x, t) = amplitude * exp(-|x - c - v t|^2 / (2 width^2))
    * exp(-(t - t_peak)^2 / (2 duration^2))."""

  amplitude: float
  width: float
  center: tuple = (0.0, 0.0, 0.0)
  velocity: tuple = (0.0, 0.0, 0.0)
  t_peak: float = 0.0
  duration: float = 1.0

  def __post_init__(self):
    object.__setattr__(self, "center",
                       tuple(convert.normalize_point(self.center).tolist()))
    object.__setattr__(self, "velocity",
                       tuple(convert.normalize_point(self.velocity).tolist()))
    speed = float(np.linalg.norm(self.velocity))
    if speed >= 1.0:
      raise exceptions.SuperluminalError(speed)
    if self.width <= 0 or self.duration <= 0:
      raise ValueError("Forcing width and duration must be positive")

  def __call__(self, t, grid):
    c = np.asarray(self.center) + t * np.asarray(self.velocity)
    X, Y, Z = grid.mesh
    r2 = (grid.wrap(X - c[0]) ** 2 + grid.wrap(Y - c[1]) ** 2
          + grid.wrap(Z - c[2]) ** 2)
    envelope = np.exp(-0.5 * ((t - self.t_peak) / self.duration) ** 2)
    return self.amplitude * envelope * np.exp(-0.5 * r2 / self.width ** 2)

  def describe(self):
    return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class GatedForcing:
  """inner(s) for s <= s_max, zero afterwards."""

  inner: object
  s_max: float

  def __call__(self, t, grid):
    if t > self.s_max:
      return np.zeros(grid.shape)
    return self.inner(t, grid)

  def describe(self):
    return {"gated": _describe(self.inner), "s_max": self.s_max}


@dataclasses.dataclass(frozen=True)
class ProjectedForcing:
  """P_c(inner(s)) with respect to a BoundStateSet."""

  inner: object
  states: object

  def __call__(self, t, grid):
    f = lattice.ScalarField(grid, self.inner(t, grid))
    return potentials_mod.project_continuous(self.states, f).values

  def describe(self):
    return {"projected": _describe(self.inner),
            "eigenvalues": list(self.states.eigenvalues)}


def _describe(obj):
  if obj is None:
    return None
  return obj.describe() if hasattr(obj, "describe") else repr(obj)


@dataclasses.dataclass
class EvolutionConfig:
  """Everything one evolution needs.

    dt defaults to spacing/4 and is shrunk so that it divides the horizon.
    """

  grid: lattice.BoxGrid
  potentials: tuple = ()
  horizon: float = 1.0
  dt: float = None
  snapshot_stride: int = 1
  probes: np.ndarray = None
  trace_velocities: tuple = ((0.0, 0.0, 0.0),)
  forcing: object = None
  backward_horizon: float = 0.0
  trace_interpolation: str = "trilinear"
  data_radius: float = 0.0

  def __post_init__(self):
    self.potentials = tuple(self.potentials)
    if self.horizon < 0 or self.backward_horizon < 0:
      raise ValueError("Horizons must be nonnegative")
    if self.dt is None:
      self.dt = DEFAULT_DT_FRACTION * self.grid.spacing
    if not self.dt > 0:
      raise ValueError("dt must be positive")
    if self.horizon > 0:
      steps = int(np.ceil(self.horizon / self.dt - 1e-9))
      self.dt = self.horizon / steps
    if int(self.snapshot_stride) < 1:
      raise ValueError("snapshot_stride must be >= 1")
    self.snapshot_stride = int(self.snapshot_stride)
    if self.probes is None:
      self.probes = np.zeros((0, 3))
    self.probes = convert.point_list(self.probes) if len(self.probes) else \
      np.zeros((0, 3))
    self.trace_velocities = tuple(
      tuple(convert.normalize_point(v).tolist()) for v in self.trace_velocities)
    for v in self.trace_velocities:
      speed = float(np.linalg.norm(v))
      if speed >= 1.0:
        raise exceptions.SuperluminalError(speed)
    if self.trace_interpolation not in TRACE_INTERPOLATIONS:
      raise ValueError("trace_interpolation must be one of %s"
                       % (TRACE_INTERPOLATIONS,))

  @property
  def forward_steps(self):
    return int(round(self.horizon / self.dt))

  @property
  def backward_steps(self):
    return int(round(self.backward_horizon / self.dt))

  @property
  def max_speed(self):
    speeds = [p.speed for p in self.potentials]
    if self.forcing is not None and hasattr(self.forcing, "velocity"):
      speeds.append(float(np.linalg.norm(self.forcing.velocity)))
    return max(speeds, default=0.0)

  def required_box_length(self):
    """Smallest box with no wrap-around reaching the probes by the horizon."""
    T = max(self.horizon, self.backward_horizon)
    return 2.0 * (T + self.data_radius + self.max_speed * T)

  def wraps(self):
    return self.grid.box_length < self.required_box_length()

  def describe(self):
    return {
      "grid": self.grid.describe(),
      "potentials": [p.describe() for p in self.potentials],
      "horizon": self.horizon,
      "backward_horizon": self.backward_horizon,
      "dt": self.dt,
      "snapshot_stride": self.snapshot_stride,
      "probes": self.probes.tolist(),
      "trace_velocities": [list(v) for v in self.trace_velocities],
      "forcing": _describe(self.forcing),
      "trace_interpolation": self.trace_interpolation,
    }


@dataclasses.dataclass
class EnergyLedger:
  """E(t) = kinetic + gradient + sum of potential terms, per step.

    power holds the exact rate dE/dt = -sum_j v_j . int (grad V_j)(x - v_j t)
    |u|^2 dx at the same times.
    """

  times: np.ndarray
  kinetic: np.ndarray
  gradient: np.ndarray
  potential: np.ndarray
  power: np.ndarray
  total: np.ndarray = None

  def __post_init__(self):
    self.times = np.asarray(self.times, dtype=float)
    self.kinetic = np.asarray(self.kinetic, dtype=float)
    self.gradient = np.asarray(self.gradient, dtype=float)
    self.potential = np.asarray(self.potential, dtype=float)
    if self.potential.ndim != 2:
      self.potential = self.potential.reshape(len(self.times), -1)
    self.power = np.asarray(self.power, dtype=float)
    self.total = self.kinetic + self.gradient + self.potential.sum(axis=1)


@dataclasses.dataclass
class SpaceTimeHistory:
  """Snapshots at stride multiples plus per-step probe traces.

    u and ut have shape (snapshots, n, n, n); trace_u and trace_ut have
    shape (steps + 1, probes, velocities) with trace i at
    probe + velocity * trace_times.
    """

  grid: lattice.BoxGrid
  times: np.ndarray
  u: np.ndarray
  ut: np.ndarray
  trace_times: np.ndarray
  probes: np.ndarray
  trace_velocities: np.ndarray
  trace_u: np.ndarray
  trace_ut: np.ndarray
  ledger: EnergyLedger = None
  potentials: tuple = ()
  forcing: object = None
  config: EvolutionConfig = None

  @property
  def t_min(self):
    return float(self.times[0])

  @property
  def t_max(self):
    return float(self.times[-1])

  @property
  def forward_index(self):
    """Index of the t = 0 snapshot."""
    return int(np.argmin(np.abs(self.times)))

  def snapshot(self, k):
    return lattice.WaveState.from_arrays(self.grid, self.u[k], self.ut[k],
                                         self.times[k])

  def initial_state(self):
    return self.snapshot(self.forward_index)

  def potential_at(self, t):
    values = np.zeros(self.grid.shape)
    for spec in self.potentials:
      values += spec.sample(self.grid, t)
    return values

  def acceleration(self, k):
    """u_tt at snapshot k from the equation: Laplacian u - V(t) u + F(t)."""
    t = float(self.times[k])
    grid = self.grid
    lap = sfft.irfftn(-grid.half_k2 * sfft.rfftn(self.u[k]), s=grid.shape)
    acc = lap - self.potential_at(t) * self.u[k]
    if self.forcing is not None:
      acc += self.forcing(t, grid)
    return acc

  def velocity_index(self, velocity):
    v = convert.normalize_point(velocity)
    for j, w in enumerate(self.trace_velocities):
      if np.allclose(w, v, rtol=0, atol=1e-12):
        return j
    raise exceptions.MissingTraceError(v)

  def bracket(self, t):
    """Index k with times[k] <= t <= times[k+1]."""
    if t < self.t_min - 1e-12 or t > self.t_max + 1e-12:
      raise exceptions.OutsideHistoryError(t, self.t_min, self.t_max)
    k = int(np.searchsorted(self.times, t, side="right")) - 1
    return min(max(k, 0), len(self.times) - 2)

  def data_norm(self):
    """||f||_{L^2} + ||g||_{H^1 homogeneous} of the t = 0 data (g, f)."""
    state = self.initial_state()
    return state.ut.norm() + np.sqrt(lattice.gradient_energy(state.u))


class _StrangStepper:
  """Kick-drift-kick stepper with cached rotations and potential samples."""

  def __init__(self, grid, potentials, dt, forcing=None):
    self.grid = grid
    self.potentials = tuple(potentials)
    self.dt = float(dt)
    self.forcing = forcing
    self.rotation = lattice.half_wave_rotation(grid, self.dt)
    self.half_rotation = lattice.half_wave_rotation(grid, 0.5 * self.dt)
    self.static = all(p.is_static for p in self.potentials)
    self._cache_time = None
    self._cache = None

  def samples(self, t):
    """Per-potential samples at time t."""
    if self._cache is not None and (self.static or self._cache_time == t):
      return self._cache
    self._cache = [p.sample(self.grid, t) for p in self.potentials]
    self._cache_time = t
    return self._cache

  def potential(self, t):
    samples = self.samples(t)
    if not samples:
      return None
    return sum(samples[1:], samples[0].copy()) if len(samples) > 1 \
      else samples[0]

  def step(self, u, ut, t):
    """Returns (u, ut, u_hat) at t + dt."""
    dt = self.dt
    grid = self.grid
    v = self.potential(t)
    if v is not None:
      ut = ut - 0.5 * dt * v * u
    u_hat = sfft.rfftn(u)
    ut_hat = sfft.rfftn(ut)
    if self.forcing is None:
      u_hat, ut_hat = lattice.rotate_spectra(u_hat, ut_hat, self.rotation)
    else:
      u_hat, ut_hat = lattice.rotate_spectra(u_hat, ut_hat, self.half_rotation)
      ut_hat = ut_hat + dt * sfft.rfftn(self.forcing(t + 0.5 * dt, grid))
      u_hat, ut_hat = lattice.rotate_spectra(u_hat, ut_hat, self.half_rotation)
    u = sfft.irfftn(u_hat, s=grid.shape)
    ut = sfft.irfftn(ut_hat, s=grid.shape)
    v = self.potential(t + dt)
    if v is not None:
      ut = ut - 0.5 * dt * v * u
    return u, ut, u_hat

  def energy(self, u, ut, u_hat, t):
    """(kinetic, gradient, per-potential terms, power) at time t."""
    grid = self.grid
    dv = grid.cell_volume
    kinetic = float(np.sum(ut ** 2)) * dv
    gradient = lattice.spectral_power(grid, u_hat, grid.half_k2)
    u2 = u ** 2
    terms = [float(np.sum(s * u2)) * dv for s in self.samples(t)]
    power = 0.0
    for spec in self.potentials:
      if spec.is_static:
        continue
      grads = spec.gradient(grid, t)
      power -= sum(spec.velocity[a] * float(np.sum(grads[a] * u2)) * dv
                   for a in range(3) if spec.velocity[a] != 0.0)
    return kinetic, gradient, terms, power


def step_strang(state, potentials, t, dt, forcing=None):
  """One Strang step: u_t -= dt/2 V(t) u, free flight over dt, then
    u_t -= dt/2 V(t + dt) u. Forcing is injected as dt * F(t + dt/2) at
    the midpoint of the free flight.

    :param state: State at time t.
    :type state: lattice.WaveState

    :param potentials: The moving potentials.
    :type potentials: list of potentials.PotentialSpec

    :rtype: lattice.WaveState
    """
  stepper = _StrangStepper(state.grid, potentials, dt, forcing)
  u, ut, _ = stepper.step(state.u.values, state.ut.values, float(t))
  return lattice.WaveState.from_arrays(state.grid, u, ut, t + dt)


def _trace_points(cfg, t):
  if not len(cfg.probes):
    return np.zeros((0, 3))
  vel = np.asarray(cfg.trace_velocities)
  return (cfg.probes[:, None, :] + t * vel[None, :, :]).reshape(-1, 3)


def _sample_traces(cfg, u, ut, t):
  pts = _trace_points(cfg, t)
  if not len(pts):
    return np.zeros(0), np.zeros(0)
  if cfg.trace_interpolation == "spectral":
    return (lattice.spectral_eval(u, cfg.grid, pts),
            lattice.spectral_eval(ut, cfg.grid, pts))
  return (lattice.interpolate_trilinear(u, cfg.grid, pts),
          lattice.interpolate_trilinear(ut, cfg.grid, pts))


def _run_direction(cfg, u, ut, dt, steps, record_traces):
  """Integrates steps steps of size dt; returns snapshots, traces, ledger."""
  grid = cfg.grid
  stepper = _StrangStepper(grid, cfg.potentials, dt, cfg.forcing)
  snap_t, snap_u, snap_ut = [0.0], [u.copy()], [ut.copy()]
  tr_u, tr_ut = [], []
  ledger = []
  if record_traces:
    a, b = _sample_traces(cfg, u, ut, 0.0)
    tr_u.append(a)
    tr_ut.append(b)
    ledger.append((0.0,) + stepper.energy(u, ut, sfft.rfftn(u), 0.0))
  t = 0.0
  for k in range(1, steps + 1):
    u, ut, u_hat = stepper.step(u, ut, t)
    t = k * dt
    if not (np.isfinite(u).all() and np.isfinite(ut).all()):
      raise exceptions.NumericalBlowupError(k, t)
    if record_traces:
      a, b = _sample_traces(cfg, u, ut, t)
      tr_u.append(a)
      tr_ut.append(b)
      ledger.append((t,) + stepper.energy(u, ut, u_hat, t))
    if k % cfg.snapshot_stride == 0 or k == steps:
      snap_t.append(t)
      snap_u.append(u.copy())
      snap_ut.append(ut.copy())
  return snap_t, snap_u, snap_ut, tr_u, tr_ut, ledger


def evolve(cfg, initial):
  """Evolves initial data over [-backward_horizon, horizon].

    :param cfg: The evolution config.
    :type cfg: EvolutionConfig

    :param initial: Data at t = 0.
    :type initial: lattice.WaveState

    :raises NumericalBlowupError: on non-finite values, with the step index.

    :rtype: SpaceTimeHistory
    """
  grid = cfg.grid
  lattice.check_same_grid(initial.u, grid)
  if cfg.wraps():
    logger.warning("Box length %.4g is below the no-wrap length %.4g",
                   grid.box_length, cfg.required_box_length())
  logger.info("evolving %d^3 grid: %d forward, %d backward steps, dt=%.4g",
              grid.n_per_axis, cfg.forward_steps, cfg.backward_steps, cfg.dt)
  u0 = initial.u.values.copy()
  ut0 = initial.ut.values.copy()
  fwd = _run_direction(cfg, u0, ut0, cfg.dt, cfg.forward_steps, True)
  times, us, uts = fwd[0], fwd[1], fwd[2]
  if cfg.backward_steps:
    bwd = _run_direction(cfg, u0, ut0, -cfg.dt, cfg.backward_steps, False)
    times = bwd[0][:0:-1] + times
    us = bwd[1][:0:-1] + us
    uts = bwd[2][:0:-1] + uts
  rows = fwd[5]
  n_probes = len(cfg.probes)
  n_vel = len(cfg.trace_velocities)
  ledger = EnergyLedger(
    times=[r[0] for r in rows], kinetic=[r[1] for r in rows],
    gradient=[r[2] for r in rows],
    potential=np.array([r[3] for r in rows]).reshape(len(rows),
                                                       len(cfg.potentials)),
    power=[r[4] for r in rows])
  history = SpaceTimeHistory(
    grid=grid, times=np.array(times), u=np.array(us), ut=np.array(uts),
    trace_times=cfg.dt * np.arange(cfg.forward_steps + 1),
    probes=cfg.probes.copy(),
    trace_velocities=np.asarray(cfg.trace_velocities, dtype=float).reshape(-1, 3),
    trace_u=np.array(fwd[3]).reshape(len(fwd[3]), n_probes, n_vel),
    trace_ut=np.array(fwd[4]).reshape(len(fwd[4]), n_probes, n_vel),
    ledger=ledger, potentials=cfg.potentials, forcing=cfg.forcing, config=cfg)
  logger.info("evolution done: %d snapshots in [%.4g, %.4g]",
              len(history.times), history.t_min, history.t_max)
  return history


@dataclasses.dataclass
class ProjectionDecay:
  """||P_b(H1) u(t)|| and ||P_b(H2) u_L(t')|| series."""

  times: np.ndarray
  series: np.ndarray
  boosted_times: np.ndarray
  boosted_series: np.ndarray
  certified: bool
  reason: str = ""


def _quiet_tail(times, series, floor=0.0):
  """True when the series stays below 10% of its max over the last
    quarter of its time span, or never exceeds floor."""
  series = np.asarray(series)
  if not len(series):
    return True
  peak = float(np.max(series))
  if peak <= floor:
    return True
  start = times[0] + 0.75 * (times[-1] - times[0])
  tail = series[np.asarray(times) >= start - 1e-12]
  return float(np.max(tail)) <= CERTIFICATION_FRACTION * peak


def track_projection_decay(history, states1, states2, boost, window=None,
                           t_primes=None):
  """Bound-state projections of the solution in both frames.

    :param history: A forward history.
    :type history: SpaceTimeHistory

    :param states1: Bound states of H1 (lab frame).
    :type states1: potentials.BoundStateSet

    :param states2: Bound states of the compressed H2 (boosted frame).
    :type states2: potentials.BoundStateSet

    :param boost: The boost making the second potential static.
    :type boost: lorentz.Boost

    :param window: (x1' center, half width) of the boosted-frame columns
        resampled; defaults to the compressed well center and L/4.
    :type window: tuple

    :raises OutsideHistoryError: when no boosted slice fits the history.

    :rtype: ProjectionDecay
    """
  from wavecharge import lorentz

  mask = history.times >= -1e-12
  times = history.times[mask]
  series = []
  for k in np.flatnonzero(mask):
    f = lattice.ScalarField(history.grid, history.u[k])
    series.append(np.linalg.norm(potentials_mod.bound_coefficients(states1, f)))
  series = np.array(series)

  boosted_times = np.zeros(0)
  boosted_series = np.zeros(0)
  if len(states2):
    if window is None:
      center = states2.spec.center[0] if states2.spec is not None else 0.0
      window = (center, history.grid.box_length / 4)
    if t_primes is None:
      lo, hi = lorentz.boosted_time_range(history, boost, window)
      step = history.times[1] - history.times[0] if len(history.times) > 1 \
        else history.config.dt
      t_primes = np.arange(lo, hi + 1e-9, step)
    boosted_times = np.asarray(t_primes, dtype=float)
    values = []
    for tp in boosted_times:
      slice_state = lorentz.resample_boosted(history, boost, tp, window)
      values.append(np.linalg.norm(
        potentials_mod.bound_coefficients(states2, slice_state.u)))
    boosted_series = np.array(values)

  floor = CERTIFICATION_FLOOR * history.data_norm()
  first = _quiet_tail(times, series, floor)
  second = _quiet_tail(boosted_times, boosted_series, floor)
  reason = ""
  if not first:
    reason = "H1 bound-state projection does not decay"
  elif not second:
    reason = "H2 bound-state projection does not decay"
  return ProjectionDecay(times, series, boosted_times, boosted_series,
                         first and second, reason)


@dataclasses.dataclass
class ChannelSplit:
  """chi_1 u, chi_2 u, chi_3 u and their squared L2 masses."""

  fields: tuple
  masses: tuple
  radius: float


def channel_decomposition(snapshot, t, delta, velocity, origin=(0.0, 0.0, 0.0)):
  """Partition of unity: chi_1 on the ball of radius delta*t about origin,
    chi_2 on the same ball moved by velocity*t, chi_3 = 1 - chi_1 - chi_2.

    :param snapshot: The state at time t.
    :type snapshot: lattice.WaveState

    :raises ChannelOverlapError: unless delta < |velocity|/2.
    :raises ValueError: when delta*t is under 4 grid spacings.

    :rtype: ChannelSplit
    """
  grid = snapshot.grid
  v = convert.normalize_point(velocity)
  speed = float(np.linalg.norm(v))
  if not delta < 0.5 * speed:
    raise exceptions.ChannelOverlapError(
      "delta %.4g must be below |v|/2 = %.4g" % (delta, 0.5 * speed))
  radius = delta * t
  if radius < 4 * grid.spacing:
    raise ValueError("Channel radius %.4g is under 4 grid spacings" % radius)
  o = convert.normalize_point(origin)
  chi1 = (grid.radius_from(o) < radius).astype(float)
  chi2 = (grid.radius_from(o + t * v) < radius).astype(float)
  chi3 = 1.0 - chi1 - chi2
  u = snapshot.u.values
  fields = tuple(lattice.ScalarField(grid, chi * u) for chi in (chi1, chi2, chi3))
  masses = tuple(f.inner(f) for f in fields)
  return ChannelSplit(fields, masses, radius)


def energy_derivative_check(history):
  """Compares centered differences of the ledger energy with the exact
    rate -sum_j v_j . int (grad V_j)(x - v_j t) |u|^2 dx.

    :rtype: dict with "defect", "max_rate", "max_difference",
        "relative_drift"
    """
  ledger = history.ledger
  E = ledger.total
  if len(E) < 3:
    raise ValueError("Ledger too short for centered differences")
  dt = ledger.times[1] - ledger.times[0]
  fd = (E[2:] - E[:-2]) / (2 * dt)
  rate = ledger.power[1:-1]
  floor = 1e-12 * max(float(np.max(np.abs(E))), np.finfo(float).tiny)
  scale = max(float(np.max(np.abs(rate))), floor)
  scale_e = max(float(np.max(np.abs(E))), np.finfo(float).tiny)
  return {
    "defect": float(np.max(np.abs(fd - rate)) / scale),
    "max_rate": float(np.max(np.abs(rate))),
    "max_difference": float(np.max(np.abs(fd))),
    "relative_drift": float((np.max(E) - np.min(E)) / scale_e),
  }


def save_history(history, directory, config_hash=None):
  """Writes manifest.json, snapshot WCL1 files and traces.csv.

    :rtype: string (manifest path)
    """
  os.makedirs(directory, exist_ok=True)
  snapshots = []
  for k, t in enumerate(history.times):
    names = ("u_%04d.wcl" % k, "ut_%04d.wcl" % k)
    for name, values in zip(names, (history.u[k], history.ut[k])):
      with reports.atomic_write(os.path.join(directory, name), "wb") as f:
        f.write(convert.encode_field(values, history.grid.box_length, t))
    snapshots.append({"time": float(t), "u": names[0], "ut": names[1]})
  rows = []
  for i, t in enumerate(history.trace_times):
    for p in range(len(history.probes)):
      for j, v in enumerate(history.trace_velocities):
        rows.append([t, p, v[0], v[1], v[2], history.trace_u[i, p, j],
                     history.trace_ut[i, p, j]])
  reports.write_csv(os.path.join(directory, "traces.csv"),
                    ["t", "probe_id", "vx", "vy", "vz", "u", "ut"], rows,
                    config_hash)
  ledger_rows = [[t, e, k, g, p] for t, e, k, g, p in zip(
    history.ledger.times, history.ledger.total, history.ledger.kinetic,
    history.ledger.gradient, history.ledger.power)]
  reports.write_csv(os.path.join(directory, "energy.csv"),
                    ["t", "total", "kinetic", "gradient", "power"],
                    ledger_rows, config_hash)
  manifest = {
    "config": history.config.describe() if history.config else None,
    "config_hash": config_hash,
    "snapshots": snapshots,
    "traces": "traces.csv",
    "energy": "energy.csv",
  }
  path = os.path.join(directory, "manifest.json")
  reports.write_json(path, manifest)
  return path
