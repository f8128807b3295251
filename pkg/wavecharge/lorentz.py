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

"""Lorentz boosts along x1, resampling of stored histories into a boosted
frame, and energies on slanted slices t = mu * x1.

    For example:

    b = lorentz.Boost(0.6)
    lorentz.boost_point(b, (1.0, 0.0, 0.0), 0.0)
    # (array([ 1.25,  0.  ,  0.  ]), -0.75)
"""

import dataclasses
import logging

import numpy as np
from scipy import fft as sfft

from wavecharge import convert
from wavecharge import exceptions
from wavecharge import lattice
from wavecharge import reports

logger = logging.getLogger(__name__)

DEFAULT_COMPARABILITY_BOUND = 10.0


@dataclasses.dataclass(frozen=True)
class Boost:
  """The boost with velocity v e1 (units with c = 1)."""

  v: float

  def __post_init__(self):
    object.__setattr__(self, "v", float(self.v))
    if abs(self.v) >= 1.0:
      raise exceptions.SuperluminalError(abs(self.v))

  @classmethod
  def from_velocity(cls, velocity):
    """Boost for a velocity vector, which must point along x1."""
    v = convert.normalize_point(velocity)
    if v[1] != 0.0 or v[2] != 0.0:
      raise ValueError("Only boosts along x1 are supported; velocity %s"
                       % (tuple(v),))
    return cls(v[0])

  @property
  def gamma(self):
    return 1.0 / np.sqrt(1.0 - self.v * self.v)

  def inverse(self):
    return Boost(-self.v)


def boost_point(b, x, t):
  """(x, t) -> (x', t') with t' = gamma (t - v x1), x1' = gamma (x1 - v t).

    :param b: The boost.
    :type b: Boost

    :param x: The event position.
    :type x: dict or list or tuple or numpy.ndarray

    :param t: The event time.
    :type t: float

    :rtype: tuple (numpy.ndarray, float)
    """
  x = convert.normalize_point(x)
  g = b.gamma
  xp = x.copy()
  xp[0] = g * (x[0] - b.v * t)
  return xp, g * (t - b.v * x[0])


def inverse_boost_point(b, x, t):
  """Inverse of boost_point."""
  return boost_point(b.inverse(), x, t)


def compose(first, second):
  """The boost equal to applying first, then second: relativistic velocity
    addition (v1 + v2) / (1 + v1 v2).

    :rtype: Boost
    """
  return Boost((first.v + second.v) / (1.0 + first.v * second.v))


def _window_columns(grid, window):
  axis = grid.axis
  if window is None:
    return np.arange(grid.n_per_axis)
  center, half_width = window
  return np.flatnonzero(np.abs(axis - center) <= half_width)


def boosted_time_range(history, boost, window=None):
  """The t' interval whose boosted slices (restricted to window) lie inside
    the stored time range.

    :raises OutsideHistoryError: when the interval is empty.

    :rtype: tuple (float, float)
    """
  cols = _window_columns(history.grid, window)
  x = history.grid.axis[cols]
  g, v = boost.gamma, boost.v
  lo = history.t_min / g - float(np.min(v * x))
  hi = history.t_max / g - float(np.max(v * x))
  if hi < lo:
    raise exceptions.OutsideHistoryError(lo, history.t_min, history.t_max)
  return lo, hi


class _SnapshotDerivatives:
  """Lazily computed per-snapshot fields used by the resamplers."""

  def __init__(self, history):
    self.history = history
    self._cache = {}

  def _get(self, key, k, func):
    if (key, k) not in self._cache:
      self._cache[(key, k)] = func()
    return self._cache[(key, k)]

  def utt(self, k):
    return self._get("utt", k, lambda: self.history.acceleration(k))

  def _dx(self, values):
    grid = self.history.grid
    return sfft.irfftn(1j * grid.half_k[0] * sfft.rfftn(values), s=grid.shape)

  def ux(self, k):
    return self._get("ux", k, lambda: self._dx(self.history.u[k]))

  def uxt(self, k):
    return self._get("uxt", k, lambda: self._dx(self.history.ut[k]))

  def grad(self, k):
    return self._get("grad", k, lambda: lattice.spectral_gradient(
      self.history.u[k], self.history.grid))

  def grad_t(self, k):
    return self._get("grad_t", k, lambda: lattice.spectral_gradient(
      self.history.ut[k], self.history.grid))


def _derivatives(history):
  """The derivative cache attached to a history."""
  derivs = getattr(history, "_boost_cache", None)
  if derivs is None:
    derivs = _SnapshotDerivatives(history)
    history._boost_cache = derivs
  return derivs


def _hermite(tau, dt, p0, m0, p1, m1):
  """Cubic Hermite interpolant at fraction tau of a step of length dt."""
  if tau == 0.0:
    return p0
  if tau == 1.0:
    return p1
  t2 = tau * tau
  t3 = t2 * tau
  return ((2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + tau) * dt * m0
          + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * dt * m1)


def _column(values, index):
  """Linear interpolation of the x1 column at fractional index (periodic)."""
  n = values.shape[0]
  j0 = int(np.floor(index))
  w = index - j0
  j0 %= n
  if w == 0.0:
    return values[j0]
  return (1.0 - w) * values[j0] + w * values[(j0 + 1) % n]


def resample_boosted(history, boost, t_prime, window=None):
  """The solution seen in the boosted frame at time t', on the same grid.

    u_L(x', t') = u(gamma (x1' + v t'), x2', x3', gamma (t' + v x1')), with
    u_t' = gamma (v d/dx1 u + d/dt u). Stored snapshots are interpolated
    linearly in x1 and by cubic Hermite in t.

    :param history: The stored solution.
    :type history: evolution.SpaceTimeHistory

    :param boost: The boost.
    :type boost: Boost

    :param t_prime: Boosted-frame time.
    :type t_prime: float

    :param window: (x1' center, half width); columns outside it are zero.
    :type window: tuple

    :raises OutsideHistoryError: when an event falls outside the stored times.
    :raises HorizonError: when an event falls outside the stored box.

    :rtype: lattice.WaveState
    """
  grid = history.grid
  h = grid.spacing
  half_box = 0.5 * grid.box_length
  g, v = boost.gamma, boost.v
  derivs = _derivatives(history)
  u_out = np.zeros(grid.shape)
  ut_out = np.zeros(grid.shape)
  for i in _window_columns(grid, window):
    xp = grid.axis[i]
    t = g * (t_prime + v * xp)
    shift = (g - 1.0) * xp + g * v * t_prime
    if abs(xp + shift) > half_box + 1e-12:
      raise exceptions.HorizonError(abs(xp + shift), half_box,
                                    "boosted event position")
    k = history.bracket(t)
    dt = history.times[k + 1] - history.times[k]
    tau = (t - history.times[k]) / dt
    index = i + shift / h
    if tau == 0.0:
      u = _column(history.u[k], index)
      ut = _column(history.ut[k], index)
      ux = _column(derivs.ux(k), index) if v else 0.0
    elif tau == 1.0:
      u = _column(history.u[k + 1], index)
      ut = _column(history.ut[k + 1], index)
      ux = _column(derivs.ux(k + 1), index) if v else 0.0
    else:
      cols = {}
      for j in (k, k + 1):
        cols[j] = (_column(history.u[j], index), _column(history.ut[j], index),
                   _column(derivs.utt(j), index))
      u = _hermite(tau, dt, cols[k][0], cols[k][1], cols[k + 1][0],
                   cols[k + 1][1])
      ut = _hermite(tau, dt, cols[k][1], cols[k][2], cols[k + 1][1],
                    cols[k + 1][2])
      ux = 0.0
      if v:
        ux = _hermite(tau, dt, _column(derivs.ux(k), index),
                      _column(derivs.uxt(k), index),
                      _column(derivs.ux(k + 1), index),
                      _column(derivs.uxt(k + 1), index))
    u_out[i] = u
    ut_out[i] = g * (v * ux + ut) if v else ut
  return lattice.WaveState.from_arrays(grid, u_out, ut_out, t_prime)


@dataclasses.dataclass(frozen=True)
class SlantedSliceEnergy:
  """Energies on the slice t = mu x1.

    E1 integrates |grad u|^2, E2 integrates u_t^2, E3 = E1 + (1 - mu^2/2) E2.
    """

  mu: float
  E1: float
  E2: float

  @property
  def E3(self):
    return self.E1 + (1.0 - 0.5 * self.mu ** 2) * self.E2

  @property
  def total(self):
    return self.E1 + self.E2


def slanted_energy(history, mu):
  """Samples the history along t = mu x1 (column by column, cubic Hermite
    in time) and integrates |grad u|^2 and u_t^2 over x.

    :raises ValueError: when |mu| >= 1.
    :raises OutsideHistoryError: when the slice leaves the stored times.

    :rtype: SlantedSliceEnergy
    """
  mu = float(mu)
  if abs(mu) >= 1.0:
    raise ValueError("Slice slope must satisfy |mu| < 1, got %r" % mu)
  grid = history.grid
  derivs = _derivatives(history)
  e1 = 0.0
  e2 = 0.0
  for i, x1 in enumerate(grid.axis):
    t = mu * x1
    k = history.bracket(t)
    dt = history.times[k + 1] - history.times[k]
    tau = (t - history.times[k]) / dt
    if tau == 1.0:
      k, tau = k + 1, 0.0
    if tau == 0.0:
      grads = [gr[i] for gr in derivs.grad(k)]
      ut = history.ut[k][i]
    else:
      gk, gk1 = derivs.grad(k), derivs.grad(k + 1)
      gtk, gtk1 = derivs.grad_t(k), derivs.grad_t(k + 1)
      grads = [_hermite(tau, dt, gk[a][i], gtk[a][i], gk1[a][i], gtk1[a][i])
               for a in range(3)]
      ut = _hermite(tau, dt, history.ut[k][i], derivs.utt(k)[i],
                    history.ut[k + 1][i], derivs.utt(k + 1)[i])
    e1 += float(sum(np.sum(gr ** 2) for gr in grads))
    e2 += float(np.sum(ut ** 2))
  dv = grid.cell_volume
  return SlantedSliceEnergy(mu, e1 * dv, e2 * dv)


@dataclasses.dataclass
class ComparabilityReport:
  """Slanted energies relative to the flat slice, one row per mu."""

  rows: list
  bound: float

  @property
  def flagged(self):
    return [r for r in self.rows if r["flag"] != "ok"]

  @property
  def ok(self):
    return all(r["flag"] != "out_of_range" for r in self.rows)

  def growth_rate(self):
    """Least-squares slope of log(E3(mu)/E3(0)) against |mu| (through the
      origin), the measured constant in E3(mu) <= exp(C |mu|) E3(0)."""
    pts = [(abs(r["mu"]), np.log(r["E3"] / self.rows[0]["E3_flat"]))
           for r in self.rows if r["E3"] > 0 and r["mu"] != 0.0]
    if not pts:
      return 0.0
    x, y = np.array(pts).T
    return float(np.dot(x, y) / np.dot(x, x))


def comparability_report(history, mus, bound=DEFAULT_COMPARABILITY_BOUND):
  """(E1(mu) + E2(mu)) / (E1(0) + E2(0)) for each mu.

    A zero flat-slice energy gives ratio 1 with flag "degenerate"; a
    ratio outside [1/bound, bound] is flagged "out_of_range".

    :rtype: ComparabilityReport
    """
  flat = slanted_energy(history, 0.0)
  rows = []
  for mu in mus:
    e = flat if float(mu) == 0.0 else slanted_energy(history, mu)
    if flat.total == 0.0:
      ratio, flag = 1.0, "degenerate"
    else:
      ratio = e.total / flat.total
      flag = "ok" if 1.0 / bound <= ratio <= bound else "out_of_range"
    rows.append({"mu": float(mu), "E1": e.E1, "E2": e.E2, "E3": e.E3,
                 "ratio": ratio, "flag": flag, "E3_flat": flat.E3})
  report = ComparabilityReport(rows, bound)
  if report.flagged:
    logger.warning("%d slanted slices flagged", len(report.flagged))
  return report


def write_comparability_csv(report, path, config_hash=None):
  header = ["mu", "E1", "E2", "E3", "ratio", "flag"]
  return reports.write_dict_rows(path, header, report.rows, config_hash)


def boosted_history(history, boost, window, t_primes=None):
  """Resamples a free history into the boosted frame at t' values.

    Only meaningful for free runs: the result carries no potentials.

    :rtype: evolution.SpaceTimeHistory
    """
  from wavecharge import evolution

  if t_primes is None:
    lo, hi = boosted_time_range(history, boost, window)
    step = float(history.times[1] - history.times[0])
    t_primes = np.arange(lo, hi + 1e-9, step)
  slices = [resample_boosted(history, boost, tp, window) for tp in t_primes]
  grid = history.grid
  return evolution.SpaceTimeHistory(
    grid=grid, times=np.asarray(t_primes, dtype=float),
    u=np.array([s.u.values for s in slices]),
    ut=np.array([s.ut.values for s in slices]),
    trace_times=np.zeros(0), probes=np.zeros((0, 3)),
    trace_velocities=np.zeros((0, 3)), trace_u=np.zeros((0, 0, 0)),
    trace_ut=np.zeros((0, 0, 0)))


def boost_round_trip(history, boost, half_width=None):
  """Boosts a free history, boosts back at t = 0, and returns the relative
    L2 error against the stored t = 0 snapshot on the central columns.

    :rtype: float
    """
  grid = history.grid
  if half_width is None:
    half_width = grid.box_length / 4
  forward = boosted_history(history, boost, (0.0, half_width))
  inner = half_width / (2 * boost.gamma)
  back = resample_boosted(forward, boost.inverse(), 0.0, (0.0, inner))
  cols = _window_columns(grid, (0.0, inner))
  original = history.u[history.forward_index][cols]
  scale = np.linalg.norm(original)
  error = np.linalg.norm(back.u.values[cols] - original)
  return float(error / scale) if scale > 0 else float(error)
