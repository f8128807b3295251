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

"""Space-time norms of stored solutions and forcings.

Every reduction is a discrete quadrature: cell-volume sums in space and
trapezoid weights over the stored snapshot times. Lorentz quasi-norms use
the step-function decreasing rearrangement of the cell values, which makes
them exact for the sampled step function.
"""

import dataclasses
import logging

import numpy as np
from scipy import integrate

from wavecharge import convert
from wavecharge import evolution
from wavecharge import exceptions
from wavecharge import lattice
from wavecharge import reports

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.1
DUHAMEL_SAMPLES = 8
NORM_COLUMNS = ["norm_id", "p", "q", "outer", "velocity", "alpha", "mu", "A",
                "horizon", "value", "ratio", "denominator"]


@dataclasses.dataclass(frozen=True)
class MixedNormSpec:
  """L_t^p L_x^q (outer="time") or L_x^q L_t^p (outer="space").

    With a weight, the inner spatial measure becomes <x - mu t>^(-alpha) dx.
    A trajectory velocity evaluates u(x + v t, t) instead of u(x, t).
    """

  outer: str = "time"
  p: float = 2.0
  q: float = 2.0
  horizon: float = None
  trajectory_velocity: tuple = (0.0, 0.0, 0.0)
  alpha: float = None
  mu: tuple = (0.0, 0.0, 0.0)

  def __post_init__(self):
    if self.outer not in ("time", "space"):
      raise ValueError("outer must be 'time' or 'space', got %r" % self.outer)
    for name in ("p", "q"):
      if not getattr(self, name) >= 1:
        raise ValueError("Exponent %s must be in [1, inf]" % name)
    object.__setattr__(self, "trajectory_velocity", tuple(
      convert.normalize_point(self.trajectory_velocity).tolist()))
    object.__setattr__(self, "mu", tuple(
      convert.normalize_point(self.mu).tolist()))
    speed = float(np.linalg.norm(self.trajectory_velocity))
    if speed >= 1.0:
      raise exceptions.SuperluminalError(speed)
    if self.alpha is not None and not self.alpha > 3:
      raise ValueError("Weight exponent alpha must exceed 3, got %r"
                       % self.alpha)


@dataclasses.dataclass
class NormReport:
  """One evaluated norm, with the data norm it is compared against."""

  norm_id: str
  value: float
  denominator: float = None
  ratio: float = None
  p: float = None
  q: float = None
  outer: str = None
  velocity: tuple = None
  alpha: float = None
  mu: tuple = None
  A: float = None
  horizon: float = None
  grid: dict = None
  extra: dict = dataclasses.field(default_factory=dict)

  def __post_init__(self):
    self.value = float(self.value)
    if not (np.isfinite(self.value) and self.value >= 0):
      raise ValueError("Norm %s evaluated to %r" % (self.norm_id, self.value))

  def row(self):
    return {
      "norm_id": self.norm_id,
      "p": self.p,
      "q": self.q,
      "outer": self.outer,
      "velocity": convert.vector_label(self.velocity)
      if self.velocity is not None else None,
      "alpha": self.alpha,
      "mu": convert.vector_label(self.mu) if self.mu is not None else None,
      "A": self.A,
      "horizon": self.horizon,
      "value": self.value,
      "ratio": self.ratio,
      "denominator": self.denominator,
    }


def write_norm_csv(norm_reports, path, config_hash=None):
  return reports.write_dict_rows(path, NORM_COLUMNS,
                                 [r.row() for r in norm_reports], config_hash)


def trapezoid_weights(times):
  """Trapezoid weights of a sorted sample-time array (zeros for one sample)."""
  times = np.asarray(times, dtype=float)
  w = np.zeros(len(times))
  if len(times) > 1:
    d = np.diff(times)
    w[:-1] += 0.5 * d
    w[1:] += 0.5 * d
  return w


def _forward_indices(history, horizon=None):
  """Snapshot indices with 0 <= t <= horizon."""
  if horizon is None:
    horizon = history.t_max
  if horizon > history.t_max + 1e-9:
    raise exceptions.HorizonError(horizon, history.t_max, "norm horizon")
  return np.flatnonzero((history.times >= -1e-12)
                        & (history.times <= horizon + 1e-9))


def _along(history, k, velocity):
  """Samples of u(x + v t_k, t_k)."""
  v = np.asarray(velocity, dtype=float)
  if not np.any(v):
    return history.u[k]
  return lattice.shift_field(history.u[k], history.grid, v * history.times[k])


def _japanese(grid, center=(0.0, 0.0, 0.0)):
  r = grid.radius_from(center)
  return np.sqrt(1.0 + r * r)


def _lebesgue(values, exponent, measure):
  """(sum |f|^r measure)^(1/r) along the last axes; max for r = inf."""
  a = np.abs(values)
  if np.isinf(exponent):
    return np.max(a) if a.size else 0.0
  return float(np.sum(measure * a ** exponent)) ** (1.0 / exponent)


def _ratio(value, denominator, power=1):
  if denominator is None or denominator == 0:
    return None
  return value / denominator ** power


def mixed_norm(history, spec):
  """Discrete mixed Lebesgue norm of the stored solution.

    :param history: The stored solution.
    :type history: evolution.SpaceTimeHistory

    :param spec: Which norm.
    :type spec: MixedNormSpec

    :raises HorizonError: when spec.horizon exceeds the stored range.

    :rtype: NormReport
    """
  grid = history.grid
  idx = _forward_indices(history, spec.horizon)
  times = history.times[idx]
  wt = trapezoid_weights(times)
  dv = grid.cell_volume
  fields = np.array([_along(history, k, spec.trajectory_velocity) for k in idx])
  measure = np.full((len(idx),) + grid.shape, dv)
  if spec.alpha is not None:
    mu = np.asarray(spec.mu)
    for i, t in enumerate(times):
      measure[i] = dv * _japanese(grid, t * mu) ** (-spec.alpha)
  if spec.outer == "time":
    inner = np.array([_lebesgue(fields[i], spec.q, measure[i])
                      for i in range(len(idx))])
    if np.isinf(spec.p):
      value = float(np.max(inner)) if len(inner) else 0.0
    else:
      value = float(np.sum(wt * inner ** spec.p)) ** (1.0 / spec.p)
  else:
    a = np.abs(fields)
    relative = measure / dv
    if np.isinf(spec.p):
      inner = np.max(relative * a, axis=0)
    else:
      inner = np.tensordot(wt, relative * a ** spec.p, axes=1) ** (1.0 / spec.p)
    value = _lebesgue(inner, spec.q, dv)
  horizon = float(times[-1]) if len(times) else 0.0
  denominator = history.data_norm()
  return NormReport(
    "mixed_%s" % spec.outer, value, denominator, _ratio(value, denominator),
    p=spec.p, q=spec.q, outer=spec.outer,
    velocity=spec.trajectory_velocity, alpha=spec.alpha, mu=spec.mu,
    horizon=horizon, grid=grid.describe())


def reversed_endpoint(history, velocity=(0.0, 0.0, 0.0), probes=None,
                      horizon=None):
  """sup over probes of the integral of |u(x + v t, t)|^2 dt over [0, T].

    The probe maximum is a lower bound for the sup over all x; the maximum
    over grid cells (from snapshots) is reported as "grid_value". The ratio
    divides by the square of ||f||_2 + ||grad g||_2.

    :param velocity: A velocity recorded in the traces.
    :param probes: Probe indices to use; all probes by default.

    :raises MissingTraceError: when no trace has this velocity.

    :rtype: NormReport
    """
  j = history.velocity_index(velocity)
  times = history.trace_times
  if horizon is not None:
    if horizon > times[-1] + 1e-9:
      raise exceptions.HorizonError(horizon, times[-1], "norm horizon")
    keep = times <= horizon + 1e-9
  else:
    keep = np.ones(len(times), dtype=bool)
  traces = history.trace_u[keep][:, :, j]
  if probes is not None:
    traces = traces[:, list(probes)]
  w = trapezoid_weights(times[keep])
  per_probe = w @ traces ** 2 if traces.size else np.zeros(0)
  value = float(np.max(per_probe)) if len(per_probe) else 0.0

  idx = _forward_indices(history, horizon if horizon is not None
                         else float(times[keep][-1]))
  ws = trapezoid_weights(history.times[idx])
  grid_integral = np.zeros(history.grid.shape)
  for wk, k in zip(ws, idx):
    grid_integral += wk * _along(history, k, velocity) ** 2
  denominator = history.data_norm()
  return NormReport(
    "reversed_endpoint", value, denominator, _ratio(value, denominator, 2),
    p=2.0, q=np.inf, outer="space",
    velocity=tuple(convert.normalize_point(velocity).tolist()),
    horizon=float(times[keep][-1]), grid=history.grid.describe(),
    extra={"per_probe": per_probe.tolist(),
           "grid_value": float(np.max(grid_integral)),
           "probe_count": int(traces.shape[1]) if traces.ndim == 2 else 0})


def continuum_envelope(alpha):
  """Integral of <y>^(-alpha) over R^3, alpha > 3."""
  if not alpha > 3:
    raise ValueError("Envelope integral diverges for alpha <= 3")
  value, _ = integrate.quad(lambda r: 4 * np.pi * r * r
                            * (1 + r * r) ** (-0.5 * alpha), 0, np.inf)
  return value


def weighted_local_decay(history, alpha, mu=(0.0, 0.0, 0.0), horizon=None):
  """Double integral of <x - mu t>^(-alpha) u^2 over space and [0, T].

    Computed in the moving frame y = x - mu t, so that with the box envelope
    E = h^3 sum_y <y>^(-alpha) and M = max_y int u(y + mu t, t)^2 dt the
    bound value <= E * M holds exactly on the grid. Both sides are in
    extra, next to the continuum envelope. When a trace for mu was
    recorded, its reversed endpoint M_trace and the slack
    E * M_trace - value are reported as well.

    :raises ValueError: when alpha <= 3 or |mu| >= 1.

    :rtype: NormReport
    """
  if not alpha > 3:
    raise ValueError("Weighted local decay needs alpha > 3, got %r" % alpha)
  mu = convert.normalize_point(mu)
  if np.linalg.norm(mu) >= 1.0:
    raise exceptions.SuperluminalError(float(np.linalg.norm(mu)))
  grid = history.grid
  idx = _forward_indices(history, horizon)
  w = trapezoid_weights(history.times[idx])
  weight = _japanese(grid) ** (-alpha)
  per_cell = np.zeros(grid.shape)
  for wk, k in zip(w, idx):
    per_cell += wk * _along(history, k, mu) ** 2
  dv = grid.cell_volume
  value = float(np.sum(weight * per_cell)) * dv
  envelope = float(np.sum(weight)) * dv
  grid_endpoint = float(np.max(per_cell))
  extra = {
    "envelope": envelope,
    "continuum_envelope": continuum_envelope(alpha),
    "grid_endpoint": grid_endpoint,
    "bound": envelope * grid_endpoint,
    "slack": envelope * grid_endpoint - value,
  }
  try:
    extra["trace_endpoint"] = reversed_endpoint(history, mu, horizon=horizon
                                                ).value
    extra["trace_slack"] = envelope * extra["trace_endpoint"] - value
  except exceptions.MissingTraceError:
    pass
  denominator = history.data_norm()
  return NormReport(
    "weighted_local_decay", value, denominator, _ratio(value, denominator, 2),
    alpha=float(alpha), mu=tuple(mu.tolist()),
    horizon=float(history.times[idx][-1]), grid=grid.describe(), extra=extra)


def local_energy_decay(history, mu=(0.0, 0.0, 0.0), epsilon=DEFAULT_EPSILON,
                       horizon=None):
  """Double integral of <x - mu t>^(-1 - 2 epsilon) (|grad u|^2 + u_t^2).

    :rtype: NormReport
    """
  if not epsilon > 0:
    raise ValueError("epsilon must be positive")
  mu = convert.normalize_point(mu)
  grid = history.grid
  idx = _forward_indices(history, horizon)
  w = trapezoid_weights(history.times[idx])
  total = 0.0
  for wk, k in zip(w, idx):
    t = history.times[k]
    density = history.ut[k] ** 2
    for g in lattice.spectral_gradient(history.u[k], grid):
      density = density + g ** 2
    weight = _japanese(grid, t * mu) ** (-1.0 - 2.0 * epsilon)
    total += wk * float(np.sum(weight * density))
  value = total * grid.cell_volume
  denominator = history.data_norm()
  return NormReport(
    "local_energy_decay", value, denominator, _ratio(value, denominator, 2),
    alpha=1.0 + 2.0 * epsilon, mu=tuple(mu.tolist()),
    horizon=float(history.times[idx][-1]), grid=grid.describe())


def lorentz_quasi_norm(values, p, q, cell_volume=1.0):
  """Discrete Lorentz quasi-norm ||f||_{L^{p,q}} of a step function.

    With the cell values sorted decreasingly (a_j) and V_j = j * cell volume,
    the norm is (sum_j a_j^q (p/q) (V_j^(q/p) - V_(j-1)^(q/p)))^(1/q), and
    max_j a_j V_j^(1/p) for q = inf. For p = q this is the L^p norm.

    :param values: Cell values, or a ScalarField (its cell volume is used).
    :type values: numpy.ndarray or lattice.ScalarField

    :param p: 1 < p < inf.
    :param q: 1 <= q <= inf.

    :rtype: float
    """
  if isinstance(values, lattice.ScalarField):
    cell_volume = values.grid.cell_volume
    values = values.values
  if not 1 < p < np.inf:
    raise ValueError("Lorentz exponent p must lie in (1, inf), got %r" % p)
  if not q >= 1:
    raise ValueError("Lorentz exponent q must lie in [1, inf], got %r" % q)
  a = np.abs(np.asarray(values, dtype=float)).ravel()
  if not a.size:
    return 0.0
  if p == q:
    return float(np.sum(a ** p) * cell_volume) ** (1.0 / p)
  a = -np.sort(-a, kind="stable")
  volumes = cell_volume * np.arange(1, a.size + 1)
  if np.isinf(q):
    return float(np.max(a * volumes ** (1.0 / p)))
  powered = volumes ** (q / p)
  increments = np.diff(powered, prepend=0.0)
  return float(np.sum(a ** q * (p / q) * increments)) ** (1.0 / q)


def embedding_constant(p, q):
  """C with ||f||_{L^p} <= C ||f||_{L^{p,q}} for q < p."""
  return (q / p) ** (1.0 / q - 1.0 / p)


def radial_angular_norm(history, center=(0.0, 0.0, 0.0), p_angular=2.0,
                        radii=None, horizon=None, rule=None):
  """L_t^2 L_r^inf L_omega^p about center: on each snapshot, the angular
    L^p norm (sphere quadrature, weights summing to 4 pi) of trilinear
    samples on spheres, the max over radii, then L^2 in time.

    extra["normalized"] divides by (4 pi)^(1/p), which makes radial fields
    independent of p.

    :raises ValueError: when p_angular is outside [1, inf).
    :raises HorizonError: when a radius reaches half the box.

    :rtype: NormReport
    """
  if not 1 <= p_angular < np.inf:
    raise ValueError("Angular exponent must lie in [1, inf), got %r"
                     % p_angular)
  grid = history.grid
  h = grid.spacing
  if radii is None:
    radii = h * np.arange(0.5, grid.n_per_axis // 2 - 1)
  radii = np.asarray(radii, dtype=float)
  if radii.max() >= 0.5 * grid.box_length:
    raise exceptions.HorizonError(radii.max(), 0.5 * grid.box_length,
                                  "sphere radius")
  nodes, weights = rule or lattice.sphere_rule()
  c = convert.normalize_point(center)
  points = (c[None, None, :] + radii[:, None, None] * nodes[None, :, :]
            ).reshape(-1, 3)
  idx = _forward_indices(history, horizon)
  w = trapezoid_weights(history.times[idx])
  sup_r = []
  for k in idx:
    samples = lattice.interpolate_trilinear(history.u[k], grid, points)
    samples = np.abs(samples.reshape(len(radii), len(weights)))
    angular = (samples ** p_angular @ weights) ** (1.0 / p_angular)
    sup_r.append(float(np.max(angular)))
  value = float(np.sum(w * np.array(sup_r) ** 2)) ** 0.5
  denominator = history.data_norm()
  return NormReport(
    "radial_angular", value, denominator, _ratio(value, denominator),
    p=2.0, q=float(p_angular), outer="time",
    horizon=float(history.times[idx][-1]), grid=grid.describe(),
    extra={"normalized": value / (4 * np.pi) ** (1.0 / p_angular),
           "center": c.tolist()})


def duhamel_window_field(template, forcing, A, t, states=None):
  """k_A(., t): the solution at time t of u_tt + H u = G, zero data, where
    G(s) = P_c F(s) for s <= t - A and 0 afterwards.

    :param template: Grid, potentials and dt to use.
    :type template: evolution.EvolutionConfig

    :rtype: lattice.ScalarField
    """
  grid = template.grid
  if t - A <= 0:
    return lattice.ScalarField.zeros(grid)
  source = forcing if states is None else evolution.ProjectedForcing(forcing,
                                                                     states)
  cfg = evolution.EvolutionConfig(
    grid=grid, potentials=template.potentials, horizon=t, dt=template.dt,
    snapshot_stride=np.iinfo(np.int32).max, trace_velocities=(),
    forcing=evolution.GatedForcing(source, t - A))
  history = evolution.evolve(cfg, lattice.WaveState.zeros(grid))
  return lattice.ScalarField(grid, history.u[-1])


def truncated_duhamel(template, forcing, A0, velocity=(0.0, 0.0, 0.0),
                      states=None, samples=DUHAMEL_SAMPLES, factors=(1, 2, 4)):
  """sup_x of the L^2 norm over t in [A, T] of k_A(x + v t, t), for
    A in A0 * factors, with the fitted power of A.

    Each k_A is recomputed by gated re-propagation at `samples` times in
    [A, T]; T is the template horizon.

    :param template: Grid, potentials, dt and horizon T.
    :type template: evolution.EvolutionConfig

    :raises HorizonError: when some A exceeds T/2.

    :rtype: NormReport (value at A0; per-A values and the power in extra)
    """
  T = template.horizon
  grid = template.grid
  v = convert.normalize_point(velocity)
  a_values = [float(A0) * f for f in factors]
  for A in a_values:
    if not 0 < A <= 0.5 * T + 1e-12:
      raise exceptions.HorizonError(A, 0.5 * T, "truncation window")
  values = []
  for A in a_values:
    ts = np.linspace(A, T, samples)
    w = trapezoid_weights(ts)
    acc = np.zeros(grid.shape)
    for wk, t in zip(w, ts):
      k = duhamel_window_field(template, forcing, A, t, states).values
      if np.any(v):
        k = lattice.shift_field(k, grid, v * t)
      acc += wk * k ** 2
    values.append(float(np.sqrt(np.max(acc))))
    logger.info("truncated Duhamel A=%.4g: %.6g", A, values[-1])
  power = None
  if all(x > 0 for x in values) and len(values) > 1:
    power = float(np.polyfit(np.log(a_values), np.log(values), 1)[0])
  return NormReport(
    "truncated_duhamel", values[0], p=2.0, q=np.inf, outer="space",
    velocity=tuple(v.tolist()), A=a_values[0], horizon=T,
    grid=grid.describe(),
    extra={"A": a_values, "values": values, "power": power})


def _time_l2(samples, times):
  samples = np.asarray(samples, dtype=float)
  w = trapezoid_weights(times)
  return np.sqrt(np.tensordot(w, samples ** 2, axes=1))


def interaction_space_norm(samples, times, grid):
  """max of ||F||_{L_x^{3/2,1} L_t^2}, ||F||_{L_x1^1 L^{2,1} L_t^2} and
    ||F||_{L^2_{t,x}}.

    The middle component rearranges each x1 slab over the orthogonal plane
    (cell area h^2) and sums the slabs with weight h.

    :param samples: Forcing samples F(t_k), shape (len(times), n, n, n).
    :type samples: numpy.ndarray

    :rtype: NormReport
    """
  G = _time_l2(samples, times)
  h = grid.spacing
  first = lorentz_quasi_norm(G, 1.5, 1.0, grid.cell_volume)
  second = h * sum(lorentz_quasi_norm(G[i], 2.0, 1.0, h * h)
                   for i in range(grid.n_per_axis))
  third = float(np.sqrt(np.sum(G ** 2) * grid.cell_volume))
  value = max(first, second, third)
  return NormReport(
    "interaction_space", value, horizon=float(times[-1] - times[0]),
    grid=grid.describe(),
    extra={"lorentz_3_2": first, "slab_lorentz_2_1": second, "l2": third,
           "lebesgue_3_2": lorentz_quasi_norm(G, 1.5, 1.5, grid.cell_volume)})


def sample_forcing(forcing, grid, times):
  """Stacks forcing(t, grid) over times."""
  return np.array([forcing(t, grid) for t in times])


def sup_time_reversed_norm(history, p, q, weight_power=None, horizon=None):
  """||u||_{L_x^{p,q} L_t^inf}: per-cell max over stored times, optionally
    times <x>^(-weight_power), then the Lorentz quasi-norm in space.

    :rtype: NormReport
    """
  grid = history.grid
  idx = _forward_indices(history, horizon)
  peak = np.max(np.abs(history.u[idx]), axis=0)
  if weight_power is not None:
    peak = peak * _japanese(grid) ** (-weight_power)
  value = lorentz_quasi_norm(peak, p, q, grid.cell_volume)
  stride = history.config.snapshot_stride if history.config else None
  denominator = history.data_norm()
  return NormReport(
    "sup_time_reversed", value, denominator, _ratio(value, denominator),
    p=float(p), q=float(q), outer="space",
    alpha=weight_power, horizon=float(history.times[idx][-1]),
    grid=grid.describe(), extra={"snapshot_stride": stride})


def newton_potential_bound(field):
  """Hoelder chain for the truncated Newton potential of |h|.

    Returns the direct sup over grid points of h^3 sum_{y != x} |h(y)|/|x-y|,
    the discrete L^{3,inf} norm K of the sampled kernel, ||h||_{L^{3/2,1}}
    and the bound K * ||h||, which dominates the sup exactly for step
    functions.

    :type field: lattice.ScalarField

    :rtype: dict
    """
  grid = field.grid
  magnitude = lattice.ScalarField(grid, np.abs(field.values))
  potential = lattice.truncated_newton_apply(magnitude, grid.spacing)
  direct = 4 * np.pi * float(np.max(potential.values))
  r = grid.radius_from((0.0, 0.0, 0.0))
  kernel = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), 0.0)
  kernel_norm = lorentz_quasi_norm(kernel, 3.0, np.inf, grid.cell_volume)
  h_norm = lorentz_quasi_norm(field, 1.5, 1.0)
  bound = kernel_norm * h_norm
  return {"sup_potential": direct, "kernel_weak_norm": kernel_norm,
          "h_norm": h_norm, "bound": bound, "slack": bound - direct}
