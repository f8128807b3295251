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

"""Subcommands of the laboratory.

Each function takes the Lab first and a validated ExperimentConfig, writes
its reports under the lab's output directory and returns a RunResult whose
checks decide the exit status.
"""

import dataclasses
import logging

import numpy as np

from wavecharge import config as config_mod
from wavecharge import convert
from wavecharge import evolution
from wavecharge import exceptions
from wavecharge import lorentz
from wavecharge import norms as norms_mod
from wavecharge import potentials
from wavecharge import reports
from wavecharge import scattering

logger = logging.getLogger(__name__)

STATIC_DRIFT_TOLERANCE = 1e-4
ROUND_TRIP_TOLERANCE = 2e-2
RESIDUAL_TOLERANCE = 1e-8
DUHAMEL_DOUBLING_FACTOR = 0.7
CHANNEL_ROBUSTNESS = 0.2
DENSE_ORACLE_MAX_POINTS = 18 ** 3


@dataclasses.dataclass
class RunResult:
  """Outcome of one subcommand: named checks, written artifacts, summary."""

  command: str
  config_hash: str
  checks: list = dataclasses.field(default_factory=list)
  artifacts: list = dataclasses.field(default_factory=list)
  summary: dict = dataclasses.field(default_factory=dict)

  @property
  def passed(self):
    return all(c["passed"] for c in self.checks)

  @property
  def failed(self):
    return [c for c in self.checks if not c["passed"]]

  @property
  def exit_status(self):
    return 0 if self.passed else 1

  def check(self, name, passed, value=None, limit=None, detail=None):
    entry = {"name": name, "passed": bool(passed), "value": value,
             "limit": limit}
    if detail:
      entry["detail"] = detail
    self.checks.append(entry)
    if not passed:
      logger.warning("check %s failed: value=%r limit=%r", name, value, limit)
    return entry

  def describe(self):
    return {
      "command": self.command,
      "config_hash": self.config_hash,
      "passed": self.passed,
      "checks": self.checks,
      "artifacts": self.artifacts,
      "summary": self.summary,
    }


def _first_states(lab, config):
  """Bound states of H1 = -Laplacian + V1 frozen at t = 0 (cached)."""

  def build():
    if not config.potentials:
      return potentials.BoundStateSet("H1", config.grid)
    count = config.checks["bound_states"]["count"]
    return potentials.compute_bound_states(
      config.potentials[0].frozen_at(0.0), config.grid, count, tag="H1")

  return lab.cached((config.config_hash, "H1"), build)


def _second(lab, config):
  """(boost, compressed spec, bound states) of the second potential.

    Without a second potential the boost is the identity and the set is
    empty.
    """
  if len(config.potentials) < 2:
    return (lorentz.Boost(0.0), None,
            potentials.BoundStateSet("H2", config.grid))
  spec2 = config.potentials[1]
  try:
    boost = lorentz.Boost.from_velocity(spec2.velocity)
    compressed = potentials.compressed_potential(spec2)
  except ValueError as e:
    raise exceptions.ConfigError("BAD_VALUE", "potentials[1]: %s" % e)
  count = config.checks["bound_states"]["count"]
  states = lab.cached(
    (config.config_hash, "H2"),
    lambda: potentials.compute_bound_states(compressed, config.grid, count,
                                            tag="H2"))
  return boost, compressed, states


def _needs_first_states(config):
  return (config.initial["kind"] == "bound_state"
          or config.initial["project_continuous"])


def _initial(lab, config):
  states = _first_states(lab, config) if _needs_first_states(config) else None
  return config_mod.make_initial_state(config, states)


def _history(lab, config):
  return lab.cached(
    (config.config_hash, "history"),
    lambda: evolution.evolve(config.evolution, _initial(lab, config)))


def _window(config, compressed):
  half_width = config.checks["projection_decay"]["window_half_width"]
  if half_width is None or compressed is None:
    return None
  return (compressed.center[0], float(half_width))


def _bad_check(name, error):
  return exceptions.ConfigError("BAD_CHECK", "%s: %s" % (name, error))


def _energy_checks(config, history, result):
  ledger = history.ledger
  E0 = float(ledger.total[0])
  peak = float(np.max(ledger.total))
  growth = config.checks["energy"]["growth_bound"]
  limit = E0 + (growth - 1.0) * abs(E0)
  result.summary["energy_initial"] = E0
  result.summary["energy_max"] = peak
  result.check("energy_growth", peak <= limit + 1e-12 * max(1.0, abs(E0)),
               peak, limit)
  if len(ledger.times) < 3:
    return
  report = evolution.energy_derivative_check(history)
  result.summary["energy_derivative"] = report
  if config.evolution.forcing is not None:
    logger.info("forcing present; energy identity checks skipped")
  elif any(not p.is_static for p in config.potentials):
    tolerance = config.checks["energy"]["defect_tolerance"]
    result.check("energy_derivative", report["defect"] <= tolerance,
                 report["defect"], tolerance)
  else:
    result.check("energy_conservation",
                 report["relative_drift"] <= STATIC_DRIFT_TOLERANCE,
                 report["relative_drift"], STATIC_DRIFT_TOLERANCE)


def _channel_masses(snapshot, t, delta, velocity, origin):
  try:
    return evolution.channel_decomposition(snapshot, t, delta, velocity,
                                           origin)
  except ValueError as e:
    raise _bad_check("checks.channels", e)


def _channel_checks(lab, config, history, result):
  if len(config.potentials) < 2:
    raise exceptions.ConfigError("BAD_CHECK",
                                 "checks.channels needs two potentials")
  velocity = np.asarray(config.potentials[1].velocity)
  origin = config.potentials[0].center
  opts = config.checks["channels"]
  delta = opts["delta"]
  if delta is None:
    delta = 0.25 * float(np.linalg.norm(velocity))
  times = opts["times"] or [history.t_max]
  rows = []
  for t in times:
    k = int(np.argmin(np.abs(history.times - t)))
    snapshot = history.snapshot(k)
    t_k = float(history.times[k])
    full = _channel_masses(snapshot, t_k, delta, velocity, origin)
    half = _channel_masses(snapshot, t_k, 0.5 * delta, velocity, origin)
    total = sum(f.values for f in full.fields)
    scale = max(float(np.max(np.abs(snapshot.u.values))), 1.0)
    identity = float(np.max(np.abs(total - snapshot.u.values)))
    result.check("channel_partition[t=%s]" % convert.format_float(t_k),
                 identity <= 1e-12 * scale, identity, 1e-12 * scale)
    m3, m3_half = full.masses[2], half.masses[2]
    change = abs(m3 - m3_half) / m3 if m3 > 0 else 0.0
    result.check("channel_robustness[t=%s]" % convert.format_float(t_k),
                 change < CHANNEL_ROBUSTNESS, change, CHANNEL_ROBUSTNESS)
    for d, split in ((delta, full), (0.5 * delta, half)):
      rows.append([t_k, d, split.radius] + list(split.masses))
  path = lab.output_path("simulate", "channels.csv")
  reports.write_csv(path, ["t", "delta", "radius", "mass1", "mass2", "mass3"],
                    rows, config.config_hash)
  result.artifacts.append(path)


def simulate(lab, config):
  """Evolves the configured data and stores the history.

    Enabled checks: energy (growth bound, derivative identity or
    conservation) and channels (partition identity, delta robustness).

    :param lab: The laboratory.
    :type lab: wavecharge.Lab

    :param config: The experiment.
    :type config: config.ExperimentConfig

    :rtype: RunResult
    """
  result = RunResult("simulate", config.config_hash)
  history = _history(lab, config)
  manifest = evolution.save_history(history, lab.output_path("simulate"),
                                    config.config_hash)
  result.artifacts.append(manifest)
  result.summary.update({
    "snapshots": len(history.times),
    "steps": config.evolution.forward_steps,
    "dt": config.evolution.dt,
    "t_min": history.t_min,
    "t_max": history.t_max,
  })
  enabled = config.checks["enabled"]
  if "energy" in enabled:
    _energy_checks(config, history, result)
  if "channels" in enabled:
    _channel_checks(lab, config, history, result)
  return result


def _oracle_values(opts, states):
  oracle = opts["oracle"]
  if oracle is True:
    if states.grid.size <= DENSE_ORACLE_MAX_POINTS:
      return potentials.dense_lowest_eigenvalues(states.spec, states.grid,
                                                 len(states)), "dense"
    return potentials.lanczos_lowest(states.spec, states.grid,
                                     len(states)), "lanczos"
  return np.atleast_1d(np.asarray(oracle, dtype=float)), "committed"


def boundstates(lab, config):
  """Bound states of H1 and of the compressed H2.

    Enabled checks (bound_states): eigenvalues against an oracle (the
    dense eigensolver, or committed values) and Agmon decay rates against
    lambda.

    :rtype: RunResult
    """
  if not config.potentials:
    raise exceptions.ConfigError("BAD_VALUE",
                                 "boundstates needs at least one potential")
  result = RunResult("boundstates", config.config_hash)
  first = _first_states(lab, config)
  _, _, second = _second(lab, config)
  opts = config.checks["bound_states"]
  enabled = "bound_states" in config.checks["enabled"]
  rows = []
  for states in (first, second):
    tag = states.hamiltonian
    result.summary[tag] = states.describe()
    for i, (E, lam, residual) in enumerate(zip(
        states.eigenvalues, states.lambdas, states.residuals)):
      rows.append([tag, i, E, lam, residual])
    if not len(states):
      logger.info("%s has no bound state below the threshold", tag)
      continue
    result.artifacts.append(potentials.save_bound_states(
      states, lab.output_path("boundstates", tag)))
    if not enabled:
      continue
    if opts["oracle"] is not False and tag == "H1":
      expected, source = _oracle_values(opts, states)
      for i, (E, E_ref) in enumerate(zip(states.eigenvalues, expected)):
        error = abs(E - E_ref) / abs(E_ref)
        result.check("%s_eigenvalue[%d]" % (tag, i), error <= opts["tolerance"],
                     error, opts["tolerance"], detail=source)
    if opts["agmon"]:
      try:
        decay = potentials.agmon_decay_check(states)
      except ValueError as e:
        raise _bad_check("checks.bound_states.agmon", e)
      result.summary["%s_agmon" % tag] = decay
      for i, entry in enumerate(decay):
        result.check("%s_agmon[%d]" % (tag, i),
                     entry["relative_error"] <= opts["agmon_tolerance"],
                     entry["relative_error"], opts["agmon_tolerance"])
  path = lab.output_path("boundstates", "boundstates.csv")
  reports.write_csv(path, ["hamiltonian", "index", "eigenvalue", "lambda",
                           "residual"], rows, config.config_hash)
  result.artifacts.append(path)
  return result


def _round_trip_boost(config):
  """Boost for the round trip: the first nonzero x1 trace velocity."""
  for v in config.evolution.trace_velocities:
    if v[0] != 0.0 and v[1] == 0.0 and v[2] == 0.0:
      return lorentz.Boost(v[0])
  return None


def boost_check(lab, config):
  """Slanted-slice energy comparability and, on free runs with a backward
    history, the boost round trip.

    :rtype: RunResult
    """
  result = RunResult("boost-check", config.config_hash)
  history = _history(lab, config)
  opts = config.checks["comparability"]
  report = lorentz.comparability_report(history, [0.0] + list(opts["mus"]),
                                        opts["bound"])
  path = lab.output_path("boost-check", "comparability.csv")
  result.artifacts.append(lorentz.write_comparability_csv(
    report, path, config.config_hash))
  result.summary["growth_rate"] = report.growth_rate()
  if "comparability" in config.checks["enabled"]:
    ratios = [r["ratio"] for r in report.rows]
    result.check("comparability", report.ok, [min(ratios), max(ratios)],
                 [1.0 / opts["bound"], opts["bound"]])

  boost = _round_trip_boost(config)
  free = not config.potentials and config.evolution.forcing is None
  if boost is None or not free or history.t_min >= 0:
    logger.info("boost round trip skipped (needs a free run, a backward "
                "history and an x1 trace velocity)")
    return result
  error = lorentz.boost_round_trip(history, boost)
  result.summary["round_trip_velocity"] = boost.v
  result.check("boost_round_trip", error < ROUND_TRIP_TOLERANCE, error,
               ROUND_TRIP_TOLERANCE)
  return result


def _interaction_samples(config, history):
  idx = np.flatnonzero(history.times >= -1e-12)
  times = history.times[idx]
  if config.evolution.forcing is not None:
    return norms_mod.sample_forcing(config.evolution.forcing, config.grid,
                                    times), times
  samples = np.array([history.potential_at(history.times[k]) * history.u[k]
                      for k in idx])
  return samples, times


def _norm_request(lab, config, history, request, result, i):
  kind = request["kind"]
  name = "%s[%d]" % (kind, i)
  horizon = request.get("horizon")
  if kind == "mixed":
    spec = norms_mod.MixedNormSpec(
      outer=request.get("outer", "time"), p=float(request.get("p", 2.0)),
      q=float(request.get("q", 2.0)), horizon=horizon,
      trajectory_velocity=request.get("trajectory_velocity", (0, 0, 0)),
      alpha=request.get("alpha"), mu=request.get("mu", (0, 0, 0)))
    return norms_mod.mixed_norm(history, spec)
  if kind == "reversed_endpoint":
    return norms_mod.reversed_endpoint(
      history, request.get("velocity", (0, 0, 0)), horizon=horizon)
  if kind == "weighted_local_decay":
    report = norms_mod.weighted_local_decay(
      history, float(request.get("alpha", 4.0)),
      request.get("mu", (0, 0, 0)), horizon)
    slack = report.extra["slack"]
    result.check("%s_holder" % name,
                 slack >= -1e-12 * max(report.extra["bound"], 1.0), slack, 0.0)
    return report
  if kind == "local_energy_decay":
    return norms_mod.local_energy_decay(
      history, request.get("mu", (0, 0, 0)),
      float(request.get("epsilon", norms_mod.DEFAULT_EPSILON)), horizon)
  if kind == "radial_angular":
    return norms_mod.radial_angular_norm(
      history, request.get("center", (0, 0, 0)),
      float(request.get("p_angular", 2.0)), horizon=horizon)
  if kind == "sup_time_reversed":
    return norms_mod.sup_time_reversed_norm(
      history, float(request.get("p", 2.0)), float(request.get("q", 1.0)),
      request.get("weight_power"), horizon)
  if kind == "truncated_duhamel":
    forcing = config.evolution.forcing
    if forcing is None:
      raise exceptions.ConfigError("BAD_CHECK",
                                   "%s needs evolution.forcing" % name)
    states = _first_states(lab, config) if request.get("project") else None
    report = norms_mod.truncated_duhamel(
      config.evolution, forcing,
      float(request.get("A", config.evolution.horizon / 8)),
      request.get("velocity", (0, 0, 0)), states,
      int(request.get("samples", norms_mod.DUHAMEL_SAMPLES)))
    values = report.extra["values"]
    if not config.potentials and values[0] > 0:
      worst = max(b / a for a, b in zip(values[:-1], values[1:]))
      result.check("%s_decay" % name, worst <= DUHAMEL_DOUBLING_FACTOR, worst,
                   DUHAMEL_DOUBLING_FACTOR)
    return report
  samples, times = _interaction_samples(config, history)
  if "samples" in request:
    keep = np.unique(np.linspace(0, len(times) - 1,
                                 int(request["samples"])).astype(int))
    samples, times = samples[keep], times[keep]
  return norms_mod.interaction_space_norm(samples, times, config.grid)


def norms(lab, config):
  """Evaluates every request in checks.norms on the stored history.

    :rtype: RunResult
    """
  result = RunResult("norms", config.config_hash)
  requests = config.checks["norms"]
  if not requests:
    logger.warning("checks.norms is empty; nothing to evaluate")
  history = _history(lab, config)
  evaluated = []
  for i, request in enumerate(requests):
    try:
      evaluated.append(_norm_request(lab, config, history, request, result, i))
    except ValueError as e:
      raise _bad_check("checks.norms[%d]" % i, e)
  path = lab.output_path("norms", "norms.csv")
  norms_mod.write_norm_csv(evaluated, path, config.config_hash)
  result.artifacts.append(path)
  extras = lab.output_path("norms", "norms.json")
  reports.write_json(extras, {"config_hash": config.config_hash,
                              "norms": [dict(r.row(), extra=r.extra)
                                        for r in evaluated]})
  result.artifacts.append(extras)
  result.summary["evaluated"] = len(evaluated)
  return result


def _overlap_growth(history, w, lam):
  """max_t |<u(t), w>| over the size of the mode data at t = 0."""
  _, values = scattering.overlap_series(history, w)
  state = history.initial_state()
  scale = max(abs(w.inner(state.u)), abs(w.inner(state.ut)) / lam)
  peak = float(np.max(np.abs(values)))
  if scale == 0.0:
    return 1.0 if peak == 0.0 else np.inf
  return peak / scale


def ode_shoot(lab, config):
  """Stability shooting for the H1 ground-state coefficient.

    Shoots a'(0) on the ODE tabulated from the uncorrected run, then
    corrects the initial data against the full evolution and compares the
    overlap growth of both runs.

    :rtype: RunResult
    """
  if len(config.potentials) < 2:
    raise exceptions.ConfigError("BAD_VALUE", "ode-shoot needs two potentials")
  states1 = _first_states(lab, config)
  if not len(states1):
    raise exceptions.EmptyBoundStateError("ode-shoot needs an H1 bound state")
  result = RunResult("ode-shoot", config.config_hash)
  spec2 = config.potentials[1]
  w, lam = states1.eigenfunctions[0], states1.lambdas[0]
  history = _history(lab, config)
  ode = scattering.tabulated_ode_state(history, states1, spec2)
  shoot = scattering.stability_shoot(ode, config.evolution.horizon)
  limit = RESIDUAL_TOLERANCE * max(1.0, abs(ode.a))
  result.check("stability_residual", abs(shoot.residual) <= limit,
               abs(shoot.residual), limit)

  opts = config.checks["ode_shoot"]
  corrected, passes = scattering.correct_initial_data(
    config.evolution, history.initial_state(), states1, spec2,
    opts["iterations"])
  corrected_history = evolution.evolve(config.evolution, corrected)
  before = _overlap_growth(history, w, lam)
  after = _overlap_growth(corrected_history, w, lam)
  result.summary.update({
    "lambda": lam,
    "a0": ode.a,
    "a_dot_uncorrected": ode.a_dot,
    "a_dot_shot": shoot.a_dot,
    "a_dot_corrected": [p.a_dot for p in passes],
    "growth_uncorrected": before,
    "growth_corrected": after,
  })
  if "ode_shoot" in config.checks["enabled"]:
    result.check("corrected_growth", after <= opts["growth_cap"], after,
                 opts["growth_cap"])

  times, plain = scattering.overlap_series(history, w)
  _, fixed = scattering.overlap_series(corrected_history, w)
  path = lab.output_path("ode-shoot", "overlaps.csv")
  reports.write_csv(path, ["t", "a_uncorrected", "a_corrected"],
                    list(zip(times, plain, fixed)), config.config_hash)
  result.artifacts.append(path)
  sol = shoot.solution
  path = lab.output_path("ode-shoot", "coefficient_ode.csv")
  reports.write_csv(path, ["t", "a", "a_dot"],
                    list(zip(sol.times, sol.a, sol.a_dot)), config.config_hash)
  result.artifacts.append(path)
  return result


def _decomposition_checks(lab, config, history, states1, states2, boost,
                          window, result):
  decomposition = scattering.decompose_evolution(
    history, states1, states2 if len(states2) else None, boost, window,
    covered_only=True)
  tolerance = config.checks["decomposition"]["tolerance"]
  error = decomposition.reassembly_error(history)
  defect = decomposition.orthogonality_defect()
  result.check("decomposition_reassembly", error <= tolerance, error, tolerance)
  result.check("decomposition_orthogonality", defect <= tolerance, defect,
               tolerance)
  path = lab.output_path("scatter", "decomposition.csv")
  result.summary["decomposition_covered"] = int(decomposition.covered.sum())
  reports.write_csv(path, ["t", "a", "b_covered"],
                    list(zip(decomposition.times, decomposition.a_series,
                             decomposition.covered.tolist())),
                    config.config_hash)
  result.artifacts.append(path)
  if len(decomposition.b_times):
    path = lab.output_path("scatter", "boosted_coefficient.csv")
    reports.write_csv(path, ["t_prime", "b"],
                      list(zip(decomposition.b_times, decomposition.b_series)),
                      config.config_hash)
    result.artifacts.append(path)


def scatter(lab, config):
  """Certifies the run as a scattering state, then builds the free data
    U0 and measures d(t) = ||U(t) - exp(-itA) U0||.

    A run that does not certify fails the "certification" check and stops
    there.

    :rtype: RunResult
    """
  result = RunResult("scatter", config.config_hash)
  history = _history(lab, config)
  states1 = _first_states(lab, config)
  boost, compressed, states2 = _second(lab, config)
  window = _window(config, compressed)
  decay = evolution.track_projection_decay(history, states1, states2, boost,
                                           window)
  rows = [["lab", t, value] for t, value in zip(decay.times, decay.series)]
  rows += [["boosted", t, value] for t, value in zip(decay.boosted_times,
                                                     decay.boosted_series)]
  path = lab.output_path("scatter", "projection_decay.csv")
  reports.write_csv(path, ["frame", "t", "projection"], rows,
                    config.config_hash)
  result.artifacts.append(path)
  result.check("certification", decay.certified,
               detail=str(exceptions.CertificationError(decay.reason))
               if not decay.certified else None)
  enabled = config.checks["enabled"]
  if "energy" in enabled:
    _energy_checks(config, history, result)
  if "decomposition" in enabled and len(states1):
    _decomposition_checks(lab, config, history, states1, states2, boost,
                          window, result)
  if not decay.certified:
    return result

  U0 = scattering.wave_operator_data(history, decay)
  series = scattering.scattering_convergence(history, U0)
  path = lab.output_path("scatter", "deviation.csv")
  series.write_csv(path, config.config_hash)
  result.artifacts.append(path)
  opts = config.checks["scattering"]
  result.summary.update({"wave_operator": U0.diagnostics,
                         "data_norm": series.reference,
                         "final_deviation": float(series.deviations[-1])})
  result.check("cauchy_ratio",
               U0.diagnostics["cauchy_ratio"] <= opts["cauchy_limit"],
               U0.diagnostics["cauchy_ratio"], opts["cauchy_limit"])
  _deviation_check(series, opts["deviation_limit"], result)
  return result


def _deviation_check(series, limit, result):
  """d(T) under the limit with d settling over the last half of the run."""
  relative = series.deviations[-1] / series.reference \
    if series.reference > 0 else 0.0
  passed = series.acceptable(limit)
  detail = None
  if not passed and relative <= limit:
    detail = "deviation rises over the last half of the run"
  result.check("deviation", passed, relative, limit, detail=detail)


COMMANDS = {
  "simulate": simulate,
  "boundstates": boundstates,
  "boost-check": boost_check,
  "norms": norms,
  "ode-shoot": ode_shoot,
  "scatter": scatter,
}
