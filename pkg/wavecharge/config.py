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

"""Experiment configuration: parsing, validation and the config hash.

A config is a JSON (or YAML) document with the blocks ``grid``,
``potentials``, ``initial``, ``evolution``, ``checks``, ``seed`` and an
optional ``sweep``. Every module precondition is checked here, before any
compute; failures raise ConfigError with a machine-readable status.
"""

import copy
import dataclasses
import logging

import numpy as np
import yaml

from wavecharge import convert
from wavecharge import evolution
from wavecharge import exceptions
from wavecharge import lattice
from wavecharge import potentials as potentials_mod

logger = logging.getLogger(__name__)

MIN_WIDTH_SPACINGS = 4
MIN_DATA_SPACINGS = 2

TOP_KEYS = {"grid", "potentials", "initial", "evolution", "checks", "seed",
            "sweep"}
GRID_KEYS = {"n_per_axis", "box_length"}
POTENTIAL_KEYS = {"wells", "depth", "width", "offset", "center", "velocity"}
WELL_KEYS = {"depth", "width", "offset"}
INITIAL_KEYS = {"kind", "amplitude", "width", "center", "boost_velocity",
                "wave_index", "project_continuous"}
INITIAL_KINDS = ("zero", "gaussian", "plane_wave", "bound_state")
EVOLUTION_KEYS = {"dt", "horizon", "backward_horizon", "snapshot_stride",
                  "probes", "trace_velocities", "trace_interpolation",
                  "forcing"}
FORCING_KEYS = {"amplitude", "width", "center", "velocity", "t_peak",
                "duration"}
RANDOM_PROBE_KEYS = {"random", "radius"}

CHECK_DEFAULTS = {
  "bound_states": {"count": 1, "oracle": False, "tolerance": 0.05,
                   "agmon": True, "agmon_tolerance": 0.25},
  "norms": [],
  "comparability": {"mus": [0.3, 0.6, 0.9], "bound": 10.0},
  "projection_decay": {"window_half_width": None},
  "energy": {"defect_tolerance": 1e-2, "growth_bound": 1.5},
  "decomposition": {"tolerance": 1e-8},
  "scattering": {"deviation_limit": 0.1, "cauchy_limit": 0.2},
  "ode_shoot": {"iterations": 3, "growth_cap": 10.0},
  "channels": {"delta": None, "times": []},
}

NORM_KINDS = {
  "mixed": {"outer", "p", "q", "horizon", "trajectory_velocity", "alpha",
            "mu"},
  "reversed_endpoint": {"velocity", "horizon"},
  "weighted_local_decay": {"alpha", "mu", "horizon"},
  "local_energy_decay": {"mu", "epsilon", "horizon"},
  "radial_angular": {"center", "p_angular", "horizon"},
  "sup_time_reversed": {"p", "q", "weight_power", "horizon"},
  "truncated_duhamel": {"A", "velocity", "samples", "project"},
  "interaction_space": {"samples"},
}


@dataclasses.dataclass
class ExperimentConfig:
  """A validated experiment."""

  raw: dict
  grid: lattice.BoxGrid
  potentials: tuple
  initial: dict
  evolution: evolution.EvolutionConfig
  checks: dict
  seed: int = 0
  sweep: list = dataclasses.field(default_factory=list)

  @property
  def config_hash(self):
    return convert.config_hash(self.raw)

  def with_overrides(self, overrides):
    """A new validated config with overrides deep-merged into raw."""
    raw = copy.deepcopy(self.raw)
    raw.pop("sweep", None)
    return parse_config(deep_merge(raw, overrides))

  def describe(self):
    return {"config_hash": self.config_hash, "config": self.raw}


def deep_merge(base, overrides):
  """Recursively merges dict overrides into a copy of base."""
  out = copy.deepcopy(base)
  for key, value in overrides.items():
    if isinstance(value, dict) and isinstance(out.get(key), dict):
      out[key] = deep_merge(out[key], value)
    else:
      out[key] = copy.deepcopy(value)
  return out


def load_config(path):
  """Reads and validates a config file.

    :param path: Path of a JSON or YAML config.
    :type path: string

    :raises ConfigError: when the file is not a mapping or fails validation.

    :rtype: ExperimentConfig
    """
  try:
    with open(path) as f:
      raw = yaml.safe_load(f)
  except OSError as e:
    raise exceptions.ConfigError("MISSING_FILE", "cannot read config: %s" % e)
  except yaml.YAMLError as e:
    raise exceptions.ConfigError("BAD_TYPE", "unparseable config: %s" % e)
  return parse_config(raw)


def _check_keys(block, allowed, required, where):
  if not isinstance(block, dict):
    raise exceptions.ConfigError("BAD_TYPE", "%s must be a mapping" % where)
  unknown = sorted(set(block) - allowed)
  if unknown:
    raise exceptions.ConfigError(
      "UNKNOWN_KEY", "%s has unknown keys %s; allowed: %s"
      % (where, unknown, sorted(allowed)))
  missing = sorted(set(required) - set(block))
  if missing:
    raise exceptions.ConfigError("MISSING_KEY",
                                 "%s is missing %s" % (where, missing))


def _number(value, where, positive=False, nonnegative=False):
  if isinstance(value, bool) or not isinstance(value, (int, float)):
    raise exceptions.ConfigError("BAD_TYPE",
                                 "%s must be a number, got %r" % (where, value))
  value = float(value)
  if not np.isfinite(value):
    raise exceptions.ConfigError("BAD_VALUE", "%s must be finite" % where)
  if positive and not value > 0:
    raise exceptions.ConfigError("BAD_VALUE", "%s must be positive" % where)
  if nonnegative and value < 0:
    raise exceptions.ConfigError("BAD_VALUE",
                                 "%s must be nonnegative" % where)
  return value


def _vector(value, where, broadcast=False):
  try:
    if broadcast:
      return convert.broadcast_vector(value)
    return convert.normalize_point(value)
  except (TypeError, ValueError):
    raise exceptions.ConfigError(
      "BAD_TYPE", "%s must be a 3-vector (list or dict with x, y, z), "
      "got %r" % (where, value))


def _velocity(value, where):
  v = _vector(value, where)
  speed = float(np.linalg.norm(v))
  if speed >= 1.0:
    raise exceptions.ConfigError(
      "SUPERLUMINAL", "%s has speed %.6g; velocities must satisfy |v| < 1"
      % (where, speed))
  return v


def _parse_grid(block):
  _check_keys(block, GRID_KEYS, GRID_KEYS, "grid")
  n = block["n_per_axis"]
  if isinstance(n, bool) or not isinstance(n, int):
    raise exceptions.ConfigError("BAD_TYPE", "grid.n_per_axis must be an int")
  try:
    return lattice.BoxGrid(n, _number(block["box_length"], "grid.box_length",
                                      positive=True))
  except ValueError as e:
    raise exceptions.ConfigError("BAD_GRID", str(e))


def _parse_potential(block, i, grid):
  where = "potentials[%d]" % i
  _check_keys(block, POTENTIAL_KEYS, (), where)
  if "wells" in block:
    if {"depth", "width", "offset"} & set(block):
      raise exceptions.ConfigError(
        "BAD_VALUE", "%s: give either wells or depth/width, not both" % where)
    raw_wells = block["wells"]
    if not isinstance(raw_wells, list) or not raw_wells:
      raise exceptions.ConfigError("BAD_TYPE",
                                   "%s.wells must be a nonempty list" % where)
  else:
    raw_wells = [{k: block[k] for k in ("depth", "width", "offset")
                  if k in block}]
  wells = []
  for j, w in enumerate(raw_wells):
    wwhere = "%s.wells[%d]" % (where, j)
    _check_keys(w, WELL_KEYS, ("depth", "width"), wwhere)
    width = _vector(w["width"], wwhere + ".width", broadcast=True)
    if width.min() < MIN_WIDTH_SPACINGS * grid.spacing:
      raise exceptions.ConfigError(
        "UNDER_RESOLVED", "%s width %.4g is below %d grid spacings (%.4g); "
        "refine the grid or widen the well"
        % (wwhere, width.min(), MIN_WIDTH_SPACINGS,
           MIN_WIDTH_SPACINGS * grid.spacing))
    wells.append(potentials_mod.GaussianWell(
      _number(w["depth"], wwhere + ".depth"), tuple(width),
      tuple(_vector(w.get("offset", [0, 0, 0]), wwhere + ".offset"))))
  return potentials_mod.PotentialSpec(
    tuple(wells), tuple(_vector(block.get("center", [0, 0, 0]),
                                where + ".center")),
    tuple(_velocity(block.get("velocity", [0, 0, 0]), where + ".velocity")))


def _parse_initial(block, grid):
  _check_keys(block, INITIAL_KEYS, ("kind",), "initial")
  kind = block["kind"]
  if kind not in INITIAL_KINDS:
    raise exceptions.ConfigError(
      "BAD_VALUE", "initial.kind %r not in %s" % (kind, INITIAL_KINDS))
  out = {"kind": kind,
         "amplitude": _number(block.get("amplitude", 1.0), "initial.amplitude"),
         "project_continuous": bool(block.get("project_continuous", False))}
  if kind == "gaussian":
    width = _number(block.get("width", 1.0), "initial.width", positive=True)
    if width < MIN_DATA_SPACINGS * grid.spacing:
      raise exceptions.ConfigError(
        "UNDER_RESOLVED", "initial.width %.4g is below %d grid spacings"
        % (width, MIN_DATA_SPACINGS))
    out["width"] = width
    out["center"] = _vector(block.get("center", [0, 0, 0]), "initial.center")
    out["boost_velocity"] = _velocity(block.get("boost_velocity", [0, 0, 0]),
                                      "initial.boost_velocity")
  elif kind == "plane_wave":
    index = block.get("wave_index", [1, 0, 0])
    if not (isinstance(index, list) and len(index) == 3
            and all(isinstance(m, int) and not isinstance(m, bool)
                    for m in index)):
      raise exceptions.ConfigError(
        "BAD_TYPE", "initial.wave_index must be three integers")
    if max(abs(m) for m in index) >= grid.n_per_axis // 2:
      raise exceptions.ConfigError("BAD_VALUE",
                                   "initial.wave_index exceeds the Nyquist index")
    out["wave_index"] = index
  return out


def _parse_probes(value, seed):
  if isinstance(value, dict):
    _check_keys(value, RANDOM_PROBE_KEYS, RANDOM_PROBE_KEYS, "evolution.probes")
    count = value["random"]
    if isinstance(count, bool) or not isinstance(count, int) or count < 1:
      raise exceptions.ConfigError("BAD_VALUE",
                                   "evolution.probes.random must be >= 1")
    radius = _number(value["radius"], "evolution.probes.radius",
                     nonnegative=True)
    return random_probes(count, radius, seed)
  if not isinstance(value, list):
    raise exceptions.ConfigError("BAD_TYPE", "evolution.probes must be a list "
                                 "or {random, radius}")
  return np.array([_vector(p, "evolution.probes[%d]" % i)
                   for i, p in enumerate(value)]).reshape(-1, 3)


def random_probes(count, radius, seed):
  """count points uniform in the ball of the given radius."""
  rng = np.random.default_rng(seed)
  directions = rng.normal(size=(count, 3))
  directions /= np.linalg.norm(directions, axis=1)[:, None]
  radii = radius * rng.random(count) ** (1.0 / 3.0)
  return directions * radii[:, None]


def _parse_forcing(block):
  _check_keys(block, FORCING_KEYS, ("amplitude", "width"), "evolution.forcing")
  return evolution.ForcingSpec(
    amplitude=_number(block["amplitude"], "evolution.forcing.amplitude"),
    width=_number(block["width"], "evolution.forcing.width", positive=True),
    center=tuple(_vector(block.get("center", [0, 0, 0]),
                         "evolution.forcing.center")),
    velocity=tuple(_velocity(block.get("velocity", [0, 0, 0]),
                             "evolution.forcing.velocity")),
    t_peak=_number(block.get("t_peak", 0.0), "evolution.forcing.t_peak"),
    duration=_number(block.get("duration", 1.0), "evolution.forcing.duration",
                     positive=True))


def data_radius(initial, potentials):
  """Radius of the ball holding the initial data and the well cores at
    t = 0."""
  radius = 0.0
  if initial["kind"] == "gaussian":
    radius = float(np.linalg.norm(initial["center"])) + 4.0 * initial["width"]
  for spec in potentials:
    radius = max(radius, float(np.linalg.norm(spec.center))
                 + spec.core_radius)
  return radius


def _parse_evolution(block, grid, potentials, initial, seed):
  _check_keys(block, EVOLUTION_KEYS, ("horizon",), "evolution")
  horizon = _number(block["horizon"], "evolution.horizon", nonnegative=True)
  backward = _number(block.get("backward_horizon", 0.0),
                     "evolution.backward_horizon", nonnegative=True)
  dt = block.get("dt")
  if dt is not None:
    dt = _number(dt, "evolution.dt", positive=True)
  stride = block.get("snapshot_stride", 1)
  if isinstance(stride, bool) or not isinstance(stride, int) or stride < 1:
    raise exceptions.ConfigError("BAD_VALUE",
                                 "evolution.snapshot_stride must be an int >= 1")
  interpolation = block.get("trace_interpolation", "trilinear")
  if interpolation not in evolution.TRACE_INTERPOLATIONS:
    raise exceptions.ConfigError(
      "BAD_VALUE", "evolution.trace_interpolation must be one of %s"
      % (evolution.TRACE_INTERPOLATIONS,))
  probes = _parse_probes(block.get("probes", []), seed)
  velocities = [_velocity(v, "evolution.trace_velocities[%d]" % i)
                for i, v in enumerate(block.get("trace_velocities",
                                                [[0, 0, 0]]))]
  forcing = _parse_forcing(block["forcing"]) if "forcing" in block else None
  radius = data_radius(initial, potentials)
  cfg = evolution.EvolutionConfig(
    grid=grid, potentials=potentials, horizon=horizon, dt=dt,
    snapshot_stride=stride, probes=probes,
    trace_velocities=tuple(tuple(v) for v in velocities), forcing=forcing,
    backward_horizon=backward, trace_interpolation=interpolation,
    data_radius=radius)
  if cfg.wraps():
    raise exceptions.ConfigError(
      "WRAP_AROUND", "box_length %.4g is below 2(T + R + v_max T) = %.4g "
      "(T=%.4g, R=%.4g, v_max=%.4g); enlarge the box or shorten the horizon"
      % (grid.box_length, cfg.required_box_length(),
         max(horizon, backward), radius, cfg.max_speed))
  return cfg


def _parse_checks(block):
  if block is None:
    block = {}
  _check_keys(block, set(CHECK_DEFAULTS), (), "checks")
  checks = copy.deepcopy(CHECK_DEFAULTS)
  checks["enabled"] = sorted(block)
  for name, value in block.items():
    default = CHECK_DEFAULTS[name]
    if name == "norms":
      checks["norms"] = [_parse_norm_request(r, i) for i, r in enumerate(value)]
      continue
    if value is True:
      continue
    if value is False:
      checks["enabled"].remove(name)
      continue
    if not isinstance(value, dict):
      raise exceptions.ConfigError("BAD_CHECK",
                                   "checks.%s must be a mapping or true" % name)
    unknown = sorted(set(value) - set(default))
    if unknown:
      raise exceptions.ConfigError(
        "BAD_CHECK", "checks.%s has unknown keys %s" % (name, unknown))
    checks[name].update(value)
  return checks


def _parse_norm_request(request, i):
  where = "checks.norms[%d]" % i
  if not isinstance(request, dict) or "kind" not in request:
    raise exceptions.ConfigError("BAD_CHECK", "%s needs a kind" % where)
  kind = request["kind"]
  if kind not in NORM_KINDS:
    raise exceptions.ConfigError(
      "BAD_CHECK", "%s kind %r not in %s" % (where, kind, sorted(NORM_KINDS)))
  unknown = sorted(set(request) - NORM_KINDS[kind] - {"kind"})
  if unknown:
    raise exceptions.ConfigError("BAD_CHECK",
                                 "%s has unknown keys %s" % (where, unknown))
  if kind == "weighted_local_decay" and not request.get("alpha", 4.0) > 3:
    raise exceptions.ConfigError("BAD_CHECK",
                                 "%s needs alpha > 3" % where)
  for key in ("velocity", "mu", "trajectory_velocity"):
    if key in request:
      _velocity(request[key], "%s.%s" % (where, key))
  return dict(request)


def parse_config(raw):
  """Validates a raw config mapping.

    :raises ConfigError: on the first violation found.

    :rtype: ExperimentConfig
    """
  if not isinstance(raw, dict):
    raise exceptions.ConfigError("BAD_TYPE", "config must be a mapping")
  _check_keys(raw, TOP_KEYS, ("grid", "potentials", "evolution"), "config")
  seed = raw.get("seed", 0)
  if isinstance(seed, bool) or not isinstance(seed, int):
    raise exceptions.ConfigError("BAD_TYPE", "seed must be an integer")
  grid = _parse_grid(raw["grid"])
  if not isinstance(raw["potentials"], list):
    raise exceptions.ConfigError("BAD_TYPE", "potentials must be a list")
  potentials = tuple(_parse_potential(p, i, grid)
                     for i, p in enumerate(raw["potentials"]))
  initial = _parse_initial(raw.get("initial", {"kind": "zero"}), grid)
  if initial["kind"] == "bound_state" and not potentials:
    raise exceptions.ConfigError("BAD_VALUE",
                                 "bound_state initial data needs a potential")
  evo = _parse_evolution(raw["evolution"], grid, potentials, initial, seed)
  checks = _parse_checks(raw.get("checks"))
  sweep = raw.get("sweep", [])
  if not isinstance(sweep, list) or not all(isinstance(s, dict) for s in sweep):
    raise exceptions.ConfigError("BAD_TYPE", "sweep must be a list of mappings")
  return ExperimentConfig(raw=copy.deepcopy(raw), grid=grid,
                          potentials=potentials, initial=initial,
                          evolution=evo, checks=checks, seed=seed,
                          sweep=sweep)


def make_initial_state(config, states=None):
  """The t = 0 data described by config.initial.

    :param states: H1 bound states; needed for bound_state data and for
        project_continuous.
    :type states: potentials.BoundStateSet

    :rtype: lattice.WaveState
    """
  grid = config.grid
  spec = config.initial
  amplitude = spec["amplitude"]
  kind = spec["kind"]
  if kind == "zero":
    state = lattice.WaveState.zeros(grid)
  elif kind == "gaussian":
    c = spec["center"]
    X, Y, Z = grid.mesh
    d = [grid.wrap(X - c[0]), grid.wrap(Y - c[1]), grid.wrap(Z - c[2])]
    u = amplitude * np.exp(-0.5 * (d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
                           / spec["width"] ** 2)
    v = spec["boost_velocity"]
    ut = sum(v[a] * d[a] for a in range(3)) * u / spec["width"] ** 2
    state = lattice.WaveState.from_arrays(grid, u, ut)
  elif kind == "plane_wave":
    k = 2 * np.pi * np.asarray(spec["wave_index"], dtype=float) \
      / grid.box_length
    X, Y, Z = grid.mesh
    phase = k[0] * X + k[1] * Y + k[2] * Z
    kabs = float(np.linalg.norm(k))
    state = lattice.WaveState.from_arrays(grid, amplitude * np.cos(phase),
                                          amplitude * kabs * np.sin(phase))
  else:
    if states is None or not len(states):
      raise exceptions.EmptyBoundStateError(
        "bound_state initial data needs the H1 ground state")
    state = lattice.WaveState(states.eigenfunctions[0] * amplitude,
                              lattice.ScalarField.zeros(grid))
  if spec["project_continuous"]:
    if states is None:
      raise exceptions.EmptyBoundStateError(
        "project_continuous needs the H1 bound states")
    state = lattice.WaveState(
      potentials_mod.project_continuous(states, state.u),
      potentials_mod.project_continuous(states, state.ut))
  return state
