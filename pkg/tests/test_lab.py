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

import json
import os

import numpy as np
import pytest

import wavecharge
from wavecharge import commands
from wavecharge import config
from wavecharge import exceptions
from wavecharge import lab as lab_mod
from wavecharge import reports
from wavecharge import scattering

from conftest import coarse_config
from conftest import small_config


def _write(tmp_path, raw, name="run.json"):
  path = tmp_path / name
  path.write_text(json.dumps(raw))
  return str(path)


def test_default_workers(monkeypatch):
  monkeypatch.setenv(lab_mod.WORKERS_ENV, "3")
  assert lab_mod.default_workers() == 3
  monkeypatch.setenv(lab_mod.WORKERS_ENV, "many")
  with pytest.raises(exceptions.ConfigError):
    lab_mod.default_workers()
  monkeypatch.setenv(lab_mod.WORKERS_ENV, "0")
  with pytest.raises(exceptions.ConfigError):
    lab_mod.default_workers()
  monkeypatch.delenv(lab_mod.WORKERS_ENV)
  assert lab_mod.default_workers() >= 1


def test_lab_rejects_bad_workers(tmp_path):
  with pytest.raises(exceptions.ConfigError):
    wavecharge.Lab(str(tmp_path), workers=0)
  with pytest.raises(exceptions.ConfigError):
    wavecharge.Lab(str(tmp_path), workers=True)


def test_run_rejects_unknown_commands(tmp_path):
  lab = wavecharge.Lab(str(tmp_path), workers=1)
  with pytest.raises(exceptions.ConfigError):
    lab.run("teleport", _write(tmp_path, small_config()))


def test_cache_builds_once(tmp_path):
  lab = wavecharge.Lab(str(tmp_path), workers=1)
  calls = []
  for _ in range(2):
    lab.cached("k", lambda: calls.append(1) or len(calls))
  assert calls == [1]
  lab.clear_cache()
  assert lab.cached("k", lambda: 9) == 9


def test_simulate_writes_reports(tmp_path):
  out = tmp_path / "out"
  lab = wavecharge.Lab(str(out), workers=1)
  result = lab.simulate(_write(tmp_path, small_config()))
  assert result.passed
  assert result.exit_status == 0
  names = [c["name"] for c in result.checks]
  assert names == ["energy_growth", "energy_conservation"]
  assert os.path.exists(str(out / "simulate" / "manifest.json"))
  with open(str(out / "simulate" / lab_mod.RESULT_FILE)) as f:
    written = json.load(f)
  assert written["passed"] is True
  assert written["config_hash"] == result.config_hash
  assert result.summary["t_max"] == pytest.approx(1.0)


def test_boundstates_on_a_well(tmp_path):
  raw = coarse_config([{"depth": 4.0, "width": 4.0}])
  raw["checks"] = {"bound_states": {"oracle": False, "agmon": False}}
  lab = wavecharge.Lab(str(tmp_path), workers=1)
  result = lab.boundstates(config.parse_config(raw))
  assert result.passed
  assert result.summary["H1"]
  rows = reports.read_csv(str(tmp_path / "boundstates" / "boundstates.csv"))
  assert rows[0]["hamiltonian"] == "H1"
  assert float(rows[0]["eigenvalue"]) < 0


def test_boundstates_needs_a_potential(tmp_path):
  lab = wavecharge.Lab(str(tmp_path), workers=1)
  with pytest.raises(exceptions.ConfigError):
    lab.boundstates(config.parse_config(coarse_config()))


def test_sweep(tmp_path):
  raw = small_config()
  raw["sweep"] = [{"evolution": {"horizon": 0.5}},
                  {"evolution": {"horizon": 1.0}}]
  out = tmp_path / "out"
  lab = wavecharge.Lab(str(out), workers=2)
  rows = lab.sweep(_write(tmp_path, raw))
  assert [r["directory"] for r in rows] == ["run_000", "run_001"]
  assert all(r["exit"] == 0 for r in rows)
  assert rows[0]["config_hash"] != rows[1]["config_hash"]
  assert os.path.exists(str(out / "run_001" / "simulate" / "manifest.json"))
  index = reports.read_csv(str(out / lab_mod.SWEEP_INDEX))
  assert len(index) == 2


def test_sweep_needs_entries(tmp_path):
  lab = wavecharge.Lab(str(tmp_path), workers=1)
  with pytest.raises(exceptions.ConfigError):
    lab.sweep(_write(tmp_path, small_config()))


def _written_checks(out, command):
  with open(os.path.join(str(out), command, lab_mod.RESULT_FILE)) as f:
    written = json.load(f)
  return written, {c["name"]: c for c in written["checks"]}


def test_norms_end_to_end(tmp_path):
  raw = small_config(probes=[[0, 0, 0]])
  raw["checks"] = {"norms": [
    {"kind": "mixed"},
    {"kind": "reversed_endpoint"},
    {"kind": "weighted_local_decay", "alpha": 4.0},
    {"kind": "interaction_space"},
  ]}
  out = tmp_path / "out"
  lab = wavecharge.Lab(str(out), workers=1)
  result = lab.norms(_write(tmp_path, raw))
  assert result.passed
  assert result.summary["evaluated"] == 4
  written, checks = _written_checks(out, "norms")
  assert written["passed"] is True
  holder = checks["weighted_local_decay[2]_holder"]
  assert holder["passed"] is True
  assert holder["value"] >= 0
  rows = reports.read_csv(str(out / "norms" / "norms.csv"))
  assert [r["norm_id"] for r in rows] == [
    "mixed_time", "reversed_endpoint", "weighted_local_decay",
    "interaction_space"]
  with open(str(out / "norms" / "norms.json")) as f:
    extras = json.load(f)["norms"]
  assert "trace_slack" in extras[2]["extra"]


def test_norms_duhamel_needs_forcing(tmp_path):
  raw = small_config()
  raw["checks"] = {"norms": [{"kind": "truncated_duhamel"}]}
  lab = wavecharge.Lab(str(tmp_path), workers=1)
  with pytest.raises(exceptions.ConfigError) as e:
    lab.norms(_write(tmp_path, raw))
  assert e.value.status == "BAD_CHECK"


def test_boost_check_end_to_end(tmp_path):
  raw = small_config(horizon=4.0, backward_horizon=4.0, snapshot_stride=1,
                     trace_velocities=[[0, 0, 0], [0.5, 0, 0]])
  raw["initial"]["width"] = 1.0
  raw["checks"] = {"comparability": {"mus": [0.2], "bound": 10.0}}
  out = tmp_path / "out"
  lab = wavecharge.Lab(str(out), workers=1)
  result = lab.boost_check(_write(tmp_path, raw))
  assert result.summary["round_trip_velocity"] == 0.5
  written, checks = _written_checks(out, "boost-check")
  assert checks["comparability"]["passed"] is True
  low, high = checks["comparability"]["value"]
  assert 0.1 <= low <= high <= 10.0
  round_trip = checks["boost_round_trip"]
  assert round_trip["limit"] == pytest.approx(2e-2)
  assert round_trip["passed"] is (round_trip["value"] < round_trip["limit"])
  assert written["passed"] is result.passed
  rows = reports.read_csv(str(out / "boost-check" / "comparability.csv"))
  assert [float(r["mu"]) for r in rows] == [0.0, 0.2]


def test_boost_check_skips_round_trip_without_an_x1_trace(tmp_path):
  raw = small_config(backward_horizon=1.0,
                     trace_velocities=[[0, 0.5, 0]])
  raw["checks"] = {"comparability": {"mus": [0.1]}}
  out = tmp_path / "out"
  lab = wavecharge.Lab(str(out), workers=1)
  lab.boost_check(_write(tmp_path, raw))
  _, checks = _written_checks(out, "boost-check")
  assert list(checks) == ["comparability"]


def _two_well_config():
  return {
    "grid": {"n_per_axis": 32, "box_length": 32.0},
    "potentials": [{"depth": 6.0, "width": 4.0},
                   {"depth": 6.0, "width": 4.0, "velocity": [0.5, 0, 0]}],
    "initial": {"kind": "gaussian", "width": 2.0},
    "evolution": {"horizon": 4.0, "snapshot_stride": 1},
    "checks": {"ode_shoot": {"iterations": 1, "growth_cap": 1e-9}},
  }


def test_ode_shoot_end_to_end(tmp_path):
  out = tmp_path / "out"
  lab = wavecharge.Lab(str(out), workers=1)
  result = lab.ode_shoot(_write(tmp_path, _two_well_config()))
  assert result.exit_status == 1
  written, checks = _written_checks(out, "ode-shoot")
  assert written["passed"] is False
  assert checks["stability_residual"]["passed"] is True
  # the overlap at t = 0 alone makes the growth ratio at least 1
  assert checks["corrected_growth"]["passed"] is False
  assert checks["corrected_growth"]["value"] >= 1.0
  assert len(result.summary["a_dot_corrected"]) == 1
  rows = reports.read_csv(str(out / "ode-shoot" / "overlaps.csv"))
  assert len(rows) == 17


def test_ode_shoot_needs_two_potentials(tmp_path):
  raw = _two_well_config()
  raw["potentials"] = raw["potentials"][:1]
  lab = wavecharge.Lab(str(tmp_path), workers=1)
  with pytest.raises(exceptions.ConfigError):
    lab.ode_shoot(_write(tmp_path, raw))


def test_scatter_certifies_a_free_run(tmp_path):
  raw = small_config()
  raw["checks"] = {"scattering": {}}
  out = tmp_path / "out"
  lab = wavecharge.Lab(str(out), workers=1)
  result = lab.scatter(_write(tmp_path, raw))
  assert result.passed
  written, checks = _written_checks(out, "scatter")
  assert list(checks) == ["certification", "cauchy_ratio", "deviation"]
  assert checks["deviation"]["passed"] is True
  assert checks["deviation"]["value"] <= 1e-10
  assert checks["cauchy_ratio"]["passed"] is True
  assert os.path.exists(str(out / "scatter" / "deviation.csv"))


def test_scatter_stops_on_a_bound_state(tmp_path):
  raw = {
    "grid": {"n_per_axis": 32, "box_length": 32.0},
    "potentials": [{"depth": 4.0, "width": 4.0}],
    "initial": {"kind": "bound_state"},
    "evolution": {"horizon": 4.0, "snapshot_stride": 2},
    "checks": {"scattering": {}},
  }
  out = tmp_path / "out"
  lab = wavecharge.Lab(str(out), workers=1)
  result = lab.scatter(_write(tmp_path, raw))
  assert result.exit_status == 1
  _, checks = _written_checks(out, "scatter")
  assert checks["certification"]["passed"] is False
  assert "does not decay" in checks["certification"]["detail"]
  assert "deviation" not in checks
  assert not os.path.exists(str(out / "scatter" / "deviation.csv"))


def test_deviation_check_rejects_a_rising_tail():
  series = scattering.DeviationSeries(
    np.linspace(0.0, 3.0, 7),
    np.array([0.5, 0.3, 0.01, 0.02, 0.03, 0.04, 0.05]), 1.0)
  result = commands.RunResult("scatter", "abc")
  commands._deviation_check(series, 0.1, result)
  (entry,) = result.checks
  assert entry["value"] == pytest.approx(0.05)
  assert entry["passed"] is False
  assert "rises" in entry["detail"]
  assert result.exit_status == 1
