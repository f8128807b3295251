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

import numpy as np
import pytest

from wavecharge import evolution
from wavecharge import exceptions
from wavecharge import lattice
from wavecharge import lorentz
from wavecharge import potentials
from wavecharge import scattering

from conftest import gaussian_state


@pytest.fixture(scope="module")
def well_history(well_states):
  cfg = evolution.EvolutionConfig(grid=well_states.grid,
                                  potentials=[well_states.spec], horizon=1.0,
                                  snapshot_stride=1)
  return evolution.evolve(cfg, gaussian_state(well_states.grid, width=2.0))


def test_coefficient_state_validation():
  with pytest.raises(ValueError):
    scattering.CoeffODEState(0.0, 1.0, 0.0)
  with pytest.raises(ValueError):
    scattering.CoeffODEState(1.0, 1.0, 0.0, c_table=[0.0, 0.0])
  state = scattering.CoeffODEState(1.0, 1.0, 0.0, c_table=np.zeros(11),
                                   table_dt=0.1)
  assert state.tabulated
  assert state.coverage() == pytest.approx(1.0)
  assert scattering.CoeffODEState(1.0, 1.0, 0.0).coverage() == np.inf


def test_free_coefficient_ode():
  state = scattering.CoeffODEState(1.0, 1.0, 0.0)
  sol = scattering.solve_coeff_ode(state, 1.0, dt=0.01)
  assert sol.times[-1] == pytest.approx(1.0)
  assert sol.a[-1] == pytest.approx(np.cosh(1.0), rel=1e-8)
  assert sol.a_dot[-1] == pytest.approx(np.sinh(1.0), rel=1e-8)
  np.testing.assert_allclose(sol.energy(1.0), -1.0, rtol=1e-8)
  assert sol.damping_integral == 0.0


def test_coefficient_ode_cadence():
  state = scattering.CoeffODEState(1.0, 1.0, 0.0)
  with pytest.raises(exceptions.CadenceError):
    scattering.solve_coeff_ode(state, 1.003, dt=0.01)
  short = scattering.CoeffODEState(1.0, 1.0, 0.0, c_table=np.zeros(10),
                                   table_dt=0.05)
  with pytest.raises(exceptions.CadenceError):
    scattering.solve_coeff_ode(short, 6.0)


def test_callable_coefficients():
  state = scattering.CoeffODEState(2.0, 1.0, 0.0, c_table=lambda t: 4.0)
  sol = scattering.solve_coeff_ode(state, 1.0, dt=0.01)
  # lambda^2 = c: a'' = 0
  np.testing.assert_allclose(sol.a, 1.0, atol=1e-12)


def test_stability_residual_of_the_decaying_mode():
  state = scattering.CoeffODEState(1.5, 2.0, -3.0)
  assert scattering.stability_residual(state, 4.0, dt=0.01) == 0.0


def test_stability_shoot_free():
  state = scattering.CoeffODEState(1.0, 1.0, 0.0)
  result = scattering.stability_shoot(state, 6.0, dt=0.01)
  assert result.a_dot == pytest.approx(-1.0)
  assert abs(result.residual) <= scattering.SHOOT_TOLERANCE
  assert result.solution.a[-1] == pytest.approx(np.exp(-6.0), rel=1e-6)


def test_stability_shoot_tabulated():
  state = scattering.CoeffODEState(1.0, 1.0, 0.0, c_table=0.3 * np.ones(121),
                                   h_table=np.zeros(121), table_dt=0.05)
  result = scattering.stability_shoot(state, 6.0)
  assert abs(result.residual) <= scattering.SHOOT_TOLERANCE
  assert result.iterations >= 1
  assert scattering.stability_residual(state.with_a_dot(result.a_dot),
                                       6.0) == pytest.approx(result.residual)


def test_stability_shoot_needs_growth_separation():
  with pytest.raises(ValueError):
    scattering.stability_shoot(scattering.CoeffODEState(1.0, 1.0, 0.0), 4.0)


def test_overlaps(well_states):
  grid = well_states.grid
  w = well_states.eigenfunctions[0]
  assert scattering.overlap_c(potentials.PotentialSpec.zero(), w, 0.0) == 0.0
  c = scattering.overlap_c(well_states.spec, w, 0.0)
  assert c < 0
  cfg = evolution.EvolutionConfig(grid=grid, horizon=0.5, snapshot_stride=1)
  history = evolution.evolve(cfg, lattice.WaveState(
    w, lattice.ScalarField.zeros(grid)))
  times, a = scattering.overlap_series(history, w)
  assert a[0] == pytest.approx(1.0, rel=1e-10)
  _, h = scattering.overlap_h(history, well_states.spec, w)
  assert h[0] == pytest.approx(0.0, abs=1e-10)
  assert len(times) == len(h) == 3


def test_tabulated_ode_state(well_history, well_states):
  moving = potentials.PotentialSpec.gaussian_well(1.0, 4.0,
                                                  velocity=(0.5, 0, 0))
  ode = scattering.tabulated_ode_state(well_history, well_states, moving)
  w = well_states.eigenfunctions[0]
  assert ode.lam == pytest.approx(well_states.lambdas[0])
  assert ode.a == pytest.approx(w.inner(well_history.initial_state().u))
  assert ode.a_dot == 0.0
  assert ode.table_dt == pytest.approx(0.25)
  assert ode.coverage() == pytest.approx(1.0)
  cfg = evolution.EvolutionConfig(grid=well_states.grid, horizon=0.25)
  short = evolution.evolve(cfg, well_history.initial_state())
  with pytest.raises(exceptions.CadenceError):
    scattering.tabulated_ode_state(short, well_states, moving)


def test_decomposition_without_a_second_state(well_history, well_states):
  decomposition = scattering.decompose_evolution(well_history, well_states)
  assert decomposition.reassembly_error(well_history) <= 1e-12
  assert decomposition.orthogonality_defect() <= 1e-12
  assert decomposition.covered.all()
  assert len(decomposition.b_times) == 0
  empty = potentials.BoundStateSet("H1", well_states.grid)
  with pytest.raises(exceptions.EmptyBoundStateError):
    scattering.decompose_evolution(well_history, empty)


def test_moving_profile_at_rest(well_states):
  w = well_states.eigenfunctions[0]
  profile = scattering.moving_profile(w, lorentz.Boost(0.0), 1.0)
  np.testing.assert_allclose(profile, w.values, atol=1e-12)


def test_half_wave_round_trip(grid16):
  state = gaussian_state(grid16, width=1.5, velocity=(0.4, 0.0, 0.0))
  half = scattering.to_half_wave(state)
  back = scattering.from_half_wave(half)
  np.testing.assert_allclose(back.u.values, state.u.values, atol=1e-12)
  np.testing.assert_allclose(back.ut.values, state.ut.values, atol=1e-12)
  assert half.norm() ** 2 == pytest.approx(lattice.free_energy(state),
                                           rel=1e-10)


def test_half_wave_free_flow(grid16):
  state = gaussian_state(grid16, width=1.5)
  flowed = scattering.to_half_wave(state).free_flow(1.5)
  exact = scattering.to_half_wave(lattice.free_half_wave(state, 1.5))
  np.testing.assert_allclose(flowed.U, exact.U, atol=1e-12)
  assert flowed.time == pytest.approx(1.5)


def test_free_run_scatters_to_its_own_data(grid16):
  cfg = evolution.EvolutionConfig(grid=grid16, horizon=2.0, snapshot_stride=2)
  history = evolution.evolve(cfg, gaussian_state(grid16, width=1.5))
  U0 = scattering.wave_operator_data(history)
  np.testing.assert_allclose(U0.U, scattering.to_half_wave(
    history.initial_state()).U, atol=1e-14)
  assert U0.diagnostics["cauchy_ratio"] == 0.0
  series = scattering.scattering_convergence(history, U0)
  assert len(series.times) == 5
  assert np.max(series.deviations) <= 1e-10 * series.reference


def test_wave_operator_needs_certification(grid16):
  cfg = evolution.EvolutionConfig(grid=grid16, horizon=1.0)
  history = evolution.evolve(cfg, gaussian_state(grid16))
  decay = evolution.ProjectionDecay(np.zeros(1), np.ones(1), np.zeros(0),
                                    np.zeros(0), False, "H1 bound-state "
                                    "projection does not decay")
  with pytest.raises(exceptions.CertificationError) as e:
    scattering.wave_operator_data(history, decay)
  assert "does not decay" in str(e.value)


def test_deviation_series_acceptance():
  times = np.linspace(0.0, 4.0, 9)
  falling = scattering.DeviationSeries(times, np.linspace(0.5, 0.05, 9), 1.0)
  assert falling.acceptable()
  rising = scattering.DeviationSeries(times, np.linspace(0.0, 0.08, 9), 1.0)
  assert not rising.acceptable()
  large = scattering.DeviationSeries(times, 0.2 * np.ones(9), 1.0)
  assert not large.acceptable()
  assert scattering.DeviationSeries(times, np.zeros(9), 0.0).acceptable()
  # d(T) = 0.05 is under the limit but d climbs over the last half
  settled_then_rising = scattering.DeviationSeries(
    np.linspace(0.0, 3.0, 7), np.array([0.5, 0.3, 0.01, 0.02, 0.03, 0.04,
                                        0.05]), 1.0)
  assert not settled_then_rising.acceptable()
  assert not settled_then_rising.acceptable(limit=0.5)


def test_deviation_acceptance_ignores_round_off():
  times = np.linspace(0.0, 4.0, 9)
  noise = np.array([0.0, 1e-13, 0.0, 3e-13, 1e-14, 8e-13, 2e-13, 9e-13, 1e-13])
  assert scattering.DeviationSeries(times, noise, 2.0).acceptable()


def _richardson_ratio(values):
  return abs(values[0] - values[1]) / abs(values[1] - values[2])


def test_coefficient_ode_is_fourth_order():
  state = scattering.CoeffODEState(1.0, 1.0, 0.0,
                                   c_table=lambda t: 0.3 + 0.1 * np.sin(t),
                                   h_table=lambda t: 0.05 * np.cos(t))
  finals = [scattering.solve_coeff_ode(state, 2.0, dt=dt).a[-1]
            for dt in (0.1, 0.05, 0.025)]
  assert 14.0 <= _richardson_ratio(finals) <= 18.0


def test_tabulated_coefficient_ode_is_fourth_order(well_states):
  moving = potentials.PotentialSpec.gaussian_well(1.0, 4.0,
                                                  velocity=(0.5, 0, 0))
  w = well_states.eigenfunctions[0]
  finals = []
  for table_dt in (0.05, 0.025, 0.0125):
    times = table_dt * np.arange(int(round(2.0 / table_dt)) + 1)
    c = np.array([scattering.overlap_c(moving, w, t) for t in times])
    state = scattering.CoeffODEState(1.0, 1.0, 0.0, c_table=c,
                                     table_dt=table_dt)
    sol = scattering.solve_coeff_ode(state, 2.0)
    exact_c = scattering.CoeffODEState(
      1.0, 1.0, 0.0, c_table=lambda t: scattering.overlap_c(moving, w, t))
    reference = scattering.solve_coeff_ode(exact_c, 2.0, dt=2 * table_dt)
    np.testing.assert_allclose(sol.a, reference.a, rtol=1e-10)
    finals.append(sol.a[-1])
  assert 14.0 <= _richardson_ratio(finals) <= 18.0
