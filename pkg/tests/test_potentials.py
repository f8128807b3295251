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

from wavecharge import exceptions
from wavecharge import lattice
from wavecharge import potentials

from conftest import gaussian_state


def test_gaussian_well_broadcasts_width():
  well = potentials.GaussianWell(1.0, 2.0)
  assert well.width == (2.0, 2.0, 2.0)
  assert well.offset == (0.0, 0.0, 0.0)
  with pytest.raises(ValueError):
    potentials.GaussianWell(1.0, [1.0, -1.0, 1.0])


def test_superluminal_potential():
  with pytest.raises(exceptions.SuperluminalError):
    potentials.PotentialSpec.gaussian_well(1.0, 2.0, velocity=(1.0, 0, 0))


def test_sample_at_center(grid16, deep_well):
  V = deep_well.sample(grid16)
  assert V[8, 8, 8] == pytest.approx(-4.0)
  assert V.min() == pytest.approx(-4.0)
  assert np.all(V < 0)


def test_sum_of_gaussians_and_core_radius():
  spec = potentials.PotentialSpec.sum_of_gaussians(
    [(1.0, 2.0, (3.0, 4.0, 0.0)), {"depth": 2.0, "width": 1.0}])
  assert spec.total_depth == 3.0
  assert spec.min_width == 1.0
  assert spec.core_radius == pytest.approx(9.0)
  assert potentials.PotentialSpec.zero().core_radius == 0.0


def test_moving_potential_center(grid16):
  spec = potentials.PotentialSpec.gaussian_well(1.0, 4.0, center=(1.0, 0, 0),
                                                velocity=(0.6, 0, 0))
  assert not spec.is_static
  frozen = spec.frozen_at(2.0)
  assert frozen.is_static
  assert frozen.center == pytest.approx((2.2, 0.0, 0.0))
  np.testing.assert_allclose(spec.sample(grid16, 2.0), frozen.sample(grid16))


def test_compressed_potential():
  spec = potentials.PotentialSpec.gaussian_well(1.0, 2.0, center=(1.0, 0, 0),
                                                velocity=(0.6, 0, 0))
  compressed = potentials.compressed_potential(spec)
  assert compressed.is_static
  assert compressed.wells[0].width == pytest.approx((2.5, 2.0, 2.0))
  assert compressed.center == pytest.approx((1.25, 0.0, 0.0))
  with pytest.raises(ValueError):
    potentials.compressed_potential(potentials.PotentialSpec.gaussian_well(
      1.0, 2.0, velocity=(0, 0.5, 0)))


def test_gradient_matches_spectral_derivative(grid16):
  spec = potentials.PotentialSpec.gaussian_well(1.0, 1.5, center=(0.5, 0, 0))
  spectral = lattice.spectral_gradient(spec.sample(grid16), grid16)
  for analytic, numeric in zip(spec.gradient(grid16), spectral):
    np.testing.assert_allclose(analytic, numeric, atol=1e-4)


def test_apply_hamiltonian_without_potential(grid16):
  f = gaussian_state(grid16, width=2.0).u
  lap = lattice.SpectralMultiplier.laplacian(grid16).apply(f)
  np.testing.assert_allclose(
    potentials.apply_hamiltonian(potentials.PotentialSpec.zero(), f).values,
    lap.values, atol=1e-12)


def test_spectral_matrix_1d(grid16):
  D = potentials.spectral_matrix_1d(grid16)
  k = 2 * np.pi * 3 / grid16.box_length
  x = grid16.axis
  np.testing.assert_allclose(D, D.T, atol=1e-12)
  np.testing.assert_allclose(D @ np.cos(k * x), k * k * np.cos(k * x),
                             atol=1e-10)


def test_bound_state_is_an_eigenpair(deep_well, well_states):
  assert len(well_states) >= 1
  assert well_states.hamiltonian == "H1"
  E = well_states.eigenvalues[0]
  w = well_states.eigenfunctions[0]
  assert -4.0 < E < 0.0
  assert well_states.lambdas[0] == pytest.approx(np.sqrt(-E))
  assert w.norm() == pytest.approx(1.0, rel=1e-10)
  Hw = potentials.apply_hamiltonian(deep_well, w)
  assert (Hw - w * E).norm() <= 1e-5
  assert well_states.residuals[0] <= potentials.RESIDUAL_TOLERANCE


def test_bound_state_matches_lanczos(deep_well, well_states):
  reference = potentials.lanczos_lowest(deep_well, well_states.grid, 1)
  assert well_states.eigenvalues[0] == pytest.approx(reference[0], abs=1e-6)


def test_projections(well_states):
  grid = well_states.grid
  f = gaussian_state(grid, width=2.0, center=(1.0, 0.0, 0.0)).u
  continuous = potentials.project_continuous(well_states, f)
  np.testing.assert_allclose(
    potentials.bound_coefficients(well_states, continuous), 0.0,
    atol=1e-12 * f.norm())
  bound = potentials.project_bound(well_states, f)
  np.testing.assert_allclose((bound + continuous).values, f.values,
                             atol=1e-12)
  assert abs(potentials.bound_coefficients(well_states, f)[0]) > 0.1


def test_no_bound_state_without_potential(grid16):
  states = potentials.compute_bound_states(potentials.PotentialSpec.zero(),
                                           grid16)
  assert len(states) == 0
  with pytest.raises(exceptions.EmptyBoundStateError):
    potentials.agmon_decay_check(states)


def test_bound_states_need_a_static_potential(grid16):
  spec = potentials.PotentialSpec.gaussian_well(1.0, 4.0, velocity=(0.5, 0, 0))
  with pytest.raises(ValueError):
    potentials.compute_bound_states(spec, grid16)


def test_bound_state_files(tmp_path, well_states):
  directory = str(tmp_path / "H1")
  potentials.save_bound_states(well_states, directory)
  loaded = potentials.load_bound_states(directory)
  assert loaded.hamiltonian == "H1"
  assert loaded.eigenvalues == pytest.approx(well_states.eigenvalues)
  np.testing.assert_array_equal(loaded.eigenfunctions[0].values,
                                well_states.eigenfunctions[0].values)
  assert loaded.spec == well_states.spec
  assert loaded.spec.max_width == 4.0


def test_agmon_rate_of_a_deep_narrow_well():
  spec = potentials.PotentialSpec.gaussian_well(10.0, 1.0)
  states = potentials.compute_bound_states(spec, lattice.BoxGrid(32, 16.0))
  # fit window r in [3, 4]
  (entry,) = potentials.agmon_decay_check(states)
  assert entry["shells"] == 4
  assert entry["relative_error"] <= 0.25
  assert entry["outer_mass_fraction"] < potentials.OUTER_MASS_LIMIT


def test_agmon_window_needs_room(well_states):
  # 3 sigma = 12 lies beyond L/4 = 4 on the 16^3 box
  with pytest.raises(ValueError):
    potentials.agmon_decay_check(well_states)
  with pytest.raises(ValueError):
    potentials.agmon_decay_check(well_states, inner_radius=3.0,
                                 outer_radius=3.5)
