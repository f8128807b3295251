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
from scipy import fft as sfft

from wavecharge import exceptions
from wavecharge import lattice

from conftest import gaussian_state


@pytest.mark.parametrize("n", [8, 24, 12.5])
def test_box_grid_rejects_bad_sizes(n):
  with pytest.raises(ValueError):
    lattice.BoxGrid(n, 16.0)


def test_box_grid_geometry(grid16):
  assert grid16.spacing == 1.0
  assert grid16.shape == (16, 16, 16)
  assert grid16.axis[0] == -8.0
  assert grid16.axis[8] == 0.0
  assert grid16.size == 4096
  np.testing.assert_allclose(grid16.wrap([9.0, -9.0, 3.0]), [-7.0, 7.0, 3.0])


def test_radius_from_wraps(grid16):
  r = grid16.radius_from((-8.0, 0.0, 0.0))
  # (7, 8, 8) is one spacing from (-8, 0, 0) through the boundary
  assert r[15, 8, 8] == pytest.approx(1.0)


def test_inner_product_uses_cell_volume():
  grid = lattice.BoxGrid(16, 8.0)
  one = lattice.ScalarField(grid, np.ones(grid.shape))
  assert one.inner(one) == pytest.approx(8.0 ** 3)
  assert one.norm() == pytest.approx(8.0 ** 1.5)


def test_field_from_function(grid16):
  f = lattice.ScalarField.from_function(grid16, lambda X, Y, Z: X + 2 * Z)
  X, _, Z = grid16.mesh
  np.testing.assert_array_equal(f.values, X + 2 * Z)


def test_field_rejects_non_finite(grid16):
  values = np.zeros(grid16.shape)
  values[0, 0, 0] = np.nan
  with pytest.raises(ValueError):
    lattice.ScalarField(grid16, values)


def test_grid_mismatch(grid16, grid32):
  with pytest.raises(exceptions.GridMismatchError):
    lattice.ScalarField.zeros(grid16) + lattice.ScalarField.zeros(grid32)


def test_multiplier_needs_zero_at_origin(grid16):
  with pytest.raises(ValueError):
    lattice.SpectralMultiplier(grid16, grid16.half_kabs + 1.0)


def test_sqrt_laplacian_squares_to_laplacian(grid16):
  f = gaussian_state(grid16, width=2.0).u
  A = lattice.SpectralMultiplier.sqrt_laplacian(grid16)
  lap = lattice.SpectralMultiplier.laplacian(grid16)
  np.testing.assert_allclose(A.apply(A.apply(f)).values, lap.apply(f).values,
                             atol=1e-12)


def test_free_half_wave_matches_standing_wave(grid16):
  k = 2 * np.pi * 2 / grid16.box_length
  X, _, _ = grid16.mesh
  state = lattice.WaveState.from_arrays(grid16, np.cos(k * X),
                                        np.zeros(grid16.shape))
  later = lattice.free_half_wave(state, 0.7)
  np.testing.assert_allclose(later.u.values, np.cos(k * X) * np.cos(0.7 * k),
                             atol=1e-12)
  np.testing.assert_allclose(later.ut.values,
                             -k * np.cos(k * X) * np.sin(0.7 * k), atol=1e-12)
  assert later.time == pytest.approx(0.7)


def test_free_half_wave_moves_the_mean(grid16):
  state = lattice.WaveState.from_arrays(grid16, np.zeros(grid16.shape),
                                        np.ones(grid16.shape))
  later = lattice.free_half_wave(state, 0.5)
  np.testing.assert_allclose(later.u.values, 0.5, atol=1e-12)


def test_free_half_wave_is_reversible(grid16):
  state = gaussian_state(grid16, width=1.5, velocity=(0.3, 0.0, 0.0))
  back = lattice.free_half_wave(lattice.free_half_wave(state, 1.3), -1.3)
  np.testing.assert_allclose(back.u.values, state.u.values, atol=1e-12)
  np.testing.assert_allclose(back.ut.values, state.ut.values, atol=1e-12)


def test_free_energy_is_conserved(grid16):
  state = gaussian_state(grid16, width=1.5, velocity=(0.3, 0.0, 0.0))
  E0 = lattice.free_energy(state)
  E1 = lattice.free_energy(lattice.free_half_wave(state, 2.5))
  assert E0 > 0
  assert E1 == pytest.approx(E0, rel=1e-12)


def test_spectral_power_matches_direct_sum(grid16):
  u = gaussian_state(grid16, width=1.5).u
  direct = float(np.sum(u.values ** 2)) * grid16.cell_volume
  assert lattice.spectral_power(grid16, lattice.forward_transform(u)) \
    == pytest.approx(direct, rel=1e-12)
  back = lattice.inverse_transform(lattice.forward_transform(u), grid16)
  np.testing.assert_allclose(back.values, u.values, atol=1e-14)


def test_gradient_energy_matches_spectral_gradient(grid16):
  u = gaussian_state(grid16, width=2.0).u
  grads = lattice.spectral_gradient(u.values, grid16)
  direct = sum(float(np.sum(g ** 2)) for g in grads) * grid16.cell_volume
  assert lattice.gradient_energy(u) == pytest.approx(direct, rel=1e-10)


def test_shift_field_translates_band_limited_data(grid16):
  k = 2 * np.pi * 3 / grid16.box_length
  X, _, _ = grid16.mesh
  shifted = lattice.shift_field(np.sin(k * X), grid16, (0.37, 0.0, 0.0))
  np.testing.assert_allclose(shifted, np.sin(k * (X + 0.37)), atol=1e-12)


def test_spectral_eval_is_exact_for_trigonometric_data(grid16):
  k = 2 * np.pi / grid16.box_length
  X, Y, Z = grid16.mesh
  values = np.cos(k * X) * np.sin(2 * k * Y) + np.cos(3 * k * Z)
  pts = np.array([[0.3, -1.7, 2.2], [5.1, 0.0, -7.9]])
  expected = np.cos(k * pts[:, 0]) * np.sin(2 * k * pts[:, 1]) \
    + np.cos(3 * k * pts[:, 2])
  np.testing.assert_allclose(lattice.spectral_eval(values, grid16, pts),
                             expected, atol=1e-12)


def test_trilinear_reproduces_grid_values(grid16):
  u = gaussian_state(grid16, width=2.0).u.values
  pts = [[0.0, 0.0, 0.0], [1.0, -2.0, 3.0]]
  np.testing.assert_allclose(lattice.interpolate_trilinear(u, grid16, pts),
                             [u[8, 8, 8], u[9, 6, 11]], atol=1e-12)


def test_sphere_rule():
  nodes, weights = lattice.sphere_rule()
  assert weights.sum() == pytest.approx(4 * np.pi)
  np.testing.assert_allclose(np.linalg.norm(nodes, axis=1), 1.0)
  # second moments of the uniform measure: 4 pi / 3
  assert np.dot(weights, nodes[:, 0] ** 2) == pytest.approx(4 * np.pi / 3)


def test_kirchhoff_matches_spectral_flow(grid32):
  f = gaussian_state(grid32, width=2.0).u
  zero = lattice.ScalarField.zeros(grid32)
  t = 2.0
  x = (1.0, 0.5, 0.0)
  flow = lattice.free_half_wave(lattice.WaveState(zero, f), t)
  expected = lattice.spectral_eval(flow.u.values, grid32, x)[0]
  assert lattice.kirchhoff_eval(f, t, x) == pytest.approx(expected, rel=1e-6,
                                                          abs=1e-9)
  flow = lattice.free_half_wave(lattice.WaveState(f, zero), t)
  expected = lattice.spectral_eval(flow.u.values, grid32, x)[0]
  assert lattice.kirchhoff_position(f, t, x) == pytest.approx(
    expected, rel=1e-6, abs=1e-9)


def test_kirchhoff_horizon(grid16):
  f = gaussian_state(grid16).u
  with pytest.raises(exceptions.HorizonError):
    lattice.kirchhoff_eval(f, 4.0, (0, 0, 0))
  with pytest.raises(ValueError):
    lattice.kirchhoff_eval(f, 0.0, (0, 0, 0))


def _constant_forcing_solution(f, t):
  """(1 - cos(t A)) / A^2 f, with t^2/2 at k = 0."""
  grid = f.grid
  k2 = grid.half_k2
  with np.errstate(divide="ignore", invalid="ignore"):
    symbol = np.where(k2 > 0, (1 - np.cos(t * np.sqrt(k2))) / np.where(
      k2 > 0, k2, 1.0), 0.5 * t * t)
  return sfft.irfftn(symbol * sfft.rfftn(f.values), s=grid.shape)


def test_free_duhamel_constant_forcing(grid32):
  f = gaussian_state(grid32, width=2.0).u
  t, dt = 1.0, 0.05
  samples = [f] * 21
  result = lattice.free_duhamel(samples, dt, t)
  expected = _constant_forcing_solution(f, t)
  assert np.max(np.abs(result.values - expected)) \
    <= 1e-2 * np.max(np.abs(expected))


def test_free_duhamel_cadence(grid16):
  f = lattice.ScalarField.zeros(grid16)
  with pytest.raises(exceptions.CadenceError):
    lattice.free_duhamel([f] * 3, 0.5, 2.0)
  assert not np.any(lattice.free_duhamel([f], 0.5, 0.0).values)


def test_truncated_newton_apply_point_mass(grid16):
  values = np.zeros(grid16.shape)
  values[8, 8, 8] = 1.0 / grid16.cell_volume
  potential = lattice.truncated_newton_apply(
    lattice.ScalarField(grid16, values), grid16.spacing).values
  assert potential[8, 8, 8] == pytest.approx(0.0, abs=1e-12)
  assert potential[9, 8, 8] == pytest.approx(1 / (4 * np.pi), rel=1e-10)
  assert potential[8, 10, 8] == pytest.approx(1 / (8 * np.pi), rel=1e-10)


def test_truncated_newton_kernel():
  kernel = lattice.truncated_newton_kernel(
    1.0, np.zeros(3), [[0.0, 0.0, 0.5], [0.0, 0.0, 2.0], [3.0, 4.0, 0.0]])
  np.testing.assert_allclose(kernel, [0.0, 0.5, 0.2])
  with pytest.raises(ValueError):
    lattice.truncated_newton_kernel(-1.0, np.zeros(3), np.ones(3))


def test_field_file_round_trip(tmp_path, grid16):
  f = gaussian_state(grid16).u
  path = str(tmp_path / "u.wcl")
  lattice.write_field(path, f, time=2.5)
  g, time = lattice.read_field(path)
  assert time == 2.5
  assert g.grid == grid16
  np.testing.assert_array_equal(g.values, f.values)
