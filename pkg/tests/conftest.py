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

from wavecharge import lattice
from wavecharge import potentials


def gaussian_state(grid, width=1.5, center=(0.0, 0.0, 0.0), velocity=None):
  """Gaussian bump at rest, or with u_t of a rigid translation."""
  c = np.asarray(center, dtype=float)
  X, Y, Z = grid.mesh
  d = [grid.wrap(X - c[0]), grid.wrap(Y - c[1]), grid.wrap(Z - c[2])]
  u = np.exp(-0.5 * (d[0] ** 2 + d[1] ** 2 + d[2] ** 2) / width ** 2)
  ut = np.zeros(grid.shape)
  if velocity is not None:
    ut = sum(velocity[a] * d[a] for a in range(3)) * u / width ** 2
  return lattice.WaveState.from_arrays(grid, u, ut)


def small_config(**evolution):
  """A raw config of a free Gaussian on a 32^3 grid (box length 16)."""
  evo = {"horizon": 1.0, "snapshot_stride": 2}
  evo.update(evolution)
  return {
    "grid": {"n_per_axis": 32, "box_length": 16.0},
    "potentials": [],
    "initial": {"kind": "gaussian", "width": 1.5},
    "evolution": evo,
    "checks": {"energy": True},
  }


@pytest.fixture
def grid16():
  return lattice.BoxGrid(16, 16.0)


@pytest.fixture
def grid32():
  return lattice.BoxGrid(32, 32.0)


@pytest.fixture(scope="session")
def deep_well():
  return potentials.PotentialSpec.gaussian_well(4.0, 4.0)


@pytest.fixture(scope="session")
def well_states(deep_well):
  return potentials.compute_bound_states(deep_well, lattice.BoxGrid(16, 16.0))


def coarse_config(potentials=(), initial=None):
  """A raw config on the 16^3 grid of the well fixtures, zero horizon."""
  return {
    "grid": {"n_per_axis": 16, "box_length": 16.0},
    "potentials": list(potentials),
    "initial": initial or {"kind": "gaussian", "width": 2.0},
    "evolution": {"horizon": 0.0},
  }
