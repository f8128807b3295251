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

import os

import numpy as np
import pytest

from wavecharge import exceptions
from wavecharge import reports


def test_format_cell():
  assert reports.format_cell(None) == ""
  assert reports.format_cell(True) == "true"
  assert reports.format_cell(0.1) == "0.1"
  assert reports.format_cell(np.float64(1 / 3)) == repr(1 / 3)
  assert reports.format_cell(7) == "7"
  assert reports.format_cell("H1") == "H1"


def test_write_and_read_csv(tmp_path):
  path = str(tmp_path / "sub" / "a.csv")
  reports.write_csv(path, ["t", "value"], [[0.0, 1.5], [0.5, None]], "abc")
  rows = reports.read_csv(path)
  assert rows == [{"t": "0.0", "value": "1.5", "config_hash": "abc"},
                  {"t": "0.5", "value": "", "config_hash": "abc"}]


def test_write_dict_rows(tmp_path):
  path = str(tmp_path / "d.csv")
  reports.write_dict_rows(path, ["a", "b"], [{"a": 1}, {"b": 2, "c": 3}])
  assert reports.read_csv(path) == [{"a": "1", "b": ""}, {"a": "", "b": "2"}]


def test_atomic_write_leaves_nothing_on_error(tmp_path):
  path = tmp_path / "out.json"
  with pytest.raises(RuntimeError):
    with reports.atomic_write(str(path)) as f:
      f.write("partial")
      raise RuntimeError("boom")
  assert os.listdir(str(tmp_path)) == []


def test_write_json(tmp_path):
  path = str(tmp_path / "r.json")
  reports.write_json(path, {"b": np.float64(2.0), "a": [1, 2]})
  with open(path) as f:
    text = f.read()
  assert text.index('"a"') < text.index('"b"')


def _report(tmp_path, name, config_hash, header=("t", "value")):
  path = str(tmp_path / name)
  reports.write_csv(path, header, [[0.0, 1.0], [1.0, 2.0]], config_hash)
  return path


def test_collate_same_hash(tmp_path):
  _report(tmp_path, "r1.csv", "h1")
  _report(tmp_path, "r2.csv", "h1")
  out = reports.collate_reports([str(tmp_path / "r*.csv")],
                                str(tmp_path / "all.csv"))
  rows = reports.read_csv(out)
  assert len(rows) == 4
  assert {r["config_hash"] for r in rows} == {"h1"}


def test_collate_rejects_mixed_hashes(tmp_path):
  a = _report(tmp_path, "r1.csv", "h1")
  b = _report(tmp_path, "r2.csv", "h2")
  with pytest.raises(exceptions.CollationError):
    reports.collate_reports([a, b], str(tmp_path / "all.csv"))
  assert not os.path.exists(str(tmp_path / "all.csv"))


def test_collate_rejects_other_headers(tmp_path):
  a = _report(tmp_path, "r1.csv", "h1")
  b = _report(tmp_path, "r2.csv", "h1", header=("t", "energy"))
  with pytest.raises(exceptions.CollationError):
    reports.collate_reports([a, b], str(tmp_path / "all.csv"))


def test_collate_needs_a_hash_column(tmp_path):
  a = _report(tmp_path, "r1.csv", None)
  with pytest.raises(exceptions.CollationError):
    reports.collate_reports([a], str(tmp_path / "all.csv"))
  with pytest.raises(exceptions.CollationError):
    reports.collate_reports([], str(tmp_path / "all.csv"))
