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

"""Report files: CSV tables and JSON manifests written atomically, each
row stamped with the config hash of the run that produced it.
"""

import contextlib
import csv
import glob
import json
import logging
import os
import tempfile

from wavecharge import convert
from wavecharge import exceptions

logger = logging.getLogger(__name__)

HASH_COLUMN = "config_hash"


@contextlib.contextmanager
def atomic_write(path, mode="w"):
  """Opens a temporary file beside path and renames it over path on a
    clean exit, so readers never see a partial file."""
  directory = os.path.dirname(os.path.abspath(path))
  os.makedirs(directory, exist_ok=True)
  fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
  kwargs = {"newline": ""} if "b" not in mode else {}
  try:
    with os.fdopen(fd, mode, **kwargs) as f:
      yield f
    os.replace(tmp, path)
  except BaseException:
    with contextlib.suppress(OSError):
      os.remove(tmp)
    raise


def format_cell(value):
  """Full-precision text of a cell; floats use repr."""
  if value is None:
    return ""
  if isinstance(value, bool):
    return "true" if value else "false"
  if isinstance(value, float) or hasattr(value, "dtype"):
    try:
      return repr(float(value))
    except (TypeError, ValueError):
      pass
  return str(value)


def write_csv(path, header, rows, config_hash=None):
  """Writes rows under header; appends a config_hash column when given.

    :param rows: Sequences in header order.
    :type rows: list

    :rtype: string (path)
    """
  header = list(header)
  if config_hash is not None:
    header.append(HASH_COLUMN)
  with atomic_write(path) as f:
    writer = csv.writer(f)
    writer.writerow(header)
    for row in rows:
      cells = [format_cell(c) for c in row]
      if config_hash is not None:
        cells.append(config_hash)
      writer.writerow(cells)
  logger.info("wrote %d rows to %s", len(rows), path)
  return path


def write_dict_rows(path, header, rows, config_hash=None):
  """Like write_csv, for dict rows keyed by header names."""
  return write_csv(path, header, [[row.get(k, "") for k in header]
                                  for row in rows], config_hash)


def write_json(path, obj):
  with atomic_write(path) as f:
    f.write(json.dumps(obj, indent=2, sort_keys=True,
                       default=convert._json_default))
  return path


def read_csv(path):
  """Reads a report back as a list of dicts of strings."""
  with open(path, newline="") as f:
    return list(csv.DictReader(f))


def collate_reports(paths, out_path):
  """Concatenates reports sharing one header and one config hash.

    :param paths: Report paths or glob patterns.
    :type paths: list of strings

    :raises CollationError: on differing headers or config hashes.

    :rtype: string (out_path)
    """
  files = []
  for p in convert.as_list(paths):
    matches = sorted(glob.glob(p))
    files.extend(matches or [p])
  if not files:
    raise exceptions.CollationError("No reports to collate")
  header = None
  rows = []
  for path in files:
    with open(path, newline="") as f:
      reader = csv.reader(f)
      this_header = next(reader)
      if header is None:
        header = this_header
      elif this_header != header:
        raise exceptions.CollationError(
          "Header of %s differs: %s vs %s" % (path, this_header, header))
      for row in reader:
        rows.append(row)
  if HASH_COLUMN not in header:
    raise exceptions.CollationError("Reports carry no %s column" % HASH_COLUMN)
  column = header.index(HASH_COLUMN)
  hashes = {row[column] for row in rows}
  if len(hashes) > 1:
    raise exceptions.CollationError(
      "Reports come from different configs: %s" % sorted(hashes))
  with atomic_write(out_path) as f:
    writer = csv.writer(f)
    writer.writerow(header)
    writer.writerows(rows)
  return out_path
