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

"""Converts between Python values, numpy arrays and the laboratory's file
formats.

    For example:

    probe = {"x": 1.0, "y": 0.0, "z": -0.5}

    convert.normalize_point(probe)
    # array([ 1. ,  0. , -0.5])
"""

import hashlib
import json

import numpy as np

FIELD_MAGIC = b"WCL1"

_FIELD_HEADER = np.dtype([
  ("magic", "S4"),
  ("n", "<u4"),
  ("box_length", "<f8"),
  ("time", "<f8"),
])


def format_float(arg):
  """Formats a float value to be as short as possible.

    Truncates float to 8 decimal places and trims extraneous
    trailing zeros and period. Used for labels and file names, never
    for numeric payloads (those keep full precision).

    For example:

    format_float(0.5) -> "0.5"
    format_float(4.0) -> "4"
    format_float(-0.000000001) -> "-0"

    :param arg: The value.
    :type arg: float

    :rtype: string
    """
  return ("%.8f" % float(arg)).rstrip("0").rstrip(".")


def normalize_point(arg):
  """Take the various point/vector representations and return an array.

    Accepts:
    1) dict with entries "x", "y", "z"
    2) list, tuple or array of three numbers

    :param arg: The point.
    :type arg: dict or list or tuple or numpy.ndarray

    :rtype: numpy.ndarray of shape (3,)
    """
  if isinstance(arg, dict):
    if "x" in arg and "y" in arg and "z" in arg:
      return np.array([arg["x"], arg["y"], arg["z"]], dtype=float)
    raise TypeError("Expected a point dict with x, y, z keys, "
                    "but got keys %s" % sorted(arg))

  if _is_list(arg) and len(arg) == 3:
    return np.array([float(arg[0]), float(arg[1]), float(arg[2])])

  raise TypeError(
    "Expected a point dict or 3-sequence, "
    "but got %s" % type(arg).__name__)


def broadcast_vector(arg):
  """Like normalize_point, but a bare number is repeated on every axis.

    :rtype: numpy.ndarray of shape (3,)
    """
  if isinstance(arg, (int, float, np.floating, np.integer)):
    return np.full(3, float(arg))
  return normalize_point(arg)


def point_list(arg):
  """Coerces a single point or a list of points into an (m, 3) array.

    :rtype: numpy.ndarray
    """
  if isinstance(arg, dict):
    return normalize_point(arg)[None, :]
  if _is_list(arg) and len(arg) == 3 and not any(
      _is_list(a) or isinstance(a, dict) for a in arg):
    return normalize_point(arg)[None, :]
  return np.array([normalize_point(p) for p in as_list(arg)],
                  dtype=float).reshape(-1, 3)


def vector_label(v):
  """Short label of a 3-vector, e.g. ``0.5_0_0``."""
  return "_".join(format_float(c) for c in normalize_point(v))


def as_list(arg):
  """Coerces arg into a list. If arg is already list-like, returns arg.
    Otherwise, returns a one-element list containing arg.

    :rtype: list
    """
  if _is_list(arg):
    return arg
  return [arg]


def _is_list(arg):
  """Checks if arg is list-like. This excludes strings and dicts."""
  if isinstance(arg, (dict, str, bytes)):
    return False
  return hasattr(arg, "__getitem__") and hasattr(arg, "__len__")


def canonical_json(obj):
  """Dumps obj as canonical JSON: sorted keys, compact separators."""
  return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                    default=_json_default)


def config_hash(obj, length=12):
  """SHA-256 of the canonical JSON form of obj, truncated to length hex
    characters.

    :rtype: string
    """
  digest = hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()
  return digest[:length]


def _json_default(value):
  if isinstance(value, np.ndarray):
    return value.tolist()
  if isinstance(value, (np.floating, np.integer)):
    return value.item()
  if isinstance(value, np.bool_):
    return bool(value)
  raise TypeError("Object of type %s is not JSON serializable"
                  % type(value).__name__)


def encode_field(values, box_length, time):
  """Encodes a cubic field in the WCL1 binary format.

    Header: magic "WCL1", n (u32), box_length (f64), time (f64), all
    little-endian, followed by n**3 little-endian f64 values with x
    varying fastest.

    :param values: Field samples indexed [ix, iy, iz].
    :type values: numpy.ndarray of shape (n, n, n)

    :rtype: bytes
    """
  values = np.asarray(values, dtype=float)
  n = values.shape[0]
  if values.shape != (n, n, n):
    raise ValueError("Expected a cubic field, got shape %s" % (values.shape,))
  header = np.zeros((), dtype=_FIELD_HEADER)
  header["magic"] = FIELD_MAGIC
  header["n"] = n
  header["box_length"] = box_length
  header["time"] = time
  body = values.ravel(order="F").astype("<f8")
  return header.tobytes() + body.tobytes()


def decode_field(payload):
  """Decodes a WCL1 payload.

    :rtype: tuple (values, box_length, time)
    """
  header = np.frombuffer(payload[:_FIELD_HEADER.itemsize], dtype=_FIELD_HEADER)[0]
  if bytes(header["magic"]) != FIELD_MAGIC:
    raise ValueError("Not a WCL1 field payload")
  n = int(header["n"])
  body = np.frombuffer(payload[_FIELD_HEADER.itemsize:], dtype="<f8")
  if body.size != n ** 3:
    raise ValueError("Truncated WCL1 payload: %d of %d values"
                     % (body.size, n ** 3))
  values = body.reshape((n, n, n), order="F").astype(float)
  return values, float(header["box_length"]), float(header["time"])
