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

"""
Defines exceptions that are thrown by the wavecharge laboratory.
"""


class WavechargeError(Exception):
  """Base class for every error raised by the laboratory."""
  pass


class ConfigError(WavechargeError):
  """An experiment configuration failed validation.

    The status is a machine-readable code such as ``UNKNOWN_KEY`` or
    ``WRAP_AROUND``; the message says how to fix the config.
    """

  def __init__(self, status, message=None):
    self.status = status
    self.message = message

  def __str__(self):
    if self.message is None:
      return str(self.status)
    else:
      return "%s (%s)" % (self.status, self.message)


class GridMismatchError(WavechargeError):
  """Two fields that must share a grid do not."""

  def __init__(self, left=None, right=None):
    self.left = left
    self.right = right

  def __str__(self):
    if self.left is None:
      return "Fields live on different grids."
    return "Fields live on different grids: %s vs %s" % (self.left, self.right)


class HorizonError(WavechargeError):
  """A requested time range exceeds what is allowed or stored."""

  def __init__(self, requested, limit, what="horizon"):
    self.requested = requested
    self.limit = limit
    self.what = what

  def __str__(self):
    return "%s %.6g exceeds the limit %.6g" % (self.what, self.requested,
                                               self.limit)


class CadenceError(WavechargeError):
  """Time samples do not match the expected cadence."""
  pass


class SuperluminalError(WavechargeError):
  """A velocity has magnitude >= 1."""

  def __init__(self, speed):
    self.speed = speed

  def __str__(self):
    return "Speed %.6g is not below the speed of light (1)" % self.speed


class ConvergenceError(WavechargeError):
  """An iteration did not converge."""

  def __init__(self, iterations, residual, what="iteration"):
    self.iterations = iterations
    self.residual = residual
    self.what = what

  def __str__(self):
    return "%s did not converge after %d steps (residual %.3e)" % (
      self.what, self.iterations, self.residual)


class DegenerateShiftError(ConvergenceError):
  """The inverse-iteration shift hit the spectrum."""
  pass


class BoundaryMassError(WavechargeError):
  """An eigenfunction carries mass near the box boundary (box too small)."""

  def __init__(self, fraction):
    self.fraction = fraction

  def __str__(self):
    return ("Fraction %.3e of the L2 mass lies in the outer box region; "
            "enlarge the box" % self.fraction)


class EmptyBoundStateError(WavechargeError):
  """The operation needs at least one bound state."""
  pass


class OutsideHistoryError(WavechargeError):
  """A space-time event lies outside the stored history."""

  def __init__(self, time, t_min, t_max):
    self.time = time
    self.t_min = t_min
    self.t_max = t_max

  def __str__(self):
    return "Event at t=%.6g outside stored range [%.6g, %.6g]" % (
      self.time, self.t_min, self.t_max)


class NumericalBlowupError(WavechargeError):
  """The evolution produced non-finite values."""

  def __init__(self, step, time):
    self.step = step
    self.time = time

  def __str__(self):
    return "Non-finite field at step %d (t=%.6g)" % (self.step, self.time)


class ChannelOverlapError(WavechargeError):
  """The channel balls overlap."""
  pass


class CertificationError(WavechargeError):
  """The run did not certify as a scattering state."""

  def __init__(self, reason=None):
    self.reason = reason

  def __str__(self):
    if self.reason:
      return "certification failed: %s" % self.reason
    return "certification failed"


class CollationError(WavechargeError):
  """Reports with different config hashes cannot be collated."""
  pass


class MissingTraceError(WavechargeError):
  """No trace was recorded for the requested velocity."""

  def __init__(self, velocity):
    self.velocity = velocity

  def __str__(self):
    return "No trace recorded for velocity %s" % (tuple(self.velocity),)
