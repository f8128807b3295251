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
The laboratory object: output directory, worker count, a per-config cache
of bound states and histories, subcommand dispatch and the parallel sweep.
"""
import asyncio
from concurrent import futures
import functools
import logging
import os

from wavecharge import commands
from wavecharge import config as config_mod
from wavecharge import exceptions
from wavecharge import reports

logger = logging.getLogger(__name__)

WORKERS_ENV = "WAVECHARGE_WORKERS"
RESULT_FILE = "result.json"
SWEEP_INDEX = "sweep.csv"


def default_workers():
  """Worker count from WAVECHARGE_WORKERS, else the CPU count.

    :raises ConfigError: when the variable is not a positive integer.

    :rtype: int
    """
  value = os.environ.get(WORKERS_ENV)
  if value is None:
    return os.cpu_count() or 1
  try:
    workers = int(value)
  except ValueError:
    workers = 0
  if workers < 1:
    raise exceptions.ConfigError(
      "BAD_VALUE", "%s must be a positive integer, got %r" % (WORKERS_ENV,
                                                              value))
  return workers


class Lab:
  """Runs experiments and writes their reports under one directory."""

  def __init__(self, out_dir, workers=None):
    """
        :param out_dir: Directory receiving every report. Created on demand.
        :type out_dir: string

        :param workers: Worker processes for sweeps. Defaults to
            WAVECHARGE_WORKERS or the CPU count.
        :type workers: int

        :raises ConfigError: when workers is not a positive integer.
        """
    if workers is None:
      workers = default_workers()
    if isinstance(workers, bool) or not isinstance(workers, int) \
        or workers < 1:
      raise exceptions.ConfigError("BAD_VALUE",
                                   "workers must be a positive integer")
    self.out_dir = out_dir
    self.workers = workers
    self._cache = {}

  def output_path(self, *parts):
    return os.path.join(self.out_dir, *parts)

  def cached(self, key, factory):
    """Returns the cached value for key, building it with factory once."""
    if key not in self._cache:
      self._cache[key] = factory()
    return self._cache[key]

  def clear_cache(self):
    self._cache.clear()

  def run(self, command, config):
    """Runs one subcommand and writes <out>/<command>/result.json.

        :param command: One of commands.COMMANDS.
        :type command: string

        :param config: A config path or a validated config.
        :type config: string or config.ExperimentConfig

        :rtype: commands.RunResult
        """
    if command not in commands.COMMANDS:
      raise exceptions.ConfigError(
        "BAD_VALUE", "unknown subcommand %r; expected one of %s"
        % (command, sorted(commands.COMMANDS)))
    return getattr(self, command.replace("-", "_"))(config)

  async def sweep_async(self, config, command="simulate"):
    """Runs command once per entry of config.sweep, each in its own
      process and subdirectory run_NNN.

        :rtype: list of dicts (run, directory, config_hash, passed, exit)
        """
    config = _as_config(config)
    if not config.sweep:
      raise exceptions.ConfigError("MISSING_KEY",
                                   "sweep needs a nonempty sweep list")
    runs = []
    for i, overrides in enumerate(config.sweep):
      # Validate every variant before any compute.
      variant = config.with_overrides(overrides)
      runs.append((i, variant.raw, self.output_path("run_%03d" % i)))
    loop = asyncio.get_running_loop()
    logger.info("sweep: %d runs of %s on %d workers", len(runs), command,
                self.workers)
    with futures.ProcessPoolExecutor(max_workers=self.workers) as pool:
      tasks = [loop.run_in_executor(pool, _run_isolated, command, raw, out)
               for _, raw, out in runs]
      outcomes = await asyncio.gather(*tasks)
    rows = []
    for (i, _, out), outcome in zip(runs, outcomes):
      rows.append(dict(outcome, run=i, directory=os.path.basename(out)))
    reports.write_dict_rows(
      self.output_path(SWEEP_INDEX),
      ["run", "directory", "config_hash", "passed", "exit"], rows,
      config.config_hash)
    return rows

  def sweep(self, config, command="simulate"):
    """Synchronous wrapper around sweep_async."""
    return asyncio.run(self.sweep_async(config, command))


def _as_config(config):
  if isinstance(config, config_mod.ExperimentConfig):
    return config
  return config_mod.load_config(config)


def _run_isolated(command, raw, out_dir):
  """Worker entry point: one run end to end in a fresh Lab."""
  lab = Lab(out_dir, workers=1)
  config = config_mod.parse_config(raw)
  try:
    result = lab.run(command, config)
  except exceptions.WavechargeError as e:
    logger.error("run in %s failed: %s", out_dir, e)
    return {"config_hash": config.config_hash, "passed": False, "exit": 2}
  return {"config_hash": config.config_hash, "passed": result.passed,
          "exit": result.exit_status}


from wavecharge.commands import boost_check
from wavecharge.commands import boundstates
from wavecharge.commands import norms
from wavecharge.commands import ode_shoot
from wavecharge.commands import scatter
from wavecharge.commands import simulate


def make_lab_method(func):
  """
    Provides a single entry point for all lab methods: the config may be
    given as a path, the run is logged, and the result is written to
    <out>/<command>/result.json.
    """

  @functools.wraps(func)
  def wrapper(lab, config, **kwargs):
    config = _as_config(config)
    logger.info("%s: config %s", func.__name__, config.config_hash)
    result = func(lab, config, **kwargs)
    path = lab.output_path(result.command, RESULT_FILE)
    reports.write_json(path, result.describe())
    logger.info("%s: %s, %d checks, %d failed", func.__name__,
                "passed" if result.passed else "FAILED", len(result.checks),
                len(result.failed))
    return result

  return wrapper


Lab.simulate = make_lab_method(simulate)
Lab.boundstates = make_lab_method(boundstates)
Lab.boost_check = make_lab_method(boost_check)
Lab.norms = make_lab_method(norms)
Lab.ode_shoot = make_lab_method(ode_shoot)
Lab.scatter = make_lab_method(scatter)
