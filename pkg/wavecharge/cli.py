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

"""Command-line entry point: ``wavecharge <subcommand> --config <path>
--out <dir> [--workers N]``.

Exit status 0 when every enabled check passes, 1 when some check fails and
2 on configuration or numerical errors.
"""

import argparse
import logging
import os
import sys

import wavecharge
from wavecharge import commands
from wavecharge import exceptions
from wavecharge import lab as lab_mod
from wavecharge import reports

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "WAVECHARGE_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2


def _add_common(parser):
  parser.add_argument("--config", required=True,
                      help="experiment config (JSON or YAML)")
  parser.add_argument("--out", required=True, help="output directory")
  parser.add_argument("--workers", type=int, default=None,
                      help="worker processes (default: $%s or CPU count)"
                      % lab_mod.WORKERS_ENV)
  parser.add_argument("--log-level", default=None,
                      help="logging level (default: $%s or WARNING)"
                      % LOG_LEVEL_ENV)


def build_parser():
  parser = argparse.ArgumentParser(
    prog="wavecharge",
    description="Numerical laboratory for wave equations with moving "
                "potentials.")
  parser.add_argument("--version", action="version",
                      version="%(prog)s " + wavecharge.__version__)
  sub = parser.add_subparsers(dest="command", required=True)
  for name, func in commands.COMMANDS.items():
    doc = (func.__doc__ or "").strip().splitlines()
    _add_common(sub.add_parser(name, help=doc[0] if doc else None))
  sweep = sub.add_parser("sweep", help="run a subcommand per sweep entry")
  _add_common(sweep)
  sweep.add_argument("--command", dest="sweep_command", default="simulate",
                     choices=sorted(commands.COMMANDS),
                     help="subcommand run per sweep entry")
  collate = sub.add_parser("collate", help="concatenate reports")
  collate.add_argument("inputs", nargs="+", help="report paths or globs")
  collate.add_argument("--out", required=True, help="collated CSV path")
  collate.add_argument("--log-level", default=None)
  return parser


def _configure_logging(level):
  level = (level or os.environ.get(LOG_LEVEL_ENV) or "WARNING").upper()
  logging.basicConfig(level=level, format=LOG_FORMAT)


def _report(result):
  for check in result.failed:
    detail = check.get("detail") or "value=%r limit=%r" % (check["value"],
                                                           check["limit"])
    print("FAILED %s: %s" % (check["name"], detail), file=sys.stderr)
  return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def main(argv=None):
  parser = build_parser()
  args = parser.parse_args(argv)
  try:
    _configure_logging(args.log_level)
  except ValueError as e:
    parser.error(str(e))
  try:
    if args.command == "collate":
      reports.collate_reports(args.inputs, args.out)
      return EXIT_OK
    lab = lab_mod.Lab(args.out, args.workers)
    if args.command == "sweep":
      rows = lab.sweep(args.config, args.sweep_command)
      return max((row["exit"] for row in rows), default=EXIT_OK)
    return _report(lab.run(args.command, args.config))
  except exceptions.WavechargeError as e:
    print("wavecharge: %s" % e, file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
  sys.exit(main())
