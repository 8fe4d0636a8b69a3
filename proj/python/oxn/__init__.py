# Copyright 2026 The OXN Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Python access to the oxn experiment engine."""

import json
import os

from oxn import _oxn
from oxn._oxn import REPORT_SCHEMA_VERSION, ConfigError, Error, RuntimeError  # noqa: A004

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "ConfigError",
    "Error",
    "RuntimeError",
    "canonical",
    "compare",
    "fault_coverage",
    "overall_fault_observability",
    "overhead",
    "run",
    "spec_digest",
    "validate",
    "visibility",
]


def _text(experiment):
    # Accepts a path or the YAML document itself.
    if isinstance(experiment, os.PathLike) or (
        isinstance(experiment, str) and "\n" not in experiment and os.path.exists(experiment)
    ):
        with open(experiment, encoding="utf-8") as f:
            return f.read()
    return experiment


def validate(experiment):
    return _oxn.validate(_text(experiment))


def canonical(experiment):
    return _oxn.canonical(_text(experiment))


def spec_digest(experiment):
    return _oxn.spec_digest(_text(experiment))


def run(experiment, parallel=1, frozen_clock=False):
    """Runs an experiment and returns the report as a dict."""
    return json.loads(_oxn.run(_text(experiment), parallel, frozen_clock))


def compare(a, b):
    return json.loads(_oxn.compare(json.dumps(a), json.dumps(b)))


def visibility(df, alpha):
    return _oxn.visibility(df, alpha)


def fault_coverage(visible):
    """FC as an unreduced (k, n) pair, e.g. (1, 3)."""
    return _oxn.fault_coverage(list(visible))


def overall_fault_observability(coverages):
    """OFO from (k, n) coverage pairs, as an unreduced (k, l) pair."""
    return _oxn.overall_fault_observability([tuple(c) for c in coverages])


def overhead(baseline_total, alt_total):
    return _oxn.overhead(baseline_total, alt_total)
