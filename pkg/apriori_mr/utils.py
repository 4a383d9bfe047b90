# -*- coding: utf-8 -*-
# Copyright 2024 The apriori-mr Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import json
from logging import LoggerAdapter
from typing import Any, MutableMapping, Tuple

import yaml
from twisted.internet.task import Clock

from apriori_mr.exceptions import ConfigException


def advance_clock_to(clock: Clock, when: float) -> None:
    """
    Moves a simulated clock forward to an absolute time and runs every call
    that has become due.

    Args:
        clock: The clock to advance. Never moved backwards.
        when: Absolute simulated time to advance to.
    """
    clock.advance(max(when - clock.seconds(), 0.0))
    # `now + (when - now)` can round to just short of `when`
    if clock.seconds() < when:
        clock.rightNow = when
        clock.advance(0)


class JobLoggerAdapter(LoggerAdapter):
    def process(
        self, msg: str, kwargs: MutableMapping[str, Any]
    ) -> Tuple[str, MutableMapping[str, Any]]:
        assert self.extra
        return f"[{self.extra['job']}] {msg}", kwargs


def _reject_invalid_json(val: Any) -> None:
    """Do not allow Infinity, -Infinity, or NaN values in JSON."""
    raise ValueError(f"Invalid JSON value: {val!r}")


# a custom JSON decoder which will reject Python extensions to JSON.
json_decoder = json.JSONDecoder(parse_constant=_reject_invalid_json)


def load_structured_file(path: str) -> Any:
    """
    Loads a cluster or placement file. `.yaml` / `.yml` files are read as YAML,
    anything else as strict JSON.

    Raises:
        ConfigException: if the file does not parse.
    """
    with open(path, encoding="utf-8") as file_handle:
        text = file_handle.read()
    try:
        if path.endswith((".yaml", ".yml")):
            return yaml.safe_load(text)
        return json_decoder.decode(text)
    except (ValueError, yaml.YAMLError) as e:
        raise ConfigException(f"Could not parse {path}: {e}") from e
