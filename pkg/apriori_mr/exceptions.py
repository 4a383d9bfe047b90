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
from typing import Optional


class AprioriMrException(Exception):
    pass


class ItemsetException(AprioriMrException):
    pass


class InputFormatException(AprioriMrException):
    """
    Raised when a transaction line (raw or weighted) cannot be parsed.
    """

    def __init__(self, *args: object, line_number: Optional[int] = None) -> None:
        super().__init__(*args)
        self.line_number = line_number

    def __str__(self) -> str:
        message = super().__str__()
        if self.line_number is None:
            return message
        return f"line {self.line_number}: {message}"


class ConfigException(AprioriMrException):
    pass


class PlacementException(AprioriMrException):
    pass


class SchedulingException(AprioriMrException):
    pass


class JobFailedException(AprioriMrException):
    """
    A map, combine or reduce function raised while a simulated job was running.
    The original error is chained as the cause.
    """

    def __init__(self, *args: object, job_name: str, task_id: str) -> None:
        super().__init__(*args)
        self.job_name = job_name
        self.task_id = task_id

    def __str__(self) -> str:
        return f"[{self.job_name}/{self.task_id}] {super().__str__()}"


class OracleException(AprioriMrException):
    pass
