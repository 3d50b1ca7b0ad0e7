# Copyright 2024 The lindket Authors - All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

DEFAULT_MEMORY_BUDGET = 4 * 2 ** 30

# bytes per complex128 entry
COMPLEX_BYTES = 16


class LindketError(Exception):
    """Base class of every error raised by lindket."""


class ContractViolation(LindketError, ValueError):
    """An argument violates the documented preconditions of an operation."""


class ConfigError(LindketError, ValueError):
    """A configuration document could not be parsed or validated.

    Args:
        message: Human readable description.
        field: Dotted path of the offending field, if known.
        line: 1-based line number in the source document, if known.
    """

    def __init__(self, message, field=None, line=None):
        prefix = ""
        if line is not None:
            prefix += "line {}: ".format(line)
        if field is not None:
            prefix += "{}: ".format(field)
        super(ConfigError, self).__init__(prefix + message)
        self.field = field
        self.line = line


class MemoryBudgetError(LindketError, MemoryError):
    """A dense allocation would exceed the configured memory budget.

    Args:
        what: Name of the object that was about to be allocated.
        required_bytes: Bytes the allocation needs.
        budget_bytes: Bytes allowed by the budget.
        hint: Optional suggestion appended to the message.
    """

    def __init__(self, what, required_bytes, budget_bytes, hint=None):
        message = "OutOfMemoryError: {} requires {} bytes, budget is {} bytes".format(
            what, required_bytes, budget_bytes
        )
        if hint:
            message += " ({})".format(hint)
        super(MemoryBudgetError, self).__init__(message)
        self.what = what
        self.required_bytes = required_bytes
        self.budget_bytes = budget_bytes


class NumericalFailure(LindketError, ArithmeticError):
    """A numerical kernel produced an unusable result."""


class DegenerateStateError(NumericalFailure):
    """A state norm collapsed to (numerically) zero."""


class IntegrationError(NumericalFailure):
    """A stepper failed inside a multi-step evolution.

    Args:
        message: Description of the failure.
        step: 0-based index of the failing step.
    """

    def __init__(self, message, step):
        super(IntegrationError, self).__init__(
            "step {}: {}".format(step, message)
        )
        self.step = step


class StepSizeError(LindketError):
    """The per-step jump probability of a trajectory is too large."""


def resolve_budget(budget):
    return DEFAULT_MEMORY_BUDGET if budget is None else int(budget)


def check_budget(required_bytes, budget=None, what="allocation", hint=None):
    """
    Raises `MemoryBudgetError` iff `required_bytes` exceeds the budget.

    Args:
        required_bytes: Size of the planned allocation.
        budget: Budget in bytes, `None` for `DEFAULT_MEMORY_BUDGET`.
        what: Name used in the error message.
        hint: Optional suggestion for the error message.

    Returns:
        int: The resolved budget.
    """
    budget = resolve_budget(budget)
    if required_bytes > budget:
        raise MemoryBudgetError(what, int(required_bytes), budget, hint)
    return budget
