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

"""Steppers for the Lindblad master equation and the multi-step driver."""

import collections
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from ._core import ContractViolation, IntegrationError, LindketError, NumericalFailure
from .linalg import ExpmConfig, expm
from .lindblad import (
    FORMS,
    apply_lindbladian,
    build_superoperator,
    devectorize,
    lindbladian_norm,
    vectorize,
)

logger = logging.getLogger(__name__)

METHODS = ("taylor_series", "vectorization_full", "vectorization_taylor", "rk4", "adaptive_rk")

VECTORIZED_METHODS = ("vectorization_full", "vectorization_taylor")

TRACE_DRIFT_WARNING = 1e-10

ErrorBound = collections.namedtuple("ErrorBound", ["absolute_factor", "relative"])

OrderChoice = collections.namedtuple("OrderChoice", ["order", "reached"])

Sample = collections.namedtuple("Sample", ["t", "rho", "report", "trace_drift"])


@dataclass(frozen=True)
class IntegratorSpec:
    """
    Selects and configures a stepper.

    Args:
        method: One of `taylor_series`, `vectorization_full`,
            `vectorization_taylor`, `rk4` or `adaptive_rk`.
        dt: Internal time step (> 0).
        order: Number of retained Taylor terms n (Taylor methods only).
        error_target: If set, the Taylor order is chosen as the smallest n
            whose relative truncation bound is below this value.
        max_order: Upper limit for the adaptive order choice.
        form: Evaluation form of the generator, `standard` or `effective`.
        expm: Matrix exponential used by `vectorization_full`.
        rtol: Relative tolerance of `adaptive_rk`.
        atol: Absolute tolerance of `adaptive_rk`.
    """

    method: str = "taylor_series"
    dt: float = 0.1
    order: int = 10
    error_target: Optional[float] = None
    max_order: int = 30
    form: str = "standard"
    expm: ExpmConfig = field(default_factory=ExpmConfig)
    rtol: float = 1e-10
    atol: float = 1e-12

    def __post_init__(self):
        if self.method not in METHODS:
            raise ContractViolation(
                "unknown method {!r}, expected one of {}".format(self.method, METHODS)
            )
        if not self.dt > 0:
            raise ContractViolation("dt must be positive, got {}".format(self.dt))
        if self.uses_order and int(self.order) < 1:
            raise ContractViolation("order must be >= 1, got {}".format(self.order))
        if self.error_target is not None and not self.error_target > 0:
            raise ContractViolation(
                "error_target must be positive, got {}".format(self.error_target)
            )
        if int(self.max_order) < 1:
            raise ContractViolation("max_order must be >= 1, got {}".format(self.max_order))
        if self.form not in FORMS:
            raise ContractViolation("unknown form {!r}, expected one of {}".format(self.form, FORMS))

    @property
    def uses_order(self):
        return self.method in ("taylor_series", "vectorization_taylor")

    @property
    def label(self):
        """Short human readable name, e.g. `TaylorSeries10`."""
        if self.method == "taylor_series":
            return "TaylorSeries{}".format(self.order)
        if self.method == "vectorization_full":
            return "Vectorization1"
        if self.method == "vectorization_taylor":
            return "Vectorization2_{}".format(self.order)
        if self.method == "rk4":
            return "RK4"
        return "AdaptiveRK"


@dataclass(frozen=True)
class StepReport:
    """
    Diagnostics of one integration step.

    Args:
        trace_drift: Change of the trace over the step.
        error_bound: Relative truncation bound of the step, present iff the
            Lindbladian norm was supplied or estimated.
        terms_used: Retained Taylor terms (0 for non-series steppers).
        apply_count: Number of generator applications (direct or
            superoperator-vector products; right-hand-side evaluations for
            `adaptive_rk`).
    """

    trace_drift: float
    error_bound: Optional[float] = None
    terms_used: int = 0
    apply_count: int = 0


def _check_rho(model, rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (model.dim, model.dim):
        raise ContractViolation(
            "density matrix has shape {}, model dimension is {}".format(rho.shape, model.dim)
        )
    return rho


def _check_step(dt, n=0):
    if dt < 0:
        raise ContractViolation("dt must be >= 0, got {}".format(dt))
    if n < 0:
        raise ContractViolation("n must be >= 0, got {}".format(n))


def _check_superop(superop, v):
    superop = np.asarray(superop, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if superop.ndim != 2 or superop.shape[0] != superop.shape[1]:
        raise ContractViolation("superoperator must be square, got {}".format(superop.shape))
    if v.shape != (superop.shape[0],):
        raise ContractViolation(
            "vector of shape {} does not match superoperator {}".format(v.shape, superop.shape)
        )
    return superop, v


def _trace_drift(before, after):
    return float(np.real(np.trace(after) - np.trace(before)))


def truncation_error_bound(norm_L, t, n):
    r"""
    Upper bounds on the truncation error of the order-n Taylor series of
    :math:`e^{\mathcal{L}t}`.

    With :math:`\Delta = \|\mathcal{L}\|t` both values equal
    :math:`e^{\Delta}\Delta^{n+1}/(n+1)!`; the absolute bound is this factor
    times :math:`\|\rho(0)\|`. The evaluation is done in log-space.

    Args:
        norm_L: Lindbladian norm (>= 0).
        t: Step length (>= 0).
        n: Number of retained terms (>= 0).

    Returns:
        ErrorBound: `(absolute_factor, relative)`.

    Examples:
        ```python
        >>> from lindket.integrators import truncation_error_bound
        >>> round(truncation_error_bound(1.0, 1.0, 10).relative * 1e8, 3)
        6.81
        ```
    """
    if norm_L < 0 or t < 0 or n < 0:
        raise ContractViolation(
            "norm_L, t and n must be non-negative, got {}, {}, {}".format(norm_L, t, n)
        )
    delta = float(norm_L) * float(t)
    if delta == 0.0:
        return ErrorBound(0.0, 0.0)
    log_bound = delta + (n + 1) * math.log(delta) - math.lgamma(n + 2)
    value = math.exp(log_bound) if log_bound < 700.0 else math.inf
    return ErrorBound(value, value)


def choose_order(norm_L, dt, error_target, n_max=30):
    """
    Smallest number of retained terms whose relative truncation bound does
    not exceed `error_target`.

    Returns:
        OrderChoice: `(order, reached)`; when no n <= n_max reaches the
        target, `order` is `n_max` and `reached` is false.
    """
    if not error_target > 0:
        raise ContractViolation("error_target must be positive, got {}".format(error_target))
    for n in range(0, int(n_max) + 1):
        if truncation_error_bound(norm_L, dt, n).relative <= error_target:
            return OrderChoice(n, True)
    logger.warning(
        "error target %.3g not reachable with n <= %d (norm %.4g, dt %.4g)",
        error_target,
        n_max,
        norm_L,
        dt,
    )
    return OrderChoice(int(n_max), False)


def cost_matched_threshold(m):
    r"""
    Largest internal step :math:`\delta t` for which
    :math:`\Delta t^{n+1} < \delta t^4` holds with :math:`\Delta t = m\delta t`
    and :math:`n = 4m`, i.e. :math:`m^{-(4m+1)/(4m-3)}`.
    """
    if m < 1:
        raise ContractViolation("m must be >= 1, got {}".format(m))
    return float(m) ** (-(4.0 * m + 1.0) / (4.0 * m - 3.0))


def taylor_step(model, rho, dt, n, norm_L=None, form="standard"):
    r"""
    One step of the Taylor series method: returns
    :math:`\sum_{k=0}^{n} \frac{dt^k}{k!}\mathcal{L}^k\rho` computed by n
    successive applications of the generator to the running term, without
    vectorizing the density matrix.

    Args:
        model: The `LindbladModel`.
        rho: Density matrix at the start of the step.
        dt: Step length (>= 0).
        n: Number of retained terms (>= 0).
        norm_L: Optional Lindbladian norm used to fill in the error bound.
        form: Evaluation form of the generator.

    Returns:
        (numpy.ndarray, StepReport): The new density matrix and the report.
    """
    rho = _check_rho(model, rho)
    _check_step(dt, n)
    term = rho
    result = rho.copy()
    for k in range(1, n + 1):
        term = apply_lindbladian(model, term, form) * (dt / k)
        result += term
    bound = None if norm_L is None else truncation_error_bound(norm_L, dt, n).relative
    report = StepReport(_trace_drift(rho, result), bound, n, n)
    return result, report


def vec_full_step(superop, v, dt, cfg=None, cache=None):
    r"""
    Vectorization method #1: returns :math:`e^{\mathcal{L}dt}|\rho\rangle\rangle`.

    Args:
        superop: d^2 x d^2 superoperator.
        v: Column-stacked density matrix.
        dt: Step length.
        cfg: `ExpmConfig` for the propagator.
        cache: Optional dict reused across calls; the propagator is stored
            under `(dt, cfg)` and reused while `superop` is the same object.
    """
    superop, v = _check_superop(superop, v)
    _check_step(dt)
    cfg = ExpmConfig() if cfg is None else cfg
    key = (float(dt), cfg)
    propagator = None
    if cache is not None:
        entry = cache.get(key)
        if entry is not None and entry[0] is superop:
            logger.debug("propagator cache hit for dt=%g", dt)
            propagator = entry[1]
    if propagator is None:
        propagator = expm(superop * dt, cfg)
        if cache is not None:
            cache[key] = (superop, propagator)
    return propagator @ v


def vec_taylor_step(superop, v, dt, n):
    r"""
    Vectorization method #2: returns
    :math:`\sum_{k=0}^{n} \frac{dt^k}{k!}\mathcal{L}^k|\rho\rangle\rangle`
    through n matrix-vector products.
    """
    superop, v = _check_superop(superop, v)
    _check_step(dt, n)
    term = v
    result = v.copy()
    for k in range(1, n + 1):
        term = (superop @ term) * (dt / k)
        result += term
    return result


def rk4_step(model, rho, dt, form="standard"):
    r"""
    One classic fourth-order Runge-Kutta step,
    :math:`\rho + \frac{dt}{6}(k_1 + 2k_2 + 2k_3 + k_4)`, using exactly four
    generator evaluations.
    """
    rho = _check_rho(model, rho)
    _check_step(dt)
    k1 = apply_lindbladian(model, rho, form)
    k2 = apply_lindbladian(model, rho + 0.5 * dt * k1, form)
    k3 = apply_lindbladian(model, rho + 0.5 * dt * k2, form)
    k4 = apply_lindbladian(model, rho + dt * k3, form)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def adaptive_step(model, rho, dt, rtol=1e-10, atol=1e-12, form="standard"):
    """
    Integrates over `dt` with scipy's adaptive RK45 (used as a reference
    solver).

    Returns:
        (numpy.ndarray, int): The new density matrix and the number of
        right-hand-side evaluations.
    """
    rho = _check_rho(model, rho)
    _check_step(dt)
    if dt == 0:
        return rho.copy(), 0
    shape = rho.shape

    def rhs(t, y):
        return apply_lindbladian(model, y.reshape(shape), form).ravel()

    res = solve_ivp(rhs, (0.0, dt), rho.ravel(), method="RK45", rtol=rtol, atol=atol)
    if not res.success:
        raise NumericalFailure("adaptive integration failed: {}".format(res.message))
    return res.y[:, -1].reshape(shape), int(res.nfev)


class TimeEvolution(object):
    """
    Advances a density matrix step by step with the stepper selected by an
    `IntegratorSpec`.

    Args:
        model: The `LindbladModel`.
        rho0: Initial density matrix.
        spec: The `IntegratorSpec`.
        norm_L: Lindbladian norm for error bounds. When `spec.error_target`
            is set and no norm is supplied it is estimated by random probing.
        budget: Memory budget for the vectorization methods.
        t0: Initial time.

    Examples:
        Evolve the decaying two-level system for one unit of time.

        ```python
        >>> import numpy as np
        >>> import lindket as lk
        >>> model = lk.systems.two_level_model(lk.systems.TwoLevelSpec(rabi=0.0))
        >>> driver = lk.integrators.TimeEvolution(
        ...     model, np.diag([0, 1]), lk.integrators.IntegratorSpec(dt=0.1))
        >>> for step in driver.iter(n_iter=10):
        ...     pass
        >>> round(driver.state[1, 1].real, 6)
        0.606531
        ```
    """

    def __init__(self, model, rho0, spec, norm_L=None, budget=None, t0=0.0):
        rho0 = _check_rho(model, rho0)
        self._model = model
        self._spec = spec
        self._t = float(t0)
        self._steps = 0
        self._norm_L = norm_L
        self._order = int(spec.order)

        if spec.error_target is not None and spec.uses_order:
            if self._norm_L is None:
                self._norm_L = lindbladian_norm(model, "random_probe")
            choice = choose_order(self._norm_L, spec.dt, spec.error_target, spec.max_order)
            self._order = choice.order
            logger.info(
                "adaptive order %d for error target %.3g (norm %.4g)",
                self._order,
                spec.error_target,
                self._norm_L,
            )

        if spec.method in VECTORIZED_METHODS:
            self._superop = build_superoperator(model, budget)
            self._state = vectorize(rho0).copy()
            self._cache = {}
        else:
            self._superop = None
            self._state = rho0.copy()

    @property
    def t(self):
        """Current time."""
        return self._t

    @property
    def order(self):
        """Number of retained Taylor terms in use."""
        return self._order

    @property
    def norm_L(self):
        return self._norm_L

    @property
    def state(self):
        """Copy of the current density matrix."""
        if self._superop is not None:
            return devectorize(self._state).copy()
        return self._state.copy()

    def step(self, dt=None):
        """
        Performs one step of length `dt` (default: `spec.dt`).

        Returns:
            StepReport: Diagnostics of the step.

        Raises:
            IntegrationError: The stepper failed; `step` holds the index.
        """
        spec = self._spec
        dt = spec.dt if dt is None else float(dt)
        try:
            report = self._step(dt)
        except LindketError as err:
            raise IntegrationError(str(err), self._steps) from err
        if abs(report.trace_drift) > TRACE_DRIFT_WARNING:
            logger.warning(
                "trace drift %.3g at step %d (%s)", report.trace_drift, self._steps, spec.label
            )
        self._steps += 1
        self._t += dt
        return report

    def _bound(self, dt):
        if self._norm_L is None:
            return None
        return truncation_error_bound(self._norm_L, dt, self._order).relative

    def _step(self, dt):
        spec = self._spec
        method = spec.method
        if method == "taylor_series":
            self._state, report = taylor_step(
                self._model, self._state, dt, self._order, self._norm_L, spec.form
            )
            return report
        if method == "rk4":
            before = self._state
            self._state = rk4_step(self._model, before, dt, spec.form)
            return StepReport(_trace_drift(before, self._state), None, 0, 4)
        if method == "adaptive_rk":
            before = self._state
            self._state, nfev = adaptive_step(
                self._model, before, dt, spec.rtol, spec.atol, spec.form
            )
            return StepReport(_trace_drift(before, self._state), None, 0, nfev)

        before = devectorize(self._state)
        if method == "vectorization_full":
            self._state = vec_full_step(self._superop, self._state, dt, spec.expm, self._cache)
            report = StepReport(0.0, None, 0, 1)
        else:
            self._state = vec_taylor_step(self._superop, self._state, dt, self._order)
            report = StepReport(0.0, self._bound(dt), self._order, self._order)
        drift = _trace_drift(before, devectorize(self._state))
        return StepReport(drift, report.error_bound, report.terms_used, report.apply_count)

    def advance(self, n_steps=1, dt=None):
        """Performs `n_steps` steps and returns the report of the last one."""
        report = None
        for _ in range(n_steps):
            report = self.step(dt)
        return report

    def iter(self, n_iter=None, dt=None):
        """
        Returns a generator which advances the time evolution by one step,
        yielding after every step.

        Args:
            n_iter: The number of steps or None, for no limit.
            dt: The step length, default is `spec.dt`.

        Yields:
            int: The current step.
        """
        for i in itertools.count():
            if n_iter is not None and i >= n_iter:
                return
            self.step(dt)
            yield i


def step_count(t_final, dt):
    """
    Number of full steps of length `dt` before `t_final` and the length of
    the trailing partial step (0 if `t_final` lies on the grid).
    """
    n_full = int(math.floor(t_final / dt + 1e-9))
    remainder = t_final - n_full * dt
    if remainder <= 1e-12 * max(1.0, t_final):
        remainder = 0.0
    return n_full, remainder


def evolve(model, rho0, spec, t_final, sample_every=1, norm_L=None, budget=None):
    """
    Evolves `rho0` up to `t_final` and samples the trajectory.

    The internal step is `spec.dt`; a sample is emitted every
    `sample_every` steps and at `t_final`, which may require a trailing
    shorter step.

    Args:
        model: The `LindbladModel`.
        rho0: Initial density matrix.
        spec: The `IntegratorSpec`.
        t_final: Final time (>= 0).
        sample_every: Sampling stride in internal steps (>= 1).
        norm_L: Optional Lindbladian norm for error bounds.
        budget: Memory budget for the vectorization methods.

    Returns:
        list of Sample: `(t, rho, report, trace_drift)` tuples, where
        `report` describes the last step before the sample and
        `trace_drift` is the cumulative trace change since `t = 0`.

    Raises:
        IntegrationError: A step failed; the step index is attached.
    """
    if t_final < 0:
        raise ContractViolation("t_final must be >= 0, got {}".format(t_final))
    if int(sample_every) < 1:
        raise ContractViolation("sample_every must be >= 1, got {}".format(sample_every))
    rho0 = _check_rho(model, rho0)
    driver = TimeEvolution(model, rho0, spec, norm_L=norm_L, budget=budget)
    trace0 = np.trace(rho0)

    samples = [Sample(0.0, driver.state, StepReport(0.0), 0.0)]
    n_full, remainder = step_count(t_final, spec.dt)
    total = n_full + (1 if remainder > 0 else 0)
    for k in range(1, total + 1):
        if k <= n_full:
            report = driver.step()
            t = k * spec.dt
        else:
            report = driver.step(remainder)
            t = float(t_final)
        if k % int(sample_every) == 0 or k == total:
            rho = driver.state
            drift = float(np.real(np.trace(rho) - trace0))
            samples.append(Sample(t, rho, report, drift))
            logger.debug("t=%.6g trace drift %.3g", t, drift)
    return samples
