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

"""Dense complex linear algebra: Kronecker products, norms and matrix
exponentials by scaling and squaring."""

import collections
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from ._core import COMPLEX_BYTES, ContractViolation, NumericalFailure, check_budget
from .utils import complex_gaussian, random_engine

logger = logging.getLogger(__name__)

EXPM_METHODS = ("taylor_ss", "pade_ss")

DEFAULT_ORDERS = {"taylor_ss": 16, "pade_ss": 6}

# Q_m is refused when its condition number exceeds this
_PADE_MAX_CONDITION = 1.0e12

NormEstimate = collections.namedtuple("NormEstimate", ["value", "converged", "iterations"])


@dataclass(frozen=True)
class ExpmConfig:
    """
    Selects and configures the matrix exponential.

    Args:
        method: `"taylor_ss"` (truncated Taylor series) or `"pade_ss"`
            (diagonal Padé approximant), both with scaling and squaring.
        order: Taylor truncation order or Padé degree. `None` picks 16
            for Taylor and 6 for Padé.
        scaling: Number of squarings. `None` picks the smallest `s` with
            `||M||_F / 2**s <= 1`.
    """

    method: str = "taylor_ss"
    order: Optional[int] = None
    scaling: Optional[int] = None

    def __post_init__(self):
        if self.method not in EXPM_METHODS:
            raise ContractViolation(
                "unknown expm method {!r}, expected one of {}".format(
                    self.method, EXPM_METHODS
                )
            )
        if self.order is not None and int(self.order) < 1:
            raise ContractViolation("expm order must be >= 1, got {}".format(self.order))
        if self.scaling is not None and int(self.scaling) < 0:
            raise ContractViolation(
                "expm scaling must be >= 0, got {}".format(self.scaling)
            )

    @property
    def effective_order(self):
        return DEFAULT_ORDERS[self.method] if self.order is None else int(self.order)


def as_matrix(m, name="matrix"):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ContractViolation(
            "{} must be a non-empty 2d array, got shape {}".format(name, m.shape)
        )
    return m


def _require_square(m, name="matrix"):
    if m.shape[0] != m.shape[1]:
        raise ContractViolation("{} must be square, got shape {}".format(name, m.shape))


def _require_finite(m, what):
    if not np.all(np.isfinite(m)):
        raise NumericalFailure("{} produced non-finite entries".format(what))
    return m


def kron(a, b, budget=None):
    """
    Kronecker (tensor) product of two matrices.

    The entry `result[i*p + k, j*q + l]` equals `a[i, j] * b[k, l]`, where
    `b` has shape `(p, q)`.

    Args:
        a: Left factor.
        b: Right factor.
        budget: Memory budget in bytes for the result, `None` for the
            default budget.

    Examples:
        The identity factor produces a block-diagonal matrix.

        ```python
        >>> import numpy as np
        >>> from lindket.linalg import kron
        >>> kron(np.eye(2), [[1, 2], [3, 4]]).shape
        (4, 4)
        ```
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    check_budget(COMPLEX_BYTES * rows * cols, budget, "kron result {}x{}".format(rows, cols))
    return np.kron(a, b)


def frobenius_norm(m):
    """Frobenius norm `sqrt(sum |m_ij|^2)` of a matrix (or Euclidean norm of
    a vector)."""
    return float(np.linalg.norm(np.asarray(m, dtype=complex).ravel()))


def _default_scaling(m):
    norm = frobenius_norm(m)
    if norm <= 1.0:
        return 0
    return max(0, int(math.ceil(math.log2(norm))))


def _taylor(a, order):
    result = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, order + 1):
        term = term @ a / k
        result += term
    return result


def pade_coefficients(degree):
    r"""
    Coefficients :math:`c_k = (2m-k)!\,m! / ((2m)!\,(m-k)!\,k!)` of the
    diagonal Padé numerator :math:`P_m(M) = \sum_k c_k M^k`.
    """
    coefficients = [1.0]
    for k in range(1, degree + 1):
        coefficients.append(
            coefficients[-1] * (degree - k + 1) / (k * (2 * degree - k + 1))
        )
    return coefficients


def _pade(a, degree):
    coefficients = pade_coefficients(degree)
    eye = np.eye(a.shape[0], dtype=complex)
    numerator = coefficients[0] * eye
    denominator = coefficients[0] * eye
    power = eye
    for k in range(1, degree + 1):
        power = power @ a
        numerator = numerator + coefficients[k] * power
        denominator = denominator + ((-1) ** k) * coefficients[k] * power
    if np.linalg.cond(denominator) > _PADE_MAX_CONDITION:
        raise NumericalFailure(
            "Pade denominator Q_{} is numerically singular; "
            "use the taylor_ss method instead".format(degree)
        )
    try:
        return scipy.linalg.solve(denominator, numerator)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as err:
        raise NumericalFailure(
            "Pade denominator Q_{} is singular ({}); "
            "use the taylor_ss method instead".format(degree, err)
        )


def expm(m, cfg=None):
    r"""
    Matrix exponential :math:`e^M` by scaling and squaring,
    :math:`e^M = (e^{M/2^s})^{2^s}`.

    The scaled exponential is either the truncated Taylor series
    (`taylor_ss`) or the diagonal Padé approximant
    :math:`R_{m,m} = Q_m^{-1} P_m` with :math:`Q_m(M) = P_m(-M)` (`pade_ss`).

    Args:
        m: Square matrix.
        cfg: `ExpmConfig`, `None` for the default Taylor configuration.

    Raises:
        NumericalFailure: The Padé denominator is singular or the result is
            not finite.

    Examples:
        Exponential of a rotation generator.

        ```python
        >>> import numpy as np
        >>> from lindket.linalg import expm, ExpmConfig
        >>> r = expm([[0, np.pi / 2], [-np.pi / 2, 0]], ExpmConfig("pade_ss"))
        >>> np.allclose(r, [[0, 1], [-1, 0]])
        True
        ```
    """
    cfg = ExpmConfig() if cfg is None else cfg
    m = as_matrix(m, "m")
    _require_square(m, "m")

    scaling = _default_scaling(m) if cfg.scaling is None else int(cfg.scaling)
    order = cfg.effective_order
    logger.debug("expm %s order=%d scaling=%d dim=%d", cfg.method, order, scaling, m.shape[0])

    a = m / (2.0 ** scaling)
    if cfg.method == "taylor_ss":
        result = _taylor(a, order)
    else:
        result = _pade(a, order)
    for _ in range(scaling):
        result = result @ result
    return _require_finite(result, "expm")


def spectral_norm(m, iters=1000, tol=1e-12):
    r"""
    Largest singular value of `m` estimated by power iteration on
    :math:`m^\dagger m`.

    Args:
        m: Rectangular or square matrix.
        iters: Maximum number of iterations (>= 1).
        tol: Relative change between successive estimates accepted as
            convergence.

    Returns:
        NormEstimate: `(value, converged, iterations)`. When `converged` is
        false `value` is the best estimate after `iters` iterations.
    """
    m = as_matrix(m, "m")
    if int(iters) < 1:
        raise ContractViolation("iters must be >= 1, got {}".format(iters))
    if not np.any(m):
        return NormEstimate(0.0, True, 0)

    # fixed stream: the estimate is a pure function of m
    v = complex_gaussian(random_engine(0), m.shape[1])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for it in range(1, int(iters) + 1):
        w = m @ v
        new_estimate = float(np.linalg.norm(w))
        v = m.conj().T @ w
        norm_v = np.linalg.norm(v)
        if norm_v == 0.0:
            return NormEstimate(new_estimate, True, it)
        v /= norm_v
        if abs(new_estimate - estimate) <= tol * new_estimate:
            return NormEstimate(new_estimate, True, it)
        estimate = new_estimate

    logger.warning(
        "spectral_norm did not converge in %d iterations (estimate %.6g)", iters, estimate
    )
    return NormEstimate(estimate, False, int(iters))
