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

"""The Lindblad generator, its vectorized (superoperator) form and norm
estimates."""

import collections
import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from . import linalg
from ._core import COMPLEX_BYTES, ContractViolation, MemoryBudgetError, check_budget
from .utils import complex_gaussian, random_engine

logger = logging.getLogger(__name__)

HERMITIAN_RTOL = 1e-12

FORMS = ("standard", "effective")

NORM_STRATEGIES = ("exact_small", "random_probe")

SAMPLE_SAFETY_FACTOR = 1.2

DEFAULT_NORM_SAMPLES = 32

Diagnostics = collections.namedtuple(
    "Diagnostics", ["trace", "trace_error", "hermiticity_error", "purity", "min_eigenvalue"]
)


def _frozen(m):
    m = np.array(m, dtype=complex)
    m.setflags(write=False)
    return m


def hermiticity_error(m):
    """Relative Frobenius distance `||m - m^dag|| / ||m||` (0 for the zero
    matrix)."""
    norm = linalg.frobenius_norm(m)
    if norm == 0.0:
        return 0.0
    return linalg.frobenius_norm(m - m.conj().T) / norm


@dataclass(frozen=True, eq=False)
class LindbladModel:
    r"""
    Hamiltonian, Lindblad (jump) operators and :math:`\hbar` defining the
    generator

    .. math::
        \mathcal{L}\rho = \frac{i}{\hbar}[\rho, H]
            + \sum_i \left(L_i\rho L_i^\dagger
            - \tfrac{1}{2}\{L_i^\dagger L_i, \rho\}\right).

    The Hamiltonian is checked for Hermiticity at construction. All stored
    matrices are read-only, so models can be shared freely.

    Args:
        hamiltonian: d x d Hermitian matrix.
        jump_ops: Sequence of d x d jump operators.
        hbar: Positive reduced Planck constant (action units).
    """

    hamiltonian: np.ndarray
    jump_ops: Tuple[np.ndarray, ...] = ()
    hbar: float = 1.0
    _cache: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        h = linalg.as_matrix(self.hamiltonian, "hamiltonian")
        if h.shape[0] != h.shape[1]:
            raise ContractViolation("hamiltonian must be square, got {}".format(h.shape))
        if hermiticity_error(h) > HERMITIAN_RTOL:
            raise ContractViolation(
                "hamiltonian is not Hermitian (relative error {:.3g})".format(
                    hermiticity_error(h)
                )
            )
        if not self.hbar > 0:
            raise ContractViolation("hbar must be positive, got {}".format(self.hbar))
        jumps = []
        for i, op in enumerate(self.jump_ops):
            op = linalg.as_matrix(op, "jump_ops[{}]".format(i))
            if op.shape != h.shape:
                raise ContractViolation(
                    "jump_ops[{}] has shape {}, hamiltonian has {}".format(i, op.shape, h.shape)
                )
            jumps.append(_frozen(op))

        object.__setattr__(self, "hamiltonian", _frozen(h))
        object.__setattr__(self, "jump_ops", tuple(jumps))
        object.__setattr__(self, "hbar", float(self.hbar))

        jump_dags = tuple(_frozen(op.conj().T) for op in jumps)
        jump_norms = tuple(_frozen(dag @ op) for dag, op in zip(jump_dags, jumps))
        decay = np.zeros_like(h)
        for n in jump_norms:
            decay = decay + n
        object.__setattr__(
            self,
            "_cache",
            {
                "jump_dags": jump_dags,
                "jump_norms": jump_norms,
                "decay": _frozen(decay),
                "h_eff": _frozen(h - 0.5j * self.hbar * decay),
            },
        )

    @property
    def dim(self):
        """Hilbert space dimension d."""
        return self.hamiltonian.shape[0]

    @property
    def jump_dags(self):
        return self._cache["jump_dags"]

    @property
    def jump_norms(self):
        r"""The products :math:`L_i^\dagger L_i`."""
        return self._cache["jump_norms"]

    @property
    def decay(self):
        r""":math:`\sum_i L_i^\dagger L_i`."""
        return self._cache["decay"]

    @property
    def h_eff(self):
        r"""Effective non-Hermitian Hamiltonian
        :math:`H - \frac{i\hbar}{2}\sum_i L_i^\dagger L_i`."""
        return self._cache["h_eff"]


def _check_rho(model, rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (model.dim, model.dim):
        raise ContractViolation(
            "density matrix has shape {}, model dimension is {}".format(rho.shape, model.dim)
        )
    return rho


def apply_lindbladian(model, rho, form="standard"):
    r"""
    Evaluates :math:`\mathcal{L}\rho` directly on the d x d matrix.

    Args:
        model: The `LindbladModel`.
        rho: d x d matrix (need not be Hermitian or normalized).
        form: `"standard"` sums commutator, sandwich and anticommutator
            terms. `"effective"` evaluates the same generator as
            :math:`-\frac{i}{\hbar}(H_{\rm eff}\rho - \rho H_{\rm eff}^\dagger)
            + \sum_i L_i\rho L_i^\dagger` with fewer matrix products.

    Examples:
        Decay of the excited state of a two-level system.

        ```python
        >>> import numpy as np
        >>> from lindket.lindblad import LindbladModel, apply_lindbladian
        >>> jump = np.sqrt(0.5) * np.array([[0, 1], [0, 0]])
        >>> model = LindbladModel(np.zeros((2, 2)), (jump,))
        >>> apply_lindbladian(model, np.diag([0, 1])).real
        array([[ 0.5,  0. ],
               [ 0. , -0.5]])
        ```
    """
    rho = _check_rho(model, rho)
    prefactor = -1.0j / model.hbar
    if form == "standard":
        h = model.hamiltonian
        result = prefactor * (h @ rho - rho @ h)
        for op, dag, norm in zip(model.jump_ops, model.jump_dags, model.jump_norms):
            result += op @ rho @ dag
            result -= 0.5 * (norm @ rho + rho @ norm)
        return result
    if form == "effective":
        h_eff = model.h_eff
        result = prefactor * (h_eff @ rho - rho @ h_eff.conj().T)
        for op, dag in zip(model.jump_ops, model.jump_dags):
            result += op @ rho @ dag
        return result
    raise ContractViolation("unknown form {!r}, expected one of {}".format(form, FORMS))


def vectorize(rho):
    """
    Stacks the columns of a square matrix into a vector, first column on
    top.

    Examples:
        ```python
        >>> from lindket.lindblad import vectorize
        >>> vectorize([[1, 2], [3, 4]]).real
        array([1., 3., 2., 4.])
        ```
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ContractViolation("only square matrices can be vectorized, got {}".format(rho.shape))
    return rho.reshape(-1, order="F")


def devectorize(v):
    """Inverse of `vectorize`."""
    v = np.asarray(v, dtype=complex)
    if v.ndim != 1:
        raise ContractViolation("vectorized state must be 1d, got shape {}".format(v.shape))
    d = math.isqrt(v.shape[0])
    if d * d != v.shape[0] or d == 0:
        raise ContractViolation("length {} is not a perfect square".format(v.shape[0]))
    return v.reshape((d, d), order="F")


def superoperator_bytes(dim):
    return COMPLEX_BYTES * dim ** 4


def build_superoperator(model, budget=None):
    r"""
    Matrix form of the Lindbladian acting on column-stacked density
    matrices,

    .. math::
        \mathcal{L} = -\frac{i}{\hbar}(I\otimes H - H^T\otimes I)
            + \sum_i \left[L_i^*\otimes L_i - \tfrac{1}{2}(I\otimes L_i^\dagger L_i
            + (L_i^\dagger L_i)^T\otimes I)\right].

    Args:
        model: The `LindbladModel`.
        budget: Memory budget in bytes, `None` for the default (4 GiB).

    Raises:
        MemoryBudgetError: iff `16 * d**4` exceeds the budget.
    """
    d = model.dim
    check_budget(superoperator_bytes(d), budget, "superoperator of dimension {}".format(d * d))
    eye = np.eye(d, dtype=complex)
    h = model.hamiltonian
    result = (-1.0j / model.hbar) * (linalg.kron(eye, h, budget) - linalg.kron(h.T, eye, budget))
    for op, norm in zip(model.jump_ops, model.jump_norms):
        result += linalg.kron(op.conj(), op, budget)
        result -= 0.5 * (linalg.kron(eye, norm, budget) + linalg.kron(norm.T, eye, budget))
    return result


def lindbladian_norm(model, strategy="exact_small", samples=DEFAULT_NORM_SAMPLES, seed=0, budget=None):
    r"""
    Estimates :math:`\|\mathcal{L}\| = \sup_M \|\mathcal{L}M\|_F/\|M\|_F`.

    Args:
        model: The `LindbladModel`.
        strategy: `"exact_small"` computes the spectral norm of the
            superoperator. `"random_probe"` takes the largest ratio over
            `samples` complex Gaussian matrices and multiplies it by 1.2.
        samples: Number of probes for `random_probe` (>= 1).
        seed: Seed of the sampling stream.
        budget: Memory budget for `exact_small`.

    Raises:
        MemoryBudgetError: `exact_small` was requested for a model whose
            superoperator does not fit the budget.
    """
    if strategy == "exact_small":
        try:
            check_budget(
                superoperator_bytes(model.dim), budget, "superoperator for exact_small norm"
            )
        except MemoryBudgetError as err:
            raise MemoryBudgetError(
                err.what, err.required_bytes, err.budget_bytes, hint="use strategy='random_probe'"
            )
        superop = build_superoperator(model, budget)
        estimate = linalg.spectral_norm(superop)
        if not estimate.converged:
            bound = linalg.frobenius_norm(superop)
            logger.warning(
                "exact_small norm did not converge after %d iterations; "
                "using the Frobenius bound %.6g",
                estimate.iterations,
                bound,
            )
            return bound
        return estimate.value
    if strategy == "random_probe":
        if int(samples) < 1:
            raise ContractViolation("random_probe needs samples >= 1, got {}".format(samples))
        rng = random_engine(seed)
        best = 0.0
        for _ in range(int(samples)):
            sample = complex_gaussian(rng, (model.dim, model.dim))
            ratio = linalg.frobenius_norm(apply_lindbladian(model, sample)) / linalg.frobenius_norm(
                sample
            )
            best = max(best, ratio)
        logger.debug("random_probe norm estimate %.6g from %d samples", best, int(samples))
        return SAMPLE_SAFETY_FACTOR * best
    raise ContractViolation(
        "unknown strategy {!r}, expected one of {}".format(strategy, NORM_STRATEGIES)
    )


def diagnose(rho, positivity=False):
    """
    Reports how far `rho` is from a physical density matrix, without
    modifying it.

    Args:
        rho: Square matrix.
        positivity: Also compute the smallest eigenvalue of the Hermitian
            part (costs an eigendecomposition).

    Returns:
        Diagnostics: `(trace, trace_error, hermiticity_error, purity,
        min_eigenvalue)`; `min_eigenvalue` is `None` unless requested.
    """
    rho = np.asarray(rho, dtype=complex)
    trace = complex(np.trace(rho))
    min_eig = None
    if positivity:
        min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    return Diagnostics(
        trace=trace,
        trace_error=abs(trace - 1.0),
        hermiticity_error=hermiticity_error(rho),
        purity=float(np.real(np.vdot(rho, rho))),
        min_eigenvalue=min_eig,
    )
