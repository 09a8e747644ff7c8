"""Backend-neutral operator contract.

Every operator backend supports scalar multiplication, addition, the
normalized trace inner product ``<a, b> = tr(a^dagger b) / d``, the matrix
commutator, and comparison with the null operator. The closure algorithms
only ever talk to operators through this module.
"""

from __future__ import annotations

import abc
import math
from collections.abc import Sequence

import numpy as np

from .errors import InvalidInputError


class Operator(abc.ABC):
    """Immutable element of a complex matrix Lie algebra.

    Subclasses set ``backend`` (``"pauli"`` or ``"dense"``) and expose the
    matrix dimension ``dim``. Qubit-based operators also set ``num_qubits``.
    """

    backend: str = ""
    num_qubits: int | None = None

    @property
    @abc.abstractmethod
    def dim(self) -> int: ...

    @abc.abstractmethod
    def inner(self, other: Operator) -> complex: ...

    @abc.abstractmethod
    def commutator(self, other: Operator) -> Operator: ...

    @abc.abstractmethod
    def scale(self, factor: complex) -> Operator: ...

    @abc.abstractmethod
    def add(self, other: Operator) -> Operator: ...

    @abc.abstractmethod
    def zero_like(self) -> Operator: ...

    @abc.abstractmethod
    def new_stack(self) -> OperatorStack:
        """Empty stack specialized for this backend and dimension."""

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))

    def normalized(self) -> Operator:
        nrm = self.norm()
        if nrm == 0.0:
            raise InvalidInputError("cannot normalize the null operator")
        return self.scale(1.0 / nrm)

    def compatible(self, other: Operator) -> bool:
        return self.backend == other.backend and self.dim == other.dim

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.add(other.scale(-1.0))

    def __neg__(self):
        return self.scale(-1.0)

    def __mul__(self, factor):
        return self.scale(factor)

    __rmul__ = __mul__

    def __truediv__(self, factor):
        return self.scale(1.0 / factor)


def check_compatible(a: Operator, b: Operator) -> None:
    if not isinstance(a, Operator) or not isinstance(b, Operator):
        raise InvalidInputError("operands must be Operator instances")
    if a.backend != b.backend:
        raise InvalidInputError(f"backend mismatch: {a.backend} vs {b.backend}")
    if a.dim != b.dim:
        raise InvalidInputError(f"dimension mismatch: {a.dim} vs {b.dim}")


def inner_product(a: Operator, b: Operator) -> complex:
    """Return ``tr(a^dagger b) / d``."""
    check_compatible(a, b)
    return a.inner(b)


def norm(a: Operator) -> float:
    return a.norm()


def commutator(a: Operator, b: Operator) -> Operator:
    """Return ``ab - ba``."""
    check_compatible(a, b)
    return a.commutator(b)


def axpy_dot(ops: Sequence[Operator], coeffs, like: Operator | None = None) -> Operator:
    """Linear combination ``sum_l coeffs[l] * ops[l]``.

    ``like`` supplies backend and dimension when ``ops`` is empty, in which
    case the null operator is returned.
    """
    coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
    if len(ops) != len(coeffs):
        raise InvalidInputError(f"length mismatch: {len(ops)} operators, {len(coeffs)} coefficients")
    if len(ops) == 0:
        if like is None:
            raise InvalidInputError("empty combination needs a template operator")
        return like.zero_like()
    for op in ops[1:]:
        check_compatible(ops[0], op)
    if like is not None:
        check_compatible(ops[0], like)
    acc = ops[0].scale(coeffs[0])
    for op, c in zip(ops[1:], coeffs[1:]):
        acc = acc.add(op.scale(c))
    return acc


def is_zero(a: Operator, tol: float) -> bool:
    if tol < 0:
        raise InvalidInputError("tolerance must be non-negative")
    return a.norm() <= tol


class OperatorStack:
    """Ordered, append-only collection of operators of one backend.

    Provides the batched primitives the closure loops need: overlaps
    ``<B[l], h>`` for all ``l`` and residuals ``h - sum_l x[l] B[l]``.
    This generic version loops over :func:`inner_product` and
    :func:`axpy_dot`; backends override it with vectorized storage.
    """

    def __init__(self):
        self._ops: list[Operator] = []

    def __len__(self):
        return len(self._ops)

    def __getitem__(self, index):
        return self._ops[index]

    def __iter__(self):
        return iter(self._ops)

    @property
    def operators(self) -> tuple[Operator, ...]:
        return tuple(self._ops)

    def _check(self, op: Operator) -> None:
        if self._ops:
            check_compatible(self._ops[0], op)

    def append(self, op: Operator) -> None:
        self._check(op)
        self._ops.append(op)

    def overlaps(self, h: Operator) -> np.ndarray:
        self._check(h)
        return np.array([b.inner(h) for b in self._ops], dtype=complex)

    def residual(self, h: Operator, coeffs) -> tuple[Operator, float]:
        """Return ``(h - sum_l coeffs[l] B[l], its norm)``."""
        self._check(h)
        out = h.add(axpy_dot(self._ops, coeffs, like=h).scale(-1.0))
        return out, out.norm()

    def solve_residual(self, h: Operator, solve, passes: int = 1) -> tuple[Operator, np.ndarray, float]:
        """Residual of ``h`` against ``sum_l x[l] B[l]`` with ``x = solve(overlaps)``.

        Extra passes repeat the solve on the residual (iterative refinement).
        Returns the residual, the first-pass overlaps and the residual norm.
        """
        beta = None
        resid, nrm = h, h.norm()
        for _ in range(passes):
            overlaps = self.overlaps(resid)
            if beta is None:
                beta = overlaps
            resid, nrm = self.residual(resid, solve(overlaps))
        return resid, beta, nrm

    def project_out(self, h: Operator, passes: int = 2) -> tuple[Operator, np.ndarray, float]:
        """Remove the span of an orthonormal stack from ``h``.

        Classical Gram-Schmidt repeated ``passes`` times. Returns the
        residual, the first-pass coefficients and the residual norm.
        """
        first = None
        resid, nrm = h, h.norm()
        for _ in range(passes):
            coeffs = self.overlaps(resid)
            if first is None:
                first = coeffs
            resid, nrm = self.residual(resid, coeffs)
        if first is None:
            first = np.zeros(len(self), dtype=complex)
        return resid, first, nrm
