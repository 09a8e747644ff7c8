"""Dense matrix backend, subspace restriction and the SVD rank test."""

from __future__ import annotations

from math import comb

import numpy as np

from .errors import CapacityError, InvalidInputError
from .ops import Operator, OperatorStack
from .pauli import PauliSum

DEFAULT_EXPANSION_LIMIT = 12


class DenseOperator(Operator):
    """Operator stored as a full ``d x d`` complex matrix (read-only)."""

    backend = "dense"

    def __init__(self, matrix, num_qubits: int | None = None):
        mat = np.array(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidInputError(f"expected a square matrix, got shape {mat.shape}")
        if mat.shape[0] < 2:
            raise InvalidInputError("dimension must be at least 2")
        if not np.all(np.isfinite(mat)):
            raise InvalidInputError("matrix has non-finite entries")
        if num_qubits is not None and mat.shape[0] != 1 << num_qubits:
            raise InvalidInputError(f"dimension {mat.shape[0]} does not match {num_qubits} qubits")
        mat.flags.writeable = False
        self._m = mat
        self.num_qubits = num_qubits

    @classmethod
    def _wrap(cls, mat, num_qubits):
        obj = cls.__new__(cls)
        mat.flags.writeable = False
        obj._m = mat
        obj.num_qubits = num_qubits
        return obj

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    def _check_other(self, other):
        if not isinstance(other, DenseOperator):
            raise InvalidInputError(f"expected DenseOperator, got {type(other).__name__}")
        if other.dim != self.dim:
            raise InvalidInputError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def _nq(self, other):
        return self.num_qubits if self.num_qubits == other.num_qubits else None

    def inner(self, other):
        self._check_other(other)
        return complex(np.vdot(self._m, other._m) / self.dim)

    def norm(self):
        return float(np.linalg.norm(self._m) / np.sqrt(self.dim))

    def commutator(self, other):
        self._check_other(other)
        return DenseOperator._wrap(self._m @ other._m - other._m @ self._m, self._nq(other))

    def scale(self, factor):
        return DenseOperator._wrap(self._m * complex(factor), self.num_qubits)

    def add(self, other):
        self._check_other(other)
        return DenseOperator._wrap(self._m + other._m, self._nq(other))

    def zero_like(self):
        return DenseOperator._wrap(np.zeros_like(self._m), self.num_qubits)

    def new_stack(self):
        return DenseStack(self.dim)

    def __eq__(self, other):
        if not isinstance(other, DenseOperator):
            return NotImplemented
        return np.array_equal(self._m, other._m)

    __hash__ = None

    def __repr__(self):
        return f"DenseOperator(dim={self.dim})"


class DenseStack(OperatorStack):
    """Rows are ``vec(op) / sqrt(d)`` so Euclidean products equal the trace inner product."""

    def __init__(self, d: int):
        super().__init__()
        self._d = d
        self._rows = np.zeros((16, d * d), dtype=complex)

    def _check(self, op):
        if not isinstance(op, DenseOperator) or op.dim != self._d:
            raise InvalidInputError(f"stack holds DenseOperator of dimension {self._d}")

    def append(self, op):
        self._check(op)
        k = len(self._ops)
        if k == len(self._rows):
            grown = np.zeros((2 * k, self._d * self._d), dtype=complex)
            grown[:k] = self._rows
            self._rows = grown
        self._rows[k] = op.matrix.reshape(-1) / np.sqrt(self._d)
        self._ops.append(op)

    @property
    def coordinates(self) -> np.ndarray:
        return self._rows[: len(self._ops)]

    def _to_vec(self, h):
        self._check(h)
        return h.matrix.reshape(-1) / np.sqrt(self._d)

    def _from_vec(self, v, num_qubits=None):
        return DenseOperator._wrap((v * np.sqrt(self._d)).reshape(self._d, self._d), num_qubits)

    def _overlaps_vec(self, v):
        return self.coordinates.conj() @ v

    def _axpy_vec(self, v, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if len(coeffs) != len(self):
            raise InvalidInputError(f"length mismatch: {len(self)} operators, {len(coeffs)} coefficients")
        return v - coeffs @ self.coordinates

    def overlaps(self, h):
        return self._overlaps_vec(self._to_vec(h))

    def residual(self, h, coeffs):
        v = self._axpy_vec(self._to_vec(h), coeffs)
        return self._from_vec(v, h.num_qubits), float(np.linalg.norm(v))

    def project_out(self, h, passes=2):
        v = self._to_vec(h)
        first = None
        for _ in range(passes):
            beta = self._overlaps_vec(v)
            if first is None:
                first = beta
            v = self._axpy_vec(v, beta)
        if first is None:
            first = np.zeros(len(self), dtype=complex)
        return self._from_vec(v, h.num_qubits), first, float(np.linalg.norm(v))

    def solve_residual(self, h, solve, passes=1):
        v = self._to_vec(h)
        beta = None
        for _ in range(passes):
            overlaps = self._overlaps_vec(v)
            if beta is None:
                beta = overlaps
            v = self._axpy_vec(v, solve(overlaps))
        return self._from_vec(v, h.num_qubits), beta, float(np.linalg.norm(v))


def _reverse_bits(a: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros_like(a)
    for q in range(n):
        out |= ((a >> np.uint64(q)) & np.uint64(1)) << np.uint64(n - 1 - q)
    return out


def from_pauli(op: PauliSum, limit: int = DEFAULT_EXPANSION_LIMIT) -> DenseOperator:
    """Expand a Pauli sum into its ``2**n x 2**n`` matrix.

    Qubit 0 is the most significant bit of the computational-basis index,
    matching the Kronecker order ``P_0 (x) P_1 (x) ...``.
    """
    n = op.num_qubits
    if n > limit:
        raise CapacityError(f"dense expansion of {n} qubits exceeds the limit of {limit}")
    d = 1 << n
    mat = np.zeros((d, d), dtype=complex)
    cols = np.arange(d, dtype=np.uint64)
    xs = _reverse_bits(op.x_masks, n)
    zs = _reverse_bits(op.z_masks, n)
    ys = np.bitwise_count(op.x_masks & op.z_masks).astype(np.int64)
    phases = np.array([1, 1j, -1, -1j])
    for x, z, y, c in zip(xs, zs, ys, op.coeffs):
        signs = 1 - 2 * (np.bitwise_count(cols & z).astype(np.int64) & 1)
        mat[(cols ^ x).astype(np.intp), cols.astype(np.intp)] += c * phases[y % 4] * signs
    return DenseOperator._wrap(mat, n)


def to_dense(op: Operator, limit: int = DEFAULT_EXPANSION_LIMIT) -> DenseOperator:
    if isinstance(op, DenseOperator):
        return op
    if isinstance(op, PauliSum):
        return from_pauli(op, limit)
    raise InvalidInputError(f"cannot expand {type(op).__name__}")


class StackedBasisMatrix:
    """``d**2 x N'`` matrix whose columns are column-major flattened operators."""

    def __init__(self, d: int, capacity: int = 16):
        self.d = d
        self._cols = np.zeros((d * d, max(capacity, 1)), dtype=complex, order="F")
        self._n = 0

    @classmethod
    def from_operators(cls, ops) -> StackedBasisMatrix:
        ops = list(ops)
        if not ops:
            raise InvalidInputError("need at least one operator to fix the dimension")
        out = cls(ops[0].dim, len(ops))
        for op in ops:
            out.append(op)
        return out

    def __len__(self):
        return self._n

    @property
    def matrix(self) -> np.ndarray:
        return self._cols[:, : self._n]

    def append(self, op: DenseOperator, scale: float = 1.0) -> None:
        if op.dim != self.d:
            raise InvalidInputError(f"operator dimension {op.dim} does not match {self.d}")
        if self._n == self._cols.shape[1]:
            grown = np.zeros((self.d * self.d, 2 * self._n), dtype=complex, order="F")
            grown[:, : self._n] = self._cols[:, : self._n]
            self._cols = grown
        self._cols[:, self._n] = op.matrix.reshape(-1, order="F") * scale
        self._n += 1

    def with_candidate(self, h: DenseOperator, scale: float = 1.0) -> np.ndarray:
        """``[B | vec(h)]`` without mutating the stack."""
        if h.dim != self.d:
            raise InvalidInputError(f"operator dimension {h.dim} does not match {self.d}")
        if self._n == self._cols.shape[1]:
            return np.column_stack([self.matrix, h.matrix.reshape(-1, order="F") * scale])
        self._cols[:, self._n] = h.matrix.reshape(-1, order="F") * scale
        return self._cols[:, : self._n + 1]


def default_rank_tol(d: int, ncols: int) -> float:
    return np.finfo(float).eps * max(d * d, ncols)


def numerical_rank(mat: np.ndarray, tol: float) -> int:
    if mat.shape[1] == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def rank_independence_check(basis, h: DenseOperator, tol: float | None = None) -> bool:
    """True iff ``rank([basis | vec(h)]) == N' + 1``.

    Singular values above ``tol * sigma_max`` count toward the rank;
    ``tol`` defaults to ``eps * max(d**2, N' + 1)``.
    """
    if isinstance(basis, StackedBasisMatrix):
        ncols = len(basis)
        mat = basis.with_candidate(h)
    else:
        basis = np.asarray(basis, dtype=complex)
        if basis.ndim != 2 or basis.shape[0] != h.dim**2:
            raise InvalidInputError(f"basis rows must equal d**2 = {h.dim ** 2}")
        ncols = basis.shape[1]
        mat = np.column_stack([basis, h.matrix.reshape(-1, order="F")])
    if tol is None:
        tol = default_rank_tol(h.dim, ncols + 1)
    return numerical_rank(mat, tol) == ncols + 1


def restrict(op: DenseOperator, proj: np.ndarray) -> DenseOperator:
    """Return ``proj^dagger @ op @ proj``."""
    proj = np.asarray(proj)
    if proj.ndim != 2 or proj.shape[0] != op.dim:
        raise InvalidInputError(f"projector has {proj.shape[0] if proj.ndim == 2 else '?'} rows, operator dimension is {op.dim}")
    return DenseOperator(proj.conj().T @ op.matrix @ proj)


def zero_magnetization_projector(n: int) -> np.ndarray:
    """Isometry onto basis states with exactly ``n/2`` ones, lexicographic order."""
    if n < 2 or n % 2:
        raise InvalidInputError(f"zero magnetization needs an even qubit count, got {n}")
    states = [k for k in range(1 << n) if k.bit_count() == n // 2]
    assert len(states) == comb(n, n // 2)
    proj = np.zeros((1 << n, len(states)))
    proj[states, np.arange(len(states))] = 1.0
    return proj
