"""Lie closure by nested commutators with pluggable independence tests.

Four strategies share one loop:

``standard-rank``
    Reference method. Stacks the vectorized basis and counts singular
    values of ``[B | vec(h)]``. Dense operators only.
``matrix-inversion``
    Keeps the Gram matrix ``A`` of the unit-norm basis and its inverse and
    tests ``h - B . (A^-1 beta)`` against the null operator.
``orthonorm``
    Keeps the original basis ``B`` and an orthonormal twin ``V``; commutators
    are taken in ``B``, residuals against ``V``.
``orthonorm-dimonly``
    Keeps ``V`` only and commutes its elements directly.

All candidates are scaled to unit norm before testing, so the tolerance
acts relative to the candidate's size.
"""

from __future__ import annotations

import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.linalg.blas import ztrsv

from .dense import DenseOperator, StackedBasisMatrix, default_rank_tol, numerical_rank, to_dense
from .errors import CapacityError, ClosureTimeout, ConditioningWarning, InvalidInputError, NumericalDegeneracyError
from .ops import Operator, OperatorStack, check_compatible

log = logging.getLogger(__name__)

METHODS = ("standard-rank", "matrix-inversion", "orthonorm", "orthonorm-dimonly")
DEFAULT_TOL = 1e-8
DEFAULT_FLOOR = 1e-12
GRAM_DRIFT_LIMIT = 1e-6


@dataclass
class ClosureConfig:
    tol: float = DEFAULT_TOL
    rank_tol: float | None = None
    max_dim: int | None = None
    threads: int = 1
    refresh_every: int = 256
    passes: int = 2
    conditioning_floor: float = DEFAULT_FLOOR
    time_limit: float | None = None
    debug: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidInputError("tolerance must be positive")
        if self.max_dim is not None and self.max_dim < 1:
            raise InvalidInputError("capacity cap must be at least 1")
        if self.threads < 1:
            raise InvalidInputError("thread count must be at least 1")
        if self.passes < 1:
            raise InvalidInputError("projection passes must be at least 1")
        if self.refresh_every < 1:
            raise InvalidInputError("refresh interval must be at least 1")


@dataclass
class ClosureStats:
    commutators: int = 0
    null_commutators: int = 0
    checks: int = 0
    accepted: int = 0
    generators_skipped: int = 0
    wall_time: float = 0.0
    warnings: list[dict[str, Any]] = field(default_factory=list)

    def warn(self, kind: str, **info) -> None:
        record = {"kind": kind, **info}
        self.warnings.append(record)
        log.debug("closure warning %s", record)


@dataclass
class ClosureResult:
    """Basis of the closure plus run metadata.

    ``basis`` holds the output tuple (``B`` for every method except
    ``orthonorm-dimonly``, which returns ``V``). ``orthonormal`` is ``V`` when
    the method maintains one; ``gram`` is the final :class:`GramState` for
    the matrix-inversion method.
    """

    basis: tuple[Operator, ...]
    method: str
    backend: str
    tol: float
    stats: ClosureStats
    orthonormal: tuple[Operator, ...] | None = None
    gram: GramState | None = None

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def near_threshold_accepts(self) -> int:
        return sum(1 for w in self.stats.warnings if w["kind"] == "near-threshold" and w["accepted"])


@dataclass
class LoopCursor:
    """Pending commutator pair ``(l, r)``; visits each unordered pair once."""

    l: int = 1
    r: int = 0

    def advance(self) -> None:
        self.r += 1
        if self.r == self.l:
            self.l += 1
            self.r = 0

    def running(self, size: int) -> bool:
        return self.l < size


class GramState:
    """Gram matrix ``A[l, m] = <B[l], B[m]>`` of the basis and its inverse.

    Storage is preallocated and grows geometrically; ``A`` and ``A_inv``
    are views of the active block. A lower Cholesky factor ``L`` of ``A`` is
    extended alongside the inverse. :meth:`solve` goes through ``L`` because
    triangular solves stay backward stable once ``A`` is ill-conditioned,
    whereas the accumulated error in the explicit inverse does not.
    """

    _BUFFERS = ("_a", "_inv", "_chol")

    def __init__(self, capacity: int = 16, floor: float = DEFAULT_FLOOR):
        self._a = np.zeros((capacity, capacity), dtype=complex)
        self._inv = np.zeros((capacity, capacity), dtype=complex)
        self._chol = np.zeros((capacity, capacity), dtype=complex)
        self._lf = None  # contiguous copy of L for BLAS
        self._n = 0
        self.floor = floor

    def __len__(self):
        return self._n

    @property
    def A(self) -> np.ndarray:
        return self._a[: self._n, : self._n]

    @property
    def A_inv(self) -> np.ndarray:
        return self._inv[: self._n, : self._n]

    @property
    def L(self) -> np.ndarray:
        return self._chol[: self._n, : self._n]

    def copy(self) -> GramState:
        out = GramState(max(self._n, 1), self.floor)
        k = self._n
        for name in self._BUFFERS:
            getattr(out, name)[:k, :k] = getattr(self, name)[:k, :k]
        out._n = k
        return out

    def solve(self, beta: np.ndarray) -> np.ndarray:
        """``A^-1 beta`` by forward and back substitution with ``L``."""
        if not self._n:
            return np.zeros(0, dtype=complex)
        if self._lf is None:
            self._lf = np.asfortranarray(self.L)
        y = ztrsv(self._lf, np.asarray(beta, dtype=complex), lower=1)
        return ztrsv(self._lf, y, lower=1, trans=2)

    def schur(self, beta: np.ndarray) -> float:
        return float((1.0 - np.vdot(beta, self.solve(beta))).real)

    def expand(self, beta: np.ndarray, schur: float | None = None) -> float:
        """Append a unit-norm element with overlaps ``beta``; returns the Schur complement.

        ``schur`` overrides ``1 - beta^dagger A^-1 beta``. It equals the squared
        norm of the element's residual against the basis, which the closure
        loop has already computed far more accurately than the cancellation-
        prone formula.
        """
        beta = np.asarray(beta, dtype=complex).reshape(-1)
        k = self._n
        if len(beta) != k:
            raise InvalidInputError(f"beta has length {len(beta)}, Gram matrix has size {k}")
        u = self.solve(beta)
        s = float((1.0 - np.vdot(beta, u)).real) if schur is None else float(schur)
        if s <= self.floor:
            raise NumericalDegeneracyError(
                f"Schur complement {s:.3e} at element {k} is below the conditioning floor {self.floor:.1e}",
                index=k,
                schur=s,
            )
        if k == len(self._a):
            for name in self._BUFFERS:
                grown = np.zeros((2 * k, 2 * k), dtype=complex)
                grown[:k, :k] = getattr(self, name)[:k, :k]
                setattr(self, name, grown)
        self._a[:k, k] = beta
        self._a[k, :k] = beta.conj()
        self._a[k, k] = 1.0
        inv = self._inv
        inv[:k, :k] += np.outer(u, u.conj()) / s
        inv[:k, k] = -u / s
        inv[k, :k] = -u.conj() / s
        inv[k, k] = 1.0 / s
        if k:
            self._chol[k, :k] = solve_triangular(self.L, beta, lower=True, check_finite=False).conj()
        self._chol[k, k] = np.sqrt(s)
        self._lf = None
        self._n = k + 1
        return s

    def refresh(self) -> float:
        """Recompute ``A_inv`` from ``A``; returns the drift of the old inverse."""
        drift = self.drift()
        k = self._n
        try:
            chol = cholesky(self.A, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            log.warning("Gram matrix is not numerically positive definite at size %d; keeping factors", k)
            return drift
        self._chol[:k, :k] = chol
        self._lf = None
        self._inv[:k, :k] = cho_solve((chol, True), np.eye(k), check_finite=False)
        return drift

    def drift(self) -> float:
        if not self._n:
            return 0.0
        return float(np.max(np.abs(self.A @ self.A_inv - np.eye(self._n))))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.A)[0]) if self._n else np.inf


def expand_gram(state: GramState, beta, schur: float | None = None) -> GramState:
    """Functional form of :meth:`GramState.expand`: returns a new state."""
    out = state.copy()
    out.expand(beta, schur)
    return out


def check_matrix_inversion(state: GramState, B, h: Operator, tol: float = DEFAULT_TOL, passes: int = 2):
    """Independence test of a unit-norm ``h`` against ``B`` via ``A^-1``.

    Returns ``(independent, beta)`` with ``beta[l] = <B[l], h>``. The
    second pass re-solves on the residual, which keeps the test accurate
    when ``A`` is ill-conditioned. Emits a :class:`ConditioningWarning` when
    the residual norm is within a factor of ten of ``tol``.
    """
    stack = _as_stack(B, h)
    if len(stack) != len(state):
        raise InvalidInputError("Gram state and basis have different sizes")
    _, beta, nrm = stack.solve_residual(h, state.solve, passes)
    if tol / 10 <= nrm <= tol * 10:
        warnings.warn(f"residual norm {nrm:.3e} is close to tolerance {tol:.1e}", ConditioningWarning, stacklevel=2)
    return nrm > tol, beta


def project_residual(V, h: Operator, passes: int = 2):
    """Return ``(h_perp, coeffs)`` for an orthonormal tuple ``V``.

    The projection is applied ``passes`` times; ``coeffs`` are the first-pass
    overlaps ``<V[l], h>``.
    """
    stack = _as_stack(V, h)
    resid, coeffs, _ = stack.project_out(h, passes)
    return resid, coeffs


def _as_stack(ops, like: Operator) -> OperatorStack:
    if isinstance(ops, OperatorStack):
        return ops
    stack = like.new_stack()
    for op in ops:
        check_compatible(like, op)
        stack.append(op)
    return stack


# -- the closure loop ------------------------------------------------------------


class _Strategy:
    """Independence test plus the state it maintains."""

    def __init__(self, like: Operator, config: ClosureConfig, stats: ClosureStats):
        self.config = config
        self.stats = stats
        self.basis: list[Operator] = []

    def loop_elements(self) -> list[Operator]:
        """Elements whose pairwise commutators drive the loop."""
        return self.basis

    def offer(self, h: Operator, where) -> bool:
        raise NotImplementedError

    def _near(self, value: float, accepted: bool, where) -> None:
        tol = self.config.tol
        if tol / 10 <= value <= tol * 10:
            self.stats.warn("near-threshold", where=where, residual=value, accepted=accepted)


class _RankStrategy(_Strategy):
    def __init__(self, like, config, stats):
        super().__init__(like, config, stats)
        self.stacked = StackedBasisMatrix(like.dim)

    def offer(self, h, where):
        if not self.basis:
            accepted = True
        else:
            self.stats.checks += 1
            mat = self.stacked.with_candidate(h)
            tol = self.config.rank_tol
            if tol is None:
                tol = default_rank_tol(h.dim, mat.shape[1])
            accepted = numerical_rank(mat, tol) == mat.shape[1]
        if accepted:
            self.basis.append(h)
            self.stacked.append(h)
        return accepted


class _InversionStrategy(_Strategy):
    def __init__(self, like, config, stats):
        super().__init__(like, config, stats)
        self.stack = like.new_stack()
        # the warning band is (floor, tol**2) read in either order; with the
        # defaults tol**2 < floor, so tol**2 is the hard limit
        lo, hi = sorted((config.conditioning_floor, config.tol**2))
        self.gram = GramState(floor=lo)
        self.warn_below = hi

    def offer(self, h, where):
        if not self.basis:
            beta, nrm, accepted = np.zeros(0, dtype=complex), 1.0, True
        else:
            self.stats.checks += 1
            _, beta, nrm = self.stack.solve_residual(h, self.gram.solve, self.config.passes)
            accepted = nrm > self.config.tol
            self._near(nrm, accepted, where)
        if accepted:
            s = self.gram.expand(beta, nrm * nrm)
            if s <= self.warn_below:
                self.stats.warn("ill-conditioned", where=where, schur=s)
            self.basis.append(h)
            self.stack.append(h)
            k = len(self.gram)
            if k % self.config.refresh_every == 0:
                drift = self.gram.refresh()
                if drift > GRAM_DRIFT_LIMIT:
                    self.stats.warn("gram-drift", where=where, drift=drift)
            if self.config.debug and k <= 512:
                lam = self.gram.min_eigenvalue()
                if not lam > 0:
                    raise NumericalDegeneracyError(f"Gram matrix lost positive definiteness (min eigenvalue {lam:.3e})", index=k - 1)
        return accepted


class _OrthoStrategy(_Strategy):
    def __init__(self, like, config, stats, keep_original):
        super().__init__(like, config, stats)
        self.keep_original = keep_original
        self.ortho = like.new_stack()

    def loop_elements(self):
        return self.basis if self.keep_original else self.ortho.operators

    def offer(self, h, where):
        if not len(self.ortho):
            resid, nrm = h, h.norm()
            accepted = True
        else:
            self.stats.checks += 1
            resid, _, nrm = self.ortho.project_out(h, self.config.passes)
            accepted = nrm > self.config.tol
            self._near(nrm, accepted, where)
        if accepted:
            self.ortho.append(resid.scale(1.0 / nrm))
            if self.keep_original:
                self.basis.append(h)
        return accepted


def _make_strategy(method, like, config, stats) -> _Strategy:
    if method == "standard-rank":
        return _RankStrategy(like, config, stats)
    if method == "matrix-inversion":
        return _InversionStrategy(like, config, stats)
    if method == "orthonorm":
        return _OrthoStrategy(like, config, stats, keep_original=True)
    if method == "orthonorm-dimonly":
        return _OrthoStrategy(like, config, stats, keep_original=False)
    raise InvalidInputError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")


def _close(generators, method: str, config: ClosureConfig) -> ClosureResult:
    generators = list(generators)
    if not generators:
        raise InvalidInputError("need at least one generator")
    like = generators[0]
    for g in generators[1:]:
        check_compatible(like, g)
    if method == "standard-rank" and not isinstance(like, DenseOperator):
        raise InvalidInputError("standard-rank needs dense operators; expand them with to_dense first")

    cap = config.max_dim if config.max_dim is not None else like.dim**2
    stats = ClosureStats()
    strategy = _make_strategy(method, like, config, stats)
    start = time.perf_counter()
    deadline = None if config.time_limit is None else start + config.time_limit

    def accept_or_reject(h, where):
        if strategy.offer(h, where):
            stats.accepted += 1
            if stats.accepted > cap:
                raise CapacityError(f"basis size exceeded the cap of {cap} at pair {where}")

    for index, g in enumerate(generators):
        nrm = g.norm()
        if nrm == 0.0:
            stats.generators_skipped += 1
            log.info("skipping null generator %d", index)
            continue
        accept_or_reject(g.scale(1.0 / nrm), ("generator", index))

    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    tol = config.tol
    try:
        cursor = LoopCursor()
        while cursor.running(len(strategy.loop_elements())):
            if deadline is not None and time.perf_counter() > deadline:
                raise ClosureTimeout(f"closure exceeded {config.time_limit} s at row {cursor.l}")
            elements = strategy.loop_elements()
            left = elements[cursor.l]
            row = elements[cursor.r : cursor.l]
            # Loop elements are never modified once appended, so the whole
            # row can be evaluated up front; acceptances stay sequential.
            if pool is not None and len(row) > 1:
                products = list(pool.map(left.commutator, row))
            else:
                products = [left.commutator(b) for b in row]
            for m, (right, h) in enumerate(zip(row, products), start=cursor.r):
                stats.commutators += 1
                scale = left.norm() * right.norm()
                hn = h.norm()
                if hn <= tol * scale:
                    stats.null_commutators += 1
                    stats.checks += 1
                else:
                    accept_or_reject(h.scale(1.0 / hn), (cursor.l, m))
                cursor.advance()
                if deadline is not None and time.perf_counter() > deadline:
                    raise ClosureTimeout(f"closure exceeded {config.time_limit} s at pair ({cursor.l}, {cursor.r})")
    finally:
        if pool is not None:
            pool.shutdown()

    stats.wall_time = time.perf_counter() - start
    ortho = getattr(strategy, "ortho", None)
    orthonormal = ortho.operators if ortho is not None else None
    basis = tuple(strategy.basis) if method != "orthonorm-dimonly" else orthonormal
    return ClosureResult(
        basis=basis,
        method=method,
        backend=like.backend,
        tol=tol,
        stats=stats,
        orthonormal=orthonormal,
        gram=getattr(strategy, "gram", None),
    )


def close_standard(G, tol: float | None = None, config: ClosureConfig | None = None) -> ClosureResult:
    """Reference closure with the SVD rank test (dense backend)."""
    return _close(G, "standard-rank", _with_tol(config, tol))


def close_matrix_inversion(G, tol: float | None = None, config: ClosureConfig | None = None) -> ClosureResult:
    return _close(G, "matrix-inversion", _with_tol(config, tol))


def close_orthonormalization(
    G, tol: float | None = None, keep_original: bool = True, config: ClosureConfig | None = None
) -> ClosureResult:
    method = "orthonorm" if keep_original else "orthonorm-dimonly"
    return _close(G, method, _with_tol(config, tol))


def _with_tol(config, tol):
    config = config or ClosureConfig()
    return config if tol is None else replace(config, tol=tol)


def run_closure(G, method: str = "orthonorm-dimonly", config: ClosureConfig | None = None) -> ClosureResult:
    """Dispatch to one of :data:`METHODS`.

    Sparse generators are expanded to dense matrices for ``standard-rank``.
    """
    if method not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    config = config or ClosureConfig()
    G = list(G)
    if method == "standard-rank" and G and not isinstance(G[0], DenseOperator):
        G = [to_dense(g) for g in G]
    return _close(G, method, config)
