"""Sparse operator backend: weighted sums of Pauli strings.

A Pauli string on ``n`` qubits is stored as two bit masks. Bit ``j`` of
``x`` (``z``) marks an X (Z) factor on qubit ``j``; both bits set means Y.
The encoded operator is ``i**popcount(x & z) * prod_j X_j**x_j Z_j**z_j``,
which makes every string Hermitian with eigenvalues +-1. In text form qubit
0 is the leftmost character.

Text grammar (whitespace between tokens is ignored)::

    sum   := term (('+' | '-') term)*
    term  := coeff word
    coeff := real | '(' real ',' real ')'
    word  := [IXYZ]{n}

Files hold one operator per line; ``#`` starts a comment.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, PauliParseError
from .ops import Operator, OperatorStack

MAX_QUBITS = 64
DROP_TOL = 1e-14

_PHASES = np.array([1, 1j, -1, -1j], dtype=complex)
_CHARS = "IXZY"  # index = x_bit + 2 * z_bit


def _popcount(a):
    return np.bitwise_count(a).astype(np.int64)


def _check_n(n):
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise InvalidInputError(f"qubit count must be an integer in [1, {MAX_QUBITS}], got {n!r}")


@dataclass(frozen=True, order=True)
class PauliString:
    """Single Hermitian Pauli word in symplectic encoding."""

    z: int
    x: int
    n: int

    def __post_init__(self):
        _check_n(self.n)
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise InvalidInputError(f"masks must fit in {self.n} bits")

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        x = z = 0
        for q, ch in enumerate(label):
            idx = _CHARS.find(ch)
            if idx < 0:
                raise InvalidInputError(f"invalid Pauli character {ch!r}")
            x |= (idx & 1) << q
            z |= (idx >> 1) << q
        return cls(z=z, x=x, n=len(label))

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(z=0, x=0, n=n)

    @property
    def label(self) -> str:
        return "".join(_CHARS[((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)] for q in range(self.n))

    @property
    def num_y(self) -> int:
        return (self.x & self.z).bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def __str__(self):
        return self.label


def string_product(p: PauliString, q: PauliString) -> tuple[PauliString, complex]:
    """Return ``(r, phase)`` with ``p @ q == phase * r`` as matrices."""
    if p.n != q.n:
        raise InvalidInputError(f"qubit-count mismatch: {p.n} vs {q.n}")
    x, z = p.x ^ q.x, p.z ^ q.z
    e = p.num_y + q.num_y - (x & z).bit_count() + 2 * (p.z & q.x).bit_count()
    return PauliString(z=z, x=x, n=p.n), complex(_PHASES[e % 4])


def strings_commute(p: PauliString, q: PauliString) -> bool:
    if p.n != q.n:
        raise InvalidInputError(f"qubit-count mismatch: {p.n} vs {q.n}")
    return (((p.x & q.z) ^ (p.z & q.x)).bit_count() & 1) == 0


def _keys(x: np.ndarray, z: np.ndarray, n: int) -> np.ndarray:
    """Sort keys ordering strings by (z, x)."""
    if n <= 32:
        return (z << np.uint64(32)) | x
    return np.array([(zi << 64) | xi for zi, xi in zip(z.tolist(), x.tolist())], dtype=object)


class PauliSum(Operator):
    """Complex-weighted sum of distinct Pauli strings on ``n`` qubits.

    Instances are immutable. Terms are kept sorted by ``(z, x)`` mask and
    coefficients with magnitude at or below ``1e-14`` times the largest one
    are dropped after every construction.

    Parameters
    ----------
    terms : mapping, optional
        ``{label or PauliString: coefficient}``.
    n : int, optional
        Qubit count; inferred from the first key when omitted.
    """

    backend = "pauli"

    __slots__ = ("_n", "_x", "_z", "_c", "_keys")

    def __init__(self, terms=None, n: int | None = None):
        xs, zs, cs = [], [], []
        for key, coeff in dict(terms or {}).items():
            p = key if isinstance(key, PauliString) else PauliString.from_label(key)
            if n is None:
                n = p.n
            if p.n != n:
                raise InvalidInputError(f"term {p.label} has {p.n} qubits, expected {n}")
            xs.append(p.x)
            zs.append(p.z)
            cs.append(complex(coeff))
        if n is None:
            raise InvalidInputError("qubit count required for an empty sum")
        _check_n(n)
        self._set(n, np.array(xs, dtype=np.uint64), np.array(zs, dtype=np.uint64), np.array(cs, dtype=complex))

    @classmethod
    def from_arrays(cls, n, x, z, coeffs) -> PauliSum:
        """Build from parallel mask/coefficient arrays, merging duplicates."""
        _check_n(n)
        obj = cls.__new__(cls)
        obj._set(n, np.asarray(x, dtype=np.uint64), np.asarray(z, dtype=np.uint64), np.asarray(coeffs, dtype=complex))
        return obj

    @classmethod
    def _raw(cls, n, x, z, c, keys):
        obj = cls.__new__(cls)
        obj._n, obj._x, obj._z, obj._c, obj._keys = n, x, z, c, keys
        for arr in (x, z, c):
            arr.flags.writeable = False
        return obj

    def _set(self, n, x, z, c):
        if len(x):
            limit = (1 << n) - 1
            if int(x.max()) > limit or int(z.max()) > limit:
                raise InvalidInputError(f"masks must fit in {n} bits")
        keys = _keys(x, z, n)
        if len(keys):
            order = np.argsort(keys, kind="stable")
            keys = keys[order]
            first = np.empty(len(keys), dtype=bool)
            first[0] = True
            first[1:] = np.asarray(keys[1:] != keys[:-1], dtype=bool)
            starts = np.flatnonzero(first)
            c = np.add.reduceat(c[order], starts)
            x, z, keys = x[order][starts], z[order][starts], keys[starts]
            mag = np.abs(c)
            keep = mag > DROP_TOL * mag.max()
            if not keep.all():
                x, z, c, keys = x[keep], z[keep], c[keep], keys[keep]
        self._n, self._x, self._z, self._c, self._keys = n, x, z, c, keys
        for arr in (x, z, c):
            arr.flags.writeable = False

    @classmethod
    def from_string(cls, p: PauliString, coeff: complex = 1.0) -> PauliSum:
        return cls({p: coeff}, n=p.n)

    @classmethod
    def zero(cls, n: int) -> PauliSum:
        return cls({}, n=n)

    # -- accessors ---------------------------------------------------------

    @property
    def num_qubits(self) -> int:
        return self._n

    @property
    def dim(self) -> int:
        return 1 << self._n

    @property
    def x_masks(self) -> np.ndarray:
        return self._x

    @property
    def z_masks(self) -> np.ndarray:
        return self._z

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    def __len__(self):
        return len(self._c)

    def terms(self):
        for x, z, c in zip(self._x.tolist(), self._z.tolist(), self._c.tolist()):
            yield PauliString(z=z, x=x, n=self._n), c

    def to_dict(self) -> dict[str, complex]:
        return {p.label: c for p, c in self.terms()}

    def __getitem__(self, key) -> complex:
        p = key if isinstance(key, PauliString) else PauliString.from_label(key)
        for q, c in self.terms():
            if q == p:
                return c
        return 0j

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return (
            self._n == other._n
            and np.array_equal(self._x, other._x)
            and np.array_equal(self._z, other._z)
            and np.array_equal(self._c, other._c)
        )

    __hash__ = None

    def __repr__(self):
        return f"PauliSum({format_pauli_sum(self)!r}, n={self._n})"

    # -- Operator contract ---------------------------------------------------

    def _check_other(self, other):
        if not isinstance(other, PauliSum):
            raise InvalidInputError(f"expected PauliSum, got {type(other).__name__}")
        if other._n != self._n:
            raise InvalidInputError(f"qubit-count mismatch: {self._n} vs {other._n}")

    def inner(self, other: PauliSum) -> complex:
        self._check_other(other)
        _, ia, ib = np.intersect1d(self._keys, other._keys, assume_unique=True, return_indices=True)
        return complex(np.sum(np.conj(self._c[ia]) * other._c[ib]))

    def norm(self) -> float:
        return float(np.linalg.norm(self._c))

    def scale(self, factor: complex) -> PauliSum:
        factor = complex(factor)
        if factor == 0:
            return PauliSum.zero(self._n)
        return PauliSum._raw(self._n, self._x, self._z, self._c * factor, self._keys)

    def add(self, other: PauliSum) -> PauliSum:
        self._check_other(other)
        return PauliSum.from_arrays(
            self._n,
            np.concatenate([self._x, other._x]),
            np.concatenate([self._z, other._z]),
            np.concatenate([self._c, other._c]),
        )

    def zero_like(self) -> PauliSum:
        return PauliSum.zero(self._n)

    def _order_key(self):
        return (len(self._c), self._x.tobytes(), self._z.tobytes(), self._c.tobytes())

    def commutator(self, other: PauliSum) -> PauliSum:
        self._check_other(other)
        # One canonical orientation so that [a, b] == -[b, a] bit for bit.
        ka, kb = self._order_key(), other._order_key()
        if ka == kb:
            return PauliSum.zero(self._n)
        if ka > kb:
            return other._commutator(self).scale(-1.0)
        return self._commutator(other)

    def _commutator(self, other: PauliSum) -> PauliSum:
        n = self._n
        if not len(self._c) or not len(other._c):
            return PauliSum.zero(n)
        xa, za = self._x[:, None], self._z[:, None]
        xb, zb = other._x[None, :], other._z[None, :]
        anti = _popcount((xa & zb) ^ (za & xb)) & 1
        ia, ib = np.nonzero(anti)
        if not len(ia):
            return PauliSum.zero(n)
        xa, za = self._x[ia], self._z[ia]
        xb, zb = other._x[ib], other._z[ib]
        x, z = xa ^ xb, za ^ zb
        e = _popcount(xa & za) + _popcount(xb & zb) - _popcount(x & z) + 2 * _popcount(za & xb)
        coeffs = (2.0 * _PHASES[e % 4]) * (self._c[ia] * other._c[ib])
        return PauliSum.from_arrays(n, x, z, coeffs)

    def product(self, other: PauliSum) -> PauliSum:
        """Operator product ``self @ other``."""
        self._check_other(other)
        ia, ib = np.meshgrid(np.arange(len(self)), np.arange(len(other)), indexing="ij")
        ia, ib = ia.ravel(), ib.ravel()
        xa, za, xb, zb = self._x[ia], self._z[ia], other._x[ib], other._z[ib]
        x, z = xa ^ xb, za ^ zb
        e = _popcount(xa & za) + _popcount(xb & zb) - _popcount(x & z) + 2 * _popcount(za & xb)
        return PauliSum.from_arrays(self._n, x, z, _PHASES[e % 4] * self._c[ia] * other._c[ib])

    __matmul__ = product

    def new_stack(self) -> PauliStack:
        return PauliStack(self._n)


def sum_commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """Commutator of two Pauli sums; commuting string pairs are skipped."""
    return a.commutator(b)


def sum_inner_product(a: PauliSum, b: PauliSum) -> complex:
    return a.inner(b)


class PauliStack(OperatorStack):
    """Stack of Pauli sums held as sparse rows over a growing string registry.

    Column ``k`` of the coordinate space is the ``k``-th distinct string the
    stack has seen. Rows are grouped into CSR blocks of ``block_rows``.
    """

    def __init__(self, n: int, block_rows: int = 512):
        super().__init__()
        from scipy import sparse

        self._sparse = sparse
        self._n = n
        self._block_rows = block_rows
        self._index: dict[int, int] = {}
        self._reg_x: list[int] = []
        self._reg_z: list[int] = []
        self._reg_cache = None
        self._blocks = []  # (conj csr, csr, ncols)
        self._open_rows = []  # (cols, vals)
        self._open_cache = None

    def _check(self, op):
        if not isinstance(op, PauliSum) or op.num_qubits != self._n:
            raise InvalidInputError("stack holds PauliSum operators on a fixed qubit count")

    @property
    def width(self) -> int:
        return len(self._reg_x)

    def _columns(self, op: PauliSum) -> np.ndarray:
        index = self._index
        cols = []
        for k, x, z in zip(op._keys.tolist(), op._x.tolist(), op._z.tolist()):
            col = index.get(k)
            if col is None:
                col = index[k] = len(self._reg_x)
                self._reg_x.append(x)
                self._reg_z.append(z)
                self._reg_cache = None
            cols.append(col)
        return np.array(cols, dtype=np.int64)

    def append(self, op: PauliSum) -> None:
        self._check(op)
        self._ops.append(op)
        self._open_rows.append((self._columns(op), np.array(op.coeffs)))
        self._open_cache = None
        if len(self._open_rows) >= self._block_rows:
            self._blocks.append(self._build_open())
            self._open_rows = []

    def _build_open(self):
        rows = self._open_rows
        width = self.width
        indptr = np.zeros(len(rows) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(c) for c, _ in rows])
        cols = np.concatenate([c for c, _ in rows]) if rows else np.zeros(0, dtype=np.int64)
        vals = np.concatenate([v for _, v in rows]) if rows else np.zeros(0, dtype=complex)
        mat = self._sparse.csr_matrix((vals, cols, indptr), shape=(len(rows), width))
        return mat.conj().tocsr(), mat, width

    def _all_blocks(self):
        blocks = list(self._blocks)
        if self._open_rows:
            if self._open_cache is None:
                self._open_cache = self._build_open()
            blocks.append(self._open_cache)
        return blocks

    def _to_vec(self, h):
        self._check(h)
        cols = self._columns(h)
        v = np.zeros(self.width, dtype=complex)
        v[cols] = h.coeffs
        return v

    def _from_vec(self, v):
        if self._reg_cache is None:
            self._reg_cache = (np.array(self._reg_x, dtype=np.uint64), np.array(self._reg_z, dtype=np.uint64))
        reg_x, reg_z = self._reg_cache
        nz = np.flatnonzero(v)
        return PauliSum.from_arrays(self._n, reg_x[nz], reg_z[nz], v[nz])

    def _overlaps_vec(self, v):
        parts = [conj @ v[:width] for conj, _, width in self._all_blocks()]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)

    def _axpy_vec(self, v, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex)
        if len(coeffs) != len(self):
            raise InvalidInputError(f"length mismatch: {len(self)} operators, {len(coeffs)} coefficients")
        out = v.copy()
        start = 0
        for _, mat, width in self._all_blocks():
            stop = start + mat.shape[0]
            out[:width] -= mat.T @ coeffs[start:stop]
            start = stop
        return out

    def overlaps(self, h):
        return self._overlaps_vec(self._to_vec(h))

    def residual(self, h, coeffs):
        v = self._axpy_vec(self._to_vec(h), coeffs)
        return self._from_vec(v), float(np.linalg.norm(v))

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
        return self._from_vec(v), first, float(np.linalg.norm(v))

    def solve_residual(self, h, solve, passes=1):
        v = self._to_vec(h)
        beta = None
        for _ in range(passes):
            overlaps = self._overlaps_vec(v)
            if beta is None:
                beta = overlaps
            v = self._axpy_vec(v, solve(overlaps))
        return self._from_vec(v), beta, float(np.linalg.norm(v))


# -- text format ---------------------------------------------------------------

_REAL = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_WORD = re.compile(r"[IXYZ]+")
_WS = re.compile(r"\s*")


class _Scanner:
    def __init__(self, text, line, col0):
        self.text, self.pos, self.line, self.col0 = text, 0, line, col0

    def error(self, msg, pos=None):
        raise PauliParseError(msg, line=self.line, column=self.col0 + (self.pos if pos is None else pos) + 1)

    def skip(self):
        self.pos = _WS.match(self.text, self.pos).end()

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def real(self):
        self.skip()
        m = _REAL.match(self.text, self.pos)
        if not m:
            self.error("expected a real number")
        val = float(m.group())
        if not math.isfinite(val):
            self.error("coefficient overflows double precision")
        self.pos = m.end()
        return val

    def expect(self, ch):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1


def parse_pauli_sum(text: str, n: int | None = None, *, line: int = 1, column: int = 1) -> PauliSum:
    """Parse one operator in the Pauli-sum grammar.

    ``n`` is inferred from the first word when omitted. ``line`` and
    ``column`` offset the positions reported in :class:`PauliParseError`.
    """
    sc = _Scanner(text, line, column - 1)
    xs, zs, cs = [], [], []
    sign = 1.0
    while True:
        if sc.peek() == "(":
            sc.pos += 1
            re_ = sc.real()
            sc.expect(",")
            im = sc.real()
            sc.expect(")")
            coeff = complex(re_, im)
        else:
            coeff = complex(sc.real())
        sc.skip()
        m = _WORD.match(sc.text, sc.pos)
        if not m:
            sc.error("expected a Pauli word over IXYZ")
        word = m.group()
        if n is None:
            n = len(word)
            if n > MAX_QUBITS:
                sc.error(f"words longer than {MAX_QUBITS} qubits are not supported")
        if len(word) != n:
            sc.error(f"word {word!r} has length {len(word)}, expected {n}")
        p = PauliString.from_label(word)
        sc.pos = m.end()
        xs.append(p.x)
        zs.append(p.z)
        cs.append(sign * coeff)
        nxt = sc.peek()
        if nxt == "":
            break
        if nxt not in "+-":
            sc.error(f"unexpected character {nxt!r}")
        sign = 1.0 if nxt == "+" else -1.0
        sc.pos += 1
    return PauliSum.from_arrays(n, np.array(xs, dtype=np.uint64), np.array(zs, dtype=np.uint64), np.array(cs))


def _fmt_real(v: float) -> str:
    return repr(float(v))


def format_pauli_sum(op: PauliSum) -> str:
    """Inverse of :func:`parse_pauli_sum`; coefficients round-trip exactly."""
    if not len(op):
        return "0 " + "I" * op.num_qubits
    parts = []
    for p, c in op.terms():
        coeff = _fmt_real(c.real) if c.imag == 0 else f"({_fmt_real(c.real)},{_fmt_real(c.imag)})"
        parts.append(f"{coeff} {p.label}")
    return " + ".join(parts)


def parse_pauli_file(text: str, n: int | None = None) -> list[PauliSum]:
    """Parse a generator file: one operator per non-blank line."""
    ops = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        op = parse_pauli_sum(body, n, line=lineno)
        n = op.num_qubits
        ops.append(op)
    return ops


def format_pauli_file(ops) -> str:
    return "".join(format_pauli_sum(op) + "\n" for op in ops)
