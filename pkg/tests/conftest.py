import os
from functools import reduce

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from lieclosure import DenseOperator, PauliSum

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", deadline=None, max_examples=200, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# Plain Kronecker oracle, independent of the package's bit-trick expansion.
PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_label(label: str) -> np.ndarray:
    return reduce(np.kron, [PAULI[c] for c in label])


def dense_oracle(op: PauliSum) -> np.ndarray:
    d = 1 << op.num_qubits
    out = np.zeros((d, d), dtype=complex)
    for p, c in op.terms():
        out += c * kron_label(p.label)
    return out


def dense_inner(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.trace(a.conj().T @ b) / a.shape[0])


def labels(n: int):
    return st.text(alphabet="IXYZ", min_size=n, max_size=n)


# Keep magnitudes away from underflow; tiny coefficients are a drop-tolerance topic.
_part = st.floats(-2, 2, allow_nan=False, allow_infinity=False).filter(lambda v: v == 0 or abs(v) >= 1e-3)
coefficient = st.builds(complex, _part, _part)


@st.composite
def pauli_sums(draw, n=None, min_terms=1, max_terms=5, max_qubits=4):
    if n is None:
        n = draw(st.integers(1, max_qubits))
    terms = draw(st.dictionaries(labels(n), coefficient, min_size=min_terms, max_size=max_terms))
    return PauliSum(terms, n=n)


@st.composite
def pauli_pairs(draw, max_qubits=4, max_terms=5):
    n = draw(st.integers(1, max_qubits))
    return draw(pauli_sums(n, max_terms=max_terms)), draw(pauli_sums(n, max_terms=max_terms))


@st.composite
def pauli_triples(draw, max_qubits=3, max_terms=4):
    n = draw(st.integers(1, max_qubits))
    return tuple(draw(pauli_sums(n, max_terms=max_terms)) for _ in range(3))


def random_pauli_sum(rng: np.random.Generator, n: int, terms: int) -> PauliSum:
    out = {}
    for _ in range(terms):
        label = "".join(rng.choice(list("IXYZ"), size=n))
        out[label] = complex(rng.normal(), rng.normal())
    return PauliSum(out, n=n)


def random_dense(rng: np.random.Generator, d: int) -> DenseOperator:
    return DenseOperator(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
