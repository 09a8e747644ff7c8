import numpy as np
import pytest
from hypothesis import given

from conftest import coefficient, dense_inner, dense_oracle, pauli_pairs, pauli_triples, random_dense, random_pauli_sum
from lieclosure import DenseOperator, InvalidInputError, PauliSum, axpy_dot, commutator, inner_product, is_zero, norm
from lieclosure.ops import OperatorStack


def P(text, n=None):
    from lieclosure import parse_pauli_sum

    return parse_pauli_sum(text, n)


class TestInnerProduct:
    def test_self_overlap_of_x(self):
        assert inner_product(P("1 X"), P("1 X")) == 1.0

    def test_orthogonal_strings(self):
        assert inner_product(P("1 X"), P("1 Z")) == 0

    def test_two_qubit_example(self):
        a = P("0.5 XX + (0,0.25) YZ")
        b = P("2 XX")
        assert inner_product(a, b) == pytest.approx(1.0)
        assert dense_inner(dense_oracle(a), dense_oracle(b)) == pytest.approx(1.0)

    def test_backend_mismatch(self):
        with pytest.raises(InvalidInputError, match="backend"):
            inner_product(P("1 X"), DenseOperator(np.eye(2)))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            inner_product(P("1 X"), P("1 XX"))

    def test_dense_matches_trace_formula(self, rng):
        a, b = random_dense(rng, 4), random_dense(rng, 4)
        assert inner_product(a, b) == pytest.approx(dense_inner(a.matrix, b.matrix), rel=1e-14)


class TestNorm:
    def test_null(self):
        assert norm(PauliSum.zero(2)) == 0.0

    def test_single_string(self):
        assert norm(P("(0.6,-0.8) XYZ")) == pytest.approx(1.0)

    def test_three_x_four_iz(self):
        op = P("3 X + (0,4) Z")
        assert norm(op) == pytest.approx(5.0)
        assert norm(DenseOperator(dense_oracle(op))) == pytest.approx(5.0)


class TestCommutator:
    def test_x_with_itself(self):
        assert len(commutator(P("1 X"), P("1 X"))) == 0

    def test_x_y(self):
        assert commutator(P("1 X"), P("1 Y")) == P("(0,2) Z")

    def test_two_qubit_against_dense(self):
        a, b = P("1 XX + 1 ZI"), P("1 IY")
        got = dense_oracle(commutator(a, b))
        A, B = dense_oracle(a), dense_oracle(b)
        np.testing.assert_allclose(got, A @ B - B @ A, atol=1e-14)

    def test_dense_backend(self, rng):
        a, b = random_dense(rng, 4), random_dense(rng, 4)
        c = commutator(a, b)
        np.testing.assert_allclose(c.matrix, a.matrix @ b.matrix - b.matrix @ a.matrix)


class TestAxpyDot:
    def test_empty_gives_null(self):
        out = axpy_dot([], [], like=P("1 XX"))
        assert len(out) == 0 and out.num_qubits == 2

    def test_empty_needs_template(self):
        with pytest.raises(InvalidInputError):
            axpy_dot([], [])

    def test_x_minus_z(self):
        assert axpy_dot([P("1 X"), P("1 Z")], [1, -1]) == P("1 X + -1 Z")

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError, match="length"):
            axpy_dot([P("1 X")], [1, 2])

    def test_random_combination_matches_dense(self, rng):
        ops = [random_pauli_sum(rng, 3, 4) for _ in range(3)]
        coeffs = rng.normal(size=3) + 1j * rng.normal(size=3)
        got = dense_oracle(axpy_dot(ops, coeffs))
        want = sum(c * dense_oracle(o) for c, o in zip(coeffs, ops))
        np.testing.assert_allclose(got, want, atol=1e-13)


class TestIsZero:
    def test_null(self):
        assert is_zero(PauliSum.zero(1), 1e-10)

    def test_unit_x(self):
        assert not is_zero(P("1 X"), 1e-10)

    def test_tiny_x(self):
        assert is_zero(P("1e-12 X"), 1e-10)

    def test_negative_tolerance(self):
        with pytest.raises(InvalidInputError):
            is_zero(P("1 X"), -1.0)


class TestGenericStack:
    """The list-based stack must agree with the vectorized backends."""

    def test_overlaps_and_residual(self, rng):
        ops = [random_pauli_sum(rng, 2, 3) for _ in range(4)]
        h = random_pauli_sum(rng, 2, 5)
        generic, fast = OperatorStack(), ops[0].new_stack()
        for o in ops:
            generic.append(o)
            fast.append(o)
        np.testing.assert_allclose(generic.overlaps(h), fast.overlaps(h), atol=1e-14)
        x = rng.normal(size=4) + 0j
        r1, n1 = generic.residual(h, x)
        r2, n2 = fast.residual(h, x)
        assert n1 == pytest.approx(n2, rel=1e-13)
        np.testing.assert_allclose(dense_oracle(r1), dense_oracle(r2), atol=1e-13)

    def test_project_out_empty(self):
        h = P("1 XY")
        resid, coeffs, nrm = OperatorStack().project_out(h)
        assert resid == h and len(coeffs) == 0 and nrm == 1.0

    def test_rejects_foreign_operator(self):
        stack = OperatorStack()
        stack.append(P("1 X"))
        with pytest.raises(InvalidInputError):
            stack.append(DenseOperator(np.eye(2)))


@given(pauli_pairs())
def test_conjugate_symmetry(pair):
    a, b = pair
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), rel=1e-14, abs=1e-300)


@given(pauli_pairs())
def test_cauchy_schwarz(pair):
    a, b = pair
    assert abs(inner_product(a, b)) <= norm(a) * norm(b) * (1 + 1e-12)


@given(pauli_triples(max_qubits=4), coefficient)
def test_commutator_bilinear(triple, alpha):
    a, b, c = triple
    lhs = commutator(a, b.scale(alpha).add(c))
    rhs = commutator(a, b).scale(alpha).add(commutator(a, c))
    scale = max(1.0, norm(a) * (abs(alpha) * norm(b) + norm(c)))
    assert norm(lhs - rhs) <= 1e-12 * scale


@given(pauli_triples())
def test_jacobi_identity(triple):
    a, b, c = triple
    total = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b))
    scale = max(1.0, norm(a) * norm(b) * norm(c))
    assert norm(total) <= 1e-10 * scale


@given(pauli_pairs())
def test_commutator_antisymmetric(pair):
    a, b = pair
    assert commutator(a, b) == commutator(b, a).scale(-1.0)
