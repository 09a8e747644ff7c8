import json
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lieclosure import InvalidInputError
from lieclosure.cli import (
    EXIT_CAPACITY,
    EXIT_DEGENERATE,
    EXIT_INVALID,
    EXIT_MISMATCH,
    EXIT_OK,
    SCHEMA,
    ResultRecord,
    RunConfig,
    main,
    read_records,
    write_records,
)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def genfile(tmp_path):
    def make(text):
        path = tmp_path / "gens.txt"
        path.write_text(text)
        return str(path)

    return make


class TestCompute:
    def test_tfim_n4_prints_dimension(self, capsys):
        code, out, _ = run(capsys, "compute", "--ansatz", "tfim_hva_open", "--qubits", "4", "--method", "orthonorm-dimonly")
        assert code == EXIT_OK
        assert out.splitlines()[0] == "dimension: 16"  # true closure dimension, see README
        assert out.splitlines()[1].startswith("runtime: ")

    def test_single_generator_file(self, capsys, genfile):
        code, out, _ = run(capsys, "compute", "--generators", genfile("1 X\n"))
        assert code == EXIT_OK and "dimension: 1" in out

    def test_hea_matrix_inversion(self, capsys):
        code, out, _ = run(capsys, "compute", "--ansatz", "hea", "--qubits", "3", "--method", "matrix-inversion")
        assert code == EXIT_OK and "dimension: 63" in out

    def test_writes_record(self, capsys, tmp_path):
        out_path = tmp_path / "r.jsonl"
        run(capsys, "compute", "--ansatz", "hea", "--qubits", "2", "--out", str(out_path), "--seed", "3")
        (rec,) = read_records(out_path)
        assert rec.schema == SCHEMA and rec.dimension == 15 and rec.family == "hea"
        assert rec.commutators == 15 * 14 // 2

    def test_table_format(self, capsys, tmp_path):
        out_path = tmp_path / "r.txt"
        run(capsys, "compute", "--ansatz", "hea", "--qubits", "2", "--out", str(out_path), "--format", "table")
        lines = out_path.read_text().splitlines()
        assert lines[0].split()[:3] == ["source", "n", "method"]
        assert "ansatz:hea" in lines[2]

    def test_basis_listing(self, capsys, tmp_path):
        path = tmp_path / "basis.txt"
        run(capsys, "compute", "--generators", _write(tmp_path, "1 X\n1 Z\n"), "--basis-out", str(path))
        assert path.read_text().splitlines() == ["1.0 X", "1.0 Z", "(0.0,1.0) Y"]

    def test_dense_backend_and_options(self, capsys):
        code, out, _ = run(
            capsys, "compute", "--ansatz", "xxz_hva", "--qubits", "4", "--option", "subspace=zero_magnetization", "--backend", "dense"
        )
        assert code == EXIT_OK and out.startswith("dimension: ")

    def test_rank_method_on_pauli_input(self, capsys):
        code, out, _ = run(capsys, "compute", "--ansatz", "hea", "--qubits", "2", "--method", "standard-rank")
        assert code == EXIT_OK and "dimension: 15" in out

    def test_threads(self, capsys):
        code, out, _ = run(capsys, "compute", "--ansatz", "hea", "--qubits", "2", "--threads", "3")
        assert code == EXIT_OK and "dimension: 15" in out


def _write(tmp_path, text):
    path = tmp_path / "g.txt"
    path.write_text(text)
    return str(path)


class TestExitCodes:
    def test_capacity(self, capsys):
        code, _, err = run(capsys, "compute", "--ansatz", "hea", "--qubits", "3", "--max-dim", "10")
        assert code == EXIT_CAPACITY and "cap" in err

    @pytest.mark.parametrize(
        "argv",
        [
            ["compute", "--ansatz", "hea", "--qubits", "3", "--tol", "0"],
            ["compute", "--ansatz", "hea", "--qubits", "3", "--threads", "0"],
            ["compute", "--ansatz", "hea", "--qubits", "3", "--max-dim", "0"],
            ["compute", "--ansatz", "hea"],
            ["compute"],
            ["compute", "--ansatz", "xxz_hva", "--qubits", "3"],
            ["compute", "--method", "svd", "--ansatz", "hea", "--qubits", "2"],
            ["compute", "--ansatz", "hea", "--qubits", "2", "--option", "oops"],
            ["frobnicate"],
        ],
    )
    def test_invalid(self, capsys, argv):
        code, _, _ = run(capsys, *argv)
        assert code == EXIT_INVALID

    def test_parse_error_reports_position(self, capsys, genfile):
        code, _, err = run(capsys, "compute", "--generators", genfile("1 X\n1 Q\n"))
        assert code == EXIT_INVALID and "line 2" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "compute", "--generators", str(tmp_path / "nope.txt"))
        assert code == EXIT_INVALID

    def test_degeneracy_code(self, capsys, monkeypatch):
        from lieclosure import cli
        from lieclosure.errors import NumericalDegeneracyError

        def boom(*a, **k):
            raise NumericalDegeneracyError("Schur complement too small", index=3)

        monkeypatch.setattr(cli, "run_closure", boom)
        code, _, err = run(capsys, "compute", "--ansatz", "hea", "--qubits", "2")
        assert code == EXIT_DEGENERATE and "Schur" in err


class TestValidate:
    def test_only_hea_passes(self, capsys):
        code, out, _ = run(capsys, "validate", "--only", "hea")
        assert code == EXIT_OK
        assert out.count("PASS") == 3 and "spin_glass" not in out

    def test_degenerate_tolerance_reports_failures(self, capsys):
        code, out, _ = run(capsys, "validate", "--only", "hea", "--tol", "1.0")
        assert code == EXIT_MISMATCH
        assert "FAIL" in out and "failed" in out

    def test_records(self, capsys, tmp_path):
        path = tmp_path / "v.jsonl"
        run(capsys, "validate", "--only", "hea", "--out", str(path))
        recs = read_records(path)
        assert [r.n for r in recs] == [2, 3, 4]
        assert all(r.status == "pass" and r.expected == r.dimension for r in recs)

    def test_idempotent(self, capsys):
        _, first, _ = run(capsys, "validate", "--only", "hea")
        _, second, _ = run(capsys, "validate", "--only", "hea")
        strip = lambda text: [line.rsplit(None, 1)[0] for line in text.splitlines()]  # drop timing column
        assert strip(first) == strip(second)


class TestBench:
    def test_grid(self, capsys, tmp_path):
        path = tmp_path / "b.jsonl"
        code, out, _ = run(capsys, "bench", "--sizes", "2", "3", "--methods", "orthonorm", "standard-rank", "--out", str(path))
        recs = read_records(path)
        assert code == EXIT_OK and len(recs) == 4
        assert {(r.n, r.method) for r in recs} == {(2, "orthonorm"), (2, "standard-rank"), (3, "orthonorm"), (3, "standard-rank")}
        header = out.splitlines()[0].split()
        assert header == ["family", "n", "dimension", "orthonorm", "standard-rank"]

    def test_timeout_recorded(self, capsys, tmp_path):
        path = tmp_path / "b.jsonl"
        code, out, _ = run(capsys, "bench", "--sizes", "6", "--methods", "standard-rank", "--timeout", "1", "--out", str(path))
        (rec,) = read_records(path)
        assert code == EXIT_OK and rec.status == "timeout" and "timeout" in out

    def test_table_output(self, capsys, tmp_path):
        path = tmp_path / "b.txt"
        run(capsys, "bench", "--sizes", "2", "--methods", "orthonorm", "--format", "table", "--out", str(path))
        assert path.read_text().splitlines()[0].split() == ["family", "n", "dimension", "orthonorm"]


class TestCheck:
    def test_dependent(self, capsys, genfile):
        code, out, _ = run(capsys, "check", "--generators", genfile("1 X\n1 Z\n"), "--candidate", "1 X + -2 Z")
        assert code == EXIT_OK and "independent: false" in out

    def test_independent(self, capsys, genfile):
        code, out, _ = run(capsys, "check", "--generators", genfile("1 X\n1 Z\n"), "--candidate", "(0,1) Y")
        assert "independent: true" in out and "residual: 1.0" in out

    def test_rank_method(self, capsys, genfile):
        _, out, _ = run(capsys, "check", "--generators", genfile("1 XX\n1 ZZ\n"), "--candidate", "1 YY", "--method", "standard-rank")
        assert "independent: true" in out

    def test_null_candidate(self, capsys, genfile):
        _, out, _ = run(capsys, "check", "--generators", genfile("1 X\n"), "--candidate", "0 I")
        assert "independent: false" in out


records = st.builds(
    ResultRecord,
    command=st.sampled_from(["compute", "bench", "validate"]),
    source=st.text(max_size=20),
    method=st.sampled_from(["orthonorm", "matrix-inversion"]),
    backend=st.sampled_from(["pauli", "dense"]),
    tol=st.floats(1e-16, 1.0),
    status=st.sampled_from(["ok", "timeout", "pass"]),
    n=st.none() | st.integers(2, 12),
    dimension=st.none() | st.integers(0, 10**6),
    wall_time=st.none() | st.floats(0, 1e5, allow_nan=False),
    warnings=st.lists(
        st.fixed_dictionaries(
            {"kind": st.sampled_from(["near-threshold", "ill-conditioned"]), "residual": st.floats(0, 1), "where": st.tuples(st.integers(0, 99), st.integers(0, 99))}
        ),
        max_size=3,
    ),
)


@given(records)
def test_record_round_trip(rec):
    assert ResultRecord.from_json(rec.to_json()) == rec


def test_records_file_round_trip(tmp_path):
    recs = [ResultRecord("compute", "file:x", "orthonorm", "pauli", 1e-8, dimension=3, warnings=[{"kind": "k", "where": (1, 0)}])]
    write_records(tmp_path / "x.jsonl", recs)
    assert read_records(tmp_path / "x.jsonl") == recs


def test_record_schema_checked():
    with pytest.raises(InvalidInputError):
        ResultRecord.from_json(json.dumps({"schema": "other/9"}))


def test_run_config_validation():
    with pytest.raises(InvalidInputError):
        RunConfig(fmt="csv")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lieclosure", "compute", "--ansatz", "hea", "--qubits", "2"], capture_output=True, text=True)
    assert proc.returncode == 0 and "dimension: 15" in proc.stdout
