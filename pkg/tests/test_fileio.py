import struct

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from qdyn import (
    DataFormatError,
    DataLossError,
    IncompatibleFileError,
    QuantumObject,
    StructuralError,
    TextDataFormat,
    basis,
    file_data_read,
    file_data_store,
    liouvillian,
    mcsolve,
    mesolve,
    num,
    qload,
    qsave,
    rand_dm,
    sigmam,
    sigmax,
    sigmaz,
    tensor,
)
from qdyn.fileio import FORMAT_VERSION, MAGIC


def data_lines(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def random_complex(shape, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestTextStore:
    def test_identity_rows(self, tmp_path):
        p = tmp_path / "eye.dat"
        file_data_store(p, np.eye(2))
        assert data_lines(p) == ["1.000000000000,0.000000000000", "0.000000000000,1.000000000000"]

    def test_complex_token(self, tmp_path):
        p = tmp_path / "z.dat"
        file_data_store(p, np.array([[1 + 2j]]))
        assert data_lines(p) == ["1.000000000000+2.000000000000j"]

    def test_negative_imaginary_token(self, tmp_path):
        p = tmp_path / "z.dat"
        file_data_store(p, np.array([[-0.5 - 0.25j]]), precision=3)
        assert data_lines(p) == ["-0.500-0.250j"]

    def test_header(self, tmp_path):
        p = tmp_path / "h.dat"
        file_data_store(p, np.zeros((3, 4)), sep=";", comments=["hello"])
        lines = p.read_text().splitlines()
        assert lines[0].startswith("#")
        for field in ("shape=3x4", "numtype=real", "separator=semicolon"):
            assert field in lines[0]
        assert lines[1] == "# hello"

    def test_exp_format(self, tmp_path):
        p = tmp_path / "e.dat"
        file_data_store(p, np.array([[12345.0, -0.001]]), numformat="exp", precision=4)
        assert data_lines(p) == ["1.2345e+04,-1.0000e-03"]

    def test_vector_stored_as_column(self, tmp_path):
        p = tmp_path / "v.dat"
        file_data_store(p, np.arange(3.0))
        assert file_data_read(p).shape == (3, 1)

    def test_real_refuses_imaginary_part(self, tmp_path):
        with pytest.raises(DataLossError):
            file_data_store(tmp_path / "x.dat", np.array([[1 + 1e-9j]]), numtype="real")

    def test_real_drops_negligible_imaginary_part(self, tmp_path):
        p = tmp_path / "x.dat"
        file_data_store(p, np.array([[1 + 1e-14j]]), numtype="real")
        out = file_data_read(p)
        assert out.dtype == float and out[0, 0] == 1.0

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(StructuralError):
            file_data_store(tmp_path / "x.dat", np.zeros((0, 3)))

    @pytest.mark.parametrize("kw", [{"separator": ":"}, {"numtype": "int"}, {"numformat": "hex"},
                                    {"precision": 18}])
    def test_invalid_format(self, kw):
        with pytest.raises(StructuralError):
            TextDataFormat(**kw)

    def test_format_object(self, tmp_path):
        p = tmp_path / "f.dat"
        file_data_store(p, np.eye(2), fmt=TextDataFormat(separator="\t", precision=1))
        assert data_lines(p) == ["1.0\t0.0", "0.0\t1.0"]


class TestTextRead:
    def test_complex_roundtrip(self, tmp_path):
        p = tmp_path / "c.dat"
        M = random_complex((5, 7), 0)
        file_data_store(p, M)
        out = file_data_read(p)
        assert out.dtype == np.complex128
        assert np.abs(out - M).max() <= 1e-11

    @pytest.mark.parametrize("sep", [",", " ", "\t", ";", "|"])
    def test_separators(self, tmp_path, sep):
        p = tmp_path / "s.dat"
        M = random_complex((3, 4), 1)
        file_data_store(p, M, sep=sep)
        assert np.abs(file_data_read(p) - M).max() <= 1e-11

    def test_exp_roundtrip(self, tmp_path):
        p = tmp_path / "e.dat"
        M = random_complex((4, 4), 2) * 1e-7
        file_data_store(p, M, numformat="exp")
        assert np.abs(file_data_read(p) - M).max() <= 1e-18

    def test_real_inferred(self, tmp_path):
        p = tmp_path / "r.dat"
        file_data_store(p, np.eye(3))
        out = file_data_read(p)
        assert out.dtype == float
        assert_array_equal(out, np.eye(3))

    def test_interleaved_comments(self, tmp_path):
        p = tmp_path / "c.dat"
        p.write_text("# first\n1,2\n# middle\n\n3,4\n# last\n")
        assert_array_equal(file_data_read(p), [[1, 2], [3, 4]])

    def test_headerless_separator_guess(self, tmp_path):
        p = tmp_path / "g.dat"
        p.write_text("1;2;3\n4;5;6\n")
        assert_array_equal(file_data_read(p), [[1, 2, 3], [4, 5, 6]])

    def test_whitespace_columns(self, tmp_path):
        p = tmp_path / "w.dat"
        p.write_text("1   2\n3 4\n")
        assert_array_equal(file_data_read(p), [[1, 2], [3, 4]])

    def test_separator_override(self, tmp_path):
        p = tmp_path / "o.dat"
        p.write_text("# shape=2x2 numtype=real separator=comma\n1;2\n3;4\n")
        assert_array_equal(file_data_read(p, sep=";"), [[1, 2], [3, 4]])

    def test_ragged_row_names_line(self, tmp_path):
        p = tmp_path / "r.dat"
        p.write_text("# header\n1,2,3\n4,5\n")
        with pytest.raises(DataFormatError) as info:
            file_data_read(p)
        assert info.value.line == 3
        assert "line 3" in str(info.value)

    def test_bad_token_position(self, tmp_path):
        p = tmp_path / "b.dat"
        p.write_text("1,2,3\n4,oops,6\n")
        with pytest.raises(DataFormatError) as info:
            file_data_read(p)
        assert (info.value.line, info.value.position) == (2, 1)

    def test_header_shape_mismatch(self, tmp_path):
        p = tmp_path / "m.dat"
        p.write_text("# shape=3x2 numtype=real separator=comma\n1,2\n3,4\n")
        with pytest.raises(DataFormatError):
            file_data_read(p)

    def test_no_rows(self, tmp_path):
        p = tmp_path / "n.dat"
        p.write_text("# only a comment\n")
        with pytest.raises(DataFormatError):
            file_data_read(p)


def assert_same_qobj(a, b):
    assert a.dims == b.dims and a.kind == b.kind
    assert_array_equal(a.full(), b.full())


class TestBinary:
    def test_random_operator_bitwise(self, tmp_path):
        p = tmp_path / "q.qobj"
        rng = np.random.default_rng(7)
        op = QuantumObject(random_complex((8, 8), 7) * (rng.random((8, 8)) < 0.5))
        qsave(p, op)
        back = qload(p)
        assert_same_qobj(op, back)

    @pytest.mark.parametrize("make", [
        lambda: basis(5, 2),
        lambda: basis(5, 2).dag(),
        lambda: rand_dm(4, seed=1),
        lambda: tensor(sigmax(), sigmaz()),
    ])
    def test_kinds_and_dims(self, tmp_path, make):
        p = tmp_path / "k.qobj"
        obj = make()
        qsave(p, obj)
        assert_same_qobj(obj, qload(p))

    def test_superoperator(self, tmp_path):
        L = liouvillian(sigmaz(), [sigmam()])
        qsave(tmp_path / "l.qobj", L)
        assert_same_qobj(L, qload(tmp_path / "l.qobj"))

    def test_header_layout(self, tmp_path):
        p = tmp_path / "q.qobj"
        qsave(p, sigmax())
        raw = p.read_bytes()
        assert raw[:5] == MAGIC
        assert struct.unpack("<H", raw[5:7])[0] == FORMAT_VERSION

    def test_expect_record(self, tmp_path):
        t = np.linspace(0, 10, 51)
        res = mesolve(0 * sigmaz(), basis(2, 0), t, [sigmam()], [num(2)])
        qsave(tmp_path / "r.qobj", res)
        back = qload(tmp_path / "r.qobj")
        assert back.solver == res.solver
        assert_array_equal(back.times, res.times)
        assert len(back.expect) == 1
        assert_array_equal(back.expect[0], res.expect[0])

    def test_states_record(self, tmp_path):
        t = np.linspace(0, 1, 5)
        res = mesolve(sigmax(), basis(2, 0), t, [sigmam()], [])
        qsave(tmp_path / "s.qobj", res)
        back = qload(tmp_path / "s.qobj")
        assert len(back.states) == len(res.states)
        for a, b in zip(res.states, back.states):
            assert_same_qobj(a, b)

    def test_trajectory_record(self, tmp_path):
        t = np.linspace(0, 3, 7)
        res = mcsolve(0 * sigmaz(), basis(2, 0), t, [sigmam()], [num(2)], ntraj=5, seed=3)
        qsave(tmp_path / "m.qobj", res)
        back = qload(tmp_path / "m.qobj")
        assert back.ntraj == 5
        assert [list(c) for c in back.col_times] == [list(c) for c in res.col_times]
        assert [list(c) for c in back.col_which] == [list(c) for c in res.col_which]
        assert_array_equal(back.expect[0], res.expect[0])

    def test_text_file_is_incompatible(self, tmp_path):
        p = tmp_path / "t.dat"
        file_data_store(p, np.eye(2))
        with pytest.raises(IncompatibleFileError):
            qload(p)

    def test_version_mismatch(self, tmp_path):
        p = tmp_path / "v.qobj"
        qsave(p, sigmax())
        raw = bytearray(p.read_bytes())
        raw[5:7] = struct.pack("<H", FORMAT_VERSION + 1)
        p.write_bytes(bytes(raw))
        with pytest.raises(IncompatibleFileError):
            qload(p)

    def test_truncated(self, tmp_path):
        p = tmp_path / "t.qobj"
        qsave(p, rand_dm(3, seed=2))
        raw = p.read_bytes()
        p.write_bytes(raw[:-9])
        with pytest.raises(DataFormatError) as info:
            qload(p)
        assert not isinstance(info.value, IncompatibleFileError)

    def test_trailing_bytes(self, tmp_path):
        p = tmp_path / "x.qobj"
        qsave(p, sigmax())
        p.write_bytes(p.read_bytes() + b"\0")
        with pytest.raises(DataFormatError):
            qload(p)

    def test_unsupported_object(self, tmp_path):
        with pytest.raises(StructuralError):
            qsave(tmp_path / "x.qobj", np.eye(2))
