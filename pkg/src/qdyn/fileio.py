"""Text data files and the binary container for quantum objects and solver results.

Text format: optional ``#`` comment lines, then one line per matrix row with
tokens joined by the separator. The first header line written by
:func:`file_data_store` looks like::

    # shape=2x2 numtype=complex separator=comma numformat=decimal precision=12

Complex tokens are written as ``<re>+<im>j`` or ``<re>-<im>j``.

Binary container (little endian)::

    b"QOBJ2" | u16 version | u8 record tag (1 quantum object, 2 solver result) | record

A quantum-object record holds the kind code (u8), the dims as a JSON string
(u32 length + UTF-8), u64 rows/cols/nnz, then the CSC arrays: int64 row
indices, int64 column pointers and complex128 values.
"""
from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DataFormatError, DataLossError, IncompatibleFileError, StructuralError
from .qobj import KINDS, QuantumObject
from .solvers import Odedata

__all__ = [
    "TextDataFormat", "file_data_store", "file_data_read",
    "qsave", "qload", "MAGIC", "FORMAT_VERSION",
]

MAGIC = b"QOBJ2"
FORMAT_VERSION = 1
TAG_QOBJ = 1
TAG_ODEDATA = 2
REAL_TOLERANCE = 1e-12

_SEPARATOR_NAMES = {",": "comma", " ": "space", "\t": "tab", ";": "semicolon", "|": "pipe"}
_SEPARATOR_CHARS = {v: k for k, v in _SEPARATOR_NAMES.items()}


@dataclass(frozen=True)
class TextDataFormat:
    separator: str = ","
    numtype: str = "complex"
    numformat: str = "decimal"
    precision: int = 12

    def __post_init__(self):
        if self.separator not in _SEPARATOR_NAMES:
            raise StructuralError(f"unsupported separator {self.separator!r}")
        if self.numtype not in ("real", "complex"):
            raise StructuralError(f"numtype must be 'real' or 'complex', got {self.numtype!r}")
        if self.numformat not in ("decimal", "exp"):
            raise StructuralError(f"numformat must be 'decimal' or 'exp', got {self.numformat!r}")
        if not isinstance(self.precision, int) or not 0 <= self.precision <= 17:
            raise StructuralError("precision must be an integer in [0, 17]")


def _fmt_real(x, spec):
    return format(float(x), spec)


def _fmt_complex(z, spec):
    re_s = format(z.real, spec)
    sign = "-" if z.imag < 0 else "+"
    return f"{re_s}{sign}{format(abs(z.imag), spec)}j"


def file_data_store(path, data, numtype=None, numformat=None, sep=None, precision=None, fmt=None,
                    comments=()):
    """Write a real or complex matrix to a text file.

    Keyword arguments override the corresponding fields of ``fmt``. With the
    default ``numtype="complex"`` a real-valued array is still written with
    real tokens; ``numtype="real"`` refuses to drop imaginary parts larger
    than 1e-12. ``comments`` are extra ``#`` lines placed after the header.
    """
    fmt = fmt or TextDataFormat()
    fmt = TextDataFormat(
        sep if sep is not None else fmt.separator,
        numtype or fmt.numtype,
        numformat or fmt.numformat,
        precision if precision is not None else fmt.precision,
    )
    arr = np.asarray(data)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.size == 0:
        raise StructuralError("file_data_store needs a nonempty 1-D or 2-D array")
    is_complex = np.iscomplexobj(arr)
    if fmt.numtype == "real":
        if is_complex:
            if np.any(np.abs(arr.imag) > REAL_TOLERANCE):
                raise DataLossError("numtype='real' would discard nonzero imaginary parts")
            arr = arr.real
        is_complex = False
    arr = arr.astype(np.complex128 if is_complex else float)
    spec = f".{fmt.precision}{'f' if fmt.numformat == 'decimal' else 'e'}"
    render = (lambda v: _fmt_complex(v, spec)) if is_complex else (lambda v: _fmt_real(v, spec))
    header = (
        f"# shape={arr.shape[0]}x{arr.shape[1]} numtype={'complex' if is_complex else 'real'} "
        f"separator={_SEPARATOR_NAMES[fmt.separator]} numformat={fmt.numformat} precision={fmt.precision}"
    )
    lines = [header] + [f"# {c}" for c in comments]
    for row in arr:
        lines.append(fmt.separator.join(render(v) for v in row))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


_HEADER_RE = re.compile(r"(\w+)=(\S+)")


def _parse_token(tok, lineno, pos):
    try:
        if tok.endswith("j"):
            return complex(tok), True
        return float(tok), False
    except ValueError:
        raise DataFormatError(
            f"line {lineno}, field {pos}: cannot parse {tok!r} as a number", lineno, pos
        ) from None


def file_data_read(path, sep=None):
    """Read a matrix written by :func:`file_data_store` (or any delimited numeric file).

    The separator comes from ``sep``, else from the header, else it is
    guessed from the first data line. Returns a float array unless a complex
    token is present.
    """
    header = {}
    rows = []
    any_complex = False
    width = None
    with open(path, encoding="ascii", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if not header:
                    found = dict(_HEADER_RE.findall(line))
                    if "shape" in found:
                        header = found
                continue
            if sep is None:
                name = header.get("separator")
                if name in _SEPARATOR_CHARS:
                    sep = _SEPARATOR_CHARS[name]
                else:
                    sep = next((c for c in (",", ";", "\t", "|") if c in line), " ")
            toks = line.split() if sep in (" ", "\t") else [t.strip() for t in line.split(sep)]
            if width is None:
                width = len(toks)
            elif len(toks) != width:
                raise DataFormatError(
                    f"line {lineno}: expected {width} fields, found {len(toks)}", lineno, None
                )
            vals = []
            for pos, tok in enumerate(toks):
                v, c = _parse_token(tok, lineno, pos)
                any_complex |= c
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DataFormatError("no data rows found")
    out = np.array(rows, dtype=np.complex128 if any_complex else float)
    if "shape" in header:
        try:
            r, c = (int(x) for x in header["shape"].split("x"))
        except ValueError:
            raise DataFormatError(f"malformed shape in header: {header['shape']!r}", 1, None) from None
        if out.shape != (r, c):
            raise DataFormatError(f"header shape {r}x{c} does not match data shape {out.shape}")
    return out


# ---------------------------------------------------------------------------
# binary container


class _Writer:
    def __init__(self):
        self.parts = []

    def pack(self, fmt, *vals):
        self.parts.append(struct.pack("<" + fmt, *vals))

    def string(self, s):
        b = s.encode("utf-8")
        self.pack("I", len(b))
        self.parts.append(b)

    def array(self, arr, dtype):
        self.parts.append(np.ascontiguousarray(arr, dtype=dtype).tobytes())

    def bytes(self):
        return b"".join(self.parts)


class _Reader:
    def __init__(self, buf):
        self.buf = buf
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise DataFormatError(f"file truncated at byte {len(self.buf)} (needed {self.pos + n})",
                                  None, self.pos)
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt):
        fmt = "<" + fmt
        vals = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return vals if len(vals) > 1 else vals[0]

    def string(self):
        n = self.unpack("I")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise DataFormatError("invalid UTF-8 string", None, self.pos) from None

    def array(self, dtype, count):
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt).copy()


def _write_qobj(w, obj):
    csc = sp.csc_array(obj.data)
    w.pack("B", KINDS.index(obj.kind))
    w.string(json.dumps(obj.dims))
    w.pack("QQQ", csc.shape[0], csc.shape[1], csc.nnz)
    w.array(csc.indices, "<i8")
    w.array(csc.indptr, "<i8")
    w.array(csc.data, "<c16")


def _read_qobj(r):
    kind_code = r.unpack("B")
    if kind_code >= len(KINDS):
        raise DataFormatError(f"unknown object kind code {kind_code}", None, r.pos)
    try:
        dims = json.loads(r.string())
    except json.JSONDecodeError:
        raise DataFormatError("malformed dims record", None, r.pos) from None
    rows, cols, nnz = r.unpack("QQQ")
    indices = r.array("<i8", nnz)
    indptr = r.array("<i8", cols + 1)
    values = r.array("<c16", nnz)
    try:
        csc = sp.csc_array((values, indices, indptr), shape=(rows, cols))
        obj = QuantumObject(csc, dims)
    except (ValueError, StructuralError) as exc:
        raise DataFormatError(f"inconsistent quantum object record: {exc}", None, r.pos) from None
    if obj.kind != KINDS[kind_code]:
        raise DataFormatError(f"stored kind {KINDS[kind_code]!r} does not match data", None, r.pos)
    return obj


def _write_float_lists(w, lists, dtype):
    if lists is None:
        w.pack("B", 0)
        return
    w.pack("B", 1)
    w.pack("Q", len(lists))
    for seq in lists:
        w.pack("Q", len(seq))
        w.array(seq, dtype)


def _read_float_lists(r, dtype, cast):
    if not r.unpack("B"):
        return None
    out = []
    for _ in range(r.unpack("Q")):
        n = r.unpack("Q")
        out.append([cast(v) for v in r.array(dtype, n)])
    return out


def _write_odedata(w, res):
    w.string(res.solver)
    times = np.asarray(res.times, dtype=float)
    w.pack("Q", times.size)
    w.array(times, "<f8")
    w.pack("Q", len(res.states))
    for s in res.states:
        _write_qobj(w, s)
    w.pack("Q", len(res.expect))
    for e in res.expect:
        e = np.asarray(e)
        cplx = np.iscomplexobj(e)
        w.pack("BQ", int(cplx), e.size)
        w.array(e, "<c16" if cplx else "<f8")
    w.pack("q", -1 if res.ntraj is None else int(res.ntraj))
    _write_float_lists(w, res.col_times, "<f8")
    _write_float_lists(w, res.col_which, "<i8")


def _read_odedata(r):
    solver = r.string()
    times = r.array("<f8", r.unpack("Q"))
    states = [_read_qobj(r) for _ in range(r.unpack("Q"))]
    expect = []
    for _ in range(r.unpack("Q")):
        cplx, n = r.unpack("BQ")
        expect.append(r.array("<c16" if cplx else "<f8", n))
    ntraj = r.unpack("q")
    col_times = _read_float_lists(r, "<f8", float)
    col_which = _read_float_lists(r, "<i8", int)
    return Odedata(solver, times, states, expect, None if ntraj < 0 else ntraj, col_times, col_which)


def qsave(path, obj):
    """Write a QuantumObject or Odedata to the binary container."""
    w = _Writer()
    w.parts.append(MAGIC)
    w.pack("H", FORMAT_VERSION)
    if isinstance(obj, QuantumObject):
        w.pack("B", TAG_QOBJ)
        _write_qobj(w, obj)
    elif isinstance(obj, Odedata):
        w.pack("B", TAG_ODEDATA)
        _write_odedata(w, obj)
    else:
        raise StructuralError(f"cannot save objects of type {type(obj).__name__}")
    with open(path, "wb") as fh:
        fh.write(w.bytes())


def qload(path):
    """Read an object written by :func:`qsave`."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[: len(MAGIC)] != MAGIC:
        raise IncompatibleFileError(f"{path}: not a qdyn binary file (bad magic)", None, 0)
    r = _Reader(buf)
    r.take(len(MAGIC))
    version = r.unpack("H")
    if version != FORMAT_VERSION:
        raise IncompatibleFileError(f"{path}: unsupported format version {version}", None, len(MAGIC))
    tag = r.unpack("B")
    if tag == TAG_QOBJ:
        obj = _read_qobj(r)
    elif tag == TAG_ODEDATA:
        obj = _read_odedata(r)
    else:
        raise IncompatibleFileError(f"{path}: unknown record tag {tag}", None, r.pos - 1)
    if r.pos != len(buf):
        raise DataFormatError(f"{path}: {len(buf) - r.pos} trailing bytes after record", None, r.pos)
    return obj
