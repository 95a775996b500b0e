"""Quantum objects: sparse complex matrices carrying tensor-product dims.

A :class:`QuantumObject` is immutable. Every operation returns a new object;
the underlying CSR arrays are marked read-only.
"""
from __future__ import annotations

import numbers
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .errors import DegenerateInputError, StructuralError, UnsupportedModeError

__all__ = [
    "QuantumObject",
    "EigResult",
    "tensor",
    "ptrace",
    "expm",
    "eigensolve",
    "groundstate",
    "norm",
    "matrix_element",
    "transform",
    "ket2dm",
    "identity_like",
]

KINDS = ("ket", "bra", "operator", "superoperator")

TIDYUP_ATOL = 1e-12
SPARSE_GROUNDSTATE_THRESHOLD = 64


def _is_nested(dims):
    return len(dims) > 0 and isinstance(dims[0], (list, tuple))


def _flat(side):
    """Flatten one side of a dims pair (operator-dims pairs for superoperators)."""
    out = []
    for d in side:
        if isinstance(d, (list, tuple)):
            out.extend(_flat(d))
        else:
            out.append(int(d))
    return out


def _prod(side):
    return int(np.prod(_flat(side))) if side else 1


def _copy_dims(dims):
    return [list(_copy_side(s)) for s in dims]


def _copy_side(side):
    return [_copy_side(x) if isinstance(x, (list, tuple)) else int(x) for x in side]


def _all_ones(side):
    return all(d == 1 for d in _flat(side))


def _sides_match(a, b):
    return a == b or (_all_ones(a) and _all_ones(b))


def _to_csr(data):
    if isinstance(data, QuantumObject):
        return data._data.copy()
    if sp.issparse(data):
        m = sp.csr_array(data, dtype=np.complex128, copy=True)
    else:
        arr = np.asarray(data, dtype=np.complex128)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        elif arr.ndim != 2:
            raise StructuralError(f"expected a matrix, got array of rank {arr.ndim}")
        m = sp.csr_array(arr)
    m.sum_duplicates()
    m.sort_indices()
    return m


def _freeze(m):
    for arr in (m.data, m.indices, m.indptr):
        arr.flags.writeable = False
    return m


class QuantumObject:
    """Sparse complex matrix plus tensor dims and a kind tag.

    Parameters
    ----------
    data : array_like or sparse matrix
        Matrix entries. A 1-D array is read as a column (ket).
    dims : list, optional
        ``[row_dims, col_dims]``. Defaults to ``[[rows], [cols]]``. For a
        superoperator each side is itself an operator dims pair.
    """

    __slots__ = ("_data", "_dims", "_kind")
    __array_ufunc__ = None

    def __init__(self, data, dims=None):
        if isinstance(data, QuantumObject) and dims is None:
            dims = data.dims
        m = _to_csr(data)
        rows, cols = m.shape
        if rows == 0 or cols == 0:
            raise StructuralError("quantum object data must be nonempty")
        if dims is None:
            dims = [[rows], [cols]]
        dims = _copy_dims(dims)
        _check_dims(dims, m.shape)
        self._data = _freeze(m)
        self._dims = dims
        self._kind = _infer_kind(dims, m.shape)

    @classmethod
    def _wrap(cls, m, dims):
        """Internal constructor; ``m`` must be an owned canonical CSR array."""
        obj = cls.__new__(cls)
        m = sp.csr_array(m, dtype=np.complex128)
        m.sum_duplicates()
        m.sort_indices()
        obj._data = _freeze(m)
        obj._dims = _copy_dims(dims)
        obj._kind = _infer_kind(obj._dims, m.shape)
        return obj

    # ------------------------------------------------------------------ props
    @property
    def data(self):
        """The CSR matrix (read-only arrays)."""
        return self._data

    @property
    def dims(self):
        return _copy_dims(self._dims)

    @property
    def shape(self):
        return self._data.shape

    @property
    def kind(self):
        return self._kind

    @property
    def isket(self):
        return self._kind == "ket"

    @property
    def isbra(self):
        return self._kind == "bra"

    @property
    def isoper(self):
        return self._kind == "operator"

    @property
    def issuper(self):
        return self._kind == "superoperator"

    @property
    def isherm(self):
        if self.shape[0] != self.shape[1]:
            return False
        diff = self._data - self._data.conj().T
        scale = max(1.0, _maxabs(self._data))
        return _maxabs(diff) <= 1e-12 * scale

    def full(self):
        """Dense copy of the data as a 2-D complex ndarray."""
        return self._data.toarray()

    def tr(self):
        if self.shape[0] != self.shape[1]:
            raise StructuralError("trace requires a square object")
        val = complex(self._data.diagonal().sum())
        return val.real if self.isherm else val

    def __repr__(self):
        head = f"QuantumObject(kind={self._kind}, dims={self._dims}, shape={self.shape})"
        if max(self.shape) <= 8:
            return head + "\n" + np.array2string(self.full(), precision=4, suppress_small=True)
        return head

    # -------------------------------------------------------------- unary ops
    def dag(self):
        return QuantumObject._wrap(self._data.conj().T.tocsr(), [self._dims[1], self._dims[0]])

    def trans(self):
        return QuantumObject._wrap(self._data.T.tocsr(), [self._dims[1], self._dims[0]])

    def conj(self):
        return QuantumObject._wrap(self._data.conj(), self._dims)

    def tidyup(self, atol=TIDYUP_ATOL):
        """Drop stored entries with magnitude below ``atol``."""
        m = self._data.copy()
        m.data[np.abs(m.data) < atol] = 0
        m.eliminate_zeros()
        return QuantumObject._wrap(m, self._dims)

    def unit(self):
        """Normalize: L2 norm for kets/bras, trace norm for operators."""
        n = self.norm()
        if n == 0:
            raise DegenerateInputError("cannot normalize a zero object")
        return self / n

    def norm(self, which=None):
        return norm(self, which)

    def expm(self):
        return expm(self)

    def ptrace(self, keep):
        return ptrace(self, keep)

    def transform(self, basis, inverse=False):
        return transform(self, basis, inverse)

    def matrix_element(self, bra, ket):
        return matrix_element(bra, self, ket)

    def eigenstates(self, sparse=False, k=None):
        """Eigenvalues (ascending) and eigenkets, in that order."""
        res = eigensolve(self, vectors=True, sparse=sparse, k=k)
        return res.values, res.vectors

    def eigenenergies(self, sparse=False, k=None):
        return eigensolve(self, vectors=False, sparse=sparse, k=k).values

    def groundstate(self, sparse=None):
        return groundstate(self, sparse=sparse)

    # ------------------------------------------------------------- arithmetic
    def __neg__(self):
        return QuantumObject._wrap(-self._data, self._dims)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, QuantumObject):
            if not _same_dims(self._dims, other._dims):
                raise StructuralError(f"incompatible dims {self._dims} and {other._dims}")
            return QuantumObject._wrap(self._data + other._data, self._dims)
        if isinstance(other, numbers.Number):
            if other == 0:
                return self
            if self.shape[0] != self.shape[1]:
                raise StructuralError("scalar addition requires a square object")
            ident = sp.identity(self.shape[0], dtype=np.complex128, format="csr")
            return QuantumObject._wrap(self._data + complex(other) * ident, self._dims)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (QuantumObject, numbers.Number)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, numbers.Number):
            return QuantumObject._wrap(self._data * complex(other), self._dims)
        if isinstance(other, QuantumObject):
            return _matmul(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, numbers.Number):
            return QuantumObject._wrap(self._data * complex(other), self._dims)
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, QuantumObject):
            return _matmul(self, other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, numbers.Number):
            return QuantumObject._wrap(self._data / complex(other), self._dims)
        return NotImplemented

    def __pow__(self, n):
        if not isinstance(n, numbers.Integral) or n < 0:
            raise UnsupportedModeError("only non-negative integer powers are supported")
        if self.shape[0] != self.shape[1]:
            raise StructuralError("power requires a square object")
        out = identity_like(self)
        for _ in range(int(n)):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, QuantumObject):
            return NotImplemented
        if not _same_dims(self._dims, other._dims) or self.shape != other.shape:
            return False
        return _maxabs(self._data - other._data) <= 1e-14 * max(1.0, _maxabs(self._data))

    __hash__ = None


def _maxabs(m):
    if sp.issparse(m):
        return float(np.abs(m.data).max()) if m.nnz else 0.0
    return float(np.abs(m).max()) if m.size else 0.0


def _same_dims(a, b):
    return _sides_match(a[0], b[0]) and _sides_match(a[1], b[1])


def _check_dims(dims, shape):
    if len(dims) != 2:
        raise StructuralError(f"dims must be a [rows, cols] pair, got {dims}")
    for side, n in zip(dims, shape):
        if not side:
            raise StructuralError(f"empty dims side in {dims}")
        if _is_nested(side) and (len(side) != 2 or not all(isinstance(s, list) for s in side)):
            raise StructuralError(f"superoperator dims side must be an operator dims pair, got {side}")
        if any(d < 1 for d in _flat(side)):
            raise StructuralError(f"dims entries must be positive, got {dims}")
        if _prod(side) != n:
            raise StructuralError(f"dims {dims} inconsistent with shape {shape}")
    if _is_nested(dims[0]) != _is_nested(dims[1]):
        raise StructuralError(f"mixed operator/superoperator dims {dims}")


def _infer_kind(dims, shape):
    if _is_nested(dims[0]):
        return "superoperator"
    rows, cols = shape
    if rows == 1 and cols == 1:
        return "operator"
    if cols == 1:
        return "ket"
    if rows == 1:
        return "bra"
    return "operator"


def _matmul(a, b):
    if a.issuper and not b.issuper:
        # superoperator acting on an operator (column-stacking vec)
        if b.kind != "operator" or not _same_dims(a._dims[1], b._dims):
            raise StructuralError(f"superoperator with dims {a._dims} cannot act on dims {b._dims}")
        n = b.shape[0]
        vec = b.full().reshape(-1, order="F")
        out = (a._data @ vec).reshape(n, n, order="F")
        return QuantumObject._wrap(sp.csr_array(out), a._dims[0])
    if not _sides_match(a._dims[1], b._dims[0]):
        raise StructuralError(f"cannot multiply dims {a._dims} by {b._dims}")
    return QuantumObject._wrap(a._data @ b._data, [a._dims[0], b._dims[1]])


def identity_like(op):
    n = op.shape[0]
    return QuantumObject._wrap(sp.identity(n, dtype=np.complex128, format="csr"), op._dims)


# ---------------------------------------------------------------------------
# structural operations


def tensor(*factors):
    """Kronecker product; dims are concatenated in factor order.

    Accepts either separate arguments or a single list.
    """
    if len(factors) == 1 and isinstance(factors[0], (list, tuple)):
        factors = tuple(factors[0])
    if not factors:
        raise StructuralError("tensor needs at least one factor")
    kinds = {f.kind for f in factors}
    if len(kinds) != 1:
        raise StructuralError(f"cannot tensor objects of mixed kinds {sorted(kinds)}")
    if kinds == {"superoperator"}:
        raise UnsupportedModeError("tensor of superoperators is not supported")
    data = reduce(lambda x, y: sp.kron(x, y, format="csr"), (f._data for f in factors))
    dims = [sum((f._dims[0] for f in factors), []), sum((f._dims[1] for f in factors), [])]
    return QuantumObject._wrap(data, dims)


def ket2dm(psi):
    """Projector |psi><psi| (bras are conjugated first)."""
    if psi.isbra:
        psi = psi.dag()
    if not psi.isket:
        raise StructuralError(f"ket2dm needs a ket or bra, got {psi.kind}")
    return psi * psi.dag()


def ptrace(op, keep):
    """Reduced density operator over the subsystems listed in ``keep``."""
    if isinstance(keep, numbers.Integral):
        keep = [int(keep)]
    keep = [int(k) for k in keep]
    if op.isbra:
        op = op.dag()
    if op.kind not in ("ket", "operator"):
        raise StructuralError(f"ptrace needs a ket or operator, got {op.kind}")
    d = op._dims[0]
    n = len(d)
    if op.isoper and op._dims[0] != op._dims[1]:
        raise StructuralError(f"ptrace needs matching row/col dims, got {op._dims}")
    if len(set(keep)) != len(keep):
        raise StructuralError(f"duplicate subsystem indices in {keep}")
    if not keep or any(k < 0 or k >= n for k in keep):
        raise StructuralError(f"subsystem indices {keep} out of range for {n} subsystems")
    keep = sorted(keep)
    rest = [i for i in range(n) if i not in keep]
    dk = int(np.prod([d[i] for i in keep]))
    dr = int(np.prod([d[i] for i in rest])) if rest else 1
    if op.isket:
        psi = op.full().reshape(d).transpose(keep + rest).reshape(dk, dr)
        out = psi @ psi.conj().T
    else:
        rho = op.full().reshape(d + d)
        perm = keep + rest + [n + k for k in keep] + [n + r for r in rest]
        rho = rho.transpose(perm).reshape(dk, dr, dk, dr)
        out = np.einsum("ijkj->ik", rho)
    kd = [d[i] for i in keep]
    return QuantumObject._wrap(sp.csr_array(out), [kd, list(kd)])


def expm(op):
    """Matrix exponential (Pade-13 scaling and squaring on a dense copy)."""
    if op.shape[0] != op.shape[1] or op.kind not in ("operator", "superoperator"):
        raise StructuralError(f"expm needs a square operator, got {op.kind} {op.shape}")
    return QuantumObject._wrap(sp.csr_array(la.expm(op.full())), op._dims)


# ---------------------------------------------------------------------------
# eigen decomposition


@dataclass
class EigResult:
    """Eigenvalues ascending by real part, with optional unit eigenkets."""

    values: np.ndarray
    vectors: list | None = None

    def __iter__(self):
        yield self.values
        yield self.vectors


def _fix_phase(v):
    mags = np.abs(v)
    idx = int(np.flatnonzero(mags >= mags.max() - 1e-10)[0])
    ph = v[idx] / mags[idx]
    return v / ph


def _mgs(block):
    q = np.array(block, dtype=np.complex128)
    for j in range(q.shape[1]):
        for i in range(j):
            q[:, j] -= np.vdot(q[:, i], q[:, j]) * q[:, i]
        q[:, j] /= np.linalg.norm(q[:, j])
    return q


def _orthonormalize_degenerate(values, vecs, tol):
    start = 0
    n = len(values)
    while start < n:
        stop = start + 1
        while stop < n and abs(values[stop] - values[start]) <= tol:
            stop += 1
        if stop - start > 1:
            vecs[:, start:stop] = _mgs(vecs[:, start:stop])
        start = stop
    return vecs


def _lanczos_smallest(A, k, tol=1e-11, seed=0x5EED):
    """k algebraically smallest eigenpairs of a Hermitian sparse matrix.

    Plain Lanczos with full (twice-applied) reorthogonalization. When the
    Krylov space becomes invariant the iteration restarts with a fresh random
    vector orthogonal to the basis, so a complete run always terminates at
    the full dimension. Exactly degenerate eigenvalues may be under-counted
    before that point, a known limitation of single-vector Lanczos.
    """
    n = A.shape[0]
    rng = np.random.Generator(np.random.Philox(seed))
    anorm = float(abs(A).sum(axis=0).max()) or 1.0
    V = np.zeros((n, n), dtype=np.complex128)
    alpha = np.zeros(n)
    beta = np.zeros(n)

    def fresh(j):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        for _ in range(2):
            v -= V[:, :j] @ (V[:, :j].conj().T @ v)
        return v / np.linalg.norm(v)

    v = fresh(0)
    theta = s = None
    for j in range(n):
        V[:, j] = v
        w = A @ v
        alpha[j] = np.vdot(v, w).real
        for _ in range(2):
            w -= V[:, : j + 1] @ (V[:, : j + 1].conj().T @ w)
        b = np.linalg.norm(w)
        m = j + 1
        if m >= k and (m % 5 == 0 or m == n or b <= tol * anorm):
            theta, s = la.eigh_tridiagonal(alpha[:m], beta[: m - 1])
            resid = np.abs(b * s[-1, :k])
            if np.all(resid <= tol * anorm) and (b > tol * anorm or m == n or m >= 2 * k):
                break
        if m == n:
            break
        if b <= tol * anorm:
            beta[j] = 0.0
            v = fresh(m)
        else:
            beta[j] = b
            v = w / b
    if theta is None or len(theta) != m:
        theta, s = la.eigh_tridiagonal(alpha[:m], beta[: m - 1])
    vecs = V[:, :m] @ s[:, :k]
    vecs /= np.linalg.norm(vecs, axis=0)
    return theta[:k], vecs


def eigensolve(op, vectors=True, sparse=False, k=None):
    """Eigenvalues (ascending by real part) and optionally eigenkets.

    Parameters
    ----------
    sparse : bool
        Use the Lanczos path (Hermitian input only); returns the ``k``
        algebraically smallest pairs, ``k`` defaulting to ``min(6, n - 1)``.
    k : int, optional
        Number of pairs to return.
    """
    if op.shape[0] != op.shape[1]:
        raise StructuralError("eigensolve needs a square operator")
    n = op.shape[0]
    herm = op.isherm
    if sparse:
        if not herm:
            raise UnsupportedModeError("sparse eigensolver requires a Hermitian operator")
        k = min(6, n - 1) if k is None else int(k)
        if not 1 <= k < n:
            raise UnsupportedModeError(f"sparse eigensolver needs 1 <= k < {n}, got k={k}")
        vals, vecs = _lanczos_smallest(op._data, k)
    else:
        mat = op.full()
        if herm:
            mat = 0.5 * (mat + mat.conj().T)
            vals, vecs = la.eigh(mat)
        else:
            vals, vecs = la.eig(mat)
            order = np.lexsort((vals.imag, vals.real))
            vals, vecs = vals[order], vecs[:, order]
            vecs = vecs / np.linalg.norm(vecs, axis=0)
        if k is not None:
            vals, vecs = vals[:k], vecs[:, :k]
    scale = max(1.0, float(np.max(np.abs(vals))) if len(vals) else 1.0)
    vecs = _orthonormalize_degenerate(vals, vecs, 1e-10 * scale)
    vals = np.real(vals) if herm else vals
    if not vectors:
        return EigResult(np.asarray(vals))
    kdims = [op._dims[0], [1] * len(op._dims[0])]
    kets = [
        QuantumObject._wrap(sp.csr_array(_fix_phase(vecs[:, i]).reshape(-1, 1)), kdims)
        for i in range(vecs.shape[1])
    ]
    return EigResult(np.asarray(vals), kets)


def groundstate(op, sparse=None):
    """Smallest eigenvalue and its unit eigenket for a Hermitian operator.

    ``sparse=None`` selects the Lanczos path above dimension 64.
    """
    if not op.isherm:
        raise UnsupportedModeError("groundstate requires a Hermitian operator")
    n = op.shape[0]
    if sparse is None:
        sparse = n > SPARSE_GROUNDSTATE_THRESHOLD
    if n == 1:
        sparse = False
    res = eigensolve(op, vectors=True, sparse=sparse, k=1)
    return float(res.values[0]), res.vectors[0]


# ---------------------------------------------------------------------------
# norms, matrix elements, basis changes


def norm(op, which=None):
    """Operator or vector norm.

    ``which`` is one of ``"trace"``, ``"frobenius"``, ``"one"``, ``"max"``
    for operators (default ``"trace"``) and ``"l2"`` for kets/bras.
    """
    vector = op.kind in ("ket", "bra")
    if which is None:
        which = "l2" if vector else "trace"
    if vector and which != "l2":
        raise UnsupportedModeError(f"only the l2 norm is available for {op.kind}s, not {which!r}")
    if not vector and which not in ("trace", "frobenius", "one", "max"):
        raise UnsupportedModeError(f"norm {which!r} is not available for {op.kind}s")
    m = op._data
    if which in ("l2", "frobenius"):
        return float(np.sqrt(np.sum(np.abs(m.data) ** 2)))
    if which == "max":
        return _maxabs(m)
    if which == "one":
        return float(abs(m).sum(axis=0).max())
    dense = op.full()
    if op.isherm:
        return float(np.sum(np.abs(la.eigvalsh(0.5 * (dense + dense.conj().T)))))
    return float(np.sum(la.svdvals(dense)))


def matrix_element(bra, op, ket):
    """<bra|op|ket> as a complex scalar; ``bra`` may also be given as a ket."""
    if bra.isket:
        bra = bra.dag()
    if not bra.isbra and bra.shape[0] != 1:
        raise StructuralError("first argument must be a bra or ket")
    if not (ket.isket or ket.shape[1] == 1):
        raise StructuralError("last argument must be a ket")
    if not _sides_match(bra._dims[1], op._dims[0]) or not _sides_match(op._dims[1], ket._dims[0]):
        raise StructuralError(f"dims mismatch: {bra._dims}, {op._dims}, {ket._dims}")
    return complex((bra._data @ (op._data @ ket._data)).toarray()[0, 0])


def _basis_matrix(basis, n):
    if isinstance(basis, QuantumObject):
        raise StructuralError("basis must be a list of kets")
    cols = []
    for b in basis:
        if isinstance(b, QuantumObject):
            cols.append(b.full().ravel())
        else:
            cols.append(np.asarray(b, dtype=np.complex128).ravel())
    if len(cols) != n or any(c.shape[0] != n for c in cols):
        raise StructuralError(f"basis must contain {n} vectors of length {n}")
    V = np.column_stack(cols)
    err = np.abs(V.conj().T @ V - np.eye(n)).max()
    if err > 1e-8:
        raise DegenerateInputError(f"basis is not orthonormal (deviation {err:.2e})")
    return V


def transform(op, basis, inverse=False):
    """Change of basis.

    With ``inverse=False`` the object is expressed in ``basis`` (the
    columns of V are the basis kets): kets map to V^dag psi and operators to
    V^dag A V. ``inverse=True`` maps back from ``basis`` to the original one.
    """
    if op.issuper:
        raise UnsupportedModeError("transform of superoperators is not supported")
    n = op.shape[0] if not op.isbra else op.shape[1]
    V = _basis_matrix(basis, n)
    M = op.full()
    if not inverse:
        V = V.conj().T
    if op.isket:
        out = V @ M
    elif op.isbra:
        out = M @ V.conj().T
    else:
        out = V @ M @ V.conj().T
    return QuantumObject._wrap(sp.csr_array(out), op._dims)
