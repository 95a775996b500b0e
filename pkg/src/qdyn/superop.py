"""Superoperators on column-stacked density matrices.

Vectorization convention: ``vec`` stacks columns, so
``vec(A rho B) = (B^T kron A) vec(rho)``; ``spre(A) = I kron A`` and
``spost(B) = B^T kron I``.
"""
from __future__ import annotations

import numbers

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DegenerateInputError, StructuralError
from .expr import TimeDependentOperator, build_td_operator
from .ode import IntegratorOptions, _as_options, integrate
from .qobj import QuantumObject, _same_dims

__all__ = [
    "spre", "spost", "operator_to_vector", "vector_to_operator",
    "lindblad_dissipator", "liouvillian", "propagator", "steadystate",
]

DENSE_LIMIT = 256
STEADY_DENSE_LIMIT = 64
PROPAGATOR_OPTIONS = IntegratorOptions(rtol=1e-10, atol=1e-12)


def _require_square_operator(op, what):
    if not isinstance(op, QuantumObject) or op.kind != "operator" or op.shape[0] != op.shape[1]:
        raise StructuralError(f"{what} needs a square operator")


def _super_dims(op):
    d = op.dims
    return [d, d]


def spre(A):
    """Superoperator for left multiplication, ``rho -> A rho``."""
    _require_square_operator(A, "spre")
    n = A.shape[0]
    ident = sp.identity(n, dtype=np.complex128, format="csr")
    return QuantumObject._wrap(sp.kron(ident, A.data, format="csr"), _super_dims(A))


def spost(B):
    """Superoperator for right multiplication, ``rho -> rho B``."""
    _require_square_operator(B, "spost")
    n = B.shape[0]
    ident = sp.identity(n, dtype=np.complex128, format="csr")
    return QuantumObject._wrap(sp.kron(B.data.T, ident, format="csr"), _super_dims(B))


def operator_to_vector(op):
    """Column-stacked ndarray ``vec(op)``."""
    return op.full().reshape(-1, order="F")


def vector_to_operator(vec, dims):
    vec = np.asarray(vec)
    n = int(round(np.sqrt(vec.size)))
    return QuantumObject(vec.reshape(n, n, order="F"), dims)


def lindblad_dissipator(a, b=None):
    """``rho -> a rho b^dag - (b^dag a rho + rho b^dag a) / 2``; ``b`` defaults to ``a``."""
    b = a if b is None else b
    bda = b.dag() * a
    return spre(a) * spost(b.dag()) - 0.5 * spre(bda) - 0.5 * spost(bda)


def liouvillian(H, c_ops=()):
    """Lindblad generator L with ``vec(drho/dt) = L vec(rho)`` for constant H and c_ops."""
    ref = H if H is not None else (c_ops[0] if c_ops else None)
    if ref is None:
        raise StructuralError("liouvillian needs a Hamiltonian or at least one collapse operator")
    _require_square_operator(ref, "liouvillian")
    n = ref.shape[0]
    zero = sp.csr_array((n * n, n * n), dtype=np.complex128)
    L = QuantumObject._wrap(zero, _super_dims(ref))
    if H is not None:
        L = -1j * (spre(H) - spost(H))
    for c in c_ops:
        _require_square_operator(c, "collapse operator")
        if not _same_dims(c._dims, ref._dims):
            raise StructuralError(f"collapse operator dims {c.dims} differ from {ref.dims}")
        L = L + lindblad_dissipator(c)
    return L


# ---------------------------------------------------------------------------
# linear generators with time-dependent coefficients


class LinearGenerator:
    """``G(t) = G0 + sum_k c_k(t) G_k`` acting on vectors or column-stacked matrices."""

    def __init__(self, const, terms):
        self.n = const.shape[0]
        self.dense = self.n <= DENSE_LIMIT
        conv = (lambda m: m.toarray() if sp.issparse(m) else np.asarray(m)) if self.dense else sp.csr_array
        self.const = conv(const)
        self.mats = [conv(m) for m, _ in terms]
        self.coeffs = [c for _, c in terms]

    @property
    def is_constant(self):
        return not self.mats

    def matrix(self, t):
        g = self.const
        if not self.mats:
            return g
        g = g.copy()
        for m, c in zip(self.mats, self.coeffs):
            g = g + c(t) * m
        return g

    def __call__(self, t, y):
        if self.dense:
            return self.matrix(t) @ y
        out = self.const @ y
        for m, c in zip(self.mats, self.coeffs):
            out = out + c(t) * (m @ y)
        return out

    def on_matrix(self, t, y):
        """Action on a flattened (column-major) n x m matrix."""
        Y = y.reshape(self.n, -1, order="F")
        return (self.matrix(t) @ Y).reshape(-1, order="F") if self.dense else np.column_stack(
            [self(t, Y[:, j]) for j in range(Y.shape[1])]
        ).reshape(-1, order="F")


def _as_td(op, args):
    if op is None:
        return None
    return build_td_operator(op, args)


def _td_list(c_ops, args):
    return [build_td_operator(c, args) for c in (c_ops or [])]


def _conj_product(f, g):
    if f is None and g is None:
        return None
    if g is None:
        return f
    if f is None:
        return lambda t: np.conj(g(t))
    return lambda t: f(t) * np.conj(g(t))


def lindblad_generator(H, c_ops, args=None):
    """LinearGenerator for the Lindblad equation with time-dependent H and c_ops."""
    H = _as_td(H, args)
    c_ops = _td_list(c_ops, args)
    ref = H if H is not None else (c_ops[0] if c_ops else None)
    if ref is None:
        raise StructuralError("need a Hamiltonian or collapse operators")
    dims = ref.dims
    for c in c_ops:
        if not _same_dims(c.terms[0][0]._dims, ref.terms[0][0]._dims):
            raise StructuralError(f"collapse operator dims {c.dims} differ from {dims}")
    n = ref.shape[0]
    const = sp.csr_array((n * n, n * n), dtype=np.complex128)
    terms = []
    if H is not None:
        h0 = H.constant_part()
        if h0 is not None:
            const = const + (-1j * (spre(h0) - spost(h0))).data
        for hk, f in H.varying_terms():
            terms.append(((-1j * (spre(hk) - spost(hk))).data, f))
    for c in c_ops:
        if c.is_constant:
            const = const + lindblad_dissipator(c.constant_part()).data
            continue
        parts = list(c.terms)
        if len(parts) == 1:
            op, f = parts[0]
            terms.append((lindblad_dissipator(op).data, lambda t, f=f: abs(f(t)) ** 2))
            continue
        for opk, fk in parts:
            for opl, fl in parts:
                coeff = _conj_product(fk, fl)
                mat = lindblad_dissipator(opk, opl).data
                if coeff is None:
                    const = const + mat
                else:
                    terms.append((mat, coeff))
    return LinearGenerator(const, terms), dims


def hamiltonian_generator(H, args=None, extra=None):
    """LinearGenerator for ``dpsi/dt = -i H(t) psi`` (``extra`` adds anti-Hermitian parts)."""
    H = _as_td(H, args)
    h0 = H.constant_part()
    n = H.shape[0]
    const = sp.csr_array((n, n), dtype=np.complex128)
    if h0 is not None:
        const = const + (-1j * h0.data)
    terms = [(-1j * hk.data, f) for hk, f in H.varying_terms()]
    if extra is not None:
        c0, cterms = extra
        const = const + c0
        terms.extend(cterms)
    return LinearGenerator(const, terms), H.dims


# ---------------------------------------------------------------------------
# propagators


def _times(t):
    scalar = isinstance(t, numbers.Real)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise StructuralError("propagator times must be non-negative")
    return scalar, ts


def unitary_propagators(H, times, args=None, options=None):
    """Dense U(t) arrays at each requested time (times sorted ascending, starting anywhere >= 0)."""
    gen, _ = hamiltonian_generator(H, args)
    n = gen.n
    tlist = np.concatenate([[0.0], np.asarray(times, dtype=float)])
    y0 = np.eye(n, dtype=np.complex128).reshape(-1, order="F")
    ys = integrate(gen.on_matrix, y0, tlist, options or PROPAGATOR_OPTIONS)
    return [y.reshape(n, n, order="F") for y in ys[1:]]


def propagator(H, t, c_ops=None, args=None, options=None):
    """Propagator from time 0 to ``t``.

    Without collapse operators this is the unitary U(t) (an operator). With
    collapse operators it is the superoperator mapping vec(rho(0)) to
    vec(rho(t)), assembled column by column from matrix-unit initial
    conditions; the columns for E_ji are taken as adjoints of those for
    E_ij, which holds exactly for any Lindblad generator.

    ``t`` may be a scalar (one object returned) or a sequence (list returned).
    Integration defaults to rtol=1e-10, atol=1e-12.
    """
    scalar, ts = _times(t)
    order = np.argsort(ts, kind="stable")
    opts = _as_options(options) if options is not None else PROPAGATOR_OPTIONS
    Htd = build_td_operator(H, args)
    dims = Htd.dims
    if not c_ops:
        mats = unitary_propagators(Htd, ts[order], args, opts)
        out = [None] * len(ts)
        for k, idx in enumerate(order):
            out[idx] = QuantumObject(mats[k], dims)
        return out[0] if scalar else out
    gen, _ = lindblad_generator(Htd, c_ops, args)
    n = Htd.shape[0]
    tlist = np.concatenate([[0.0], ts[order]])
    cols = {}
    for j in range(n):
        for i in range(j + 1):
            e = np.zeros((n, n), dtype=np.complex128)
            e[i, j] = 1.0
            ys = integrate(gen, e.reshape(-1, order="F"), tlist, opts)
            cols[(i, j)] = [y.reshape(n, n, order="F") for y in ys[1:]]
    out = [None] * len(ts)
    sdims = [dims, dims]
    for k, idx in enumerate(order):
        P = np.zeros((n * n, n * n), dtype=np.complex128)
        for (i, j), mats in cols.items():
            m = mats[k]
            if i == j:
                m = 0.5 * (m + m.conj().T)
            P[:, i + n * j] = m.reshape(-1, order="F")
            if i != j:
                P[:, j + n * i] = m.conj().T.reshape(-1, order="F")
        out[idx] = QuantumObject(P, sdims)
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# steady state


def steadystate(H, c_ops):
    """Unique steady state of a time-independent Lindblad generator.

    One population equation is replaced by the trace condition and the
    linear system solved directly (sparse LU above dimension 64).
    """
    if isinstance(H, TimeDependentOperator) or isinstance(H, list):
        raise StructuralError("steadystate needs a time-independent Hamiltonian")
    L = liouvillian(H, list(c_ops))
    ref = H if H is not None else c_ops[0]
    n = ref.shape[0]
    A = sp.lil_array(L.data)
    trace_row = np.zeros(n * n, dtype=np.complex128)
    trace_row[[i + n * i for i in range(n)]] = 1.0
    A[0, :] = trace_row
    b = np.zeros(n * n, dtype=np.complex128)
    b[0] = 1.0
    try:
        if n <= STEADY_DENSE_LIMIT:
            dense = A.toarray()
            if np.linalg.cond(dense) > 1e13:
                raise DegenerateInputError("steady-state system is singular or ill-conditioned")
            x = la.solve(dense, b)
        else:
            x = spla.splu(sp.csc_array(A)).solve(b)
    except (la.LinAlgError, RuntimeError) as exc:
        raise DegenerateInputError(f"steady-state system is singular: {exc}") from None
    if not np.all(np.isfinite(x)):
        raise DegenerateInputError("steady-state solve produced non-finite values")
    rho = x.reshape(n, n, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    resid = np.linalg.norm(L.data @ rho.reshape(-1, order="F"))
    scale = max(1.0, float(np.abs(L.data).max()))
    if resid > 1e-8 * scale:
        raise DegenerateInputError(f"steady state not unique or ill-conditioned (residual {resid:.2e})")
    return QuantumObject(rho, ref.dims)
