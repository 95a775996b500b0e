"""Expectation values, correlations, entropies, fidelity, Wigner functions and process tomography."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import (
    DegenerateInputError,
    NumericalConsistencyError,
    StructuralError,
    UnsupportedModeError,
)
from .expr import build_td_operator
from .fileio import file_data_store
from .ode import _as_options, integrate
from .operators import sigmay
from .qobj import QuantumObject, ket2dm, ptrace, tensor
from .solvers import _c_op_specs, mcsolve, mesolve
from .superop import lindblad_generator, steadystate

__all__ = [
    "expect", "correlation", "correlation_ss",
    "entropy_vn", "entropy_mutual", "entropy_conditional",
    "concurrence", "fidelity", "wigner",
    "ChiMatrix", "qpt", "chi_to_superoperator", "qpt_export",
]

IMAG_TOLERANCE = 1e-10


# ---------------------------------------------------------------------------
# expectation values


def _expect_one(op, A, herm, state):
    if not isinstance(state, QuantumObject) or state.kind not in ("ket", "operator"):
        raise StructuralError("state must be a ket or density matrix")
    if state.shape[0] != A.shape[1]:
        raise StructuralError(f"state dimension {state.shape[0]} does not match operator {A.shape}")
    if state.isket:
        psi = state.full().ravel()
        val = np.vdot(psi, A @ psi)
    else:
        val = (A * state.full().T).sum()
    if not herm:
        return complex(val)
    if abs(val.imag) > IMAG_TOLERANCE * max(1.0, abs(val.real)):
        raise NumericalConsistencyError(
            f"expectation of a Hermitian operator has imaginary part {val.imag:.3e}"
        )
    return float(val.real)


def expect(op, state):
    """``<psi|A|psi>`` or ``Tr(A rho)``; a list of states gives an array.

    Hermitian operators give real results.
    """
    if not isinstance(op, QuantumObject) or not op.isoper:
        raise StructuralError("expect needs an operator")
    A = op.full()
    herm = op.isherm
    if isinstance(state, (list, tuple)):
        vals = [_expect_one(op, A, herm, s) for s in state]
        return np.array(vals, dtype=float if herm else complex)
    return _expect_one(op, A, herm, state)


# ---------------------------------------------------------------------------
# two-time correlations


def _evolve_operator_me(gen, X, t0, taulist, A_flat, opts):
    """Tr[A Lambda(tau) X] for X evolved from t0 by the Lindblad generator."""
    rhs = lambda s, y: gen(t0 + s, y)  # noqa: E731
    ys = integrate(rhs, X.reshape(-1, order="F"), taulist, opts)
    return np.array([A_flat @ y for y in ys])


def _check_taulist(taulist):
    taulist = np.asarray(taulist, dtype=float)
    if taulist.ndim != 1 or taulist.size == 0 or taulist[0] < 0 or np.any(np.diff(taulist) < 0):
        raise StructuralError("taulist must be a nonempty ascending sequence of non-negative delays")
    return taulist


def correlation(H, rho0, tlist, taulist, c_ops, A, B, solver="me", args=None, options=None,
                ntraj=500, seed=None):
    """Two-time correlation ``<A(t + tau) B(t)>`` by the quantum regression theorem.

    Returns a complex matrix indexed ``[t, tau]``: the state is evolved to
    each ``t``, ``B rho(t)`` is propagated a further ``tau`` under the same
    generator, and ``A`` is traced against it.

    With ``solver="mc"`` every propagation is done with :func:`mcsolve`
    (``ntraj`` trajectories each); ``B rho(t)`` is written as a combination
    of pure states via its eigen-decomposition and the polarization identity
    ``|u><v| = 1/4 sum_c c |u + c v><u + c v|`` over ``c`` in {1, i, -1, -i}.
    Entries then carry a statistical error of order ``1/sqrt(ntraj)``.
    """
    tlist = np.asarray(tlist, dtype=float)
    taulist = _check_taulist(taulist)
    args = dict(args or {})
    if solver not in ("me", "mc"):
        raise UnsupportedModeError(f"solver must be 'me' or 'mc', got {solver!r}")
    Htd = build_td_operator(H, args)
    n = Htd.shape[0]
    for op in (A, B):
        if not isinstance(op, QuantumObject) or op.shape != (n, n):
            raise StructuralError("A and B must be operators matching the Hamiltonian")
    rho0 = ket2dm(rho0) if rho0.isket else rho0
    if solver == "me":
        opts = _as_options(options)
        states = mesolve(Htd, rho0, tlist, c_ops, [], args, opts).states
        gen, _ = lindblad_generator(Htd, _c_op_specs(c_ops, args), args)
        A_flat = A.full().ravel()
        Bm = B.full()
        out = np.empty((len(tlist), len(taulist)), dtype=np.complex128)
        for i, (t, rho) in enumerate(zip(tlist, states)):
            out[i] = _evolve_operator_me(gen, Bm @ rho.full(), t, taulist, A_flat, opts)
        return out
    return _correlation_mc(Htd, rho0, tlist, taulist, c_ops, A, B, args, options, ntraj, seed)


def _correlation_mc(Htd, rho0, tlist, taulist, c_ops, A, B, args, options, ntraj, seed):
    dims = rho0.dims
    kdims = [dims[0], [1] * len(dims[0])]
    Bm = B.full()
    seed_seq = np.random.SeedSequence(seed)
    seeds = iter(seed_seq.generate_state(4096, dtype=np.uint64))
    out = np.zeros((len(tlist), len(taulist)), dtype=np.complex128)
    # rho(t) from trajectories started in the eigenstates of rho0
    w0, v0 = la.eigh(rho0.full())
    rhos = np.zeros((len(tlist), *rho0.shape), dtype=np.complex128)
    for lam, vec in zip(w0, v0.T):
        if lam <= 1e-12:
            continue
        res = mcsolve(Htd, QuantumObject(vec, kdims), tlist, c_ops, [], ntraj, int(next(seeds)), args, options)
        for i, s in enumerate(res.states):
            rhos[i] += lam * s.full()
    phases = (1, 1j, -1, -1j)
    for i, t in enumerate(tlist):
        w, v = la.eigh(0.5 * (rhos[i] + rhos[i].conj().T))
        for lam, vec in zip(w, v.T):
            if lam <= 1e-12:
                continue
            u = Bm @ vec
            for c in phases:
                psi = u + c * vec
                nrm2 = np.vdot(psi, psi).real
                if nrm2 <= 1e-24:
                    continue
                res = mcsolve(Htd, QuantumObject(psi / np.sqrt(nrm2), kdims), t + taulist, c_ops, [A],
                              ntraj, int(next(seeds)), args, options)
                out[i] += 0.25 * c * lam * nrm2 * res.expect[0]
    return out


def correlation_ss(H, taulist, c_ops, A, B, options=None):
    """Steady-state correlation ``<A(tau) B(0)>`` with the state given by :func:`steadystate`."""
    rho_ss = steadystate(H, c_ops)
    return correlation(H, rho_ss, [0.0], taulist, c_ops, A, B, options=options)[0]


# ---------------------------------------------------------------------------
# entropies and entanglement


def _as_dm(rho):
    if isinstance(rho, QuantumObject) and rho.isket:
        return ket2dm(rho)
    if not isinstance(rho, QuantumObject) or not rho.isoper:
        raise StructuralError("expected a density matrix or ket")
    return rho


def _log(x, base):
    if base == 2:
        return np.log2(x)
    if base is None or base == np.e or base == "e":
        return np.log(x)
    raise StructuralError(f"entropy base must be e or 2, got {base!r}")


def entropy_vn(rho, base=np.e):
    """Von Neumann entropy ``-Tr rho log rho`` (natural log unless ``base=2``)."""
    rho = _as_dm(rho)
    m = rho.full()
    vals = la.eigvalsh(0.5 * (m + m.conj().T))
    if vals.min() < -1e-10:
        raise DegenerateInputError(f"density matrix has negative eigenvalue {vals.min():.3e}")
    vals = vals[vals > 0]
    return float(-np.sum(vals * _log(vals, base)))


def entropy_mutual(rho, sel_a, sel_b, base=np.e):
    """Mutual information ``S(A) + S(B) - S(A,B)``; ``sel_*`` index tensor factors."""
    rho = _as_dm(rho)
    sel_a = [sel_a] if isinstance(sel_a, int) else list(sel_a)
    sel_b = [sel_b] if isinstance(sel_b, int) else list(sel_b)
    joint = ptrace(rho, sorted(sel_a + sel_b))
    return (entropy_vn(ptrace(rho, sel_a), base) + entropy_vn(ptrace(rho, sel_b), base)
            - entropy_vn(joint, base))


def entropy_conditional(rho, sel_b, base=np.e):
    """Conditional entropy ``S(A|B) = S(A,B) - S(B)`` with B the selected factors."""
    rho = _as_dm(rho)
    sel_b = [sel_b] if isinstance(sel_b, int) else list(sel_b)
    return entropy_vn(rho, base) - entropy_vn(ptrace(rho, sel_b), base)


def concurrence(rho):
    """Two-qubit concurrence ``max(0, l1 - l2 - l3 - l4)``."""
    rho = _as_dm(rho)
    if rho.dims != [[2, 2], [2, 2]]:
        raise StructuralError(f"concurrence needs a two-qubit state with dims [[2, 2], [2, 2]], got {rho.dims}")
    yy = tensor(sigmay(), sigmay()).full()
    m = rho.full()
    flipped = yy @ m.conj() @ yy
    ev = np.linalg.eigvals(m @ flipped)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def _sqrtm_psd(m, what):
    vals, vecs = la.eigh(0.5 * (m + m.conj().T))
    if vals.min() < -1e-6:
        raise DegenerateInputError(f"{what} is not positive semidefinite (eigenvalue {vals.min():.3e})")
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T


def fidelity(rho, sigma):
    """Uhlmann fidelity ``Tr sqrt(sqrt(rho) sigma sqrt(rho))``; kets are promoted."""
    rho, sigma = _as_dm(rho), _as_dm(sigma)
    if rho.shape != sigma.shape:
        raise StructuralError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    s = _sqrtm_psd(rho.full(), "first state")
    _sqrtm_psd(sigma.full(), "second state")
    inner = s @ sigma.full() @ s
    vals = la.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(vals, 0, None))))


# ---------------------------------------------------------------------------
# Wigner function


def wigner(state, xvec, yvec):
    """Wigner function of a single-mode state on the grid ``W[iy, ix]``.

    Phase-space points are ``alpha = (x + i y) / sqrt(2)``, so the vacuum is
    ``exp(-(x^2 + y^2)) / pi`` and the function integrates to one over the
    (x, y) plane. Evaluated with the Laguerre-polynomial recursion over the
    density-matrix elements.
    """
    rho = _as_dm(state)
    if len(rho.dims[0]) != 1:
        raise UnsupportedModeError("wigner supports single-mode states only")
    xvec = np.asarray(xvec, dtype=float)
    yvec = np.asarray(yvec, dtype=float)
    if xvec.size == 0 or yvec.size == 0:
        raise StructuralError("grids must be nonempty")
    m = rho.full()
    M = m.shape[0]
    X, Y = np.meshgrid(xvec, yvec)
    A = (X + 1j * Y) / np.sqrt(2.0)
    A2 = 2 * A
    w_list = [None] * M
    w_list[0] = np.exp(-2.0 * np.abs(A) ** 2) / np.pi
    W = m[0, 0].real * w_list[0].real
    for n in range(1, M):
        w_list[n] = A2 * w_list[n - 1] / np.sqrt(n)
        W += 2 * np.real(m[0, n] * w_list[n])
    for k in range(1, M):
        temp = w_list[k].copy()
        w_list[k] = (np.conj(A2) * temp - np.sqrt(k) * w_list[k - 1]) / np.sqrt(k)
        W += np.real(m[k, k] * w_list[k])
        for n in range(k + 1, M):
            temp2 = (A2 * w_list[n - 1] - np.sqrt(k) * temp) / np.sqrt(n)
            temp = w_list[n].copy()
            w_list[n] = temp2
            W += 2 * np.real(m[k, n] * w_list[n])
    return W


# ---------------------------------------------------------------------------
# process tomography


@dataclass
class ChiMatrix:
    """Process matrix over a tensor-product operator basis.

    Row/column ``m`` corresponds to the basis product whose per-subsystem
    indices are ``m`` written in mixed radix, first subsystem most
    significant. ``labels`` holds the per-subsystem label lists.
    """

    chi: np.ndarray
    labels: list

    def combined_labels(self):
        return ["".join(p) for p in itertools.product(*self.labels)]


def _basis_products(op_basis):
    mats = []
    for combo in itertools.product(*op_basis):
        mats.append(tensor(list(combo)).full() if len(combo) > 1 else combo[0].full())
    return mats


def _process_frame(op_basis):
    mats = _basis_products(op_basis)
    cols = []
    for Bm in mats:
        for Bn in mats:
            # spre(Bm) * spost(Bn^dag) = conj(Bn) kron Bm
            cols.append(np.kron(Bn.conj(), Bm).ravel())
    return np.column_stack(cols), len(mats)


def qpt(U, op_basis, op_labels=None):
    """Process matrix chi with ``U = sum_mn chi_mn spre(B_m) spost(B_n^dag)``.

    ``op_basis`` lists the operator basis of each subsystem; the basis is
    used as given (no normalization), so chi depends on its scaling.
    """
    if not isinstance(U, QuantumObject) or not U.issuper:
        raise StructuralError("qpt needs a superoperator")
    frame, k = _process_frame(op_basis)
    if frame.shape[0] != U.shape[0] * U.shape[1]:
        raise StructuralError("operator basis does not match the superoperator dimension")
    target = U.full().ravel()
    if frame.shape[0] == frame.shape[1]:
        cond = np.linalg.cond(frame)
        if not np.isfinite(cond) or cond > 1e12:
            raise DegenerateInputError("operator basis is rank deficient")
        sol = la.solve(frame, target)
    else:
        sol, _, rank, _ = la.lstsq(frame, target)
        if rank < frame.shape[1]:
            raise DegenerateInputError("operator basis is rank deficient")
    if op_labels is None:
        op_labels = [[str(i) for i in range(len(ops))] for ops in op_basis]
    return ChiMatrix(sol.reshape(k, k), [list(lab) for lab in op_labels])


def chi_to_superoperator(chi, op_basis, dims=None):
    """Rebuild ``sum_mn chi_mn spre(B_m) spost(B_n^dag)``."""
    frame, k = _process_frame(op_basis)
    vec = frame @ np.asarray(chi.chi if isinstance(chi, ChiMatrix) else chi).ravel()
    n = int(round(np.sqrt(frame.shape[0])))
    mat = vec.reshape(n, n)
    if dims is None:
        sub = [ops[0].shape[0] for ops in op_basis]
        dims = [[sub, sub], [sub, sub]]
    return QuantumObject(mat, dims)


def qpt_export(chi, path, precision=12):
    """Write chi as rows ``(row, col, |chi|, arg chi)`` in the text data format.

    Row and column are integer basis indices; the header lists the combined
    labels in index order.
    """
    k = chi.chi.shape[0]
    rows = []
    for i in range(k):
        for j in range(k):
            z = chi.chi[i, j]
            rows.append((i, j, abs(z), np.angle(z) if abs(z) > 0 else 0.0))
    labels = chi.combined_labels() if chi.labels else [str(i) for i in range(k)]
    comments = ["columns: row, col, abs, phase", "labels: " + " ".join(labels)]
    file_data_store(path, np.array(rows, dtype=float), numtype="real", precision=precision,
                    comments=comments)
