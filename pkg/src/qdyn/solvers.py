"""Lindblad, Monte-Carlo wave-function and Bloch-Redfield solvers."""
from __future__ import annotations

import numbers
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import StructuralError
from .expr import TimeDependentOperator, build_td_operator, evaluate_operator
from .ode import DormandPrince, _as_options, integrate
from .qobj import QuantumObject, _sides_match, eigensolve, ket2dm
from .superop import LinearGenerator, hamiltonian_generator, lindblad_generator

__all__ = [
    "Odedata", "mesolve", "mcsolve",
    "RedfieldTensor", "bloch_redfield_tensor", "brmesolve",
]

JUMP_TIME_RTOL = 1e-10


@dataclass
class Odedata:
    """Solver output.

    Either ``states`` or ``expect`` is populated, never both: requesting
    observables switches the solver to expectation-only output. Expectation
    arrays of Hermitian observables are real.
    """

    solver: str
    times: np.ndarray
    states: list = field(default_factory=list)
    expect: list = field(default_factory=list)
    ntraj: int | None = None
    col_times: list | None = None
    col_which: list | None = None


# ---------------------------------------------------------------------------
# helpers


def _c_op_specs(c_ops, args):
    """Normalize c_ops; a bare ``[op, coeff]`` pair counts as one time-dependent operator."""
    out = []
    for c in c_ops or []:
        if (
            isinstance(c, (list, tuple))
            and len(c) == 2
            and isinstance(c[0], QuantumObject)
            and not isinstance(c[1], QuantumObject)
        ):
            c = [c]
        out.append(build_td_operator(c, args))
    return out


def _check_state_dims(state, H):
    if state.shape[0] != H.shape[0] or not _sides_match(state._dims[0], H.terms[0][0]._dims[0]):
        raise StructuralError(f"initial state dims {state.dims} incompatible with Hamiltonian dims {H.dims}")


def _check_tlist(tlist):
    tlist = np.asarray(tlist, dtype=float)
    if tlist.ndim != 1 or tlist.size == 0:
        raise StructuralError("tlist must be a nonempty 1-D sequence")
    if np.any(np.diff(tlist) < 0):
        raise StructuralError("tlist must be ascending")
    return tlist


class _Observables:
    """Fast expectation values on raw kets or column-stacked density matrices."""

    def __init__(self, e_ops, n):
        self.ops = []
        for op in e_ops or []:
            if not isinstance(op, QuantumObject) or op.kind != "operator" or op.shape != (n, n):
                raise StructuralError(f"observable must be a {n}x{n} operator")
            self.ops.append(op)
        self.herm = [op.isherm for op in self.ops]
        self.mats = [op.full() for op in self.ops]
        self.flat = [m.ravel() for m in self.mats]

    def __len__(self):
        return len(self.ops)

    def on_ket(self, psi):
        nrm = np.vdot(psi, psi).real
        return [np.vdot(psi, m @ psi) / nrm for m in self.mats]

    def on_vec_dm(self, y):
        return [f @ y for f in self.flat]

    def finish(self, table):
        out = []
        for col, h in zip(np.asarray(table).T if len(table) else [], self.herm):
            out.append(np.ascontiguousarray(col.real if h else col))
        return out


# ---------------------------------------------------------------------------
# Lindblad / Schroedinger


def mesolve(H, rho0, tlist, c_ops=None, e_ops=None, args=None, options=None):
    """Evolve a ket (closed system) or density matrix under the Lindblad equation.

    Parameters
    ----------
    H : QuantumObject, list or TimeDependentOperator
        Hamiltonian; list entries may be ``[op, "expr(t)"]`` or
        ``[op, f(t, args)]`` pairs.
    rho0 : QuantumObject
        Initial ket or density matrix. A ket with no collapse operators is
        evolved with the Schroedinger equation and the states are kets.
    c_ops : list, optional
        Collapse operators, each optionally time dependent.
    e_ops : list of QuantumObject, optional
        When given, only expectation values are returned.
    options : IntegratorOptions or dict, optional
    """
    tlist = _check_tlist(tlist)
    args = dict(args or {})
    Htd = build_td_operator(H, args)
    cs = _c_op_specs(c_ops, args)
    n = Htd.shape[0]
    if not isinstance(rho0, QuantumObject) or rho0.kind not in ("ket", "operator"):
        raise StructuralError("initial state must be a ket or density matrix")
    _check_state_dims(rho0, Htd)
    obs = _Observables(e_ops, n)
    opts = _as_options(options)
    table = []

    if rho0.isket and not cs:
        gen, _ = hamiltonian_generator(Htd, args)
        kdims = rho0.dims
        states = []

        def observe(i, t, y):
            if len(obs):
                table.append(obs.on_ket(y))
            else:
                states.append(QuantumObject._wrap(sp.csr_array(y.reshape(-1, 1)), kdims))

        integrate(gen, rho0.full().ravel(), tlist, opts, observe)
        return Odedata("mesolve", tlist, states, obs.finish(table))

    rho = ket2dm(rho0) if rho0.isket else rho0
    gen, _ = lindblad_generator(Htd, cs, args)
    ddims = rho.dims
    states = []

    def observe(i, t, y):
        if len(obs):
            table.append(obs.on_vec_dm(y))
        else:
            states.append(QuantumObject(y.reshape(n, n, order="F"), ddims))

    integrate(gen, rho.full().reshape(-1, order="F"), tlist, opts, observe)
    return Odedata("mesolve", tlist, states, obs.finish(table))


# ---------------------------------------------------------------------------
# Monte-Carlo wave function


def _trajectory_rng(seed_seq, index):
    child = np.random.SeedSequence(seed_seq.entropy, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(child))


def _effective_generator(Htd, cs, args):
    """-i H_eff with H_eff = H - (i/2) sum_k C_k^dag C_k, time-dependent terms included."""
    n = Htd.shape[0]
    const = sp.csr_array((n, n), dtype=np.complex128)
    terms = []
    for c in cs:
        parts = list(c.terms)
        for opk, fk in parts:
            for opl, fl in parts:
                m = -0.5 * (opl.dag() * opk).data
                if fk is None and fl is None:
                    const = const + m
                elif fl is None:
                    terms.append((m, fk))
                elif fk is None:
                    terms.append((m, lambda t, fl=fl: np.conj(fl(t))))
                else:
                    terms.append((m, lambda t, fk=fk, fl=fl: fk(t) * np.conj(fl(t))))
    gen, _ = hamiltonian_generator(Htd, args, extra=(const, terms))
    return gen


def _jump_ops_at(cs, t):
    return [c.constant_part().full() if c.is_constant else evaluate_operator(c, t).full() for c in cs]


def _run_trajectory(gen, cs, psi0, tlist, opts, rng, sample):
    """Integrate one trajectory; ``sample(i, psi)`` receives the normalized state."""
    times, which = [], []
    const_ops = [c.constant_part().full() for c in cs] if all(c.is_constant for c in cs) else None
    sample(0, psi0 / np.linalg.norm(psi0))
    if tlist.size == 1:
        return times, which
    stepper = DormandPrince(gen, tlist[0], psi0, tlist[-1], opts)
    target = rng.random() if rng is not None else 0.0
    i = 1
    n = tlist.size
    while i < n and tlist[i] == tlist[0]:
        sample(i, psi0 / np.linalg.norm(psi0))
        i += 1
    while i < n:
        stepper.step()
        t_hi = stepper.t
        y_hi = stepper.y
        if cs and np.vdot(y_hi, y_hi).real <= target:
            lo, hi = stepper.t_old, t_hi
            while hi - lo > JUMP_TIME_RTOL * max(abs(hi), 1.0):
                mid = 0.5 * (lo + hi)
                y = stepper.dense(mid)
                if np.vdot(y, y).real > target:
                    lo = mid
                else:
                    hi = mid
            t_jump = hi
            while i < n and tlist[i] < t_jump:
                y = stepper.dense(tlist[i])
                sample(i, y / np.linalg.norm(y))
                i += 1
            psi = stepper.dense(t_jump)
            ops = const_ops if const_ops is not None else _jump_ops_at(cs, t_jump)
            candidates = [op @ psi for op in ops]
            weights = np.array([np.vdot(v, v).real for v in candidates])
            total = weights.sum()
            if total <= 0:
                k = 0
                new = psi
            else:
                k = int(np.searchsorted(np.cumsum(weights) / total, rng.random(), side="right"))
                k = min(k, len(weights) - 1)
                new = candidates[k]
            times.append(float(t_jump))
            which.append(k)
            new = new / np.linalg.norm(new)
            if t_jump >= tlist[-1]:
                while i < n:
                    sample(i, new)
                    i += 1
                break
            stepper.reset(t_jump, new)
            target = rng.random()
            continue
        while i < n and tlist[i] <= t_hi:
            y = stepper.dense(tlist[i])
            sample(i, y / np.linalg.norm(y))
            i += 1
    return times, which


def mcsolve(H, psi0, tlist, c_ops=None, e_ops=None, ntraj=500, seed=None, args=None, options=None):
    """Monte-Carlo wave-function unraveling of the Lindblad equation.

    Each trajectory follows the non-Hermitian effective Hamiltonian until the
    squared norm falls below a uniform random target, then applies one
    collapse operator chosen with probability proportional to
    ``<psi|C_k^dag C_k|psi>``. Trajectory ``i`` draws from a Philox stream
    keyed by ``(seed, i)``, so results do not depend on evaluation order.

    Returns trajectory-averaged expectation values when ``e_ops`` is given,
    otherwise the trajectory-averaged density matrices.
    """
    tlist = _check_tlist(tlist)
    if not isinstance(ntraj, numbers.Integral) or ntraj < 1:
        raise StructuralError(f"ntraj must be a positive integer, got {ntraj!r}")
    ntraj = int(ntraj)
    args = dict(args or {})
    Htd = build_td_operator(H, args)
    cs = _c_op_specs(c_ops, args)
    if not isinstance(psi0, QuantumObject) or not psi0.isket:
        raise StructuralError("mcsolve needs a ket initial state")
    _check_state_dims(psi0, Htd)
    n = Htd.shape[0]
    for c in cs:
        if c.shape != (n, n):
            raise StructuralError(f"collapse operator dims {c.dims} differ from {Htd.dims}")
    obs = _Observables(e_ops, n)
    opts = _as_options(options)
    gen = _effective_generator(Htd, cs, args)
    seed_seq = np.random.SeedSequence(seed)
    nt = tlist.size
    if len(obs):
        acc = np.zeros((nt, len(obs)), dtype=np.complex128)
    else:
        acc = np.zeros((nt, n, n), dtype=np.complex128)

    def sample(i, psi, weight):
        if len(obs):
            acc[i] += weight * np.array([np.vdot(psi, m @ psi) for m in obs.mats])
        else:
            acc[i] += weight * np.outer(psi, psi.conj())

    y0 = psi0.full().ravel()
    col_times, col_which = [], []
    if not cs:
        # jump-free: all trajectories coincide
        times, which = _run_trajectory(gen, cs, y0, tlist, opts, None, lambda i, p: sample(i, p, 1.0))
        col_times = [[] for _ in range(ntraj)]
        col_which = [[] for _ in range(ntraj)]
    else:
        w = 1.0 / ntraj
        for traj in range(ntraj):
            rng = _trajectory_rng(seed_seq, traj)
            times, which = _run_trajectory(gen, cs, y0, tlist, opts, rng, lambda i, p: sample(i, p, w))
            col_times.append(times)
            col_which.append(which)
    if len(obs):
        return Odedata("mcsolve", tlist, [], obs.finish(list(acc)), ntraj, col_times, col_which)
    ddims = [psi0.dims[0], psi0.dims[0]]
    states = [QuantumObject(0.5 * (m + m.conj().T), ddims) for m in acc]
    return Odedata("mcsolve", tlist, states, [], ntraj, col_times, col_which)


# ---------------------------------------------------------------------------
# Bloch-Redfield


@dataclass
class RedfieldTensor:
    """Bloch-Redfield generator in the Hamiltonian eigenbasis.

    ``tensor`` acts on column-stacked density matrices expressed in the basis
    ``ekets`` (ascending ``evals``).
    """

    tensor: QuantumObject
    ekets: list
    evals: np.ndarray

    def basis_matrix(self):
        return np.column_stack([k.full().ravel() for k in self.ekets])


def _spectrum_matrix(S, W):
    out = np.empty(W.shape)
    for idx, w in np.ndenumerate(W):
        out[idx] = float(np.real(S(float(w))))
    return out


def bloch_redfield_tensor(H, a_ops, spectra, secular=False, secular_cutoff=0.1):
    """Bloch-Redfield tensor for system-bath couplings ``a_ops`` with noise spectra.

    ``spectra[k](w)`` is the real noise power spectrum of the bath coupled
    through ``a_ops[k]`` at angular frequency ``w``; positive ``w`` drives
    emission (downward transitions) and ``w = 0`` pure dephasing. A
    transition a -> b of frequency ``w`` proceeds at rate
    ``2*pi*S(w)*|<b|A|a>|^2``.

    With ``secular=True``, couplings between elements whose Bohr
    frequencies differ by more than ``secular_cutoff`` are dropped.
    """
    if not isinstance(H, QuantumObject) or not H.isoper or not H.isherm:
        raise StructuralError("Bloch-Redfield needs a Hermitian Hamiltonian")
    if len(a_ops) != len(spectra):
        raise StructuralError(f"{len(a_ops)} coupling operators but {len(spectra)} spectra")
    n = H.shape[0]
    for a in a_ops:
        if not isinstance(a, QuantumObject) or a.shape != (n, n) or not a.isherm:
            raise StructuralError("coupling operators must be Hermitian and match the Hamiltonian")
    evals, ekets = eigensolve(H)
    V = np.column_stack([k.full().ravel() for k in ekets])
    W = evals[:, None] - evals[None, :]
    I = np.eye(n)
    R = -1j * np.einsum("ab,ac,bd->abcd", W, I, I)
    for a_op, S in zip(a_ops, spectra):
        A = V.conj().T @ a_op.full() @ V
        Sk = 2 * np.pi * _spectrum_matrix(S, W)
        s1 = A @ (A * Sk.T)
        s2 = (A * Sk) @ A
        diss = 0.5 * np.einsum("ac,db->abcd", A * Sk.T, A)
        diss += 0.5 * np.einsum("ac,db->abcd", A, A * Sk)
        diss -= 0.5 * np.einsum("ac,bd->abcd", s1, I)
        diss -= 0.5 * np.einsum("ac,db->abcd", I, s2)
        if secular:
            mask = np.abs(W[:, :, None, None] - W[None, None, :, :]) > secular_cutoff
            diss[mask] = 0.0
        R = R + diss
    mat = R.transpose(1, 0, 3, 2).reshape(n * n, n * n)
    dims = H.dims
    return RedfieldTensor(QuantumObject(mat, [dims, dims]), ekets, np.asarray(evals))


def brmesolve(H, psi0, tlist, a_ops, e_ops=None, spectra=(), options=None, secular=False,
              secular_cutoff=0.1):
    """Integrate the Bloch-Redfield master equation; output in the original basis."""
    tlist = _check_tlist(tlist)
    if isinstance(H, (list, TimeDependentOperator)):
        raise StructuralError("brmesolve needs a time-independent Hamiltonian")
    rt = bloch_redfield_tensor(H, a_ops, spectra, secular, secular_cutoff)
    n = H.shape[0]
    if not isinstance(psi0, QuantumObject) or psi0.kind not in ("ket", "operator") or psi0.shape[0] != n:
        raise StructuralError("initial state must be a ket or density matrix matching H")
    rho = (ket2dm(psi0) if psi0.isket else psi0).full()
    V = rt.basis_matrix()
    rho_e = V.conj().T @ rho @ V
    obs = _Observables(e_ops, n)
    gen = LinearGenerator(rt.tensor.data, [])
    ddims = [H.dims[0], H.dims[0]]
    table, states = [], []

    def observe(i, t, y):
        lab = V @ y.reshape(n, n, order="F") @ V.conj().T
        if len(obs):
            table.append(obs.on_vec_dm(lab.reshape(-1, order="F")))
        else:
            states.append(QuantumObject(lab, ddims))

    integrate(gen, rho_e.reshape(-1, order="F"), tlist, _as_options(options), observe)
    return Odedata("brmesolve", tlist, states, obs.finish(table))
