"""Floquet modes of periodically driven Hamiltonians and the Floquet-Markov solver.

A solution of a T-periodic Schroedinger equation decomposes as
``psi(t) = sum_i c_i exp(-i eps_i t) phi_i(t)`` with T-periodic modes
``phi_i`` and quasienergies ``eps_i`` folded into ``[-pi/T, pi/T)``.
"""
from __future__ import annotations

import numbers
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .errors import DegenerateInputError, StructuralError
from .expr import build_td_operator, evaluate_operator
from .ode import IntegratorOptions, _as_options, integrate
from .qobj import QuantumObject, ket2dm
from .solvers import Odedata, _check_tlist, _Observables
from .superop import LinearGenerator, unitary_propagators

__all__ = [
    "FloquetBasis", "floquet_modes", "floquet_modes_t",
    "FloquetModeTable", "floquet_mode_table", "floquet_mode_lookup",
    "floquet_decompose", "floquet_wavefunction",
    "floquet_rates", "fmmesolve",
]

FLOQUET_OPTIONS = IntegratorOptions(rtol=1e-10, atol=1e-12)
DEFAULT_KMAX = 20
DEFAULT_TABLE_SIZE = 501
_AVERAGE_SAMPLES = 128
_DEGENERACY_TOL = 1e-8
_ZONE_EDGE_RTOL = 1e-9


@dataclass
class FloquetBasis:
    """Floquet modes at t=0 and their quasienergies (ascending when sorted)."""

    modes0: list
    quasienergies: np.ndarray
    period: float
    H: object = field(repr=False, default=None)
    args: dict = field(repr=False, default_factory=dict)
    options: IntegratorOptions = field(repr=False, default=FLOQUET_OPTIONS)

    def __iter__(self):
        yield self.modes0
        yield self.quasienergies

    def matrix(self):
        return _columns(self.modes0)


def _columns(kets):
    return np.column_stack([k.full().ravel() for k in kets])


def _kets(mat, dims):
    kdims = [dims[0], [1] * len(dims[0])]
    return [QuantumObject._wrap(sp.csr_array(mat[:, i].reshape(-1, 1)), kdims) for i in range(mat.shape[1])]


def _fix_phase_columns(mat):
    out = mat.copy()
    for i in range(out.shape[1]):
        v = out[:, i]
        mags = np.abs(v)
        idx = int(np.flatnonzero(mags >= mags.max() - 1e-10)[0])
        out[:, i] = v / (v[idx] / mags[idx])
    return out


def _period_average(Htd, T):
    ts = np.arange(_AVERAGE_SAMPLES) * (T / _AVERAGE_SAMPLES)
    acc = np.zeros(Htd.shape, dtype=np.complex128)
    for t in ts:
        acc += evaluate_operator(Htd, t).full()
    return acc / _AVERAGE_SAMPLES


def _check_period(T):
    if not isinstance(T, numbers.Real) or not T > 0:
        raise StructuralError(f"period must be positive, got {T!r}")
    return float(T)


def floquet_modes(H, T, args=None, sort=True, options=None):
    """Floquet modes at t=0 from the eigendecomposition of the one-period propagator.

    Degenerate eigenvalues of U(T) (for example at exact resonance, where
    U(T) may be proportional to the identity) leave the modes ambiguous;
    within each degenerate cluster they are chosen to diagonalize the
    period-averaged Hamiltonian. Each mode's largest component is made real
    positive.
    """
    T = _check_period(T)
    args = dict(args or {})
    Htd = build_td_operator(H, args)
    opts = _as_options(options) if options is not None else FLOQUET_OPTIONS
    U = unitary_propagators(Htd, [T], args, opts)[0]
    n = U.shape[0]
    dev = np.abs(U.conj().T @ U - np.eye(n)).max()
    if dev > 1e-6:
        raise DegenerateInputError(f"one-period propagator is not unitary (deviation {dev:.2e})")
    S, Z = la.schur(U, output="complex")
    lam = np.diag(S).copy()
    if np.abs(np.abs(lam) - 1).max() > 1e-6:
        raise DegenerateInputError("propagator eigenvalues are off the unit circle")
    eps = -np.angle(lam) / T
    # eigenphases within rounding of the top edge count as ties and fold down
    eps[eps >= np.pi / T * (1 - _ZONE_EDGE_RTOL)] -= 2 * np.pi / T
    # resolve degenerate clusters with the averaged Hamiltonian
    order = np.argsort(eps, kind="stable")
    lam, eps, Z = lam[order], eps[order], Z[:, order]
    Hbar = None
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(lam[stop] - lam[start]) <= _DEGENERACY_TOL:
            stop += 1
        if stop - start > 1:
            if Hbar is None:
                Hbar = _period_average(Htd, T)
            block = Z[:, start:stop]
            proj = block.conj().T @ Hbar @ block
            _, w = la.eigh(0.5 * (proj + proj.conj().T))
            Z[:, start:stop] = block @ w
        start = stop
    if not sort:
        # restore Schur order
        inv = np.argsort(order, kind="stable")
        eps, Z = eps[inv], Z[:, inv]
    Z = _fix_phase_columns(Z)
    return FloquetBasis(_kets(Z, Htd.dims), eps, T, Htd, args, opts)


def _mode_matrices(basis, times):
    """Mode matrices (columns phi_i(t)) at each time, times within one period or beyond."""
    times = np.asarray(times, dtype=float)
    V0 = basis.matrix()
    out = [None] * len(times)
    order = np.argsort(times, kind="stable")
    pos = [k for k in order if times[k] > 0]
    for k in order:
        if times[k] == 0:
            out[k] = V0.copy()
    if pos:
        Us = unitary_propagators(basis.H, times[pos], basis.args, basis.options)
        for k, U in zip(pos, Us):
            phase = np.exp(1j * basis.quasienergies * times[k])
            out[k] = (U @ V0) * phase[None, :]
    return out


def floquet_modes_t(basis, t, H=None, args=None):
    """Floquet modes at time ``t`` (reduced modulo the period)."""
    if H is not None:
        basis = FloquetBasis(basis.modes0, basis.quasienergies, basis.period,
                             build_td_operator(H, args), dict(args or {}), basis.options)
    if t < 0:
        raise StructuralError("time must be non-negative")
    tr = float(t) % basis.period
    if tr == 0:
        return list(basis.modes0)
    mat = _mode_matrices(basis, [tr])[0]
    return _kets(mat, basis.H.dims)


@dataclass
class FloquetModeTable:
    """Floquet modes sampled on a uniform grid covering [0, T] inclusively."""

    times: np.ndarray
    modes: list
    period: float
    matrices: np.ndarray = field(repr=False, default=None)


def floquet_mode_table(basis, n_samples=DEFAULT_TABLE_SIZE, H=None, args=None):
    if not isinstance(n_samples, numbers.Integral) or n_samples < 2:
        raise StructuralError("n_samples must be an integer >= 2")
    if H is not None:
        basis = FloquetBasis(basis.modes0, basis.quasienergies, basis.period,
                             build_td_operator(H, args), dict(args or {}), basis.options)
    times = np.linspace(0.0, basis.period, int(n_samples))
    mats = _mode_matrices(basis, times)
    dims = basis.H.dims
    return FloquetModeTable(times, [_kets(m, dims) for m in mats], basis.period, np.array(mats))


def floquet_mode_lookup(table, t):
    """Modes at the grid point nearest to ``t`` modulo the period.

    No interpolation is done, so the phase error is of order
    ``|eps| * T / (n_samples - 1)``.
    """
    T = table.period
    tr = float(t) % T
    step = T / (len(table.times) - 1)
    idx = int(np.rint(tr / step))
    idx = min(max(idx, 0), len(table.times) - 1)
    return table.modes[idx]


def floquet_decompose(modes, psi):
    """Coefficients ``c_i = <phi_i|psi>`` of a ket in a Floquet basis."""
    if not psi.isket:
        raise StructuralError("floquet_decompose needs a ket")
    V = _columns(modes)
    if V.shape[0] != psi.shape[0] or V.shape[1] != V.shape[0]:
        raise StructuralError("mode set does not match the state dimension")
    return V.conj().T @ psi.full().ravel()


def floquet_wavefunction(basis, coeffs, t):
    """``psi(t) = sum_i c_i exp(-i eps_i t) phi_i(t)``."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if coeffs.shape != (len(basis.modes0),):
        raise StructuralError("coefficient count must equal the number of modes")
    if t < 0:
        raise StructuralError("time must be non-negative")
    V = _mode_matrices(basis, [float(t) % basis.period])[0]
    psi = V @ (coeffs * np.exp(-1j * basis.quasienergies * t))
    return QuantumObject(psi.reshape(-1, 1), [basis.H.dims[0], [1] * len(basis.H.dims[0])])


# ---------------------------------------------------------------------------
# Floquet-Markov master equation


def floquet_rates(basis, table, x_ops, spectra, kmax=DEFAULT_KMAX):
    """Transition-rate matrix ``G[a, b]`` (from mode a to mode b).

    Each coupling operator is expanded in drive harmonics
    ``X_ab(t) = sum_k X_ab(k) exp(i k w t)`` over the table grid (endpoint
    excluded); a sideband contributes ``2 pi S(d) |X_ab(k)|^2`` when its
    frequency ``d = eps_a - eps_b + k w`` is positive.
    """
    if not isinstance(kmax, numbers.Integral) or kmax < 0:
        raise StructuralError(f"kmax must be a non-negative integer, got {kmax!r}")
    T = basis.period
    omega = 2 * np.pi / T
    mats = table.matrices[:-1]
    ts = table.times[:-1]
    m = len(ts)
    eps = basis.quasienergies
    n = len(eps)
    ks = np.arange(-kmax, kmax + 1)
    phases = np.exp(-1j * np.outer(ks, omega * ts)) / m
    rates = np.zeros((n, n))
    for X, S in zip(x_ops, spectra):
        Xm = X.full()
        Xt = np.einsum("tia,ij,tjb->tab", mats.conj(), Xm, mats)
        Xk = np.einsum("kt,tab->kab", phases, Xt)
        delta = eps[None, :, None] - eps[None, None, :] + ks[:, None, None] * omega
        for idx in np.ndindex(delta.shape):
            d = delta[idx]
            if d > 0:
                amp = abs(Xk[idx]) ** 2
                if amp > 0:
                    rates[idx[1], idx[2]] += 2 * np.pi * float(np.real(S(float(d)))) * amp
    return rates


def floquet_markov_generator(eps, rates):
    """Secular Floquet-Markov generator on column-stacked Floquet-basis density matrices."""
    n = len(eps)
    out = rates.sum(axis=1)
    G = np.zeros((n * n, n * n), dtype=np.complex128)
    for a in range(n):
        for b in range(n):
            i = a + n * b
            if a == b:
                for c in range(n):
                    if c != a:
                        G[i, c + n * c] += rates[c, a]
                G[i, i] -= out[a] - rates[a, a]
            else:
                G[i, i] = -1j * (eps[a] - eps[b]) - 0.5 * (out[a] + out[b])
    return G


def fmmesolve(H, psi0, tlist, x_ops, e_ops, spectra, T, args=None, kmax=DEFAULT_KMAX, options=None,
              n_samples=DEFAULT_TABLE_SIZE):
    """Floquet-Markov master equation in the secular approximation.

    ``states`` are density matrices in the Floquet basis at each time:
    ``rho_lab(t) = V(t) rho V(t)^dag`` with V(t) the mode matrix at t
    (e.g. ``transform(rho, floquet_mode_lookup(table, t), inverse=True)``).
    When ``e_ops`` are given they are evaluated in the lab frame using
    exactly propagated modes.
    """
    tlist = _check_tlist(tlist)
    if len(x_ops) != len(spectra):
        raise StructuralError(f"{len(x_ops)} coupling operators but {len(spectra)} spectra")
    if not isinstance(kmax, numbers.Integral) or kmax < 0:
        raise StructuralError(f"kmax must be a non-negative integer, got {kmax!r}")
    basis = floquet_modes(H, T, args)
    n = len(basis.modes0)
    for X in x_ops:
        if not isinstance(X, QuantumObject) or X.shape != (n, n) or not X.isherm:
            raise StructuralError("coupling operators must be Hermitian and match the Hamiltonian")
    if not isinstance(psi0, QuantumObject) or psi0.kind not in ("ket", "operator") or psi0.shape[0] != n:
        raise StructuralError("initial state must be a ket or density matrix matching H")
    table = floquet_mode_table(basis, n_samples)
    rates = floquet_rates(basis, table, x_ops, spectra, kmax)
    gen = LinearGenerator(floquet_markov_generator(basis.quasienergies, rates), [])
    V0 = basis.matrix()
    rho = (ket2dm(psi0) if psi0.isket else psi0).full()
    rho_f = V0.conj().T @ rho @ V0
    obs = _Observables(e_ops, n)
    ys = integrate(gen, rho_f.reshape(-1, order="F"), tlist, _as_options(options))
    ddims = [basis.H.dims[0], basis.H.dims[0]]
    if not len(obs):
        states = [QuantumObject(y.reshape(n, n, order="F"), ddims) for y in ys]
        return Odedata("fmmesolve", tlist, states, [])
    Vs = _mode_matrices(basis, tlist)
    table_rows = []
    for y, V in zip(ys, Vs):
        lab = V @ y.reshape(n, n, order="F") @ V.conj().T
        table_rows.append(obs.on_vec_dm(lab.reshape(-1, order="F")))
    return Odedata("fmmesolve", tlist, [], obs.finish(table_rows))
