"""Worked-example scenarios and the demo runner used by the command line.

Each demo writes text data files (see :mod:`qdyn.fileio`) into an output
directory. Randomness is drawn only from the given seed, default
``DEFAULT_SEED``, so repeated runs produce byte-identical files.
"""
from __future__ import annotations

import os

import numpy as np

from .analysis import expect, fidelity, qpt, qpt_export, wigner
from .fileio import file_data_store
from .floquet import floquet_mode_lookup, floquet_mode_table, floquet_modes, fmmesolve
from .operators import basis, displace, num, qeye, rand_ket, sigmam, sigmax, sigmay, sigmaz
from .qobj import ket2dm, tensor, transform
from .solvers import brmesolve, mcsolve, mesolve
from .superop import propagator, spost, spre

__all__ = ["DEFAULT_SEED", "DEMOS", "run_demo"]

DEFAULT_SEED = 20121015
# the full Redfield tensor can push populations slightly negative from a pure start
BRME_SECULAR = True
TWO_PI = 2 * np.pi


# ---------------------------------------------------------------------------
# scenarios (shared with the test suite)


def two_qubit_gate_system(g=1.0 * TWO_PI, g1=0.75, g2=0.05, n_th=0.75):
    """XX+YY coupled qubits with thermal relaxation and dephasing on each qubit."""
    H = g * (tensor(sigmax(), sigmax()) + tensor(sigmay(), sigmay()))
    psi0 = tensor(basis(2, 1), basis(2, 0))
    c_ops = []
    for which in range(2):
        factors = [qeye(2), qeye(2)]
        factors[which] = sigmam()
        sm = tensor(factors)
        factors[which] = sigmaz()
        sz = tensor(factors)
        c_ops += [np.sqrt(g1 * (1 + n_th)) * sm, np.sqrt(g1 * n_th) * sm.dag(), np.sqrt(g2) * sz]
    gate_time = np.pi / (4 * g)
    occupations = [tensor(num(2), qeye(2)), tensor(qeye(2), num(2))]
    return H, psi0, c_ops, gate_time, occupations


def driven_qubit_hamiltonian(E, delta=1.0 * TWO_PI):
    """``delta/2 sz + E/2 cos(w t) sx``; pass ``{"w": omega}`` as args."""
    return [delta / 2 * sigmaz(), [E / 2 * sigmax(), "cos(w * t)"]]


def floquet_markov_system(delta=0.0, eps0=1.0 * TWO_PI, A=0.1 * TWO_PI, w=1.0 * TWO_PI, gamma1=0.05):
    """Sinusoidally driven qubit with an Ohmic bath."""
    H = [-delta / 2 * sigmax() - eps0 / 2 * sigmaz(), [-A * sigmax(), "sin(w * t)"]]
    args = {"w": w}

    def spectrum(omega):
        return 0.5 * gamma1 * omega / TWO_PI

    return H, args, spectrum, TWO_PI / w


def coupled_qubits_system(g=0.1 * TWO_PI, gamma1=(0.25, 0.35), gamma2=(0.0, 0.0)):
    """Two tilted qubits with XX coupling; returns H, psi0, Lindblad c_ops, a_ops, spectra, qubit-1 ops."""
    w = np.array([1.0, 1.0]) * TWO_PI
    theta = np.array([0.025, 0.0]) * TWO_PI
    a = 0.8
    psi1 = (a * basis(2, 0) + (1 - a) * basis(2, 1)).unit()
    psi2 = ((1 - a) * basis(2, 0) + a * basis(2, 1)).unit()
    psi0 = tensor(psi1, psi2)
    sx = [tensor(sigmax(), qeye(2)), tensor(qeye(2), sigmax())]
    sy1 = tensor(sigmay(), qeye(2))
    sz = [tensor(sigmaz(), qeye(2)), tensor(qeye(2), sigmaz())]
    sm = [tensor(sigmam(), qeye(2)), tensor(qeye(2), sigmam())]
    H = w[0] * (np.cos(theta[0]) * sz[0] + np.sin(theta[0]) * sx[0])
    H = H + w[1] * (np.cos(theta[1]) * sz[1] + np.sin(theta[1]) * sx[1])
    H = H + g * sx[0] * sx[1]
    c_ops = [np.sqrt(gamma1[0]) * sm[0], np.sqrt(gamma1[1]) * sm[1]]

    def ohmic(k):
        def spectrum(omega):
            if omega == 0.0:
                return 0.5 * gamma2[k]
            return 0.5 * gamma1[k] * omega / TWO_PI * (omega > 0.0)

        return spectrum

    return H, psi0, c_ops, sx, [ohmic(0), ohmic(1)], [sx[0], sy1, sz[0]]


def cat_state(N=20, alpha=2.0 + 2.0j, seed=DEFAULT_SEED):
    psi = (displace(N, alpha) + displace(N, -alpha)) * basis(N, 0) + 0.5 * rand_ket(N, seed=seed)
    return psi.unit()


# ---------------------------------------------------------------------------
# demos


def _demo_two_qubit_gate(out, seed, ntraj):
    H, psi0, c_ops, T, occ = two_qubit_gate_system()
    tlist = np.linspace(0, T, 100)
    rho_list = mesolve(H, psi0, tlist, c_ops, []).states
    psi_list = mesolve(H, psi0, tlist, [], []).states
    cols = [tlist] + [expect(op, rho_list) for op in occ] + [expect(op, psi_list) for op in occ]
    file_data_store(os.path.join(out, "occupations.dat"), np.column_stack(cols), numtype="real",
                    comments=["columns: t, n1, n2, n1_ideal, n2_ideal"])
    F = fidelity(ket2dm(psi_list[-1]), rho_list[-1])
    file_data_store(os.path.join(out, "fidelity.dat"), np.array([[F]]), numtype="real",
                    comments=["fidelity of the dissipative final state to the ideal one"])
    written = ["occupations.dat", "fidelity.dat"]
    if ntraj:
        res = mcsolve(H, psi0, tlist, c_ops, occ, ntraj=ntraj, seed=seed)
        file_data_store(os.path.join(out, "occupations_mc.dat"),
                        np.column_stack([tlist] + res.expect), numtype="real",
                        comments=[f"columns: t, n1, n2 (mcsolve, ntraj={ntraj})"])
        written.append("occupations_mc.dat")
    return written


def _demo_quasienergies(out, seed, ntraj):
    delta = 1.0 * TWO_PI
    omega = 8.0 * TWO_PI
    T = TWO_PI / omega
    E_vec = np.linspace(0.0, 12.0, 100) * omega
    q = np.zeros((len(E_vec), 2))
    for i, E in enumerate(E_vec):
        q[i] = floquet_modes(driven_qubit_hamiltonian(E, delta), T, {"w": omega}).quasienergies
    file_data_store(os.path.join(out, "quasienergies.dat"), np.column_stack([E_vec, q]), numtype="real",
                    comments=["columns: E, quasienergy_1, quasienergy_2 (angular units)"])
    return ["quasienergies.dat"]


def floquet_vs_lindblad_curves(tlist=None):
    """Occupation of the upper computational state from mesolve and fmmesolve."""
    H, args, spectrum, T = floquet_markov_system()
    tlist = np.linspace(0, 25.0, 250) if tlist is None else tlist
    psi0 = basis(2, 0)
    gamma1 = 0.05
    p_me = mesolve(H, psi0, tlist, [np.sqrt(gamma1) * sigmax()], [num(2)], args=args).expect[0]
    basis0 = floquet_modes(H, T, args)
    table = floquet_mode_table(basis0, 501)
    states = fmmesolve(H, psi0, tlist, [sigmax()], [], [spectrum], T, args).states
    p_fm = np.array([
        expect(num(2), transform(rho, floquet_mode_lookup(table, t), inverse=True))
        for t, rho in zip(tlist, states)
    ])
    return tlist, p_me, p_fm


def _demo_floquet_vs_lindblad(out, seed, ntraj):
    tlist, p_me, p_fm = floquet_vs_lindblad_curves()
    file_data_store(os.path.join(out, "occupation.dat"), np.column_stack([tlist, p_me, p_fm]),
                    numtype="real", comments=["columns: t, p_lindblad, p_floquet_markov"])
    return ["occupation.dat"]


def _demo_brme_qubits(out, seed, ntraj):
    H, psi0, c_ops, a_ops, spectra, e_ops = coupled_qubits_system()
    tlist = np.linspace(0, 15, 500)
    me = mesolve(H, psi0, tlist, c_ops, e_ops).expect
    br = brmesolve(H, psi0, tlist, a_ops, e_ops, spectra, secular=BRME_SECULAR).expect
    file_data_store(os.path.join(out, "spins.dat"), np.column_stack([tlist] + me + br), numtype="real",
                    comments=["columns: t, sx_lindblad, sy_lindblad, sz_lindblad, sx_redfield, sy_redfield, sz_redfield"])
    return ["spins.dat"]


def iswap_processes(g1=0.75, g2=0.25, n_th=1.5):
    """Dissipative and ideal propagators of the XX+YY gate and the tomography basis."""
    H, _, c_ops, T, _ = two_qubit_gate_system(g1=g1, g2=g2, n_th=n_th)
    U_diss = propagator(H, T, c_ops)
    U_psi = (-1j * H * T).expm()
    U_ideal = spre(U_psi) * spost(U_psi.dag())
    op_basis = [[qeye(2), sigmax(), sigmay(), sigmaz()]] * 2
    op_label = [["i", "x", "y", "z"]] * 2
    return U_diss, U_ideal, op_basis, op_label


def _demo_qpt_iswap(out, seed, ntraj):
    U_diss, U_ideal, op_basis, op_label = iswap_processes()
    qpt_export(qpt(U_diss, op_basis, op_label), os.path.join(out, "chi_dissipative.dat"))
    qpt_export(qpt(U_ideal, op_basis, op_label), os.path.join(out, "chi_ideal.dat"))
    return ["chi_dissipative.dat", "chi_ideal.dat"]


def _demo_wigner_cat(out, seed, ntraj):
    psi = cat_state(seed=seed)
    xvec = np.linspace(-5, 5, 500)
    W = wigner(psi, xvec, xvec)
    file_data_store(os.path.join(out, "wigner.dat"), W, numtype="real")
    return ["wigner.dat"]


DEMOS = {
    "two-qubit-gate": _demo_two_qubit_gate,
    "quasienergies": _demo_quasienergies,
    "floquet-vs-lindblad": _demo_floquet_vs_lindblad,
    "brme-qubits": _demo_brme_qubits,
    "qpt-iswap": _demo_qpt_iswap,
    "wigner-cat": _demo_wigner_cat,
}


def run_demo(name, outdir, seed=None, ntraj=None):
    """Run one demo and return the list of files written (relative to ``outdir``)."""
    if name not in DEMOS:
        raise KeyError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    os.makedirs(outdir, exist_ok=True)
    return DEMOS[name](outdir, DEFAULT_SEED if seed is None else int(seed), ntraj)
