import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.linalg import expm as dense_expm

from qdyn import (
    IntegratorOptions,
    QuantumObject,
    StructuralError,
    basis,
    bloch_redfield_tensor,
    brmesolve,
    ket2dm,
    mcsolve,
    mesolve,
    num,
    qeye,
    rand_dm,
    rand_herm,
    rand_ket,
    sigmam,
    sigmax,
    sigmay,
    sigmaz,
    spost,
    spre,
    tensor,
)
from qdyn.demos import coupled_qubits_system, floquet_markov_system, two_qubit_gate_system

TIGHT = IntegratorOptions(rtol=1e-9, atol=1e-11)


def demo_systems():
    H, psi0, c_ops, T, _ = two_qubit_gate_system()
    yield "two-qubit-gate", H, psi0, c_ops, np.linspace(0, T, 40), None
    H, psi0, c_ops, _, _, _ = coupled_qubits_system()
    yield "coupled-qubits", H, psi0, c_ops, np.linspace(0, 15, 60), None
    H, args, _, _ = floquet_markov_system()
    yield "driven-qubit", H, basis(2, 0), [np.sqrt(0.05) * sigmax()], np.linspace(0, 25, 60), args


class TestMesolve:
    def test_qubit_decay(self):
        t = np.linspace(0, 10, 101)
        res = mesolve(0 * sigmaz(), basis(2, 0), t, [sigmam()], [num(2)])
        pe = 1 - res.expect[0]
        assert np.abs(pe - np.exp(-t)).max() <= 1e-5

    def test_ket_without_collapse_gives_kets(self):
        res = mesolve(sigmax(), basis(2, 0), [0, 1], [], [])
        assert all(s.isket for s in res.states)

    def test_density_matrix_output(self):
        res = mesolve(sigmax(), basis(2, 0), [0, 1], [sigmam()], [])
        assert all(s.kind == "operator" for s in res.states)

    def test_ideal_swap(self):
        H, psi0, _, T, occ = two_qubit_gate_system()
        res = mesolve(H, psi0, [0, T], [], occ, options=TIGHT)
        n1, n2 = res.expect[0][-1], res.expect[1][-1]
        assert n1 <= 1e-5 and n2 >= 1 - 1e-5

    def test_closed_against_expm(self):
        H = rand_herm(4, seed=1)
        psi = rand_ket(4, seed=2)
        res = mesolve(H, psi, [0, 0.5, 2.0], [], [], options=TIGHT)
        for t, s in zip([0, 0.5, 2.0], res.states):
            assert_allclose(s.full().ravel(), dense_expm(-1j * H.full() * t) @ psi.full().ravel(), atol=1e-8)

    def test_zero_coupling_drive_identical(self):
        H0 = rand_herm(2, seed=3)
        t = np.linspace(0, 3, 11)
        a = mesolve(H0, basis(2, 0), t, [sigmam()], [sigmaz()])
        b = mesolve([H0, [0 * sigmax(), "cos(w*t)"]], basis(2, 0), t, [sigmam()], [sigmaz()], args={"w": 3.0})
        assert_array_equal(a.expect[0], b.expect[0])

    def test_time_dependent_collapse(self):
        # decay rate ramps linearly: p_e = exp(-t^2/2)
        t = np.linspace(0, 3, 31)
        res = mesolve(0 * sigmaz(), basis(2, 0), t, [[sigmam(), "sqrt(t)"]], [num(2)], options=TIGHT)
        assert np.abs(1 - res.expect[0] - np.exp(-t ** 2 / 2)).max() <= 1e-7

    def test_callback_hamiltonian(self):
        t = np.linspace(0, 2, 5)
        a = mesolve([sigmaz(), [sigmax(), "cos(w*t)"]], basis(2, 0), t, [], [sigmay()], args={"w": 2.0})
        b = mesolve([sigmaz(), [sigmax(), lambda t, args: np.cos(args["w"] * t)]], basis(2, 0), t, [], [sigmay()],
                    args={"w": 2.0})
        assert_allclose(a.expect[0], b.expect[0], atol=1e-12)

    def test_states_xor_expect(self):
        with_e = mesolve(sigmax(), basis(2, 0), [0, 1], [sigmam()], [sigmaz()])
        without = mesolve(sigmax(), basis(2, 0), [0, 1], [sigmam()], [])
        assert with_e.states == [] and len(with_e.expect) == 1
        assert without.expect == [] and len(without.states) == 2

    def test_expect_lengths_and_types(self):
        t = np.linspace(0, 1, 7)
        res = mesolve(sigmax(), basis(2, 0), t, [sigmam()], [sigmaz(), sigmam()])
        assert all(len(e) == len(t) for e in res.expect)
        assert np.isrealobj(res.expect[0])
        assert np.iscomplexobj(res.expect[1])

    @pytest.mark.parametrize("system", list(demo_systems()), ids=lambda s: s[0])
    def test_trace_and_positivity(self, system):
        _, H, psi0, c_ops, t, args = system
        res = mesolve(H, psi0, t, c_ops, [], args=args)
        for rho in res.states:
            m = rho.full()
            assert abs(np.trace(m) - 1) <= 1e-6
            assert np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() >= -1e-5

    def test_dims_mismatch(self):
        with pytest.raises(StructuralError):
            mesolve(sigmaz(), basis(3, 0), [0, 1])

    def test_descending_times(self):
        with pytest.raises(StructuralError):
            mesolve(sigmaz(), basis(2, 0), [1, 0])


class TestMcsolve:
    def test_no_collapse_matches_schroedinger(self):
        H = rand_herm(3, seed=4)
        psi = rand_ket(3, seed=5)
        t = np.linspace(0, 4, 21)
        ops = [num(3), rand_herm(3, seed=6)]
        mc = mcsolve(H, psi, t, [], ops, ntraj=10, seed=1)
        me = mesolve(H, psi, t, [], ops)
        for a, b in zip(mc.expect, me.expect):
            assert np.abs(a - b).max() <= 1e-6
        assert mc.ntraj == 10
        assert mc.col_times == [[]] * 10

    def test_binomial_bound(self):
        ntraj = 2000
        t = np.linspace(0, 5, 51)
        res = mcsolve(0 * sigmaz(), basis(2, 0), t, [sigmam()], [num(2)], ntraj=ntraj, seed=7)
        p = np.exp(-t)
        se = np.sqrt(p * (1 - p) / ntraj)
        assert np.all(np.abs(1 - res.expect[0] - p) <= 4 * se + 1e-12)

    def test_jump_times_recorded(self):
        res = mcsolve(0 * sigmaz(), basis(2, 0), np.linspace(0, 50, 3), [sigmam()], [num(2)], ntraj=200, seed=2)
        # over 50 lifetimes every trajectory decays exactly once
        assert all(len(ts) == 1 for ts in res.col_times)
        assert all(w == [0] for w in res.col_which)
        mean_time = np.mean([ts[0] for ts in res.col_times])
        assert abs(mean_time - 1.0) <= 5 / np.sqrt(200)

    def test_channel_ratio(self):
        g1, g2, ntraj = 1.0, 0.5, 1000
        c1 = np.sqrt(g1) * basis(3, 0) * basis(3, 2).dag()
        c2 = np.sqrt(g2) * basis(3, 1) * basis(3, 2).dag()
        res = mcsolve(0 * qeye(3), basis(3, 2), [0, 40], [c1, c2], [num(3)], ntraj=ntraj, seed=3)
        which = [w[0] for w in res.col_which]
        frac = which.count(0) / ntraj
        p = g1 / (g1 + g2)
        assert abs(frac - p) <= 5 * np.sqrt(p * (1 - p) / ntraj)

    def test_zero_trajectories(self):
        with pytest.raises(StructuralError):
            mcsolve(sigmaz(), basis(2, 0), [0, 1], [sigmam()], [], ntraj=0)

    def test_density_matrix_rejected(self):
        with pytest.raises(StructuralError):
            mcsolve(sigmaz(), ket2dm(basis(2, 0)), [0, 1], [sigmam()], [])

    def test_same_seed_identical(self):
        kw = dict(ntraj=20, seed=11)
        a = mcsolve(sigmax(), basis(2, 0), np.linspace(0, 3, 7), [sigmam()], [sigmaz()], **kw)
        b = mcsolve(sigmax(), basis(2, 0), np.linspace(0, 3, 7), [sigmam()], [sigmaz()], **kw)
        assert_array_equal(a.expect[0], b.expect[0])
        assert a.col_times == b.col_times

    def test_states_mode_averages_density_matrices(self):
        t = np.linspace(0, 2, 5)
        res = mcsolve(sigmax(), basis(2, 0), t, [sigmam()], [], ntraj=50, seed=4)
        assert res.expect == [] and len(res.states) == len(t)
        for rho in res.states:
            m = rho.full()
            assert abs(np.trace(m) - 1) <= 1e-10
            assert_allclose(m, m.conj().T, atol=0)

    def test_converges_with_more_trajectories(self):
        t = np.linspace(0, 5, 26)
        me = np.exp(-t)
        errs = []
        for ntraj in (500, 5000):
            res = mcsolve(0 * sigmaz(), basis(2, 0), t, [sigmam()], [num(2)], ntraj=ntraj, seed=5)
            errs.append(np.abs(1 - res.expect[0] - me).max())
        assert errs[1] < errs[0]


def qubit_flat_spectrum(gamma):
    return lambda w: gamma / (2 * np.pi) * (w > 0)


class TestBlochRedfield:
    def test_zero_spectra_unitary_tensor(self):
        H = rand_herm(3, seed=8)
        rt = bloch_redfield_tensor(H, [rand_herm(3, seed=9)], [lambda w: 0.0])
        Hd = QuantumObject(np.diag(rt.evals), H.dims)
        assert_allclose(rt.tensor.full(), (-1j * (spre(Hd) - spost(Hd))).full(), atol=1e-14)

    def test_downward_rate_matches_lindblad(self):
        gamma, w0 = 0.3, 2 * np.pi
        rt = bloch_redfield_tensor(w0 / 2 * sigmaz(), [sigmax()], [qubit_flat_spectrum(gamma)])
        R = rt.tensor.full()
        # eigenbasis index 0 is the ground state; vec index of (a, b) is a + 2b
        assert abs(R[0, 3] - gamma) <= 1e-10
        assert abs(R[3, 3] + gamma) <= 1e-10
        assert abs(R[3, 0]) <= 1e-10

    def test_flat_spectrum_matches_mesolve(self):
        gamma, w0 = 0.3, 2 * np.pi
        H = w0 / 2 * sigmaz()
        psi0 = (basis(2, 0) + 0.5 * basis(2, 1)).unit()
        t = np.linspace(0, 10, 201)
        br = brmesolve(H, psi0, t, [sigmax()], [sigmaz()], [qubit_flat_spectrum(gamma)])
        me = mesolve(H, psi0, t, [np.sqrt(gamma) * sigmam()], [sigmaz()])
        assert np.abs(br.expect[0] - me.expect[0]).max() <= 1e-4

    def test_zero_spectra_matches_closed_evolution(self):
        H = rand_herm(3, seed=10)
        psi = rand_ket(3, seed=11)
        t = np.linspace(0, 3, 13)
        br = brmesolve(H, psi, t, [rand_herm(3, seed=12)], [], [lambda w: 0.0])
        for ti, rho in zip(t, br.states):
            u = dense_expm(-1j * H.full() * ti) @ psi.full().ravel()
            assert np.abs(rho.full() - np.outer(u, u.conj())).max() <= 1e-6

    def test_preserves_hermiticity(self):
        H = rand_herm(3, seed=13)
        a = rand_herm(3, seed=14)
        rt = bloch_redfield_tensor(H, [a], [lambda w: 0.1 + 0.05 * np.tanh(w)])
        rho = rand_herm(3, seed=15).full()
        for t in (0.5, 3.0):
            out = (dense_expm(rt.tensor.full() * t) @ rho.reshape(-1, order="F")).reshape(3, 3, order="F")
            assert np.abs(out - out.conj().T).max() <= 1e-8

    def test_coupled_qubits_bounded(self):
        H, psi0, _, a_ops, spectra, e_ops = coupled_qubits_system()
        res = brmesolve(H, psi0, np.linspace(0, 15, 300), a_ops, e_ops, spectra)
        for e in res.expect:
            assert np.all(np.abs(e) <= 1 + 1e-9)

    @pytest.mark.parametrize("secular, bound", [(False, 1e-2), (True, 0.1)])
    def test_coupled_qubits_against_lindblad(self, secular, bound):
        # the Ohmic callbacks give rate S(w) ~ gamma near the qubit frequency, so the
        # 2*pi*S normalization needs S / (2*pi) to reproduce the collapse-operator rates
        H, psi0, c_ops, a_ops, spectra, e_ops = coupled_qubits_system()
        scaled = [lambda w, S=S: S(w) / (2 * np.pi) for S in spectra]
        t = np.linspace(0, 15, 151)
        br = brmesolve(H, psi0, t, a_ops, e_ops, scaled, secular=secular)
        me = mesolve(H, psi0, t, c_ops, e_ops)
        for a, b in zip(br.expect, me.expect):
            assert np.abs(a - b).max() <= bound

    def test_density_matrix_initial_state(self):
        H = sigmaz()
        rho0 = rand_dm(2, seed=16)
        res = brmesolve(H, rho0, [0, 1], [sigmax()], [], [qubit_flat_spectrum(0.2)])
        assert_allclose(res.states[0].full(), rho0.full(), atol=1e-12)

    def test_non_hermitian_coupling(self):
        with pytest.raises(StructuralError):
            bloch_redfield_tensor(sigmaz(), [sigmam()], [lambda w: 1.0])

    def test_length_mismatch(self):
        with pytest.raises(StructuralError):
            bloch_redfield_tensor(sigmaz(), [sigmax()], [])

    def test_states_xor_expect(self):
        a = brmesolve(sigmaz(), basis(2, 0), [0, 1], [sigmax()], [sigmaz()], [lambda w: 0.1])
        b = brmesolve(sigmaz(), basis(2, 0), [0, 1], [sigmax()], [], [lambda w: 0.1])
        assert a.states == [] and b.expect == []
        assert len(a.expect[0]) == 2 and len(b.states) == 2

    def test_tensor_shape(self):
        H = tensor(sigmaz(), qeye(2))
        rt = bloch_redfield_tensor(H, [tensor(sigmax(), qeye(2))], [lambda w: 0.0])
        assert rt.tensor.shape == (16, 16)
        assert rt.tensor.kind == "superoperator"
