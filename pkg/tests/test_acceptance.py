"""Acceptance criteria, one test each, printing a PASS/FAIL line with timing.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are printed
even when output capture is on.
"""
import time

import numpy as np
from scipy.linalg import expm as dense_expm

from qdyn import (
    QuantumObject,
    basis,
    brmesolve,
    chi_to_superoperator,
    concurrence,
    eigensolve,
    entropy_conditional,
    entropy_mutual,
    expm,
    file_data_read,
    file_data_store,
    fidelity,
    fmmesolve,
    floquet_modes,
    ket2dm,
    liouvillian,
    mcsolve,
    mesolve,
    num,
    qeye,
    qload,
    qpt,
    qsave,
    rand_dm,
    rand_herm,
    sigmam,
    sigmap,
    sigmax,
    sigmaz,
    spost,
    spre,
    steadystate,
    tensor,
    wigner,
)
from qdyn.cli import main
from qdyn.demos import (
    BRME_SECULAR,
    cat_state,
    coupled_qubits_system,
    driven_qubit_hamiltonian,
    floquet_markov_system,
    floquet_vs_lindblad_curves,
    iswap_processes,
    two_qubit_gate_system,
)

TWO_PI = 2 * np.pi


class Criterion:
    """Collects named checks for one criterion and reports them on one line."""

    def __init__(self, number, title, budget=None):
        self.number, self.title, self.budget = number, title, budget
        self.checks = []
        self.start = time.perf_counter()

    def check(self, label, passed, detail):
        self.checks.append((label, bool(passed), detail))

    def finish(self, capsys):
        elapsed = time.perf_counter() - self.start
        if self.budget is not None:
            self.check("runtime", elapsed < self.budget, f"{elapsed:.2f}s < {self.budget:g}s")
        ok = all(p for _, p, _ in self.checks)
        details = "; ".join(f"{lbl} {d}" + ("" if p else " [FAILED]") for lbl, p, d in self.checks)
        with capsys.disabled():
            print(f"\ncriterion {self.number:2d} {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s) {self.title}: {details}")
        failed = [f"{lbl}: {d}" for lbl, p, d in self.checks if not p]
        assert not failed, "; ".join(failed)


def min_eig(rho):
    m = rho.full()
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()


def taylor_expm(m, terms=80):
    out = np.eye(m.shape[0], dtype=complex)
    term = out.copy()
    for k in range(1, terms):
        term = term @ m / k
        out = out + term
    return out


def displaced_parity_wigner(psi, x, y, pad=60):
    m = ket2dm(psi).full()
    big = np.zeros((pad, pad), dtype=complex)
    big[: m.shape[0], : m.shape[0]] = m
    a = np.diag(np.sqrt(np.arange(1, pad)), 1)
    alpha = (x + 1j * y) / np.sqrt(2)
    D = dense_expm(alpha * a.conj().T - np.conj(alpha) * a)
    parity = np.diag((-1.0) ** np.arange(pad))
    return np.trace(big @ D @ parity @ D.conj().T).real / np.pi


def test_01_qubit_decay(capsys):
    c = Criterion(1, "qubit decay oracle", budget=1.0)
    t = np.linspace(0, 10, 201)
    pe = mesolve(0 * sigmaz(), basis(2, 0), t, [sigmam()], [ket2dm(basis(2, 0))]).expect[0]
    err = np.abs(pe - np.exp(-t)).max()
    c.check("max error", err <= 1e-5, f"{err:.1e} <= 1e-5")
    c.finish(capsys)


def test_02_two_qubit_gate(capsys):
    c = Criterion(2, "two-qubit gate", budget=5.0)
    H, psi0, c_ops, T, (n1, n2) = two_qubit_gate_system()
    tlist = np.linspace(0, T, 100)
    ideal = mesolve(H, psi0, tlist, [], []).states[-1]
    diss = mesolve(H, psi0, tlist, c_ops, []).states[-1]
    n1_T = np.real((ideal.dag() * n1 * ideal).full()[0, 0])
    n2_T = np.real((ideal.dag() * n2 * ideal).full()[0, 0])
    F = fidelity(ket2dm(ideal), diss)
    c.check("n1(T)", n1_T <= 1e-5, f"{n1_T:.1e} <= 1e-5")
    c.check("n2(T)", n2_T >= 1 - 1e-5, f"1-{1 - n2_T:.1e} >= 1-1e-5")
    c.check("fidelity", 0.5 < F < 1, f"0.5 < {F:.4f} < 1")
    c.finish(capsys)


def test_03_quasienergies(capsys):
    c = Criterion(3, "quasienergy sweep", budget=60.0)
    delta, omega = 1.0 * TWO_PI, 8.0 * TWO_PI
    T = TWO_PI / omega
    sweep = np.linspace(0.0, 12.0, 100) * omega
    q = np.array([floquet_modes(driven_qubit_hamiltonian(E, delta), T, {"w": omega}).quasienergies
                  for E in sweep])
    err0 = np.abs(np.sort(q[0]) - [-np.pi, np.pi]).max()
    c.check("E=0", err0 <= 1e-6, f"|q - (+-pi)| {err0:.1e} <= 1e-6")
    inside = np.all(q >= -omega / 2) and np.all(q < omega / 2)
    c.check("zone", inside, f"range [{q.min():.3f}, {q.max():.3f}] in [-w/2, w/2)")
    jump = np.abs(np.diff(np.unwrap(q, axis=0, period=omega), axis=0)).max()
    c.check("continuity", jump < 0.5, f"max jump {jump:.3f} < 0.5")
    c.finish(capsys)


def test_04_floquet_markov_vs_lindblad(capsys):
    c = Criterion(4, "Floquet-Markov vs Lindblad", budget=60.0)
    _, p_me, p_fm = floquet_vs_lindblad_curves()
    dev = np.abs(p_me - p_fm).max()
    c.check("driven", dev < 0.1, f"{dev:.3f} < 0.1")
    H, args, spectrum, T = floquet_markov_system(A=0.0)
    rate = TWO_PI * spectrum(TWO_PI)
    t = np.linspace(0, 25, 251)
    p = fmmesolve(H, basis(2, 1), t, [sigmax()], [num(2)], [spectrum], T, args).expect[0]
    dev0 = np.abs(p - np.exp(-rate * t)).max()
    c.check("undriven", dev0 <= 2e-3, f"{dev0:.1e} <= 2e-3")
    c.finish(capsys)


def test_05_bloch_redfield_vs_lindblad(capsys):
    c = Criterion(5, "Bloch-Redfield vs Lindblad", budget=5.0)
    gamma = 0.3
    H = np.pi * sigmaz()
    psi0 = (basis(2, 0) + 0.5 * basis(2, 1)).unit()
    t = np.linspace(0, 10, 201)
    br = brmesolve(H, psi0, t, [sigmax()], [sigmaz()], [lambda w: gamma / TWO_PI * (w > 0)]).expect[0]
    me = mesolve(H, psi0, t, [np.sqrt(gamma) * sigmam()], [sigmaz()]).expect[0]
    dev = np.abs(br - me).max()
    c.check("<sz>", dev <= 1e-4, f"{dev:.1e} <= 1e-4")
    c.finish(capsys)


def test_06_monte_carlo(capsys):
    c = Criterion(6, "Monte-Carlo convergence", budget=30.0)
    ntraj = 2000
    t = np.linspace(0, 5, 51)
    pe = mcsolve(0 * sigmaz(), basis(2, 0), t, [sigmam()], [ket2dm(basis(2, 0))],
                 ntraj=ntraj, seed=20121015).expect[0]
    p = np.exp(-t)
    se = np.sqrt(p * (1 - p) / ntraj)
    inside = np.abs(pe - p) <= 4 * se + 1e-12
    worst = np.max(np.abs(pe - p)[1:] / se[1:])
    c.check("binomial", inside.all(), f"worst {worst:.2f} standard errors <= 4")
    H = rand_herm(3, seed=4)
    psi = (basis(3, 0) + basis(3, 2)).unit()
    ops = [num(3), rand_herm(3, seed=6)]
    mc = mcsolve(H, psi, t, [], ops, ntraj=10, seed=1).expect
    me = mesolve(H, psi, t, [], ops).expect
    dev = max(np.abs(a - b).max() for a, b in zip(mc, me))
    c.check("no collapse", dev <= 1e-6, f"{dev:.1e} <= 1e-6")
    c.finish(capsys)


def test_07_steady_state(capsys):
    c = Criterion(7, "thermal steady state")
    n_th = 0.75
    c_ops = [np.sqrt(1 + n_th) * sigmam(), np.sqrt(n_th) * sigmap()]
    rho = steadystate(sigmaz(), c_ops)
    err = abs(rho.full()[0, 0].real - 0.3)
    c.check("population", err <= 1e-8, f"|p - 0.3| {err:.1e} <= 1e-8")
    resid = np.linalg.norm(liouvillian(sigmaz(), c_ops).full() @ rho.full().reshape(-1, order="F"))
    c.check("residual", resid <= 1e-10, f"{resid:.1e} <= 1e-10")
    c.finish(capsys)


def test_08_process_tomography(capsys):
    c = Criterion(8, "process tomography", budget=30.0)
    U_diss, U_ideal, op_basis, labels = iswap_processes()
    eye = tensor(qeye(2), qeye(2))
    chi_id = qpt(spre(eye) * spost(eye), op_basis, labels).chi
    nonzero = np.abs(chi_id) > 1e-10
    c.check("identity", nonzero.sum() == 1 and abs(chi_id[0, 0] - 1) <= 1e-10,
            f"{nonzero.sum()} nonzero entry, chi_00 = {chi_id[0, 0].real:.12f}")
    s = np.linalg.svd(qpt(U_ideal, op_basis, labels).chi, compute_uv=False)
    c.check("iSWAP rank", s[1] <= 1e-8 * s[0], f"s2/s1 {s[1] / s[0]:.1e} <= 1e-8")
    chi = qpt(U_diss, op_basis, labels)
    herm = np.abs(chi.chi - chi.chi.conj().T).max()
    c.check("Hermitian", herm <= 1e-10, f"{herm:.1e} <= 1e-10")
    back = np.abs(chi_to_superoperator(chi, op_basis).full() - U_diss.full()).max()
    c.check("round trip", back <= 1e-8, f"{back:.1e} <= 1e-8")
    c.finish(capsys)


def test_09_wigner(capsys):
    c = Criterion(9, "Wigner function", budget=20.0)
    W0 = wigner(basis(10, 0), [0.0], [0.0])[0, 0]
    oracle = displaced_parity_wigner(basis(10, 0), 0.0, 0.0)
    c.check("vacuum", abs(W0 - 1 / np.pi) <= 1e-6 and abs(W0 - oracle) <= 1e-6,
            f"W(0,0) {W0:.9f}, oracle {oracle:.9f}, 1/pi {1 / np.pi:.9f}")
    # the random admixture reaches Fock level 19, radius ~6.2, so the grid must cover +-8
    xvec = np.linspace(-8, 8, 500)
    W = wigner(cat_state(), xvec, xvec)
    dx = xvec[1] - xvec[0]
    total = W.sum() * dx * dx
    c.check("normalization", abs(total - 1) <= 1e-3, f"{total:.6f} = 1 +- 1e-3")
    c.check("negativity", W.min() < 0, f"min {W.min():.4f} < 0")
    c.finish(capsys)


def test_10_measures(capsys):
    c = Criterion(10, "entanglement and entropy measures")
    bell = (tensor(basis(2, 0), basis(2, 0)) + tensor(basis(2, 1), basis(2, 1))).unit()
    rho = ket2dm(bell)
    C = concurrence(rho)
    c.check("Bell concurrence", abs(C - 1) <= 1e-10, f"{C:.12f}")
    mi = entropy_mutual(rho, 0, 1)
    c.check("mutual information", abs(mi - 2 * np.log(2)) <= 1e-9, f"{mi:.12f} vs 2 ln 2")
    ce = entropy_conditional(rho, 1)
    c.check("conditional entropy", abs(ce + np.log(2)) <= 1e-9, f"{ce:.12f} vs -ln 2")
    p = 0.8
    werner = p * rho + (1 - p) / 4 * tensor(qeye(2), qeye(2))
    Cw = concurrence(werner)
    c.check("Werner", abs(Cw - 0.7) <= 1e-9, f"{Cw:.12f} vs 0.7")
    c.finish(capsys)


def test_11_persistence(capsys, tmp_path):
    c = Criterion(11, "persistence")
    rng = np.random.default_rng(11)
    M = rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
    file_data_store(tmp_path / "m.dat", M, precision=12)
    err = np.abs(file_data_read(tmp_path / "m.dat") - M).max()
    c.check("text", err <= 1e-11, f"{err:.1e} <= 1e-11")
    op = QuantumObject(rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
    qsave(tmp_path / "op.qobj", op)
    same = np.array_equal(qload(tmp_path / "op.qobj").full(), op.full())
    c.check("binary", same, "bitwise equal" if same else "values differ")
    codes = [main(["demo", "wigner-cat", "--out", str(tmp_path / d)]) for d in ("a", "b")]
    identical = codes == [0, 0] and (tmp_path / "a" / "wigner.dat").read_bytes() == (
        tmp_path / "b" / "wigner.dat").read_bytes()
    c.check("determinism", identical, "wigner.dat byte-identical" if identical else "outputs differ")
    c.finish(capsys)


def demo_evolutions():
    """Density-matrix trajectories of every demo that evolves states."""
    H, psi0, c_ops, T, _ = two_qubit_gate_system()
    yield "two-qubit-gate", mesolve(H, psi0, np.linspace(0, T, 100), c_ops, []).states
    Hf, args, spectrum, Tf = floquet_markov_system()
    t = np.linspace(0, 25, 250)
    yield "floquet-markov", fmmesolve(Hf, basis(2, 0), t, [sigmax()], [], [spectrum], Tf, args).states
    yield "lindblad-driven", mesolve(Hf, ket2dm(basis(2, 0)), t, [np.sqrt(0.05) * sigmax()], [],
                                     args=args).states
    Hb, psib, cb, ab, spectra, _ = coupled_qubits_system()
    tb = np.linspace(0, 15, 500)
    yield "brme-qubits lindblad", mesolve(Hb, ket2dm(psib), tb, cb, []).states
    yield "brme-qubits redfield", brmesolve(Hb, psib, tb, ab, [], spectra, secular=BRME_SECULAR).states
    U_diss, _, _, _ = iswap_processes()
    out = []
    for seed in range(5):
        r = rand_dm(4, seed=seed).full().reshape(-1, order="F")
        out.append(QuantumObject((U_diss.full() @ r).reshape(4, 4, order="F")))
    yield "qpt-iswap", out


def test_12_property_suites(capsys):
    c = Criterion(12, "property suites")
    worst_tr, worst_eig = 0.0, 0.0
    for _, states in demo_evolutions():
        worst_tr = max(worst_tr, max(abs(s.tr() - 1) for s in states))
        worst_eig = min(worst_eig, min(min_eig(s) for s in states))
    c.check("trace", worst_tr <= 1e-6, f"|tr - 1| {worst_tr:.1e} <= 1e-6")
    c.check("positivity", worst_eig >= -1e-5, f"min eig {worst_eig:.1e} >= -1e-5")
    worst_resid = 0.0
    for n, seed in [(2, 0), (5, 1), (12, 2), (30, 3)]:
        H = rand_herm(n, seed=seed)
        m = H.full()
        vals, kets = eigensolve(H)
        resid = max(np.linalg.norm(m @ k.full().ravel() - v * k.full().ravel()) for v, k in zip(vals, kets))
        worst_resid = max(worst_resid, resid / np.linalg.norm(m, 2))
    c.check("eigensolver", worst_resid <= 1e-9, f"residual/||H|| {worst_resid:.1e} <= 1e-9")
    worst_expm = 0.0
    for n, seed in [(2, 0), (4, 1), (6, 2)]:
        A = rand_herm(n, 0.5, seed=seed) + 0.3j * rand_herm(n, 0.5, seed=seed + 10)
        worst_expm = max(worst_expm, np.abs(expm(A).full() - taylor_expm(A.full())).max())
    c.check("expm", worst_expm <= 1e-9, f"vs Taylor {worst_expm:.1e} <= 1e-9")
    c.finish(capsys)
