"""Quick invariant checks run by ``qdyn selftest``."""
from __future__ import annotations

import math
import os
import tempfile

import numpy as np
from scipy.linalg import expm as dense_expm

from .analysis import chi_to_superoperator, qpt
from .fileio import file_data_read, file_data_store, qload, qsave
from .operators import rand_dm, rand_herm, sigmam, sigmap, sigmax, sigmay, sigmaz, qeye
from .qobj import eigensolve, expm
from .superop import liouvillian, propagator, steadystate


def _taylor_expm(m, terms=60):
    out = np.eye(m.shape[0], dtype=complex)
    term = np.eye(m.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ m / k
        out = out + term
    return out


def check_trace_and_positivity():
    H = rand_herm(4, seed=11)
    c_ops = [0.4 * rand_herm(4, seed=12), 0.3 * (rand_herm(4, seed=13) + 1j * rand_herm(4, seed=14))]
    L = liouvillian(H, c_ops).full()
    rho = rand_dm(4, seed=15).full().reshape(-1, order="F")
    worst_tr, worst_eig = 0.0, 0.0
    for t in (0.5, 2.0, 10.0):
        r = (dense_expm(L * t) @ rho).reshape(4, 4, order="F")
        worst_tr = max(worst_tr, abs(np.trace(r) - 1))
        worst_eig = min(worst_eig, np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min())
    return worst_tr <= 1e-8 and worst_eig >= -1e-6, f"trace err {worst_tr:.1e}, min eig {worst_eig:.1e}"


def check_expm_taylor():
    worst = 0.0
    for seed in range(5):
        A = 0.5 * rand_herm(5, seed=seed)
        M = (1j * A).full()
        worst = max(worst, np.abs(expm(1j * A).full() - _taylor_expm(M)).max())
    return worst <= 1e-9, f"max deviation {worst:.1e}"


def check_eigensolver():
    H = rand_herm(12, seed=3)
    vals, kets = eigensolve(H)
    m = H.full()
    resid = max(np.linalg.norm(m @ k.full().ravel() - v * k.full().ravel()) for v, k in zip(vals, kets))
    scale = np.linalg.norm(m, 2)
    return resid <= 1e-9 * scale, f"residual {resid:.1e}"


def check_steadystate():
    n_th = 0.75
    rho = steadystate(0 * sigmaz(), [math.sqrt(1 + n_th) * sigmam(), math.sqrt(n_th) * sigmap()])
    pe = rho.full()[0, 0].real
    return abs(pe - 0.3) <= 1e-8, f"excited population {pe:.12f}"


def check_qpt_roundtrip():
    op_basis = [[qeye(2), sigmax(), sigmay(), sigmaz()]]
    U = propagator(rand_herm(2, seed=5), 0.7, [0.3 * sigmam()])
    chi = qpt(U, op_basis)
    err = np.abs(chi_to_superoperator(chi, op_basis).full() - U.full()).max()
    return err <= 1e-8, f"reconstruction error {err:.1e}"


def check_io_roundtrip():
    rng = np.random.default_rng(0)
    data = rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
    obj = rand_herm(6, 0.5, seed=2)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "m.dat")
        file_data_store(path, data)
        text_err = np.abs(file_data_read(path) - data).max()
        bpath = os.path.join(d, "o.qobj")
        qsave(bpath, obj)
        same = np.array_equal(qload(bpath).full(), obj.full())
    return text_err <= 1e-11 and same, f"text error {text_err:.1e}, binary equal {same}"


CHECKS = [
    ("Lindblad trace and positivity", check_trace_and_positivity),
    ("expm against Taylor series", check_expm_taylor),
    ("eigensolver residuals", check_eigensolver),
    ("thermal steady state", check_steadystate),
    ("process tomography round trip", check_qpt_roundtrip),
    ("text and binary round trip", check_io_roundtrip),
]


def run(stream=None):
    """Run every check, print one line each, return True when all pass."""
    ok = True
    for name, fn in CHECKS:
        try:
            passed, detail = fn()
        except Exception as exc:  # report and keep going
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}", file=stream)
    return ok
