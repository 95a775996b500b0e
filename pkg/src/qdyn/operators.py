"""Standard operators, states, random objects and two-qubit gates.

Conventions: ``basis(2, 0) = (1, 0)^T`` is the +1 eigenstate of ``sigmaz``
and ``sigmam() = |1><0|`` lowers it to the -1 eigenstate.

Random objects draw from a Philox counter-based generator. Pass an integer
seed (or a ready ``numpy.random.Generator``); equal seeds give bitwise
identical objects.
"""
from __future__ import annotations

import numbers

import numpy as np
import scipy.sparse as sp

from .errors import StructuralError
from .qobj import QuantumObject, expm, tensor

__all__ = [
    "sigmax", "sigmay", "sigmaz", "sigmam", "sigmap",
    "qeye", "destroy", "create", "num",
    "basis", "coherent", "displace", "thermal_dm",
    "make_rng", "rand_ket", "rand_herm", "rand_dm", "rand_unitary",
    "iswap", "sqrtiswap",
]


def _check_n(N, minimum=1):
    if not isinstance(N, numbers.Integral) or N < minimum:
        raise StructuralError(f"dimension must be an integer >= {minimum}, got {N!r}")
    return int(N)


def sigmax():
    return QuantumObject([[0, 1], [1, 0]])


def sigmay():
    return QuantumObject([[0, -1j], [1j, 0]])


def sigmaz():
    return QuantumObject([[1, 0], [0, -1]])


def sigmam():
    return QuantumObject([[0, 0], [1, 0]])


def sigmap():
    return QuantumObject([[0, 1], [0, 0]])


def qeye(N):
    N = _check_n(N)
    return QuantumObject(sp.identity(N, dtype=np.complex128, format="csr"))


def destroy(N):
    """Annihilation operator, ``a|n> = sqrt(n)|n-1>``."""
    N = _check_n(N)
    return QuantumObject(sp.diags(np.sqrt(np.arange(1, N, dtype=float)), 1, shape=(N, N)))


def create(N):
    return destroy(N).dag()


def num(N):
    N = _check_n(N)
    return QuantumObject(sp.diags(np.arange(N, dtype=float), 0, shape=(N, N)))


def basis(N, n=0):
    N = _check_n(N)
    if not isinstance(n, numbers.Integral) or not 0 <= n < N:
        raise StructuralError(f"basis index {n!r} out of range for dimension {N}")
    vec = sp.csr_array(([1.0 + 0j], ([int(n)], [0])), shape=(N, 1))
    return QuantumObject(vec)


def displace(N, alpha):
    """Displacement operator ``exp(alpha a^dag - alpha^* a)`` on N levels."""
    N = _check_n(N, 2)
    a = destroy(N)
    return expm(alpha * a.dag() - np.conj(alpha) * a)


def coherent(N, alpha):
    """Coherent state as the displaced vacuum, renormalized after truncation."""
    N = _check_n(N)
    if N == 1:
        return basis(1, 0)
    return (displace(N, alpha) * basis(N, 0)).unit()


def thermal_dm(N, n_mean):
    """Thermal (Bose) state with mean occupation ``n_mean`` truncated to N levels."""
    N = _check_n(N)
    if n_mean == 0:
        return basis(N, 0) * basis(N, 0).dag()
    k = np.arange(N)
    p = (n_mean / (1 + n_mean)) ** k
    return QuantumObject(sp.diags(p / p.sum(), 0, shape=(N, N)))


# ---------------------------------------------------------------------------
# random objects


def make_rng(seed=None):
    """Philox-backed generator. ``seed`` may be an int, None or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def _check_density(density):
    if not 0 < density <= 1:
        raise StructuralError(f"density must lie in (0, 1], got {density}")


def _cgauss(rng, size):
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


def _rand_sparse(N, M, density, rng):
    """N x M complex Gaussian matrix with round(density*N*M) nonzeros (at least one)."""
    total = N * M
    count = max(1, int(round(density * total)))
    flat = np.sort(rng.choice(total, size=count, replace=False)) if count < total else np.arange(total)
    rows, cols = np.divmod(flat, M)
    return sp.csr_array((_cgauss(rng, count), (rows, cols)), shape=(N, M))


def rand_ket(N, density=1.0, seed=None):
    """Random unit ket with ``round(density*N)`` nonzero components."""
    N = _check_n(N)
    _check_density(density)
    rng = make_rng(seed)
    return QuantumObject(_rand_sparse(N, 1, density, rng)).unit()


def rand_herm(N, density=1.0, seed=None):
    """Random Hermitian operator, exactly equal to its adjoint.

    Off-diagonal entries are placed in symmetric pairs, so the nonzero count
    matches ``round(density*N**2)`` to within one entry.
    """
    N = _check_n(N)
    _check_density(density)
    rng = make_rng(seed)
    target = max(1, int(round(density * N * N)))
    n_off_slots = N * (N - 1) // 2
    k_off = min(target // 2, n_off_slots)
    k_diag = min(target - 2 * k_off, N)
    iu = np.triu_indices(N, 1)
    pick_off = np.sort(rng.choice(n_off_slots, size=k_off, replace=False)) if k_off else np.array([], int)
    pick_diag = np.sort(rng.choice(N, size=k_diag, replace=False)) if k_diag else np.array([], int)
    off_vals = _cgauss(rng, k_off)
    diag_vals = rng.standard_normal(k_diag) * np.sqrt(2.0)
    r, c = iu[0][pick_off], iu[1][pick_off]
    rows = np.concatenate([r, c, pick_diag])
    cols = np.concatenate([c, r, pick_diag])
    vals = np.concatenate([off_vals, off_vals.conj(), diag_vals.astype(complex)])
    return QuantumObject(sp.csr_array((vals, (rows, cols)), shape=(N, N)))


def rand_dm(N, density=1.0, seed=None):
    """Random density matrix ``A A^dag / Tr(A A^dag)``; positive by construction."""
    N = _check_n(N)
    _check_density(density)
    rng = make_rng(seed)
    A = _rand_sparse(N, N, density, rng)
    rho = (A @ A.conj().T).toarray()
    rho = 0.5 * (rho + rho.conj().T)
    return QuantumObject(rho / np.trace(rho).real)


def rand_unitary(N, density=1.0, seed=None):
    """Random unitary ``exp(i H)`` with H from :func:`rand_herm`."""
    return expm(1j * rand_herm(N, density, seed))


# ---------------------------------------------------------------------------
# gates


def _xx_yy():
    return tensor(sigmax(), sigmax()) + tensor(sigmay(), sigmay())


def iswap():
    """iSWAP = exp(i pi/4 (XX + YY)); maps |01> to i|10>."""
    return expm(1j * np.pi / 4 * _xx_yy())


def sqrtiswap():
    return expm(1j * np.pi / 8 * _xx_yy())
