"""Adaptive Dormand-Prince 5(4) integrator with dense output.

The stepper never lands on sample times on purpose: samples are read from
the 4th-order continuous extension of each accepted step. Only the final
time of an integration clips the last step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverConvergenceError, StructuralError

__all__ = ["IntegratorOptions", "DormandPrince", "integrate"]

# Butcher tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# 5th-order solution minus embedded 4th-order solution
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
# continuous extension
D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0
BETA = 0.04
EXPO = 0.2 - BETA * 0.75


@dataclass
class IntegratorOptions:
    """Tolerances and step limits for :func:`integrate`."""

    rtol: float = 1e-6
    atol: float = 1e-8
    max_step: float | None = None
    max_steps: int = 500_000
    first_step: float | None = None

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise StructuralError("rtol and atol must be positive")
        if self.max_steps < 1:
            raise StructuralError("max_steps must be >= 1")
        if self.max_step is not None and self.max_step <= 0:
            raise StructuralError("max_step must be positive")


def _as_options(opts):
    if opts is None:
        return IntegratorOptions()
    if isinstance(opts, dict):
        return IntegratorOptions(**opts)
    return opts


class DormandPrince:
    """Single-trajectory stepper.

    After each successful :meth:`step`, ``t_old``/``t`` bracket the step and
    :meth:`dense` evaluates the interpolant anywhere inside it.
    """

    def __init__(self, rhs, t0, y0, t_bound, opts=None):
        self.rhs = rhs
        self.opts = _as_options(opts)
        self.t = float(t0)
        self.y = np.array(y0, dtype=np.complex128)
        self.t_bound = float(t_bound)
        self.t_old = self.t
        self.y_old = self.y
        self.nsteps = 0
        self.nfev = 0
        self._k1 = self._f(self.t, self.y)
        self._facold = 1e-4
        self._rejected = False
        self._cont = None
        self.h = self.opts.first_step or self._initial_step()

    def _f(self, t, y):
        self.nfev += 1
        return np.asarray(self.rhs(t, y), dtype=np.complex128)

    def _scale(self, a, b=None):
        ya = np.abs(a) if b is None else np.maximum(np.abs(a), np.abs(b))
        return self.opts.atol + self.opts.rtol * ya

    def _initial_step(self):
        span = self.t_bound - self.t
        if span <= 0:
            return 0.0
        sk = self._scale(self.y)
        d0 = np.max(np.abs(self.y) / sk)
        d1 = np.max(np.abs(self._k1) / sk)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, span)
        y1 = self.y + h0 * self._k1
        d2 = np.max(np.abs(self._f(self.t + h0, y1) - self._k1) / sk) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        h = min(100 * h0, h1, span)
        if self.opts.max_step is not None:
            h = min(h, self.opts.max_step)
        return h

    def step(self):
        """Take one accepted step toward ``t_bound``; returns the new time."""
        opts = self.opts
        t, y, k1 = self.t, self.y, self._k1
        h = self.h
        while True:
            if self.nsteps >= opts.max_steps:
                raise SolverConvergenceError(
                    f"step budget of {opts.max_steps} exhausted at t={t:.6g}; "
                    "raise max_steps or loosen rtol/atol",
                    t,
                )
            if opts.max_step is not None:
                h = min(h, opts.max_step)
            span = self.t_bound - t
            last = h >= span
            if last:
                h = span
            if h <= 10 * np.finfo(float).eps * max(abs(t), 1.0):
                raise SolverConvergenceError(
                    f"step size underflow at t={t:.6g}; the problem may be stiff, "
                    "loosen rtol/atol or shorten the time span",
                    t,
                )
            self.nsteps += 1
            f = self._f
            k2 = f(t + C2 * h, y + h * (A21 * k1))
            k3 = f(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
            k4 = f(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = f(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            k6 = f(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            y1 = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
            t1 = self.t_bound if last else t + h
            k7 = f(t1, y1)
            errv = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            err = float(np.max(np.abs(errv) / self._scale(y, y1))) if y.size else 0.0
            if not np.isfinite(err):
                self._rejected = True
                h *= FAC_MIN
                continue
            fac11 = err ** EXPO
            if err <= 1.0:
                fac = fac11 / self._facold ** BETA
                fac = max(1 / FAC_MAX, min(1 / FAC_MIN, fac / SAFETY))
                hnew = h / fac
                if self._rejected:
                    hnew = min(hnew, h)
                self._facold = max(err, 1e-4)
                self._rejected = False
                ydiff = y1 - y
                bspl = h * k1 - ydiff
                self._cont = (
                    y,
                    ydiff,
                    bspl,
                    ydiff - h * k7 - bspl,
                    h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
                )
                self.t_old, self.y_old = t, y
                self.t, self.y, self._k1 = t1, y1, k7
                self.h = hnew
                return t1
            self._rejected = True
            h = h / min(1 / FAC_MIN, fac11 / SAFETY)

    def dense(self, t):
        """Interpolated state at ``t`` within the last accepted step."""
        if t == self.t:
            return self.y.copy()
        if t == self.t_old:
            return self.y_old.copy()
        r1, r2, r3, r4, r5 = self._cont
        h = self.t - self.t_old
        th = (t - self.t_old) / h
        th1 = 1.0 - th
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))

    def reset(self, t, y):
        """Restart from a new state (e.g. after a quantum jump)."""
        self.t = self.t_old = float(t)
        self.y = self.y_old = np.array(y, dtype=np.complex128)
        self._k1 = self._f(self.t, self.y)
        self._facold = 1e-4
        self._rejected = False
        self._cont = None
        h = self.h
        self.h = self._initial_step() if h <= 0 else min(h, max(self.t_bound - self.t, 0.0))
        if self.h <= 0:
            self.h = self._initial_step()


def integrate(rhs, y0, tlist, opts=None, observer=None):
    """Integrate ``dy/dt = rhs(t, y)`` and sample at ``tlist``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> dy/dt`` on complex vectors.
    y0 : array_like
        Initial state at ``tlist[0]``.
    tlist : array_like
        Ascending sample times; the first is the initial time.
    opts : IntegratorOptions or dict, optional
    observer : callable, optional
        Called as ``observer(index, t, y)`` for each sample in order.

    Returns
    -------
    list of ndarray
        States at each sample time. ``result[0]`` is ``y0`` bitwise.
    """
    tlist = np.asarray(tlist, dtype=float)
    if tlist.ndim != 1 or tlist.size == 0:
        raise StructuralError("tlist must be a nonempty 1-D sequence")
    if np.any(np.diff(tlist) < 0):
        raise StructuralError("tlist must be ascending")
    y0 = np.array(y0, dtype=np.complex128)
    out = [y0.copy()]
    if observer is not None:
        observer(0, tlist[0], out[0])
    if tlist.size == 1 or tlist[-1] == tlist[0]:
        for i in range(1, tlist.size):
            out.append(y0.copy())
            if observer is not None:
                observer(i, tlist[i], out[-1])
        return out
    stepper = DormandPrince(rhs, tlist[0], y0, tlist[-1], opts)
    i = 1
    n = tlist.size
    while i < n:
        while i < n and tlist[i] == tlist[0]:
            out.append(y0.copy())
            if observer is not None:
                observer(i, tlist[i], out[-1])
            i += 1
        if i >= n:
            break
        stepper.step()
        while i < n and tlist[i] <= stepper.t:
            yi = stepper.dense(tlist[i])
            out.append(yi)
            if observer is not None:
                observer(i, tlist[i], yi)
            i += 1
    return out
