"""Least-norm null control by direct discretisation.

The trapezoid simulator is linear and shift-invariant in the control, so the
map from control samples to the sampled terminal segment is a Toeplitz
matrix built from a single impulse response. The minimum of the
trapezoid-weighted norm subject to ``L u = -b`` is found from a pivoted QR
factorisation of the weighted ``L^H``.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np
import scipy.linalg

from ._grid import fmt, trapezoid_weights
from .control import ControlSignal, Horizon, synthesize_control
from .exceptions import DegenerateError
from .simulate import simulate
from .state import MState
from .summation import DEFAULT_SCHEDULE


def oracle_grid(T, N):
    """Smallest even number of steps per unit with ``>= N`` nodes on ``[0, T]``
    and ``T`` on a node."""
    m = max(2, math.ceil((N - 1) / T))
    m += m % 2
    for _ in range(100000):
        k = m * T
        if abs(k - round(k)) <= 1e-9 * k:
            return m
        m += 2
    raise ValueError(f"no grid puts T = {T} on a node")


def terminal_map(kernel, T, steps):
    """Matrix from control samples on ``[0, T]`` to ``x`` at the nodes of ``[T-1, T]``.

    Real when the kernel is real.
    """
    K = int(round(T * steps))
    pulse = np.zeros(K + 1)
    pulse[0] = 1.0
    traj = simulate(MState.zero(steps), ControlSignal(pulse, T, steps), kernel, T, steps)
    # response to a pulse h/2 in the first step, by node index 0..K
    r = traj.values.copy()
    if kernel.is_real:
        r = r.real
    r_ext = np.concatenate([r, [0.0]])
    rows = np.arange(K - steps, K + 1)
    cols = np.arange(K + 1)
    diff = rows[:, None] - cols[None, :]

    def R(i):
        out = np.zeros(i.shape, dtype=r_ext.dtype)
        ok = i >= 0
        out[ok] = r_ext[i[ok]]
        return out

    L = R(diff) + R(diff + 1)
    L[:, 0] = R(diff[:, 0])
    L[:, K] = R(diff[:, K] + 1)
    return L, rows


def least_norm_control(x0, kernel, T, N=2000, *, rcond=None):
    """Minimum ``L^2(0, T)``-norm control with vanishing terminal segment.

    Parameters
    ----------
    x0 : MState
    kernel : DelayKernel
    T : float
        Horizon, ``T > 1``.
    N : int
        Minimum number of control samples on ``[0, T]``; the grid is the
        smallest even number of steps per unit that reaches ``N`` and puts
        ``T`` on a node.
    """
    if not T > 1:
        raise ValueError("the horizon must exceed the delay (T > 1)")
    steps = oracle_grid(T, N)
    K = int(round(T * steps))
    if x0.head == 0 and not np.any(x0.tail):
        return ControlSignal(np.zeros(K + 1), T, steps)
    L, rows = terminal_map(kernel, T, steps)
    b = simulate(x0, None, kernel, T, steps).values[rows]
    w = trapezoid_weights(K, 1.0 / steps)
    A = L / np.sqrt(w)[None, :]
    Q, R, piv = scipy.linalg.qr(A.conj().T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = (rcond if rcond is not None else max(A.shape) * np.finfo(float).eps) * diag[0]
    rank = int(np.sum(diag > tol))
    if rank < A.shape[0]:
        raise DegenerateError(
            f"terminal map degenerate: rank {rank} of {A.shape[0]} constraints", rank)
    rhs = -b[piv]
    if np.isrealobj(A):
        rhs = np.stack([rhs.real, rhs.imag], axis=1)
    z = scipy.linalg.solve_triangular(R, rhs, trans="C", lower=False)
    y = Q @ z
    if y.ndim == 2:
        y = y[:, 0] + 1j * y[:, 1]
    return ControlSignal(y / np.sqrt(w), T, steps)


REPORT_HEADER = ["n", "norm_spectral", "norm_oracle", "gap_l2"]


def gap_weights(T, steps):
    """Trapezoid weights on ``[0, T]`` with the node ``t = T - 1`` dropped.

    Spectral controls jump at ``T - 1``; a sample there carries the mean of
    the one-sided limits while the discrete oracle settles on one side. The
    value of an ``L^2`` function at a single point is immaterial, so that node
    is left out of the comparison (an ``O(h)`` change of the quadrature).
    """
    K = int(round(T * steps))
    w = trapezoid_weights(K, 1.0 / steps)
    j = int(round((T - 1) * steps))
    if abs((T - 1) * steps - j) <= 1e-9 * K:
        w[j] = 0.0
    return w


def norm_gap_report(x0, kernel, T, N, n_list, spectrum, schedule=DEFAULT_SCHEDULE,
                    oracle=None):
    """Rows ``(n, ||u_n||, ||u_oracle||, ||u_n - u_oracle||)`` for each order in ``n_list``.

    The spectral control is synthesised on the oracle grid. Norms are
    trapezoid ``L^2(0, T)`` norms; the gap skips the jump node (see
    :func:`gap_weights`).
    """
    horizon = Horizon(T)
    if oracle is None:
        oracle = least_norm_control(x0, kernel, T, N)
    w = gap_weights(T, oracle.grid)
    norm_o = oracle.l2_norm()
    rows = []
    for n in n_list:
        u = synthesize_control(x0, n, spectrum, schedule, horizon, oracle.grid)
        gap = float(np.sqrt(np.sum(w * np.abs(u.samples - oracle.samples) ** 2)))
        rows.append((int(n), u.l2_norm(), norm_o, gap))
    return rows


def report_csv(rows, dest=None):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(REPORT_HEADER)
    for n, a, b, c in rows:
        wr.writerow([n, fmt(a), fmt(b), fmt(c)])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text
