"""Method-of-steps simulation of

    x'(t) = x(t-1) + int_{-1}^0 x(t+s) phi(s) ds + u(t),
    x(0) = xi,  x(t) = x0(t) on (-1, 0).

Time is discretised with ``m`` steps per unit, so the delay ``t - 1`` always
lands on a node. Each step is the trapezoid rule on the right-hand side.
The delayed term only reads history; the distributed term involves the new
value through the ``s = 0`` node alone, which makes the update an explicit
division by a scalar.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._grid import fmt, resample, simpson_weights, steps_for, trapezoid_weights
from .state import MState

DEFAULT_STEPS = 2048


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of ``x`` on ``[-1, t_end]`` with ``steps`` nodes per unit time.

    ``history`` holds the initial segment on ``[-1, 0]`` (its last entry is
    the left limit ``x0(0-)``) and ``values`` holds ``x`` on ``[0, t_end]``
    starting with ``x(0) = xi``.
    """

    history: np.ndarray
    values: np.ndarray
    steps: int

    @property
    def grid_step(self):
        return 1.0 / self.steps

    @property
    def t_end(self):
        return (self.values.size - 1) / self.steps

    @property
    def times(self):
        return np.arange(-self.steps, self.values.size) / self.steps

    @property
    def samples(self):
        """All samples on ``[-1, t_end]``; the node ``t = 0`` carries ``x(0)``."""
        return np.concatenate([self.history[:-1], self.values])

    def index(self, t):
        """Node index of time ``t`` within :attr:`samples`."""
        k = steps_for(t, self.steps, "time")
        if not -self.steps <= k <= self.values.size - 1:
            raise ValueError(f"time {t} outside the trajectory range [-1, {self.t_end:g}]")
        return k + self.steps

    def at(self, t):
        return complex(self.samples[self.index(t)])

    def segment(self, a, b):
        """Times and samples on ``[a, b]`` (both grid nodes)."""
        i, j = self.index(a), self.index(b)
        return self.times[i:j + 1], self.samples[i:j + 1]

    def to_csv(self, dest=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "re_x", "im_x"])
        for t, x in zip(self.times, self.samples):
            w.writerow([fmt(t), fmt(x.real), fmt(x.imag)])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text


def _control_steps(u, steps, n):
    """Left/right values of ``u`` on each of the ``n`` steps (zero after ``u.T``)."""
    ul = np.zeros(n, dtype=complex)
    ur = np.zeros(n, dtype=complex)
    if u is None:
        return ul, ur
    k_u = steps_for(u.T, steps, "control horizon")
    vals = u.samples if u.grid == steps else resample(
        u.samples, steps_for(u.T, u.grid, "control horizon"), k_u, span=u.T,
        what="control samples")
    k = min(k_u, n)
    ul[:k] = vals[:k]
    ur[:k] = vals[1:k + 1]
    return ul, ur


def simulate(x0, u, kernel, t_end, steps=DEFAULT_STEPS):
    """Trajectory from initial state ``x0`` under control ``u`` (or ``None``).

    Parameters
    ----------
    x0 : MState
        Initial state; its tail is resampled to the simulation grid if the
        panel counts differ (a warning is emitted unless the grid is a
        refinement by subsampling).
    u : ControlSignal or None
        Control on ``[0, u.T]``, taken as zero afterwards.
    kernel : DelayKernel
    t_end : float
        Final time; must be a multiple of ``1/steps``.
    steps : int
        Steps per unit time.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps per unit must be positive")
    n = steps_for(t_end, steps, "final time")
    if n < 0:
        raise ValueError("final time must be non-negative")
    h = 1.0 / steps
    hist = resample(x0.tail, x0.panels, steps, what="initial tail")
    hist = np.asarray(hist, dtype=complex)
    ul, ur = _control_steps(u, steps, n)
    x = np.empty(n + 1, dtype=complex)
    x[0] = x0.head

    # delayed value at the left (dl) and right (dr) end of step k
    def delayed(k):
        dl = hist[k] if k < steps else x[k - steps]
        dr = hist[k + 1] if k + 1 <= steps else x[k + 1 - steps]
        return dl, dr

    if kernel.is_zero:
        k = 0
        while k < n:
            stop = min(n, k + steps - (k % steps))
            ks = np.arange(k, stop)
            if k < steps:
                dl, dr = hist[ks], hist[ks + 1]
            else:
                dl, dr = x[ks - steps], x[ks + 1 - steps]
            inc = 0.5 * h * (dl + dr + ul[ks] + ur[ks])
            x[k + 1:stop + 1] = x[k] + np.cumsum(inc)
            k = stop
        return Trajectory(hist, x, steps)

    phi = np.asarray(kernel.on_grid(steps), dtype=complex)
    wts = trapezoid_weights(steps, h) * phi          # nodes s = -1 .. 0
    w_new = wts[-1]
    # buffer: index i <-> time -1 + i h; node i = steps holds x(0) = xi
    buf = np.concatenate([hist[:-1], x[:1], np.zeros(n, dtype=complex)])
    jump = 0.5 * (hist[-1] + x0.head)

    def window(k):
        seg = buf[k:k + steps + 1].copy()
        j = steps - k
        if 0 < j < steps:
            seg[j] = jump                      # one-sided limits differ at t = 0
        return seg

    i_left = window(0) @ wts
    for k in range(n):
        dl, dr = delayed(k)
        partial = window(k + 1)[:-1] @ wts[:-1]
        rhs = x[k] + 0.5 * h * (dl + i_left + dr + partial + ul[k] + ur[k])
        x[k + 1] = rhs / (1.0 - 0.5 * h * w_new)
        buf[steps + k + 1] = x[k + 1]
        i_left = partial + w_new * x[k + 1]
    return Trajectory(hist, x, steps)


def semigroup_apply(x0, t, kernel, min_steps=DEFAULT_STEPS):
    """Free evolution ``(x(t), x(t + .))`` packaged on the grid of ``x0``.

    The simulation uses ``m = x0.panels * j`` steps per unit with the smallest
    ``j`` for which ``m >= min_steps`` and ``t`` is a grid node, so the result
    is read back by exact subsampling.
    """
    if t < 0:
        raise ValueError("semigroup time must be non-negative")
    if t == 0:
        return MState(x0.head, x0.tail.copy())
    p = x0.panels
    for j in range(max(1, math.ceil(min_steps / p)), 64 * max(1, math.ceil(min_steps / p)) + 1):
        m = p * j
        k = t * m
        if abs(k - round(k)) <= 1e-9 * max(1.0, k):
            break
    else:
        raise ValueError(f"time {t} is not commensurate with the grid of the state")
    traj = simulate(x0, None, kernel, t, steps=m)
    _, seg = traj.segment(t - 1, t)
    tail = seg[::j].copy()
    return MState(traj.values[-1], tail)


def terminal_segment_norm(traj, T):
    """M-norm of the terminal state: ``sqrt(|x(T)|^2 + int_{T-1}^T |x|^2)``."""
    if T - 1 < -1 - 1e-12 or T > traj.t_end + 1e-12:
        raise ValueError(f"trajectory on [-1, {traj.t_end:g}] does not cover [{T - 1:g}, {T:g}]")
    _, seg = traj.segment(T - 1, T)
    m = traj.steps
    w = simpson_weights(m, 1.0 / m) if m % 2 == 0 else trapezoid_weights(m, 1.0 / m)
    return float(np.sqrt(abs(seg[-1]) ** 2 + np.sum(w * np.abs(seg) ** 2)))
