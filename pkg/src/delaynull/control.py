"""Biorthogonal controls for ``x'(t) = x(t-1) + u(t)`` on horizons ``1 < T < 2``.

For each zero ``lam`` of ``D(z) = -iz + exp(-iz)`` a generator ``p`` on
``(0, delta)``, ``delta = T - 1``, of the form ``A sinh t + B cosh t``
defines

    f_lam(t) = -i a_lam [p(t - 1) + int_{t-1}^t exp(-i lam (t - u)) p(u) du],

with ``a_lam = 1/(exp(i lam) D'(lam))`` and ``p`` extended by zero. ``f_lam``
satisfies ``int_0^T exp(i mu t) f_lam(t) dt = delta_{lam mu}`` for every zero
``mu`` and is orthogonal to the annihilator of the exponential family, so
``v_lam = conj(f_lam)`` is the minimal-norm biorthogonal element. The control
that steers ``e_lam`` to zero at time ``T`` is the time reversal

    u_lam(t) = kappa_lam f_lam(T - t),   kappa_lam = -exp(i lam T)/xi_bar_lam,

fixed by ``int_0^T u_lam(s) exp(-i mu s) ds = -delta_{lam mu}/xi_bar_lam``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._grid import fmt, steps_for, trapezoid_weights
from .exceptions import ControlValidationError, DegenerateError
from .spectral import EigenRecord
from .summation import DEFAULT_SCHEDULE, weighted_terms

# u_lam(t) = kappa * conj(v_lam(T - t)); the alternative reading of the
# reversal, u_lam(t) = c * v_lam(T - t), is kept only as a diagnostic.
CONVENTION = "conjugate"
NULL_TOL = 1e-4


@dataclass(frozen=True)
class Horizon:
    """Control horizon ``T`` with ``1 < T < 2``; ``delta = T - 1``."""

    T: float

    def __post_init__(self):
        T = float(self.T)
        if not 1.0 < T < 2.0:
            raise ValueError(f"only horizons 1 < T < 2 are supported, got T = {T}")
        object.__setattr__(self, "T", T)

    @property
    def delta(self):
        return self.T - 1.0


@dataclass(frozen=True)
class BiorthControl:
    """Generator ``p(t) = A sinh t + B cosh t`` on ``(0, delta)`` for one zero."""

    lam: complex
    A: complex
    B: complex
    a_lambda: complex
    horizon: Horizon

    @property
    def kappa(self):
        """Scale turning the reversed generator into the control for ``e_lam``."""
        # 1/xi_bar = i D'(lam) = i (lam - i) in the model case
        return -np.exp(1j * self.lam * self.horizon.T) * (1 + 1j * self.lam)

    def p(self, t):
        """Generator extended by zero outside ``[0, delta]``."""
        t = np.asarray(t, dtype=float)
        inside = (t >= 0) & (t <= self.horizon.delta)
        val = self.A * np.sinh(t) + self.B * np.cosh(t)
        return np.where(inside, val, 0.0)

    def dp(self, t):
        t = np.asarray(t, dtype=float)
        return self.A * np.cosh(t) + self.B * np.sinh(t)

    def conv(self, t):
        """``int_{max(t-1,0)}^{min(t,delta)} exp(-i lam (t-u)) p(u) du`` in closed form."""
        t = np.asarray(t, dtype=float)
        d, lam = self.horizon.delta, self.lam
        lo = np.clip(t - 1.0, 0.0, d)
        hi = np.clip(t, 0.0, d)
        cp, cm = 0.5 * (self.A + self.B), 0.5 * (self.B - self.A)

        def g(u, s):
            return np.exp(1j * lam * (u - t) + s * u) / (1j * lam + s)

        return cp * (g(hi, 1) - g(lo, 1)) + cm * (g(hi, -1) - g(lo, -1))

    def f(self, t):
        """``conj(v_lam(t))``; the jump at ``t = 1`` takes the mean of both sides."""
        t = np.asarray(t, dtype=float)
        s = t - 1.0
        d = self.horizon.delta
        shifted = np.where((s > 0) & (s <= d), self.A * np.sinh(s) + self.B * np.cosh(s), 0.0)
        shifted = np.where(s == 0, 0.5 * self.B, shifted)
        return -1j * self.a_lambda * (shifted + self.conv(t))


def _model_record(lam):
    if isinstance(lam, EigenRecord):
        return lam
    lam = complex(lam)
    return EigenRecord(lam, lam - 1j, 0)


def solve_p_lambda(lam, horizon, kernel=None):
    """Generator coefficients for the zero ``lam`` of the model equation.

    ``p`` solves ``p'' = p`` on ``(0, delta)`` with ``A = i lam B - lam^2`` (the
    orthogonality condition against the annihilator), and ``B`` is fixed by
    the normalisation ``int_0^delta exp(i lam t) p(t) dt = 1``:

        B = (1 + lam^2 I_s) / (i lam I_s + I_c),

    with ``I_s, I_c`` the integrals of ``exp(i lam t)`` against ``sinh, cosh``.
    """
    if kernel is not None and not kernel.is_zero:
        raise ValueError("biorthogonal controls are only constructed for the zero kernel")
    rec = _model_record(lam)
    lam = rec.lam
    d = horizon.delta
    ep = (np.exp((1j * lam + 1) * d) - 1) / (1j * lam + 1)
    em = (np.exp((1j * lam - 1) * d) - 1) / (1j * lam - 1)
    i_s, i_c = 0.5 * (ep - em), 0.5 * (ep + em)
    denom = 1j * lam * i_s + i_c
    if abs(denom) < 1e-14 * max(1.0, abs(lam) * abs(i_s), abs(i_c)):
        raise DegenerateError(f"degenerate normalization at lam = {lam}")
    B = (1 + lam * lam * i_s) / denom
    A = 1j * lam * B - lam * lam
    a = 1 / (np.exp(1j * lam) * rec.d_prime)
    return BiorthControl(lam, complex(A), complex(B), complex(a), horizon)


def eval_v_lambda(bc, t):
    """``v_lam(t)`` on ``[0, T]``; vectorised."""
    tt = np.asarray(t, dtype=float)
    if np.any((tt < 0) | (tt > bc.horizon.T)) or not np.all(np.isfinite(tt)):
        raise ValueError(f"v_lam is defined on [0, {bc.horizon.T}] only")
    v = np.conj(bc.f(tt))
    return complex(v) if np.ndim(t) == 0 else v


def normalization_residual(bc, panels=2048):
    """``|int_0^delta exp(i lam t) p(t) dt - 1|`` by composite Simpson."""
    from ._grid import simpson_weights

    t = np.linspace(0.0, bc.horizon.delta, panels + 1)
    w = simpson_weights(panels, bc.horizon.delta / panels)
    return abs(np.sum(w * np.exp(1j * bc.lam * t) * bc.p(t)) - 1)


def eq_residual(bc, t):
    """Residual of the orthogonality equation on ``(0, delta)``.

    ``-p' + exp(-i lam)(p * eps)' + (p * eps) - exp(-i lam) eps'`` with
    ``eps(t) = exp(-i lam t)`` and ``(p * eps)(t) = int_0^t eps(t-u) p(u) du``.
    """
    t = np.asarray(t, dtype=float)
    lam = bc.lam
    pe = bc.conv(t)
    dpe = bc.p(t) - 1j * lam * pe
    eps_prime = -1j * lam * np.exp(-1j * lam * t)
    e = np.exp(-1j * lam)
    return -bc.dp(t) + e * dpe + pe - e * eps_prime


def annihilator_element(omega, domega, horizon):
    """``g(t) = omega(t)`` on ``(0, delta)``, ``omega'(t - 1)`` on ``(1, T)``, else 0.

    For ``omega`` with ``omega(0) = omega(delta) = 0`` this function is
    orthogonal to every ``exp(i conj(mu) t)`` with ``D(mu) = 0`` on ``(0, T)``.
    """
    d = horizon.delta

    def g(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        a = (t > 0) & (t < d)
        b = (t > 1) & (t < 1 + d)
        out[a] = omega(t[a])
        out[b] = domega(t[b] - 1)
        return out

    return g


# ---------------------------------------------------------------------------
# control signals


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Samples of ``u`` on ``[0, T]`` at ``grid`` nodes per unit time."""

    samples: np.ndarray
    T: float
    grid: int

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        n = steps_for(self.T, self.grid, "control horizon")
        if s.shape != (n + 1,):
            raise ValueError(f"expected {n + 1} samples on [0, {self.T}], got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("control samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "grid", int(self.grid))

    @classmethod
    def zeros(cls, T, grid):
        return cls(np.zeros(steps_for(T, grid) + 1), T, grid)

    @classmethod
    def from_function(cls, fn, T, grid):
        n = steps_for(T, grid, "control horizon")
        return cls(fn(np.linspace(0.0, T, n + 1)), T, grid)

    @property
    def t(self):
        return np.linspace(0.0, self.T, self.samples.size)

    def _check(self, other):
        if self.grid != other.grid or self.samples.size != other.samples.size:
            raise ValueError("control signals live on different grids")

    def __add__(self, other):
        self._check(other)
        return ControlSignal(self.samples + other.samples, self.T, self.grid)

    def __sub__(self, other):
        self._check(other)
        return ControlSignal(self.samples - other.samples, self.T, self.grid)

    def __neg__(self):
        return ControlSignal(-self.samples, self.T, self.grid)

    def __mul__(self, c):
        return ControlSignal(c * self.samples, self.T, self.grid)

    __rmul__ = __mul__

    def l2_norm(self, part=None):
        """Trapezoid ``L^2(0, T)`` norm of ``u`` (or of its ``"real"``/``"imag"`` part)."""
        s = {None: self.samples, "real": self.samples.real, "imag": self.samples.imag}[part]
        w = trapezoid_weights(self.samples.size - 1, 1.0 / self.grid)
        return float(np.sqrt(np.sum(w * np.abs(s) ** 2)))

    def moment(self, z):
        """Trapezoid ``int_0^T u(s) exp(-i z s) ds``."""
        w = trapezoid_weights(self.samples.size - 1, 1.0 / self.grid)
        return complex(np.sum(w * self.samples * np.exp(-1j * complex(z) * self.t)))

    def to_csv(self, dest=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "re_u", "im_u"])
        for t, u in zip(self.t, self.samples):
            w.writerow([fmt(t), fmt(u.real), fmt(u.imag)])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source):
        text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["t", "re_u", "im_u"]:
            raise ValueError("not a control CSV")
        body = np.array([[float(v) for v in r] for r in rows[1:] if r])
        t = body[:, 0]
        T = float(t[-1])
        grid = int(round((t.size - 1) / T))
        return cls(body[:, 1] + 1j * body[:, 2], T, grid)


def _reversed_generator(bc, grid):
    n = steps_for(bc.horizon.T, grid, "control horizon")
    # exact node times so that s = 1 (the jump of f) is hit exactly
    s = np.arange(n, -1, -1) / grid
    return bc.f(s)


def u_for_eigenvector(lam, horizon, grid, *, validate=False, steps=None, tol=NULL_TOL):
    """Control steering ``e_lam`` to zero at ``T``, sampled ``grid`` nodes per unit.

    With ``validate=True`` the control is checked by simulation: the
    terminal-segment norm of the controlled run from ``e_lam`` must be below
    ``tol`` times that of the free run. On failure the error carries the
    residual ratios of both reversal conventions.
    """
    bc = lam if isinstance(lam, BiorthControl) else solve_p_lambda(lam, horizon)
    u = ControlSignal(bc.kappa * _reversed_generator(bc, grid), horizon.T, grid)
    if validate:
        ratios = null_ratios(bc, grid, steps=steps)
        if not ratios[CONVENTION] < tol:
            raise ControlValidationError(
                f"control for lam = {bc.lam} does not null e_lam: ratios {ratios}", ratios)
    return u


def null_ratios(bc, grid, steps=None):
    """Terminal-norm ratios (controlled/free) for both reversal conventions."""
    from .simulate import simulate, terminal_segment_norm
    from .spectral import DelayKernel
    from .state import MState

    T = bc.horizon.T
    steps = grid if steps is None else steps
    kernel = DelayKernel.zero()
    x0 = MState.eigenvector(bc.lam, steps)
    free = terminal_segment_norm(simulate(x0, None, kernel, T, steps), T)
    rev = _reversed_generator(bc, grid)
    conj_u = ControlSignal(bc.kappa * rev, T, grid)
    # plain reversal v_lam(T - t), scaled to the same moment at lam
    plain = ControlSignal(np.conj(rev), T, grid)
    target = conj_u.moment(bc.lam)
    m = plain.moment(bc.lam)
    plain = plain * (target / m) if m != 0 else plain
    out = {}
    for name, u in (("conjugate", conj_u), ("plain", plain)):
        traj = simulate(x0, u, kernel, T, steps)
        out[name] = terminal_segment_norm(traj, T) / free
    return out


def synthesize_control(x0, n, spectrum, schedule=DEFAULT_SCHEDULE, horizon=None, grid=2048):
    """``u_0 = sum w_n(lam) <x0, x_lam> u_lam``, summed in ascending ``|lam|``."""
    if horizon is None:
        raise ValueError("a horizon is required")
    if not spectrum.kernel.is_zero:
        raise ValueError("spectral synthesis is only available for the zero kernel")
    recs, coef = weighted_terms(x0, n, spectrum, schedule)
    total = np.zeros(steps_for(horizon.T, grid, "control horizon") + 1, dtype=complex)
    for r, c in zip(recs, coef):
        if c == 0:
            continue
        bc = solve_p_lambda(r, horizon)
        total += c * bc.kappa * _reversed_generator(bc, grid)
    return ControlSignal(total, horizon.T, grid)
