"""Elements of the state space C x L^2(-1, 0)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._grid import check_panels, fmt, simpson_weights
from .spectral import EigenRecord, biorth_tail

DEFAULT_PANELS = 512


@dataclass(frozen=True, eq=False)
class MState:
    """Pair ``(head, tail)``: the current value and the history on ``[-1, 0]``.

    ``tail`` holds samples on a uniform grid over ``[-1, 0]`` (both ends
    included) with an even number of panels.
    """

    head: complex
    tail: np.ndarray

    def __post_init__(self):
        tail = np.array(self.tail, dtype=complex)
        if tail.ndim != 1:
            raise ValueError("tail must be one-dimensional")
        check_panels(tail.size - 1)
        if not (np.all(np.isfinite(tail)) and np.isfinite(self.head)):
            raise ValueError("state samples must be finite")
        tail.setflags(write=False)
        object.__setattr__(self, "head", complex(self.head))
        object.__setattr__(self, "tail", tail)

    @classmethod
    def zero(cls, panels=DEFAULT_PANELS):
        return cls(0.0, np.zeros(check_panels(panels) + 1))

    @classmethod
    def constant(cls, head, value, panels=DEFAULT_PANELS):
        return cls(head, np.full(check_panels(panels) + 1, value, dtype=complex))

    @classmethod
    def from_function(cls, head, fn, panels=DEFAULT_PANELS):
        tau = np.linspace(-1.0, 0.0, check_panels(panels) + 1)
        return cls(head, np.asarray(fn(tau), dtype=complex))

    @classmethod
    def eigenvector(cls, lam, panels=DEFAULT_PANELS):
        """``(1, exp(i lam tau))``."""
        lam = complex(lam.lam if isinstance(lam, EigenRecord) else lam)
        return cls.from_function(1.0, lambda t: np.exp(1j * lam * t), panels)

    @property
    def panels(self):
        return self.tail.size - 1

    @property
    def grid_step(self):
        return 1.0 / self.panels

    @property
    def tau(self):
        return np.linspace(-1.0, 0.0, self.panels + 1)

    def _same_grid(self, other):
        if self.panels != other.panels:
            raise ValueError(f"grid mismatch: {self.panels} vs {other.panels} panels")

    def __add__(self, other):
        self._same_grid(other)
        return MState(self.head + other.head, self.tail + other.tail)

    def __sub__(self, other):
        self._same_grid(other)
        return MState(self.head - other.head, self.tail - other.tail)

    def __neg__(self):
        return MState(-self.head, -self.tail)

    def __mul__(self, c):
        return MState(c * self.head, c * self.tail)

    __rmul__ = __mul__

    def to_csv(self, dest=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["head_re", "head_im"])
        w.writerow([fmt(self.head.real), fmt(self.head.imag)])
        w.writerow(["t", "re_x", "im_x"])
        for t, x in zip(self.tau, self.tail):
            w.writerow([fmt(t), fmt(x.real), fmt(x.imag)])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source):
        text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
        rows = list(csv.reader(io.StringIO(text)))
        if rows[0] != ["head_re", "head_im"] or rows[2] != ["t", "re_x", "im_x"]:
            raise ValueError("not an MState CSV")
        head = complex(float(rows[1][0]), float(rows[1][1]))
        body = np.array([[float(v) for v in r] for r in rows[3:] if r])
        t = body[:, 0]
        panels = t.size - 1
        if not np.allclose(t, np.linspace(-1.0, 0.0, panels + 1), atol=1e-12):
            raise ValueError("tail grid is not uniform over [-1, 0]")
        return cls(head, body[:, 1] + 1j * body[:, 2])


def m_inner(a, b):
    """``a.head * conj(b.head) + int a.tail * conj(b.tail)`` (Simpson)."""
    a._same_grid(b)
    w = simpson_weights(a.panels, a.grid_step)
    return complex(a.head * np.conj(b.head) + np.sum(w * a.tail * np.conj(b.tail)))


def m_norm(a):
    return float(np.sqrt(max(m_inner(a, a).real, 0.0)))


# ---------------------------------------------------------------------------
# expansion coefficients


def _filon_moments(omega):
    """``int_{-1}^1 s^k exp(-i omega s) ds`` for ``k = 0, 1, 2``."""
    w = np.asarray(omega, dtype=complex)
    small = np.abs(w) < 1.0
    ws = np.where(small, 0.0, w)
    ws = np.where(small, 1.0, ws)
    s, c = np.sin(ws), np.cos(ws)
    m0 = 2 * s / ws
    m1 = 2j * (ws * c - s) / ws ** 2
    m2 = 2 * (ws ** 2 * s + 2 * ws * c - 2 * s) / ws ** 3
    if np.any(small):
        terms = np.zeros((3,) + w.shape, dtype=complex)
        x = -1j * np.where(small, w, 0.0)
        power = np.ones_like(x)
        fact = 1.0
        for j in range(32):
            if j:
                power = power * x
                fact *= j
            for k in range(3):
                if (k + j) % 2 == 0:
                    terms[k] += power / fact * (2.0 / (k + j + 1))
        m0 = np.where(small, terms[0], m0)
        m1 = np.where(small, terms[1], m1)
        m2 = np.where(small, terms[2], m2)
    return m0, m1, m2


def filon_weights(lams, panels):
    """Weights ``W`` with ``W @ f ~ int_{-1}^0 f(t) exp(-i lam t) dt``.

    ``f`` is interpolated by quadratics on each Simpson panel pair and the
    product with the exponential is integrated exactly, so accuracy does not
    degrade as ``|lam|`` outgrows the grid resolution.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    h = 1.0 / panels
    mids = -1.0 + h * (2 * np.arange(panels // 2) + 1)
    m0, m1, m2 = _filon_moments(lams * h)
    phase = h * np.exp(-1j * np.outer(lams, mids))
    left = (0.5 * (m2 - m1))[:, None] * phase
    centre = (m0 - m2)[:, None] * phase
    right = (0.5 * (m2 + m1))[:, None] * phase
    w = np.zeros((lams.size, panels + 1), dtype=complex)
    w[:, 0:-1:2] += left
    w[:, 1::2] += centre
    w[:, 2::2] += right
    return w


def expansion_coefficients(x, records, kernel):
    """``<x, x_lam>`` for each record, as an array."""
    records = list(records)
    if not records:
        return np.zeros(0, dtype=complex)
    xi_bar = np.array([r.xi_bar for r in records])
    if kernel.is_zero:
        lams = np.array([r.lam for r in records])
        # conj(x_lam(t)) = -i exp(-i lam) / D'(lam) * exp(-i lam t)
        amp = -1j * np.exp(-1j * lams) / np.array([r.d_prime for r in records])
        tails = amp * (filon_weights(lams, x.panels) @ x.tail)
    else:
        w = simpson_weights(x.panels, x.grid_step) * x.tail
        tails = np.array([np.sum(w * biorth_tail(r, x.panels, kernel)) for r in records])
    return x.head * xi_bar + tails


def expansion_coefficient(x, rec, kernel):
    """Coefficient of ``e_lam`` in the formal eigenvector series of ``x``."""
    return complex(expansion_coefficients(x, [rec], kernel)[0])
