"""Regularized summation of the eigenvector expansion.

The formal series ``x ~ sum <x, x_lam> e_lam`` need not converge. The partial
sums ``S_n x = sum w_n(lam) <x, x_lam> e_lam`` use the weights

    W_n(z) = exp(-l_n pi - i l_n Log((z - n)/(z + n))),   z in C_+,

cut off to zero outside the disc ``|lam| < R_n``. The schedule ``(l_n, R_n)``
must grow so that ``l_n^2/n -> 0``, ``n/R_n -> 0`` and
``exp(-pi l_n/2) R_n -> 0``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._grid import fmt, simpson_weights
from .exceptions import SpectrumTooShortError
from .spectral import EigenRecord
from .state import MState, expansion_coefficients, filon_weights


@dataclass(frozen=True)
class SummationSchedule:
    """Power-law schedule ``l_n = l_coef n^l_exp``, ``R_n = r_coef n^r_exp``.

    The default is ``l_n = n^(1/4)``, ``R_n = n^4``.
    """

    l_coef: float = 1.0
    l_exp: float = 0.25
    r_coef: float = 1.0
    r_exp: float = 4.0
    n_max: int = 64

    def __post_init__(self):
        if not (self.l_coef > 0 and self.r_coef > 0):
            raise ValueError("schedule coefficients must be positive")
        if int(self.n_max) < 1:
            raise ValueError("n_max must be >= 1")

    def l(self, n):
        return self.l_coef * np.asarray(n, dtype=float) ** self.l_exp

    def radius(self, n):
        return self.r_coef * np.asarray(n, dtype=float) ** self.r_exp

    def decay_onset(self):
        """Order after which ``exp(-pi l_n/2) R_n`` decreases.

        ``d/dn log(exp(-pi l_n/2) R_n) = -pi/2 l_coef l_exp n^(l_exp-1) + r_exp/n``
        changes sign once, at ``n = (2 r_exp/(pi l_coef l_exp))^(1/l_exp)``.
        """
        return (2 * self.r_exp / (math.pi * self.l_coef * self.l_exp)) ** (1 / self.l_exp)

    def validate(self, n_range=None):
        """Check the growth conditions; raise ``ValueError`` listing violations.

        On the sampled orders: ``l_n`` and ``R_n`` strictly increasing,
        ``l_n^2/n`` and ``n/R_n`` strictly decreasing. The limit
        ``exp(-pi l_n/2) R_n -> 0`` only holds eventually (for the default
        schedule after ``n ~ 1.1e4``), so it is checked through the exponents
        and by monotone decay on a window past :meth:`decay_onset`.
        """
        n = np.arange(1, self.n_max + 1) if n_range is None else np.asarray(list(n_range))
        n = n.astype(float)
        problems = []
        if not 0 < self.l_exp < 0.5:
            problems.append(f"l_n^2/n -> 0 and l_n -> inf need 0 < l_exp < 1/2, got {self.l_exp}")
        if not self.r_exp > 1:
            problems.append(f"n/R_n -> 0 needs r_exp > 1, got {self.r_exp}")
        if n.size > 1:
            checks = [
                ("l_n increasing", np.diff(self.l(n)) > 0),
                ("R_n increasing", np.diff(self.radius(n)) > 0),
                ("l_n^2/n decreasing", np.diff(self.l(n) ** 2 / n) < 0),
                ("n/R_n decreasing", np.diff(n / self.radius(n)) < 0),
            ]
            for name, ok in checks:
                if not np.all(ok):
                    problems.append(f"{name} fails on the sampled range")
        if not problems:
            start = math.ceil(self.decay_onset()) + 1
            window = start * np.array([1.0, 2.0, 4.0, 8.0])
            if not np.all(np.diff(self.envelope(window)) < 0):
                problems.append("exp(-pi l_n/2) R_n does not decay past its turning point")
        if problems:
            raise ValueError("invalid summation schedule: " + "; ".join(problems))
        return self

    def envelope(self, n):
        """``exp(-pi l_n/2) R_n``, the bound on the weights along ``|z| = R_n``."""
        return np.exp(-math.pi * self.l(n) / 2) * self.radius(n)


DEFAULT_SCHEDULE = SummationSchedule()


def weight_fn(n, z, schedule=DEFAULT_SCHEDULE):
    """``W_n(z)`` with the principal logarithm; vectorised over ``z``."""
    zz = np.asarray(z, dtype=complex)
    if np.any((zz == n) | (zz == -n)):
        raise ValueError(f"W_n is undefined at z = +-{n}")
    l = float(schedule.l(n))
    w = np.exp(-l * math.pi - 1j * l * np.log((zz - n) / (zz + n)))
    return complex(w) if np.ndim(z) == 0 else w


def weight_for_eigenvalue(n, rec, schedule=DEFAULT_SCHEDULE):
    """Truncated weight ``w_n(lam)``.

    Zero outside ``|lam| < R_n``; ``W_n(lam)`` in the upper half-plane; 1 for
    the finitely many zeros with ``Im lam <= 0``.
    """
    lam = rec.lam if isinstance(rec, EigenRecord) else complex(rec)
    if abs(lam) >= float(schedule.radius(n)):
        return 0j
    if lam.imag <= 0:
        return 1 + 0j
    return weight_fn(n, lam, schedule)


def weights_for(n, lams, schedule=DEFAULT_SCHEDULE):
    lams = np.asarray(lams, dtype=complex)
    out = np.zeros(lams.shape, dtype=complex)
    inside = np.abs(lams) < float(schedule.radius(n))
    upper = inside & (lams.imag > 0)
    out[inside & ~upper] = 1.0
    if np.any(upper):
        out[upper] = weight_fn(n, lams[upper], schedule)
    return out


# ---------------------------------------------------------------------------
# coverage


def required_branch(radius):
    """Largest branch whose strip meets the disc ``|z| < radius``."""
    if radius <= math.pi / 2:
        return 0
    return int(math.ceil((radius - math.pi / 2) / (2 * math.pi)))


def check_coverage(spectrum, radius):
    k = required_branch(radius)
    if spectrum.branch_range is None or not spectrum.covers_branches(-k, k):
        have = spectrum.branch_range
        raise SpectrumTooShortError(
            f"truncation radius R_n = {radius:g} needs branches -{k}..{k}; "
            f"spectrum covers {have[0]}..{have[1]}" if have else
            f"truncation radius R_n = {radius:g} needs branches -{k}..{k}; "
            "spectrum has no recorded branch range")


# ---------------------------------------------------------------------------
# weight tables and partial sums


WEIGHT_HEADER = ["n", "branch", "re_lambda", "im_lambda", "re_w", "im_w"]


@dataclass(frozen=True, eq=False)
class WeightTable:
    n: int
    records: tuple
    weights: np.ndarray

    def nonzero(self):
        return int(np.count_nonzero(self.weights))

    def to_csv(self, dest=None, header=True):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(WEIGHT_HEADER)
        for r, x in zip(self.records, self.weights):
            w.writerow([self.n, r.branch, fmt(r.lam.real), fmt(r.lam.imag),
                        fmt(x.real), fmt(x.imag)])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text


def weight_table(n, spectrum, schedule=DEFAULT_SCHEDULE):
    check_coverage(spectrum, float(schedule.radius(n)))
    recs = tuple(spectrum.records)
    return WeightTable(n, recs, weights_for(n, [r.lam for r in recs], schedule))


def summation_order(records):
    """Records sorted by ascending ``|lam|`` (ties broken by ``Re lam``)."""
    return sorted(records, key=lambda r: (abs(r.lam), r.lam.real, r.lam.imag))


def weighted_terms(x, n, spectrum, schedule=DEFAULT_SCHEDULE):
    """Records with nonzero weight and the products ``w_n(lam) <x, x_lam>``.

    Both are returned in summation order (ascending ``|lam|``).
    """
    check_coverage(spectrum, float(schedule.radius(n)))
    recs = [r for r in summation_order(spectrum.records)
            if abs(r.lam) < float(schedule.radius(n))]
    if not recs:
        return [], np.zeros(0, dtype=complex)
    w = weights_for(n, [r.lam for r in recs], schedule)
    c = expansion_coefficients(x, recs, spectrum.kernel)
    return recs, w * c


def partial_sum(x, n, spectrum, schedule=DEFAULT_SCHEDULE):
    """``S_n x`` sampled on the grid of ``x``."""
    recs, a = weighted_terms(x, n, spectrum, schedule)
    head = 0j
    tail = np.zeros(x.panels + 1, dtype=complex)
    tau = x.tau
    for r, c in zip(recs, a):
        head += c
        tail += c * np.exp(1j * r.lam * tau)
    return MState(head, tail)


def _exp_gram(lams):
    """``G[j, k] = int_{-1}^0 exp(i lam_j t) conj(exp(i lam_k t)) dt``."""
    d = lams[:, None] - np.conj(lams)[None, :]
    small = np.abs(d) < 1e-8
    ds = np.where(small, 1.0, d)
    g = (1 - np.exp(-1j * ds)) / (1j * ds)
    # series 1 - i d/2 - d^2/6 near d = 0
    return np.where(small, 1 - 0.5j * d - d * d / 6, g)


def reconstruction_error(x, n, spectrum, schedule=DEFAULT_SCHEDULE):
    """``||S_n x - x||`` in ``M`` without sampling the partial sum.

    The tail of ``S_n x`` is a combination of exponentials that a fixed grid
    cannot resolve once ``R_n`` is large, so the norm is expanded as
    ``|a.G.a^*| - 2 Re <S_n x, x> + ||x||^2`` with the Gram matrix of the
    exponentials in closed form and the cross terms by Filon quadrature.
    """
    recs, a = weighted_terms(x, n, spectrum, schedule)
    w = simpson_weights(x.panels, x.grid_step)
    xx = float(np.sum(w * np.abs(x.tail) ** 2))
    head = np.sum(a) - x.head
    if not recs:
        return float(np.sqrt(abs(head) ** 2 + xx))
    lams = np.array([r.lam for r in recs])
    quad = float(np.real(a @ _exp_gram(lams) @ np.conj(a)))
    # int exp(i lam t) conj(x(t)) dt = conj(int x(t) exp(-i conj(lam) t) dt)
    cross = np.sum(a * np.conj(filon_weights(np.conj(lams), x.panels) @ x.tail))
    err2 = abs(head) ** 2 + quad - 2 * cross.real + xx
    return float(np.sqrt(max(err2, 0.0)))
