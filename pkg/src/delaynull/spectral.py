"""Characteristic function, its zeros and the biorthogonal system.

The homogeneous equation ``x'(t) = x(t-1) + int_{-1}^0 x(t+s) phi(s) ds`` has
exponential solutions ``exp(i lam t)`` exactly when ``lam`` is a zero of

    D(z) = -i z + exp(-i z) + int_{-1}^0 exp(i s z) phi(s) ds.

Zeros are grouped into vertical *strips* (branch ``n``) centred on the
asymptotic positions ``2 pi n - pi/2`` (``n > 0``), mirrored for ``n < 0``;
branch 0 holds the zeros with ``|Re z| < pi/2``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson

from ._grid import check_panels, fmt, resample, simpson_weights
from .exceptions import RootFindingError

ROOT_TOL = 1e-11
DEDUP_TOL = 1e-6
MAX_ITER = 60
IM_LIMIT = 700.0
SINGULAR_RADIUS = 1e-6

_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class DelayKernel:
    """Distributed-delay density on ``[-1, 0]``.

    ``kind`` is ``"zero"`` (no distributed term, ``samples`` is None) or
    ``"sampled"`` (values on a uniform grid with an even panel count).
    """

    kind: str = "zero"
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "zero":
            if self.samples is not None:
                raise ValueError("a zero kernel carries no samples")
            return
        if self.kind != "sampled":
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.samples is None:
            raise ValueError("a sampled kernel needs samples")
        s = np.asarray(self.samples)
        s = s.astype(complex) if np.iscomplexobj(s) else s.astype(float)
        if s.ndim != 1:
            raise ValueError("kernel samples must be one-dimensional")
        check_panels(s.size - 1)
        if not np.all(np.isfinite(s)):
            raise ValueError("kernel samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def sampled(cls, values):
        return cls("sampled", np.asarray(values))

    @classmethod
    def from_function(cls, fn, panels=512):
        panels = check_panels(panels)
        return cls("sampled", np.asarray(fn(np.linspace(-1.0, 0.0, panels + 1))))

    @property
    def is_zero(self):
        return self.kind == "zero"

    @property
    def panels(self):
        return 0 if self.is_zero else self.samples.size - 1

    @property
    def grid_step(self):
        return 0.0 if self.is_zero else 1.0 / self.panels

    @property
    def tau(self):
        return np.linspace(-1.0, 0.0, self.panels + 1)

    @property
    def is_real(self):
        return self.is_zero or not np.iscomplexobj(self.samples) or bool(
            np.all(self.samples.imag == 0))

    def l1_norm(self):
        if self.is_zero:
            return 0.0
        return float(np.sum(simpson_weights(self.panels, self.grid_step) * np.abs(self.samples)))

    def on_grid(self, panels):
        """Samples of the density on another uniform grid (zeros for the zero kernel)."""
        if self.is_zero:
            return np.zeros(panels + 1)
        return resample(self.samples, self.panels, panels, what="kernel samples")

    def transform(self, z, power=0):
        """Simpson approximation of ``int (i s)^power exp(i s z) phi(s) ds``."""
        z = np.asarray(z, dtype=complex)
        if self.is_zero:
            return np.zeros_like(z)
        tau = self.tau
        w = simpson_weights(self.panels, self.grid_step) * self.samples * (1j * tau) ** power
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for start in range(0, flat.size, _CHUNK):
            zz = flat[start:start + _CHUNK]
            out[start:start + _CHUNK] = np.exp(1j * np.outer(zz, tau)) @ w
        return out.reshape(z.shape)


def _check_range(z):
    z = np.asarray(z, dtype=complex)
    bad = np.abs(z.imag) >= IM_LIMIT
    if np.any(bad):
        offender = z.ravel()[np.argmax(bad.ravel())]
        raise OverflowError(f"exp(-iz) is not representable at z = {complex(offender)!r}")
    return z


def _scalar_or_array(value, like):
    return complex(value) if np.ndim(like) == 0 else value


def eval_charfn(z, kernel):
    """Characteristic function ``D(z)``; vectorised over ``z``."""
    zz = _check_range(z)
    d = -1j * zz + np.exp(-1j * zz) + kernel.transform(zz)
    return _scalar_or_array(d, z)


def eval_charfn_derivative(z, kernel):
    """``D'(z) = -i - i exp(-iz) + int i s exp(i s z) phi(s) ds``."""
    zz = _check_range(z)
    d = -1j - 1j * np.exp(-1j * zz) + kernel.transform(zz, power=1)
    return _scalar_or_array(d, z)


def _charfn_second_derivative(z, kernel):
    zz = _check_range(z)
    return -np.exp(-1j * zz) + kernel.transform(zz, power=2)


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class EigenRecord:
    """A simple zero ``lam`` of ``D`` with cached ``D'(lam)``.

    ``xi_bar`` is the head component of the biorthogonal vector paired with
    ``exp(i lam t)``: ``xi_bar = -i / D'(lam)``.
    """

    lam: complex
    d_prime: complex
    branch: int
    xi_bar: complex = field(init=False)

    def __post_init__(self):
        if self.d_prime == 0:
            raise ValueError(f"D'({self.lam}) = 0: multiple zero")
        object.__setattr__(self, "lam", complex(self.lam))
        object.__setattr__(self, "d_prime", complex(self.d_prime))
        object.__setattr__(self, "xi_bar", -1j / self.d_prime)

    @property
    def exceptional(self):
        """Zeros outside the open upper half-plane."""
        return self.lam.imag <= 0

    @classmethod
    def from_root(cls, lam, kernel, branch=None):
        lam = complex(lam)
        return cls(lam, eval_charfn_derivative(lam, kernel),
                   branch_of(lam) if branch is None else int(branch))


SPECTRUM_HEADER = ["branch", "re_lambda", "im_lambda", "re_dprime", "im_dprime",
                   "re_xibar", "im_xibar"]


@dataclass(frozen=True, eq=False)
class SpectrumSet:
    """Zeros of ``D`` found in a contiguous range of branches.

    ``branch_range`` is the inclusive ``(lo, hi)`` pair that was searched;
    it is what the summation code uses to decide whether a truncation
    radius is covered.
    """

    records: tuple
    kernel: DelayKernel
    dedup_tol: float = DEDUP_TOL
    branch_range: tuple | None = None

    def __post_init__(self):
        recs = tuple(sorted(self.records, key=lambda r: (r.lam.real, r.lam.imag)))
        object.__setattr__(self, "records", recs)
        lams = np.array([r.lam for r in recs])
        if lams.size > 1:
            gap = np.abs(lams[:, None] - lams[None, :])
            np.fill_diagonal(gap, np.inf)
            if gap.min() <= self.dedup_tol:
                i, j = np.unravel_index(np.argmin(gap), gap.shape)
                raise RootFindingError(
                    f"possible multiple zero: {lams[i]} and {lams[j]} closer than "
                    f"{self.dedup_tol}")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def lambdas(self):
        return np.array([r.lam for r in self.records], dtype=complex)

    def by_branch(self, n):
        for r in self.records:
            if r.branch == n:
                return r
        raise KeyError(f"no zero on branch {n}")

    @property
    def exceptional(self):
        return [r for r in self.records if r.exceptional]

    def covers_branches(self, lo, hi):
        if lo > hi:
            return True
        return self.branch_range is not None and (
            self.branch_range[0] <= lo and hi <= self.branch_range[1])

    def to_csv(self, dest=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SPECTRUM_HEADER)
        for r in self.records:
            w.writerow([r.branch, fmt(r.lam.real), fmt(r.lam.imag), fmt(r.d_prime.real),
                        fmt(r.d_prime.imag), fmt(r.xi_bar.real), fmt(r.xi_bar.imag)])
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source, kernel, branch_range=None):
        text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
        rows = list(csv.DictReader(io.StringIO(text)))
        recs = [EigenRecord(complex(float(r["re_lambda"]), float(r["im_lambda"])),
                            complex(float(r["re_dprime"]), float(r["im_dprime"])),
                            int(r["branch"])) for r in rows]
        if branch_range is None and recs:
            b = [r.branch for r in recs]
            branch_range = (min(b), max(b))
        return cls(tuple(recs), kernel, branch_range=branch_range)


# ---------------------------------------------------------------------------
# geometry of the branches


def strip_bounds(n):
    """Real-part interval of branch ``n``."""
    if n == 0:
        return (-math.pi / 2, math.pi / 2)
    k = abs(n)
    lo, hi = 2 * math.pi * (k - 1) + math.pi / 2, 2 * math.pi * k + math.pi / 2
    return (lo, hi) if n > 0 else (-hi, -lo)


def branch_of(z):
    x = complex(z).real
    if abs(x) < math.pi / 2:
        return 0
    return int(math.copysign(math.ceil((abs(x) - math.pi / 2) / (2 * math.pi)), x))


def asymptotic_seed(n):
    """Starting point for Newton on branch ``n`` (``|n| >= 1``)."""
    if n == 0:
        raise ValueError("branch 0 has no asymptotic seed")
    k = abs(n)
    z = 2 * math.pi * k - math.pi / 2 + 1j * math.log(2 * math.pi * k)
    return z if n > 0 else -z.conjugate()


def _box_height(kernel, nmax):
    return -(2.0 + kernel.l1_norm()), math.log(2 * math.pi * (nmax + 1)) + 4.0


# ---------------------------------------------------------------------------
# argument principle and contour moments


def _corners(box):
    x0, x1, y0, y1 = box
    return [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]


def count_zeros(kernel, box, *, n0=64, max_rounds=30):
    """Number of zeros of ``D`` inside ``box = (re_lo, re_hi, im_lo, im_hi)``.

    The winding number of ``D`` along the boundary, sampled at least four
    points per unit length and refined until consecutive phase increments
    stay below ``pi/4``.
    """
    c = _corners(box)
    # the phase of exp(-iz) turns about one radian per unit along horizontal
    # edges; sample densely enough from the start that no turn is aliased
    lengths = [abs(b - a) for a, b in zip(c, c[1:] + c[:1])]
    if not all(math.isfinite(x) for x in lengths) or sum(lengths) > 1e6:
        raise RootFindingError(f"contour of box {box} too long to resolve")
    counts = [max(n0, int(math.ceil(4 * x))) for x in lengths]
    z = np.concatenate([a + (b - a) * np.arange(m) / m
                        for (a, b), m in zip(zip(c, c[1:] + c[:1]), counts)]
                       + [np.array(c[:1])])
    d = eval_charfn(z, kernel)
    for _ in range(max_rounds):
        if np.any(d == 0):
            raise RootFindingError(f"zero of D on the contour of box {box}")
        step = np.angle(d[1:] / d[:-1])
        bad = np.nonzero(np.abs(step) > np.pi / 4)[0]
        if bad.size == 0:
            break
        zm = 0.5 * (z[bad] + z[bad + 1])
        z = np.insert(z, bad + 1, zm)
        d = np.insert(d, bad + 1, eval_charfn(zm, kernel))
    else:
        raise RootFindingError(f"argument principle unresolved on box {box}; zero near contour?")
    winding = float(np.sum(step)) / (2 * math.pi)
    n = round(winding)
    if abs(winding - n) > 0.05:
        raise RootFindingError(f"non-integer winding number {winding} on box {box}")
    return int(n)


def _contour_power_sums(kernel, box, kmax, *, panels=48, order=16):
    """``(1/2 pi i) oint w^k D'/D dz`` for ``k = 0..kmax`` in scaled coordinates."""
    x0, x1, y0, y1 = box
    centre = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    scale = 0.5 * abs(complex(x1 - x0, y1 - y0))
    xg, wg = np.polynomial.legendre.leggauss(order)
    c = _corners(box)
    zs, dz = [], []
    for a, b in zip(c, c[1:] + c[:1]):
        edges = np.linspace(0.0, 1.0, panels + 1)
        lo, hi = edges[:-1, None], edges[1:, None]
        s = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
        zs.append((a + (b - a) * s).ravel())
        dz.append(((b - a) * 0.5 * (hi - lo) * wg).ravel())
    z = np.concatenate(zs)
    dz = np.concatenate(dz)
    ratio = eval_charfn_derivative(z, kernel) / eval_charfn(z, kernel)
    w = (z - centre) / scale
    sums = np.array([np.sum(w ** k * ratio * dz) for k in range(kmax + 1)]) / (2j * math.pi)
    return sums, centre, scale


def residual_tol(lam, d_prime, root_tol=ROOT_TOL):
    """Acceptable ``|D(lam)|``: ``root_tol`` or the rounding floor, whichever is larger.

    A zero rounded to double precision leaves ``|D| ~ eps |lam| |D'(lam)|``,
    which exceeds ``1e-11`` once ``|lam|`` reaches a few hundred.
    """
    return max(root_tol, 8 * np.finfo(float).eps * abs(lam) * abs(d_prime))


def _newton(seed, kernel, *, max_iter=MAX_ITER, root_tol=ROOT_TOL):
    z = complex(seed)
    extra = 0
    try:
        for _ in range(max_iter):
            dp = eval_charfn_derivative(z, kernel)
            if dp == 0:
                break
            step = eval_charfn(z, kernel) / dp
            z -= step
            if abs(step) <= 1e-12 * max(1.0, abs(z)):
                extra += 1
                if extra >= 2:
                    break
        else:
            raise RootFindingError(f"Newton did not converge in {max_iter} iterations from seed {seed}")
    except OverflowError as exc:
        raise RootFindingError(f"Newton diverged from seed {seed}: {exc}") from exc
    res = abs(eval_charfn(z, kernel))
    if not res < residual_tol(z, eval_charfn_derivative(z, kernel), root_tol):
        raise RootFindingError(f"Newton from seed {seed} stalled at {z} with |D| = {res:.3e}")
    return z


def _inside(z, box, pad=0.0):
    x0, x1, y0, y1 = box
    return x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad


def _box_roots(kernel, box, *, dedup_tol=DEDUP_TOL, max_iter=MAX_ITER, root_tol=ROOT_TOL):
    """All zeros inside ``box``, located from contour moments and polished by Newton."""
    n = count_zeros(kernel, box)
    if n == 0:
        return []
    sums, centre, scale = _contour_power_sums(kernel, box, n)
    # Newton identities: power sums -> monic polynomial coefficients
    e = [1.0 + 0j]
    for k in range(1, n + 1):
        acc = sum((-1) ** (j - 1) * e[k - j] * sums[j] for j in range(1, k + 1))
        e.append(acc / k)
    coeffs = [(-1) ** k * e[k] for k in range(n + 1)]
    seeds = list(centre + scale * np.roots(coeffs))
    roots = []
    for s in seeds:
        try:
            z = _newton(s, kernel, max_iter=max_iter, root_tol=root_tol)
        except RootFindingError:
            continue
        if _inside(z, box) and all(abs(z - r) > dedup_tol for r in roots):
            roots.append(z)
    if len(roots) < n:
        # moments were too inaccurate; sweep a seed lattice over the box
        x0, x1, y0, y1 = box
        for sx in np.linspace(x0, x1, 9)[1:-1]:
            for sy in np.linspace(y0, y1, 7)[1:-1]:
                try:
                    z = _newton(complex(sx, sy), kernel, max_iter=max_iter, root_tol=root_tol)
                except RootFindingError:
                    continue
                if _inside(z, box) and all(abs(z - r) > dedup_tol for r in roots):
                    roots.append(z)
    if len(roots) != n:
        raise RootFindingError(
            f"argument principle predicts {n} zeros in box {box}, located {len(roots)}")
    return roots


def find_roots(kernel, branches, *, root_tol=ROOT_TOL, dedup_tol=DEDUP_TOL, max_iter=MAX_ITER):
    """Zeros of ``D`` on the given branches, as a :class:`SpectrumSet`.

    ``branches`` is a contiguous integer range (``range(-10, 11)`` etc.).
    Branches ``|n| <= 1`` are searched with contour moments over the union of
    their strips; higher branches start Newton from :func:`asymptotic_seed`
    and fall back to the contour search when the strip count disagrees.
    The total is finally checked against the argument principle on the box
    enclosing all requested strips.
    """
    branches = sorted(set(int(b) for b in branches))
    if not branches:
        return SpectrumSet((), kernel, dedup_tol)
    lo, hi = branches[0], branches[-1]
    if branches != list(range(lo, hi + 1)):
        raise ValueError("branches must form a contiguous range")
    y0, y1 = _box_height(kernel, max(abs(lo), abs(hi)))
    found = []

    low = [n for n in branches if abs(n) <= 1]
    if low:
        box = (strip_bounds(min(low))[0], strip_bounds(max(low))[1], y0, y1)
        for z in _box_roots(kernel, box, dedup_tol=dedup_tol, max_iter=max_iter,
                            root_tol=root_tol):
            found.append(z)

    for n in branches:
        if abs(n) <= 1:
            continue
        box = (*strip_bounds(n), y0, y1)
        try:
            z = _newton(asymptotic_seed(n), kernel, max_iter=max_iter, root_tol=root_tol)
            ok = branch_of(z) == n and _inside(z, box)
        except RootFindingError:
            ok = False
        if ok and count_zeros(kernel, box) == 1:
            found.append(z)
        else:
            found.extend(_box_roots(kernel, box, dedup_tol=dedup_tol, max_iter=max_iter,
                                    root_tol=root_tol))

    records = [EigenRecord.from_root(z, kernel) for z in found]
    spec = SpectrumSet(tuple(records), kernel, dedup_tol, branch_range=(lo, hi))
    predicted = count_zeros(kernel, (strip_bounds(lo)[0], strip_bounds(hi)[1], y0, y1))
    if predicted != len(spec):
        raise RootFindingError(
            f"argument principle predicts {predicted} zeros on branches {lo}..{hi}, "
            f"found {len(spec)}")
    for r in spec:
        if not abs(eval_charfn(r.lam, kernel)) < residual_tol(r.lam, r.d_prime, root_tol):
            raise RootFindingError(f"residual too large at {r.lam}")
    return spec


# ---------------------------------------------------------------------------
# biorthogonal system


def _as_record(lam, kernel):
    return lam if isinstance(lam, EigenRecord) else EigenRecord.from_root(lam, kernel)


def biorth_tail_transform(lam, z, kernel):
    """``int_{-1}^0 exp(i z t) conj(x_lam(t)) dt`` for the biorthogonal tail.

    Equal to ``(exp(-iz) + Q(z) - i lam) / (D'(lam) (z - lam))`` where ``Q``
    is the kernel integral; the numerator vanishes at ``z = lam`` because
    ``D(lam) = 0``, and inside ``SINGULAR_RADIUS`` a two-term Taylor
    expansion of the difference quotient is used instead.
    """
    rec = _as_record(lam, kernel)
    lam = rec.lam
    zz = _check_range(z)
    dz = zz - lam
    near = np.abs(dz) < SINGULAR_RADIUS
    safe = np.where(near, lam + 1.0, zz)
    num = np.exp(-1j * safe) + kernel.transform(safe) - 1j * lam
    val = num / (safe - lam)
    if np.any(near):
        n1 = -1j * np.exp(-1j * lam) + kernel.transform(lam, power=1)
        n2 = _charfn_second_derivative(lam, kernel)
        val = np.where(near, n1 + 0.5 * n2 * dz, val)
    return _scalar_or_array(val / rec.d_prime, z)


def biorth_tail_model(lam, t, kernel=None):
    """Closed-form conjugated tail ``lam exp(-i lam t) / (lam - i)`` (zero kernel only)."""
    if kernel is not None and not kernel.is_zero:
        raise ValueError("closed-form biorthogonal tail exists only for the zero kernel")
    lam = complex(lam.lam if isinstance(lam, EigenRecord) else lam)
    return lam * np.exp(-1j * lam * np.asarray(t)) / (lam - 1j)


def biorth_tail(lam, panels, kernel):
    """Conjugated biorthogonal tail on the uniform grid with ``panels`` panels.

    ``conj(x_lam(t)) = -i/D'(lam) * exp(-i lam t) * (exp(-i lam) + C(t))``
    with ``C(t) = int_{-1}^t exp(i lam s) phi(s) ds``; this is the inverse
    transform of the difference-quotient representation.
    """
    rec = _as_record(lam, kernel)
    lam = rec.lam
    tau = np.linspace(-1.0, 0.0, panels + 1)
    if kernel.is_zero:
        c = 0.0
    else:
        kt = kernel.tau
        g = np.exp(1j * lam * kt) * kernel.samples
        cum = (cumulative_simpson(g.real, x=kt, initial=0.0)
               + 1j * cumulative_simpson(g.imag, x=kt, initial=0.0))
        c = resample(cum, kernel.panels, panels, what="cumulative kernel integral")
    return (-1j / rec.d_prime) * np.exp(-1j * lam * tau) * (np.exp(-1j * lam) + c)
