"""INI configuration for the command-line driver.

Sections and keys (all optional unless noted)::

    [kernel]     kind = zero | file;  file = CSV with columns tau,phi or tau,re_phi,im_phi
    [initial]    kind = zero | constant | eigen | file
                 head = re,im;  tail = re,im    (constant)
                 branch = int                   (eigen)
                 file = MState CSV              (file)
    [spectrum]   branches = lo..hi  (empty for none)
    [horizon]    T = float in (1, 2)
    [schedule]   l_coef, l_exp, r_coef, r_exp
    [summation]  n_list = 2,4,6;  n = 6
    [synthesis]  method = series | eigen
    [grids]      tail_panels = 512;  steps_per_unit = 2048;  oracle_points = 2000
    [output]     dir = path

A ``[metadata]`` section is accepted and ignored, so result sidecars can be
read back as configurations. Relative file paths are resolved against the
directory of the configuration file.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._grid import check_panels, fmt
from .exceptions import ConfigError
from .spectral import DelayKernel
from .summation import SummationSchedule

KNOWN = {
    "kernel": {"kind", "file"},
    "initial": {"kind", "head", "tail", "branch", "file"},
    "spectrum": {"branches"},
    "horizon": {"t"},
    "schedule": {"l_coef", "l_exp", "r_coef", "r_exp"},
    "summation": {"n_list", "n"},
    "synthesis": {"method"},
    "grids": {"tail_panels", "steps_per_unit", "oracle_points"},
    "output": {"dir"},
}
IGNORED = {"metadata"}


def parse_complex(text, where):
    parts = [p.strip() for p in str(text).split(",")]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"{where}: expected 're,im', got {text!r}")


def format_complex(z):
    z = complex(z)
    return f"{fmt(z.real)},{fmt(z.imag)}"


def parse_range(text, where):
    """``"lo..hi"`` (inclusive) or empty; returns a tuple or None."""
    text = str(text).strip()
    if not text or text.lower() == "none":
        return None
    try:
        lo, hi = (int(p) for p in text.split(".."))
    except ValueError:
        raise ConfigError(f"{where}: expected 'lo..hi', got {text!r}") from None
    if lo > hi:
        return None
    return (lo, hi)


def parse_int_list(text, where):
    try:
        vals = [int(p) for p in str(text).replace(" ", "").split(",") if p]
    except ValueError:
        raise ConfigError(f"{where}: expected comma-separated integers, got {text!r}") from None
    if any(v < 1 for v in vals):
        raise ConfigError(f"{where}: summation orders must be >= 1")
    return tuple(vals)


@dataclass(frozen=True)
class Config:
    kernel_kind: str = "zero"
    kernel_file: str | None = None
    initial_kind: str = "constant"
    initial_head: complex = 1 + 0j
    initial_tail: complex = 1 + 0j
    initial_branch: int = 1
    initial_file: str | None = None
    branches: tuple | None = (-10, 10)
    T: float = 1.5
    schedule: SummationSchedule = field(default_factory=SummationSchedule)
    n_list: tuple = (2, 4, 6)
    n: int = 6
    method: str = "series"
    tail_panels: int = 512
    steps_per_unit: int = 2048
    oracle_points: int = 2000
    out_dir: str = "out"

    # -- builders -----------------------------------------------------------

    def kernel(self):
        if self.kernel_kind == "zero":
            return DelayKernel.zero()
        return load_kernel(self.kernel_file)

    def initial_state(self, panels=None):
        from .state import MState

        panels = self.tail_panels if panels is None else panels
        kind = self.initial_kind
        if kind == "zero":
            return MState.zero(panels)
        if kind == "constant":
            return MState.constant(self.initial_head, self.initial_tail, panels)
        if kind == "eigen":
            return MState.eigenvector(self.eigen_record().lam, panels)
        x = MState.from_csv(self.initial_file)
        if x.panels == panels:
            return x
        from ._grid import resample
        return MState(x.head, resample(x.tail, x.panels, panels, what="initial tail"))

    def eigen_record(self):
        from .spectral import find_roots

        b = self.initial_branch
        return find_roots(self.kernel(), range(b, b + 1))[0]

    # -- serialisation ------------------------------------------------------

    def to_parser(self):
        cp = configparser.ConfigParser(interpolation=None)
        cp["kernel"] = {"kind": self.kernel_kind}
        if self.kernel_file:
            cp["kernel"]["file"] = self.kernel_file
        ini = {"kind": self.initial_kind}
        if self.initial_kind == "constant":
            ini.update(head=format_complex(self.initial_head), tail=format_complex(self.initial_tail))
        elif self.initial_kind == "eigen":
            ini["branch"] = str(self.initial_branch)
        elif self.initial_kind == "file":
            ini["file"] = self.initial_file
        cp["initial"] = ini
        cp["spectrum"] = {"branches": "" if self.branches is None
                          else f"{self.branches[0]}..{self.branches[1]}"}
        cp["horizon"] = {"T": fmt(self.T)}
        s = self.schedule
        cp["schedule"] = {"l_coef": fmt(s.l_coef), "l_exp": fmt(s.l_exp),
                          "r_coef": fmt(s.r_coef), "r_exp": fmt(s.r_exp)}
        cp["summation"] = {"n_list": ",".join(str(v) for v in self.n_list), "n": str(self.n)}
        cp["synthesis"] = {"method": self.method}
        cp["grids"] = {"tail_panels": str(self.tail_panels),
                       "steps_per_unit": str(self.steps_per_unit),
                       "oracle_points": str(self.oracle_points)}
        cp["output"] = {"dir": self.out_dir}
        return cp

    def to_text(self, extra=None):
        cp = self.to_parser()
        if extra:
            cp["metadata"] = {k: str(v) for k, v in extra.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _get(cp, section, key, conv, default, where_file):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    where = f"{where_file}: [{section}] {key}"
    try:
        return conv(raw, where)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _num(kind):
    def conv(raw, where):
        try:
            return kind(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected {kind.__name__}, got {raw!r}") from None
    return conv


def _path(base):
    def conv(raw, where):
        p = Path(raw.strip())
        return str(p if p.is_absolute() else (base / p).resolve())
    return conv


def load_config(path=None, text=None):
    """Parse a configuration file (or ``text``) into a :class:`Config`."""
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"configuration file not found: {path}")
        text = path.read_text()
        base, name = path.resolve().parent, str(path)
    else:
        base, name = Path.cwd(), "<config>"
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text or "", source=name)
    except configparser.Error as exc:
        raise ConfigError(f"{name}: {exc}") from None
    for sec in cp.sections():
        if sec in IGNORED:
            continue
        if sec not in KNOWN:
            raise ConfigError(f"{name}: unknown section [{sec}]")
        extra = set(cp[sec]) - KNOWN[sec]
        if extra:
            raise ConfigError(f"{name}: [{sec}] unknown key(s) {sorted(extra)}")

    d = Config()
    kind = _get(cp, "kernel", "kind", lambda r, w: r.strip().lower(), d.kernel_kind, name)
    if kind not in ("zero", "file"):
        raise ConfigError(f"{name}: [kernel] kind must be 'zero' or 'file', got {kind!r}")
    kfile = _get(cp, "kernel", "file", _path(base), None, name)
    if kind == "file":
        if not kfile:
            raise ConfigError(f"{name}: [kernel] kind = file needs a 'file' key")
        if not Path(kfile).is_file():
            raise ConfigError(f"{name}: [kernel] file not found: {kfile}")
    ikind = _get(cp, "initial", "kind", lambda r, w: r.strip().lower(), d.initial_kind, name)
    if ikind not in ("zero", "constant", "eigen", "file"):
        raise ConfigError(f"{name}: [initial] kind must be zero, constant, eigen or file")
    ifile = _get(cp, "initial", "file", _path(base), None, name)
    if ikind == "file" and not (ifile and Path(ifile).is_file()):
        raise ConfigError(f"{name}: [initial] file not found: {ifile}")
    T = _get(cp, "horizon", "t", _num(float), d.T, name)
    method = _get(cp, "synthesis", "method", lambda r, w: r.strip().lower(), d.method, name)
    if method not in ("series", "eigen"):
        raise ConfigError(f"{name}: [synthesis] method must be 'series' or 'eigen'")
    if method == "eigen" and ikind != "eigen":
        raise ConfigError(f"{name}: [synthesis] method = eigen needs [initial] kind = eigen")
    ds = d.schedule
    try:
        schedule = SummationSchedule(
            _get(cp, "schedule", "l_coef", _num(float), ds.l_coef, name),
            _get(cp, "schedule", "l_exp", _num(float), ds.l_exp, name),
            _get(cp, "schedule", "r_coef", _num(float), ds.r_coef, name),
            _get(cp, "schedule", "r_exp", _num(float), ds.r_exp, name))
    except ValueError as exc:
        raise ConfigError(f"{name}: [schedule] {exc}") from None
    cfg = Config(
        kernel_kind=kind,
        kernel_file=kfile if kind == "file" else None,
        initial_kind=ikind,
        initial_head=_get(cp, "initial", "head", parse_complex, d.initial_head, name),
        initial_tail=_get(cp, "initial", "tail", parse_complex, d.initial_tail, name),
        initial_branch=_get(cp, "initial", "branch", _num(int), d.initial_branch, name),
        initial_file=ifile if ikind == "file" else None,
        branches=_get(cp, "spectrum", "branches", parse_range, d.branches, name),
        T=T,
        schedule=schedule,
        n_list=_get(cp, "summation", "n_list", parse_int_list, d.n_list, name),
        n=_get(cp, "summation", "n", _num(int), d.n, name),
        method=method,
        tail_panels=_get(cp, "grids", "tail_panels", _num(int), d.tail_panels, name),
        steps_per_unit=_get(cp, "grids", "steps_per_unit", _num(int), d.steps_per_unit, name),
        oracle_points=_get(cp, "grids", "oracle_points", _num(int), d.oracle_points, name),
        out_dir=_get(cp, "output", "dir", lambda r, w: r.strip(), d.out_dir, name),
    )
    validate(cfg, name)
    return cfg


def validate(cfg, name="<config>"):
    try:
        check_panels(cfg.tail_panels)
    except ValueError as exc:
        raise ConfigError(f"{name}: [grids] tail_panels: {exc}") from None
    if cfg.steps_per_unit < 2:
        raise ConfigError(f"{name}: [grids] steps_per_unit must be >= 2")
    if cfg.oracle_points < 4:
        raise ConfigError(f"{name}: [grids] oracle_points must be >= 4")
    if not 1.0 < cfg.T < 2.0:
        raise ConfigError(f"{name}: [horizon] T must lie in (1, 2), got {cfg.T}")
    if cfg.n < 1:
        raise ConfigError(f"{name}: [summation] n must be >= 1")
    return cfg


def load_kernel(path):
    """Kernel samples from CSV ``tau,phi`` or ``tau,re_phi,im_phi``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"kernel file not found: {path}")
    try:
        data = np.genfromtxt(path, delimiter=",", names=True)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    names = data.dtype.names or ()
    if names[:2] == ("tau", "phi"):
        vals = np.atleast_1d(data["phi"]).astype(float)
    elif names[:3] == ("tau", "re_phi", "im_phi"):
        vals = np.atleast_1d(data["re_phi"]) + 1j * np.atleast_1d(data["im_phi"])
    else:
        raise ConfigError(f"{path}: expected header 'tau,phi' or 'tau,re_phi,im_phi'")
    tau = np.atleast_1d(data["tau"])
    if not np.allclose(tau, np.linspace(-1.0, 0.0, tau.size), atol=1e-9):
        raise ConfigError(f"{path}: tau must be a uniform grid over [-1, 0]")
    try:
        return DelayKernel.sampled(vals)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
