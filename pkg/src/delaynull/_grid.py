"""Uniform-grid helpers shared by the state, kernel and simulator code."""

import warnings

import numpy as np


def check_panels(panels):
    panels = int(panels)
    if panels < 2 or panels % 2:
        raise ValueError(f"panel count must be even and >= 2, got {panels}")
    return panels


def simpson_weights(panels, step):
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (step / 3.0)


def trapezoid_weights(panels, step):
    w = np.full(panels + 1, step)
    w[0] = w[-1] = 0.5 * step
    return w


def steps_for(duration, per_unit, what="duration"):
    """Number of grid steps covering ``duration`` at ``per_unit`` steps per unit time."""
    k = duration * per_unit
    n = int(round(k))
    if abs(k - n) > 1e-9 * max(1.0, abs(k)):
        raise ValueError(
            f"{what} {duration!r} is not a multiple of the grid step 1/{per_unit}")
    return n


def resample(values, src_panels, dst_panels, span=1.0, what="samples"):
    """Move uniform samples on ``[a, a + span]`` to another uniform grid.

    Exact subsampling when the source grid refines the target; otherwise
    linear interpolation with a warning.
    """
    values = np.asarray(values)
    if src_panels == dst_panels:
        return values.copy()
    if src_panels % dst_panels == 0:
        return values[:: src_panels // dst_panels].copy()
    warnings.warn(
        f"resampling {what} from {src_panels} to {dst_panels} panels by linear "
        "interpolation", stacklevel=3)
    src = np.linspace(0.0, span, src_panels + 1)
    dst = np.linspace(0.0, span, dst_panels + 1)
    if np.iscomplexobj(values):
        return np.interp(dst, src, values.real) + 1j * np.interp(dst, src, values.imag)
    return np.interp(dst, src, values)


def fmt(x):
    """17-significant-digit text for CSV output."""
    return format(float(x), ".17g")
