"""Named scalar fields over R^3: the built-ins the config format exposes.

A scalar field is a callable mapping points of shape (..., 3) to complex
values of shape (...).
"""

from __future__ import annotations

import numpy as np


def constant_field(value):
    value = complex(value)

    def f(pts):
        pts = np.asarray(pts, dtype=float)
        return np.full(pts.shape[:-1], value, dtype=complex)

    return f


def linear_field(value0, gradient):
    """value0 + gradient . x."""
    value0 = complex(value0)
    gradient = np.asarray(gradient, dtype=complex)

    def f(pts):
        pts = np.asarray(pts, dtype=float)
        return value0 + pts @ gradient

    return f


def gaussian_field(base, amplitude, center, width):
    """base + amplitude * exp(-|x - center|^2 / (2 width^2))."""
    base = complex(base)
    amplitude = complex(amplitude)
    center = np.asarray(center, dtype=float)
    width = float(width)

    def f(pts):
        pts = np.asarray(pts, dtype=float)
        r2 = np.sum((pts - center) ** 2, axis=-1)
        return base + amplitude * np.exp(-r2 / (2.0 * width * width))

    return f


def as_field(value):
    """Coerce a constant into a field; callables pass through."""
    if callable(value):
        return value
    return constant_field(value)


FIELD_KINDS = ("constant", "linear", "gaussian")


def build_field(kind: str, params: dict):
    """Construct a named field from config parameters."""
    if kind == "constant":
        return constant_field(params["value"])
    if kind == "linear":
        return linear_field(params["value"], params["gradient"])
    if kind == "gaussian":
        return gaussian_field(params["base"], params["amplitude"],
                              params["center"], params["width"])
    raise ValueError(f"unknown field kind {kind!r}; expected one of {FIELD_KINDS}")
