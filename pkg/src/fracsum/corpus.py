"""Built-in test functions, all supported in the unit ball about ``center``."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .decomposition import smooth_step

CORPUS = ("bump", "smoothed-step", "oscillatory", "random-smooth")


def _radius(points: np.ndarray, center) -> np.ndarray:
    c = np.zeros(points.shape[-1]) if center is None else np.asarray(center, dtype=float)
    return np.sqrt(np.sum((points - c) ** 2, axis=-1))


def bump(points: np.ndarray, center=None) -> np.ndarray:
    r2 = _radius(points, center) ** 2
    inside = r2 < 1.0
    return np.where(inside, np.exp(-1.0 / np.where(inside, 1.0 - r2, 1.0)), 0.0)


def smoothed_step(points: np.ndarray, center=None) -> np.ndarray:
    """1 on the ball of radius 1/2, falling smoothly to 0 at radius 1."""
    return smooth_step(2.0 * _radius(points, center) - 1.0)


def oscillatory(points: np.ndarray, center=None, freq: float = 3.0) -> np.ndarray:
    c = np.zeros(points.shape[-1]) if center is None else np.asarray(center, dtype=float)
    x = points[..., 0] - c[0]
    return np.sin(2.0 * np.pi * freq * x + 0.3) * bump(points, center) * np.e


def random_smooth(seed: int = 0, modes: int = 6) -> Callable:
    """Low-pass random field times a bump envelope, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    coef = rng.standard_normal((2, 2, modes)) / (1.0 + np.arange(modes)) ** 2

    def f(points: np.ndarray, center=None) -> np.ndarray:
        c = np.zeros(points.shape[-1]) if center is None else np.asarray(center, dtype=float)
        y = points - c
        k = np.pi * (np.arange(modes) + 1.0) / 2.0
        field = 1.0
        for d in range(points.shape[-1]):
            phase = y[..., d, None] * k
            field = field + np.sum(coef[d % 2, 0] * np.cos(phase) + coef[d % 2, 1] * np.sin(phase), axis=-1)
        return field * bump(points, center) * np.e

    return f


def linear(points: np.ndarray, center=None) -> np.ndarray:
    return points[..., 0]


def get_function(name: str, seed: int = 0) -> Callable:
    """Look up a built-in function by name."""
    table = {
        "bump": bump,
        "smoothed-step": smoothed_step,
        "oscillatory": oscillatory,
        "linear": linear,
    }
    if name == "random-smooth":
        return random_smooth(seed)
    if name not in table:
        raise ValueError(f"unknown function {name!r}; choose from {sorted(list(table) + ['random-smooth'])}")
    return table[name]
