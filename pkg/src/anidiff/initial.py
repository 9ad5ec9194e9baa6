"""Initial-condition builders: all solenoidal, Hermitian, dealiased."""

from __future__ import annotations

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    dealias,
    from_physical,
    l2_norm,
    leray_project,
    random_field,
)

__all__ = ["taylor_green", "random_solenoidal", "single_mode_velocity"]


def taylor_green(grid: Grid, amplitude: float = 1.0) -> VectorField:
    """Classic vortex: (sin x1 cos x2 cos x3, -cos x1 sin x2 cos x3, 0)."""
    scale = 2.0 * np.pi / grid.box_length
    axes = [
        np.linspace(0.0, grid.box_length, n, endpoint=False) * scale
        for n in grid.shape
    ]
    x1 = axes[0][:, None, None]
    x2 = axes[1][None, :, None]
    x3 = axes[2][None, None, :]
    u1 = amplitude * np.sin(x1) * np.cos(x2) * np.cos(x3)
    u2 = -amplitude * np.cos(x1) * np.sin(x2) * np.cos(x3)
    return VectorField(
        dealias(from_physical(grid, u1)),
        dealias(from_physical(grid, u2)),
        SpectralField.zeros(grid),
        solenoidal=True,
    )


def random_solenoidal(
    grid: Grid,
    seed: int,
    amplitude: float = 1.0,
    sigma: float | None = None,
) -> VectorField:
    """Seeded smooth divergence-free field with L2 norm equal to amplitude."""
    rng = np.random.default_rng(seed)
    v = leray_project(
        VectorField(*(random_field(grid, rng, sigma=sigma) for _ in range(3)))
    )
    norm = l2_norm(v)
    if norm == 0.0:
        return v
    return VectorField(*[c * (amplitude / norm) for c in v.components], solenoidal=True)


def single_mode_velocity(
    grid: Grid, component: int, xi: tuple[int, int, int], amplitude: float = 1.0
) -> VectorField:
    """amplitude*cos(kappa.x) in one velocity component (conjugate mode pair).

    Not solenoidal in general; intended for the linear-decay oracles where the
    constraint is absent.
    """
    fields = [SpectralField.zeros(grid) for _ in range(3)]
    c = fields[component - 1].coeffs
    idx = tuple(int(x) % n for x, n in zip(xi, grid.shape))
    idx_conj = tuple(int(-x) % n for x, n in zip(xi, grid.shape))
    c[idx] += amplitude / 2.0
    c[idx_conj] += amplitude / 2.0
    return VectorField(*fields)
