"""Time integration of the partially hyper-dissipative systems.

Each component of u (and b) is damped in exactly two coordinate directions;
the diagonal-in-Fourier symbol makes an exact integrating factor available.
Because the per-component symbols differ, they do not commute with the
divergence-free projection, so the full system's linear group is the 3x3
per-mode exponential of the projected generator; the classical RK4 stages
then act only on the advective part.  With the nonlinearity disabled the
constraint (and hence the projection) drops and the raw componentwise
exponential is used, which is the closed-form decay oracle.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .indexsets import MhdAssignment, NsAssignment, explain_bad, is_bad_mhd, is_bad_ns
from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    _kappa_grids,
    _keep_mask,
    hermitian_symmetrize,
    phys_batch,
    project_stacked,
    spec_batch,
)

__all__ = [
    "PhysParams",
    "StepControl",
    "SimState",
    "BlowupError",
    "CflError",
    "GateRefusalError",
    "dissipation_symbol",
    "symbol_array",
    "rhs_nonlinear",
    "step_ifrk4",
    "run",
    "Stepper",
    "check_assignment_gate",
    "pressure_diagnostic",
]

GAMMA_GATED = 2.5


class BlowupError(RuntimeError):
    """Nonfinite field values; carries the time and step of detection."""

    def __init__(self, t, step):
        super().__init__(f"nonfinite field values at t={t:.6g}, step {step}")
        self.t = t
        self.step = step


class CflError(RuntimeError):
    """Advective CFL guard exceeded."""

    def __init__(self, t, step, value, guard):
        super().__init__(
            f"CFL guard exceeded at t={t:.6g}, step {step}: u_max*dt/h = {value:.3g} > {guard:.3g}"
        )
        self.t = t
        self.step = step
        self.value = value


class GateRefusalError(RuntimeError):
    """Obstructed assignment without an explicit override."""

    def __init__(self, assignment, clauses):
        names = "; ".join(str(c) for c in clauses)
        super().__init__(
            f"assignment {assignment} is obstructed ({names}); pass allow_bad to run anyway"
        )
        self.assignment = assignment
        self.clauses = clauses


@dataclass(frozen=True)
class PhysParams:
    """Viscosity, magnetic diffusivity, dissipation order.

    linear_only disables advection and the pressure constraint, leaving the
    pure componentwise decay used by the closed-form oracles.
    """

    nu: float
    eta: float | None = None
    gamma: float = GAMMA_GATED
    linear_only: bool = False

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.eta is not None and not self.eta > 0:
            raise ValueError("eta must be positive when present")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class StepControl:
    """Fixed step size, horizon, optional advective CFL ceiling."""

    dt: float
    t_end: float
    cfl_guard: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.cfl_guard is not None and not self.cfl_guard > 0:
            raise ValueError("cfl_guard must be positive")


@dataclass
class SimState:
    """Current fields plus everything needed to advance them."""

    t: float
    u: VectorField
    assignment: NsAssignment | MhdAssignment
    params: PhysParams
    b: VectorField | None = None
    step: int = 0

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def is_mhd(self) -> bool:
        return self.b is not None

    def __post_init__(self):
        if self.is_mhd:
            if not isinstance(self.assignment, MhdAssignment):
                raise ValueError("magnetic field present but assignment has no j labels")
            if self.params.eta is None:
                raise ValueError("magnetic field present but eta is unset")
        if self.b is not None and self.b.grid != self.u.grid:
            raise ValueError("u and b must share a grid")


def check_assignment_gate(assignment, params: PhysParams, allow_bad: bool = False) -> None:
    """Refuse obstructed assignments at the gated dissipation order."""
    if params.gamma != GAMMA_GATED:
        warnings.warn(
            f"index classification applies only at gamma={GAMMA_GATED}; "
            f"running ungated at gamma={params.gamma}",
            stacklevel=2,
        )
        return
    bad = (
        is_bad_mhd(assignment)
        if isinstance(assignment, MhdAssignment)
        else is_bad_ns(assignment)
    )
    if bad and not allow_bad:
        raise GateRefusalError(assignment, explain_bad(assignment))


# ---------------------------------------------------------------------------
# dissipation symbol
# ---------------------------------------------------------------------------

def dissipation_symbol(assignment, field_name: str, k: int, kappa, params: PhysParams) -> float:
    """Scalar symbol: coefficient times the two surviving |kappa_j|^gamma terms."""
    if k not in (1, 2, 3):
        raise ValueError(f"component index must be in {{1,2,3}}, got {k}")
    if field_name == "u":
        missing = assignment.i(k)
        coef = params.nu
    elif field_name == "b":
        if not isinstance(assignment, MhdAssignment):
            raise ValueError("magnetic symbol requires an MHD assignment")
        if params.eta is None:
            raise ValueError("magnetic symbol requires eta")
        missing = assignment.j(k)
        coef = params.eta
    else:
        raise ValueError(f"field must be 'u' or 'b', got {field_name!r}")
    total = 0.0
    for j in (1, 2, 3):
        if j != missing:
            total += abs(float(kappa[j - 1])) ** params.gamma
    return coef * total


def symbol_array(grid: Grid, assignment, field_name: str, k: int, params: PhysParams) -> np.ndarray:
    """Gridded symbol for component k; zero at the mean mode."""
    if field_name == "u":
        missing = assignment.i(k)
        coef = params.nu
    else:
        missing = assignment.j(k)
        coef = params.eta
    ks = _kappa_grids(grid)
    out = np.zeros(grid.shape)
    for j in (1, 2, 3):
        if j != missing:
            out = out + np.abs(ks[j - 1]) ** params.gamma
    return coef * out


def _stacked_symbols(grid, assignment, field_name, params) -> np.ndarray:
    return np.stack([symbol_array(grid, assignment, field_name, k, params) for k in (1, 2, 3)])


def _projected_exp(grid: Grid, D: np.ndarray, h: float) -> np.ndarray:
    """Per-mode 3x3 exp(-h P diag(D) P) with P the Leray projector.

    Symmetric PSD generator; eigendecomposition is exact and keeps the
    divergence-free subspace invariant.  Returns (n_modes, 3, 3).
    """
    k1, k2, k3 = _kappa_grids(grid)
    n = grid.size
    q = np.empty((n, 3))
    kk = np.sqrt(k1**2 + k2**2 + k3**2)
    kk_safe = np.where(kk == 0, 1.0, kk)
    q[:, 0] = (np.broadcast_to(k1, grid.shape) / kk_safe).reshape(n)
    q[:, 1] = (np.broadcast_to(k2, grid.shape) / kk_safe).reshape(n)
    q[:, 2] = (np.broadcast_to(k3, grid.shape) / kk_safe).reshape(n)
    q[(kk == 0).reshape(n)] = 0.0

    Dm = D.reshape(3, n).T  # (n, 3)
    P = np.zeros((n, 3, 3))
    for a in range(3):
        P[:, a, a] = 1.0
        for bx in range(3):
            P[:, a, bx] -= q[:, a] * q[:, bx]
    M = np.einsum("nab,nb,nbc->nac", P, Dm, P)
    w, V = np.linalg.eigh(M)
    return np.einsum("nab,nb,ncb->nac", V, np.exp(-h * np.clip(w, 0.0, None)), V)


def _apply_matrix(E: np.ndarray, arr: np.ndarray) -> np.ndarray:
    """Apply per-mode 3x3 matrices to a stacked (3, n1, n2, n3) field."""
    shape = arr.shape
    flat = arr.reshape(3, -1)
    out = np.einsum("nab,bn->an", E, flat)
    return out.reshape(shape)


# ---------------------------------------------------------------------------
# nonlinear right-hand side
# ---------------------------------------------------------------------------

def _grad_batch(grid, w):
    """Nine spectral partials of a stacked field, ordered (i, j) row-major."""
    k1, k2, k3 = _kappa_grids(grid)
    out = np.empty((9,) + grid.shape, dtype=complex)
    for i in range(3):
        out[3 * i + 0] = 1j * k1 * w[i]
        out[3 * i + 1] = 1j * k2 * w[i]
        out[3 * i + 2] = 1j * k3 * w[i]
    return out


def _advective_products(grid, u, b):
    """Physical-space advective products; returns (prod, u_max).

    prod rows are the du tendencies (and db tendencies for MHD) before the
    transform back; u_max is the largest pointwise field magnitude, used by
    the CFL guard.
    """
    if b is not None:
        batch = np.concatenate([u, b, _grad_batch(grid, u), _grad_batch(grid, b)])
        phys = phys_batch(grid, batch)
        up, bp = phys[0:3], phys[3:6]
        du_, db_ = phys[6:15], phys[15:24]
        umax = max(float(np.max(np.abs(up))), float(np.max(np.abs(bp))))
        prod = np.empty((6,) + grid.shape)
        for i in range(3):
            prod[i] = (
                bp[0] * db_[3 * i] + bp[1] * db_[3 * i + 1] + bp[2] * db_[3 * i + 2]
            ) - (
                up[0] * du_[3 * i] + up[1] * du_[3 * i + 1] + up[2] * du_[3 * i + 2]
            )
            prod[3 + i] = (
                bp[0] * du_[3 * i] + bp[1] * du_[3 * i + 1] + bp[2] * du_[3 * i + 2]
            ) - (
                up[0] * db_[3 * i] + up[1] * db_[3 * i + 1] + up[2] * db_[3 * i + 2]
            )
        return prod, umax
    batch = np.concatenate([u, _grad_batch(grid, u)])
    phys = phys_batch(grid, batch)
    up, du_ = phys[0:3], phys[3:12]
    umax = float(np.max(np.abs(up)))
    prod = np.empty((3,) + grid.shape)
    for i in range(3):
        prod[i] = -(
            up[0] * du_[3 * i] + up[1] * du_[3 * i + 1] + up[2] * du_[3 * i + 2]
        )
    return prod, umax


def nonlinear_arrays(grid, u, b):
    """Projected, mean-free, dealiased advective tendencies (du, db, u_max)."""
    prod, umax = _advective_products(grid, u, b)
    spec = spec_batch(grid, prod) * _keep_mask(grid)
    du = project_stacked(grid, spec[0:3])
    du[:, 0, 0, 0] = 0.0
    if b is not None:
        db = project_stacked(grid, spec[3:6])
        db[:, 0, 0, 0] = 0.0
        return du, db, umax
    return du, None, umax


class Stepper:
    """Integrating-factor RK4 for one fixed (grid, assignment, params, dt)."""

    def __init__(self, grid: Grid, assignment, params: PhysParams, dt: float, mhd: bool):
        self.grid = grid
        self.assignment = assignment
        self.params = params
        self.dt = dt
        self.mhd = mhd
        self.keep = _keep_mask(grid)
        self.last_umax = 0.0

        Du = _stacked_symbols(grid, assignment, "u", params)
        if params.linear_only:
            self.Eh_u = np.exp(-0.5 * dt * Du)
            self.Ef_u = np.exp(-dt * Du)
        else:
            self.Eh_u = _projected_exp(grid, Du, 0.5 * dt)
            self.Ef_u = _projected_exp(grid, Du, dt)
        if mhd:
            Db = _stacked_symbols(grid, assignment, "b", params)
            if params.linear_only:
                self.Eh_b = np.exp(-0.5 * dt * Db)
                self.Ef_b = np.exp(-dt * Db)
            else:
                self.Eh_b = _projected_exp(grid, Db, 0.5 * dt)
                self.Ef_b = _projected_exp(grid, Db, dt)

    # -- linear group ------------------------------------------------------

    def _E(self, E, arr):
        if self.params.linear_only:
            return E * arr
        return _apply_matrix(E, arr)

    # -- nonlinear part ----------------------------------------------------

    def rhs(self, u, b, record_umax=False):
        """Projected advective tendencies (du, db); mean modes zeroed."""
        if self.params.linear_only:
            zero = np.zeros_like(u)
            return (zero, np.zeros_like(b)) if self.mhd else (zero, None)
        du, db, umax = nonlinear_arrays(self.grid, u, b)
        if record_umax:
            self.last_umax = umax
        return du, db

    # -- one step ----------------------------------------------------------

    def step(self, u, b):
        """Advance (u, b) by dt; returns new arrays."""
        h = self.dt
        k1u, k1b = self.rhs(u, b, record_umax=True)
        if self.params.linear_only:
            un = self._E(self.Ef_u, u)
            bn = self._E(self.Ef_b, b) if self.mhd else None
            return self._cleanup(un, bn)

        u2 = self._E(self.Eh_u, u + (0.5 * h) * k1u)
        b2 = self._E(self.Eh_b, b + (0.5 * h) * k1b) if self.mhd else None
        k2u, k2b = self.rhs(u2, b2)

        Eh_u = self._E(self.Eh_u, u)
        u3 = Eh_u + (0.5 * h) * k2u
        if self.mhd:
            Eh_b = self._E(self.Eh_b, b)
            b3 = Eh_b + (0.5 * h) * k2b
        else:
            b3 = None
        k3u, k3b = self.rhs(u3, b3)

        Ef_u = self._E(self.Ef_u, u)
        u4 = Ef_u + h * self._E(self.Eh_u, k3u)
        if self.mhd:
            Ef_b = self._E(self.Ef_b, b)
            b4 = Ef_b + h * self._E(self.Eh_b, k3b)
        else:
            b4 = None
        k4u, k4b = self.rhs(u4, b4)

        un = Ef_u + (h / 6.0) * (
            self._E(self.Ef_u, k1u) + 2.0 * self._E(self.Eh_u, k2u + k3u) + k4u
        )
        bn = None
        if self.mhd:
            bn = Ef_b + (h / 6.0) * (
                self._E(self.Ef_b, k1b) + 2.0 * self._E(self.Eh_b, k2b + k3b) + k4b
            )
        return self._cleanup(un, bn)

    def _cleanup(self, u, b):
        """Re-project and Hermitian-symmetrize the accepted state."""
        if not self.params.linear_only:
            u = project_stacked(self.grid, u)
            if b is not None:
                b = project_stacked(self.grid, b)
        u = _symmetrize_stacked(self.grid, u)
        if b is not None:
            b = _symmetrize_stacked(self.grid, b)
        return u, b


def _symmetrize_stacked(grid, arr):
    out = np.empty_like(arr)
    for i in range(3):
        out[i] = hermitian_symmetrize(SpectralField(grid, arr[i])).coeffs
    return out


@lru_cache(maxsize=8)
def _cached_stepper(grid, assignment, params, dt, mhd) -> Stepper:
    return Stepper(grid, assignment, params, dt, mhd)


def rhs_nonlinear(state: SimState):
    """Projected nonlinear tendency fields (du, db); db is None without b."""
    if state.params.linear_only:
        du = VectorField.zeros(state.grid)
        db = VectorField.zeros(state.grid) if state.is_mhd else None
        return du, db
    du, db, _ = nonlinear_arrays(
        state.grid, state.u.stacked(), state.b.stacked() if state.is_mhd else None
    )
    duf = VectorField.from_stacked(state.grid, du, solenoidal=True)
    dbf = VectorField.from_stacked(state.grid, db, solenoidal=True) if db is not None else None
    return duf, dbf


def step_ifrk4(state: SimState, dt: float) -> SimState:
    """Advance one step; raises BlowupError on nonfinite values."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    stepper = _cached_stepper(state.grid, state.assignment, state.params, dt, state.is_mhd)
    u, b = stepper.step(state.u.stacked(), state.b.stacked() if state.is_mhd else None)
    t = state.t + dt
    step = state.step + 1
    if not np.isfinite(u).all() or (b is not None and not np.isfinite(b).all()):
        raise BlowupError(t, step)
    return SimState(
        t=t,
        u=VectorField.from_stacked(state.grid, u, solenoidal=True),
        b=VectorField.from_stacked(state.grid, b, solenoidal=True) if b is not None else None,
        assignment=state.assignment,
        params=state.params,
        step=step,
    )


def run(state: SimState, control: StepControl, hooks=()) -> SimState:
    """Fixed-step loop to t_end; hooks see every accepted state.

    Hooks are called once with the initial state and then after each accepted
    step.  Aborts raise BlowupError / CflError after the hooks have seen the
    last good state, so partial series survive.
    """
    stepper = Stepper(state.grid, state.assignment, state.params, control.dt, state.is_mhd)
    n_steps = max(0, round((control.t_end - state.t) / control.dt))
    shortfall = abs(state.t + n_steps * control.dt - control.t_end)
    if shortfall > 1e-6 * control.dt:
        warnings.warn(
            f"dt={control.dt} does not divide the horizon; integrating "
            f"{n_steps} steps to t={state.t + n_steps * control.dt:.6g} "
            f"instead of {control.t_end:.6g}",
            stacklevel=2,
        )
    for hook in hooks:
        hook(state)
    u = state.u.stacked()
    b = state.b.stacked() if state.is_mhd else None
    h_min = state.grid.box_length / max(state.grid.shape)
    for _ in range(n_steps):
        u, b = stepper.step(u, b)
        state.t += control.dt
        state.step += 1
        if not np.isfinite(u).all() or (b is not None and not np.isfinite(b).all()):
            raise BlowupError(state.t, state.step)
        state.u = VectorField.from_stacked(state.grid, u, solenoidal=True)
        if b is not None:
            state.b = VectorField.from_stacked(state.grid, b, solenoidal=True)
        if control.cfl_guard is not None and not state.params.linear_only:
            cfl = stepper.last_umax * control.dt / h_min
            if cfl > control.cfl_guard:
                raise CflError(state.t, state.step, cfl, control.cfl_guard)
        for hook in hooks:
            hook(state)
    return state


def pressure_diagnostic(state: SimState) -> SpectralField:
    """Reconstructed pressure (inspection only): solves the tendency's divergence.

    The projected formulation never forms p; this inverts the divergence of
    the unprojected momentum tendency, fixing the mean to zero.
    """
    grid = state.grid
    k1, k2, k3 = _kappa_grids(grid)
    u = state.u.stacked()
    b = state.b.stacked() if state.is_mhd else None

    if state.params.linear_only:
        raise ValueError("pressure diagnostic requires the nonlinear system")
    prod, _ = _advective_products(grid, u, b)
    N = spec_batch(grid, prod[0:3]) * _keep_mask(grid)
    Du = _stacked_symbols(grid, state.assignment, "u", state.params)
    F = N - Du * u
    ksq = k1**2 + k2**2 + k3**2
    ksq_safe = np.where(ksq == 0, 1.0, ksq)
    div_F = 1j * (k1 * F[0] + k2 * F[1] + k3 * F[2])
    # div(u_t) = 0 requires Delta p = div F, i.e. -|kappa|^2 p = div F
    p = -div_F / ksq_safe
    p[0, 0, 0] = 0.0
    return SpectralField(grid, p)
