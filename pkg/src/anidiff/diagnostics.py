"""Quantitative identities and bounds tracked along a simulation.

The discrete energy ledger mirrors the zeroth-order identity: current energy
plus trapezoid-accumulated dissipation equals the initial energy, with the
residual converging at the time-quadrature order O(dt^2).  The twin-run probe
integrates two solutions differing by an initial perturbation and compares
their L2 distance against the Gronwall envelope built from the uniqueness
rate functions, whose overall constant is nonconstructive and therefore
fitted on the early part of the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .indexsets import MhdAssignment, uniqueness_gates
from .solver import BlowupError, SimState, StepControl, Stepper
from .spectral import (
    Grid,
    SpectralField,
    VectorField,
    _kappa_grids,
    _kappa_sq,
    solenoidal_defect,
)

__all__ = [
    "EnergyLedger",
    "RegularityReport",
    "TwinRunReport",
    "Accumulators",
    "Recorder",
    "energy_ledger",
    "regularity_report",
    "gronwall_rate_ns",
    "gronwall_rate_mhd",
    "gronwall_terms_ns",
    "gronwall_terms_mhd",
    "twin_run",
]

RATE_ORDER = 1.25  # the uniqueness analysis is tied to the gated order 5/2


# ---------------------------------------------------------------------------
# weighted component norms
# ---------------------------------------------------------------------------

def _comp_sq(c: SpectralField) -> np.ndarray:
    return c.coeffs.real**2 + c.coeffs.imag**2


def _wsum(grid: Grid, sq: np.ndarray, weight) -> float:
    return float(grid.volume * np.sum(weight * sq))


def _dir_weight(grid: Grid, axis: int, gamma: float) -> np.ndarray:
    return np.abs(_kappa_grids(grid)[axis - 1]) ** gamma


def lam_norm(c: SpectralField, axis: int, order: float = RATE_ORDER) -> float:
    """||Lambda_axis^order c||_{L2}."""
    return math.sqrt(_wsum(c.grid, _comp_sq(c), _dir_weight(c.grid, axis, 2 * order)))


def lam_grad_norm(c: SpectralField, axis: int, order: float = RATE_ORDER) -> float:
    """||Lambda_axis^order grad c||_{L2}."""
    w = _dir_weight(c.grid, axis, 2 * order) * _kappa_sq(c.grid)
    return math.sqrt(_wsum(c.grid, _comp_sq(c), w))


def grad_norm(c: SpectralField) -> float:
    return math.sqrt(_wsum(c.grid, _comp_sq(c), _kappa_sq(c.grid)))


def grad_norm_vec(v: VectorField) -> float:
    return math.sqrt(sum(grad_norm(c) ** 2 for c in v.components))


def energy(v: VectorField) -> float:
    """Squared L2 norm."""
    return sum(_wsum(v.grid, _comp_sq(c), 1.0) for c in v.components)


# ---------------------------------------------------------------------------
# ledgers and accumulators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyLedger:
    """Discrete zeroth-order identity at one instant."""

    t: float
    kinetic: float
    magnetic: float
    dissipated_u: float
    dissipated_b: float
    residual: float


@dataclass(frozen=True)
class RegularityReport:
    """Accumulated smoothing integrals and the running H1 supremum.

    integrals maps (field, component, axis) to the pair
    (int ||Lambda_axis^{g/2} f_k||^2 dt, int ||Lambda_axis^{g/2} grad f_k||^2 dt)
    over the surviving axes; extra maps gated (field, k, l) pairs to the
    measured int ||Lambda_k^{9/4} f_l||^2 dt of the uniqueness conditions.
    """

    t: float
    integrals: dict
    extra: dict
    sup_h1_u: float
    sup_h1_b: float
    over_budget: tuple

    def all_finite(self) -> bool:
        vals = [v for pair in self.integrals.values() for v in pair]
        vals += list(self.extra.values())
        return all(np.isfinite(v) for v in vals)


class Accumulators:
    """Trapezoid-in-time integrals advanced on the solver's step grid.

    Use as a run() hook; the first call snapshots the initial state.  All
    dissipation integrals carry their 2*coefficient factor so the ledger sums
    directly against the energy.
    """

    def __init__(self, budget: float | None = None):
        self.budget = budget
        self._t_last: float | None = None
        self._prev: dict | None = None
        self.initial_total: float = 0.0
        self.dissipated_u = 0.0
        self.dissipated_b = 0.0
        self.integrals: dict = {}
        self.extra: dict = {}
        self.sup_h1_u = 0.0
        self.sup_h1_b = 0.0

    # -- instantaneous rates -------------------------------------------------

    def _rates(self, state: SimState) -> dict:
        rates: dict = {}
        params = state.params
        gamma = params.gamma
        for fname, vec, coef in self._field_iter(state):
            total = 0.0
            for k in (1, 2, 3):
                c = vec.component(k)
                sq = _comp_sq(c)
                missing = state.assignment.i(k) if fname == "u" else state.assignment.j(k)
                for j in (1, 2, 3):
                    if j == missing:
                        continue
                    w = _dir_weight(state.grid, j, gamma)
                    plain = _wsum(state.grid, sq, w)
                    graded = _wsum(state.grid, sq, w * _kappa_sq(state.grid))
                    rates[(fname, k, j)] = (plain, graded)
                    total += plain
            rates[("total", fname)] = 2.0 * coef * total
        for gate in uniqueness_gates(state.assignment):
            fname, k, l = gate
            if fname == "b" and not state.is_mhd:
                continue
            vec = state.u if fname == "u" else state.b
            sq = _comp_sq(vec.component(l))
            rates[("extra", fname, k, l)] = _wsum(
                state.grid, sq, _dir_weight(state.grid, k, 4.5)
            )
        return rates

    @staticmethod
    def _field_iter(state: SimState):
        yield "u", state.u, state.params.nu
        if state.is_mhd:
            yield "b", state.b, state.params.eta

    # -- hook ----------------------------------------------------------------

    def __call__(self, state: SimState) -> None:
        rates = self._rates(state)
        self.sup_h1_u = max(self.sup_h1_u, grad_norm_vec(state.u) ** 2)
        if state.is_mhd:
            self.sup_h1_b = max(self.sup_h1_b, grad_norm_vec(state.b) ** 2)
        if self._t_last is None:
            self.initial_total = energy(state.u) + (energy(state.b) if state.is_mhd else 0.0)
        elif state.t > self._t_last:
            half_dt = 0.5 * (state.t - self._t_last)
            prev = self._prev
            self.dissipated_u += half_dt * (prev[("total", "u")] + rates[("total", "u")])
            if ("total", "b") in rates:
                self.dissipated_b += half_dt * (prev[("total", "b")] + rates[("total", "b")])
            for key, val in rates.items():
                if key[0] == "extra":
                    self.extra[key[1:]] = self.extra.get(key[1:], 0.0) + half_dt * (
                        prev[key] + val
                    )
                elif key[0] != "total":
                    old = self.integrals.get(key, (0.0, 0.0))
                    self.integrals[key] = (
                        old[0] + half_dt * (prev[key][0] + val[0]),
                        old[1] + half_dt * (prev[key][1] + val[1]),
                    )
        self._t_last = state.t
        self._prev = rates


def energy_ledger(state: SimState, acc: Accumulators) -> EnergyLedger:
    """Close the zeroth-order identity against the accumulated dissipation."""
    kinetic = energy(state.u)
    magnetic = energy(state.b) if state.is_mhd else 0.0
    total0 = acc.initial_total
    if total0 > 0.0:
        residual = abs(kinetic + magnetic + acc.dissipated_u + acc.dissipated_b - total0) / total0
    else:
        residual = 0.0
    return EnergyLedger(
        t=state.t,
        kinetic=kinetic,
        magnetic=magnetic,
        dissipated_u=acc.dissipated_u,
        dissipated_b=acc.dissipated_b,
        residual=residual,
    )


def regularity_report(state: SimState, acc: Accumulators) -> RegularityReport:
    """Smoothing integrals with per-entry budget flags."""
    over = []
    if acc.budget is not None:
        for key, pair in acc.integrals.items():
            if max(pair) > acc.budget:
                over.append(key)
    return RegularityReport(
        t=state.t,
        integrals=dict(acc.integrals),
        extra=dict(acc.extra),
        sup_h1_u=acc.sup_h1_u,
        sup_h1_b=acc.sup_h1_b,
        over_budget=tuple(over),
    )


class Recorder:
    """Collects the diagnostics series at a sample cadence.

    Wraps an Accumulators instance (always advanced every step so the time
    quadrature stays on the solver's grid) and keeps one row per sample.
    """

    def __init__(self, sample_every: int = 1, budget: float | None = None):
        self.acc = Accumulators(budget=budget)
        self.sample_every = max(1, sample_every)
        self.rows: list[dict] = []

    def __call__(self, state: SimState) -> None:
        self.acc(state)
        if state.step % self.sample_every == 0:
            self.rows.append(self.row(state))

    def row(self, state: SimState) -> dict:
        led = energy_ledger(state, self.acc)
        return {
            "t": state.t,
            "E_u": led.kinetic,
            "E_b": led.magnetic,
            "D_u": led.dissipated_u,
            "D_b": led.dissipated_b,
            "ledger_residual": led.residual,
            "div_u_max": solenoidal_defect(state.u),
            "div_b_max": solenoidal_defect(state.b) if state.is_mhd else 0.0,
            "H1_u": grad_norm_vec(state.u) ** 2,
            "H1_b": grad_norm_vec(state.b) ** 2 if state.is_mhd else 0.0,
        }


# ---------------------------------------------------------------------------
# uniqueness rate functions
# ---------------------------------------------------------------------------

def _interp_terms(vec: VectorField, missing) -> float:
    total = 0.0
    for k in (1, 2, 3):
        c = vec.component(k)
        for j in (1, 2, 3):
            if j == missing(k):
                continue
            total += lam_norm(c, j) ** (5.0 / 7.0) * lam_grad_norm(c, j) ** (5.0 / 7.0)
    return total


def _grad_product_terms(vec: VectorField, missing) -> float:
    total = 0.0
    for k in (1, 2, 3):
        c = vec.component(k)
        gn = grad_norm(c)
        for j in (1, 2, 3):
            if j == missing(k):
                continue
            total += gn * lam_grad_norm(c, j) ** (2.0 / 3.0)
    return total


def _grad_sum_weighted(vec: VectorField, missing) -> float:
    """||grad vec|| * sum over surviving axes of ||Lambda_j^{5/4} grad v_k||^{2/3}."""
    s = 0.0
    for k in (1, 2, 3):
        c = vec.component(k)
        for j in (1, 2, 3):
            if j == missing(k):
                continue
            s += lam_grad_norm(c, j) ** (2.0 / 3.0)
    return grad_norm_vec(vec) * s


def _gated_terms(vec: VectorField, assignment, fname: str) -> float:
    """Kronecker-gated contributions; active exactly on the uniqueness gates."""
    total = 0.0
    for gate_f, k, l in uniqueness_gates(assignment):
        if gate_f != fname:
            continue
        c = vec.component(l)
        total += grad_norm(c) * lam_grad_norm(c, k) ** (2.0 / 3.0)
    return total


def gronwall_terms_ns(state: SimState) -> dict:
    """Raw term groups of the velocity-only rate function (constant dropped)."""

    def missing(k):
        return state.assignment.i(k)

    u = state.u
    return {
        "interp": _interp_terms(u, missing),
        "grad": _grad_product_terms(u, missing),
        "gated": _gated_terms(u, state.assignment, "u"),
        "grad_total": grad_norm_vec(u) ** 2.5,
    }


def gronwall_rate_ns(state: SimState) -> float:
    """Velocity-only Gronwall rate evaluated on the designated second solution."""
    return sum(gronwall_terms_ns(state).values())


def gronwall_terms_mhd(state: SimState) -> dict:
    """Raw term groups of the coupled rate function (constant dropped)."""
    if not state.is_mhd:
        raise ValueError("coupled rate requires a magnetic field")
    a = state.assignment

    def miss_u(k):
        return a.i(k)

    def miss_b(k):
        return a.j(k)

    u, b = state.u, state.b
    return {
        "grad_weighted_u": _grad_sum_weighted(u, miss_u),
        "grad_weighted_b": _grad_sum_weighted(b, miss_b),
        "interp_u": _interp_terms(u, miss_u),
        "interp_b": _interp_terms(b, miss_b),
        "grad_total": grad_norm_vec(u) ** 2.5,
        "gated_u": _gated_terms(u, a, "u"),
        "gated_b": _gated_terms(b, a, "b"),
    }


def gronwall_rate_mhd(state: SimState) -> float:
    """Coupled Gronwall rate evaluated on the designated second solution."""
    return sum(gronwall_terms_mhd(state).values())


# ---------------------------------------------------------------------------
# twin run
# ---------------------------------------------------------------------------

@dataclass
class TwinRunReport:
    """Aligned series from two runs differing by an initial perturbation."""

    mode: str
    amplitude: float
    seed: int
    u0_norm: float
    t: np.ndarray
    diff_l2: np.ndarray
    rate: np.ndarray
    rate_integral: np.ndarray
    gronwall_bound: np.ndarray
    fitted_c: float
    fit_window: int
    gates: tuple
    lambda94_integrals: dict
    determinism_pass: bool
    envelope_pass: bool
    envelope_margin: float
    completed: bool
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        if self.amplitude == 0.0:
            return self.determinism_pass and self.completed
        return self.envelope_pass and self.completed


def _perturbation(grid: Grid, seed: int, norm: float) -> VectorField:
    from .initial import random_solenoidal

    return random_solenoidal(grid, seed, amplitude=norm)


def _joint_diff(s1: SimState, s2: SimState) -> float:
    d = energy(s1.u - s2.u)
    if s1.is_mhd:
        d += energy(s1.b - s2.b)
    return math.sqrt(d)


def twin_run(
    state: SimState,
    control: StepControl,
    amplitude: float,
    seed: int,
    fit_fraction: float = 0.1,
) -> TwinRunReport:
    """Integrate the reference state and a perturbed copy in lockstep.

    Run 2 is the state as given (the comparison solution whose norms feed the
    rate function); run 1 starts from u + amplitude*||u0||*(seeded solenoidal
    noise).  The envelope constant is fitted by least squares on log(diff)
    over the leading fit_fraction of the samples and validated on the rest.
    """
    from .spectral import l2_norm

    mode = "mhd" if state.is_mhd else "ns"
    rate_fn = gronwall_rate_mhd if state.is_mhd else gronwall_rate_ns
    u0_norm = l2_norm(state.u)

    s2 = SimState(
        t=state.t, u=state.u, b=state.b, assignment=state.assignment,
        params=state.params, step=state.step,
    )
    pert_norm = amplitude * u0_norm
    if amplitude != 0.0:
        pert = _perturbation(state.grid, seed, pert_norm)
        u1 = state.u + pert
    else:
        u1 = state.u
    s1 = SimState(
        t=state.t, u=u1, b=state.b, assignment=state.assignment,
        params=state.params, step=state.step,
    )

    stepper = Stepper(state.grid, state.assignment, state.params, control.dt, state.is_mhd)
    n_steps = max(0, round((control.t_end - state.t) / control.dt))

    recorder = Recorder()
    recorder(s2)
    ts = [s2.t]
    diffs = [_joint_diff(s1, s2)]
    rates = [rate_fn(s2)]
    rate_int = [0.0]
    completed = True

    u1a, b1a = s1.u.stacked(), s1.b.stacked() if state.is_mhd else None
    u2a, b2a = s2.u.stacked(), s2.b.stacked() if state.is_mhd else None
    try:
        for _ in range(n_steps):
            u1a, b1a = stepper.step(u1a, b1a)
            u2a, b2a = stepper.step(u2a, b2a)
            if not (np.isfinite(u1a).all() and np.isfinite(u2a).all()):
                raise BlowupError(s2.t + control.dt, s2.step + 1)
            s1.t = s2.t = s2.t + control.dt
            s1.step = s2.step = s2.step + 1
            s1.u = VectorField.from_stacked(state.grid, u1a, solenoidal=True)
            s2.u = VectorField.from_stacked(state.grid, u2a, solenoidal=True)
            if state.is_mhd:
                s1.b = VectorField.from_stacked(state.grid, b1a, solenoidal=True)
                s2.b = VectorField.from_stacked(state.grid, b2a, solenoidal=True)
            recorder(s2)
            r = rate_fn(s2)
            rate_int.append(rate_int[-1] + 0.5 * control.dt * (rates[-1] + r))
            rates.append(r)
            ts.append(s2.t)
            diffs.append(_joint_diff(s1, s2))
    except BlowupError:
        completed = False

    t = np.asarray(ts)
    diff = np.asarray(diffs)
    rate = np.asarray(rates)
    R = np.asarray(rate_int)

    # fit the nonconstructive constant on the early window
    n = len(t)
    window = max(2, int(math.ceil(fit_fraction * n)))
    fitted_c = 0.0
    if amplitude != 0.0 and n > 1 and diff[0] > 0.0:
        sel = slice(1, max(2, window))
        y = np.log(diff[sel] / diff[0])
        x = R[sel]
        denom = float(np.dot(x, x))
        fitted_c = float(np.dot(x, y) / denom) if denom > 0 else 0.0
    envelope = diff[0] * np.exp(fitted_c * R) if diff[0] > 0 else np.zeros_like(R)

    determinism_pass = bool(np.all(diff <= 1e-13 * u0_norm)) if amplitude == 0.0 else True
    if amplitude != 0.0 and n > window:
        margin = float(np.max(diff[window:] / np.maximum(envelope[window:], 1e-300)))
        envelope_pass = margin <= 10.0
    else:
        margin = 0.0
        envelope_pass = amplitude == 0.0 or n <= window

    gates = tuple(uniqueness_gates(state.assignment))
    key = "rate_A" if mode == "ns" else "rate_B"
    rows = recorder.rows
    for i, row in enumerate(rows):
        row[key] = float(rate[i])
        row["diff_l2"] = float(diff[i])
        row["gronwall_bound"] = float(envelope[i])

    return TwinRunReport(
        mode=mode,
        amplitude=amplitude,
        seed=seed,
        u0_norm=u0_norm,
        t=t,
        diff_l2=diff,
        rate=rate,
        rate_integral=R,
        gronwall_bound=envelope,
        fitted_c=fitted_c,
        fit_window=window,
        gates=gates,
        lambda94_integrals=dict(recorder.acc.extra),
        determinism_pass=determinism_pass,
        envelope_pass=envelope_pass,
        envelope_margin=margin,
        completed=completed,
        rows=rows,
    )
