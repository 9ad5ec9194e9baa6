"""Solver tests: symbols, linear decay oracle, order, determinism, guards."""

import numpy as np
import pytest

from anidiff.indexsets import MhdAssignment, NsAssignment
from anidiff.initial import random_solenoidal, single_mode_velocity, taylor_green
from anidiff.solver import (
    BlowupError,
    CflError,
    GateRefusalError,
    PhysParams,
    SimState,
    StepControl,
    Stepper,
    check_assignment_gate,
    dissipation_symbol,
    pressure_diagnostic,
    rhs_nonlinear,
    run,
    step_ifrk4,
    symbol_array,
)
from anidiff.spectral import (
    Grid,
    VectorField,
    derivative,
    l2_norm,
    leray_project,
    nonlinear_advection,
    solenoidal_defect,
)

GRID = Grid.cube(16)
ASSIGN = NsAssignment(3, 1, 2)
MHD_ASSIGN = MhdAssignment.from_labels(1, 1, 2, 3, 3, 3)


def ns_state(u=None, nu=0.25, **kw):
    if u is None:
        u = taylor_green(GRID)
    return SimState(t=0.0, u=u, assignment=ASSIGN, params=PhysParams(nu=nu, **kw))


def mhd_state(seed=0, nu=0.5, eta=0.5, amp=0.5):
    u = random_solenoidal(GRID, seed, amplitude=amp)
    b = random_solenoidal(GRID, seed + 1000, amplitude=amp)
    return SimState(
        t=0.0, u=u, b=b, assignment=MHD_ASSIGN, params=PhysParams(nu=nu, eta=eta)
    )


class TestDissipationSymbol:
    def test_velocity_example(self):
        a = NsAssignment(3, 1, 2)
        val = dissipation_symbol(a, "u", 1, (1.0, 2.0, 5.0), PhysParams(nu=1.0))
        assert np.isclose(val, 1.0 + 2.0**2.5)

    def test_mean_mode_undamped(self):
        val = dissipation_symbol(ASSIGN, "u", 2, (0.0, 0.0, 0.0), PhysParams(nu=1.0))
        assert val == 0.0

    def test_magnetic_example(self):
        # j_2 = 1 drops the kappa_1 term: eta * (1 + 1) = 4
        a = MhdAssignment.from_labels(3, 1, 2, 2, 1, 3)
        val = dissipation_symbol(a, "b", 2, (7.0, 1.0, 1.0), PhysParams(nu=1.0, eta=2.0))
        assert np.isclose(val, 4.0)

    def test_missing_direction_never_contributes(self):
        params = PhysParams(nu=0.7)
        for k in (1, 2, 3):
            miss = ASSIGN.i(k)
            kappa = [1.0, 2.0, 3.0]
            kappa2 = list(kappa)
            kappa2[miss - 1] = 99.0
            assert dissipation_symbol(ASSIGN, "u", k, kappa, params) == dissipation_symbol(
                ASSIGN, "u", k, kappa2, params
            )

    def test_symbol_array_matches_scalar(self):
        params = PhysParams(nu=0.3)
        arr = symbol_array(GRID, ASSIGN, "u", 1, params)
        kap = [GRID.kappa(a) for a in (1, 2, 3)]
        for idx in [(0, 0, 0), (1, 2, 3), (9, 0, 5)]:
            kv = (kap[0][idx[0]], kap[1][idx[1]], kap[2][idx[2]])
            assert np.isclose(arr[idx], dissipation_symbol(ASSIGN, "u", 1, kv, params))

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            dissipation_symbol(ASSIGN, "p", 1, (0, 0, 0), PhysParams(nu=1.0))
        with pytest.raises(ValueError):
            dissipation_symbol(ASSIGN, "u", 4, (0, 0, 0), PhysParams(nu=1.0))
        with pytest.raises(ValueError):
            dissipation_symbol(ASSIGN, "b", 1, (0, 0, 0), PhysParams(nu=1.0, eta=1.0))


class TestLinearDecay:
    def test_single_mode_closed_form(self):
        # nonlinearity disabled: amplitude decays by exp(-(1 + 2^{5/2}) t)
        xi = (1, 2, 5)
        u0 = single_mode_velocity(GRID, 1, xi, amplitude=1.0)
        state = SimState(
            t=0.0, u=u0, assignment=NsAssignment(3, 1, 2),
            params=PhysParams(nu=1.0, linear_only=True),
        )
        t_end = 0.1
        state = run(state, StepControl(dt=1e-3, t_end=t_end))
        idx = tuple(x % n for x, n in zip(xi, GRID.shape))
        expected = 0.5 * np.exp(-(1.0 + 2.0**2.5) * t_end)
        assert abs(state.u.c1.coeffs[idx] - expected) <= 1e-12 * expected

    def test_zero_field_stays_zero(self):
        state = ns_state(u=VectorField.zeros(GRID))
        state = run(state, StepControl(dt=1e-2, t_end=0.05))
        assert all(np.all(c.coeffs == 0) for c in state.u.components)


class TestRhs:
    def test_zero_tendency(self):
        state = ns_state(u=VectorField.zeros(GRID))
        du, db = rhs_nonlinear(state)
        assert db is None
        assert all(np.all(c.coeffs == 0) for c in du.components)

    def test_matches_operator_composition(self):
        state = ns_state(u=random_solenoidal(GRID, 3))
        du, _ = rhs_nonlinear(state)
        ref = leray_project(nonlinear_advection(state.u, state.u) * (-1.0))
        for c_got, c_ref in zip(du.components, ref.components):
            ref_c = c_ref.coeffs.copy()
            ref_c[0, 0, 0] = 0.0
            assert np.allclose(c_got.coeffs, ref_c, atol=1e-15)

    def test_mhd_matches_operator_composition(self):
        state = mhd_state(seed=4)
        du, db = rhs_nonlinear(state)
        ref_du = leray_project(
            nonlinear_advection(state.b, state.b) - nonlinear_advection(state.u, state.u)
        )
        ref_db = leray_project(
            nonlinear_advection(state.b, state.u) - nonlinear_advection(state.u, state.b)
        )
        for got, ref in ((du, ref_du), (db, ref_db)):
            for c_got, c_ref in zip(got.components, ref.components):
                ref_c = c_ref.coeffs.copy()
                ref_c[0, 0, 0] = 0.0
                assert np.allclose(c_got.coeffs, ref_c, atol=5e-15)

    def test_tendencies_solenoidal_and_mean_free(self):
        state = mhd_state(seed=5)
        du, db = rhs_nonlinear(state)
        assert solenoidal_defect(du) <= 1e-12
        assert solenoidal_defect(db) <= 1e-12
        for c in du.components + db.components:
            assert c.coeffs[0, 0, 0] == 0.0

    def test_b_zero_reduces_to_ns_bitwise(self):
        u0 = random_solenoidal(GRID, 6)
        ns = SimState(t=0.0, u=u0, assignment=MHD_ASSIGN.ns, params=PhysParams(nu=0.4))
        mhd = SimState(
            t=0.0, u=u0, b=VectorField.zeros(GRID), assignment=MHD_ASSIGN,
            params=PhysParams(nu=0.4, eta=0.4),
        )
        ns_f = run(ns, StepControl(dt=2e-3, t_end=0.02))
        mhd_f = run(mhd, StepControl(dt=2e-3, t_end=0.02))
        for a, b in zip(ns_f.u.components, mhd_f.u.components):
            assert np.array_equal(a.coeffs, b.coeffs)
        assert all(np.all(c.coeffs == 0) for c in mhd_f.b.components)


class TestStepping:
    def test_order_four(self):
        def final(dt):
            state = ns_state()
            return run(state, StepControl(dt=dt, t_end=0.1)).u.stacked()

        u1, u2, u3 = final(4e-3), final(2e-3), final(1e-3)
        factor = np.linalg.norm(u1 - u2) / np.linalg.norm(u2 - u3)
        assert 12.0 <= factor <= 20.0

    def test_divergence_every_step(self):
        defects = []
        state = mhd_state(seed=7)
        run(
            state,
            StepControl(dt=2e-3, t_end=0.05),
            hooks=[lambda s: defects.append(
                max(solenoidal_defect(s.u), solenoidal_defect(s.b))
            )],
        )
        assert len(defects) == 26
        assert max(defects) <= 1e-10

    def test_mean_modes_conserved_exactly(self):
        u = random_solenoidal(GRID, 8)
        u.c2.coeffs[0, 0, 0] = 0.75  # nonzero mean velocity
        state = ns_state(u=u)
        state = run(state, StepControl(dt=2e-3, t_end=0.02))
        assert state.u.c2.coeffs[0, 0, 0] == 0.75
        assert state.u.c1.coeffs[0, 0, 0] == 0.0

    def test_determinism(self):
        a = run(ns_state(), StepControl(dt=2e-3, t_end=0.02)).u.stacked()
        b = run(ns_state(), StepControl(dt=2e-3, t_end=0.02)).u.stacked()
        assert np.array_equal(a, b)

    def test_t_end_zero_returns_unchanged(self):
        state = ns_state()
        before = state.u.stacked()
        state = run(state, StepControl(dt=1e-3, t_end=0.0))
        assert state.step == 0
        assert np.array_equal(state.u.stacked(), before)

    def test_restart_reproduces_uninterrupted_bitwise(self):
        full = run(ns_state(), StepControl(dt=2e-3, t_end=0.04))
        half = run(ns_state(), StepControl(dt=2e-3, t_end=0.02))
        resumed = run(half, StepControl(dt=2e-3, t_end=0.04))
        assert resumed.t == full.t
        assert np.array_equal(resumed.u.stacked(), full.u.stacked())

    def test_step_ifrk4_single_step(self):
        state = ns_state()
        out = step_ifrk4(state, 1e-3)
        assert out.step == 1
        assert np.isclose(out.t, 1e-3)
        with pytest.raises(ValueError):
            step_ifrk4(state, -1.0)

    def test_hermitian_preserved(self):
        from anidiff.spectral import is_hermitian

        state = run(ns_state(), StepControl(dt=2e-3, t_end=0.02))
        assert all(is_hermitian(c) for c in state.u.components)

    def test_nondivisible_horizon_warns(self):
        with pytest.warns(UserWarning, match="does not divide"):
            run(ns_state(), StepControl(dt=1.6e-2, t_end=0.1))


class TestGuards:
    def test_blowup_detected(self):
        # enormous amplitude with a large explicit step drives overflow
        u = random_solenoidal(GRID, 9, amplitude=1e6)
        state = SimState(t=0.0, u=u, assignment=ASSIGN, params=PhysParams(nu=1e-6))
        with np.errstate(all="ignore"), pytest.raises(BlowupError) as exc_info:
            run(state, StepControl(dt=0.5, t_end=5.0))
        assert exc_info.value.step >= 1

    def test_cfl_guard_aborts(self):
        state = ns_state(u=random_solenoidal(GRID, 10, amplitude=10.0))
        with pytest.raises(CflError) as exc_info:
            run(state, StepControl(dt=0.05, t_end=0.5, cfl_guard=1e-3))
        assert exc_info.value.step == 1

    def test_gate_refuses_bad_assignment(self):
        with pytest.raises(GateRefusalError):
            check_assignment_gate(NsAssignment(3, 3, 3), PhysParams(nu=1.0))

    def test_gate_allows_override(self):
        check_assignment_gate(NsAssignment(3, 3, 3), PhysParams(nu=1.0), allow_bad=True)

    def test_gate_passes_good(self):
        check_assignment_gate(ASSIGN, PhysParams(nu=1.0))
        check_assignment_gate(MHD_ASSIGN, PhysParams(nu=1.0, eta=1.0))

    def test_gate_warns_off_gamma(self):
        with pytest.warns(UserWarning, match="ungated"):
            check_assignment_gate(NsAssignment(3, 3, 3), PhysParams(nu=1.0, gamma=2.0))


class TestStateValidation:
    def test_mhd_requires_eta_and_labels(self):
        u = taylor_green(GRID)
        b = VectorField.zeros(GRID)
        with pytest.raises(ValueError):
            SimState(t=0.0, u=u, b=b, assignment=ASSIGN, params=PhysParams(nu=1.0, eta=1.0))
        with pytest.raises(ValueError):
            SimState(t=0.0, u=u, b=b, assignment=MHD_ASSIGN, params=PhysParams(nu=1.0))


class TestPressure:
    def test_full_tendency_divergence_free(self):
        state = ns_state(u=random_solenoidal(GRID, 11))
        p = pressure_diagnostic(state)
        # unprojected tendency minus the reconstructed pressure gradient must
        # be divergence-free
        from anidiff.solver import _advective_products, _stacked_symbols
        from anidiff.spectral import _keep_mask, spec_batch

        prod, _ = _advective_products(GRID, state.u.stacked(), None)
        N = spec_batch(GRID, prod) * _keep_mask(GRID)
        Du = _stacked_symbols(GRID, ASSIGN, "u", state.params)
        F = N - Du * state.u.stacked()
        grad_p = np.stack([derivative(p, a).coeffs for a in (1, 2, 3)])
        tendency = VectorField.from_stacked(GRID, F - grad_p)
        assert solenoidal_defect(tendency) <= 1e-10
