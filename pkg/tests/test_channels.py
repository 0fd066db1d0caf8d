import math

import numpy as np
import pytest
import scipy.sparse.linalg as spla
from hypothesis import given, settings
from hypothesis import strategies as st

from cvrobust.channels import (
    ChannelKind,
    ChannelParams,
    IntegratorConfig,
    Propagator,
    beam_splitter_unitary,
    dephasing_exact,
    dephasing_rhs,
    dilation_evolve,
    evolve,
    expected_energy,
    ladder,
    lindblad_dissipator,
    liouvillian,
    loss_thermal_rhs,
    mixing_angle,
    propagate,
)
from cvrobust.errors import ChannelKindError, CutoffTooSmall, NumericalHealthViolation
from cvrobust.fock import (
    DensityOperator,
    Ket,
    Mode,
    annihilation_operator,
    mean_energy,
    tensor,
    trace_distance,
)
from cvrobust.states import pnes_ket, thermal_density, two_mode_squeezed_ket

DEPH = ChannelParams(1.0, kind=ChannelKind.DEPHASING)


def random_density(dim, rng):
    X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = X @ X.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def bell(d):
    return pnes_ket([1 / math.sqrt(2)] * 2, d)


class TestDissipator:
    def test_identity_operator(self):
        rho = random_density(3, np.random.default_rng(0))
        assert np.allclose(lindblad_dissipator(np.eye(3), rho), 0)

    def test_lowering_on_one_photon(self):
        a = ladder(3)
        rho = np.diag([0, 1, 0]).astype(complex)
        assert np.allclose(lindblad_dissipator(a, rho), np.diag([2, -2, 0]))

    def test_number_operator_damps_coherences(self):
        d = 5
        n = np.diag(np.arange(d)).astype(complex)
        rho = random_density(d, np.random.default_rng(1))
        out = lindblad_dissipator(n, rho)
        i, j = np.indices((d, d))
        assert np.allclose(out, -((i - j) ** 2) * rho)

    def test_traceless_and_hermitian(self):
        rng = np.random.default_rng(2)
        O = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        out = lindblad_dissipator(O, random_density(4, rng))
        assert abs(np.trace(out)) < 1e-12
        assert np.allclose(out, out.conj().T)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            lindblad_dissipator(np.eye(3), np.eye(4))


class TestLossThermalRhs:
    @pytest.mark.parametrize("n1,n2", [(0.0, 0.0), (0.3, 0.7)])
    def test_matches_dense_formula(self, n1, n2):
        d, g = 4, 1.3
        params = ChannelParams(g, n1, n2)
        rho = random_density(d * d, np.random.default_rng(3))
        dense = np.zeros_like(rho)
        for mode, N in zip(Mode, (n1, n2)):
            a = annihilation_operator(mode, d)
            dense += 0.5 * g * N * lindblad_dissipator(a.conj().T, rho)
            dense += 0.5 * g * (N + 1) * lindblad_dissipator(a, rho)
        out = loss_thermal_rhs(DensityOperator(rho, d), params)
        assert np.allclose(out, dense, atol=1e-13)
        assert abs(np.trace(out)) < 1e-10
        assert np.max(np.abs(out - out.conj().T)) < 1e-12

    def test_vacuum_fixed_point(self):
        out = loss_thermal_rhs(Ket.basis(0, 0, 5), ChannelParams(1.0))
        assert np.count_nonzero(out) == 0

    def test_thermal_product_stationary(self):
        d = 25
        for N1, N2 in [(0.5, 0.5), (0.2, 0.5), (0.0, 0.3)]:
            rho = DensityOperator(tensor(thermal_density(N1, d), thermal_density(N2, d)), d)
            out = loss_thermal_rhs(rho, ChannelParams(1.0, N1, N2))
            assert np.max(np.abs(out)) < 1e-9

    def test_single_photon_decay(self):
        d = 3
        one = np.diag([0, 1, 0]).astype(complex)
        vac = np.diag([1, 0, 0]).astype(complex)
        out = loss_thermal_rhs(DensityOperator(tensor(one, vac), d), ChannelParams(1.0))
        assert np.allclose(out, tensor(vac - one, vac))

    def test_wrong_kind(self):
        with pytest.raises(ChannelKindError):
            loss_thermal_rhs(Ket.basis(0, 0, 3), DEPH)
        with pytest.raises(ChannelKindError):
            dephasing_rhs(Ket.basis(0, 0, 3), ChannelParams(1.0))


class TestDephasingRhs:
    def test_diagonal_state_untouched(self):
        rho = DensityOperator(np.diag(np.arange(1, 10) / 45).astype(complex), 3)
        assert np.count_nonzero(dephasing_rhs(rho, DEPH)) == 0

    def test_bell_coherence_rate(self):
        d = 3
        rho = bell(d).density()
        out = dephasing_rhs(rho, DEPH)
        i, j = 0, d + 1
        assert out[i, j] == pytest.approx(-1.0 * rho.matrix[i, j])

    def test_crossed_coherence_rate(self):
        d = 3
        amps = np.zeros(d * d)
        amps[0 * d + 2] = amps[2 * d + 0] = 1 / math.sqrt(2)
        rho = Ket(amps, d).density()
        out = dephasing_rhs(rho, ChannelParams(2.0, kind="dephasing"))
        i, j = 0 * d + 2, 2 * d + 0
        assert out[i, j] == pytest.approx(-4 * 2.0 * rho.matrix[i, j])

    def test_elementwise_formula(self):
        d = 4
        rho = DensityOperator(random_density(d * d, np.random.default_rng(4)), d)
        out = dephasing_rhs(rho, DEPH).reshape(d, d, d, d)
        n = np.arange(d)
        k = (n[:, None] - n[None, :]) ** 2
        rate = k[:, None, :, None] + k[None, :, None, :]
        assert np.allclose(out, -0.5 * rate * rho.tensor())


class TestEvolve:
    def test_zero_time(self):
        rho0 = two_mode_squeezed_ket(0.4, 16).density()
        traj = evolve(rho0, ChannelParams(1.0, 0.3, 0.3), times=[0.0])
        assert np.array_equal(traj.states[0].matrix, rho0.matrix)

    def test_energy_after_unit_time(self):
        ket = two_mode_squeezed_ket(0.5, 25)
        n0 = mean_energy(ket)
        assert n0 == pytest.approx(2 * 0.25 / 0.75)
        params = ChannelParams(1.0, 0.3, 0.3)
        rho = propagate(ket, params, 1.0)
        expected = n0 * math.exp(-1) + 0.6 * (1 - math.exp(-1))
        assert mean_energy(rho) == pytest.approx(expected, abs=1e-6)

    def test_dephasing_bell(self):
        d = 4
        rho = propagate(bell(d), DEPH, 0.5)
        assert abs(rho.matrix[0, d + 1]) == pytest.approx(0.5 * math.exp(-0.5), abs=1e-8)

    def test_samples_and_health(self):
        traj = evolve(bell(5), ChannelParams(1.0, 0.2, 0.4), times=[0, 0.05, 0.1234, 0.3])
        assert len(traj) == 4
        for h in traj.health:
            assert h.trace_error < 1e-9 and h.min_eigenvalue >= -1e-8

    def test_default_samples(self):
        traj = evolve(bell(4), ChannelParams(1.0, 0.1, 0.1), IntegratorConfig(t_max=0.2))
        assert traj.times.tolist() == pytest.approx(np.linspace(0, 0.2, 11).tolist())

    def test_rejects_unsorted_times(self):
        with pytest.raises(ValueError):
            evolve(bell(4), ChannelParams(1.0), times=[0.2, 0.1])

    def test_health_violation_on_huge_step(self):
        with pytest.raises(NumericalHealthViolation):
            evolve(two_mode_squeezed_ket(0.3, 15), ChannelParams(1.0, 1.0, 1.0), IntegratorConfig(dt=0.5), [0, 5.0])

    def test_input_not_mutated(self):
        rho0 = two_mode_squeezed_ket(0.3, 12).density()
        before = rho0.matrix.copy()
        evolve(rho0, ChannelParams(1.0, 0.2, 0.2), times=[0, 0.1])
        assert np.array_equal(before, rho0.matrix)

    def test_off_grid_sample_does_not_perturb_grid(self):
        params = ChannelParams(1.0, 0.2, 0.3)
        ket = two_mode_squeezed_ket(0.3, 12)
        a = evolve(ket, params, times=[0, 0.2]).states[-1].matrix
        b = evolve(ket, params, times=[0, 0.05432, 0.11111, 0.2]).states[-1].matrix
        assert np.array_equal(a, b)

    def test_sector_restriction_matches_full_generator(self):
        d = 8
        params = ChannelParams(1.0, 0.25, 0.1)
        ket = two_mode_squeezed_ket(0.3, d, strict=False)
        prop = Propagator(ket, params, IntegratorConfig(dt=1e-3))
        assert prop.carried < d**4 // 4
        t = 0.7
        vec = spla.expm_multiply(liouvillian(params, d) * t, ket.density().matrix.reshape(-1))
        exact = DensityOperator(vec.reshape(d * d, d * d), d)
        assert trace_distance(prop.state_at(t), exact) < 1e-10


class TestChannelProperties:
    params = ChannelParams(1.0, 0.2, 0.35)

    def test_semigroup(self):
        rho0 = two_mode_squeezed_ket(0.4, 14).density()
        cfg = IntegratorConfig(dt=1e-3)
        direct = propagate(rho0, self.params, 0.5, cfg)
        split = propagate(propagate(rho0, self.params, 0.3, cfg), self.params, 0.2, cfg)
        assert trace_distance(direct, split) < 1e-7

    @given(
        st.lists(st.floats(-1, 1), min_size=9, max_size=9).filter(lambda v: sum(x * x for x in v) > 1e-2),
        st.lists(st.floats(-1, 1), min_size=9, max_size=9),
    )
    @settings(max_examples=8, deadline=None)
    def test_energy_law_any_input(self, re, im):
        # arbitrary (non-PNES) pure state supported below level 3
        d = 14
        amps = np.zeros((d, d), dtype=complex)
        amps[:3, :3] = (np.array(re) + 1j * np.array(im)).reshape(3, 3)
        ket = Ket.from_amplitudes(amps, d)
        n0 = mean_energy(ket)
        traj = evolve(ket, self.params, IntegratorConfig(dt=2e-3), times=[0, 0.3, 0.8])
        for t, rho in traj:
            assert mean_energy(rho) == pytest.approx(expected_energy(n0, self.params, t), abs=1e-6)

    def test_iso_energy_inputs_stay_iso_energy(self):
        d = 24
        tm = two_mode_squeezed_ket(math.sqrt(1 / 3), d)
        pn = bell(d)
        assert mean_energy(tm) == pytest.approx(mean_energy(pn), abs=1e-9)
        ta = evolve(tm, self.params, times=[0, 0.4, 1.0])
        tb = evolve(pn, self.params, times=[0, 0.4, 1.0])
        for (_, ra), (_, rb) in zip(ta, tb):
            assert mean_energy(ra) == pytest.approx(mean_energy(rb), abs=1e-6)

    def test_dephasing_matches_closed_form(self):
        d = 4
        rho0 = DensityOperator(random_density(d * d, np.random.default_rng(5)), d)
        rho = propagate(rho0, DEPH, 0.5)
        exact = dephasing_exact(rho0, DEPH, 0.5)
        assert np.max(np.abs(rho.matrix - exact.matrix)) < 1e-8

    def test_step_halving(self):
        rho0 = two_mode_squeezed_ket(0.4, 14).density()
        a = propagate(rho0, self.params, 0.6, IntegratorConfig(dt=1e-3))
        b = propagate(rho0, self.params, 0.6, IntegratorConfig(dt=5e-4))
        assert trace_distance(a, b) < 1e-8

    def test_fourth_order_against_dilation(self):
        # pure loss on a state inside the cutoff: both routes are exact, so
        # the residual is RK4 truncation error alone
        d = 5
        params = ChannelParams(1.0)
        rho0 = pnes_ket([0.6, 0.0, 0.8], d).density()
        exact = dilation_evolve(rho0, params, 1.0)
        errs = [
            trace_distance(propagate(rho0, params, 1.0, IntegratorConfig(dt=h)), exact) for h in (0.1, 0.05, 0.025)
        ]
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        assert all(13 < r < 19 for r in ratios), (errs, ratios)

    def test_thermal_fixed_point(self):
        d = 25
        params = ChannelParams(1.0, 0.5, 0.3)
        rho = DensityOperator(tensor(thermal_density(0.5, d), thermal_density(0.3, d)), d)
        out = propagate(rho, params, 1.0)
        assert trace_distance(out, rho) < 1e-8


class TestMixingAngle:
    def test_zero(self):
        assert mixing_angle(1.0, 0.0) == 0.0

    def test_ln2(self):
        assert mixing_angle(2.0, math.log(2) / 2) == pytest.approx(math.pi / 4, abs=1e-15)

    @given(st.floats(0.01, 10), st.floats(0, 1))
    def test_transmissivity_identity(self, gamma, frac):
        # beyond gamma*t ~ 10, cos(zeta) near pi/2 carries relative rounding error > 1e-12
        t = frac * 10.0 / gamma
        zeta = mixing_angle(gamma, t)
        assert math.cos(zeta) ** 2 * math.exp(gamma * t) == pytest.approx(1.0, abs=1e-12)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            mixing_angle(1.0, -0.1)


class TestBeamSplitter:
    def test_zero_angle(self):
        assert np.allclose(beam_splitter_unitary(0.0, 4), np.eye(16), atol=1e-14)

    def test_swap(self):
        d = 4
        U = beam_splitter_unitary(math.pi / 2, d)
        assert np.allclose(U @ Ket.basis(1, 0, d).amplitudes, -Ket.basis(0, 1, d).amplitudes, atol=1e-12)
        assert np.allclose(U @ Ket.basis(0, 1, d).amplitudes, Ket.basis(1, 0, d).amplitudes, atol=1e-12)

    @pytest.mark.parametrize("zeta", [0.1, 0.7, 1.3])
    def test_unitary_and_number_conserving(self, zeta):
        d = 8
        U = beam_splitter_unitary(zeta, d)
        assert np.max(np.abs(U.conj().T @ U - np.eye(d * d))) < 1e-10
        n_tot = sum(annihilation_operator(m, d).conj().T @ annihilation_operator(m, d) for m in Mode)
        assert np.allclose(U @ n_tot, n_tot @ U, atol=1e-10)

    @pytest.mark.parametrize("zeta", [0.2, 0.9])
    def test_heisenberg_action(self, zeta):
        d = 10
        U = beam_splitter_unitary(zeta, d)
        a1 = annihilation_operator(Mode.ONE, d)
        a2 = annihilation_operator(Mode.TWO, d)
        lhs = U.conj().T @ a1 @ U
        rhs = a1 * math.cos(zeta) + a2 * math.sin(zeta)
        n1 = np.repeat(np.arange(d), d)
        n2 = np.tile(np.arange(d), d)
        # states whose photons cannot reach the top level of either mode
        guard = n1 + n2 <= d - 2
        assert np.max(np.abs((lhs - rhs)[:, guard])) < 1e-9


class TestDilation:
    params = ChannelParams(1.0, 0.3, 0.3)

    def test_zero_time(self):
        rho0 = two_mode_squeezed_ket(0.3, 20).density()
        assert np.allclose(dilation_evolve(rho0, self.params, 0.0).matrix, rho0.matrix, atol=1e-14)

    @pytest.mark.parametrize("t", [0.2, 0.7, 1.5])
    def test_energy_law(self, t):
        ket = two_mode_squeezed_ket(0.4, 20)
        n0 = mean_energy(ket)
        zeta = mixing_angle(self.params.gamma, t)
        expected = n0 * math.cos(zeta) ** 2 + 0.6 * math.sin(zeta) ** 2
        out = dilation_evolve(ket, self.params, t)
        assert mean_energy(out) == pytest.approx(expected, abs=1e-6)
        assert out.health().ok

    def test_agrees_with_integrator(self):
        ket = two_mode_squeezed_ket(0.3, 20)
        for t in (0.3, 1.0):
            assert trace_distance(dilation_evolve(ket, self.params, t), propagate(ket, self.params, t)) < 1e-6

    def test_asymmetric_occupations(self):
        params = ChannelParams(0.7, 0.05, 0.4)
        ket = bell(20)
        assert trace_distance(dilation_evolve(ket, params, 0.9), propagate(ket, params, 0.9)) < 1e-6

    def test_ancilla_cutoff_too_small(self):
        with pytest.raises(CutoffTooSmall):
            dilation_evolve(bell(6), ChannelParams(1.0, 0.5, 0.5), 0.3)

    def test_wrong_kind(self):
        with pytest.raises(ChannelKindError):
            dilation_evolve(bell(4), DEPH, 0.3)
