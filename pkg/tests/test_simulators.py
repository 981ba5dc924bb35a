import math

import numpy as np
import pytest

from okpca.errors import DimensionError, SimulationDiverged
from okpca.simulators import (
    IX,
    MAJOR_FAULT_GAINS,
    MINOR_FAULT_GAINS,
    NOMINAL_GAINS,
    InitialKind,
    OdeSystem,
    PidGains,
    Q,
    QuadrotorParams,
    W,
    SimConfig,
    academic_system,
    add_noise,
    quadrotor_system,
    sample_initial,
    simulate,
    simulate_many,
)
from okpca.trajectory import Trajectory

DECAY = OdeSystem(1, lambda t, x: -x, "decay")
# scipy DOP853 at rtol 1e-12 from (1, 0)
ACADEMIC_X2_FROM_1_0 = np.array([0.218261358973986, 0.23490267576266036])

QUAD_CFG = SimConfig(dt_sample=0.2, duration=15.2, integrator_substeps=10)


class TestIntegrator:
    def test_exponential_decay(self):
        tr = simulate(DECAY, [1.0], SimConfig(0.01, 1.0))
        assert tr.states[-1, 0] == pytest.approx(math.exp(-1), abs=1e-9)

    def test_fourth_order(self):
        errs = [
            abs(simulate(DECAY, [1.0], SimConfig(h, 1.0)).states[-1, 0] - math.exp(-1))
            for h in (0.1, 0.05, 0.025)
        ]
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        assert all(14 < r < 18 for r in ratios), ratios

    def test_substeps_refine(self):
        coarse = simulate(DECAY, [1.0], SimConfig(0.1, 1.0)).states[-1, 0]
        fine = simulate(DECAY, [1.0], SimConfig(0.1, 1.0, integrator_substeps=4)).states[-1, 0]
        assert abs(fine - math.exp(-1)) < abs(coarse - math.exp(-1)) / 100

    def test_divergence_raises(self):
        blowup = OdeSystem(1, lambda t, x: x**3, "blowup")
        with np.errstate(over="ignore", invalid="ignore"), pytest.raises(SimulationDiverged, match="blowup"):
            simulate(blowup, [2.0], SimConfig(0.1, 5.0))

    def test_dimension_checked(self):
        with pytest.raises(DimensionError):
            simulate_many(academic_system(), [[1.0, 0.0, 0.0]], SimConfig(0.01, 1.0))

    def test_batch_equals_single(self):
        cfg = SimConfig(0.01, 2.0)
        ics = [[1.0, 0.0], [0.0, -1.0], [0.6, 0.8]]
        batch = simulate_many(academic_system(True), ics, cfg)
        for ic, tr in zip(ics, batch):
            np.testing.assert_array_equal(simulate(academic_system(True), ic, cfg).states, tr.states)


class TestSimConfig:
    def test_sample_count(self):
        assert SimConfig(0.01, 2.0).times.size == 201
        assert SimConfig(0.2, 15.2).times.size == 77

    def test_validation(self):
        with pytest.raises(ValueError):
            SimConfig(0.0, 1.0)
        with pytest.raises(ValueError):
            SimConfig(0.3, 1.0).num_intervals
        with pytest.raises(ValueError):
            SimConfig(0.01, 1.0, integrator_substeps=0)


class TestAcademic:
    def test_field_values(self):
        nominal, faulty = academic_system(False), academic_system(True)
        np.testing.assert_allclose(nominal(0, np.zeros(2)), [0, 0], atol=0)
        np.testing.assert_allclose(nominal(0, np.array([1.0, 0.0])), [-1, 0], atol=1e-15)
        np.testing.assert_allclose(faulty(0, np.array([0.0, 1.0])), [0, -1], atol=1e-15)

    def test_trajectory_against_reference(self):
        cfg = SimConfig(0.01, 2.0)
        tr = simulate(academic_system(), [1.0, 0.0], cfg)
        assert np.linalg.norm(tr.states[-1]) < np.linalg.norm(tr.states[0])
        np.testing.assert_allclose(tr.states[-1], ACADEMIC_X2_FROM_1_0, atol=1e-6)
        ref = simulate(academic_system(), [1.0, 0.0], SimConfig(0.01, 2.0, integrator_substeps=10))
        np.testing.assert_allclose(tr.states, ref.states, atol=1e-6)
        assert tr.num_samples == 201


class TestQuadrotor:
    def test_setpoint_is_equilibrium(self):
        for ref in (np.zeros(12), np.r_[1.0, -2.0, 0.5, np.zeros(5), 0.3, np.zeros(3)]):
            sys = quadrotor_system(NOMINAL_GAINS, setpoint=ref)
            state = np.concatenate([ref, np.zeros(3)])
            np.testing.assert_allclose(sys(0.0, state), 0.0, atol=1e-12)

    def test_nominal_converges_from_box(self):
        rng = np.random.default_rng(11)
        ics = [sample_initial(InitialKind.BOX, rng.integers(1 << 32)) for _ in range(20)]
        trajs = simulate_many(quadrotor_system(NOMINAL_GAINS), ics, QUAD_CFG)
        for tr in trajs:
            start = np.linalg.norm(tr.states[0, :3])
            assert np.linalg.norm(tr.states[-1, :3]) < 0.1 * start

    def test_minor_fault_converges(self):
        ics = [sample_initial(InitialKind.BOX, s) for s in range(20)]
        for tr in simulate_many(quadrotor_system(MINOR_FAULT_GAINS), ics, QUAD_CFG):
            assert np.linalg.norm(tr.states[-1, :3]) < 0.1 * np.linalg.norm(tr.states[0, :3])

    def test_major_fault_finite_over_horizon(self):
        # winds up against the tilt limit, but the horizon stays finite
        ics = [sample_initial(InitialKind.BOX, s) for s in range(20)]
        for tr in simulate_many(quadrotor_system(MAJOR_FAULT_GAINS), ics, QUAD_CFG):
            assert np.all(np.isfinite(tr.states))

    def test_command_limits(self):
        sys = quadrotor_system(MAJOR_FAULT_GAINS)
        far = np.zeros(15)
        far[:3] = [-50.0, 0.0, -50.0]
        # pitch command saturates at 45 degrees: q' = w^2 (pi/4) at rest
        w = QuadrotorParams().attitude_bandwidth
        assert sys(0.0, far)[Q] == pytest.approx(w**2 * math.pi / 4)
        # thrust ceiling 2 m g: vertical acceleration g at level attitude
        assert sys(0.0, far)[W] == pytest.approx(9.81)

    def test_integrators_are_hidden(self):
        tr = simulate(quadrotor_system(NOMINAL_GAINS), np.full(12, 0.2), QUAD_CFG)
        assert tr.dim == 12 and IX == 12

    def test_gain_validation(self):
        with pytest.raises(ValueError):
            PidGains(-1, 0, 1)
        with pytest.raises(ValueError):
            PidGains(0, 0, 0)

    def test_bad_setpoint(self):
        with pytest.raises(DimensionError):
            quadrotor_system(NOMINAL_GAINS, setpoint=np.zeros(3))


class TestNoise:
    def test_zero_sigma_identity(self):
        tr = simulate(academic_system(), [1.0, 0.0], SimConfig(0.01, 2.0))
        np.testing.assert_array_equal(add_noise(tr, 0.0, 1).states, tr.states)

    def test_clt_mean_and_std(self):
        n = 10**6
        tr = Trajectory(np.arange(n, dtype=float), np.zeros((n, 2)))
        noise = add_noise(tr, 0.01, 5).states
        assert np.all(np.abs(noise.mean(axis=0)) < 3 * 0.01 / 1e3)
        np.testing.assert_allclose(noise.std(axis=0), 0.01, rtol=5e-3)

    def test_deterministic_per_seed(self):
        tr = simulate(academic_system(), [0.0, 1.0], SimConfig(0.01, 1.0))
        a, b, c = add_noise(tr, 0.01, 9), add_noise(tr, 0.01, 9), add_noise(tr, 0.01, 10)
        np.testing.assert_array_equal(a.states, b.states)
        assert not np.array_equal(a.states, c.states)

    def test_negative_sigma(self):
        tr = Trajectory.constant([0.0], 1.0)
        with pytest.raises(ValueError):
            add_noise(tr, -0.1, 0)


class TestInitialConditions:
    def test_unit_circle(self):
        draws = np.array([sample_initial(InitialKind.UNIT_CIRCLE, s) for s in range(500)])
        np.testing.assert_allclose(np.linalg.norm(draws, axis=1), 1.0, atol=1e-12)

    def test_box_bounds_and_mean(self):
        seeds = np.random.SeedSequence(3).spawn(10**5)
        draws = np.array([sample_initial("box", s, side=2.0, dim=12) for s in seeds])
        assert draws.shape == (10**5, 12)
        assert np.abs(draws).max() <= 1.0
        assert np.all(np.abs(draws.mean(axis=0)) < 0.02)

    def test_same_seed_same_draw(self):
        np.testing.assert_array_equal(sample_initial("box", 4), sample_initial("box", 4))
