import math

import numpy as np
import pytest

import revint as rv
from revint import fixedpoint as fx
from revint.dynamics import run_raw
from revint.forces import GravityForce, SpringForce

GOLDEN_SPRING_100 = \
    "32a0d03e6b7725ea604854206f7abb8002a119108ea800d338613e1e014af107"


class NaNField(rv.forces.ForceField):
    type_name = "nan"

    def evaluate(self, q):
        return np.full_like(np.asarray(q, dtype=np.float64), np.nan)

    def potential(self, q):
        return float("nan")


class TestSteps:
    def test_position_verlet_hand_values(self, spring):
        s = rv.position_verlet_step(rv.initial_state(spring), spring.field, 0.1)
        # q_half=1, p1 = 0 + 0.1*(-1), q1 = 1 + 0.05*(-0.1)
        assert rv.to_real(s.q)[0] == pytest.approx(0.995, abs=1e-15)
        assert rv.to_real(s.p)[0] == pytest.approx(-0.1, abs=1e-15)
        assert s.step == 1

    def test_velocity_verlet_hand_values(self, spring):
        s = rv.velocity_verlet_step(rv.initial_state(spring), spring.field, 0.1)
        # p_half=-0.05, q1=0.995, p1=-0.05+0.05*(-0.995)
        assert rv.to_real(s.q)[0] == pytest.approx(0.995, abs=1e-15)
        assert rv.to_real(s.p)[0] == pytest.approx(-0.09975, abs=1e-15)

    def test_zero_force_zero_momentum_is_fixed_point(self):
        scene = rv.spring_scene(q0=0.0, p0=0.0)
        s0 = rv.initial_state(scene)
        s1 = rv.position_verlet_step(s0, scene.field, 0.1)
        assert np.array_equal(s1.q, s0.q)
        assert np.array_equal(s1.p, s0.p)

    @pytest.mark.parametrize("step_fn", [rv.position_verlet_step,
                                         rv.velocity_verlet_step])
    def test_step_then_negated_step_is_identity(self, step_fn, rng):
        field = GravityForce(4, 2)
        for _ in range(25):
            q = fx.to_fixed(rng.uniform(-1, 1, size=8))
            p = fx.to_fixed(rng.uniform(-1, 1, size=8))
            s0 = rv.State(q, p, 0)
            h = float(rng.uniform(0.001, 0.05))
            s1 = step_fn(s0, field, h)
            s2 = step_fn(s1, field, -h)
            assert np.array_equal(s2.q, s0.q)
            assert np.array_equal(s2.p, s0.p)
            assert s2.step == 0

    def test_reversibility_survives_wraparound(self):
        # drift past +8 wraps; the backward step must still retrace exactly
        field = SpringForce()
        s0 = rv.State(fx.to_fixed([7.9]), fx.to_fixed([7.5]), 0)
        half_drift = fx.add_wrapping(s0.q, fx.to_fixed(0.1 * fx.to_real(s0.p)))
        assert rv.to_real(half_drift)[0] < 0  # 7.9 + 0.75 wraps negative
        s1 = rv.position_verlet_step(s0, field, 0.2)
        s2 = rv.position_verlet_step(s1, field, -0.2)
        assert np.array_equal(s2.q, s0.q)
        assert np.array_equal(s2.p, s0.p)

    def test_zero_time_step_rejected(self, spring):
        with pytest.raises(ValueError):
            rv.position_verlet_step(rv.initial_state(spring), spring.field, 0.0)
        with pytest.raises(ValueError):
            rv.velocity_verlet_step(rv.initial_state(spring), spring.field, 0.0)

    def test_nan_force_aborts_with_step_index(self, spring):
        state = rv.State(spring.q0, spring.p0, 7)
        with pytest.raises(rv.SimulationAbort) as info:
            rv.position_verlet_step(state, NaNField(), 0.1)
        assert info.value.step == 7


class TestCompiledLoop:
    @pytest.mark.parametrize("make_scene, n", [
        (rv.spring_scene, 137),
        (lambda: rv.ring_scene(n=8), 57),
        (lambda: rv.chain_scene(n=3), 57),
    ], ids=["spring", "ring", "chain"])
    def test_matches_reference_step_bitwise(self, make_scene, n):
        scene = make_scene()
        state = rv.initial_state(scene)
        for _ in range(n):
            state = rv.position_verlet_step(state, scene.field, scene.h)
        fast, _, _ = run_raw(scene, n)
        assert np.array_equal(fast.q, state.q)
        assert np.array_equal(fast.p, state.p)
        assert fast.step == state.step

    def test_log_rows_are_the_visited_states(self, spring):
        final, q_log, p_log = run_raw(spring, 10, log=True)
        state = rv.initial_state(spring)
        for k in range(11):
            assert np.array_equal(q_log[k], state.q)
            assert np.array_equal(p_log[k], state.p)
            if k < 10:
                state = rv.position_verlet_step(state, spring.field, spring.h)

    def test_nonfinite_force_aborts(self):
        scene = rv.ring_scene(n=4, G=float("inf"), h=1e-9)
        with pytest.raises(rv.SimulationAbort):
            run_raw(scene, 100)

    def test_excursion_warning(self):
        scene = rv.spring_scene(q0=0.99, p0=0.8)
        with pytest.warns(UserWarning, match="exceeded 1"):
            run_raw(scene, 50)


class TestSimulate:
    def test_zero_steps_single_hash(self, spring):
        traj = rv.simulate(spring, 0)
        assert len(traj.hashes) == 1
        assert traj.hashes[0][0] == 0

    def test_hash_record_count(self, small_ring):
        traj = rv.simulate(small_ring, 200)
        assert len(traj.hashes) == 201

    def test_snapshot_policy(self, spring):
        record = rv.RecordingPolicy(hash_every=1, snapshot_every=10,
                                    include_energy=True)
        traj = rv.simulate(spring, 100, record)
        assert len(traj.snapshots) == 11
        step0, q, p, H = traj.snapshots[0]
        assert step0 == 0
        assert q[0] == 1.0
        assert H == pytest.approx(0.5, abs=1e-12)

    def test_backward_steps_decrement_index(self, spring):
        traj = rv.simulate(spring, -5)
        assert traj.final.step == -5

    def test_spring_tracks_analytic_rotation(self):
        scene = rv.spring_scene(h=0.01)
        traj = rv.simulate(scene, 628, rv.RecordingPolicy(hash_every=0))
        assert rv.to_real(traj.final.q)[0] == pytest.approx(
            math.cos(6.28), abs=1e-3)

    def test_slow_and_fast_paths_agree(self, spring):
        fast = rv.simulate(spring, 50)
        slow = rv.simulate(spring, 50, step_fn=rv.position_verlet_step)
        assert fast.hashes == slow.hashes


class TestStateHash:
    def test_equal_states_equal_digests(self, spring):
        a = rv.initial_state(spring)
        b = rv.initial_state(spring)
        assert rv.state_hash(a) == rv.state_hash(b)

    def test_single_bit_flip_changes_digest(self, spring):
        a = rv.initial_state(spring)
        p = a.p.copy()
        p[0] ^= np.int64(1)
        b = rv.State(a.q, p, a.step)
        assert rv.state_hash(a) != rv.state_hash(b)

    def test_step_index_is_hashed(self, spring):
        a = rv.initial_state(spring)
        b = rv.State(a.q, a.p, 1)
        assert rv.state_hash(a) != rv.state_hash(b)

    def test_golden_digest_canonical_spring_100_steps(self, spring):
        final, _, _ = run_raw(spring, 100)
        assert rv.state_hash_hex(final) == GOLDEN_SPRING_100


class TestEnergy:
    def test_spring_initial_energy(self, spring):
        assert rv.energy(rv.initial_state(spring),
                         spring.field).total == pytest.approx(0.5)

    def test_zero_state_zero_energy(self):
        scene = rv.spring_scene(q0=0.0, p0=0.0)
        e = rv.energy(rv.initial_state(scene), scene.field)
        assert e.kinetic == 0.0
        assert e.potential == 0.0
        assert e.total == 0.0


class TestReverseCheck:
    def test_spring_round_trip(self, spring):
        ok, divergent, final = rv.reverse_check(spring, 1000)
        assert ok and divergent is None
        assert rv.state_hash(final) == rv.state_hash(rv.initial_state(spring))

    def test_ring_round_trip(self, small_ring):
        ok, _, final = rv.reverse_check(small_ring, 1000)
        assert ok
        assert final.step == 0

    def test_velocity_verlet_round_trip(self, spring):
        ok, _, _ = rv.reverse_check(spring, 500,
                                    step_fn=rv.velocity_verlet_step)
        assert ok

    def test_floor_rounding_build_fails_audit(self, spring):
        # negative control: floor is not odd-symmetric, so a build that
        # quantizes with floor must be caught with a finite divergence step
        def floor_to_fixed(r):
            return np.floor(np.asarray(r, np.float64) * fx.SCALE_F).astype(
                np.int64)

        def floor_step(state, field, h):
            h2 = 0.5 * h
            q = fx.add_wrapping(state.q, floor_to_fixed(h2 * fx.to_real(state.p)))
            f = field.evaluate(fx.to_real(q))
            p = fx.add_wrapping(state.p, floor_to_fixed(h * f))
            q = fx.add_wrapping(q, floor_to_fixed(h2 * fx.to_real(p)))
            return rv.State(q, p, state.step + (1 if h > 0 else -1))

        ok, divergent, _ = rv.reverse_check(spring, 200, step_fn=floor_step)
        assert not ok
        assert divergent is not None
