"""Reversible hybrid fixed/float Verlet integration.

Positions and momenta live in Q3.60 fixed point; forces and the h*f /
(h/2)*p products are evaluated in binary64 and quantized back before the
wrapping add. Running the same step function with -h exactly undoes a
step with +h: the float products flip sign bit-exactly, the truncating
conversion is odd-symmetric, and the wrapping add is invertible. There
is deliberately no separate reverse code path.

`position_verlet_step` / `velocity_verlet_step` are the numpy-level
reference steps; `simulate` and `reverse_check` run a numba loop that
performs the identical scalar operations (and calls the identical force
kernels), so both routes produce the same bit patterns. The compiled
loop exists purely for speed on million-step runs.
"""

import hashlib
import struct
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from numba import njit

from .fixedpoint import (FixedRangeError, SCALE_F, add_wrapping, to_fixed,
                         to_real)

_ONE_BITS = np.int64(1 << 60)

# runner status codes
_OK = 0
_RANGE = 1
_NONFINITE = 2


class SimulationAbort(RuntimeError):
    """Force evaluation produced NaN/Inf; determinism would be poisoned."""

    def __init__(self, step, message):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class State:
    q: np.ndarray          # Fixed bits
    p: np.ndarray          # Fixed bits
    step: int = 0


@dataclass(frozen=True)
class Energy:
    kinetic: float
    potential: float

    @property
    def total(self):
        return self.kinetic + self.potential


@dataclass
class RecordingPolicy:
    """What simulate() keeps: hashes every hash_every steps (0 = endpoints
    only), optional real-side snapshots every snapshot_every steps."""

    hash_every: int = 1
    snapshot_every: int = 0
    include_energy: bool = False


@dataclass
class Trajectory:
    hashes: list = dc_field(default_factory=list)     # (step, digest) pairs
    snapshots: list = dc_field(default_factory=list)  # (step, q, p, H) tuples
    final: State = None


def _check_finite_force(f, step):
    if not np.all(np.isfinite(f)):
        raise SimulationAbort(step, "non-finite force output")


def position_verlet_step(state, force_field, h):
    """One drift-kick-drift step; forces evaluated once, at the half-step
    positions. All fixed-side updates are wrapping adds of quantized
    binary64 products, so the same call with -h retraces bit-for-bit."""
    if h == 0.0 or not np.isfinite(h):
        raise ValueError("time step must be finite and nonzero")
    h2 = 0.5 * h
    q = add_wrapping(state.q, to_fixed(h2 * to_real(state.p)))
    f = force_field.evaluate(to_real(q))
    _check_finite_force(f, state.step)
    p = add_wrapping(state.p, to_fixed(h * f))
    q = add_wrapping(q, to_fixed(h2 * to_real(p)))
    return State(q, p, state.step + (1 if h > 0 else -1))


def velocity_verlet_step(state, force_field, h):
    """Kick-drift-kick (leapfrog) variant, same hybrid and wrapping rules."""
    if h == 0.0 or not np.isfinite(h):
        raise ValueError("time step must be finite and nonzero")
    h2 = 0.5 * h
    f = force_field.evaluate(to_real(state.q))
    _check_finite_force(f, state.step)
    p = add_wrapping(state.p, to_fixed(h2 * f))
    q = add_wrapping(state.q, to_fixed(h * to_real(p)))
    f = force_field.evaluate(to_real(q))
    _check_finite_force(f, state.step)
    p = add_wrapping(p, to_fixed(h2 * f))
    return State(q, p, state.step + (1 if h > 0 else -1))


# ---------------------------------------------------------------------------
# compiled position Verlet loop, specialized once per force kernel

_RUNNERS = {}


def _build_runner(force):
    @njit
    def run(q, p, h, n_steps, params, q_log, p_log):
        size = q.shape[0]
        h2 = 0.5 * h
        log = q_log.shape[0] > 0
        if log:
            for i in range(size):
                q_log[0, i] = q[i]
                p_log[0, i] = p[i]
        warn_step = -1
        qr = np.empty(size)
        for k in range(n_steps):
            for i in range(size):
                v = h2 * (p[i] / SCALE_F)
                if not (abs(v) < 8.0):
                    return _RANGE, k, warn_step
                q[i] += np.int64(v * SCALE_F)
            for i in range(size):
                qr[i] = q[i] / SCALE_F
            f = force(qr, params)
            for i in range(size):
                if not np.isfinite(f[i]):
                    return _NONFINITE, k, warn_step
                v = h * f[i]
                if not (abs(v) < 8.0):
                    return _RANGE, k, warn_step
                p[i] += np.int64(v * SCALE_F)
            for i in range(size):
                v = h2 * (p[i] / SCALE_F)
                if not (abs(v) < 8.0):
                    return _RANGE, k, warn_step
                q[i] += np.int64(v * SCALE_F)
            if warn_step < 0:
                for i in range(size):
                    if q[i] > _ONE_BITS or q[i] < -_ONE_BITS:
                        warn_step = k + 1
                        break
            if log:
                for i in range(size):
                    q_log[k + 1, i] = q[i]
                    p_log[k + 1, i] = p[i]
        return _OK, n_steps, warn_step

    return run


def _runner_for(field):
    key = field.kernels[0]
    if key not in _RUNNERS:
        _RUNNERS[key] = _build_runner(key)
    return _RUNNERS[key]


def run_raw(scene, n_steps, state=None, log=False):
    """Advance |n_steps| position Verlet steps with h*sign(n_steps) using
    the compiled loop. Returns (final State, q_log, p_log, warn_step)
    where the logs hold the bit patterns of every visited state (shape
    (|n_steps|+1, n*d)) when log=True, else None."""
    if state is None:
        state = initial_state(scene)
    h = scene.h if n_steps >= 0 else -scene.h
    count = abs(n_steps)
    q = state.q.copy()
    p = state.p.copy()
    if log:
        q_log = np.empty((count + 1, q.shape[0]), dtype=np.int64)
        p_log = np.empty_like(q_log)
    else:
        q_log = np.empty((0, q.shape[0]), dtype=np.int64)
        p_log = np.empty_like(q_log)
    run = _runner_for(scene.field)
    status, done, warn_step = run(q, p, h, count, scene.field._params,
                                  q_log, p_log)
    direction = 1 if n_steps >= 0 else -1
    if status == _NONFINITE:
        raise SimulationAbort(state.step + direction * done,
                              "non-finite force output")
    if status == _RANGE:
        raise FixedRangeError(
            f"fixed-point increment left [-8, 8) at step "
            f"{state.step + direction * done}")
    if warn_step >= 0:
        warnings.warn(
            f"scene {scene.name!r}: |q| exceeded 1 at step "
            f"{state.step + direction * warn_step} (fixed range extends "
            "to 8)",
            stacklevel=2,
        )
    final = State(q, p, state.step + direction * count)
    return final, (q_log if log else None), (p_log if log else None)


def _hash_bits(q_bits, p_bits, step):
    hasher = hashlib.sha256()
    hasher.update(np.ascontiguousarray(q_bits, dtype="<i8").tobytes())
    hasher.update(np.ascontiguousarray(p_bits, dtype="<i8").tobytes())
    hasher.update(struct.pack("<q", step))
    return hasher.digest()


def state_hash(state):
    """SHA-256 over little-endian q bits, p bits, then the step index."""
    return _hash_bits(state.q, state.p, state.step)


def state_hash_hex(state):
    return state_hash(state).hex()


def energy(state, force_field):
    p = to_real(state.p)
    return Energy(
        kinetic=0.5 * float(p @ p),
        potential=force_field.potential(to_real(state.q)),
    )


def initial_state(scene):
    return State(scene.q0.copy(), scene.p0.copy(), 0)


def simulate(scene, n_steps, record=None, state=None, step_fn=None):
    """Advance |n_steps| steps with h*sign(n_steps) from the scene's
    initial state (or a given state); returns a Trajectory.

    Uses the compiled position Verlet loop unless an explicit step_fn is
    given (e.g. velocity_verlet_step), in which case it loops in Python.
    Excursions beyond |q| > 1 are flagged (the fixed format has headroom
    to 8, and wraparound past that is reversible but physically
    meaningless)."""
    if record is None:
        record = RecordingPolicy()
    if state is None:
        state = initial_state(scene)
    if step_fn is not None:
        return _simulate_slow(scene, n_steps, record, state, step_fn)

    need_log = bool(record.hash_every) or bool(record.snapshot_every)
    final, q_log, p_log = run_raw(scene, n_steps, state=state, log=need_log)
    traj = Trajectory(final=final)
    direction = 1 if n_steps >= 0 else -1
    count = abs(n_steps)
    if need_log:
        for k in range(count + 1):
            step_idx = state.step + direction * k
            if record.hash_every and k % record.hash_every == 0:
                traj.hashes.append(
                    (step_idx, _hash_bits(q_log[k], p_log[k], step_idx)))
            if record.snapshot_every and k % record.snapshot_every == 0:
                s = State(q_log[k], p_log[k], step_idx)
                H = energy(s, scene.field).total if record.include_energy \
                    else None
                traj.snapshots.append(
                    (step_idx, to_real(q_log[k]), to_real(p_log[k]), H))
    if not traj.hashes or traj.hashes[-1][0] != final.step:
        traj.hashes.append((final.step, state_hash(final)))
    if not record.hash_every and count > 0:
        traj.hashes.insert(0, (state.step, state_hash(state)))
    return traj


def _simulate_slow(scene, n_steps, record, state, step_fn):
    h = scene.h if n_steps >= 0 else -scene.h
    traj = Trajectory()
    warned = False
    start_step = state.step

    def observe(s):
        n_done = abs(s.step - start_step)
        if record.hash_every and n_done % record.hash_every == 0:
            traj.hashes.append((s.step, state_hash(s)))
        if record.snapshot_every and n_done % record.snapshot_every == 0:
            H = energy(s, scene.field).total if record.include_energy else None
            traj.snapshots.append((s.step, to_real(s.q), to_real(s.p), H))

    if record.hash_every == 0:
        traj.hashes.append((state.step, state_hash(state)))
    observe(state)
    current = state
    for _ in range(abs(n_steps)):
        current = step_fn(current, scene.field, h)
        if not warned and np.any((current.q > _ONE_BITS)
                                 | (current.q < -_ONE_BITS)):
            warnings.warn(
                f"scene {scene.name!r}: |q| exceeded 1 at step "
                f"{current.step} (fixed range extends to 8)",
                stacklevel=2,
            )
            warned = True
        observe(current)
    if not traj.hashes or traj.hashes[-1][0] != current.step:
        traj.hashes.append((current.step, state_hash(current)))
    traj.final = current
    return traj


def reverse_check(scene, n_steps, step_fn=None):
    """Run n_steps forward then n_steps backward, comparing the backward
    per-step state sequence against the forward sequence reversed
    (bitwise, which is strictly stronger than comparing hashes).

    Returns (ok, first_divergent_step_or_None, final_state)."""
    if step_fn is not None:
        return _reverse_check_slow(scene, n_steps, step_fn)
    final, q_fwd, p_fwd = run_raw(scene, n_steps, log=True)
    back, q_bwd, p_bwd = run_raw(scene, -n_steps, state=final, log=True)
    q_exp = q_fwd[::-1]
    p_exp = p_fwd[::-1]
    mismatch = np.any(q_bwd != q_exp, axis=1) | np.any(p_bwd != p_exp, axis=1)
    if np.any(mismatch):
        k = int(np.argmax(mismatch))
        return False, n_steps - k, back
    return True, None, back


def _reverse_check_slow(scene, n_steps, step_fn):
    forward = _simulate_slow(scene, n_steps, RecordingPolicy(hash_every=1),
                             initial_state(scene), step_fn)
    expected = list(reversed(forward.hashes))
    state = forward.final
    if state_hash(state) != expected[0][1]:
        return False, state.step, state
    h = -scene.h
    for step_idx, digest in expected[1:]:
        state = step_fn(state, scene.field, h)
        if state_hash(state) != digest:
            return False, step_idx, state
    return True, None, state
