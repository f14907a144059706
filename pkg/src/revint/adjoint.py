"""Checkpoint-free gradients: retrace the primal trajectory backward with
the reversible integrator while propagating the adjoint state.

The adjoint update is the exact transpose of one forward drift-kick-drift
step's Jacobian, which works out to a kick-drift-kick scheme on the
adjoint pair (qh, ph):

    ph += h/2 * qh
    qh += h   * (df/dq)^T ph     (Jacobian at the retraced half-step q)
    ph += h/2 * qh

With the terminal seed qh = dJ/dq(T), ph = 0, the propagated ph at step 0
is dJ/dp0 directly. The plus signs (rather than a minus-sign Lagrange
multiplier convention) are pinned by the 1D-spring analytic gradient and
the finite-difference oracle. Adjoint arithmetic stays in binary64: it
needs differentiability, not reversibility.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .dynamics import State, run_raw, state_hash
from .fixedpoint import SCALE_F, add_wrapping, to_fixed, to_real


class RetraceError(RuntimeError):
    """Backward pass failed to reproduce the forward path bit-for-bit."""


@dataclass
class AdjointState:
    qh: np.ndarray
    ph: np.ndarray


@dataclass
class Keyframe:
    target_q: np.ndarray
    at_step: int

    def __post_init__(self):
        self.target_q = np.asarray(self.target_q, dtype=np.float64)
        self.at_step = int(self.at_step)


@dataclass
class ControlVector:
    p0: np.ndarray

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=np.float64)


def terminal_cost(q_final, keyframe):
    """J = 1/2 |q(T) - q*|^2 and its gradient with respect to q(T)."""
    residual = np.asarray(q_final, dtype=np.float64) - keyframe.target_q
    return 0.5 * float(residual @ residual), residual


def adjoint_reverse_step(primal, adj, force_field, h):
    """Undo one forward step of size h bitwise while advancing the adjoint.

    `primal` must be the state at the END of a forward step of size h.
    Returns (state at the start of that step, updated adjoint)."""
    hb = -h
    h2b = 0.5 * hb
    # reverse the final half-drift: lands on the forward half-step position
    q = add_wrapping(primal.q, to_fixed(h2b * to_real(primal.p)))
    q_half = to_real(q)
    # adjoint kick-drift-kick at the retraced half-step position
    ph = adj.ph + 0.5 * h * adj.qh
    qh = adj.qh + h * force_field.jtp(q_half, ph)
    ph = ph + 0.5 * h * qh
    # reverse the kick and the first half-drift
    p = add_wrapping(primal.p, to_fixed(hb * force_field.evaluate(q_half)))
    q = add_wrapping(q, to_fixed(h2b * to_real(p)))
    return State(q, p, primal.step - 1), AdjointState(qh, ph)


# ---------------------------------------------------------------------------
# compiled reverse loop: bitwise primal retrace interleaved with the
# adjoint update, specialized once per (force, jtp) kernel pair

_ADJOINT_RUNNERS = {}


def _build_adjoint_runner(force, jtp):
    @njit
    def run(q, p, qh, ph, h, n_steps, params):
        size = q.shape[0]
        hb = -h
        h2b = 0.5 * hb
        qr = np.empty(size)
        for _ in range(n_steps):
            for i in range(size):
                v = h2b * (p[i] / SCALE_F)
                if not (abs(v) < 8.0):
                    return 1
                q[i] += np.int64(v * SCALE_F)
            for i in range(size):
                qr[i] = q[i] / SCALE_F
            for i in range(size):
                ph[i] += 0.5 * h * qh[i]
            jt = jtp(qr, ph, params)
            for i in range(size):
                qh[i] += h * jt[i]
                ph[i] += 0.5 * h * qh[i]
            f = force(qr, params)
            for i in range(size):
                v = hb * f[i]
                if not (abs(v) < 8.0):
                    return 1
                p[i] += np.int64(v * SCALE_F)
            for i in range(size):
                v = h2b * (p[i] / SCALE_F)
                if not (abs(v) < 8.0):
                    return 1
                q[i] += np.int64(v * SCALE_F)
        return 0

    return run


def _adjoint_runner_for(field):
    key = field.kernels
    if key not in _ADJOINT_RUNNERS:
        _ADJOINT_RUNNERS[key] = _build_adjoint_runner(*key)
    return _ADJOINT_RUNNERS[key]


def _forward_terminal(scene, controls, keyframe):
    start = State(scene.q0.copy(), to_fixed(controls.p0), 0)
    final, _, _ = run_raw(scene, keyframe.at_step, state=start)
    return start, final


def gradient_via_adjoint(scene, controls, keyframe):
    """dJ/dp0 by reversible retrace; also returns cost and dJ/dq0.

    Internally verifies that the retraced primal state matches the
    initial state bit-for-bit; a mismatch means reversibility is broken
    and raises RetraceError."""
    n_steps = keyframe.at_step
    if n_steps < 1:
        raise ValueError("keyframe must be at step >= 1")
    start, final = _forward_terminal(scene, controls, keyframe)
    cost, seed = terminal_cost(to_real(final.q), keyframe)
    q = final.q.copy()
    p = final.p.copy()
    qh = seed.copy()
    ph = np.zeros_like(seed)
    run = _adjoint_runner_for(scene.field)
    status = run(q, p, qh, ph, scene.h, n_steps, scene.field._params)
    if status != 0:
        raise RetraceError("fixed-point range left [-8, 8) during retrace")
    retraced = State(q, p, final.step - n_steps)
    if state_hash(retraced) != state_hash(start):
        raise RetraceError(
            "primal retrace did not reproduce the initial state bitwise")
    return ph, cost, qh


def cost_of(scene, controls, keyframe):
    _, final = _forward_terminal(scene, controls, keyframe)
    cost, _ = terminal_cost(to_real(final.q), keyframe)
    return cost


def finite_difference_gradient(scene, controls, keyframe, delta=1e-5):
    """Central differences of the full fixed-point simulation's cost with
    respect to each control component; the oracle for the adjoint path."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    p0 = controls.p0
    grad = np.zeros_like(p0)
    for i in range(p0.size):
        bump = np.zeros_like(p0)
        bump[i] = delta
        J_plus = cost_of(scene, ControlVector(p0 + bump), keyframe)
        J_minus = cost_of(scene, ControlVector(p0 - bump), keyframe)
        grad[i] = (J_plus - J_minus) / (2.0 * delta)
    return grad


def optimize_keyframe(scene, keyframe, iterations=500, learning_rate=1.0,
                      controls=None, lr_growth=1.3):
    """Gradient descent on the initial momenta with backtracking: the
    learning rate is halved whenever the cost increases and regrown by
    lr_growth after each accepted step.

    Returns (best ControlVector, history of (iteration, best_cost, lr))."""
    if iterations < 1:
        raise ValueError("need at least one iteration")
    if controls is None:
        controls = ControlVector(to_real(scene.p0))
    p0 = controls.p0.copy()
    lr = float(learning_rate)
    grad, cost, _ = gradient_via_adjoint(scene, ControlVector(p0), keyframe)
    if not np.isfinite(cost):
        raise RuntimeError("non-finite cost at iteration 0")
    best_p0, best_cost = p0.copy(), cost
    history = [(0, best_cost, lr)]
    for it in range(1, iterations + 1):
        candidate = p0 - lr * grad
        new_grad, new_cost, _ = gradient_via_adjoint(
            scene, ControlVector(candidate), keyframe)
        if not np.isfinite(new_cost):
            raise RuntimeError(f"non-finite cost at iteration {it}")
        if new_cost > cost:
            lr *= 0.5
        else:
            p0, grad, cost = candidate, new_grad, new_cost
            lr *= lr_growth
            if cost < best_cost:
                best_cost = cost
                best_p0 = p0.copy()
        history.append((it, best_cost, lr))
    return ControlVector(best_p0), history
