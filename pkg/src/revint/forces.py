"""Deterministic conservative force fields and scene definitions.

Every field is a pure function of the position bit patterns: identical
inputs give bitwise-identical forces, which is part of the reversibility
contract. Each field also supplies its potential (for energy
diagnostics), a transpose-Jacobian product (for the adjoint pass), and a
rough estimate of its highest linearized frequency (for the h*omega < 1
time-step guard). Forces are the negative gradient of a potential, so
the Jacobian is symmetric and jtp coincides with the Jacobian-vector
product.

The force and jtp evaluations are compiled with numba. Accumulation
loops run sequentially in ascending index order; the order is part of
the determinism contract, not an implementation detail.
"""

import json
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from numba import njit

from . import fixedpoint as fx


class ForceEvaluationError(ValueError):
    """Force field evaluated on a singular configuration."""


class SceneError(ValueError):
    """Scene file is malformed or violates a scene invariant."""


# ---------------------------------------------------------------------------
# spring: f = -q

@njit(cache=True)
def _spring_force(q, params):
    out = np.empty_like(q)
    for i in range(q.shape[0]):
        out[i] = -q[i]
    return out


@njit(cache=True)
def _spring_jtp(q, v, params):
    out = np.empty_like(v)
    for i in range(v.shape[0]):
        out[i] = -v[i]
    return out


# ---------------------------------------------------------------------------
# softened pairwise gravity (Plummer kernel)

@njit(cache=True)
def _gravity_force(q, params):
    n, d, G, eps, m = params
    f = np.zeros(n * d)
    eps2 = eps * eps
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            r2 = eps2
            for a in range(d):
                dq = q[j * d + a] - q[i * d + a]
                r2 += dq * dq
            w = G * m[i] * m[j] / (r2 * np.sqrt(r2))
            for a in range(d):
                f[i * d + a] += w * (q[j * d + a] - q[i * d + a])
    return f


@njit(cache=True)
def _gravity_jtp(q, v, params):
    # pair block M_ij = w I - 3 G m_i m_j r2^{-5/2} dq dq^T;
    # (J v)_i = sum_j M_ij (v_j - v_i); J is symmetric so jtp == jvp
    n, d, G, eps, m = params
    out = np.zeros(n * d)
    eps2 = eps * eps
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            r2 = eps2
            proj = 0.0
            for a in range(d):
                dq = q[j * d + a] - q[i * d + a]
                dv = v[j * d + a] - v[i * d + a]
                r2 += dq * dq
                proj += dq * dv
            c = G * m[i] * m[j]
            w = c / (r2 * np.sqrt(r2))
            wp = -3.0 * c / (r2 * r2 * np.sqrt(r2))
            for a in range(d):
                dq = q[j * d + a] - q[i * d + a]
                dv = v[j * d + a] - v[i * d + a]
                out[i * d + a] += w * dv + wp * proj * dq
    return out


@njit(cache=True)
def _gravity_potential(q, params):
    n, d, G, eps, m = params
    eps2 = eps * eps
    V = 0.0
    for j in range(n):
        for i in range(j):
            r2 = eps2
            for a in range(d):
                dq = q[j * d + a] - q[i * d + a]
                r2 += dq * dq
            V -= G * m[i] * m[j] / np.sqrt(r2)
    return V


# ---------------------------------------------------------------------------
# 2D chain of unit masses: stiff penalty bonds + uniform gravity

@njit(cache=True)
def _chain_force(q, params):
    n, k, L0, g, anchor = params
    f = np.zeros(2 * n)
    for b in range(n):
        ia = b - 1                      # bond 0 connects the anchor
        ib = b
        if ia < 0:
            rx = q[0] - anchor[0]
            ry = q[1] - anchor[1]
        else:
            rx = q[2 * ib] - q[2 * ia]
            ry = q[2 * ib + 1] - q[2 * ia + 1]
        length = np.sqrt(rx * rx + ry * ry)
        if length == 0.0:
            raise ForceEvaluationError("coincident bonded particles")
        s = -k * (length - L0) / length
        fx_ = s * rx
        fy_ = s * ry
        f[2 * ib] += fx_
        f[2 * ib + 1] += fy_
        if ia >= 0:
            f[2 * ia] -= fx_
            f[2 * ia + 1] -= fy_
    for i in range(n):
        f[2 * i + 1] -= g
    return f


@njit(cache=True)
def _chain_jtp(q, v, params):
    # bond Jacobian: dF_b/dr = -k[(1 - L0/L) I + (L0/L) u u^T]
    n, k, L0, g, anchor = params
    out = np.zeros(2 * n)
    for b in range(n):
        ia = b - 1
        ib = b
        if ia < 0:
            rx = q[0] - anchor[0]
            ry = q[1] - anchor[1]
            dvx = v[0]
            dvy = v[1]
        else:
            rx = q[2 * ib] - q[2 * ia]
            ry = q[2 * ib + 1] - q[2 * ia + 1]
            dvx = v[2 * ib] - v[2 * ia]
            dvy = v[2 * ib + 1] - v[2 * ia + 1]
        length = np.sqrt(rx * rx + ry * ry)
        if length == 0.0:
            raise ForceEvaluationError("coincident bonded particles")
        ux = rx / length
        uy = ry / length
        ratio = L0 / length
        udv = ux * dvx + uy * dvy
        dfx = -k * ((1.0 - ratio) * dvx + ratio * udv * ux)
        dfy = -k * ((1.0 - ratio) * dvy + ratio * udv * uy)
        out[2 * ib] += dfx
        out[2 * ib + 1] += dfy
        if ia >= 0:
            out[2 * ia] -= dfx
            out[2 * ia + 1] -= dfy
    return out


@njit(cache=True)
def _chain_potential(q, params):
    n, k, L0, g, anchor = params
    V = 0.0
    for b in range(n):
        ia = b - 1
        if ia < 0:
            rx = q[0] - anchor[0]
            ry = q[1] - anchor[1]
        else:
            rx = q[2 * b] - q[2 * ia]
            ry = q[2 * b + 1] - q[2 * ia + 1]
        length = np.sqrt(rx * rx + ry * ry)
        V += 0.5 * k * (length - L0) ** 2
    for i in range(n):
        V += g * q[2 * i + 1]
    return V


# ---------------------------------------------------------------------------


class ForceField:
    """Base interface: evaluate, jtp, potential, omega_max.

    Subclasses set `kernels` to the (force, jtp) njit pair and `_params`
    to the tuple those kernels take; the simulation runners call the
    kernels directly with the same params, so every route produces the
    same force bits.
    """

    type_name = "abstract"
    omega_max = 0.0
    kernels = None
    _params = ()

    def evaluate(self, q):
        return self.kernels[0](np.asarray(q, dtype=np.float64), self._params)

    def jtp(self, q, v):
        return self.kernels[1](np.asarray(q, dtype=np.float64),
                               np.asarray(v, dtype=np.float64), self._params)

    def potential(self, q):
        raise NotImplementedError

    def params(self):
        return {}


class SpringForce(ForceField):
    """Unit-mass unit-stiffness harmonic oscillator: f = -q."""

    type_name = "spring"
    omega_max = 1.0
    kernels = (_spring_force, _spring_jtp)

    def potential(self, q):
        q = np.asarray(q, dtype=np.float64)
        return 0.5 * float(q @ q)


class GravityForce(ForceField):
    """Softened pairwise attraction:

    f_i = sum_{j != i} G m_i m_j (q_j - q_i) / (|q_j - q_i|^2 + eps^2)^{3/2}
    """

    type_name = "gravity"
    kernels = (_gravity_force, _gravity_jtp)

    def __init__(self, n, d, G=1.0, eps=0.05, masses=None):
        if n < 1:
            raise ValueError("need at least one particle")
        if eps <= 0:
            raise ValueError("softening eps must be positive")
        self.n = n
        self.d = d
        self.G = float(G)
        self.eps = float(eps)
        if masses is None:
            masses = np.full(n, 1.0 / n)
        self.masses = np.asarray(masses, dtype=np.float64)
        if self.masses.shape != (n,):
            raise ValueError("masses length must equal particle count")
        # linearization bound at the closest softened approach
        total_mass = float(np.sum(self.masses))
        self.omega_max = float(np.sqrt(2.0 * self.G * total_mass / self.eps**3))
        self._params = (n, d, self.G, self.eps, self.masses)

    def potential(self, q):
        return float(_gravity_potential(np.asarray(q, dtype=np.float64),
                                        self._params))

    def params(self):
        return {"G": self.G, "eps": self.eps,
                "masses": [float(m) for m in self.masses]}


class ChainForce(ForceField):
    """2D chain of unit point masses joined by stiff penalty springs.

    Consecutive particles are bonded (particle 0 also bonds to a fixed
    anchor); each bond contributes f = -k(|r| - rest_length) r/|r| on
    both endpoints, and every particle feels uniform gravity (0, -g).
    Coincident bonded particles are a singular input and raise.
    """

    type_name = "chain"
    kernels = (_chain_force, _chain_jtp)

    def __init__(self, n, k=100.0, rest_length=0.2, g=1.0, anchor=(0.0, 0.0)):
        if n < 1:
            raise ValueError("need at least one particle")
        if k <= 0:
            raise ValueError("stiffness k must be positive")
        self.n = n
        self.d = 2
        self.k = float(k)
        self.rest_length = float(rest_length)
        self.g = float(g)
        self.anchor = np.asarray(anchor, dtype=np.float64)
        self.omega_max = float(np.sqrt(2.0 * self.k))
        self._params = (n, self.k, self.rest_length, self.g, self.anchor)

    def potential(self, q):
        return float(_chain_potential(np.asarray(q, dtype=np.float64),
                                      self._params))

    def params(self):
        return {
            "k": self.k,
            "rest_length": self.rest_length,
            "g": self.g,
            "anchor": [float(a) for a in self.anchor],
        }


def make_field(n, d, spec):
    """Construct a ForceField from its scene-file description."""
    kind = spec.get("type")
    params = {key: val for key, val in spec.items() if key != "type"}
    if kind == "spring":
        return SpringForce()
    if kind == "gravity":
        return GravityForce(n, d, **params)
    if kind == "chain":
        if d != 2:
            raise SceneError("chain scenes are 2D")
        return ChainForce(n, **params)
    raise SceneError(f"unknown force field type {kind!r}")


@dataclass
class Scene:
    """A force field plus initial fixed-point state and time step."""

    name: str
    n: int
    d: int
    h: float
    field: ForceField
    q0: np.ndarray
    p0: np.ndarray
    field_spec: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.q0 = np.asarray(self.q0, dtype=np.int64)
        self.p0 = np.asarray(self.p0, dtype=np.int64)
        size = self.n * self.d
        if self.q0.shape != (size,) or self.p0.shape != (size,):
            raise SceneError("q0/p0 length must equal n*d")
        if not np.isfinite(self.h) or self.h == 0.0:
            raise SceneError("time step h must be finite and nonzero")
        if abs(self.h) * self.field.omega_max >= 1.0:
            warnings.warn(
                f"scene {self.name!r}: h*omega_max = "
                f"{abs(self.h) * self.field.omega_max:.3g} >= 1, integration "
                "may be unstable",
                stacklevel=2,
            )


def scene_to_dict(scene):
    spec = dict(scene.field_spec) or {"type": scene.field.type_name,
                                      **scene.field.params()}
    return {
        "name": scene.name,
        "n": scene.n,
        "d": scene.d,
        "h": scene.h,
        "field": spec,
        "q0": fx.vector_to_hex(scene.q0),
        "p0": fx.vector_to_hex(scene.p0),
    }


def scene_from_dict(data):
    try:
        n = int(data["n"])
        d = int(data["d"])
        h = float(data["h"])
        field_spec = dict(data["field"])
        q0 = fx.hex_to_vector(data["q0"])
        p0 = fx.hex_to_vector(data["p0"])
        name = str(data.get("name", "unnamed"))
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"malformed scene: {exc}") from exc
    try:
        field = make_field(n, d, field_spec)
    except (TypeError, ValueError) as exc:
        raise SceneError(f"malformed field spec: {exc}") from exc
    return Scene(name=name, n=n, d=d, h=h, field=field,
                 q0=q0, p0=p0, field_spec=field_spec)


def save_scene(scene, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_to_dict(scene), fh, indent=2)
        fh.write("\n")


def load_scene(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SceneError(f"scene file is not valid JSON: {exc}") from exc
    return scene_from_dict(data)


def spring_scene(q0=1.0, p0=0.0, h=0.1, name="spring"):
    """Canonical 1D unit spring scene."""
    return Scene(
        name=name, n=1, d=1, h=h, field=SpringForce(),
        q0=fx.to_fixed([q0]), p0=fx.to_fixed([p0]),
        field_spec={"type": "spring"},
    )


def ring_scene(n=64, radius=1.0, G=1.0, eps=0.05, h=0.002, name="ring"):
    """Unit-radius ring of equal masses collapsing under softened gravity."""
    angles = 2.0 * np.pi * np.arange(n) / n
    q = np.stack([radius * np.cos(angles), radius * np.sin(angles)], axis=1)
    field = GravityForce(n, 2, G=G, eps=eps)
    return Scene(
        name=name, n=n, d=2, h=h, field=field,
        q0=fx.to_fixed(q.ravel()), p0=np.zeros(2 * n, dtype=np.int64),
        field_spec={"type": "gravity", "G": G, "eps": eps,
                    "masses": [float(m) for m in field.masses]},
    )


def chain_scene(n=4, k=100.0, rest_length=0.2, g=1.0, h=0.01, name="chain"):
    """Chain hanging vertically from the anchor at the origin."""
    q = np.zeros((n, 2))
    q[:, 1] = -rest_length * np.arange(1, n + 1)
    return Scene(
        name=name, n=n, d=2, h=h,
        field=ChainForce(n, k=k, rest_length=rest_length, g=g),
        q0=fx.to_fixed(q.ravel()), p0=np.zeros(2 * n, dtype=np.int64),
        field_spec={"type": "chain", "k": k, "rest_length": rest_length,
                    "g": g, "anchor": [0.0, 0.0]},
    )
