"""Bitwise-reversible hybrid fixed/float Verlet integration toolkit."""

from . import adjoint, dynamics, fixedpoint, forces
from .adjoint import (AdjointState, ControlVector, Keyframe, RetraceError,
                      adjoint_reverse_step, finite_difference_gradient,
                      gradient_via_adjoint, optimize_keyframe, terminal_cost)
from .dynamics import (Energy, RecordingPolicy, SimulationAbort, State,
                       Trajectory, energy, initial_state,
                       position_verlet_step, reverse_check, run_raw,
                       simulate, state_hash, state_hash_hex,
                       velocity_verlet_step)
from .fixedpoint import (FixedRangeError, add_wrapping, format_hex,
                         hex_to_vector, parse_hex, to_fixed, to_real,
                         vector_to_hex)
from .forces import (ChainForce, ForceEvaluationError, GravityForce, Scene,
                     SceneError, SpringForce, chain_scene, load_scene,
                     make_field, ring_scene, save_scene, scene_from_dict,
                     scene_to_dict, spring_scene)

__version__ = "0.1.0"
