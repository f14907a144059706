"""Command-line entry point.

Subcommands: simulate, reverse-check, gradcheck, optimize, serve.

Exit codes: 0 success, 1 property violation (reversibility or gradient
tolerance failure), 2 usage or file parse error, 3 numeric abort
(NaN force or fixed-point range overflow). Output files contain no
timestamps or machine identifiers, so identical invocations produce
byte-identical files.
"""

import argparse
import json
import sys

import numpy as np

from . import adjoint as adj
from . import fixedpoint as fx
from .dynamics import SimulationAbort, State, _hash_bits, energy, run_raw
from .fixedpoint import FixedRangeError
from .forces import SceneError, load_scene

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _load_scene_or_exit(path):
    try:
        return load_scene(path)
    except (OSError, SceneError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _load_keyframe_or_exit(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        target = data["target_q"]
        if target and isinstance(target[0], str):
            target_q = fx.to_real(fx.hex_to_vector(target))
        else:
            target_q = np.asarray(target, dtype=np.float64)
        return adj.Keyframe(target_q=target_q, at_step=int(data["at_step"]))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: bad keyframe file: {exc}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def cmd_simulate(args):
    scene = _load_scene_or_exit(args.scene)
    try:
        final, q_log, p_log = run_raw(scene, args.steps, log=True)
    except SimulationAbort as exc:
        print(f"error: simulation aborted: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FixedRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    direction = 1 if args.steps >= 0 else -1
    k_every = args.snapshot_every
    with open(args.out, "w", encoding="utf-8") as fh:
        for k in range(abs(args.steps) + 1):
            step = direction * k
            rec = {"step": step,
                   "hash": _hash_bits(q_log[k], p_log[k], step).hex()}
            if k_every and k % k_every == 0:
                rec["q"] = fx.vector_to_hex(q_log[k])
                rec["p"] = fx.vector_to_hex(p_log[k])
                rec["H"] = energy(State(q_log[k], p_log[k], step),
                                  scene.field).total
            fh.write(json.dumps(rec) + "\n")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            cols = ",".join(f"q{i}" for i in range(scene.n * scene.d))
            fh.write(f"step,{cols}\n")
            for k in range(abs(args.steps) + 1):
                vals = ",".join(repr(float(v)) for v in fx.to_real(q_log[k]))
                fh.write(f"{direction * k},{vals}\n")
    return EXIT_OK


def cmd_reverse_check(args):
    from .dynamics import reverse_check

    scene = _load_scene_or_exit(args.scene)
    try:
        ok, divergent, final = reverse_check(scene, args.steps)
    except SimulationAbort as exc:
        print(f"error: simulation aborted: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FixedRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    from .dynamics import state_hash_hex
    if ok:
        print(f"PASS {state_hash_hex(final)}")
        return EXIT_OK
    print(f"FAIL first divergent step {divergent}")
    return EXIT_VIOLATION


def _gradcheck_report(scene, keyframe, controls, delta):
    grad_adj, _, _ = adj.gradient_via_adjoint(scene, controls, keyframe)
    grad_fd = adj.finite_difference_gradient(scene, controls, keyframe,
                                             delta=delta)
    scale = np.maximum(np.abs(grad_fd), np.abs(grad_adj))
    rel = np.where(scale > 0, np.abs(grad_adj - grad_fd)
                   / np.where(scale > 0, scale, 1.0), 0.0)
    return {
        "adjoint": [float(g) for g in grad_adj],
        "fd": [float(g) for g in grad_fd],
        "rel_err": [float(r) for r in rel],
        "max_rel_err": float(np.max(rel)) if rel.size else 0.0,
    }


def cmd_gradcheck(args):
    scene = _load_scene_or_exit(args.scene)
    keyframe = _load_keyframe_or_exit(args.keyframe)
    controls = adj.ControlVector(fx.to_real(scene.p0))
    try:
        report = _gradcheck_report(scene, keyframe, controls, args.delta)
    except (SimulationAbort, FixedRangeError, adj.RetraceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    if report["max_rel_err"] >= args.tolerance:
        print(f"FAIL max_rel_err {report['max_rel_err']:.3e} >= "
              f"{args.tolerance:.3e}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_optimize(args):
    scene = _load_scene_or_exit(args.scene)
    keyframe = _load_keyframe_or_exit(args.keyframe)
    try:
        best, history = adj.optimize_keyframe(
            scene, keyframe, iterations=args.iterations,
            learning_rate=args.learning_rate)
    except (SimulationAbort, FixedRangeError, adj.RetraceError,
            RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    result = {
        "p0": [float(v) for v in best.p0],
        "p0_hex": fx.vector_to_hex(fx.to_fixed(best.p0)),
        "initial_cost": history[0][1],
        "final_cost": history[-1][1],
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(result, fh, indent=2)
            fh.write("\n")
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            fh.write("iteration,cost,lr\n")
            for it, cost, lr in history:
                fh.write(f"{it},{cost!r},{lr!r}\n")
    print(json.dumps({"initial_cost": result["initial_cost"],
                      "final_cost": result["final_cost"]}))
    return EXIT_OK


def cmd_serve(args):
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="revint",
        description="bitwise-reversible Verlet integration toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scene and write a trajectory")
    p.add_argument("--scene", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--snapshot-every", type=int, default=0)
    p.add_argument("--csv", default=None,
                   help="also write real-side positions as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reverse-check",
                       help="audit bitwise forward/backward round trip")
    p.add_argument("--scene", required=True)
    p.add_argument("--steps", type=int, required=True)
    p.set_defaults(func=cmd_reverse_check)

    p = sub.add_parser("gradcheck",
                       help="compare adjoint gradient against central FD")
    p.add_argument("--scene", required=True)
    p.add_argument("--keyframe", required=True)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("optimize",
                       help="gradient-descent keyframe control of p0")
    p.add_argument("--scene", required=True)
    p.add_argument("--keyframe", required=True)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.add_argument("--history", default=None)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("serve", help="start the playback WebSocket service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
