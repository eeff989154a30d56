"""Command-line front end: ``rtlab <command> ...``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import attacks, floatlab, io, plant, statdist
from .cipher import CipherVariant, KeyPair, KeyStream
from .errors import EXIT_CODES, RTLabError

DEFAULT_SEED = 20230709
IO_ERROR_EXIT = 15


def _vector(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.split(",") if t.strip()])


def _emit(text: str, out: Optional[str]) -> None:
    io.write_text(text, out)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _input_key_matrix(keys) -> KeyPair:
    return keys.keys_at(0) if isinstance(keys, KeyStream) else keys[0]


# keygen ---------------------------------------------------------------------

def cmd_keygen(args) -> int:
    m = args.m if args.m else args.n
    stream = KeyStream(args.seed, args.Rmax, args.rmax, CipherVariant(args.variant), args.n, m)
    _emit(io.dumps(io.key_document(stream)), args.out)
    return 0


# simulate -------------------------------------------------------------------

def cmd_simulate(args) -> int:
    doc = io.read_json(args.plant)
    p, policy = io.load_plant(doc)
    key_doc = io.read_json(args.keys) if args.keys else doc
    keys = io.load_keys(key_doc)
    x0 = _vector(args.x0) if args.x0 else doc.get("x0")
    trace = plant.simulate(p, policy, keys, x0=x0, T=args.T, seed=args.seed)
    _emit(io.trace_to_csv(trace), args.out)
    return 0


# attack ---------------------------------------------------------------------

def _key_error(truth: Optional[str], R_hat: np.ndarray, r_hat: np.ndarray) -> Optional[dict]:
    if not truth:
        return None
    kp = _input_key_matrix(io.load_keys(io.read_json(truth)))
    scale = max(np.abs(kp.R).max(), np.abs(kp.r).max(), 1e-300)
    err = max(np.abs(R_hat - kp.R).max(), np.abs(r_hat - kp.r).max())
    return {"key_error": float(err), "relative_key_error": float(err / scale)}


def cmd_attack(args) -> int:
    trace = io.trace_from_csv(Path(args.trace).read_text())
    n = trace.n
    if args.mode in ("kpa", "lsq"):
        x = plant.add_noise(trace, args.sigma, args.seed).x if args.sigma else trace.x
        if args.mode == "kpa":
            idx = range(args.start, args.start + n + 1)
            res = attacks.kpa_exact(attacks.pairs_from_trace(x, trace.y, idx))
        else:
            p = args.pairs if args.pairs else len(x)
            if p > len(x):
                raise ValueError(f"trace holds {len(x)} pairs, {p} requested")
            res = attacks.kpa_least_squares(attacks.pairs_from_trace(x, trace.y, range(p)))
        doc = res.to_dict()
        R_hat, r_hat = res.R_hat, res.r_hat
        summary = f"{args.mode}: residual {res.residual:.3e}, rank {res.rank}"
    else:
        if not args.plant:
            raise ValueError("plant mode needs --plant with the matrix A")
        A = np.atleast_2d(np.asarray(io.read_json(args.plant)["A"], dtype=float))
        k = args.start
        out = attacks.known_plant_attack(trace.y, trace.z, A, k, trace.x[k], trace.x[k + 1])
        R_hat, r_hat = out.R_hat, out.r_hat
        state_err = float(np.abs(out.xs - trace.x).max())
        doc = {
            "R_hat": R_hat.tolist(),
            "r_hat": r_hat.tolist(),
            "residual": out.identification.residual,
            "rank": out.identification.rank,
            "eigenvalues": [[float(e.real), float(e.imag)] for e in out.eigenvalues],
            "nullspace_dim": int(out.nullspace.shape[1]),
            "max_state_error": state_err,
        }
        eig = ", ".join(f"{e.real:.6g}{e.imag:+.6g}j" if e.imag else f"{e.real:.6g}" for e in out.eigenvalues)
        summary = f"plant: leaked eigenvalues {{{eig}}}, max state error {state_err:.3e}"
    err = _key_error(args.truth, R_hat, r_hat)
    if err:
        doc.update(err)
        summary += f", key error {err['key_error']:.3e} (relative {err['relative_key_error']:.3e})"
    _say(summary)
    _emit(io.dumps(doc), args.out)
    return 0


# distance -------------------------------------------------------------------

def cmd_distance(args) -> int:
    if args.variant == "det":
        rep = statdist.d_deterministic(_vector(args.x1), _vector(args.x2))
    elif args.variant == "prob-r":
        r_max = 2.0 ** args.kappa if args.rmax is None else args.rmax
        rep = statdist.d_resample_noise(_vector(args.x1), _vector(args.x2), args.i, r_max, args.kappa)
    elif args.variant == "prob-rr":
        r_max = 2.0 ** args.kappa if args.rmax is None else args.rmax
        rep = statdist.d_resample_both_scalar(float(args.x1), float(args.x2), args.Rmax, r_max, args.kappa)
    else:
        r_max = 1.0 if args.rmax is None else args.rmax
        if args.setup == "prob-r":
            a, b = _vector(args.x1)[args.i], _vector(args.x2)[args.i]
            s1, s2 = statdist.ShiftedUniform(a, r_max), statdist.ShiftedUniform(b, r_max)
        else:
            s1 = statdist.ResampleBothScalar(float(args.x1), args.Rmax, r_max)
            s2 = statdist.ResampleBothScalar(float(args.x2), args.Rmax, r_max)
        rep = statdist.mc_distance(s1, s2, args.samples, args.bins, seed=args.seed)
    _emit(io.dumps(rep.to_dict()), args.out)
    return 0


# f16 ------------------------------------------------------------------------

def cmd_f16(args) -> int:
    universe = floatlab.enumerate_f16(include_subnormals=args.subnormals)
    if args.sub == "fig1":
        _emit(io.figure1_csv(floatlab.figure1_data(args.stride, universe)), args.out)
    elif args.sub == "fig2":
        r_max = floatlab.default_r_max(args.rmax_fraction)
        axis, D = floatlab.figure2_grid(args.points, r_max, universe)
        _emit(io.figure2_csv(axis, D, args.hex), args.out)
    else:
        x1 = floatlab.F16Value.nearest(args.x1)
        x2 = floatlab.F16Value.nearest(args.x2)
        r_max = floatlab.default_r_max(args.rmax_fraction) if args.rmax is None else args.rmax
        rep = floatlab.stat_distance_f16(x1, x2, r_max, universe)
        doc = rep.to_dict()
        doc.update({"x1": x1.decoded, "x2": x2.decoded, "r_max": r_max})
        _emit(io.dumps(doc), args.out)
    return 0


# parser ---------------------------------------------------------------------

def _exit_code_help() -> str:
    lines = ["exit codes:", "  0  success", "  1  other error", "  2  usage error"]
    lines += [f"  {code:<2} {name}" for name, code in sorted(EXIT_CODES.items(), key=lambda kv: kv[1])]
    lines.append(f"  {IO_ERROR_EXIT} I/O error")
    lines.append("environment: RT_LAB_THREADS caps worker threads for 'f16 fig2'")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rtlab",
        description="Cryptanalysis workbench for random affine transformation ciphers.",
        epilog=_exit_code_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", parents=[common], help="generate key JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=0, help="output dimension (default: n)")
    p.add_argument("--Rmax", type=float, default=1.0)
    p.add_argument("--rmax", type=float, default=1.0)
    p.add_argument("--variant", choices=[v.value for v in CipherVariant], default="Deterministic")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("simulate", parents=[common], help="simulate the encrypted loop to a trace CSV")
    p.add_argument("--plant", required=True, help="JSON with A, B, K (may also hold the keys)")
    p.add_argument("--keys", help="key JSON (default: read keys from the plant JSON)")
    p.add_argument("--T", type=int, default=50)
    p.add_argument("--x0", help="comma-separated initial state")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("attack", parents=[common], help="run an attack on a trace CSV")
    p.add_argument("mode", choices=["kpa", "lsq", "plant"])
    p.add_argument("--trace", required=True)
    p.add_argument("--plant", help="plant JSON supplying A (plant mode)")
    p.add_argument("--truth", help="key JSON used to report the key-recovery error")
    p.add_argument("--pairs", type=int, help="number of pairs for lsq (default: all)")
    p.add_argument("--sigma", type=float, default=0.0, help="Gaussian noise on known plaintexts")
    p.add_argument("--start", type=int, default=0, help="first trace step used as known plaintext")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("distance", parents=[common], help="closed-form or Monte-Carlo distances")
    p.add_argument("variant", choices=["det", "prob-r", "prob-rr", "mc"])
    p.add_argument("--x1", required=True, help="plaintext (comma-separated vector for det/prob-r)")
    p.add_argument("--x2", required=True)
    p.add_argument("--i", type=int, default=0, help="component index")
    p.add_argument("--rmax", type=float)
    p.add_argument("--Rmax", type=float, default=1.0)
    p.add_argument("--kappa", type=int, help="security parameter; r_max defaults to 2**kappa")
    p.add_argument("--setup", choices=["prob-r", "prob-rr"], default="prob-r", help="mc: cipher to sample")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--bins", type=int, default=128)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("f16", parents=[common], help="binary16 exhaustive analysis")
    p.add_argument("sub", choices=["fig1", "fig2", "distance"])
    p.add_argument("--stride", type=int, default=200)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--rmax-fraction", type=float, default=0.9999)
    p.add_argument("--rmax", type=float, help="explicit noise bound (distance)")
    p.add_argument("--x1", type=float, default=0.0)
    p.add_argument("--x2", type=float, default=0.0)
    p.add_argument("--hex", action="store_true", help="label fig2 axes with bit patterns")
    p.add_argument("--subnormals", action="store_true", help="include subnormals in the universe")
    p.set_defaults(func=cmd_f16)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RTLabError as exc:
        _say(f"error: {type(exc).__name__}: {exc}")
        return exc.exit_code
    except OSError as exc:
        _say(f"error: {exc}")
        return IO_ERROR_EXIT
    except (ValueError, KeyError) as exc:
        _say(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
