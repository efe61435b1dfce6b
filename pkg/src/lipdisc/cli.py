"""Command-line surface: load JSON system specs, run the estimators,
bounds, verification, discretization and convergence studies.

Exit codes: 0 success (all bounds hold), 1 a bound was violated (a
finding, not a crash), 2 input or spec validation error, 3 numerical
failure.  JSON output serializes every float with 17 significant
digits, so values round-trip exactly and identical invocations produce
byte-identical files (the timestamp field aside).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .bounds import UnsupportedOrderError, evaluate_bounds
from .constants import NumericalError, SamplingConfig, estimate_all
from .discretize import IntegrationError, build_taylor_model, exact_step, simulate
from .expr import ExprError
from .system import SpecValidationError, SystemSpec
from .verify import convergence_study, verify_bounds

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# full-precision JSON

def dumps_json(obj, indent: int = 2) -> str:
    """Serialize to JSON with floats at 17 significant digits."""
    pieces: list[str] = []
    _write_json(obj, pieces, indent, 0)
    return "".join(pieces) + "\n"


def _write_json(obj, out: list[str], indent: int, level: int):
    pad = " " * (indent * (level + 1))
    close_pad = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not np.isfinite(value):
            raise ValueError(f"cannot serialize non-finite number {value!r}")
        out.append(format(value, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj.tolist()) if isinstance(obj, np.ndarray) else list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(items):
            out.append(pad)
            _write_json(item, out, indent, level + 1)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(close_pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = list(obj)
        for i, key in enumerate(keys):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            out.append(pad + json.dumps(key) + ": ")
            _write_json(obj[key], out, indent, level + 1)
            out.append(",\n" if i + 1 < len(keys) else "\n")
        out.append(close_pad + "}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}: {obj!r}")


def _write_out(path: str, payload: dict):
    with open(path, "w") as fp:
        fp.write(dumps_json(payload))


# ---------------------------------------------------------------------------
# published output schemas (JSON Schema, draft 2020-12)

_NUMBER = {"type": "number"}
_VECTOR = {"type": "array", "items": _NUMBER}
_POINT_WITNESS = {
    "type": "object",
    "properties": {"x": _VECTOR, "u": _VECTOR},
    "required": ["x", "u"],
}
_PAIR_WITNESS = {
    "type": "object",
    "properties": {"x1": _VECTOR, "x2": _VECTOR, "u": _VECTOR},
    "required": ["x1", "x2", "u"],
}
_CONFIG = {
    "type": "object",
    "properties": {
        "grid_per_axis": {"type": "integer"},
        "pair_budget": {"type": "integer"},
        "seed": {"type": "integer"},
        "polish_iters": {"type": "integer"},
    },
    "required": ["grid_per_axis", "pair_budget", "seed", "polish_iters"],
}
_CONSTANTS = {
    "type": "object",
    "properties": {
        "gamma_c": _NUMBER,
        "rho_c": _NUMBER,
        "beta": _NUMBER,
        "big_m": _NUMBER,
        "sigma_bar_a": _NUMBER,
        "witnesses": {
            "type": "object",
            "properties": {
                "gamma_c": _POINT_WITNESS,
                "rho_c": _PAIR_WITNESS,
                "beta": _POINT_WITNESS,
                "big_m": _POINT_WITNESS,
            },
        },
        "sample_budget": _CONFIG,
    },
    "required": ["gamma_c", "rho_c", "beta", "big_m", "sigma_bar_a", "witnesses"],
}
_TOOL = {
    "type": "object",
    "properties": {"name": {"type": "string"}, "version": {"type": "string"}},
    "required": ["name", "version"],
}
_NULLABLE_NUMBER = {"type": ["number", "null"]}

CONSTANTS_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "tool": _TOOL,
        "system": {"type": "string"},
        "constants": _CONSTANTS,
        "config": {"type": "object"},
        "timestamp": {"type": "string"},
    },
    "required": ["tool", "system", "constants", "config"],
}

BOUNDS_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "tool": _TOOL,
        "system": {"type": "string"},
        "constants": _CONSTANTS,
        "bounds": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "order": {"type": "integer"},
                    "T": _NUMBER,
                    "gamma_d": _NUMBER,
                    "rho_d": _NULLABLE_NUMBER,
                },
                "required": ["order", "T", "gamma_d", "rho_d"],
            },
        },
        "config": {"type": "object"},
    },
    "required": ["tool", "system", "constants", "bounds", "config"],
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "tool": _TOOL,
        "system": {"type": "string"},
        "order": {"type": "integer"},
        "T": _NUMBER,
        "constants": _CONSTANTS,
        "bounds": {
            "type": "object",
            "properties": {"gamma_d": _NUMBER, "rho_d": _NULLABLE_NUMBER},
            "required": ["gamma_d", "rho_d"],
        },
        "empirical": {
            "type": "object",
            "properties": {
                "gamma_d": {
                    "type": "object",
                    "properties": {"value": _NUMBER, "witness": _PAIR_WITNESS},
                    "required": ["value", "witness"],
                },
                "rho_d": {
                    "type": "object",
                    "properties": {"value": _NUMBER, "witness": _PAIR_WITNESS},
                    "required": ["value", "witness"],
                },
                "full_map_gamma_d": _NUMBER,
            },
            "required": ["gamma_d", "rho_d", "full_map_gamma_d"],
        },
        "margins": {
            "type": "object",
            "properties": {"gamma_d": _NUMBER, "rho_d": _NULLABLE_NUMBER},
            "required": ["gamma_d", "rho_d"],
        },
        "tolerances": {"type": "object"},
        "passed": {
            "type": "object",
            "properties": {
                "gamma_d": {"type": "boolean"},
                "rho_d": {"type": ["boolean", "null"]},
                "all": {"type": "boolean"},
            },
            "required": ["gamma_d", "rho_d", "all"],
        },
        "config": {"type": "object"},
        "timestamp": {"type": "string"},
    },
    "required": [
        "tool",
        "system",
        "order",
        "T",
        "constants",
        "bounds",
        "empirical",
        "margins",
        "passed",
        "config",
        "timestamp",
    ],
}

TRAJECTORY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "tool": _TOOL,
        "system": {"type": "string"},
        "order": {"type": "integer"},
        "T": _NUMBER,
        "states": {"type": "array", "items": _VECTOR},
        "outputs": {"type": "array", "items": _VECTOR},
        "first_exit": {"type": ["integer", "null"]},
        "exact_states": {"type": "array", "items": _VECTOR},
        "errors": _VECTOR,
        "config": {"type": "object"},
    },
    "required": ["tool", "system", "order", "T", "states", "outputs", "first_exit"],
}

CONVERGENCE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "tool": _TOOL,
        "system": {"type": "string"},
        "t_values": _VECTOR,
        "orders": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "properties": {
                    "max_local_errors": _VECTOR,
                    "slope": _NUMBER,
                },
                "required": ["max_local_errors", "slope"],
            },
        },
        "config": {"type": "object"},
    },
    "required": ["tool", "system", "t_values", "orders", "config"],
}

OUTPUT_SCHEMAS = {
    "constants": CONSTANTS_SCHEMA,
    "bounds": BOUNDS_SCHEMA,
    "verify": REPORT_SCHEMA,
    "discretize": TRAJECTORY_SCHEMA,
    "convergence": CONVERGENCE_SCHEMA,
}


# ---------------------------------------------------------------------------
# argument handling

def _tool_stamp() -> dict:
    return {"name": "lipdisc", "version": __version__}


def load_system(path: str) -> SystemSpec:
    try:
        with open(path) as fp:
            data = json.load(fp)
    except OSError as err:
        raise SpecValidationError("$", f"cannot read {path!r}: {err}") from err
    except json.JSONDecodeError as err:
        raise SpecValidationError(
            "$", f"malformed JSON in {path!r}: {err.msg} at line {err.lineno} column {err.colno}"
        ) from err
    return SystemSpec.from_dict(data)


def _sampling_config(args) -> SamplingConfig:
    return SamplingConfig(
        grid_per_axis=args.grid,
        pair_budget=args.pairs,
        seed=args.seed,
        polish_iters=args.polish_iters,
    )


def _config_echo(args, spec_path: str) -> dict:
    echo = {
        "spec_path": spec_path,
        "seed": args.seed,
        "pairs": args.pairs,
        "grid": args.grid,
        "polish_iters": args.polish_iters,
    }
    for name in ("order", "tol", "steps"):
        if hasattr(args, name):
            echo[name] = getattr(args, name)
    return echo


def _add_sampling_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=42, help="sampling seed")
    parser.add_argument("--pairs", type=int, default=20_000, help="pair budget")
    parser.add_argument("--grid", type=int, default=21, help="grid points per axis")
    parser.add_argument(
        "--polish-iters", dest="polish_iters", type=int, default=40,
        help="coordinate-descent polish iterations",
    )


def _parse_vector(text: str, label: str) -> np.ndarray:
    try:
        return np.asarray([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError as err:
        raise SpecValidationError(label, f"expected comma-separated numbers, got {text!r}") from err


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lipdisc",
        description=(
            "Taylor-Lie ZOH discretization with empirical verification of "
            "discrete Lipschitz constant formulas"
        ),
    )
    parser.add_argument("--version", action="version", version=f"lipdisc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_const = sub.add_parser("constants", help="estimate the region constants")
    p_const.add_argument("spec", help="system spec JSON file")
    _add_sampling_flags(p_const)
    p_const.add_argument("--out", help="write the estimates as JSON")

    p_bounds = sub.add_parser("bounds", help="evaluate the formula constants")
    p_bounds.add_argument("spec")
    p_bounds.add_argument("--order", type=int, choices=(1, 2, 3), default=None,
                          help="single order (default: all three)")
    _add_sampling_flags(p_bounds)
    p_bounds.add_argument("--out")

    p_verify = sub.add_parser("verify", help="check formula vs empirical constants")
    p_verify.add_argument("spec")
    p_verify.add_argument("--order", type=int, choices=(1, 2, 3), default=1)
    _add_sampling_flags(p_verify)
    p_verify.add_argument("--out")

    p_disc = sub.add_parser("discretize", help="simulate the discrete model")
    p_disc.add_argument("spec")
    p_disc.add_argument("--order", type=int, choices=(1, 2, 3), default=1)
    p_disc.add_argument("--x0", required=True, help="initial state, comma-separated")
    p_disc.add_argument(
        "--inputs", default=None,
        help="constant input 'v1,v2,...' or a JSON file with one input vector per step",
    )
    p_disc.add_argument("--steps", type=int, default=50)
    p_disc.add_argument("--exact", action="store_true",
                        help="add the integrated reference trajectory and errors")
    p_disc.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance")
    _add_sampling_flags(p_disc)
    p_disc.add_argument("--out")

    p_conv = sub.add_parser("convergence", help="local-error order study")
    p_conv.add_argument("spec")
    p_conv.add_argument("--orders", default="1,2,3", help="comma-separated orders")
    p_conv.add_argument("--t-list", dest="t_list", default="0.2,0.1,0.05,0.025",
                        help="comma-separated sampling times (>= 3)")
    p_conv.add_argument("--tol", type=float, default=1e-10, help="integrator tolerance")
    _add_sampling_flags(p_conv)
    p_conv.add_argument("--out")

    return parser


# ---------------------------------------------------------------------------
# subcommands

def cmd_constants(args) -> int:
    s = load_system(args.spec)
    cfg = _sampling_config(args)
    est = estimate_all(s, cfg)
    print(f"system {s.name}: n={s.n} m={s.m} p={s.p} T={s.sampling_time}")
    print(f"  gamma_c     = {est.gamma_c:.12g}   (two-sided Lipschitz, empirical sup)")
    print(f"  rho_c       = {est.rho_c:.12g}   (one-sided Lipschitz, empirical sup)")
    print(f"  beta        = {est.beta:.12g}   (second-derivative norm surrogate)")
    print(f"  big_m       = {est.big_m:.12g}   (sup ||f||)")
    print(f"  sigma_bar_a = {est.sigma_bar_a:.12g}   (max singular value of A)")
    if args.out:
        payload = {
            "tool": _tool_stamp(),
            "system": s.name,
            "constants": est.to_jsonable(),
            "config": _config_echo(args, args.spec),
        }
        _write_out(args.out, payload)
    return EXIT_OK


def cmd_bounds(args) -> int:
    s = load_system(args.spec)
    cfg = _sampling_config(args)
    est = estimate_all(s, cfg)
    orders = [args.order] if args.order else [1, 2, 3]
    rows = [evaluate_bounds(k, s.sampling_time, est) for k in orders]
    for row in rows:
        rho = "n/a" if row.rho_d is None else f"{row.rho_d:.12g}"
        print(f"order {row.order}: gamma_d = {row.gamma_d:.12g}  rho_d = {rho}")
    if args.out:
        payload = {
            "tool": _tool_stamp(),
            "system": s.name,
            "constants": est.to_jsonable(),
            "bounds": [
                {"order": r.order, "T": r.sampling_time, "gamma_d": r.gamma_d, "rho_d": r.rho_d}
                for r in rows
            ],
            "config": _config_echo(args, args.spec),
        }
        _write_out(args.out, payload)
    return EXIT_OK


def cmd_verify(args) -> int:
    s = load_system(args.spec)
    cfg = _sampling_config(args)
    report = verify_bounds(s, args.order, cfg)
    print(f"system {s.name}, order {report.order}, T = {report.sampling_time}")
    print(
        f"  gamma_d: formula {report.formula_gamma_d:.12g}  "
        f"empirical {report.empirical_gamma_d:.12g}  "
        f"margin {report.gamma_margin:.3e}  "
        f"{'PASS' if report.gamma_pass else 'VIOLATED'}"
    )
    if report.formula_rho_d is None:
        print(f"  rho_d:   no formula at order {report.order} "
              f"(empirical {report.empirical_rho_d:.12g})")
    else:
        print(
            f"  rho_d:   formula {report.formula_rho_d:.12g}  "
            f"empirical {report.empirical_rho_d:.12g}  "
            f"margin {report.rho_margin:.3e}  "
            f"{'PASS' if report.rho_pass else 'VIOLATED'}"
        )
    if args.out:
        payload = {"tool": _tool_stamp(), **report.to_jsonable()}
        payload["config"] = {**_config_echo(args, args.spec), **payload["config"]}
        _write_out(args.out, payload)
    return EXIT_OK if report.all_passed else EXIT_VIOLATION


def _input_sequence(args, s: SystemSpec) -> np.ndarray:
    steps = args.steps
    if steps < 0:
        raise SpecValidationError("--steps", "must be >= 0")
    if args.inputs is None:
        return np.zeros((steps, s.m))
    try:
        constant = _parse_vector(args.inputs, "--inputs")
        is_constant = True
    except SpecValidationError:
        is_constant = False
    if is_constant:
        if constant.shape[0] != s.m:
            raise SpecValidationError(
                "--inputs", f"constant input has dimension {constant.shape[0]}, expected {s.m}"
            )
        return np.tile(constant, (steps, 1))
    try:
        with open(args.inputs) as fp:
            rows = json.load(fp)
    except (OSError, json.JSONDecodeError) as err:
        raise SpecValidationError("--inputs", f"cannot read input file: {err}") from err
    seq = np.asarray(rows, dtype=float).reshape(-1, s.m)
    if seq.shape[0] != steps:
        raise SpecValidationError(
            "--inputs", f"file provides {seq.shape[0]} steps, --steps is {steps}"
        )
    return seq


def cmd_discretize(args) -> int:
    s = load_system(args.spec)
    x0 = _parse_vector(args.x0, "--x0")
    if x0.shape[0] != s.n:
        raise SpecValidationError("--x0", f"dimension {x0.shape[0]}, expected {s.n}")
    u_seq = _input_sequence(args, s)
    mdl = build_taylor_model(s, args.order)
    traj = simulate(mdl, s, x0, u_seq)
    payload = {
        "tool": _tool_stamp(),
        "system": s.name,
        "order": args.order,
        "T": s.sampling_time,
        "states": traj.states,
        "outputs": traj.outputs,
        "first_exit": traj.first_exit,
    }
    if args.exact:
        exact = simulate(lambda x, u: exact_step(s, x, u, tol=args.tol), s, x0, u_seq)
        errors = np.linalg.norm(traj.states - exact.states, axis=1)
        payload["exact_states"] = exact.states
        payload["errors"] = errors
        print(f"{s.name} order {args.order}: {len(u_seq)} steps, "
              f"max |approx - exact| = {float(errors.max()):.6g}")
    else:
        print(f"{s.name} order {args.order}: {len(u_seq)} steps, "
              f"final state {traj.states[-1].tolist()}")
    payload["config"] = _config_echo(args, args.spec)
    if args.out:
        _write_out(args.out, payload)
    return EXIT_OK


def cmd_convergence(args) -> int:
    s = load_system(args.spec)
    cfg = _sampling_config(args)
    orders = [int(v) for v in args.orders.split(",") if v.strip()]
    t_values = [float(v) for v in args.t_list.split(",") if v.strip()]
    if len(t_values) < 3:
        raise SpecValidationError("--t-list", "need at least 3 sampling times")
    if any(k not in (1, 2, 3) for k in orders):
        raise SpecValidationError("--orders", "orders must be among 1, 2, 3")
    study = convergence_study(s, orders, t_values, cfg, integrator_tol=args.tol)
    for k in sorted(study.slopes):
        print(f"order {k}: slope {study.slopes[k]:.3f} (expected about {k + 1})")
    if args.out:
        payload = {
            "tool": _tool_stamp(),
            "system": s.name,
            **study.to_jsonable(),
            "config": _config_echo(args, args.spec),
        }
        _write_out(args.out, payload)
    return EXIT_OK


_COMMANDS = {
    "constants": cmd_constants,
    "bounds": cmd_bounds,
    "verify": cmd_verify,
    "discretize": cmd_discretize,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (SpecValidationError, UnsupportedOrderError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, IntegrationError, ExprError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


def console_main():
    sys.exit(main())
