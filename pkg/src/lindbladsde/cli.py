"""Command-line interface: model files, subcommand dispatch, CSV emission.

Model files are JSON with complex entries written as [re, im] pairs::

    {
      "dim": 2,
      "hamiltonian": [[[0,0],[0,0]],[[0,0],[0,0]]],
      "lindblad_ops": [[[[0,0],[0,1]],[[0,0],[0,0]]]],
      "weights": [1.0],
      "covariance": [[1.0]]
    }

weights may be omitted when there is exactly one operator (defaults to
[1.0]); covariance defaults to the identity. Anywhere a model path is
expected, the name of a built-in preset is accepted too, unless a file of
that name exists.

Exit codes: 0 success, 1 usage error, 2 invalid model, 3 numerical
failure, 4 derivation mismatch. A failing subcommand never writes to its
output path.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channels import build_infinitesimal_kraus, choi_of
from .ito import derive_stochastic_evolution
from .lindblad import (
    LindbladModel,
    NumericalError,
    integrate_ode,
    lindblad_rhs,
    step_count,
    validate_model,
)
from .operators import (
    check_hermitian,
    frobenius,
    matrix_from_literal,
    real_matrix_from_literal,
)
from .presets import PRESET_NAMES, preset_model
from .unraveling import STEPPERS, _min_eigenvalues, _purities, run_ensemble

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL = 2
EXIT_NUMERICAL = 3
EXIT_DERIVATION = 4

DERIVE_TOL = 1e-10


class ModelFileError(ValueError):
    """The model file could not be parsed or violates a hard invariant."""


class _UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Run parameters shared by the ode and sde subcommands."""

    t_final: float
    dt: float
    trajectories: int = 1000
    seed: int = 0
    record_every: int = 1
    stepper: str = "euler"
    observables: tuple = ()  # optional Hermitian matrices; adds CSV columns

    def __post_init__(self):
        if self.t_final <= 0 or self.dt <= 0:
            raise ValueError("t_final and dt must be positive")
        if self.trajectories < 1 or self.record_every < 1 or self.seed < 0:
            raise ValueError("trajectories, record_every must be positive; seed nonnegative")
        if self.stepper not in STEPPERS:
            raise ValueError(f"stepper must be one of {STEPPERS}")
        for obs in self.observables:
            check_hermitian(obs, name="observable")


def parse_model(path_or_preset: str) -> LindbladModel:
    """Load and validate a model from a JSON file or a preset name.

    An existing file wins over a preset of the same name. The validation
    report goes to stderr; hard invariant violations raise ModelFileError,
    the soft trajectory-trace check is reported only.
    """
    path = Path(path_or_preset)
    if path.is_file():
        model = _model_from_file(path)
    elif path_or_preset in PRESET_NAMES:
        model = preset_model(path_or_preset)
    else:
        raise ModelFileError(
            f"model file not found: {path_or_preset!r} "
            f"(presets: {', '.join(PRESET_NAMES)})"
        )
    print(f"model report for {path_or_preset!r}:", file=sys.stderr)
    print(validate_model(model).summary(), file=sys.stderr)
    return model


def _model_from_file(path: Path) -> LindbladModel:
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelFileError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(payload, dict):
        raise ModelFileError(f"{path}: expected a JSON object at the top level")

    def take(key, required=True):
        if key not in payload:
            if required:
                raise ModelFileError(f"{path}: missing required field {key!r}")
            return None
        return payload[key]

    known = {"dim", "hamiltonian", "lindblad_ops", "weights", "covariance"}
    unknown = set(payload) - known
    if unknown:
        raise ModelFileError(f"{path}: unknown fields {sorted(unknown)}")

    dim = take("dim")
    if not isinstance(dim, int) or dim < 1:
        raise ModelFileError(f"{path}: dim must be a positive integer")

    try:
        hamiltonian = matrix_from_literal(take("hamiltonian"), name="hamiltonian")
        raw_ops = take("lindblad_ops")
        if not isinstance(raw_ops, list) or not raw_ops:
            raise ValueError("lindblad_ops: expected a nonempty array of matrices")
        ops = np.array([
            matrix_from_literal(entry, name=f"lindblad_ops[{i}]")
            for i, entry in enumerate(raw_ops)
        ])
        weights = take("weights", required=False)
        if weights is None:
            if len(raw_ops) != 1:
                raise ValueError(
                    "weights: required when there is more than one operator"
                )
            weights = [1.0]
        covariance = take("covariance", required=False)
        covariance = (np.eye(len(raw_ops)) if covariance is None
                      else real_matrix_from_literal(covariance, name="covariance"))
        if hamiltonian.shape[0] != dim:
            raise ValueError(
                f"hamiltonian is {hamiltonian.shape[0]}x{hamiltonian.shape[0]} "
                f"but dim is {dim}"
            )
        model = LindbladModel(
            hamiltonian=hamiltonian,
            lindblad_ops=ops,
            weights=np.asarray(weights, dtype=float),
            covariance=covariance,
        )
    except (ValueError, TypeError) as exc:
        raise ModelFileError(f"{path}: {exc}") from exc
    return model


def _format(x: float) -> str:
    return repr(float(x))


def _state_header(dim: int) -> list[str]:
    cols = ["time"]
    for i in range(dim):
        for j in range(dim):
            cols.append(f"rho_{i}_{j}_re")
            cols.append(f"rho_{i}_{j}_im")
    cols += ["trace_re", "min_eigenvalue", "purity"]
    return cols


def _state_cells(t: float, rho: np.ndarray) -> list[str]:
    cells = [_format(t)]
    for entry in rho.reshape(-1):
        cells.append(_format(entry.real))
        cells.append(_format(entry.imag))
    cells.append(_format(np.trace(rho).real))
    cells.append(_format(_min_eigenvalues(rho)))
    cells.append(_format(_purities(rho)))
    return cells


def _states_csv(times, states, observables, extra_header=(), extra_cells=None) -> str:
    header = _state_header(states.shape[-1]) + list(extra_header)
    header += [f"obs_{k}_re" for k in range(len(observables))]
    lines = [",".join(header)]
    for idx, (t, rho) in enumerate(zip(times, states)):
        cells = _state_cells(t, rho)
        if extra_cells is not None:
            cells.append(_format(extra_cells[idx]))
        for obs in observables:
            cells.append(_format(np.trace(obs @ rho).real))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _write_output(path: str, content: str) -> None:
    # Content is fully built before the file is opened, so a failed
    # computation never leaves a partial file behind.
    Path(path).write_text(content)


def _initial_state(dim: int) -> np.ndarray:
    # Uniform superposition: every preset shows nontrivial coherences.
    amp = np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)
    return np.outer(amp, amp.conj())


def cmd_check(args) -> int:
    model = parse_model(args.model)
    report = validate_model(model)
    verdict = "true" if report.trajectory_trace_preserving else "false"
    print(f"model ok: dim={model.dim} noises={model.noise_count} "
          f"trajectory_trace_preserving={verdict}")
    return EXIT_OK


def cmd_ode(args) -> int:
    model = parse_model(args.model)
    config = _config_from(args)
    _check_grid(config, args)
    trajectory = integrate_ode(model, _initial_state(model.dim),
                               config.t_final, config.dt, config.record_every)
    content = _states_csv(trajectory.times, trajectory.states, config.observables)
    _write_output(args.out, content)
    return EXIT_OK


def cmd_sde(args) -> int:
    model = parse_model(args.model)
    config = _config_from(args)
    _check_grid(config, args)
    # results are worker-count independent, so threading is safe here
    stats, diagnostics = run_ensemble(
        model, _initial_state(model.dim), config.t_final, config.dt,
        config.trajectories, config.seed, config.record_every, config.stepper,
        workers=min(4, os.cpu_count() or 1),
    )
    content = _states_csv(stats.times, stats.mean_state, config.observables,
                          extra_header=("stderr",), extra_cells=stats.stderr)
    _write_output(args.out, content)
    print(f"trajectories={stats.trajectory_count} seed={stats.seed} "
          f"trace_extremes=({diagnostics.trace_min:.6g}, {diagnostics.trace_max:.6g}) "
          f"min_eigenvalue={diagnostics.min_eigenvalue:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_derive(args) -> int:
    model = parse_model(args.model)
    rng = np.random.Generator(np.random.Philox(key=np.array([0xD5EED, 0], dtype=np.uint64)))
    g = rng.standard_normal((model.dim, model.dim)) + 1j * rng.standard_normal(
        (model.dim, model.dim))
    probe = g @ g.conj().T
    probe = probe / np.trace(probe).real

    result = derive_stochastic_evolution(model, probe)
    drift_residual = frobenius(result.drift_coefficient - lindblad_rhs(model, probe))
    expected_noise = np.array([
        w * (v @ probe + probe @ v.conj().T)
        for w, v in zip(model.weights, model.lindblad_ops)
    ])
    noise_residual = frobenius(result.noise_coefficients - expected_noise)

    np.set_printoptions(precision=12, suppress=False, linewidth=120)
    print("drift coefficient (dt):")
    print(result.drift_coefficient)
    for n, coeff in enumerate(result.noise_coefficients):
        print(f"noise coefficient (dW^{n}):")
        print(coeff)
    print(f"drift residual vs master-equation generator: {drift_residual:.3e}")
    print(f"noise residual vs d_n (v_n rho + rho v_n^dagger): {noise_residual:.3e}")
    print(f"drift trace residual: {result.trace_residual:.3e}")
    if drift_residual > DERIVE_TOL or noise_residual > DERIVE_TOL:
        print("derivation mismatch beyond tolerance", file=sys.stderr)
        return EXIT_DERIVATION
    return EXIT_OK


def cmd_choi(args) -> int:
    model = parse_model(args.model)
    if args.dt <= 0:
        raise _UsageError("--dt must be positive")
    root = np.sqrt(args.dt)
    lines = ["dw_scale,index,eigenvalue"]
    for scale in (0.0, 1.0, -1.0):
        dw = np.full(model.noise_count, scale * root)
        channel = build_infinitesimal_kraus(model, args.dt, dw)
        eigenvalues = np.linalg.eigvalsh(choi_of(channel))
        for idx, value in enumerate(eigenvalues):
            lines.append(f"{_format(scale)},{idx},{_format(value)}")
    _write_output(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _config_from(args) -> RunConfig:
    try:
        return RunConfig(
            t_final=args.t_final,
            dt=args.dt,
            trajectories=getattr(args, "trajectories", 1000),
            seed=getattr(args, "seed", 0),
            record_every=args.record_every,
            stepper=getattr(args, "stepper", "euler").replace("-", "_"),
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _check_grid(config: RunConfig, args) -> None:
    try:
        n = step_count(config.t_final, config.dt, args.command)
        if n % config.record_every != 0:
            raise ValueError(
                f"--record-every {config.record_every} must divide the "
                f"step count {n}"
            )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="lindbladsde",
                     description="Master-equation dynamics and stochastic unraveling")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model(p):
        p.add_argument("--model", required=True,
                       help="model JSON path or preset name "
                            f"({', '.join(PRESET_NAMES)})")

    p_check = sub.add_parser("check", help="validate a model and print its report")
    add_model(p_check)
    p_check.set_defaults(func=cmd_check)

    p_ode = sub.add_parser("ode", help="integrate the deterministic mean evolution")
    add_model(p_ode)
    p_ode.add_argument("--t-final", type=float, required=True)
    p_ode.add_argument("--dt", type=float, required=True)
    p_ode.add_argument("--record-every", type=int, default=1)
    p_ode.add_argument("--out", required=True)
    p_ode.set_defaults(func=cmd_ode)

    p_sde = sub.add_parser("sde", help="run a Monte Carlo trajectory ensemble")
    add_model(p_sde)
    p_sde.add_argument("--t-final", type=float, required=True)
    p_sde.add_argument("--dt", type=float, required=True)
    p_sde.add_argument("--trajectories", type=int, default=1000)
    p_sde.add_argument("--seed", type=int, default=0)
    p_sde.add_argument("--record-every", type=int, default=1)
    p_sde.add_argument("--stepper", choices=["euler", "exact-unitary"],
                       default="euler")
    p_sde.add_argument("--out", required=True)
    p_sde.set_defaults(func=cmd_sde)

    p_derive = sub.add_parser(
        "derive", help="expand the one-step channel and check it against the generator")
    add_model(p_derive)
    p_derive.set_defaults(func=cmd_derive)

    p_choi = sub.add_parser(
        "choi", help="eigenvalues of the one-step channel's Choi matrix as CSV")
    add_model(p_choi)
    p_choi.add_argument("--dt", type=float, required=True)
    p_choi.add_argument("--out", required=True)
    p_choi.set_defaults(func=cmd_choi)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelFileError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_MODEL


def console_entry() -> None:
    raise SystemExit(main())
