"""Deterministic master-equation dynamics.

A model is the tuple (H, {v_n}, {d_n}, c): Hamiltonian, noise operators,
positive channel weights, and the real symmetric covariance of the noise
increments. Units use hbar = 1, so H carries inverse time and each v_n
carries inverse square-root time; the weights and covariance are
dimensionless.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .operators import (
    CLIP_TOL,
    HERMITICITY_TOL,
    SYM_TOL,
    adjoint,
    check_density_matrix,
    check_hermitian,
    check_real_symmetric,
    frobenius,
    hermitian_part,
    readonly,
)

WEIGHT_TOL = 1e-10            # |sum(d_n^2) - 1| allowed
DRIFT_CONSTRAINT_TOL = 1e-8   # residual below which a model preserves trace per trajectory


class NumericalError(RuntimeError):
    """An integration step produced non-finite entries or an unstable step size."""


@dataclass(frozen=True)
class LindbladModel:
    """Validated open-system model.

    Construction enforces the hard invariants: H Hermitian, weights positive
    with unit square-sum, covariance symmetric with unit diagonal and
    positive semidefinite. The soft per-trajectory trace constraint is
    reported by :func:`validate_model`, never enforced here. All arrays are
    copied and frozen, so a model is safe to share across threads.
    """

    hamiltonian: np.ndarray
    lindblad_ops: np.ndarray   # shape (N, d, d)
    weights: np.ndarray        # shape (N,), positive, sum of squares 1
    covariance: np.ndarray     # shape (N, N), unit diagonal, PSD

    def __post_init__(self):
        h = check_hermitian(np.asarray(self.hamiltonian, dtype=complex), name="hamiltonian")
        ops = np.asarray(self.lindblad_ops, dtype=complex)
        if ops.ndim != 3 or ops.shape[0] < 1:
            raise ValueError(f"lindblad_ops: expected a nonempty (N, d, d) stack, got {ops.shape}")
        d = h.shape[0]
        if ops.shape[1:] != (d, d):
            raise ValueError(
                f"lindblad_ops: operator shape {ops.shape[1:]} does not match dim {d}"
            )
        if not np.all(np.isfinite(ops)):
            raise ValueError("lindblad_ops: entries must be finite")
        n = ops.shape[0]

        w = np.asarray(self.weights, dtype=float)
        if w.shape != (n,):
            raise ValueError(f"weights: expected shape ({n},), got {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("weights: all channel weights must be positive finite reals")
        norm_defect = abs(float(np.sum(w * w)) - 1.0)
        if norm_defect > WEIGHT_TOL:
            raise ValueError(
                f"weights: sum of squares differs from 1 by {norm_defect:.3e} "
                f"(tolerance {WEIGHT_TOL:.1e})"
            )

        c = check_real_symmetric(np.asarray(self.covariance, dtype=float))
        if c.shape != (n, n):
            raise ValueError(f"covariance: expected shape ({n}, {n}), got {c.shape}")
        diag_defect = float(np.max(np.abs(np.diag(c) - 1.0)))
        if diag_defect > SYM_TOL:
            raise ValueError(
                f"covariance: diagonal differs from 1 by {diag_defect:.3e} "
                f"(tolerance {SYM_TOL:.1e})"
            )
        smallest = float(np.linalg.eigvalsh(c)[0])
        if smallest < -CLIP_TOL:
            raise ValueError(
                f"covariance: not positive semidefinite "
                f"(min eigenvalue {smallest:.3e} < -{CLIP_TOL:.1e})"
            )

        object.__setattr__(self, "hamiltonian", readonly(h))
        object.__setattr__(self, "lindblad_ops", readonly(ops))
        object.__setattr__(self, "weights", readonly(w))
        object.__setattr__(self, "covariance", readonly(c))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def noise_count(self) -> int:
        return self.lindblad_ops.shape[0]


@dataclass(frozen=True)
class ValidationReport:
    """Residuals of the model constraints, hard and soft."""

    weight_residual: float
    diagonal_residual: float
    psd_residual: float
    drift_residuals: np.ndarray = field(repr=False)  # one per active covariance eigenvector
    trajectory_trace_preserving: bool

    def summary(self) -> str:
        lines = [
            f"weight normalization residual: {self.weight_residual:.3e}",
            f"covariance diagonal residual:  {self.diagonal_residual:.3e}",
            f"covariance PSD residual:       {self.psd_residual:.3e}",
        ]
        for i, r in enumerate(self.drift_residuals):
            lines.append(f"trace-constraint residual [{i}]: {r:.3e}")
        lines.append(
            f"trajectory_trace_preserving:   {'true' if self.trajectory_trace_preserving else 'false'}"
        )
        return "\n".join(lines)


def validate_model(model: LindbladModel) -> ValidationReport:
    """Report the constraint residuals of an already-constructed model.

    The hard invariants are enforced at construction, so their residuals
    here are diagnostics. The soft check is whether the weighted Hermitian
    parts of the noise operators cancel along every active eigenvector of
    the covariance; when they do, single trajectories preserve the trace
    exactly, not just in the ensemble mean.
    """
    w = model.weights
    c = model.covariance
    weight_residual = abs(float(np.sum(w * w)) - 1.0)
    diagonal_residual = float(np.max(np.abs(np.diag(c) - 1.0)))
    eigs, basis = np.linalg.eigh(c)
    psd_residual = float(max(0.0, -eigs[0]))

    # sum_n d_n (v_n + v_n^dagger) O[n, r] must vanish for every eigenvector
    # with a positive eigenvalue; null directions never receive noise.
    herm_parts = model.lindblad_ops + adjoint(model.lindblad_ops)
    active = np.flatnonzero(eigs > CLIP_TOL)
    residuals = np.array([
        frobenius(np.einsum("n,n,nab->ab", w, basis[:, r], herm_parts))
        for r in active
    ])
    preserving = bool(np.all(residuals <= DRIFT_CONSTRAINT_TOL)) if residuals.size else True
    return ValidationReport(
        weight_residual=weight_residual,
        diagonal_residual=diagonal_residual,
        psd_residual=psd_residual,
        drift_residuals=residuals,
        trajectory_trace_preserving=preserving,
    )


def drift_operator(model: LindbladModel) -> np.ndarray:
    """The deterministic drift U = -iH - (1/2) sum_n v_n^dagger v_n.

    Its Hermitian part is fixed by trace preservation of the mean evolution:
    U + U^dagger = -sum_n v_n^dagger v_n.
    """
    v = model.lindblad_ops
    vdv = np.einsum("nba,nbc->ac", v.conj(), v)
    return -1j * model.hamiltonian - 0.5 * vdv


def lindblad_rhs(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    """Generator of the mean evolution applied to a state.

    Returns -i[H, rho] + sum_n (v_n rho v_n^dagger
    - (1/2) v_n^dagger v_n rho - (1/2) rho v_n^dagger v_n).
    Accepts a single (d, d) state or a stacked (..., d, d) batch. The result
    is Hermitian and traceless up to rounding whenever rho is Hermitian.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (model.dim, model.dim):
        raise ValueError(
            f"lindblad_rhs: state shape {rho.shape[-2:]} does not match dim {model.dim}"
        )
    h = model.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    for v in model.lindblad_ops:
        vdag = v.conj().T
        vdv = vdag @ v
        out = out + (v @ rho) @ vdag - 0.5 * (vdv @ rho + rho @ vdv)
    return out


@dataclass(frozen=True)
class OdeTrajectory:
    """Uniformly sampled deterministic trajectory of the mean state."""

    times: np.ndarray   # (T,), ascending, uniform spacing
    states: np.ndarray  # (T, d, d)


def step_count(t_final: float, dt: float, name: str = "integration") -> int:
    """Number of steps, requiring dt to divide t_final within rounding."""
    if t_final <= 0.0 or dt <= 0.0:
        raise ValueError(f"{name}: t_final and dt must be positive")
    n = round(t_final / dt)
    if n < 1 or abs(n * dt - t_final) > 1e-9 * max(1.0, abs(t_final)):
        raise ValueError(
            f"{name}: dt={dt!r} does not divide t_final={t_final!r}"
        )
    return n


def integrate_ode(model: LindbladModel, rho0: np.ndarray, t_final: float,
                  dt: float, record_every: int = 1) -> OdeTrajectory:
    """Fixed-step classical 4th-order integration of the mean evolution.

    After every step the state is replaced by its Hermitian part. Trace and
    positivity are deliberately not renormalized or projected; drifts there
    are diagnostics of integrator trouble and would be masked by silent
    projection. Raises NumericalError when a step produces non-finite
    entries, which signals that dt is too large for the model norms.
    """
    rho = np.array(check_density_matrix(rho0), dtype=complex)
    n_steps = step_count(t_final, dt, "integrate_ode")
    if record_every < 1 or n_steps % record_every != 0:
        raise ValueError(
            f"integrate_ode: record_every={record_every} must divide the "
            f"step count {n_steps}"
        )

    states = [rho.copy()]
    times = [0.0]
    for k in range(n_steps):
        k1 = lindblad_rhs(model, rho)
        k2 = lindblad_rhs(model, rho + (0.5 * dt) * k1)
        k3 = lindblad_rhs(model, rho + (0.5 * dt) * k2)
        k4 = lindblad_rhs(model, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = hermitian_part(rho)
        if not np.all(np.isfinite(rho)):
            raise NumericalError(
                f"integrate_ode: non-finite state at t={(k + 1) * dt:g}; "
                f"dt={dt!r} is too large for this model"
            )
        if (k + 1) % record_every == 0:
            states.append(rho.copy())
            times.append((k + 1) * dt)
    return OdeTrajectory(times=np.array(times), states=np.array(states))


def check_step_size(model: LindbladModel, dt: float) -> None:
    """Guard the Euler bias regime: dt * (|H| + sum |v_n|^2) must stay small.

    Warns above 0.1 and refuses above 1.0 (Frobenius norms).
    """
    scale = frobenius(model.hamiltonian) + float(
        sum(frobenius(v) ** 2 for v in model.lindblad_ops)
    )
    stiffness = dt * scale
    if stiffness > 1.0:
        raise NumericalError(
            f"step size dt={dt!r} gives dt*(|H| + sum|v|^2) = {stiffness:.3g} > 1.0; "
            "refusing to integrate"
        )
    if stiffness > 0.1:
        warnings.warn(
            f"step size dt={dt!r} gives dt*(|H| + sum|v|^2) = {stiffness:.3g} > 0.1; "
            "discretization bias may dominate",
            RuntimeWarning,
            stacklevel=3,
        )
