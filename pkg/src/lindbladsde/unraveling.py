"""Stochastic unraveling of the mean evolution.

Single trajectories follow the linear update

    rho -> rho + sum_n d_n (v_n rho + rho v_n^dagger) dW^n + L(rho) dt

with correlated Gaussian increments, so the ensemble mean obeys the
deterministic master equation. Trajectory-level trace preservation is a
stronger property that holds only when the weighted Hermitian parts of the
noise operators cancel along every active covariance direction; positivity
of single trajectories is not guaranteed by the linear scheme at all, so
both are monitored and reported, never enforced.

Randomness contract: increments come from the counter-based Philox
generator keyed by (seed, trajectory index), drawn in step order within a
trajectory. Trajectory i therefore receives the same noise no matter how
trajectories are scheduled, and ensemble reductions run in a fixed
trajectory-index order with a fixed chunk size, so results are
bit-reproducible for a given (seed, n_traj, dt, model) regardless of the
worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lindblad import (
    LindbladModel,
    NumericalError,
    check_step_size,
    drift_operator,
    step_count,
)
from .operators import (
    CLIP_TOL,
    HERMITICITY_TOL,
    adjoint,
    check_density_matrix,
    check_hermitian,
    check_real_symmetric,
    hermitian_part,
    readonly,
)

STEPPERS = ("euler", "exact_unitary")

# Trajectories are reduced in chunks of this fixed size; the value must not
# depend on the worker count or results would not be reproducible.
_CHUNK_TRAJECTORIES = 4096


@dataclass(frozen=True)
class NoiseBasis:
    """Orthogonal eigenbasis of the increment covariance.

    eigenvalues are ascending and clipped so that anything within CLIP_TOL
    of zero is exactly zero; active_count is the number of strictly
    positive eigenvalues. Directions with zero eigenvalue never receive a
    random draw.
    """

    orthogonal: np.ndarray   # (N, N), columns are eigenvectors
    eigenvalues: np.ndarray  # (N,), ascending, >= 0
    active_count: int

    def __post_init__(self):
        o = np.asarray(self.orthogonal, dtype=float)
        w = np.asarray(self.eigenvalues, dtype=float)
        n = o.shape[0]
        if o.shape != (n, n) or w.shape != (n,):
            raise ValueError("NoiseBasis: inconsistent shapes")
        if np.linalg.norm(o.T @ o - np.eye(n)) > 1e-10:
            raise ValueError("NoiseBasis: basis is not orthogonal within 1e-10")
        if np.any(w < 0.0):
            raise ValueError("NoiseBasis: eigenvalues must be nonnegative")
        object.__setattr__(self, "orthogonal", readonly(o))
        object.__setattr__(self, "eigenvalues", readonly(w))

    @property
    def noise_count(self) -> int:
        return self.eigenvalues.shape[0]


def diagonalize_covariance(c: np.ndarray, clip_tol: float = CLIP_TOL) -> NoiseBasis:
    """Eigendecompose a PSD covariance, zeroing eigenvalues within clip_tol."""
    c = check_real_symmetric(c)
    w, o = np.linalg.eigh(c)
    if w[0] < -clip_tol:
        raise ValueError(
            f"diagonalize_covariance: not positive semidefinite "
            f"(min eigenvalue {w[0]:.3e} < -{clip_tol:.1e})"
        )
    w = w.copy()
    w[w <= clip_tol] = 0.0
    return NoiseBasis(orthogonal=o, eigenvalues=w,
                      active_count=int(np.count_nonzero(w > 0.0)))


def sample_increments(basis: NoiseBasis, dt: float, rng: np.random.Generator,
                      count: int | None = None) -> np.ndarray:
    """Draw correlated increment vectors for steps of length dt.

    Each active eigendirection r gets an independent normal of variance
    eigenvalue_r * dt; inactive directions get exactly zero, which keeps
    the increments inside the range of the covariance by construction. The
    generator is advanced by one draw per direction, active or not, so the
    stream layout does not depend on the covariance rank. With ``count``
    the result is a (count, N) batch consuming the stream in row order,
    exactly as count successive single draws would.
    """
    if dt <= 0.0:
        raise ValueError("sample_increments: dt must be positive")
    scale = np.sqrt(basis.eigenvalues * dt)
    if count is None:
        return basis.orthogonal @ (scale * rng.standard_normal(basis.noise_count))
    xi = rng.standard_normal((count, basis.noise_count))
    return (xi * scale) @ basis.orthogonal.T


def trajectory_rng(seed: int, traj_index: int) -> np.random.Generator:
    """Counter-based generator for one trajectory, keyed by (seed, index)."""
    if seed < 0 or traj_index < 0:
        raise ValueError("seed and trajectory index must be nonnegative")
    key = np.array([seed, traj_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _euler_update(model: LindbladModel, rho: np.ndarray, dt: float,
                  dw: np.ndarray) -> np.ndarray:
    """One linear update, no finiteness check. rho (..., d, d), dw (..., N).

    Computed as G rho + rho G^dagger + dt sum_n v_n rho v_n^dagger with
    G = sum_n d_n dW^n v_n + U dt, which regroups the noise and drift terms
    of the update without changing them.
    """
    g = np.einsum("...n,nab->...ab", dw * model.weights, model.lindblad_ops)
    g = g + dt * drift_operator(model)
    out = rho + g @ rho + rho @ adjoint(g)
    for v in model.lindblad_ops:
        out = out + dt * ((v @ rho) @ v.conj().T)
    return hermitian_part(out)


def sde_step(model: LindbladModel, rho: np.ndarray, dt: float,
             dw: np.ndarray) -> np.ndarray:
    """One Euler step of the unraveling, re-Hermitized.

    Returns rho + sum_n d_n (v_n rho + rho v_n^dagger) dW^n + L(rho) dt,
    then (out + out^dagger) / 2. Accepts stacked states (..., d, d) with
    matching stacked increments (..., N). Raises NumericalError on
    non-finite output.
    """
    rho = np.asarray(rho, dtype=complex)
    dw = np.asarray(dw, dtype=float)
    d, n = model.dim, model.noise_count
    if rho.shape[-2:] != (d, d):
        raise ValueError(f"sde_step: state shape {rho.shape[-2:]} does not match dim {d}")
    if dw.shape[-1:] != (n,) or dw.shape[:-1] != rho.shape[:-2]:
        raise ValueError(
            f"sde_step: increment shape {dw.shape} does not match state batch "
            f"{rho.shape[:-2]} with {n} noises"
        )
    if dt <= 0.0:
        raise ValueError("sde_step: dt must be positive")
    out = _euler_update(model, rho, dt, dw)
    if not np.all(np.isfinite(out)):
        raise NumericalError("sde_step: non-finite output")
    return out


def unitary_noise_operator(model: LindbladModel) -> np.ndarray:
    """The Hermitian K with v = -iK, required by the exact-unitary stepper.

    Only single-noise models whose operator is anti-Hermitian qualify; for
    those the one-step evolution is an exact unitary conjugation.
    """
    if model.noise_count != 1:
        raise ValueError(
            f"exact_unitary stepper needs a single-noise model, got "
            f"{model.noise_count} noise operators"
        )
    k = 1j * model.lindblad_ops[0]
    return check_hermitian(k, HERMITICITY_TOL, "noise operator (as -iK)")


def stochastic_unitary_step(h: np.ndarray, k: np.ndarray, rho: np.ndarray,
                            dt: float, dw: float) -> np.ndarray:
    """Exact step V rho V^dagger with V = exp(-i (H dt + K dW)).

    The exponential is evaluated by eigendecomposition of the Hermitian
    combination, so trace and the full spectrum of rho are preserved to
    rounding. Accepts stacked states and increments.
    """
    h = check_hermitian(np.asarray(h, dtype=complex), name="hamiltonian")
    k = check_hermitian(np.asarray(k, dtype=complex), name="noise generator")
    rho = np.asarray(rho, dtype=complex)
    dw = np.asarray(dw, dtype=float)
    generator = h * dt + k * np.expand_dims(dw, (-1, -2))
    w, q = np.linalg.eigh(generator)
    v = (q * np.exp(-1j * w)[..., None, :]) @ adjoint(q)
    return hermitian_part(v @ rho @ adjoint(v))


@dataclass(frozen=True)
class Trajectory:
    """One stochastic realization with its running diagnostics.

    trace_extremes covers every step; min_eigenvalue_seen and purity_series
    are evaluated at the recorded samples.
    """

    times: np.ndarray         # (T,)
    states: np.ndarray        # (T, d, d)
    trace_extremes: tuple     # (min, max) of Re tr(rho) over all steps
    min_eigenvalue_seen: float
    purity_series: np.ndarray  # (T,), tr(rho^2) at the recorded samples


@dataclass(frozen=True)
class EnsembleStats:
    """Monte Carlo estimate of the mean state over time.

    stderr is the scalar Frobenius-norm standard error of the mean at each
    recorded time.
    """

    times: np.ndarray       # (T,)
    mean_state: np.ndarray  # (T, d, d)
    stderr: np.ndarray      # (T,)
    trajectory_count: int
    seed: int


@dataclass(frozen=True)
class EnsembleDiagnostics:
    """Worst cases over all trajectories of an ensemble run."""

    trace_min: float
    trace_max: float
    min_eigenvalue: float


def _record_grid(n_steps: int, record_every: int, dt: float):
    if record_every < 1 or n_steps % record_every != 0:
        raise ValueError(
            f"record_every={record_every} must divide the step count {n_steps}"
        )
    indices = np.arange(0, n_steps + 1, record_every)
    return indices, indices * dt


def _min_eigenvalues(states: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of stacked Hermitian matrices, closed form for d=2."""
    d = states.shape[-1]
    if d == 2:
        a = states[..., 0, 0].real
        c = states[..., 1, 1].real
        r = np.sqrt(0.25 * (a - c) ** 2 + np.abs(states[..., 0, 1]) ** 2)
        return 0.5 * (a + c) - r
    return np.linalg.eigvalsh(states)[..., 0]


def _purities(states: np.ndarray) -> np.ndarray:
    return np.einsum("...ab,...ba->...", states, states).real


def run_trajectory(model: LindbladModel, rho0: np.ndarray, t_final: float,
                   dt: float, seed: int, traj_index: int = 0,
                   record_every: int = 1, stepper: str = "euler") -> Trajectory:
    """Integrate a single stochastic trajectory.

    The noise stream is the one trajectory ``traj_index`` would receive
    inside an ensemble run with the same seed.
    """
    rho = np.array(check_density_matrix(rho0), dtype=complex)
    if stepper not in STEPPERS:
        raise ValueError(f"unknown stepper {stepper!r}; expected one of {STEPPERS}")
    check_step_size(model, dt)
    n_steps = step_count(t_final, dt, "run_trajectory")
    rec_indices, times = _record_grid(n_steps, record_every, dt)
    basis = diagonalize_covariance(model.covariance)
    k_op = unitary_noise_operator(model) if stepper == "exact_unitary" else None
    rng = trajectory_rng(seed, traj_index)

    states = [rho.copy()]
    trace = float(np.trace(rho).real)
    trace_min = trace_max = trace
    for k in range(n_steps):
        dw = sample_increments(basis, dt, rng)
        if stepper == "euler":
            rho = _euler_update(model, rho, dt, dw)
        else:
            rho = stochastic_unitary_step(model.hamiltonian, k_op, rho, dt, dw[0])
        if not np.all(np.isfinite(rho)):
            raise NumericalError(
                f"trajectory {traj_index}: non-finite state at t={(k + 1) * dt:g}"
            )
        trace = float(np.trace(rho).real)
        trace_min = min(trace_min, trace)
        trace_max = max(trace_max, trace)
        if (k + 1) % record_every == 0:
            states.append(rho.copy())
    states = np.array(states)
    return Trajectory(
        times=times,
        states=states,
        trace_extremes=(trace_min, trace_max),
        min_eigenvalue_seen=float(_min_eigenvalues(states).min()),
        purity_series=_purities(states),
    )


def _trajectory_increments(seed: int, start: int, count: int, n_steps: int,
                           basis: NoiseBasis, dt: float) -> np.ndarray:
    """Increments for trajectories [start, start+count), shape (count, n_steps, N)."""
    out = np.empty((count, n_steps, basis.noise_count))
    for i in range(count):
        out[i] = sample_increments(basis, dt, trajectory_rng(seed, start + i),
                                   count=n_steps)
    return out


def _run_chunk(model, rho0, dt, n_steps, rec_indices, basis, k_op, seed,
               start, count, stepper):
    d = model.dim
    rho = np.broadcast_to(rho0, (count, d, d)).astype(complex)
    dw = _trajectory_increments(seed, start, count, n_steps, basis, dt)

    n_rec = len(rec_indices)
    state_sum = np.zeros((n_rec, d, d), complex)
    sq_sum = np.zeros(n_rec)
    min_eig = np.inf
    rec_pos = 0
    if rec_indices[0] == 0:
        state_sum[0] = rho.sum(axis=0)
        sq_sum[0] = float(np.einsum("kab,kab->", rho, rho.conj()).real)
        min_eig = min(min_eig, float(_min_eigenvalues(rho).min()))
        rec_pos = 1

    traces = np.einsum("kaa->k", rho).real
    trace_min = float(traces.min())
    trace_max = float(traces.max())
    for k in range(n_steps):
        if stepper == "euler":
            rho = _euler_update(model, rho, dt, dw[:, k, :])
        else:
            rho = stochastic_unitary_step(model.hamiltonian, k_op, rho, dt, dw[:, k, 0])
        finite = np.all(np.isfinite(rho), axis=(-1, -2))
        if not finite.all():
            bad = int(np.flatnonzero(~finite)[0])
            raise NumericalError(
                f"trajectory {start + bad}: non-finite state at t={(k + 1) * dt:g}"
            )
        traces = np.einsum("kaa->k", rho).real
        trace_min = min(trace_min, float(traces.min()))
        trace_max = max(trace_max, float(traces.max()))
        if rec_pos < n_rec and k + 1 == rec_indices[rec_pos]:
            state_sum[rec_pos] = rho.sum(axis=0)
            sq_sum[rec_pos] = float(np.einsum("kab,kab->", rho, rho.conj()).real)
            min_eig = min(min_eig, float(_min_eigenvalues(rho).min()))
            rec_pos += 1
    return state_sum, sq_sum, trace_min, trace_max, min_eig


def run_ensemble(model: LindbladModel, rho0: np.ndarray, t_final: float,
                 dt: float, n_traj: int, seed: int, record_every: int = 1,
                 stepper: str = "euler", workers: int = 1):
    """Monte Carlo ensemble of independent trajectories.

    Returns (EnsembleStats, EnsembleDiagnostics). Trajectories are evolved
    in fixed-size chunks, vectorized over the chunk; chunks may run on a
    thread pool, and partial sums are reduced in chunk order, so the result
    is identical for a given (seed, n_traj, dt, model) whatever the worker
    count. Trace extremes are tracked at every step, eigenvalue and purity
    diagnostics at the recorded samples.

    Args:
        model: validated open-system model, shared read-only.
        rho0: initial density matrix.
        t_final: final time; dt must divide it.
        dt: step size, guarded against the unstable regime.
        n_traj: number of independent trajectories.
        seed: base seed; trajectory i uses the (seed, i) stream.
        record_every: sample cadence in steps; must divide the step count.
        stepper: "euler" for the general linear scheme, "exact_unitary" for
            single-noise models with an anti-Hermitian noise operator.
        workers: thread count for chunk evaluation.
    """
    rho0 = np.array(check_density_matrix(rho0), dtype=complex)
    if stepper not in STEPPERS:
        raise ValueError(f"unknown stepper {stepper!r}; expected one of {STEPPERS}")
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    check_step_size(model, dt)
    n_steps = step_count(t_final, dt, "run_ensemble")
    rec_indices, times = _record_grid(n_steps, record_every, dt)
    basis = diagonalize_covariance(model.covariance)
    k_op = unitary_noise_operator(model) if stepper == "exact_unitary" else None

    starts = list(range(0, n_traj, _CHUNK_TRAJECTORIES))
    jobs = [(s, min(_CHUNK_TRAJECTORIES, n_traj - s)) for s in starts]

    def work(job):
        start, count = job
        return _run_chunk(model, rho0, dt, n_steps, rec_indices, basis, k_op,
                          seed, start, count, stepper)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(work, jobs))
    else:
        partials = [work(job) for job in jobs]

    n_rec = len(rec_indices)
    state_sum = np.zeros((n_rec, model.dim, model.dim), complex)
    sq_sum = np.zeros(n_rec)
    trace_min, trace_max, min_eig = np.inf, -np.inf, np.inf
    for part_states, part_sq, tmin, tmax, meig in partials:
        state_sum += part_states
        sq_sum += part_sq
        trace_min = min(trace_min, tmin)
        trace_max = max(trace_max, tmax)
        min_eig = min(min_eig, meig)

    mean = state_sum / n_traj
    mean_sq = np.einsum("tab,tab->t", mean, mean.conj()).real
    if n_traj > 1:
        variance = np.maximum(sq_sum - n_traj * mean_sq, 0.0) / (n_traj - 1)
        stderr = np.sqrt(variance / n_traj)
    else:
        stderr = np.zeros(n_rec)
    stats = EnsembleStats(times=times, mean_state=mean, stderr=stderr,
                          trajectory_count=n_traj, seed=seed)
    diagnostics = EnsembleDiagnostics(trace_min=float(trace_min),
                                      trace_max=float(trace_max),
                                      min_eigenvalue=float(min_eig))
    return stats, diagnostics
