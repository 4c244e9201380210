"""Dense complex linear algebra for small Hilbert spaces.

Matrices are plain numpy arrays with complex entries and value semantics:
no function here mutates its inputs. Dimensions stay desk-scale (d <= 32,
noise counts <= 16), so dense storage and LAPACK eigendecompositions are
the right tools; there is no sparse or GPU path.
"""

from __future__ import annotations

import numpy as np

# Structure-check tolerances. Double precision keeps rounding far below
# these for the matrix sizes this package targets.
HERMITICITY_TOL = 1e-10  # relative Frobenius defect allowed in Hermitian inputs
SYM_TOL = 1e-10          # relative symmetry / unit-diagonal defect for covariances
TRACE_TOL = 1e-8         # |tr(rho) - 1| allowed in a density matrix
PSD_TOL = 1e-8           # eigenvalue floor allowed in a density matrix
CLIP_TOL = 1e-10         # covariance eigenvalues within this of zero count as zero
FACTOR_TOL = 1e-10       # reconstruction error allowed in PSD factorizations

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
# Basis convention: index 0 is the ground state, so SIGMA_MINUS maps |1> to |0>.
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)


def frobenius(m: np.ndarray) -> float:
    """Frobenius norm as a plain float."""
    return float(np.linalg.norm(m))


def adjoint(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose, acting on the last two axes."""
    return np.conjugate(np.swapaxes(np.asarray(m), -1, -2))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    """(m + m^dagger) / 2 on the last two axes."""
    return 0.5 * (m + adjoint(m))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a @ b - b @ a. Raises ValueError on dimension mismatch."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-2:] != b.shape[-2:]:
        raise ValueError(
            f"commutator: dimension mismatch {a.shape[-2:]} vs {b.shape[-2:]}"
        )
    return a @ b - b @ a


def require_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"{name}: expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name}: entries must be finite")
    return m


def hermiticity_defect(m: np.ndarray) -> float:
    """Relative Frobenius distance from m to its Hermitian part."""
    scale = frobenius(m)
    if scale == 0.0:
        return 0.0
    return frobenius(m - adjoint(m)) / scale


def check_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL,
                    name: str = "matrix") -> np.ndarray:
    m = require_square(m, name)
    defect = hermiticity_defect(m)
    if defect > tol:
        raise ValueError(f"{name}: not Hermitian (relative defect {defect:.3e} > {tol:.1e})")
    return m


def check_density_matrix(rho: np.ndarray, trace_tol: float = TRACE_TOL,
                         psd_tol: float = PSD_TOL) -> np.ndarray:
    """Validate the state invariants: Hermitian, unit trace, PSD within tolerance."""
    rho = check_hermitian(rho, name="density matrix")
    trace_defect = abs(np.trace(rho) - 1.0)
    if trace_defect > trace_tol:
        raise ValueError(f"density matrix: |tr - 1| = {trace_defect:.3e} > {trace_tol:.1e}")
    smallest = float(np.linalg.eigvalsh(hermitian_part(rho))[0])
    if smallest < -psd_tol:
        raise ValueError(f"density matrix: min eigenvalue {smallest:.3e} < -{psd_tol:.1e}")
    return rho


def check_real_symmetric(c: np.ndarray, tol: float = SYM_TOL,
                         name: str = "covariance") -> np.ndarray:
    c = np.asarray(c, dtype=float)
    c = require_square(c, name)
    scale = max(frobenius(c), 1.0)
    if frobenius(c - c.T) > tol * scale:
        raise ValueError(f"{name}: not symmetric within {tol:.1e}")
    return c


def eig_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector columns) with
    m = V @ diag(w) @ V^dagger. Rejects inputs whose Hermiticity defect
    exceeds ``tol``; the Hermitian part is what gets decomposed.
    """
    m = check_hermitian(m, tol)
    w, v = np.linalg.eigh(hermitian_part(m))
    return w, v


def psd_factor(c: np.ndarray, clip_tol: float = CLIP_TOL) -> np.ndarray:
    """Factor a real symmetric PSD matrix as c = F @ F.T.

    F has one column per eigenvalue above ``clip_tol``, in the ascending
    order of the eigendecomposition, so its columns span the range of c
    even when c is singular. Triangular factorizations would reject
    singular covariances, hence the spectral route. Eigenvalues below
    -clip_tol mean c is not PSD and are an error.
    """
    c = check_real_symmetric(c)
    w, o = np.linalg.eigh(c)
    if w[0] < -clip_tol:
        raise ValueError(
            f"psd_factor: matrix is not positive semidefinite "
            f"(min eigenvalue {w[0]:.3e} < -{clip_tol:.1e})"
        )
    keep = np.flatnonzero(w > clip_tol)
    return o[:, keep] * np.sqrt(w[keep])


def matrix_from_literal(rows, name: str = "matrix") -> np.ndarray:
    """Parse a complex matrix literal: row-major rows of [re, im] pairs."""
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name}: malformed matrix literal ({exc})") from exc
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError(f"{name}: expected rows of [re, im] pairs, got shape {arr.shape}")
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got {arr.shape[0]}x{arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    return arr[..., 0] + 1j * arr[..., 1]


def real_matrix_from_literal(rows, name: str = "matrix") -> np.ndarray:
    """Parse a real matrix literal: row-major rows of plain numbers."""
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name}: malformed matrix literal ({exc})") from exc
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name}: expected a square real matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    return arr


def matrix_to_literal(m: np.ndarray) -> list:
    """Inverse of matrix_from_literal: nested lists of [re, im]."""
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def readonly(arr: np.ndarray) -> np.ndarray:
    """Copy and freeze an array so models can be shared across workers."""
    out = np.array(arr)
    out.setflags(write=False)
    return out
