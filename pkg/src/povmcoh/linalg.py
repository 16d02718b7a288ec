"""Dense complex Hermitian matrix utilities shared by every other module.

All matrices are plain ``numpy`` arrays of ``complex128``; operators on a
d-dimensional system are ``(d, d)`` arrays and stacked families are
``(n, d, d)``.  Matrices crossing a module boundary are checked to be finite
and (where required) Hermitian; tolerances are scale-relative.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "ValidationError",
    "as_operator",
    "hermiticity_defect",
    "require_hermitian",
    "hermitian_part",
    "dagger",
    "eig_min",
    "is_psd",
    "conj_sandwich",
    "matrix_to_json",
    "matrix_from_json",
]


class ValidationError(ValueError):
    """Input failed a boundary validation check (carries index/magnitude)."""


def as_operator(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite square complex matrix, raising on bad input."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValidationError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(arr.view(float))):
        bad = np.argwhere(~np.isfinite(arr))
        i, j = (int(x) for x in bad[0]) if bad.size else (0, 0)
        raise ValidationError(f"{name} contains a non-finite entry at ({i}, {j})")
    return arr


def hermiticity_defect(m: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Largest |m[i,j] - conj(m[j,i])| and the index where it occurs."""
    asym = np.abs(m - m.conj().T)
    idx = np.unravel_index(int(np.argmax(asym)), asym.shape)
    return float(asym[idx]), (int(idx[0]), int(idx[1]))


def hermiticity_tolerance(m: np.ndarray) -> float:
    # scale-relative: adequate for desk-scale dimensions
    return 1e-9 * (1.0 + float(np.max(np.abs(m), initial=0.0)))


def require_hermitian(m, name: str = "matrix", tol: float | None = None) -> np.ndarray:
    """Validate Hermiticity and return the matrix as a complex array."""
    arr = as_operator(m, name)
    if tol is None:
        tol = hermiticity_tolerance(arr)
    defect, (i, j) = hermiticity_defect(arr)
    if defect > tol:
        raise ValidationError(
            f"{name} is not Hermitian: |m[{i},{j}] - conj(m[{j},{i}])| = "
            f"{defect:.3e} exceeds tolerance {tol:.3e}"
        )
    return arr


def hermitian_part(m: np.ndarray) -> np.ndarray:
    """(m + m†)/2; suppresses round-off drift of nominally Hermitian results."""
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def eig_min(m, tol: float | None = None) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    arr = require_hermitian(m, tol=tol)
    return float(np.linalg.eigvalsh(arr)[0])


def is_psd(m, tol: float = 1e-9) -> bool:
    """True iff the smallest eigenvalue is >= -tol."""
    return eig_min(m) >= -tol


def conj_sandwich(k, m) -> np.ndarray:
    """K† m K for a general matrix K and Hermitian m, re-symmetrized."""
    karr = as_operator(k, "kraus operator")
    marr = require_hermitian(m, "operator")
    if karr.shape[0] != marr.shape[0]:
        raise ValidationError(
            f"dimension mismatch: K is {karr.shape}, m is {marr.shape}"
        )
    return hermitian_part(karr.conj().T @ marr @ karr)


def matrix_to_json(m: np.ndarray) -> list:
    """Nested lists with complex entries encoded as [re, im] pairs."""
    arr = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in arr]


def matrix_from_json(data, name: str = "matrix") -> np.ndarray:
    try:
        arr = np.asarray(
            [[complex(pair[0], pair[1]) for pair in row] for row in data],
            dtype=complex,
        )
    except (TypeError, IndexError) as exc:
        raise ValidationError(f"{name}: malformed [re, im] entry encoding") from exc
    return as_operator(arr, name)
