"""POVM data model: validation, incoherent classification, dephasing, Born rule.

The incoherent basis is always the computational (index) basis of the stored
arrays.  Basis changes are expressed by conjugating the POVM explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    ValidationError,
    hermitian_part,
    matrix_from_json,
    matrix_to_json,
    require_hermitian,
)

__all__ = [
    "Povm",
    "PovmValidationReport",
    "validate",
    "require_valid",
    "is_incoherent",
    "dephase_measurement",
    "dephase_state",
    "born_distribution",
    "random_povm",
    "random_density_matrix",
    "require_density_matrix",
    "povm_to_json",
    "povm_from_json",
]

DEFAULT_TOL = 1e-8

# Born-rule probabilities this negative indicate a genuinely bad input rather
# than eigensolver / SDP round-off, so they raise instead of clamping.
CLAMP_FLOOR = -1e-10


@dataclass(frozen=True)
class Povm:
    """An n-outcome measurement: stack of (d, d) Hermitian components.

    Construction checks shape, finiteness and Hermiticity.  Positivity and
    completeness are checked by :func:`validate` (report style) so that
    objects carrying shot-noise artifacts can still be represented.
    """

    components: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.components, dtype=complex)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ValidationError(
                f"POVM components must be a stack of square matrices, got {arr.shape}"
            )
        if arr.shape[0] < 1:
            raise ValidationError("POVM needs at least one outcome")
        for a in range(arr.shape[0]):
            require_hermitian(arr[a], name=f"component {a}")
        arr.setflags(write=False)
        object.__setattr__(self, "components", arr)

    @property
    def dim(self) -> int:
        return self.components.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.components.shape[0]

    def __iter__(self):
        return iter(self.components)


@dataclass(frozen=True)
class PovmValidationReport:
    tol: float
    psd_margins: np.ndarray = field(repr=False)  # smallest eigenvalue per component
    completeness_residual: float
    valid: bool

    def summary(self) -> str:
        status = "valid" if self.valid else "INVALID"
        return (
            f"{status}: min PSD margin {float(self.psd_margins.min()):.3e}, "
            f"completeness residual {self.completeness_residual:.3e} (tol {self.tol:.1e})"
        )


def validate(povm: Povm, tol: float = DEFAULT_TOL) -> PovmValidationReport:
    """Per-component PSD margins and completeness residual, report style."""
    margins = np.linalg.eigvalsh(povm.components)[:, 0].real
    residual = float(
        np.max(np.abs(povm.components.sum(axis=0) - np.eye(povm.dim)))
    )
    ok = bool(margins.min() >= -tol and residual <= tol)
    return PovmValidationReport(
        tol=tol, psd_margins=margins, completeness_residual=residual, valid=ok
    )


def require_valid(povm: Povm, tol: float = DEFAULT_TOL) -> Povm:
    report = validate(povm, tol)
    if not report.valid:
        raise ValidationError(f"invalid POVM -- {report.summary()}")
    return povm


def is_incoherent(povm: Povm, tol: float = DEFAULT_TOL) -> bool:
    """True iff every off-diagonal entry of every component has modulus <= tol."""
    off = povm.components.copy()
    idx = np.arange(povm.dim)
    off[:, idx, idx] = 0.0
    return bool(np.max(np.abs(off), initial=0.0) <= tol)


def dephase_measurement(povm: Povm) -> Povm:
    """Keep only the diagonal of each component (dual of total dephasing)."""
    diags = np.einsum("aii->ai", povm.components).real
    out = np.zeros_like(povm.components)
    idx = np.arange(povm.dim)
    out[:, idx, idx] = diags
    return Povm(out)


def dephase_state(rho: np.ndarray) -> np.ndarray:
    """Total dephasing: zero all off-diagonal entries of a state."""
    out = np.zeros_like(np.asarray(rho, dtype=complex))
    idx = np.arange(out.shape[0])
    out[idx, idx] = np.diag(rho).real
    return out


def require_density_matrix(rho, tol: float = DEFAULT_TOL) -> np.ndarray:
    arr = require_hermitian(rho, "density matrix")
    tr = float(np.trace(arr).real)
    if abs(tr - 1.0) > 1e-9:
        raise ValidationError(f"density matrix trace is {tr!r}, expected 1")
    if float(np.linalg.eigvalsh(arr)[0]) < -tol:
        raise ValidationError("density matrix is not positive semidefinite")
    return arr


def born_distribution(povm: Povm, rho: np.ndarray) -> np.ndarray:
    """Outcome probabilities p(a) = Tr[rho A_a], clamped against round-off."""
    arr = np.asarray(rho, dtype=complex)
    if arr.shape != (povm.dim, povm.dim):
        raise ValidationError(
            f"dimension mismatch: state is {arr.shape}, POVM has d={povm.dim}"
        )
    probs = np.einsum("ij,aji->a", arr, povm.components).real
    if probs.min() < CLAMP_FLOOR:
        bad = int(np.argmin(probs))
        raise ValidationError(
            f"probability p({bad}) = {probs[bad]:.3e} is negative beyond round-off"
        )
    if probs.max() > 1.0 - CLAMP_FLOOR:
        bad = int(np.argmax(probs))
        raise ValidationError(
            f"probability p({bad}) = {probs[bad]!r} exceeds 1 beyond round-off"
        )
    return np.clip(probs, 0.0, 1.0)


def random_povm(dim: int, outcomes: int, seed: int) -> Povm:
    """Deterministic random POVM: B_a = S^{-1/2} P_a S^{-1/2}, S = sum P_a."""
    if dim < 1 or outcomes < 1:
        raise ValidationError("dim and outcomes must be >= 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((outcomes, dim, dim)) + 1j * rng.standard_normal(
        (outcomes, dim, dim)
    )
    p = np.einsum("aij,akj->aik", g, g.conj())
    s = p.sum(axis=0)
    w, v = np.linalg.eigh(s)
    s_inv_sqrt = (v * (1.0 / np.sqrt(w))) @ v.conj().T
    b = np.einsum("ij,ajk,kl->ail", s_inv_sqrt, p, s_inv_sqrt)
    return Povm(hermitian_part(b))


def random_density_matrix(dim: int, rng, pure: bool = False) -> np.ndarray:
    """Random state: Haar vector (pure) or normalized Ginibre product (mixed)."""
    rng = np.random.default_rng(rng)
    if pure:
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        return np.outer(v, v.conj())
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def povm_to_json(povm: Povm) -> dict:
    return {
        "dim": povm.dim,
        "outcomes": povm.n_outcomes,
        "components": [matrix_to_json(c) for c in povm.components],
    }


def povm_from_json(data: dict) -> Povm:
    try:
        comps = [matrix_from_json(c, f"component {a}") for a, c in enumerate(data["components"])]
    except KeyError as exc:
        raise ValidationError(f"POVM JSON missing key {exc}") from exc
    povm = Povm(np.array(comps))
    if "dim" in data and int(data["dim"]) != povm.dim:
        raise ValidationError(
            f"POVM JSON dim field {data['dim']} does not match components ({povm.dim})"
        )
    if "outcomes" in data and int(data["outcomes"]) != povm.n_outcomes:
        raise ValidationError(
            f"POVM JSON outcomes field {data['outcomes']} does not match "
            f"components ({povm.n_outcomes})"
        )
    return povm
