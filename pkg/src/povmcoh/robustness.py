"""Robustness of measurement coherence via a small semidefinite program.

Primal form used by the solver: minimize (max_i sum_a D_a[i]) - 1 over real
diagonals D_a subject to Diag(D_a) - A_a >= 0.  Any feasible diagonal set can
be raised so the column sums all meet the max, which recovers the mixing
formulation: M_a = (Diag(D_a) - A_a) / s is the POVM mixed in with weight
s = value.

Dual form: maximize sum_a Tr[Z_a A_a] - 1 over PSD Z_a sharing one common
diagonal sigma with trace 1.  The solver is an over-relaxed ADMM splitting
between the PSD cones and the epigraph constraint; both primal and dual
iterates are polished onto their exact feasible sets before the duality gap
is reported, so the returned value always carries a certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .linalg import ValidationError, hermitian_part
from .monotones import c_l1, c_linf
from .povm import Povm, require_valid

__all__ = [
    "RobustnessProblem",
    "SdpSolution",
    "robustness",
    "qubit_robustness_closed_form",
    "DualWitness",
    "dual_witness_from_pair",
    "SandwichReport",
    "sandwich_check",
]

SdpStatus = Literal["optimal", "max_iter", "infeasible"]


@dataclass(frozen=True)
class RobustnessProblem:
    povm: Povm
    tolerance: float = 1e-7
    max_iterations: int = 200_000
    seed: int | None = None  # optional random start, for self-consistency checks

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be positive")


@dataclass(frozen=True)
class SdpSolution:
    value: float
    primal_diagonals: np.ndarray = field(repr=False)  # (n, d) real
    dual_matrices: np.ndarray = field(repr=False)  # (n, d, d) complex, PSD
    sigma: np.ndarray = field(repr=False)  # (d,) shared dual diagonal
    duality_gap: float
    status: SdpStatus
    iterations: int

    @property
    def dual_value(self) -> float:
        return self.value - self.duality_gap

    def recover_mixing_povm(self, povm: Povm, tol: float = 1e-7) -> Povm | None:
        """The measurement M with (A + s M)/(1 + s) incoherent, if s > tol."""
        s = self.value
        if s <= tol:
            return None
        n, d = self.primal_diagonals.shape
        comps = np.zeros((n, d, d), dtype=complex)
        idx = np.arange(d)
        comps[:, idx, idx] = self.primal_diagonals
        return Povm(hermitian_part((comps - povm.components) / s))


def _psd_project(stack: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(stack)
    return np.einsum("aik,ak,ajk->aij", v, np.clip(w, 0.0, None), v.conj())


def _epigraph_prox(m: np.ndarray, rho: float) -> tuple[np.ndarray, float]:
    """argmin_t,D of t + (rho/2)||D - m||^2 with column sums of D below t."""
    n, d = m.shape
    c = m.sum(axis=0)
    cs = np.sort(c)[::-1]
    csum = np.cumsum(cs)
    t = (csum[-1] - n / rho) / d
    for k in range(1, d + 1):
        tk = (csum[k - 1] - n / rho) / k
        if cs[k - 1] >= tk and (k == d or cs[k] <= tk):
            t = tk
            break
    return m - np.maximum(0.0, c - t)[None, :] / n, t


def _polish_dual(z: np.ndarray, max_iter: int = 300, tol: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Project a dual candidate onto the exact feasible set by alternating
    the PSD cone with the shared-diagonal/unit-trace affine space, finishing
    with a rescaled eigenvalue shift so feasibility holds to machine accuracy."""
    z = hermitian_part(z.copy())
    d = z.shape[1]
    idx = np.arange(d)
    for _ in range(max_iter):
        diag = np.einsum("aii->ai", z).real
        sigma = diag.mean(axis=0)
        sigma = sigma + (1.0 - sigma.sum()) / d
        z[:, idx, idx] = sigma
        w, v = np.linalg.eigh(z)
        if w.min() >= -tol:
            break
        z = np.einsum("aik,ak,ajk->aij", v, np.clip(w, 0.0, None), v.conj())
    diag = np.einsum("aii->ai", z).real
    sigma = diag.mean(axis=0)
    sigma = sigma + (1.0 - sigma.sum()) / d
    z[:, idx, idx] = sigma
    wmin = float(np.linalg.eigvalsh(z).min())
    if wmin < 0.0:
        delta = -wmin
        z = (z + delta * np.eye(d)) / (1.0 + delta * d)
        sigma = (sigma + delta) / (1.0 + delta * d)
    return z, sigma


def robustness(problem: RobustnessProblem) -> SdpSolution:
    """Solve the robustness SDP with certified primal/dual bounds.

    The reported value is the polished primal objective (a feasible upper
    bound); duality_gap is the difference to the polished dual objective.  If
    the gap cannot be driven below the tolerance within the iteration budget
    the best certified bracket is returned with status "max_iter".
    """
    povm = require_valid(problem.povm)
    a = povm.components
    n, d = povm.n_outcomes, povm.dim
    tol = problem.tolerance
    rho, alpha = 1.0, 1.7
    check_every = 25

    idx = np.arange(d)
    a_diag = np.einsum("aii->ai", a).real
    if problem.seed is None:
        s_var = np.zeros((n, d, d), dtype=complex)
        u_var = np.zeros((n, d, d), dtype=complex)
    else:
        rng = np.random.default_rng(problem.seed)
        s_var = _psd_project(
            hermitian_part(
                rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
            )
        )
        u_var = np.zeros((n, d, d), dtype=complex)

    best: tuple[float, float, np.ndarray, np.ndarray, np.ndarray, int] | None = None
    for it in range(1, problem.max_iterations + 1):
        m = np.einsum("aii->ai", s_var - u_var).real + a_diag
        diag, _ = _epigraph_prox(m, rho)
        dx = np.zeros((n, d, d), dtype=complex)
        dx[:, idx, idx] = diag
        relaxed = alpha * dx + (1.0 - alpha) * (s_var + a)
        s_new = _psd_project(relaxed - a + u_var)
        u_var = u_var + relaxed - s_new - a
        prim_res = float(np.linalg.norm(dx - s_new - a))
        dual_res = rho * float(
            np.linalg.norm(np.einsum("aii->ai", s_new - s_var))
        )
        s_var = s_new

        if it % check_every == 0 or (prim_res < tol and dual_res < tol):
            wmin = np.linalg.eigvalsh(dx - a).min(axis=1)
            diag_feas = diag + np.maximum(0.0, -wmin)[:, None]
            val_primal = float(diag_feas.sum(axis=0).max() - 1.0)
            z, sigma = _polish_dual(-rho * hermitian_part(u_var))
            val_dual = float(np.einsum("aij,aji->", z, a).real - 1.0)
            gap = val_primal - val_dual
            if best is None or gap < best[0]:
                best = (gap, val_primal, diag_feas, z, sigma, it)
            if gap <= tol and prim_res <= 100 * tol:
                return _build_solution(diag_feas, val_primal, z, sigma, gap, "optimal", it)

    gap, val_primal, diag_feas, z, sigma, it = best
    return _build_solution(diag_feas, val_primal, z, sigma, gap, "max_iter", it)


def _build_solution(diag_feas, value, z, sigma, gap, status, iterations) -> SdpSolution:
    # raise slack columns so the completeness equality holds exactly
    slack = (1.0 + value) - diag_feas.sum(axis=0)
    diag_out = diag_feas.copy()
    diag_out[0] += np.maximum(slack, 0.0)
    return SdpSolution(
        value=value,
        primal_diagonals=diag_out,
        dual_matrices=z,
        sigma=sigma,
        duality_gap=float(gap),
        status=status,
        iterations=iterations,
    )


def qubit_robustness_closed_form(povm: Povm) -> float:
    """For d = 2 the robustness equals the l-infinity monotone exactly."""
    if povm.dim != 2:
        raise ValidationError(f"closed form requires d=2, got d={povm.dim}")
    return c_linf(povm).value


@dataclass(frozen=True)
class DualWitness:
    value: float  # certified lower bound on the robustness
    dual_matrices: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    pair: tuple[int, int]


def dual_witness_from_pair(povm: Povm, i: int, j: int) -> DualWitness:
    """Feasible dual point built from phase-aligned superpositions of |i>,|j>.

    Its objective equals sum_a |<i|A_a|j>|; at the c_linf argmax pair this is
    exactly the l-infinity monotone, proving the lower bound on robustness.
    """
    d = povm.dim
    if not (0 <= i < j < d):
        raise ValidationError(f"need 0 <= i < j < d={d}, got ({i}, {j})")
    n = povm.n_outcomes
    z = np.zeros((n, d, d), dtype=complex)
    for a in range(n):
        entry = povm.components[a][j, i]  # <j|A_a|i>
        phase = np.exp(1j * np.angle(entry)) if entry != 0 else 1.0
        psi = np.zeros(d, dtype=complex)
        psi[i] = 1.0 / np.sqrt(2.0)
        psi[j] = phase / np.sqrt(2.0)
        z[a] = np.outer(psi, psi.conj())
    sigma = np.zeros(d)
    sigma[i] = sigma[j] = 0.5
    value = float(np.einsum("aij,aji->", z, povm.components).real - 1.0)
    return DualWitness(value=value, dual_matrices=z, sigma=sigma, pair=(i, j))


@dataclass(frozen=True)
class SandwichReport:
    c_linf: float
    robustness_value: float
    c_l1_half: float
    duality_gap: float
    tolerance: float
    passed: bool


def sandwich_check(povm: Povm, tolerance: float = 1e-6) -> SandwichReport:
    """Check c_linf <= R_C <= c_l1 / 2 on one measurement."""
    low = c_linf(povm).value
    high = 0.5 * c_l1(povm)
    sol = robustness(RobustnessProblem(povm, tolerance=min(tolerance, 1e-7)))
    ok = low - tolerance <= sol.value <= high + tolerance
    return SandwichReport(
        c_linf=low,
        robustness_value=sol.value,
        c_l1_half=high,
        duality_gap=sol.duality_gap,
        tolerance=tolerance,
        passed=bool(ok),
    )
