"""Coherence monotones for measurements.

Closed forms first: the matrix of summed off-diagonal moduli, its largest
entry (the l-infinity monotone) and the full off-diagonal sum (the l1
quantity, which is *not* a monotone and is only useful as an upper bound on
robustness after halving).

The statistical-distance monotone min over incoherent measurements of the
worst-case divergence is estimated by a bracketing scheme: an adaptively
grown set of pure states yields certified lower bounds (cutting planes + a
projected-gradient polish), while evaluating the worst-case divergence at the
incumbent incoherent measurement yields upper bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from .linalg import ValidationError
from .povm import Povm

__all__ = [
    "omega",
    "CLinfResult",
    "c_linf",
    "c_l1",
    "relative_entropy",
    "total_variation",
    "CsConfig",
    "CsEstimate",
    "c_s_estimate",
    "distance_monotone",
    "registered_distances",
]

LOG2 = np.log(2.0)

# Shift floor used inside lower-bound machinery: q -> q + CUT_SHIFT keeps the
# divergence convex and finite while staying an underestimator of the true
# value; the bias at interior optima is orders below the bracket tolerance.
CUT_SHIFT = 1e-12

MAX_CUTS = 800


def omega(povm: Povm) -> np.ndarray:
    """d x d matrix of summed moduli: entry (i, j) = sum_a |<i|A_a|j>|."""
    return np.abs(povm.components).sum(axis=0)


class CLinfResult(NamedTuple):
    value: float
    pair: tuple[int, int]


def c_linf(povm: Povm) -> CLinfResult:
    """Largest off-diagonal entry of omega, with its (i, j) argmax.

    Ties break to the lexicographically smallest pair.
    """
    om = omega(povm)
    d = povm.dim
    best, pair = 0.0, (0, min(1, d - 1))
    for i in range(d):
        for j in range(i + 1, d):
            if om[i, j] > best:
                best, pair = float(om[i, j]), (i, j)
    return CLinfResult(best, pair)


def c_l1(povm: Povm) -> float:
    """Sum of all off-diagonal moduli over all components.

    Not a monotone (it can grow under incoherent dual actions); use half of
    it only as an upper bound on the robustness.
    """
    om = omega(povm)
    return float(om.sum() - np.trace(om))


def relative_entropy(p, q) -> float:
    """Base-2 relative entropy; zero-probability terms vanish, support
    violations return +inf."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValidationError(f"length mismatch: {p.shape} vs {q.shape}")
    mask = p > 1e-15
    if np.any(q[mask] <= 0.0):
        return float("inf")
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValidationError(f"length mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


@dataclass(frozen=True)
class CsConfig:
    gap_tol: float = 1e-3
    max_outer: int = 200
    n_starts: int = 16      # random ascent starts, on top of deterministic ones
    inner_tol: float = 1e-7
    seed: int = 0


@dataclass(frozen=True)
class CsEstimate:
    lower: float
    upper: float
    witness_state: np.ndarray = field(repr=False)
    witness_incoherent_povm: Povm = field(repr=False)
    iterations: int
    converged: bool

    @property
    def gap(self) -> float:
        return self.upper - self.lower


# ---------------------------------------------------------------------------
# shared small pieces


def _project_rows_simplex(mat: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    n = mat.shape[1]
    s = np.sort(mat, axis=1)[:, ::-1]
    cums = np.cumsum(s, axis=1) - 1.0
    ks = np.arange(1, n + 1)
    k = n - 1 - np.argmax((s - cums / ks > 0)[:, ::-1], axis=1)
    tau = cums[np.arange(mat.shape[0]), k] / (k + 1)
    return np.maximum(mat - tau[:, None], 0.0)


def _incoherent_components(alpha: np.ndarray) -> np.ndarray:
    """(d, n) simplex rows -> stack of n diagonal components."""
    d, n = alpha.shape
    out = np.zeros((n, d, d), dtype=complex)
    idx = np.arange(d)
    out[:, idx, idx] = alpha.T
    return out


def _born_pure(components: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.clip(
        np.einsum("i,aij,j->a", psi.conj(), components, psi).real, 0.0, None
    )


# ---------------------------------------------------------------------------
# relative entropy strategy


def _re_values(p_table, rdiag, alpha):
    """Shift-floored divergences for every stored state, vectorized."""
    q = rdiag @ alpha + CUT_SHIFT
    safe_p = np.where(p_table > 1e-300, p_table, 1.0)
    return np.einsum("ra,ra->r", p_table, np.log2(safe_p / q))


def _re_grads(p_table, rdiag, alpha):
    """Gradients of the shift-floored divergences, shape (R, d, n)."""
    q = rdiag @ alpha + CUT_SHIFT
    ratio = p_table / q
    return -np.einsum("ri,ra->ria", rdiag, ratio) / LOG2


def _re_weighted_min(p_table, rdiag, w, alpha0, tol, max_iter=500):
    """Projected gradient descent for min over alpha of the w-weighted sum of
    shift-floored divergences.  Returns (alpha, value, certified lower bound);
    the certificate is the linearization bound at the final iterate."""
    alpha = alpha0.copy()

    def f(a):
        return float(w @ _re_values(p_table, rdiag, a))

    fval = f(alpha)
    step = 1.0
    for _ in range(max_iter):
        grad = np.einsum("r,ria->ia", w, _re_grads(p_table, rdiag, alpha))
        new = alpha
        fnew = fval
        for _ in range(40):
            cand = _project_rows_simplex(alpha - step * grad)
            fc = f(cand)
            if fc <= fval + 1e-15:
                new, fnew = cand, fc
                break
            step *= 0.5
        moved = float(np.max(np.abs(new - alpha)))
        alpha, fval = new, fnew
        step = min(step * 1.4, 1e4)
        if moved < tol:
            break
    grad = np.einsum("r,ria->ia", w, _re_grads(p_table, rdiag, alpha))
    # Frank-Wolfe certificate: f(alpha) + min over the feasible set of the
    # linearization gap, a true lower bound on the weighted minimum.
    fw = float(np.sum(grad.min(axis=1) - np.einsum("ia,ia->i", grad, alpha)))
    return alpha, fval, fval + fw


def _re_sup(components, alpha, rng, extra_starts, n_random, max_iter=300):
    """Multi-start backtracking ascent of the divergence over pure states."""
    n, d, _ = components.shape
    m = _incoherent_components(alpha)

    def value(psi):
        p = _born_pure(components, psi)
        q = _born_pure(m, psi)
        mask = p > 1e-15
        if np.any(q[mask] <= 0.0):
            return float("inf")
        return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))

    starts = [np.eye(d, dtype=complex)[i] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            for phase in (1.0, -1.0, 1j, -1j):
                v = np.zeros(d, dtype=complex)
                v[i], v[j] = 1.0, phase
                starts.append(v / np.sqrt(2.0))
    starts.extend(extra_starts)
    for _ in range(n_random):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        starts.append(v / np.linalg.norm(v))

    best_val, best_psi = -np.inf, starts[0]
    for psi in starts:
        psi = np.array(psi, dtype=complex)
        val = value(psi)
        if not np.isfinite(val):
            return val, psi
        step = 0.3
        for _ in range(max_iter):
            p = np.clip(_born_pure(components, psi), 1e-30, None)
            q = np.clip(_born_pure(m, psi), 1e-30, None)
            lg = np.log2(p / q)
            grad = np.einsum(
                "a,aij,j->i", lg + 1.0 / LOG2, components, psi
            ) - np.einsum("a,aij,j->i", p / (q * LOG2), m, psi)
            grad -= (psi.conj() @ grad) * psi
            if np.linalg.norm(grad) < 1e-11:
                break
            improved = False
            for _ in range(30):
                cand = psi + step * grad
                cand /= np.linalg.norm(cand)
                vc = value(cand)
                if not np.isfinite(vc):
                    return vc, cand
                if vc > val + 1e-15:
                    psi, val = cand, vc
                    improved = True
                    step = min(step * 1.5, 5.0)
                    break
                step *= 0.5
            if not improved:
                break
        if val > best_val:
            best_val, best_psi = val, psi
    return best_val, best_psi


# ---------------------------------------------------------------------------
# total variation strategy


def _tv_values(p_table, rdiag, alpha):
    q = rdiag @ alpha
    return 0.5 * np.abs(p_table - q).sum(axis=1)


def _tv_grads(p_table, rdiag, alpha):
    q = rdiag @ alpha
    sgn = np.sign(q - p_table)
    return 0.5 * np.einsum("ri,ra->ria", rdiag, sgn)


def _tv_weighted_min(p_table, rdiag, w, alpha0, tol, max_iter=0):
    """Exact LP for the weighted total-variation minimum over incoherent
    measurements (variables alpha plus one slack per state/outcome)."""
    r_count, n = p_table.shape
    d = rdiag.shape[1]
    nv = d * n
    nu = r_count * n
    # u >= +(p - q), u >= -(p - q)  with q = rdiag @ alpha
    rows = []
    rhs = []
    for r in range(r_count):
        for a in range(n):
            coef = np.zeros(nv + nu)
            for i in range(d):
                coef[i * n + a] = rdiag[r, i]
            coef[nv + r * n + a] = -1.0
            rows.append(coef.copy())
            rhs.append(p_table[r, a])
            coef[:nv] *= -1.0
            rows.append(coef)
            rhs.append(-p_table[r, a])
    a_ub = np.array(rows)
    b_ub = np.array(rhs)
    a_eq = np.zeros((d, nv + nu))
    for i in range(d):
        a_eq[i, i * n : (i + 1) * n] = 1.0
    b_eq = np.ones(d)
    cost = np.zeros(nv + nu)
    for r in range(r_count):
        cost[nv + r * n : nv + (r + 1) * n] = 0.5 * w[r]
    res = linprog(
        cost,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=[(0, None)] * nv + [(0, None)] * nu,
        method="highs",
    )
    if res.status != 0:
        return alpha0, float(w @ _tv_values(p_table, rdiag, alpha0)), 0.0
    alpha = res.x[:nv].reshape(d, n)
    return alpha, float(res.fun), float(res.fun)


def _tv_sup(components, alpha, rng, extra_starts, n_random):
    """Exact worst-case total variation via outcome sign enumeration."""
    n, d, _ = components.shape
    if n > 16:
        raise ValidationError(
            f"total-variation estimator supports at most 16 outcomes, got {n}"
        )
    delta = components - _incoherent_components(alpha)
    best_val, best_psi = -np.inf, np.eye(d, dtype=complex)[0]
    for bits in range(2 ** (n - 1)):
        signs = np.array(
            [1.0] + [1.0 if (bits >> k) & 1 else -1.0 for k in range(n - 1)]
        )
        op = np.einsum("a,aij->ij", signs, delta)
        w, v = np.linalg.eigh(op)
        for val, vec in ((0.5 * w[-1], v[:, -1]), (-0.5 * w[0], v[:, 0])):
            if val > best_val:
                best_val, best_psi = float(val), vec
    return best_val, best_psi


@dataclass(frozen=True)
class _Distance:
    name: str
    values: callable
    grads: callable
    weighted_min: callable
    sup: callable


_DISTANCES = {
    "relative-entropy": _Distance(
        "relative-entropy", _re_values, _re_grads, _re_weighted_min, _re_sup
    ),
    "total-variation": _Distance(
        "total-variation", _tv_values, _tv_grads, _tv_weighted_min, _tv_sup
    ),
}


def registered_distances() -> list[str]:
    return sorted(_DISTANCES)


# ---------------------------------------------------------------------------
# bracketing estimator


def distance_monotone(
    povm: Povm, distance: str = "relative-entropy", config: CsConfig | None = None
) -> CsEstimate:
    """Bracket the distance-based coherence monotone min_M sup_rho D.

    Lower bounds come from cutting planes: each stored pure state contributes
    linear underestimators of the convex objective in the incoherent
    measurement's diagonal parameters, combined through an LP master and a
    projected-gradient polish of the LP's dual weights.  Upper bounds come
    from the (multi-start) worst-case search at the incumbent measurement.
    """
    if distance not in _DISTANCES:
        raise ValidationError(
            f"unknown distance {distance!r}; registered: {registered_distances()}"
        )
    strat = _DISTANCES[distance]
    cfg = config or CsConfig()
    rng = np.random.default_rng(cfg.seed)

    comps = povm.components
    n, d = povm.n_outcomes, povm.dim
    alpha = np.clip(np.einsum("aii->ai", comps).real.T, 0.0, None)
    alpha = alpha / alpha.sum(axis=1, keepdims=True)

    states: list[np.ndarray] = []
    p_rows: list[np.ndarray] = []
    diag_rows: list[np.ndarray] = []
    cut_consts: list[float] = []
    cut_grads: list[np.ndarray] = []
    cut_states: list[int] = []

    lower, upper = 0.0, float("inf")
    best_alpha = alpha.copy()
    best_psi = np.eye(d, dtype=complex)[0]
    outer = 0

    for outer in range(1, cfg.max_outer + 1):
        val, psi = strat.sup(comps, alpha, rng, states[-4:], cfg.n_starts)
        if val < upper:
            upper = float(val)
            best_alpha = alpha.copy()
            best_psi = psi
        if upper - lower <= cfg.gap_tol:
            return _finish(povm, lower, upper, best_psi, best_alpha, outer, True, cfg)

        if not any(abs(np.vdot(psi, s)) ** 2 > 1.0 - 1e-12 for s in states):
            p = _born_pure(comps, psi)
            total = p.sum()
            states.append(psi)
            p_rows.append(p / total if total > 0 else np.full(n, 1.0 / n))
            diag_rows.append(np.abs(psi) ** 2)

        p_table = np.array(p_rows)
        rdiag = np.array(diag_rows)
        vals = strat.values(p_table, rdiag, alpha)
        grads = strat.grads(p_table, rdiag, alpha)
        for r in range(len(states)):
            g = grads[r].ravel()
            cut_consts.append(float(vals[r]) - float(g @ alpha.ravel()))
            cut_grads.append(g)
            cut_states.append(r)
        if len(cut_consts) > MAX_CUTS:
            drop = len(cut_consts) - MAX_CUTS
            cut_consts = cut_consts[drop:]
            cut_grads = cut_grads[drop:]
            cut_states = cut_states[drop:]

        lp_value, alpha_lp, cut_weights = _solve_master(
            cut_consts, cut_grads, d, n
        )
        w = np.zeros(len(states))
        for weight, r in zip(cut_weights, cut_states):
            w[r] += max(weight, 0.0)
        if w.sum() <= 0.0:
            w[:] = 1.0
        w /= w.sum()
        alpha_pg, _, certified = strat.weighted_min(
            p_table, rdiag, w, alpha_lp, cfg.inner_tol
        )
        lower = max(lower, lp_value, certified, 0.0)
        lower = min(lower, upper)  # keep the bracket ordered
        alpha = alpha_pg
        if upper - lower <= cfg.gap_tol:
            return _finish(povm, lower, upper, best_psi, best_alpha, outer, True, cfg)

    return _finish(povm, lower, upper, best_psi, best_alpha, outer, False, cfg)


def _solve_master(cut_consts, cut_grads, d, n):
    """LP master: minimize s subject to every cut c_k + <g_k, alpha> <= s and
    each row of alpha on the simplex.  Returns (value, argmin, cut weights)."""
    nv = d * n
    k = len(cut_consts)
    a_ub = np.hstack([np.array(cut_grads), -np.ones((k, 1))])
    b_ub = -np.array(cut_consts)
    a_eq = np.zeros((d, nv + 1))
    for i in range(d):
        a_eq[i, i * n : (i + 1) * n] = 1.0
    cost = np.zeros(nv + 1)
    cost[-1] = 1.0
    res = linprog(
        cost,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=np.ones(d),
        bounds=[(0, None)] * nv + [(None, None)],
        method="highs",
    )
    if res.status != 0:
        return 0.0, np.full((d, n), 1.0 / n), np.zeros(k)
    weights = -np.asarray(res.ineqlin.marginals)
    return float(res.fun), res.x[:nv].reshape(d, n), weights


def _finish(povm, lower, upper, psi, alpha, outer, converged, cfg):
    del cfg
    witness_state = np.outer(psi, psi.conj())
    witness_m = Povm(_incoherent_components(alpha))
    return CsEstimate(
        lower=float(max(lower, 0.0)),
        upper=float(upper),
        witness_state=witness_state,
        witness_incoherent_povm=witness_m,
        iterations=outer,
        converged=converged,
    )


def c_s_estimate(povm: Povm, config: CsConfig | None = None) -> CsEstimate:
    """Relative-entropy coherence bracket (see distance_monotone)."""
    return distance_monotone(povm, "relative-entropy", config)
