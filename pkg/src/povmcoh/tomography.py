"""Detector tomography: probe construction, direct and general reconstruction.

The probe family indexes d^2 pure states by (k, l): basis states on the
diagonal, (|k>+|l>)/sqrt(2) for k > l and (|k>+i|l>)/sqrt(2) for k < l.
Measuring them gives every component entry directly:

    p(a|kl) - [p(a|kk) + p(a|ll)]/2  =  Re<k|A_a|l>   (k > l)
                                     =  Im<l|A_a|k>   (k < l)

with diagonals read off from the basis probes.  The general route solves the
linear system Gamma^T chi_a = mu_a per outcome for arbitrary informationally
complete probe sets.

Vectorization convention: chi stores raw diagonal/Re/Im parts (position
q*d + r holds the diagonal for q = r, Re for q < r, Im of the mirrored entry
for q > r) and the compensating factor 2 lives in the state-side gamma
vectors, so p = gamma . chi holds while chi round-trips matrices bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import KrausChannel
from .linalg import ValidationError, hermitian_part
from .monotones import c_l1, c_linf
from .povm import Povm, validate
from .robustness import RobustnessProblem, robustness

__all__ = [
    "ProbeFamily",
    "build_probe_family",
    "TomographyRecord",
    "measure_probe_family",
    "sample_record",
    "ReconstructionResult",
    "reconstruct_direct",
    "reconstruct_general",
    "project_psd",
    "CoherenceReport",
    "coherence_from_counts",
    "chi_vector",
    "gamma_vector",
    "matrix_from_chi",
    "chi_component_labels",
    "record_to_json",
    "record_from_json",
]

MAX_CONDITION = 1e8


def probe_labels(dim: int) -> list[tuple[int, int]]:
    return [(k, l) for k in range(dim) for l in range(dim)]


@dataclass(frozen=True)
class ProbeFamily:
    dim: int
    kets: np.ndarray = field(repr=False)  # (d^2, d) unit vectors, label order

    def __post_init__(self):
        kets = np.asarray(self.kets, dtype=complex)
        kets.setflags(write=False)
        object.__setattr__(self, "kets", kets)

    @property
    def labels(self) -> list[tuple[int, int]]:
        return probe_labels(self.dim)

    def density_matrices(self) -> np.ndarray:
        return np.einsum("ki,kj->kij", self.kets, self.kets.conj())


def build_probe_family(dim: int) -> ProbeFamily:
    """The d^2 probe states enabling direct off-diagonal readout."""
    if dim < 2:
        raise ValidationError(f"probe family needs dim >= 2, got {dim}")
    kets = np.zeros((dim * dim, dim), dtype=complex)
    for row, (k, l) in enumerate(probe_labels(dim)):
        if k == l:
            kets[row, k] = 1.0
        elif k > l:
            kets[row, k] = kets[row, l] = 1.0 / np.sqrt(2.0)
        else:
            kets[row, k] = 1.0 / np.sqrt(2.0)
            kets[row, l] = 1j / np.sqrt(2.0)
    family = ProbeFamily(dim=dim, kets=kets)
    cond = np.linalg.cond(_gamma_matrix(family.density_matrices(), dim))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise ValidationError(f"probe family is ill-conditioned (cond = {cond:.2e})")
    return family


@dataclass(frozen=True)
class TomographyRecord:
    """Per-probe outcome statistics; exact probabilities or sampled counts.

    table maps the "k,l" probe label to a (n,) probability vector when
    kind == "probabilities", or to a (runs, n) integer count array when
    kind == "counts".
    """

    dim: int
    outcomes: int
    kind: str  # "probabilities" | "counts"
    table: dict[str, np.ndarray] = field(repr=False)
    shots: int | None = None
    runs: int = 1

    def __post_init__(self):
        if self.kind not in ("probabilities", "counts"):
            raise ValidationError(f"unknown record kind {self.kind!r}")
        expected = {f"{k},{l}" for k, l in probe_labels(self.dim)}
        missing = expected - set(self.table)
        if missing:
            raise ValidationError(f"record is missing probe rows: {sorted(missing)}")
        if self.kind == "counts" and (self.shots is None or self.shots < 1):
            raise ValidationError("counts record requires shots >= 1")

    def probability_rows(self, run: int | None = None) -> dict[str, np.ndarray]:
        """Row-normalized probabilities; run selects one repetition, None
        averages counts over all runs."""
        if self.kind == "probabilities":
            return {k: np.asarray(v, dtype=float) for k, v in self.table.items()}
        out = {}
        for key, counts in self.table.items():
            counts = np.asarray(counts, dtype=float)
            row = counts.mean(axis=0) if run is None else counts[run]
            out[key] = row / row.sum()
        return out


def measure_probe_family(
    povm: Povm, family: ProbeFamily | None = None, noise: KrausChannel | None = None
) -> TomographyRecord:
    """Exact Born probabilities for every probe state."""
    family = family or build_probe_family(povm.dim)
    states = family.density_matrices()
    states = _apply_noise(states, noise)
    probs = np.einsum("kij,aji->ka", states, povm.components).real
    table = {
        f"{k},{l}": np.clip(probs[row], 0.0, 1.0)
        for row, (k, l) in enumerate(family.labels)
    }
    return TomographyRecord(
        dim=povm.dim, outcomes=povm.n_outcomes, kind="probabilities", table=table
    )


def sample_record(
    povm: Povm,
    shots: int,
    runs: int,
    seed,
    family: ProbeFamily | None = None,
    noise: KrausChannel | None = None,
) -> TomographyRecord:
    """Multinomial shot-noise counts, one draw per probe and run.

    Each probe gets an independent stream derived from (seed, k, l) so rows
    can be sampled in parallel without changing the result.
    """
    family = family or build_probe_family(povm.dim)
    states = _apply_noise(family.density_matrices(), noise)
    probs = np.einsum("kij,aji->ka", states, povm.components).real
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    seed_parts = [int(seed)] if np.isscalar(seed) else [int(s) for s in seed]
    table = {}
    for row, (k, l) in enumerate(family.labels):
        rng = np.random.default_rng(
            np.random.SeedSequence(seed_parts + [k, l])
        )
        table[f"{k},{l}"] = rng.multinomial(shots, probs[row], size=runs)
    return TomographyRecord(
        dim=povm.dim,
        outcomes=povm.n_outcomes,
        kind="counts",
        table=table,
        shots=shots,
        runs=runs,
    )


def _apply_noise(states: np.ndarray, noise: KrausChannel | None) -> np.ndarray:
    if noise is None:
        return states
    k = noise.operators
    return np.einsum("mij,kjl,mnl->kin", k, states, k.conj(), optimize=True)


@dataclass(frozen=True)
class ReconstructionResult:
    povm: Povm
    psd_margins: np.ndarray  # smallest eigenvalue per component
    completeness_residual: float
    psd_ok: bool

    def report(self) -> str:
        flag = "ok" if self.psd_ok else "PSD violated (shot noise?)"
        return (
            f"reconstruction {flag}: min margin {self.psd_margins.min():.3e}, "
            f"completeness residual {self.completeness_residual:.3e}"
        )


def _result_from_components(comps: np.ndarray, tol: float = 1e-8) -> ReconstructionResult:
    povm = Povm(hermitian_part(comps))
    rep = validate(povm, tol)
    return ReconstructionResult(
        povm=povm,
        psd_margins=rep.psd_margins,
        completeness_residual=rep.completeness_residual,
        psd_ok=bool(rep.psd_margins.min() >= -tol),
    )


def reconstruct_direct(
    record: TomographyRecord, run: int | None = None
) -> ReconstructionResult:
    """Assemble components entry by entry from the dedicated probe family.

    PSD violations caused by shot noise are reported, never silently fixed.
    """
    d, n = record.dim, record.outcomes
    rows = record.probability_rows(run)
    comps = np.zeros((n, d, d), dtype=complex)
    for a in range(n):
        for k in range(d):
            comps[a, k, k] = rows[f"{k},{k}"][a]
        for u in range(d):
            for v in range(u + 1, d):
                base = 0.5 * (rows[f"{u},{u}"][a] + rows[f"{v},{v}"][a])
                re = rows[f"{v},{u}"][a] - base  # Re<v|A_a|u>
                im = rows[f"{u},{v}"][a] - base  # Im<v|A_a|u>
                comps[a, v, u] = re + 1j * im
                comps[a, u, v] = re - 1j * im
    return _result_from_components(comps)


def reconstruct_general(
    states, record: TomographyRecord, run: int | None = None
) -> ReconstructionResult:
    """Linear inversion for arbitrary informationally complete probe states.

    states must follow the record's label order.  Raises when the probe set
    is rank deficient, naming the component direction that is not probed.
    """
    d, n = record.dim, record.outcomes
    states = np.asarray(states, dtype=complex)
    if states.shape != (d * d, d, d):
        raise ValidationError(
            f"need {d * d} density matrices of shape ({d},{d}), got {states.shape}"
        )
    gamma = _gamma_matrix(states, d)
    cond = np.linalg.cond(gamma)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        _, _, vh = np.linalg.svd(gamma.T)
        null = vh[-1]
        labels = chi_component_labels(d)
        worst = np.argsort(-np.abs(null))[:3]
        desc = ", ".join(f"{labels[x]} ({null[x]:+.3f})" for x in worst)
        raise ValidationError(
            f"probe states are linearly dependent (cond = {cond:.2e}); "
            f"unprobed direction dominated by {desc}"
        )
    rows = record.probability_rows(run)
    mu = np.array(
        [[rows[f"{k},{l}"][a] for (k, l) in probe_labels(d)] for a in range(n)]
    )
    chi = np.linalg.solve(gamma.T, mu.T).T
    comps = np.array([matrix_from_chi(chi[a], d) for a in range(n)])
    return _result_from_components(comps)


def project_psd(result: ReconstructionResult) -> Povm:
    """Post-processing only: clip negative eigenvalues, renormalize so the
    components again sum to the identity."""
    comps = result.povm.components
    w, v = np.linalg.eigh(comps)
    clipped = np.einsum("aik,ak,ajk->aij", v, np.clip(w, 0.0, None), v.conj())
    total = clipped.sum(axis=0)
    tw, tv = np.linalg.eigh(total)
    inv_sqrt = (tv * (1.0 / np.sqrt(np.clip(tw, 1e-12, None)))) @ tv.conj().T
    fixed = np.einsum("ij,ajk,kl->ail", inv_sqrt, clipped, inv_sqrt)
    return Povm(hermitian_part(fixed))


# --- vectorization -----------------------------------------------------------


def chi_vector(m: np.ndarray, dim: int) -> np.ndarray:
    """Component vector: diagonal at q==r, Re above, mirrored Im below."""
    x = np.zeros(dim * dim)
    for q in range(dim):
        for r in range(dim):
            if q == r:
                x[q * dim + r] = m[q, q].real
            elif q < r:
                x[q * dim + r] = m[q, r].real
            else:
                x[q * dim + r] = m[r, q].imag
    return x


def gamma_vector(rho: np.ndarray, dim: int) -> np.ndarray:
    """State vector paired with chi_vector so that gamma . chi = Tr[rho A]."""
    x = np.zeros(dim * dim)
    for q in range(dim):
        for r in range(dim):
            if q == r:
                x[q * dim + r] = rho[q, q].real
            elif q < r:
                x[q * dim + r] = 2.0 * rho[q, r].real
            else:
                x[q * dim + r] = 2.0 * rho[r, q].imag
    return x


def matrix_from_chi(x: np.ndarray, dim: int) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=complex)
    for q in range(dim):
        m[q, q] = x[q * dim + q]
        for r in range(q + 1, dim):
            m[q, r] = x[q * dim + r] + 1j * x[r * dim + q]
            m[r, q] = x[q * dim + r] - 1j * x[r * dim + q]
    return m


def chi_component_labels(dim: int) -> list[str]:
    labels = []
    for q in range(dim):
        for r in range(dim):
            if q == r:
                labels.append(f"diag({q})")
            elif q < r:
                labels.append(f"Re({q},{r})")
            else:
                labels.append(f"Im({r},{q})")
    return labels


def _gamma_matrix(states: np.ndarray, dim: int) -> np.ndarray:
    return np.column_stack([gamma_vector(rho, dim) for rho in states])


# --- coherence pipeline ------------------------------------------------------


@dataclass(frozen=True)
class QuantityStats:
    values: np.ndarray
    mean: float
    std: float
    stderr: float


def _stats(values: list[float]) -> QuantityStats:
    arr = np.asarray(values, dtype=float)
    if arr.size > 1:
        std = float(arr.std(ddof=1))
        stderr = std / np.sqrt(arr.size)
    else:
        std = stderr = 0.0
    return QuantityStats(values=arr, mean=float(arr.mean()), std=std, stderr=stderr)


@dataclass(frozen=True)
class CoherenceReport:
    c_linf: QuantityStats
    c_l1_half: QuantityStats
    robustness_value: QuantityStats
    reconstruction: ReconstructionResult  # from pooled statistics
    psd_ok_all_runs: bool


def coherence_from_counts(
    record: TomographyRecord, sdp_tol: float = 1e-7
) -> CoherenceReport:
    """Reconstruct per run, then quantify coherence with shot-noise errors."""
    runs = record.runs if record.kind == "counts" else 1
    linf_vals, l1_vals, rob_vals = [], [], []
    psd_ok = True
    for run in range(runs):
        res = reconstruct_direct(record, run=run if record.kind == "counts" else None)
        psd_ok &= res.psd_ok
        linf_vals.append(c_linf(res.povm).value)
        l1_vals.append(0.5 * c_l1(res.povm))
        if record.dim == 2:
            rob_vals.append(c_linf(res.povm).value)
        else:
            sol = robustness(RobustnessProblem(_feasible(res.povm), tolerance=sdp_tol))
            rob_vals.append(sol.value)
    pooled = reconstruct_direct(record, run=None)
    return CoherenceReport(
        c_linf=_stats(linf_vals),
        c_l1_half=_stats(l1_vals),
        robustness_value=_stats(rob_vals),
        reconstruction=pooled,
        psd_ok_all_runs=bool(psd_ok),
    )


def _feasible(povm: Povm) -> Povm:
    """Tiny eigenvalue clip so the SDP accepts shot-noise reconstructions."""
    rep = validate(povm)
    if rep.valid:
        return povm
    return project_psd(
        ReconstructionResult(povm, rep.psd_margins, rep.completeness_residual, False)
    )


# --- serialization -----------------------------------------------------------


def record_to_json(record: TomographyRecord) -> dict:
    table = {}
    for key, value in record.table.items():
        arr = np.asarray(value)
        if record.kind == "counts":
            table[key] = [[int(c) for c in row] for row in arr]
        else:
            table[key] = [float(p) for p in arr]
    out = {
        "dim": record.dim,
        "outcomes": record.outcomes,
        "kind": record.kind,
        "runs": record.runs,
        "table": table,
    }
    if record.shots is not None:
        out["shots"] = record.shots
    return out


def record_from_json(data: dict) -> TomographyRecord:
    try:
        kind = data.get("kind", "counts")
        table = {}
        for key, rows in data["table"].items():
            arr = np.asarray(rows, dtype=int if kind == "counts" else float)
            table[key] = arr
        return TomographyRecord(
            dim=int(data["dim"]),
            outcomes=int(data["outcomes"]),
            kind=kind,
            table=table,
            shots=data.get("shots"),
            runs=int(data.get("runs", 1)),
        )
    except KeyError as exc:
        raise ValidationError(f"counts JSON missing key {exc}") from exc
