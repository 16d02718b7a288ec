"""Simulated single-qubit direction sweeps and the qutrit damping sweep.

The qubit measurement under test is Z rotated by the gate

    V(theta, phi) = [[cos(theta/2),  e^{-i phi} sin(theta/2)],
                     [-sin(theta/2), e^{-i phi} cos(theta/2)]]

whose rotated projectors have coherence |sin theta| in closed form.  Sweeps
drive the full tomography pipeline (probe preparation, optional noise on the
probes, multinomial sampling, reconstruction, coherence) and emit plot-ready
rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import KrausChannel, amplitude_damping, dual_apply_nonselective
from .linalg import ValidationError, hermitian_part
from .monotones import c_l1, c_linf
from .povm import Povm
from .robustness import RobustnessProblem, robustness
from .tomography import (
    build_probe_family,
    coherence_from_counts,
    measure_probe_family,
    reconstruct_direct,
    sample_record,
)

__all__ = [
    "MeasurementDirection",
    "z_theta_phi",
    "prepare_probe_gates",
    "SweepSpec",
    "SweepRow",
    "sweep_directions",
    "run_sweep",
    "Fig2Row",
    "run_fig2_sweep",
    "QUTRIT_DICHOTOMIC_FIRST_COMPONENT",
    "qutrit_dichotomic_povm",
]

SWEEP_PATHS = ("p1", "p2", "p3")

# Directions where the ideal coherence vanishes on the theta sweep; ratio
# columns are left empty there.
SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class MeasurementDirection:
    theta: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValidationError("direction angles must be finite")


def z_theta_phi(direction: MeasurementDirection) -> Povm:
    """Two-outcome rank-1 measurement along the given Bloch direction."""
    theta, phi = direction.theta, direction.phi
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    v = np.array(
        [[c, np.exp(-1j * phi) * s], [-s, np.exp(-1j * phi) * c]], dtype=complex
    )
    comps = np.array(
        [v.conj().T @ np.diag([1.0, 0.0]) @ v, v.conj().T @ np.diag([0.0, 1.0]) @ v]
    )
    return Povm(hermitian_part(comps))


def prepare_probe_gates() -> dict[tuple[int, int], np.ndarray]:
    """Single-qubit gates taking |0> to each probe state, keyed by probe label.

    Identity, Pauli-X, Hadamard, and phase-after-Hadamard cover the four
    probes: H|0> is the (1,0) probe (|0>+|1>)/sqrt(2) and PH|0> the (0,1)
    probe (|0>+i|1>)/sqrt(2).
    """
    ident = np.eye(2, dtype=complex)
    hadamard = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
    phase = np.diag([1.0, 1j]).astype(complex)
    pauli_x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return {
        (0, 0): ident,
        (1, 1): pauli_x,
        (1, 0): hadamard,
        (0, 1): phase @ hadamard,
    }


@dataclass(frozen=True)
class SweepSpec:
    path: str = "p1"  # p1: theta=pi/2, p2: theta=pi/4, p3: phi=0
    step: float = math.pi / 8.0
    shots: int = 8192
    runs: int = 10
    noise: KrausChannel | None = None
    seed: int = 0
    exact: bool = False  # skip sampling, use exact Born probabilities

    def __post_init__(self):
        if self.path not in SWEEP_PATHS:
            raise ValidationError(f"path must be one of {SWEEP_PATHS}, got {self.path!r}")
        if self.step <= 0:
            raise ValidationError("step must be positive")
        if self.shots < 1:
            raise ValidationError("shots must be >= 1")
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")


def sweep_directions(spec: SweepSpec) -> list[MeasurementDirection]:
    """Sampled directions; the varied angle covers [0, 2pi] inclusive (the
    2pi endpoint duplicates 0 and is kept for plot closure)."""
    count = int(round(2.0 * math.pi / spec.step)) + 1
    angles = [k * spec.step for k in range(count)]
    if spec.path == "p1":
        return [MeasurementDirection(math.pi / 2.0, phi) for phi in angles]
    if spec.path == "p2":
        return [MeasurementDirection(math.pi / 4.0, phi) for phi in angles]
    return [MeasurementDirection(theta, 0.0) for theta in angles]


@dataclass(frozen=True)
class SweepRow:
    parameter: float  # the varied angle (phi on p1/p2, theta on p3)
    theory: float
    mean: float
    std: float
    ratio: float | None


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Estimated coherence along a direction path via the tomography pipeline."""
    directions = sweep_directions(spec)
    varied = "phi" if spec.path in ("p1", "p2") else "theta"
    family = build_probe_family(2)
    rows = []
    for index, direction in enumerate(directions):
        povm = z_theta_phi(direction)
        theory = abs(math.sin(direction.theta))
        if spec.exact:
            record = measure_probe_family(povm, family, noise=spec.noise)
            estimate = c_linf(reconstruct_direct(record).povm).value
            mean, std = estimate, 0.0
        else:
            record = sample_record(
                povm,
                shots=spec.shots,
                runs=spec.runs,
                seed=(spec.seed, index),
                family=family,
                noise=spec.noise,
            )
            report = coherence_from_counts(record)
            mean, std = report.c_linf.mean, report.c_linf.std
        ratio = mean / theory if theory > SINGULAR_TOL else None
        parameter = direction.phi if varied == "phi" else direction.theta
        rows.append(
            SweepRow(
                parameter=parameter, theory=theory, mean=mean, std=std, ratio=ratio
            )
        )
    return rows


# --- qutrit damping sweep -----------------------------------------------------

QUTRIT_DICHOTOMIC_FIRST_COMPONENT = np.array(
    [
        [0.528, 0.263, 0.042],
        [0.263, 0.137, 0.026],
        [0.042, 0.026, 0.008],
    ],
    dtype=complex,
)


def qutrit_dichotomic_povm() -> Povm:
    """The two-outcome qutrit measurement used by the damping sweep demo."""
    g0 = QUTRIT_DICHOTOMIC_FIRST_COMPONENT
    return Povm(np.array([g0, np.eye(3) - g0]))


@dataclass(frozen=True)
class Fig2Row:
    gamma: float
    rc: float
    gap: float
    clinf: float
    cl1half: float


def run_fig2_sweep(gammas, sdp_tol: float = 1e-7) -> list[Fig2Row]:
    """Robustness and closed-form monotones of the damped qutrit measurement."""
    base = qutrit_dichotomic_povm()
    rows = []
    for gamma in gammas:
        if not 0.0 <= gamma <= 1.0:
            raise ValidationError(f"damping rate must be in [0, 1], got {gamma}")
        damped = dual_apply_nonselective(amplitude_damping(3, gamma), base)
        try:
            sol = robustness(RobustnessProblem(damped, tolerance=sdp_tol))
        except Exception as exc:
            raise RuntimeError(f"robustness solve failed at gamma={gamma}") from exc
        rows.append(
            Fig2Row(
                gamma=float(gamma),
                rc=sol.value,
                gap=sol.duality_gap,
                clinf=c_linf(damped).value,
                cl1half=0.5 * c_l1(damped),
            )
        )
    return rows
