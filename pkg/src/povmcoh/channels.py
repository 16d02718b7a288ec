"""Kraus channels, strictly-incoherent structure detection, and dual actions.

The dual (Heisenberg-picture) action transforms a measurement instead of the
state: nonselectively each component becomes sum_mu K_mu† A_a K_mu, while the
selective variant keeps the Kraus index as an extra outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .linalg import (
    ValidationError,
    as_operator,
    hermitian_part,
    matrix_from_json,
    matrix_to_json,
)
from .povm import Povm

__all__ = [
    "KrausChannel",
    "SioDecomposition",
    "validate_channel",
    "require_channel",
    "classify_sio",
    "dual_apply_nonselective",
    "dual_apply_selective",
    "selective_outcome_labels",
    "amplitude_damping",
    "dephasing_channel",
    "random_sio",
    "channel_to_json",
    "channel_from_json",
]

COMPLETENESS_TOL = 1e-8


@dataclass(frozen=True)
class KrausChannel:
    """A CPTP map as a stack of (d, d) Kraus operators (no symmetry assumed)."""

    operators: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.operators, dtype=complex)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ValidationError(
                f"Kraus operators must be a stack of square matrices, got {arr.shape}"
            )
        for mu in range(arr.shape[0]):
            as_operator(arr[mu], f"Kraus operator {mu}")
        arr.setflags(write=False)
        object.__setattr__(self, "operators", arr)

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    @property
    def n_kraus(self) -> int:
        return self.operators.shape[0]


def completeness_residual(channel: KrausChannel) -> float:
    k = channel.operators
    s = np.einsum("mji,mjk->ik", k.conj(), k)
    return float(np.max(np.abs(s - np.eye(channel.dim))))


def validate_channel(channel: KrausChannel, tol: float = COMPLETENESS_TOL) -> bool:
    return completeness_residual(channel) <= tol


def require_channel(channel: KrausChannel, tol: float = COMPLETENESS_TOL) -> KrausChannel:
    res = completeness_residual(channel)
    if res > tol:
        raise ValidationError(
            f"Kraus operators are not trace preserving: completeness residual {res:.3e}"
        )
    return channel


@dataclass(frozen=True)
class SioDecomposition:
    """Permutation/diagonal form K_mu = sum_i c[mu,i] |perm[mu,i]><i|.

    Zero coefficients leave the permutation target unconstrained; the stored
    permutations complete those slots greedily over unused targets.
    """

    permutations: np.ndarray  # (m, d) ints, each row a permutation of range(d)
    coefficients: np.ndarray  # (m, d) complex

    def __post_init__(self):
        perms = np.asarray(self.permutations, dtype=int)
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if perms.shape != coeffs.shape:
            raise ValidationError("permutation and coefficient shapes differ")
        for mu, row in enumerate(perms):
            if sorted(row.tolist()) != list(range(perms.shape[1])):
                raise ValidationError(f"row {mu} is not a permutation: {row}")
        perms.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "permutations", perms)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def n_kraus(self) -> int:
        return self.permutations.shape[0]

    @property
    def dim(self) -> int:
        return self.permutations.shape[1]

    def reconstruct(self) -> np.ndarray:
        """Rebuild the (m, d, d) Kraus stack this decomposition describes."""
        m, d = self.permutations.shape
        out = np.zeros((m, d, d), dtype=complex)
        cols = np.arange(d)
        for mu in range(m):
            out[mu, self.permutations[mu], cols] = self.coefficients[mu]
        return out


def classify_sio(channel: KrausChannel, tol: float = 1e-9) -> SioDecomposition | None:
    """Return the permutation/diagonal decomposition if every Kraus operator
    has at most one nonzero entry per column with injective column supports,
    otherwise None."""
    m, d = channel.n_kraus, channel.dim
    perms = np.zeros((m, d), dtype=int)
    coeffs = np.zeros((m, d), dtype=complex)
    for mu, k in enumerate(channel.operators):
        targets = np.full(d, -1, dtype=int)
        for i in range(d):
            rows = np.flatnonzero(np.abs(k[:, i]) > tol)
            if rows.size > 1:
                return None
            if rows.size == 1:
                r = int(rows[0])
                if r in targets:
                    return None  # two columns feeding one row: not a permutation
                targets[i] = r
                coeffs[mu, i] = k[r, i]
        unused = [r for r in range(d) if r not in set(targets)]
        for i in range(d):
            if targets[i] < 0:
                targets[i] = unused.pop(0)
        perms[mu] = targets
    return SioDecomposition(permutations=perms, coefficients=coeffs)


def _check_dims(channel: KrausChannel, povm: Povm):
    if channel.dim != povm.dim:
        raise ValidationError(
            f"dimension mismatch: channel d={channel.dim}, POVM d={povm.dim}"
        )


def dual_apply_nonselective(channel: KrausChannel, povm: Povm) -> Povm:
    """Components sum_mu K_mu† A_a K_mu; same outcome count."""
    _check_dims(channel, povm)
    k = channel.operators
    out = np.einsum("mki,akl,mlj->aij", k.conj(), povm.components, k, optimize=True)
    return Povm(hermitian_part(out))


def dual_apply_selective(channel: KrausChannel, povm: Povm) -> Povm:
    """Expanded measurement {K_mu† A_a K_mu} with n * n_kraus outcomes.

    Outcome ordering is a-major, mu-minor (see selective_outcome_labels).
    """
    _check_dims(channel, povm)
    k = channel.operators
    out = np.einsum("mki,akl,mlj->amij", k.conj(), povm.components, k, optimize=True)
    n, m, d = povm.n_outcomes, channel.n_kraus, povm.dim
    return Povm(hermitian_part(out.reshape(n * m, d, d)))


def selective_outcome_labels(channel: KrausChannel, povm: Povm) -> list[str]:
    return [
        f"{a}:{mu}" for a in range(povm.n_outcomes) for mu in range(channel.n_kraus)
    ]


def amplitude_damping(dim: int, gamma: float) -> KrausChannel:
    """Amplitude damping towards |0> with rate gamma, for any dimension.

    K_mu = sum_{i=mu}^{d-1} sqrt(C(i,mu)) sqrt((1-gamma)^(i-mu) gamma^mu) |i-mu><i|
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValidationError(f"damping rate must be in [0, 1], got {gamma}")
    ops = np.zeros((dim, dim, dim), dtype=complex)
    for mu in range(dim):
        for i in range(mu, dim):
            amp = np.sqrt(comb(i, mu)) * np.sqrt(
                (1.0 - gamma) ** (i - mu) * gamma**mu
            )
            ops[mu, i - mu, i] = amp
    return KrausChannel(ops)


def dephasing_channel(dim: int) -> KrausChannel:
    """Total dephasing: Kraus operators {|i><i|}."""
    ops = np.zeros((dim, dim, dim), dtype=complex)
    idx = np.arange(dim)
    ops[idx, idx, idx] = 1.0
    return KrausChannel(ops)


def random_sio(dim: int, n_kraus: int, seed: int) -> KrausChannel:
    """Random strictly incoherent channel: random permutations and random
    conditional amplitudes with per-column normalization."""
    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.ones(n_kraus), size=dim).T  # (m, d), columns sum to 1
    phases = np.exp(2j * np.pi * rng.random((n_kraus, dim)))
    coeffs = phases * np.sqrt(probs)
    ops = np.zeros((n_kraus, dim, dim), dtype=complex)
    cols = np.arange(dim)
    for mu in range(n_kraus):
        perm = rng.permutation(dim)
        ops[mu, perm, cols] = coeffs[mu]
    return KrausChannel(ops)


def channel_to_json(channel: KrausChannel) -> dict:
    return {
        "dim": channel.dim,
        "operators": [matrix_to_json(k) for k in channel.operators],
    }


def channel_from_json(data: dict) -> KrausChannel:
    try:
        ops = [
            matrix_from_json(k, f"Kraus operator {mu}")
            for mu, k in enumerate(data["operators"])
        ]
    except KeyError as exc:
        raise ValidationError(f"channel JSON missing key {exc}") from exc
    channel = KrausChannel(np.array(ops))
    if "dim" in data and int(data["dim"]) != channel.dim:
        raise ValidationError(
            f"channel JSON dim field {data['dim']} does not match operators "
            f"({channel.dim})"
        )
    return channel
