"""Symmetrizing two-qubit states toward Werner form at constant singlet
fidelity: exact projection, averaging over sampled random bilateral
rotations, and the discrete twirl that equalizes the triplet weights of a
Bell-diagonal state."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bell, ensemble, measures, qstate
from .bell import BellDiagonal

#: Label permutations generated by the two-particle pi/2 rotations: identity,
#: the three single triplet swaps, and their two 3-cycle compositions. Every
#: element fixes the singlet. The sampled twirl draws uniformly from this
#: closure so that its per-pair expectation equals the analytic average,
#: which equalizes the triplet weights exactly; the bare 4-element set
#: {identity + three swaps} would leave a bias of order the triplet spread.
TWIRL_PERMS = np.array(
    [
        [0, 1, 2, 3],
        [2, 1, 0, 3],  # x swap
        [0, 2, 1, 3],  # y swap
        [1, 0, 2, 3],  # z swap
        [1, 2, 0, 3],
        [2, 0, 1, 3],
    ],
    dtype=np.uint8,
)
TWIRL_PERMS.setflags(write=False)


@dataclass(frozen=True)
class TwirlReport:
    n_samples: int
    trace_distance_to_werner: float
    fidelity_in: float
    fidelity_out: float


def trace_distance(a, b) -> float:
    """Half the sum of the absolute eigenvalues of the difference."""
    diff = qstate.as_matrix(a) - qstate.as_matrix(b)
    return float(0.5 * np.abs(qstate.eig_hermitian(diff)).sum())


def exact_twirl(rho) -> BellDiagonal:
    """Project a state to Werner form at its own singlet fidelity. Idempotent."""
    f = qstate.fidelity_singlet(rho)
    if not -1e-12 <= f <= 1.0 + 1e-12:
        raise ValueError(f"singlet fidelity {f!r} outside [0, 1]")
    return measures.werner(min(1.0, max(0.0, f)))


def _su2_batch(rng: np.random.Generator, n: int) -> np.ndarray:
    """n Haar-random SU(2) elements from uniformly random unit quaternions:
    u = q0 I - i (q1 sx + q2 sy + q3 sz)."""
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    u = np.empty((n, 2, 2), dtype=complex)
    u[:, 0, 0] = q[:, 0] - 1j * q[:, 3]
    u[:, 0, 1] = -q[:, 2] - 1j * q[:, 1]
    u[:, 1, 0] = q[:, 2] - 1j * q[:, 1]
    u[:, 1, 1] = q[:, 0] + 1j * q[:, 3]
    return u


def sampled_twirl(
    rho, n: int, seed: int, stream_id: int = 0
) -> tuple[qstate.DensityMatrix, TwirlReport]:
    """Average u rho u-dagger over n random bilateral rotations u = r (x) r,
    with r drawn Haar-uniformly from SU(2). The report carries the trace
    distance between the average and the exact Werner target."""
    if n < 1:
        raise ValueError("need at least one sample")
    mat = qstate.as_matrix(rho)
    fid_in = qstate.fidelity_singlet(mat)
    rng = ensemble.stream(seed, stream_id)
    acc = np.zeros((4, 4), dtype=complex)
    left = n
    while left > 0:
        m = min(200_000, left)
        u2 = _su2_batch(rng, m)
        u4 = np.einsum("nab,ncd->nacbd", u2, u2).reshape(m, 4, 4)
        acc += np.einsum("nij,jk,nlk->il", u4, mat, u4.conj())
        left -= m
    avg = acc / n
    target = bell.to_density(exact_twirl(mat))
    report = TwirlReport(
        n_samples=n,
        trace_distance_to_werner=trace_distance(avg, target.mat),
        fidelity_in=fid_in,
        fidelity_out=qstate.fidelity_singlet(avg),
    )
    return qstate.DensityMatrix(avg), report


def discrete_twirl(d: BellDiagonal, seed: int | None = None) -> BellDiagonal:
    """Twirl a Bell-diagonal state over the discrete bilateral-rotation set.

    Without a seed this is the analytic group average: the three triplet
    weights are equalized and the singlet weight is untouched. With a seed,
    one uniformly drawn permutation from TWIRL_PERMS is applied (the sampled
    form used by Monte Carlo ensembles; its expectation is the average).
    """
    if seed is None:
        t = float(d.p[0] + d.p[1] + d.p[2]) / 3.0
        return BellDiagonal((t, t, t, float(d.p[3])))
    rng = ensemble.stream(seed)
    perm = TWIRL_PERMS[int(rng.integers(TWIRL_PERMS.shape[0]))]
    out = np.empty(4)
    out[perm] = d.p
    return BellDiagonal(out)


def twirl_labels(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Apply an independent uniformly drawn discrete twirl to every label."""
    if labels.size == 0:
        return labels
    g = rng.integers(0, TWIRL_PERMS.shape[0], size=labels.shape[0])
    return TWIRL_PERMS[g, labels]


def convergence_table(
    rho, sample_sizes, reps: int = 1, seed: int = 0
) -> list[tuple[int, float]]:
    """Mean trace distance between the sampled and exact twirl at each sample
    size, averaged over reps independent substreams of the seed."""
    rows = []
    sid = 0
    for n in sample_sizes:
        total = 0.0
        for _ in range(reps):
            _, rep = sampled_twirl(rho, int(n), seed, stream_id=sid)
            total += rep.trace_distance_to_werner
            sid += 1
        rows.append((int(n), total / reps))
    return rows
