"""Trace-rule evaluation, additivity checks, and linear state reconstruction.

The probability assignment p = Tr(rho E) is the unique measure that is
additive over exclusive outcomes and invariant under the unitary frame;
this module exercises that statement operationally: additivity over
random orthogonal resolutions, and unique recovery of the state from the
probabilities of an informationally complete effect family. No theorem
is proved here; the checks guard the implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CompletenessError, DimensionError, ValidationError
from .linalg import (
    DensityOperator,
    Effect,
    Povm,
    PAULIS,
    dagger,
    haar_unitary,
    hermitian_part,
    max_abs,
    projector,
)


def born_prob(rho: DensityOperator, e: Effect) -> float:
    """Tr(rho E), clamped to [0, 1] when within 1e-10 of the boundary."""
    if rho.dim != e.dim:
        raise DimensionError(f"state dim {rho.dim} != effect dim {e.dim}")
    p = float(np.trace(rho.matrix @ e.matrix).real)
    if p < -1e-10 or p > 1 + 1e-10:
        raise ValidationError(f"Born probability {p:.12g} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def _check_resolution(resolution, dim: int, tol: float = 1e-9) -> list[np.ndarray]:
    mats = [np.asarray(p, dtype=complex) for p in resolution]
    if not mats:
        raise ValidationError("empty projector resolution")
    total = np.zeros((dim, dim), dtype=complex)
    for p in mats:
        if p.shape != (dim, dim):
            raise DimensionError(f"projector shape {p.shape} != ({dim}, {dim})")
        if max_abs(p - dagger(p)) > 1e-9 or max_abs(p @ p - p) > 1e-8:
            raise ValidationError("resolution element is not an orthogonal projector")
        total += p
    if max_abs(total - np.eye(dim)) > tol:
        raise ValidationError("projectors do not resolve the identity")
    return mats


def additivity_check(rho: DensityOperator, resolutions) -> float:
    """Max over resolutions of |sum_k Tr(rho P_k) - 1|.

    Each entry of ``resolutions`` is a list of orthogonal projectors
    summing to the identity (see :func:`random_projector_resolutions` for
    Haar-random ones). The trace rule makes the deviation vanish; the
    check guards the arithmetic.
    """
    worst = 0.0
    for resolution in resolutions:
        mats = _check_resolution(resolution, rho.dim)
        s = sum(float(np.trace(rho.matrix @ p).real) for p in mats)
        worst = max(worst, abs(s - 1.0))
    return worst


def random_projector_resolutions(
    dim: int, count: int, rng: np.random.Generator
) -> list[list[np.ndarray]]:
    """Rank-1 orthogonal resolutions from Haar-random unitaries' columns."""
    out = []
    for _ in range(count):
        u = haar_unitary(dim, rng)
        out.append([np.outer(u[:, k], u[:, k].conj()) for k in range(dim)])
    return out


def ic_effects_qubit() -> Povm:
    """Tetrahedral four-outcome qubit POVM E_k = (I + n_k.sigma)/4.

    The four Bloch directions are the alternating-sign corners of the
    cube scaled to the unit sphere; they sum to zero exactly, so the
    effects resolve the identity exactly. The Gram matrix of the effects
    has rank 4: the family is informationally complete.
    """
    corners = np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
    ) / np.sqrt(3.0)
    effects = []
    for n in corners:
        m = (np.eye(2) + sum(c * p for c, p in zip(n, PAULIS))) / 4
        effects.append(Effect(m))
    return Povm(tuple(effects), ("t0", "t1", "t2", "t3"))


def ic_projectors_qutrit(seed: int = 20240917) -> tuple[Effect, ...]:
    """Nine rank-1 qutrit projectors spanning the Hermitian space.

    Drawn from fixed-seed Haar-random frames and rank-validated at
    construction; any rank-9 family would do for reconstruction.
    """
    rng = np.random.default_rng(seed)
    vecs = []
    for _ in range(3):
        u = haar_unitary(3, rng)
        vecs.extend(u[:, k] for k in range(3))
    # Rotate each vector independently so the frames do not share sum rules.
    effects = tuple(Effect(projector(haar_unitary(3, rng) @ v)) for v in vecs)
    gram = effect_gram(effects)
    if np.linalg.matrix_rank(gram, tol=1e-10) != 9:
        raise CompletenessError("qutrit projector family failed the rank check")
    return effects


def effect_gram(effects) -> np.ndarray:
    """Hilbert-Schmidt Gram matrix Tr(E_i E_j) of an effect family."""
    mats = [e.matrix if isinstance(e, Effect) else np.asarray(e) for e in effects]
    n = len(mats)
    gram = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            gram[i, j] = float(np.trace(mats[i] @ mats[j]).real)
    return gram


@dataclass(frozen=True)
class FrameSample:
    """One observed (effect, probability) pair feeding reconstruction."""

    effect: Effect
    probability: float

    def __post_init__(self):
        p = float(self.probability)
        if not np.isfinite(p) or p < -1e-12 or p > 1 + 1e-12:
            raise ValidationError(f"probability {p!r} outside [0, 1]")
        object.__setattr__(self, "probability", min(max(p, 0.0), 1.0))


@dataclass(frozen=True)
class ReconstructionReport:
    rho_hat: DensityOperator
    residual: float
    condition_diagnostic: float


def hermitian_basis(dim: int) -> np.ndarray:
    """Orthonormal (Hilbert-Schmidt) Hermitian basis, identity direction first."""
    basis = [np.eye(dim, dtype=complex) / np.sqrt(dim)]
    for j in range(dim):
        for k in range(j + 1, dim):
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = m[k, j] = 1 / np.sqrt(2)
            basis.append(m)
            m = np.zeros((dim, dim), dtype=complex)
            m[j, k] = -1j / np.sqrt(2)
            m[k, j] = 1j / np.sqrt(2)
            basis.append(m)
    for ell in range(1, dim):
        m = np.zeros((dim, dim), dtype=complex)
        m[np.arange(ell), np.arange(ell)] = 1.0
        m[ell, ell] = -float(ell)
        basis.append(m / np.sqrt(ell * (ell + 1)))
    return np.stack(basis)


def reconstruct_state(samples) -> ReconstructionReport:
    """Least-squares state from probabilities on a spanning effect family.

    The unit trace enters as a linear constraint (the identity coordinate
    is fixed, the traceless coordinates are solved by least squares); the
    result is then projected to the PSD cone by eigenvalue clipping with
    trace renormalization. The residual is the worst probability mismatch
    of the returned state; the condition diagnostic is the design-matrix
    condition number.
    """
    samples = list(samples)
    if not samples:
        raise ValidationError("no samples given")
    dim = samples[0].effect.dim
    for s in samples:
        if s.effect.dim != dim:
            raise DimensionError("samples mix effect dimensions")
    basis = hermitian_basis(dim)
    design = np.array(
        [[float(np.trace(s.effect.matrix @ b).real) for b in basis] for s in samples]
    )
    sv = np.linalg.svd(design, compute_uv=False)
    if len(sv) < dim * dim or sv[dim * dim - 1] <= sv[0] * 1e-10:
        raise CompletenessError(
            f"effect family is informationally incomplete (rank < {dim * dim})"
        )
    probs = np.array([s.probability for s in samples])
    trace_coord = 1.0 / np.sqrt(dim)
    rhs = probs - design[:, 0] * trace_coord
    coeffs, *_ = np.linalg.lstsq(design[:, 1:], rhs, rcond=None)
    rho_lin = basis[0] * trace_coord
    for c, b in zip(coeffs, basis[1:]):
        rho_lin = rho_lin + c * b
    w, v = np.linalg.eigh(hermitian_part(rho_lin))
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise ValidationError("reconstruction collapsed to the zero matrix")
    rho_psd = (v * (w / w.sum())) @ dagger(v)
    rho_hat = DensityOperator(hermitian_part(rho_psd))
    residual = max(
        abs(float(np.trace(rho_hat.matrix @ s.effect.matrix).real) - s.probability)
        for s in samples
    )
    return ReconstructionReport(
        rho_hat=rho_hat,
        residual=residual,
        condition_diagnostic=float(sv[0] / sv[dim * dim - 1]),
    )


def forward_samples(rho: DensityOperator, effects) -> list[FrameSample]:
    """Exact Born samples of a state on an effect family."""
    return [FrameSample(e, born_prob(rho, e)) for e in effects]
