"""Detector tomography: estimate an unknown POVM from finite counts.

Known probe states are measured repeatedly; per outcome, a Hermitian
effect is fitted to the empirical frequencies by least squares with the
completeness sum rule imposed exactly, then the family is projected onto
valid POVMs (spectra clipped to [0, 1], completeness residual
redistributed, iterated). Linear inversion plus cone projection is
deliberate: deterministic and adequate at these sizes; maximum-likelihood
refinement is out of scope.

The sharpness of a binary z-aligned POVM and its bootstrap uncertainty
close the loop with the pointer model: sweeping the coupling strength
must move the estimated sharpness along the closed-form law.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .born import born_prob, effect_gram, hermitian_basis
from .channels import luders_instrument
from .errors import CompletenessError, DimensionError, ValidationError
from .linalg import (
    SIGMA_Z,
    DensityOperator,
    Effect,
    Povm,
    Tolerances,
    bloch_vector_state,
    dagger,
    hermitian_part,
    max_abs,
)
from .records import sample

BOOTSTRAP_RESAMPLES = 200
_RELAXED = Tolerances(psd=1e-8, effect_upper=1e-8, complete=1e-8, herm=1e-8)


@dataclass(frozen=True)
class ProbeSet:
    """Known input states spanning the Hermitian space (rank d^2 check)."""

    states: tuple[DensityOperator, ...]
    descriptors: tuple[str, ...]

    def __post_init__(self):
        states = tuple(self.states)
        descriptors = tuple(str(d) for d in self.descriptors)
        if len(states) != len(descriptors):
            raise ValidationError("one descriptor per probe state is required")
        if len(set(descriptors)) != len(descriptors):
            raise ValidationError("duplicate probe descriptors")
        if not states:
            raise ValidationError("probe set is empty")
        d = states[0].dim
        for s in states:
            if s.dim != d:
                raise DimensionError("probe states have mixed dimensions")
        gram = effect_gram([s.matrix for s in states])
        if np.linalg.matrix_rank(gram, tol=1e-10) < d * d:
            raise CompletenessError("probe states do not span the Hermitian space")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "descriptors", descriptors)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def __len__(self) -> int:
        return len(self.states)


def qubit_probes() -> ProbeSet:
    """The six Pauli eigenstates; antipodal pairs sum to the identity."""
    axes = {
        "+x": (1, 0, 0),
        "-x": (-1, 0, 0),
        "+y": (0, 1, 0),
        "-y": (0, -1, 0),
        "+z": (0, 0, 1),
        "-z": (0, 0, -1),
    }
    return ProbeSet(
        tuple(bloch_vector_state(n) for n in axes.values()),
        tuple(axes),
    )


@dataclass(frozen=True)
class CountTable:
    """Per-probe outcome counts from identical finite-shot runs."""

    counts: np.ndarray  # (n_probes, n_outcomes)
    outcome_labels: tuple[str, ...]
    probes: ProbeSet
    shots_per_probe: int
    seed: int

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (len(self.probes), len(self.outcome_labels)):
            raise ValidationError(
                f"count table shape {c.shape} != (n_probes, n_outcomes)"
            )
        if (c < 0).any():
            raise ValidationError("negative count")
        if not (c.sum(axis=1) == self.shots_per_probe).all():
            raise ValidationError("each probe row must sum to shots_per_probe")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "outcome_labels", tuple(self.outcome_labels))

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots_per_probe


@dataclass(frozen=True)
class TomographyResult:
    povm_hat: Povm
    eta_hat: float
    eta_stderr: float
    shots_per_probe: int

    def __post_init__(self):
        if self.eta_stderr < 0:
            raise ValidationError("stderr cannot be negative")


def simulate_counts(
    p: Povm, probes: ProbeSet, shots: int, seed: int
) -> CountTable:
    """Finite-shot counts of a known POVM on every probe.

    Probe ``k`` samples from stream ``k`` of the seed through the records
    sampler (the POVM is measured through its square-root instrument).
    """
    if p.dim != probes.dim:
        raise DimensionError(f"POVM dim {p.dim} != probe dim {probes.dim}")
    if shots < 1:
        raise ValidationError(f"shots must be at least 1, got {shots}")
    ins = luders_instrument(p)
    rows = []
    for k, state in enumerate(probes.states):
        log = sample(ins, state, shots, seed, stream=k)
        rows.append([log.counts[label] for label in p.labels])
    return CountTable(
        counts=np.array(rows),
        outcome_labels=p.labels,
        probes=probes,
        shots_per_probe=shots,
        seed=seed,
    )


def _fit_effects(frequencies: np.ndarray, probes: ProbeSet) -> np.ndarray:
    """Constrained least squares: per-outcome Hermitian fits whose sum is
    exactly the identity (same design matrix for every outcome, so the
    constrained optimum is the free optimum plus a uniform correction)."""
    d = probes.dim
    basis = hermitian_basis(d)
    design = np.array(
        [[float(np.trace(s.matrix @ b).real) for b in basis] for s in probes.states]
    )
    sv = np.linalg.svd(design, compute_uv=False)
    if len(sv) < d * d or sv[d * d - 1] <= sv[0] * 1e-10:
        raise CompletenessError("probe design matrix is rank deficient")
    coeffs, *_ = np.linalg.lstsq(design, frequencies, rcond=None)  # (d^2, n_out)
    identity_coords = np.zeros(d * d)
    identity_coords[0] = np.sqrt(d)  # I = sqrt(d) * B_0
    correction = (coeffs.sum(axis=1) - identity_coords) / frequencies.shape[1]
    coeffs = coeffs - correction[:, None]
    return np.einsum("ao,aij->oij", coeffs, basis)


def _project_povm(effects: np.ndarray, max_rounds: int = 50, tol: float = 1e-10) -> np.ndarray:
    """Clip spectra to [0, 1] and re-impose completeness, alternating."""
    n, d = effects.shape[0], effects.shape[1]
    current = effects.copy()
    for _ in range(max_rounds):
        herm = (current + np.conj(np.swapaxes(current, -1, -2))) / 2
        w, v = np.linalg.eigh(herm)
        w = np.clip(w, 0.0, 1.0)
        current = np.einsum("oik,ok,ojk->oij", v, w, np.conj(v))
        residual = current.sum(axis=0) - np.eye(d)
        if max_abs(residual) < tol:
            return current
        current = current - residual[None] / n
    return current


def reconstruct_povm(counts: CountTable) -> Povm:
    """POVM estimate from a count table by constrained linear inversion.

    Exact Born frequencies are recovered exactly (the projection loop is
    a no-op there); finite-shot tables land on the nearest valid POVM the
    alternating projection reaches within its round budget.
    """
    effects = _fit_effects(counts.frequencies(), counts.probes)
    effects = _project_povm(effects)
    return Povm(
        tuple(Effect(hermitian_part(m), tol=_RELAXED) for m in effects),
        counts.outcome_labels,
        tol=_RELAXED,
    )


def eta_point_estimate(p: Povm) -> float:
    """Sharpness of a z-aligned binary POVM: Tr(sigma_z (E+ - E-)) / 2,
    projected to [0, 1]."""
    if len(p) != 2:
        raise ValidationError(f"sharpness needs a binary POVM, got {len(p)} outcomes")
    if p.dim != 2:
        raise DimensionError("sharpness estimation is defined for qubit POVMs")
    diff = p.effects[0].matrix - p.effects[1].matrix
    eta = float(np.trace(SIGMA_Z @ diff).real) / 2
    return min(max(eta, 0.0), 1.0)


def estimate_eta(
    p: Povm,
    counts: CountTable | None = None,
    bootstrap: int = BOOTSTRAP_RESAMPLES,
) -> tuple[float, float]:
    """Sharpness estimate with bootstrap standard error.

    With no count table the input POVM is exact and the standard error is
    zero. Otherwise each resample redraws every probe row from its
    empirical frequencies and reruns the full reconstruction pipeline, so
    the error bar reflects the cone projection as well as shot noise.
    """
    eta_hat = eta_point_estimate(p)
    if counts is None:
        return eta_hat, 0.0
    freqs = counts.frequencies()
    shots = counts.shots_per_probe
    estimates = np.empty(bootstrap)
    for b in range(bootstrap):
        gen = _rng.stream(counts.seed, index=1_000_000 + b)
        rows = np.stack(
            [gen.multinomial(shots, row / row.sum()) for row in freqs]
        )
        table = CountTable(
            counts=rows,
            outcome_labels=counts.outcome_labels,
            probes=counts.probes,
            shots_per_probe=shots,
            seed=counts.seed,
        )
        estimates[b] = eta_point_estimate(reconstruct_povm(table))
    return eta_hat, float(estimates.std(ddof=1))


def run_qubit_tomography(
    p: Povm, shots: int, seed: int, bootstrap: int = BOOTSTRAP_RESAMPLES
) -> TomographyResult:
    """Full pipeline on the six-state probe set: counts, reconstruction,
    sharpness with bootstrap error."""
    probes = qubit_probes()
    counts = simulate_counts(p, probes, shots, seed)
    povm_hat = reconstruct_povm(counts)
    eta_hat, stderr = estimate_eta(povm_hat, counts, bootstrap=bootstrap)
    return TomographyResult(
        povm_hat=povm_hat,
        eta_hat=eta_hat,
        eta_stderr=stderr,
        shots_per_probe=shots,
    )
