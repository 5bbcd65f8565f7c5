"""Completely positive maps, instruments, and effect pullback.

A channel is kept in Kraus form; an instrument maps outcome labels to CP
branches (lists of Kraus operators) whose union is trace preserving. The
Choi representation used by the compatibility solver fixes the
column-stacking convention ``C = sum_ij |i><j| (x) L(|i><j|)`` repo-wide;
both conventions appear in the literature, so conversions must not be
mixed with other codebases unchecked.

The induced POVM of a detector (coupling unitary, apparatus state,
apparatus readout) is computed through the duality relation evaluated on
a matrix-unit basis of the system. This covers mixed apparatus states,
where the pure-state sandwich form does not apply directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConditioningError,
    DimensionError,
    PositivityError,
    ValidationError,
)
from .linalg import (
    DEFAULT_TOL,
    DensityOperator,
    Effect,
    Povm,
    Tolerances,
    UnitaryOperator,
    _freeze,
    as_matrix,
    dagger,
    hermitian_part,
    max_abs,
    sqrt_psd,
)


@dataclass(frozen=True)
class KrausChannel:
    """Trace-preserving CP map as a list of (d_out x d_in) Kraus operators."""

    kraus_ops: tuple[np.ndarray, ...]
    dims: tuple[int, int]  # (d_in, d_out)
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        d_in, d_out = int(self.dims[0]), int(self.dims[1])
        ops = tuple(_freeze(as_matrix(k, rows=d_out, cols=d_in)) for k in self.kraus_ops)
        if not ops:
            raise ValidationError("a channel needs at least one Kraus operator")
        total = sum(dagger(k) @ k for k in ops)
        dev = max_abs(total - np.eye(d_in))
        if dev > self.tol.complete:
            raise ValidationError(
                f"Kraus operators are not trace preserving (|sum K^dag K - I| = {dev:.3e})"
            )
        object.__setattr__(self, "kraus_ops", ops)
        object.__setattr__(self, "dims", (d_in, d_out))

    @property
    def d_in(self) -> int:
        return self.dims[0]

    @property
    def d_out(self) -> int:
        return self.dims[1]


@dataclass(frozen=True)
class Instrument:
    """Outcome-labelled CP branches summing to a trace-preserving channel.

    Branches may be empty (a null outcome that never fires); each branch is
    CP automatically by being in Kraus form.
    """

    branches: Mapping[str, Sequence[np.ndarray]]
    dims: tuple[int, int]
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        d_in, d_out = int(self.dims[0]), int(self.dims[1])
        if not self.branches:
            raise ValidationError("an instrument needs at least one outcome")
        branches: dict[str, tuple[np.ndarray, ...]] = {}
        for label, ops in self.branches.items():
            branches[str(label)] = tuple(
                _freeze(as_matrix(k, rows=d_out, cols=d_in)) for k in ops
            )
        total = np.zeros((d_in, d_in), dtype=complex)
        for ops in branches.values():
            for k in ops:
                total += dagger(k) @ k
        dev = max_abs(total - np.eye(d_in))
        if dev > self.tol.complete:
            raise ValidationError(
                f"instrument branches are not trace preserving in total (deviation {dev:.3e})"
            )
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "dims", (d_in, d_out))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.branches)

    @property
    def d_in(self) -> int:
        return self.dims[0]

    @property
    def d_out(self) -> int:
        return self.dims[1]

    def total_channel(self) -> KrausChannel:
        ops = [k for branch in self.branches.values() for k in branch]
        return KrausChannel(tuple(ops), self.dims, tol=self.tol)

    def povm(self) -> Povm:
        """Outcome statistics of the instrument: effects sum_k K^dag K per branch."""
        effects = []
        for ops in self.branches.values():
            e = np.zeros((self.d_in, self.d_in), dtype=complex)
            for k in ops:
                e += dagger(k) @ k
            effects.append(Effect(hermitian_part(e), tol=self.tol))
        return Povm(tuple(effects), self.labels, tol=self.tol)


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi matrix of a CP map, PSD within tolerance; dims = (d_in, d_out)."""

    matrix: np.ndarray
    dims: tuple[int, int]
    tol_psd: float = field(default=1e-9, repr=False, compare=False)

    def __post_init__(self):
        d_in, d_out = int(self.dims[0]), int(self.dims[1])
        m = as_matrix(self.matrix, rows=d_in * d_out, cols=d_in * d_out)
        w = np.linalg.eigvalsh(hermitian_part(m))
        if w[0] < -self.tol_psd:
            raise PositivityError(f"Choi matrix has eigenvalue {w[0]:.3e} < 0: map is not CP")
        object.__setattr__(self, "matrix", _freeze(m))
        object.__setattr__(self, "dims", (d_in, d_out))


# ---------------------------------------------------------------------------
# channel operations


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel((np.eye(dim),), (dim, dim))


def unitary_channel(u: UnitaryOperator) -> KrausChannel:
    return KrausChannel((u.matrix,), (u.dim, u.dim))


def apply(ch: KrausChannel, rho: DensityOperator) -> DensityOperator:
    """Schroedinger-picture action sum_k K rho K^dag."""
    if rho.dim != ch.d_in:
        raise DimensionError(f"state dim {rho.dim} != channel input dim {ch.d_in}")
    out = np.zeros((ch.d_out, ch.d_out), dtype=complex)
    for k in ch.kraus_ops:
        out += k @ rho.matrix @ dagger(k)
    return DensityOperator(hermitian_part(out), tol=ch.tol)


def pullback_effect(ch: KrausChannel, f: Effect) -> Effect:
    """Heisenberg-picture adjoint sum_k K^dag F K, carrying an output
    effect back to the input space. Dual to :func:`apply`:
    Tr(rho E^dag(F)) = Tr(E(rho) F) for every state rho."""
    if f.dim != ch.d_out:
        raise DimensionError(f"effect dim {f.dim} != channel output dim {ch.d_out}")
    out = np.zeros((ch.d_in, ch.d_in), dtype=complex)
    for k in ch.kraus_ops:
        out += dagger(k) @ f.matrix @ k
    return Effect(hermitian_part(out), tol=ch.tol)


def induced_povm(
    u: UnitaryOperator,
    sigma_a: DensityOperator,
    readout: Povm,
    d_sys: int | None = None,
) -> Povm:
    """System POVM induced by coupling to an apparatus that is then read out.

    The system (dimension ``d_sys``, inferred from ``u`` and ``sigma_a``
    when omitted) couples to the apparatus, prepared in ``sigma_a``,
    through ``u`` acting on system (x) apparatus; the apparatus is read by
    ``readout``. Each induced effect is fixed by
    ``Tr(rho E_i) = Tr[U (rho (x) sigma) U^dag (I (x) F_i)]`` for all rho,
    evaluated on the matrix units of the system. Completeness is inherited
    from the readout.
    """
    d_a = sigma_a.dim
    if readout.dim != d_a:
        raise DimensionError(f"readout dim {readout.dim} != apparatus dim {d_a}")
    if u.dim % d_a != 0:
        raise DimensionError(f"coupling dim {u.dim} is not a multiple of apparatus dim {d_a}")
    inferred = u.dim // d_a
    if d_sys is None:
        d_sys = inferred
    elif d_sys != inferred:
        raise DimensionError(f"system dim {d_sys} inconsistent with coupling dim {u.dim}")

    effects = []
    for f in readout.effects:
        tensor_f = np.kron(np.eye(d_sys), f.matrix)
        m = dagger(u.matrix) @ tensor_f @ u.matrix
        m4 = m.reshape(d_sys, d_a, d_sys, d_a)
        # [E]_{ba} = sum_{p,q} M[(b,q),(a,p)] sigma[p,q]
        e = np.einsum("bqap,pq->ba", m4, sigma_a.matrix)
        effects.append(Effect(hermitian_part(e)))
    return Povm(tuple(effects), readout.labels)


def luders_instrument(p: Povm) -> Instrument:
    """Square-root (Lueders) instrument of a POVM: one Kraus sqrt(E_i) per
    outcome. This is the package default update rule for a bare POVM."""
    branches = {
        label: (sqrt_psd(e.matrix, tol=p.tol),)
        for label, e in zip(p.labels, p.effects)
    }
    return Instrument(branches, (p.dim, p.dim), tol=p.tol)


def instrument_probabilities(ins: Instrument, rho: DensityOperator) -> dict[str, float]:
    """Outcome distribution p_f = Tr(sum_k K rho K^dag) over branch labels."""
    if rho.dim != ins.d_in:
        raise DimensionError(f"state dim {rho.dim} != instrument input dim {ins.d_in}")
    probs = {}
    for label, ops in ins.branches.items():
        p = 0.0
        for k in ops:
            p += float(np.trace(k @ rho.matrix @ dagger(k)).real)
        probs[label] = p
    return probs


def instrument_update(ins: Instrument, rho: DensityOperator, label: str) -> DensityOperator:
    """Conditional post-measurement state for one outcome."""
    if label not in ins.branches:
        raise ValidationError(f"unknown outcome label {label!r}")
    if rho.dim != ins.d_in:
        raise DimensionError(f"state dim {rho.dim} != instrument input dim {ins.d_in}")
    out = np.zeros((ins.d_out, ins.d_out), dtype=complex)
    for k in ins.branches[label]:
        out += k @ rho.matrix @ dagger(k)
    p = float(np.trace(out).real)
    if p <= 1e-12:
        raise ConditioningError(f"outcome {label!r} has probability {p:.3e}; cannot condition")
    return DensityOperator(hermitian_part(out) / p, tol=ins.tol)


# ---------------------------------------------------------------------------
# Choi representation


def choi_of_branch(ops: Sequence[np.ndarray], dims: tuple[int, int]) -> ChoiMatrix:
    """Choi matrix C = sum_ij |i><j| (x) L(|i><j|) of a CP branch.

    An empty branch yields the zero matrix (a null outcome).
    """
    d_in, d_out = int(dims[0]), int(dims[1])
    c = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in ops:
        k = as_matrix(k, rows=d_out, cols=d_in)
        x = k.T.reshape(-1)  # x[(i, m)] = K[m, i] under the kron convention
        c += np.outer(x, x.conj())
    return ChoiMatrix(c, (d_in, d_out))


def branch_of_choi(c: ChoiMatrix, cutoff: float = 1e-12) -> tuple[np.ndarray, ...]:
    """Kraus operators of a Choi matrix (inverse of :func:`choi_of_branch`).

    Eigenvalues below ``cutoff`` are dropped; negative ones beyond the CP
    tolerance were already rejected by the ChoiMatrix constructor.
    """
    d_in, d_out = c.dims
    w, v = np.linalg.eigh(hermitian_part(c.matrix))
    ops = []
    for lam, vec in zip(w, v.T):
        if lam <= cutoff:
            continue
        ops.append(np.sqrt(lam) * vec.reshape(d_in, d_out).T)
    return tuple(ops)


def choi_of_instrument(ins: Instrument) -> dict[str, ChoiMatrix]:
    return {label: choi_of_branch(ops, ins.dims) for label, ops in ins.branches.items()}


def apply_choi(c: ChoiMatrix, rho: np.ndarray) -> np.ndarray:
    """Action of the CP map encoded by a Choi matrix on an input matrix."""
    d_in, d_out = c.dims
    rho = as_matrix(rho, rows=d_in, cols=d_in)
    blocks = c.matrix.reshape(d_in, d_out, d_in, d_out)
    return np.einsum("imjn,ij->mn", blocks, rho)


# ---------------------------------------------------------------------------
# worked examples and scenario plumbing


def dephasing_channel(dim: int, basis: UnitaryOperator, strength: float) -> KrausChannel:
    """Channel scaling off-diagonal elements by (1 - strength) in the given basis.

    ``strength`` = 1 is full dephasing. The basis columns define the frame;
    pass the identity for the computational basis.
    """
    lam = float(strength)
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"dephasing strength must lie in [0, 1], got {lam}")
    if basis.dim != dim:
        raise DimensionError(f"basis dim {basis.dim} != {dim}")
    v = basis.matrix
    ops = [np.sqrt(1.0 - lam) * np.eye(dim)]
    # Projector Kraus set K_k = sqrt(lam) P_k kills off-diagonals at rate lam.
    for k in range(dim):
        p = np.outer(v[:, k], v[:, k].conj())
        ops.append(np.sqrt(lam) * p)
    return KrausChannel(tuple(ops), (dim, dim))


def restrict_to_system(
    ins: Instrument, d_sys: int, d_anc: int, ancilla: DensityOperator
) -> Instrument:
    """Instrument induced on the system factor when the ancilla factor is
    prepared in ``ancilla`` and discarded after the branch acts.

    Branch Kraus operators become (I (x) <m|) K (I (x) |phi_nu>) sqrt(s_nu)
    over ancilla basis vectors m and eigenvectors phi_nu of the ancilla
    state. Null operators are trimmed.
    """
    if ins.d_in != d_sys * d_anc or ins.d_out != d_sys * d_anc:
        raise DimensionError(
            f"instrument dims {ins.dims} do not factor as ({d_sys}*{d_anc})"
        )
    if ancilla.dim != d_anc:
        raise DimensionError(f"ancilla state dim {ancilla.dim} != {d_anc}")
    s, phi = np.linalg.eigh(ancilla.matrix)
    embed = []  # columns: I (x) |phi_nu> scaled by sqrt(s_nu)
    for lam, vec in zip(s, phi.T):
        if lam <= 1e-15:
            continue
        embed.append(np.sqrt(lam) * np.kron(np.eye(d_sys), vec.reshape(d_anc, 1)))
    extract = [np.kron(np.eye(d_sys), np.eye(d_anc)[m].reshape(1, d_anc)) for m in range(d_anc)]
    branches: dict[str, tuple[np.ndarray, ...]] = {}
    for label, ops in ins.branches.items():
        small = []
        for k in ops:
            for v_in in embed:
                for v_out in extract:
                    candidate = v_out @ k @ v_in
                    if np.abs(candidate).max() > 1e-14:
                        small.append(candidate)
        branches[label] = tuple(small)
    return Instrument(branches, (d_sys, d_sys), tol=ins.tol)


def trivial_partner(ins: Instrument, label: str = "any") -> Instrument:
    """Single-outcome instrument whose only branch is the total channel of
    ``ins``: the no-information partner that is jointly implementable with
    ``ins`` by construction."""
    total = ins.total_channel()
    return Instrument({label: total.kraus_ops}, ins.dims, tol=ins.tol)
