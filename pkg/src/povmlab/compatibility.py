"""Joint measurability of POVMs and joint-instrument existence.

Two POVMs are jointly measurable when a parent grid of effects has them
as row and column marginals; two instruments are jointly implementable
when a grid of CP branches satisfies both marginal sum rules. Both
questions are convex feasibility problems over PSD blocks with affine
marginal constraints, solved here by Dykstra's alternating projections:

* projection onto the affine marginal set is closed form (after
  centering, the correction decouples into per-entry row/column shifts);
* projection onto the PSD cone product is an eigenvalue clip per block.

A full interior-point SDP is deliberately avoided: the sizes here
(dimension <= 4, outcome grids <= 4x4) need only Hermitian
eigendecompositions, and the honest third verdict "undecided" is
preferable near the feasibility boundary. Incompatibility is reported
without a dual certificate; the evidence is the stabilized positive gap
(the Dykstra increment norm), cross-validated in the test suite against
an independent brute-force oracle on the qubit sharpness frontier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import ChoiMatrix, Instrument, choi_of_branch
from .errors import BoundaryUndecidedError, DimensionError, ValidationError
from .linalg import (
    Effect,
    Povm,
    Tolerances,
    _freeze,
    dagger,
    hermitian_part,
    max_abs,
)
from .pointer import unsharp_binary_povm

COMPATIBLE = "compatible"
INCOMPATIBLE = "incompatible"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class FeasibilityOptions:
    max_iter: int = 20000
    tol: float = 1e-7
    gap_window: int = 100


DEFAULT_OPTIONS = FeasibilityOptions()


@dataclass(frozen=True)
class JointPovmCandidate:
    """Grid of effects whose row/column sums are two POVMs' effects."""

    effects: np.ndarray  # (m, n, d, d)
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    tol_complete: float = field(default=1e-8, repr=False, compare=False)

    def __post_init__(self):
        g = np.asarray(self.effects, dtype=complex)
        if g.ndim != 4 or g.shape[2] != g.shape[3]:
            raise ValidationError(f"expected an (m, n, d, d) grid, got shape {g.shape}")
        if g.shape[0] != len(self.row_labels) or g.shape[1] != len(self.col_labels):
            raise ValidationError("label counts do not match the grid shape")
        total = g.sum(axis=(0, 1))
        dev = max_abs(total - np.eye(g.shape[2]))
        if dev > self.tol_complete:
            raise ValidationError(f"joint grid does not resolve identity (deviation {dev:.3e})")
        frozen = np.array(g, order="C")
        frozen.setflags(write=False)
        object.__setattr__(self, "effects", frozen)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))

    @property
    def dim(self) -> int:
        return self.effects.shape[2]


@dataclass(frozen=True)
class JointInstrumentCandidate:
    """Grid of Choi matrices satisfying both instrument marginal sum rules."""

    chois: np.ndarray  # (m, n, D, D) with D = d_in * d_out
    dims: tuple[int, int]
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self):
        g = np.asarray(self.chois, dtype=complex)
        d = int(self.dims[0]) * int(self.dims[1])
        if g.ndim != 4 or g.shape[2] != d or g.shape[3] != d:
            raise ValidationError(f"expected an (m, n, {d}, {d}) Choi grid, got {g.shape}")
        frozen = np.array(g, order="C")
        frozen.setflags(write=False)
        object.__setattr__(self, "chois", frozen)
        object.__setattr__(self, "dims", (int(self.dims[0]), int(self.dims[1])))
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))

    def marginal_chois(self) -> tuple[np.ndarray, np.ndarray]:
        return self.chois.sum(axis=1), self.chois.sum(axis=0)


@dataclass(frozen=True)
class CompatReport:
    """Feasibility verdict with its numeric evidence.

    ``witness_margin`` is the worst constraint residual of the returned
    joint when compatible, and the stabilized inter-set gap estimate when
    incompatible or undecided.
    """

    verdict: str
    witness_margin: float
    joint: JointPovmCandidate | JointInstrumentCandidate | None
    iterations: int
    tolerance: float

    def __post_init__(self):
        if self.verdict not in (COMPATIBLE, INCOMPATIBLE, UNDECIDED):
            raise ValidationError(f"unknown verdict {self.verdict!r}")
        if self.verdict == COMPATIBLE and self.joint is None:
            raise ValidationError("compatible verdict requires an explicit joint")


def marginals(j: JointPovmCandidate) -> tuple[Povm, Povm]:
    """Row-sum and column-sum POVMs of a joint candidate.

    Solver-produced grids carry residuals up to the solver tolerance, so
    the marginals are validated with correspondingly relaxed bounds.
    """
    relaxed = Tolerances(psd=1e-6, effect_upper=1e-6, complete=1e-6, herm=1e-8)
    rows = j.effects.sum(axis=1)
    cols = j.effects.sum(axis=0)
    row_povm = Povm(
        tuple(Effect(hermitian_part(m), tol=relaxed) for m in rows),
        j.row_labels,
        tol=relaxed,
    )
    col_povm = Povm(
        tuple(Effect(hermitian_part(m), tol=relaxed) for m in cols),
        j.col_labels,
        tol=relaxed,
    )
    return row_povm, col_povm


# ---------------------------------------------------------------------------
# Dykstra engine over block grids


def _project_affine(grid: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto {G : sum_j G_ij = rows_i, sum_i G_ij = cols_j}.

    Decouples per matrix entry: the correction is a row shift plus a
    column shift plus a global shift, all closed form.
    """
    m, n = grid.shape[0], grid.shape[1]
    row_sums = grid.sum(axis=1)
    col_sums = grid.sum(axis=0)
    total = row_sums.sum(axis=0)
    target_total = rows.sum(axis=0)
    out = grid + (rows - row_sums)[:, None] / n + (cols - col_sums)[None, :] / m
    out -= (target_total - total) / (m * n)
    return out


def _project_psd_blocks(grid: np.ndarray) -> tuple[np.ndarray, float]:
    """Clip each block to the PSD cone; also return the worst negativity."""
    herm = (grid + np.conj(np.swapaxes(grid, -1, -2))) / 2
    w, v = np.linalg.eigh(herm)
    negativity = float(max(0.0, -w.min()))
    w = np.clip(w, 0.0, None)
    out = np.einsum("...ik,...k,...jk->...ij", v, w, np.conj(v))
    return out, negativity


def _blocks_negativity(grid: np.ndarray) -> float:
    herm = (grid + np.conj(np.swapaxes(grid, -1, -2))) / 2
    w = np.linalg.eigvalsh(herm)
    return float(max(0.0, -w.min()))


def _marginal_residual(grid: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> float:
    r = max_abs(grid.sum(axis=1) - rows)
    c = max_abs(grid.sum(axis=0) - cols)
    return max(r, c)


@dataclass
class _GridVerdict:
    verdict: str
    grid: np.ndarray
    margin: float
    iterations: int


def _dykstra_feasibility(
    start: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    opts: FeasibilityOptions,
) -> _GridVerdict:
    # On an infeasible problem the x (PSD-side) and y (affine-side)
    # sequences converge to a nearest pair, so ||x - y|| estimates the
    # inter-set gap; it must both exceed 10*tol and stop moving (stay
    # non-decreasing within jitter over the window) before we commit to
    # "incompatible".
    x = start.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    window: list[float] = []
    gap = math.inf
    for it in range(1, opts.max_iter + 1):
        y = _project_affine(x + p, rows, cols)
        p = x + p - y
        z = y + q
        x, _ = _project_psd_blocks(z)
        q = z - x
        gap = float(np.linalg.norm(x - y))

        affine_res = _marginal_residual(x, rows, cols)
        cone_res = _blocks_negativity(y)
        if affine_res < opts.tol and cone_res < opts.tol:
            return _GridVerdict(COMPATIBLE, x, max(affine_res, cone_res), it)

        window.append(gap)
        if len(window) > opts.gap_window:
            window.pop(0)
            high = min(window) > 10.0 * opts.tol
            flat = max(window) - min(window) <= max(1e-3 * min(window), 0.01 * opts.tol)
            non_decreasing = all(
                later >= earlier - 0.01 * opts.tol
                for earlier, later in zip(window, window[1:])
            )
            if high and flat and non_decreasing:
                return _GridVerdict(INCOMPATIBLE, x, gap, it)
    return _GridVerdict(UNDECIDED, x, gap, opts.max_iter)


# ---------------------------------------------------------------------------
# POVM-level feasibility


def joint_povm_feasibility(
    a: Povm, b: Povm, opts: FeasibilityOptions = DEFAULT_OPTIONS
) -> CompatReport:
    """Decide joint measurability of two POVMs on the same space.

    Searches for a parent effect grid by alternating projections from the
    symmetrized product guess. Compatible when both constraint residuals
    fall below ``opts.tol``; incompatible when the increment norm
    stabilizes above ten times the tolerance without decreasing over the
    gap window; undecided otherwise.
    """
    if a.dim != b.dim:
        raise DimensionError(f"POVM dimensions differ: {a.dim} vs {b.dim}")
    rows = a.arrays()
    cols = b.arrays()
    start = np.empty((len(a), len(b), a.dim, a.dim), dtype=complex)
    for i, ai in enumerate(rows):
        for j, bj in enumerate(cols):
            start[i, j] = (ai @ bj + bj @ ai) / 2
    result = _dykstra_feasibility(start, rows, cols, opts)
    joint = None
    if result.verdict == COMPATIBLE:
        joint = JointPovmCandidate(
            result.grid,
            a.labels,
            b.labels,
            tol_complete=max(1e-8, (len(a) + len(b)) * opts.tol),
        )
    return CompatReport(result.verdict, result.margin, joint, result.iterations, opts.tol)


def joint_instrument_feasibility(
    ins_a: Instrument, ins_b: Instrument, opts: FeasibilityOptions = DEFAULT_OPTIONS
) -> CompatReport:
    """Decide whether two instruments admit a joint instrument.

    A parent grid of CP branches must marginalize to both instruments
    (sum over one index reproduces each branch of the other). Feasibility
    runs over the grid of Choi matrices: PSD blocks with affine marginal
    constraints. Two cheap necessary conditions run first:

    * the induced POVMs must themselves be jointly measurable;
    * both instruments must share one total channel (any joint's total is
      simultaneously each marginal's total).

    Failing either is reported as incompatible without the solver.
    """
    if ins_a.dims != ins_b.dims:
        raise DimensionError(f"instrument dims differ: {ins_a.dims} vs {ins_b.dims}")
    povm_report = joint_povm_feasibility(ins_a.povm(), ins_b.povm(), opts)
    if povm_report.verdict == INCOMPATIBLE:
        return CompatReport(
            INCOMPATIBLE, povm_report.witness_margin, None, povm_report.iterations, opts.tol
        )
    rows = np.stack([choi_of_branch(ops, ins_a.dims).matrix for ops in ins_a.branches.values()])
    cols = np.stack([choi_of_branch(ops, ins_b.dims).matrix for ops in ins_b.branches.values()])
    total_mismatch = max_abs(rows.sum(axis=0) - cols.sum(axis=0))
    if total_mismatch > opts.tol:
        return CompatReport(INCOMPATIBLE, float(total_mismatch), None, 0, opts.tol)

    weights = np.array([float(np.trace(c).real) for c in cols]) / ins_b.d_in
    start = rows[:, None] * weights[None, :, None, None]
    result = _dykstra_feasibility(start, rows, cols, opts)
    joint = None
    if result.verdict == COMPATIBLE:
        joint = JointInstrumentCandidate(
            result.grid, ins_a.dims, ins_a.labels, ins_b.labels
        )
    return CompatReport(result.verdict, result.margin, joint, result.iterations, opts.tol)


# ---------------------------------------------------------------------------
# sharpness frontier


@dataclass(frozen=True)
class BoundaryEstimate:
    eta: float
    half_width: float


def sharpness_boundary(
    axis_a: Sequence[float],
    axis_b: Sequence[float],
    opts: FeasibilityOptions = DEFAULT_OPTIONS,
    half_width: float = 0.005,
) -> BoundaryEstimate:
    """Bisect the compatibility frontier of equal-sharpness unbiased binary
    POVMs along two Bloch axes.

    Returns the largest sharpness at which the pair stays jointly
    measurable, bracketed to ``half_width``. An undecided verdict at a
    probe ends the search there (the probe itself marks the boundary);
    undecided verdicts at both initial brackets raise
    :class:`BoundaryUndecidedError`.
    """

    def verdict_at(eta: float) -> str:
        pa = unsharp_binary_povm(eta, axis_a)
        pb = unsharp_binary_povm(eta, axis_b)
        return joint_povm_feasibility(pa, pb, opts).verdict

    top = verdict_at(1.0)
    if top == COMPATIBLE:
        return BoundaryEstimate(1.0, 0.0)
    bottom = verdict_at(0.0)
    if bottom != COMPATIBLE:
        if top == UNDECIDED and bottom == UNDECIDED:
            raise BoundaryUndecidedError("solver undecided at both brackets")
        raise ValidationError("trivial POVM pair reported incompatible; solver misconfigured")

    lo, hi = 0.0, 1.0
    while hi - lo > 2.0 * half_width:
        mid = (lo + hi) / 2
        v = verdict_at(mid)
        if v == COMPATIBLE:
            lo = mid
        elif v == INCOMPATIBLE:
            hi = mid
        else:
            return BoundaryEstimate(mid, (hi - lo) / 2)
    return BoundaryEstimate((lo + hi) / 2, (hi - lo) / 2)
