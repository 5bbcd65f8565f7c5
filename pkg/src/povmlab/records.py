"""Boolean outcome records: Monte-Carlo sampling and nested-observer checks.

Instruments produce classical outcome labels; this module draws those
labels, chains instruments sequentially through conditional updates,
compares frequencies against the trace rule, and builds the two-agent
(friend/observer) scenario in which one agent's record formation and a
second agent's coherent lab measurement are checked for a joint
instrument.

Sampling is inverse-CDF over the counter-based streams of
:mod:`povmlab.rng`: run ``i`` of a log consumes keystream word ``i``, so
shot evaluation can be parallelized without changing any output.
Probabilities below 1e-15 are treated as exactly zero so rounding dust
can never make an impossible branch fire.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import rng as _rng
from .channels import (
    Instrument,
    instrument_probabilities,
    instrument_update,
    restrict_to_system,
)
from .compatibility import CompatReport, FeasibilityOptions, DEFAULT_OPTIONS, joint_instrument_feasibility
from .errors import DimensionError, ValidationError
from .linalg import (
    DensityOperator,
    UnitaryOperator,
    basis_state,
    ket,
    projector,
)

PROBABILITY_DUST = 1e-15


@dataclass(frozen=True)
class EventLog:
    """Counts of stored outcome labels from repeated identical runs."""

    labels: tuple[str, ...]
    counts: Mapping[str, int]
    shots: int
    seed: int

    def __post_init__(self):
        labels = tuple(str(l) for l in self.labels)
        counts = {str(k): int(v) for k, v in self.counts.items()}
        if set(counts) != set(labels):
            raise ValidationError("count keys do not match the outcome alphabet")
        if any(v < 0 for v in counts.values()):
            raise ValidationError("negative count")
        if sum(counts.values()) != self.shots:
            raise ValidationError(
                f"counts sum to {sum(counts.values())}, expected shots={self.shots}"
            )
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "counts", counts)

    def frequencies(self) -> dict[str, float]:
        return {k: self.counts[k] / self.shots for k in self.labels}


@dataclass(frozen=True)
class RecordSequence:
    """Per-run ordered outcome tuples from a chain of instruments."""

    outcomes: np.ndarray  # (shots, n_steps) integer outcome indices
    step_labels: tuple[tuple[str, ...], ...]
    shots: int
    seed: int

    def __post_init__(self):
        out = np.asarray(self.outcomes, dtype=np.int64)
        if out.shape != (self.shots, len(self.step_labels)):
            raise ValidationError(
                f"outcome array shape {out.shape} != (shots, n_steps) "
                f"= ({self.shots}, {len(self.step_labels)})"
            )
        out = out.copy()
        out.setflags(write=False)
        object.__setattr__(self, "outcomes", out)
        object.__setattr__(self, "step_labels", tuple(tuple(s) for s in self.step_labels))

    def tuples(self):
        """Outcome label tuples, one per run."""
        return [
            tuple(self.step_labels[k][idx] for k, idx in enumerate(row))
            for row in self.outcomes
        ]

    def joint_counts(self) -> dict[tuple[str, ...], int]:
        counts: dict[tuple[str, ...], int] = {}
        for t in self.tuples():
            counts[t] = counts.get(t, 0) + 1
        return counts


def _distribution(ins: Instrument, rho: DensityOperator) -> tuple[tuple[str, ...], np.ndarray]:
    probs = instrument_probabilities(ins, rho)
    labels = tuple(probs)
    p = np.array([probs[l] for l in labels], dtype=float)
    p[p < PROBABILITY_DUST] = 0.0
    total = p.sum()
    if total <= 0:
        raise ValidationError("instrument assigns zero probability to every outcome")
    return labels, p / total


def _draw(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(p)
    cum[-1] = 1.0
    return np.searchsorted(cum, u, side="right")


def sample(
    ins: Instrument, rho: DensityOperator, shots: int, seed: int, stream: int = 0
) -> EventLog:
    """Draw i.i.d. outcome records; reproducible given (seed, stream, shots)."""
    if shots < 1:
        raise ValidationError(f"shots must be at least 1, got {shots}")
    labels, p = _distribution(ins, rho)
    u = _rng.uniforms(seed, shots, stream)
    idx = _draw(p, u)
    hits = np.bincount(idx, minlength=len(labels))
    counts = {label: int(n) for label, n in zip(labels, hits)}
    return EventLog(labels=labels, counts=counts, shots=shots, seed=seed)


def sample_sequential(
    instruments: Sequence[Instrument],
    rho: DensityOperator,
    shots: int,
    seed: int,
    stream: int = 0,
) -> RecordSequence:
    """Chain instruments: draw an outcome, update the state, proceed.

    Run ``r`` consumes keystream words ``r*K .. r*K + K - 1`` for a chain
    of K instruments, keeping runs independently addressable.
    """
    instruments = list(instruments)
    if not instruments:
        raise ValidationError("need at least one instrument")
    if shots < 1:
        raise ValidationError(f"shots must be at least 1, got {shots}")
    d = rho.dim
    for ins in instruments:
        if ins.d_in != d:
            raise DimensionError(f"chain expects input dim {d}, instrument has {ins.d_in}")
        d = ins.d_out
    n_steps = len(instruments)
    u = _rng.uniforms(seed, shots * n_steps, stream).reshape(shots, n_steps)
    step_labels = tuple(ins.labels for ins in instruments)
    outcomes = np.empty((shots, n_steps), dtype=np.int64)
    for r in range(shots):
        state = rho
        for k, ins in enumerate(instruments):
            labels, p = _distribution(ins, state)
            idx = int(_draw(p, u[r, k : k + 1])[0])
            outcomes[r, k] = idx
            state = instrument_update(ins, state, labels[idx])
    return RecordSequence(outcomes=outcomes, step_labels=step_labels, shots=shots, seed=seed)


def compare_to_born(
    log: EventLog, ins: Instrument, rho: DensityOperator
) -> dict[str, float]:
    """Per-label z-scores of observed counts against trace-rule predictions.

    Degenerate probabilities (0 or 1) demand exact counts: any mismatch
    there is not a fluctuation but an inconsistency, and raises.
    """
    if log.shots < 100:
        raise ValidationError("z-scores need at least 100 shots")
    probs = instrument_probabilities(ins, rho)
    if set(probs) != set(log.labels):
        raise ValidationError("instrument labels do not match the event log")
    scores = {}
    for label in log.labels:
        p = min(max(probs[label], 0.0), 1.0)
        n = log.counts[label]
        if p < PROBABILITY_DUST or p > 1 - PROBABILITY_DUST:
            expected = 0 if p < PROBABILITY_DUST else log.shots
            if n != expected:
                raise ValidationError(
                    f"outcome {label!r} has probability {p:.0f} but count {n}"
                )
            scores[label] = 0.0
            continue
        scores[label] = (n - log.shots * p) / math.sqrt(log.shots * p * (1.0 - p))
    return scores


# ---------------------------------------------------------------------------
# nested observers


BELL_KETS = {
    "phi+": np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}


@dataclass(frozen=True)
class WignerFriendScenario:
    """One agent forms a record; a second measures the whole lab.

    The friend couples the system qubit to a memory qubit (prepared in
    ``memory_state``) with ``friend_unitary`` and reads the memory
    register; the observer measures the joint lab, by default in the
    basis containing the post-coupling entangled states. Both stored
    instruments act on the four-dimensional lab.
    """

    system_state: DensityOperator
    friend_unitary: UnitaryOperator
    friend_instrument: Instrument
    wigner_instrument: Instrument
    memory_state: DensityOperator = field(default_factory=lambda: basis_state(0, 2))

    def __post_init__(self):
        if self.system_state.dim != 2 or self.memory_state.dim != 2:
            raise DimensionError("system and memory must be qubits")
        if self.friend_unitary.dim != 4:
            raise DimensionError("friend coupling must act on the 4-dimensional lab")
        for ins in (self.friend_instrument, self.wigner_instrument):
            if ins.dims != (4, 4):
                raise DimensionError("scenario instruments must act on the lab (dims 4)")

    def lab_state(self) -> DensityOperator:
        """System (x) memory state after the record-forming coupling."""
        u = self.friend_unitary.matrix
        joint = np.kron(self.system_state.matrix, self.memory_state.matrix)
        return DensityOperator(u @ joint @ u.conj().T)


def controlled_rotation(theta: float) -> UnitaryOperator:
    """Record-forming coupling: rotate the memory by ``theta`` when the
    system is in |1>. ``theta = pi`` is the full copy (CNOT up to the
    unused-sector phase, for which the exact CNOT is substituted)."""
    if abs(theta - math.pi) < 1e-15:
        m = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
        return UnitaryOperator(m)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    ry = np.array([[c, -s], [s, c]], dtype=complex)
    m = np.zeros((4, 4), dtype=complex)
    m[:2, :2] = np.eye(2)
    m[2:, 2:] = ry
    return UnitaryOperator(m)


def build_wigner_friend(
    system_state: DensityOperator,
    friend_basis: str = "z",
    wigner_basis: str = "bell",
    theta: float = math.pi,
) -> WignerFriendScenario:
    """Standard minimal circuit: controlled copy, then two readouts.

    ``wigner_basis`` selects the observer's measurement of the lab after
    the coupling: ``"bell"`` (the entangled basis, the paradox-style
    non-nested cut) or ``"record"`` (the computational record basis, the
    common-refinement control). ``theta`` weakens the friend's coupling;
    ``pi`` is the full copy.
    """
    if friend_basis != "z":
        raise ValidationError(f"only the z record basis is supported, got {friend_basis!r}")
    if system_state.dim != 2:
        raise DimensionError("system must be a qubit")
    u = controlled_rotation(theta)
    p_m = [np.kron(np.eye(2), projector(ket(m, 2))) for m in range(2)]
    friend = Instrument(
        {str(m): (p_m[m] @ u.matrix,) for m in range(2)}, (4, 4)
    )
    if wigner_basis == "bell":
        wigner = Instrument(
            {name: (projector(vec) @ u.matrix,) for name, vec in BELL_KETS.items()},
            (4, 4),
        )
    elif wigner_basis == "record":
        wigner = Instrument(
            {
                f"{s}{m}": (np.kron(projector(ket(s, 2)), projector(ket(m, 2))) @ u.matrix,)
                for s in range(2)
                for m in range(2)
            },
            (4, 4),
        )
    else:
        raise ValidationError(f"unknown wigner basis {wigner_basis!r}")
    return WignerFriendScenario(
        system_state=system_state,
        friend_unitary=u,
        friend_instrument=friend,
        wigner_instrument=wigner,
    )


def induced_system_instruments(sc: WignerFriendScenario) -> tuple[Instrument, Instrument]:
    """The two agents' measurements as instruments on the system qubit.

    The memory register is prepared in the scenario's memory state and
    discarded after each branch; what remains is each agent's effective
    action on the system, which is the carrier on which joint outcome
    propositions are or are not well-typed.
    """
    friend = restrict_to_system(sc.friend_instrument, 2, 2, sc.memory_state)
    wigner = restrict_to_system(sc.wigner_instrument, 2, 2, sc.memory_state)
    return friend, wigner


def scenario_verdict(
    sc: WignerFriendScenario, opts: FeasibilityOptions = DEFAULT_OPTIONS
) -> CompatReport:
    """Joint-instrument feasibility of the two agents' measurements.

    Runs the marginal feasibility check on the system-level instruments of
    :func:`induced_system_instruments`; for the sharp copy/Bell scenario
    the induced pair is sharp-z against sharp-x-and-reprepare, and the
    verdict is incompatible already at the level of the induced POVMs.
    """
    friend, wigner = induced_system_instruments(sc)
    return joint_instrument_feasibility(friend, wigner, opts)


def friend_outcome_probabilities(sc: WignerFriendScenario) -> dict[str, float]:
    """Friend's record distribution on the scenario input."""
    joint = DensityOperator(
        np.kron(sc.system_state.matrix, sc.memory_state.matrix)
    )
    return instrument_probabilities(sc.friend_instrument, joint)


def wigner_outcome_probabilities(sc: WignerFriendScenario) -> dict[str, float]:
    """Observer's outcome distribution on the scenario input."""
    joint = DensityOperator(
        np.kron(sc.system_state.matrix, sc.memory_state.matrix)
    )
    return instrument_probabilities(sc.wigner_instrument, joint)
