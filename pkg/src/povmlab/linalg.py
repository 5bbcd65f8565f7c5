"""Dense complex matrix foundation and validated quantum domain types.

Operators are plain ``numpy`` complex arrays; the dataclasses below wrap
them with the validation that makes them states, effects, POVMs or
unitaries. All types are immutable after construction (arrays are frozen
read-only), so values are safe to share across threads.

Dimensions are capped at :data:`MAX_DIM`; every algorithm in the package
is dense and O(d^3), sized for desk-scale verification rather than bulk
simulation. Only finite-dimensional operator algebras are represented.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, PositivityError, ValidationError

MAX_DIM = 64


@dataclass(frozen=True)
class Tolerances:
    """Single tuning point for all constructor-level validation."""

    herm: float = 1e-10        # max |A - A^dag| entrywise
    trace: float = 1e-10       # |Tr(rho) - 1|
    psd: float = 1e-10         # allowed eigenvalue undershoot below 0
    effect_upper: float = 1e-10  # allowed eigenvalue overshoot above 1
    complete: float = 1e-9     # |sum(effects) - I| entrywise
    unitary: float = 1e-10     # |U^dag U - I| entrywise


DEFAULT_TOL = Tolerances()


# ---------------------------------------------------------------------------
# array plumbing


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=complex, order="C")
    out.setflags(write=False)
    return out


def as_matrix(value, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce to a finite 2-D complex array, checking shape if requested."""
    try:
        m = np.asarray(value, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"not interpretable as a complex matrix: {exc}") from exc
    if m.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.isfinite(m.real).all() or not np.isfinite(m.imag).all():
        raise ValidationError("matrix contains non-finite entries")
    if rows is not None and m.shape[0] != rows:
        raise DimensionError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise DimensionError(f"expected {cols} columns, got {m.shape[1]}")
    if max(m.shape) > MAX_DIM:
        raise ValidationError(f"dimension {max(m.shape)} exceeds cap {MAX_DIM}")
    return m


def _square(value) -> np.ndarray:
    m = as_matrix(value)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + dagger(m)) / 2


def herm_deviation(m: np.ndarray) -> float:
    """Max entrywise |A - A^dag|."""
    return float(np.abs(m - dagger(m)).max())


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL.herm) -> bool:
    return herm_deviation(m) <= tol


def max_abs(m: np.ndarray) -> float:
    return float(np.abs(m).max()) if m.size else 0.0


# ---------------------------------------------------------------------------
# core operations


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with index convention (i_a, i_b) -> i_a*dim_b + i_b."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Trace out one tensor factor of a (dA*dB)-dimensional square matrix.

    ``keep=0`` keeps the first (A) factor, ``keep=1`` the second. The index
    convention matches :func:`tensor_product`. The full trace is preserved.
    """
    d_a, d_b = int(dims[0]), int(dims[1])
    if d_a < 1 or d_b < 1:
        raise DimensionError(f"subsystem dimensions must be positive, got {dims}")
    mat = _square(m)
    if mat.shape[0] != d_a * d_b:
        raise DimensionError(
            f"matrix dimension {mat.shape[0]} != product of subsystem dims {d_a}*{d_b}"
        )
    if keep not in (0, 1):
        raise ValidationError(f"keep must be 0 (first factor) or 1 (second), got {keep!r}")
    blocks = mat.reshape(d_a, d_b, d_a, d_b)
    if keep == 0:
        return np.einsum("ikjk->ij", blocks)
    return np.einsum("kikj->ij", blocks)


def eig_hermitian(m, herm_tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvector columns of a Hermitian matrix."""
    mat = _square(m)
    dev = herm_deviation(mat)
    if dev > herm_tol:
        raise ValidationError(f"matrix is not Hermitian (deviation {dev:.3e} > {herm_tol:.0e})")
    w, v = np.linalg.eigh(hermitian_part(mat))
    return w, v


def sqrt_psd(m, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Principal square root of a PSD matrix.

    Eigenvalues in [-tol.psd, 0) are clipped to 0 before the root; anything
    below -tol.psd raises :class:`PositivityError`.
    """
    w, v = eig_hermitian(m)
    if w[0] < -tol.psd:
        raise PositivityError(f"matrix has negative eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return hermitian_part((v * np.sqrt(w)) @ dagger(v))


def project_psd(m: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) PSD matrix: clip negative eigenvalues to zero."""
    w, v = np.linalg.eigh(hermitian_part(m))
    np.clip(w, 0.0, None, out=w)
    return (v * w) @ dagger(v)


def trace_distance(a, b) -> float:
    """(1/2) ||a - b||_1 for Hermitian a, b."""
    w = np.linalg.eigvalsh(hermitian_part(_square(a) - _square(b)))
    return float(np.abs(w).sum() / 2)


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class DensityOperator:
    """Unit-trace positive operator: the theoretical-sector state."""

    matrix: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        m = _square(self.matrix)
        dev = herm_deviation(m)
        if dev > self.tol.herm:
            raise ValidationError(f"state is not Hermitian (deviation {dev:.3e})")
        tr = m.trace()
        if abs(tr - 1.0) > self.tol.trace:
            raise ValidationError(f"state trace is {tr:.12g}, expected 1")
        w = np.linalg.eigvalsh(hermitian_part(m))
        if w[0] < -self.tol.psd:
            raise PositivityError(f"state has negative eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Effect:
    """Operator with spectrum in [0, 1]: a yes/no outcome's quantum side."""

    matrix: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        m = _square(self.matrix)
        dev = herm_deviation(m)
        if dev > self.tol.herm:
            raise ValidationError(f"effect is not Hermitian (deviation {dev:.3e})")
        w = np.linalg.eigvalsh(hermitian_part(m))
        if w[0] < -self.tol.psd:
            raise PositivityError(f"effect has eigenvalue {w[0]:.3e} < 0")
        if w[-1] > 1.0 + self.tol.effect_upper:
            raise ValidationError(f"effect has eigenvalue {w[-1]:.12g} > 1")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Povm:
    """Finite family of same-dimension effects resolving the identity."""

    effects: tuple[Effect, ...]
    labels: tuple[str, ...]
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        effects = tuple(
            e if isinstance(e, Effect) else Effect(e, tol=self.tol) for e in self.effects
        )
        if not effects:
            raise ValidationError("a POVM needs at least one effect")
        labels = tuple(str(l) for l in self.labels)
        if len(labels) != len(effects):
            raise ValidationError(
                f"{len(labels)} labels for {len(effects)} effects"
            )
        if len(set(labels)) != len(labels):
            raise ValidationError("outcome labels must be distinct")
        d = effects[0].dim
        for e in effects:
            if e.dim != d:
                raise DimensionError("effects have mixed dimensions")
        total = sum(e.matrix for e in effects)
        dev = max_abs(total - np.eye(d))
        if dev > self.tol.complete:
            raise ValidationError(f"effects do not resolve identity (deviation {dev:.3e})")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.effects[0].dim

    def __len__(self) -> int:
        return len(self.effects)

    def arrays(self) -> np.ndarray:
        """Effects stacked as an (n, d, d) array."""
        return np.stack([e.matrix for e in self.effects])


@dataclass(frozen=True)
class UnitaryOperator:
    matrix: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        m = _square(self.matrix)
        dev = max_abs(dagger(m) @ m - np.eye(m.shape[0]))
        if dev > self.tol.unitary:
            raise ValidationError(f"matrix is not unitary (|U^dag U - I| = {dev:.3e})")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


# ---------------------------------------------------------------------------
# common constructors

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def ket(index: int, dim: int) -> np.ndarray:
    if not 0 <= index < dim:
        raise ValidationError(f"basis index {index} out of range for dim {dim}")
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValidationError("cannot project onto the zero vector")
    v = v / n
    return np.outer(v, v.conj())


def basis_state(index: int, dim: int) -> DensityOperator:
    return DensityOperator(projector(ket(index, dim)))


def bloch_vector_state(n: Sequence[float]) -> DensityOperator:
    """Qubit state (I + n.sigma)/2 for a Bloch vector with |n| <= 1."""
    n = np.asarray(n, dtype=float)
    if n.shape != (3,):
        raise ValidationError("Bloch vector must have three components")
    if np.linalg.norm(n) > 1 + 1e-12:
        raise ValidationError(f"Bloch vector has norm {np.linalg.norm(n):.6f} > 1")
    m = (np.eye(2) + n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z) / 2
    return DensityOperator(m)


def maximally_mixed(dim: int) -> DensityOperator:
    return DensityOperator(np.eye(dim) / dim)


def computational_povm(dim: int) -> Povm:
    """Sharp measurement in the computational basis, labels "0", "1", ..."""
    return Povm(
        tuple(Effect(projector(ket(k, dim))) for k in range(dim)),
        tuple(str(k) for k in range(dim)),
    )


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a Gaussian matrix with phase fixing."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g / np.sqrt(2))
    d = np.diagonal(r)
    return q * (d / np.abs(d))
