"""Finite-dimensional state algebra for one or two quantum systems.

Matrices are plain ``numpy`` complex arrays. ``DensityMatrix`` and
``DeviationMatrix`` are thin validated wrappers; the heavy numerics live in
module-level functions so they can be reused on raw arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import unitary_group

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-9
TOL_NUM = 1e-9

LN2 = math.log(2.0)

I2 = np.eye(2, dtype=complex)
_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class InvalidStateError(ValueError):
    """Raised when a matrix fails a physical-state check."""


def pauli(index: int) -> np.ndarray:
    """Pauli matrix sigma_index for index in {1, 2, 3} (x, y, z)."""
    if index not in (1, 2, 3):
        raise ValueError(f"Pauli index must be 1, 2 or 3, got {index!r}")
    return _PAULI[index - 1].copy()


def tensor(a, b) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def is_hermitian(m: np.ndarray, tol: float = TOL_HERM) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T), initial=0.0) <= tol


def _as_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def _default_dims(dim: int) -> tuple[int, ...]:
    return (2, 2) if dim == 4 else (dim,)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix with subsystem layout."""

    mat: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self):
        m = _as_square(self.mat)
        dims = tuple(self.dims) if self.dims else _default_dims(m.shape[0])
        if math.prod(dims) != m.shape[0]:
            raise ValueError(f"subsystem dims {dims} do not multiply to {m.shape[0]}")
        if not is_hermitian(m):
            raise InvalidStateError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > TOL_TRACE:
            raise InvalidStateError(f"density matrix trace is {tr.real:.12g}, expected 1")
        lam_min = np.linalg.eigvalsh(m)[0]
        if lam_min < -TOL_PSD:
            raise InvalidStateError(f"density matrix has negative eigenvalue {lam_min:.3e}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)


@dataclass(frozen=True, eq=False)
class DeviationMatrix:
    """Traceless Hermitian part of a high-temperature state I/d + epsilon * mat."""

    mat: np.ndarray
    epsilon: float = 1e-5

    def __post_init__(self):
        m = _as_square(self.mat)
        if not is_hermitian(m):
            raise InvalidStateError("deviation matrix is not Hermitian")
        if abs(np.trace(m)) > TOL_TRACE:
            raise InvalidStateError(f"deviation matrix trace is {np.trace(m).real:.3e}, expected 0")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        d = m.shape[0]
        lam_min = np.linalg.eigvalsh(m)[0]
        if 1.0 / d + self.epsilon * lam_min < -TOL_PSD:
            raise InvalidStateError("I/d + epsilon*delta is not positive semidefinite")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def to_density(self) -> DensityMatrix:
        d = self.dim
        return DensityMatrix(np.eye(d) / d + self.epsilon * self.mat)

    @classmethod
    def from_density(cls, rho: DensityMatrix | np.ndarray, epsilon: float) -> "DeviationMatrix":
        m = np.asarray(rho)
        d = m.shape[0]
        return cls((m - np.eye(d) / d) / epsilon, epsilon)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.mat, dtype=dtype)


def ptrace(mat: np.ndarray, dims, keep: int) -> np.ndarray:
    """Partial trace of a raw matrix, keeping subsystem ``keep``."""
    dims = tuple(dims)
    n = len(dims)
    if not 0 <= keep < n:
        raise IndexError(f"subsystem index {keep} out of range for {n} subsystems")
    t = np.asarray(mat).reshape(dims + dims)
    # move kept subsystem to front on both row and column sides, trace the rest
    rest = [i for i in range(n) if i != keep]
    t = np.transpose(t, [keep] + rest + [n + keep] + [n + i for i in rest])
    dk = dims[keep]
    dr = math.prod(dims) // dk
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("ajbj->ab", t)


def partial_trace(rho: DensityMatrix, keep: int | str) -> DensityMatrix:
    """Reduced state of subsystem ``keep`` (index, or 'A'/'B' for two parties)."""
    if isinstance(keep, str):
        if keep.upper() not in ("A", "B"):
            raise IndexError(f"unknown subsystem label {keep!r}")
        keep = "AB".index(keep.upper())
    if len(rho.dims) < 2:
        raise ValueError("partial trace needs at least two subsystems")
    return DensityMatrix(ptrace(rho.mat, rho.dims, keep))


def eigendecompose(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvectors (columns) of a Hermitian matrix."""
    m = _as_square(m)
    if not is_hermitian(m):
        raise ValueError("eigendecompose requires a Hermitian matrix")
    w, v = np.linalg.eigh(m)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def entropy_deficit(q: np.ndarray, d: int, axis=-1) -> np.ndarray:
    """log2(d) - H(p) for p = 1/d + q, accurate when q is tiny.

    ``q`` holds deviations of a probability vector (or spectrum) from the
    uniform value 1/d along ``axis``. Zero-probability entries contribute 0.
    """
    q = np.asarray(q, dtype=float)
    p = 1.0 / d + q
    # subtracting q (which sums to 0) keeps each term O(q^2), so a trace
    # residue from rounding I/d + eps*delta does not leak in at first order
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log1p(np.maximum(d * q, -1.0)), 0.0) - q
    return terms.sum(axis=axis) / LN2


def _spectrum_deviation(m: np.ndarray) -> np.ndarray:
    d = m.shape[0]
    q = np.linalg.eigvalsh(m - np.eye(d) / d)
    if q[0] + 1.0 / d < -TOL_PSD:
        raise InvalidStateError(f"negative eigenvalue {q[0] + 1.0 / d:.3e}")
    return np.maximum(q, -1.0 / d)


def entropy_deficit_of(m) -> float:
    """log2(dim) - S(m) computed from the traceless part of ``m``."""
    m = np.asarray(m)
    return float(entropy_deficit(_spectrum_deviation(m), m.shape[0]))


def von_neumann_entropy(rho) -> float:
    """S(rho) = -sum lambda log2 lambda, in bits."""
    m = np.asarray(rho)
    d = m.shape[0]
    return max(0.0, math.log2(d) - entropy_deficit_of(m))


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


@dataclass(frozen=True, eq=False)
class SpinOperators:
    spin: Fraction
    ix: np.ndarray
    iy: np.ndarray
    iz: np.ndarray
    isq: np.ndarray


def spin_operators(spin) -> SpinOperators:
    """Angular momentum matrices in the Zeeman basis m = s, s-1, ..., -s."""
    s = Fraction(spin).limit_denominator(4)
    if s not in (Fraction(1, 2), Fraction(3, 2)):
        raise ValueError(f"unsupported spin {spin}; expected 1/2 or 3/2")
    sf = float(s)
    m = sf - np.arange(int(2 * s) + 1)
    # <m+1| I+ |m> = sqrt(s(s+1) - m(m+1))
    plus = np.diag(np.sqrt(sf * (sf + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    minus = plus.conj().T
    ix = (plus + minus) / 2
    iy = (plus - minus) / 2j
    iz = np.diag(m).astype(complex)
    isq = ix @ ix + iy @ iy + iz @ iz
    return SpinOperators(s, ix, iy, iz, isq)


def pauli_components(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients (a, b, T) with m = (I + a.sigma x I + I x b.sigma + sum T_ij sigma_i x sigma_j)/4.

    Only the traceless parts are returned; for a density matrix the identity
    coefficient is 1.
    """
    m = np.asarray(m)
    a = np.array([np.trace(m @ tensor(s, I2)).real for s in _PAULI])
    b = np.array([np.trace(m @ tensor(I2, s)).real for s in _PAULI])
    t = np.array([[np.trace(m @ tensor(si, sj)).real for sj in _PAULI] for si in _PAULI])
    return a, b, t


def from_pauli_components(a=(0, 0, 0), b=(0, 0, 0), t=np.zeros((3, 3)), identity: float = 1.0) -> np.ndarray:
    """Inverse of :func:`pauli_components`."""
    m = identity * np.eye(4, dtype=complex)
    t = np.asarray(t, dtype=float)
    for i, s in enumerate(_PAULI):
        m = m + a[i] * tensor(s, I2) + b[i] * tensor(I2, s)
        for j, s2 in enumerate(_PAULI):
            m = m + t[i, j] * tensor(s, s2)
    return m / 4


def bell_state(name: str = "phi+") -> DensityMatrix:
    kets = {
        "phi+": [1, 0, 0, 1],
        "phi-": [1, 0, 0, -1],
        "psi+": [0, 1, 1, 0],
        "psi-": [0, 1, -1, 0],
    }
    v = np.array(kets[name.lower()], dtype=complex) / math.sqrt(2)
    return DensityMatrix(np.outer(v, v.conj()))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=rng)


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Ginibre-ensemble random state of the given rank (full rank by default)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return DensityMatrix(m / np.trace(m).real)


def random_traceless_hermitian(dim: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    """Random traceless Hermitian matrix with Frobenius norm ``norm``."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (g + g.conj().T) / 2
    h = h - np.trace(h).real / dim * np.eye(dim)
    return norm * h / np.linalg.norm(h)


def matrix_to_json(m) -> dict:
    """Row-major {dim, re, im}; floats round-trip exactly through ``json``."""
    m = np.asarray(m, dtype=complex)
    return {
        "dim": int(m.shape[0]),
        "re": [float(x) for x in m.real.ravel()],
        "im": [float(x) for x in m.imag.ravel()],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros(dim * dim)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if dim <= 0 or re.size != dim * dim or im.size != dim * dim:
        raise ValueError(f"matrix JSON arrays must hold dim*dim = {dim * dim} values")
    return (re + 1j * im).reshape(dim, dim)
