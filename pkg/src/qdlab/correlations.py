"""Total, classical and quantum correlations of two-qubit states.

Local projective measurements are parameterized by a polar angle ``theta``
in [0, pi/2] and azimuth ``phi`` in [0, 2pi): the measured Bloch direction
is ``(sin 2theta cos phi, sin 2theta sin phi, cos 2theta)``, so the
half-range of ``theta`` already covers the whole sphere.

Maximizations over bases use a dense angular grid followed by Nelder-Mead
refinement (see :class:`OptimizerConfig`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .qcore import (
    TOL_PSD,
    DensityMatrix,
    DeviationMatrix,
    InvalidStateError,
    entropy_deficit,
    entropy_deficit_of,
    pauli,
    ptrace,
    tensor,
    von_neumann_entropy,
)

TOL_CORR = 1e-9
TOL_OPT = 1e-4

BIT = "bit"
DEVIATION_UNIT = "eps2/ln2 bit"

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class OptimizerConfig:
    """Grid + Nelder-Mead settings for basis maximizations.

    ``grid`` points are used per angle, so a symmetric (two-sided) search
    evaluates ``grid**4`` bases before refinement. ``seed`` fixes the
    orientation of the initial refinement simplex.
    """

    grid: int = 24
    maxfev: int = 400
    xatol: float = 1e-8
    fatol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError("grid must have at least 2 points per angle")
        if self.maxfev < 0:
            raise ValueError("maxfev must be non-negative")


@dataclass(frozen=True)
class MeasurementBasis:
    theta_a: float = 0.0
    phi_a: float = 0.0
    theta_b: float = 0.0
    phi_b: float = 0.0

    def __post_init__(self):
        for name in ("theta_a", "theta_b"):
            v = getattr(self, name)
            if not 0.0 <= v <= math.pi / 2:
                raise ValueError(f"{name}={v} outside [0, pi/2]")
        for name in ("phi_a", "phi_b"):
            v = getattr(self, name)
            if not 0.0 <= v < TWO_PI:
                raise ValueError(f"{name}={v} outside [0, 2pi)")

    @classmethod
    def from_angles(cls, theta_a, phi_a, theta_b=0.0, phi_b=0.0) -> "MeasurementBasis":
        """Build a basis from unconstrained angles, folding them into range."""
        ta, pa = canonical_angles(theta_a, phi_a)
        tb, pb = canonical_angles(theta_b, phi_b)
        return cls(ta, pa, tb, pb)

    @classmethod
    def from_axes(cls, axis_a: int, axis_b: int | None = None) -> "MeasurementBasis":
        """Basis along Pauli axes (1=x, 2=y, 3=z) on each side."""
        axis_b = axis_a if axis_b is None else axis_b
        return cls(*_AXIS_ANGLES[axis_a], *_AXIS_ANGLES[axis_b])

    def direction(self, side: str) -> np.ndarray:
        if side.upper() == "A":
            return bloch_direction(self.theta_a, self.phi_a)
        return bloch_direction(self.theta_b, self.phi_b)


_AXIS_ANGLES = {1: (math.pi / 4, 0.0), 2: (math.pi / 4, math.pi / 2), 3: (0.0, 0.0)}


def bloch_direction(theta, phi) -> np.ndarray:
    return np.array(
        [math.sin(2 * theta) * math.cos(phi), math.sin(2 * theta) * math.sin(phi), math.cos(2 * theta)]
    )


def canonical_angles(theta, phi) -> tuple[float, float]:
    n = bloch_direction(theta, phi)
    t = 0.5 * math.acos(min(1.0, max(-1.0, n[2])))
    p = math.atan2(n[1], n[0]) % TWO_PI
    if p >= TWO_PI:
        p = 0.0
    return t, p


def nearest_axis(direction) -> str:
    """Label of the Pauli axis closest (up to sign) to a Bloch direction."""
    return "xyz"[int(np.argmax(np.abs(direction)))]


def _kets(theta, phi) -> np.ndarray:
    """Measurement eigenvectors, shape (..., 2 outcomes, 2 components)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s, e = np.cos(theta), np.sin(theta), np.exp(1j * phi)
    k = np.empty(theta.shape + (2, 2), dtype=complex)
    k[..., 0, 0] = c
    k[..., 0, 1] = e * s
    k[..., 1, 0] = -np.conj(e) * s
    k[..., 1, 1] = c
    return k


def projectors(theta: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    k = _kets(theta, phi)
    return np.outer(k[0], k[0].conj()), np.outer(k[1], k[1].conj())


def _product_diagonals(m: np.ndarray, ka: np.ndarray, kb: np.ndarray) -> np.ndarray:
    """<jk| m |jk> for every pair of A/B bases, shape (Na, 2, Nb, 2)."""
    m4 = np.asarray(m).reshape(2, 2, 2, 2)
    na, nb = ka.shape[0], kb.shape[0]
    # outer products conj(u_x) u_z flattened to (N*2, 4), then two matmuls
    pa = (ka.conj()[..., :, None] * ka[..., None, :]).reshape(na * 2, 4)
    pb = (kb.conj()[..., :, None] * kb[..., None, :]).reshape(nb * 2, 4)
    t = pa @ m4.transpose(0, 2, 1, 3).reshape(4, 4)
    return (t @ pb.T).real.reshape(na, 2, nb, 2)


def _classical_mi(q: np.ndarray) -> np.ndarray:
    """Mutual information of p = 1/4 + q over axes (1, 3) of a (Na,2,Nb,2) array."""
    qa = q.sum(axis=3)
    qb = q.sum(axis=1)
    joint = np.moveaxis(q, 2, 1).reshape(q.shape[0], q.shape[2], 4)
    return entropy_deficit(joint, 4) - entropy_deficit(qa, 2, axis=1) - entropy_deficit(qb, 2, axis=2)


def _quadratic_mi(d: np.ndarray) -> np.ndarray:
    """2 Tr(eta^2) - Tr(eta_A^2) - Tr(eta_B^2) for diagonal eta, same layout as above."""
    return 2.0 * (d**2).sum(axis=(1, 3)) - (d.sum(axis=3) ** 2).sum(axis=1) - (d.sum(axis=1) ** 2).sum(axis=2)


@dataclass
class _OptResult:
    value: float
    x: np.ndarray
    evals: int
    converged: bool


def _angle_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    th = np.linspace(0.0, math.pi / 2, n)
    ph = np.linspace(0.0, TWO_PI, n, endpoint=False)
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    return tt.ravel(), pp.ravel()


def _refine(fun, x0: np.ndarray, f0: float, steps: np.ndarray, cfg: OptimizerConfig, grid_evals: int) -> _OptResult:
    if cfg.maxfev == 0:
        return _OptResult(f0, x0, grid_evals, False)
    rng = np.random.default_rng(cfg.seed)
    signs = rng.choice((-1.0, 1.0), size=x0.size)
    simplex = np.vstack([x0] + [x0 + signs[i] * steps[i] * np.eye(x0.size)[i] for i in range(x0.size)])
    res = minimize(
        lambda x: -fun(x),
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "maxfev": cfg.maxfev,
            "xatol": cfg.xatol,
            "fatol": cfg.fatol,
        },
    )
    converged = res.status == 0
    if -res.fun >= f0:
        return _OptResult(float(-res.fun), np.asarray(res.x), grid_evals + res.nfev, converged)
    return _OptResult(f0, x0, grid_evals + res.nfev, converged)


def _maximize_two_sided(m: np.ndarray, objective, cfg: OptimizerConfig) -> _OptResult:
    th, ph = _angle_grid(cfg.grid)
    kets = _kets(th, ph)
    values = objective(_product_diagonals(m, kets, kets))
    # np.argmax returns the first maximum: ties resolve to the lowest grid index
    ia, ib = np.unravel_index(int(np.argmax(values)), values.shape)
    x0 = np.array([th[ia], ph[ia], th[ib], ph[ib]])

    def fun(x):
        ka = _kets(x[0:1], x[1:2])
        kb = _kets(x[2:3], x[3:4])
        return float(objective(_product_diagonals(m, ka, kb))[0, 0])

    dth = (math.pi / 2) / (cfg.grid - 1)
    dph = TWO_PI / cfg.grid
    steps = np.array([dth, dph, dth, dph])
    return _refine(fun, x0, float(values[ia, ib]), steps, cfg, values.size)


def _basis_from_x(x) -> MeasurementBasis:
    return MeasurementBasis.from_angles(*x)


@dataclass
class CorrelationReport:
    mutual_information: float
    classical_correlation: float
    symmetric_discord: float
    argmax_basis: MeasurementBasis = field(default_factory=MeasurementBasis)
    optimizer_evals: int = 0
    converged: bool = True
    unit: str = BIT

    def to_dict(self) -> dict:
        b = self.argmax_basis
        return {
            "mi_bits": float(self.mutual_information),
            "cc_bits": float(self.classical_correlation),
            "qd_bits": float(self.symmetric_discord),
            "theta_a": float(b.theta_a),
            "phi_a": float(b.phi_a),
            "theta_b": float(b.theta_b),
            "phi_b": float(b.phi_b),
            "evals": int(self.optimizer_evals),
        }

    @property
    def kappa_axis(self) -> str:
        return nearest_axis(self.argmax_basis.direction("A"))


def _two_qubit(rho) -> np.ndarray:
    m = np.asarray(rho)
    if m.shape != (4, 4):
        raise ValueError(f"expected a two-qubit (4x4) state, got shape {m.shape}")
    return m


def mutual_information(rho: DensityMatrix) -> float:
    """S(rho_A) + S(rho_B) - S(rho_AB) in bits.

    Evaluated as a difference of entropy deficits so that states close to
    the maximally mixed one keep full relative precision.
    """
    m = _two_qubit(rho)
    return (
        entropy_deficit_of(m)
        - entropy_deficit_of(ptrace(m, (2, 2), 0))
        - entropy_deficit_of(ptrace(m, (2, 2), 1))
    )


def measured_state(rho: DensityMatrix, basis: MeasurementBasis) -> DensityMatrix:
    """Apply the complete local projective measurement map on both qubits."""
    m = _two_qubit(rho)
    pa = projectors(basis.theta_a, basis.phi_a)
    pb = projectors(basis.theta_b, basis.phi_b)
    out = np.zeros((4, 4), dtype=complex)
    for p in pa:
        for q in pb:
            k = tensor(p, q)
            out += k @ m @ k
    return DensityMatrix((out + out.conj().T) / 2)


def _shifted(rho) -> np.ndarray:
    m = _two_qubit(rho)
    return m - np.eye(4) / 4


def classical_correlation(
    rho: DensityMatrix, opt: OptimizerConfig | None = None
) -> tuple[float, MeasurementBasis]:
    r = _maximize_two_sided(_shifted(rho), _classical_mi, opt or OptimizerConfig())
    return r.value, _basis_from_x(r.x)


def symmetric_discord(rho: DensityMatrix, opt: OptimizerConfig | None = None) -> CorrelationReport:
    mi = mutual_information(rho)
    r = _maximize_two_sided(_shifted(rho), _classical_mi, opt or OptimizerConfig())
    return CorrelationReport(mi, r.value, mi - r.value, _basis_from_x(r.x), r.evals, r.converged)


def _conditional_gain(m: np.ndarray, kets: np.ndarray, side: str) -> np.ndarray:
    """S(unmeasured) - sum_j p_j S(rho_j) for each basis in ``kets``."""
    m4 = m.reshape(2, 2, 2, 2)
    if side == "B":
        cond = np.einsum("nky,xyzw,nkw->nkxz", kets.conj(), m4, kets)
        other = ptrace(m, (2, 2), 0)
    else:
        cond = np.einsum("nkx,xyzw,nkz->nkyw", kets.conj(), m4, kets)
        other = ptrace(m, (2, 2), 1)
    p = np.einsum("nkii->nk", cond).real
    lam = np.linalg.eigvalsh(cond)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = lam / p[..., None]
        h = np.where(lam > 0, -lam * np.log2(np.where(lam > 0, lam, 1.0)), 0.0).sum(axis=-1)
    h = np.where(p > 0, h, 0.0)
    return von_neumann_entropy(other) - (p * h).sum(axis=1)


def asymmetric_discord(rho: DensityMatrix, measured_side: str = "B", opt: OptimizerConfig | None = None) -> float:
    """One-sided discord: I(rho) - max over projective measurements on ``measured_side``."""
    side = measured_side.upper()
    if side not in ("A", "B"):
        raise ValueError(f"measured_side must be 'A' or 'B', got {measured_side!r}")
    cfg = opt or OptimizerConfig()
    m = _two_qubit(rho)
    th, ph = _angle_grid(cfg.grid)
    values = _conditional_gain(m, _kets(th, ph), side)
    i0 = int(np.argmax(values))
    x0 = np.array([th[i0], ph[i0]])

    def fun(x):
        return float(_conditional_gain(m, _kets(x[0:1], x[1:2]), side)[0])

    steps = np.array([(math.pi / 2) / (cfg.grid - 1), TWO_PI / cfg.grid])
    r = _refine(fun, x0, float(values[i0]), steps, cfg, values.size)
    return mutual_information(rho) - r.value


@dataclass(frozen=True)
class BellDiagonalParams:
    c1: float
    c2: float
    c3: float

    def __post_init__(self):
        c = np.array([self.c1, self.c2, self.c3], dtype=float)
        if not np.all(np.isfinite(c)) or np.any(np.abs(c) > 1.0 + 1e-12):
            raise InvalidStateError(f"Bell-diagonal coefficients must lie in [-1, 1], got {tuple(c)}")
        lam = np.linalg.eigvalsh(self.matrix())
        if lam[0] < -TOL_PSD:
            raise InvalidStateError(f"Bell-diagonal triple {tuple(c)} is not a physical state (eigenvalue {lam[0]:.3g})")

    @property
    def c(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3])

    def correlation_part(self) -> np.ndarray:
        """sum_j c_j sigma_j x sigma_j (without the 1/4)."""
        return sum(cj * tensor(pauli(j + 1), pauli(j + 1)) for j, cj in enumerate(self.c))

    def matrix(self) -> np.ndarray:
        return (np.eye(4) + self.correlation_part()) / 4

    def state(self) -> DensityMatrix:
        return DensityMatrix(self.matrix())

    def deviation(self, epsilon: float = 1e-5) -> DeviationMatrix:
        return DeviationMatrix(self.correlation_part() / 4, epsilon)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix())[::-1]


def bell_diagonal_eigenvalues(c: BellDiagonalParams) -> np.ndarray:
    """Closed-form spectrum indexed by (j, k) in {0,1}^2.

    lambda_jk = [1 + (-1)^j c1 - (-1)^(j+k) c2 + (-1)^k c3] / 4
    """
    out = []
    for j in (0, 1):
        for k in (0, 1):
            out.append((1 + (-1) ** j * c.c1 - (-1) ** (j + k) * c.c2 + (-1) ** k * c.c3) / 4)
    return np.array(out)


def _kappa(c: BellDiagonalParams) -> tuple[float, int]:
    a = np.abs(c.c)
    idx = int(np.argmax(a))  # first maximum: ties go to the lowest axis
    return float(a[idx]), idx + 1


def bell_diagonal_classical(kappa: float) -> float:
    total = 0.0
    for sign in (1.0, -1.0):
        x = 1.0 + sign * kappa
        if x > 0:
            total += x * math.log2(x)
    return 0.5 * total


def bell_diagonal_analytic(c: BellDiagonalParams) -> CorrelationReport:
    lam = np.linalg.eigvalsh(c.matrix())
    mi = float(entropy_deficit(np.maximum(lam, 0.0) - 0.25, 4))
    kappa, axis = _kappa(c)
    cc = bell_diagonal_classical(kappa)
    return CorrelationReport(mi, cc, mi - cc, MeasurementBasis.from_axes(axis), 0, True)


def _deviation_array(delta) -> np.ndarray:
    m = _two_qubit(delta)
    if isinstance(delta, DeviationMatrix):
        return m
    if abs(np.trace(m)) > 1e-10:
        raise InvalidStateError("deviation matrix must be traceless")
    return m


def deviation_mutual_information(delta: DeviationMatrix) -> float:
    """Coefficient of eps^2/ln2 in the mutual information of I/4 + eps*delta."""
    m = _deviation_array(delta)
    da = ptrace(m, (2, 2), 0)
    db = ptrace(m, (2, 2), 1)
    tr2 = lambda x: float(np.trace(x @ x).real)  # noqa: E731
    return 2 * tr2(m) - tr2(da) - tr2(db)


def deviation_measured_mi(delta: DeviationMatrix, basis: MeasurementBasis) -> float:
    m = _deviation_array(delta)
    ka = _kets(np.array([basis.theta_a]), np.array([basis.phi_a]))
    kb = _kets(np.array([basis.theta_b]), np.array([basis.phi_b]))
    return float(_quadratic_mi(_product_diagonals(m, ka, kb))[0, 0])


def deviation_correlations(delta: DeviationMatrix, opt: OptimizerConfig | None = None) -> CorrelationReport:
    """Second-order (eps^2/ln2 units) total, classical and quantum correlations."""
    m = _deviation_array(delta)
    mi = deviation_mutual_information(m)
    r = _maximize_two_sided(m, _quadratic_mi, opt or OptimizerConfig())
    return CorrelationReport(mi, r.value, mi - r.value, _basis_from_x(r.x), r.evals, r.converged, DEVIATION_UNIT)


def deviation_discord(delta: DeviationMatrix, opt: OptimizerConfig | None = None) -> float:
    return deviation_correlations(delta, opt).symmetric_discord
