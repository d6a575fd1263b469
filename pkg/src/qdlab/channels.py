"""Local decoherence channels and correlation trajectories.

Two noise models are covered: local phase damping (the analytic Bell-diagonal
case and its sudden change of decay rate) and the NMR relaxation model, a
generalized amplitude damping channel followed by phase damping on each
qubit with its own T1/T2.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .correlations import (
    BellDiagonalParams,
    CorrelationReport,
    OptimizerConfig,
    bell_diagonal_analytic,
    deviation_correlations,
    symmetric_discord,
)
from .parallel import ordered_map
from .qcore import I2, DensityMatrix, DeviationMatrix, pauli, pauli_components, tensor

TOL_CPTP = 1e-10
REGIME_GUARD = 1e-12

# J coupling of the 1H-13C pair (Hz); readout comb spacing is 1/(4J)
J_COUPLING_HZ = 215.1


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class KrausChannel:
    operators: tuple
    label: str = ""

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        if not ops:
            raise ChannelError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise ChannelError("Kraus operators must share one square shape")
        err = np.max(np.abs(sum(k.conj().T @ k for k in ops) - np.eye(d)))
        if err > TOL_CPTP:
            raise ChannelError(f"{self.label or 'channel'} is not trace preserving (error {err:.2e})")
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def __call__(self, m: np.ndarray) -> np.ndarray:
        return sum(k @ m @ k.conj().T for k in self.operators)

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """Channel that applies ``self`` first and ``other`` second."""
        ops = [b @ a for b in other.operators for a in self.operators]
        return KrausChannel(tuple(ops), f"{other.label}∘{self.label}")

    def local(self, other: "KrausChannel") -> "KrausChannel":
        """Product channel self ⊗ other on a bipartite system."""
        ops = [tensor(a, b) for a in self.operators for b in other.operators]
        return KrausChannel(tuple(ops), f"{self.label}⊗{other.label}")


def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel((np.eye(dim),), "id")


def _check_prob(name: str, x: float):
    if not 0.0 <= x <= 1.0:
        raise ChannelError(f"{name} must lie in [0, 1], got {x}")


def phase_damping(p: float) -> KrausChannel:
    """Off-diagonal elements shrink by (1 - p); populations untouched."""
    _check_prob("p", p)
    return KrausChannel(
        (math.sqrt(1 - p / 2) * I2, math.sqrt(p / 2) * pauli(3)),
        f"PD({p:g})",
    )


def generalized_amplitude_damping(p: float, gamma: float) -> KrausChannel:
    """Relaxation toward diag(gamma, 1 - gamma) with strength p."""
    _check_prob("p", p)
    _check_prob("gamma", gamma)
    sg, sh = math.sqrt(gamma), math.sqrt(1 - gamma)
    sp, sq = math.sqrt(p), math.sqrt(1 - p)
    ops = (
        sg * np.array([[1, 0], [0, sq]]),
        sg * np.array([[0, sp], [0, 0]]),
        sh * np.array([[sq, 0], [0, 1]]),
        sh * np.array([[0, 0], [sp, 0]]),
    )
    return KrausChannel(ops, f"GAD({p:g},{gamma:g})")


def _apply_local_array(m: np.ndarray, channel_a: KrausChannel, channel_b: KrausChannel) -> np.ndarray:
    out = np.zeros_like(m, dtype=complex)
    for ka in channel_a.operators:
        for kb in channel_b.operators:
            k = tensor(ka, kb)
            out += k @ m @ k.conj().T
    return out


def apply_local(rho, channel_a: KrausChannel, channel_b: KrausChannel):
    """sum_jk (K_j x K_k) rho (K_j x K_k)^dagger.

    Density matrices map to density matrices. Deviation matrices are evolved
    through the affine action on I/4 + eps*delta, so non-unital channels
    add their drift of the identity part to the returned deviation.
    """
    m = np.asarray(rho)
    if m.shape != (channel_a.dim * channel_b.dim,) * 2:
        raise ChannelError(
            f"channels of dims {channel_a.dim}x{channel_b.dim} cannot act on a {m.shape[0]}-dim state"
        )
    out = _apply_local_array(m, channel_a, channel_b)
    out = (out + out.conj().T) / 2
    if isinstance(rho, DeviationMatrix):
        d = m.shape[0]
        drift = _apply_local_array(np.eye(d, dtype=complex), channel_a, channel_b) - np.eye(d)
        return DeviationMatrix(out + drift / (d * rho.epsilon), rho.epsilon)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, rho.dims)
    return out


def evolved_bell_diagonal(c: BellDiagonalParams, p: float) -> BellDiagonalParams:
    """Bell-diagonal coefficients after identical local phase damping."""
    _check_prob("p", p)
    f = (1 - p) ** 2
    return BellDiagonalParams(f * c.c1, f * c.c2, c.c3)


def bell_diagonal_coefficients(m) -> tuple[float, float, float]:
    """Diagonal correlation coefficients <sigma_j x sigma_j> of a 4x4 matrix."""
    _, _, t = pauli_components(m)
    return float(t[0, 0]), float(t[1, 1]), float(t[2, 2])


class Regime(str, enum.Enum):
    CONSTANT_CLASSICAL = "constant_classical"
    SUDDEN_CHANGE = "sudden_change"
    MONOTONIC = "monotonic"


def classify_regime(c: BellDiagonalParams) -> Regime:
    a1, a2, a3 = np.abs(c.c)
    m = max(a1, a2)
    if a3 <= REGIME_GUARD:
        return Regime.MONOTONIC
    if a3 >= m - REGIME_GUARD:
        return Regime.CONSTANT_CLASSICAL
    return Regime.SUDDEN_CHANGE


def sudden_change_point(c: BellDiagonalParams) -> float | None:
    if classify_regime(c) is not Regime.SUDDEN_CHANGE:
        return None
    return 1.0 - math.sqrt(abs(c.c3) / max(abs(c.c1), abs(c.c2)))


@dataclass(frozen=True)
class RelaxationParams:
    """Per-qubit relaxation times (s) and the thermal bias of the bath.

    ``gamma`` defaults to (1 - epsilon)/2.
    """

    t1_a: float = 2.5
    t1_b: float = 7.0
    t2_a: float = 0.31
    t2_b: float = 0.12
    epsilon: float = 1e-5
    gamma: float | None = None

    def __post_init__(self):
        for name in ("t1_a", "t1_b", "t2_a", "t2_b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.gamma is None:
            object.__setattr__(self, "gamma", (1 - self.epsilon) / 2)
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        for q in ("a", "b"):
            if getattr(self, f"t2_{q}") > 2 * getattr(self, f"t1_{q}"):
                warnings.warn(f"T2 > 2*T1 on qubit {q.upper()}", stacklevel=2)

    def local_channel(self, t: float, qubit: str, amplitude: bool = True) -> KrausChannel:
        q = qubit.lower()
        p_phi = -math.expm1(-t / getattr(self, f"t2_{q}"))
        pd = phase_damping(p_phi)
        if not amplitude:
            return pd
        p_a = -math.expm1(-t / getattr(self, f"t1_{q}"))
        return generalized_amplitude_damping(p_a, self.gamma).then(pd)


def sudden_change_time(c: BellDiagonalParams, params: RelaxationParams) -> float | None:
    """Time at which pure local phase damping reaches the sudden-change point.

    With (1 - p_A)(1 - p_B) = exp(-t (1/T2_A + 1/T2_B)); for equal T2 this is
    -T2 ln(1 - p_sc).
    """
    p_sc = sudden_change_point(c)
    if p_sc is None:
        return None
    rate = 1.0 / params.t2_a + 1.0 / params.t2_b
    return -2.0 * math.log(1.0 - p_sc) / rate


def readout_grid(m_max: int = 250, j_hz: float = J_COUPLING_HZ) -> np.ndarray:
    return np.arange(m_max + 1) / (4.0 * j_hz)


@dataclass
class Trajectory:
    times: list
    states: list
    reports: list[CorrelationReport]
    regime: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not len(self.times) == len(self.states) == len(self.reports):
            raise ValueError("trajectory columns differ in length")
        if np.any(np.diff(np.asarray(self.times, dtype=float)) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def column(self, name: str) -> np.ndarray:
        attr = {"mi": "mutual_information", "cc": "classical_correlation", "qd": "symmetric_discord"}[name]
        return np.array([getattr(r, attr) for r in self.reports])

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_or_p", "mi", "cc", "qd", "regime", "kappa_axis"])
        for t, r in zip(self.times, self.reports):
            w.writerow(
                [
                    f"{t:.12g}",
                    f"{r.mutual_information:.12g}",
                    f"{r.classical_correlation:.12g}",
                    f"{r.symmetric_discord:.12g}",
                    self.regime,
                    r.kappa_axis,
                ]
            )
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def pd_trajectory(c0: BellDiagonalParams, p_grid: Sequence[float]) -> Trajectory:
    """Closed-form correlations of a Bell-diagonal state under local phase damping."""
    p_grid = [float(p) for p in p_grid]
    cs = [evolved_bell_diagonal(c0, p) for p in p_grid]
    return Trajectory(
        p_grid,
        [c.state() for c in cs],
        [bell_diagonal_analytic(c) for c in cs],
        classify_regime(c0).value,
        {"p_sc": sudden_change_point(c0)},
    )


def evolve_nmr(rho, params: RelaxationParams, t: float, amplitude: bool = True):
    """State after time ``t`` of GAD-then-phase-damping on each qubit."""
    return apply_local(
        rho,
        params.local_channel(t, "a", amplitude),
        params.local_channel(t, "b", amplitude),
    )


def nmr_trajectory(
    rho0,
    params: RelaxationParams | None = None,
    t_grid: Sequence[float] | None = None,
    opt: OptimizerConfig | None = None,
    amplitude: bool = True,
    regime: str = "",
) -> Trajectory:
    """Correlations along the NMR relaxation model.

    Deviation-matrix inputs are reported in eps^2/ln2-bit units through the
    second-order quantifiers; density matrices use the exact ones. Passing
    ``amplitude=False`` drops the amplitude channel (pure phase noise).
    """
    params = params or RelaxationParams()
    t_grid = readout_grid() if t_grid is None else t_grid
    t_grid = [float(t) for t in t_grid]
    states = [evolve_nmr(rho0, params, t, amplitude) for t in t_grid]
    quantify = deviation_correlations if isinstance(rho0, DeviationMatrix) else symmetric_discord
    reports = ordered_map(lambda s: quantify(s, opt), states)
    return Trajectory(t_grid, states, reports, regime, {"amplitude": amplitude})
