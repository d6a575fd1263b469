"""Nonlinear classicality witness for two-qubit states.

W = sum_{i<j} |<O_i><O_j>| over O_1..O_3 = sigma_k x sigma_k and
O_4 = z.sigma x I + I x w.sigma. W vanishes on states with at most one
nonzero expectation, all of which are classically correlated.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import RelaxationParams, evolve_nmr
from .correlations import BellDiagonalParams
from .qcore import I2, DeviationMatrix, pauli, tensor

DEFAULT_CUTOFF = 0.05
CLASSICAL = "classical_compatible"
QUANTUM = "quantum_correlated"

_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


@dataclass(frozen=True, eq=False)
class WitnessDirections:
    z_vec: np.ndarray
    w_vec: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        z = np.asarray(self.z_vec, dtype=float)
        w = np.asarray(self.w_vec, dtype=float)
        for name, v in (("z_vec", z), ("w_vec", w)):
            if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be a unit 3-vector")
        object.__setattr__(self, "z_vec", z)
        object.__setattr__(self, "w_vec", w)


def random_directions(seed: int = 0) -> WitnessDirections:
    """Isotropic unit vectors from normalized Gaussian draws."""
    rng = np.random.default_rng(seed)
    z, w = rng.normal(size=(2, 3))
    return WitnessDirections(z / np.linalg.norm(z), w / np.linalg.norm(w), seed)


@dataclass
class WitnessReport:
    value: float
    expectations: tuple[float, float, float, float]
    cutoff: float = DEFAULT_CUTOFF
    verdict: str = CLASSICAL

    def to_dict(self) -> dict:
        o1, o2, o3, o4 = (float(x) for x in self.expectations)
        return {
            "w_value": float(self.value),
            "o1": o1,
            "o2": o2,
            "o3": o3,
            "o4": o4,
            "cutoff": float(self.cutoff),
            "verdict": self.verdict,
        }


def witness_value(expectations: Sequence[float]) -> float:
    return float(sum(abs(a * b) for a, b in itertools.combinations(expectations, 2)))


def _report(expectations, cutoff: float) -> WitnessReport:
    e = tuple(float(x) for x in expectations)
    w = witness_value(e)
    return WitnessReport(w, e, cutoff, QUANTUM if w > cutoff else CLASSICAL)


def _local_o4(m: np.ndarray, dirs: WitnessDirections) -> np.ndarray:
    return sum(
        dirs.z_vec[k] * tensor(pauli(k + 1), I2) + dirs.w_vec[k] * tensor(I2, pauli(k + 1)) for k in range(3)
    )


def _expect(m: np.ndarray, op: np.ndarray) -> float:
    return float(np.trace(m @ op).real)


def witness_direct(rho, dirs: WitnessDirections, cutoff: float = DEFAULT_CUTOFF) -> WitnessReport:
    """Witness from direct expectation values.

    For a :class:`DeviationMatrix` the expectations are taken on delta
    itself, so the value is in eps^2 units.
    """
    m = np.asarray(rho)
    ex = [_expect(m, tensor(pauli(k), pauli(k))) for k in (1, 2, 3)]
    ex.append(_expect(m, _local_o4(m, dirs)))
    return _report(ex, cutoff)


def _rotation(axis: int, angle: float) -> np.ndarray:
    return math.cos(angle / 2) * I2 - 1j * math.sin(angle / 2) * pauli(axis)


def circuit_readout(m: np.ndarray, axis: int | None, angle: float = math.pi / 2) -> float:
    """<sigma_x x I> after a rotation on both qubits and a CNOT (A controls B)."""
    if axis is not None:
        r = tensor(_rotation(axis, angle), _rotation(axis, angle))
        m = r @ m @ r.conj().T
    xi = _CNOT @ m @ _CNOT
    return _expect(xi, tensor(pauli(1), I2))


def witness_circuit(rho, dirs: WitnessDirections, cutoff: float = DEFAULT_CUTOFF) -> WitnessReport:
    """Witness assembled from single-spin readouts of rotated, CNOT-mapped copies.

    No rotation reads <sigma_x sigma_x>. A pi/2 turn about y on both qubits
    maps the readout onto <sigma_z sigma_z>, and one about z onto
    <sigma_y sigma_y>. <O_4> comes from local magnetizations.
    """
    m = np.asarray(rho)
    o1 = circuit_readout(m, None)
    o3 = circuit_readout(m, 2)
    o2 = circuit_readout(m, 3)
    mag_a = [_expect(m, tensor(pauli(k), I2)) for k in (1, 2, 3)]
    mag_b = [_expect(m, tensor(I2, pauli(k))) for k in (1, 2, 3)]
    o4 = float(np.dot(dirs.z_vec, mag_a) + np.dot(dirs.w_vec, mag_b))
    return _report((o1, o2, o3, o4), cutoff)


def is_classical_bell_diagonal(c: BellDiagonalParams, tol: float = 1e-12) -> bool:
    return int(np.sum(np.abs(c.c) > tol)) <= 1


def witness_dynamics(
    rho0,
    params: RelaxationParams,
    n_steps: int,
    dt: float,
    dirs: WitnessDirections,
    cutoff: float = DEFAULT_CUTOFF,
    amplitude: bool = True,
) -> list[WitnessReport]:
    """Witness at t_n = n*dt, n = 0..n_steps-1, under the NMR relaxation model."""
    if n_steps < 1 or dt <= 0:
        raise ValueError("need n_steps >= 1 and dt > 0")
    out = []
    for n in range(n_steps):
        state = rho0 if n == 0 else evolve_nmr(rho0, params, n * dt, amplitude)
        out.append(witness_direct(state, dirs, cutoff))
    return out


def table_states(epsilon: float = 1e-5) -> dict[str, DeviationMatrix]:
    """Ideal deviation-matrix analogs of the quantum-correlated, classical and thermal states."""
    z1 = tensor(pauli(3), I2)
    z2 = tensor(I2, pauli(3))
    return {
        "rho_QC": BellDiagonalParams(1.0, -1.0, 1.0).deviation(epsilon),
        # sigma_z sigma_z correlations only: classical, one nonzero expectation
        "rho_CC": BellDiagonalParams(0.0, 0.0, 1.0).deviation(epsilon),
        "rho_T": DeviationMatrix((z1 + z2) / 2, epsilon),
    }
