"""In-silico NMR: Hamiltonians, ideal pulses, gradients, state preparation and tomography.

State-like arguments may be a :class:`DensityMatrix`, a :class:`DeviationMatrix`
or a raw array; unitary and dephasing steps return the same kind they get.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import expm

from .channels import J_COUPLING_HZ
from .qcore import (
    I2,
    TOL_HERM,
    DensityMatrix,
    DeviationMatrix,
    is_hermitian,
    pauli,
    spin_operators,
    tensor,
)

_HALF = spin_operators(0.5)
_IX, _IY, _IZ = _HALF.ix, _HALF.iy, _HALF.iz


class TomographyError(ValueError):
    pass


def _rewrap(like, m: np.ndarray):
    m = (m + m.conj().T) / 2
    if isinstance(like, DeviationMatrix):
        return DeviationMatrix(m, like.epsilon)
    if isinstance(like, DensityMatrix):
        return DensityMatrix(m, like.dims)
    return m


def _conjugate(rho, u: np.ndarray):
    m = np.asarray(rho)
    return _rewrap(rho, u @ m @ u.conj().T)


def thermal_deviation(epsilon: float = 1e-5, gamma_ratio: float | None = None) -> DeviationMatrix:
    """High-temperature equilibrium deviation (w_A sigma_z x I + w_B I x sigma_z)/2.

    Both weights are 1 unless ``gamma_ratio`` (gyromagnetic ratio of spin A
    over spin B, about 3.98 for 1H/13C) is given, in which case w_A = ratio.
    """
    if not 0.0 < epsilon < 0.25:
        raise ValueError(f"epsilon must be small and positive, got {epsilon}")
    wa = 1.0 if gamma_ratio is None else float(gamma_ratio)
    m = (wa * tensor(pauli(3), I2) + tensor(I2, pauli(3))) / 2
    return DeviationMatrix(m, epsilon)


def thermal_state(epsilon: float = 1e-5, gamma_ratio: float | None = None) -> DensityMatrix:
    return thermal_deviation(epsilon, gamma_ratio).to_density()


@dataclass(frozen=True)
class LiquidHamiltonianParams:
    offset_h: float = 0.0
    offset_c: float = 0.0
    j_coupling: float = J_COUPLING_HZ
    rf_amp_h: float = 0.0
    rf_amp_c: float = 0.0
    rf_phase_h: float = 0.0
    rf_phase_c: float = 0.0


@dataclass(frozen=True)
class QuadrupolarHamiltonianParams:
    offset: float = 0.0
    omega_q: float = 2 * math.pi * 15e3
    rf_amp: float = 0.0
    rf_phase: float = 0.0

    def __post_init__(self):
        if self.omega_q == 0:
            raise ValueError("omega_q must be nonzero")


def liquid_hamiltonian(params: LiquidHamiltonianParams) -> np.ndarray:
    """Rotating-frame Hamiltonian (rad/s) of the J-coupled H (qubit A) / C (qubit B) pair."""
    p = params
    h = -p.offset_h * tensor(_IZ, I2) - p.offset_c * tensor(I2, _IZ)
    h = h + 2 * math.pi * p.j_coupling * tensor(_IZ, _IZ)
    h = h + p.rf_amp_h * tensor(math.cos(p.rf_phase_h) * _IX + math.sin(p.rf_phase_h) * _IY, I2)
    h = h + p.rf_amp_c * tensor(I2, math.cos(p.rf_phase_c) * _IX + math.sin(p.rf_phase_c) * _IY)
    return h


def quadrupolar_hamiltonian(params: QuadrupolarHamiltonianParams) -> np.ndarray:
    s = spin_operators(1.5)
    p = params
    h = -p.offset * s.iz + (p.omega_q / 6) * (3 * s.iz @ s.iz - s.isq)
    return h + p.rf_amp * (math.cos(p.rf_phase) * s.ix + math.sin(p.rf_phase) * s.iy)


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    if not is_hermitian(h, TOL_HERM):
        raise ValueError("Hamiltonian must be Hermitian")
    return expm(-1j * np.asarray(h) * t)


def evolve(rho, h: np.ndarray, t: float):
    """Free evolution rho -> U rho U^dagger with U = exp(-i h t)."""
    return _conjugate(rho, propagator(h, t))


_AXES = {"x": (1, 1.0), "-x": (1, -1.0), "y": (2, 1.0), "-y": (2, -1.0), "+x": (1, 1.0), "+y": (2, 1.0)}


def rotation(angle: float, axis: str) -> np.ndarray:
    """exp(-i angle n.sigma / 2) for n along +-x or +-y."""
    try:
        k, sign = _AXES[axis]
    except KeyError:
        raise ValueError(f"unknown pulse axis {axis!r}") from None
    return math.cos(angle / 2) * I2 - 1j * sign * math.sin(angle / 2) * pauli(k)


def pulse_operator(target: str, angle: float, axis: str) -> np.ndarray:
    r = rotation(angle, axis)
    target = target.upper()
    if target == "A":
        return tensor(r, I2)
    if target == "B":
        return tensor(I2, r)
    if target in ("BOTH", "AB"):
        return tensor(r, r)
    raise ValueError(f"unknown pulse target {target!r}")


def hard_pulse(rho, target: str, angle: float, axis: str):
    """Instantaneous rotation of the targeted qubit(s)."""
    return _conjugate(rho, pulse_operator(target, angle, axis))


def gradient_crush(rho):
    """Ideal z-gradient: erase every coherence in the computational basis."""
    m = np.asarray(rho)
    return _rewrap(rho, np.diag(np.diag(m)))


def temporal_average(deltas: Iterable[DeviationMatrix]) -> DeviationMatrix:
    """Sum of deviation matrices from independent experiments."""
    deltas = list(deltas)
    if not deltas:
        raise ValueError("nothing to average")
    return DeviationMatrix(sum(np.asarray(d) for d in deltas), deltas[0].epsilon)


def j_evolution(rho, t: float, j_hz: float = J_COUPLING_HZ):
    return evolve(rho, liquid_hamiltonian(LiquidHamiltonianParams(j_coupling=j_hz)), t)


def _pp11_sequence(rho, j_hz: float):
    quarter = 1.0 / (4 * j_hz)
    rho = hard_pulse(rho, "both", math.pi / 2, "-x")
    rho = j_evolution(rho, quarter, j_hz)
    rho = hard_pulse(rho, "both", math.pi / 2, "y")
    rho = j_evolution(rho, quarter, j_hz)
    rho = hard_pulse(rho, "both", math.pi / 2, "-x")
    rho = gradient_crush(rho)
    rho = hard_pulse(rho, "both", math.pi / 4, "-y")
    rho = j_evolution(rho, 2 * quarter, j_hz)
    rho = hard_pulse(rho, "both", math.pi / 6, "x")
    return gradient_crush(rho)


def prepare_pseudo_pure_11(epsilon: float = 1e-5, j_hz: float = J_COUPLING_HZ) -> DensityMatrix:
    """Spatial-averaging preparation of the |11> pseudo-pure state from equilibrium."""
    return _pp11_sequence(thermal_state(epsilon), j_hz)


def pseudo_pure_11_deviation(epsilon: float = 1e-5, j_hz: float = J_COUPLING_HZ) -> DeviationMatrix:
    """Same sequence applied to the equilibrium deviation matrix (every step is linear and unital)."""
    return _pp11_sequence(thermal_deviation(epsilon), j_hz)


PREPARATIONS = {"pp11": (prepare_pseudo_pure_11, pseudo_pure_11_deviation)}


# --- tomography -------------------------------------------------------------

_LETTER_ROTATION = {"I": "none", "X": "x-90", "Y": "y-90"}
SETTING_LABELS = ("II", "XX", "IX", "IY", "XI", "YI", "XY", "YX", "YY")


@dataclass(frozen=True)
class TomographySetting:
    """Readout rotation pair; letter 1 acts on qubit A, letter 2 on qubit B."""

    label: str
    rotation_a: str = field(init=False)
    rotation_b: str = field(init=False)

    def __post_init__(self):
        if self.label not in SETTING_LABELS:
            raise ValueError(f"unknown tomography setting {self.label!r}")
        object.__setattr__(self, "rotation_a", _LETTER_ROTATION[self.label[0]])
        object.__setattr__(self, "rotation_b", _LETTER_ROTATION[self.label[1]])

    def unitary(self) -> np.ndarray:
        def one(letter):
            if letter == "I":
                return I2
            return rotation(math.pi / 2, letter.lower())

        return tensor(one(self.label[0]), one(self.label[1]))


SETTINGS = tuple(TomographySetting(lbl) for lbl in SETTING_LABELS)

# J-split lines: transverse operator of one spin times the projector on the other
_P = (np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex))
LINE_NAMES = ("mx_a0", "my_a0", "mx_a1", "my_a1", "mx_b0", "my_b0", "mx_b1", "my_b1")
_LINE_OPS = (
    tensor(_IX, _P[0]),
    tensor(_IY, _P[0]),
    tensor(_IX, _P[1]),
    tensor(_IY, _P[1]),
    tensor(_P[0], _IX),
    tensor(_P[0], _IY),
    tensor(_P[1], _IX),
    tensor(_P[1], _IY),
)


@dataclass(frozen=True)
class TomographyRecord:
    """Readout of one setting.

    ``lines`` holds the eight line-resolved intensities (real and imaginary
    parts of both J-split lines of each spin, in ``LINE_NAMES`` order); the
    four total magnetizations are their pairwise sums.
    """

    setting: TomographySetting
    lines: tuple

    def __post_init__(self):
        if len(self.lines) != 8:
            raise ValueError("a tomography record needs 8 line intensities")
        object.__setattr__(self, "lines", tuple(float(x) for x in self.lines))

    @property
    def mx_a(self) -> float:
        return self.lines[0] + self.lines[2]

    @property
    def my_a(self) -> float:
        return self.lines[1] + self.lines[3]

    @property
    def mx_b(self) -> float:
        return self.lines[4] + self.lines[6]

    @property
    def my_b(self) -> float:
        return self.lines[5] + self.lines[7]


def _line_readout(m: np.ndarray, setting: TomographySetting) -> np.ndarray:
    u = setting.unitary()
    mn = u @ m @ u.conj().T
    vals = np.array([np.trace(mn @ op) for op in _LINE_OPS])
    if np.max(np.abs(vals.imag), initial=0.0) > 1e-12:
        raise TomographyError("non-Hermitian input produced complex magnetizations")
    return vals.real


def tomography_readout(delta, setting: TomographySetting) -> TomographyRecord:
    return TomographyRecord(setting, tuple(_line_readout(np.asarray(delta), setting)))


def simulate_tomography(delta, noise_sigma: float = 0.0, rng: np.random.Generator | None = None) -> list[TomographyRecord]:
    """Readouts for all nine settings, with optional Gaussian noise on every line."""
    records = []
    for s in SETTINGS:
        lines = _line_readout(np.asarray(delta), s)
        if noise_sigma > 0:
            rng = rng or np.random.default_rng()
            lines = lines + rng.normal(scale=noise_sigma, size=lines.shape)
        records.append(TomographyRecord(s, tuple(lines)))
    return records


def deviation_parameter_basis() -> list[np.ndarray]:
    """Hermitian basis matching the 16 real unknowns a_1..a_16 of a 4x4 deviation matrix.

    a_1, a_5, a_8, a_10 are the diagonal; a_2..a_9 the remaining real parts of
    the upper triangle row by row; a_11..a_16 the matching imaginary parts.
    """
    basis = []
    for r in range(4):
        for c in range(r, 4):
            e = np.zeros((4, 4), dtype=complex)
            e[r, c] = e[c, r] = 1.0
            basis.append(e)
    for r in range(4):
        for c in range(r + 1, 4):
            e = np.zeros((4, 4), dtype=complex)
            e[r, c] = 1j
            e[c, r] = -1j
            basis.append(e)
    return basis


def coefficient_matrix(settings: Sequence[TomographySetting]) -> np.ndarray:
    """Rows: line intensities per setting, then one row enforcing Tr(delta) = 0."""
    basis = deviation_parameter_basis()
    rows = [np.column_stack([_line_readout(e, s) for e in basis]) for s in settings]
    trace_row = np.array([[np.trace(e).real for e in basis]])
    return np.vstack(rows + [trace_row])


def tomography_reconstruct(records: Sequence[TomographyRecord], epsilon: float = 1e-5) -> DeviationMatrix:
    """Least-squares reconstruction of the deviation matrix from readouts."""
    present = {r.setting.label for r in records}
    missing = [lbl for lbl in SETTING_LABELS if lbl not in present]
    if missing:
        raise TomographyError(f"missing tomography settings: {', '.join(missing)}")
    x = coefficient_matrix([r.setting for r in records])
    rank = np.linalg.matrix_rank(x)
    if rank < x.shape[1]:
        raise TomographyError(f"tomography coefficient matrix has rank {rank} < {x.shape[1]}")
    b = np.concatenate([np.asarray(r.lines) for r in records] + [np.zeros(1)])
    a, *_ = np.linalg.lstsq(x, b, rcond=None)
    m = sum(ai * e for ai, e in zip(a, deviation_parameter_basis()))
    # noise leaves a tiny trace residue; remove it so the result is traceless
    m = m - np.trace(m).real / 4 * np.eye(4)
    return DeviationMatrix(m, epsilon)


RECORD_COLUMNS = ("setting", "mx_a", "my_a", "mx_b", "my_b") + LINE_NAMES


def records_to_csv(records: Sequence[TomographyRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        vals = (r.mx_a, r.my_a, r.mx_b, r.my_b) + r.lines
        w.writerow([r.setting.label] + [f"{v:.17g}" for v in vals])
    return buf.getvalue()


def records_from_csv(text: str) -> list[TomographyRecord]:
    reader = csv.DictReader(io.StringIO(text))
    missing_cols = [c for c in RECORD_COLUMNS if c not in (reader.fieldnames or [])]
    if missing_cols:
        raise TomographyError(f"records CSV lacks columns: {', '.join(missing_cols)}")
    out = []
    for row in reader:
        try:
            out.append(TomographyRecord(TomographySetting(row["setting"]), tuple(float(row[n]) for n in LINE_NAMES)))
        except ValueError as exc:
            raise TomographyError(f"bad record row {row}: {exc}") from exc
    return out


# --- pulse-table fixtures -----------------------------------------------------


def load_smp_table(name: str = "smp_liquid") -> list[dict]:
    """Strongly-modulated-pulse parameter tables shipped as CSV fixtures.

    ``smp_liquid``: step, amp_h, phase_h, duration_ms, amp_c, phase_c.
    ``smp_quadrupolar``: group, step, amp, phase, duration_us.
    """
    text = resources.files("qdlab.data").joinpath(f"{name}.csv").read_text(encoding="utf-8")
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        rows.append({k: (v if k == "group" else (int(v) if k == "step" else float(v))) for k, v in row.items()})
    return rows
