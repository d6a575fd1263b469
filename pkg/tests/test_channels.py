import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdlab.channels import (
    J_COUPLING_HZ,
    ChannelError,
    KrausChannel,
    Regime,
    RelaxationParams,
    Trajectory,
    apply_local,
    bell_diagonal_coefficients,
    classify_regime,
    evolve_nmr,
    evolved_bell_diagonal,
    generalized_amplitude_damping,
    identity_channel,
    nmr_trajectory,
    pd_trajectory,
    phase_damping,
    readout_grid,
    sudden_change_point,
    sudden_change_time,
)
from qdlab.correlations import BellDiagonalParams, OptimizerConfig, bell_diagonal_classical
from qdlab.qcore import I2, DensityMatrix, DeviationMatrix, InvalidStateError, pauli, random_density_matrix, tensor

probs = st.floats(0, 1)
seeds = st.integers(0, 2**32 - 1)


def random_bell(rng):
    while True:
        try:
            return BellDiagonalParams(*rng.uniform(-1, 1, 3))
        except InvalidStateError:
            pass


def test_kraus_validation():
    with pytest.raises(ChannelError):
        KrausChannel((0.9 * I2,))
    with pytest.raises(ChannelError):
        KrausChannel(())
    with pytest.raises(ChannelError):
        KrausChannel((I2, np.zeros((3, 3))))


@given(probs, probs)
def test_channels_are_cptp(p, g):
    for ch in (phase_damping(p), generalized_amplitude_damping(p, g)):
        err = np.max(np.abs(sum(k.conj().T @ k for k in ch.operators) - I2))
        assert err <= 1e-10


def test_parameter_ranges():
    for bad in (-0.1, 1.1):
        with pytest.raises(ChannelError):
            phase_damping(bad)
        with pytest.raises(ChannelError):
            generalized_amplitude_damping(bad, 0.5)
        with pytest.raises(ChannelError):
            generalized_amplitude_damping(0.5, bad)


def test_phase_damping_examples():
    plus = np.full((2, 2), 0.5)
    assert np.allclose(phase_damping(0)(plus), plus)
    assert np.allclose(phase_damping(1)(plus), I2 / 2)
    rho = random_density_matrix(2, np.random.default_rng(0)).mat
    out = phase_damping(0.37)(rho)
    assert out[0, 1] == pytest.approx((1 - 0.37) * rho[0, 1], abs=1e-15)
    assert np.allclose(np.diag(out), np.diag(rho))


@given(probs, probs, seeds)
def test_phase_damping_semigroup(p1, p2, seed):
    rho = random_density_matrix(2, np.random.default_rng(seed)).mat
    p3 = 1 - (1 - p1) * (1 - p2)
    assert np.allclose(phase_damping(p2)(phase_damping(p1)(rho)), phase_damping(p3)(rho), atol=1e-12)


@given(probs, seeds)
def test_gad_fixed_point_at_p1(g, seed):
    rho = random_density_matrix(2, np.random.default_rng(seed)).mat
    assert np.allclose(generalized_amplitude_damping(1, g)(rho), np.diag([g, 1 - g]), atol=1e-12)


def test_gad_examples():
    ch = generalized_amplitude_damping(0.3, 0.5)
    assert np.allclose(sum(k.conj().T @ k for k in ch.operators), I2, atol=1e-15)
    rho = random_density_matrix(2, np.random.default_rng(1)).mat
    assert np.allclose(generalized_amplitude_damping(0, 0.2)(rho), rho)
    out = apply_local(DensityMatrix(np.eye(4) / 4), generalized_amplitude_damping(0.4, 0.5), generalized_amplitude_damping(0.7, 0.5))
    assert np.allclose(out.mat, np.eye(4) / 4)


def test_apply_local_identity_and_mismatch():
    rho = random_density_matrix(4, np.random.default_rng(2))
    assert np.allclose(apply_local(rho, identity_channel(), identity_channel()).mat, rho.mat)
    with pytest.raises(ChannelError):
        apply_local(rho, identity_channel(3), identity_channel())


def test_apply_local_preserves_trace_hermiticity_1000():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        rho = random_density_matrix(4, rng)
        pa, pb, g = rng.uniform(size=3)
        out = apply_local(rho, generalized_amplitude_damping(pa, g).then(phase_damping(pb)), phase_damping(pa))
        m = out.mat
        worst = max(worst, abs(np.trace(m) - 1), np.max(np.abs(m - m.conj().T)))
    assert worst <= 1e-9


@settings(max_examples=40)
@given(seeds, probs)
def test_apply_local_linear(seed, p):
    rng = np.random.default_rng(seed)
    r1, r2 = random_density_matrix(4, rng), random_density_matrix(4, rng)
    ch = generalized_amplitude_damping(p, 0.3)
    mix = DensityMatrix(0.3 * r1.mat + 0.7 * r2.mat)
    lhs = apply_local(mix, ch, phase_damping(p)).mat
    rhs = 0.3 * apply_local(r1, ch, phase_damping(p)).mat + 0.7 * apply_local(r2, ch, phase_damping(p)).mat
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_evolved_bell_diagonal_examples():
    c = BellDiagonalParams(1, -0.6, 0.6)
    assert np.allclose(evolved_bell_diagonal(c, 0).c, c.c)
    assert np.allclose(evolved_bell_diagonal(c, 1).c, [0, 0, 0.6])


def test_evolved_bell_diagonal_vs_kraus_100():
    rng = np.random.default_rng(4)
    for _ in range(100):
        c, p = random_bell(rng), rng.uniform()
        ch = phase_damping(p)
        kraus = apply_local(c.state(), ch, ch).mat
        closed = evolved_bell_diagonal(c, p)
        assert np.max(np.abs(kraus - closed.matrix())) <= 1e-12
        assert np.allclose(bell_diagonal_coefficients(kraus), closed.c, atol=1e-12)


def test_deviation_input_drift():
    # non-unital GAD on a deviation adds the identity drift / (4 eps)
    eps = 1e-5
    params = RelaxationParams()
    delta = DeviationMatrix(np.zeros((4, 4)), eps)
    out = evolve_nmr(delta, params, 1e3)
    rho_inf = np.kron(np.diag([params.gamma, 1 - params.gamma]), np.diag([params.gamma, 1 - params.gamma]))
    assert np.allclose(out.to_density().mat, rho_inf, atol=1e-13)


@pytest.mark.parametrize(
    "c,regime,psc",
    [
        ((0.06, 0.3, 0.33), Regime.CONSTANT_CLASSICAL, None),
        ((1, -0.6, 0.6), Regime.SUDDEN_CHANGE, 1 - math.sqrt(0.6)),
        ((0.25, 0.25, 0), Regime.MONOTONIC, None),
        ((0.4, 0.2, 0.4), Regime.CONSTANT_CLASSICAL, None),
    ],
)
def test_regimes(c, regime, psc):
    b = BellDiagonalParams(*c)
    assert classify_regime(b) is regime
    if psc is None:
        assert sudden_change_point(b) is None
    else:
        assert sudden_change_point(b) == pytest.approx(psc, abs=1e-15)
        assert sudden_change_point(b) == pytest.approx(0.2254, abs=1e-4)


def test_pd_trajectory_regimes():
    grid = np.linspace(0, 1, 101)
    t1 = pd_trajectory(BellDiagonalParams(0.06, 0.3, 0.33), grid)
    assert np.ptp(t1.column("cc")) <= 1e-9
    c = BellDiagonalParams(1, -0.6, 0.6)
    t2 = pd_trajectory(c, grid)
    psc = sudden_change_point(c)
    before, after = grid < psc, grid > psc
    assert np.ptp(t2.column("qd")[before]) <= 1e-9
    assert np.ptp(t2.column("cc")[after]) <= 1e-9
    for t in (t1, t2, pd_trajectory(BellDiagonalParams(0.25, 0.25, 0), grid)):
        assert np.all(np.diff(t.column("mi")) <= 1e-12)


def test_argmax_axis_switches_once_at_psc():
    c = BellDiagonalParams(1, -0.6, 0.6)
    grid = np.linspace(0, 1, 101)
    axes = [r.kappa_axis for r in pd_trajectory(c, grid).reports]
    switches = [i for i in range(1, len(axes)) if axes[i] != axes[i - 1]]
    assert len(switches) == 1
    i = switches[0]
    assert axes[i - 1] in "xy" and axes[i] == "z"
    assert grid[i - 1] <= sudden_change_point(c) <= grid[i]


def test_trajectory_validation_and_csv():
    c = BellDiagonalParams(1, -0.6, 0.6)
    traj = pd_trajectory(c, [0.0, 0.5])
    text = traj.to_csv()
    lines = text.splitlines()
    assert lines[0] == "t_or_p,mi,cc,qd,regime,kappa_axis"
    assert lines[1].split(",")[4:] == ["sudden_change", "x"]
    buf = io.StringIO()
    traj.to_csv(buf)
    assert buf.getvalue() == text
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], traj.states, traj.reports)
    with pytest.raises(ValueError):
        Trajectory([0.0], traj.states, traj.reports)


def test_relaxation_params():
    p = RelaxationParams()
    assert p.gamma == pytest.approx((1 - 1e-5) / 2)
    with pytest.raises(ValueError):
        RelaxationParams(t1_a=0)
    with pytest.raises(ValueError):
        RelaxationParams(gamma=1.5)
    with pytest.warns(UserWarning):
        RelaxationParams(t1_a=0.1, t2_a=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        RelaxationParams()


def test_readout_grid():
    g = readout_grid()
    assert len(g) == 251 and g[1] == pytest.approx(1 / (4 * J_COUPLING_HZ))


def test_sudden_change_time_equal_t2():
    c = BellDiagonalParams(1, -0.6, 0.6)
    p = RelaxationParams(t2_a=0.2, t2_b=0.2)
    assert sudden_change_time(c, p) == pytest.approx(-0.2 * math.log(math.sqrt(0.6)), rel=1e-12)
    assert sudden_change_time(BellDiagonalParams(0.25, 0.25, 0), p) is None


def test_nmr_trajectory_endpoints():
    c = BellDiagonalParams(1, -0.6, 0.6)
    params = RelaxationParams()
    cfg = OptimizerConfig(grid=8)
    traj = nmr_trajectory(c.state(), params, [0.0, 70.0], cfg)
    assert np.allclose(traj.states[0].mat, c.state().mat)
    g = params.gamma
    fixed = np.kron(np.diag([g, 1 - g]), np.diag([g, 1 - g]))
    assert np.allclose(traj.states[1].mat, fixed, atol=1e-12)
    last = traj.reports[1]
    assert max(last.mutual_information, last.classical_correlation, last.symmetric_discord) < 1e-6


def test_nmr_small_residual_classical_decay():
    # T1 >> T2: cc decays slightly after the kink because of the amplitude channel
    c = BellDiagonalParams(1, -0.6, 0.6)
    params = RelaxationParams()
    cfg = OptimizerConfig(grid=8)
    t = [0.2, 0.3]
    full = nmr_trajectory(c.state(), params, t, cfg).column("cc")
    pure = nmr_trajectory(c.state(), params, t, cfg, amplitude=False).column("cc")
    assert np.ptp(pure) <= 1e-9
    assert full[1] < full[0] < pure[0]
    # after the kink only sigma_z sigma_z survives, shrunk by both T1 channels
    for ti, cc in zip(t, full):
        c3 = 0.6 * math.exp(-ti * (1 / params.t1_a + 1 / params.t1_b))
        assert cc == pytest.approx(bell_diagonal_classical(c3), abs=1e-6)


def test_nmr_deviation_units():
    c = BellDiagonalParams(1, -0.6, 0.6)
    traj = nmr_trajectory(c.deviation(1e-5), RelaxationParams(), [0.0], OptimizerConfig(grid=8), amplitude=False)
    assert traj.reports[0].unit == "eps2/ln2 bit"


def test_parallel_map_matches_serial(monkeypatch):
    c = BellDiagonalParams(1, -0.6, 0.6)
    cfg = OptimizerConfig(grid=6)
    t = readout_grid(5)
    serial = nmr_trajectory(c.state(), None, t, cfg).to_csv()
    monkeypatch.setenv("QDLAB_THREADS", "4")
    assert nmr_trajectory(c.state(), None, t, cfg).to_csv() == serial


def test_then_composition_order():
    a = generalized_amplitude_damping(0.6, 0.1)
    b = phase_damping(0.4)
    rho = random_density_matrix(2, np.random.default_rng(8)).mat
    assert np.allclose(a.then(b)(rho), b(a(rho)))
    assert np.allclose(a.local(b)(tensor(rho, rho)), tensor(a(rho), b(rho)))
