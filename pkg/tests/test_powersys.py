import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gegmra.powersys import (
    FAULT_TYPES,
    FaultScenario,
    LineModel,
    SourceParams,
    ThreePhaseRecord,
    clarke,
    clarke_abc,
    fault_code,
    generate_fault_record,
    is_ground_fault,
    standard_catalog,
    solve_network,
)

LINE = LineModel()
SRC = SourceParams()
PEAK = math.sqrt(2.0 / 3.0) * 1e3  # L-L rms kV -> phase peak V


def test_clarke_examples():
    np.testing.assert_allclose(clarke_abc([1.0], [0.0], [0.0]).ravel(), [2 / 3, 0, 1 / 3], atol=1e-15)
    np.testing.assert_allclose(clarke_abc([1.0], [1.0], [1.0]).ravel(), [0, 0, 1], atol=1e-15)


def test_clarke_balanced_has_no_zero_mode():
    t = np.linspace(0, 1 / 60, 200)
    xa, xb, xc = (np.cos(2 * np.pi * 60 * t - k * 2 * np.pi / 3) for k in range(3))
    a, b, z = clarke_abc(xa, xb, xc)
    np.testing.assert_allclose(z, 0, atol=1e-14)
    np.testing.assert_allclose(np.hypot(a, b), 1.0, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(k=st.floats(-1e3, 1e3), seed=st.integers(0, 1000))
def test_clarke_linear(k, seed):
    x, y = np.random.default_rng(seed).standard_normal((2, 3, 16))
    np.testing.assert_allclose(clarke_abc(*(k * x + y)), k * clarke_abc(*x) + clarke_abc(*y), atol=1e-9)


def test_fault_labels():
    assert fault_code("A-g") == "Ag"
    assert fault_code("AB-g") == "ABg"
    assert is_ground_fault("BC-g") and not is_ground_fault("BC")
    assert FaultScenario("A-g", 0.25, 4.0).scenario_id == "Ag25_1"
    assert FaultScenario("ABC", 0.75, 4.25, position=3).scenario_id == "ABC75_3"


@pytest.mark.parametrize(
    "kw",
    [dict(fault_type="XY"), dict(location_fraction=0.0), dict(location_fraction=1.0),
     dict(inception_cycles=-1.0), dict(fault_resistance=-0.1)],
)
def test_scenario_validation(kw):
    base = dict(fault_type="A-g", location_fraction=0.5, inception_cycles=4.0)
    with pytest.raises(ValueError):
        FaultScenario(**{**base, **kw})


def test_scenario_round_trip():
    sc = FaultScenario("AC-g", 0.5, 4.125, 2.5, SourceParams(e2_deg=-20.0), 2)
    assert FaultScenario.from_dict(sc.to_dict()) == sc


def test_catalog_shape_and_order():
    cat = standard_catalog()
    assert len(cat) == 90
    assert len({s.scenario_id for s in cat}) == 90
    assert [s.scenario_id for s in cat[:4]] == ["Ag25_1", "Ag25_2", "Ag25_3", "Bg25_1"]
    assert {s.inception_cycles for s in cat} == {4.0, 4.125, 4.25}
    assert {s.fault_type for s in cat} == set(FAULT_TYPES)


def test_line_defaults():
    assert LINE.length_km == 205.6
    assert LINE.x1_per_km() == pytest.approx(2 * math.pi * 60 * 0.8539e-3)
    z1, z0 = LINE.z1_per_km(), LINE.z0_per_km()
    assert LINE.k0() == pytest.approx((z0 - z1) / (3 * z1))
    with pytest.raises(ValueError):
        LineModel(l1=0.0)


def test_prefault_matches_series_circuit():
    # without a fault the network is a balanced series loop E1 - Zs1 - ZL - Zs2 - E2
    sol = solve_network(LINE, SRC, 0.5)
    e1 = SRC.e1_kv * PEAK
    e2 = SRC.e2_kv * PEAK * cmath.exp(1j * math.radians(SRC.e2_deg))
    i = (e1 - e2) / (SRC.z1_e1 + LINE.z1_per_km() * LINE.length_km + SRC.z1_e2)
    assert sol.i[0] == pytest.approx(i, rel=1e-9)
    assert sol.v[0] == pytest.approx(e1 - SRC.z1_e1 * i, rel=1e-9)
    a = cmath.exp(-2j * math.pi / 3)
    np.testing.assert_allclose(sol.i, [i, i * a, i * a * a], rtol=1e-9)


def test_three_phase_fault_current_closed_form():
    m = 0.5
    sol = solve_network(LINE, SRC, m, "ABC")
    i = SRC.e1_kv * PEAK / (SRC.z1_e1 + m * LINE.z1_per_km() * LINE.length_km)
    assert sol.i[0] == pytest.approx(i, rel=1e-6)


@pytest.mark.parametrize("ft", FAULT_TYPES)
@pytest.mark.parametrize("m", [0.25, 0.5, 0.75])
def test_bolted_fault_loop_impedance(ft, m):
    # for a bolted fault the faulted loop sees exactly m * Z1_line
    sol = solve_network(LINE, SRC, m, ft)
    v, i = dict(zip("ABC", sol.v)), dict(zip("ABC", sol.i))
    ph = ft.split("-")[0]
    if len(ph) == 1:
        z = v[ph] / (i[ph] + LINE.k0() * sum(i.values()))
    else:
        z = (v[ph[0]] - v[ph[1]]) / (i[ph[0]] - i[ph[1]])
    assert z == pytest.approx(m * LINE.z1_per_km() * LINE.length_km, rel=1e-6)


def _record(ft="A-g", m=0.5, inc=4.25, cycles=8, **kw):
    return generate_fault_record(FaultScenario(ft, m, inc, **kw), LINE, cycles)


def test_no_fault_record_is_pure_sinusoid():
    rec = _record(inc=20.0)
    assert rec.meta["inception_index"] is None
    t = rec.t
    for x in (rec.va, rec.ia):
        X = np.fft.rfft(x)
        # all energy at bin 8 (eight cycles)
        assert np.sum(np.abs(X[9:]) ** 2) < 1e-20 * np.sum(np.abs(X) ** 2)
    np.testing.assert_allclose(rec.va + rec.vb + rec.vc, 0.0, atol=1e-6)
    assert t[1] == pytest.approx(1 / 7680)


def test_record_layout():
    rec = _record()
    assert len(rec) == 1024
    assert rec.sample_rate == 7680.0
    assert rec.samples_per_cycle == 128
    assert rec.meta["scenario_id"] == "Ag50_1"
    assert rec.meta["distance_km"] == pytest.approx(102.8)
    assert rec.meta["inception_index"] == 544


def test_zero_crossing_reference():
    # the prefault phase-A voltage peaks at t=0 and crosses zero a quarter cycle later
    rec = _record(inc=20.0)
    assert rec.va[0] == pytest.approx(np.max(np.abs(rec.va)), rel=1e-12)
    assert abs(rec.va[4 * 128 + 32]) < 1e-9 * np.max(np.abs(rec.va))


@pytest.mark.parametrize("ft", FAULT_TYPES)
def test_current_is_continuous_at_inception(ft):
    rec = _record(ft, inc=4.125)
    n0 = rec.meta["inception_index"]
    for x in rec.currents:
        step = abs(x[n0] - x[n0 - 1])
        typical = np.max(np.abs(np.diff(x[: n0 - 1])))
        assert step < 3 * typical


def test_dc_offset_decays_with_tau():
    rec = _record("ABC", inc=4.25, cycles=60)
    tau = rec.meta["tau_s"]
    assert tau > 0
    # mean over a cycle isolates the decaying offset
    n0 = rec.meta["inception_index"]
    means = [np.mean(rec.ia[n0 + k * 128 : n0 + (k + 1) * 128]) for k in (0, 10)]
    assert abs(means[1]) < abs(means[0]) * math.exp(-10 / 60 / tau) * 1.5


@pytest.mark.parametrize("ft", FAULT_TYPES)
def test_zero_mode_tracks_ground(ft):
    rec = _record(ft)
    modal = clarke(rec)
    n0 = rec.meta["inception_index"]
    post = np.max(np.abs(modal.i_zero[n0:]))
    ref = np.max(np.abs(modal.i_alpha[n0:]))
    if is_ground_fault(ft):
        assert post > 1e-2 * ref
    else:
        assert post < 1e-9 * ref


def test_three_phase_fault_modes_balanced():
    rec = _record("ABC", inc=4.0, cycles=40)
    modal = clarke(rec)
    # late in the record the offset has decayed; alpha and beta carry equal amplitude
    a = np.max(np.abs(modal.i_alpha[-256:]))
    b = np.max(np.abs(modal.i_beta[-256:]))
    assert a == pytest.approx(b, rel=0.01)


def test_long_record_apparent_impedance():
    rec = _record("ABC", inc=4.0, cycles=40)
    W = 128
    seg = slice(len(rec) - W, len(rec))
    k = np.exp(-2j * np.pi * np.arange(W) / W)
    va, vb = (np.sum(x[seg] * k) for x in rec.voltages[:2])
    ia, ib = (np.sum(x[seg] * k) for x in rec.currents[:2])
    z = (va - vb) / (ia - ib)
    assert z.imag / LINE.x1_per_km() == pytest.approx(102.8, rel=0.01)


def test_record_channel_access_and_scaling():
    rec = _record()
    with pytest.raises(KeyError):
        rec.channel("vx")
    big = rec.scaled(1000.0)
    np.testing.assert_allclose(big.ic, rec.ic * 1000)
    assert big.meta == rec.meta and big.meta is not rec.meta
    with pytest.raises(ValueError):
        ThreePhaseRecord(7680.0, 60.0, [0, 1], [0, 1], [0, 1], [0, 1], [0, 1], [0])
