"""Three-phase records, the Clarke modal transform and a synthetic fault-record generator.

The generator replaces an electromagnetic-transient simulation with a
two-source phasor model: a lumped series line (shunt capacitance neglected)
between two Thevenin sources, solved in the phase domain before and after
the fault, plus a decaying DC offset that keeps the currents continuous at
the inception instant.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

FAULT_TYPES = ("A-g", "B-g", "C-g", "AB", "AC", "BC", "AB-g", "AC-g", "BC-g", "ABC")
PHASES = "ABC"
CHANNELS = ("va", "vb", "vc", "ia", "ib", "ic")

FAULT_CLASSES = {
    "A-g": "single-phase-earth",
    "B-g": "single-phase-earth",
    "C-g": "single-phase-earth",
    "AB": "phase-phase",
    "AC": "phase-phase",
    "BC": "phase-phase",
    "AB-g": "phase-phase-earth",
    "AC-g": "phase-phase-earth",
    "BC-g": "phase-phase-earth",
    "ABC": "three-phase",
}

# bolted faults are modelled with this resistance so the nodal matrix stays finite
MIN_FAULT_RESISTANCE = 1e-6


class NetworkError(RuntimeError):
    pass


def fault_phases(fault_type: str) -> str:
    return fault_type.split("-")[0]


def is_ground_fault(fault_type: str) -> bool:
    return fault_type.endswith("-g")


def fault_code(fault_type: str) -> str:
    """'A-g' -> 'Ag', 'AB-g' -> 'ABg', 'ABC' -> 'ABC'."""
    return fault_type.replace("-", "")


# ---------------------------------------------------------------------------
# records


@dataclass
class ThreePhaseRecord:
    sample_rate: float
    fundamental: float
    va: np.ndarray
    vb: np.ndarray
    vc: np.ndarray
    ia: np.ndarray
    ib: np.ndarray
    ic: np.ndarray
    meta: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        for name in CHANNELS:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        n = {len(getattr(self, name)) for name in CHANNELS}
        if len(n) != 1:
            raise ValueError(f"channel lengths differ: {sorted(n)}")

    def __len__(self):
        return len(self.va)

    @property
    def samples_per_cycle(self) -> int:
        return int(round(self.sample_rate / self.fundamental))

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self)) / self.sample_rate

    @property
    def voltages(self) -> np.ndarray:
        return np.vstack([self.va, self.vb, self.vc])

    @property
    def currents(self) -> np.ndarray:
        return np.vstack([self.ia, self.ib, self.ic])

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise KeyError(f"unknown channel {name!r}")
        return getattr(self, name)

    def scaled(self, factor: float) -> "ThreePhaseRecord":
        return replace(self, **{c: getattr(self, c) * factor for c in CHANNELS}, meta=dict(self.meta))


@dataclass
class ModalRecord:
    v_alpha: np.ndarray
    v_beta: np.ndarray
    v_zero: np.ndarray
    i_alpha: np.ndarray
    i_beta: np.ndarray
    i_zero: np.ndarray

    def voltage(self, component: str) -> np.ndarray:
        return getattr(self, f"v_{component}")

    def current(self, component: str) -> np.ndarray:
        return getattr(self, f"i_{component}")


CLARKE = np.array([[2.0, -1.0, -1.0], [0.0, math.sqrt(3.0), -math.sqrt(3.0)], [1.0, 1.0, 1.0]]) / 3.0


def clarke_abc(xa, xb, xc) -> np.ndarray:
    """Rows alpha, beta, zero of the 1/3-scaled Clarke transform."""
    return CLARKE @ np.vstack([np.asarray(xa, float), np.asarray(xb, float), np.asarray(xc, float)])


def clarke(record: ThreePhaseRecord) -> ModalRecord:
    va, vb, v0 = clarke_abc(record.va, record.vb, record.vc)
    ia, ib, i0 = clarke_abc(record.ia, record.ib, record.ic)
    return ModalRecord(va, vb, v0, ia, ib, i0)


# ---------------------------------------------------------------------------
# network model


@dataclass(frozen=True)
class LineModel:
    """Transposed line with per-km sequence parameters (ohm, mH, nF)."""

    length_km: float = 205.6
    r1: float = 0.0246
    l1: float = 0.8539
    c1: float = 13.66
    r0: float = 0.3818
    l0: float = 3.732
    c0: float = 8.61
    nominal_kv: float = 500.0

    def __post_init__(self):
        for name in ("length_km", "r1", "l1", "c1", "r0", "l0", "c0", "nominal_kv"):
            if not getattr(self, name) > 0:
                raise ValueError(f"line parameter {name} must be positive, got {getattr(self, name)}")

    def z1_per_km(self, f: float = 60.0) -> complex:
        return complex(self.r1, 2 * math.pi * f * self.l1 * 1e-3)

    def z0_per_km(self, f: float = 60.0) -> complex:
        return complex(self.r0, 2 * math.pi * f * self.l0 * 1e-3)

    def x1_per_km(self, f: float = 60.0) -> float:
        return 2 * math.pi * f * self.l1 * 1e-3

    def k0(self, f: float = 60.0) -> complex:
        z1, z0 = self.z1_per_km(f), self.z0_per_km(f)
        return (z0 - z1) / (3 * z1)


@dataclass(frozen=True)
class SourceParams:
    """Thevenin equivalents at both line ends.

    EMFs are line-to-line RMS kV with angles in degrees; impedances in ohm.
    These defaults are illustrative values.
    """

    z1_e1: complex = complex(1.0, 10.0)
    z0_e1: complex = complex(3.0, 30.0)
    z1_e2: complex = complex(1.0, 10.0)
    z0_e2: complex = complex(3.0, 30.0)
    e1_kv: float = 500.0
    e1_deg: float = 0.0
    e2_kv: float = 500.0
    e2_deg: float = -10.0

    def to_dict(self) -> dict:
        out = {}
        for k in ("z1_e1", "z0_e1", "z1_e2", "z0_e2"):
            z = getattr(self, k)
            out[k] = [z.real, z.imag]
        for k in ("e1_kv", "e1_deg", "e2_kv", "e2_deg"):
            out[k] = getattr(self, k)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SourceParams":
        kw = {}
        for k, v in d.items():
            if k.startswith("z"):
                kw[k] = complex(*v) if isinstance(v, (list, tuple)) else complex(v)
            else:
                kw[k] = float(v)
        return cls(**kw)


@dataclass(frozen=True)
class FaultScenario:
    fault_type: str
    location_fraction: float
    inception_cycles: float
    fault_resistance: float = 0.0
    source: SourceParams = field(default_factory=SourceParams)
    position: int = 1

    def __post_init__(self):
        if self.fault_type not in FAULT_TYPES:
            raise ValueError(f"unknown fault type {self.fault_type!r}")
        if not 0.0 < self.location_fraction < 1.0:
            raise ValueError(f"location_fraction must be in (0, 1), got {self.location_fraction}")
        if self.inception_cycles < 0:
            raise ValueError(f"inception must be non-negative, got {self.inception_cycles}")
        if self.fault_resistance < 0:
            raise ValueError(f"fault resistance must be >= 0, got {self.fault_resistance}")

    @property
    def scenario_id(self) -> str:
        return f"{fault_code(self.fault_type)}{int(round(100 * self.location_fraction))}_{self.position}"

    @property
    def fault_class(self) -> str:
        return FAULT_CLASSES[self.fault_type]

    def to_dict(self) -> dict:
        return {
            "id": self.scenario_id,
            "fault_type": self.fault_type,
            "location_fraction": self.location_fraction,
            "inception_cycles": self.inception_cycles,
            "fault_resistance": self.fault_resistance,
            "position": self.position,
            "source": self.source.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FaultScenario":
        src = SourceParams.from_dict(d["source"]) if "source" in d else SourceParams()
        return cls(
            fault_type=d["fault_type"],
            location_fraction=float(d["location_fraction"]),
            inception_cycles=float(d["inception_cycles"]),
            fault_resistance=float(d.get("fault_resistance", 0.0)),
            source=src,
            position=int(d.get("position", 1)),
        )


STANDARD_LOCATIONS = (0.25, 0.50, 0.75)
STANDARD_INCEPTIONS = (4.0, 4.125, 4.25)


def standard_catalog(
    fault_types: Sequence[str] = FAULT_TYPES,
    locations: Sequence[float] = STANDARD_LOCATIONS,
    inceptions: Sequence[float] = STANDARD_INCEPTIONS,
    source: Optional[SourceParams] = None,
) -> List[FaultScenario]:
    """Fault types x locations x inception instants, ordered like the Ag25_1.. labels."""
    src = source or SourceParams()
    return [
        FaultScenario(ft, loc, inc, 0.0, src, pos)
        for loc in locations
        for ft in fault_types
        for pos, inc in enumerate(inceptions, start=1)
    ]


def sequence_to_phase(z1: complex, z0: complex) -> np.ndarray:
    zs = (z0 + 2 * z1) / 3
    zm = (z0 - z1) / 3
    return np.full((3, 3), zm, dtype=complex) + np.eye(3) * (zs - zm)


def balanced_set(magnitude: float, angle_rad: float) -> np.ndarray:
    a = cmath.exp(-2j * math.pi / 3)
    base = magnitude * cmath.exp(1j * angle_rad)
    return np.array([base, base * a, base * a * a])


def fault_conductance(fault_type: str, resistance: float) -> np.ndarray:
    g = 1.0 / max(resistance, MIN_FAULT_RESISTANCE)
    G = np.zeros((3, 3), dtype=complex)
    idx = [PHASES.index(p) for p in fault_phases(fault_type)]
    if is_ground_fault(fault_type) or len(idx) == 1:
        for p in idx:
            G[p, p] += g
    else:
        pairs = [(idx[i], idx[j]) for i in range(len(idx)) for j in range(i + 1, len(idx))]
        for p, q in pairs:
            G[p, p] += g
            G[q, q] += g
            G[p, q] -= g
            G[q, p] -= g
    return G


@dataclass(frozen=True)
class PhasorSolution:
    """Peak-value phasors at terminal A (voltage to ground, current into the line)."""

    v: np.ndarray
    i: np.ndarray


def solve_network(
    line: LineModel,
    source: SourceParams,
    location_fraction: float,
    fault_type: Optional[str] = None,
    fault_resistance: float = 0.0,
    f: float = 60.0,
) -> PhasorSolution:
    """Phase-domain nodal solution of source1 - A - [line] - F - [line] - B - source2."""
    z1l = line.z1_per_km(f) * line.length_km
    z0l = line.z0_per_km(f) * line.length_km
    zl = sequence_to_phase(z1l, z0l)
    y_af = np.linalg.inv(location_fraction * zl)
    y_fb = np.linalg.inv((1 - location_fraction) * zl)
    ys1 = np.linalg.inv(sequence_to_phase(source.z1_e1, source.z0_e1))
    ys2 = np.linalg.inv(sequence_to_phase(source.z1_e2, source.z0_e2))
    peak = math.sqrt(2.0 / 3.0) * 1e3
    e1 = balanced_set(source.e1_kv * peak, math.radians(source.e1_deg))
    e2 = balanced_set(source.e2_kv * peak, math.radians(source.e2_deg))

    Y = np.zeros((9, 9), dtype=complex)
    A, F, B = slice(0, 3), slice(3, 6), slice(6, 9)
    Y[A, A] += ys1 + y_af
    Y[F, F] += y_af + y_fb
    Y[B, B] += ys2 + y_fb
    Y[A, F] -= y_af
    Y[F, A] -= y_af
    Y[F, B] -= y_fb
    Y[B, F] -= y_fb
    if fault_type is not None:
        Y[F, F] += fault_conductance(fault_type, fault_resistance)
    inj = np.zeros(9, dtype=complex)
    inj[A] = ys1 @ e1
    inj[B] = ys2 @ e2
    try:
        V = np.linalg.solve(Y, inj)
    except np.linalg.LinAlgError as exc:
        raise NetworkError(str(exc)) from exc
    if not np.all(np.isfinite(V)):
        raise NetworkError("non-finite network solution")
    va = V[A]
    ia = y_af @ (V[A] - V[F])
    return PhasorSolution(va, ia)


def loop_time_constant(line: LineModel, scenario: FaultScenario, f: float = 60.0) -> float:
    """L/R of the loop from source 1 to the fault, in seconds."""
    src = scenario.source
    d = scenario.location_fraction * line.length_km
    if is_ground_fault(scenario.fault_type) and len(fault_phases(scenario.fault_type)) == 1:
        z = (2 * src.z1_e1 + src.z0_e1) / 3 + d * (2 * line.z1_per_km(f) + line.z0_per_km(f)) / 3
    else:
        z = src.z1_e1 + d * line.z1_per_km(f)
    z += scenario.fault_resistance
    return z.imag / (2 * math.pi * f * z.real)


def generate_fault_record(
    scenario: FaultScenario,
    line: Optional[LineModel] = None,
    duration_cycles: int = 8,
    samples_per_cycle: int = 128,
    fundamental: float = 60.0,
) -> ThreePhaseRecord:
    """Synthesize terminal-A voltages and currents for one fault scenario.

    Time zero is placed where the pre-fault phase-A terminal voltage peaks,
    so an inception of k + 1/4 cycles lands on its zero crossing. An
    inception at or beyond the record end yields a fault-free record.
    """
    line = line or LineModel()
    fs = fundamental * samples_per_cycle
    n = duration_cycles * samples_per_cycle
    t = np.arange(n) / fs
    w = 2 * math.pi * fundamental
    sid = scenario.scenario_id
    try:
        pre = solve_network(line, scenario.source, scenario.location_fraction, None, 0.0, fundamental)
        post = solve_network(
            line, scenario.source, scenario.location_fraction,
            scenario.fault_type, scenario.fault_resistance, fundamental,
        )
    except NetworkError as exc:
        raise NetworkError(f"scenario {sid}: {exc}") from exc
    rot = cmath.exp(-1j * cmath.phase(pre.v[0]))
    v_pre, i_pre = pre.v * rot, pre.i * rot
    v_post, i_post = post.v * rot, post.i * rot

    def wave(ph: np.ndarray, tt) -> np.ndarray:
        return np.real(np.outer(ph, np.exp(1j * w * np.atleast_1d(tt))))

    v = wave(v_pre, t)
    i = wave(i_pre, t)
    t0 = scenario.inception_cycles / fundamental
    n0 = int(math.ceil(round(t0 * fs, 9)))
    tau = loop_time_constant(line, scenario, fundamental)
    if n0 < n:
        after = t[n0:]
        v[:, n0:] = wave(v_post, after)
        offset = (wave(i_pre, t0) - wave(i_post, t0))[:, 0]
        i[:, n0:] = wave(i_post, after) + np.outer(offset, np.exp(-(after - t0) / tau))
    meta = {
        "scenario_id": sid,
        "fault_type": scenario.fault_type,
        "location_fraction": scenario.location_fraction,
        "distance_km": scenario.location_fraction * line.length_km,
        "inception_cycles": scenario.inception_cycles,
        "inception_index": n0 if n0 < n else None,
        "tau_s": tau,
    }
    return ThreePhaseRecord(fs, fundamental, *v, *i, meta=meta)
