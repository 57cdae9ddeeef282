"""Calibrated demo cells, one per experiment family.

Geometry (electrode pitch, arm lengths, tortuosity, piece counts) is a
calibration choice made together with the default :class:`DeviceParams`;
the acceptance targets are met with these cells and those defaults.
"""
from __future__ import annotations

import math
from dataclasses import replace

from .device import DeviceParams
from .protocols import MacConfig, SequenceProgram
from .topology import (ElectrodeSpec, GrowthParams, TopologyBuilder, assemble_cell, grow_network,
                       radius_from_frequency)

DL_CAPACITANCE = 1e-9  # F per electrode


def _polar(angle_deg, radius, centre=(0.0, 0.0)):
    a = math.radians(angle_deg)
    return (centre[0] + radius * math.cos(a), centre[1] + radius * math.sin(a))


def _radius(frequency):
    return radius_from_frequency(frequency, GrowthParams())


def y_topology(thin_frequency=200.0, thick_frequency=25.0, core_frequency=25.0, arm=200.0, core=40.0,
               pieces=8):
    """Y device: two thin arms (E1, E2), one thick arm (E3), grounded core C.

    E1 and E2 are mirror images of each other, which makes the (E2)-E1
    configuration the geometry-symmetric control.
    """
    b = TopologyBuilder("y-device")
    b.electrode("E1", _polar(210, arm))
    b.electrode("E2", _polar(330, arm))
    b.electrode("E3", _polar(90, arm))
    b.electrode("C", _polar(270, core), "ground")
    b.junction("J", (0.0, 0.0))
    b.dendrite("E1", "J", _radius(thin_frequency), thin_frequency, pieces)
    b.dendrite("E2", "J", _radius(thin_frequency), thin_frequency, pieces)
    b.dendrite("E3", "J", _radius(thick_frequency), thick_frequency, pieces)
    b.dendrite("C", "J", _radius(core_frequency), core_frequency, 2)
    return b.build()


def y_device(params: DeviceParams | None = None):
    return assemble_cell([y_topology()], DL_CAPACITANCE, params or DeviceParams())


def gating_pair(params: DeviceParams | None = None, length=200.0, gap=150.0, tortuosity=5.0, pieces=8):
    """Two parallel, disconnected dendrites in one electrolyte.

    Bulky B_S-B_D grown at 25 Hz, thin T_S-T_D at 200 Hz; the thin one
    meanders (``tortuosity`` x the electrode distance).
    """
    bulky = TopologyBuilder("bulky")
    bulky.electrode("B_S", (0.0, 0.0), "ground")
    bulky.electrode("B_D", (0.0, length), "input")
    bulky.dendrite("B_S", "B_D", _radius(25.0), 25.0, pieces)
    thin = TopologyBuilder("thin")
    thin.electrode("T_S", (gap, 0.0), "ground")
    thin.electrode("T_D", (gap, length), "input")
    thin.dendrite("T_S", "T_D", _radius(200.0), 200.0, pieces, tortuosity=tortuosity)
    return assemble_cell([bulky.build(), thin.build()], DL_CAPACITANCE, params or DeviceParams())


MAC_ARMS = (("IN1", 150.0, 150.0), ("IN2", 90.0, 300.0), ("IN3", 30.0, 125.0))  # id, angle, growth Hz


def mac_cell(params: DeviceParams | None = None, arms=MAC_ARMS, arm=200.0, readout_frequency=500.0,
             readout_pieces=10):
    """Y-shaped input device (centre G grounded) plus a separate readout R_S-R_D."""
    y = TopologyBuilder("mac-inputs")
    y.junction("J", (0.0, 0.0))
    y.electrode("G", (0.0, -40.0), "ground")
    for eid, angle, freq in arms:
        y.electrode(eid, _polar(angle, arm))
        y.dendrite(eid, "J", _radius(freq), freq, 8)
    y.dendrite("G", "J", _radius(80.0), 80.0, 2)
    ro = TopologyBuilder("readout")
    ro.electrode("R_S", (250.0, -150.0), "output-source")
    ro.electrode("R_D", (250.0, -50.0), "output-drain")
    ro.dendrite("R_S", "R_D", _radius(readout_frequency), readout_frequency, readout_pieces)
    return assemble_cell([y.build(), ro.build()], DL_CAPACITANCE, params or DeviceParams())


def mac_config(**changes) -> MacConfig:
    """MAC schedule for :func:`mac_cell`: unfired inputs float, G grounded."""
    kw = dict(inputs=("IN1", "IN2", "IN3"), source="R_S", drain="R_D", grounded=("G",), idle="float")
    kw.update(changes)
    return MacConfig(**kw)


# -- spatiotemporal network ------------------------------------------------------

NETWORK_INPUTS = tuple(f"A{k + 1}" for k in range(8))
SPATIAL_PROJECTIONS = {
    "SP1": ("A1", "A2", "A3"),
    "SP2": ("A5", "A6", "A7"),
    "SP3": ("A1", "A2", "A4"),
}
# temporal projection used against the default order (indices into the patterns)
SHUFFLED_ORDER = (3, 0, 5, 1, 7, 2, 6, 4)


def network_electrodes(n_inputs=8, ring=260.0, readout_half_length=60.0):
    angles = [2.0 * math.pi * k / n_inputs for k in range(n_inputs)]
    els = [ElectrodeSpec(f"A{k + 1}", (ring * math.cos(a), ring * math.sin(a)), "input")
           for k, a in enumerate(angles)]
    els.append(ElectrodeSpec("R_S", (-readout_half_length, 0.0), "output-source"))
    els.append(ElectrodeSpec("R_D", (readout_half_length, 0.0), "output-drain"))
    return els


def network_pairs(electrodes):
    """Readout first, then every input toward the nearer readout terminal."""
    pos = {e.id: e.position for e in electrodes}
    pairs = [("R_S", "R_D")]
    for e in electrodes:
        if e.id in ("R_S", "R_D"):
            continue
        target = min(("R_S", "R_D"), key=lambda r: math.dist(e.position, pos[r]))
        pairs.append((e.id, target))
    return pairs


def network_topology(seed: int = 0, frequency: float = 80.0, growth: GrowthParams | None = None):
    """Grown multi-input network wired into its readout dendrite (R_S-R_D)."""
    els = network_electrodes()
    gp = replace(growth or GrowthParams(), seed=seed, frequency=frequency)
    return grow_network(els, gp, network_pairs(els), name=f"network-{seed}")


def network_cell(seed: int = 0, params: DeviceParams | None = None):
    return assemble_cell([network_topology(seed)], DL_CAPACITANCE, params or DeviceParams())


def network_program(projection="SP1", **changes) -> SequenceProgram:
    inputs = SPATIAL_PROJECTIONS.get(projection, projection)
    return SequenceProgram(tuple(inputs), **changes)


# -- twin networks around one readout ---------------------------------------------

def _side(prefix, sign, frequency, seed):
    els = [ElectrodeSpec(f"{prefix}1", (sign * 200.0, 140.0), "input"),
           ElectrodeSpec(f"{prefix}2", (sign * 330.0, 0.0), "input"),
           ElectrodeSpec(f"{prefix}3", (sign * 200.0, -140.0), "input"),
           ElectrodeSpec(f"{prefix}G", (sign * 130.0, 0.0), "ground")]
    return grow_network(els, GrowthParams(seed=seed, frequency=frequency), name=f"{prefix}-{frequency:g}Hz")


TWIN_INPUTS = {"80Hz": ("L1", "L2", "L3"), "500Hz": ("H1", "H2", "H3")}


def twin_cell(seed: int = 0, params: DeviceParams | None = None, frequencies=(80.0, 500.0)):
    """Two networks grown with the same seed at two frequencies, mirrored on
    either side of a shared 80 Hz readout that neither touches."""
    ro = TopologyBuilder("readout")
    ro.electrode("R_S", (0.0, -80.0), "output-source")
    ro.electrode("R_D", (0.0, 80.0), "output-drain")
    ro.dendrite("R_S", "R_D", _radius(80.0), 80.0, 4)
    left = _side("L", -1.0, frequencies[0], seed)
    right = _side("H", 1.0, frequencies[1], seed)
    return assemble_cell([ro.build(), left, right], DL_CAPACITANCE, params or DeviceParams())
