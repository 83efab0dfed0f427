"""
Sweep engine: evaluates a validated circuit over its frequency grid and
writes the detector spectra as CSV or JSON.

Ĝ depends only on topology, so it is assembled once per run. Frequency-flat
blocks are built once as well; only waveguides are rebuilt per grid point.
"""

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, TextIO, Tuple

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, model_validator
from scipy.constants import c as SPEED_OF_LIGHT

from photonet.component_library import ScatteringBlock, component_block, is_frequency_dependent
from photonet.errors import NetlistValidationError, SingularMatrixError, SpectrumError
from photonet.netlist_io import (
    CircuitDescription,
    FrequencySweep,
    SingleWavelength,
    ValidationReport,
    validate,
)
from photonet.network_assembly import (
    assemble_connection_matrix,
    assemble_global_scattering,
    port_coordinates,
    solve_transfer_with_condition,
)
from photonet.response import (
    DetectorSpec,
    broadband_response,
    check_uniform_grid,
    gaussian_source,
    impulse_response,
    photocurrent,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"


def wavelength_to_omega(wavelength):
    """Vacuum wavelength (m) to radian frequency (rad/s)."""
    return 2.0 * np.pi * SPEED_OF_LIGHT / np.asarray(wavelength, dtype=float)


def omega_to_wavelength(omega):
    return 2.0 * np.pi * SPEED_OF_LIGHT / np.asarray(omega, dtype=float)


@dataclass(frozen=True)
class SweepGrid:
    """Grid as the user asked for it (values) and as radian frequencies (omegas)."""
    kind: Literal["wavelength", "frequency"]
    values: NDArray[np.float64]
    omegas: NDArray[np.float64]

    @property
    def column(self) -> str:
        return "wavelength_m" if self.kind == "wavelength" else "omega_rad_s"


def sweep_grid(sweep) -> SweepGrid:
    """Evaluation grid; sweeps use linspace with both endpoints included."""
    if isinstance(sweep, SingleWavelength):
        values = np.array([sweep.wavelength])
        return SweepGrid("wavelength", values, wavelength_to_omega(values))
    values = np.linspace(sweep.start, sweep.stop, sweep.points)
    if isinstance(sweep, FrequencySweep):
        return SweepGrid("frequency", values, values.copy())
    return SweepGrid("wavelength", values, wavelength_to_omega(values))


@dataclass(frozen=True)
class PreparedCircuit:
    """Immutable per-run data shared by every grid point."""
    circuit: CircuitDescription
    report: ValidationReport
    G: NDArray[np.complex128]
    static_blocks: Dict[int, ScatteringBlock]
    launch: NDArray[np.complex128]
    detector_labels: Tuple[str, ...]
    detector_ports: Tuple[int, ...]

    @property
    def m(self) -> int:
        return self.report.port_map.total_ports_m


def launch_vector(circuit: CircuitDescription, report: ValidationReport) -> NDArray[np.complex128]:
    """E_o: every source launch placed at its port; several sources add coherently."""
    m = report.port_map.total_ports_m
    E_o = np.zeros(2 * m, dtype=np.complex128)
    for src in circuit.sources:
        g = report.port_map.global_port(src.port.instance, src.port.port)
        cx, cy = port_coordinates(g)
        E_o[cx] += src.polarization[0]
        E_o[cy] += src.polarization[1]
    return E_o


def prepare_circuit(circuit: CircuitDescription, report: Optional[ValidationReport] = None) -> PreparedCircuit:
    if report is None:
        report = validate(circuit)
    if not circuit.sources:
        raise NetlistValidationError("netlist has no source")
    if not circuit.detectors:
        raise NetlistValidationError("netlist has no detector")
    G = assemble_connection_matrix(report.connections, report.port_map.total_ports_m)
    static = {
        i: component_block(comp.spec, 1.0)
        for i, comp in enumerate(circuit.components)
        if not is_frequency_dependent(comp.spec)
    }
    ports = tuple(report.port_map.global_port(d.port.instance, d.port.port) for d in circuit.detectors)
    return PreparedCircuit(
        circuit=circuit,
        report=report,
        G=G,
        static_blocks=static,
        launch=launch_vector(circuit, report),
        detector_labels=tuple(str(d.port) for d in circuit.detectors),
        detector_ports=ports,
    )


@dataclass(frozen=True)
class PointResult:
    """Detector fields (D×2) at one grid point; None when the system was singular."""
    fields: Optional[NDArray[np.complex128]]
    condition: float


def solve_point(prepared: PreparedCircuit, omega: float) -> PointResult:
    blocks: List[ScatteringBlock] = [
        prepared.static_blocks[i] if i in prepared.static_blocks else component_block(comp.spec, omega)
        for i, comp in enumerate(prepared.circuit.components)
    ]
    S = assemble_global_scattering(blocks, prepared.report.port_map)
    try:
        H, cond = solve_transfer_with_condition(S, prepared.G)
    except SingularMatrixError as exc:
        logger.debug("omega=%.12g: singular (cond=%.3g)", omega, exc.condition)
        return PointResult(None, exc.condition)
    logger.debug("omega=%.12g: cond=%.3g", omega, cond)
    E_out = H @ prepared.launch
    fields = np.array([E_out[2 * p - 2:2 * p] for p in prepared.detector_ports])
    return PointResult(fields, cond)


class DetectorSeries(BaseModel):
    """One detector's series; None marks a singular grid point."""
    port: str
    global_port: int
    intensity: List[Optional[float]]
    ex_re: Optional[List[Optional[float]]] = None
    ex_im: Optional[List[Optional[float]]] = None
    ey_re: Optional[List[Optional[float]]] = None
    ey_im: Optional[List[Optional[float]]] = None
    impulse_magnitude: Optional[List[float]] = None
    broadband_photocurrent: Optional[float] = None


class SweepMetadata(BaseModel):
    m: int
    components: int
    connections: int
    condition_max: Optional[float]
    singular_points: List[int]
    threads: int
    wall_time_s: float
    linewidth: Optional[float] = None


class SweepResult(BaseModel):
    schema_version: str = SCHEMA_VERSION
    grid_kind: Literal["wavelength", "frequency"]
    grid: List[float]
    tau: Optional[List[float]] = None
    detectors: List[DetectorSeries]
    metadata: SweepMetadata
    warnings: List[str] = []

    @model_validator(mode="after")
    def _lengths(self):
        n = len(self.grid)
        for det in self.detectors:
            series = [det.intensity, det.ex_re, det.ex_im, det.ey_re, det.ey_im]
            if any(s is not None and len(s) != n for s in series):
                raise ValueError(f"detector {det.port}: series length differs from grid length {n}")
            if any(v is not None and v < 0 for v in det.intensity):
                raise ValueError(f"detector {det.port}: negative intensity")
            if det.impulse_magnitude is not None and len(det.impulse_magnitude) != n:
                raise ValueError(f"detector {det.port}: impulse length differs from grid length {n}")
        return self


def _optional(values: NDArray[np.float64]) -> List[Optional[float]]:
    return [None if np.isnan(v) else float(v) for v in values]


def _require_frequency_grid(grid: SweepGrid, what: str) -> None:
    if grid.kind != "frequency" or grid.omegas.size < 2:
        raise SpectrumError(f"{what} needs a 'sweep frequency' grid with at least 2 points")
    check_uniform_grid(grid.omegas)


def run_sweep(
    circuit: CircuitDescription,
    amplitudes: bool = False,
    impulse: bool = False,
    threads: int = 1,
    linewidth: Optional[float] = None,
    report: Optional[ValidationReport] = None,
) -> SweepResult:
    """
    Evaluate every grid point and collect per-detector intensities.
    Singular points become None entries plus one summary warning.
    """
    if circuit.sweep is None:
        raise NetlistValidationError("netlist has no sweep directive")
    grid = sweep_grid(circuit.sweep)
    if impulse:
        _require_frequency_grid(grid, "impulse output")
    if linewidth is not None:
        _require_frequency_grid(grid, "broadband photocurrent")
    prepared = prepare_circuit(circuit, report)
    threads = max(1, int(threads))

    logger.info("sweep started: %d points, m=%d, %d threads", grid.omegas.size, prepared.m, threads)
    t0 = time.perf_counter()
    if threads == 1:
        points = [solve_point(prepared, w) for w in grid.omegas]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(lambda w: solve_point(prepared, w), grid.omegas))
    wall = time.perf_counter() - t0

    n_det = len(prepared.detector_ports)
    fields = np.full((grid.omegas.size, n_det, 2), np.nan + 0j, dtype=np.complex128)
    singular = []
    for i, pt in enumerate(points):
        if pt.fields is None:
            singular.append(i)
        else:
            fields[i] = pt.fields
    conditions = [pt.condition for pt in points if pt.fields is not None]
    warnings = list(prepared.report.warnings)
    if singular:
        msg = (
            f"{len(singular)} of {grid.omegas.size} grid points singular "
            f"(first at {grid.column}={grid.values[singular[0]]!r}); rows flagged"
        )
        logger.warning(msg)
        warnings.append(msg)
    logger.info("sweep finished: %d points in %.3f s", grid.omegas.size, wall)

    intensities = np.sum(np.abs(fields) ** 2, axis=2)
    tau = None
    impulse_mag = None
    if impulse:
        if singular:
            raise SpectrumError("impulse output needs every grid point solved")
        resp = impulse_response(grid.omegas, fields)
        tau = [float(t) for t in resp.tau_grid]
        impulse_mag = np.sqrt(np.sum(np.abs(resp.h_samples) ** 2, axis=2))
    currents = None
    if linewidth is not None:
        if singular:
            raise SpectrumError("broadband photocurrent needs every grid point solved")
        centre = 0.5 * (grid.omegas[0] + grid.omegas[-1])
        source = gaussian_source(centre, linewidth, grid.omegas)
        _, fields_f = broadband_response(source, grid.omegas, fields)
        detector = DetectorSpec.flat(grid.omegas)
        currents = [
            photocurrent(detector, grid.omegas, np.sum(np.abs(fields_f[:, d, :]) ** 2, axis=1))
            for d in range(n_det)
        ]

    series = []
    for d, (label, gport) in enumerate(zip(prepared.detector_labels, prepared.detector_ports)):
        det = DetectorSeries(port=label, global_port=gport, intensity=_optional(intensities[:, d]))
        if amplitudes:
            det.ex_re = _optional(fields[:, d, 0].real)
            det.ex_im = _optional(fields[:, d, 0].imag)
            det.ey_re = _optional(fields[:, d, 1].real)
            det.ey_im = _optional(fields[:, d, 1].imag)
        if impulse_mag is not None:
            det.impulse_magnitude = [float(v) for v in impulse_mag[:, d]]
        if currents is not None:
            det.broadband_photocurrent = float(currents[d])
        series.append(det)

    return SweepResult(
        grid_kind=grid.kind,
        grid=[float(v) for v in grid.values],
        tau=tau,
        detectors=series,
        metadata=SweepMetadata(
            m=prepared.m,
            components=len(circuit.components),
            connections=len(circuit.connections),
            condition_max=max(conditions) if conditions else None,
            singular_points=singular,
            threads=threads,
            wall_time_s=wall,
            linewidth=linewidth,
        ),
        warnings=warnings,
    )


def _cell(value: Optional[float]) -> str:
    return "nan" if value is None else repr(float(value))


def write_csv(result: SweepResult, out: TextIO) -> None:
    """
    Spectrum table: grid column, one intensity column per detector in
    declaration order, then amplitude columns if present. An impulse table,
    when present, follows after a blank line.
    """
    writer = csv.writer(out, lineterminator="\n")
    grid_col = "wavelength_m" if result.grid_kind == "wavelength" else "omega_rad_s"
    header = [grid_col] + [f"I:{d.port}" for d in result.detectors]
    amp_keys: Sequence[str] = ("ex_re", "ex_im", "ey_re", "ey_im")
    with_amps = [d for d in result.detectors if d.ex_re is not None]
    for d in with_amps:
        header.extend(f"{k}:{d.port}" for k in amp_keys)
    writer.writerow(header)
    for i, x in enumerate(result.grid):
        row = [repr(x)] + [_cell(d.intensity[i]) for d in result.detectors]
        for d in with_amps:
            row.extend(_cell(getattr(d, k)[i]) for k in amp_keys)
        writer.writerow(row)
    if result.tau is not None:
        writer.writerow([])
        writer.writerow(["tau_s"] + [f"|h|:{d.port}" for d in result.detectors])
        for i, t in enumerate(result.tau):
            writer.writerow([repr(t)] + [_cell(d.impulse_magnitude[i]) for d in result.detectors])


def write_json(result: SweepResult, out: TextIO) -> None:
    out.write(result.model_dump_json(indent=2))
    out.write("\n")
