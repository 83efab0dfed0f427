"""
Netlist reader/writer: parse, validate and serialize circuit descriptions.

DEVELOPER NOTE: Before making changes to the grammar, read NETLIST_SPEC.md
in the project root. It is the ground truth for the netlist format.

Grammar (one directive per line, '#' starts a comment):
    component <name> <type> [key=value ...]
    connect   <name>.<port#> <name>.<port#>
    source    <name>.<port#> pol=<ex_re>,<ex_im>,<ey_re>,<ey_im>
    detect    <name>.<port#>
    sweep     wavelength <start> <stop> <points>
    sweep     frequency  <start> <stop> <points>
    sweep     single     <wavelength>
"""

import cmath
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator

from photonet.component_library import ComponentSpec, make_component, port_count
from photonet.errors import ComponentError, NetlistSyntaxError, NetlistValidationError
from photonet.network_assembly import ConnectionMap, PortMap

logger = logging.getLogger(__name__)

POLARIZATION_NORM_WARN = 0.01

# netlist key -> spec field, per component type
PARAMETER_KEYS: Dict[str, Dict[str, str]] = {
    "waveguide": {
        "n": "index_n",
        "length": "length_z",
        "dn": "birefringence_dn",
        "axis": "axis_angle",
        "alpha": "amplitude_loss_alpha",
        "phi": "extra_phase_phi",
    },
    "coupler": {"kappa": "power_coupling_kappa", "loss": "excess_amplitude_loss"},
    "mirror": {"r": "amplitude_reflectance_r"},
    "rotator": {"theta": "angle_theta"},
    "retarder": {"delta": "retardance_delta", "axis": "axis_angle"},
    "polarizer": {"axis": "axis_angle", "extinction": "extinction_amplitude"},
    "splice": {"t": "amplitude_transmission", "theta": "rotation_angle", "r": "backreflection_amplitude"},
}

_COMPLEX_FIELDS = {"amplitude_reflectance_r", "backreflection_amplitude"}

# divisors, not multipliers: 1550/1e9 rounds to the same double as 1.55e-6
_LENGTH_DIVISORS = {"nm": 1e9, "um": 1e6, "m": 1.0}

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_PORT_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\.(\d+)$")
_QUANTITY_RE = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)(nm|um|m)?$")


class _Sweep(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class WavelengthSweep(_Sweep):
    kind: Literal["wavelength"] = "wavelength"
    start: float = Field(gt=0)  # m
    stop: float = Field(gt=0)
    points: int = Field(ge=1)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.start < self.stop:
            raise ValueError("sweep start must be below stop")
        return self


class FrequencySweep(_Sweep):
    kind: Literal["frequency"] = "frequency"
    start: float = Field(gt=0)  # rad/s
    stop: float = Field(gt=0)
    points: int = Field(ge=1)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.start < self.stop:
            raise ValueError("sweep start must be below stop")
        return self


class SingleWavelength(_Sweep):
    kind: Literal["single"] = "single"
    wavelength: float = Field(gt=0)  # m


SweepConfig = Annotated[Union[WavelengthSweep, FrequencySweep, SingleWavelength], Field(discriminator="kind")]
_SWEEP_ADAPTER = TypeAdapter(SweepConfig)


@dataclass(frozen=True)
class PortRef:
    instance: str
    port: int

    def __str__(self) -> str:
        return f"{self.instance}.{self.port}"


@dataclass(frozen=True)
class ComponentInstance:
    name: str
    spec: ComponentSpec
    line: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class Connection:
    a: PortRef
    b: PortRef
    line: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class SourceLaunch:
    port: PortRef
    polarization: Tuple[complex, complex] = (1 + 0j, 0j)
    line: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class DetectorTap:
    port: PortRef
    line: Optional[int] = field(default=None, compare=False)


@dataclass(frozen=True)
class CircuitDescription:
    """Parsed netlist. Structural equality ignores source line numbers."""
    components: Tuple[ComponentInstance, ...] = ()
    connections: Tuple[Connection, ...] = ()
    sources: Tuple[SourceLaunch, ...] = ()
    detectors: Tuple[DetectorTap, ...] = ()
    sweep: Optional[SweepConfig] = None

    def component(self, name: str) -> ComponentInstance:
        for comp in self.components:
            if comp.name == name:
                return comp
        raise NetlistValidationError("unknown component", instance=name)


@dataclass(frozen=True)
class ValidationReport:
    port_map: PortMap
    connections: ConnectionMap
    warnings: Tuple[str, ...]


def parse_quantity(token: str, line: Optional[int] = None) -> float:
    """Real number with optional length suffix (m, um, nm), returned in SI units."""
    match = _QUANTITY_RE.match(token.strip())
    if not match:
        raise NetlistSyntaxError(f"malformed number '{token}'", line)
    value, unit = match.groups()
    result = float(value) / _LENGTH_DIVISORS[unit or "m"]
    if not math.isfinite(result):
        raise NetlistSyntaxError(f"number '{token}' is not finite", line)
    return result


def parse_complex(token: str, line: Optional[int] = None) -> complex:
    """Complex literal such as 0.9, -0.1j or 0.9+0.05j."""
    try:
        value = complex(token.strip().replace(" ", ""))
    except ValueError:
        raise NetlistSyntaxError(f"malformed complex number '{token}'", line) from None
    if not cmath.isfinite(value):
        raise NetlistSyntaxError(f"complex number '{token}' is not finite", line)
    return value


def _parse_port(token: str, line: int) -> PortRef:
    match = _PORT_RE.match(token)
    if not match:
        raise NetlistSyntaxError(f"expected <name>.<port#>, got '{token}'", line)
    return PortRef(match.group(1), int(match.group(2)))


def _parse_component(args: List[str], line: int) -> ComponentInstance:
    if len(args) < 2:
        raise NetlistSyntaxError("component needs a name and a type", line)
    name, kind = args[0], args[1].lower()
    if not _NAME_RE.match(name):
        raise NetlistSyntaxError(f"invalid component name '{name}'", line)
    if kind not in PARAMETER_KEYS:
        raise NetlistSyntaxError(f"unknown component type '{args[1]}'", line)
    keys = PARAMETER_KEYS[kind]
    params: Dict[str, object] = {}
    for item in args[2:]:
        if "=" not in item:
            raise NetlistSyntaxError(f"expected key=value, got '{item}'", line)
        key, value = item.split("=", 1)
        if key not in keys:
            raise NetlistSyntaxError(f"unknown key '{key}' for {kind}", line)
        target = keys[key]
        if target in params:
            raise NetlistSyntaxError(f"key '{key}' given twice", line)
        params[target] = parse_complex(value, line) if target in _COMPLEX_FIELDS else parse_quantity(value, line)
    try:
        spec = make_component(kind, **params)
    except ComponentError as exc:
        raise NetlistSyntaxError(f"{name}: {exc}", line) from exc
    return ComponentInstance(name, spec, line)


def _parse_source(args: List[str], line: int) -> SourceLaunch:
    if not 1 <= len(args) <= 2:
        raise NetlistSyntaxError("source needs <name>.<port#> [pol=ex_re,ex_im,ey_re,ey_im]", line)
    port = _parse_port(args[0], line)
    if len(args) == 1:
        return SourceLaunch(port, line=line)
    key, _, value = args[1].partition("=")
    if key != "pol":
        raise NetlistSyntaxError(f"unknown key '{key}' for source", line)
    parts = value.split(",")
    if len(parts) != 4:
        raise NetlistSyntaxError("pol needs four reals: ex_re,ex_im,ey_re,ey_im", line)
    ex_re, ex_im, ey_re, ey_im = (parse_quantity(p, line) for p in parts)
    return SourceLaunch(port, (complex(ex_re, ex_im), complex(ey_re, ey_im)), line)


def _parse_sweep(args: List[str], line: int) -> SweepConfig:
    if not args:
        raise NetlistSyntaxError("sweep needs a kind: wavelength, frequency or single", line)
    kind = args[0].lower()
    if kind in ("wavelength", "frequency"):
        if len(args) != 4:
            raise NetlistSyntaxError(f"sweep {kind} needs <start> <stop> <points>", line)
        try:
            points = int(args[3])
        except ValueError:
            raise NetlistSyntaxError(f"malformed point count '{args[3]}'", line) from None
        data = {"kind": kind, "start": parse_quantity(args[1], line), "stop": parse_quantity(args[2], line), "points": points}
    elif kind == "single":
        if len(args) != 2:
            raise NetlistSyntaxError("sweep single needs <wavelength>", line)
        data = {"kind": kind, "wavelength": parse_quantity(args[1], line)}
    else:
        raise NetlistSyntaxError(f"unknown sweep kind '{args[0]}'", line)
    try:
        return _SWEEP_ADAPTER.validate_python(data)
    except ValidationError as exc:
        msgs = "; ".join(err["msg"] for err in exc.errors())
        raise NetlistSyntaxError(f"invalid sweep: {msgs}", line) from exc


def parse_netlist(text: str) -> CircuitDescription:
    """Parse netlist text; syntax errors carry the offending line number."""
    components: List[ComponentInstance] = []
    connections: List[Connection] = []
    sources: List[SourceLaunch] = []
    detectors: List[DetectorTap] = []
    sweep: Optional[SweepConfig] = None
    names = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        directive, *args = content.split()
        directive = directive.lower()
        if directive == "component":
            comp = _parse_component(args, lineno)
            if comp.name in names:
                raise NetlistSyntaxError(f"duplicate component name '{comp.name}'", lineno)
            names.add(comp.name)
            components.append(comp)
        elif directive == "connect":
            if len(args) != 2:
                raise NetlistSyntaxError("connect needs two <name>.<port#> references", lineno)
            a, b = _parse_port(args[0], lineno), _parse_port(args[1], lineno)
            if a == b:
                raise NetlistSyntaxError(f"self-connection of {a}", lineno)
            connections.append(Connection(a, b, lineno))
        elif directive == "source":
            sources.append(_parse_source(args, lineno))
        elif directive == "detect":
            if len(args) != 1:
                raise NetlistSyntaxError("detect needs one <name>.<port#> reference", lineno)
            detectors.append(DetectorTap(_parse_port(args[0], lineno), lineno))
        elif directive == "sweep":
            if sweep is not None:
                raise NetlistSyntaxError("only one sweep directive is allowed", lineno)
            sweep = _parse_sweep(args, lineno)
        else:
            raise NetlistSyntaxError(f"unknown directive '{directive}'", lineno)

    circuit = CircuitDescription(tuple(components), tuple(connections), tuple(sources), tuple(detectors), sweep)
    logger.info(
        "parsed netlist: %d components, %d connections, %d sources, %d detectors",
        len(components), len(connections), len(sources), len(detectors),
    )
    return circuit


def validate(circuit: CircuitDescription) -> ValidationReport:
    """
    Number ports in declaration order and check references and port usage.
    Unconnected ports without a source or detector are reported as warnings;
    they behave as open, reflectionless exits.
    """
    counts = []
    seen_names = set()
    for comp in circuit.components:
        if comp.name in seen_names:
            raise NetlistValidationError("duplicate component name", comp.line, comp.name)
        seen_names.add(comp.name)
        counts.append((comp.name, port_count(comp.spec)))
    port_map = PortMap.from_port_counts(counts)

    def resolve(ref: PortRef, line: Optional[int], role: str) -> int:
        if ref.instance not in seen_names:
            raise NetlistValidationError(f"{role} references unknown component", line, ref.instance)
        if not port_map.has_port(ref.instance, ref.port):
            raise NetlistValidationError(f"{role} references nonexistent port {ref.port}", line, ref.instance)
        return port_map.global_port(ref.instance, ref.port)

    used: Dict[int, Connection] = {}
    pairs = []
    for conn in circuit.connections:
        ga, gb = resolve(conn.a, conn.line, "connect"), resolve(conn.b, conn.line, "connect")
        if ga == gb:
            raise NetlistValidationError(f"self-connection of {conn.a}", conn.line, conn.a.instance)
        for ref, g in ((conn.a, ga), (conn.b, gb)):
            if g in used:
                raise NetlistValidationError(
                    f"port {ref} already connected on line {used[g].line}", conn.line, ref.instance
                )
            used[g] = conn
        pairs.append((ga, gb))
    connections = ConnectionMap.from_pairs(pairs)

    warnings: List[str] = []
    source_ports = set()
    for src in circuit.sources:
        g = resolve(src.port, src.line, "source")
        if g in used:
            raise NetlistValidationError(f"source port {src.port} is connected", src.line, src.port.instance)
        if g in source_ports:
            raise NetlistValidationError(f"second source on port {src.port}", src.line, src.port.instance)
        source_ports.add(g)
        norm = sum(abs(e) ** 2 for e in src.polarization)
        if abs(norm - 1.0) > POLARIZATION_NORM_WARN:
            warnings.append(f"line {src.line}: source {src.port} launch intensity {norm:.6g} is not 1")

    detector_ports = {resolve(det.port, det.line, "detect") for det in circuit.detectors}

    for comp in circuit.components:
        for local, g in enumerate(port_map.ports_of(comp.name), start=1):
            if g not in used and g not in source_ports and g not in detector_ports:
                warnings.append(f"port {comp.name}.{local} is unterminated (open, reflectionless exit)")

    for w in warnings:
        logger.warning(w)
    logger.info("validated circuit: m=%d, %d connections", port_map.total_ports_m, len(pairs))
    return ValidationReport(port_map, connections, tuple(warnings))


def format_real(x: float) -> str:
    """Shortest round-trip repr with a compact exponent (1.55e-6, not 1.55e-06)."""
    s = repr(float(x))
    if "e" in s:
        mantissa, exponent = s.split("e")
        s = f"{mantissa}e{int(exponent)}"
    return s


def format_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return format_real(z.real)
    sign = "-" if z.imag < 0 else "+"
    return f"{format_real(z.real)}{sign}{format_real(abs(z.imag))}j"


def _component_line(comp: ComponentInstance) -> str:
    kind = comp.spec.kind
    params = []
    for key, target in PARAMETER_KEYS[kind].items():
        value = getattr(comp.spec, target)
        params.append(f"{key}={format_complex(value) if target in _COMPLEX_FIELDS else format_real(value)}")
    return " ".join(["component", comp.name, kind] + params)


def _sweep_line(sweep: SweepConfig) -> str:
    if isinstance(sweep, SingleWavelength):
        return f"sweep single {format_real(sweep.wavelength)}"
    return f"sweep {sweep.kind} {format_real(sweep.start)} {format_real(sweep.stop)} {sweep.points}"


def serialize(circuit: CircuitDescription) -> str:
    """Canonical text form; parse_netlist(serialize(c)) == c."""
    lines = ["# photonet netlist (canonical form, SI units)"]
    lines.extend(_component_line(c) for c in circuit.components)
    lines.extend(f"connect {c.a} {c.b}" for c in circuit.connections)
    for src in circuit.sources:
        ex, ey = src.polarization
        pol = ",".join(format_real(v) for v in (ex.real, ex.imag, ey.real, ey.imag))
        lines.append(f"source {src.port} pol={pol}")
    lines.extend(f"detect {d.port}" for d in circuit.detectors)
    if circuit.sweep is not None:
        lines.append(_sweep_line(circuit.sweep))
    return "\n".join(lines) + "\n"
