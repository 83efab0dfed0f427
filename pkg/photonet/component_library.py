"""
Component catalog: Jones matrices and scattering blocks for waveguides,
couplers, mirrors, rotators, retarders, polarizers and splices.

Conventions (shared by every analytic check in the test suite):
  - forward propagation multiplies by exp(+i·ω·n·z/c); the −iωt term is dropped
  - ports carry two coordinates each, x before y
  - 2-port blocks use the basis [Aₓ, A_y, Bₓ, B_y]; coupler ports 1,2 sit on
    the left face and 3,4 on the right face
  - every catalog element is reciprocal: the backward Jones matrix is the
    transpose of the forward one in the shared x/y frame
  - coupler cross paths carry +i; mirrors transmit with +i (symmetric beamsplitter)
"""

import cmath
import logging
from dataclasses import dataclass
from typing import Annotated, Callable, Dict, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator
from scipy.constants import c as SPEED_OF_LIGHT

from photonet.errors import ComponentError, DimensionError, PassivityError
from photonet.matrix_core import ComplexMatrix, as_matrix

logger = logging.getLogger(__name__)

PASSIVITY_TOLERANCE = 1e-9

_I2 = np.eye(2, dtype=np.complex128)
_Z2 = np.zeros((2, 2), dtype=np.complex128)


class _Spec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)


class Waveguide(_Spec):
    """Birefringent, lossy section of guide."""
    kind: Literal["waveguide"] = "waveguide"
    index_n: float = Field(1.0, gt=0)
    length_z: float = Field(0.0, ge=0)  # m
    birefringence_dn: float = 0.0
    axis_angle: float = 0.0  # rad
    amplitude_loss_alpha: float = Field(0.0, ge=0)  # Np/m
    extra_phase_phi: float = 0.0  # rad


class Coupler(_Spec):
    kind: Literal["coupler"] = "coupler"
    power_coupling_kappa: float = Field(0.5, ge=0, le=1)
    excess_amplitude_loss: float = Field(0.0, ge=0, le=1)


class Mirror(_Spec):
    kind: Literal["mirror"] = "mirror"
    amplitude_reflectance_r: complex = 0j

    @field_validator("amplitude_reflectance_r")
    @classmethod
    def _check_r(cls, v: complex) -> complex:
        if not cmath.isfinite(v):
            raise ValueError("reflectance must be finite")
        if abs(v) > 1.0:
            raise ValueError(f"|r| = {abs(v):.6g} exceeds 1")
        return v


class Rotator(_Spec):
    kind: Literal["rotator"] = "rotator"
    angle_theta: float = 0.0


class Retarder(_Spec):
    kind: Literal["retarder"] = "retarder"
    retardance_delta: float = 0.0
    axis_angle: float = 0.0


class Polarizer(_Spec):
    kind: Literal["polarizer"] = "polarizer"
    axis_angle: float = 0.0
    extinction_amplitude: float = Field(0.0, ge=0, le=1)


class Splice(_Spec):
    """Non-ideal joint: loss, axis misalignment and backreflection."""
    kind: Literal["splice"] = "splice"
    amplitude_transmission: float = Field(1.0, gt=0, le=1)
    rotation_angle: float = 0.0
    backreflection_amplitude: complex = 0j

    @field_validator("backreflection_amplitude")
    @classmethod
    def _check_r(cls, v: complex) -> complex:
        if not cmath.isfinite(v):
            raise ValueError("backreflection must be finite")
        if abs(v) >= 1.0:
            raise ValueError(f"|backreflection| = {abs(v):.6g} must be below 1")
        return v


ComponentSpec = Annotated[
    Union[Waveguide, Coupler, Mirror, Rotator, Retarder, Polarizer, Splice],
    Field(discriminator="kind"),
]

_SPEC_ADAPTER = TypeAdapter(ComponentSpec)

COMPONENT_TYPES = ("waveguide", "coupler", "mirror", "rotator", "retarder", "polarizer", "splice")


def make_component(kind: str, **params) -> ComponentSpec:
    """Build a validated ComponentSpec; range violations raise ComponentError."""
    if kind not in COMPONENT_TYPES:
        raise ComponentError(f"unknown component type '{kind}'")
    try:
        return _SPEC_ADAPTER.validate_python({"kind": kind, **params})
    except ValidationError as exc:
        details = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'][1:]) or kind}: {err['msg']}" for err in exc.errors()
        )
        raise ComponentError(f"invalid {kind} parameters: {details}") from exc


def port_count(spec: ComponentSpec) -> int:
    return 4 if isinstance(spec, Coupler) else 2


@dataclass(frozen=True)
class ScatteringBlock:
    """
    Bidirectional scattering matrix of one component, dimension 2·port_count.
    Output amplitudes = matrix · input amplitudes. Construction checks passivity.
    """
    matrix: ComplexMatrix

    def __post_init__(self):
        m = as_matrix(self.matrix).copy()
        if m.shape not in ((4, 4), (8, 8)):
            raise DimensionError(f"scattering block must be 4x4 or 8x8, got {m.shape[0]}x{m.shape[1]}")
        s_max = max_singular_value(m)
        if s_max > 1.0 + PASSIVITY_TOLERANCE:
            raise PassivityError(f"block has gain: largest singular value {s_max:.12g} > 1", s_max)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def port_count(self) -> int:
        return self.matrix.shape[0] // 2


def max_singular_value(m: ComplexMatrix) -> float:
    return float(np.linalg.norm(m, 2))


def is_reciprocal(block: ScatteringBlock, tol: float = 1e-12) -> bool:
    """Reciprocal elements have symmetric scattering matrices."""
    m = block.matrix
    return bool(np.max(np.abs(m - m.T)) <= tol)


def jones_rotator(theta: float) -> ComplexMatrix:
    """Rotation matrix [[cos θ, −sin θ], [sin θ, cos θ]]."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _in_axes(diagonal: ComplexMatrix, axis_angle: float) -> ComplexMatrix:
    """Express a matrix that is diagonal in the element's own axes in the x/y frame."""
    r = jones_rotator(axis_angle)
    return r @ diagonal @ r.T


def jones_waveguide(spec: Waveguide, omega: float) -> ComplexMatrix:
    """
    Forward Jones matrix of a waveguide section at radian frequency omega.
    Fast axis: exp(i·ω·n·z/c − α·z − i·φ); slow axis uses n + Δn.
    """
    if omega <= 0:
        raise ComponentError(f"optical frequency must be positive, got {omega}")
    if spec.length_z < 0:
        raise ComponentError(f"waveguide length must be non-negative, got {spec.length_z}")
    z = spec.length_z
    k0z = omega * z / SPEED_OF_LIGHT
    common = -spec.amplitude_loss_alpha * z - 1j * spec.extra_phase_phi
    fast = np.exp(1j * k0z * spec.index_n + common)
    slow = np.exp(1j * k0z * (spec.index_n + spec.birefringence_dn) + common)
    return _in_axes(np.diag([fast, slow]).astype(np.complex128), spec.axis_angle)


def jones_retarder(spec: Retarder) -> ComplexMatrix:
    """Linear retarder: phase δ on the axis perpendicular to axis_angle."""
    d = np.diag([1.0, np.exp(1j * spec.retardance_delta)]).astype(np.complex128)
    return _in_axes(d, spec.axis_angle)


def jones_polarizer(spec: Polarizer) -> ComplexMatrix:
    """Partial linear polarizer passing axis_angle, leaking extinction_amplitude."""
    d = np.diag([1.0, spec.extinction_amplitude]).astype(np.complex128)
    return _in_axes(d, spec.axis_angle)


def two_port_block(
    forward: ComplexMatrix,
    backward: ComplexMatrix,
    refl_at_a: ComplexMatrix,
    refl_at_b: ComplexMatrix,
) -> ScatteringBlock:
    """
    4×4 block [[refl_at_a, backward], [forward, refl_at_b]] in basis [Aₓ, A_y, Bₓ, B_y].
    forward maps input at A to output at B; backward maps input at B to output at A.
    """
    parts = [as_matrix(p) for p in (forward, backward, refl_at_a, refl_at_b)]
    for p in parts:
        if p.shape != (2, 2):
            raise DimensionError(f"two-port sub-blocks must be 2x2, got {p.shape}")
    fw, bw, ra, rb = parts
    return ScatteringBlock(np.block([[ra, bw], [fw, rb]]))


def reciprocal_block(jones: ComplexMatrix) -> ScatteringBlock:
    """Reflectionless reciprocal 2-port element with forward Jones matrix `jones`."""
    jones = as_matrix(jones)
    return two_port_block(jones, jones.T, _Z2, _Z2)


def coupler_block(spec: Coupler, omega: float) -> ScatteringBlock:
    """
    8×8 directional coupler. Bar amplitude γ√(1−κ) on 1↔3 and 2↔4, cross
    amplitude i·γ√κ on 1↔4 and 2↔3, no reflection, polarization independent.
    omega is accepted for a uniform builder signature; κ is frequency-flat.
    """
    kappa = spec.power_coupling_kappa
    if not 0.0 <= kappa <= 1.0:
        raise ComponentError(f"coupling ratio must lie in [0, 1], got {kappa}")
    gamma = 1.0 - spec.excess_amplitude_loss
    bar = gamma * np.sqrt(1.0 - kappa)
    cross = 1j * gamma * np.sqrt(kappa)
    ports = np.zeros((4, 4), dtype=np.complex128)
    ports[2, 0] = ports[0, 2] = bar
    ports[3, 1] = ports[1, 3] = bar
    ports[3, 0] = ports[0, 3] = cross
    ports[2, 1] = ports[1, 2] = cross
    return ScatteringBlock(np.kron(ports, _I2))


def mirror_block(spec: Mirror) -> ScatteringBlock:
    """Partially reflecting mirror: r from both faces, i·t·e^{i·arg r} through."""
    r = complex(spec.amplitude_reflectance_r)
    t = np.sqrt(max(0.0, 1.0 - abs(r) ** 2))
    phase = r / abs(r) if r != 0 else 1.0
    trans = 1j * t * phase * _I2
    return two_port_block(trans, trans, r * _I2, r * _I2)


def splice_block(spec: Splice) -> ScatteringBlock:
    """
    Splice with transmission t·R(θ), reflection r from face A and −r* from
    face B. The sign pair keeps |r|² + t² ≤ 1 sufficient for passivity.
    """
    r = complex(spec.backreflection_amplitude)
    fw = spec.amplitude_transmission * jones_rotator(spec.rotation_angle)
    return two_port_block(fw, fw.T, r * _I2, -np.conj(r) * _I2)


_BUILDERS: Dict[type, Callable[[ComponentSpec, float], ScatteringBlock]] = {
    Waveguide: lambda s, w: reciprocal_block(jones_waveguide(s, w)),
    Coupler: coupler_block,
    Mirror: lambda s, w: mirror_block(s),
    Rotator: lambda s, w: reciprocal_block(jones_rotator(s.angle_theta)),
    Retarder: lambda s, w: reciprocal_block(jones_retarder(s)),
    Polarizer: lambda s, w: reciprocal_block(jones_polarizer(s)),
    Splice: lambda s, w: splice_block(s),
}


def component_block(spec: ComponentSpec, omega: float) -> ScatteringBlock:
    """Scattering block of any catalog component at radian frequency omega."""
    try:
        builder = _BUILDERS[type(spec)]
    except KeyError:
        raise ComponentError(f"no scattering model for {type(spec).__name__}") from None
    return builder(spec, omega)


def is_frequency_dependent(spec: ComponentSpec) -> bool:
    """Only waveguides carry phase that varies with ω."""
    return isinstance(spec, Waveguide)
