"""
Intensities, detector photocurrent and broadband-source response.

Transforms use a = (2π)^-1/2 on a uniform grid ω_k = ω₀ + kΔω with the dual
grid τ_j = jΔτ, Δτ = 2π/(NΔω), stored in ascending τ order:

    ĥ(τ) = a·Δω·Σ_k Ĥ(ω_k)·exp(−iω_kτ)      (to τ)
    Ĥ(ω) = a·Δτ·Σ_j ĥ(τ_j)·exp(+iω τ_j)     (back to ω)

The kernel sign follows the exp(+iωnz/c) propagation convention, so a
transfer function exp(iωT) maps to an impulse at τ = +T. The pair is an exact
round trip and conserves Σ|·|²Δ (Parseval).

A broadband source f(τ) passes through the impulse response: the output
field is a·(ĥ ⊛ f)(τ), whose spectrum is Ĥ_F(ω) = F(ω)·Ĥ(ω). A monochromatic
F = δ(ω−ω₀) sifts Ĥ at ω₀, which is the single-frequency result.
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid

from photonet.errors import DimensionError, SpectrumError
from photonet.matrix_core import as_vector
from photonet.port_reduction import extract_jones

logger = logging.getLogger(__name__)

A_NORM = (2.0 * np.pi) ** -0.5
UNIFORM_GRID_RTOL = 1e-9
NORMALIZATION_TOL = 1e-9


def check_uniform_grid(omega_grid: ArrayLike) -> float:
    """Validate an ascending uniform grid of ≥ 2 points; returns its spacing."""
    grid = np.asarray(omega_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise SpectrumError("frequency grid needs at least 2 points")
    steps = np.diff(grid)
    step = (grid[-1] - grid[0]) / (grid.size - 1)
    if step <= 0:
        raise SpectrumError("frequency grid must be ascending")
    # linspace round-off is a few ulps of the largest frequency
    tol = max(UNIFORM_GRID_RTOL * step, 8.0 * float(np.spacing(np.max(np.abs(grid)))))
    if np.max(np.abs(steps - step)) > tol:
        raise SpectrumError("frequency grid is not uniform")
    return float(step)


@dataclass(frozen=True)
class MonochromaticSource:
    """F(ω) = δ(ω − ω₀)."""
    omega0: float

    def __post_init__(self):
        if not self.omega0 > 0:
            raise SpectrumError(f"source frequency must be positive, got {self.omega0}")


@dataclass(frozen=True)
class SampledSource:
    """Complex amplitude spectrum on a uniform grid with Σ|F|²Δω = 1."""
    omega_grid: NDArray[np.float64]
    amplitudes: NDArray[np.complex128]

    def __post_init__(self):
        grid = np.array(self.omega_grid, dtype=float)
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != grid.shape:
            raise SpectrumError(f"{amps.size} amplitudes for {grid.size} grid points")
        step = check_uniform_grid(grid)
        energy = float(np.sum(np.abs(amps) ** 2) * step)
        if abs(energy - 1.0) > NORMALIZATION_TOL:
            raise SpectrumError(f"source spectrum is not normalized (Σ|F|²Δω = {energy:.12g})")
        grid.setflags(write=False)
        amps.setflags(write=False)
        object.__setattr__(self, "omega_grid", grid)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def step(self) -> float:
        return float(self.omega_grid[1] - self.omega_grid[0])


SourceSpectrum = Union[MonochromaticSource, SampledSource]


def normalized_source(omega_grid: ArrayLike, amplitudes: ArrayLike) -> SampledSource:
    """Scale arbitrary samples so that Σ|F|²Δω = 1."""
    grid = np.asarray(omega_grid, dtype=float)
    amps = np.asarray(amplitudes, dtype=np.complex128)
    step = check_uniform_grid(grid)
    energy = np.sum(np.abs(amps) ** 2) * step
    if not energy > 0:
        raise SpectrumError("source spectrum has no power on the grid")
    return SampledSource(grid, amps / np.sqrt(energy))


def gaussian_source(omega0: float, sigma: float, omega_grid: ArrayLike) -> SampledSource:
    """Gaussian amplitude spectrum exp(−(ω−ω₀)²/2σ²), normalized on the grid."""
    if sigma <= 0:
        raise SpectrumError(f"linewidth must be positive, got {sigma}")
    grid = np.asarray(omega_grid, dtype=float)
    return normalized_source(grid, np.exp(-((grid - omega0) ** 2) / (2.0 * sigma ** 2)))


def resample_spectrum(source: SampledSource, omega_grid: ArrayLike) -> SampledSource:
    """Linear interpolation of F onto another grid that it fully covers."""
    grid = np.asarray(omega_grid, dtype=float)
    check_uniform_grid(grid)
    lo, hi = source.omega_grid[0], source.omega_grid[-1]
    slack = UNIFORM_GRID_RTOL * source.step
    if grid[0] < lo - slack or grid[-1] > hi + slack:
        raise SpectrumError(
            f"source grid [{lo:.6g}, {hi:.6g}] does not cover [{grid[0]:.6g}, {grid[-1]:.6g}]"
        )
    re = np.interp(grid, source.omega_grid, source.amplitudes.real)
    im = np.interp(grid, source.omega_grid, source.amplitudes.imag)
    return normalized_source(grid, re + 1j * im)


@dataclass(frozen=True)
class DetectorSpec:
    """Responsivity R(ω) ≥ 0 sampled on a grid (A/W, normalized units)."""
    omega_grid: NDArray[np.float64]
    responsivity: NDArray[np.float64]

    def __post_init__(self):
        grid = np.atleast_1d(np.array(self.omega_grid, dtype=float))
        resp = np.atleast_1d(np.array(self.responsivity, dtype=float))
        if grid.shape != resp.shape or grid.ndim != 1:
            raise SpectrumError("responsivity samples must match the detector grid")
        if np.any(resp < 0) or not np.all(np.isfinite(resp)):
            raise SpectrumError("responsivity must be finite and non-negative")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise SpectrumError("detector grid must be ascending")
        object.__setattr__(self, "omega_grid", grid)
        object.__setattr__(self, "responsivity", resp)

    @classmethod
    def flat(cls, omega_grid: ArrayLike, value: float = 1.0) -> "DetectorSpec":
        grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
        return cls(grid, np.full(grid.shape, float(value)))

    def responsivity_at(self, omega: ArrayLike) -> NDArray[np.float64]:
        """R on another grid; points outside the detector grid are a mismatch."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if self.omega_grid.size == 1:
            if not np.allclose(omega, self.omega_grid[0], rtol=UNIFORM_GRID_RTOL, atol=0.0):
                raise SpectrumError("single-point detector does not match the intensity grid")
            return np.full(omega.shape, self.responsivity[0])
        lo, hi = self.omega_grid[0], self.omega_grid[-1]
        slack = UNIFORM_GRID_RTOL * (hi - lo)
        if omega.min() < lo - slack or omega.max() > hi + slack:
            raise SpectrumError("intensity grid extends beyond the detector responsivity grid")
        return np.interp(omega, self.omega_grid, self.responsivity)


@dataclass(frozen=True)
class ImpulseResponse:
    """ĥ(τ) samples (leading axis τ, ascending) with the ω grid they came from."""
    tau_grid: NDArray[np.float64]
    h_samples: NDArray[np.complex128]
    omega_grid: NDArray[np.float64]
    a: float = A_NORM

    def __post_init__(self):
        if self.tau_grid.shape[0] != self.omega_grid.shape[0] or self.h_samples.shape[0] != self.tau_grid.shape[0]:
            raise SpectrumError("τ grid, samples and ω grid lengths differ")


def intensity(E: ArrayLike) -> float:
    """|Eₓ|² + |E_y|²."""
    E = as_vector(E)
    if E.shape != (2,):
        raise DimensionError(f"intensity needs a 2-vector, got {E.shape[0]} entries")
    return float(np.sum(E.real ** 2 + E.imag ** 2))


def intensity_at_port(k_out: int, j_in: int, H: ArrayLike, E_in: ArrayLike) -> float:
    """(I, I)|Â_k·Ĥ·Â_jᵀ·E_in|² for a launch at port j observed at port k."""
    E_in = as_vector(E_in)
    if E_in.shape != (2,):
        raise DimensionError(f"launch field must be a 2-vector, got {E_in.shape[0]} entries")
    return intensity(extract_jones(k_out, j_in, H) @ E_in)


def photocurrent(detector: DetectorSpec, omega_grid: ArrayLike, intensity_samples: ArrayLike) -> float:
    """
    Ideal photocurrent ∫R(ω)·I(ω)dω by the trapezoid rule.
    A single-point spectrum is a delta line: the result is R(ω₀)·I(ω₀).
    """
    grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    values = np.atleast_1d(np.asarray(intensity_samples, dtype=float))
    if grid.shape != values.shape:
        raise SpectrumError(f"{values.size} intensity samples for {grid.size} grid points")
    resp = detector.responsivity_at(grid)
    if grid.size == 1:
        return float(resp[0] * values[0])
    return float(trapezoid(resp * values, grid))


def _tau_grid(n: int, d_omega: float) -> NDArray[np.float64]:
    return np.fft.fftshift(np.fft.fftfreq(n, d=d_omega / (2.0 * np.pi)))


def impulse_response(omega_grid: ArrayLike, H_samples: ArrayLike) -> ImpulseResponse:
    """
    Element-wise transform of Ĥ(ω) samples (leading axis ω) to ĥ(τ).
    Power-of-two lengths are fastest but not required.
    """
    grid = np.asarray(omega_grid, dtype=float)
    d_omega = check_uniform_grid(grid)
    H = np.asarray(H_samples, dtype=np.complex128)
    if H.shape[0] != grid.size:
        raise SpectrumError(f"{H.shape[0]} samples for a {grid.size}-point grid")
    tau = _tau_grid(grid.size, d_omega)
    carrier = np.exp(-1j * grid[0] * tau).reshape((-1,) + (1,) * (H.ndim - 1))
    h = A_NORM * d_omega * carrier * np.fft.fftshift(np.fft.fft(H, axis=0), axes=0)
    return ImpulseResponse(tau_grid=tau, h_samples=h, omega_grid=grid)


def fourier_transform(response: ImpulseResponse) -> NDArray[np.complex128]:
    """Inverse of impulse_response: ĥ(τ) back to Ĥ(ω) on the original grid."""
    grid = response.omega_grid
    n = grid.size
    d_tau = 2.0 * np.pi / (n * (grid[1] - grid[0]))
    h = response.h_samples
    carrier = np.exp(1j * grid[0] * response.tau_grid).reshape((-1,) + (1,) * (h.ndim - 1))
    baseband = np.fft.ifftshift(h * carrier, axes=0)
    return A_NORM * d_tau * n * np.fft.ifft(baseband, axis=0)


def parseval_energy(samples: ArrayLike, step: float) -> float:
    """Σ|x|²·step over every element."""
    x = np.asarray(samples)
    return float(np.sum(np.abs(x) ** 2) * step)


def _circular_convolve(h: NDArray[np.complex128], f: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Circular convolution along axis 0 (f broadcast over h's trailing axes)."""
    f = f.reshape((-1,) + (1,) * (h.ndim - 1))
    return np.fft.fft(np.fft.ifft(h, axis=0) * np.fft.ifft(f, axis=0), axis=0) * h.shape[0]


def time_domain_output(f: ImpulseResponse, h: ImpulseResponse) -> ImpulseResponse:
    """
    Field leaving the system, a·(ĥ ⊛ f)(τ), for source field f(τ) and impulse
    response ĥ(τ) on the same dual grid. The convolution runs on carrier-free
    (baseband) samples so that it is exactly periodic on the grid.
    """
    if not np.array_equal(f.omega_grid, h.omega_grid):
        raise SpectrumError("source and system were transformed on different grids")
    grid = h.omega_grid
    n = grid.size
    d_tau = 2.0 * np.pi / (n * (grid[1] - grid[0]))
    lift = np.exp(1j * grid[0] * h.tau_grid)

    def _baseband(r: ImpulseResponse) -> NDArray[np.complex128]:
        c = lift.reshape((-1,) + (1,) * (r.h_samples.ndim - 1))
        return np.fft.ifftshift(r.h_samples * c, axes=0)

    y = A_NORM * d_tau * _circular_convolve(_baseband(h), _baseband(f))
    y = np.fft.fftshift(y, axes=0) * np.conj(lift).reshape((-1,) + (1,) * (y.ndim - 1))
    return ImpulseResponse(tau_grid=h.tau_grid, h_samples=y, omega_grid=grid)


def _locate(grid: NDArray[np.float64], omega0: float) -> int:
    idx = int(np.argmin(np.abs(grid - omega0)))
    scale = (grid[1] - grid[0]) if grid.size > 1 else abs(omega0)
    if abs(grid[idx] - omega0) > UNIFORM_GRID_RTOL * abs(scale):
        raise SpectrumError(f"monochromatic line at {omega0:.9g} rad/s is not a grid sample")
    return idx


def broadband_response(
    source: SourceSpectrum,
    omega_grid: ArrayLike,
    H_samples: ArrayLike,
) -> Tuple[NDArray[np.float64], NDArray[np.complex128]]:
    """
    System response to a source spectrum. Returns (omega_grid, Ĥ_F samples).

    Sampled F: F is resampled onto the Ĥ grid, both are taken to τ, the source
    field is passed through ĥ(τ) and the result is taken back to ω.
    Monochromatic F: the delta sifts Ĥ at ω₀, giving a one-point spectrum.
    """
    grid = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    H = np.asarray(H_samples, dtype=np.complex128)
    if H.shape[0] != grid.size:
        raise SpectrumError(f"{H.shape[0]} samples for a {grid.size}-point grid")
    if isinstance(source, MonochromaticSource):
        idx = _locate(grid, source.omega0)
        return grid[idx:idx + 1].copy(), H[idx:idx + 1].copy()
    F = resample_spectrum(source, grid)
    if not np.allclose(F.omega_grid, grid, rtol=0.0, atol=UNIFORM_GRID_RTOL * F.step):
        raise SpectrumError("source and system grids differ after resampling")
    logger.debug("broadband response on %d-point grid, dω=%.6g rad/s", grid.size, F.step)
    f_tau = impulse_response(grid, F.amplitudes)
    h_tau = impulse_response(grid, H)
    return grid, fourier_transform(time_domain_output(f_tau, h_tau))


def port_spectrum(k_out: int, j_in: int, H_samples: ArrayLike) -> NDArray[np.complex128]:
    """Reduced Jones matrices Ĵ_kj(ω) for every grid sample, shape (N, 2, 2)."""
    H = np.asarray(H_samples, dtype=np.complex128)
    return np.stack([extract_jones(k_out, j_in, h) for h in H])


def broadband_photocurrent(
    k_out: int,
    j_in: int,
    source: SourceSpectrum,
    detector: DetectorSpec,
    omega_grid: ArrayLike,
    H_samples: ArrayLike,
    E_in: ArrayLike,
) -> float:
    """
    Photocurrent at port k for a launch at port j through the transform path.
    Ĥ is reduced to Ĵ_kj before transforming; Â does not depend on ω or τ.
    """
    E_in = as_vector(E_in)
    J = port_spectrum(k_out, j_in, H_samples)
    grid_f, J_F = broadband_response(source, omega_grid, J)
    fields = J_F @ E_in
    return photocurrent(detector, grid_f, np.sum(np.abs(fields) ** 2, axis=1))


def direct_photocurrent(
    k_out: int,
    j_in: int,
    source: SampledSource,
    detector: DetectorSpec,
    omega_grid: ArrayLike,
    H_samples: ArrayLike,
    E_in: ArrayLike,
) -> float:
    """∫R(ω)·|F(ω)|²·(I, I)|Ĵ_kj(ω)·E_in|² dω by quadrature on the Ĥ grid."""
    E_in = as_vector(E_in)
    grid = np.asarray(omega_grid, dtype=float)
    F = resample_spectrum(source, grid)
    J = port_spectrum(k_out, j_in, H_samples)
    fields = J @ E_in
    power = np.abs(F.amplitudes) ** 2 * np.sum(np.abs(fields) ** 2, axis=1)
    return photocurrent(detector, grid, power)


def fringe_visibility(samples: ArrayLike) -> float:
    """(max − min)/(max + min) of a non-negative series."""
    x = np.asarray(samples, dtype=float)
    hi, lo = float(np.max(x)), float(np.min(x))
    return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0

