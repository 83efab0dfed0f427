"""
Integration tests: whole networks against closed-form interferometer results.
"""

import logging

import numpy as np
import pytest
from scipy.constants import c

from photonet.component_library import (
    ScatteringBlock,
    component_block,
    make_component,
    port_count,
)
from photonet.errors import SingularMatrixError
from photonet.netlist_io import parse_netlist
from photonet.network_assembly import (
    ConnectionMap,
    PortMap,
    assemble_connection_matrix,
    assemble_global_scattering,
    build_system,
    chain_product,
    port_coordinates,
    solve_transfer,
    solve_transfer_literal,
    solve_transfer_with_condition,
)
from photonet.port_reduction import extract_jones
from photonet.response import (
    DetectorSpec,
    MonochromaticSource,
    broadband_photocurrent,
    broadband_response,
    direct_photocurrent,
    gaussian_source,
    intensity,
)
from photonet.sweep_service import prepare_circuit, run_sweep, sweep_grid

logger = logging.getLogger(__name__)

OMEGA = 2 * np.pi * c / 1550e-9


def _network(specs, connections, omega=OMEGA):
    """specs: [(name, spec)]; connections: [((name, port), (name, port))]."""
    port_map = PortMap.from_port_counts([(name, port_count(spec)) for name, spec in specs])
    blocks = [component_block(spec, omega) for _, spec in specs]
    pairs = [(port_map.global_port(*a), port_map.global_port(*b)) for a, b in connections]
    G = assemble_connection_matrix(ConnectionMap.from_pairs(pairs), port_map.total_ports_m)
    return build_system(blocks, port_map, G)


def _random_unitary(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _random_two_port(rng):
    kind = str(rng.choice(["waveguide", "rotator", "retarder", "polarizer", "splice"]))
    if kind == "waveguide":
        return make_component(
            "waveguide",
            index_n=rng.uniform(1.0, 2.0),
            length_z=rng.uniform(0, 1e-3),
            birefringence_dn=rng.uniform(0, 1e-3),
            axis_angle=rng.uniform(0, np.pi),
            amplitude_loss_alpha=rng.uniform(0, 100),
            extra_phase_phi=rng.uniform(0, 2 * np.pi),
        )
    if kind == "rotator":
        return make_component("rotator", angle_theta=rng.uniform(0, 2 * np.pi))
    if kind == "retarder":
        return make_component("retarder", retardance_delta=rng.uniform(0, 2 * np.pi), axis_angle=rng.uniform(0, np.pi))
    if kind == "polarizer":
        return make_component("polarizer", axis_angle=rng.uniform(0, np.pi), extinction_amplitude=rng.uniform(0, 0.3))
    return make_component("splice", amplitude_transmission=rng.uniform(0.5, 1.0), rotation_angle=rng.uniform(-0.3, 0.3))


def _crossing(x, y, level):
    """x where y first rises through level (linear interpolation)."""
    i = int(np.flatnonzero((y[:-1] < level) & (y[1:] >= level))[0])
    return x[i] + (level - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])


class TestChainOracle:
    """A linear chain of reflectionless elements reduces to the Jones chain product."""

    def test_random_chains(self):
        """Random two-port chains reproduce the Jones product."""
        rng = np.random.default_rng(2024)
        for trial in range(100):
            n = int(rng.integers(2, 7))
            specs = [(f"e{i}", _random_two_port(rng)) for i in range(n)]
            links = [((f"e{i}", 2), (f"e{i + 1}", 1)) for i in range(n - 1)]
            system = _network(specs, links)
            forward = [component_block(spec, OMEGA).matrix[2:4, 0:2] for _, spec in specs]
            J = extract_jones(2 * n, 1, system.H)
            assert np.max(np.abs(J - chain_product(forward))) < 1e-9, f"trial {trial}"

    def test_no_connections_returns_s(self):
        """Unconnected networks return S."""
        rng = np.random.default_rng(17)
        for _ in range(20):
            sizes = rng.choice([2, 4], size=int(rng.integers(1, 5)))
            blocks = [ScatteringBlock(rng.uniform(0.2, 1.0) * _random_unitary(rng, 2 * int(p))) for p in sizes]
            pm = PortMap.from_port_counts([(f"b{i}", int(p)) for i, p in enumerate(sizes)])
            S = assemble_global_scattering(blocks, pm)
            H = solve_transfer(S, np.zeros_like(S))
            assert np.max(np.abs(H - S)) < 1e-10


class TestLiteralRegression:
    """(I − S·G)·H = S agrees with (S⁻¹ − G)⁻¹ for invertible S."""

    def test_random_networks(self):
        """Linear-solve and inverse forms agree on random networks."""
        rng = np.random.default_rng(99)
        checked = 0
        for _ in range(30):
            sizes = [int(p) for p in rng.choice([2, 4], size=int(rng.integers(2, 5)))]
            blocks = [ScatteringBlock(rng.uniform(0.5, 0.95) * _random_unitary(rng, 2 * p)) for p in sizes]
            pm = PortMap.from_port_counts([(f"b{i}", p) for i, p in enumerate(sizes)])
            S = assemble_global_scattering(blocks, pm)
            if np.linalg.cond(S) >= 1e6:
                continue
            ports = rng.permutation(pm.total_ports_m) + 1
            n_pairs = int(rng.integers(1, pm.total_ports_m // 2 + 1))
            pairs = [(int(ports[2 * i]), int(ports[2 * i + 1])) for i in range(n_pairs)]
            G = assemble_connection_matrix(ConnectionMap.from_pairs(pairs), pm.total_ports_m)
            np.testing.assert_allclose(solve_transfer(S, G), solve_transfer_literal(S, G), rtol=0, atol=1e-8)
            checked += 1
        assert checked >= 20


class TestMachZehnder:
    """Two 50/50 couplers and two arms."""

    @staticmethod
    def _mzi(delta_phi):
        specs = [
            ("c1", make_component("coupler", power_coupling_kappa=0.5)),
            ("w1", make_component("waveguide")),
            ("w2", make_component("waveguide", extra_phase_phi=delta_phi)),
            ("c2", make_component("coupler", power_coupling_kappa=0.5)),
        ]
        links = [(("c1", 3), ("w1", 1)), (("w1", 2), ("c2", 1)), (("c1", 4), ("w2", 1)), (("w2", 2), ("c2", 2))]
        return _network(specs, links)

    def test_fringe(self):
        """Cross port follows cos²(Δφ/2)."""
        phases = np.linspace(0, 4 * np.pi, 512)
        cross, bar = [], []
        for dphi in phases:
            H = self._mzi(dphi).H
            cross.append(intensity(extract_jones(12, 1, H) @ [1, 0]))
            bar.append(intensity(extract_jones(11, 1, H) @ [1, 0]))
        cross, bar = np.array(cross), np.array(bar)
        assert np.max(np.abs(cross - np.cos(phases / 2) ** 2)) < 1e-9
        assert np.max(np.abs(bar - np.sin(phases / 2) ** 2)) < 1e-9
        assert np.max(np.abs(cross + bar - 1.0)) < 1e-12

    def test_extinction(self):
        """Cross port goes dark at Δφ = π and 3π."""
        peaks = [intensity(extract_jones(12, 1, self._mzi(p).H) @ [1, 0]) for p in (0.0, 2 * np.pi)]
        nulls = [intensity(extract_jones(12, 1, self._mzi(p).H) @ [1, 0]) for p in (np.pi, 3 * np.pi)]
        assert max(nulls) / min(peaks) < 1e-8

    def test_polarization_independent(self):
        """x and y launches see the same fringe."""
        J = extract_jones(12, 1, self._mzi(0.7).H)
        assert abs(J[0, 1]) < 1e-15 and abs(J[1, 0]) < 1e-15
        assert J[1, 1] == pytest.approx(J[0, 0])


class TestAllPassRing:
    """Coupler with t = 0.9 closing on itself through a 0.95 round-trip amplitude."""

    T_SELF = 0.9
    A_LOOP = 0.95

    def _through(self, theta):
        specs = [
            ("cr", make_component("coupler", power_coupling_kappa=1 - self.T_SELF ** 2)),
            ("ring", make_component("waveguide", extra_phase_phi=-theta)),
            ("loss", make_component("splice", amplitude_transmission=self.A_LOOP)),
        ]
        links = [(("cr", 4), ("ring", 1)), (("ring", 2), ("loss", 1)), (("loss", 2), ("cr", 2))]
        H = _network(specs, links).H
        return extract_jones(3, 1, H)[0, 0]

    def _analytic(self, theta):
        t, a = self.T_SELF, self.A_LOOP
        z = a * np.exp(1j * theta)
        return (t - z) / (1 - t * z)

    def test_through_port(self):
        """Through port matches the all-pass formula."""
        thetas = np.linspace(-np.pi, np.pi, 1000)
        sim = np.array([abs(self._through(th)) ** 2 for th in thetas])
        ref = np.abs(self._analytic(thetas)) ** 2
        assert np.max(np.abs(sim - ref)) < 1e-9

    def test_dip_width(self):
        """Resonance FWHM matches the analytic width within 1%."""
        t, a = self.T_SELF, self.A_LOOP
        t_min = ((t - a) / (1 - t * a)) ** 2
        t_max = ((t + a) / (1 + t * a)) ** 2
        half = 0.5 * (t_min + t_max)
        cos_half = (half * (1 + t * t * a * a) - t * t - a * a) / (2 * t * a * (half - 1))
        fwhm_ref = 2 * np.arccos(cos_half)

        thetas = np.linspace(0.0, 0.6, 3001)
        sim = np.array([abs(self._through(th)) ** 2 for th in thetas])
        fwhm = 2 * _crossing(thetas, sim, half)
        logger.info("ring FWHM %.6f rad, analytic %.6f rad", fwhm, fwhm_ref)
        assert fwhm == pytest.approx(fwhm_ref, rel=0.01)


class TestFabryPerot:
    """Two |r| = 0.9 mirrors around a lossless gap."""

    R_AMP = 0.9

    def _transmission(self, theta):
        specs = [
            ("m1", make_component("mirror", amplitude_reflectance_r=self.R_AMP)),
            ("gap", make_component("waveguide", extra_phase_phi=-theta)),
            ("m2", make_component("mirror", amplitude_reflectance_r=self.R_AMP)),
        ]
        links = [(("m1", 2), ("gap", 1)), (("gap", 2), ("m2", 1))]
        H = _network(specs, links).H
        return intensity(extract_jones(6, 1, H) @ [1, 0])

    def test_peak_transmission(self):
        """Symmetric lossless cavity transmits fully on resonance."""
        assert self._transmission(0.0) == pytest.approx(1.0, abs=1e-9)
        assert self._transmission(np.pi) == pytest.approx(1.0, abs=1e-9)

    def test_finesse(self):
        """Finesse matches the closed form for R = 0.81."""
        R = self.R_AMP ** 2
        thetas = np.linspace(0.0, 0.3, 3001)
        trans = np.array([self._transmission(th) for th in thetas])
        half_width = _crossing(thetas, -trans, -0.5)
        finesse = np.pi / (2 * half_width)  # free spectral range is π in single-pass phase
        logger.info("Fabry-Perot finesse %.4f", finesse)
        assert finesse == pytest.approx(np.pi * np.sqrt(R) / (1 - R), rel=0.01)
        assert finesse == pytest.approx(np.pi / (2 * np.arcsin((1 - R) / (2 * np.sqrt(R)))), rel=1e-4)

    def test_energy_conserved(self):
        """Transmission plus reflection is 1."""
        specs = [
            ("m1", make_component("mirror", amplitude_reflectance_r=self.R_AMP)),
            ("gap", make_component("waveguide", extra_phase_phi=0.3)),
            ("m2", make_component("mirror", amplitude_reflectance_r=self.R_AMP)),
        ]
        H = _network(specs, [(("m1", 2), ("gap", 1)), (("gap", 2), ("m2", 1))]).H
        refl = intensity(extract_jones(1, 1, H) @ [1, 0])
        trans = intensity(extract_jones(6, 1, H) @ [1, 0])
        assert refl + trans == pytest.approx(1.0, abs=1e-12)


class TestPowerBalance:
    """Lossless networks deliver all launched power to their open ports."""

    def test_random_unitary_networks(self):
        """Lossless networks conserve power."""
        rng = np.random.default_rng(7)
        checked = 0
        attempts = 0
        while checked < 50 and attempts < 200:
            attempts += 1
            sizes = [int(p) for p in rng.choice([2, 2, 4], size=int(rng.integers(2, 6)))]
            blocks = [ScatteringBlock(_random_unitary(rng, 2 * p)) for p in sizes]
            pm = PortMap.from_port_counts([(f"u{i}", p) for i, p in enumerate(sizes)])
            m = pm.total_ports_m
            S = assemble_global_scattering(blocks, pm)
            ports = rng.permutation(m) + 1
            n_pairs = int(rng.integers(0, (m - 1) // 2 + 1))
            pairs = [(int(ports[2 * i]), int(ports[2 * i + 1])) for i in range(n_pairs)]
            open_ports = [int(p) for p in ports[2 * n_pairs:]]
            G = assemble_connection_matrix(ConnectionMap.from_pairs(pairs), m)
            try:
                H, cond = solve_transfer_with_condition(S, G)
            except SingularMatrixError:
                continue
            if cond >= 1e6:
                continue
            E_o = np.zeros(2 * m, dtype=complex)
            for p in open_ports:
                cx, cy = port_coordinates(p)
                E_o[cx:cy + 1] = rng.normal(size=2) + 1j * rng.normal(size=2)
            E_out = H @ E_o
            p_out = sum(np.sum(np.abs(E_out[2 * p - 2:2 * p]) ** 2) for p in open_ports)
            assert p_out == pytest.approx(np.sum(np.abs(E_o) ** 2), rel=1e-9)
            checked += 1
        assert checked == 50


class TestDeltaLimit:
    """A monochromatic source through the broadband path equals the direct evaluation."""

    @pytest.mark.parametrize("name", ["mzi.net", "ring.net", "fabry_perot.net", "waveguide.net"])
    def test_fixture(self, fixtures_dir, name):
        """A delta source at a grid point returns H at that point."""
        circuit = parse_netlist((fixtures_dir / name).read_text(encoding="utf-8"))
        prepared = prepare_circuit(circuit)
        omegas = sweep_grid(circuit.sweep).omegas
        H = np.array([
            build_system(
                [component_block(comp.spec, w) for comp in circuit.components],
                prepared.report.port_map,
                prepared.G,
            ).H
            for w in omegas
        ])
        k = omegas.size // 2
        grid_f, H_F = broadband_response(MonochromaticSource(omegas[k]), omegas, H)
        assert grid_f.tolist() == [omegas[k]]
        assert np.max(np.abs(H_F[0] - H[k])) < 1e-9

        direct = run_sweep(circuit)
        E_out = H_F[0] @ prepared.launch
        for d, gport in enumerate(prepared.detector_ports):
            cx, cy = port_coordinates(gport)
            assert intensity(E_out[cx:cy + 1]) == pytest.approx(direct.detectors[d].intensity[k], abs=1e-9)


class TestBroadbandVisibility:
    """A Gaussian source washes out MZI fringes as exp(−σ²ΔT²/4)."""

    OMEGA0 = 1.2e15
    SIGMA = 2e12
    N_GROUP = 1.5
    LENGTHS = (1e-3, 1.1e-3)

    def _spectra(self, phase):
        grid = self.OMEGA0 + np.linspace(-6 * self.SIGMA, 6 * self.SIGMA, 512)
        specs = [
            ("c1", make_component("coupler", power_coupling_kappa=0.5)),
            ("w1", make_component("waveguide", index_n=self.N_GROUP, length_z=self.LENGTHS[0])),
            ("w2", make_component("waveguide", index_n=self.N_GROUP, length_z=self.LENGTHS[1], extra_phase_phi=phase)),
            ("c2", make_component("coupler", power_coupling_kappa=0.5)),
        ]
        links = [(("c1", 3), ("w1", 1)), (("w1", 2), ("c2", 1)), (("c1", 4), ("w2", 1)), (("w2", 2), ("c2", 2))]
        H = np.array([_network(specs, links, omega=w).H for w in grid])
        return grid, H

    def test_visibility(self):
        """Gaussian source reduces fringe visibility to exp(-σ²ΔT²/4)."""
        currents = []
        for phase in (0.0, np.pi / 2, np.pi, 3 * np.pi / 2):
            grid, H = self._spectra(phase)
            src = gaussian_source(self.OMEGA0, self.SIGMA, grid)
            det = DetectorSpec.flat(grid)
            via_transform = broadband_photocurrent(12, 1, src, det, grid, H, [1, 0])
            via_quadrature = direct_photocurrent(12, 1, src, det, grid, H, [1, 0])
            assert via_transform == pytest.approx(via_quadrature, rel=1e-9)
            currents.append(via_quadrature)
        p0, p1, p2, p3 = currents
        visibility = np.hypot(p0 - p2, p1 - p3) / (p0 + p2)
        delay = self.N_GROUP * (self.LENGTHS[1] - self.LENGTHS[0]) / c
        expected = np.exp(-(self.SIGMA * delay) ** 2 / 4)
        logger.info("broadband visibility %.6f, expected %.6f", visibility, expected)
        assert visibility == pytest.approx(expected, rel=1e-6)
