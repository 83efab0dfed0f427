"""End-to-end tests for the command-line driver."""

import csv
import json
import logging

import numpy as np
import pytest
from scipy.constants import c

import photonet.sweep_service as sweep_service
from photonet.cli import EXIT_IO, EXIT_NUMERIC, EXIT_OK, EXIT_PARSE, EXIT_VALIDATE, main
from photonet.netlist_io import format_real


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def _closed_ring_netlist(tmp_path):
    """Decoupled lossless ring, exactly on resonance at the first grid point."""
    omega_k = 1.2e15
    length = 2 * np.pi * c / omega_k
    text = "\n".join([
        "component cr coupler kappa=0",
        f"component ring waveguide n=1 length={format_real(length)}",
        "connect cr.4 ring.1",
        "connect ring.2 cr.2",
        "source cr.1 pol=1,0,0,0",
        "detect cr.3",
        f"sweep frequency {format_real(omega_k)} {format_real(1.5 * omega_k)} 5",
        "",
    ])
    path = tmp_path / "closed_ring.net"
    path.write_text(text, encoding="utf-8")
    return path


class TestCheck:
    """Tests for the check subcommand."""

    def test_mzi_summary(self, fixtures_dir, capsys):
        """check prints the port count and the dangling-port warning."""
        assert main(["check", str(fixtures_dir / "mzi.net")]) == EXIT_OK
        out = capsys.readouterr().out
        assert "m=12, 4 components, 4 connections" in out
        assert "warning: port c1.2 is unterminated" in out

    def test_self_connection(self, fixtures_dir, capsys):
        """Syntax errors exit 2 and name the line."""
        code = main(["check", str(fixtures_dir / "self_connection.net")])
        assert code == EXIT_PARSE
        assert "line 2" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        """A missing netlist exits 1."""
        assert main(["check", str(tmp_path / "nope.net")]) == EXIT_IO

    def test_validation_error(self, tmp_path, capsys):
        """Validation errors exit 3 and name the instance."""
        path = tmp_path / "bad.net"
        path.write_text("component a rotator\ndetect a.5\n", encoding="utf-8")
        assert main(["check", str(path)]) == EXIT_VALIDATE
        assert "instance 'a'" in capsys.readouterr().err

    def test_invalid_utf8(self, tmp_path, capsys):
        """Bytes that are not UTF-8 are a parse error, not a crash."""
        path = tmp_path / "latin.net"
        path.write_bytes(b"component w waveguide\n# \xff\xfe\n")
        assert main(["check", str(path)]) == EXIT_PARSE
        assert "not valid UTF-8" in capsys.readouterr().err

    def test_non_finite_parameter(self, tmp_path, capsys):
        """A NaN reflectance is rejected instead of reported valid."""
        path = tmp_path / "nan.net"
        path.write_text("component m mirror r=nan\n", encoding="utf-8")
        assert main(["check", str(path)]) == EXIT_PARSE
        assert "line 1" in capsys.readouterr().err


class TestSimulate:
    """Tests for the simulate subcommand."""

    def test_transparent_waveguide(self, fixtures_dir, tmp_path):
        """A lossless guide transmits everything."""
        out = tmp_path / "wg.csv"
        assert main(["simulate", str(fixtures_dir / "waveguide.net"), "--output", str(out)]) == EXIT_OK
        rows = _read_csv(out)
        assert rows[0] == ["wavelength_m", "I:wg.2"]
        assert len(rows) == 2
        assert float(rows[1][0]) == 1.55e-6
        assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-12)

    def test_mzi_cross_port(self, fixtures_dir, tmp_path):
        """MZI CSV columns follow sin² and cos²."""
        out = tmp_path / "mzi.csv"
        assert main(["simulate", str(fixtures_dir / "mzi.net"), "--output", str(out)]) == EXIT_OK
        rows = _read_csv(out)
        assert rows[0] == ["wavelength_m", "I:c2.3", "I:c2.4"]
        data = np.array(rows[1:], dtype=float)
        assert data.shape == (161, 3)
        omega = 2.0 * np.pi * c / data[:, 0]
        dphi = omega * 1.5 * 100e-6 / c
        assert np.max(np.abs(data[:, 2] - np.cos(dphi / 2) ** 2)) < 1e-9
        assert np.max(np.abs(data[:, 1] - np.sin(dphi / 2) ** 2)) < 1e-9
        # one free spectral range: both a bright and a dark fringe are on the grid
        assert data[:, 2].max() > 0.99 and data[:, 2].min() < 0.01

    def test_ring_matches_all_pass(self, fixtures_dir, tmp_path):
        """Ring CSV matches the all-pass formula."""
        out = tmp_path / "ring.csv"
        assert main(["simulate", str(fixtures_dir / "ring.net"), "--output", str(out)]) == EXIT_OK
        data = np.array(_read_csv(out)[1:], dtype=float)
        omega = 2.0 * np.pi * c / data[:, 0]
        z = 0.95 * np.exp(1j * omega * 1.5 * 100e-6 / c)
        expected = np.abs((0.9 - z) / (1 - 0.9 * z)) ** 2
        assert np.max(np.abs(data[:, 1] - expected)) < 1e-9

    def test_thread_count_does_not_change_output(self, fixtures_dir, tmp_path):
        """Output bytes do not depend on --threads."""
        serial, parallel = tmp_path / "t1.csv", tmp_path / "t8.csv"
        netlist = str(fixtures_dir / "mzi.net")
        assert main(["simulate", netlist, "--amplitudes", "--threads", "1", "--output", str(serial)]) == EXIT_OK
        assert main(["simulate", netlist, "--amplitudes", "--threads", "8", "--output", str(parallel)]) == EXIT_OK
        assert serial.read_bytes() == parallel.read_bytes()

    def test_connection_matrix_built_once(self, fixtures_dir, tmp_path, monkeypatch):
        """G is assembled once per run."""
        calls = []
        original = sweep_service.assemble_connection_matrix

        def counting(*args, **kwargs):
            calls.append(args)
            return original(*args, **kwargs)

        monkeypatch.setattr(sweep_service, "assemble_connection_matrix", counting)
        out = tmp_path / "ring.csv"
        assert main(["simulate", str(fixtures_dir / "ring.net"), "--threads", "4", "--output", str(out)]) == EXIT_OK
        assert len(calls) == 1

    def test_json_with_amplitudes_and_impulse(self, fixtures_dir, tmp_path):
        """JSON carries amplitudes, tau grid and impulse magnitudes."""
        out = tmp_path / "fp.json"
        args = ["simulate", str(fixtures_dir / "fabry_perot.net"), "--format", "json", "--amplitudes", "--impulse"]
        assert main(args + ["--output", str(out)]) == EXIT_OK
        doc = json.loads(out.read_text(encoding="utf-8"))
        assert doc["schema_version"] == "1.0"
        assert doc["grid_kind"] == "frequency"
        assert len(doc["grid"]) == 257 and len(doc["tau"]) == 257
        assert doc["metadata"]["m"] == 6
        trans, refl = doc["detectors"]
        assert trans["port"] == "m2.2" and refl["port"] == "m1.1"
        for i in range(257):
            assert trans["intensity"][i] + refl["intensity"][i] == pytest.approx(1.0, abs=1e-12)
            assert trans["intensity"][i] == pytest.approx(trans["ex_re"][i] ** 2 + trans["ex_im"][i] ** 2)
        assert max(trans["intensity"]) > 0.5
        assert len(trans["impulse_magnitude"]) == 257

    def test_broadband_linewidth(self, fixtures_dir, tmp_path):
        """Broadband photocurrents of a lossless cavity add to 1."""
        out = tmp_path / "fp.json"
        args = ["simulate", str(fixtures_dir / "fabry_perot.net"), "--format", "json", "--linewidth", "1e12"]
        assert main(args + ["--output", str(out)]) == EXIT_OK
        doc = json.loads(out.read_text(encoding="utf-8"))
        trans, refl = (d["broadband_photocurrent"] for d in doc["detectors"])
        assert 0 < trans < 1 and 0 < refl < 1
        assert trans + refl == pytest.approx(1.0, rel=1e-6)

    def test_impulse_needs_frequency_sweep(self, fixtures_dir, tmp_path):
        """--impulse on a wavelength sweep exits 4."""
        code = main(["simulate", str(fixtures_dir / "mzi.net"), "--impulse", "--output", str(tmp_path / "x.csv")])
        assert code == EXIT_NUMERIC

    def test_singular_row_flagged(self, tmp_path, caplog):
        """Singular points are null in JSON and logged once."""
        out = tmp_path / "ring.json"
        with caplog.at_level(logging.WARNING):
            code = main(["simulate", str(_closed_ring_netlist(tmp_path)), "--format", "json", "--output", str(out)])
        assert code == EXIT_OK
        doc = json.loads(out.read_text(encoding="utf-8"))
        intensities = doc["detectors"][0]["intensity"]
        assert intensities[0] is None
        assert intensities[1:] == pytest.approx([1.0] * 4, abs=1e-12)
        assert doc["metadata"]["singular_points"] == [0]
        assert "grid points singular" in caplog.text

    def test_singular_row_in_csv(self, tmp_path):
        """Singular points are nan in CSV."""
        out = tmp_path / "ring.csv"
        assert main(["simulate", str(_closed_ring_netlist(tmp_path)), "--output", str(out)]) == EXIT_OK
        rows = _read_csv(out)
        assert rows[1][1] == "nan"

    def test_missing_source(self, tmp_path):
        """A netlist without a source exits 3."""
        path = tmp_path / "nosrc.net"
        path.write_text("component a rotator\ndetect a.2\nsweep single 1550nm\n", encoding="utf-8")
        assert main(["simulate", str(path)]) == EXIT_VALIDATE
