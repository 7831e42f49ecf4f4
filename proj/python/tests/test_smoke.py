import math
import os
from pathlib import Path

import numpy as np
import pytest

import nwbec

ROOT = Path(os.environ.get("NWBEC_SOURCE_DIR", Path(__file__).resolve().parents[2]))
REFERENCE = ROOT / "configs" / "rb87_bent_wire.json"


def test_chemical_potential():
    hbar = 1.054571817e-34
    mu = nwbec.chemical_potential(6e4, 2 * math.pi * 500, 2 * math.pi * 200)
    assert mu / hbar == pytest.approx(43187.6, rel=1e-5)


def test_closed_form_threshold():
    rho = nwbec.closed_form_density(1.0, 1.0)
    r = nwbec.threshold_report(rho, 0.1)
    assert r["omega_coefficient"] == pytest.approx(2 * math.sqrt(3) / (5 * math.pi), rel=1e-8)
    assert r["pv"] == pytest.approx(0.599135009247634, rel=1e-6)
    exact = nwbec.threshold_exact(rho, 0.0, 0.1)
    assert exact["omega_th"] == pytest.approx(r["omega_th"], rel=1e-3)


def test_level_shift_and_poles():
    rho = nwbec.closed_form_density(1.0, 0.04)
    k = nwbec.LevelShift(rho)
    assert k.on_axis(0.5).imag == pytest.approx(-math.pi * rho(0.5))
    z = 1e4 * np.exp(0.3j)
    assert abs(z * k(z) - 0.04) < 1e-5
    p = nwbec.Propagator(k, 0.68, 0.1)
    poles = p.poles()
    assert len(poles) == 1 and poles[0]["z"].imag > 0
    trace = p.time_trace(np.linspace(0, 10, 11))
    assert abs(trace["values"][0] - 1) < 1e-6
    assert rho(np.array([0.2, 2.0]))[1] == 0.0


def test_gain_map_shape():
    rho = nwbec.closed_form_density(1.0, 1.0)
    g = nwbec.gain_map(rho, 0.0, 0.1, [0.0, 0.2], [0.6, 0.7, 0.8])
    assert g.shape == (2, 3)
    assert np.allclose(g[0], -0.1)


def test_scenario(tmp_path):
    cfg = nwbec.load_config(str(REFERENCE), ["output.fig3.re_points=11", "output.fig3.im_points=4"])
    assert nwbec.parse_config(cfg.to_json()) == cfg
    s = nwbec.Scenario(cfg)
    fom = s.figure_of_merit()
    assert fom["verdict"] == "above threshold"
    assert s.threshold["omega_th"] == pytest.approx(219, rel=0.02)
    assert s.fig3()["k"].shape == (4, 11)
    files = s.write_all(str(tmp_path))
    assert all(Path(f).exists() for f in files)


def test_config_error():
    with pytest.raises(nwbec.ConfigError, match="condensate"):
        nwbec.parse_config('{"nanowire": {}}')
