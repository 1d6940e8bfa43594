import csv
import io
import math

import numpy as np
import pytest

from capture_aloha import GroupSpec
from capture_aloha.figures import FIGURES, Table, build, fmt, write_csv
from capture_aloha.optimize import hetero_max_sum_rate, max_sum_rate, max_throughput

X_NAMES = {"fig3a": "mu", "fig3b": "snr_db", "fig4a": "snr_db", "fig4b": "snr_db",
           "fig5a": "snr_db", "fig5b": "snr_db", "fig6a": "q0", "fig6b": "q0", "fig7a": "q0",
           "fig7b": "q0", "fig8-sumrate": "mu", "fig9-hetero": "ratio_db"}


@pytest.mark.parametrize("fid", sorted(FIGURES))
def test_schema(fid):
    table = build(fid, points=3, slots=2000, seed=0)
    assert table.columns[0] == X_NAMES[fid]
    assert len(table.columns) >= 2
    assert table.rows.shape == (3, len(table.columns))
    assert np.all(np.isfinite(table.rows))
    rows = list(csv.reader(io.StringIO(table.to_csv())))
    assert tuple(rows[0]) == table.columns
    assert all(len(r[0].replace("-", "").replace(".", "").replace("e", "")) <= 12 for r in rows[1:])


def test_unknown():
    with pytest.raises(KeyError, match="fig3a"):
        build("fig2")


def test_format():
    assert fmt(1 / 3) == "0.333333333"
    assert fmt(2.0) == "2"
    assert fmt(1.23456789012e-7) == "1.23456789e-07"


def test_write(tmp_path):
    t = Table(("x", "y"), np.array([[1.0, 2.0]]))
    path = write_csv(t, tmp_path / "sub" / "t.csv")
    assert path.read_text() == "x,y\n1,2\n"


def test_throughput_panel_matches_optimizer():
    t = build("fig3a", points=9)
    for mu, lam in zip(t.column("mu"), t.column("rho_10dB")):
        assert lam == max_throughput(50, mu, 10.0).lambda_max


def test_low_snr_panel_limit():
    t = build("fig5b", points=5)
    np.testing.assert_allclose(t.column("limit"), math.exp(-1) * math.log2(math.e))
    assert np.all(t.column("n_1000") < t.column("limit"))


def test_sum_rate_curves_peak_at_optimal_threshold():
    t = build("fig8-sumrate", points=801, slots=0)
    mu = t.column("mu")
    step = mu[1] / mu[0]
    for db, rho in (("0dB", 1.0), ("10dB", 10.0), ("20dB", 100.0)):
        peak = mu[int(np.argmax(t.column(f"rho_{db}")))]
        opt = max_sum_rate(50, rho).mu_star
        assert peak / step <= opt <= peak * step


def test_sum_rate_panel_simulation_near_theory():
    t = build("fig8-sumrate", points=5, slots=50_000, seed=1)
    for db in ("0dB", "10dB", "20dB"):
        np.testing.assert_allclose(t.column(f"sim_rho_{db}"), t.column(f"rho_{db}"), rtol=0.05, atol=0.01)


def test_q0_panels_share_simulations():
    p = build("fig6a", points=4, slots=20_000, seed=2)
    lam = build("fig7a", points=4, slots=20_000, seed=2)
    np.testing.assert_array_equal(p.column("q0"), lam.column("q0"))
    assert p.columns[1:] == lam.columns[1:]
    np.testing.assert_allclose(p.column("sim_K0"), p.column("approx_K0"), atol=0.05)


def test_low_threshold_q0_panel():
    t = build("fig7b", points=4, slots=20_000, seed=0)
    # with mu well below 1/(n-1) throughput keeps rising up to q0 = 1
    assert np.all(np.diff(t.column("approx_n20")) > 0)


def test_hetero_panel_columns():
    t = build("fig9-hetero", points=2)
    assert t.columns == ("ratio_db", "mean_0dB", "mean_10dB", "mean_15dB", "mean_20dB")
    equal = t.rows[0]
    for col, rho in zip(t.columns[1:], (1.0, 10.0, 10 ** 1.5, 100.0)):
        assert equal[t.columns.index(col)] == pytest.approx(max_sum_rate(50, rho).C, rel=5e-3)


@pytest.mark.slow
def test_hetero_flat_at_low_snr():
    ratio_db = np.linspace(0, 40, 21)
    curve = np.array([hetero_max_sum_rate(GroupSpec.two_groups(25, 25, 1.0, 10 ** (r / 10))).C
                      for r in ratio_db])
    assert np.all(np.abs(curve / curve[0] - 1) <= 0.10)
