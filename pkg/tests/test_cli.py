import csv
import json

import numpy as np
import pytest

from susy_confluent.cli import (CSV_COLUMNS, ConfigError, RunConfig, caption_to_config,
                                load_potential, main, parse_ranges, run_scan, scan_params)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


class TestConfig:
    def test_round_trip(self):
        cfg = RunConfig(family="lame", k=3, delta=0.4 + 0.0j, m=0.5, C=(0.1, 0.0), D=(0.0, 1.0))
        again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg

    def test_defaults(self):
        cfg = RunConfig(k=3, epsilon=-1.0)
        assert cfg.C == (0.0, 0.0) and cfg.D == (0.0, 0.0)
        g = cfg.grid()
        assert (g.x_min, g.x_max, g.n_points) == (-15.0, 15.0, 4001)

    @pytest.mark.parametrize("kwargs", [
        dict(k=1, epsilon=-1.0),
        dict(k=2),
        dict(k=2, epsilon=-1.0, delta=0.3),
        dict(k=2, epsilon=-1.0, C=(1.0, 2.0)),
        dict(family="lame", k=2, epsilon=-0.5),
        dict(family="free", k=2, delta=0.3),
        dict(k=2, epsilon=-1.0, format="xml"),
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            RunConfig(**kwargs)

    def test_unknown_keys_and_schema(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"k": 2, "epsilon": -1.0, "colour": "red"})
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"k": 2, "epsilon": -1.0, "schema": 99})

    def test_delta_resolves_to_energy(self):
        cfg = RunConfig(family="lame", k=2, delta=0.8260178762492454, m=0.5)
        assert cfg.resolved_epsilon() == pytest.approx(-0.5, abs=1e-10)


class TestCaptions:
    def test_lame_short_layout(self):
        d = caption_to_config([0.5, -0.2, 0.1, 0.01, 0.01], "lame", 3)
        assert d == {"m": 0.5, "epsilon": -0.2, "C": [0.1, 0.0], "D": [0.01, 0.01]}

    def test_lame_full_layout(self):
        d = caption_to_config([1.25, 0, 0, 1, 0, 0, 0], "lame", 4, m=0.5)
        assert d == {"m": 0.5, "epsilon": 1.25, "C": [0.0, 0.0, 1.0], "D": [0.0, 0.0, 0.0]}

    def test_forced_layout(self):
        d = caption_to_config([-1.0, 0.2, 0.3, 0.4, 0.5], "free", 3, layout="eps-full")
        assert d["C"] == [0.2, 0.3] and d["D"] == [0.4, 0.5]
        with pytest.raises(ConfigError):
            caption_to_config([-1.0, 0.2, 0.3, 0.4, 0.5], "free", 3, layout="m-eps")

    def test_bad_count(self):
        with pytest.raises(ConfigError):
            caption_to_config([1, 2, 3], "lame", 4)


class TestTransformCommand:
    def test_csv_and_determinism(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["transform", "--k", "3", "--epsilon", "-1", "--D", "0", "-0.0625", "--n", "801"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        header, data = read_csv(a)
        assert tuple(header) == CSV_COLUMNS
        assert data.shape == (801, 7)
        assert np.all(data[:, 4] == 0) and np.all(data[:, 6] == 0)

    def test_json_with_diagnostics(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["transform", "--family", "lame", "--m", "0.5", "--epsilon", "-0.5", "--k", "2",
                     "--D", "1", "--format", "json", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["diagnostics"]["singular"] is False
        assert payload["diagnostics"]["psi_residual"] < 1e-4
        assert payload["config"]["family"] == "lame"

    def test_singular_exit(self, tmp_path, capsys):
        code = main(["transform", "--k", "3", "--epsilon", "-1", "--D", "0.5", "0",
                     "--out", str(tmp_path / "s.csv")])
        assert code == 2
        assert "singular" in capsys.readouterr().err

    def test_error_exit(self, capsys):
        assert main(["transform", "--k", "2"]) == 1
        assert "error" in capsys.readouterr().err

    def test_normalize(self, tmp_path):
        out = tmp_path / "n.csv"
        assert main(["transform", "--k", "2", "--epsilon", "-1", "--D", "-1", "--normalize",
                     "--out", str(out)]) == 0
        _, data = read_csv(out)
        assert np.trapezoid(data[:, 3] ** 2, data[:, 0]) == pytest.approx(1.0, rel=1e-9)

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(RunConfig(k=2, epsilon=-1.0, D=(-1.0,), n_points=201).to_dict()))
        out = tmp_path / "o.csv"
        assert main(["transform", "--config", str(cfg), "--epsilon", "-2", "--out", str(out)]) == 0
        _, data = read_csv(out)
        assert data.shape[0] == 201
        # the depth -2 kappa^2 = -4 is sampled on a coarse grid
        assert np.min(data[:, 2]) == pytest.approx(-4.0, rel=2e-2)

    def test_numeric_family(self, tmp_path):
        pot = tmp_path / "v.csv"
        x = np.linspace(-10, 10, 2001)
        rows = "\n".join(f"{float(a)!r},0.0" for a in x)
        pot.write_text("x,V\n" + rows + "\n")
        out = tmp_path / "o.csv"
        assert main(["transform", "--family", "numeric", "--potential", str(pot), "--k", "2",
                     "--epsilon", "-1", "--D", "-1", "--out", str(out)]) == 0
        _, data = read_csv(out)
        assert data.shape[0] == 2001 and np.min(data[:, 2]) < -1.5

    def test_load_potential_checks(self, tmp_path):
        bad = tmp_path / "b.csv"
        bad.write_text("t,V\n0,1\n1,2\n")
        with pytest.raises(ConfigError):
            load_potential(str(bad))
        uneven = tmp_path / "u.csv"
        xs = [0, 1, 2, 3, 4, 5, 6, 7, 8, 10]
        uneven.write_text("x,V\n" + "".join(f"{a},1\n" for a in xs))
        with pytest.raises(ConfigError):
            load_potential(str(uneven))


class TestVerifyAndIdentities:
    def test_verify_passes(self, tmp_path):
        out = tmp_path / "v.json"
        assert main(["verify", "--k", "3", "--epsilon", "-1", "--D", "0", "-0.0625",
                     "--out", str(out)]) == 0
        assert json.loads(out.read_text())["pass"] is True

    def test_verify_fails_on_coarse_grid(self, tmp_path):
        out = tmp_path / "v.json"
        assert main(["verify", "--k", "3", "--epsilon", "-1", "--n", "51", "--out", str(out)]) == 1
        report = json.loads(out.read_text())
        assert not report["checks"]["chain_link_2"]["pass"]

    def test_verify_lame(self, tmp_path):
        out = tmp_path / "v.json"
        assert main(["verify", "--family", "lame", "--m", "0.5", "--epsilon", "-0.5", "--k", "3",
                     "--D", "0", "1", "--out", str(out)]) == 0
        checks = json.loads(out.read_text())["checks"]
        assert any(name.startswith("elliptic_") for name in checks)

    def test_identities(self, tmp_path):
        out = tmp_path / "i.json"
        assert main(["identities", "--family", "lame", "--m", "0.5", "--epsilon", "-0.5",
                     "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["pass"] and "elliptic" in payload


class TestScan:
    def test_d1_sweep(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["scan", "--k", "2", "--epsilon", "-1", "--range", "D1", "-1", "1", "5",
                     "--out", str(out)]) == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        singular = {float(r["D1"]): r["singular"] == "1" for r in rows}
        # W = D1 - e^{2x}/2 only vanishes for D1 > 0
        assert singular == {-1.0: False, -0.5: False, 0.0: False, 0.5: True, 1.0: True}
        mins = [float(r["min_abs_W"]) for r in rows]
        assert mins == sorted(mins, reverse=True)

    def test_k3_d1_sweep(self):
        # with D2 < 0 only D1 = 0 leaves the three-member free Wronskian zero-free
        cfg = RunConfig(k=3, epsilon=-1.0, D=(0.0, -0.0625))
        recs = run_scan(cfg, parse_ranges([("D1", -1, 1, 9)], 3), threads=2)
        regular = [r.params.d(1) for r in recs if not r.singular]
        assert regular == [0.0] and len(recs) == 9

    def test_empty_range(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["scan", "--k", "2", "--epsilon", "-1", "--range", "D1", "0", "1", "0",
                     "--out", str(out)]) == 0
        assert out.read_text().count("\n") == 1

    def test_cap(self):
        cfg = RunConfig(k=3, epsilon=-1.0)
        ranges = parse_ranges([("D1", 0, 1, 50), ("D2", 0, 1, 50)], 3)
        with pytest.raises(ConfigError):
            scan_params(cfg, ranges, cap=100)
        assert main(["scan", "--k", "2", "--epsilon", "-1", "--range", "D1", "0", "1", "20",
                     "--max-records", "10"]) == 1

    def test_unknown_name(self):
        with pytest.raises(ConfigError):
            parse_ranges([("C5", 0, 1, 3)], 3)

    def test_lame_grid(self):
        cfg = RunConfig(family="lame", m=0.5, k=3, epsilon=-0.5, n_points=1001)
        ranges = parse_ranges([("epsilon", -0.6, -0.4, 5), ("D1", -1, 1, 5), ("D2", -1, 1, 5)], 3)
        recs = run_scan(cfg, ranges, threads=4)
        assert len(recs) == 125
        flags = {r.singular for r in recs}
        assert flags == {True, False}
        assert all(r.error is None for r in recs)

    def test_band_energy_is_recorded(self):
        cfg = RunConfig(family="lame", m=0.5, k=2, epsilon=-0.5, n_points=501)
        recs = run_scan(cfg, parse_ranges([("epsilon", 0.6, 0.8, 2)], 2), threads=1)
        assert all(r.error for r in recs)


class TestBands:
    def test_csv(self, tmp_path, capsys):
        out = tmp_path / "b.csv"
        assert main(["bands", "--m", "0.5", "--n", "61", "--out", str(out)]) == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 61
        assert {r["classification"] for r in rows} >= {"LowerGap", "AllowedBand", "BandGap"}
        assert "band edges" in capsys.readouterr().out

    def test_json_edges(self, tmp_path):
        out = tmp_path / "b.json"
        assert main(["bands", "--m", "0.5", "--format", "json", "--out", str(out)]) == 0
        edges = json.loads(out.read_text())["edges"]
        assert np.allclose(edges, [0.5, 1.0, 1.5], atol=1e-3)

    def test_bad_modulus(self):
        assert main(["bands", "--m", "1.5"]) == 1
