import json

import numpy as np
import pytest

from teig.cli import main
from teig.factorization import SpectralData
from teig.profiles import Profile
from teig.shooting import EquationKind
from teig.spectra import EigenvalueKind, EigenvalueRecord, records_from_csv


@pytest.fixture()
def quarter_file(tmp_path):
    path = tmp_path / "quarter.json"
    Profile.constant(0.25, 1.0, name="quarter").to_json(path)
    return str(path)


@pytest.fixture()
def unit_file(tmp_path):
    path = tmp_path / "unit.json"
    Profile.constant(1.0, 1.0, name="unit").to_json(path)
    return str(path)


def lattice_problem(tmp_path, *, regime="a_less_b", gamma=None, seed=(0.5,),
                    family="constant", segments=1, unit=4 * np.pi**2, count=6):
    zeros = tuple(
        EigenvalueRecord(complex(unit * j * j), 3, EigenvalueKind.REAL_POSITIVE, j, 0.0)
        for j in range(1, count + 1))
    data = SpectralData(zeros, 1, gamma, None, EquationKind.WAVE)
    payload = data.to_dict()
    payload.update({
        "b": 1.0,
        "regime": regime,
        "parametrization": {"family": family, "segments": segments},
        "bounds": {"lower": [1e-3] * len(seed), "upper": [100.0] * len(seed)},
        "seed": list(seed),
    })
    path = tmp_path / "problem.json"
    path.write_text(json.dumps(payload))
    return str(path)


class TestForward:
    def test_quarter_table_and_outputs(self, quarter_file, tmp_path):
        out = tmp_path / "fwd.csv"
        code = main(["forward", "--profile", quarter_file,
                     "--region=-1,200,-5,5", "--out", str(out)])
        assert code == 0
        records = records_from_csv(out.read_text())
        assert [(round(r.lam.real, 6), r.multiplicity) for r in records] == [
            (0.0, 1),
            (round(4 * np.pi**2, 6), 3),
            (round(16 * np.pi**2, 6), 3),
        ]
        assert records[1].index_hint == 1
        # delimited grid and figures land alongside the table
        assert (tmp_path / "fwd_dgrid.csv").exists()
        header = (tmp_path / "fwd_dgrid.csv").read_text().splitlines()[0]
        assert header == "re,im,abs_D,arg_D"
        assert (tmp_path / "fwd_dmap.png").stat().st_size > 1000
        assert (tmp_path / "fwd_spectrum.png").stat().st_size > 1000

    def test_json_format(self, quarter_file, tmp_path):
        out = tmp_path / "fwd.json"
        code = main(["forward", "--profile", quarter_file,
                     "--region=-1,60,-2,2", "--format", "json",
                     "--out", str(out), "--no-figures"])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["records"][0]["multiplicity"] == 1
        assert payload["records"][1]["kind"] == "real_positive"

    def test_trivial_profile_exit_code(self, unit_file):
        assert main(["forward", "--profile", unit_file,
                     "--region=-1,200,-5,5"]) == 3

    def test_schema_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert main(["forward", "--profile", str(bad)]) == 2
        assert main(["forward", "--profile", str(tmp_path / "missing.json")]) == 2

    def test_deterministic_outputs(self, quarter_file, tmp_path):
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            main(["forward", "--profile", quarter_file,
                  "--region=-1,60,-2,2", "--out", str(out), "--no-figures"])
            outs.append(out.read_bytes())
            outs.append((tmp_path / (name[:-4] + "_dgrid.csv")).read_bytes())
        assert outs[0] == outs[2]
        assert outs[1] == outs[3]

    def test_worker_count_does_not_change_grid(self, quarter_file, tmp_path):
        grids = []
        for workers, name in ((1, "w1.csv"), (3, "w3.csv")):
            out = tmp_path / name
            main(["forward", "--profile", quarter_file, "--region=-1,60,-2,2",
                  "--dgrid", "40x12", "--workers", str(workers),
                  "--out", str(out), "--no-figures"])
            grids.append((tmp_path / (name[:-4] + "_dgrid.csv")).read_bytes())
        assert grids[0] == grids[1]


class TestVerify:
    def test_quarter_all_pass(self, quarter_file, tmp_path):
        out = tmp_path / "report.json"
        assert main(["verify", "--profile", quarter_file, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["all_passed"]
        names = {c["name"] for c in report["checks"]}
        assert {"conjugation_symmetry", "liouville_consistency",
                "maclaurin_consistency", "sum_rule",
                "sampling_identity_phi"} <= names
        assert report["regime"] == "a_less_b"
        assert report["travel_time_minus_b"] == pytest.approx(-0.5)

    def test_trivial_short_circuit(self, unit_file, tmp_path):
        out = tmp_path / "report.json"
        assert main(["verify", "--profile", unit_file, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["trivial_profile"]


class TestInvert:
    def test_constant_recovery(self, tmp_path, quarter_file):
        problem = lattice_problem(tmp_path)
        out = tmp_path / "result.json"
        assert main(["invert", "--spectral-data", problem, "--out", str(out)]) == 0
        result = json.loads(out.read_text())
        assert result["converged"]
        assert result["profile"]["pieces"][0]["coeffs"][0] == pytest.approx(0.25,
                                                                            abs=1e-4)
        assert result["inferred_a"] == pytest.approx(0.5, abs=1e-4)
        assert (tmp_path / "result_fit.png").stat().st_size > 1000

    def test_equal_regime_without_gamma_refused(self, tmp_path):
        # non-degenerate data declaring a = b but carrying no gamma
        zeros = [
            {"re": 10.0, "im": 5.0, "mult": 1},
            {"re": 10.0, "im": -5.0, "mult": 1},
        ]
        payload = {
            "equation": "wave", "d": 1, "gamma": None, "zeros": zeros, "tail": None,
            "b": 1.0, "regime": "a_equals_b",
            "parametrization": {"family": "constant", "segments": 1},
            "bounds": {"lower": [1e-3], "upper": [10.0]}, "seed": [1.0],
        }
        path = tmp_path / "problem.json"
        path.write_text(json.dumps(payload))
        assert main(["invert", "--spectral-data", str(path)]) == 4

    def test_a_greater_b_refused(self, tmp_path):
        problem = lattice_problem(tmp_path, regime="a_greater_b")
        assert main(["invert", "--spectral-data", problem]) == 4

    def test_degenerate_data_recovers_trivial_profile(self, tmp_path):
        payload = {
            "equation": "schrodinger", "d": 0, "gamma": None, "zeros": [],
            "tail": None, "b": 1.0, "regime": "a_equals_b",
            "parametrization": {"family": "constant", "segments": 1},
            "bounds": {"lower": [-10.0], "upper": [10.0]}, "seed": [3.0],
        }
        path = tmp_path / "problem.json"
        path.write_text(json.dumps(payload))
        out = tmp_path / "result.json"
        assert main(["invert", "--spectral-data", str(path),
                     "--out", str(out), "--no-figures"]) == 0
        result = json.loads(out.read_text())
        assert result["converged"]
        assert result["profile"]["pieces"][0]["coeffs"][0] == pytest.approx(0.0,
                                                                            abs=1e-6)


class TestSmallCommands:
    def test_sample_grid_csv(self, quarter_file, tmp_path):
        out = tmp_path / "grid.csv"
        assert main(["sample-grid", "--profile", quarter_file, "--nmax", "3",
                     "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "n,lambda_phi,phi_b,lambda_dphi,dphi_b"
        row = lines[1].split(",")
        assert float(row[1]) == pytest.approx(np.pi**2)
        assert float(row[2]) == pytest.approx(2 / np.pi, rel=1e-9)

    def test_asymptotics_table(self, quarter_file, tmp_path):
        out = tmp_path / "lattice.csv"
        assert main(["asymptotics", "--profile", quarter_file, "--nmax", "4",
                     "--out", str(out)]) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "n,lambda_lattice"
        assert float(rows[1].split(",")[1]) == pytest.approx(4 * np.pi**2)

    def test_asymptotics_equal_travel_time(self, unit_file):
        assert main(["asymptotics", "--profile", unit_file]) == 4

    def test_asymptotics_from_data(self, tmp_path):
        zeros = [{"re": float(4 * np.pi**2 * j * j), "im": 0.0, "mult": 3}
                 for j in range(1, 7)]
        payload = {"equation": "wave", "d": 1, "gamma": 0.25, "zeros": zeros,
                   "tail": {"a": 0.5, "b": 1.0}}
        path = tmp_path / "data.json"
        path.write_text(json.dumps(payload))
        out = tmp_path / "inferred.json"
        assert main(["asymptotics", "--spectral-data", str(path),
                     "--out", str(out)]) == 0
        got = json.loads(out.read_text())
        assert got["inferred_travel_time"] == pytest.approx(0.5, rel=1e-10)
