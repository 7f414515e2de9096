import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
import yaml

from higmetric import catalog
from higmetric.cli import main
from higmetric.errors import ParseError
from higmetric.io import (
    group_from_dict,
    group_to_dict,
    length_from_dict,
    length_to_dict,
    load_stages,
    resolve_group,
    resolve_metric,
)
from higmetric.lengths import unitary_length


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, (json.loads(out) if out else None), err


class TestGroupFiles:
    @pytest.mark.parametrize("name", catalog.small_catalog(24) + ["s5", "a5", "cyclic:64", "dihedral:32"])
    @pytest.mark.parametrize("fmt", ["json", "yaml"])
    def test_round_trip(self, tmp_path, name, fmt):
        G = catalog.build(name)
        path = tmp_path / f"g.{fmt}"
        d = group_to_dict(G)
        path.write_text(json.dumps(d) if fmt == "json" else yaml.safe_dump(d))
        H = resolve_group(str(path))
        assert np.array_equal(G.mul, H.mul)
        assert G.labels == H.labels

    @pytest.mark.parametrize("name", ["q8", "s4"])
    def test_cayley_form(self, name):
        G = catalog.build(name)
        H = group_from_dict(json.loads(json.dumps(group_to_dict(G, "cayley"))))
        assert np.array_equal(G.mul, H.mul)

    def test_unitary_round_trip_keeps_metric(self):
        d = {
            "type": "unitary",
            "dimension": 2,
            "generator_names": ["i", "j"],
            "generators": [[[0, 1], [0, 0], [0, 0], [0, -1]], [[0, 0], [1, 0], [-1, 0], [0, 0]]],
        }
        G = group_from_dict(d)
        H = group_from_dict(group_to_dict(G))
        assert G.order == 8 and np.array_equal(G.mul, H.mul)
        np.testing.assert_allclose(unitary_length(G).values, unitary_length(H).values)

    @pytest.mark.parametrize(
        "d",
        [{}, {"type": "bogus"}, {"type": "permutation"}, {"type": "unitary", "dimension": 2, "generators": [[[1, 0]]]}],
    )
    def test_bad_definitions(self, d):
        with pytest.raises(ParseError):
            group_from_dict(d)

    def test_bad_yaml(self, tmp_path):
        p = tmp_path / "g.yaml"
        p.write_text("type: [unclosed")
        with pytest.raises(ParseError):
            resolve_group(str(p))


class TestLengthFiles:
    def test_class_values(self):
        G = catalog.quaternion_group()
        lf = length_from_dict(G, {"class_values": {"1": 0, "-1": "4/25", "i": 0.2, "j": "1/5", "k": "0.2"}})
        assert lf.is_exact and lf.exact_values() == catalog.q8_exact_length(G).exact_values()

    def test_values_round_trip(self):
        G = catalog.symmetric_group(3)
        lf = catalog.metric(G, "hamming")
        again = length_from_dict(G, length_to_dict(lf))
        assert again.exact_values() == lf.exact_values()

    def test_missing_values(self):
        G = catalog.cyclic_group(3)
        with pytest.raises(ParseError):
            length_from_dict(G, {"values": {"()": 0}})

    def test_unknown_label(self):
        with pytest.raises(ParseError):
            length_from_dict(catalog.cyclic_group(2), {"values": {"()": 0, "(1 9)": 1}})

    def test_metric_file(self, tmp_path):
        G = catalog.cyclic_group(4)
        p = tmp_path / "m.yaml"
        p.write_text(yaml.safe_dump({"values": {"()": 0, "(1 2 3 4)": 0.5, "(1 3)(2 4)": 1, "(1 4 3 2)": 0.5}}))
        lf = resolve_metric(G, str(p))
        assert lf.exact_values() == (0, Fraction(1, 2), 1, Fraction(1, 2))

    def test_unknown_metric(self):
        with pytest.raises(ParseError):
            resolve_metric(catalog.quaternion_group(), "hamming")


class TestStages:
    def test_relative_paths(self, tmp_path):
        (tmp_path / "q8.json").write_text(json.dumps(group_to_dict(catalog.quaternion_group())))
        (tmp_path / "stages.yaml").write_text(
            yaml.safe_dump([{"group": "q8.json", "metric": "unitary", "tuple": ["i"] * 4, "targets": [0.1] * 4}])
        )
        (st,) = load_stages(tmp_path / "stages.yaml")
        assert st.tuple == (1, 1, 1, 1) and st.targets == (Fraction(1, 10),) * 4

    @pytest.mark.parametrize(
        "stage",
        [{"group": "builtin:q8", "metric": "unitary", "tuple": ["i"] * 3, "targets": [0] * 4},
         {"group": "builtin:q8", "metric": "unitary", "tuple": ["z"] * 4, "targets": [0] * 4},
         {"group": "builtin:q8", "tuple": ["i"] * 4, "targets": [0] * 4}],
    )
    def test_invalid(self, tmp_path, stage):
        p = tmp_path / "s.json"
        p.write_text(json.dumps({"stages": [stage]}))
        with pytest.raises(ParseError):
            load_stages(p)


class TestAnalyze:
    def test_q8_unitary(self, capsys):
        code, r, _ = run_json(capsys, "analyze", "--group", "builtin:q8", "--metric", "unitary")
        assert code == 0
        assert r["delta"] == pytest.approx(0.70711, abs=1e-5) and r["eta"] == r["delta"]
        assert r["contractive"] == "pass" and r["nilpotency_class"] == 2

    def test_s6_hamming_fails(self, capsys):
        code, r, _ = run_json(capsys, "analyze", "--group", "builtin:s6", "--metric", "hamming")
        assert code == 1
        assert r["contractive"] == "fail"
        assert r["contractive_witness"]["labels"] == ["(1 2)", "(2 3)"]
        assert r["contractive_witness"]["lhs_exact"] == "1/2" and r["contractive_witness"]["rhs_exact"] == "4/9"

    def test_trivial(self, capsys):
        code, r, _ = run_json(capsys, "analyze", "--group", "builtin:trivial")
        assert code == 0 and r["order"] == 1 and r["nilpotency_class"] == 0

    def test_q8_exact_grid(self, capsys):
        code, r, _ = run_json(capsys, "analyze", "--group", "builtin:q8", "--metric", "q8-exact")
        assert code == 0
        assert [z["epsilon_exact"] for z in r["zassenhaus"]] == ["4/25", "1/5"]
        assert r["class_sizes"] == [1, 1, 2, 2, 2]

    def test_not_nilpotent(self, capsys):
        _, r, _ = run_json(capsys, "analyze", "--group", "builtin:s3")
        assert r["nilpotency_class"] == "not nilpotent"

    def test_bad_group(self, capsys):
        code, _, err = run(capsys, "analyze", "--group", "builtin:cyclic:65")
        assert code == 2 and "ParseError" in err


class TestScanCommand:
    def test_q8(self, capsys):
        code, r, _ = run_json(capsys, "higman-scan", "--group", "builtin:q8", "--metric", "unitary",
                              "--epsilon", "0.01", "--generating-only")
        assert code == 0 and r["large"] == 0 and r["gap_violation"] == 0
        assert r["schema_version"] == "1.0" and r["config"]["generating_only"] is True

    def test_s4_discrete(self, capsys):
        code, r, _ = run_json(capsys, "higman-scan", "--group", "builtin:s4", "--metric", "discrete",
                              "--epsilon", "0.01")
        assert code == 0 and r["scanned"] == 331776

    def test_epsilon_out_of_range(self, capsys):
        code, _, err = run(capsys, "higman-scan", "--group", "builtin:q8", "--metric", "unitary", "--epsilon", "0.02")
        assert code == 2 and "EpsilonOutOfRange" in err

    def test_budget_from_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("HIGMETRIC_BUDGET", "100")
        code, _, err = run(capsys, "higman-scan", "--group", "builtin:q8", "--metric", "unitary")
        assert code == 2 and "ScanBudgetExceeded" in err

    def test_not_contractive(self, capsys, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"class_values": {"()": 0, "(1 2)": "1/10", "(1 2 3)": "1/5"}}))
        code, _, err = run(capsys, "higman-scan", "--group", "builtin:s3", "--metric", str(p))
        assert code == 2 and "NotContractive" in err
        code, r, _ = run_json(capsys, "higman-scan", "--group", "builtin:s3", "--metric", str(p),
                              "--allow-noncontractive")
        assert code == 0 and r["out_of_hypothesis"] is True

    def test_byte_identical_across_jobs(self, tmp_path):
        outs = []
        for jobs in ("1", "8"):
            out = tmp_path / f"r{jobs}.json"
            assert main(["higman-scan", "--group", "builtin:a4", "--metric", "clamp:1/2:hamming", "--jobs", jobs,
                         "--no-timing", "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "higman-scan", "--group", "builtin:cyclic:3", "--metric", "discrete",
                           "--format", "csv")
        assert code == 0
        rows = dict(line.split(",", 1) for line in out.strip().splitlines()[1:] if not line.startswith("witnesses"))
        assert rows["large"] == "0" and rows["scanned"] == "81"

    def test_bad_jobs(self, capsys):
        code, _, _ = run(capsys, "higman-scan", "--group", "builtin:q8", "--metric", "unitary", "--jobs", "0")
        assert code == 2


class TestVerifyLemmas:
    def test_q8_class_metric(self, capsys, tmp_path):
        p = tmp_path / "m.yaml"
        p.write_text("class_values:\n  '1': 0\n  '-1': 0.16\n  i: 0.2\n  j: 0.2\n  k: 0.2\n")
        code, r, _ = run_json(capsys, "verify-lemmas", "--group", "builtin:q8", "--metric", str(p),
                              "--epsilon", "0.16", "--epsilon", "0.2")
        assert code == 0 and r["ok"]
        z = r["per_epsilon"][1]["zassenhaus"]
        assert z["nil"] == 2 and z["bound"] == pytest.approx(2, abs=1e-12)
        assert all(e["quotient_lemmas"]["subgroup_normal"] for e in r["per_epsilon"])

    def test_empty_grid(self, capsys):
        code, r, _ = run_json(capsys, "verify-lemmas", "--group", "builtin:q8", "--metric", "unitary")
        assert code == 0 and r["checks"] == 0

    def test_attained_grid(self, capsys):
        code, r, _ = run_json(capsys, "verify-lemmas", "--group", "builtin:s4", "--metric", "clamp:1/2:hamming",
                              "--attained")
        assert code == 0 and r["epsilons"] == ["0/1", "1/2", "3/4", "1/1"]


class TestApproxCommand:
    def test_defect_too_large(self, capsys, tmp_path):
        p = tmp_path / "s.yaml"
        p.write_text(yaml.safe_dump({"stages": [{"group": "builtin:q8", "metric": "unitary", "tuple": ["i"] * 4,
                                                 "targets": [0.1] * 4}]}))
        code, r, _ = run_json(capsys, "approx-check", "--stages", str(p))
        assert code == 0 and r["verdict"] == "not yet refuted, defect too large"

    def test_inconsistent_is_not_an_error(self, capsys, tmp_path):
        p = tmp_path / "s.json"
        stage = {"group": "builtin:q8", "metric": "unitary", "tuple": ["1"] * 4, "targets": [0.1] * 4}
        p.write_text(json.dumps([stage, stage]))
        code, r, _ = run_json(capsys, "approx-check", "--stages", str(p))
        assert code == 0 and r["verdict"] == "inconsistent at stage 1"

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "approx-check", "--stages", str(tmp_path / "none.yaml"))
        assert code == 2


class TestCatalogCommand:
    def test_lists_builtins(self, capsys):
        code, r, _ = run_json(capsys, "catalog")
        assert code == 0 and "q8" in r["builtins"]

    def test_over_cap(self, capsys):
        code, _, _ = run(capsys, "catalog", "--group", "cyclic:65")
        assert code == 2

    def test_dihedral_4(self, capsys):
        code, r, _ = run_json(capsys, "catalog", "--group", "dihedral:4")
        assert code == 0 and r["order"] == 8


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "higmetric", "catalog"], capture_output=True, text=True)
    assert p.returncode == 0 and "q8" in json.loads(p.stdout)["builtins"]


def test_export_then_analyze(tmp_path, capsys):
    out = tmp_path / "d4.json"
    assert main(["export", "--group", "builtin:dihedral:4", "--out", str(out)]) == 0
    code, r, _ = run_json(capsys, "analyze", "--group", str(out), "--metric", "unitary")
    assert code == 0 and r["order"] == 8 and r["nilpotency_class"] == 2
