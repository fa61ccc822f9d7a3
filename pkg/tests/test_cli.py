import json

import pytest

from rsma_plan.cli import main

from helpers import LOG2_7


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


@pytest.fixture
def three_user(tmp_path):
    return write(tmp_path, "p3.json", {"powers": [2, 2, 2], "rates": [LOG2_7 / 6] * 3, "noise": 1})


class TestCheck:
    def test_outside_names_subset(self, tmp_path, capsys):
        path = write(tmp_path, "p.json", {"powers": [3, 3], "rates": [0.8, 0.8], "noise": 1})
        assert main(["check", path]) == 1
        out = capsys.readouterr().out
        assert "Outside" in out and "{1,2}" in out

    def test_vertex_is_on_face(self, tmp_path, capsys):
        path = write(tmp_path, "p.json",
                     {"powers": [2, 2, 2], "rates": [0.792481250360578, 0.368482797083103,
                                                     0.24271341358512083], "noise": 1})
        assert main(["check", path, "--format", "json"]) == 0
        assert json.loads(capsys.readouterr().out)["status"] == "DominantFace"

    def test_interior(self, tmp_path, capsys):
        path = write(tmp_path, "p.json", {"powers": [3, 3], "rates": [0.3, 0.3], "noise": 1})
        assert main(["check", path]) == 1
        assert "Interior" in capsys.readouterr().out

    @pytest.mark.parametrize("text", ["{not json", '{"powers": [1, -2], "rates": [1, 1], "noise": 1}',
                                      '{"powers": [1], "rates": [1, 1], "noise": 1}', "[]"])
    def test_malformed(self, tmp_path, capsys, text):
        assert main(["check", write(tmp_path, "p.json", text)]) == 2
        assert "error" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["check", str(tmp_path / "nope.json")]) == 2


class TestVertex:
    def test_identity(self, tmp_path, capsys):
        path = write(tmp_path, "p.json", {"powers": [2, 2, 2], "noise": 1})
        assert main(["vertex", path, "--format", "json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["rates"] == pytest.approx([0.792481250360578, 0.368482797083103,
                                              0.24271341358512083], rel=1e-12)
        assert out["decode_order"] == [3, 2, 1]

    def test_swap(self, tmp_path, capsys):
        path = write(tmp_path, "p.json", {"powers": [3, 3], "noise": 1})
        assert main(["vertex", path, "--perm", "2,1", "--format", "json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["rates"] == pytest.approx([0.5 * LOG2_7 - 1, 1.0], rel=1e-12)

    @pytest.mark.parametrize("perm", ["1,1,2", "1,2", "a,b,c", "0,1,2"])
    def test_bad_perm(self, tmp_path, perm):
        path = write(tmp_path, "p.json", {"powers": [2, 2, 2], "noise": 1})
        assert main(["vertex", path, "--perm", perm]) == 2


class TestSplitVerify:
    def test_split_three_users(self, three_user, capsys):
        assert main(["split", three_user, "--format", "json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert len(out["virtual_users"]) == 5
        assert out["decode_order"] == ["1.1", "2.1", "3", "2.2", "1.2"]
        assert out["verification"]["ok"] is True
        assert out["epsilon"][0] == pytest.approx(0.7479240004404293, rel=1e-12)

    def test_split_text(self, three_user, capsys):
        assert main(["split", three_user]) == 0
        out = capsys.readouterr().out
        assert "verification: PASS" in out
        rows = [line for line in out.splitlines() if "user " in line or line.endswith("noise")]
        assert len(rows) == 6
        assert "user 1.1" in rows[0] and rows[-1].endswith("noise")

    def test_vertex_input_not_split(self, tmp_path, capsys):
        path = write(tmp_path, "p.json",
                     {"powers": [2, 2, 2], "rates": [0.792481250360578, 0.368482797083103,
                                                     0.24271341358512083], "noise": 1})
        assert main(["split", path, "--format", "json"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["epsilon"] == [1.0, 1.0, 1.0]
        assert len(out["virtual_users"]) == 3

    def test_interior_rejected(self, tmp_path, capsys):
        path = write(tmp_path, "p.json", {"powers": [3, 3], "rates": [0.3, 0.3], "noise": 1})
        assert main(["split", path]) == 1
        assert "Interior" in capsys.readouterr().err

    def test_split_then_verify(self, three_user, tmp_path, capsys):
        plan = str(tmp_path / "plan.json")
        assert main(["split", three_user, "-o", plan, "--format", "json", "--emit-tree"]) == 0
        capsys.readouterr()
        assert main(["verify", plan]) == 0
        assert "verification: PASS" in capsys.readouterr().out

    def test_edited_plan_fails(self, three_user, tmp_path, capsys):
        plan = tmp_path / "plan.json"
        assert main(["split", three_user, "-o", str(plan), "--format", "json"]) == 0
        data = json.loads(plan.read_text())
        data["virtual_users"][0]["nis"] += 0.1
        plan.write_text(json.dumps(data))
        capsys.readouterr()
        assert main(["verify", str(plan), "--format", "json"]) == 1
        report = json.loads(capsys.readouterr().out)
        assert report["stacking_ok"] is False
        assert report["max_stack_gap"] == pytest.approx(0.1, rel=1e-9)

    def test_truncated_plan(self, three_user, tmp_path):
        plan = tmp_path / "plan.json"
        assert main(["split", three_user, "-o", str(plan), "--format", "json"]) == 0
        plan.write_text(plan.read_text()[:200])
        assert main(["verify", str(plan)]) == 2

    def test_plan_missing_key(self, three_user, tmp_path):
        plan = tmp_path / "plan.json"
        assert main(["split", three_user, "-o", str(plan), "--format", "json"]) == 0
        data = json.loads(plan.read_text())
        del data["decode_order"]
        plan.write_text(json.dumps(data))
        assert main(["verify", str(plan)]) == 2

    def test_byte_stable(self, three_user, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["split", three_user, "-o", str(a), "--format", "json", "--emit-tree"])
        main(["split", three_user, "-o", str(b), "--format", "json", "--emit-tree"])
        assert a.read_bytes() == b.read_bytes()

    def test_plan_round_trip(self, three_user, tmp_path):
        from rsma_plan.planfile import dumps, loads, plan_from_dict, plan_to_dict
        from rsma_plan.verifier import verify_plan

        path = tmp_path / "plan.json"
        main(["split", three_user, "-o", str(path), "--format", "json", "--emit-tree"])
        text = path.read_text()
        plan, tol = plan_from_dict(loads(text))
        assert dumps(plan_to_dict(plan, verify_plan(plan, tolerance=tol), tol, True)) == text


class TestSample:
    def test_sample_then_split(self, tmp_path, capsys):
        path = str(tmp_path / "p.json")
        assert main(["sample", "--seed", "3", "--n", "5", "-o", path]) == 0
        data = json.loads(open(path).read())
        assert len(data["powers"]) == len(data["rates"]) == 5
        assert main(["split", path]) == 0

    def test_sample_is_seeded(self, capsys):
        main(["sample", "--seed", "4", "--powers", "1,2,3"])
        first = capsys.readouterr().out
        main(["sample", "--seed", "4", "--powers", "1,2,3"])
        assert capsys.readouterr().out == first
        assert json.loads(first)["powers"] == [1.0, 2.0, 3.0]

    def test_sample_needs_size(self):
        assert main(["sample", "--seed", "1"]) == 2

    def test_usage_errors(self):
        assert main([]) == 2
        assert main(["bogus"]) == 2
        assert main(["check", "x.json", "--tolerance", "-1"]) == 2
