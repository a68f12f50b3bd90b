import io
import json

import numpy as np
import pytest

from stablecap.cli import DEFAULT_SEED, EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, EXIT_VIOLATED, lambda_min, main
from stablecap.matrices import PsdTuple, ones_matrix, prod_polynomial, special_matrix_D, write_matrix_csv
from stablecap.poly import HomPoly, is_doubly_stochastic


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def write_poly(path, p):
    path.write_text(json.dumps(p.to_json_obj()))
    return str(path)


def write_matrix(path, A):
    write_matrix_csv(A, path)
    return str(path)


@pytest.mark.parametrize(
    "A, text",
    [(ones_matrix(3), "0.2222222222"), (np.eye(4), "1"), (special_matrix_D(3, 2), "0.25")],
)
def test_permanent(tmp_path, A, text):
    code, out = run(["permanent", write_matrix(tmp_path / "a.csv", A)])
    assert code == EXIT_OK and out.strip() == text


def test_permanent_json_and_naive(tmp_path):
    path = write_matrix(tmp_path / "a.csv", ones_matrix(3))
    code, out = run(["permanent", path, "--method", "naive", "--format", "json"])
    assert json.loads(out)["permanent"] == pytest.approx(2 / 9)


def test_permanent_bad_input(tmp_path):
    (tmp_path / "bad.csv").write_text("1,x\n2,3\n")
    assert run(["permanent", str(tmp_path / "bad.csv")])[0] == EXIT_INPUT
    assert run(["permanent", str(tmp_path / "missing.csv")])[0] == EXIT_INPUT


def test_mixed_disc(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps(PsdTuple((np.eye(2) / 2, np.eye(2) / 2)).to_json_obj()))
    code, out = run(["mixed-disc", str(path)])
    assert code == EXIT_OK and out.strip() == "0.5"


@pytest.mark.parametrize(
    "p, value, attained",
    [
        ("J3", 1.0, True),
        (HomPoly(2, 2, {(2, 0): 1.0, (1, 1): 1.0, (0, 2): 1.0}), 3.0, True),
        (HomPoly(2, 2, {(2, 0): 1.0}), 0.0, False),
    ],
)
def test_capacity(tmp_path, p, value, attained):
    if p == "J3":
        path = write_matrix(tmp_path / "j.csv", ones_matrix(3))
    else:
        path = write_poly(tmp_path / "p.json", p)
    code, out = run(["capacity", path])
    res = json.loads(out)
    assert code == EXIT_OK
    assert res["value"] == pytest.approx(value, abs=1e-6) and res["attained"] is attained


def test_capacity_inhomogeneous(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"num_vars": 2, "degree": 2, "monomials": [{"exps": [1, 0], "coeff": 1}]}))
    assert run(["capacity", str(path)])[0] == EXIT_INPUT


def test_scale(tmp_path):
    A = np.array([[1.0, 2.0], [3.0, 1.0]])
    code, out = run(["scale", write_matrix(tmp_path / "a.csv", A)])
    assert code == EXIT_OK
    poly = HomPoly.from_json_obj(json.loads(out)["polynomial"])
    assert is_doubly_stochastic(poly, 1e-7)


def test_scale_not_attained(tmp_path):
    path = write_poly(tmp_path / "p.json", HomPoly(2, 2, {(1, 1): 1, (0, 2): 1}))
    assert run(["scale", path])[0] == EXIT_NUMERIC


def test_certify_examples(tmp_path, rng):
    code, out = run(["certify", write_matrix(tmp_path / "j.csv", ones_matrix(4)), "--bound", "vdw"])
    assert code == EXIT_OK and abs(json.loads(out)["slack"]) <= 1e-8
    code, out = run(["certify", write_matrix(tmp_path / "d.csv", special_matrix_D(4, 2)), "--bound", "schrijver_general"])
    assert code == EXIT_OK and abs(json.loads(out)["slack"]) <= 1e-8
    code, out = run(["certify", write_matrix(tmp_path / "r.csv", rng.uniform(0.1, 1, (5, 5))), "--bound", "vdw"])
    assert code == EXIT_OK and json.loads(out)["slack"] > 0


def test_certify_order_samples(tmp_path):
    path = write_matrix(tmp_path / "d.csv", special_matrix_D(5, 2)[:, ::-1])
    code, out = run(["certify", path, "--bound", "schrijver_general", "--order-samples", "5"])
    assert code == EXIT_OK and json.loads(out)["slack"] == pytest.approx(0, abs=1e-9)


def test_certify_violation_exit_code(tmp_path):
    # x1^2 + x2^2 is not stable, and its multilinear coefficient 0 is below vdw(2) * Cap = 1
    path = write_poly(tmp_path / "p.json", HomPoly(2, 2, {(2, 0): 1.0, (0, 2): 1.0}))
    code, out = run(["certify", path, "--bound", "vdw"])
    assert code == EXIT_VIOLATED and json.loads(out)["slack"] == pytest.approx(-1)


def test_certify_misapplied_bound(tmp_path):
    path = write_poly(tmp_path / "p.json", HomPoly(2, 2, {(1, 1): 1.0}))
    assert run(["certify", path, "--bound", "improved_lambda"])[0] == EXIT_INPUT


@pytest.mark.parametrize("k, n, min_per", [(2, 4, 2), (1, 3, 1), (3, 4, 9)])
def test_lambda_min(k, n, min_per):
    code, out = run(["lambda-min", "--k", str(k), "--n", str(n)])
    res = json.loads(out)
    assert code == EXIT_OK and res["min_per"] == min_per
    assert res["min_per"] >= res["bound"]
    if (k, n) == (3, 4):
        assert res["bound"] == 8


def test_lambda_min_parallel_matches_serial():
    assert lambda_min(2, 4, jobs=2) == lambda_min(2, 4, jobs=1)


def test_lambda_min_budget():
    assert run(["lambda-min", "--k", "9", "--n", "3"])[0] == EXIT_INPUT


def test_stability(tmp_path, rng):
    stable = write_poly(tmp_path / "s.json", prod_polynomial(rng.uniform(0.1, 1, (4, 4))))
    code, out = run(["stability", stable, "--trials", "50"])
    assert json.loads(out)["status"] == "probably_stable"
    circle = write_poly(tmp_path / "c.json", HomPoly(2, 2, {(2, 0): 1.0, (0, 2): 1.0}))
    res = json.loads(run(["stability", circle])[1])
    assert res["status"] == "refuted" and res["witness"] is not None
    cube = write_poly(tmp_path / "k.json", HomPoly.linear_form([1.0, 1.0, 1.0]) ** 3)
    assert json.loads(run(["stability", cube])[1])["status"] == "probably_stable"


def test_byte_identical_output(tmp_path):
    path = write_poly(tmp_path / "q.json", HomPoly(2, 2, {(2, 0): 1.0, (1, 1): 0.5, (0, 2): 1.0}))
    for cmd in (["stability", path, "--seed", "99"], ["capacity", path], ["cascade", path]):
        assert run(cmd)[1] == run(cmd)[1]
    assert run(["stability", path])[1] == run(["stability", path, "--seed", str(DEFAULT_SEED)])[1]


def test_cascade(tmp_path):
    code, out = run(["cascade", write_matrix(tmp_path / "j.csv", ones_matrix(4))])
    res = json.loads(out)
    assert code == EXIT_OK and res["all_hold"]
    assert res["q1"] == pytest.approx(3 / 32)
    assert [s["level"] for s in res["steps"]] == [4, 3, 2, 1]


def test_table_format(tmp_path):
    code, out = run(["capacity", write_matrix(tmp_path / "j.csv", ones_matrix(3)), "--format", "table"])
    assert code == EXIT_OK and out.splitlines()[0].split()[0] == "value"


def test_bad_arguments():
    assert run(["nonsense"])[0] == EXIT_INPUT
