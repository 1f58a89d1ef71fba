import csv

import pytest

from sbpsat import cli, sbp
from sbpsat.errors import ConfigError


def write_config(tmp_path, body):
    path = tmp_path / "exp.ini"
    path.write_text("[experiment]\n" + body)
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_verify_ops(tmp_path, capsys):
    assert cli.main(["verify-ops", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "verify_ops.csv")
    assert [r["status"] for r in rows] == ["pass", "pass"]
    assert "order 4" in capsys.readouterr().out


def test_verify_ops_tampered_file(tmp_path, monkeypatch):
    # main() exports the coefficient directory; let monkeypatch restore it
    monkeypatch.setenv(sbp.COEFF_DIR_ENV, "")
    c = sbp.perturbed(sbp.get_coefficients(4), order=6)
    coeff = tmp_path / "coeffs"
    coeff.mkdir()
    sbp.write_coefficients(c, coeff / "sbp_order6.txt")
    cfg = write_config(tmp_path, f"orders = 6\ncoeff_dir = {coeff}\n")
    assert cli.main(["verify-ops", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 1


def test_interface_eigs(tmp_path):
    cfg = write_config(tmp_path, "orders = 2, 4\nfamily = interpolation, projection\n")
    assert cli.main(["interface-eigs", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "interface_eigs.csv")
    assert len(rows) == 4
    assert all(float(r["k_c"]) >= -1e-13 and float(r["k_f"]) >= -1e-13 for r in rows)
    # the config is archived with the results
    assert (tmp_path / "interface-eigs.ini").exists()


def test_converge_small(tmp_path):
    cfg = write_config(tmp_path, "orders = 2\nfamily = projection\nmesh = two-block\nlevels = 0, 1\nt_final = 0.2\n")
    assert cli.main(["converge", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "converge_two-block_projection_order2.csv")
    assert [r["refinement"] for r in rows] == ["0", "1"]
    assert float(rows[1]["l2_error"]) < float(rows[0]["l2_error"])


def test_mesh_command(tmp_path):
    cfg = write_config(tmp_path, "mesh = t-junction\nlevels = 0\n")
    assert cli.main(["mesh", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "t-junction_r0" / "t-junction_topology.json").exists()


def test_solve(tmp_path):
    cfg = write_config(tmp_path, "orders = 2\nmesh = two-block\nlevels = 0\nt_final = 0.1\nobserve_every = 5\n")
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    energy = read_csv(tmp_path / "energy.csv")
    assert list(energy[0]) == ["t", "value"]
    assert float(energy[-1]["t"]) == pytest.approx(0.1)


@pytest.mark.parametrize(
    "body, field",
    [
        ("orders = 3\n", "orders"),
        ("family = spline\n", "family"),
        ("mesh = torus\n", "mesh"),
        ("safety = -1\n", "safety"),
        ("dirichlet_safety = 0\n", "dirichlet_safety"),
        ("t_final = 0\n", "t_final"),
        ("colour = red\n", "colour"),
    ],
)
def test_invalid_config(tmp_path, body, field):
    with pytest.raises(ConfigError) as exc:
        cli.ExperimentConfig.from_file(write_config(tmp_path, body))
    assert exc.value.field == field


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, "mesh = torus\n")
    assert cli.main(["mesh", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "mesh" in capsys.readouterr().err


def test_inline_comments(tmp_path):
    cfg = cli.ExperimentConfig.from_file(write_config(tmp_path, "mesh = t-junction   ; three blocks\norders = 4 # only\n"))
    assert cfg.mesh == "t-junction" and cfg.orders == [4]
