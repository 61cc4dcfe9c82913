import configparser

import numpy as np
import pytest

from rough_imager import cli
from rough_imager.synth import read_dataset


def _write(path, text):
    path.write_text(text)
    return path


@pytest.fixture
def small_far(tmp_path):
    return _write(tmp_path / "far.ini", """
[profile]
name = example1
[incident]
angles = -pi/6, pi/6   # one two-wave configuration
[frequencies]
k = 1, 3
[measurement]
kind = far
n_f = 40
[noise]
delta = 0.01
seed = 4
[inversion]
max_inner = 3
""")


class TestParsing:
    def test_numbers(self):
        assert cli.parse_number("-pi/6") == pytest.approx(-np.pi / 6)
        assert cli.parse_number("2*pi/(5)") == pytest.approx(2 * np.pi / 5)
        for bad in ("__import__('os')", "pi**", "x", ""):
            with pytest.raises(ValueError):
                cli.parse_number(bad)

    def test_angle_sets(self):
        sets = cli.parse_angle_sets("-pi/6, 0; pi/6")
        assert len(sets) == 2 and len(sets[0]) == 2 and sets[1] == pytest.approx((np.pi / 6,))

    def test_vertices(self):
        assert cli.parse_vertices("-0.5, 0; 0, 0.2; 0.5, 0") == [(-0.5, 0.0), (0.0, 0.2), (0.5, 0.0)]
        with pytest.raises(ValueError):
            cli.parse_vertices("1, 2, 3")

    @pytest.mark.parametrize("name", sorted(cli.SCENARIO_PRESETS))
    def test_presets_load(self, tmp_path, name):
        cfg = _write(tmp_path / "p.ini", f"[scenario]\npreset = {name}\n")
        mode = "invert-near" if cli.SCENARIO_PRESETS[name]["measurement"]["kind"] == "near" else "invert-far"
        scen = cli.load_scenario(mode, cfg, tmp_path / "out")
        assert scen.wavenumbers()[0] == 1.0

    def test_example2_preset_matches_published_setup(self, tmp_path):
        cfg = _write(tmp_path / "p.ini", "[scenario]\npreset = example2-two-wave\n")
        scen = cli.load_scenario("invert-far", cfg)
        np.testing.assert_array_equal(scen.wavenumbers(), np.arange(1, 26, 2))
        assert scen.angle_sets() == [pytest.approx((-np.pi / 6, np.pi / 6))]
        icfg = scen.inversion()
        assert (icfg.rho, icfg.tau, icfg.delta, icfg.M) == (0.8, 1.5, 0.05, 10)


class TestConfigErrors:
    @pytest.mark.parametrize("text", [
        "[nonsense]\na = 1\n",
        "[profile]\ncolour = red\n",
        "[profile]\nname = teapot\n",
        "[frequencies]\nN = 0\n",
        "[noise]\ndelta = -1\n",
        "[measurement]\nkind = sideways\n",
        "[inversion]\nrho = 2\n",
        "[mesh]\neta = 0\n",
        "[scenario]\npreset = unknown\n",
        "not an ini file",
    ])
    def test_exit_code_two(self, tmp_path, text, capsys):
        cfg = _write(tmp_path / "bad.ini", text)
        mode = "forward" if "eta" in text else "invert-far"
        assert cli.main([mode, "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli.main(["synth", "--config", str(tmp_path / "none.ini")]) == cli.EXIT_CONFIG

    def test_bad_thread_count(self, small_far, tmp_path):
        code = cli.main(["synth", "--config", str(small_far), "--out", str(tmp_path / "o"), "--threads", "0"])
        assert code == cli.EXIT_CONFIG

    def test_far_inversion_with_zero_guess(self, small_far, tmp_path):
        text = small_far.read_text() + "a0 = 0, 0, 0, 0, 0, 0, 0, 0, 0, 0\n"
        cfg = _write(tmp_path / "zero.ini", text)
        assert cli.main(["invert-far", "--config", str(cfg), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


class TestModes:
    def test_forward(self, tmp_path):
        cfg = _write(tmp_path / "f.ini", "[frequencies]\nk = 2\n[measurement]\nn_f = 20\nm = 15\n")
        out = tmp_path / "fw"
        assert cli.main(["forward", "--config", str(cfg), "--out", str(out)]) == 0
        far = np.loadtxt(out / "forward_far_k2_d1.dat", delimiter=",")
        near = np.loadtxt(out / "forward_near_k2_d1.dat", delimiter=",")
        assert far.shape == (20, 5) and near.shape == (15, 5)
        np.testing.assert_allclose(far[:, 4], far[:, 2] ** 2 + far[:, 3] ** 2, rtol=1e-12)

    def test_synth_and_seed_override(self, small_far, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["synth", "--config", str(small_far), "--out", str(a)]) == 0
        assert cli.main(["synth", "--config", str(small_far), "--out", str(b), "--seed", "9"]) == 0
        da, db = read_dataset(a / "data"), read_dataset(b / "data")
        assert [ms.k for ms in da] == [1.0, 3.0]
        assert da[0].noise.seed == 4 and db[0].noise.seed == 9
        assert not np.array_equal(da[0].values, db[0].values)

    def test_invert_and_manifest_rerun(self, small_far, tmp_path):
        out = tmp_path / "run"
        assert cli.main(["invert-far", "--config", str(small_far), "--out", str(out)]) == 0
        for name in ("run_log.csv", "profile.csv", "profile_k1.csv", "profile_k3.csv", "plot_k3.gp",
                     "manifest.ini"):
            assert (out / name).exists()
        man = configparser.ConfigParser(interpolation=None)
        man.read(out / "manifest.ini")
        assert man["manifest"]["status"] == "ok" and man["noise"]["seed"] == "4"
        again = tmp_path / "again"
        assert cli.main(["invert-far", "--config", str(out / "manifest.ini"), "--out", str(again)]) == 0
        assert (again / "profile.csv").read_bytes() == (out / "profile.csv").read_bytes()
        assert (again / "run_log.csv").read_bytes() == (out / "run_log.csv").read_bytes()

    def test_invert_from_existing_data(self, small_far, tmp_path):
        assert cli.main(["synth", "--config", str(small_far), "--out", str(tmp_path / "s")]) == 0
        cfg = _write(tmp_path / "use.ini", small_far.read_text() + f"[data]\ndirectory = {tmp_path / 's' / 'data'}\n")
        assert cli.main(["invert-far", "--config", str(cfg), "--out", str(tmp_path / "i")]) == 0
        assert cli.main(["invert-near", "--config", str(cfg), "--out", str(tmp_path / "j")]) == cli.EXIT_CONFIG

    def test_plots_are_relocatable(self, small_far, tmp_path):
        out = tmp_path / "run"
        cli.main(["invert-far", "--config", str(small_far), "--out", str(out)])
        moved = tmp_path / "elsewhere"
        out.rename(moved)
        scripts = cli.emit_plots(moved)
        text = scripts[-1].read_text()
        assert "'profile_k3.csv'" in text and str(tmp_path) not in text
        with pytest.raises(FileNotFoundError):
            cli.emit_plots(tmp_path)

    @pytest.mark.slow
    def test_verify(self, tmp_path, capsys):
        cfg = _write(tmp_path / "v.ini", "[profile]\nname = example1\n")
        assert cli.main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v")]) == 0
        lines = (tmp_path / "v" / "verify.txt").read_text().splitlines()
        assert len(lines) == 5 and all(line.startswith("PASS") for line in lines)

    def test_verify_failure_exit_code(self, tmp_path):
        cfg = _write(tmp_path / "v.ini", "[verify]\ntolerance = 1e-30\nmesh_scale = 1\n")
        assert cli.main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v")]) == cli.EXIT_NUMERICAL
