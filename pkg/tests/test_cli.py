import json
import subprocess
import sys

import numpy as np
import pytest

from pideg.cli import main
from pideg.io import read_trace_csv
from pideg.presets import FIGURES, PRESETS, figure_presets

from test_io import parse_wav


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


class TestRender:
    def test_basic(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code, stdout, _ = run(["render", "--kp", "0.1", "--gate", "on:1,off:1", "--out", str(out)],
                              capsys)
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2001
        assert lines[1] == "0,0.00000000,1,0,0,0"
        assert "tail=finite" in stdout

    def test_negative_gain(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code, _, err = run(["render", "--kp", "-1", "--out", str(out)], capsys)
        assert code == 2 and "--kp" in err
        assert not out.exists()

    def test_never_settling_tail_flagged(self, tmp_path, capsys):
        code, stdout, _ = run(["render", "--kp", "2", "--gate", "on:0.999,off:5",
                               "--out", str(tmp_path / "t.csv")], capsys)
        assert code == 0
        assert "tail=never-settling" in stdout

    def test_saturated_even_key_on_cancels(self, tmp_path, capsys):
        # With a 1000-sample key-on the marginal kp=2 loop lands on a state
        # that the key-off transient cancels exactly; the tail dies out.
        code, stdout, _ = run(["render", "--kp", "2", "--gate", "on:1,off:5",
                               "--out", str(tmp_path / "t.csv")], capsys)
        assert code == 0
        assert "tail=finite" in stdout

    def test_takeover_terminates(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code, stdout, _ = run(["render", "--kp", "2", "--gate", "on:0.999,off:5",
                               "--takeover", "100,0.02,250", "--out", str(out)], capsys)
        assert code == 0 and "tail=finite" in stdout
        assert read_trace_csv(out).eo[-1] == 0.0

    def test_short_tail_not_judged(self, tmp_path, capsys):
        code, stdout, _ = run(["render", "--kp", "1", "--gate", "on:0.1",
                               "--out", str(tmp_path / "t.csv")], capsys)
        assert code == 0 and "tail=n/a" in stdout

    @pytest.mark.parametrize("lc", ["trap", "adsr"])
    def test_lc_kinds(self, tmp_path, capsys, lc):
        code, _, _ = run(["render", "--kp", "0.3", "--lc", lc, "--gate", "on:0.2,off:0.3",
                          "--out", str(tmp_path / "t.csv")], capsys)
        assert code == 0

    def test_external_lc(self, tmp_path, capsys):
        lc = tmp_path / "lc.csv"
        lc.write_text("lc\n" + "\n".join(str(v) for v in np.linspace(0, 1, 50)) + "\n")
        out = tmp_path / "t.csv"
        code, _, _ = run(["render", "--kp", "0.5", "--lc", f"file:{lc}", "--gate", "on:0.05",
                          "--out", str(out)], capsys)
        assert code == 0
        assert np.allclose(read_trace_csv(out).lc, np.linspace(0, 1, 50), rtol=0, atol=1e-15)

    def test_external_lc_too_short(self, tmp_path, capsys):
        lc = tmp_path / "lc.csv"
        lc.write_text("0.1\n0.2\n")
        out = tmp_path / "t.csv"
        code, _, err = run(["render", "--lc", f"file:{lc}", "--out", str(out)], capsys)
        assert code == 2 and "samples" in err
        assert not out.exists()

    @pytest.mark.parametrize("argv", [
        ["--gate", "on:x"],
        ["--gate", ""],
        ["--lc", "boxcar"],
        ["--lc", "file:/nonexistent/lc.csv"],
        ["--windup", "maybe"],
        ["--takeover", "100,0.02"],
        ["--takeover", "100,2,250"],
        ["--d-off", "0"],
        ["--kr", "0"],
        ["--fs", "nan"],
    ])
    def test_invalid_flags(self, tmp_path, capsys, argv):
        out = tmp_path / "t.csv"
        code, _, err = run(["render", *argv, "--out", str(out)], capsys)
        assert code == 2 and err
        assert not out.exists()

    def test_blow_up_exit_1(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code, _, err = run(["render", "--kp", "3", "--gate", "on:2", "--out", str(out)], capsys)
        assert code == 1 and "error" in err
        assert not out.exists()

    def test_unwritable_destination(self, tmp_path, capsys):
        code, _, _ = run(["render", "--out", str(tmp_path / "no" / "t.csv")], capsys)
        assert code == 1


class TestSweep:
    @pytest.mark.parametrize("fig, gains", [
        (11, ("kp", [1e-4, 1e-3, 1e-1, 2.0])),
        (12, ("ki", [1e-4, 1e-3, 1e-2, 1e-1])),
    ])
    def test_fixed_grid_sweeps(self, tmp_path, capsys, fig, gains):
        code, stdout, _ = run(["sweep", "--figure", str(fig), "--outdir", str(tmp_path)], capsys)
        assert code == 0
        names = [p.name for p in figure_presets(fig)]
        assert sorted(f.stem for f in tmp_path.glob("*.csv")) == sorted(names)
        attr, values = gains
        assert [getattr(p.params, attr) for p in figure_presets(fig)] == values
        for line, name in zip(stdout.splitlines(), names):
            label, payload = line.split(" ", 1)
            assert label == name
            assert "alternation_ratio" in json.loads(payload)

    def test_unknown_figure(self, tmp_path, capsys):
        code, _, err = run(["sweep", "--figure", "99", "--outdir", str(tmp_path)], capsys)
        assert code == 2 and "99" in err

    def test_presets_pin_ambient_choices(self):
        assert set(FIGURES) == set(range(11, 18))
        assert len(PRESETS) == sum(len(v) for v in FIGURES.values())
        for p in PRESETS.values():
            assert p.fs == 1000.0 and p.lc.kr == 100 and p.lc.kf == 100
            assert p.params.windup is False and p.params.d_disable_after_keyoff == 92

    def test_unknown_preset_figure(self):
        with pytest.raises(KeyError):
            figure_presets(10)


class TestAudio:
    def test_defaults(self, tmp_path, capsys):
        wav = tmp_path / "a.wav"
        code, _, _ = run(["audio", "--kp", "0.1", "--tone", "440", "--audio-fs", "44100",
                          "--wav", str(wav)], capsys)
        assert code == 0
        fmt, pcm = parse_wav(wav.read_bytes())
        assert fmt["rate"] == 44100 and fmt["channels"] == 1 and fmt["bits"] == 16
        assert pcm.size == 2 * 44100 and pcm.any()

    def test_nyquist_violation(self, tmp_path, capsys):
        wav = tmp_path / "a.wav"
        code, _, _ = run(["audio", "--tone", "30000", "--audio-fs", "44100", "--wav", str(wav)],
                         capsys)
        assert code == 2 and not wav.exists()

    def test_zero_gain_silent(self, tmp_path, capsys):
        wav = tmp_path / "a.wav"
        code, _, _ = run(["audio", "--wav", str(wav)], capsys)
        assert code == 0
        _, pcm = parse_wav(wav.read_bytes())
        assert pcm.size and not pcm.any()

    def test_trace_alongside(self, tmp_path, capsys):
        wav, csv = tmp_path / "a.wav", tmp_path / "a.csv"
        code, _, _ = run(["audio", "--kp", "0.1", "--gate", "on:0.1", "--wav", str(wav),
                          "--out", str(csv)], capsys)
        assert code == 0 and len(csv.read_text().splitlines()) == 101


class TestAnalyze:
    def _write(self, path, eo):
        rows = ["n,t,gate,lc,fc,eo"] + [f"{i},{i / 1000:.8f},1,1,{v},{v}" for i, v in enumerate(eo)]
        path.write_text("\n".join(rows) + "\n")

    def test_constant_trace(self, tmp_path, capsys):
        p = tmp_path / "c.csv"
        self._write(p, [1.0] * 200)
        code, stdout, _ = run(["analyze", "--in", str(p), "--json"], capsys)
        assert code == 0
        rep = json.loads(stdout)
        assert rep["alternation_ratio"] == 0 and rep["settling_time_s"] == 0
        assert all(isinstance(v, (int, float, bool)) for v in rep.values())

    def test_fig11d(self, tmp_path, capsys):
        run(["sweep", "--figure", "11", "--outdir", str(tmp_path)], capsys)
        code, stdout, _ = run(["analyze", "--in", str(tmp_path / "fig11d.csv"),
                               "--window", "0.2,0.9", "--json"], capsys)
        assert code == 0
        assert json.loads(stdout)["alternation_ratio"] >= 0.9

    def test_text_output(self, tmp_path, capsys):
        p = tmp_path / "c.csv"
        self._write(p, [0.5] * 10)
        code, stdout, _ = run(["analyze", "--in", str(p)], capsys)
        assert code == 0 and "max_bump: 0.0" in stdout

    def test_missing_file(self, tmp_path, capsys):
        code, _, _ = run(["analyze", "--in", str(tmp_path / "nope.csv")], capsys)
        assert code == 2

    def test_malformed_file(self, tmp_path, capsys):
        p = tmp_path / "bad.csv"
        p.write_text("hello\n")
        code, _, _ = run(["analyze", "--in", str(p)], capsys)
        assert code == 2

    @pytest.mark.parametrize("window", ["0.5", "0.9,0.2", "a,b"])
    def test_bad_window(self, tmp_path, capsys, window):
        p = tmp_path / "c.csv"
        self._write(p, [1.0] * 10)
        code, _, _ = run(["analyze", "--in", str(p), "--window", window], capsys)
        assert code == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pideg", "render", "--kp", "0.1", "--gate",
                           "on:0.01", "--out", str(tmp_path / "t.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "samples=10" in proc.stdout
