import csv
import json
import math
import xml.etree.ElementTree as ElementTree

import numpy as np
import pytest

from conftest import RATE, lowpass_noise
from opdkit import Waveform, energy, read_wav, write_wav
from opdkit.cli import main, parse_grid
from opdkit.reporting import SWEEP_CSV_COLUMNS


class TestParseGrid:
    def test_range(self):
        assert parse_grid("0:1.5:0.5") == [0.0, 0.5, 1.0, 1.5]

    def test_range_inclusive_of_inexact_stop(self):
        assert parse_grid("0:1.5:0.1")[-1] == 1.5
        assert len(parse_grid("0:1.5:0.1")) == 16

    def test_comma_list(self):
        assert parse_grid("0,0.25,2") == [0.0, 0.25, 2.0]

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            parse_grid("0:1")
        with pytest.raises(ValueError):
            parse_grid("1:0:0.5")
        with pytest.raises(ValueError):
            parse_grid("0:1:-0.5")


@pytest.fixture
def corpus_dirs(tmp_path):
    speech_dir = tmp_path / "speech"
    noise_dir = tmp_path / "noise"
    speech_dir.mkdir()
    noise_dir.mkdir()
    rng = np.random.default_rng(202)
    for i in range(2):
        envelope = 0.5 + 0.5 * np.sin(2 * np.pi * np.arange(1600) / 400.0 + i) ** 2
        write_wav(speech_dir / f"utt{i}.wav",
                  Waveform(lowpass_noise(rng, 1600) * envelope * 0.05, RATE))
    # one noise file shorter than the speech (exercises tiling), one longer
    write_wav(noise_dir / "n0.wav", Waveform(lowpass_noise(rng, 1000) * 0.05, RATE))
    write_wav(noise_dir / "n1.wav", Waveform(lowpass_noise(rng, 2500) * 0.05, RATE))
    return speech_dir, noise_dir


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [dict(zip(rows[0], r)) for r in rows[1:]]


class TestMix:
    def test_mix_outputs_and_snr(self, tmp_path, corpus_dirs):
        speech_dir, noise_dir = corpus_dirs
        out = tmp_path / "mix"
        rc = main(["mix", "--speech-dir", str(speech_dir), "--noise-dir",
                   str(noise_dir), "--snr", "0", "--seed", "7", "--out", str(out)])
        assert rc == 0
        assert (out / "corpus.jsonl").exists()
        assert (out / "run_manifest.json").exists()
        for i in range(2):
            s = read_wav(out / f"utt{i}.speech.wav")
            n = read_wav(out / f"utt{i}.noise.wav")
            y = read_wav(out / f"utt{i}.mix.wav")
            assert len(s) == len(n) == len(y) == 1600
            measured = 10.0 * math.log10(energy(s) / energy(n))
            # written as float32, so the file-level SNR carries quantization
            assert measured == pytest.approx(0.0, abs=1e-5)

    def test_same_seed_is_byte_identical(self, tmp_path, corpus_dirs):
        speech_dir, noise_dir = corpus_dirs
        outs = []
        for name in ("m1", "m2"):
            out = tmp_path / name
            assert main(["mix", "--speech-dir", str(speech_dir), "--noise-dir",
                         str(noise_dir), "--snr", "3", "--seed", "5",
                         "--out", str(out)]) == 0
            outs.append(out)
        for rel in ("utt0.mix.wav", "utt1.noise.wav", "corpus.jsonl"):
            assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes()

    def test_empty_noise_dir_fails(self, tmp_path, corpus_dirs, capsys):
        speech_dir, _ = corpus_dirs
        empty = tmp_path / "empty"
        empty.mkdir()
        rc = main(["mix", "--speech-dir", str(speech_dir), "--noise-dir",
                   str(empty), "--out", str(tmp_path / "x")])
        assert rc == 1
        assert "no WAV files" in capsys.readouterr().err


@pytest.fixture
def mixed_corpus(tmp_path, corpus_dirs):
    speech_dir, noise_dir = corpus_dirs
    out = tmp_path / "mixed"
    assert main(["mix", "--speech-dir", str(speech_dir), "--noise-dir",
                 str(noise_dir), "--snr", "0", "--seed", "7",
                 "--out", str(out)]) == 0
    return out


@pytest.fixture
def enhanced_corpus(tmp_path, mixed_corpus):
    out = tmp_path / "enhanced"
    assert main(["enhance", "--corpus", str(mixed_corpus / "corpus.jsonl"),
                 "--method", "spectral-subtraction", "--frame-len", "256",
                 "--hop", "128", "--out", str(out)]) == 0
    return out


class TestEnhanceCommand:
    def test_writes_enhanced_files_and_manifest(self, enhanced_corpus):
        manifest_lines = (enhanced_corpus / "corpus.jsonl").read_text().splitlines()
        assert len(manifest_lines) == 2
        for line in manifest_lines:
            record = json.loads(line)
            assert record["enhanced_path"].endswith(".enhanced.wav")
        enhanced = read_wav(enhanced_corpus / "utt0.enhanced.wav")
        assert len(enhanced) == 1600


class TestDecomposeCommand:
    def test_metrics_json_and_components(self, tmp_path, enhanced_corpus,
                                          mixed_corpus):
        out = tmp_path / "dec"
        rc = main(["decompose",
                   "--speech", str(mixed_corpus / "utt0.speech.wav"),
                   "--noise", str(mixed_corpus / "utt0.noise.wav"),
                   "--enhanced", str(enhanced_corpus / "utt0.enhanced.wav"),
                   "--id", "utt0", "-L", "8", "--out", str(out)])
        assert rc == 0
        record = json.loads((out / "utt0.metrics.json").read_text())
        assert set(record) == {"sdr_db", "snr_db", "sar_db", "energies"}
        assert isinstance(record["sar_db"], float)
        for suffix in (".target.wav", ".enoise.wav", ".eartif.wav"):
            assert (out / f"utt0{suffix}").exists()

    def test_perfect_enhancement_reports_inf(self, tmp_path, mixed_corpus):
        out = tmp_path / "dec_perfect"
        rc = main(["decompose",
                   "--speech", str(mixed_corpus / "utt0.speech.wav"),
                   "--noise", str(mixed_corpus / "utt0.noise.wav"),
                   "--enhanced", str(mixed_corpus / "utt0.speech.wav"),
                   "--id", "perfect", "-L", "8", "--out", str(out)])
        assert rc == 0
        record = json.loads((out / "perfect.metrics.json").read_text())
        assert record["sar_db"] == "inf"
        assert record["sdr_db"] == "inf"

    def test_four_sample_running_example(self, tmp_path):
        # the worked example rendered as real WAV files end to end
        wavs = tmp_path / "tiny"
        wavs.mkdir()
        write_wav(wavs / "s.wav", Waveform([1.0, 0.0, 0.0, 0.0], RATE))
        write_wav(wavs / "n.wav", Waveform([0.0, 1.0, 0.0, 0.0], RATE))
        write_wav(wavs / "sh.wav", Waveform([0.9, 0.2, 0.1, 0.0], RATE))
        out = tmp_path / "dec_tiny"
        rc = main(["decompose", "--speech", str(wavs / "s.wav"),
                   "--noise", str(wavs / "n.wav"),
                   "--enhanced", str(wavs / "sh.wav"),
                   "--id", "tiny", "-L", "1", "--out", str(out)])
        assert rc == 0
        record = json.loads((out / "tiny.metrics.json").read_text())
        assert record["sar_db"] == pytest.approx(19.2941892571, abs=1e-3)
        assert record["snr_db"] == pytest.approx(13.0642502755, abs=1e-3)
        assert record["sdr_db"] == pytest.approx(12.0951501454, abs=1e-3)
        target = read_wav(out / "tiny.target.wav")
        np.testing.assert_allclose(target.samples, [0.9, 0.0, 0.0, 0.0], atol=1e-6)

    def test_mismatched_lengths_exit_code(self, tmp_path, mixed_corpus, capsys):
        short = tmp_path / "short.wav"
        write_wav(short, Waveform(np.ones(100) * 0.1, RATE))
        rc = main(["decompose",
                   "--speech", str(mixed_corpus / "utt0.speech.wav"),
                   "--noise", str(short), "-L", "8",
                   "--enhanced", str(mixed_corpus / "utt0.mix.wav"),
                   "--out", str(tmp_path / "dec_bad")])
        assert rc == 1
        assert "length" in capsys.readouterr().err


class TestOaCommand:
    def test_sweep_outputs(self, tmp_path, enhanced_corpus):
        out = tmp_path / "oa"
        rc = main(["oa", "--corpus", str(enhanced_corpus / "corpus.jsonl"),
                   "--grid", "0:1:0.5", "-L", "8", "--out", str(out)])
        assert rc == 0
        header, rows = read_csv(out / "oa.csv")
        assert header == SWEEP_CSV_COLUMNS
        assert len(rows) == 2 * 3
        by_utt = {}
        for record in rows:
            assert record["error"] == ""
            assert float(record["inner_s_hat_y"]) > 0
            by_utt.setdefault(record["utterance_id"], []).append(
                float(record["sar_db"]))
        # gain condition held, so SAR must rise along the grid per utterance
        for sars in by_utt.values():
            assert sars[0] < sars[1] < sars[2]
        _, summary = read_csv(out / "oa_summary.csv")
        assert len(summary) == 3
        for name in ("oa_sdr.svg", "oa_snr.svg", "oa_sar.svg"):
            ElementTree.parse(out / name)  # well-formed XML
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert manifest["parameters"]["grid"] == [0.0, 0.5, 1.0]
        assert manifest["errors"] == []

    def test_zero_grid_matches_decompose_baseline(self, tmp_path,
                                                  enhanced_corpus, mixed_corpus):
        out = tmp_path / "oa0"
        assert main(["oa", "--corpus", str(enhanced_corpus / "corpus.jsonl"),
                     "--grid", "0", "-L", "8", "--out", str(out)]) == 0
        _, rows = read_csv(out / "oa.csv")
        row = next(r for r in rows if r["utterance_id"] == "utt0")

        dec_out = tmp_path / "dec_baseline"
        assert main(["decompose",
                     "--speech", str(mixed_corpus / "utt0.speech.wav"),
                     "--noise", str(mixed_corpus / "utt0.noise.wav"),
                     "--enhanced", str(enhanced_corpus / "utt0.enhanced.wav"),
                     "--id", "utt0", "-L", "8", "--out", str(dec_out)]) == 0
        baseline = json.loads((dec_out / "utt0.metrics.json").read_text())
        assert float(row["sar_db"]) == pytest.approx(baseline["sar_db"], abs=1e-9)
        assert float(row["sari_closed_form_db"]) == 0.0

    def test_workers_do_not_change_results(self, tmp_path, enhanced_corpus):
        outputs = []
        for workers in ("1", "2"):
            out = tmp_path / f"oa_w{workers}"
            assert main(["oa", "--corpus", str(enhanced_corpus / "corpus.jsonl"),
                         "--grid", "0:1:0.5", "-L", "8", "--workers", workers,
                         "--out", str(out)]) == 0
            outputs.append((out / "oa.csv").read_bytes())
        assert outputs[0] == outputs[1]

    def test_on_the_fly_enhancement(self, tmp_path, mixed_corpus):
        # corpus without enhanced paths + --method synthesizes s_hat per utterance
        out = tmp_path / "oa_fly"
        rc = main(["oa", "--corpus", str(mixed_corpus / "corpus.jsonl"),
                   "--grid", "0,0.5", "-L", "8",
                   "--method", "ideal-binary-mask", "--frame-len", "256",
                   "--hop", "128", "--out", str(out)])
        assert rc == 0
        _, rows = read_csv(out / "oa.csv")
        assert len(rows) == 4

    def test_missing_method_and_enhanced_fails(self, tmp_path, mixed_corpus, capsys):
        rc = main(["oa", "--corpus", str(mixed_corpus / "corpus.jsonl"),
                   "--grid", "0", "-L", "8", "--out", str(tmp_path / "oa_bad")])
        assert rc == 1
        assert "no enhanced_path" in capsys.readouterr().err


class TestDsaCommand:
    def test_sweep_outputs(self, tmp_path, enhanced_corpus):
        out = tmp_path / "dsa"
        rc = main(["dsa", "--corpus", str(enhanced_corpus / "corpus.jsonl"),
                   "--grid", "0,1", "-L", "8", "--out", str(out)])
        assert rc == 0
        header, rows = read_csv(out / "dsa.csv")
        assert header == SWEEP_CSV_COLUMNS
        assert len(rows) == 2 * 4
        for record in rows:
            assert record["omega_obs"] == ""
            assert record["inner_s_hat_y"] == ""
        assert (out / "dsa_sar_vs_omega_noise.svg").exists()
        assert (out / "dsa_snr_vs_omega_artif.svg").exists()

    def test_unit_point_matches_oa_baseline(self, tmp_path, enhanced_corpus):
        dsa_out = tmp_path / "dsa_unit"
        oa_out = tmp_path / "oa_unit"
        assert main(["dsa", "--corpus", str(enhanced_corpus / "corpus.jsonl"),
                     "--grid", "0,1", "-L", "8", "--out", str(dsa_out)]) == 0
        assert main(["oa", "--corpus", str(enhanced_corpus / "corpus.jsonl"),
                     "--grid", "0", "-L", "8", "--out", str(oa_out)]) == 0
        _, dsa_rows = read_csv(dsa_out / "dsa.csv")
        _, oa_rows = read_csv(oa_out / "oa.csv")
        unit = next(r for r in dsa_rows if r["utterance_id"] == "utt1"
                    and r["omega_noise"] == "1.0" and r["omega_artif"] == "1.0")
        base = next(r for r in oa_rows if r["utterance_id"] == "utt1")
        assert float(unit["sar_db"]) == pytest.approx(float(base["sar_db"]), abs=1e-9)
        assert float(unit["sdr_db"]) == pytest.approx(float(base["sdr_db"]), abs=1e-9)


def test_numerical_failure_exit_code(tmp_path, mixed_corpus, monkeypatch, capsys):
    import opdkit.cli as cli_module
    from opdkit import SingularProjectionError

    def broken(*args, **kwargs):
        raise SingularProjectionError("forced singular system")

    monkeypatch.setattr(cli_module, "Decomposer", broken)
    rc = main(["decompose",
               "--speech", str(mixed_corpus / "utt0.speech.wav"),
               "--noise", str(mixed_corpus / "utt0.noise.wav"),
               "--enhanced", str(mixed_corpus / "utt0.mix.wav"),
               "-L", "8", "--out", str(tmp_path / "dec_sing")])
    assert rc == 2
    assert "numerical failure" in capsys.readouterr().err


def test_self_test_flag(capsys):
    rc = main(["--self-test", "--self-test-cases", "3"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "reconstruction_rel" in out


def test_no_command_prints_help(capsys):
    assert main([]) == 1
    assert "decompose" in capsys.readouterr().out
