import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.io import wavfile

from opdkit import Waveform, read_wav, write_wav


@pytest.fixture
def wave_in():
    rng = np.random.default_rng(42)
    return Waveform(np.clip(rng.standard_normal(300) * 0.2, -0.99, 0.99), 22050)


def test_float32_round_trip(tmp_path, wave_in):
    path = tmp_path / "f32.wav"
    write_wav(path, wave_in, fmt="float32")
    back = read_wav(path)
    assert back.sample_rate == wave_in.sample_rate
    assert back.samples.dtype == np.float64
    assert_allclose(back.samples, wave_in.samples, atol=1e-7)


def test_pcm16_round_trip(tmp_path, wave_in):
    path = tmp_path / "p16.wav"
    write_wav(path, wave_in, fmt="pcm16")
    back = read_wav(path)
    assert back.sample_rate == wave_in.sample_rate
    assert_allclose(back.samples, wave_in.samples, atol=1.0 / 32767)


def test_multichannel_rejected(tmp_path):
    path = tmp_path / "stereo.wav"
    wavfile.write(path, 8000, np.zeros((100, 2), dtype=np.float32))
    with pytest.raises(ValueError, match="mono"):
        read_wav(path)


def test_unsupported_sample_format_rejected(tmp_path):
    path = tmp_path / "i32.wav"
    wavfile.write(path, 8000, np.zeros(100, dtype=np.int32))
    with pytest.raises(ValueError, match="unsupported sample format"):
        read_wav(path)


def test_unknown_write_format_rejected(tmp_path, wave_in):
    with pytest.raises(ValueError, match="unsupported WAV format"):
        write_wav(tmp_path / "x.wav", wave_in, fmt="mp3")
