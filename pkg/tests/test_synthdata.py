"""Tests for scripts.synthdata: tube ear model and database generator."""

import dataclasses

import numpy as np
import pytest

from scripts.common.hteq_errors import ConfigError, DataError
from scripts.common.hteq_io import directory_hash
from scripts.spectra.atf_store import load_database, load_manifest
from scripts.synthdata import generate_database as gen
from scripts.synthdata.ear_model import (
    CANAL_LENGTH_RANGE,
    CANAL_RADIUS_RANGE,
    DRUM_RESISTANCE_RANGE,
    INSERTION_DEPTH_RANGE,
    LEAK_GAIN_RANGE,
    NOISE_DB_RANGE,
    EarModelParams,
    reinsert,
    sample_subject,
)
from scripts.synthdata.generate_database import (
    GeneratorConfig,
    export_database,
    generate_database,
    render_atf_set,
    subject_stream,
)


def db_mag(x):
    return 20 * np.log10(np.abs(x))


def band(fr, low, high):
    f = fr.freqs_hz
    return (f >= low) & (f <= high)


# ---------------------------------------------------------------------------
# Ear model
# ---------------------------------------------------------------------------


class TestSampleSubject:
    def test_deterministic(self):
        assert sample_subject(subject_stream(42, 0)) == sample_subject(subject_stream(42, 0))

    def test_different_seeds_differ(self):
        assert sample_subject(subject_stream(1, 0)) != sample_subject(subject_stream(2, 0))

    def test_ranges(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            p = sample_subject(rng)
            assert CANAL_LENGTH_RANGE[0] <= p.canal_length_m <= CANAL_LENGTH_RANGE[1]
            assert CANAL_RADIUS_RANGE[0] <= p.canal_radius_m <= CANAL_RADIUS_RANGE[1]
            assert DRUM_RESISTANCE_RANGE[0] <= p.drum_resistance <= DRUM_RESISTANCE_RANGE[1]
            assert INSERTION_DEPTH_RANGE[0] <= p.insertion_depth_m <= INSERTION_DEPTH_RANGE[1]
            assert LEAK_GAIN_RANGE[0] <= p.leak_gain <= LEAK_GAIN_RANGE[1]
            assert NOISE_DB_RANGE[0] <= p.processing_noise_db <= NOISE_DB_RANGE[1]
            assert 0 < p.mic_offset_m < p.canal_length_m

    @pytest.mark.parametrize(
        "kwargs",
        [{"drum_resistance": 1.0}, {"canal_length_m": 0.0}, {"mic_offset_m": 0.05}, {"leak_gain": 0.0}],
    )
    def test_invalid_params(self, kwargs):
        with pytest.raises(DataError):
            EarModelParams(**kwargs)

    def test_reinsert_without_noise_is_identity(self):
        p = EarModelParams(processing_noise_db=0.0)
        assert reinsert(p, np.random.default_rng(0)) == p

    def test_reinsert_keeps_total_depth(self):
        p = EarModelParams()
        q = reinsert(p, np.random.default_rng(3))
        assert q.canal_length_m + q.insertion_depth_m == pytest.approx(p.canal_length_m + p.insertion_depth_m)
        assert q.mic_offset_m / q.canal_length_m == pytest.approx(p.mic_offset_m / p.canal_length_m)


class TestRenderAtfSet:
    def test_spectra_are_valid(self):
        atf = render_atf_set(EarModelParams(), 1, GeneratorConfig())
        for name in "ocmrs":
            fr = atf.path(name)
            assert fr.has_real_edges(tol=0.0)
            assert np.all(np.isfinite(fr.bins))
            assert fr.fft_size == 1024 and fr.rate.hertz == 40000.0

    def test_anechoic_termination_has_no_standing_waves(self):
        p = EarModelParams(drum_resistance=1e-6, processing_noise_db=0.0)
        atf = render_atf_set(p, 1, GeneratorConfig())
        mag = db_mag(atf.r.bins[band(atf.r, 1000.0, 6000.0)])
        assert mag.max() - mag.min() < 3.0

    def test_colocated_mic_gives_s_equal_r(self):
        atf = render_atf_set(EarModelParams(mic_offset_m=0.0), 2, GeneratorConfig())
        np.testing.assert_array_equal(atf.s.bins, atf.r.bins)

    def test_s_and_r_differ_mostly_at_high_frequencies(self):
        atf = render_atf_set(EarModelParams(), 1, GeneratorConfig())
        diff = np.abs(atf.s.bins - atf.r.bins) ** 2
        low = diff[band(atf.r, 0.0, 1000.0)].sum()
        high = diff[band(atf.r, 2000.0, 8000.0)].sum()
        assert low < 0.1 * high

    def test_s_and_r_agree_below_500_hz(self):
        db = generate_database(GeneratorConfig(n_subjects=6, n_trials=2, seed=3))
        for atf in db:
            sel = band(atf.r, 0.0, 500.0)
            assert np.mean(np.abs(db_mag(atf.s.bins[sel]) - db_mag(atf.r.bins[sel]))) < 1.0

    def test_occluded_path_is_attenuated(self):
        atf = render_atf_set(EarModelParams(), 1, GeneratorConfig())
        sel = band(atf.o, 2000.0, 8000.0)
        assert np.all(np.abs(atf.c.bins[sel]) < np.abs(atf.o.bins[sel]))


# ---------------------------------------------------------------------------
# Database generation
# ---------------------------------------------------------------------------


class TestGenerateDatabase:
    def test_config_defaults(self):
        cfg = GeneratorConfig()
        assert (cfg.n_subjects, cfg.n_trials, cfg.seed, cfg.rate_hz, cfg.fft_size) == (18, 3, 0, 40000.0, 1024)
        assert cfg.device_delay_seconds == 0.0016

    @pytest.mark.parametrize("kwargs", [{"n_subjects": 0}, {"seed": -1}, {"fft_size": 33}, {"rate_hz": 0.0}])
    def test_config_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            GeneratorConfig(**kwargs)

    def test_default_size(self):
        db = generate_database(GeneratorConfig())
        assert db.J == 54
        assert len(db.subjects()) == 18
        assert db.subjects()[0] == "S01"

    def test_single_set(self):
        assert generate_database(GeneratorConfig(n_subjects=1, n_trials=1)).J == 1

    def test_deterministic(self):
        cfg = GeneratorConfig(n_subjects=3, n_trials=2, seed=11, fft_size=128)
        assert generate_database(cfg).fingerprint() == generate_database(cfg).fingerprint()
        other = dataclasses.replace(cfg, seed=12)
        assert generate_database(other).fingerprint() != generate_database(cfg).fingerprint()

    def test_subject_stable_across_corpus_size(self):
        small = generate_database(GeneratorConfig(n_subjects=3, n_trials=2, fft_size=128))
        large = generate_database(GeneratorConfig(n_subjects=5, n_trials=2, fft_size=128))
        assert [s.fingerprint() for s in small] == [s.fingerprint() for s in large.sets[:6]]

    def test_trials_closer_than_subjects(self):
        db = generate_database(GeneratorConfig(n_subjects=100, n_trials=2, seed=5, fft_size=256))
        subjects = db.subjects()
        sel = band(db.grid, 100.0, 10000.0)

        def dist(a, b):
            return np.mean(np.abs(db_mag(a.r.bins[sel]) - db_mag(b.r.bins[sel])))

        within = np.mean([dist(db.get(s, 1), db.get(s, 2)) for s in subjects])
        across = np.mean([dist(db.get(a, 1), db.get(b, 1)) for a, b in zip(subjects, subjects[1:])])
        assert within < across

    def test_export_is_byte_identical(self, tmp_path):
        cfg = GeneratorConfig(n_subjects=2, n_trials=2, seed=4, fft_size=64)
        export_database(cfg, tmp_path / "a")
        export_database(cfg, tmp_path / "b")
        assert directory_hash(tmp_path / "a") == directory_hash(tmp_path / "b")
        manifest = load_manifest(tmp_path / "a")
        assert manifest["generator"]["seed"] == 4 and manifest["source"] == "synthetic"
        assert load_database(tmp_path / "a").fingerprint() == generate_database(cfg).fingerprint()

    def test_script_entry_point(self, tmp_path):
        out = tmp_path / "db"
        assert gen.main(["--out", str(out), "--subjects", "2", "--trials", "1", "--fft-size", "64"]) == 0
        assert load_database(out).J == 2
