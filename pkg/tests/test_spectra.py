"""Tests for scripts.spectra: types, transforms, database store."""

import json

import numpy as np
import pytest

from scripts.common.hteq_errors import DataError, DimensionError, SchemaError
from scripts.spectra.atf_store import (
    DATABASE_SCHEMA_V1,
    FREQ_COLUMNS,
    MANIFEST_NAME,
    load_database,
    load_manifest,
    save_database,
    set_file_name,
)
from scripts.spectra.spectra import (
    AtfDatabase,
    FrequencyResponse,
    ImpulseResponse,
    SampleRate,
    delay_phase,
    fr_to_ir,
    ir_to_fr,
    one_sided_weights,
    require_same_grid,
    two_sided_energy,
    with_real_edges,
)


def dft_oracle(x: np.ndarray, nf: int) -> np.ndarray:
    n = np.arange(len(x))
    k = np.arange(nf // 2 + 1)
    return np.array([np.sum(x * np.exp(-2j * np.pi * kk * n / nf)) for kk in k])


def idft_oracle(bins: np.ndarray, nf: int) -> np.ndarray:
    full = np.concatenate([bins, np.conj(bins[-2:0:-1])])
    k = np.arange(nf)
    return np.array([np.sum(full * np.exp(2j * np.pi * k * n / nf)).real / nf for n in range(nf)])


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


class TestTypes:
    def test_sample_rate_default_and_validation(self):
        assert SampleRate().hertz == 40000.0
        with pytest.raises(DataError):
            SampleRate(0.0)
        with pytest.raises(DataError):
            SampleRate(float("nan"))

    def test_impulse_response_rejects_empty_and_non_finite(self):
        with pytest.raises(DimensionError):
            ImpulseResponse(taps=np.array([]))
        with pytest.raises(DataError):
            ImpulseResponse(taps=np.array([1.0, np.inf]))

    def test_frequency_response_length_checked(self):
        with pytest.raises(DimensionError):
            FrequencyResponse(bins=np.ones(4), fft_size=8)
        with pytest.raises(DimensionError):
            FrequencyResponse(bins=np.ones(3), fft_size=5)

    def test_frequency_response_is_read_only(self):
        fr = FrequencyResponse(bins=np.ones(3), fft_size=4)
        with pytest.raises(ValueError):
            fr.bins[0] = 2.0

    def test_freqs(self):
        fr = FrequencyResponse(bins=np.ones(513), fft_size=1024)
        assert fr.freqs_hz[1] == pytest.approx(40000.0 / 1024)
        assert fr.freqs_hz[-1] == 20000.0
        assert fr.nyquist_hz == 20000.0

    def test_grid_mismatch(self):
        a = FrequencyResponse(bins=np.ones(3), fft_size=4)
        b = FrequencyResponse(bins=np.ones(3), fft_size=4, rate=SampleRate(48000.0))
        with pytest.raises(DimensionError):
            require_same_grid(a, b)


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------


class TestTransforms:
    def test_unit_impulse_is_flat(self):
        fr = ir_to_fr(ImpulseResponse(taps=np.array([1.0, 0, 0, 0])), 4)
        np.testing.assert_allclose(fr.bins, [1, 1, 1], atol=1e-15)

    def test_one_sample_delay(self):
        fr = ir_to_fr(ImpulseResponse(taps=np.array([0.0, 1, 0, 0])), 4)
        np.testing.assert_allclose(fr.bins, [1, -1j, -1], atol=1e-15)
        assert fr.bins[0].imag == 0.0 and fr.bins[-1].imag == 0.0

    def test_matches_direct_dft(self):
        x = np.ones(4)
        fr = ir_to_fr(ImpulseResponse(taps=x), 8)
        np.testing.assert_allclose(fr.bins, dft_oracle(x, 8), atol=1e-12)

    def test_never_truncates(self):
        with pytest.raises(DimensionError):
            ir_to_fr(ImpulseResponse(taps=np.ones(8)), 4)

    def test_round_trip(self, rng):
        for length in (1, 7, 33, 64):
            x = rng.standard_normal(length)
            back = fr_to_ir(ir_to_fr(ImpulseResponse(taps=x), 64), length)
            np.testing.assert_allclose(back.taps, x, atol=1e-10)

    def test_flat_spectrum_inverse(self):
        ir = fr_to_ir(FrequencyResponse(bins=np.ones(5), fft_size=8), 4)
        np.testing.assert_allclose(ir.taps, [1, 0, 0, 0], atol=1e-15)

    def test_inverse_matches_oracle(self, rng):
        nf = 16
        bins = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        bins[0] = bins[0].real
        bins[-1] = bins[-1].real
        ir = fr_to_ir(FrequencyResponse(bins=bins, fft_size=nf), nf)
        np.testing.assert_allclose(ir.taps, idft_oracle(bins, nf), atol=1e-12)

    def test_inverse_rejects_complex_edges(self):
        bins = np.array([1.0 + 0.5j, 1.0, 1.0])
        with pytest.raises(DataError):
            fr_to_ir(FrequencyResponse(bins=bins, fft_size=4), 4)

    def test_inverse_out_len_bounds(self):
        fr = FrequencyResponse(bins=np.ones(3), fft_size=4)
        with pytest.raises(DimensionError):
            fr_to_ir(fr, 5)

    def test_delay_phase_identity_and_one_sample(self):
        np.testing.assert_array_equal(delay_phase(8, SampleRate(), 0.0).bins, np.ones(5))
        one = delay_phase(4, SampleRate(4.0), 0.25)
        np.testing.assert_allclose(one.bins, [1, -1j, -1], atol=1e-15)

    def test_processing_delay_advance(self):
        nf = 1024
        ph = delay_phase(nf, SampleRate(40000.0), -0.0016)
        k = np.arange(nf // 2 + 1)
        np.testing.assert_allclose(ph.bins, np.exp(2j * np.pi * k * 64 / nf), atol=1e-9)

    def test_forward_transform_is_linear(self, rng):
        for length, nf in ((5, 8), (33, 64), (64, 64)):
            x = rng.standard_normal(length)
            y = rng.standard_normal(length)
            a, b = rng.standard_normal(2)
            lhs = ir_to_fr(ImpulseResponse(taps=a * x + b * y), nf)
            fx = ir_to_fr(ImpulseResponse(taps=x), nf)
            fy = ir_to_fr(ImpulseResponse(taps=y), nf)
            np.testing.assert_allclose(lhs.bins, a * fx.bins + b * fy.bins, atol=1e-12)

    def test_phase_ramps_compose(self, rng):
        rate = SampleRate(40000.0)
        for _ in range(5):
            s1, s2 = rng.uniform(-2e-3, 2e-3, 2)
            prod = delay_phase(256, rate, s1).bins * delay_phase(256, rate, s2).bins
            np.testing.assert_allclose(prod, delay_phase(256, rate, s1 + s2).bins, atol=1e-12)

    def test_fractional_shifts_compose(self):
        rate = SampleRate(4.0)
        half = delay_phase(16, rate, 0.125).bins
        np.testing.assert_allclose(half * half, delay_phase(16, rate, 0.25).bins, atol=1e-14)
        np.testing.assert_allclose(half * delay_phase(16, rate, -0.125).bins, np.ones(9), atol=1e-14)

    def test_two_sided_energy_is_parseval(self, rng):
        x = rng.standard_normal(16)
        fr = ir_to_fr(ImpulseResponse(taps=x), 16)
        assert two_sided_energy(fr) == pytest.approx(16 * np.sum(x**2), rel=1e-12)
        w = one_sided_weights(fr.n_bins)
        assert w[0] == 1.0 and w[-1] == 1.0 and np.all(w[1:-1] == 2.0)

    def test_with_real_edges(self):
        fr = FrequencyResponse(bins=np.array([1 + 1j, 2 + 2j, 3 - 1j]), fft_size=4)
        fixed = with_real_edges(fr)
        np.testing.assert_array_equal(fixed.bins, [1, 2 + 2j, 3])
        assert fixed.has_real_edges() and not fr.has_real_edges()


# ---------------------------------------------------------------------------
# AtfSet / AtfDatabase
# ---------------------------------------------------------------------------


class TestDatabase:
    def test_set_requires_common_grid(self, make_random_set):
        a = make_random_set(fft_size=16)
        with pytest.raises(DimensionError):
            make_random_set(fft_size=16, r=np.ones(5))
        assert a.grid.fft_size == 16

    def test_set_rejects_bad_trial(self, make_random_set):
        with pytest.raises(DataError):
            make_random_set(trial=0)

    def test_duplicate_sets_rejected(self, make_random_set):
        a = make_random_set("S01", 1)
        b = make_random_set("S01", 1)
        with pytest.raises(DataError):
            AtfDatabase((a, b))

    def test_subject_views(self, make_random_db):
        db = make_random_db(n_subjects=3, n_trials=2)
        assert db.J == 6
        assert db.subjects() == ["S01", "S02", "S03"]
        assert db.for_subject("S02").J == 2
        assert "S02" not in db.without_subject("S02").subjects()
        assert db.get("S03", 2).key == ("S03", 2)
        assert db.get("S09", 1) is None
        assert db.stack("r").shape == (6, 17)

    def test_require_sets(self, make_random_db):
        db = make_random_db(n_subjects=1, n_trials=1)
        with pytest.raises(DataError, match="at least 2"):
            db.require_sets(2, "Training")

    def test_fingerprint_depends_on_data(self, make_random_db):
        db = make_random_db()
        assert db.fingerprint() == AtfDatabase(db.sets).fingerprint()
        assert db.fingerprint() != db.without_subject("S01").fingerprint()


# ---------------------------------------------------------------------------
# Store
# ---------------------------------------------------------------------------


class TestStore:
    def test_save_and_load(self, tmp_path, make_random_db):
        db = make_random_db(n_subjects=2, n_trials=2, fft_size=16)
        save_database(db, tmp_path, extra_manifest={"source": "unit"})
        manifest = load_manifest(tmp_path)
        assert manifest["schema"] == DATABASE_SCHEMA_V1
        assert manifest["fft_size"] == 16 and manifest["source"] == "unit"
        loaded = load_database(tmp_path)
        assert loaded.fingerprint() == db.fingerprint()
        header = (tmp_path / "sets" / set_file_name("S01", 1)).read_text(encoding="utf-8").splitlines()[0]
        assert header.split(",") == FREQ_COLUMNS

    def test_time_domain_layout(self, tmp_path, rng):
        taps = rng.standard_normal((8, 5))
        (tmp_path / "sets").mkdir()
        lines = ["sample_index,o,c,m,r,s"] + [
            ",".join([str(i)] + [repr(float(v)) for v in row]) for i, row in enumerate(taps)
        ]
        (tmp_path / "sets" / "A_t1.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        manifest = {
            "schema": DATABASE_SCHEMA_V1,
            "domain": "time",
            "rate_hz": 40000.0,
            "fft_size": 16,
            "sets": [{"subject_id": "A", "trial": 1}],
        }
        (tmp_path / MANIFEST_NAME).write_text(json.dumps(manifest), encoding="utf-8")
        db = load_database(tmp_path)
        expected = ir_to_fr(ImpulseResponse(taps=taps[:, 3]), 16)
        np.testing.assert_allclose(db.sets[0].r.bins, expected.bins, atol=1e-12)

    def test_malformed_row_names_file_and_line(self, tmp_path, make_random_db):
        db = make_random_db(n_subjects=1, n_trials=1, fft_size=8)
        save_database(db, tmp_path)
        path = tmp_path / "sets" / set_file_name("S01", 1)
        lines = path.read_text(encoding="utf-8").splitlines()
        lines[3] = lines[3].replace(",", ",x", 1)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(SchemaError, match=r"S01_t1\.csv:4"):
            load_database(tmp_path)

    def test_invalid_utf8_names_file_and_line(self, tmp_path, make_random_db):
        db = make_random_db(n_subjects=1, n_trials=1, fft_size=8)
        save_database(db, tmp_path)
        path = tmp_path / "sets" / set_file_name("S01", 1)
        lines = path.read_bytes().split(b"\n")
        lines[3] = lines[3][:5] + b"\xff" + lines[3][5:]
        path.write_bytes(b"\n".join(lines))
        with pytest.raises(SchemaError, match=r"S01_t1\.csv:4: invalid UTF-8"):
            load_database(tmp_path)

    def test_invalid_utf8_in_header(self, tmp_path, make_random_db):
        db = make_random_db(n_subjects=1, n_trials=1, fft_size=8)
        save_database(db, tmp_path)
        path = tmp_path / "sets" / set_file_name("S01", 1)
        path.write_bytes(b"\xfe" + path.read_bytes())
        with pytest.raises(SchemaError, match=r"S01_t1\.csv:1"):
            load_database(tmp_path)

    def test_wrong_bin_count(self, tmp_path, make_random_db):
        db = make_random_db(n_subjects=1, n_trials=1, fft_size=8)
        save_database(db, tmp_path)
        manifest = json.loads((tmp_path / MANIFEST_NAME).read_text(encoding="utf-8"))
        manifest["fft_size"] = 16
        (tmp_path / MANIFEST_NAME).write_text(json.dumps(manifest), encoding="utf-8")
        with pytest.raises(SchemaError, match="expected 9 bins"):
            load_database(tmp_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(SchemaError, match="manifest not found"):
            load_database(tmp_path)

    def test_empty_database_not_written(self, tmp_path):
        with pytest.raises(DataError):
            save_database(AtfDatabase(()), tmp_path)
