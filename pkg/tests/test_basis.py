import numpy as np
import pytest

import roast
from roast import (
    BasisFormatError,
    apply_analysis,
    apply_synthesis,
    build_fst_analog,
    build_prolate,
    build_roast,
    build_roast_randomized,
    build_subdft,
    deserialize_basis,
    dft_columns,
    integrated_residual,
    log_width_constant,
    project,
    prolate_dense,
    rank_for_capture,
    sampled_sinusoid,
    serialize_basis,
)


def random_probe(n, rng):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


class TestBuildRoast:
    def test_zero_extra_columns_equals_band_projector(self, rng):
        basis = build_roast(128, 0.25, 0)
        sub = build_subdft(128, 0.25, 0)
        x = random_probe(128, rng)
        np.testing.assert_allclose(project(basis, x), sub.project(x), atol=1e-12)
        assert basis.dimension == sub.dimension

    @pytest.mark.parametrize("method", ["svd_fb", "svd_fbf"])
    def test_orthonormality(self, method, rng):
        basis = build_roast(256, 0.25, 12, method)
        assert np.max(np.abs(basis.v.conj().T @ basis.v - np.eye(12))) <= 1e-10
        q = basis.dense_basis()
        gram = q.conj().T @ q
        assert np.max(np.abs(gram - np.eye(basis.dimension))) <= 1e-10

    def test_rejects_oversized_r(self):
        with pytest.raises(ValueError):
            build_roast(64, 0.25, 64)

    def test_rejects_unknown_method(self):
        with pytest.raises(ValueError):
            build_roast(64, 0.25, 4, "qr")

    def test_lanczos_and_dense_routes_agree(self, monkeypatch):
        # same leading singular subspace whichever solver path is taken
        import roast.basis as basis_mod
        dense = build_roast(256, 0.25, 6)
        monkeypatch.setattr(basis_mod, "_DENSE_SVD_LIMIT", 8)
        lanczos = build_roast(256, 0.25, 6)
        cosines = np.linalg.svd(dense.v.conj().T @ lanczos.v, compute_uv=False)
        assert cosines.min() >= 1 - 1e-10


@pytest.fixture(scope="module")
def basis():
    return build_roast(512, 0.25, 19)


class TestApplyPaths:
    def test_analysis_matches_dense(self, basis, rng):
        q = basis.dense_basis()
        for _ in range(20):
            x = random_probe(512, rng)
            assert np.max(np.abs(apply_analysis(basis, x) - q.conj().T @ x)) <= 1e-10

    def test_analysis_of_dc(self, basis):
        coeffs = apply_analysis(basis, sampled_sinusoid(512, 0.0).samples)
        low = coeffs[:basis.split.n_low]
        dc_slot = np.flatnonzero(basis.split.low_indices == 0)[0]
        assert abs(low[dc_slot] - np.sqrt(512)) <= 1e-9
        rest = np.delete(low, dc_slot)
        assert np.max(np.abs(rest)) <= 1e-9

    def test_analysis_non_expansive(self, basis, rng):
        for _ in range(5):
            x = random_probe(512, rng)
            assert np.linalg.norm(apply_analysis(basis, x)) <= np.linalg.norm(x) * (1 + 1e-12)

    def test_synthesis_of_unit_coefficient(self, basis):
        k = 7
        coeffs = np.zeros(basis.dimension, dtype=complex)
        coeffs[k] = 1.0
        col = dft_columns(512, basis.split.low_indices[k:k + 1])[:, 0]
        np.testing.assert_allclose(apply_synthesis(basis, coeffs), col, atol=1e-12)

    def test_synthesis_isometry(self, basis, rng):
        c = rng.standard_normal(basis.dimension) + 1j * rng.standard_normal(basis.dimension)
        assert abs(np.linalg.norm(apply_synthesis(basis, c)) - np.linalg.norm(c)) <= 1e-10

    def test_round_trip_identity(self, basis, rng):
        c = rng.standard_normal(basis.dimension) + 1j * rng.standard_normal(basis.dimension)
        back = apply_analysis(basis, apply_synthesis(basis, c))
        assert np.max(np.abs(back - c)) <= 1e-10

    def test_project_fixes_band_signals(self, basis, rng):
        coeffs = rng.standard_normal(basis.split.n_low)
        x = dft_columns(512, basis.split.low_indices) @ coeffs.astype(complex)
        assert np.max(np.abs(project(basis, x) - x)) <= 1e-10

    def test_project_idempotent(self, basis, rng):
        x = random_probe(512, rng)
        once = project(basis, x)
        assert np.max(np.abs(project(basis, once) - once)) <= 1e-10

    def test_project_matches_dense(self, basis, rng):
        q = basis.dense_basis()
        x = random_probe(512, rng)
        assert np.max(np.abs(project(basis, x) - q @ (q.conj().T @ x))) <= 1e-10

    def test_length_mismatch(self, basis):
        with pytest.raises(ValueError):
            apply_analysis(basis, np.zeros(100))
        with pytest.raises(ValueError):
            apply_synthesis(basis, np.zeros(basis.dimension + 1))

    def test_leading_vector_capture(self, caches):
        n, w, eps = 512, 0.25, 1e-3
        basis = caches.roast(n, w, rank_for_capture(n, eps))
        s0 = caches.dpss(n, w).vectors[:, 0].astype(complex)
        assert np.linalg.norm(s0 - project(basis, s0)) ** 2 <= eps


class TestMonotonicityAndOptimality:
    def test_integrated_residual_monotone_in_r(self, caches):
        op = caches.op(256, 0.25)
        for method in ("svd_fb", "svd_fbf"):
            values = [integrated_residual(op, build_roast(256, 0.25, r, method))
                      for r in (0, 2, 5, 9, 14, 20)]
            diffs = np.diff(values)
            assert np.all(diffs <= 1e-10)

    def test_fbf_beats_subdft_at_equal_dimension(self, caches):
        op = caches.op(256, 0.25)
        r = 10
        fbf = integrated_residual(op, build_roast(256, 0.25, r, "svd_fbf"))
        sub = integrated_residual(op, build_subdft(256, 0.25, r))
        assert fbf < sub


class TestRandomized:
    def test_deterministic_in_seed(self):
        a = build_roast_randomized(256, 0.25, 10, seed=5)
        b = build_roast_randomized(256, 0.25, 10, seed=5)
        np.testing.assert_array_equal(a.v, b.v)
        c = build_roast_randomized(256, 0.25, 10, seed=6)
        assert np.any(a.v != c.v)

    def test_orthonormal_and_dimension(self, rng):
        basis = build_roast_randomized(256, 0.25, 10, seed=1)
        assert basis.r == 10
        q = basis.dense_basis()
        assert np.max(np.abs(q.conj().T @ q - np.eye(basis.dimension))) <= 1e-10

    def test_rank_deficient_sketch_truncates(self):
        # the cross operator's singular values hit the float64 floor well
        # before the full out-of-band width, so a full-width sketch cannot
        # keep every column
        split_width = 127  # n_high at n=256, w=0.25
        basis = build_roast_randomized(256, 0.25, split_width, seed=3)
        assert basis.r < split_width
        q = basis.dense_basis()
        assert np.max(np.abs(q.conj().T @ q - np.eye(basis.dimension))) <= 1e-10

    def test_sketch_width_validation(self):
        with pytest.raises(ValueError):
            build_roast_randomized(256, 0.25, 0, seed=1)
        with pytest.raises(ValueError):
            build_roast_randomized(256, 0.25, 128, seed=1)

    def test_close_to_deterministic_on_bandlimited_signal(self, caches):
        # measured desk-scale behavior: with no oversampling the sketch
        # trails the exact singular subspace once residuals sit above the
        # float64 floor; both still capture the signal almost entirely
        n, w, r = 1024, 0.25, 27
        x = roast.random_bandlimited(n, w, 10000, seed=99).samples
        det = caches.roast(n, w, r)
        det_snr = roast.residual_snr(det, x)
        for seed in (0, 1, 2):
            rand = build_roast_randomized(n, w, r, seed)
            rand_snr = roast.residual_snr(rand, x)
            assert rand_snr >= 120.0
            assert min(det_snr, 150.0) - min(rand_snr, 150.0) <= 3.0


class TestSubDft:
    def test_zero_extra_equals_band(self):
        sub = build_subdft(128, 0.25, 0)
        split = roast.build_band_split(128, 0.25)
        np.testing.assert_array_equal(np.sort(sub.indices),
                                      np.sort(split.low_indices))

    def test_column_count(self):
        assert build_subdft(1024, 0.25, 27).dimension == 540

    def test_odd_extra_prefers_positive_side(self):
        sub = build_subdft(64, 0.25, 3)
        signed = np.where(sub.indices <= 32, sub.indices, sub.indices - 64)
        assert signed.max() == 18   # floor(64*0.25) = 16, +2 on the right
        assert signed.min() == -17  # +1 on the left

    def test_on_grid_sinusoid_captured(self):
        sub = build_subdft(1024, 0.25, 27)
        x = sampled_sinusoid(1024, 100.0 / 1024.0).samples
        assert np.linalg.norm(x - sub.project(x)) <= 1e-12 * np.linalg.norm(x)

    def test_band_overflow(self):
        with pytest.raises(ValueError):
            build_subdft(64, 0.4, 30)


class TestFstAnalog:
    def test_rank_zero_is_band_projector(self, rng):
        analog = build_fst_analog(128, 0.25, 0)
        sub = build_subdft(128, 0.25, 0)
        x = random_probe(128, rng)
        np.testing.assert_allclose(analog.apply(x), sub.project(x), atol=1e-12)

    def test_hermitian_on_probes(self, rng):
        analog = build_fst_analog(128, 0.25, 9)
        for _ in range(5):
            x = random_probe(128, rng)
            y = random_probe(128, rng)
            lhs = np.vdot(y, analog.apply(x))
            rhs = np.vdot(analog.apply(y), x)
            assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0)

    def test_spectral_error_bound(self):
        n, w, eps = 512, 0.25, 1e-2
        r = int(np.ceil(log_width_constant(n) * np.log(15.0 / eps)))
        analog = build_fst_analog(n, w, r)
        dense_op = prolate_dense(build_prolate(n, w))
        approx = analog.apply(np.eye(n, dtype=complex))
        err = np.linalg.norm(dense_op - approx, 2)
        assert err <= eps

    def test_factor_pair_reproduces_operator(self, rng):
        analog = build_fst_analog(128, 0.25, 7)
        t1, t2 = analog.factor_pair()
        x = random_probe(128, rng)
        np.testing.assert_allclose(t1 @ (t2.conj().T @ x), analog.apply(x),
                                   atol=1e-10)

    def test_negative_rank_rejected(self):
        with pytest.raises(ValueError):
            build_fst_analog(64, 0.25, -1)


class TestSerialization:
    def test_round_trip_bitwise(self):
        basis = build_roast(128, 0.25, 9, "svd_fbf")
        restored = deserialize_basis(serialize_basis(basis))
        assert np.array_equal(basis.v, restored.v)
        assert restored.method == "svd_fbf"
        assert restored.r == 9 and restored.n == 128 and restored.w == 0.25

    def test_round_trip_randomized_keeps_seed(self):
        basis = build_roast_randomized(128, 0.25, 6, seed=77)
        restored = deserialize_basis(serialize_basis(basis))
        assert restored.seed == 77
        assert np.array_equal(basis.v, restored.v)

    def test_truncated_stream(self):
        blob = serialize_basis(build_roast(128, 0.25, 4))
        with pytest.raises(BasisFormatError):
            deserialize_basis(blob[:len(blob) // 2])
        with pytest.raises(BasisFormatError):
            deserialize_basis(blob[:8])

    def test_checksum_failure(self):
        blob = bytearray(serialize_basis(build_roast(128, 0.25, 4)))
        blob[len(blob) // 2] ^= 0xFF
        with pytest.raises(BasisFormatError):
            deserialize_basis(bytes(blob))

    def test_bad_magic(self):
        blob = bytearray(serialize_basis(build_roast(128, 0.25, 4)))
        blob[0] = ord("X")
        with pytest.raises(BasisFormatError):
            deserialize_basis(bytes(blob))

    def test_version_mismatch(self):
        import struct
        import zlib
        blob = bytearray(serialize_basis(build_roast(128, 0.25, 4)))
        struct.pack_into("<H", blob, 6, 999)
        body = bytes(blob[:-4])
        with pytest.raises(BasisFormatError, match="version"):
            deserialize_basis(body + struct.pack("<I", zlib.crc32(body)))

    def test_invalid_header_dimensions(self):
        import json
        import struct
        import zlib
        blob = serialize_basis(build_roast(128, 0.25, 4))
        header_len = struct.unpack_from("<I", blob, 8)[0]
        header = json.loads(blob[12:12 + header_len])
        header["n"] = 0
        new_header = json.dumps(header, sort_keys=True).encode()
        body = (blob[:8] + struct.pack("<I", len(new_header)) + new_header
                + blob[12 + header_len:-4])
        with pytest.raises(BasisFormatError):
            deserialize_basis(body + struct.pack("<I", zlib.crc32(body)))


class TestSizingRules:
    def test_capture_rank_at_reference_point(self):
        # frozen from the defining formula: C_512 = 9.3712, ln(15/1e-3) = 9.6158
        assert rank_for_capture(512, 1e-3) == 91

    def test_log_width_constant_value(self):
        assert abs(log_width_constant(1024) - 9.652) <= 1e-3

    def test_fst_needs_wider_factors(self):
        for n in (256, 1024, 4096):
            assert roast.fst_rank_bound(n, 1e-5) > int(3 * np.log(n))
