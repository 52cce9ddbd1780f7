import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_component, random_model
from hdgmm.em_batch import fit_batch
from hdgmm.model import Component, HdGmmModel
from hdgmm.reduction import (
    CompressedDataset,
    CompressedRecord,
    compressed_size_bytes,
    compression_report,
    project,
    reconstruct,
    reconstruct_dataset,
    reconstruct_record,
    reconstruction_mae,
    reduce_dataset,
    reduce_record,
)
from hdgmm.synthetic import random_model as synth_model, sample_hdgmm


def line_component():
    return Component(1.0, np.array([1.0, 1.0]), [2.0], 1.0, np.array([[1.0], [0.0]]))


class TestProjectReconstruct:
    def test_hand_projection(self):
        np.testing.assert_array_equal(project(line_component(), np.array([3.0, 1.0])), [2.0])

    def test_mean_projects_to_zero(self):
        c = random_component(np.random.default_rng(0), 10, 3)
        np.testing.assert_array_equal(project(c, c.mean), np.zeros(3))

    def test_dense_oracle(self):
        rng = np.random.default_rng(1)
        c = random_component(rng, 30, 5)
        y = rng.standard_normal(30)
        expected = np.linalg.multi_dot([np.array(c.basis).T, y - c.mean])
        np.testing.assert_allclose(project(c, y), expected, atol=1e-12)

    def test_in_subspace_roundtrip(self):
        rng = np.random.default_rng(2)
        c = random_component(rng, 12, 4)
        y = c.mean + c.basis @ rng.standard_normal(4)
        np.testing.assert_allclose(reconstruct(c, project(c, y)), y, atol=1e-12)

    def test_zero_coords_give_mean(self):
        c = random_component(np.random.default_rng(3), 6, 2)
        np.testing.assert_array_equal(reconstruct(c, np.zeros(2)), c.mean)

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_residual_orthogonal_and_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        M = int(rng.integers(2, 25))
        c = random_component(rng, M, int(rng.integers(1, M)))
        y = rng.standard_normal(M) * 4
        resid = y - reconstruct(c, project(c, y))
        np.testing.assert_allclose(c.basis.T @ resid, 0.0, atol=1e-10)
        coords = rng.standard_normal(c.d)
        np.testing.assert_allclose(project(c, reconstruct(c, coords)), coords, atol=1e-12)
        # never worse than the mean alone
        assert np.linalg.norm(resid) <= np.linalg.norm(y - c.mean) + 1e-10

    def test_dimension_errors(self):
        c = line_component()
        with pytest.raises(ValueError):
            project(c, np.zeros(3))
        with pytest.raises(ValueError):
            reconstruct(c, np.zeros(2))


class TestRecords:
    def test_single_component(self):
        c = random_component(np.random.default_rng(4), 5, 2)
        y = np.arange(5.0)
        rec = reduce_record(HdGmmModel((c,)), y)
        assert rec.cluster_id == 0
        np.testing.assert_array_equal(rec.coords, project(c, y))

    def test_well_separated_means(self):
        m = synth_model(4, 10, 2, seed=5, separation=20.0)
        for j, c in enumerate(m.components):
            assert reduce_record(m, c.mean).cluster_id == j

    def test_mirror_tie_goes_to_zero(self):
        W = np.eye(3)[:, :1]
        m = HdGmmModel((Component(0.5, [1.0, 0, 0], [2.0], 1.0, W), Component(0.5, [-1.0, 0, 0], [2.0], 1.0, W)))
        assert reduce_record(m, np.zeros(3)).cluster_id == 0

    def test_reconstruct_record_range(self):
        m = HdGmmModel((line_component(),))
        with pytest.raises(IndexError):
            reconstruct_record(m, CompressedRecord(1, np.zeros(1)))

    def test_dataset_matches_per_record(self):
        rng = np.random.default_rng(6)
        m = random_model(rng, 3, 8, 2)
        Y = rng.standard_normal((101, 8)) * 4
        cds = reduce_dataset(m, Y, chunk_size=17)
        for i in (0, 50, 100):
            rec = reduce_record(m, Y[i])
            assert cds[i].cluster_id == rec.cluster_id
            np.testing.assert_allclose(cds[i].coords, rec.coords, atol=1e-12)
            np.testing.assert_allclose(reconstruct_dataset(cds)[i], reconstruct_record(m, rec), atol=1e-12)
        again = reduce_dataset(m, Y)
        np.testing.assert_array_equal(again.cluster_ids, cds.cluster_ids)
        rebuilt = CompressedDataset.from_records(m, cds.records)
        np.testing.assert_array_equal(rebuilt.coords, cds.coords)
        assert len(rebuilt) == 101

    def test_dataset_validation(self):
        m = HdGmmModel((line_component(),))
        with pytest.raises(ValueError, match="out of range"):
            CompressedDataset(m, [1], np.zeros((1, 1)))
        with pytest.raises(ValueError, match="shape"):
            CompressedDataset(m, [0], np.zeros((1, 2)))


class TestMae:
    def test_zero_for_in_subspace_data(self):
        rng = np.random.default_rng(7)
        c = random_component(rng, 9, 3)
        Y = c.mean + rng.standard_normal((20, 3)) @ c.basis.T
        m = HdGmmModel((c,))
        assert reconstruction_mae(Y, reduce_dataset(m, Y)) == pytest.approx(0.0, abs=1e-12)

    def test_hand_value(self):
        m = HdGmmModel((Component(1.0, np.zeros(2), [2.0], 1.0, np.array([[1.0], [0.0]])),))
        cds = CompressedDataset(m, [0], [[3.0]])
        assert reconstruction_mae(np.array([[3.0, 1.0]]), cds) == 0.5

    def test_count_mismatch(self):
        m = HdGmmModel((line_component(),))
        with pytest.raises(ValueError):
            reconstruction_mae(np.zeros((2, 2)), CompressedDataset(m, [0], [[0.0]]))

    def test_clustered_beats_single_subspace(self):
        true = synth_model(3, 20, 2, seed=8, separation=3.0)
        Y, _ = sample_hdgmm(true, 3000, seed=9)
        model, _ = fit_batch(Y, 3, 2, seed=0)
        hd = reconstruction_mae(Y, reduce_dataset(model, Y))
        # single-subspace baseline: centered rank-2 truncated SVD
        U, s, Vt = np.linalg.svd(Y - Y.mean(axis=0), full_matrices=False)
        rank2 = (U[:, :2] * s[:2]) @ Vt[:2] + Y.mean(axis=0)
        assert hd < float(np.mean(np.abs(Y - rank2)))


class TestSizes:
    @pytest.mark.parametrize("d, go", [(8, 0.30), (10, 0.38), (15, 0.57)])
    def test_table_sizes(self, d, go):
        assert round(compressed_size_bytes(4.75e6, d, 8) / 1e9, 2) == go

    def test_exact_bytes(self):
        assert compressed_size_bytes(4_750_000, 10) == 380_000_000
        assert compressed_size_bytes(10, 3, 4, include_ids=True) == 10 * 3 * 4 + 20

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            compressed_size_bytes(10, 3, 2)
        with pytest.raises(ValueError):
            compressed_size_bytes(0, 3)

    def test_report_flags(self):
        stated = compression_report(4.75e6, 260, 10, original_bytes=20e9)
        assert stated["ratio_stated"] >= 0.97
        assert round(stated["ratio_raw"], 3) == 0.962
        assert stated["discrepancy"] and stated["size_mismatch"]
        raw = compression_report(4.75e6, 260, 10, original_bytes=4.75e6 * 260 * 8)
        assert not raw["size_mismatch"] and raw["discrepancy"]
        assert not compression_report(1000, 260, 4)["discrepancy"]
