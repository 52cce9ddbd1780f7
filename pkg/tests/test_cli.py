import json
import os

import numpy as np
import pytest

from hdgmm import cli, formats
from hdgmm.errors import DegenerateComponentError
from hdgmm.matching import Dictionary
from hdgmm.model import log_likelihood
from hdgmm.synthetic import sample_hdgmm

SMALL_GRID = ["--n-t1", "8", "--n-t2", "6", "--n-df", "5", "--M", "32"]


def run(tmp_path, *argv):
    metrics = tmp_path / "metrics.jsonl"
    if metrics.exists():
        metrics.unlink()
    code = cli.main([str(a) for a in argv] + ["--metrics", str(metrics)])
    record = json.loads(metrics.read_text().splitlines()[-1]) if code == 0 else None
    return code, record


def read(path):
    with open(path, "rb") as f:
        return f.read()


@pytest.fixture(scope="module")
def gmm_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("gmm")
    data, model = root / "train.hdgf", root / "true.hdgm"
    assert cli.main(["gen-gmm", "--out", str(data), "--model-out", str(model), "--N", "3000",
                     "--metrics", str(root / "m.jsonl")]) == 0
    true = formats.read_model(model)
    hold = root / "hold.hdgf"
    Y, lab = sample_hdgmm(true, 2000, seed=99)
    formats.write_dictionary(hold, Dictionary(Y, lab.astype(float), ("component",)))
    return root, data, true, hold


@pytest.fixture(scope="module")
def toy_dict(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    path = root / "dict.hdgf"
    assert cli.main(["gen-dict", "--out", str(path), *SMALL_GRID, "--metrics", str(root / "m.jsonl")]) == 0
    return root, path


class TestArgumentHelpers:
    def test_int_list(self):
        assert cli.int_list("4,6,8") == [4, 6, 8]
        assert cli.int_list("1-4") == [1, 2, 3, 4]
        assert cli.int_list("1-2,7") == [1, 2, 7]

    def test_float_list(self):
        assert cli.float_list("inf,15") == [float("inf"), 15.0]

    def test_read_config(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("# comment\nmax-iter = 5\n\nK=2  # trailing\n")
        assert cli.read_config(p) == {"max_iter": "5", "K": "2"}


class TestGenerators:
    def test_gen_dict_reproducible_and_sized(self, tmp_path):
        a, b = tmp_path / "a.hdgf", tmp_path / "b.hdgf"
        code, rec = run(tmp_path, "gen-dict", "--out", a, *SMALL_GRID, "--snr", "20", "--seed", "3")
        assert code == 0
        assert run(tmp_path, "gen-dict", "--out", b, *SMALL_GRID, "--snr", "20", "--seed", "3")[0] == 0
        assert read(a) == read(b)
        assert rec["results"]["bytes"] == os.path.getsize(a)
        assert formats.read_dictionary(a).N == 8 * 6 * 5 == rec["results"]["N"]

    def test_gen_dict_shuffle_permutes_rows(self, tmp_path):
        a, b = tmp_path / "a.hdgf", tmp_path / "b.hdgf"
        assert run(tmp_path, "gen-dict", "--out", a, *SMALL_GRID)[0] == 0
        assert run(tmp_path, "gen-dict", "--out", b, *SMALL_GRID, "--shuffle", "--seed", "2")[0] == 0
        A, B = formats.read_dictionary(a), formats.read_dictionary(b)
        order = np.lexsort(B.labels.T[::-1])
        assert not np.array_equal(B.labels, A.labels)
        np.testing.assert_array_equal(B.labels[order], A.labels)
        np.testing.assert_array_equal(B.signals[order], A.signals)

    def test_gen_gmm_reproducible(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            path = tmp_path / f"{name}.hdgf"
            assert run(tmp_path, "gen-gmm", "--out", path, "--N", "500", "--seed", "4")[0] == 0
            outs.append(read(path))
        assert outs[0] == outs[1]


class TestRecordSchema:
    def test_metrics_line(self, tmp_path, toy_dict):
        _, path = toy_dict
        code, rec = run(tmp_path, "info", path)
        assert code == 0
        assert rec["schema_version"] == cli.SCHEMA_VERSION
        assert rec["command"] == "info"
        assert rec["config"]["path"] == str(path)
        assert set(rec["timing"]) == {"wall_s", "peak_rss_kb"}
        assert rec["results"]["format"] == "dictionary"

    def test_stdout_default(self, toy_dict, capsys):
        _, path = toy_dict
        assert cli.main(["info", str(path)]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 1 and json.loads(out[0])["command"] == "info"


class TestExitCodes:
    def test_missing_file(self, tmp_path):
        out = tmp_path / "never.hdgm"
        assert cli.main(["fit", str(tmp_path / "nope.hdgf"), "--out", str(out), "--K", "2", "--d", "1"]) == cli.EXIT_IO
        assert not out.exists()

    def test_bad_flags(self, tmp_path, toy_dict):
        _, path = toy_dict
        assert cli.main(["fit", str(path), "--out", str(tmp_path / "m")]) == cli.EXIT_USAGE
        assert cli.main(["fit", str(path), "--out", str(tmp_path / "m"), "--K", "x", "--d", "1"]) == cli.EXIT_USAGE
        assert cli.main(["frobnicate"]) == cli.EXIT_USAGE
        assert cli.main(["info", str(path), "--threads", "0"]) == cli.EXIT_USAGE

    def test_truncated_file(self, tmp_path, toy_dict, capsys):
        _, path = toy_dict
        bad = tmp_path / "cut.hdgf"
        bad.write_bytes(read(path)[:-5])
        assert cli.main(["info", str(bad)]) == cli.EXIT_USAGE
        assert "truncated" in capsys.readouterr().err

    def test_unknown_format(self, tmp_path):
        bad = tmp_path / "x.bin"
        bad.write_bytes(b"????????")
        assert cli.main(["info", str(bad)]) == cli.EXIT_USAGE

    def test_degenerate_fit(self, tmp_path, toy_dict, monkeypatch, capsys):
        _, path = toy_dict

        def boom(*args, **kwargs):
            raise DegenerateComponentError(1, 0.0, 3)

        monkeypatch.setattr(cli, "fit_batch", boom)
        assert cli.main(["fit", str(path), "--out", str(tmp_path / "m"), "--K", "2", "--d", "1"]) == cli.EXIT_NUMERIC
        assert "component 1" in capsys.readouterr().err

    def test_dimension_mismatch(self, tmp_path, toy_dict, gmm_files):
        _, path = toy_dict
        root, data, _, _ = gmm_files
        model = tmp_path / "m.hdgm"
        assert run(tmp_path, "fit", data, "--out", model, "--K", "2", "--d", "1", "--max-iter", "5")[0] == 0
        assert cli.main(["compress", str(path), str(model), "--out", str(tmp_path / "c")]) == cli.EXIT_USAGE


class TestConfig:
    def test_flags_win_over_file(self, tmp_path, gmm_files):
        _, data, _, _ = gmm_files
        cfg = tmp_path / "run.cfg"
        cfg.write_text("K = 2\nd = 1\nmax-iter = 7\n")
        code, rec = run(tmp_path, "fit", data, "--out", tmp_path / "m.hdgm", "--config", cfg, "--d", "2")
        assert code == 0
        assert (rec["config"]["K"], rec["config"]["d"], rec["config"]["max_iter"]) == (2, 2, 7)
        assert rec["results"]["d"] == 2

    def test_unknown_key(self, tmp_path, gmm_files):
        _, data, _, _ = gmm_files
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour = blue\n")
        assert cli.main(["fit", str(data), "--out", str(tmp_path / "m"), "--K", "2", "--d", "1",
                         "--config", str(cfg)]) == cli.EXIT_USAGE


class TestFit:
    def test_batch_is_bit_reproducible(self, tmp_path, gmm_files):
        _, data, _, _ = gmm_files
        a, b = tmp_path / "a.hdgm", tmp_path / "b.hdgm"
        for out, threads in ((a, 1), (b, 3)):
            assert run(tmp_path, "fit", data, "--out", out, "--K", "3", "--d", "2", "--threads", threads)[0] == 0
        assert read(a) == read(b)

    def test_batch_and_online_agree_on_holdout(self, tmp_path, gmm_files):
        _, data, _, hold = gmm_files
        H = formats.read_dictionary(hold).signals
        code, rb = run(tmp_path, "fit", data, "--out", tmp_path / "b.hdgm", "--K", "3", "--d", "2")
        assert code == 0 and rb["results"]["monotone"]
        code, ro = run(tmp_path, "fit", data, "--out", tmp_path / "o.hdgm", "--K", "3", "--d", "2",
                       "--mode", "online", "--batch-size", "64", "--init-size", "500",
                       "--chunk-size", "300", "--holdout", hold)
        assert code == 0 and ro["results"]["records"] == 3000
        lb = log_likelihood(formats.read_model(tmp_path / "b.hdgm"), H)
        lo = log_likelihood(formats.read_model(tmp_path / "o.hdgm"), H)
        assert abs(lo - lb) <= 0.02 * abs(lb)
        assert ro["results"]["holdout_avg_log_likelihood"] == pytest.approx(lo / H.shape[0], rel=1e-12)

    def test_online_single_component_mean(self, tmp_path):
        rng = np.random.default_rng(5)
        Y = rng.standard_normal((4000, 6)) * np.array([3, 2, 1, 1, 1, 1]) + 7.0
        path = tmp_path / "g.hdgf"
        formats.write_dictionary(path, Dictionary(Y, np.zeros(4000)))
        code, _ = run(tmp_path, "fit", path, "--out", tmp_path / "m.hdgm", "--K", "1", "--d", "2",
                      "--mode", "online", "--alpha", "1.0", "--batch-size", "100", "--init-size", "400")
        assert code == 0
        mu = formats.read_model(tmp_path / "m.hdgm").components[0].mean
        # stochastic approximation with gamma = 1/t is the running average
        np.testing.assert_allclose(mu, Y.mean(axis=0), atol=4 * 3 / np.sqrt(4000))


class TestCompressReconstructEvaluate:
    def test_pipeline(self, tmp_path, toy_dict):
        _, path = toy_dict
        model, comp, rec = tmp_path / "m.hdgm", tmp_path / "c.hdgc", tmp_path / "r.hdgf"
        assert run(tmp_path, "fit", path, "--out", model, "--K", "4", "--d", "3", "--normalize")[0] == 0
        code, rc = run(tmp_path, "compress", path, model, "--out", comp, "--normalize", "--chunk-size", "37")
        assert code == 0 and rc["results"]["bytes"] == os.path.getsize(comp)
        assert rc["results"]["payload_bytes"] == 240 * 3 * 8
        assert sum(rc["results"]["cluster_counts"]) == 240
        code, rr = run(tmp_path, "reconstruct", comp, "--out", rec, "--labels-from", path,
                       "--reference", path, "--normalize")
        assert code == 0 and 0.0 < rr["results"]["mae"] < 0.05
        back = formats.read_dictionary(rec)
        np.testing.assert_array_equal(back.labels, formats.read_dictionary(path).labels)

    def test_evaluate_table(self, tmp_path, toy_dict):
        _, path = toy_dict
        out = tmp_path / "t.csv"
        code, rec = run(tmp_path, "evaluate", path, "--d", "2,3,4", "--K", "4", "--snr", "inf", "--csv", out)
        assert code == 0
        rows = rec["results"]["table"]
        svd = [r["mae"] for r in rows if r["method"] == "svd"]
        hd = [r["mae"] for r in rows if r["method"] == "hdgmm"]
        assert np.all(np.diff(svd) <= 1e-12)
        assert all(h < s for h, s in zip(hd, svd))
        assert out.read_text().splitlines()[0] == "method,d,snr,mae,size_bytes"

    def test_size_query(self, tmp_path):
        code, rec = run(tmp_path, "evaluate", "--size-query", "4.75e6", "--d", "8,10,15",
                        "--original-bytes", "20e9")
        assert code == 0
        rows = rec["results"]["size_query"]
        assert [round(r["compressed_gb"], 2) for r in rows] == [0.30, 0.38, 0.57]
        assert rows[1]["ratio_stated"] >= 0.97 and rows[1]["discrepancy"]

    def test_evaluate_needs_input(self, tmp_path):
        assert cli.main(["evaluate"]) == cli.EXIT_USAGE


class TestMatch:
    def test_full_self_agreement_and_threads(self, tmp_path, toy_dict):
        _, path = toy_dict
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        code, rec = run(tmp_path, "match", path, path, "--out", a, "--threads", "1")
        assert code == 0
        assert run(tmp_path, "match", path, path, "--out", b, "--threads", "3")[0] == 0
        assert read(a) == read(b)
        code, rec = run(tmp_path, "match", path, path, "--out", b, "--reference", a)
        assert rec["results"]["agreement"] == 1.0
        assert set(rec["results"]["param_mae"].values()) == {0.0}
        idx = [int(line.split(",")[1]) for line in a.read_text().splitlines()[1:]]
        assert idx == list(range(240))

    def test_hdgmm_and_svd(self, tmp_path, toy_dict):
        _, path = toy_dict
        model, comp = tmp_path / "m.hdgm", tmp_path / "c.hdgc"
        full, hd, sv = tmp_path / "f.csv", tmp_path / "h.csv", tmp_path / "s.csv"
        assert run(tmp_path, "fit", path, "--out", model, "--K", "3", "--d", "3", "--normalize")[0] == 0
        assert run(tmp_path, "compress", path, model, "--out", comp, "--normalize")[0] == 0
        assert run(tmp_path, "match", path, path, "--out", full)[0] == 0
        code, rec = run(tmp_path, "match", comp, path, "--out", hd, "--method", "hdgmm", "--top-n", "3",
                        "--labels-from", path, "--reference", full)
        assert code == 0 and rec["results"]["agreement"] == 1.0
        code, rec = run(tmp_path, "match", path, path, "--out", sv, "--method", "svd", "--d", "3",
                        "--reference", full)
        assert code == 0 and 0.0 < rec["results"]["agreement"] <= 1.0
        assert cli.main(["match", str(path), str(path), "--out", str(sv), "--method", "svd"]) == cli.EXIT_USAGE
        assert cli.main(["match", str(comp), str(path), "--out", str(hd), "--method", "hdgmm"]) == cli.EXIT_USAGE

    def test_reference_must_be_results(self, tmp_path, toy_dict):
        _, path = toy_dict
        junk = tmp_path / "junk.csv"
        junk.write_text("a,b\n1,2\n")
        assert cli.main(["match", str(path), str(path), "--out", str(tmp_path / "o.csv"),
                         "--reference", str(junk)]) == cli.EXIT_USAGE


class TestBicScanAndInfo:
    def test_bic_scan_recovers_truth(self, tmp_path, gmm_files):
        _, data, _, _ = gmm_files
        out = tmp_path / "bic.csv"
        code, rec = run(tmp_path, "bic-scan", data, "--K", "1-5", "--d", "1-4", "--max-iter", "100",
                        "--rel-tol", "1e-6", "--out", out)
        assert code == 0
        assert rec["results"]["best"] == {"K": 3, "d": 2}
        assert len(out.read_text().splitlines()) == 1 + 20

    def test_info_each_format(self, tmp_path, gmm_files):
        root, data, _, _ = gmm_files
        model, comp = tmp_path / "m.hdgm", tmp_path / "c.hdgc"
        assert run(tmp_path, "fit", data, "--out", model, "--K", "3", "--d", "2")[0] == 0
        assert run(tmp_path, "compress", data, model, "--out", comp)[0] == 0
        for path, kind in ((data, "dictionary"), (model, "model"), (comp, "compressed")):
            code, rec = run(tmp_path, "info", path)
            assert code == 0 and rec["results"]["format"] == kind
