# Copyright 2026 The MMFDL Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


import csv
import math
import os
from pathlib import Path

import numpy as np
import pytest

import mmfdl

DATA_DIR = Path(os.environ.get("MMFDL_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_tokenize_and_vocabulary():
    tokens = mmfdl.tokenize("CS(=O)(=O)Cl")
    assert tokens == ["C", "S", "(", "=", "O", ")", "(", "=", "O", ")", "Cl"]
    vocab = mmfdl.Vocabulary.build([tokens])
    assert len(vocab) == 7
    assert vocab.index_of("C") == 1
    ids, true_len = vocab.encode(tokens, 16)
    assert true_len == len(tokens)
    assert ids[true_len:] == [0] * (16 - true_len)
    assert vocab.decode(ids) == tokens


def test_errors_carry_code_and_category():
    with pytest.raises(mmfdl.MmfdlError) as info:
        mmfdl.tokenize("C*C")
    assert info.value.code == "UnlexableCharacter"
    assert info.value.category == "data"
    with pytest.raises(mmfdl.MmfdlError) as info:
        mmfdl.pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    assert info.value.category == "numeric"


def test_fingerprints():
    a = mmfdl.ecfp("CCO")
    assert a.nbits == 1024
    assert mmfdl.tanimoto(a, mmfdl.ecfp("OCC")) == 1.0
    dense = a.to_dense()
    assert dense.shape == (1024,)
    assert int(dense.sum()) == a.set_count()
    assert mmfdl.Fingerprint.from_hex(a.to_hex()) == a
    assert mmfdl.hamming(a, mmfdl.ecfp("c1ccccc1")) > 0
    assert mmfdl.atom_count("c1ccccc1O") == 7


def test_splits_partition():
    plan = mmfdl.make_split(1128, 3)
    assert (len(plan["train"]), len(plan["tuning"]), len(plan["test"])) == (813, 203, 112)
    assert sorted(plan["train"] + plan["tuning"] + plan["test"]) == list(range(1128))
    folds = mmfdl.make_kfold(50, 5, 1)
    assert sorted(i for f in folds for i in f["test"]) == list(range(50))


def test_metrics():
    y = [1.0, 2.0, 3.0]
    assert mmfdl.rmse(y, [1.0, 2.0, 4.0]) == pytest.approx(math.sqrt(1 / 3))
    assert mmfdl.pearson(y, [2.0, 4.0, 6.0]) == pytest.approx(1.0)
    m = mmfdl.compute_metrics(np.array(y), np.array([1.5, 2.5, 3.5]))
    assert m["mae"] == pytest.approx(0.5)
    s = mmfdl.summarize([3.0, 1.0, 2.0])
    assert (s["min"], s["median"], s["max"]) == (1.0, 2.0, 3.0)


def test_fusion_recovers_weights():
    rng = np.random.default_rng(0)
    o = rng.normal(size=(200, 3))
    y = o @ np.array([0.5, 0.3, 0.2])
    w = mmfdl.fit_fusion("elastic", o, y, lam=1e-6, alpha=1.0)
    np.testing.assert_allclose(w, [0.5, 0.3, 0.2], atol=1e-3)
    np.testing.assert_allclose(mmfdl.fit_fusion("mean", o, y), [1 / 3] * 3)
    with pytest.raises(mmfdl.MmfdlError):
        mmfdl.fit_fusion("mean", o[:, :2], y)


def test_config_helpers():
    config = mmfdl.default_config()
    assert config["features"]["nbits"] == 1024
    changed = mmfdl.set_option(config, "train.epochs", 7)
    assert changed["train"]["epochs"] == 7
    assert mmfdl.normalize_config({"protocol": {"seed": 4}})["protocol"]["seed"] == 4
    with pytest.raises(mmfdl.MmfdlError) as info:
        mmfdl.normalize_config({"protocol": {"bogus": 1}})
    assert info.value.category == "config"


def test_run_repeat(tmp_path):
    rows = list(csv.DictReader(open(DATA_DIR / "sampl.csv", newline="")))[:60]
    small = tmp_path / "small.csv"
    with open(small, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=rows[0].keys())
        writer.writeheader()
        writer.writerows(rows)
    config = mmfdl.default_config()
    config["data"].update(path=str(small), name="small", target_col="expt", id_col="iupac")
    config["transformer"].update(d=8, heads=2, layers=1)
    config["bigru"].update(hidden=4, heads=2, layers=1, chunk_bits=128)
    config["gcn"]["widths"] = [8]
    config["train"]["epochs"] = 2
    config["protocol"].update(repeats=2, noise_ratios=[0.0, 0.1])
    config["output"].update(outdir=str(tmp_path / "runs"), run_id="py", plots=False, workers=1)

    result = mmfdl.run("repeat", config)
    assert result["seeds"] == 2
    assert result["failures"] == []
    run_dir = Path(result["run_dir"])
    assert run_dir.name == "py"
    with open(run_dir / "metrics.csv", newline="") as f:
        metrics = list(csv.DictReader(f))
    assert {r["method"] for r in metrics} >= {"transformer", "bigru", "gcn", "tri_sgd"}
    assert {float(r["noise_ratio"]) for r in metrics} == {0.0, 0.1}
    assert mmfdl.run("prepare", config)["cache_hit"]
