#!/usr/bin/env python3
"""Smoke test for the cbm_py extension module.

Expects `cargo build -p cbm-py` to have produced target/debug/libcbm_py.so
(or the release equivalent). Copies the shared object under the import name
Python expects, then exercises the bindings end to end.
"""

import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def locate_extension() -> Path:
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libcbm_py.so", "cbm_py.so", "libcbm_py.dylib")
    ]
    for c in candidates:
        if c.exists():
            return c
    sys.exit("extension not found; run `cargo build -p cbm-py` first")


def main() -> None:
    ext = locate_extension()
    staging = Path(tempfile.mkdtemp(prefix="cbm_py_"))
    shutil.copy2(ext, staging / "cbm_py.so")
    sys.path.insert(0, str(staging))
    import cbm_py

    # Two-bit parity, 24 copies of each row.
    transactions, labels = [], []
    for _ in range(24):
        transactions += [[], [1], [2], [1, 2]]
        labels += [1, -1, -1, 1]
    db = cbm_py.Database(transactions, labels)
    assert len(db) == 96 and db.d == 2

    text = db.to_libsvm()
    again = cbm_py.Database.parse_libsvm(text)
    assert again.transactions() == db.transactions()
    assert again.labels() == labels

    # Uniform mining counts occurrences; ranked best first.
    mined = cbm_py.mine(db, theta=20.0)
    assert mined == [(96.0, []), (48.0, [1]), (48.0, [2]), (24.0, [1, 2])]
    assert cbm_py.weighted_frequency(db, [1, 2]) == 24.0

    # Conjunctions of two attributes express parity exactly; singles cannot.
    model, trace = cbm_py.train(db, c=100.0, k=2)
    assert model.accuracy(db) == 1.0
    assert trace.stop in ("converged", "no_candidates")
    assert [r[0] for r in trace.rows] == list(range(len(trace.rows)))
    assert model.predict_label([1, 2]) == 1 and model.predict_label([1]) == -1

    weak, _ = cbm_py.train(db, c=100.0, k=1)
    assert weak.accuracy(db) <= 0.75

    # The text format round-trips weights exactly.
    reread = cbm_py.Model.parse(model.serialize())
    assert reread.weights() == model.weights()
    assert (reread.d, reread.k, reread.loss, reread.c) == (2, 2, "logistic", 100.0)

    # Binarization: 4 bins over two real columns -> 8 indicator attributes.
    rows = [[0.10, 5.0], [0.50, 6.0], [0.90, 7.0]]
    b = cbm_py.fit_binarizer(rows, bins=4)
    assert b.attribute_count == 8
    assert [b.apply(r) for r in rows] == [[1, 5], [3, 7], [4, 8]]
    assert cbm_py.Binarizer.from_sidecar(b.to_sidecar()).apply(rows[1]) == [3, 7]

    print("cbm_py smoke test passed")


if __name__ == "__main__":
    main()
