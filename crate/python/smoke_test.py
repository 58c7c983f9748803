"""Smoke test for the pyradcompat extension.

Build first, e.g. with ``maturin develop --release`` in crates/python,
or ``cargo build --release -p radcompat-py --features extension-module`` and
point RADCOMPAT_PY_LIB at target/release/libpyradcompat.so.
"""

import importlib.machinery
import importlib.util
import json
import os
import sys


def load():
    path = os.environ.get("RADCOMPAT_PY_LIB")
    if not path:
        import pyradcompat

        return pyradcompat
    loader = importlib.machinery.ExtensionFileLoader("pyradcompat", path)
    spec = importlib.util.spec_from_loader("pyradcompat", loader)
    mod = importlib.util.module_from_spec(spec)
    loader.exec_module(mod)
    return mod


def main():
    rc = load()
    assert len(rc.FEATURE_NAMES) == 28
    assert len(rc.KERNEL_NAMES) == 10

    labels = rc.conditions()
    assert len(labels) == 320, len(labels)
    assert labels[0] == "T5_KI26f_D100", labels[0]

    t = rc.t_statistic(1.0, 0.5, 10, 1.2, 0.5, 10)
    assert abs(t - 0.2 / (0.05 ** 0.5)) < 1e-12
    assert rc.is_compatible(1.959) and not rc.is_compatible(1.96)

    grid = {"doses": [1.0, 0.25], "kernels": ["I26f", "B70f"], "thicknessesMm": [2.0, 1.0]}
    cases = rc.phantom_cohort(3, seed=7, thicknesses_mm=grid["thicknessesMm"])
    assert [c.case_id for c in cases] == ["case_000", "case_001", "case_002"]
    nx, ny, nz = cases[0].dims
    assert len(cases[0].voxels()) == nx * ny * nz
    assert [t for t, _ in cases[0].volumes()] == [2.0, 1.0]

    s = cases[0].features(1.0, "B70f", 1.0)
    assert s.usable and s.n >= 2 and len(s.mean) == 28
    assert len(s.per_slice) == s.n

    m = rc.analyze(cases, grid=json.dumps(grid))
    assert len(m) == 8 and m.is_symmetric()
    r = m.ratios()
    assert all(r[i][i] == 100.0 for i in range(8))
    dose_labels, dose = m.marginal("dose")
    assert dose_labels == ["100", "25"] and dose[0][0] == 100.0
    # every ordered pair of conditions, diagonal included
    assert m.comparison_count() == 3 * 28 * 8 * 8

    try:
        rc.conditions(json.dumps({"doses": [2.0]}))
    except ValueError:
        pass
    else:
        raise AssertionError("invalid grid accepted")

    print(f"pyradcompat smoke test ok: dose 100 vs 25 = {dose[0][1]:.2f}%")


if __name__ == "__main__":
    sys.exit(main())
