"""Smoke test for the qgeo_py extension.

Build and run from the repository root:

    cargo build --release -p qgeo-python
    cp target/release/libqgeo_py.so python/qgeo_py.so
    python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import qgeo_py as q


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    canon = q.Model.canonical()
    assert canon.names == ["theta", "phi", "r"]
    x = canon.field([math.pi / 2, 0.0, 0.5])
    close(x[0], 2.0, 1e-12)
    close(x[2], 1.0, 1e-12)

    g = canon.geometry([1.1, 0.4, 0.5], 10.0, probe=[0.6, 0.0, 0.8])
    for i in range(3):
        for j in range(3):
            close(g.qmt[i][j], g.qgt[i][j].real, 1e-12)
            close(g.berry[i][j], -2.0 * g.qgt[i][j].imag, 1e-12)
            close(g.qfim[i][j], 4.0 * g.qmt[i][j], 1e-12)
    g4 = canon.geometry([1.1, 0.4, 0.5], 10.0, probe="optimal:theta", repetitions=4)
    assert g4.repetitions == 4

    # Peak of the theta metric at the transition is T^2.
    close(q.max_qmt_canonical(math.pi, 0.0, 1.0, 10.0)[0], 100.0, 1e-9)
    close(q.max_qmt_canonical(math.pi - 0.1, 0.0, 1.0, 10.0)[0], 99.9271, 5e-4)
    close(q.max_qmt_ssh(1.0, 1.0, math.pi, 10.0)[2], 100.0, 1e-9)

    assert abs(q.coarse_chern_canonical(0.5)) == 2.0
    assert q.coarse_chern_canonical(1.5) == 0.0
    assert q.winding_number(0.5, 1.0)[0] == 1.0
    close(q.winding_number(1.5, 1.0)[1], 0.0, 1e-6)

    ssh = q.Model.ssh()
    c = ssh.control_qmt([0.5, 1.0, math.pi / 2], 10.0)
    assert len(c) == 3 and all(c[i][j] == c[j][i] for i in range(3) for j in range(3))

    tr = q.run_schedule("canonical", [math.pi / 4, 1.0], [math.pi / 3, math.pi / 5, math.pi / 6, math.pi / 15], [], 10.0)
    assert tr.converged and tr.names == ["theta", "r"]
    close(tr.records[-1].qmt, 99.994, 5e-4)

    auto = q.auto_search("canonical", [math.pi / 4, 0.2], 10.0)
    assert auto.converged
    assert max(auto.deviations) < 0.01

    checks = q.run_verification(points=10, include_control=False)
    assert all(c[4] for c in checks), checks
    assert not all(c[4] for c in q.run_verification(points=10, include_control=False, flip_berry_sign=True))

    try:
        canon.geometry([math.pi, 0.0, 1.0], 10.0)
    except q.QgeoError as e:
        assert "degenerate" in str(e)
    else:
        raise AssertionError("exact transition should raise")
    try:
        q.run_schedule("nope", [0.0, 0.0], [], [], 10.0)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown model should raise")

    print("smoke test passed")


if __name__ == "__main__":
    main()
