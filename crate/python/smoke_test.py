"""Smoke test for the pecthresh Python extension.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/pecthresh-*.whl
"""

import math

import pecthresh


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    n = 6
    state = pecthresh.ReplicaState.haar(n)
    for k in range(1, n):
        expected = (2**k + 2 ** (n - k)) / (2**n + 1)
        assert close(state.avg_purity(list(range(k))), expected), k

    for layer in pecthresh.brickwork_schedule(n, 4):
        state.step_layer(layer, [0.1] * n, 0.1)
    assert close(state.trace(), 1.0, 1e-9)

    q_a = pecthresh.zero_mean_field_rate(0.5, 0.1, 0.3)
    assert 0.1 < q_a < 0.3

    thr = pecthresh.stability_threshold(1.0)
    assert abs(thr - 3.0) < 1e-6, thr
    assert len(pecthresh.fixed_points(1.0, 2.0)) == 3

    rows = pecthresh.sweep(
        """
        engine = "replica"
        topology = "all-to-all"
        disorder = "spacetime"
        p = 0.5
        q_bar = 0.2
        ratios = [0.0, 0.5]
        sizes = [4]
        realizations = 10
        probe = "renyi2"
        """
    )
    assert len(rows) == 2 and all(r[6] == 10 for r in rows)
    assert all(math.isfinite(r[3]) for r in rows)

    try:
        pecthresh.sweep("engine = 'replica'")
    except ValueError as e:
        assert "topology" in str(e) or "missing" in str(e)
    else:
        raise AssertionError("incomplete config accepted")

    slope, _, r2, _ = pecthresh.instability(12, 0.5, 0.02, 0.3, 32, seed=1)
    assert slope > 0 and r2 > 0.9, (slope, r2)

    print("pecthresh", pecthresh.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
