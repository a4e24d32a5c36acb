"""Exercises the Python bindings end to end. Run after building the module:

    maturin develop -m crates/python/Cargo.toml --release
    python python/smoke_test.py
"""
import json
import math

import steiner_lab as sl


def main():
    square = sl.Configuration([[0, 0], [1, 0], [1, 1], [0, 1]])
    res = sl.steiner_minimal_trees(square)
    assert res.ambiguous and len(res.minima) == 2, res
    assert abs(res.min_length - (1 + math.sqrt(3))) < 1e-9
    for net in res.minima:
        assert net.verify_locally_minimal()["passed"]
    assert "<svg" in sl.render_svg(square, res.minima)

    (_, octagon), = sl.fixture("octagon")
    assert len(sl.steiner_minimal_trees(octagon).minima) == 8

    assert [len(sl.full_topologies(n)) for n in range(3, 8)] == [1, 3, 15, 105, 945]

    tri = sl.Configuration([[0, 0], [1, 0], [0.5, 0.8]])
    assert sl.classify3(tri) == "full-ccw"
    (net,) = sl.steiner_minimal_trees(tri).minima
    motion = [net.direction_vector(u) for u in range(3)]
    assert abs(net.length_derivative(motion) - 3) < 1e-9

    cfg, trimmed = sl.trim(net, 0, 0.25)
    assert abs(net.length - trimmed.length - 0.25 * net.edge_lengths()[0]) < 1e-12
    grown_cfg, grown, leaves = sl.grow(net, 1, 0.05)
    assert grown_cfg.n == 4 and leaves == [3]

    other = sl.Configuration([[0.1, 0], [1, 0.2], [0.4, 0.9]])
    path = sl.connect(tri, other, samples=40)
    assert path.passed and len(path) >= 40, path.failures
    assert json.loads(path.to_json())["target_type"] == net.signature

    moved, report = sl.escape_ambiguity(square, res.signatures[0])
    assert report["margin"] > 0
    assert sl.steiner_minimal_trees(moved).signatures == [res.signatures[0]]

    try:
        sl.connect(tri, square)
    except sl.PreconditionError:
        pass
    else:
        raise AssertionError("mismatched endpoints accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
