"""Smoke test for the `sdg` extension module."""

import math

import sdg


def main():
    mesh = sdg.Mesh.unit_square(2)
    assert mesh.num_polygons == 4
    assert mesh.num_triangles == 16
    assert math.isclose(mesh.h, 0.5)

    disc = sdg.Discretization(mesh, k=1)
    dims = disc.dimensions()
    assert dims == {"velocity": 64, "gradient": 176, "pressure": 40, "trace": 32}, dims

    quiet = disc.solve(4, forcing="zero")
    assert all(v == 0.0 for v in quiet["velocity"])

    linear = disc.solve(4, beta=0.0)
    assert linear["iterations"] == [1, 1, 1, 1]

    errors = []
    hs = []
    for n in (2, 4):
        res = sdg.Discretization(sdg.Mesh.unit_square(n)).solve(n * n)
        errors.append(res["error_u"])
        hs.append(res["h"])
    orders = sdg.observed_orders(hs, errors)
    assert orders[0] is None and 1.7 < orders[1] < 2.3, orders

    csv = sdg.run_config("mode = convergence\nscheme = second-order\nmesh = [2, 4]\n")
    lines = csv.strip().splitlines()
    assert lines[0].startswith("epsilon,alpha,beta,scheme")
    assert len(lines) == 3

    try:
        sdg.run_config("mesh = 2\nunknown = 1\n")
    except ValueError as e:
        assert "unknown" in str(e)
    else:
        raise AssertionError("bad config accepted")

    print("smoke test passed:", ", ".join(f"{e:.3e}" for e in errors))


if __name__ == "__main__":
    main()
