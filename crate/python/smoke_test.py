"""Smoke test for the compiled module: run with the extension importable."""
import json
import math

import bmcross


def close(x, y, tol):
    assert abs(x - y) <= tol, (x, y)


def main():
    reflect = 2.0 * bmcross.norm_cdf(-1.0)
    s = bmcross.Barrier.sqrt_remaining(1.0, 0.0)
    r = bmcross.crossing_prob(s)
    assert r["conditions_met"]
    close(r["probability"], reflect, 1e-15)

    strip = bmcross.Barrier.two_sided_constant(1.0, -1.0)
    close(bmcross.crossing_prob(strip)["probability"], 0.629222, 1e-6)
    assert strip(0.5) == (1.0, -1.0)

    bad = bmcross.crossing_prob(bmcross.Barrier.hermite(2.0, 10.0, 2))
    assert bad["probability"] is None and not bad["conditions_met"]

    # arcsine law for the last zero
    zero = bmcross.Barrier.sqrt_remaining(0.0, 0.0)
    close(bmcross.lambda_pdf(zero, 0.25), 1.0 / (math.pi * math.sqrt(0.25 * 0.75)), 1e-13)

    inv = s.time_inverted()
    assert inv.time_inverted() == s
    assert bmcross.Barrier.from_json(inv.to_json()) == inv
    assert json.loads(s.to_json())["family"] == "sqrt-remaining"

    grid, cdf, pdf = bmcross.density(bmcross.Barrier.linear(1.0, 0.5), points=200)
    assert len(grid) == len(cdf) == len(pdf) == 200
    assert all(b >= a for a, b in zip(cdf, cdf[1:]))

    lin = bmcross.Barrier.linear(1.0, 0.0)
    a = bmcross.mc_crossing(lin, paths=20000, steps=256, seed=3)
    b = bmcross.mc_crossing(lin, paths=20000, steps=256, seed=3)
    assert a == b
    assert abs(a["estimate"] - reflect) < max(3 * a["std_error"], 5e-3)

    lhs, rhs = bmcross.mc_fortet_check(lin, 1.5, paths=20000, steps=256, seed=1)
    assert abs(rhs["estimate"] - lhs) < 3 * rhs["std_error"] + 1e-12

    ok, rows = bmcross.verify()
    assert ok, [r for r in rows if not r[1]]
    ok, rows = bmcross.verify(mirrored_log=True)
    assert [name for name, passed, _ in rows if not passed] == ["mirrored-log/boundedness"]

    close(bmcross.lambert_w(1.0), 0.5671432904097838, 1e-15)
    try:
        bmcross.Barrier.linear(1.0, 0.0, horizon=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative horizon accepted")
    print("smoke test ok")


if __name__ == "__main__":
    main()
