"""Smoke test for the pylevygauge extension module."""

import json
import math

import pylevygauge as lg


def frob(m):
    return math.sqrt(sum(abs(z) ** 2 for row in m for z in row))


def main():
    a = lg.Connection("bpst_instanton", rho=1.0)
    assert (a.dim, a.fiber) == (4, 2), a
    assert a.is_vacuum("euclidean")
    c = lg.Curve.random(3, cells=512, dim=4, amplitude=0.5)
    assert len(c.nodes()) == 513 and c.nodes()[0] == [0.0] * 4

    u = lg.holonomy(a, c)
    uu = [[sum(u[k][i].conjugate() * u[k][j] for k in range(2)) for j in range(2)] for i in range(2)]
    assert abs(uu[0][0] - 1) < 1e-10 and abs(uu[0][1]) < 1e-10
    assert lg.unitarity_drift(a, c) < 1e-10

    lap = lg.levy_operator(a, c)
    assert frob(lap) < 1e-6, frob(lap)

    p = lg.Connection("random_polynomial", seed=2)
    integral = lg.levy_operator(p, c)
    cesaro = lg.levy_operator(p, c, mode="cesaro", n_max=64)
    print("random_polynomial: |integral| = %.4f, |cesaro - integral| = %.2e" % (frob(integral), frob([[x - y for x, y in zip(r, s)] for r, s in zip(cesaro, integral)])))
    assert frob(lg.levy_divergence_b(p, c)) > 0

    f = a.curvature([0.1, 0.2, 0.3, 0.4])
    assert frob(f[0][0]) == 0 and frob(f[0][1]) > 0

    passed, text = lg.verify('checks = ["TRANSPORT", "GROSS"]\n[connection]\nname = "zero"\n[curves]\ncount = 2\ncells = 128\n')
    report = json.loads(text)
    assert passed and report["status"] == "PASS" and len(report["checks"]) == 2

    ids = [c[0] for c in lg.checks()]
    assert "AGV1" in ids and "AGV1" in lg.CHECK_TABLE

    for bad in (lambda: lg.Connection("nowhere"), lambda: a.potential([0.0, 1.0]), lambda: lg.verify("checks = [\"XYZ\"]")):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    print("smoke test passed")


if __name__ == "__main__":
    main()
