"""Smoke test for the mdpbd Python bindings.

Build and install first, e.g. `pip install --no-build-isolation ./crates/py`.
"""

import json

import mdpbd_py as m


def main():
    inst = m.Instance.synthetic(30, dim=2, seed=4, eta=0.5, epsilon=4.0)
    print(inst)
    assert inst.n == 30 and inst.k == 30
    assert all(inst.dist[i][j] <= inst.eta for i, j in inst.edges)

    z, opt = m.solve_monolithic(inst)
    report = m.verify(inst, z)
    assert report["feasible"], report
    assert abs(m.expected_utility_loss(inst, z) - opt) <= 1e-9 * (1 + opt)

    assign = m.partition(inst, 3, algorithm="rec", seed=1)
    assert len(assign) == 30 and set(assign) <= {0, 1, 2}
    bd = m.solve_benders(inst, assign, xi=0.01)
    assert bd["status"] == "converged", bd["status"]
    assert abs(bd["objective"] - opt) <= 0.01 * (1 + opt)
    assert m.verify(inst, bd["matrix"])["feasible"]

    em = m.exponential_mechanism_matrix(inst)
    assert m.expected_utility_loss(inst, em) >= opt - 1e-9

    back = m.Instance.from_json(inst.to_json())
    assert json.loads(back.to_json()) == json.loads(inst.to_json())

    try:
        m.partition(inst, 31)
    except ValueError:
        pass
    else:
        raise AssertionError("m > n should be rejected")

    print(f"ok: optimum {opt:.6f}, benders {bd['objective']:.6f} in {bd['iterations']} iterations")


if __name__ == "__main__":
    main()
