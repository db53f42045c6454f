"""Smoke test for the dpmc_py extension.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`
or `pip install ./crates/python`, then run `python python/smoke_test.py`.
"""

import json
import math
import os
import tempfile

import dpmc_py


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def test_distribution():
    # {0: 0.9, 100: 0.1}
    d = dpmc_py.Distribution([(0, 0.9), (100, 0.1)])
    assert approx(d.mean(), 10.0)
    assert d.var(0.9) == 0
    assert approx(d.cvar(0.9), 100.0)
    assert d.to_csv().startswith("value,probability\n0,0.9\n")
    assert approx(dpmc_py.cvar([(0, 0.9), (100, 0.1)], 0.9), 100.0)


def test_query_and_automaton():
    assert dpmc_py.parse_query("R{CVaR@0.7,cost}min=? [ F (g1 & F g2) ]") == (
        "R{CVaR@0.7,cost}min=? [ (F (g1 & (F g2))) ]"
    )
    assert dpmc_py.dfa_states("(F a) & (F b)") == 4
    try:
        dpmc_py.parse_query("R{Var,cost}min=? [ F a ]")
    except ValueError:
        pass
    else:
        raise AssertionError("minimising the variance must be refused")


def test_dtmc_from_files():
    with tempfile.TemporaryDirectory() as tmp:
        tra = os.path.join(tmp, "m.tra")
        lab = os.path.join(tmp, "m.lab")
        rew = os.path.join(tmp, "m.r.rew")
        with open(tra, "w") as f:
            f.write("STATES 2\n0 0 0.5\n0 1 0.5\n1 1 1\n")
        with open(lab, "w") as f:
            f.write("1: goal\n")
        with open(rew, "w") as f:
            f.write("0 1\n")
        m = dpmc_py.load_dtmc(tra, lab, rew)
        res = dpmc_py.check(m, "R{E,r}=? [ F goal ]", eps=1e-9)
        # geometric(0.5) number of steps
        assert approx(res.value, 2.0, 1e-6)
        assert res.distribution.support[0] == (1, 0.5)
        doc = json.loads(res.to_json())
        assert doc["schema"] == 1


def test_mudnails_route_swap():
    m = dpmc_py.generate("mudnails")
    assert m.kind == "mdp"
    q = "R{%s,cost}min=? [ " + m.formula + " ]"
    neutral = dpmc_py.optimize(m, q % "E", atoms=61, budget_atoms=61)
    averse = dpmc_py.optimize(m, q % "CVaR@0.7", atoms=61, budget_atoms=61)
    cvar = lambda r: r.distribution.cvar(0.7)
    assert neutral.value < averse.distribution.mean()
    assert cvar(averse) < cvar(neutral)
    assert averse.budget is not None
    assert averse.policy.startswith("# dpmc policy")


def test_infinite_mass():
    d = dpmc_py.Distribution([(1, 0.5)], p_inf=0.5)
    assert math.isinf(d.mean())


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok  {name}")
    print("smoke test passed")
