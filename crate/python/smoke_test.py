"""Smoke test for the toroidal extension module. Run after `pip install --no-build-isolation crates/python`."""

import json
from pathlib import Path

import toroidal

FIXTURES = Path(__file__).resolve().parent.parent / "crates" / "cli" / "tests" / "fixtures"


def load(name):
    return (FIXTURES / name).read_text()


def main():
    ident = toroidal.Germ.from_json(load("identity.json"))
    assert ident.classify() == "Toroidal6", ident.classify()
    assert ident.toroidality()["result"] == "toroidal"
    assert toroidal.Germ.from_json(ident.to_json()).to_json() == ident.to_json()

    tau = toroidal.Germ.from_json(load("tau_order2.json")).tau()
    assert tau["tau"] == 2, tau

    report = toroidal.Germ.from_json(load("form319.json")).lambda_report()
    assert report["components"][0]["lambda"] == -1, report

    rel = toroidal.PreRel3(1, 1, -3)
    res = rel.resolve()
    assert res["all_leaves_closed"] and res["depth"] >= 1, res
    try:
        toroidal.PreRel3(1, 2, 3)
    except toroidal.ToroidalError as e:
        assert "InvalidPreRelation" in str(e)
    else:
        raise AssertionError("same-sign exponents accepted")

    fan = toroidal.Fan.from_json(load("fan_three.json"))
    assert not fan.is_locally_principal()
    done, history = fan.principalize("mixed")
    assert done.is_locally_principal() and history
    assert done.num_rays > fan.num_rays
    json.loads(done.to_json())

    assert toroidal.smith_normal_form([[2, 4, 4], [-6, 6, 12], [10, -4, -16]]) == [2, 6, 12]
    assert toroidal.lattice_index([[1, 0, 0], [0, 1, 0]], [[2, 0, 0], [0, 3, 0]]) == 6
    assert toroidal.lattice_index([[1, 0, 0], [0, 1, 0]], [[2, 0, 0]]) is None

    suite = toroidal.run_suite(7, ["lattice_oracles"])
    assert suite["passed"] and [c["id"] for c in suite["criteria"]] == ["lattice_oracles"]

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
