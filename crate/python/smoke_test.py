"""Smoke test for the netindex Python bindings.

Build and install first:  pip install --no-build-isolation -e crates/py
Then run:  python python/smoke_test.py  (or pytest python/)
"""

import json

import pytest

import netindex

PATH = {
    "k": 1,
    "vertices": ["s", "a", "b", "t"],
    "edges": [
        {"id": 1, "tail": "s", "head": "a"},
        {"id": 2, "tail": "a", "head": "b"},
        {"id": 3, "tail": "b", "head": "t"},
    ],
    "demands": {"3": 1},
}
RELAY = {"field": {"p": 2, "degree": 1}, "n": 1, "edges": {"1": [[1]], "2": [[1]], "3": [[1]]}}


def test_field():
    assert netindex.Field("3").order == 3
    assert netindex.Field("2,2").order == 4
    assert netindex.Field("2,3").characteristic == 2
    with pytest.raises(ValueError):
        netindex.Field("4")


def test_path_round_trip():
    net = netindex.Network.from_json(json.dumps(PATH))
    assert (net.k, net.m, net.d) == (1, 3, 1)
    code = netindex.NetworkCode.from_json(net, json.dumps(RELAY))
    code.validate(net)
    assert code.evaluate([1]) == [[1], [1], [1]]

    inst, reduction = net.reduce()
    assert inst.mu() == 3
    assert reduction["edge_ids"] == [1, 2, 3]

    lifted = netindex.lift(net, code)
    report = lifted.validate(inst)
    assert report["rate"] == "3" and report["achieves_bound"]

    lowered = netindex.lower(net, lifted)
    lowered.validate(net)
    assert json.loads(lowered.to_json(net))["edges"] == RELAY["edges"]


def test_broken_code_is_rejected():
    net = netindex.Network.from_json(json.dumps(PATH))
    bad = dict(RELAY, edges=dict(RELAY["edges"], **{"2": [[0]]}))
    code = netindex.NetworkCode.from_json(net, json.dumps(bad))
    with pytest.raises(ValueError):
        code.validate(net)
    with pytest.raises(ValueError):
        netindex.lift(net, code)


def test_butterfly_search():
    inst = netindex.instance("butterfly")
    gf2 = netindex.Field("2")
    assert netindex.search_indexcode(inst, gf2, 1, 1)["outcome"] == "exhausted"
    found = netindex.search_indexcode(inst, gf2, 1, 2)
    assert found["outcome"] == "found"
    assert found["result"].validate(inst)["l"] == 2
    report, code = netindex.min_length(inst, gf2, 1)
    assert report["report"]["l"] == 2 and code.l == 2


def test_matroids():
    none = netindex.matroid_rep("non-pappus", netindex.Field("3"))
    assert none["outcome"] == "exhausted" and none["result"] is None
    pappus = netindex.matroid_rep("pappus", netindex.Field("7"))
    assert pappus["outcome"] == "found" and len(pappus["result"]) == 9
    assert netindex.multilinear_check()["holds"]


def test_m_network_has_no_scalar_code():
    net = netindex.instance("m-network")
    r = netindex.search_netcode(net, netindex.Field("2"))
    assert r["outcome"] == "exhausted"
    assert netindex.search_netcode(net, netindex.Field("3"), budget_nodes=5)["outcome"] == "budget"


def test_random_networks():
    for seed in range(10):
        net, code = netindex.random_network(seed, netindex.Field("3"), 2)
        code.validate(net)
        inst, _ = net.reduce()
        assert netindex.lift(net, code).validate(inst)["achieves_bound"]


def test_unknown_instance():
    with pytest.raises(KeyError):
        netindex.instance("nope")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
