"""Smoke test for the dnmg_py extension.

Build first:
    cargo build -p dnmg-py --release --features extension-module
then run:
    python3 python/smoke_test.py
"""

import importlib.util
import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libdnmg_py.so"
        if lib.exists():
            break
    else:
        sys.exit("libdnmg_py.so not found; build the dnmg-py crate first")
    tmp = pathlib.Path(tempfile.mkdtemp())
    dst = tmp / "dnmg_py.so"
    shutil.copy(lib, dst)
    spec = importlib.util.spec_from_file_location("dnmg_py", dst)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def main():
    dnmg = load()
    net = dnmg.Network.toybay()
    print(net)
    assert net.blocks == ["B1", "B2", "B3", "B4", "B5"]

    res = dnmg.partition(net, uncertainty=0.1)
    assert res["converged"], res["iterations"]
    sol = res["solution"]
    print("objective", round(res["objective"], 6), "iterations", len(res["iterations"]))
    assert dnmg.verify(net, sol) == []

    rep = dnmg.check(net, sol, 0.1, samples=50, seed=3)
    print("linear feasibility", rep["fraction"])
    assert rep["fraction"] == 1.0

    schedule = {"periods": [{"steps": 12, "solution": sol, "events": [{"step": 5, "scope": "global", "factor": 1.05}]}]}
    csv = dnmg.simulate(net, schedule, seed=1)
    assert csv.splitlines()[0].startswith("step,period,cc_id,phase")
    cfg = dnmg.controller_defaults()
    assert cfg["alpha"] == 0.05

    round_trip = dnmg.Network.from_json(net.to_json())
    assert round_trip.switches == net.switches
    try:
        dnmg.partition(net, contingency=["block:nope"])
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("bad contingency accepted")
    print("ok")


if __name__ == "__main__":
    main()
