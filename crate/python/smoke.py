"""Smoke test for the Python bindings.

Build and install first:
    pip install --no-build-isolation ./crates/nprenorm-py
then run:
    python python/smoke.py
"""

import json
import math
import pathlib
import sys

import nprenorm_py as npr

ROOT = pathlib.Path(__file__).resolve().parent.parent
SCHEMA = ROOT / "crates" / "nprenorm" / "schemas" / "artifact.schema.json"


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    return ok


def main():
    results = []

    prof = npr.brjuno("golden2", depth=30)
    results.append(check("brjuno golden2", abs(prof["brjuno_partial"] - 1.5045988) < 1e-6, prof["brjuno_partial"]))
    results.append(check("q times", prof["q_times"][:9] == [1, 2, 5, 12, 29, 70, 169, 408, 985]))

    cf = npr.cf_expand("0.41421356237", depth=5)
    results.append(check("cf-expand", cf["digits"] == [[1, 2]] * 5))

    b = npr.bisequence("golden2", b=0.0, k=0)
    results.append(check("bisequence diagonal", b["rows"] == [[-2.0]]))

    orb = npr.orbit("golden2", 100)
    pts = orb["points"]
    bounded = all(math.hypot(float(p["re"]), float(p["im"])) < 2 for p in pts)
    results.append(check("orbit", len(pts) == 101 and bounded))

    try:
        npr.brjuno("3,4", depth=5)
        results.append(check("error kind", False, "no exception"))
    except npr.NprenormError as e:
        results.append(check("error kind", e.args[0] == "DepthExceeded", e.args))

    art = npr.run(["siegel", "--digits", "golden2", "--terms", "60"])
    try:
        import jsonschema

        jsonschema.validate(art, json.loads(SCHEMA.read_text()))
        results.append(check("artifact schema", True))
    except ImportError:
        print("skip artifact schema (jsonschema not installed)")

    chk = npr.renorm_check(grid=6)
    results.append(check("renorm multiplier", chk["phase_error"] < 1e-3, chk["phase_error"]))

    if not all(results):
        sys.exit(1)
    print("python smoke test passed")


if __name__ == "__main__":
    main()
