#!/usr/bin/env python3
"""Smoke test for the altsyl_py extension module.

Builds nothing itself: run `cargo build -p altsyl-py` (or --release) first.
The script locates the cdylib, copies it under an importable name, and
exercises the bound API end to end.
"""

import importlib.util
import json
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libaltsyl_py.so", "altsyl_py.so", "libaltsyl_py.dylib")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("build the extension first: cargo build -p altsyl-py")
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="altsyl_py_"))
    target = tmp / "altsyl_py.so"
    shutil.copy2(built, target)
    spec = importlib.util.spec_from_file_location("altsyl_py", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    alt = load_module()
    checks = 0

    def check(cond, label):
        nonlocal checks
        assert cond, label
        checks += 1
        print(f"ok {checks:2d} - {label}")

    e = alt.expand("5/7", "const:1")
    check(e.q0 == 0 and e.terms == [1, 3, 21] and e.terminated, "expand 5/7 under const:1")
    check(e.literal() == "0;1,3,21", "literal rendering")

    e2 = alt.expand("5/7", "pow:2")
    check(e2.terms == [2, 14], "expand 5/7 under pow:2")

    check(alt.reconstruct("0;1,3,21", "const:1") == "5/7", "reconstruct round-trip")
    check(alt.reconstruct("0;1,3,21", "const:1", upto=2) == "2/3", "partial reconstruct")

    report = alt.validate("0;1,2", "const:1")
    check(not report.valid and report.violated == "C6" and report.index == 1,
          "validate flags C6")
    check(alt.validate("0;1,3,21", "const:1").valid, "validate accepts canonical digits")
    check(alt.validate("0;2,9", "list:2,3").violated == "chain", "chain violation surfaces")

    check(alt.compare("0;1,3,21", "0;2", "const:1") == "greater", "compare 5/7 > 1/2")
    check(alt.compare("0;1,2;...", "0;1,3;...", "const:1") == "less", "compare prefixes")

    value, expansion = alt.arith("add", "0;1,3,21", "const:1", y="0;2")
    check(value == "17/14" and expansion.q0 == 1 and expansion.terms == [4, 28],
          "arith add 5/7 + 1/2")
    value, expansion = alt.arith("neg", "0;2", "const:1")
    check(value == "-1/2" and expansion.q0 == -1 and expansion.terms == [2],
          "arith neg 1/2")

    derived = alt.digits("0;1,3,21", "const:1", count=2)
    check(derived.terms == [1, 3] and not derived.terminated,
          "digits re-derived from enclosures")
    try:
        alt.digits("0;2;...", "const:1", count=1)
        check(False, "undecided digits must raise")
    except RuntimeError:
        check(True, "undecided digits raise RuntimeError")

    lo, hi, used = alt.enclose("0;1,3;...", "const:1", precision="1/2")
    check(lo == "2/3" and hi == "1" and used == 2, "enclose brackets a prefix")
    lo, hi, _ = alt.enclose("0;1,3,21", "const:1")
    check(lo == hi == "5/7", "enclose reaches exact terminated values")

    check(alt.sup(["0;2", "0;1,3"], "const:1") == "0;1,3", "sup picks 2/3")
    check(alt.sup(["0;2", "0;1,3"], "const:1", inf=True) == "0;2", "inf picks 1/2")

    cert = json.loads(alt.certify(1, "sylvester", prefix=10))
    check(cert["N"] == 1 and cert["head"] == "-1/2", "sylvester certificate")
    check(alt.crosscheck(1, "sylvester", 6, 4), "certificate crosscheck")
    try:
        alt.certify(2, "sylvester")
        check(False, "l beyond floor(K) must raise")
    except ValueError:
        check(True, "l beyond floor(K) raises ValueError")

    check(alt.eval_series("sylvester", -1, terms=3) == "-5/14", "eval_series -5/14")

    print(f"\nsmoke test passed ({checks} checks)")


if __name__ == "__main__":
    main()
