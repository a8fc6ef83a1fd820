#!/usr/bin/env python3
"""Smoke test for the aoilab_py extension module.

Builds the cdylib with cargo, loads it, and checks a handful of exact
values end to end. Run from anywhere:

    python3 python/smoke_test.py
"""

import importlib.util
import pathlib
import shutil
import subprocess
import sys
import tempfile
from fractions import Fraction

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build_and_load():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "aoilab-py"],
        cwd=ROOT,
        check=True,
    )
    built = ROOT / "target" / "release" / "libaoilab_py.so"
    if not built.exists():  # e.g. macOS
        built = ROOT / "target" / "release" / "libaoilab_py.dylib"
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="aoilab-py-"))
    target = tmp / "aoilab_py.so"
    shutil.copy(built, target)
    spec = importlib.util.spec_from_file_location("aoilab_py", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    aoilab_py = build_and_load()

    inst = aoilab_py.Instance.example3()
    assert len(inst) == 6
    assert inst.horizon() == "2"
    assert len(inst.id()) == 64

    # Round trip through the text format.
    again = aoilab_py.Instance.parse(inst.serialize())
    assert again.id() == inst.id()

    plus = aoilab_py.run(inst, "srpt-plus")
    assert Fraction(plus.integral) == Fraction(279, 200)
    assert Fraction(plus.average) == Fraction(279, 400)
    assert plus.completions == [(4, "3/2"), (5, "9/5"), (6, "19/10")]

    latest = aoilab_py.run(inst, "srpt-l")
    assert Fraction(latest.integral) == Fraction(653, 400)
    assert latest.completions[0] == (1, "29/20")

    chain, opt = aoilab_py.optimal(inst)
    assert chain == [5, 6]
    assert Fraction(opt.integral) == Fraction(553, 400)

    assert Fraction(aoilab_py.competitive_ratio(inst, "srpt-plus")) == Fraction(558, 553)
    assert Fraction(aoilab_py.competitive_ratio(inst, "srpt-l")) == Fraction(653, 553)

    for check_id, passed, skipped in aoilab_py.check(inst):
        assert passed, check_id

    rnd = aoilab_py.Instance.random_uniform(6, "4", "2", 7)
    ratio = Fraction(aoilab_py.competitive_ratio(rnd, "srpt-plus"))
    assert 1 <= ratio <= 4

    print("smoke test: all assertions passed")


if __name__ == "__main__":
    sys.exit(main())
