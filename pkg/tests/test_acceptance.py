"""Acceptance criteria on the m = n = 2 model at seed 42.

Runs ``envcalc check --format json`` twice in process, reads the case
verdicts off the first run and compares the two outputs byte for byte.
Each criterion prints one PASS/FAIL line. Also runnable as a script.
"""

import contextlib
import io
import json
import sys
import time

import pytest

from envcalc.cli import main
from envcalc.oracle import POLY_TOL, TRANS_TOL

SEED = 42
ARGV = ["check", "--format", "json", "--seed", str(SEED), "--model", "2,2"]


def _check_run() -> tuple[int, str]:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(ARGV)
    return code, buf.getvalue()


@pytest.fixture(scope="module")
def runs():
    t0 = time.perf_counter()
    first = _check_run()
    second = _check_run()
    return {"first": first, "second": second, "doc": json.loads(first[1]), "seconds": time.perf_counter() - t0}


def _suite(doc, name):
    return next(s for s in doc["suites"] if s["suite"] == name)


def _cases(doc, suite, prefix):
    return [c for c in _suite(doc, suite)["cases"] if c["id"].startswith(prefix)]


def _verdict(ok: bool, n: int, text: str) -> tuple[bool, str]:
    return ok, f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {text}"


def _counted(cases, need):
    fails = [c["id"] for c in cases if c["verdict"] != "pass"]
    return len(cases) >= need and not fails, f"{len(cases)} cases (need {need}), {len(fails)} not passing"


def criterion_1(doc):
    cases = _cases(doc, "chain-rule", "env-")
    ok, msg = _counted(cases, 200)
    over = [
        c["id"]
        for c in cases
        if c["residual"] > (POLY_TOL if "tier=polynomial" in c["detail"] else TRANS_TOL)
    ]
    worst = max((c["residual"] for c in cases), default=float("nan"))
    return _verdict(ok and not over, 1, f"chain rule, {msg}, {len(over)} over tier tolerance, worst {worst:.2e}")


def criterion_2(doc):
    ok_f, msg_f = _counted(_cases(doc, "theorem4", "form-"), 200)
    ok_s, msg_s = _counted(_cases(doc, "theorem4", "smoothened-"), 200)
    return _verdict(ok_f and ok_s, 2, f"phi∘phi⁻¹ on forms: {msg_f}; phi⁻¹∘phi on smoothened forms: {msg_s}")


def criterion_3(doc):
    cases = _cases(doc, "connection", "derivation-")
    ok, msg = _counted(cases, 100)
    worst = max((c["residual"] for c in cases), default=float("nan"))
    ok = ok and worst <= POLY_TOL
    return _verdict(ok, 3, f"connection (Pi∘nabla, Leibniz, well-definedness): {msg}, worst {worst:.2e}")


def criterion_4(doc):
    ok, msg = _counted(_cases(doc, "algebra-laws", "triple-"), 200)
    return _verdict(ok, 4, f"envelope algebra laws: {msg}")


def criterion_5(doc):
    ok_f, msg_f = _counted(_cases(doc, "lemma2", "fraction-"), 50)
    ranks = [c for c in _cases(doc, "lemma2", "rank-") if "relations=0" in c["detail"]]
    ok_r, msg_r = _counted(ranks, 20)
    return _verdict(ok_f and ok_r, 5, f"localization round trips: {msg_f}; smoothen rank on free presentations: {msg_r}")


def criterion_6(doc):
    ok_a, msg_a = _counted(_cases(doc, "prop3", "first-"), 50)
    ok_b, msg_b = _counted(_cases(doc, "prop3", "mirror-"), 50)
    return _verdict(ok_a and ok_b, 6, f"extension of scalars: {msg_a}; mirrored: {msg_b}")


def criterion_7(doc):
    m, n = doc["model"]["m"], doc["model"]["n"]
    suite = _suite(doc, "rank-report")
    ok, msg = _counted(_cases(doc, "rank-report", "point-"), 100)
    stab = [c for c in suite["cases"] if c["id"] == "stability"]
    measured = {int(c["detail"].split()[0].split("=")[1]) for c in _cases(doc, "rank-report", "point-")}
    stable = len(measured) == 1 and bool(stab) and stab[0]["verdict"] == "pass"
    value = next(iter(measured)) if len(measured) == 1 else sorted(measured)
    ok = ok and stable and max(measured) <= m + n
    flag = "values coincide for this model" if m * n == m + n else "values differ for this model"
    text = (
        f"rank report: {msg}; stated dim(M)*dim(N) = {m * n}, measured = {value}, "
        f"bound dim(M)+dim(N) = {m + n}; ambiguity flagged ({flag})"
    )
    return _verdict(ok, 7, text)


def criterion_8(runs):
    (c1, out1), (c2, out2) = runs["first"], runs["second"]
    same = out1.encode() == out2.encode()
    return _verdict(same and c1 == c2, 8, f"determinism, {len(out1.encode())} bytes, identical={same}")


DOC_CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]


def _report(capsys, result):
    ok, line = result
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


@pytest.mark.parametrize("criterion", DOC_CRITERIA, ids=lambda f: f.__name__)
def test_criterion(runs, capsys, criterion):
    _report(capsys, criterion(runs["doc"]))


def test_criterion_8_determinism(runs, capsys):
    _report(capsys, criterion_8(runs))


def test_runs_are_clean(runs):
    assert runs["first"][0] == 0
    assert runs["doc"]["summary"]["fail"] == 0


def _script() -> int:
    t0 = time.perf_counter()
    first, second = _check_run(), _check_run()
    data = {"first": first, "second": second, "doc": json.loads(first[1])}
    results = [c(data["doc"]) for c in DOC_CRITERIA] + [criterion_8(data)]
    for _, line in results:
        print(line)
    print(f"{sum(ok for ok, _ in results)}/{len(results)} criteria pass in {time.perf_counter() - t0:.1f}s")
    return 0 if all(ok for ok, _ in results) else 1


if __name__ == "__main__":
    sys.exit(_script())
