import os

from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_TITLES = {
    1: "level-square geometry and subsquare counts",
    2: "derived 2x2 rules accept P_8 and x_omega windows",
    3: "subsquare frequency bound and limit",
    4: "frequency ratio on complete tilings",
    5: "Y_{m,n} count bracket and entropy rate",
    6: "corner-label sampler chi-square",
    7: "factor decomposition on random windows",
    8: "exhaustive contour, moat and flip mechanics",
    9: "Peierls constant and regime flag",
    10: "entropy bounds bracket",
    11: "Shannon entropy inequalities",
    12: "lattice animal census",
    13: "heat-bath sanity, monotonicity and reproducibility",
}

_outcomes = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for marker in ("acceptance_",):
        name = report.nodeid.rsplit("::", 1)[-1]
        if name.startswith("test_" + marker):
            num = int(name[len("test_" + marker):].split("_")[0])
            prev = _outcomes.get(num, True)
            _outcomes[num] = prev and report.outcome == "passed"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_TITLES):
        if num in _outcomes:
            verdict = "PASS" if _outcomes[num] else "FAIL"
            terminalreporter.write_line(f"ACCEPTANCE {num:2d} {verdict}  {ACCEPTANCE_TITLES[num]}")
