import re
from collections import defaultdict

CRITERIA = {
    1: "coupling loss at 2 % normalized bandwidth",
    2: "cut-off normalized bandwidth",
    3: "waveform oracle vs closed-form array factor",
    4: "decoupling architectures restore the reflection gain",
    5: "angle-estimate spread scales with SNR",
    6: "optimal uplink share matches grid search",
    7: "CSI-loss Monte-Carlo limits",
    8: "channel gain bounded by the aperture size",
    9: "occupied bandwidth formula",
}
_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_")


def pytest_terminal_summary(terminalreporter):
    outcome = defaultdict(list)
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            m = _PATTERN.search(getattr(rep, "nodeid", ""))
            if m and (rep.when == "call" or status != "passed"):
                outcome[int(m.group(1))].append(status == "passed")
    if not outcome:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in CRITERIA.items():
        if number in outcome:
            verdict = "PASS" if all(outcome[number]) else "FAIL"
            terminalreporter.write_line(f"criterion {number}: {verdict}  {title}")
