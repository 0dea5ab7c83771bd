"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""


def pytest_terminal_summary(terminalreporter):
    results = {}
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call":
                continue
            label = dict(getattr(rep, "user_properties", [])).get("criterion")
            if label is None:
                continue
            # a criterion split over several tests passes only if all of them do
            results[label] = results.get(label, True) and outcome == "passed"
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for label in sorted(results, key=lambda s: (int(s.split()[0][2:]), s)):
        terminalreporter.write_line(f"{'PASS' if results[label] else 'FAIL'}  {label}")
