from collections import OrderedDict

import pytest

_RESULTS = OrderedDict()


class CriterionLog:
    """Collects sub-check outcomes so the run ends with one line per criterion."""

    def __call__(self, criterion, check, passed, detail=""):
        _RESULTS.setdefault(criterion, []).append((check, bool(passed), detail))
        return passed


@pytest.fixture(scope="session")
def criterion():
    return CriterionLog()


def _key(name):
    head = name.split()[0]
    return (0, int(head)) if head.isdigit() else (1, name)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in sorted(_RESULTS, key=_key):
        checks = _RESULTS[name]
        ok = all(p for _, p, _ in checks)
        parts = "; ".join(f"{c}: {'ok' if p else 'FAILED'}{' (' + d + ')' if d else ''}" for c, p, d in checks)
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {name}: {parts}")
