import pytest
from hypothesis import strategies as st

from oracles import from_cycles

_results: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    n, title = mark.args
    ok = rep.passed and _results.get(n, (title, True))[1]
    _results[n] = (title, ok)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        title, ok = _results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")


@st.composite
def permutations(draw, degree):
    return tuple(draw(st.permutations(range(degree))))


@st.composite
def perm_generators(draw, max_degree=5, max_gens=3):
    """A degree and a short list of 0-based permutations on it."""
    degree = draw(st.integers(1, max_degree))
    gens = draw(st.lists(permutations(degree), max_size=max_gens))
    return degree, gens


def cycles_text(p):
    """0-based image tuple to 1-based cycle notation, written independently of the package."""
    seen, parts = set(), []
    for start in range(len(p)):
        if start in seen or p[start] == start:
            continue
        cyc, x = [], start
        while x not in seen:
            seen.add(x)
            cyc.append(str(x + 1))
            x = p[x]
        parts.append("(" + " ".join(cyc) + ")")
    return "".join(parts) or "()"


__all__ = ["permutations", "perm_generators", "cycles_text", "from_cycles"]
