import pytest

from effcore.conformance import corpus_programs, load_corpus

# one line per acceptance criterion, printed at the end of the run
CRITERIA = {}


def record_criterion(number, title, ok, detail):
    CRITERIA[number] = (title, ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        title, ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def env(corpus):
    return corpus.env()


@pytest.fixture(scope="session")
def programs(corpus):
    return {name: (m, ty) for name, m, ty in corpus_programs(corpus)}
