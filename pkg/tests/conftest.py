import time

import pytest

from minimax_boundary.least_favorable import interior_solution, optimal_solution, solve_constants
from minimax_boundary.oracle import DiscretizedProblem, solve_discretized

# (criterion number, passed, detail) appended by the acceptance tests
ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def consts():
    return solve_constants()


@pytest.fixture(scope="session")
def f_star():
    return optimal_solution()


@pytest.fixture(scope="session")
def interior():
    return interior_solution()


# wall-clock seconds of the session oracle solves, keyed by fixture name
ORACLE_SECONDS = {}


def _timed_solve(name, problem):
    start = time.perf_counter()
    res = solve_discretized(problem, tol=1e-8)
    ORACLE_SECONDS[name] = time.perf_counter() - start
    return res


@pytest.fixture(scope="session")
def free_run():
    """Free-slope oracle at N=4000, T=4, run to a tight tolerance."""
    return _timed_solve("free_run", DiscretizedProblem(4.0, 4000))


@pytest.fixture(scope="session")
def zero_slope_run():
    return _timed_solve("zero_slope_run",
                        DiscretizedProblem(4.0, 4000, constrain_initial_slope_zero=True))


@pytest.fixture(scope="session")
def oracle_seconds():
    return ORACLE_SECONDS


@pytest.fixture
def record_criterion():
    def record(number, checks):
        """``checks`` maps a label to ``(passed, detail)``; returns overall pass."""
        ok = all(p for p, _ in checks.values())
        failed = [k for k, (p, _) in checks.items() if not p]
        detail = "; ".join(f"{k}: {d}" for k, (_, d) in checks.items())
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f" (failed: {', '.join(failed)})"
        ACCEPTANCE_RESULTS.append((number, ok, line, detail))
        print(line)
        print("   " + detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(line)
        terminalreporter.write_line("    " + detail)
