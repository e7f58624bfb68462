import math

import pytest

from finsler_product import metrics, product

SIN_RANDERS_B = ["0", "0.3*sin(x1)"]


def catalog_metrics():
    """Every builtin metric family, in a valid configuration."""
    return {
        "euclidean": metrics.euclidean(3),
        "sphere": metrics.round_sphere(),
        "hyperbolic": metrics.riemannian([["1", "0"], ["0", "exp(2*x1)"]], "hyperbolic"),
        "randers": metrics.randers(SIN_RANDERS_B, name="randers_sin"),
        "mroot": metrics.mroot(2, 4),
        "custom": metrics.custom("y1^2 + y1*y2 + y2^2 + 0.1*x1^2*y2^2", 2, "tilted"),
    }


def catalog_functions():
    return {
        "sum": product.sum_function(),
        "pnorm2": product.pnorm(2),
        "pnorm3": product.pnorm(3),
        "eps_sqrt": product.eps_sqrt(0.5),
        "custom": product.custom_function("s + t + sqrt(s*t)"),
    }


@pytest.fixture(scope="session")
def sphere():
    return metrics.round_sphere()


@pytest.fixture(scope="session")
def sin_randers():
    return metrics.randers(SIN_RANDERS_B, name="randers_sin")


@pytest.fixture(scope="session")
def quarter_pi():
    return math.pi / 4


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record and print one pass/fail line per acceptance criterion."""

    def record(criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
