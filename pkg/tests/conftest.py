from decimal import Decimal, getcontext

import pytest

getcontext().prec = 40

# (a, b, sigma) -> (ell, s2) as printed to 25 digits
REFERENCE = {
    (1, -2, 10): (Decimal("-0.4887503163943852244580286"), Decimal("0.0112485762885419873084837")),
    (1, -2, 1): (Decimal("0.3941998582469360577816389"), Decimal("0.3841476218435126147382099")),
}


def inverted_lambdas(a, b, sigma):
    """lambda'(0), lambda''(0) implied by the printed (ell, s2), in exact decimal arithmetic."""
    ell, s2 = REFERENCE[(a, b, sigma)]
    half_var = Decimal(sigma) ** 2 / 2
    lam1 = (Decimal(a + b) / 2 - ell) / half_var
    lam2 = -s2 / half_var
    return lam1, lam2


@pytest.fixture
def reference():
    return REFERENCE


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def report(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"acceptance {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
