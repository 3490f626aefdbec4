import numpy as np
import pytest

from touchless.ctm import bundled_template
from touchless.frameio import EdgeImage


def stamp(template, shift, shape):
    """Edge image with the template points drawn at ``shift``."""
    bits = np.zeros(shape, dtype=bool)
    ox, oy = shift
    bits[template.points[:, 1] + oy, template.points[:, 0] + ox] = True
    return EdgeImage(bits)


@pytest.fixture(scope="session")
def hand_template():
    return bundled_template("hand")


@pytest.fixture(scope="session")
def foot_template():
    return bundled_template("foot")


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
