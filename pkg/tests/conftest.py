from __future__ import annotations

import numpy as np
import pytest

from quadwbc.model import LEGS, default_model, foot_frame
from quadwbc.rigid_body import GeneralizedState
from quadwbc.scenarios import FEET, STAND_HEIGHT, solve_stance
from quadwbc.spatial import quat_normalize

FOOT_FRAMES = tuple(foot_frame(l) for l in LEGS)
TWO_PRONGS = ("PRONG_LEFT", "PRONG_RIGHT")

# contact sets spanning ranks 3..12, including the rank-11 two-prong layout
CONTACT_SETS = [
    ("LF_FOOT",),
    ("LF_FOOT", "RH_FOOT"),
    ("RF_FOOT", "LH_FOOT", "RH_FOOT"),
    FOOT_FRAMES,
    ("PRONG_LEFT", "LH_FOOT", "RH_FOOT"),
    ("PRONG_LEFT", "PRONG_RIGHT", "LH_FOOT", "RH_FOOT"),
    ("PRONG_LEFT", "PRONG_RIGHT"),
]


@pytest.fixture(scope="session")
def model():
    return default_model()


def random_state(model, rng: np.random.Generator, vel_scale: float = 1.0) -> GeneralizedState:
    q = quat_normalize(rng.normal(size=4))
    lo = np.array([j.lower for j in model.joints])
    hi = np.array([j.upper for j in model.joints])
    qj = rng.uniform(np.maximum(lo, -2.0), np.minimum(hi, 2.0))
    return GeneralizedState(rng.normal(scale=0.3, size=3), q, qj, vel_scale * rng.normal(size=3),
                            vel_scale * rng.normal(size=3), vel_scale * rng.normal(size=model.n))


def stance_state(model, height: float = STAND_HEIGHT) -> GeneralizedState:
    return solve_stance(model, np.array([0.0, 0.0, height]), np.eye(3), FEET)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance results: (criterion number, title, passed, detail), printed in the terminal summary
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


def record_criterion(number: int, title: str, passed: bool, detail: str) -> bool:
    ACCEPTANCE.append((number, title, bool(passed), detail))
    print(f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})")
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
