import itertools
import sys

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def blob_plane(size, s, center=None):
    """Unit-height isotropic Gaussian blob of scale ``s``."""
    c = (size - 1) / 2.0 if center is None else center
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    return np.exp(-((xx - c) ** 2 + (yy - c) ** 2) / (2 * s * s))


def blob_dx_closed_form(size, s, sigma, center=None):
    """x-derivative of the blob convolved with a unit-mass Gaussian of scale sigma.

    Two Gaussians convolve into one of variance ``S^2 = s^2 + sigma^2``; the
    blob has height 1, i.e. mass ``2 pi s^2``, so the result is
    ``(s^2 / S^2) exp(-r^2 / (2 S^2))`` and its x-derivative follows.
    """
    c = (size - 1) / 2.0 if center is None else center
    big = s * s + sigma * sigma
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    r2 = (xx - c) ** 2 + (yy - c) ** 2
    return -(xx - c) / big * (s * s / big) * np.exp(-r2 / (2 * big))


def derangements(k):
    return [p for p in itertools.permutations(range(k)) if all(p[i] != i for i in range(k))]


def brute_force_lp(cost):
    """(min, max, argmin permutation) of sum_i C[i, p(i)] over zero-diagonal permutations."""
    cost = np.asarray(cost, dtype=np.float64)
    values = [(sum(cost[i, p[i]] for i in range(len(p))), p) for p in derangements(len(cost))]
    lo = min(values)
    hi = max(values)
    return lo[0], hi[0], lo[1]


def direct_patch_nce(v, v_pos, negatives, tau, weights=None):
    """Textbook softmax form, without log-sum-exp tricks."""
    pos = np.exp(np.dot(v, v_pos) / tau)
    negs = np.exp(np.asarray(negatives) @ v / tau)
    if weights is not None:
        negs = negs * np.asarray(weights)
    return -np.log(pos / (pos + negs.sum()))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.summary_line(number))
