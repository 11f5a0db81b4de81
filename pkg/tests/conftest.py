import numpy as np
import pytest

from groupsparse import init_glorot, one_hot


def central_differences(f, x, step=1e-5):
    """Gradient of scalar ``f`` at ``x`` by central differences, one coordinate at a time."""
    x = np.array(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        old = x[i]
        x[i] = old + step
        hi = f(x)
        x[i] = old - step
        lo = f(x)
        x[i] = old
        grad[i] = (hi - lo) / (2 * step)
    return grad


def max_relative_error(a, b, floor=1e-8):
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def random_problem(rng, dims, batch, bias_scale=0.5):
    net = init_glorot(dims, seed=int(rng.integers(2**31)))
    w = net.flat()
    # nonzero biases so bias gradients are exercised
    for _, b_sl in _bias_slices(dims):
        w[b_sl] = rng.uniform(-bias_scale, bias_scale, b_sl.stop - b_sl.start)
    net = net.with_flat(w)
    X = rng.uniform(0, 1, size=(batch, dims[0]))
    D = one_hot(rng.integers(dims[-1], size=batch), dims[-1])
    return net, X, D


def _bias_slices(dims):
    from groupsparse.network import param_slices
    return param_slices(dims)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
