import numpy as np
import pytest

from pnpuct import MlsSpec, Timing, generate_ls, generate_mls, modify_for_perfect_pacf

# Tabulated sequences used for byte-equality checks (quadratic-residue
# construction, first element zero; MLS in the bit-1 -> +1 convention).
LS7 = np.array([0, 1, 1, -1, 1, -1, -1], dtype=float)
LS11 = np.array([0, 1, -1, 1, 1, 1, -1, -1, -1, 1, -1], dtype=float)
LS31 = np.array([0, 1, 1, -1, 1, 1, -1, 1, 1, 1, 1, -1, -1, -1, 1, -1,
                 1, -1, 1, 1, 1, -1, -1, -1, -1, 1, -1, -1, 1, -1, -1],
                dtype=float)
MLS7 = np.array([1, -1, -1, 1, -1, 1, 1], dtype=float)


def is_cyclic_shift(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b):
        return False
    return any(np.array_equal(np.roll(a, k), b) for k in range(len(a)))


@pytest.fixture(scope="session")
def ls31():
    return generate_ls(31)


@pytest.fixture(scope="session")
def ls31_plus(ls31):
    return modify_for_perfect_pacf(ls31)


@pytest.fixture(scope="session")
def mls7():
    return generate_mls(MlsSpec(order=3))


@pytest.fixture(scope="session")
def timing_1s_40fps():
    return Timing(t_bit=1.0, fps=40.0, n_per=2)
