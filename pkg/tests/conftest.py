import numpy as np
import pytest

from tmqmc.core.instance import SpinGlassInstance, ferromagnet, random_instance
from tmqmc.core.transfer import TransferOperator
from tmqmc.storage.artifacts import ArtifactStore

# N=4 fixo: J01 J02 J03 J12 J13 J23
FIXED_COUPLINGS = (1, -1, 1, 1, -1, -1)


@pytest.fixture
def pair() -> SpinGlassInstance:
    """N=2, J12=+1"""
    return SpinGlassInstance(n_spins=2, couplings=(1,))


@pytest.fixture
def pair_op(pair) -> TransferOperator:
    return TransferOperator(instance=pair, omega=1.0)


@pytest.fixture
def fixed4() -> SpinGlassInstance:
    return SpinGlassInstance(n_spins=4, couplings=FIXED_COUPLINGS)


@pytest.fixture
def ferro4() -> SpinGlassInstance:
    return ferromagnet(4)


@pytest.fixture
def glass8() -> SpinGlassInstance:
    return random_instance(8, 11)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def store(tmp_path) -> ArtifactStore:
    return ArtifactStore(tmp_path / "out")


def brute_energies(inst: SpinGlassInstance) -> np.ndarray:
    """Energias por laço termo a termo, independente dos kernels"""
    n = inst.n_spins
    out = np.empty(1 << n, dtype=np.int64)
    for bits in range(1 << n):
        s = [1 if (bits >> i) & 1 else -1 for i in range(n)]
        e = 0
        k = 0
        for i in range(n):
            for j in range(i + 1, n):
                e -= inst.couplings[k] * s[i] * s[j]
                k += 1
        out[bits] = e
    return out
