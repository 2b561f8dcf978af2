import os
import subprocess
import sys

import numpy as np
import pytest

from lpsfem import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def test_gram_against_einsum(rng):
    w = rng.random((5, 7))
    A, B = rng.standard_normal((5, 7, 4, 3)), rng.standard_normal((5, 7, 6, 3))
    ref = np.einsum("cq,cqid,cqjd->cij", w, A, B)
    assert np.allclose(kernels.weighted_gram(w, A, B), ref, atol=1e-12)
    assert np.allclose(kernels.weighted_gram_numpy(w, A, B), ref, atol=1e-12)


def test_load_and_piola_match_numpy(rng):
    w = rng.random((4, 6))
    A, f = rng.standard_normal((4, 6, 5, 2)), rng.standard_normal((4, 6, 2))
    assert np.allclose(kernels.weighted_load(w, A, f), kernels.weighted_load_numpy(w, A, f))
    M, Binv = rng.standard_normal((4, 3, 3)), rng.standard_normal((4, 3, 3))
    vhat, jhat = rng.standard_normal((6, 5, 3)), rng.standard_normal((6, 5, 3, 3))
    v, J = kernels.piola(M, vhat, jhat, Binv)
    vb = np.broadcast_to(vhat, (4,) + vhat.shape)
    jb = np.broadcast_to(jhat, (4,) + jhat.shape)
    v0, J0 = kernels.piola_numpy(M, vb, jb, Binv)
    assert np.allclose(v, v0) and np.allclose(J, J0)


def test_numpy_backend_selected_by_environment():
    env = dict(os.environ, LPS_KERNELS="numpy")
    out = subprocess.run([sys.executable, "-c", "from lpsfem import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_backends_give_the_same_system():
    code = ("import numpy as np; from lpsfem import *; from lpsfem.mesh import build_structured_mesh;"
            "from lpsfem.spaces import FiniteElementSpace; from lpsfem.assembly import assemble, LpsConfig;"
            "from lpsfem.problems import rotating_smooth;"
            "m=build_structured_mesh(2,4); s=FiniteElementSpace(m,'div',2);"
            "S=assemble(rotating_smooth('div'),m,s,LpsConfig(r=2));"
            "import sys; np.save(sys.argv[1], S.matrix.toarray())")
    mats = []
    for backend in ("numba", "numpy"):
        path = f"/tmp/lps_backend_{backend}_{os.getpid()}.npy"
        subprocess.run([sys.executable, "-c", code, path], check=True,
                       env=dict(os.environ, LPS_KERNELS=backend))
        mats.append(np.load(path))
        os.remove(path)
    assert np.abs(mats[0] - mats[1]).max() < 1e-12 * np.abs(mats[1]).max()
