"""Both kernel backends must agree with each other and with plain formulas."""

import numpy as np
import pytest

from lwr import _pykernels
from lwr.kernels import available_backends

ARCHS = [
    [(2, 1, 0)],
    [(2, 2, 1), (2, 1, 0)],
    [(3, 6, 2), (6, 1, 0)],
    [(3, 32, 1), (32, 64, 1), (64, 1, 0)],
    [(8, 64, 2), (64, 32, 2), (32, 1, 0)],
]


def _params(arch, g):
    Ws = [np.ascontiguousarray(g.normal(size=(o, i))) for i, o, _ in arch]
    bs = [g.normal(size=o) for _, o, _ in arch]
    return Ws, bs, tuple(a for _, _, a in arch)


@pytest.mark.parametrize("arch", ARCHS)
def test_forward_backward_match_reference(backend, arch, np_rng):
    Ws, bs, acts = _params(arch, np_rng)
    X = np_rng.normal(size=(17, arch[0][0]))
    up = np_rng.normal(size=17)
    out, pres, posts = backend.mlp_forward(Ws, bs, acts, X)
    ref_out, ref_pres, ref_posts = _pykernels.mlp_forward(Ws, bs, acts, X)
    np.testing.assert_allclose(out, ref_out, rtol=1e-12, atol=1e-12)
    dW, db = backend.mlp_backward(Ws, acts, pres, posts, up)
    rW, rb = _pykernels.mlp_backward(Ws, acts, ref_pres, ref_posts, up)
    for a, b in zip(dW + db, rW + rb):
        np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-12)


def test_forward_empty_batch(backend):
    Ws, bs, acts = _params(ARCHS[1], np.random.default_rng(0))
    out, _, posts = backend.mlp_forward(Ws, bs, acts, np.empty((0, 2)))
    assert out.shape == (0,)
    dW, db = backend.mlp_backward(Ws, acts, _, posts, np.empty(0))
    assert all(np.all(w == 0) for w in dW)


@pytest.mark.parametrize("kind", [0, 1, 2])
def test_prediction_loss_matches_reference(backend, kind, np_rng):
    h = np_rng.normal(size=50)
    y = np.sign(np_rng.normal(size=50)) if kind == 0 else np_rng.normal(size=50)
    l, dl = backend.prediction_loss(kind, h, y, 0.1)
    rl, rdl = _pykernels.prediction_loss(kind, h, y, 0.1)
    np.testing.assert_array_equal(l, rl)
    np.testing.assert_array_equal(dl, rdl)


def test_meta_loss_matches_reference_including_ties(backend, np_rng):
    l = np.abs(np_rng.normal(size=200))
    r = np_rng.normal(size=200)
    # exact ties: accept == reject at r = (c - l) / (1 + c) with c = 2 and l = 0.5
    l[:3] = [0.5, 0.0, 0.0]
    r[:3] = [0.5, 2.0 / 3.0, -0.0]
    out = backend.meta_loss(l, r, 2.0)
    ref = _pykernels.meta_loss(l, r, 2.0)
    for a, b in zip(out, ref):
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("t", [1, 2, 10])
def test_adam_matches_reference(backend, t, np_rng):
    p, g = np_rng.normal(size=(3, 4)), np_rng.normal(size=(3, 4))
    m, v = np_rng.normal(size=(3, 4)), np.abs(np_rng.normal(size=(3, 4)))
    p2, m2, v2 = p.copy(), m.copy(), v.copy()
    backend.adam_step(p, g, m, v, 0.01, 0.9, 0.999, 1e-8, t)
    _pykernels.adam_step(p2, g, m2, v2, 0.01, 0.9, 0.999, 1e-8, t)
    np.testing.assert_allclose(p, p2, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(m, m2, rtol=1e-13)
    np.testing.assert_allclose(v, v2, rtol=1e-13)


@pytest.mark.parametrize("momentum", [0.0, 0.9])
def test_sgd_matches_reference(backend, momentum, np_rng):
    p, g, buf = np_rng.normal(size=5), np_rng.normal(size=5), np_rng.normal(size=5)
    p2, buf2 = p.copy(), buf.copy()
    backend.sgd_step(p, g, buf, 0.1, momentum)
    _pykernels.sgd_step(p2, g, buf2, 0.1, momentum)
    np.testing.assert_allclose(p, p2, rtol=1e-14)


def test_auc_matches_reference(backend, np_rng):
    for _ in range(20):
        s = np.round(np_rng.normal(size=30), 1)
        pos = np_rng.random(30) < 0.5
        pos[:2] = [True, False]
        assert backend.auc_midrank(s, pos) == _pykernels.auc_midrank(s, pos)


def test_compiled_backend_available_when_built():
    # informational: the NumPy backend is always there
    assert "python" in available_backends()
