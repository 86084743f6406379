import numpy as np
import pytest

from wavecrb._kernels import backend_name, eig_crb_batch, pyref

try:
    from wavecrb._kernels import _speig
except ImportError:
    _speig = None

needs_ext = pytest.mark.skipif(_speig is None, reason="compiled kernel not built")


def psd_batch(count, m, seed=0, make_singular=()):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, m, m))
    stack = g @ g.transpose(0, 2, 1) + 0.1 * np.eye(m)
    for idx in make_singular:
        v = rng.standard_normal(m)
        stack[idx] = np.outer(v, v)  # rank one, singular for m > 1
    return stack


class TestReference:
    def test_matches_direct_inversion(self):
        stack = psd_batch(20, 9, seed=1)
        sel = np.array([0, 3, 4])
        vals, rcond = pyref.eig_crb_batch(stack, sel, 1e-12)
        for k in range(20):
            inv = np.linalg.inv(stack[k])
            assert vals[k] == pytest.approx(np.sum(np.diag(inv)[sel]), rel=1e-9)
            w = np.linalg.eigvalsh(stack[k])
            assert rcond[k] == pytest.approx(w[0] / w[-1], rel=1e-8)

    def test_singular_rows_masked(self):
        stack = psd_batch(8, 6, seed=2, make_singular=(2, 5))
        vals, rcond = pyref.eig_crb_batch(stack, np.array([0, 1]), 1e-12)
        assert np.isnan(vals[2]) and np.isnan(vals[5])
        assert rcond[2] < 1e-12 and rcond[5] < 1e-12
        assert np.all(np.isfinite(np.delete(vals, [2, 5])))


@needs_ext
class TestCompiled:
    def test_agrees_with_reference(self):
        stack = psd_batch(50, 12, seed=3, make_singular=(7,))
        sel = np.array([1, 2, 9])
        v_ref, r_ref = pyref.eig_crb_batch(stack, sel, 1e-12)
        v_ext, r_ext = _speig.eig_crb_batch(stack, sel, 1e-12, 2)
        finite = np.isfinite(v_ref)
        assert np.array_equal(finite, np.isfinite(v_ext))
        assert np.allclose(v_ref[finite], v_ext[finite], rtol=1e-10)
        assert np.allclose(r_ref, r_ext, rtol=1e-8, atol=1e-15)

    def test_thread_count_bitwise_invariant(self):
        stack = psd_batch(40, 15, seed=4)
        sel = np.array([0, 5])
        v1, r1 = _speig.eig_crb_batch(stack, sel, 1e-12, 1)
        v4, r4 = _speig.eig_crb_batch(stack, sel, 1e-12, 4)
        assert np.array_equal(v1, v4)
        assert np.array_equal(r1, r4)

    def test_accepts_read_only_input(self):
        stack = psd_batch(4, 5, seed=5)
        stack.setflags(write=False)
        sel = np.arange(2)
        sel.setflags(write=False)
        vals, _ = _speig.eig_crb_batch(stack, sel, 1e-12, 1)
        assert np.all(np.isfinite(vals))


def test_dispatcher_smoke():
    stack = psd_batch(6, 4, seed=6)
    vals, rcond = eig_crb_batch(stack, np.arange(2), 1e-12, threads=2)
    assert vals.shape == (6,) and rcond.shape == (6,)
    assert backend_name() in ("ext", "python")
