import numpy as np
import pytest

from wprox.measures import ParticleCloud, SeededRng
from wprox.objectives import Dataset, MfldSpec
from wprox.transport_flow import (
    CouplingBlock,
    FlowParams,
    flow_forward,
    flow_inverse,
    flow_loss,
    flow_loss_gradient,
    init_near_identity,
    sgd_fit,
)


def _random_flow(d, blocks, hidden, rng, scale=0.4):
    """A flow with genuinely nonlinear blocks (not near-identity)."""
    params = init_near_identity(d, blocks, hidden, 0.1, rng)
    noisy = []
    gen = rng.derive("perturb").generator
    for block in params.blocks:
        fields = {
            name: getattr(block, name) + scale * gen.normal(size=getattr(block, name).shape)
            for name in ("ws1", "bs1", "ws2", "bs2", "wt1", "bt1", "wt2", "bt2")
        }
        noisy.append(CouplingBlock(parity=block.parity, **fields))
    return FlowParams(d=d, blocks=noisy)


def test_identity_initialization_is_exact():
    rng = SeededRng(5)
    params = init_near_identity(4, 3, 8, 0.1, rng)
    pts = rng.derive("pts").standard_normal((10, 4))
    for p in pts:
        image, logdet = flow_forward(params, p)
        assert np.array_equal(image, p)
        assert logdet == 0.0


def test_forward_inverse_round_trip():
    rng = SeededRng(6)
    params = _random_flow(3, 4, 6, rng)
    pts = rng.derive("pts").standard_normal((200, 3))
    for p in pts[:50]:
        image, _ = flow_forward(params, p)
        back = flow_inverse(params, image)
        assert np.max(np.abs(back - p)) < 1e-9


def test_logdet_matches_numeric_jacobian():
    rng = SeededRng(7)
    params = _random_flow(2, 2, 5, rng)
    gen = rng.derive("probe").generator
    h = 1e-6
    for _ in range(10):
        p = gen.normal(size=2)
        _, logdet = flow_forward(params, p)
        jac = np.zeros((2, 2))
        for k in range(2):
            ep = np.zeros(2)
            ep[k] = h
            fp, _ = flow_forward(params, p + ep)
            fm, _ = flow_forward(params, p - ep)
            jac[:, k] = (fp - fm) / (2 * h)
        num = np.log(abs(np.linalg.det(jac)))
        assert logdet == pytest.approx(num, rel=1e-6, abs=1e-8)


def test_parity_split_changes_complementary_coordinates():
    rng = SeededRng(9)
    base = init_near_identity(4, 2, 5, 0.1, rng)
    block0 = _random_flow(4, 2, 5, rng).blocks[0]
    single = FlowParams(d=4, blocks=[block0])
    p = rng.derive("x").standard_normal((4,))
    image, _ = flow_forward(single, p)
    # parity-0 block keeps the first half fixed and transforms the rest
    assert np.array_equal(image[:2], p[:2])
    assert not np.array_equal(image[2:], p[2:])
    assert base.blocks[0].parity == 0 and base.blocks[1].parity == 1


def test_flow_params_validation():
    rng = SeededRng(10)
    good = init_near_identity(2, 2, 4, 0.1, rng)
    with pytest.raises(ValueError):
        FlowParams(d=1, blocks=good.blocks)
    with pytest.raises(ValueError):
        FlowParams(d=2, blocks=[])
    with pytest.raises(ValueError):
        # consecutive blocks must alternate parity
        FlowParams(d=2, blocks=[good.blocks[0], good.blocks[0]])


def _small_instance(seed):
    rng = SeededRng(seed)
    gen = rng.generator
    m, n, d, hidden = 4, 6, 2, 3
    cloud = ParticleCloud(gen.normal(size=(m, d)))
    data = Dataset(gen.normal(size=(n, d)), gen.normal(size=n))
    params = _random_flow(d, 2, hidden, rng, scale=0.3)
    spec = MfldSpec(lam=0.1, tau=0.1)
    return params, cloud, data, spec


def _flatten(params):
    return np.concatenate([getattr(b, f).ravel()
                           for b in params.blocks
                           for f in ("ws1", "bs1", "ws2", "bs2",
                                     "wt1", "bt1", "wt2", "bt2")])


def _unflatten(template, vec):
    blocks = []
    pos = 0
    for b in template.blocks:
        fields = {}
        for f in ("ws1", "bs1", "ws2", "bs2", "wt1", "bt1", "wt2", "bt2"):
            arr = getattr(b, f)
            fields[f] = vec[pos:pos + arr.size].reshape(arr.shape)
            pos += arr.size
        blocks.append(CouplingBlock(parity=b.parity, **fields))
    return FlowParams(d=template.d, blocks=blocks)


def test_gradient_matches_finite_differences():
    params, cloud, data, spec = _small_instance(31)
    xi = 0.2
    grad = flow_loss_gradient(params, cloud, data, spec, xi)
    gvec = np.concatenate([np.concatenate([a.ravel() for a in block])
                           for block in grad.blocks])
    theta = _flatten(params)
    gen = np.random.default_rng(0)
    h = 1e-6
    for idx in gen.choice(theta.size, size=25, replace=False):
        ep = np.zeros_like(theta)
        ep[idx] = h
        lp = flow_loss(_unflatten(params, theta + ep), cloud, data, spec, xi)
        lm = flow_loss(_unflatten(params, theta - ep), cloud, data, spec, xi)
        fd = (lp - lm) / (2 * h)
        assert gvec[idx] == pytest.approx(fd, rel=2e-5, abs=1e-9)


def test_sgd_fit_decreases_loss_and_reports_final():
    params, cloud, data, spec = _small_instance(32)
    history = []
    fitted, final = sgd_fit(params, cloud, data, spec, 0.2, lr=0.01, iters=40,
                            loss_history=history)
    assert len(history) == 41  # initial loss plus one per iteration
    assert final == history[-1]
    assert final < history[0]
    assert final == pytest.approx(flow_loss(fitted, cloud, data, spec, 0.2),
                                  rel=1e-12)


def test_sgd_fit_minibatch_needs_rng_and_is_seeded():
    params, cloud, data, spec = _small_instance(33)
    with pytest.raises(ValueError):
        sgd_fit(params, cloud, data, spec, 0.2, lr=0.01, iters=3, batch_size=2)
    a = sgd_fit(params, cloud, data, spec, 0.2, lr=0.01, iters=5,
                batch_size=3, rng=SeededRng(1))
    b = sgd_fit(params, cloud, data, spec, 0.2, lr=0.01, iters=5,
                batch_size=3, rng=SeededRng(1))
    assert a[1] == b[1]


def test_sgd_fit_validation_and_divergence():
    params, cloud, data, spec = _small_instance(34)
    with pytest.raises(ValueError):
        sgd_fit(params, cloud, data, spec, 0.2, lr=0.0, iters=5)
    with pytest.raises(ValueError):
        sgd_fit(params, cloud, data, spec, 0.2, lr=0.01, iters=0)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(RuntimeError):
            sgd_fit(params, cloud, data, spec, 0.2, lr=1e9, iters=50)


def test_flow_dimension_checks():
    rng = SeededRng(40)
    params = init_near_identity(3, 2, 4, 0.1, rng)
    with pytest.raises(ValueError):
        flow_forward(params, np.zeros(2))
    with pytest.raises(ValueError):
        flow_inverse(params, np.zeros(4))
