import numpy as np
import pytest

import fifdim as fd
from fifdim import ModelConfig


@pytest.fixture(scope="session")
def example61():
    return fd.validate_model(fd.builtin_model("example61"))


def make_weierstrass(lam, n=3, phi="cos(2*pi*x)"):
    return fd.validate_model(fd.builtin_model("weierstrass", {"lambda": lam, "n": n, "phi": phi}))


@pytest.fixture(scope="session")
def weier06():
    return make_weierstrass(0.6)


def make_line_model():
    """f(x) = x as an affine model with zero scaling."""
    cfg = fd.builtin_model("affine", {"n": 2, "y": [0.0, 0.5, 1.0], "d": [0.0, 0.0]})
    return fd.validate_model(cfg)


def make_constant_model(c=1.5):
    """f identically c: zero scaling, constant offsets."""
    cfg = ModelConfig(
        n=2,
        interval=(0.0, 1.0),
        y=(c, c, c),
        scaling=("0", "0"),
        offsets=(repr(c), repr(c)),
        name="constant",
    )
    return fd.validate_model(cfg)


def make_random_model(rng):
    """Random valid model: sinusoid/affine scaling with certified max < 1,
    offsets built to satisfy the endpoint conditions exactly."""
    n = int(rng.integers(2, 4))
    y = rng.uniform(-1.0, 1.0, n + 1)
    scaling_src = []
    for _ in range(n):
        if rng.random() < 0.6:
            d = float(rng.uniform(-0.5, 0.5))
            a = float(rng.uniform(0.05, 0.9 - abs(d)))
            m = int(rng.integers(1, 4))
            ph = float(rng.uniform(0.0, 6.28))
            scaling_src.append(f"{d!r} + {a!r}*sin({m}*2*pi*x + {ph!r})")
        else:
            v0 = float(rng.uniform(-0.9, 0.9))
            v1 = float(rng.uniform(-0.9, 0.9))
            scaling_src.append(f"{v0!r} + {v1 - v0!r}*x")
    offsets_src = []
    for i in range(1, n + 1):
        amp = float(rng.uniform(0.2, 1.5))
        m = int(rng.integers(1, 4))
        ph = float(rng.uniform(0.0, 6.28))
        base_src = f"{amp!r}*cos({m}*2*pi*x + {ph!r})"
        base = fd.parse_expr(base_src)
        s = fd.parse_expr(scaling_src[i - 1])
        c0 = float(y[i - 1]) - s(0.0) * float(y[0]) - base(0.0)
        c1 = float(y[i]) - s(1.0) * float(y[n]) - base(1.0)
        offsets_src.append(f"{base_src} + {c0!r} + {c1 - c0!r}*x")
    cfg = ModelConfig(
        n=n,
        interval=(0.0, 1.0),
        y=tuple(float(v) for v in y),
        scaling=tuple(scaling_src),
        offsets=tuple(offsets_src),
        name="random",
    )
    return fd.validate_model(cfg)


@pytest.fixture(scope="session")
def random_models():
    rng = np.random.default_rng(20240817)
    return [make_random_model(rng) for _ in range(20)]
