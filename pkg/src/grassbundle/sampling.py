"""Random instances: independent standard Gaussian entries, rejected on conditioning.

Complex instances draw real and imaginary parts independently.
"""

from __future__ import annotations

import numpy as np

from .bundle import oblique_projector
from .errors import GrassbundleError
from .grassmann import Subspace, is_complement, make_subspace
from .kernel import ToleranceConfig
from .tangent import TangentVector

MAX_TRIES = 100


def gaussian(rng: np.random.Generator, rows: int, cols: int, field: str = "R") -> np.ndarray:
    if field == "C":
        return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    if field != "R":
        raise ValueError(f"unknown field {field!r}")
    return rng.standard_normal((rows, cols))


def _retry(make):
    for _ in range(MAX_TRIES):
        try:
            result = make()
        except GrassbundleError:
            continue
        if result is not None:
            return result
    raise RuntimeError("could not draw a well conditioned instance")


def random_subspace(rng, n: int, k: int, field: str = "R", cfg: ToleranceConfig | None = None) -> Subspace:
    return _retry(lambda: make_subspace(gaussian(rng, n, k, field), cfg))


def random_complement(rng, E: Subspace, field: str | None = None, cfg: ToleranceConfig | None = None) -> Subspace:
    """A random subspace complementary to ``E`` with ``cond([B_E | B_F]) <= cond_cap``."""
    field = field or E.field

    def draw():
        F = make_subspace(gaussian(rng, E.ambient, E.ambient - E.dim, field), cfg)
        return F if is_complement(E, F, cfg) else None

    return _retry(draw)


def random_pair(rng, n: int, k: int, field: str = "R", cfg: ToleranceConfig | None = None):
    """A complementary pair ``(E, F)`` with ``dim E = k``."""
    E = random_subspace(rng, n, k, field, cfg)
    return E, random_complement(rng, E, field, cfg)


def random_transversal(rng, F: Subspace, field: str | None = None, cfg: ToleranceConfig | None = None) -> Subspace:
    """A random subspace complementary to ``F``."""
    field = field or F.field

    def draw():
        E = make_subspace(gaussian(rng, F.ambient, F.ambient - F.dim, field), cfg)
        return E if is_complement(E, F, cfg) else None

    return _retry(draw)


def random_idempotent(rng, n: int, k: int, field: str = "R", cfg: ToleranceConfig | None = None) -> np.ndarray:
    E, F = random_pair(rng, n, k, field, cfg)
    return oblique_projector(E, F, cfg)


def random_in_fiber(rng, E: Subspace, field: str | None = None, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """A random idempotent with range ``E``."""
    return oblique_projector(E, random_complement(rng, E, field, cfg), cfg)


def random_nilpotent(rng, F: Subspace, field: str | None = None, scale: float = 1.0) -> np.ndarray:
    """A random element of L^F(K^n, F), i.e. ``P_F G (I - P_F)``."""
    field = field or F.field
    n = F.ambient
    P = F.projector
    G = gaussian(rng, n, n, field)
    return scale * (P @ G @ (np.eye(n) - P))


def random_tangent(rng, n: int, k: int, cfg: ToleranceConfig | None = None) -> TangentVector:
    E = random_subspace(rng, n, k, "R", cfg)
    return TangentVector(E, rng.standard_normal((n - k, k)))


def random_rank(rng, n: int) -> int:
    return int(rng.integers(1, n))


def parse_dims(text: str) -> list[int]:
    """``"2..6"`` -> ``[2, 3, 4, 5, 6]``; ``"3,5"`` -> ``[3, 5]``."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        dims = list(range(int(lo), int(hi) + 1))
    else:
        dims = [int(x) for x in text.split(",") if x.strip()]
    if not dims or min(dims) < 2:
        raise ValueError(f"dimensions must be at least 2, got {text!r}")
    return dims
