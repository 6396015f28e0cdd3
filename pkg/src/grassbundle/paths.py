"""Orbits of the similarity action, explicit paths of idempotents and coset representatives."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .bundle import (
    ad_right_inverse,
    check_idempotent,
    idempotency_residual,
    kernel_of,
    range_of,
)
from .errors import NotIdempotent, RankDeficient, RankMismatch
from .grassmann import Subspace, is_complement, make_subspace, same_subspace
from .kernel import ToleranceConfig, adjoint, as_matrix, opnorm, resolve


@dataclass
class Leg:
    kind: str  # "affine" | "rotation"
    t_start: float
    t_end: float
    start_index: int
    end_index: int
    # rotation legs of the adapted-frame scheme: frame, sizes, Q0 and the far endpoint
    meta: dict | None = None

    def to_dict(self):
        return {
            "kind": self.kind,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "start_index": self.start_index,
            "end_index": self.end_index,
        }


@dataclass
class IdempotentPath:
    samples: list = field(default_factory=list)
    legs: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    ranks: list = field(default_factory=list)

    def __len__(self):
        return len(self.samples)


def same_component(Q1, Q2, cfg: ToleranceConfig | None = None) -> bool:
    """Whether two idempotents lie in the same connected component.

    In finite dimension this is equality of ranks: equal ranks give a path
    (see :func:`connect_idempotents`), and the rank is locally constant.
    Over the reals the invertible group has two components, but the
    stabilizer GL_k x GL_{n-k} of a projector of rank k contains elements of
    negative determinant, so each similarity orbit is still connected.
    """
    Q1 = check_idempotent(Q1, cfg)
    Q2 = check_idempotent(Q2, cfg)
    if Q1.shape != Q2.shape:
        return False
    return kernel.rank_of(Q1, cfg) == kernel.rank_of(Q2, cfg)


def _sum_basis(*bases):
    return kernel.column_span(np.hstack(bases))


def _relative_complement(sub, whole):
    """Orthonormal basis of the orthogonal complement of ``sub`` inside ``whole`` (both orthonormal)."""
    M = whole - sub @ (adjoint(sub) @ whole)
    return kernel.column_span(M)


def _rotation_frame(E3, middle, E):
    """Adapted basis for ``K^n = E3 + middle + E`` and the block sizes."""
    return np.hstack([E3, middle, E]), (E3.shape[1], middle.shape[1], E.shape[1])


def rotation_matrix(frame, sizes, t):
    """The block rotation ``[[cos I, 0, sin I], [0, I, 0], [-sin I, 0, cos I]]`` in ``frame`` coordinates.

    ``Phi`` is the basis-matching isometry between the first and last blocks.
    Returns ``(W_t, W_t^{-1})`` as ambient matrices.
    """
    k, m, _ = sizes
    c, s = np.cos(t), np.sin(t)
    n = frame.shape[0]
    blk = np.eye(n)
    blk[:k, :k] = c * np.eye(k)
    blk[:k, k + m:] = s * np.eye(k)
    blk[k + m:, :k] = -s * np.eye(k)
    blk[k + m:, k + m:] = c * np.eye(k)
    frame_inv = kernel.inverse(frame)
    W = frame @ blk @ frame_inv
    W_inv = frame @ blk.T @ frame_inv
    return W, W_inv


def _affine_leg(A, B, steps):
    ts = np.linspace(0.0, 1.0, steps)
    return [(1.0 - t) * A + t * B for t in ts], (0.0, 1.0)


def _rotation_leg(frame, sizes, Q0, steps, reverse=False):
    ts = np.linspace(0.0, np.pi / 2, steps)
    if reverse:
        ts = ts[::-1]
    out = []
    for t in ts:
        W, W_inv = rotation_matrix(frame, sizes, t)
        out.append(W @ Q0 @ W_inv)
    return out, (float(ts[0]), float(ts[-1]))


def _geodesic_leg(B1, B2, steps):
    """Orthogonal projectors along the principal-angle geodesic from span B1 to span B2."""
    Y, cos, Zh = np.linalg.svd(adjoint(B1) @ B2)
    X1 = B1 @ Y
    X2 = B2 @ adjoint(Zh)
    resid = X2 - X1 * cos
    sin = np.linalg.norm(resid, axis=0)
    angles = np.arctan2(sin, np.clip(cos.real, -1.0, 1.0))
    U = np.zeros_like(resid)
    moving = sin > 1e-14
    U[:, moving] = resid[:, moving] / sin[moving]
    out = []
    for t in np.linspace(0.0, 1.0, steps):
        B = X1 * np.cos(t * angles) + U * np.sin(t * angles)
        out.append(B @ adjoint(B))
    return out, (0.0, 1.0)


def _append_leg(path, kind, samples, span, meta=None):
    start = len(path.samples)
    if path.samples:
        samples = samples[1:]
        start -= 1
    path.samples.extend(samples)
    path.legs.append(Leg(kind, span[0], span[1], start, len(path.samples) - 1, meta))


def connect_idempotents(Q1, Q2, steps: int = 64, cfg: ToleranceConfig | None = None) -> IdempotentPath:
    """A sampled continuous path of idempotents of constant rank from ``Q1`` to ``Q2``.

    With ``E_i, F_i`` the ranges and kernels, ``S = E1 + E2`` and ``k`` the
    rank:

    * equal ranges: one affine leg inside the fiber;
    * ``dim S + k <= n``: affine leg to ``Q^{F + E2'}_{E1}`` (``F`` a complement
      of ``S``, ``E2'`` a complement of ``E1`` in ``S``), a rotation leg down to
      ``Q0 = Q^{F' + S}_{E3}`` with ``E3`` inside ``F``, the mirrored rotation up
      to ``Q^{F + E1'}_{E2}``, and a final affine leg;
    * otherwise: affine leg to the orthogonal projector ``P_{E1}``, the
      principal-angle geodesic of orthogonal projectors to ``P_{E2}``, and an
      affine leg to ``Q2``.

    Every sample is checked for idempotency and rank.
    """
    cfg = resolve(cfg)
    if steps < 2:
        raise ValueError("steps must be at least 2")
    Q1 = check_idempotent(Q1, cfg)
    Q2 = check_idempotent(Q2, cfg)
    if Q1.shape != Q2.shape:
        raise RankMismatch("idempotents act on different spaces")
    k = kernel.rank_of(Q1, cfg)
    if kernel.rank_of(Q2, cfg) != k:
        raise RankMismatch("idempotents of different rank lie in different components")
    dtype = np.result_type(Q1, Q2)
    Q1, Q2 = Q1.astype(dtype), Q2.astype(dtype)
    n = Q1.shape[0]
    E1, E2 = range_of(Q1, cfg), range_of(Q2, cfg)

    path = IdempotentPath()
    if same_subspace(E1, E2, cfg):
        _append_leg(path, "affine", *_affine_leg(Q1, Q2, steps))
    else:
        S = _sum_basis(E1.basis, E2.basis)
        d = S.shape[1]
        if d + k <= n:
            F = kernel.orthogonal_complement_basis(S)
            E3, F_check = F[:, :k], F[:, k:]
            legs = []
            for E, other in ((E1.basis, E2.basis), (E2.basis, E1.basis)):
                tilde = _relative_complement(E, S)
                frame, sizes = _rotation_frame(E3, np.hstack([F_check, tilde]), E)
                Qk = frame[:, -k:] @ kernel.inverse(frame)[-k:, :]
                legs.append((frame, sizes, Qk.astype(dtype)))
            Q0 = (E3 @ adjoint(E3)).astype(dtype)
            (fr1, sz1, Qa), (fr2, sz2, Qb) = legs
            _append_leg(path, "affine", *_affine_leg(Q1, Qa, steps))
            meta1 = {"frame": fr1, "sizes": sz1, "Q0": Q0, "target": Qa}
            meta2 = {"frame": fr2, "sizes": sz2, "Q0": Q0, "target": Qb}
            _append_leg(path, "rotation", *_rotation_leg(fr1, sz1, Q0, steps, reverse=True), meta1)
            _append_leg(path, "rotation", *_rotation_leg(fr2, sz2, Q0, steps), meta2)
            _append_leg(path, "affine", *_affine_leg(Qb, Q2, steps))
        else:
            P1, P2 = E1.projector.astype(dtype), E2.projector.astype(dtype)
            _append_leg(path, "affine", *_affine_leg(Q1, P1, steps))
            _append_leg(path, "rotation", *_geodesic_leg(E1.basis.astype(dtype), E2.basis.astype(dtype), steps))
            _append_leg(path, "affine", *_affine_leg(P2, Q2, steps))

    for i, Q in enumerate(path.samples):
        res = idempotency_residual(Q)
        r = kernel.rank_of(Q, cfg)
        path.residuals.append(res)
        path.ranks.append(r)
        if res > cfg.residual_tol * (1.0 + opnorm(Q) ** 2) or r != k:
            raise NotIdempotent(f"path sample {i} left the component (residual {res:.2e}, rank {r})")
    return path


def similarity_witness(P, Q, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Invertible ``W`` with ``W P W^{-1} = Q``.

    Maps adapted bases ``[range P | ker P]`` onto ``[range Q | ker Q]``,
    unless the range of ``Q`` is complementary to the kernel of ``P`` with no
    worse conditioning than those bases, in which case the local right
    inverse of the similarity action is used.
    """
    P = check_idempotent(P, cfg)
    Q = check_idempotent(Q, cfg)
    if P.shape != Q.shape or kernel.rank_of(P, cfg) != kernel.rank_of(Q, cfg):
        raise RankMismatch("idempotents of different rank are not similar")
    EP, FP = range_of(P, cfg), kernel_of(P, cfg)
    EQ, FQ = range_of(Q, cfg), kernel_of(Q, cfg)
    src = np.hstack([EP.basis, FP.basis])
    dst = np.hstack([EQ.basis, FQ.basis])
    adapted = max(kernel.condition_number(src), kernel.condition_number(dst))
    if is_complement(EQ, FP, cfg) and kernel.condition_number(np.hstack([EQ.basis, FP.basis])) <= adapted:
        return ad_right_inverse(EP, FP, Q, cfg)
    return dst @ kernel.inverse(src, cfg)


def gram_schmidt(W, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Gram-Schmidt on the columns of ``W`` (modified, with one reorthogonalization pass)."""
    cfg = resolve(cfg)
    W = as_matrix(W)
    n, m = W.shape
    V = np.zeros_like(W)
    for j in range(m):
        v = W[:, j].copy()
        for _ in range(2):
            for i in range(j):
                v -= np.vdot(V[:, i], v) * V[:, i]
        norm = np.linalg.norm(v)
        if norm <= cfg.rank_rel_tol * max(np.linalg.norm(W[:, j]), 1.0):
            raise RankDeficient(f"column {j} depends on the previous ones")
        V[:, j] = v / norm
    return V


def gram_schmidt_rep(W, k: int, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Orthogonal (unitary) representative of the coset of ``W`` modulo block-diagonal GL_k x GL_{n-k}.

    The first ``k`` columns of the result span the same subspace as the first
    ``k`` columns of ``W``.
    """
    W = as_matrix(W)
    n = W.shape[0]
    if W.shape != (n, n):
        raise ValueError("W must be square")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in 1..{n - 1}")
    if kernel.rank_of(W, cfg) < n:
        raise RankDeficient("W is not invertible")
    return gram_schmidt(W, cfg)


def leading_span(V, k: int) -> Subspace:
    return make_subspace(as_matrix(V)[:, :k])
