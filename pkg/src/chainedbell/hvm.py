"""Hidden-variable models for the chained layout: local/non-local structure,
Leggett-type marginal rules, locality measurement, and the non-signaling
locality bound.

Vector convention.  The squared-overlap ("Malus-law") marginal rule for a
direction measurement on a qubit is implemented in Bloch coordinates,
P(outcome 0 | measurement, u) = (1 + a.u) / 2, where ``a`` is the Bloch
vector of the measurement's outcome-0 projector and ``u`` the hidden unit
vector.  Under this reading, hidden vectors orthogonal to the measurement
plane give uniform outcomes and therefore carry no usable local
information; a literal squared 3-vector dot product would instead make
orthogonal vectors deterministic, which is not the intended physics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .chained import evaluate_chain, quantum_chain_closed_form
from .distributions import (
    NORM_TOL,
    ConditionalDistribution,
    Distribution,
    assert_nonsignaling,
    stat_distance,
)
from .quantum import MeasurementSetup, mix_with_noise, qm_chained_distribution

__all__ = [
    "VECTOR_TOL",
    "LOCAL_PART_TOL",
    "MARGINAL_INDEPENDENCE_TOL",
    "HiddenVariableModel",
    "LocalityMeasurement",
    "LocalityBoundReport",
    "LocalityReport",
    "leggett_marginal",
    "leggett_model",
    "local_deterministic_model",
    "nonlocal_qm_model",
    "table_model",
    "model_from_responses",
    "induced_distribution",
    "hidden_joint_form",
    "xu_conditional",
    "locality_measure",
    "locality_bound_check",
    "falsify_leggett",
    "make_locality_report",
    "inplane_grid",
    "orthogonal_grid",
    "model_from_dict",
    "model_from_json_file",
]

VECTOR_TOL = 1e-12
# Constructed models must have well-defined local parts: the shared-variable
# average of each side's response may depend only on its own setting and
# local variable.
LOCAL_PART_TOL = 1e-9
# The hidden-variable marginal must not depend on the chosen setting
# (settings are drawn independently of the hidden variables).
MARGINAL_INDEPENDENCE_TOL = 1e-6


class HiddenVariableModel:
    """Finite model of two-party outcomes driven by hidden variables.

    ``u`` and ``v`` index the per-side local variables (finite alphabets
    with joint weights ``p_uv``); any additional shared variable has
    already been averaged into the response ``kernels``: entry
    ``kernels[a, b, u, v]`` is the joint outcome table P(x, y | a, b, u, v).

    A model may instead be sampler-only (``kernels is None``): it then
    supports Monte Carlo evaluation but not exact tables.
    """

    __slots__ = ("n_settings", "p_uv", "kernels", "sampler", "u_labels", "v_labels", "kind")

    def __init__(
        self,
        n_settings: int,
        *,
        p_uv: np.ndarray | None = None,
        kernels: np.ndarray | None = None,
        sampler: Callable | None = None,
        n_u: int | None = None,
        n_v: int | None = None,
        u_labels: Sequence | None = None,
        v_labels: Sequence | None = None,
        kind: str = "custom",
    ):
        n_settings = int(n_settings)
        if n_settings < 2:
            raise ValueError("chain parameter must be at least 2")
        if kernels is None and sampler is None:
            raise ValueError("model needs response kernels or a sampler")
        if kernels is not None:
            kernels = np.asarray(kernels, dtype=float)
            if kernels.ndim != 6 or kernels.shape[:2] != (n_settings, n_settings) \
                    or kernels.shape[4:] != (2, 2):
                raise ValueError(
                    f"kernels must have shape (N, N, n_u, n_v, 2, 2), got {kernels.shape}"
                )
            if kernels.min() < -NORM_TOL:
                raise ValueError("kernel entries must be non-negative")
            kernels = np.clip(kernels, 0.0, None)
            sums = kernels.sum(axis=(4, 5))
            if np.abs(sums - 1.0).max() > NORM_TOL:
                raise ValueError("each response kernel must be normalized")
            kernels = kernels / sums[..., None, None]
            if p_uv is None:
                raise ValueError("kernel models need hidden-variable weights p_uv")
            p_uv = np.asarray(p_uv, dtype=float)
            if p_uv.shape != kernels.shape[2:4]:
                raise ValueError("p_uv shape must match the kernel hidden alphabets")
            if p_uv.min() < -NORM_TOL:
                raise ValueError("hidden-variable weights must be non-negative")
            p_uv = np.clip(p_uv, 0.0, None)
            total = float(p_uv.sum())
            if abs(total - 1.0) > NORM_TOL:
                raise ValueError(f"hidden-variable weights must sum to 1, got {total}")
            p_uv = p_uv / total
            self._check_local_parts(kernels)
            kernels.setflags(write=False)
            p_uv.setflags(write=False)
            n_u, n_v = kernels.shape[2], kernels.shape[3]
        else:
            if n_u is None or n_v is None:
                raise ValueError("sampler-only models must declare n_u and n_v")
            n_u, n_v = int(n_u), int(n_v)
        object.__setattr__(self, "n_settings", n_settings)
        object.__setattr__(self, "p_uv", p_uv)
        object.__setattr__(self, "kernels", kernels)
        object.__setattr__(self, "sampler", sampler)
        object.__setattr__(self, "u_labels", tuple(u_labels) if u_labels is not None else tuple(range(n_u)))
        object.__setattr__(self, "v_labels", tuple(v_labels) if v_labels is not None else tuple(range(n_v)))
        object.__setattr__(self, "kind", str(kind))
        if len(self.u_labels) != n_u or len(self.v_labels) != n_v:
            raise ValueError("label lists must match the hidden alphabet sizes")

    def __setattr__(self, name, value):
        raise AttributeError("HiddenVariableModel is immutable")

    @staticmethod
    def _check_local_parts(kernels: np.ndarray) -> None:
        xm = kernels.sum(axis=5)  # (N, N, nu, nv, x)
        dev_x = float((0.5 * np.abs(xm - xm[:, :1, :, :1, :]).sum(axis=-1)).max())
        ym = kernels.sum(axis=4)  # (N, N, nu, nv, y)
        dev_y = float((0.5 * np.abs(ym - ym[:1, :, :1, :, :]).sum(axis=-1)).max())
        if max(dev_x, dev_y) > LOCAL_PART_TOL:
            raise ValueError(
                "averaged responses leak across sides: one side's outcome "
                f"marginal depends on the other side's context (deviation "
                f"{max(dev_x, dev_y)})"
            )

    @property
    def n_u(self) -> int:
        return len(self.u_labels)

    @property
    def n_v(self) -> int:
        return len(self.v_labels)

    @property
    def has_exact_support(self) -> bool:
        return self.kernels is not None

    def induced_table(self) -> ConditionalDistribution:
        """Exact four-party table P(x, y, u, v | a, b); parties 2 and 3
        carry the hidden indices as outputs and have no inputs."""
        if not self.has_exact_support:
            raise ValueError("exact evaluation requires finite hidden support")
        n, nu, nv = self.n_settings, self.n_u, self.n_v
        t = np.einsum("uv,abuvxy->abxyuv", self.p_uv, self.kernels)
        table = t.reshape(n, n, 1, 1, 2, 2, nu, nv)
        return ConditionalDistribution((n, n, 1, 1), (2, 2, nu, nv), table)

    def sample_outcomes(self, a: int, b: int, size: int, rng: np.random.Generator):
        """Draw ``size`` outcome tuples (x, y, u, v) for one setting pair."""
        if self.has_exact_support:
            joint = self.p_uv[:, :, None, None] * self.kernels[a, b]
            # joint indexed (u, v, x, y); reorder to (x, y, u, v)
            joint = np.moveaxis(joint, (0, 1), (2, 3))
            flat = joint.reshape(-1)
            cdf = np.cumsum(flat)
            r = rng.random(size)
            idx = np.minimum(np.searchsorted(cdf, r, side="right"), flat.size - 1)
            x, y, u, v = np.unravel_index(idx, joint.shape)
            return x, y, u, v
        xs = np.empty(size, dtype=np.int64)
        ys = np.empty(size, dtype=np.int64)
        us = np.empty(size, dtype=np.int64)
        vs = np.empty(size, dtype=np.int64)
        for i in range(size):
            xs[i], ys[i], us[i], vs[i] = self.sampler(a, b, rng)
        return xs, ys, us, vs

    def __repr__(self) -> str:
        return (
            f"HiddenVariableModel(kind={self.kind!r}, N={self.n_settings}, "
            f"n_u={self.n_u}, n_v={self.n_v}, exact={self.has_exact_support})"
        )


def _unit_vectors(vectors, name: str) -> np.ndarray:
    arr = np.asarray(vectors, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3 or arr.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty (k, 3) array of vectors")
    norms = np.sqrt((arr * arr).sum(axis=1))
    if np.abs(norms - 1.0).max() > VECTOR_TOL:
        raise ValueError(f"{name} must contain unit vectors")
    return arr


def _weights(weights, k: int, name: str) -> np.ndarray:
    if weights is None:
        return np.full(k, 1.0 / k)
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise ValueError(f"{name} must have length {k}")
    if w.min() < -NORM_TOL:
        raise ValueError(f"{name} must be non-negative")
    w = np.clip(w, 0.0, None)
    total = float(w.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"{name} must sum to 1, got {total}")
    return w / total


def leggett_marginal(measurement, u_vec) -> Distribution:
    """Squared-overlap outcome marginal for one side.

    P(0) = (1 + a.u)/2 in Bloch coordinates, where ``a`` is the
    measurement's outcome-0 Bloch direction (see the module docstring for
    why the rule is expressed this way).
    """
    u = np.asarray(u_vec, dtype=float)
    if u.shape != (3,):
        raise ValueError("hidden vector must have 3 components")
    norm = math.sqrt(float(u @ u))
    if abs(norm - 1.0) > VECTOR_TOL:
        raise ValueError(f"hidden vector must be unit length, |u| = {norm}")
    a = np.asarray(measurement.bloch_vector())
    p0 = 0.5 * (1.0 + float(a @ u))
    p0 = min(max(p0, 0.0), 1.0)
    return Distribution([p0, 1.0 - p0])


def inplane_grid(n_points: int = 360) -> np.ndarray:
    """Unit vectors evenly spaced in the measurement (x-z) plane."""
    if n_points < 1:
        raise ValueError("need at least one grid point")
    phi = 2.0 * math.pi * np.arange(n_points) / n_points
    return np.stack([np.sin(phi), np.zeros(n_points), np.cos(phi)], axis=1)


def orthogonal_grid() -> np.ndarray:
    """The two unit vectors orthogonal to the measurement plane."""
    return np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])


def leggett_model(
    n: int,
    u_vectors,
    v_vectors=None,
    uv_weights=None,
    completion: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
) -> HiddenVariableModel:
    """Leggett-type model bound to the chained layout.

    Each side's outcome marginal given its hidden vector follows the
    squared-overlap rule at that side's chained angles.  ``completion``
    supplies the joint outcome table for a pair of fixed marginals and
    exists only to make the model executable shot by shot; the default is
    the product of the two marginals, which deliberately carries no
    correlations (it does not reproduce quantum statistics).
    """
    setup = MeasurementSetup.chained(n)
    uvecs = _unit_vectors(u_vectors, "u_vectors")
    vvecs = uvecs if v_vectors is None else _unit_vectors(v_vectors, "v_vectors")
    nu, nv = len(uvecs), len(vvecs)
    if uv_weights is None:
        p_uv = np.full((nu, nv), 1.0 / (nu * nv))
    else:
        p_uv = np.asarray(uv_weights, dtype=float)
        if p_uv.shape != (nu, nv):
            raise ValueError("uv_weights shape must match the vector grids")
    bloch_a = np.array([m.bloch_vector() for m in setup.alice])  # (N, 3)
    bloch_b = np.array([m.bloch_vector() for m in setup.bob])
    pa0 = np.clip(0.5 * (1.0 + bloch_a @ uvecs.T), 0.0, 1.0)  # (N, nu)
    pb0 = np.clip(0.5 * (1.0 + bloch_b @ vvecs.T), 0.0, 1.0)  # (N, nv)
    ma = np.stack([pa0, 1.0 - pa0], axis=-1)  # (N, nu, 2)
    mb = np.stack([pb0, 1.0 - pb0], axis=-1)
    if completion is None:
        kernels = np.einsum("aux,bvy->abuvxy", ma, mb)
    else:
        kernels = np.empty((n, n, nu, nv, 2, 2))
        for a in range(n):
            for b in range(n):
                for u in range(nu):
                    for v in range(nv):
                        kernels[a, b, u, v] = completion(ma[a, u], mb[b, v])
    labels_u = [tuple(round(c, 12) for c in vec) for vec in uvecs]
    labels_v = [tuple(round(c, 12) for c in vec) for vec in vvecs]
    return HiddenVariableModel(
        n, p_uv=p_uv, kernels=kernels, u_labels=labels_u, v_labels=labels_v,
        kind="leggett",
    )


def local_deterministic_model(
    n: int, alice_tables, bob_tables, uv_weights=None
) -> HiddenVariableModel:
    """Mixture of deterministic local strategies.

    Hidden index u picks Alice's lookup table and v picks Bob's;
    ``uv_weights`` (default uniform product) may correlate the two.
    """
    at = np.asarray(alice_tables, dtype=np.int64)
    bt = np.asarray(bob_tables, dtype=np.int64)
    if at.ndim != 2 or at.shape[1] != n or bt.ndim != 2 or bt.shape[1] != n:
        raise ValueError("strategy tables must have shape (k, N)")
    if not (np.isin(at, (0, 1)).all() and np.isin(bt, (0, 1)).all()):
        raise ValueError("strategy outputs must be bits")
    nu, nv = at.shape[0], bt.shape[0]
    if uv_weights is None:
        p_uv = np.full((nu, nv), 1.0 / (nu * nv))
    else:
        p_uv = np.asarray(uv_weights, dtype=float)
        if p_uv.shape != (nu, nv):
            raise ValueError("uv_weights shape must match the strategy counts")
    eye = np.eye(2)
    ma = eye[at].transpose(1, 0, 2)  # (N, nu, 2): one-hot responses
    mb = eye[bt].transpose(1, 0, 2)
    kernels = np.einsum("aux,bvy->abuvxy", ma, mb)
    return HiddenVariableModel(n, p_uv=p_uv, kernels=kernels, kind="local_deterministic")


def nonlocal_qm_model(
    n: int,
    visibility: float = 1.0,
    n_u: int = 1,
    n_v: int = 1,
    u_weights=None,
    v_weights=None,
) -> HiddenVariableModel:
    """Entirely non-local model reproducing the (optionally noisy) quantum
    table: the shared variable carries all outcome correlations, and any
    declared local variables are dummies the responses ignore."""
    base = qm_chained_distribution(n)
    if visibility < 1.0:
        base = mix_with_noise(base, visibility)
    wu = _weights(u_weights, n_u, "u_weights")
    wv = _weights(v_weights, n_v, "v_weights")
    p_uv = np.outer(wu, wv)
    kernels = np.broadcast_to(
        base.table[:, :, None, None, :, :], (n, n, n_u, n_v, 2, 2)
    ).copy()
    return HiddenVariableModel(n, p_uv=p_uv, kernels=kernels, kind="nonlocal_qm")


def table_model(dist: ConditionalDistribution) -> HiddenVariableModel:
    """Wrap an explicit two-party binary table as an entirely non-local
    model (trivial local variables).  Rejects signaling tables, whose
    outcome marginals cannot come from a well-defined local part."""
    if dist.n_parties != 2 or dist.output_sizes != (2, 2):
        raise ValueError("expected a two-party binary table")
    n = dist.input_sizes[0]
    if dist.input_sizes != (n, n) or n < 2:
        raise ValueError("expected N >= 2 settings on both sides")
    kernels = dist.table[:, :, None, None, :, :]
    return HiddenVariableModel(
        n, p_uv=np.ones((1, 1)), kernels=kernels, kind="custom_table"
    )


def model_from_responses(
    n: int,
    support: Iterable[tuple],
    response_x: Callable,
    response_y: Callable,
) -> HiddenVariableModel:
    """Build a model from deterministic response functions and a finite
    joint weight list over the hidden variables.

    ``support`` yields ``(u_label, v_label, w, weight)`` entries; the
    responses map (a, b, u_label, v_label, w) to an output bit.  The
    shared variable w is averaged out into response kernels, and the
    construction then validates that each side's averaged response depends
    only on its own setting and local variable.
    """
    entries = list(support)
    if not entries:
        raise ValueError("support must be non-empty")
    u_labels: list = []
    v_labels: list = []
    for u, v, _, _ in entries:
        if u not in u_labels:
            u_labels.append(u)
        if v not in v_labels:
            v_labels.append(v)
    nu, nv = len(u_labels), len(v_labels)
    u_index = {u: i for i, u in enumerate(u_labels)}
    v_index = {v: i for i, v in enumerate(v_labels)}
    p_uv = np.zeros((nu, nv))
    raw = np.zeros((n, n, nu, nv, 2, 2))
    for u, v, w, weight in entries:
        weight = float(weight)
        if weight < 0.0:
            raise ValueError("support weights must be non-negative")
        ui, vi = u_index[u], v_index[v]
        p_uv[ui, vi] += weight
        for a in range(n):
            for b in range(n):
                x = int(response_x(a, b, u, v, w))
                y = int(response_y(a, b, u, v, w))
                if x not in (0, 1) or y not in (0, 1):
                    raise ValueError("responses must return bits")
                raw[a, b, ui, vi, x, y] += weight
    total = float(p_uv.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(f"support weights must sum to 1, got {total}")
    occupied = p_uv > 0.0
    kernels = np.empty_like(raw)
    kernels[...] = 0.25  # unreachable (u, v) contexts get a flat placeholder
    kernels[:, :, occupied, :, :] = (
        raw[:, :, occupied, :, :] / p_uv[occupied][None, None, :, None, None]
    )
    return HiddenVariableModel(
        n, p_uv=p_uv, kernels=kernels, u_labels=u_labels, v_labels=v_labels,
        kind="responses",
    )


def induced_distribution(
    model: HiddenVariableModel,
    mode: str = "exact",
    shots: int | None = None,
    seed: int | None = None,
) -> ConditionalDistribution:
    """Four-party table P(x, y, u, v | a, b) of a model.

    ``mode="exact"`` computes the table from the hidden-variable weights
    and response kernels; ``mode="sampled"`` estimates it with ``shots``
    Monte Carlo draws per setting pair (seed required, reproducible).
    """
    if mode == "exact":
        return model.induced_table()
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if shots is None or shots < 1 or seed is None:
        raise ValueError("sampled mode needs shots >= 1 and a seed")
    n, nu, nv = model.n_settings, model.n_u, model.n_v
    rng = np.random.default_rng(seed)
    table = np.zeros((n, n, 2, 2, nu, nv))
    for a in range(n):
        for b in range(n):
            x, y, u, v = model.sample_outcomes(a, b, shots, rng)
            np.add.at(table[a, b], (x, y, u, v), 1.0)
    table /= float(shots)
    return ConditionalDistribution(
        (n, n, 1, 1), (2, 2, nu, nv), table.reshape(n, n, 1, 1, 2, 2, nu, nv)
    )


def hidden_joint_form(p4: ConditionalDistribution) -> ConditionalDistribution:
    """Repack a four-party induced table into three parties by merging the
    two hidden outputs into one joint alphabet (z = u * n_v + v); the
    merged party keeps a trivial input."""
    if p4.n_parties != 4 or p4.input_sizes[2:] != (1, 1):
        raise ValueError("expected a four-party induced table")
    n_a, n_b = p4.input_sizes[:2]
    ox, oy, nu, nv = p4.output_sizes
    table = p4.table.reshape(n_a, n_b, 1, ox, oy, nu * nv)
    return ConditionalDistribution((n_a, n_b, 1), (ox, oy, nu * nv), table)


def xu_conditional(
    p4: ConditionalDistribution,
    tol: float = MARGINAL_INDEPENDENCE_TOL,
    average_b: bool = False,
) -> ConditionalDistribution:
    """Alice-side view P(x, u | a) of a four-party induced table.

    Sums out Bob's outcome and hidden variable, then checks that nothing
    left depends on Bob's setting (within ``tol``) and removes that axis.
    ``average_b`` pools over Bob's settings instead of slicing the first
    one, which is the right reduction for sampled tables (the exact table
    is b-independent, so pooling only averages noise).
    """
    if p4.n_parties != 4 or p4.input_sizes[2:] != (1, 1):
        raise ValueError("expected a four-party induced table")
    n_a, n_b = p4.input_sizes[:2]
    ox, oy, nu, nv = p4.output_sizes
    marg = p4.table.sum(axis=(5, 7))  # drop y and v outputs -> (a, b, 1, 1, x, u)
    if n_b > 1:
        dev = float(
            (0.5 * np.abs(marg - marg[:, :1]).sum(axis=(-2, -1))).max()
        )
        if dev > tol:
            raise ValueError(
                f"Alice-side table depends on Bob's setting (deviation {dev})"
            )
    reduced = marg.mean(axis=1) if average_b else marg[:, 0]
    table = reduced.reshape(n_a, 1, ox, nu)
    return ConditionalDistribution((n_a, 1), (ox, nu), table)


@dataclass(frozen=True)
class LocalityMeasurement:
    """Per-setting locality of one side: distance of the (outcome, hidden)
    joint from (uniform outcome) x (hidden marginal)."""

    per_setting: tuple[float, ...]
    max_distance: float


def locality_measure(
    p_xu: ConditionalDistribution,
    marginal_tol: float = MARGINAL_INDEPENDENCE_TOL,
) -> LocalityMeasurement:
    """Measure how much one side's outcome leans on its hidden variable.

    Input: two-party table with party 0 = (setting -> outcome) and party 1
    = (no input -> hidden index).  The hidden marginal must not depend on
    the setting beyond ``marginal_tol``.  Each setting's distance is the
    hidden-average of the conditional outcome distances from uniform,
    cross-checked against the direct joint distance.
    """
    if p_xu.n_parties != 2 or p_xu.input_sizes[1] != 1:
        raise ValueError("expected parties (setting -> outcome, none -> hidden)")
    n = p_xu.input_sizes[0]
    ox, nu = p_xu.output_sizes
    t = p_xu.table  # (N, 1, ox, nu)
    pu = t.sum(axis=2)[:, 0, :]  # (N, nu)
    if n > 1:
        dev = float((0.5 * np.abs(pu[:, None] - pu[None, :]).sum(axis=-1)).max())
        if dev > marginal_tol:
            raise ValueError(
                f"hidden-variable marginal depends on the setting (deviation {dev})"
            )
    distances = []
    for a in range(n):
        joint = t[a, 0]  # (ox, nu)
        w = pu[a]
        terms = []
        for u in range(nu):
            if w[u] <= 0.0:
                continue
            cond = joint[:, u] / w[u]
            terms.append(w[u] * 0.5 * float(np.abs(cond - 1.0 / ox).sum()))
        avg = math.fsum(terms)
        direct = stat_distance(
            Distribution(joint), Distribution(np.full((ox, 1), 1.0 / ox) * w[None, :])
        )
        if abs(avg - direct) > NORM_TOL:
            raise AssertionError(
                f"average-form distance {avg} disagrees with joint form {direct}"
            )
        distances.append(avg)
    return LocalityMeasurement(tuple(distances), max(distances))


@dataclass(frozen=True)
class LocalityBoundReport:
    """Result of the non-signaling locality bound on a three-party table.

    ``passed`` is None when the input signals (the bound's hypothesis
    fails, so the check is inapplicable rather than failed).
    """

    applicable: bool
    ns_violation: float
    lhs_x: tuple[float, ...]
    lhs_y: tuple[float, ...]
    bound: float
    passed: bool | None


def locality_bound_check(
    p: ConditionalDistribution,
    c_dist: Distribution,
    tol: float = NORM_TOL,
) -> LocalityBoundReport:
    """Check that hidden-side information stays within half the chain value.

    ``p`` is a three-party table: party 0 is Alice (binary outcome given a
    chain setting), party 1 Bob, party 2 an extra output Z given an input C
    drawn with ``c_dist`` independently of the settings.  For every setting
    a, the statistical distance of P(x, z, c | a) from (uniform x) times
    the (z, c) marginal must be at most half the chain value of the (x, y)
    table; symmetrically for every b.
    """
    if p.n_parties != 3:
        raise ValueError("expected a three-party table")
    if p.output_sizes[0] != 2 or p.output_sizes[1] != 2:
        raise ValueError("chain parties must have binary outcomes")
    n = p.input_sizes[0]
    if p.input_sizes[1] != n or n < 2:
        raise ValueError("chain parties must share N >= 2 settings")
    n_c = p.input_sizes[2]
    pc = np.asarray(c_dist.probs, dtype=float).reshape(-1)
    if pc.size != n_c:
        raise ValueError("c_dist must match party 2's input alphabet")
    ns = assert_nonsignaling(p, tol)
    if not ns.passed:
        return LocalityBoundReport(False, ns.max_violation, (), (), math.nan, None)
    t = p.table  # (N, N, n_c, 2, 2, oz)
    oz = p.output_sizes[2]
    xy = t[:, :, 0].sum(axis=-1)  # chain table at the first C value
    bound = 0.5 * evaluate_chain(
        ConditionalDistribution((n, n), (2, 2), xy), n
    ).value
    # Hidden-side marginal over (c, z); independent of a and b by the
    # non-signaling check above.
    p_zc = t[0, 0].sum(axis=(1, 2)) * pc[:, None]  # (n_c, oz)
    uniform_half = np.broadcast_to(0.5 * p_zc[:, None, :], (n_c, 2, oz)).copy()
    lhs_x = []
    for a in range(n):
        m = t[a, 0].sum(axis=2)  # (n_c, 2, oz), Bob's outcome summed out
        joint = m * pc[:, None, None]
        lhs_x.append(stat_distance(Distribution(joint), Distribution(uniform_half)))
    lhs_y = []
    for b in range(n):
        m = t[0, b].sum(axis=1)  # (n_c, 2, oz), Alice's outcome summed out
        joint = m * pc[:, None, None]
        lhs_y.append(stat_distance(Distribution(joint), Distribution(uniform_half)))
    worst = max(lhs_x + lhs_y)
    return LocalityBoundReport(
        True, ns.max_violation, tuple(lhs_x), tuple(lhs_y), bound,
        worst <= bound + NORM_TOL,
    )


@dataclass(frozen=True)
class LocalityReport:
    """Verdict of a locality falsification run.

    ``per_setting_distance`` pairs each Alice setting with its measured
    hidden-variable dependence; ``bound`` is the locality cap certified by
    the chain value; ``falsified`` means the worst setting exceeds the cap
    by more than ``stat_tolerance``.
    """

    per_setting_distance: tuple[tuple[int, float], ...]
    bound: float
    max_distance: float
    falsified: bool
    stat_tolerance: float

    def to_dict(self) -> dict:
        return {
            "per_setting_distance": [[a, d] for a, d in self.per_setting_distance],
            "bound": self.bound,
            "max_distance": self.max_distance,
            "falsified": self.falsified,
            "stat_tolerance": self.stat_tolerance,
        }


def make_locality_report(
    lm: LocalityMeasurement, bound: float, stat_tolerance: float
) -> LocalityReport:
    """Assemble a verdict from per-setting distances and a locality cap."""
    per = tuple((a, d) for a, d in enumerate(lm.per_setting))
    return LocalityReport(
        per, bound, lm.max_distance, lm.max_distance > bound + stat_tolerance,
        stat_tolerance,
    )


def falsify_leggett(n: int, vectors, weights=None) -> LocalityReport:
    """Test a Leggett-type hidden-vector distribution against the locality
    cap certified by the ideal quantum chain value.

    Builds Alice's (outcome, hidden-vector) table from the squared-overlap
    rule at the chained angles and compares the worst per-setting distance
    with half the quantum chain value.  In-plane vector mass forces a
    distance of about 1/pi per setting, which already exceeds the cap at
    N = 2; vectors orthogonal to the measurement plane contribute nothing.
    """
    setup = MeasurementSetup.chained(n)
    vecs = _unit_vectors(vectors, "vectors")
    w = _weights(weights, len(vecs), "weights")
    bloch = np.array([m.bloch_vector() for m in setup.alice])  # (N, 3)
    p0 = np.clip(0.5 * (1.0 + bloch @ vecs.T), 0.0, 1.0)  # (N, k)
    table = np.empty((n, 1, 2, len(vecs)))
    table[:, 0, 0, :] = w[None, :] * p0
    table[:, 0, 1, :] = w[None, :] * (1.0 - p0)
    p_xu = ConditionalDistribution((n, 1), (2, len(vecs)), table)
    lm = locality_measure(p_xu)
    bound = 0.5 * quantum_chain_closed_form(n)
    return make_locality_report(lm, bound, 1e-9)


def model_from_dict(data: dict) -> HiddenVariableModel:
    """Build a model from its JSON description.

    Types: ``leggett`` (vector grids and weights), ``local_deterministic``
    (strategy tables and weights), ``nonlocal_qm`` (N and visibility), and
    ``custom_table`` (an inline distribution document).
    """
    try:
        kind = data["type"]
    except (KeyError, TypeError) as exc:
        raise ValueError("model document needs a 'type' field") from exc
    if kind == "leggett":
        n = int(data["n"])
        if "vectors" in data:
            vectors = np.asarray(data["vectors"], dtype=float)
        else:
            vectors = inplane_grid(int(data.get("grid", 360)))
        v_vectors = (
            np.asarray(data["v_vectors"], dtype=float) if "v_vectors" in data else None
        )
        weights = data.get("weights")
        uv = None
        if "uv_weights" in data:
            uv = np.asarray(data["uv_weights"], dtype=float)
        elif weights is not None:
            w = _weights(np.asarray(weights, dtype=float), len(vectors), "weights")
            nv = len(v_vectors) if v_vectors is not None else len(vectors)
            wv = w if v_vectors is None else np.full(nv, 1.0 / nv)
            uv = np.outer(w, wv)
        return leggett_model(n, vectors, v_vectors, uv)
    if kind == "local_deterministic":
        n = int(data["n"])
        uv = np.asarray(data["uv_weights"], dtype=float) if "uv_weights" in data else None
        if uv is None and "u_weights" in data:
            uv = np.outer(
                np.asarray(data["u_weights"], dtype=float),
                np.asarray(data["v_weights"], dtype=float),
            )
        return local_deterministic_model(
            n, data["alice_tables"], data["bob_tables"], uv
        )
    if kind == "nonlocal_qm":
        return nonlocal_qm_model(
            int(data["n"]),
            float(data.get("visibility", 1.0)),
            int(data.get("n_u", 1)),
            int(data.get("n_v", 1)),
        )
    if kind == "custom_table":
        dist = ConditionalDistribution.from_dict(data["distribution"])
        return table_model(dist)
    raise ValueError(f"unknown model type {kind!r}")


def model_from_json_file(path: str | Path) -> HiddenVariableModel:
    return model_from_dict(json.loads(Path(path).read_text()))
