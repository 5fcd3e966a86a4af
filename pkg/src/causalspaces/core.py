"""Causal spaces on finite products: mechanisms, validation, interventions.

A causal space is an observational measure together with one probability
kernel per component subset. The two defining properties are checked by
validate_causal_space rather than at construction time, so that broken
inputs (for example loaded documents) can be inspected and reported:

  * the empty-subset kernel's single row is the observational measure;
  * every row of the subset-S kernel projects onto S as the point mass at
    the row's own atom (finite form of the interventional consistency
    requirement: the kernel cannot move the coordinates it is given).

Intervening on a subset U replaces mass on the U-coordinates by a supplied
measure and re-routes every kernel through the joint kernel of the union,
either with a caller-supplied internal mechanism on the U-components or,
for hard interventions, with the closed-form product rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import subsets
from .errors import DomainError
from .measure import (
    NORM_TOL,
    Dist,
    FiniteProductSpace,
    Kernel,
    bind,
    conditional_kernel,
    marginal,
    product_weights,
)


@dataclass(frozen=True, eq=False)
class CausalMechanism:
    """One kernel per subset mask, indexed 0 .. 2^n - 1."""

    space: FiniteProductSpace
    kernels: tuple[Kernel, ...]

    def __post_init__(self):
        want = 1 << self.space.n
        if len(self.kernels) != want:
            raise DomainError(f"mechanism needs {want} kernels, got {len(self.kernels)}")
        for mask, k in enumerate(self.kernels):
            if k.space != self.space or k.source != mask:
                raise DomainError(f"kernel at position {mask} has source {k.source}")

    def __getitem__(self, mask: int) -> Kernel:
        return self.kernels[mask]


@dataclass(frozen=True, eq=False)
class CausalSpace:
    """Finite product space, observational measure, and causal mechanism."""

    space: FiniteProductSpace
    observational: Dist
    mechanism: CausalMechanism

    def __post_init__(self):
        if self.observational.space != self.space or self.observational.domain != self.space.full:
            raise DomainError("observational measure must live on the full space")
        if self.mechanism.space != self.space:
            raise DomainError("mechanism must live on the same space")

    def kernel(self, mask: int) -> Kernel:
        return self.mechanism[mask]


@dataclass(frozen=True)
class Violation:
    """One failed validation check, locating subset, row, and offending atom."""

    subset: int
    row: int | None
    kind: str
    atom: int | None
    error: float

    def describe(self) -> str:
        where = f"subset {sorted(subsets.indices_of(self.subset))}"
        if self.row is not None:
            where += f", row atom {self.row}"
        if self.atom is not None:
            where += f", atom {self.atom}"
        return f"{self.kind} at {where} (error {self.error:.3e})"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_causal_space(cs: CausalSpace, tol: float = NORM_TOL) -> ValidationReport:
    """Check both defining properties, reporting every violating triple.

    For each subset S the row measures are marginalised onto S in one
    reshape-sum; a valid row is the point mass at its own atom, so the
    stacked marginals must equal the identity matrix.
    """
    out: list[Violation] = []
    space = cs.space
    base = cs.mechanism[0].matrix[0]
    diff = np.abs(base - cs.observational.weights)
    if diff.max() > tol:
        at = int(np.argmax(diff))
        out.append(Violation(0, 0, "base-measure-mismatch", at, float(diff.max())))
    sizes = space.sizes
    for mask in subsets.all_masks(space.n):
        if mask == 0:
            continue
        k = cs.mechanism[mask]
        keep = tuple(subsets.bits(mask))
        drop = tuple(t for t in range(space.n) if t not in keep)
        shaped = k.matrix.reshape((k.matrix.shape[0],) + tuple(sizes))
        marg = shaped.sum(axis=tuple(1 + t for t in drop)).reshape(k.matrix.shape[0], -1)
        dev = np.abs(marg - np.eye(marg.shape[0]))
        rows, cols = np.nonzero(dev > tol)
        for r, c in zip(rows.tolist(), cols.tolist()):
            out.append(
                Violation(mask, r, "row-marginal-not-point-mass", c, float(dev[r, c]))
            )
    return ValidationReport(tuple(out))


class _Hard:
    def __repr__(self):
        return "HARD"


#: Marker for InterventionSpec.internal requesting the closed-form hard path.
HARD = _Hard()


@dataclass(frozen=True)
class InterventionSpec:
    """What to intervene on: subset mask, new measure on it, internal mechanism.

    internal is a CausalSpace on the subset's components (its observational
    measure must coincide with measure) or HARD for a hard intervention.
    """

    subset: int
    measure: Dist
    internal: Union[CausalSpace, _Hard]


def trivial_mechanism(space: FiniteProductSpace, u: int, q: Dist) -> CausalMechanism:
    """Mechanism on the U-components whose kernels ignore their input.

    The row at an atom of V is the product of the point mass at that atom
    with the q-marginal on the remaining components. For a q that does not
    factorise across V and its complement this family is not "trivial" in
    the no-effect sense (a V-row still reshapes the complement's joint), but
    it satisfies both defining properties, and - the fact that matters -
    routing a generic intervention through it reproduces the hard
    intervention's closed form, which only ever integrates q's marginal on
    the coordinates outside the re-intervened subset.
    """
    if q.domain != u or u == 0:
        raise DomainError("trivial mechanism needs a measure on a nonempty subset")
    sub = space.subspace(u)
    kernels = []
    for local in subsets.all_masks(sub.n):
        rest = sub.full & ~local
        n_rows = sub.n_atoms_of(local)
        rest_w = marginal(Dist(sub, sub.full, q.weights), rest).weights
        rows = np.empty((n_rows, sub.n_atoms))
        for i in range(n_rows):
            point = np.zeros(sub.n_atoms_of(local))
            point[i] = 1.0
            rows[i] = product_weights(sub, [(local, point), (rest, rest_w)], sub.full)
        kernels.append(Kernel(sub, local, rows))
    return CausalMechanism(sub, tuple(kernels))


def trivial_internal(space: FiniteProductSpace, u: int, q: Dist) -> CausalSpace:
    """The trivial mechanism packaged as an internal intervention space."""
    sub = space.subspace(u)
    return CausalSpace(sub, Dist(sub, sub.full, q.weights), trivial_mechanism(space, u, q))


def mechanism_from_conditionals(space: FiniteProductSpace, p: Dist) -> CausalMechanism:
    """Every kernel row is p conditioned on the row's cylinder.

    Needs full support (NullSetError otherwise). The result classifies every
    subset as a local source everywhere: intervening reproduces plain
    conditioning, the regime where observational and interventional
    reasoning coincide.
    """
    if p.space != space or p.domain != space.full:
        raise DomainError("conditional mechanism needs a full-space measure")
    kernels = [conditional_kernel(p, mask) for mask in subsets.all_masks(space.n)]
    return CausalMechanism(space, tuple(kernels))


def _check_spec(cs: CausalSpace, spec: InterventionSpec) -> None:
    space = cs.space
    space._check_mask(spec.subset)
    if spec.measure.space != space or spec.measure.domain != spec.subset:
        raise DomainError("intervention measure must live on the intervened subset")
    if spec.internal is HARD or spec.subset == 0:
        return
    internal = spec.internal
    if not isinstance(internal, CausalSpace):
        raise DomainError("internal mechanism must be a CausalSpace or HARD")
    sub = space.subspace(spec.subset)
    if internal.space != sub:
        raise DomainError("internal mechanism must live on the intervened components")
    if np.abs(internal.observational.weights - spec.measure.weights).max() > NORM_TOL:
        raise DomainError("internal observational measure must equal the intervention measure")
    report = validate_causal_space(internal)
    if not report.ok:
        raise DomainError(
            "internal mechanism is not a valid causal space: "
            + "; ".join(v.describe() for v in report.violations[:3])
        )


def intervene(cs: CausalSpace, spec: InterventionSpec) -> CausalSpace:
    """Generic intervention: new measure on the subset, kernels re-routed.

    The new subset-S kernel at a row atom splits the atom into its parts
    inside and outside U, feeds the inside part to the internal mechanism,
    and mixes the union kernel's rows with the resulting weights:

        k_new(w, A) = sum_{u'} internal(w on S&U, u') k(S|U)((w off U, u'), A)

    The new observational measure is measure bound through the U-kernel.
    Intervening on the empty subset returns an identical space.
    """
    _check_spec(cs, spec)
    u = spec.subset
    if u == 0:
        return CausalSpace(cs.space, cs.observational, cs.mechanism)
    if spec.internal is HARD:
        return intervene_hard(cs, u, spec.measure)
    space = cs.space
    internal = spec.internal
    n_u = space.n_atoms_of(u)
    p_do = bind(spec.measure, cs.mechanism[u])
    kernels: list[Kernel] = []
    for s in subsets.all_masks(space.n):
        inside = s & u
        outside = s & ~u
        union = s | u
        joint = cs.mechanism[union].matrix
        e_out = space.atom_embedding(outside, union)
        e_u = space.atom_embedding(u, union)
        # union kernel rows arranged as (outside atom, u atom, column)
        gathered = joint[e_out[:, None] + e_u[None, :]]
        local = subsets.local_mask(inside, u)
        mix = internal.mechanism[local].matrix  # (inside atoms, u atoms)
        new = np.einsum("vu,wuo->wvo", mix, gathered)
        rows = np.empty((space.n_atoms_of(s), space.n_atoms))
        idx = space.atom_embedding(outside, s)[:, None] + space.atom_embedding(inside, s)[None, :]
        rows[idx.reshape(-1)] = new.reshape(-1, space.n_atoms)
        kernels.append(Kernel(space, s, rows))
    return CausalSpace(space, p_do, CausalMechanism(space, tuple(kernels)))


def intervene_hard(cs: CausalSpace, u: int, q: Dist) -> CausalSpace:
    """Hard intervention by the closed-form product rule.

    The new subset-S kernel keeps the S-coordinates it is handed (including
    any intervened ones), draws the remaining intervened coordinates from
    q's marginal, and routes through the union kernel:

        k_new(w, A) = sum_{u' on U\\S} q_marg(u') k(S|U)((w, u'), A)

    Agrees with the generic path run through the trivial internal mechanism;
    both are exercised against each other in the test suite.
    """
    space = cs.space
    space._check_mask(u)
    if q.space != space or q.domain != u:
        raise DomainError("intervention measure must live on the intervened subset")
    if u == 0:
        return CausalSpace(cs.space, cs.observational, cs.mechanism)
    p_do = bind(q, cs.mechanism[u])
    kernels: list[Kernel] = []
    for s in subsets.all_masks(space.n):
        union = s | u
        fresh = u & ~s
        joint = cs.mechanism[union].matrix
        e_s = space.atom_embedding(s, union)
        if fresh:
            q_marg = marginal(q, fresh).weights
            e_fresh = space.atom_embedding(fresh, union)
            gathered = joint[e_s[:, None] + e_fresh[None, :]]
            rows = np.einsum("u,suo->so", q_marg, gathered)
        else:
            rows = joint[e_s]
        kernels.append(Kernel(space, s, rows))
    return CausalSpace(space, p_do, CausalMechanism(space, tuple(kernels)))
