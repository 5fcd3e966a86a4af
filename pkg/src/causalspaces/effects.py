"""Causal-effect classification, sources, dormancy, and adjustment.

Whether one subset of components causally moves an event is decided by
exhaustive comparison of kernels across every subset of the power set, per
the definitions:

  * no effect of U on A: for every subset S and every atom, the subset-S
    kernel gives A the same value as the kernel that forgets U's part of S;
  * active: the U-kernel itself disagrees somewhere with the observational
    probability of A;
  * dormant: neither, meaning the disagreement only surfaces jointly with
    other coordinates and can be exposed by a suitable hard intervention.

All scans quantify over every atom regardless of observational mass: a
kernel disagreement supported only on null rows still blocks "no effect".
Only source checks and adjustment skip null atoms, where a conditional
probability is a matter of convention.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import subsets
from .core import CausalSpace, intervene_hard
from .errors import ContractError, DomainError, InternalInconsistencyError
from .measure import NORM_TOL, Atom, Dist, Event, bind, dirac


class EffectClass(enum.Enum):
    NONE = "none"
    ACTIVE = "active"
    DORMANT = "dormant"


def _check_event(cs: CausalSpace, a: Event) -> np.ndarray:
    if a.space != cs.space:
        raise DomainError("event must live on the causal space")
    return a.indicator()


def classify_effect(cs: CausalSpace, u: int, a: Event, tol: float = NORM_TOL) -> EffectClass:
    """Classify the effect of the U-components on one event."""
    cs.space._check_mask(u)
    ind = _check_event(cs, a)
    space = cs.space
    none = True
    for s in subsets.all_masks(space.n):
        kept = s & ~u
        if kept == s:
            continue
        vs = cs.mechanism[s].matrix @ ind
        vk = cs.mechanism[kept].matrix @ ind
        proj = space.atom_projection(s, kept)
        if np.abs(vs - vk[proj]).max() > tol:
            none = False
            break
    if none:
        return EffectClass.NONE
    vu = cs.mechanism[u].matrix @ ind
    pa = float(cs.observational.weights @ ind)
    if np.abs(vu - pa).max() > tol:
        return EffectClass.ACTIVE
    return EffectClass.DORMANT


def classify_effect_on_subset(
    cs: CausalSpace, u: int, v: int, tol: float = NORM_TOL
) -> EffectClass:
    """Classify the effect of U on the whole algebra of the V-components.

    Every event over V is a disjoint union of V-atom cylinders and all the
    defining comparisons are additive in the event, so scanning atom events
    alone is exhaustive.
    """
    space = cs.space
    space._check_mask(u)
    space._check_mask(v)
    fibers = space.fiber_indicators(v)
    none = True
    for s in subsets.all_masks(space.n):
        kept = s & ~u
        if kept == s:
            continue
        vs = cs.mechanism[s].matrix @ fibers.T
        vk = cs.mechanism[kept].matrix @ fibers.T
        proj = space.atom_projection(s, kept)
        if np.abs(vs - vk[proj]).max() > tol:
            none = False
            break
    if none:
        return EffectClass.NONE
    vu = cs.mechanism[u].matrix @ fibers.T
    pv = fibers @ cs.observational.weights
    if np.abs(vu - pv[None, :]).max() > tol:
        return EffectClass.ACTIVE
    return EffectClass.DORMANT


def classify_effect_on_sigma(
    cs: CausalSpace, u: int, events: Iterable[Event], tol: float = NORM_TOL
) -> EffectClass:
    """Classify against the algebra generated by the events.

    The events are required to generate the full algebra of the components
    they jointly depend on (the only sub-algebras this package models); the
    generated algebra is identified by reducing each event to its essential
    components and taking the union.
    """
    v = 0
    for ev in events:
        if ev.space != cs.space:
            raise DomainError("events must live on the causal space")
        v |= ev.essential().domain
    return classify_effect_on_subset(cs, u, v, tol)


def has_no_effect_given(
    cs: CausalSpace, u: int, v: int, a: Event, tol: float = NORM_TOL
) -> bool:
    """No effect of U on the event once the V-components are held known.

    For every subset S the kernel of S|V must agree on the event with the
    kernel that forgets U's components outside V.
    """
    space = cs.space
    space._check_mask(u)
    space._check_mask(v)
    ind = _check_event(cs, a)
    for s in subsets.all_masks(space.n):
        big = s | v
        small = big & ~(u & ~v)
        if small == big:
            continue
        vb = cs.mechanism[big].matrix @ ind
        vs = cs.mechanism[small].matrix @ ind
        proj = space.atom_projection(big, small)
        if np.abs(vb - vs[proj]).max() > tol:
            return False
    return True


def is_trivial_kernel(cs: CausalSpace, u: int, tol: float = NORM_TOL) -> bool:
    """U has no effect on anything outside itself."""
    rest = cs.space.full & ~u
    return classify_effect_on_subset(cs, u, rest, tol) is EffectClass.NONE


def is_time_respecting(
    cs: CausalSpace, partition: Sequence[int], tol: float = NORM_TOL
) -> bool:
    """No slice of the ordered partition affects any earlier slice."""
    seen = 0
    for mask in partition:
        cs.space._check_mask(mask)
        if mask & seen:
            raise DomainError("time partition slices must be disjoint")
        seen |= mask
    for i in range(len(partition)):
        for j in range(i + 1, len(partition)):
            if classify_effect_on_subset(cs, partition[j], partition[i], tol) is not EffectClass.NONE:
                return False
    return True


def is_source(cs: CausalSpace, u: int, a: Event, tol: float = NORM_TOL) -> bool:
    """The U-kernel is a version of the conditional probability of the event.

    Atoms with observational mass at or below tol are skipped: conditional
    probability is only defined up to a null set.
    """
    cs.space._check_mask(u)
    ind = _check_event(cs, a)
    fibers = cs.space.fiber_indicators(u)
    masses = fibers @ cs.observational.weights
    ok = masses > tol
    if not ok.any():
        return True
    vu = (cs.mechanism[u].matrix @ ind)[ok]
    cond = (fibers @ (cs.observational.weights * ind))[ok] / masses[ok]
    return bool(np.abs(vu - cond).max() <= tol)


def _is_local_source_on_subset(cs: CausalSpace, u: int, v: int, tol: float) -> bool:
    """Source property of U restricted to every atom event of the V-components."""
    fibers_u = cs.space.fiber_indicators(u)
    fibers_v = cs.space.fiber_indicators(v)
    masses = fibers_u @ cs.observational.weights
    ok = masses > tol
    if not ok.any():
        return True
    vals = (cs.mechanism[u].matrix @ fibers_v.T)[ok]
    cond = (fibers_u * cs.observational.weights[None, :]) @ fibers_v.T
    cond = cond[ok] / masses[ok, None]
    return bool(np.abs(vals - cond).max() <= tol)


def is_global_source(cs: CausalSpace, u: int, tol: float = NORM_TOL) -> bool:
    """Source of every event: rows equal conditionals on positive-mass atoms."""
    return _is_local_source_on_subset(cs, u, cs.space.full, tol)


@dataclass(frozen=True)
class ActivationWitness:
    """Hard intervention exposing a dormant effect.

    Pinning the intervened components to the witness atom's coordinates
    turns the activated subset's effect on the event active.
    """

    intervened: int
    atom: Atom
    activated: int
    after: CausalSpace


def activate_dormant(
    cs: CausalSpace, u: int, a: Event, tol: float = NORM_TOL
) -> ActivationWitness:
    """Find a subset whose kernel disagreement exposes the dormant effect.

    Scans subsets in ascending mask order for K_S(w, A) != K_{S minus U}(w, A),
    then hard-intervenes the non-U part to the witness atom's coordinates.
    The activated subset is S's intersection with U.
    """
    if classify_effect(cs, u, a, tol) is not EffectClass.DORMANT:
        raise ContractError("activation needs a dormant classification")
    space = cs.space
    ind = _check_event(cs, a)
    for s in subsets.all_masks(space.n):
        kept = s & ~u
        if kept == s:
            continue
        vs = cs.mechanism[s].matrix @ ind
        vk = cs.mechanism[kept].matrix @ ind
        proj = space.atom_projection(s, kept)
        diff = np.abs(vs - vk[proj])
        row = int(np.argmax(diff))
        if diff[row] <= tol:
            continue
        omega = Atom(space.full, int(space.atom_embedding(s, space.full)[row]))
        target = Atom(kept, int(proj[row]))
        after = intervene_hard(cs, kept, dirac(space, target))
        activated = s & u
        if classify_effect(after, activated, a, tol) is not EffectClass.ACTIVE:
            raise InternalInconsistencyError(
                "witness intervention failed to activate the effect"
            )
        return ActivationWitness(intervened=kept, atom=omega, activated=activated, after=after)
    raise InternalInconsistencyError(
        "no kernel disagreement found although the effect was dormant"
    )


@dataclass(frozen=True)
class AdjustmentResult:
    """Observational estimate of an interventional probability, with audit.

    consistent: interventional and observational conditionals given the
    U|V-components agree on atoms positive under both measures. case: which
    structural hypothesis licensed the weighting (local-source, no-effect,
    contained), or None. trusted only when both parts hold and every
    conditional the sum needed was defined.
    """

    estimate: float
    trusted: bool
    consistent: bool
    case: str | None
    notes: tuple[str, ...]


def adjustment_estimate(
    cs: CausalSpace, u: int, v: int, q: Dist, a: Event, tol: float = NORM_TOL
) -> AdjustmentResult:
    """Adjust over the V-components to estimate the intervened probability.

    Returns sum over consistent (U|V)-atoms of q(u-part) r(v-part | u-part)
    P(A | atom), with r the observational conditional (local-source case),
    the plain V-marginal (no-effect case), or degenerate (V inside U). The
    reference value it chases is the measure q bound through the U-kernel,
    evaluated on the event; the estimate itself touches only q and the
    observational measure.
    """
    space = cs.space
    space._check_mask(u)
    space._check_mask(v)
    if q.space != space or q.domain != u:
        raise DomainError("adjustment measure must live on the adjusted-for subset")
    ind = _check_event(cs, a)
    notes: list[str] = []
    p = cs.observational.weights
    p_do = bind(q, cs.mechanism[u]).weights

    uv = u | v
    fibers = space.fiber_indicators(uv)
    mass_p = fibers @ p
    mass_do = fibers @ p_do
    pos_do = mass_do > tol
    pos_p = mass_p > tol
    consistent = True
    if (pos_do & ~pos_p).any():
        consistent = False
        notes.append("interventional mass sits on observationally null atoms")
    both = pos_do & pos_p
    if both.any():
        cond_do = (fibers @ (p_do * ind))[both] / mass_do[both]
        cond_p = (fibers @ (p * ind))[both] / mass_p[both]
        if np.abs(cond_do - cond_p).max() > tol:
            consistent = False
            notes.append("do-conditional disagrees with the observational conditional")

    if _is_local_source_on_subset(cs, u, v, tol):
        case = "local-source"
    elif classify_effect_on_subset(cs, u, v, tol) is EffectClass.NONE:
        case = "no-effect"
    elif subsets.is_subset(v, u):
        case = "contained"
    else:
        case = None
        notes.append("no structural hypothesis holds; weighted as no-effect")

    proj_u = space.atom_projection(uv, u)
    q_at = q.weights[proj_u]
    defined = True
    if case == "local-source":
        mass_u = (space.fiber_indicators(u) @ p)[proj_u]
        r = np.zeros_like(mass_p)
        ok_u = mass_u > tol
        r[ok_u] = mass_p[ok_u] / mass_u[ok_u]
        if ((q_at > tol) & ~ok_u).any():
            defined = False
            notes.append("conditional over V undefined on a needed null atom")
    elif case == "contained":
        r = np.ones_like(mass_p)
    else:
        proj_v = space.atom_projection(uv, v)
        r = (space.fiber_indicators(v) @ p)[proj_v]

    weight = q_at * r
    need = weight > tol
    cond_a = np.zeros_like(mass_p)
    ok_uv = mass_p > tol
    cond_a[ok_uv] = (fibers @ (p * ind))[ok_uv] / mass_p[ok_uv]
    if (need & ~ok_uv).any():
        defined = False
        notes.append("event conditional undefined on a needed null atom")
    estimate = float(weight[need & ok_uv] @ cond_a[need & ok_uv])
    trusted = consistent and case is not None and defined
    return AdjustmentResult(estimate, trusted, consistent, case, tuple(notes))
