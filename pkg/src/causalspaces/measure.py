"""Finite product sample spaces and dense measures on them.

A space is an ordered product of named finite components. Atoms of the
sub-product over a component subset S are indexed row-major with component
index ascending, so every object below is a flat numpy array plus the subset
mask it lives on. Measures, events and probability kernels are all dense;
the package trades memory for exhaustive, loop-free semantics.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import subsets
from .errors import CapError, DomainError, NullSetError

# Equality-of-measure tolerance used across the package.
NORM_TOL = 1e-9
# Constructor window: weights summing within this of 1 are renormalised.
RENORM_TOL = 1e-6

DEFAULT_MAX_COMPONENTS = 12
MAX_COMPONENTS_ENV = "CAUSAL_SPACES_MAX_T"


def max_components() -> int:
    """Component cap; the environment variable overrides the default."""
    raw = os.environ.get(MAX_COMPONENTS_ENV)
    if raw is None:
        return DEFAULT_MAX_COMPONENTS
    try:
        cap = int(raw)
    except ValueError as exc:
        raise CapError(f"{MAX_COMPONENTS_ENV} must be an int, got {raw!r}") from exc
    if cap < 1:
        raise CapError(f"{MAX_COMPONENTS_ENV} must be >= 1, got {cap}")
    return cap


@dataclass(frozen=True)
class FiniteProductSpace:
    """Ordered product of named finite components.

    components: tuple of (name, outcome labels). Component order is the
    ambient index order; all subset masks refer to positions in this tuple.
    """

    components: tuple[tuple[str, tuple[str, ...]], ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.components, tuple):
            object.__setattr__(
                self,
                "components",
                tuple((str(n), tuple(str(o) for o in outs)) for n, outs in self.components),
            )
        n = len(self.components)
        if n < 1:
            raise DomainError("a space needs at least one component")
        cap = max_components()
        if n > cap:
            raise CapError(f"{n} components exceeds the cap of {cap}")
        names = [c[0] for c in self.components]
        if len(set(names)) != n:
            raise DomainError(f"component names must be unique, got {names}")
        for name, outcomes in self.components:
            if len(outcomes) < 1:
                raise DomainError(f"component {name!r} has no outcomes")
            if len(set(outcomes)) != len(outcomes):
                raise DomainError(f"component {name!r} has duplicate outcomes")

    @property
    def n(self) -> int:
        return len(self.components)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c[0] for c in self.components)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c[1]) for c in self.components)

    @property
    def full(self) -> int:
        return subsets.full_mask(self.n)

    @property
    def n_atoms(self) -> int:
        return math.prod(self.sizes)

    def n_atoms_of(self, mask: int) -> int:
        self._check_mask(mask)
        return math.prod(len(self.components[t][1]) for t in subsets.bits(mask))

    def index_of(self, name: str) -> int:
        for t, (n, _) in enumerate(self.components):
            if n == name:
                return t
        raise DomainError(f"no component named {name!r}")

    def mask_of(self, names: Iterable[str]) -> int:
        return subsets.mask_of(self.index_of(n) for n in names)

    def outcome_index(self, t: int, label: str) -> int:
        outs = self.components[t][1]
        try:
            return outs.index(label)
        except ValueError as exc:
            raise DomainError(
                f"component {self.components[t][0]!r} has no outcome {label!r}"
            ) from exc

    def _check_mask(self, mask: int) -> None:
        if not 0 <= mask <= self.full:
            raise DomainError(f"mask {mask:#b} outside this {self.n}-component space")

    def _strides(self, mask: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """(sizes, strides) over mask's components, ascending index, row-major."""
        idx = subsets.indices_of(mask)
        sizes = tuple(len(self.components[t][1]) for t in idx)
        strides = []
        acc = 1
        for s in reversed(sizes):
            strides.append(acc)
            acc *= s
        return sizes, tuple(reversed(strides))

    def _recode(self, src: int, comps: int, stride_mask: int) -> np.ndarray:
        """For each atom of src, sum coord(t) * stride_mask-stride(t) over t in comps.

        comps must be contained in both src and stride_mask. Projection is
        (src, dst, dst); embedding of a part into a superset is (part, part, sup).
        """
        key = (src, comps, stride_mask)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not (subsets.is_subset(comps, src) and subsets.is_subset(comps, stride_mask)):
            raise DomainError("component selection must be inside both masks")
        src_idx = subsets.indices_of(src)
        src_sizes, src_strides = self._strides(src)
        _, dst_strides = self._strides(stride_mask)
        dst_pos = {t: k for k, t in enumerate(subsets.indices_of(stride_mask))}
        flats = np.arange(self.n_atoms_of(src), dtype=np.intp)
        out = np.zeros_like(flats)
        for k, t in enumerate(src_idx):
            if comps & (1 << t):
                coord = (flats // src_strides[k]) % src_sizes[k]
                out += coord * dst_strides[dst_pos[t]]
        out.setflags(write=False)
        self._cache[key] = out
        return out

    def atom_projection(self, src: int, dst: int) -> np.ndarray:
        """Map flat atoms of the src sub-product onto the dst one (dst inside src)."""
        return self._recode(src, dst, dst)

    def atom_embedding(self, part: int, into: int) -> np.ndarray:
        """Flat-index contribution of a part's atoms inside a superset product.

        For disjoint parts A, B with A | B = into, the into-flat index of the
        combined atom is atom_embedding(A, into)[i] + atom_embedding(B, into)[j].
        """
        return self._recode(part, part, into)

    def fiber_indicators(self, mask: int) -> np.ndarray:
        """Float matrix whose row i flags the full atoms lying over atom i of mask."""
        key = ("fibers", mask)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        proj = self.atom_projection(self.full, mask)
        rows = np.arange(self.n_atoms_of(mask), dtype=np.intp)
        out = (proj[None, :] == rows[:, None]).astype(np.float64)
        out.setflags(write=False)
        self._cache[key] = out
        return out

    def coords_of(self, mask: int, index: int) -> tuple[int, ...]:
        sizes, strides = self._strides(mask)
        return tuple((index // st) % sz for sz, st in zip(sizes, strides))

    def flat_of(self, mask: int, coords: Iterable[int]) -> int:
        sizes, strides = self._strides(mask)
        coords = tuple(coords)
        if len(coords) != len(sizes):
            raise DomainError("coordinate count does not match mask")
        out = 0
        for c, sz, st in zip(coords, sizes, strides):
            if not 0 <= c < sz:
                raise DomainError(f"coordinate {c} out of range for size {sz}")
            out += c * st
        return out

    def atom_from_labels(self, labels: Mapping[str, str]) -> "Atom":
        """Atom of the sub-product named by the mapping's keys."""
        items = sorted(((self.index_of(n), v) for n, v in labels.items()))
        mask = subsets.mask_of(t for t, _ in items)
        coords = (self.outcome_index(t, v) for t, v in items)
        return Atom(mask, self.flat_of(mask, coords))

    def labels_of(self, atom: "Atom") -> dict[str, str]:
        idx = subsets.indices_of(atom.mask)
        coords = self.coords_of(atom.mask, atom.index)
        return {self.components[t][0]: self.components[t][1][c] for t, c in zip(idx, coords)}

    def subspace(self, mask: int) -> "FiniteProductSpace":
        self._check_mask(mask)
        if mask == 0:
            raise DomainError("a sub-space needs at least one component")
        return FiniteProductSpace(tuple(self.components[t] for t in subsets.bits(mask)))


@dataclass(frozen=True)
class Atom:
    """A point of the sub-product over mask, as its flat row-major index."""

    mask: int
    index: int


def _normalise(weights: np.ndarray, what: str) -> np.ndarray:
    """Shared constructor rule for measure weights.

    Accepted unchanged when the total is within NORM_TOL of 1 (keeps
    dump/parse round-trips bitwise stable), renormalised when within
    RENORM_TOL, rejected beyond that. Negative weights beyond -NORM_TOL are
    rejected; tiny negative float noise is clamped to zero.
    """
    w = np.array(weights, dtype=np.float64)
    if w.min(initial=0.0) < -NORM_TOL:
        raise DomainError(f"{what} has negative weight {w.min()}")
    np.clip(w, 0.0, None, out=w)
    total = float(w.sum())
    if abs(total - 1.0) > RENORM_TOL:
        raise DomainError(f"{what} weights sum to {total!r}, outside the 1e-6 window")
    if abs(total - 1.0) > NORM_TOL:
        w /= total
    return w


@dataclass(frozen=True, eq=False)
class Dist:
    """Probability weights over the atoms of a sub-product."""

    space: FiniteProductSpace
    domain: int
    weights: np.ndarray

    def __post_init__(self):
        self.space._check_mask(self.domain)
        w = _normalise(self.weights, "distribution")
        if w.shape != (self.space.n_atoms_of(self.domain),):
            raise DomainError(
                f"weights shape {w.shape} does not match domain with "
                f"{self.space.n_atoms_of(self.domain)} atoms"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def mass(self, at: Atom) -> float:
        """Mass of the cylinder over the given atom (atom mask inside domain)."""
        if not subsets.is_subset(at.mask, self.domain):
            raise DomainError("atom mask must be inside the distribution domain")
        proj = self.space.atom_projection(self.domain, at.mask)
        return float(self.weights[proj == at.index].sum())


def dirac(space: FiniteProductSpace, at: Atom) -> Dist:
    """Point mass at an atom of the sub-product over at.mask."""
    w = np.zeros(space.n_atoms_of(at.mask))
    w[at.index] = 1.0
    return Dist(space, at.mask, w)


def uniform(space: FiniteProductSpace, mask: int) -> Dist:
    n = space.n_atoms_of(mask)
    return Dist(space, mask, np.full(n, 1.0 / n))


def marginal(d: Dist, mask: int) -> Dist:
    """Push d onto the sub-product over mask (mask inside d.domain)."""
    if not subsets.is_subset(mask, d.domain):
        raise DomainError("marginal target must be inside the domain")
    if mask == d.domain:
        return Dist(d.space, mask, d.weights)
    sizes, _ = d.space._strides(d.domain)
    keep = []
    for k, t in enumerate(subsets.bits(d.domain)):
        if mask & (1 << t):
            keep.append(k)
    shaped = d.weights.reshape(sizes) if sizes else d.weights
    drop = tuple(k for k in range(len(sizes)) if k not in keep)
    return Dist(d.space, mask, shaped.sum(axis=drop).reshape(-1))


def condition(d: Dist, at: Atom) -> Dist:
    """d conditioned on the cylinder over at; the result keeps d's domain.

    Raises NullSetError when the cylinder mass is not above NORM_TOL: a
    conditional there is a matter of convention, and silently picking one
    would hide modelling errors.
    """
    if not subsets.is_subset(at.mask, d.domain):
        raise DomainError("conditioning atom must be inside the domain")
    proj = d.space.atom_projection(d.domain, at.mask)
    fiber = proj == at.index
    total = float(d.weights[fiber].sum())
    if total <= NORM_TOL:
        raise NullSetError(f"conditioning on a null cylinder (mass {total})")
    w = np.where(fiber, d.weights, 0.0) / total
    return Dist(d.space, d.domain, w)


def product_weights(
    space: FiniteProductSpace,
    parts: Iterable[tuple[int, np.ndarray]],
    into: int,
) -> np.ndarray:
    """Weights over the into-product of independent factors on disjoint masks.

    Masks must be pairwise disjoint and union exactly to into. Raw array
    variant used wherever kernel rows are assembled factor by factor.
    """
    idx = np.zeros(1, dtype=np.intp)
    w = np.ones(1)
    seen = 0
    for mask, pw in parts:
        if mask & seen:
            raise DomainError("product factors must have disjoint masks")
        seen |= mask
        if mask == 0:
            continue
        emb = space.atom_embedding(mask, into)
        idx = (idx[:, None] + emb[None, :]).reshape(-1)
        w = (w[:, None] * np.asarray(pw, dtype=np.float64)[None, :]).reshape(-1)
    if seen != into:
        raise DomainError("product factors must cover the target mask")
    out = np.zeros(space.n_atoms_of(into))
    out[idx] = w
    return out


def product_dist(a: Dist, b: Dist) -> Dist:
    """Independent product of measures whose domains partition the space."""
    if a.space is not b.space and a.space != b.space:
        raise DomainError("product factors must share a space")
    if a.domain & b.domain:
        raise DomainError("product factors must have disjoint domains")
    into = a.domain | b.domain
    if into != a.space.full:
        raise DomainError("product factors must cover every component")
    w = product_weights(a.space, [(a.domain, a.weights), (b.domain, b.weights)], into)
    return Dist(a.space, into, w)


@dataclass(frozen=True, eq=False)
class Event:
    """Measurable set, stored as atom flags on the sub-product it depends on."""

    space: FiniteProductSpace
    domain: int
    flags: np.ndarray

    def __post_init__(self):
        self.space._check_mask(self.domain)
        f = np.array(self.flags, dtype=bool)
        if f.shape != (self.space.n_atoms_of(self.domain),):
            raise DomainError("event flags shape does not match its domain")
        f.setflags(write=False)
        object.__setattr__(self, "flags", f)

    def indicator(self, on: int | None = None) -> np.ndarray:
        """Float indicator over the atoms of on (defaults to the full space)."""
        on = self.space.full if on is None else on
        if not subsets.is_subset(self.domain, on):
            raise DomainError("event domain must be inside the target mask")
        proj = self.space.atom_projection(on, self.domain)
        return self.flags[proj].astype(np.float64)

    def probability(self, d: Dist) -> float:
        if not subsets.is_subset(self.domain, d.domain):
            raise DomainError("event domain must be inside the distribution domain")
        proj = d.space.atom_projection(d.domain, self.domain)
        return float(d.weights[self.flags[proj]].sum())

    def complement(self) -> "Event":
        return Event(self.space, self.domain, ~self.flags)

    def intersect(self, other: "Event") -> "Event":
        if self.space != other.space:
            raise DomainError("events must share a space")
        dom = self.domain | other.domain
        a = self.flags[self.space.atom_projection(dom, self.domain)]
        b = other.flags[other.space.atom_projection(dom, other.domain)]
        return Event(self.space, dom, a & b)

    def essential(self) -> "Event":
        """Same event on the smallest mask its indicator depends on."""
        mask = self.domain
        flags = self.flags
        for t in subsets.indices_of(self.domain):
            sizes, _ = self.space._strides(mask)
            axis = subsets.indices_of(mask).index(t)
            shaped = flags.reshape(sizes)
            first = np.take(shaped, 0, axis=axis)
            if np.all(shaped == np.expand_dims(first, axis)):
                mask &= ~(1 << t)
                flags = first.reshape(-1)
        return Event(self.space, mask, flags)


def whole_space(space: FiniteProductSpace) -> Event:
    return Event(space, 0, np.array([True]))


def empty_event(space: FiniteProductSpace) -> Event:
    return Event(space, 0, np.array([False]))


def atom_event(space: FiniteProductSpace, at: Atom) -> Event:
    flags = np.zeros(space.n_atoms_of(at.mask), dtype=bool)
    flags[at.index] = True
    return Event(space, at.mask, flags)


def rectangle(space: FiniteProductSpace, allowed: Mapping[str, Iterable[str]]) -> Event:
    """Conjunction of per-component membership constraints."""
    items = sorted((space.index_of(n), set(v)) for n, v in allowed.items())
    mask = subsets.mask_of(t for t, _ in items)
    parts = []
    for t, labels in items:
        outs = space.components[t][1]
        unknown = labels - set(outs)
        if unknown:
            raise DomainError(f"component {space.components[t][0]!r} has no outcomes {sorted(unknown)}")
        parts.append((1 << t, np.array([o in labels for o in outs], dtype=np.float64)))
    if mask == 0:
        return whole_space(space)
    flags = product_weights(space, parts, mask) > 0.5
    return Event(space, mask, flags)


@dataclass(frozen=True, eq=False)
class Kernel:
    """Probability kernel from the sub-product over source into the space.

    matrix[i] is the row measure attached to atom i of the source product;
    rows are full-space weight vectors. Row validity (the Dist constructor
    rule) is enforced here; the Dirac-marginal determinism property is the
    business of validate_causal_space, so that broken inputs can be loaded
    and reported instead of crashing the loader.
    """

    space: FiniteProductSpace
    source: int
    matrix: np.ndarray

    def __post_init__(self):
        self.space._check_mask(self.source)
        m = np.array(self.matrix, dtype=np.float64)
        want = (self.space.n_atoms_of(self.source), self.space.n_atoms)
        if m.shape != want:
            raise DomainError(f"kernel matrix shape {m.shape}, expected {want}")
        if m.min(initial=0.0) < -NORM_TOL:
            raise DomainError(f"kernel row has negative weight {m.min()}")
        np.clip(m, 0.0, None, out=m)
        sums = m.sum(axis=1)
        off = np.abs(sums - 1.0)
        if off.max(initial=0.0) > RENORM_TOL:
            bad = int(np.argmax(off))
            raise DomainError(
                f"kernel row {bad} sums to {sums[bad]!r}, outside the 1e-6 window"
            )
        fix = off > NORM_TOL
        if fix.any():
            m[fix] /= sums[fix, None]
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def row(self, index: int) -> Dist:
        return Dist(self.space, self.space.full, self.matrix[index])

    def row_values(self, a: Event) -> np.ndarray:
        """k(atom, a) for every source atom, as one vector."""
        return self.matrix @ a.indicator()


def bind(q: Dist, k: Kernel) -> Dist:
    """Measure A -> sum_w q(w) k(w, A); q must live on the kernel source."""
    if q.space != k.space or q.domain != k.source:
        raise DomainError("bound measure must live on the kernel source")
    return Dist(q.space, q.space.full, q.weights @ k.matrix)


def conditional_kernel(d: Dist, mask: int) -> Kernel:
    """Kernel whose rows are d conditioned on each atom of the mask product.

    Requires d on the full space with strictly positive mass on every fiber
    (NullSetError otherwise); with that, bind(marginal(d, mask), result)
    reproduces d (law of total probability).
    """
    if d.domain != d.space.full:
        raise DomainError("conditional kernel needs a full-space distribution")
    d.space._check_mask(mask)
    n_rows = d.space.n_atoms_of(mask)
    proj = d.space.atom_projection(d.space.full, mask)
    onehot = proj[None, :] == np.arange(n_rows, dtype=np.intp)[:, None]
    masses = onehot @ d.weights
    if masses.min() <= NORM_TOL:
        bad = int(np.argmin(masses))
        raise NullSetError(f"fiber over atom {bad} of mask {mask:#b} has null mass")
    matrix = onehot * d.weights[None, :] / masses[:, None]
    return Kernel(d.space, mask, matrix)


def tv_distance(a: Dist, b: Dist) -> float:
    """Total variation distance between measures on the same domain."""
    if a.space != b.space or a.domain != b.domain:
        raise DomainError("total variation needs a shared domain")
    return 0.5 * float(np.abs(a.weights - b.weights).sum())
