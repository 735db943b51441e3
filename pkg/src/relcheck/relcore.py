"""Finite binary relations over enumerable state spaces.

A :class:`StateSpace` is an ordered list of integer-ranged variables.  States
are numbered by a mixed-radix encoding in declaration order with the last
variable varying fastest, so ``index`` is a bijection onto ``range(size)``.

A :class:`Relation` is a set of ``(index(s), index(s'))`` pairs.  It is backed
either by a dense ``N x N`` boolean matrix (when ``N**2`` fits the dense
budget) or by a sorted array of pair keys ``i * N + j``.  The two backings are
extensionally interchangeable: every operation gives the same pair set
whichever one its operands use.  All values are immutable once built.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CapExceededError, ParseError, SpaceMismatchError, StateSpaceError

DEFAULT_CAP = 1 << 16
DENSE_BUDGET = 1 << 26
# state indices are int64
MAX_STATES = (1 << 63) - 1
# pair keys i * N + j must also fit int64
MAX_RELATION_STATES = (1 << 31) - 1
# refuse to materialize complements/universal relations beyond this many pairs
MAX_PAIRS = 1 << 30

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Variable:
    name: str
    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def __str__(self):
        return f"{self.name} : {self.lo}..{self.hi}"


class StateSpace:
    """Cartesian product of integer ranges, one per named variable."""

    def __init__(self, variables: Iterable, name: str = "S"):
        vs = []
        for v in variables:
            if not isinstance(v, Variable):
                v = Variable(*v)
            vs.append(Variable(str(v.name), int(v.lo), int(v.hi)))
        seen = set()
        for v in vs:
            if not _IDENT.match(v.name):
                raise StateSpaceError(f"invalid variable name {v.name!r}")
            if v.name in seen:
                raise StateSpaceError(f"duplicate variable {v.name!r} in space {name}")
            if v.lo > v.hi:
                raise StateSpaceError(f"empty range {v.lo}..{v.hi} for variable {v.name!r}")
            seen.add(v.name)
        self.name = name
        self.variables = tuple(vs)
        self.names = tuple(v.name for v in vs)
        self.radices = tuple(v.size for v in vs)
        self.size = math.prod(self.radices)
        if self.size > MAX_STATES:
            raise StateSpaceError(
                f"space {name} has {self.size} states, more than the 64-bit index type holds"
            )
        strides = []
        acc = 1
        for r in reversed(self.radices):
            strides.append(acc)
            acc *= r
        self.strides = tuple(reversed(strides))
        self._pos = {n: i for i, n in enumerate(self.names)}
        self._arrays = None

    # identity is structural; the name is only a label for diagnostics
    def __eq__(self, other):
        return isinstance(other, StateSpace) and self.variables == other.variables

    def __hash__(self):
        return hash(self.variables)

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"StateSpace({self.describe()})"

    def describe(self) -> str:
        body = ", ".join(f"{v.name}:{v.lo}..{v.hi}" for v in self.variables)
        return f"{self.name}({body})"

    def __contains__(self, name):
        return name in self._pos

    def var(self, name: str) -> Variable:
        try:
            return self.variables[self._pos[name]]
        except KeyError:
            raise StateSpaceError(f"space {self.name} has no variable {name!r}") from None

    def position(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise StateSpaceError(f"space {self.name} has no variable {name!r}") from None

    def extend(self, variables: Iterable, name: str | None = None) -> "StateSpace":
        extra = [v if isinstance(v, Variable) else Variable(*v) for v in variables]
        for v in extra:
            if v.name in self._pos:
                raise StateSpaceError(f"{v.name!r} shadows a variable of space {self.name}")
        return StateSpace(self.variables + tuple(extra), name or self.name)

    def check_cap(self, cap: int = DEFAULT_CAP, what: str | None = None):
        if self.size > cap:
            raise CapExceededError(
                f"{what or 'space ' + self.describe()} has {self.size} states, above the "
                f"exhaustive cap of {cap}; raise the cap or use oracle mode",
                size=self.size,
                cap=cap,
            )

    # -- encoding -----------------------------------------------------------

    def index(self, values: Sequence[int]) -> int:
        if len(values) != len(self.variables):
            raise StateSpaceError(
                f"expected {len(self.variables)} values for space {self.name}, got {len(values)}"
            )
        idx = 0
        for v, x, stride in zip(self.variables, values, self.strides):
            if not v.lo <= x <= v.hi:
                raise StateSpaceError(f"value {x} outside {v}")
            idx += (x - v.lo) * stride
        return idx

    def values(self, index: int) -> tuple:
        if not 0 <= index < self.size:
            raise StateSpaceError(f"state index {index} outside space {self.name}")
        out = []
        for v, stride, radix in zip(self.variables, self.strides, self.radices):
            out.append(v.lo + (index // stride) % radix)
        return tuple(out)

    def state(self, *values, **named) -> "State":
        if named:
            if values:
                raise TypeError("give values positionally or by name, not both")
            missing = [n for n in self.names if n not in named]
            extra = [n for n in named if n not in self._pos]
            if missing or extra:
                raise StateSpaceError(
                    f"state for {self.name} needs exactly {list(self.names)}; "
                    f"missing {missing}, unknown {extra}"
                )
            values = tuple(named[n] for n in self.names)
        elif len(values) == 1 and isinstance(values[0], (tuple, list)):
            values = tuple(values[0])
        values = tuple(int(x) for x in values)
        self.index(values)  # validates
        return State(self, values)

    def state_at(self, index: int) -> "State":
        return State(self, self.values(int(index)))

    def states(self) -> Iterator["State"]:
        for i in range(self.size):
            yield self.state_at(i)

    def indices_of(self, values: np.ndarray) -> np.ndarray:
        """Vectorized ``index`` over an ``(M, k)`` array of in-range values."""
        values = np.asarray(values, dtype=np.int64).reshape(-1, len(self.variables))
        idx = np.zeros(values.shape[0], dtype=np.int64)
        for j, (v, stride) in enumerate(zip(self.variables, self.strides)):
            col = values[:, j]
            if col.size and (col.min() < v.lo or col.max() > v.hi):
                raise StateSpaceError(f"values outside {v}")
            idx += (col - v.lo) * stride
        return idx

    def values_of(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.int64)
        out = np.empty((indices.shape[0], len(self.variables)), dtype=np.int64)
        for j, (v, stride, radix) in enumerate(zip(self.variables, self.strides, self.radices)):
            out[:, j] = v.lo + (indices // stride) % radix
        return out

    def value_arrays(self) -> dict:
        """Per-variable value arrays over every state, in index order."""
        if self._arrays is None:
            self.check_cap(MAX_RELATION_STATES, "value arrays for " + self.describe())
            idx = np.arange(self.size, dtype=np.int64)
            arrays = {}
            for v, stride, radix in zip(self.variables, self.strides, self.radices):
                a = v.lo + (idx // stride) % radix
                a.flags.writeable = False
                arrays[v.name] = a
            self._arrays = arrays
        return self._arrays

    def format_values(self, values: Sequence[int]) -> str:
        return "(" + ",".join(str(int(x)) for x in values) + ")"


@dataclass(frozen=True)
class State:
    space: StateSpace
    values: tuple

    def __getitem__(self, name):
        return self.values[self.space.position(name)]

    @property
    def index(self) -> int:
        return self.space.index(self.values)

    def as_dict(self) -> dict:
        return dict(zip(self.space.names, self.values))

    def replace(self, **changes) -> "State":
        d = self.as_dict()
        d.update(changes)
        return self.space.state(**d)

    def __str__(self):
        return self.space.format_values(self.values)

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.as_dict().items())
        return f"State({inner})"


def _check_same(a, b):
    if a.space != b.space:
        raise SpaceMismatchError(a.space, b.space)


def _readonly(arr):
    arr.flags.writeable = False
    return arr


class StateSet:
    """A set of states of one space, kept as sorted unique indices."""

    __slots__ = ("space", "_idx")

    def __init__(self, space: StateSpace, indices=()):
        idx = np.unique(np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices,
                                   dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= space.size):
            raise StateSpaceError(f"state index outside space {space.name}")
        self.space = space
        self._idx = _readonly(idx)

    @classmethod
    def _trusted(cls, space, idx):
        obj = cls.__new__(cls)
        obj.space = space
        obj._idx = _readonly(np.asarray(idx, dtype=np.int64))
        return obj

    @classmethod
    def from_states(cls, space, states: Iterable) -> "StateSet":
        out = []
        for s in states:
            if isinstance(s, State):
                if s.space != space:
                    raise SpaceMismatchError(s.space, space)
                out.append(s.index)
            else:
                out.append(space.index(tuple(s) if not isinstance(s, int) else (s,)))
        return cls(space, out)

    @classmethod
    def from_mask(cls, space, mask) -> "StateSet":
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (space.size,):
            raise StateSpaceError("mask length does not match the space")
        return cls._trusted(space, np.flatnonzero(mask))

    @classmethod
    def full(cls, space) -> "StateSet":
        return cls._trusted(space, np.arange(space.size, dtype=np.int64))

    @classmethod
    def empty(cls, space) -> "StateSet":
        return cls._trusted(space, np.empty(0, dtype=np.int64))

    @property
    def indices(self) -> np.ndarray:
        return self._idx

    def __len__(self):
        return int(self._idx.size)

    def __bool__(self):
        return self._idx.size > 0

    def __iter__(self) -> Iterator[State]:
        for i in self._idx:
            yield self.space.state_at(int(i))

    def __contains__(self, item):
        if isinstance(item, State):
            if item.space != self.space:
                return False
            item = item.index
        i = np.searchsorted(self._idx, item)
        return bool(i < self._idx.size and self._idx[i] == item)

    def __eq__(self, other):
        return (
            isinstance(other, StateSet)
            and self.space == other.space
            and np.array_equal(self._idx, other._idx)
        )

    def __hash__(self):
        return hash((self.space, self._idx.tobytes()))

    def __repr__(self):
        return f"StateSet({self.describe()})"

    def mask(self) -> np.ndarray:
        m = np.zeros(self.space.size, dtype=bool)
        m[self._idx] = True
        return m

    def union(self, other) -> "StateSet":
        _check_same(self, other)
        return StateSet._trusted(self.space, np.union1d(self._idx, other._idx))

    def intersection(self, other) -> "StateSet":
        _check_same(self, other)
        return StateSet._trusted(
            self.space, np.intersect1d(self._idx, other._idx, assume_unique=True)
        )

    def difference(self, other) -> "StateSet":
        _check_same(self, other)
        return StateSet._trusted(
            self.space, np.setdiff1d(self._idx, other._idx, assume_unique=True)
        )

    def complement(self) -> "StateSet":
        return StateSet.full(self.space).difference(self)

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def issubset(self, other) -> bool:
        _check_same(self, other)
        return bool(np.isin(self._idx, other._idx, assume_unique=True).all())

    def __le__(self, other):
        return self.issubset(other)

    def __lt__(self, other):
        return self.issubset(other) and len(self) < len(other)

    def __ge__(self, other):
        return other.issubset(self)

    def __gt__(self, other):
        return other < self

    def least(self) -> State | None:
        return self.space.state_at(int(self._idx[0])) if self._idx.size else None

    def vector(self) -> "Relation":
        """The relation ``A x S``."""
        return Relation.vector(self)

    def monotype(self) -> "Relation":
        """The sub-identity ``I(A)``."""
        return Relation.monotype(self)

    def describe(self, limit: int | None = None) -> str:
        shown = self._idx if limit is None else self._idx[:limit]
        if len(self.space.variables) == 1:
            lo = self.space.variables[0].lo
            items = [str(int(i) + lo) for i in shown]
        else:
            items = [self.space.format_values(self.space.values(int(i))) for i in shown]
        more = "" if limit is None or self._idx.size <= limit else ", ..."
        return "{" + ", ".join(items) + more + "}"


class Relation:
    """A subset of ``S x S`` for one :class:`StateSpace`."""

    __slots__ = ("space", "_dense", "_keys")

    def __init__(self, space: StateSpace, *, dense=None, keys=None):
        if (dense is None) == (keys is None):
            raise ValueError("exactly one of dense= or keys= is required")
        if space.size > MAX_RELATION_STATES:
            raise CapExceededError(
                f"relations on {space.describe()} ({space.size} states) do not fit the pair index",
                size=space.size,
                cap=MAX_RELATION_STATES,
            )
        self.space = space
        self._dense = None if dense is None else _readonly(np.asarray(dense, dtype=bool))
        self._keys = None if keys is None else _readonly(np.asarray(keys, dtype=np.int64))

    # -- construction -------------------------------------------------------

    @staticmethod
    def prefers_dense(space) -> bool:
        return space.size * space.size <= DENSE_BUDGET

    @classmethod
    def _build(cls, space, keys, dense=None) -> "Relation":
        """Wrap sorted unique keys, choosing the backing by policy unless forced."""
        if dense is None:
            dense = cls.prefers_dense(space)
        if dense:
            n = space.size
            m = np.zeros(n * n, dtype=bool)
            m[keys] = True
            return cls(space, dense=m.reshape(n, n))
        return cls(space, keys=keys)

    @classmethod
    def from_keys(cls, space, keys, dense=None) -> "Relation":
        keys = np.unique(np.asarray(keys, dtype=np.int64))
        n = space.size
        if keys.size and (keys[0] < 0 or keys[-1] >= n * n):
            raise StateSpaceError(f"pair index outside space {space.name}")
        return cls._build(space, keys, dense)

    @classmethod
    def from_pairs(cls, space, pairs: Iterable, dense=None) -> "Relation":
        """Pairs may be index pairs, ``State`` pairs, or value-tuple pairs."""
        n = space.size
        keys = []
        for a, b in pairs:
            keys.append(_as_index(space, a) * n + _as_index(space, b))
        return cls.from_keys(space, keys, dense)

    @classmethod
    def from_matrix(cls, space, matrix, dense=None) -> "Relation":
        m = np.asarray(matrix, dtype=bool)
        if m.shape != (space.size, space.size):
            raise StateSpaceError("matrix shape does not match the space")
        if dense is None:
            dense = cls.prefers_dense(space)
        if dense:
            return cls(space, dense=m.copy())
        return cls(space, keys=np.flatnonzero(m).astype(np.int64))

    @classmethod
    def empty(cls, space, dense=None) -> "Relation":
        return cls._build(space, np.empty(0, dtype=np.int64), dense)

    @classmethod
    def identity(cls, space, dense=None) -> "Relation":
        n = space.size
        return cls._build(space, np.arange(n, dtype=np.int64) * (n + 1), dense)

    @classmethod
    def universal(cls, space, dense=None) -> "Relation":
        n = space.size
        if dense is None:
            dense = cls.prefers_dense(space)
        if dense:
            return cls(space, dense=np.ones((n, n), dtype=bool))
        _guard_pairs(space, n * n, "universal relation")
        return cls(space, keys=np.arange(n * n, dtype=np.int64))

    @classmethod
    def vector(cls, states: StateSet, dense=None) -> "Relation":
        space = states.space
        n = space.size
        if dense is None:
            dense = cls.prefers_dense(space)
        if dense:
            m = np.zeros((n, n), dtype=bool)
            m[states.indices, :] = True
            return cls(space, dense=m)
        _guard_pairs(space, len(states) * n, "vector")
        keys = (states.indices[:, None] * n + np.arange(n, dtype=np.int64)[None, :]).ravel()
        return cls(space, keys=keys)

    @classmethod
    def monotype(cls, states: StateSet, dense=None) -> "Relation":
        n = states.space.size
        return cls._build(states.space, states.indices * (n + 1), dense)

    # -- views --------------------------------------------------------------

    @property
    def is_dense(self) -> bool:
        return self._dense is not None

    def keys(self) -> np.ndarray:
        """Sorted pair keys ``i * N + j``."""
        if self._keys is not None:
            return self._keys
        return np.flatnonzero(self._dense).astype(np.int64)

    def matrix(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense
        n = self.space.size
        _guard_pairs(self.space, n * n, "dense matrix")
        m = np.zeros(n * n, dtype=bool)
        m[self._keys] = True
        return m.reshape(n, n)

    def as_dense(self) -> "Relation":
        return self if self._dense is not None else Relation(self.space, dense=self.matrix())

    def as_sparse(self) -> "Relation":
        return self if self._keys is not None else Relation(self.space, keys=self.keys())

    def _csr(self):
        n = self.space.size
        keys = self.keys()
        rows = keys // n
        cols = keys % n
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return sp.csr_array((np.ones(keys.size, dtype=bool), cols, indptr), shape=(n, n))

    def _same_kind(self, other, keys) -> "Relation":
        dense = self._dense is not None and (other is None or other._dense is not None)
        return Relation._build(self.space, keys, dense)

    def pairs(self) -> Iterator[tuple]:
        """Index pairs in canonical order."""
        n = self.space.size
        for k in self.keys():
            yield (int(k) // n, int(k) % n)

    def state_pairs(self) -> Iterator[tuple]:
        for i, j in self.pairs():
            yield self.space.state_at(i), self.space.state_at(j)

    def images(self, state) -> StateSet:
        i = _as_index(self.space, state)
        n = self.space.size
        if self._dense is not None:
            return StateSet._trusted(self.space, np.flatnonzero(self._dense[i]))
        lo, hi = np.searchsorted(self._keys, [i * n, (i + 1) * n])
        return StateSet._trusted(self.space, self._keys[lo:hi] - i * n)

    def __len__(self):
        if self._dense is not None:
            return int(np.count_nonzero(self._dense))
        return int(self._keys.size)

    def __bool__(self):
        return len(self) > 0

    def __contains__(self, pair):
        a, b = pair
        i, j = _as_index(self.space, a), _as_index(self.space, b)
        if self._dense is not None:
            return bool(self._dense[i, j])
        k = i * self.space.size + j
        pos = np.searchsorted(self._keys, k)
        return bool(pos < self._keys.size and self._keys[pos] == k)

    def __eq__(self, other):
        if not isinstance(other, Relation) or self.space != other.space:
            return False
        if self._dense is not None and other._dense is not None:
            return bool(np.array_equal(self._dense, other._dense))
        return bool(np.array_equal(self.keys(), other.keys()))

    def __hash__(self):
        return hash((self.space, self.keys().tobytes()))

    def __repr__(self):
        return f"Relation({self.space.name}, {len(self)} pairs)"

    # -- set operations -----------------------------------------------------

    def union(self, other) -> "Relation":
        _check_same(self, other)
        if self._dense is not None and other._dense is not None:
            return Relation(self.space, dense=self._dense | other._dense)
        return self._same_kind(other, np.union1d(self.keys(), other.keys()))

    def intersection(self, other) -> "Relation":
        _check_same(self, other)
        if self._dense is not None and other._dense is not None:
            return Relation(self.space, dense=self._dense & other._dense)
        return self._same_kind(
            other, np.intersect1d(self.keys(), other.keys(), assume_unique=True)
        )

    def difference(self, other) -> "Relation":
        _check_same(self, other)
        if self._dense is not None and other._dense is not None:
            return Relation(self.space, dense=self._dense & ~other._dense)
        return self._same_kind(
            other, np.setdiff1d(self.keys(), other.keys(), assume_unique=True)
        )

    def complement(self) -> "Relation":
        """``L \\ self``."""
        if self._dense is not None:
            return Relation(self.space, dense=~self._dense)
        n = self.space.size
        _guard_pairs(self.space, n * n - len(self), "complement")
        full = np.arange(n * n, dtype=np.int64)
        return Relation(self.space, keys=np.setdiff1d(full, self._keys, assume_unique=True))

    def issubset(self, other) -> bool:
        _check_same(self, other)
        if self._dense is not None and other._dense is not None:
            return not bool((self._dense & ~other._dense).any())
        return bool(np.isin(self.keys(), other.keys(), assume_unique=True).all())

    __or__ = union
    __and__ = intersection
    __sub__ = difference
    __invert__ = complement

    def __le__(self, other):
        return self.issubset(other)

    def __ge__(self, other):
        return other.issubset(self)

    # -- relational operations ----------------------------------------------

    def compose(self, other) -> "Relation":
        """``{(s, s') | exists t: (s, t) in self and (t, s') in other}``."""
        _check_same(self, other)
        prod = self._csr() @ other._csr()
        return self._same_kind(other, _csr_keys(prod, self.space.size))

    __matmul__ = compose

    def converse(self) -> "Relation":
        if self._dense is not None:
            return Relation(self.space, dense=self._dense.T.copy())
        n = self.space.size
        return Relation(self.space, keys=np.sort((self._keys % n) * n + self._keys // n))

    def rt_closure(self) -> "Relation":
        """Least reflexive-transitive relation containing ``self``.

        Semi-naive fixpoint: each round composes only the pairs found in the
        previous round, so the loop ends after at most ``|S|`` rounds.
        """
        n = self.space.size
        step = self._csr()
        acc = np.union1d(np.arange(n, dtype=np.int64) * (n + 1), self.keys())
        frontier = self.keys()
        rounds = 0
        while frontier.size:
            rounds += 1
            if rounds > n:
                raise AssertionError("closure failed to stabilize")
            fr = Relation(self.space, keys=frontier)._csr()
            new = _csr_keys(fr @ step, n)
            frontier = np.setdiff1d(new, acc, assume_unique=True)
            if frontier.size:
                acc = np.union1d(acc, frontier)
        return self._same_kind(None, acc)

    def domain(self) -> StateSet:
        if self._dense is not None:
            return StateSet._trusted(self.space, np.flatnonzero(self._dense.any(axis=1)))
        return StateSet._trusted(self.space, np.unique(self._keys // self.space.size))

    def range(self) -> StateSet:
        if self._dense is not None:
            return StateSet._trusted(self.space, np.flatnonzero(self._dense.any(axis=0)))
        return StateSet._trusted(self.space, np.unique(self._keys % self.space.size))

    def is_deterministic(self) -> bool:
        if self._dense is not None:
            return bool((self._dense.sum(axis=1) <= 1).all())
        rows = self._keys // self.space.size
        return bool((np.diff(rows) > 0).all())

    def restrict_domain(self, states: StateSet) -> "Relation":
        """``I(A) o self``, equivalently ``(A x S) & self``."""
        _check_same(self, states)
        mask = states.mask()
        if self._dense is not None:
            return Relation(self.space, dense=self._dense & mask[:, None])
        return Relation(self.space, keys=self._keys[mask[self._keys // self.space.size]])

    def restrict_range(self, states: StateSet) -> "Relation":
        """``self o I(A)``, equivalently ``self & converse(A x S)``."""
        _check_same(self, states)
        mask = states.mask()
        if self._dense is not None:
            return Relation(self.space, dense=self._dense & mask[None, :])
        return Relation(self.space, keys=self._keys[mask[self._keys % self.space.size]])

    def least_pair(self) -> tuple | None:
        keys = self.keys()
        if not keys.size:
            return None
        n = self.space.size
        return (int(keys[0]) // n, int(keys[0]) % n)

    # -- serialization -------------------------------------------------------

    def format_pair(self, pair) -> str:
        i, j = pair
        sp_ = self.space
        return f"{sp_.format_values(sp_.values(i))} -> {sp_.format_values(sp_.values(j))}"

    def to_literal(self) -> str:
        lines = [f"space {self.space.name}"]
        lines.extend(self.format_pair(p) for p in self.pairs())
        return "\n".join(lines) + "\n"


def _csr_keys(m, n) -> np.ndarray:
    m = m.tocoo()
    keep = m.data.astype(bool)
    keys = m.row[keep].astype(np.int64) * n + m.col[keep].astype(np.int64)
    keys.sort()
    return keys


def _guard_pairs(space, count, what):
    if count > MAX_PAIRS:
        raise CapExceededError(
            f"{what} on {space.describe()} would hold {count} pairs", size=count, cap=MAX_PAIRS
        )


def _as_index(space, item) -> int:
    if isinstance(item, State):
        if item.space != space:
            raise SpaceMismatchError(item.space, space)
        return item.index
    if isinstance(item, (tuple, list)):
        return space.index(tuple(item))
    i = int(item)
    if not 0 <= i < space.size:
        raise StateSpaceError(f"state index {i} outside space {space.name}")
    return i


# Function-style aliases for the core operators.

def union(a, b):
    return a.union(b)


def intersection(a, b):
    return a.intersection(b)


def difference(a, b):
    return a.difference(b)


def complement(a):
    return a.complement()


def compose(a, b):
    return a.compose(b)


def converse(a):
    return a.converse()


def rt_closure(a):
    return a.rt_closure()


def domain(a):
    return a.domain()


def codomain(a):
    return a.range()


def is_deterministic(a):
    return a.is_deterministic()


def vector(states):
    return Relation.vector(states)


def monotype(states):
    return Relation.monotype(states)


# -- relation literal files ------------------------------------------------

_TUPLE = r"\(\s*-?\d+(?:\s*,\s*-?\d+)*\s*\)|-?\d+"
_PAIR_LINE = re.compile(rf"\s*({_TUPLE})\s*->\s*({_TUPLE})\s*\Z")
_HEADER = re.compile(r"\s*space\s+([A-Za-z_][A-Za-z0-9_]*)\s*\Z")


def _parse_tuple(text):
    text = text.strip()
    if text.startswith("("):
        text = text[1:-1]
    return tuple(int(t) for t in text.split(","))


def relation_space_name(text: str) -> str | None:
    """The space named in a relation literal's header, if any."""
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            m = _HEADER.match(line)
            return m.group(1) if m else None
    return None


def parse_relation(text: str, space, source: str | None = None, dense=None) -> Relation:
    """Parse a relation literal.

    ``space`` is a :class:`StateSpace` or a mapping from space names to spaces.
    """
    header = None
    pairs = []
    resolved = space if isinstance(space, StateSpace) else None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if header is None:
            m = _HEADER.match(line)
            if not m:
                raise ParseError("expected 'space <name>' header", lineno, 1, source)
            header = m.group(1)
            if resolved is None:
                if not isinstance(space, Mapping) or header not in space:
                    raise ParseError(f"unknown space {header!r}", lineno, 1, source)
                resolved = space[header]
            continue
        m = _PAIR_LINE.match(line)
        if not m:
            col = len(line) - len(line.lstrip()) + 1
            raise ParseError("expected '(v1,...,vk) -> (v1,...,vk)'", lineno, col, source)
        a, b = _parse_tuple(m.group(1)), _parse_tuple(m.group(2))
        for t, g in ((a, 1), (b, 2)):
            if len(t) != len(resolved.variables):
                raise ParseError(
                    f"tuple has {len(t)} values, space {resolved.name} has "
                    f"{len(resolved.variables)} variables",
                    lineno,
                    m.start(g) + 1,
                    source,
                )
        try:
            pairs.append((resolved.index(a), resolved.index(b)))
        except StateSpaceError as e:
            raise ParseError(str(e), lineno, m.start(1) + 1, source) from None
    if header is None:
        raise ParseError("empty relation file: missing 'space <name>' header", 1, 1, source)
    return Relation.from_pairs(resolved, pairs, dense=dense)
