"""Solver-agnostic integer program representation.

Models are built through :class:`ModelBuilder` and immutable once built.
Variables live in named blocks (``x[0] .. x[n-1]``) and constraints are
stored in CSR form, so models with a million rows stay cheap to construct.
Senses are ``"<="``, ``"="``, ``">="``; the objective sense is ``"min"`` or
``"max"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

CONTINUOUS = "continuous"
INTEGER = "integer"
BINARY = "binary"

_KINDS = (CONTINUOUS, INTEGER, BINARY)
_SENSES = ("<=", "=", ">=")


class ModelValidationError(ValueError):
    """Raised when a model violates a structural invariant."""


@dataclass(frozen=True)
class VarBlock:
    """A contiguous run of variables sharing a name prefix and kind."""

    name: str
    count: int
    lb: np.ndarray  # shape (count,)
    ub: np.ndarray
    kind: str
    offset: int  # flat index of the first variable

    def var_name(self, i: int) -> str:
        if self.count == 1:
            return self.name
        return f"{self.name}[{i}]"


@dataclass(frozen=True)
class Constraint:
    """One linear row, materialized on demand from the CSR store."""

    name: str
    indices: np.ndarray
    coefs: np.ndarray
    sense: str
    rhs: float


@dataclass(frozen=True)
class _NameSegment:
    prefix: str
    start: int  # first row covered
    count: int
    explicit: tuple[str, ...] | None = None  # explicit names when provided

    def name(self, row: int) -> str:
        if self.explicit is not None:
            return self.explicit[row - self.start]
        return f"{self.prefix}{row}"


@dataclass(frozen=True)
class IpModel:
    """Immutable integer program: variable blocks, CSR constraints, objective."""

    sense: str  # objective sense
    blocks: tuple[VarBlock, ...]
    num_vars: int
    lb: np.ndarray
    ub: np.ndarray
    integrality: np.ndarray  # 0 continuous, 1 integer (binaries are integer with [0,1] bounds)
    con_matrix: sparse.csr_matrix
    con_senses: np.ndarray  # array of "<=", "=", ">="
    con_rhs: np.ndarray
    name_segments: tuple[_NameSegment, ...]
    obj_coefs: np.ndarray
    obj_offset: float
    _name_to_flat: dict[str, int] = field(repr=False, default_factory=dict)

    @property
    def num_constraints(self) -> int:
        return self.con_matrix.shape[0]

    def var_names(self) -> list[str]:
        names: list[str] = []
        for b in self.blocks:
            names.extend(b.var_name(i) for i in range(b.count))
        return names

    def flat_index(self, name: str) -> int:
        if not self._name_to_flat:
            self._name_to_flat.update(
                (n, i) for i, n in enumerate(self.var_names())
            )
        return self._name_to_flat[name]

    def con_name(self, row: int) -> str:
        for seg in self.name_segments:
            if seg.start <= row < seg.start + seg.count:
                return seg.name(row)
        raise IndexError(row)

    def constraint(self, row: int) -> Constraint:
        m = self.con_matrix
        lo, hi = m.indptr[row], m.indptr[row + 1]
        return Constraint(
            name=self.con_name(row),
            indices=m.indices[lo:hi].copy(),
            coefs=m.data[lo:hi].copy(),
            sense=str(self.con_senses[row]),
            rhs=float(self.con_rhs[row]),
        )

    def constraints(self) -> Iterable[Constraint]:
        return (self.constraint(r) for r in range(self.num_constraints))

    def kind_of(self, flat: int) -> str:
        for b in self.blocks:
            if b.offset <= flat < b.offset + b.count:
                return b.kind
        raise IndexError(flat)

    def check_feasible(self, values: np.ndarray, tol: float = 1e-6) -> list[str]:
        """Names of constraints (and bounds) violated by ``values`` beyond tol."""
        bad: list[str] = []
        oob = (values < self.lb - tol) | (values > self.ub + tol)
        if oob.any():
            bad.extend(f"bounds:{i}" for i in np.nonzero(oob)[0])
        if self.num_constraints == 0:
            return bad
        lhs = self.con_matrix @ values
        le = self.con_senses == "<="
        ge = self.con_senses == ">="
        eq = self.con_senses == "="
        viol = np.zeros(self.num_constraints, dtype=bool)
        viol[le] = lhs[le] > self.con_rhs[le] + tol
        viol[ge] = lhs[ge] < self.con_rhs[ge] - tol
        viol[eq] = np.abs(lhs[eq] - self.con_rhs[eq]) > tol
        bad.extend(self.con_name(r) for r in np.nonzero(viol)[0])
        return bad


class ModelBuilder:
    """Accumulates variable blocks and constraint rows, then validates."""

    def __init__(self, sense: str = "min"):
        if sense not in ("min", "max"):
            raise ModelValidationError(f"objective sense must be min or max, got {sense!r}")
        self.sense = sense
        self._blocks: list[VarBlock] = []
        self._block_names: set[str] = set()
        self._n = 0
        # row segments, in insertion order; each is either
        # ("rows", idx_list, coef_list, senses, rhs, names) for one-by-one rows
        # or ("bulk", csr, senses_array, rhs_array, prefix)
        self._segments: list[tuple] = []
        self._nrows = 0
        self._obj_arrays: list[tuple[np.ndarray, np.ndarray]] = []
        self._obj_accum: list[tuple[np.ndarray, np.ndarray]] = []
        self._offset = 0.0

    @property
    def num_vars(self) -> int:
        return self._n

    def add_vars(
        self,
        name: str,
        count: int,
        lb: float | np.ndarray = 0.0,
        ub: float | np.ndarray = np.inf,
        kind: str = CONTINUOUS,
    ) -> np.ndarray:
        """Adds a block; returns the flat indices of its variables."""
        if kind not in _KINDS:
            raise ModelValidationError(f"unknown variable kind {kind!r} for block {name!r}")
        if count < 0:
            raise ModelValidationError(f"negative count for block {name!r}")
        if name in self._block_names:
            raise ModelValidationError(f"duplicate variable block {name!r}")
        lb_a = np.broadcast_to(np.asarray(lb, dtype=float), (count,)).copy()
        ub_a = np.broadcast_to(np.asarray(ub, dtype=float), (count,)).copy()
        if kind == BINARY:
            if np.any(lb_a < 0.0) or np.any(ub_a > 1.0):
                raise ModelValidationError(
                    f"binary block {name!r} has bounds outside [0, 1]"
                )
        if np.any(lb_a > ub_a):
            i = int(np.argmax(lb_a > ub_a))
            raise ModelValidationError(
                f"variable {name}[{i}] has lower bound {lb_a[i]} above upper bound {ub_a[i]}"
            )
        self._block_names.add(name)
        block = VarBlock(name, count, lb_a, ub_a, kind, self._n)
        self._blocks.append(block)
        self._n += count
        return np.arange(block.offset, block.offset + count)

    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf, kind: str = CONTINUOUS) -> int:
        return int(self.add_vars(name, 1, lb, ub, kind)[0])

    def add_constr(
        self,
        indices: Sequence[int] | np.ndarray,
        coefs: Sequence[float] | np.ndarray,
        sense: str,
        rhs: float,
        name: str | None = None,
    ) -> None:
        if sense not in _SENSES:
            raise ModelValidationError(f"unknown constraint sense {sense!r}")
        idx = np.asarray(indices, dtype=np.int64)
        cf = np.asarray(coefs, dtype=float)
        if idx.shape != cf.shape:
            raise ModelValidationError("indices and coefs must have equal length")
        nm = name if name is not None else f"c{self._nrows}"
        if self._segments and self._segments[-1][0] == "rows":
            _, idx_l, cf_l, sn_l, rhs_l, nm_l = self._segments[-1]
            idx_l.append(idx)
            cf_l.append(cf)
            sn_l.append(sense)
            rhs_l.append(float(rhs))
            nm_l.append(nm)
        else:
            self._segments.append(("rows", [idx], [cf], [sense], [float(rhs)], [nm]))
        self._nrows += 1

    def add_constr_rows(
        self,
        matrix: sparse.spmatrix,
        senses: Sequence[str] | str,
        rhs: Sequence[float] | np.ndarray,
        name_prefix: str = "c",
    ) -> None:
        """Bulk-append rows of a sparse matrix (columns indexed by flat var index)."""
        m = sparse.csr_matrix(matrix)
        rhs_a = np.asarray(rhs, dtype=float)
        if isinstance(senses, str):
            senses_a = np.array([senses] * m.shape[0], dtype=object)
        else:
            senses_a = np.array(list(senses), dtype=object)
        if m.shape[0] != senses_a.size or m.shape[0] != rhs_a.size:
            raise ModelValidationError("row count mismatch in add_constr_rows")
        for s in np.unique(senses_a.astype(str)):
            if s not in _SENSES:
                raise ModelValidationError(f"unknown constraint sense {s!r}")
        self._segments.append(("bulk", m, senses_a, rhs_a, name_prefix))
        self._nrows += m.shape[0]

    def add_objective_terms(
        self,
        indices: Sequence[int] | np.ndarray,
        coefs: Sequence[float] | np.ndarray,
        accumulate: bool = False,
    ) -> None:
        """Sets objective coefficients; ``accumulate=True`` adds onto any
        coefficient already set (the built model still carries one entry
        per variable)."""
        idx = np.asarray(indices, dtype=np.int64)
        cf = np.asarray(coefs, dtype=float)
        if accumulate:
            self._obj_accum.append((idx, cf))
        else:
            self._obj_arrays.append((idx, cf))

    def set_offset(self, offset: float) -> None:
        self._offset = float(offset)

    def _validate_no_duplicates(self, mat: sparse.csr_matrix, first_row: int) -> None:
        if mat.nnz == 0:
            return
        lens = np.diff(mat.indptr)
        row_of = np.repeat(np.arange(mat.shape[0], dtype=np.int64), lens)
        key = row_of * np.int64(max(self._n, 1)) + mat.indices
        if np.unique(key).size != key.size:
            key_sorted = np.sort(key)
            dup = key_sorted[np.argmax(key_sorted[1:] == key_sorted[:-1])]
            raise ModelValidationError(
                f"constraint row {first_row + int(dup // max(self._n, 1))} lists a variable twice"
            )

    def build(self) -> IpModel:
        n = self._n
        lb = np.concatenate([b.lb for b in self._blocks]) if self._blocks else np.zeros(0)
        ub = np.concatenate([b.ub for b in self._blocks]) if self._blocks else np.zeros(0)
        integrality = np.zeros(n, dtype=np.uint8)
        for b in self._blocks:
            if b.kind in (INTEGER, BINARY):
                integrality[b.offset : b.offset + b.count] = 1

        obj = np.zeros(n)
        if self._obj_arrays:
            all_idx = np.concatenate([idx for idx, _ in self._obj_arrays])
            if all_idx.size and (all_idx.min() < 0 or all_idx.max() >= n):
                raise ModelValidationError("objective references an undeclared variable index")
            if all_idx.size != np.unique(all_idx).size:
                raise ModelValidationError("objective has duplicate entries for a variable")
            for idx, cf in self._obj_arrays:
                obj[idx] = cf
        for idx, cf in self._obj_accum:
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ModelValidationError("objective references an undeclared variable index")
            np.add.at(obj, idx, cf)

        mats: list[sparse.csr_matrix] = []
        senses_parts: list[np.ndarray] = []
        rhs_parts: list[np.ndarray] = []
        segments: list[_NameSegment] = []
        row_cursor = 0
        for seg in self._segments:
            if seg[0] == "rows":
                _, idx_l, cf_l, sn_l, rhs_l, nm_l = seg
                lens = np.array([a.size for a in idx_l], dtype=np.int64)
                indptr = np.concatenate([[0], np.cumsum(lens)])
                indices = np.concatenate(idx_l) if lens.sum() else np.zeros(0, dtype=np.int64)
                data = np.concatenate(cf_l) if lens.sum() else np.zeros(0)
                if indices.size and (indices.min() < 0 or indices.max() >= n):
                    bad_pos = int(np.argmax((indices < 0) | (indices >= n)))
                    row = int(np.searchsorted(indptr, bad_pos, "right")) - 1
                    raise ModelValidationError(
                        f"constraint {nm_l[row]!r} references an undeclared variable"
                    )
                mat = sparse.csr_matrix((data, indices, indptr), shape=(len(idx_l), n))
                try:
                    self._validate_no_duplicates(mat, row_cursor)
                except ModelValidationError:
                    # re-raise with the row's declared name
                    lens2 = np.diff(mat.indptr)
                    row_of = np.repeat(np.arange(mat.shape[0]), lens2)
                    key = row_of * np.int64(max(n, 1)) + mat.indices
                    key_sorted = np.sort(key)
                    dup = key_sorted[np.argmax(key_sorted[1:] == key_sorted[:-1])]
                    raise ModelValidationError(
                        f"constraint {nm_l[int(dup // max(n, 1))]!r} lists a variable twice"
                    ) from None
                mats.append(mat)
                senses_parts.append(np.array(sn_l, dtype=object))
                rhs_parts.append(np.asarray(rhs_l, dtype=float))
                segments.append(
                    _NameSegment("", row_cursor, len(idx_l), explicit=tuple(nm_l))
                )
                row_cursor += len(idx_l)
            else:
                _, mat, senses_a, rhs_a, prefix = seg
                if mat.nnz and (mat.indices.min() < 0 or mat.indices.max() >= n):
                    raise ModelValidationError(
                        f"bulk constraint block {prefix!r} references an undeclared variable"
                    )
                self._validate_no_duplicates(mat, row_cursor)
                if mat.shape[1] != n:
                    # blocks added before later variable blocks widen to full width
                    mat = sparse.csr_matrix(
                        (mat.data, mat.indices, mat.indptr), shape=(mat.shape[0], n)
                    )
                mats.append(mat)
                senses_parts.append(senses_a)
                rhs_parts.append(rhs_a)
                segments.append(_NameSegment(prefix, row_cursor, mat.shape[0]))
                row_cursor += mat.shape[0]

        if mats:
            con = sparse.vstack(mats, format="csr")
            con_senses = np.concatenate(senses_parts)
            con_rhs = np.concatenate(rhs_parts)
        else:
            con = sparse.csr_matrix((0, n))
            con_senses = np.zeros(0, dtype=object)
            con_rhs = np.zeros(0)

        return IpModel(
            sense=self.sense,
            blocks=tuple(self._blocks),
            num_vars=n,
            lb=lb,
            ub=ub,
            integrality=integrality,
            con_matrix=con,
            con_senses=con_senses,
            con_rhs=con_rhs,
            name_segments=tuple(segments),
            obj_coefs=obj,
            obj_offset=self._offset,
        )
