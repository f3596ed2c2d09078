"""Witness vectors and projected dual systems for smallest-singular-value bounds.

Fix a distinguished column c of an invertible A (columns X_0..X_{n-1});
write H for the span of the other columns and P for the orthogonal
projection onto H.  The module computes

* the witness  x = X_c - P X_c,  whose norm is dist(X_c, H) and which
  certifies   s_n(A) <= ||x|| / ||A^{-1} x||;
* the projected duals  Y_k = P X_k*  (k != c), where X_k* are the rows
  of A^{-1}; these form a biorthogonal system with (X_k)_{k != c}
  inside H and satisfy  ||Y_k|| = 1 / dist(X_k, H_k),  H_k being the
  span of the columns other than c and k;
* the pair  a_k = |<Y_k/||Y_k||, X_c>|,  b_k = dist(X_k, H_k),  whose
  ratios bound the inverse image from below:
  ||A^{-1} x||^2 >= sum_k (a_k / b_k)^2.

audit() recomputes all of these along independent routes and reports
tolerance violations instead of crashing, so Monte Carlo sweeps can
log rare numerical trouble without dying mid-run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import GAUSSIAN, Ensemble, SeedSpec, sample_vector
from .errors import DegenerateGeometry, DimensionMismatch, InvalidDimension, SingularMatrix
from .linalg import (
    OrthonormalBasis,
    as_square,
    dist_to_subspace,
    lu_factorization,
    orthonormalize,
    project_onto,
    smallest_singular_value,
)

DEGENERATE_EPS = 1e-12
WITNESS_NORM_RTOL = 1e-8
KERNEL_RTOL = 1e-9
REDUCED_BIORTHO_TOL = 1e-8
NORM_DISTANCE_RTOL = 1e-6
LOWER_BOUND_TOL = 1e-8
UPPER_BOUND_RTOL = 1e-8


def _validated(a, column: int):
    m = as_square(a)
    n = m.shape[0]
    if n < 2:
        raise InvalidDimension(f"witness construction needs n >= 2, got n = {n}")
    if not 0 <= column < n:
        raise DimensionMismatch(f"column {column} out of range for n = {n}")
    others = [k for k in range(n) if k != column]
    return m, n, others


def _span_basis(cols: np.ndarray) -> OrthonormalBasis:
    # empty column sets span {0}
    if cols.shape[1] == 0:
        return OrthonormalBasis(ambient_dim=cols.shape[0], vectors=np.empty((0, cols.shape[0])))
    return orthonormalize(cols)


def construct_witness_vector(a, column: int = 0) -> np.ndarray:
    """x = X_c - P X_c; raises SingularMatrix when A fails the pivot test."""
    m, _, others = _validated(a, column)
    lu_factorization(m)  # invertibility gate only
    basis = orthonormalize(m[:, others])
    xc = m[:, column]
    return xc - project_onto(basis, xc)


@dataclass(frozen=True)
class _WitnessState:
    matrix: np.ndarray
    column: int
    others: list
    basis: OrthonormalBasis        # orthonormal basis of H
    witness: np.ndarray
    norm_x: float
    dual_rows: np.ndarray          # all rows of A^{-1}
    projected_duals: np.ndarray    # Y_k rows, k running over others
    ainv_x: np.ndarray


def _witness_state(a, column: int) -> _WitnessState:
    m, _, others = _validated(a, column)
    fac = lu_factorization(m)
    basis = orthonormalize(m[:, others])
    xc = m[:, column]
    x = xc - project_onto(basis, xc)
    duals = np.ascontiguousarray(fac.inverse())
    projected = (duals @ basis.vectors.T) @ basis.vectors
    return _WitnessState(
        matrix=m,
        column=column,
        others=others,
        basis=basis,
        witness=x,
        norm_x=float(np.linalg.norm(x)),
        dual_rows=duals,
        projected_duals=projected[others],
        ainv_x=fac.solve(x),
    )


def dual_projections(a, column: int = 0) -> np.ndarray:
    """Rows Y_k = P X_k* for k != column, in increasing k order."""
    return _witness_state(a, column).projected_duals


def _residual_distance(v: np.ndarray, cols: np.ndarray) -> float:
    return dist_to_subspace(v, _span_basis(cols))


def _ab_from_state(st: _WitnessState) -> tuple[np.ndarray, np.ndarray]:
    y_norms = np.linalg.norm(st.projected_duals, axis=1)
    if y_norms.size and y_norms.min() <= DEGENERATE_EPS:
        raise DegenerateGeometry(f"projected dual norm {y_norms.min():.3e} below trust threshold")
    xc = st.matrix[:, st.column]
    a_vals = np.abs(st.projected_duals @ xc) / y_norms
    b_vals = np.empty(len(st.others))
    for i, k in enumerate(st.others):
        cols = np.delete(st.matrix, [st.column, k], axis=1)
        b_vals[i] = _residual_distance(st.matrix[:, k], cols)
    if b_vals.size and b_vals.min() <= DEGENERATE_EPS:
        raise DegenerateGeometry(f"column distance {b_vals.min():.3e} below trust threshold")
    return a_vals, b_vals


def compute_ab(a, column: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(a_k, b_k) for k != column, ascending k.

    a_k is the normalized-dual alignment |<Y_k/||Y_k||, X_c>| and b_k the
    leave-two-out column distance; 1/||Y_k|| must reproduce b_k, which
    audit() verifies at NORM_DISTANCE_RTOL.
    """
    return _ab_from_state(_witness_state(a, column))


@dataclass(frozen=True)
class WitnessReport:
    """Everything audit() measured on one matrix, plus tolerance breaches."""

    n: int
    column: int
    norm_x: float
    ainv_x_norm: float
    implied_bound: float
    s_n: float
    ratio_sum_sq: float
    a_values: np.ndarray
    b_values: np.ndarray
    witness: np.ndarray
    violations: tuple[dict, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "column": self.column,
            "norm_x": self.norm_x,
            "ainv_x_norm": self.ainv_x_norm,
            "implied_bound": self.implied_bound,
            "s_n": self.s_n,
            "ratio_sum_sq": self.ratio_sum_sq,
            "a_values": [float(v) for v in self.a_values],
            "b_values": [float(v) for v in self.b_values],
            "witness": [float(v) for v in self.witness],
            "ok": self.ok,
            "violations": list(self.violations),
        }


def audit(a, column: int = 0) -> WitnessReport:
    """Run every witness-system consistency check on one matrix.

    Raises SingularMatrix / DegenerateGeometry on precondition failures;
    tolerance breaches go into WitnessReport.violations.
    """
    st = _witness_state(a, column)
    a_vals, b_vals = _ab_from_state(st)
    violations: list[dict] = []

    def check(name: str, observed: float, allowed: float):
        if observed > allowed:
            violations.append({"check": name, "observed": float(observed), "allowed": float(allowed)})

    dist_c = dist_to_subspace(st.matrix[:, st.column], st.basis)
    check("witness_norm_equals_distance", abs(st.norm_x - dist_c), WITNESS_NORM_RTOL * dist_c)

    # the distinguished dual spans the orthogonal complement of H, so its
    # projection onto H must vanish
    dual_c = st.dual_rows[st.column]
    kernel_resid = float(np.linalg.norm(project_onto(st.basis, dual_c)))
    check("kernel_annihilation", kernel_resid, KERNEL_RTOL * float(np.linalg.norm(dual_c)))

    gram = st.projected_duals @ st.matrix[:, st.others]
    gram_defect = float(np.abs(gram - np.eye(len(st.others))).max())
    check("reduced_biorthogonality", gram_defect, REDUCED_BIORTHO_TOL)

    y_norms = np.linalg.norm(st.projected_duals, axis=1)
    product_defect = float(np.abs(y_norms * b_vals - 1.0).max())
    check("dual_norm_distance_product", product_defect, NORM_DISTANCE_RTOL)

    ainv_x_norm = float(np.linalg.norm(st.ainv_x))
    ratio_sum_sq = float(np.sum((a_vals / b_vals) ** 2))
    shortfall = ratio_sum_sq - ainv_x_norm**2
    check("inverse_image_lower_bound", shortfall, LOWER_BOUND_TOL * (1.0 + ratio_sum_sq))

    s_n = smallest_singular_value(st.matrix)
    implied = st.norm_x / ainv_x_norm
    check("variational_upper_bound", s_n, implied * (1.0 + UPPER_BOUND_RTOL))

    return WitnessReport(
        n=st.matrix.shape[0],
        column=st.column,
        norm_x=st.norm_x,
        ainv_x_norm=ainv_x_norm,
        implied_bound=implied,
        s_n=s_n,
        ratio_sum_sq=ratio_sum_sq,
        a_values=a_vals,
        b_values=b_vals,
        witness=st.witness,
        violations=tuple(violations),
    )


@dataclass(frozen=True)
class IndependenceProbe:
    n: int
    trials: int
    completed: int
    singular_skipped: int
    max_deviation: float


def independence_probe(fixed_columns, trials: int, master_seed: int,
                       ensemble: Ensemble = GAUSSIAN, column: int = 0) -> IndependenceProbe:
    """Resample the distinguished column; the Y_k must not move.

    fixed_columns is (n, n-1): the columns that stay put.  Each trial t
    draws a fresh distinguished column from stream t of master_seed,
    rebuilds the matrix and recomputes the projected duals.
    max_deviation is the largest 2-norm change of any Y_k relative to
    the first nonsingular trial; functional independence from the
    distinguished column means it stays at rounding level (<= 1e-9).
    """
    cols = np.asarray(fixed_columns, dtype=np.float64)
    if cols.ndim != 2 or cols.shape[1] != cols.shape[0] - 1:
        raise DimensionMismatch(f"fixed_columns must be (n, n-1), got {cols.shape}")
    n = cols.shape[0]
    if not 0 <= column < n:
        raise DimensionMismatch(f"column {column} out of range for n = {n}")
    if trials < 1:
        raise ValueError("trials must be >= 1")

    reference = None
    max_dev = 0.0
    skipped = 0
    for t in range(trials):
        xc = sample_vector(ensemble, n, SeedSpec(master_seed, t))
        m = np.insert(cols, column, xc, axis=1)
        try:
            y = dual_projections(m, column)
        except SingularMatrix:
            skipped += 1
            continue
        if reference is None:
            reference = y
        else:
            dev = float(np.linalg.norm(y - reference, axis=1).max())
            max_dev = max(max_dev, dev)
    return IndependenceProbe(
        n=n,
        trials=trials,
        completed=trials - skipped,
        singular_skipped=skipped,
        max_deviation=max_dev,
    )
