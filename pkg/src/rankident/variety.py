"""Zero-dimensionality, degree and (diagnostic) numeric solutions of instantiated systems."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from gmpy2 import mpq

from .groebner import GroebnerBasis, GroebnerTimeout, Limits, groebner
from .polyarith import GREVLEX, MonomialOrder, Polynomial, StructuralError, rat

log = logging.getLogger(__name__)

__all__ = [
    "VarietySummary",
    "NumericSolution",
    "SolveConfig",
    "NumericSolveError",
    "is_zero_dimensional",
    "standard_monomials",
    "degree",
    "summarize",
    "analyze",
    "permute_variables",
    "reverse_variables",
    "instance_basis",
    "verify_exact_solution",
    "multiplication_matrices",
    "solve_numeric",
]


@dataclass(frozen=True)
class VarietySummary:
    zero_dimensional: bool
    degree: int | None = None
    standard_monomials: tuple | None = None


@dataclass(frozen=True)
class NumericSolution:
    assignment: dict
    residual: float


@dataclass(frozen=True)
class SolveConfig:
    tolerance: float = 1e-9
    max_iterations: int = 500
    cluster_tol: float = 1e-6
    max_seconds: float | None = 600.0   # budget for the basis when none is supplied


class NumericSolveError(RuntimeError):
    """Back-substitution or root finding failed; see the message for advice."""


def _require_instantiated(gb: GroebnerBasis):
    if gb.ring.is_parametric:
        raise StructuralError("dimension/degree need an instantiated system (no parameter block)")


def is_zero_dimensional(gb: GroebnerBasis) -> bool:
    """Every variable has a pure power among the leading monomials."""
    _require_instantiated(gb)
    lms = gb.leading_monomials()
    covered = [False] * gb.ring.arity
    for m in lms:
        support = [i for i, e in enumerate(m) if e]
        if len(support) == 0:
            return True  # unit ideal: empty variety
        if len(support) == 1:
            covered[support[0]] = True
    return all(covered)


def standard_monomials(gb: GroebnerBasis) -> list[tuple]:
    """Monomials outside the leading-term ideal (breadth-first over the staircase)."""
    if not is_zero_dimensional(gb):
        raise StructuralError("positive-dimensional ideal has infinitely many standard monomials")
    lms = gb.leading_monomials()
    n = gb.ring.arity

    def standard(m):
        return not any(all(a >= b for a, b in zip(m, lm)) for lm in lms)

    start = (0,) * n
    if not standard(start):
        return []
    seen = {start}
    queue = deque([start])
    out = []
    while queue:
        m = queue.popleft()
        out.append(m)
        for i in range(n):
            nm = m[:i] + (m[i] + 1,) + m[i + 1:]
            if nm not in seen and standard(nm):
                seen.add(nm)
                queue.append(nm)
    key = gb.order.key(gb.ring)
    out.sort(key=key)
    return out


def degree(gb: GroebnerBasis) -> int:
    return len(standard_monomials(gb))


def summarize(gb: GroebnerBasis, keep_monomials: bool = False) -> VarietySummary:
    if not is_zero_dimensional(gb):
        return VarietySummary(False)
    std = standard_monomials(gb)
    return VarietySummary(True, len(std), tuple(std) if keep_monomials else None)


def analyze(system: Sequence[Polynomial], order: MonomialOrder = GREVLEX, limits: Limits | None = None):
    """GB + summary in one call; returns ``(gb_or_timeout, summary_or_None)``."""
    gb = groebner(system, order, limits)
    if isinstance(gb, GroebnerTimeout):
        return gb, None
    return gb, summarize(gb)


def permute_variables(system: Sequence[Polynomial], names: Sequence[str]) -> list[Polynomial]:
    """The same polynomials over a ring whose variables are ``names`` (a permutation)."""
    system = list(system)
    if not system:
        return []
    ring = system[0].ring
    if ring.is_parametric:
        raise StructuralError("variable permutation is only for instantiated systems")
    names = tuple(names)
    if sorted(names) != sorted(ring.names):
        raise StructuralError(f"{names} is not a permutation of {ring.names}")
    idx = [ring.names.index(v) for v in names]
    new = type(ring)(names)
    return [Polynomial._raw(new, {tuple(m[i] for i in idx): c for m, c in f.terms.items()}) for f in system]


def reverse_variables(system: Sequence[Polynomial]) -> list[Polynomial]:
    """The same polynomials over the ring with its variable order reversed.

    Dimension and degree do not depend on the variable order, but Buchberger
    run times do: on the mixture systems grevlex with the auxiliary variables
    ranked highest is several times faster than the generator order.
    """
    system = list(system)
    return permute_variables(system, system[0].ring.names[::-1]) if system else []


def instance_basis(system: Sequence[Polynomial], limits: Limits | None = None, engine: str = "auto",
                   exact_seconds: float = 60.0, reverse: bool = True):
    """Grevlex basis of an instantiated system for dimension/degree purposes.

    With ``reverse`` the basis lives in the reversed ring (see
    :func:`reverse_variables`); only use it for order-independent invariants.
    Returns ``(gb_or_timeout, method)``.
    """
    from .modular import compute_basis

    polys = reverse_variables(system) if reverse else list(system)
    return compute_basis(polys, GREVLEX, limits, engine, exact_seconds)


def verify_exact_solution(system: Sequence[Polynomial], point: Mapping[str, object]) -> bool:
    """Every polynomial evaluates to exactly zero at ``point`` (which must assign all variables)."""
    assignment = {k: rat(v) for k, v in point.items()}
    for f in system:
        missing = [n for n in f.ring.names if n not in assignment]
        if missing:
            raise StructuralError(f"point does not assign {', '.join(missing)}")
        value = f.evaluate({n: assignment[n] for n in f.ring.names})
        if value.constant_value() != 0:
            return False
    return True


# -- numeric solutions ----------------------------------------------------------

class _NumPoly:
    """Float evaluation of a polynomial (and its gradient) via exponent matrices."""

    def __init__(self, p: Polynomial):
        items = list(p.terms.items())
        self.exps = np.array([m for m, _ in items], dtype=int).reshape(len(items), p.ring.arity)
        self.coef = np.array([complex(float(c)) for _, c in items])

    def __call__(self, z):
        return self.coef @ np.prod(z[None, :] ** self.exps, axis=1)

    def grad(self, z):
        out = np.zeros(len(z), dtype=complex)
        for i in range(len(z)):
            e = self.exps[:, i]
            mask = e > 0
            if not mask.any():
                continue
            ex = self.exps[mask].copy()
            ex[:, i] -= 1
            out[i] = (self.coef[mask] * e[mask]) @ np.prod(z[None, :] ** ex, axis=1)
        return out


def _polish(funcs, z, steps=8):
    """A few Gauss–Newton steps on the full (possibly overdetermined) system."""
    for _ in range(steps):
        r = np.array([f(z) for f in funcs])
        if np.max(np.abs(r), initial=0) < 1e-15:
            break
        J = np.array([f.grad(z) for f in funcs])
        dz, *_ = np.linalg.lstsq(J, -r, rcond=None)
        z = z + dz
        if np.max(np.abs(dz)) < 1e-16 * max(1, np.max(np.abs(z))):
            break
    return z


def multiplication_matrices(gb: GroebnerBasis) -> tuple[list[tuple], list[np.ndarray]]:
    """Standard monomials B and, per variable x_i, the matrix of f -> x_i*f on Q[x]/I.

    Column j holds the coordinates of NF(x_i * B[j]) in the basis B.
    """
    std = standard_monomials(gb)
    index = {m: k for k, m in enumerate(std)}
    ring = gb.ring
    mats = []
    for i in range(ring.arity):
        M = np.zeros((len(std), len(std)))
        for j, m in enumerate(std):
            shifted = m[:i] + (m[i] + 1,) + m[i + 1:]
            if shifted in index:
                M[index[shifted], j] = 1.0
                continue
            nf = gb.normal_form(Polynomial._raw(ring, {shifted: mpq(1)}))
            for mono, c in nf.terms.items():
                M[index[mono], j] = float(c)
        mats.append(M)
    return std, mats


def solve_numeric(system: Sequence[Polynomial], config: SolveConfig | None = None,
                  gb: GroebnerBasis | None = None, seed: int = 0) -> list[NumericSolution]:
    """Distinct complex solutions from the eigenstructure of multiplication matrices.

    The evaluation vectors (b(z))_b of the solutions z are common left
    eigenvectors of every multiplication matrix; they are read off a random
    linear combination, coordinates recovered by Rayleigh quotients and then
    polished with Gauss–Newton on the original system.  Diagnostic only:
    certificates never rely on this.
    """
    config = config or SolveConfig()
    system = [f for f in system if not f.is_zero]
    if not system:
        raise StructuralError("empty system")
    if gb is None:
        limits = Limits(max_seconds=config.max_seconds) if config.max_seconds else None
        gb, _ = instance_basis(system, limits)
        if isinstance(gb, GroebnerTimeout):
            raise NumericSolveError("Gröbner basis computation timed out")
    ring = gb.ring
    system = [f.to_ring(ring) for f in system]
    if not is_zero_dimensional(gb):
        raise NumericSolveError("system is not zero-dimensional")
    if gb.is_unit_ideal():
        return []
    std, mats = multiplication_matrices(gb)
    rng = np.random.default_rng(seed)
    weights = rng.uniform(-1.0, 1.0, size=len(mats))
    combo = sum(w * M for w, M in zip(weights, mats))
    _, vecs = np.linalg.eig(combo.T)
    funcs = [_NumPoly(f) for f in system]
    sols = []
    for k in range(vecs.shape[1]):
        v = vecs[:, k]
        u = np.conj(v)
        denom = u @ v
        z = np.array([(u @ (M.T @ v)) / denom for M in mats], dtype=complex)
        z = _polish(funcs, z, steps=min(config.max_iterations, 50))
        res = max(abs(f(z)) for f in funcs)
        if res > config.tolerance:
            raise NumericSolveError(f"solution did not converge (residual {res:.3g}); "
                                    "the ideal may have multiple roots")
        sols.append(NumericSolution({ring.names[i]: complex(z[i]) for i in range(ring.arity)}, float(res)))
    return _dedupe(sols, config.cluster_tol)


def _dedupe(sols, tol):
    out = []
    for s in sols:
        if all(max(abs(s.assignment[k] - t.assignment[k]) for k in s.assignment) > tol * max(1.0, max(abs(x) for x in t.assignment.values())) for t in out):
            out.append(s)
    return out
