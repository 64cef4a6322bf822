"""Constraint analysis of first-order Lagrangians by symplectic iteration.

A Model is the data of L = a_i(eta) Deta^i - V(eta): a variable list, one
kinetic coefficient per variable, and a potential.  The two-form
f_ij = da_j/deta^i - da_i/deta^j either inverts (giving brackets directly)
or has zero modes whose contractions with dV are constraints; constraints
extend the kinetic sector through fresh multipliers and the loop repeats.
Terminals: Regular (brackets emitted), GaugeTheory (zero modes produce no
new constraint; gauge conditions requested), Inconsistent (a constraint
reduces to a nonzero constant).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .expr import (
    Constant,
    Expr,
    GammaFactor,
    ONE,
    Power,
    Product,
    Sum,
    SymbolicConstant,
    Variable,
    ZERO,
    _to_poly,
    diff,
    evaluate,
    free_names,
    simplify,
    substitute,
    sym,
    to_text,
    var,
    variable_names,
)
from .frac import FracOrder, OutsideFragment, chain_partial_expr, gamma, poisson_alpha

REGULAR = "regular"
GAUGE_THEORY = "gauge-theory"
INCONSISTENT = "inconsistent"

CONVENTION = "f_ij = d a_j / d eta_i - d a_i / d eta_j"

_RANK_SEEDS = (20240811, 20240812)


class SymplecticError(Exception):
    pass


class ModelError(SymplecticError):
    pass


class SingularForm(SymplecticError):
    def __init__(self, null_basis):
        super().__init__(
            f"form is singular; null basis {[_vector_text(v) for v in null_basis]}")
        self.null_basis = tuple(null_basis)


class RankDisagreement(SymplecticError):
    pass


class IterationBudgetExceeded(SymplecticError):
    pass


class DegenerateConstraintMatrix(SymplecticError):
    pass


def _vector_text(v) -> str:
    return "(" + ", ".join(str(c) for c in v) + ")"


@dataclass(frozen=True)
class Model:
    """First-order action data: variables eta, kinetic coefficients a_i(eta),
    potential V(eta).  alpha is the derivative order; None keeps the order as
    the symbol `alpha` in expressions.  `positive` lists variables that may be
    assumed positive during simplification."""

    variables: tuple
    kinetic: tuple
    potential: Expr
    alpha: float | None = 1.0
    constants: Mapping = field(default_factory=dict)
    positive: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "kinetic", tuple(self.kinetic))
        object.__setattr__(self, "positive", tuple(self.positive))
        object.__setattr__(self, "constants", dict(self.constants))
        if len(self.kinetic) != len(self.variables):
            raise ModelError(
                f"{len(self.variables)} variables but {len(self.kinetic)} kinetic terms")
        if len(set(self.variables)) != len(self.variables):
            raise ModelError("duplicate variable names")
        if self.alpha is not None:
            FracOrder(self.alpha)
        # `alpha` is always a legal name: binding() supplies the numeric order,
        # and a symbolic-order model simply leaves it unbound.
        allowed = set(self.variables) | set(self.constants) | {"gamma_ec", "alpha"}
        for label, e in [("potential", self.potential)] + [
                (f"kinetic[{v}]", k) for v, k in zip(self.variables, self.kinetic)]:
            extra = free_names(e) - allowed
            if extra:
                raise ModelError(f"{label} uses undeclared names {sorted(extra)}")

    @property
    def dimension(self) -> int:
        return len(self.variables)

    def binding(self, point: Mapping | None = None) -> dict:
        out = dict(self.constants)
        if self.alpha is not None:
            out.setdefault("alpha", self.alpha)
        if point:
            out.update(point)
        return out


@dataclass(frozen=True)
class SymplecticForm:
    entries: tuple
    rank: int
    null_basis: tuple

    @property
    def dimension(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class ChainLevel:
    constraints: tuple
    multipliers: tuple
    model: Model


@dataclass(frozen=True)
class ConstraintChain:
    levels: tuple
    status: str
    notes: tuple = ()


@dataclass(frozen=True)
class BracketTable:
    variables: tuple
    entries: tuple
    alpha: float | None
    coarse_grained: bool
    prefactor: Expr
    commutators: tuple | None = None
    convention: str = CONVENTION

    def entry(self, vi: str, vj: str) -> Expr:
        i = self.variables.index(vi)
        j = self.variables.index(vj)
        return self.entries[i][j]

    def scaled_entry(self, vi: str, vj: str) -> Expr:
        """Entry under the alternative normalization that carries the
        1/Gamma(1+alpha)^2 prefactor explicitly."""
        return simplify(Product((self.prefactor, self.entry(vi, vj))))

    def to_json_dict(self) -> dict:
        plain = [[to_text(e) for e in row] for row in self.entries]
        scaled = [
            [to_text(simplify(Product((self.prefactor, e)))) for e in row]
            for row in self.entries
        ]
        out = {
            "variables": list(self.variables),
            "alpha": "symbolic" if self.alpha is None else float(self.alpha),
            "convention": self.convention,
            "prefactor": to_text(self.prefactor),
            "brackets": plain,
            "commutators": (
                None if self.commutators is None
                else [[to_text(e) for e in row] for row in self.commutators]),
            "normalizations": {
                "section_6_3": plain,
                "section_5_2": scaled,
            },
        }
        return out


def _alpha_factor(alpha: float | None) -> Expr:
    """Gamma(1 + alpha) as an expression, honoring a symbolic order."""
    if alpha is None:
        return GammaFactor(simplify(Sum((ONE, sym("alpha")))))
    return simplify(GammaFactor(Constant(1 + Fraction(alpha))))


def _prefactor(alpha: float | None) -> Expr:
    if alpha == 1.0:
        return ONE
    return simplify(Power(_alpha_factor(alpha), Fraction(-2)))


# -- generic-point rank machinery --------------------------------------------

class _UnluckyPoint(Exception):
    pass


def _collect_atoms(e: Expr, out: dict):
    if isinstance(e, (Variable, SymbolicConstant, GammaFactor)):
        out.setdefault(e, None)
    elif isinstance(e, Power):
        if e.exponent.denominator == 1:
            _collect_atoms(e.base, out)
        else:
            out.setdefault(e, None)
    elif isinstance(e, Sum):
        for t in e.terms:
            _collect_atoms(t, out)
    elif isinstance(e, Product):
        for f in e.factors:
            _collect_atoms(f, out)


def _rational_eval(e: Expr, atoms: Mapping) -> Fraction:
    if isinstance(e, Constant):
        return e.value
    if isinstance(e, (Variable, SymbolicConstant, GammaFactor)):
        return atoms[e]
    if isinstance(e, Sum):
        return sum((_rational_eval(t, atoms) for t in e.terms), Fraction(0))
    if isinstance(e, Product):
        acc = Fraction(1)
        for f in e.factors:
            acc *= _rational_eval(f, atoms)
        return acc
    if isinstance(e, Power):
        if e.exponent.denominator == 1:
            base = _rational_eval(e.base, atoms)
            k = int(e.exponent)
            if base == 0 and k < 0:
                raise _UnluckyPoint()
            return base**k
        return atoms[e]
    raise TypeError(f"cannot evaluate {type(e).__name__} rationally")


def _generic_values(entries, seed: int) -> dict:
    atoms: dict = {}
    for row in entries:
        for e in row:
            _collect_atoms(e, atoms)
    rnd = random.Random(seed)
    ordered = sorted(atoms, key=repr)
    return {a: Fraction(rnd.randint(101, 997), rnd.randint(101, 997)) for a in ordered}


def _eval_matrix(entries, seed: int):
    vals = _generic_values(entries, seed)
    return [[_rational_eval(e, vals) for e in row] for row in entries]


def _rank_and_null(M):
    """Row reduction over exact rationals: returns (rank, null-space basis)."""
    n = len(M)
    if n == 0:
        return 0, []
    m = len(M[0])
    A = [row[:] for row in M]
    pivots = []
    r = 0
    for c in range(m):
        sel = None
        for i in range(r, n):
            if A[i][c] != 0:
                sel = i
                break
        if sel is None:
            continue
        A[r], A[sel] = A[sel], A[r]
        inv = Fraction(1) / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(n):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == n:
            break
    free = [c for c in range(m) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * m
        v[fc] = Fraction(1)
        for ri, pc in enumerate(pivots):
            v[pc] = -A[ri][fc]
        basis.append(_primitive(v))
    return r, basis


def _primitive(v):
    """Scale a rational vector to a primitive integer vector with a positive
    leading nonzero entry."""
    from math import gcd

    den = 1
    for c in v:
        den = den * c.denominator // gcd(den, c.denominator)
    ints = [int(c * den) for c in v]
    g = 0
    for c in ints:
        g = gcd(g, abs(c))
    if g > 1:
        ints = [c // g for c in ints]
    for c in ints:
        if c != 0:
            if c < 0:
                ints = [-x for x in ints]
            break
    return tuple(Fraction(c) for c in ints)


def _matrix_rank_two_points(entries) -> int:
    ranks = []
    for base_seed in _RANK_SEEDS:
        seed = base_seed
        for _ in range(5):
            try:
                r, _basis = _rank_and_null(_eval_matrix(entries, seed))
                ranks.append(r)
                break
            except _UnluckyPoint:
                seed += 17
        else:
            raise RankDisagreement("no generic evaluation point found")
    if ranks[0] != ranks[1]:
        raise RankDisagreement(
            f"rank {ranks[0]} at first point but {ranks[1]} at second")
    return ranks[0]


def _verified_null_basis(entries) -> tuple:
    for base_seed in _RANK_SEEDS:
        seed = base_seed
        try:
            _r, basis = _rank_and_null(_eval_matrix(entries, seed))
        except _UnluckyPoint:
            continue
        ok = True
        for v in basis:
            for row in entries:
                terms = tuple(Product((Constant(c), e))
                              for c, e in zip(v, row) if c != 0 and e != ZERO)
                contraction = simplify(Sum(terms)) if terms else ZERO
                if contraction != ZERO:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return tuple(basis)
    raise RankDisagreement(
        "null space is not spanned by constant vectors in this fragment")


# -- core operations ---------------------------------------------------------

def assemble_form(m: Model) -> SymplecticForm:
    """Antisymmetric two-form of the kinetic sector.  The lower triangle is
    the negated upper triangle by construction, so antisymmetry is structural
    rather than checked."""
    n = m.dimension
    entries = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            e = simplify(
                Sum((diff(m.kinetic[j], m.variables[i], m.positive),
                     Product((Constant(Fraction(-1)),
                              diff(m.kinetic[i], m.variables[j], m.positive))))),
                m.positive)
            entries[i][j] = e
            entries[j][i] = simplify(Product((Constant(Fraction(-1)), e)), m.positive)
    frozen = tuple(tuple(row) for row in entries)
    rank = _matrix_rank_two_points(frozen)
    null_basis = () if rank == n else _verified_null_basis(frozen)
    return SymplecticForm(frozen, rank, null_basis)


def _det(rows) -> Expr:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return simplify(Sum((
            Product((rows[0][0], rows[1][1])),
            Product((Constant(Fraction(-1)), rows[0][1], rows[1][0])))))
    best = min(range(n), key=lambda i: sum(1 for e in rows[i] if e != ZERO))
    terms = []
    for j in range(n):
        if rows[best][j] == ZERO:
            continue
        minor = [[rows[i][k] for k in range(n) if k != j]
                 for i in range(n) if i != best]
        sign = Fraction(-1) if (best + j) % 2 else Fraction(1)
        terms.append(Product((Constant(sign), rows[best][j], _det(minor))))
    if not terms:
        return ZERO
    return simplify(Sum(tuple(terms)))


def invert_form(f: SymplecticForm):
    """Exact symbolic inverse by the adjugate over the determinant."""
    n = f.dimension
    if f.rank < n:
        raise SingularForm(f.null_basis)
    rows = [list(r) for r in f.entries]
    det = _det(rows)
    if det == ZERO:
        raise SingularForm(f.null_basis)
    inv_det = simplify(Power(det, Fraction(-1)))
    out = []
    for i in range(n):
        out_row = []
        for j in range(n):
            minor = [[rows[r][c] for c in range(n) if c != i]
                     for r in range(n) if r != j]
            sign = Fraction(-1) if (i + j) % 2 else Fraction(1)
            cof = _det(minor) if minor else ONE
            out_row.append(simplify(Product((Constant(sign), cof, inv_det))))
        out.append(tuple(out_row))
    return tuple(out)


def constraints_from_zero_modes(f: SymplecticForm, m: Model):
    """Contractions nu . dV/deta for each zero mode; identically vanishing
    contractions are dropped (callers compare against the null-basis size to
    detect them, which signals a gauge direction)."""
    grad = [diff(m.potential, v, m.positive) for v in m.variables]
    out = []
    for nu in f.null_basis:
        terms = tuple(Product((Constant(c), g)) for c, g in zip(nu, grad) if c != 0)
        omega = simplify(Sum(terms)) if terms else ZERO
        if omega != ZERO:
            out.append(omega)
    return out


def _solve_linear(omega: Expr, variables) -> tuple | None:
    """Find (v, replacement) with omega == c*v + rest, c a nonzero numeric
    constant independent of v; then v = -rest/c on the constraint surface."""
    for v in variables:
        d = simplify(diff(omega, v))
        if isinstance(d, Constant) and d.value != 0:
            rest = simplify(Sum((omega, Product((Constant(-d.value), var(v))))))
            replacement = simplify(Product((Constant(Fraction(-1) / d.value), rest)))
            return v, replacement
    return None


def _fresh_multipliers(existing, count: int):
    names = []
    k = 1
    taken = set(existing)
    while len(names) < count:
        cand = f"lam_{k}"
        if cand not in taken:
            names.append(cand)
            taken.add(cand)
        k += 1
    return names


def extend_model(m: Model, constraints) -> Model:
    """Append one multiplier per constraint, shift the kinetic sector by
    lam * dOmega, and substitute each linearly solvable constraint into the
    potential."""
    constraints = [simplify(c) for c in constraints]
    if not constraints or all(c == ZERO for c in constraints):
        raise ModelError("no nonvanishing constraints to extend with")
    mults = _fresh_multipliers(m.variables, len(constraints))
    new_vars = m.variables + tuple(mults)
    kinetic = list(m.kinetic)
    for i, v in enumerate(m.variables):
        shifts = [Product((var(lam), diff(om, v)))
                  for lam, om in zip(mults, constraints)]
        kinetic[i] = simplify(Sum(tuple([kinetic[i]] + shifts)), m.positive)
    kinetic.extend([ZERO] * len(mults))
    potential = m.potential
    for om in constraints:
        solved = _solve_linear(om, m.variables)
        if solved is not None:
            v, replacement = solved
            potential = simplify(substitute(potential, v, replacement), m.positive)
    return Model(new_vars, tuple(kinetic), potential, m.alpha, m.constants, m.positive)


def _expr_vector(e: Expr) -> dict:
    return _to_poly(simplify(e), ())


def _in_rational_span(candidate: Expr, basis) -> bool:
    """Exact linear-algebra membership test of `candidate` in the span of
    `basis` over the rationals (coordinates are canonical monomials)."""
    vecs = [_expr_vector(b) for b in basis]
    vecs = [v for v in vecs if v]
    target = _expr_vector(candidate)
    if not target:
        return True
    if not vecs:
        return False
    monos = sorted({m for v in vecs for m in v} | set(target), key=repr)
    index = {mo: i for i, mo in enumerate(monos)}
    rows = len(monos)
    cols = len(vecs)
    A = [[Fraction(0)] * (cols + 1) for _ in range(rows)]
    for c, v in enumerate(vecs):
        for mo, coeff in v.items():
            A[index[mo]][c] = coeff
    for mo, coeff in target.items():
        A[index[mo]][cols] = coeff
    r_basis, _ = _rank_and_null([row[:-1] for row in A])
    r_aug, _ = _rank_and_null(A)
    return r_basis == r_aug


def _prune_spectators(current: Model, original: Model):
    """Remove variables whose only coupling was consumed by constraint
    substitution: kinetic slot identically zero, absent from every kinetic
    coefficient and from the potential, yet coupled in the original action.
    Variables that were decoupled from the start stay (they signal gauge
    freedom, not a spent coupling)."""
    touches = set(free_names(original.potential))
    for k in original.kinetic:
        touches |= free_names(k)
    originally_coupled = {v for v in original.variables if v in touches}
    used_now = free_names(current.potential)
    for k in current.kinetic:
        used_now |= free_names(k)
    doomed = []
    for i, v in enumerate(current.variables):
        if v not in original.variables:
            continue
        if current.kinetic[i] == ZERO and v not in used_now and v in originally_coupled:
            doomed.append(v)
    if not doomed:
        return current, []
    keep = [i for i, v in enumerate(current.variables) if v not in doomed]
    trimmed = Model(
        tuple(current.variables[i] for i in keep),
        tuple(current.kinetic[i] for i in keep),
        current.potential, current.alpha, current.constants,
        tuple(p for p in current.positive if p not in doomed))
    return trimmed, doomed


def _restrict_table(m: Model, inverse, original_vars) -> BracketTable:
    keep = [i for i, v in enumerate(m.variables) if v in original_vars]
    names = tuple(m.variables[i] for i in keep)
    entries = tuple(tuple(inverse[i][j] for j in keep) for i in keep)
    return BracketTable(
        variables=names,
        entries=entries,
        alpha=m.alpha,
        coarse_grained=(m.alpha != 1.0),
        prefactor=_prefactor(m.alpha),
    )


def fj_iterate(m: Model, gauge_conditions=()):
    """Run the constraint iteration to a terminal.

    Returns (ConstraintChain, BracketTable or None).  Dependence of a new
    constraint candidate on earlier ones is decided by rational-span
    membership against the earlier constraints and their first derivatives;
    dependences beyond that fragment are treated as genuinely new and simply
    consume iteration budget.
    """
    original = m
    budget = 2 * m.dimension
    levels = []
    notes = []
    span_basis: list = []
    gauges = [simplify(g) for g in gauge_conditions]
    current = m
    for _ in range(budget + 1):
        form = assemble_form(current)
        n = current.dimension
        if form.rank == n:
            inverse = invert_form(form)
            table = _restrict_table(current, inverse, original.variables)
            return ConstraintChain(tuple(levels), REGULAR, tuple(notes)), table
        candidates = constraints_from_zero_modes(form, current)
        dropped = len(form.null_basis) - len(candidates)
        if dropped:
            notes.append(
                f"{dropped} zero mode(s) with identically vanishing contraction "
                "(gauge direction)")
        new = []
        for omega in candidates:
            if not variable_names(omega):
                notes.append(f"constraint reduces to nonzero constant: {to_text(omega)}")
                return ConstraintChain(tuple(levels), INCONSISTENT, tuple(notes)), None
            if _in_rational_span(omega, span_basis):
                notes.append(
                    f"candidate {to_text(omega)} lies in the span of earlier "
                    "constraints and their derivatives; dropped")
                continue
            new.append(omega)
        if not new:
            if gauges:
                notes.append(
                    f"imposing {len(gauges)} supplied gauge condition(s) as constraints")
                new = gauges
                gauges = []
            else:
                directions = ", ".join(_vector_text(v) for v in form.null_basis)
                notes.append(
                    f"gauge conditions required for the zero-mode directions {directions}")
                return ConstraintChain(tuple(levels), GAUGE_THEORY, tuple(notes)), None
        for omega in new:
            span_basis.append(omega)
            for v in current.variables:
                span_basis.append(diff(omega, v))
        extended = extend_model(current, new)
        mults = extended.variables[current.dimension:]
        levels.append(ChainLevel(tuple(new), tuple(mults), extended))
        pruned_model, doomed = _prune_spectators(extended, original)
        if doomed:
            notes.append(
                "pruned decoupled spectator variable(s) "
                + ", ".join(doomed)
                + " after constraint substitution")
        current = pruned_model
    raise IterationBudgetExceeded(
        f"no terminal after {budget} extensions; last dimension {current.dimension}")


def fractional_equations_of_motion(m: Model):
    """Right-hand sides of D^alpha eta = f^{-1} dV/deta, one per variable."""
    form = assemble_form(m)
    if form.rank < m.dimension:
        raise SingularForm(form.null_basis)
    inverse = invert_form(form)
    grad = [diff(m.potential, v, m.positive) for v in m.variables]
    out = []
    for i, v in enumerate(m.variables):
        terms = tuple(Product((inverse[i][j], grad[j]))
                      for j in range(m.dimension) if grad[j] != ZERO)
        rhs = simplify(Sum(terms), m.positive) if terms else ZERO
        out.append((v, rhs))
    return out


def _hj_multiplier_names(count: int):
    return [f"lam_{k}" for k in range(1, count + 1)]


def coarse_hamilton_jacobi(m: Model, constraints=(), multipliers: Mapping | None = None):
    """Coarse Hamilton-Jacobi right-hand sides for a phase-space model.

    The variable list splits in half into coordinate/momentum pairs.  The
    effective Hamiltonian is V plus multiplier-weighted constraints; each
    right-hand side carries a 1/Gamma(1+alpha) prefactor and smooth-outer
    fractional partials.  Returns [(variable, rhs Expr)] in variable order.
    """
    if m.dimension % 2:
        raise ModelError("phase-space form needs an even number of variables")
    half = m.dimension // 2
    coords = m.variables[:half]
    momenta = m.variables[half:]
    constraints = [simplify(c) for c in constraints]
    lam_names = _hj_multiplier_names(len(constraints))
    multipliers = dict(multipliers or {})
    h_eff = m.potential
    if constraints:
        h_eff = simplify(Sum(tuple([m.potential] + [
            Product((sym(nm), c)) for nm, c in zip(lam_names, constraints)])))
    a = 1.0 if m.alpha is None else m.alpha
    pref = (ONE if a == 1.0
            else simplify(Power(GammaFactor(Constant(1 + Fraction(a))), Fraction(-1))))
    out = []
    for i in range(half):
        rhs_q = chain_partial_expr(h_eff, momenta[i], a)
        rhs_p = simplify(Product((Constant(Fraction(-1)),
                                  chain_partial_expr(h_eff, coords[i], a))))
        out.append((coords[i], _apply_multipliers(
            simplify(Product((pref, rhs_q))), lam_names, multipliers)))
        out.append((momenta[i], _apply_multipliers(
            simplify(Product((pref, rhs_p))), lam_names, multipliers)))
    ordered = dict(out)
    return [(v, ordered[v]) for v in m.variables]


def _apply_multipliers(e: Expr, lam_names, values: Mapping) -> Expr:
    for nm in lam_names:
        if nm in values:
            e = substitute(e, nm, Constant(Fraction(values[nm])))
    return simplify(e)


def momentum_name(v: str) -> str:
    return "mom_" + v


def primary_constraints(m: Model):
    """Momentum-minus-kinetic constraints on the doubled phase space, one per
    model variable, written with the momentum names from momentum_name()."""
    return [simplify(Sum((var(momentum_name(v)),
                          Product((Constant(Fraction(-1)), k)))))
            for v, k in zip(m.variables, m.kinetic)]


def _doubled_pairs(m: Model):
    return [(v, momentum_name(v)) for v in m.variables]


def coarse_dirac_bracket(U: Expr, V: Expr, m: Model, constraints=(),
                         point: Mapping | None = None) -> float:
    """Numeric constrained bracket of U and V at a point.

    With no additional constraints, the momentum-elimination closed form is
    used: 1/Gamma(1+alpha)^2 times gradU . f^{-1} . gradV on the model's own
    variables (for coordinate pairs this is the inverse-form entry itself).
    With additional constraints, the bracket is computed on the doubled phase
    space: canonical pairs (v, mom_v), the primary constraints included
    automatically, the given constraints appended, and the standard
    correction by the inverse constraint matrix applied.  Constraints whose
    bracket row vanishes identically at the point commute with everything and
    are excluded from the matrix; if the remainder is still singular the
    matrix is degenerate.
    """
    import numpy as np

    a = 1.0 if m.alpha is None else float(m.alpha)
    binding = m.binding(point)
    if not constraints:
        form = assemble_form(m)
        if form.rank < m.dimension:
            raise DegenerateConstraintMatrix(
                "constraint matrix of the primary set is singular; null basis "
                + ", ".join(_vector_text(v) for v in form.null_basis))
        inverse = invert_form(form)
        total = 0.0
        for i, vi in enumerate(m.variables):
            du = simplify(diff(U, vi))
            if du == ZERO:
                continue
            for j, vj in enumerate(m.variables):
                dv = simplify(diff(V, vj))
                if dv == ZERO or inverse[i][j] == ZERO:
                    continue
                total += (evaluate(du, binding) * evaluate(inverse[i][j], binding)
                          * evaluate(dv, binding))
        return total / gamma(1.0 + a) ** 2
    pairs = _doubled_pairs(m)
    full = dict(binding)
    for v, k in zip(m.variables, m.kinetic):
        full.setdefault(momentum_name(v), evaluate(k, binding))
    phis = primary_constraints(m) + [simplify(c) for c in constraints]
    nphi = len(phis)
    C = np.zeros((nphi, nphi))
    for i in range(nphi):
        for j in range(i + 1, nphi):
            C[i, j] = poisson_alpha(phis[i], phis[j], pairs, a, full)
            C[j, i] = -C[i, j]
    scale = max(1.0, float(np.max(np.abs(C))))
    active = [i for i in range(nphi) if np.max(np.abs(C[i])) > 1e-12 * scale]
    if not active:
        raise DegenerateConstraintMatrix("every constraint commutes with the rest")
    Ca = C[np.ix_(active, active)]
    if np.linalg.matrix_rank(Ca, tol=1e-9 * scale) < len(active):
        raise DegenerateConstraintMatrix(
            "constraint matrix is singular beyond identically commuting rows")
    base = poisson_alpha(U, V, pairs, a, full)
    bu = np.array([poisson_alpha(U, phis[i], pairs, a, full) for i in active])
    bv = np.array([poisson_alpha(phis[j], V, pairs, a, full) for j in active])
    correction = float(bu @ np.linalg.solve(Ca, bv))
    return base - correction


def brackets_to_commutators(t: BracketTable, hbar: float) -> BracketTable:
    """Commutator coefficients c_ij with [eta_i, eta_j] = i c_ij, where
    c_ij is hbar times the bracket entry."""
    h = Constant(Fraction(hbar))
    comms = tuple(tuple(simplify(Product((h, e))) for e in row) for row in t.entries)
    return BracketTable(t.variables, t.entries, t.alpha, t.coarse_grained,
                        t.prefactor, comms, t.convention)
