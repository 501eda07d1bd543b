"""One-forms on A and on its envelope, the comparison map φ and its inverse,
derivations along the envelope, restriction Π and the lift ∇.

One-forms are the smooth (geometric) ones: free over the coordinate
differentials ``dx1..dxm, dy1..dyn`` in that order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .envelope import (
    AElement,
    EnvelopeElement,
    ProductModel,
    embed_A,
    env_mul,
    env_sum,
    one_env,
    zero_env,
)
from .modules import FinPresModule, ModuleElement, TensorElement, tensor_normalize, vector_equal
from .oracle import Equality, OracleConfig, rank_at
from .symbolic import ZERO, compile_expr, partial


@dataclass(frozen=True)
class OneFormA:
    """``sum a_i dx_i + sum b_j dy_j`` with coefficients in A."""

    model: ProductModel
    coeffs: tuple[AElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if len(self.coeffs) != self.model.dim:
            raise ValueError(f"expected {self.model.dim} coefficients")

    @classmethod
    def zero(cls, model: ProductModel) -> "OneFormA":
        return cls(model, tuple(AElement() for _ in range(model.dim)))

    @classmethod
    def basis(cls, model: ProductModel, i: int) -> "OneFormA":
        return cls(model, tuple(AElement.const(1 if j == i else 0) for j in range(model.dim)))

    def __add__(self, other: "OneFormA") -> "OneFormA":
        return OneFormA(self.model, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def scale(self, a: AElement) -> "OneFormA":
        return OneFormA(self.model, tuple(a * c for c in self.coeffs))

    def as_module_element(self) -> ModuleElement:
        return ModuleElement(FinPresModule.free(self.model.dim), self.coeffs)

    def __str__(self):
        return _form_str(self.model, [c.flat for c in self.coeffs])


@dataclass(frozen=True)
class OneFormEnv:
    """One-form with envelope coefficients."""

    model: ProductModel
    coeffs: tuple[EnvelopeElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if len(self.coeffs) != self.model.dim:
            raise ValueError(f"expected {self.model.dim} coefficients")

    @classmethod
    def zero(cls, model: ProductModel) -> "OneFormEnv":
        return cls(model, tuple(zero_env() for _ in range(model.dim)))

    def __add__(self, other: "OneFormEnv") -> "OneFormEnv":
        return OneFormEnv(self.model, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def scale(self, s: EnvelopeElement) -> "OneFormEnv":
        return OneFormEnv(self.model, tuple(env_mul(s, c) for c in self.coeffs))

    def flats(self):
        return [c.flat for c in self.coeffs]

    def __str__(self):
        return _form_str(self.model, self.flats())


def _form_str(model, flats) -> str:
    parts = [f"({c})*d{n}" for c, n in zip(flats, model.coordinates) if str(c) != "0"]
    return " + ".join(parts) if parts else "0"


def forms_equal(w: OneFormEnv, v: OneFormEnv, cfg: OracleConfig = OracleConfig()) -> Equality:
    """Coefficientwise oracle equality."""
    return vector_equal(w.flats(), v.flats(), (), cfg)


@dataclass(frozen=True)
class SmoothenedOneForm:
    """Unnormalized formal sum ``sum ā_i ⊗ ω_i`` in Ā⊗_A Λ¹(A)."""

    model: ProductModel
    summands: tuple[tuple[EnvelopeElement, OneFormA], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "summands", tuple(self.summands))

    def __add__(self, other: "SmoothenedOneForm") -> "SmoothenedOneForm":
        return SmoothenedOneForm(self.model, self.summands + other.summands)

    def as_tensor(self) -> TensorElement:
        free = FinPresModule.free(self.model.dim)
        return TensorElement(
            free, tuple((s, ModuleElement(free, w.coeffs)) for s, w in self.summands)
        )

    def __str__(self):
        if not self.summands:
            return "0"
        return " + ".join(f"[{s.flat}]⊗[{w}]" for s, w in self.summands)


def smoothened_normalize(s: SmoothenedOneForm) -> ModuleElement:
    """Normal form in the free envelope module of rank m+n."""
    return tensor_normalize(s.as_tensor())


def smoothened_equal(s: SmoothenedOneForm, t: SmoothenedOneForm, cfg: OracleConfig = OracleConfig()) -> Equality:
    return vector_equal(smoothened_normalize(s).flats(), smoothened_normalize(t).flats(), (), cfg)


# -- differentials -------------------------------------------------------------


def d_A(model: ProductModel, a: AElement) -> OneFormA:
    """Exterior derivative on A, computed term by term on the separable sum."""
    coeffs = []
    for name in model.x_names:
        coeffs.append(AElement(tuple((partial(f, name), g) for f, g in a.terms)))
    for name in model.y_names:
        coeffs.append(AElement(tuple((f, partial(g, name)) for f, g in a.terms)))
    return OneFormA(model, tuple(coeffs))


def outer_partial(e: EnvelopeElement, i: int) -> EnvelopeElement:
    """``(∂H/∂t_i)∘a`` (``i`` is 1-based)."""
    return EnvelopeElement(partial(e.H, f"t{i}"), e.args)


def d_env(model: ProductModel, e: EnvelopeElement) -> OneFormEnv:
    """Chain rule: ``d(H∘a) = sum_i (∂H/∂t_i∘a) · da_i``."""
    coeffs: list[list[EnvelopeElement]] = [[] for _ in range(model.dim)]
    for i, a in enumerate(e.args, 1):
        outer = outer_partial(e, i)
        if outer.H == ZERO:
            continue
        da = d_A(model, a)
        for b, c in enumerate(da.coeffs):
            if c.is_zero():
                continue
            coeffs[b].append(env_mul(outer, embed_A(c)))
    return OneFormEnv(model, tuple(env_sum(cs) for cs in coeffs))


def embed_form(w: OneFormA) -> OneFormEnv:
    return OneFormEnv(w.model, tuple(embed_A(c) for c in w.coeffs))


# -- φ and its inverse ------------------------------------------------------------


def phi(s: SmoothenedOneForm) -> OneFormEnv:
    """``φ(ā⊗ω) = ā·ω``, extended additively."""
    out = OneFormEnv.zero(s.model)
    terms: list[list[EnvelopeElement]] = [[] for _ in range(s.model.dim)]
    for abar, w in s.summands:
        for b, c in enumerate(embed_form(w).coeffs):
            terms[b].append(env_mul(abar, c))
    if not s.summands:
        return out
    return OneFormEnv(s.model, tuple(env_sum(t) for t in terms))


def coordinate_differentials(model: ProductModel) -> list[OneFormA]:
    return [d_A(model, model.coordinate(i)) for i in range(model.dim)]


def phi_inverse(w: OneFormEnv) -> SmoothenedOneForm:
    """``sum_b c_b dz_b ↦ sum_b c_b ⊗ dz_b`` over the coordinate differentials."""
    model = w.model
    dz = coordinate_differentials(model)
    return SmoothenedOneForm(
        model, tuple((c, dz[b]) for b, c in enumerate(w.coeffs) if c.flat != ZERO)
    )


def differential_preimage(model: ProductModel, e: EnvelopeElement) -> SmoothenedOneForm:
    """``sum_i (∂H/∂t_i∘a) ⊗ da_i``: a preimage of ``d(H∘a)`` built from ``dA`` alone."""
    return SmoothenedOneForm(
        model, tuple((outer_partial(e, i), d_A(model, a)) for i, a in enumerate(e.args, 1))
    )


# -- derivations -------------------------------------------------------------------


@dataclass(frozen=True)
class DerivationA:
    """Derivation of A with values in Ā, fixed by its values on the coordinates."""

    model: ProductModel
    values: tuple[EnvelopeElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) != self.model.dim:
            raise ValueError(f"expected {self.model.dim} values")

    @classmethod
    def coordinate(cls, model: ProductModel, i: int) -> "DerivationA":
        return cls(model, tuple(one_env() if j == i else zero_env() for j in range(model.dim)))

    @classmethod
    def zero(cls, model: ProductModel) -> "DerivationA":
        return cls(model, tuple(zero_env() for _ in range(model.dim)))

    def scale(self, s) -> "DerivationA":
        s = embed_A(s) if isinstance(s, AElement) else s
        return DerivationA(self.model, tuple(env_mul(s, v) for v in self.values))


@dataclass(frozen=True)
class DerivationEnv:
    """Derivation of Ā, fixed by the same coordinate values."""

    model: ProductModel
    values: tuple[EnvelopeElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) != self.model.dim:
            raise ValueError(f"expected {self.model.dim} values")

    def scale(self, s) -> "DerivationEnv":
        s = embed_A(s) if isinstance(s, AElement) else s
        return DerivationEnv(self.model, tuple(env_mul(s, v) for v in self.values))


def _contract(w: OneFormA, values: Sequence[EnvelopeElement]) -> EnvelopeElement:
    return env_sum(env_mul(embed_A(c), v) for c, v in zip(w.coeffs, values) if not c.is_zero())


def apply_derivation_A(X: DerivationA, a: AElement) -> EnvelopeElement:
    """``X(a)``: contraction of ``d_A(a)`` with the coordinate values."""
    if not isinstance(X, DerivationA):
        raise TypeError("apply_derivation_A needs a DerivationA")
    if not isinstance(a, AElement):
        raise TypeError("a derivation of A acts on elements of A only; lift it with nabla first")
    return _contract(d_A(X.model, a), X.values)


def restrict_Pi(X: DerivationEnv) -> DerivationA:
    """Π: restrict a derivation of Ā to A (same coordinate values)."""
    return DerivationA(X.model, X.values)


def nabla(X: DerivationA) -> DerivationEnv:
    """∇: lift a derivation of A to Ā; ``restrict_Pi(nabla(X)) == X``."""
    return DerivationEnv(X.model, X.values)


def apply_derivation_env(X: DerivationEnv, e: EnvelopeElement) -> EnvelopeElement:
    """``∇_X(H∘a) = sum_i (∂H/∂t_i∘a)·X(a_i)``."""
    if not isinstance(X, DerivationEnv):
        raise TypeError("apply_derivation_env needs a DerivationEnv (use nabla)")
    if isinstance(e, AElement):
        e = embed_A(e)
    terms = []
    for i, a in enumerate(e.args, 1):
        outer = outer_partial(e, i)
        if outer.H == ZERO:
            continue
        Xa = _contract(d_A(X.model, a), X.values)
        terms.append(env_mul(outer, Xa))
    return env_sum(terms)


# -- pointwise cotangent rank ----------------------------------------------------


class NonFiniteFamily(ArithmeticError):
    pass


def gradient_rows(model: ProductModel, F: Sequence[EnvelopeElement], h: Mapping) -> list[list[float]]:
    rows = []
    for k, f in enumerate(F):
        row = [compile_expr(c)(h) for c in d_env(model, f).flats()]
        if not all(math.isfinite(v) for v in row) or not math.isfinite(compile_expr(f.flat)(h)):
            raise NonFiniteFamily(f"element {k} ({f.flat}) is not finite at {dict(h)}")
        rows.append(row)
    return rows


def point_cotangent_rank(model: ProductModel, F: Sequence[EnvelopeElement], h: Mapping) -> int:
    """Dimension of the span of the classes ``[f - f(h)]`` in μ_h/μ_h²."""
    if not F:
        return 0
    return rank_at(gradient_rows(model, F, h))


def point_as_mapping(model: ProductModel, coords: Sequence) -> dict[str, Fraction]:
    if len(coords) != model.dim:
        raise ValueError(f"point needs {model.dim} coordinates")
    return {n: Fraction(c) for n, c in zip(model.coordinates, coords)}
