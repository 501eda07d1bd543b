"""Differential calculus over smooth envelopes of C∞(M)⊗C∞(N) for M = R^m, N = R^n.

Exact symbolic normal forms where possible; a seeded numeric oracle with an
explicit UNDETERMINED verdict elsewhere.
"""

from .calculus import (
    DerivationA,
    DerivationEnv,
    OneFormA,
    OneFormEnv,
    SmoothenedOneForm,
    apply_derivation_A,
    apply_derivation_env,
    d_A,
    d_env,
    forms_equal,
    nabla,
    phi,
    phi_inverse,
    point_cotangent_rank,
    restrict_Pi,
)
from .envelope import (
    AElement,
    EnvelopeElement,
    ProductModel,
    coordinate_envelope,
    embed_A,
    env_add,
    env_equal,
    env_mul,
    env_scalar_mul,
    flatten,
)
from .modules import (
    FinPresModule,
    Localization,
    ModuleElement,
    Region,
    TensorElement,
    extend_from_side,
    lemma2_backward,
    lemma2_forward,
    localize,
    pointwise_rank,
    prop3_backward,
    prop3_forward,
    smoothen,
    smoothened_tensor,
)
from .oracle import Equality, OracleConfig, Verdict, equal
from .parser import ParseError, parse_expr
from .session import load_session, parse_session
from .suites import SUITES, Report, Session, run_suite
from .symbolic import Expr, normalize, partial, to_string

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
