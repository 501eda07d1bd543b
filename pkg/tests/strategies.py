"""Hypothesis strategies.

Structured objects come from the package's own seeded generators: hypothesis
draws the seed, so shrinking moves between reproducible instances.
"""

from hypothesis import strategies as st

from envcalc.envelope import ProductModel
from envcalc.generators import (
    rand_A,
    rand_derivation,
    rand_env,
    rand_expr,
    rand_module,
    rand_one_form_env,
    rand_small_env,
    rand_smoothened,
)
from envcalc.oracle import SplitMix64
from envcalc.symbolic import Const, Var

MODEL = ProductModel(2, 2)

seeds = st.integers(min_value=0, max_value=2**64 - 1)
rngs = seeds.map(SplitMix64)
models = st.tuples(st.integers(1, 3), st.integers(1, 3)).map(lambda mn: ProductModel(*mn))

exprs = rngs.map(lambda r: rand_expr(r, MODEL.coordinates, 3))
poly_exprs = rngs.map(lambda r: rand_expr(r, MODEL.coordinates, 3, poly=True))
a_elements = rngs.map(lambda r: rand_A(r, MODEL))
envs = rngs.map(lambda r: rand_env(r, MODEL))
small_envs = rngs.map(lambda r: rand_small_env(r, MODEL))
derivations = rngs.map(lambda r: rand_derivation(r, MODEL))
env_forms = rngs.map(lambda r: rand_one_form_env(r, MODEL))
smoothened_forms = rngs.map(lambda r: rand_smoothened(r, MODEL))
x_modules = rngs.map(lambda r: rand_module(r, MODEL, "X"))
y_modules = rngs.map(lambda r: rand_module(r, MODEL, "Y"))

# a small independent grammar, not routed through the package generators
_leaves = st.one_of(
    st.sampled_from([Var(n) for n in MODEL.coordinates]),
    st.integers(-4, 4).map(Const),
)


def _extend(children):
    from envcalc.symbolic import Add, Call, Mul, Neg, Pow

    return st.one_of(
        st.tuples(children, children).map(lambda ab: Add(ab)),
        st.tuples(children, children).map(lambda ab: Mul(ab)),
        children.map(Neg),
        st.tuples(children, st.integers(0, 3)).map(lambda be: Pow(*be)),
        st.tuples(st.sampled_from(["exp", "sin", "cos"]), children).map(lambda fa: Call(*fa)),
    )


trees = st.recursive(_leaves, _extend, max_leaves=8)
