import random

import pytest
from hypothesis import given, settings, strategies as st

from effcore.generate import (
    CH, TICK, GenConfig, Uninhabitable, contains_handle, gen_program, gen_well_typed, target_types,
)
from effcore.prims import BOOL
from effcore.syntax import VOID, CompType, Context, Effect, Signature
from effcore.typecheck import check_term


def test_handles_are_common_at_choice():
    goal = CompType(BOOL, Effect(CH))
    hits = sum(contains_handle(gen_well_typed(GenConfig(seed=s, max_depth=6), goal, Context(),
                                              random.Random(s)))
               for s in range(1, 301))
    assert hits >= 30


def test_empty_sum_is_uninhabitable():
    with pytest.raises(Uninhabitable):
        gen_well_typed(GenConfig(), VOID)
    with pytest.raises(Uninhabitable):
        gen_well_typed(GenConfig(), CompType(VOID, Effect(Signature(()))))


def test_deterministic():
    for seed in (1, 2, 99, 12345):
        assert gen_program(GenConfig(seed=seed)) == gen_program(GenConfig(seed=seed))
    assert len({gen_program(GenConfig(seed=s))[1] for s in range(1, 50)}) > 40


def test_target_pool_per_mode():
    for mode in ("eff", "eff+"):
        for ty in target_types(GenConfig(mode=mode)):
            assert isinstance(ty, CompType)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10**6), st.integers(1, 8), st.sampled_from(["eff", "eff+"]))
def test_programs_typecheck(seed, depth, mode):
    ty, m = gen_program(GenConfig(seed=seed, max_depth=depth, mode=mode))
    assert check_term(Context(), m, ty, mode, "skip") == m


def test_small_pools():
    cfg = GenConfig(seed=3, signature_pool=(TICK,), base_type_pool=(BOOL,))
    for s in range(1, 40):
        cfg.seed = s
        ty, m = gen_program(cfg)
        assert set(ty.effect.sig.names()) <= {"tick"}
        check_term(Context(), m, ty, "eff+", "skip")
