"""Walk through one nondeterministic program in every semantics.

    python3 demos/nondeterminism.py
"""

from effcore import cps, freemodel
from effcore.conformance import corpus_programs, load_corpus
from effcore.equations import check_derivable_eq
from effcore.operational import eval_fuel, step
from effcore.surface import print_term
from effcore.syntax import Context
from effcore.typecheck import check_respects

corpus = load_corpus()
env = corpus.env()
programs = {name: (m, ty) for name, m, ty in corpus_programs(corpus)}
nd = env["ND"]

for name in ("p0", "p0_first"):
    m, ty = programs[name]
    print(f"== {name}")
    print(print_term(m))

    outcome, trace = eval_fuel(m, 100, effect=ty.effect)
    for t in trace[:-1]:
        print(f"  [{step(t, effect=ty.effect).rule}]")
    print(f"  returns {print_term(trace[-1])} after {len(trace) - 1} steps")

    # the subject as a tree, then folded by the handler
    print(f"  subject tree: {freemodel.show(freemodel.denote_comp((), m.subject, m.effect), m.effect.sig)}")
    print(f"  meaning: {freemodel.show(freemodel.denote_comp((), m, ty.effect))}")

    nf = cps.target_normalize(cps.cps_term(Context(), m, ty.effect), (), cps.cps_type(ty))
    print(f"  CPS normal form: {cps.print_term(nf)}")

    res = check_derivable_eq(Context(), trace[0], trace[-1], ty)
    print(f"  first = last term: {type(res).__name__}")

    for v in check_respects(Context(), m.handler, nd, ty).verdicts:
        extra = f"  ({v.witness})" if v.witness else ""
        print(f"  respects {v.axiom}: {v.status}{extra}")
    print()
