"""Break each semantics on purpose and watch the cross-check notice.

    python3 demos/mutants.py
"""

from effcore import mutation
from effcore.conformance import FLAGS, run_corpus
from effcore.deep import deep

clean = deep(run_corpus)["summary"]
print(f"clean corpus: {clean['programs']} runs, {clean['disagreements']} disagreements")

for name in mutation.KNOWN:
    with mutation.mutate(name):
        rep = deep(run_corpus)
    s = rep["summary"]
    which = [f for f in FLAGS if s[f"{f}_failures"]]
    print(f"{name:18} {s['disagreements']:2} disagreements, failing checks: {', '.join(which)}")
