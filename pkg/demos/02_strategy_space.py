"""The strategy space: 65 ordered team combinations, and how one is applied.

Also shows the tolerant parser accepting the same strategy in several
surface forms.
"""
from pipecraft import (
    ExecutionContext,
    OperatorConfig,
    apply_strategy,
    enumerate_space,
    parse_strategy,
)
from pipecraft.synthetic import messy_corpus

space = enumerate_space()
print(f"{len(space)} strategies; by length:",
      {k: sum(1 for f in space if len(f) == k) for k in range(5)})
print("first five:", [f.canonical() for f in space[:5]])

for text in ("Data Cleaning Team, Data Selection Team",
             "cleaning -> selection",
             "1. Cleaning, Selection"):
    print(f"parse({text!r}) -> {parse_strategy(text).canonical()}")

strategy = parse_strategy("Cleaning -> Generation")
corpus = messy_corpus(seed=1)
ctx = ExecutionContext.with_defaults(OperatorConfig())
processed = apply_strategy(strategy, corpus, ctx)
print(f"\n{strategy.canonical()}: {len(corpus)} -> {len(processed)} samples")
filled = [s for s in processed if "generated" in s.meta]
print(f"generation filled {len(filled)} previously incomplete samples")
