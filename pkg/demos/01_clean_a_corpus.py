"""Cleaning team walkthrough: what each filter removes and why.

Builds a small corpus with planted defects (duplicates, markup,
special-character noise, repetition loops) and shows the before/after of
one cleaning pass.
"""
from pipecraft import OperatorConfig, apply_cleaning
from pipecraft.synthetic import messy_corpus

corpus = messy_corpus(seed=0)
cfg = OperatorConfig()

print(f"raw corpus: {len(corpus)} samples, fingerprint {corpus.fingerprint[:12]}")
cleaned = apply_cleaning(corpus, cfg)
print(f"cleaned:    {len(cleaned)} samples, fingerprint {cleaned.fingerprint[:12]}")

dropped = {s.id for s in corpus} - {s.id for s in cleaned}
print(f"\ndropped {len(dropped)} samples: {sorted(dropped)[:10]} ...")

again = apply_cleaning(cleaned, cfg)
print(f"\ncleaning is idempotent: {again.fingerprint == cleaned.fingerprint}")

sample = next(s for s in corpus if s.id.startswith("mk"))
print("\nmarkup sample before:", sample.answer[:60])
survivor = next((s for s in cleaned if s.id == sample.id), None)
if survivor:
    print("markup sample after: ", survivor.answer[:60])
