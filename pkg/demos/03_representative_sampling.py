"""Representative sub-sampling: shrink a corpus while keeping its noisy
fraction.

The sampler screens every sample clean/noisy, then greedily picks the most
representative members of each stratum by summed cosine similarity of their
embeddings.
"""
from pipecraft import HashingEmbedder, Screener, stratified_sample
from pipecraft.synthetic import messy_corpus

corpus = messy_corpus(seed=2)
screener = Screener()

noisy_in = sum(1 for s in corpus if screener.classify(s).is_noisy)
print(f"corpus: {len(corpus)} samples, {noisy_in} noisy "
      f"({noisy_in / len(corpus):.1%})")

for rate in (0.5, 0.25, 0.1):
    sampled = stratified_sample(corpus, rate, screener, HashingEmbedder())
    noisy_out = sum(1 for s in sampled if screener.classify(s).is_noisy)
    print(f"rate {rate:>4}: {len(sampled):>2} samples, "
          f"{noisy_out} noisy ({noisy_out / len(sampled):.1%})")
