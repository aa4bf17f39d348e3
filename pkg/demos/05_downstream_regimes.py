"""The four training regimes on one real subset with diffusion-generated data."""

from diffaug import FeatureSet, Regime, TrainConfig, run_regime, split_subsets, train
from diffaug.selection import diffusion_generator, filter_generate, FilterPolicy
from diffaug.latent import Compressor
from diffaug.toy import toy_splits

train_full, valid, test = toy_splits(seed=0)
real = split_subsets(train_full, 5, 0.2, seed=0)[0]
net = train(real, TrainConfig(epochs=1000, learning_rate=3e-3, hidden=(64, 64), embedding_dim=16))
quota = {c: int(n) for c, n in enumerate(real.class_counts)}
synth = filter_generate(diffusion_generator(net), Compressor.identity(real.d), lambda X: X,
                        FilterPolicy("none"), quota, seed=0, real_features=FeatureSet(real.X, real.y))

clf = TrainConfig(epochs=60, batch_size=32, learning_rate=0.05)
for kind in ("baseline", "traditional_aug", "synthetic_aug", "transfer"):
    m = run_regime(Regime(kind), real, synth, valid, test, clf)
    print(f"{kind:16s} acc {m.accuracy:.4f}  auc {m.auc:.4f}  sens {m.sensitivity:.4f}  "
          f"spec {m.specificity:.4f}")
