"""Class-conditional diffusion for labeled vectors, realism-score filtering,
generative quality metrics and a downstream augmentation harness."""

from .data import DataError, LabeledDataset, load_dataset, save_dataset
from .diffusion import (Denoiser, forward_sample, load_denoiser, predict_noise, reverse_step,
                        sample, save_denoiser, simple_loss, train)
from .downstream import (ClassifierMetrics, Regime, auc, evaluate, run_regime, split_subsets,
                         train_classifier)
from .features import FeatureExtractor, FeatureSet, embed, train_feature_extractor
from .latent import Compressor, decode, encode, fit_linear_compressor
from .metrics import (GaussianStats, ManifoldModel, QualityReport, build_manifold, fid,
                      gaussian_stats, improved_f1, improved_precision, improved_recall,
                      matrix_sqrt_spd, quality_report)
from .schedule import NoiseSchedule, make_cosine_schedule, make_linear_schedule
from .selection import (FilterPolicy, MaxAttemptsExceeded, SyntheticDataset, class_realism_score,
                        filter_generate, realism_score)
from .training import TrainConfig

__version__ = "0.1.0"
