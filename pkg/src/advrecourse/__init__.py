"""Benchmark toolkit: adversarial training regimes vs. algorithmic recourse."""

from .attack import (AttackConfig, AttackOutcome, attack_success_rate,
                     fgsm_step, min_adversarial_radius, pgd_attack, pgd_config)
from .data import Dataset, Scaler, Split, fit_scale, load_csv, make_blobs, negatives, split
from .harness import DEFAULT_CONFIG, SuiteReport, run_suite
from .metrics import (CostStats, Histogram, MetricsConfig, MetricsReport,
                      accuracy, boundary_histogram, cost_stats, f1_minority,
                      low_cost_rate, manifold_knn, manifold_sphere)
from .model import (MlpClassifier, Vae, decode, encode, init_classifier,
                    init_vae, load_classifier, save_classifier)
from .nn import Gradients, backward, bce_loss, forward
from .recourse import (CounterfactualResult, RecourseConfig, batch_recourse,
                       cchvae, growing_spheres, scfe)
from .svg import emit_svg_histogram
from .train import (AatState, MarginEstimate, MmaConfig, TrainConfig,
                    estimate_margin, init_aat_state, train_iaat, train_mma,
                    train_pgd_adv, train_standard, train_vae)

__version__ = "0.1.0"
