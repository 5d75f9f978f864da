from .schedule import NoiseSchedule, make_linear_schedule, ddim_step, ddim_invert_step
from .conditions import Condition, GuidanceConfig, guided_eps
from .analytic import GaussianMixture, AnalyticDenoiser, analytic_eps
from .pairnet import PairNet, PairNetWeights, PairNetSegment, pairnet_eps

__all__ = ["NoiseSchedule", "make_linear_schedule", "ddim_step", "ddim_invert_step", "Condition",
           "GuidanceConfig", "guided_eps", "GaussianMixture", "AnalyticDenoiser", "analytic_eps", "PairNet",
           "PairNetWeights", "PairNetSegment", "pairnet_eps"]
