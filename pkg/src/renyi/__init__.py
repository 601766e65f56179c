"""Conditional measures for unnormalised laws: sigma-finiteness probes,
disintegration along statistics, and Bayesian models with improper priors."""

from .bayes import (FactorizationVerdict, StatModel, bayes_recipe, factorization_check, mean, model_conditional,
                    posterior, prior_law, sequential_update)
from .disintegration import (CampaignReport, ConditionalFamily, DefiningEquationReport, Statistic,
                             brute_force_oracle, condition_on_statistic, nested_bunch_construction,
                             fiber_campaign, verify_defining_equation, verify_defining_equation_exhaustive)
from .errors import *  # noqa: F401,F403
from .extended import INF
from .extension import DEFAULT_PROTOCOL, DensityField, ExtensionProtocol
from .measures import (Bunch, FiniteMeasure, GridMeasure, Law, Proportionality, condition_on_event, marginal, mass,
                       proportional)
from .renyi import RenyiFamily, RenyiReport, check_renyi_consistency, renyi_family_from_law
from .sigma import Kind, SigmaFinitenessVerdict, sigma_finiteness_probe
from .spaces import Axis, Box, FiniteSpace, GriddedSpace

__version__ = "0.1.0"
