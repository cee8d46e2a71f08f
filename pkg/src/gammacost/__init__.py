"""Viscous and entropy costs of scalar conservation laws and their vanishing-viscosity limits."""
from .errors import *  # noqa: F401,F403
from .model import (EntropyPair, FluxModel, RelaxationKernel, TabulatedFunction, einstein_entropy,
                    entropy_pair, envelopes, make_model, quadratic_entropy, r_closed_form, r_fsigma)
from .grid import (PiecewiseBVSolution, Shock, SpaceTimeField, SpaceTimeGrid, dist_scrU, dist_U, dist_X,
                   du_norm, field_from_function, rasterize, staircase)
from .solvers import ControlField, SolverConfig, solve_controlled, solve_entropic, solve_viscous
from .cost import (CostReport, cost_H_bv, cost_H_eps, cost_H_prime_bv, cost_I_eps, cost_I_projected,
                   entropy_production, tv_positive_part)
from .young import AtomicYoungMeasure, FluxPotential, cost_mv, reduce_to_atoms, slice_approximation
from .hj import HJField, cost_J_eps, decompose_J, hj_sweep

__version__ = "0.1.0"
