"""Discrete Cosserat dynamics of an underwater soft arm with two-time-scale control."""

from .control import (ConstantReference, ControllerState, ControlSettings, Reference, SampledReference,
                      errors_of, fast_control, lyapunov_values, multirate_step, slow_control)
from .dynamics import (AbscissaMask, DynamicsTerms, MassMatrixError, assemble_many, assemble_terms,
                       forward_dynamics, internal_force, kinetic_energy, elastic_energy)
from .kinematics import JointState, body_twist, global_config, jacobian, jacobian_dot
from .model import (ConfigError, Gains, Integration, RobotModel, RunConfig, default_config, load_config,
                    parse_config)
from .perturbation import (MassSplit, QuasiSteadyError, boundary_layer_rhs, epsilon_of,
                           quasi_steady_velocity, split_by_fraction)
from .screw import Pose, ad_small, adjoint_of, exp_se3, hat, tangent_exp, vee
from .simulation import Scenario, Trajectory, rk4_step, run_closed_loop, run_passive

__version__ = "0.1.0"
