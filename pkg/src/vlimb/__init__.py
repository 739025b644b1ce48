"""Simulator and layered controller for a 5-DOF wire-driven wearable
extension arm: rigid-body dynamics, tendon routing with wrap detection,
tension allocation, a scripted scenario harness, a CLI, and a websocket
gateway for the browser console."""

from .model import (ModelError, ModelParseError, ModelValidationError,
                    RobotModel, default_vlimb, load_model, model_from_dict,
                    model_to_dict, validate_model, write_model)
from .kinematics import (bias_forces, forward_kinematics, gravity_torque,
                         mass_matrix, point_jacobian, rnea)
from .tendon import (detect_wrap, element_lengths, moment_arm,
                     muscle_jacobian, resolve_routing, solve_ring_angles)
from .control import (ControlGains, Trajectory, allocate_tensions,
                      compute_torque, control_step, duration_for,
                      gains_from_model, plan_trajectory, tension_to_current)
from .plant import (BeltWireContact, GraspError, ModeSwitchError, PlantParams,
                    SimState, apply_grasp, init_state, release_grasp,
                    set_mode, step)
from .scenarios import (SCENARIOS, Criterion, ScenarioReport, csv_bytes,
                        read_csv, report_hash, run_lift, run_manipulation,
                        run_reachability, summary_text, write_csv,
                        write_summary)

__version__ = "0.1.0"
