"""overlook: deterministic simulator and experiment harness for
perspective-switching VR travel versus arc-based teleportation."""

from .geometry import (EYE_HEIGHT_BASE, IPD_BASE, Pose, RigState,
                       TransitionParams, Vec3, depression_offset, ease,
                       tm_pose_from_nm, transition_sample)
from .world import (GroundHit, WorldModel, WorldSpec, flat_world,
                    generate_world)
from .avatar import Avatar, plan_path
from .outstanding import OutstandingTechnique, Phase, TechniqueStateError
from .teleport import TeleportTechnique, invert_ballistics
from .metrics import (EventLog, SessionReport, distance_bucket,
                      normalized_flow, summarize)
from .engine import EngineConfig, InputEvent, Session, run_script
from .experiment import ExperimentConfig, run_experiment, run_policy_session
from .policies import OutstandingTravelerPolicy, TeleportChainPolicy

__version__ = "0.1.0"

__all__ = [
    "Avatar", "EngineConfig", "EventLog", "ExperimentConfig", "GroundHit",
    "InputEvent", "OutstandingTechnique", "OutstandingTravelerPolicy",
    "Phase", "Pose", "RigState", "Session", "SessionReport",
    "TechniqueStateError", "TeleportChainPolicy", "TeleportTechnique",
    "TransitionParams", "Vec3", "WorldModel", "WorldSpec",
    "depression_offset", "distance_bucket", "ease", "flat_world",
    "generate_world", "invert_ballistics", "normalized_flow", "plan_path",
    "run_experiment", "run_policy_session", "run_script", "summarize",
    "tm_pose_from_nm", "transition_sample",
    "EYE_HEIGHT_BASE", "IPD_BASE",
]
