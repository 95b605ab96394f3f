"""Head pose (pitch, yaw, roll) from four facial landmarks and a 3D reference model.

Both point sets are normalized to unit deviations from their centroids,
the model is re-parametrized on the sphere through its four points, and
its spherical angles are refined by Levenberg-Marquardt before the final
rotation is solved.
"""

__version__ = "0.1.0"

from .errors import (BehindCameraError, DegenerateGeometryError, GimbalLockError, HeadPoseError,
                     InvalidInputError, NumericalFailureError)
from .estimator import (DEFAULT_MODEL, EstimationConfig, EstimationResult, estimate_pose,
                        estimate_pose_no_morph)
from .geometry import EulerAngles, PinholeCamera, WeakPerspectiveCamera, compose_rotation, euler_from_rotation
from .normalization import FeaturePointSet2D, FeaturePointSet3D
from .optimizer import LMConfig

__all__ = [
    "BehindCameraError", "DegenerateGeometryError", "GimbalLockError", "HeadPoseError", "InvalidInputError",
    "NumericalFailureError", "DEFAULT_MODEL", "EstimationConfig", "EstimationResult", "estimate_pose",
    "estimate_pose_no_morph", "EulerAngles", "PinholeCamera", "WeakPerspectiveCamera", "compose_rotation",
    "euler_from_rotation", "FeaturePointSet2D", "FeaturePointSet3D", "LMConfig",
]
