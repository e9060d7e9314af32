"""
Configuration defaults
======================
Documented default values shared by the pipeline stages. None of these numbers
come from measured data; they are desk-scale choices that can be overridden
through the JSON configs or the command line.
"""

import os

from twinnav.exceptions import BadConfig

# webcam-like camera, head roughly 0.6 m in front of it
CAMERA = {"fx": 800.0, "fy": 800.0, "cx": 320.0, "cy": 240.0, "width": 640, "height": 480}
HEAD_DISTANCE_MM = 600.0

# volume rendering
NEAR_MM = 400.0
FAR_MM = 800.0
RENDER_SAMPLES = 64
BACKGROUND = (0.0, 0.0, 0.0)
WHITE_BACKGROUND = (1.0, 1.0, 1.0)

# scene bounding box used to normalise field inputs to [-1, 1]^3
SCENE_BOUNDS_MM = ((-150.0, -150.0, -150.0), (150.0, 150.0, 150.0))

# radiance field shape
L_X = 6
L_D = 4
TRUNK_DEPTH = 4
TRUNK_WIDTH = 64
COLOR_WIDTH = 64

# training (Adam)
BATCH_SIZE = 1024
LEARNING_RATE = 5e-4
BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8
TRAIN_STEPS = 20_000
LOG_EVERY = 100
# MLP precision and rays per gradient chunk while training
TRAIN_DTYPE = "float32"
TRAIN_CHUNK_SIZE = 128

# desk-scale head field: 30 views at 64x64 within half an hour of CPU time
HEAD_FIELD_STEPS = 6000
HEAD_FIELD_BATCH_SIZE = 256
HEAD_FIELD_LEARNING_RATE = 1e-3

# Levenberg-Marquardt
LM_LAMBDA0 = 1e-3
LM_LAMBDA_FACTOR = 10.0
LM_LAMBDA_MAX = 1e10
LM_MAX_ITERATIONS = 100
LM_STEP_TOL = 1e-10
LM_COST_TOL = 1e-12
MIN_CORRESPONDENCES = 4

# Marching Cubes
MC_ISO = 5.0
MC_RESOLUTION = 128

# registration landmarks, as used for the tool demo
REGISTRATION_LANDMARKS = ("nose_tip", "left_eye_left_corner", "right_eye_right_corner")
SCALE_LANDMARKS = ("left_eye_left_corner", "right_eye_right_corner")
TOOL_TARGET = "left_eye_left_corner"
TOOL_TIP_OFFSET_MM = (0.0, 0.0, 120.0)

# reference value only, never a pass/fail bound
PAPER_FRE_MM = 3.56

# work is split into chunks of this many rays / grid points, independent of threads
CHUNK_SIZE = 4096

THREADS_ENV = "TWINNAV_THREADS"


def resolve_threads(threads=None):
    """
    Worker count: explicit value, else `TWINNAV_THREADS`, else the number of cores.
    """
    if threads is None:
        value = os.environ.get(THREADS_ENV)
        if value is None:
            return os.cpu_count() or 1
        try:
            threads = int(value)
        except ValueError:
            raise BadConfig(f"{THREADS_ENV} must be an integer, got {value!r}") from None
    if threads < 1:
        raise BadConfig(f"thread count must be >= 1, got {threads}")
    return threads


def check_keys(data, allowed, where):
    # unknown keys are errors, not ignored
    if not isinstance(data, dict):
        raise BadConfig(f"{where}: expected an object, got {type(data).__name__}")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise BadConfig(f"{where}: unknown keys {unknown}")
