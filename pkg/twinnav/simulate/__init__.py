from twinnav.simulate.pipeline import (
    PipelineOptions,
    PipelineReport,
    SimulationConfig,
    pose_noise_study,
    registration_study,
    run_pipeline,
    simulate,
)
from twinnav.simulate.scene import SceneConfig, SyntheticHeadScene, build_head_scene
from twinnav.simulate.views import (
    NoiseSpec,
    TrajectorySpec,
    generate_views,
    radiance_views,
    write_dataset,
)

__all__ = [
    "NoiseSpec",
    "PipelineOptions",
    "PipelineReport",
    "SceneConfig",
    "SimulationConfig",
    "SyntheticHeadScene",
    "TrajectorySpec",
    "build_head_scene",
    "generate_views",
    "pose_noise_study",
    "radiance_views",
    "registration_study",
    "run_pipeline",
    "simulate",
    "write_dataset",
]
