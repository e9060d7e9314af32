from twinnav.image import ImageBuffer
from twinnav.radiance.backprop import batch_gradient, loss_and_gradient
from twinnav.radiance.checkpoint import load_checkpoint, save_checkpoint
from twinnav.radiance.field import (
    EncodingConfig,
    FieldParameters,
    RadianceSample,
    field_eval,
    init_field,
    positional_encode,
)
from twinnav.radiance.render import RenderConfig, render_image, render_ray, render_rays
from twinnav.radiance.train import Adam, TrainConfig, TrainResult, load_dataset, train

__all__ = [
    "Adam",
    "EncodingConfig",
    "FieldParameters",
    "ImageBuffer",
    "RadianceSample",
    "RenderConfig",
    "TrainConfig",
    "TrainResult",
    "batch_gradient",
    "field_eval",
    "init_field",
    "load_checkpoint",
    "load_dataset",
    "loss_and_gradient",
    "positional_encode",
    "render_image",
    "render_ray",
    "render_rays",
    "save_checkpoint",
    "train",
]
