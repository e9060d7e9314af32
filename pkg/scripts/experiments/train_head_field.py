from pathlib import Path

import numpy as np
import pylab

from twinnav import config
from twinnav.geometry import CameraIntrinsics
from twinnav.mesh import edge_statistics, export_ply, mesh_from_checkpoint
from twinnav.metrics import evaluate
from twinnav.radiance import RenderConfig, TrainConfig, render_image, save_checkpoint, train
from twinnav.simulate import TrajectorySpec, build_head_scene, generate_views, radiance_views

OUT_DIR = Path("build/head_field")
VIEWS = 36
HELDOUT_EVERY = 6
RENDER_K = CameraIntrinsics(80.0, 80.0, 32.0, 32.0, 64, 64)
RENDER = RenderConfig(near=400.0, far=800.0, samples=64)


def main():
    scene = build_head_scene()
    K = CameraIntrinsics.from_dict(config.CAMERA)
    dataset = generate_views(
        scene, K, TrajectorySpec.orbit(VIEWS), render_cfg=RENDER, render_K=RENDER_K
    )
    views = radiance_views(dataset)
    heldout = views[::HELDOUT_EVERY]
    training = [v for i, v in enumerate(views) if i % HELDOUT_EVERY]
    print(f"{len(training)} training views, {len(heldout)} held out")

    cfg = TrainConfig(
        steps=config.HEAD_FIELD_STEPS,
        batch_size=config.HEAD_FIELD_BATCH_SIZE,
        learning_rate=config.HEAD_FIELD_LEARNING_RATE,
        deterministic=False,
    )
    result = train(training, cfg)
    save_checkpoint(result.params, OUT_DIR / "field.ckpt")

    for image, view_K, pose in heldout:
        report = evaluate(image, render_image(result.params, view_K, pose, RENDER))
        print(f"PSNR {report.psnr_db:.2f} dB, SSIM {report.ssim:.3f}")

    mesh, _ = mesh_from_checkpoint(result.params)
    export_ply(mesh, OUT_DIR / "head.ply")
    print(edge_statistics(mesh))

    pylab.semilogy(np.arange(len(result.losses)), result.losses)
    pylab.title("Photometric loss")
    pylab.xlabel("Step")
    pylab.ylabel("Mean squared error")
    pylab.show()


if __name__ == "__main__":
    main()
