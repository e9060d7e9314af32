import pylab

from twinnav import config
from twinnav.geometry import CameraIntrinsics
from twinnav.simulate import TrajectorySpec, build_head_scene, pose_noise_study

LEVELS = (0.0, 0.25, 0.5, 1.0, 1.5, 2.0)
TRIALS = 200


def main():
    scene = build_head_scene()
    K = CameraIntrinsics.from_dict(config.CAMERA)
    results = pose_noise_study(scene, K, TrajectorySpec.yaw_sweep(), LEVELS, TRIALS)

    for level in LEVELS:
        print(level, results[level])

    for name in ("yaw", "pitch", "roll"):
        pylab.plot(LEVELS, [results[level][name] for level in LEVELS], "o-", label=name)
    pylab.title(f"Median angle RMSE over {TRIALS} trials")
    pylab.xlabel("Landmark noise (px)")
    pylab.ylabel("RMSE (deg)")
    pylab.legend()
    pylab.show()


if __name__ == "__main__":
    main()
