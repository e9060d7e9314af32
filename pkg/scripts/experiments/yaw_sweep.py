import numpy as np
import pylab

from twinnav.simulate import NoiseSpec, SimulationConfig, TrajectorySpec, simulate

PIXEL_SIGMA = 1.0
SEED = 0


def main():
    cfg = SimulationConfig(
        trajectory=TrajectorySpec.yaw_sweep(-40, 40, 5),
        noise=NoiseSpec(pixel_sigma=PIXEL_SIGMA, seed=SEED),
    )
    _, report = simulate(cfg)

    true = np.array([f.true_angles.as_tuple() for f in report.frames])
    recovered = np.array([f.recovered_angles.as_tuple() for f in report.frames])
    for name, value in report.angle_rmse.items():
        print(f"{name} RMSE: {value:.3f} deg")

    for i, name in enumerate(("yaw", "pitch", "roll")):
        pylab.plot(true[:, 0], recovered[:, i], "o-", label=f"recovered {name}")
    pylab.plot(true[:, 0], true[:, 0], "k--", label="true yaw")
    pylab.title(f"Head pose over a yaw sweep, {PIXEL_SIGMA} px landmark noise")
    pylab.xlabel("True yaw (deg)")
    pylab.ylabel("Recovered angle (deg)")
    pylab.legend()
    pylab.show()


if __name__ == "__main__":
    main()
