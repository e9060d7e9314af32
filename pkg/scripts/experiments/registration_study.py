import numpy as np
import pylab

from twinnav.simulate import build_head_scene, registration_study

SIGMAS = np.linspace(0.5, 4.0, 8)
TRIALS = 1000


def main():
    scene = build_head_scene()
    fre = []
    for sigma in SIGMAS:
        study = registration_study(scene, sigma_mm=sigma, trials=TRIALS)
        fre.append(study["rms_fre_mm"])
        print(f"sigma {sigma:.2f} mm: RMS FRE {fre[-1]:.3f} mm")

    pylab.plot(SIGMAS, fre, "o-", label="three-landmark registration")
    pylab.axhline(study["paper_fre_mm"], color="k", linestyle="--", label="reference FRE")
    pylab.title("Fiducial registration error")
    pylab.xlabel("Landmark noise (mm)")
    pylab.ylabel("RMS FRE (mm)")
    pylab.legend()
    pylab.show()


if __name__ == "__main__":
    main()
