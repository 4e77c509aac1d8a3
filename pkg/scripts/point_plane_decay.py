"""Point-source vs plane-wave reconstruction mismatch as the scatterer recedes."""
import argparse

from wavegesture.forward import SoftModel
from wavegesture.oracles import verify_point_plane
from wavegesture.validation import KAPPA_HIGH, UNIT_CUBE


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--panels", type=int, default=8)
    p.add_argument("--radii", type=float, nargs="*", default=[25.0, 50.0, 100.0, 200.0])
    args = p.parse_args()
    model = SoftModel(UNIT_CUBE, KAPPA_HIGH, args.panels)
    report = verify_point_plane(model, KAPPA_HIGH, [(r, 0.0, 0.0) for r in args.radii])
    print(report.to_text())


if __name__ == "__main__":
    main()
