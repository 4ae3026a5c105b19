"""Link lifetime: closed form vs the traffic simulation.

First predicts the remaining connection time for a few hand-picked
geometries, then runs the full randomized sweep and prints the mean
connection time per communication range.
"""

from cftsim.config import load_config
from cftsim.connection import predict_connection_time
from cftsim.simulator import connection_time_sweep

R_M = 250.0

# (label, dx, dy, dvx, dvy) relative state of the partner seen from us
GEOMETRIES = [
    ("oncoming, just entered range ahead", 249.0, 0.0, -50.0, 0.0),
    ("oncoming, abreast in adjacent lane", 0.0, 5.0, -50.0, 0.0),
    ("overtaking us slowly", -100.0, 5.0, 5.0, 0.0),
    ("drifting away ahead", 100.0, 0.0, 8.0, 0.0),
]


def main() -> None:
    print(f"closed-form remaining lifetime inside R={R_M:.0f} m:")
    for label, dx, dy, dvx, dvy in GEOMETRIES:
        t = predict_connection_time(dx, dy, dvx, dvy, R_M)
        print(f"  {label:34s} {t:8.2f} s")

    cfg = load_config()
    print(f"\nsimulated mean connection time "
          f"({cfg.experiments.seeds} seeds per range):")
    res = connection_time_sweep(cfg)
    print("  " + ",".join(res.header))
    for row in res.rows:
        print(f"  R={row[0]:5.0f} m  mean={row[3]:6.2f} s  (n={row[4]})")


if __name__ == "__main__":
    main()
