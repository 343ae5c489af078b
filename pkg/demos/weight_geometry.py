"""How the heading weights switch antenna pairs on and off.

Prints the raised-cosine weight profile and, for a few relative poses, the
4x4 weight matrix with the number of fully ignored pairs.

    python3 demos/weight_geometry.py
"""

import math

import numpy as np

from uwb_relpose import Pose2D, weight_matrix, weight_primitive

print("psi [deg]  w(psi)")
for deg in range(0, 181, 15):
    print(f"{deg:>9d}  {weight_primitive(math.radians(deg)):.3f}")

np.set_printoptions(precision=2, suppress=True)
for pose in [Pose2D(3.0, 0.0, 0.0), Pose2D(3.0, 0.0, math.pi), Pose2D(2.0, 2.0, math.radians(100))]:
    W = weight_matrix(pose)
    print(f"\npose ({pose.x}, {pose.y}, {math.degrees(pose.theta):.0f} deg): {np.count_nonzero(W == 0)} of 16 pairs ignored")
    print(W)
