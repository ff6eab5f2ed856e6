"""Tour of the pose algebra: composition, frame changes, and the
locality-ball projection that caps how far away an entity can appear."""
import math

import numpy as np

from pushbench.geometry import (
    Pose2,
    Pose3,
    ProjectionRadius,
    compose,
    express_in_frame,
    inverse,
    project_lambda,
    rotate_vector_into_frame,
)

# SE(2) composition: translate then rotate
a = Pose2(1.0, 0.0, math.pi / 2)
b = Pose2(1.0, 0.0, 0.0)
print("a o b          =", compose(a, b))  # -> Pose2(1, 1, pi/2)
print("a o a^-1       =", compose(a, inverse(a)))

# expressing a pose in a moving frame: this is what the T1 problem space does
ee = Pose2(10.0, 20.0, 0.0)
block = Pose2(13.0, 24.0, 0.5)
print("block seen from the EE:", express_in_frame(ee, block))

# actions are free vectors: only rotation applies when changing frames
frame = Pose2(5.0, 5.0, math.pi / 2)
print("offset (1,0) in that frame:", rotate_vector_into_frame(frame, [1.0, 0.0]))

# the lambda projection: inside the ball nothing changes, outside the
# position is pulled back onto the sphere, orientation untouched
lam = ProjectionRadius(150.0)
near = Pose2(60.0, 0.0, 1.0)
far = Pose2(300.0, 0.0, 1.0)
print("near entity projected:", project_lambda(near, lam))
print("far  entity projected:", project_lambda(far, lam))

# the same machinery exists for SE(3)
g = Pose3.from_axis_angle([0, 0, 1], math.pi / 3, [1.0, 0.0, 0.0])
h = Pose3.from_axis_angle([1, 0, 0], -math.pi / 4, [0.0, 2.0, 0.0])
gh = compose(g, h)
print("SE(3) composition position:", np.round(gh.position, 6))
print("quaternion stays unit:", abs(np.linalg.norm(gh.quaternion) - 1) < 1e-12)
