"""The three problem spaces on one scene, and why T1/T2 generalise:
a rigid motion of the whole scene changes the raw encoding (P) but leaves the
EE-frame encodings (T1, T2) untouched, and T2 additionally erases how far
away distant entities are."""
import numpy as np

from pushbench.geometry import Pose2, ProjectionRadius, compose
from pushbench.spaces import SpaceSpec, WorldState, encode_state, state_layout

scene = WorldState(
    ee=Pose2(100.0, 400.0, 0.0),
    entities=(Pose2(180.0, 300.0, 0.8),),
    target=np.array([256.0, 256.0]),
)

P = SpaceSpec(kind="p", obs_horizon=1)
T1 = SpaceSpec(kind="t1", obs_horizon=1, drop_trivial_ee=True)
T2 = SpaceSpec(kind="t2", lam=ProjectionRadius(150.0), obs_horizon=1, drop_trivial_ee=True)

for spec in (P, T1, T2):
    vec, _ = encode_state([scene], spec)
    print(f"{spec.kind:>2}: {np.round(vec, 2)}")
print("T2 layout:", state_layout(T2, 1))

# rigid motion of everything: rotate 90 degrees about the workspace corner
g = Pose2(0.0, 0.0, np.pi / 2)
moved = WorldState(
    ee=compose(g, scene.ee),
    entities=(compose(g, scene.entities[0]),),
    target=g.transform_point(scene.target),
)
for spec in (P, T1):
    before, _ = encode_state([scene], spec)
    after, _ = encode_state([moved], spec)
    print(f"{spec.kind:>2} invariant under the motion: {np.allclose(before, after)}")

# locality: two scenes that differ only in how far away the block is (beyond
# lambda) encode identically under T2
far_a = WorldState(ee=Pose2(0, 0, 0), entities=(Pose2(300.0, 0.0, 0.3),), target=np.array([50.0, 0.0]))
far_b = WorldState(ee=Pose2(0, 0, 0), entities=(Pose2(450.0, 0.0, 0.3),), target=np.array([50.0, 0.0]))
va, _ = encode_state([far_a], T2)
vb, _ = encode_state([far_b], T2)
print("T2 ignores the extra 150px of distance:", np.array_equal(va, vb))
