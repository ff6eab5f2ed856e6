"""Roll out the scripted demonstrator and draw the trajectory: EE path,
block poses over time, demo torus, target."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from pushbench.sim import (
    DEFAULT_CONFIG,
    IN_DIST_MANIFOLD,
    reset,
    rollout,
    scripted_demonstrator,
    world_vertices,
)

cfg = DEFAULT_CONFIG
init = reset(7, IN_DIST_MANIFOLD)
ep = rollout(scripted_demonstrator, init, seed=7)
print(f"episode: {len(ep.steps)} steps, final reward {ep.final_reward:.3f}")

fig, ax = plt.subplots(figsize=(5, 5))
for r in (IN_DIST_MANIFOLD.r_min, IN_DIST_MANIFOLD.r_max):
    ax.add_patch(plt.Circle(cfg.target, r, fill=False, color="red", alpha=0.6))
ax.plot(*cfg.target, "r+", markersize=12)

ee_path = np.array([s.ee.position for s, _, _ in ep.steps] + [ep.final_state.ee.position])
ax.plot(ee_path[:, 0], ee_path[:, 1], "-", color="tab:blue", lw=1, label="EE path")

for i in range(0, len(ep.steps), max(1, len(ep.steps) // 8)):
    verts = world_vertices(ep.steps[i][0].entities[0], cfg.t_vertices)
    ax.fill(verts[:, 0], verts[:, 1], alpha=0.12, color="gray")
verts = world_vertices(ep.final_state.entities[0], cfg.t_vertices)
ax.fill(verts[:, 0], verts[:, 1], alpha=0.6, color="tab:green", label="final block pose")

ax.set_xlim(0, cfg.workspace)
ax.set_ylim(cfg.workspace, 0)  # y-down, as rendered in the teleop client
ax.set_aspect("equal")
ax.legend(loc="lower left", fontsize=8)
ax.set_title(f"scripted push, final reward {ep.final_reward:.2f}")
fig.tight_layout()
fig.savefig("demo_trajectory.png", dpi=130)
print("wrote demo_trajectory.png")
