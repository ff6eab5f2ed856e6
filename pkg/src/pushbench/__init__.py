"""pushbench: behavioural-cloning OOD-generalisation workbench on a
deterministic 2D push task.

The library is organised around five pieces:
  geometry  - SE(2)/SE(3) pose algebra and the locality-ball projection
  spaces    - problem-space encoders (raw P, EE-frame T1, projected T2)
  sim       - the quasi-static PushT environment and scripted demonstrator
  learn     - numpy MLP / DDPM training stack with exact gradients
  harness   - datasets, distance-binned evaluation, matrix runs, teleop
"""
from . import geometry, spaces, sim, learn, harness

__version__ = "0.1.0"

__all__ = ["geometry", "spaces", "sim", "learn", "harness", "__version__"]
