"""Bipedal stepping-stone locomotion stack.

Submodules:
    solver   -- dense QP (interior point) and SQP NLP driver
    model    -- single-rigid-body dynamics and discretization
    rbd      -- 16-DoF rigid-body tree: kinematics, Jacobians, dynamics
    terrain  -- stepping-stone maps and randomized generation
    trajopt  -- offline gait-period trajectory optimization
    mpc      -- adaptive-frequency force-and-moment MPC
    wbc      -- whole-body control torque mapping and swing-leg PD
    sim      -- nonlinear rigid-body plant and episode runner
    cli      -- command-line entry points
"""

__version__ = "0.1.0"
