# Domain package: kinematics, occupancy, field regulation, policies, rollout and metrics
