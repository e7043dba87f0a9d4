# Topology-driven pruning toolkit
