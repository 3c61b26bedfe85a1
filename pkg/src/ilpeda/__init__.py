"""ILP-guided estimation-of-distribution optimisation.

Learns relational rule theories that separate low-cost from high-cost
solutions, then samples new candidates entailed by the learned rules,
iterating down a threshold schedule toward near-optimal regions.
"""

__version__ = "0.1.0"
