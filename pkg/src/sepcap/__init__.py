"""sepcap: separation capacity of two-layer random ReLU networks.

A library plus CLI harness for the geometry behind dithered random ReLU
layers: point-set complexity measures, random-hyperplane separation
probabilities, distance-preservation checks, explicit separator constructions,
and seeded end-to-end experiments.
"""

__version__ = "0.1.0"
