"""Virtual-centroid flocking: one trajectory drives a whole formation."""

__version__ = "0.1.0"
