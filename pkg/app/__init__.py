"""Z_M-linear multidimensional-QAM index codes."""
