"""MILP construction, LP-file emission, solving and graph decoding."""
