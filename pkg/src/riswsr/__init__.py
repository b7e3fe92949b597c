"""Joint transmit beamforming and RIS phase optimization (weighted sum-rate)."""
