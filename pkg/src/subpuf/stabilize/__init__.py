"""Golden keys, TMV, R-MAP enrollment, masking and stabilized readout."""
