"""Reference-domain quadrature rules."""
