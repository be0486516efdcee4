"""Local M-estimation with discontinuous criteria."""
