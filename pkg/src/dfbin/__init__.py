"""Distribution-free confidence intervals for P(Y=1 | X=x) in binary regression."""
