"""Total evolution time against target accuracy, and the cost of reshaping."""
from hamlearn.studies import RunConfig, deviation_study, scaling_study, tv_study

#
# Halving the target accuracy should double the total evolution time, while
# the number of experiments grows only logarithmically.
#
report = scaling_study(RunConfig(eps_list=[0.1, 0.05, 0.025, 0.0125]))
print(f"{'epsilon':>8s} {'T':>12s} {'experiments':>12s} {'max error':>10s}")
for row in (r for r in report.rows if r[0] == "epsilon"):
    print(f"{row[1]:8.4f} {row[3]:12.4g} {row[4]:12d} {row[5]:10.2e}")
print(f"slope of log T against log(1/epsilon): {report.slope:.3f}")

#
# The reshaped dynamics is only approximately diagonal.  The gap shrinks like
# 1/r for random Pauli sequences and like 1/r^2 for the symmetric product
# formula, independently of the chain length.
#
for backend in ("qdrift", "trotter"):
    dev = deviation_study(RunConfig(), backend)
    print(f"{backend}: deviation slope {dev.slope:.3f}, "
          f"spread across N=4..10 x{dev.checks['size_ratio']:.2f}")

#
# No single experiment of duration t tells +eps Z from -eps Z with total
# variation above (1 - eta) * min(2 eps t, 1).
#
print(tv_study(RunConfig()).summary())
