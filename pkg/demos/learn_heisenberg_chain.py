"""Learning every coefficient of a six-qubit Heisenberg chain."""
import time

from hamlearn import SimulatedDevice, learn_all
from hamlearn.instances import heisenberg_chain
from hamlearn.hamiltonian import build_cluster_graph_and_color, build_clusters

#
# A chain with XX, YY and ZZ couplings on every bond and a Z field on every
# site; the coefficients are random in [-1, 1] and hidden inside the device.
#
h = heisenberg_chain(6, seed=2024)
coloring = build_cluster_graph_and_color(build_clusters(h))
print(f"{h.M} terms, {len(coloring.clusters)} clusters, {coloring.n_colors} colors")
for c in range(coloring.n_colors):
    print(f"  color {c}: clusters {coloring.color_class(c)} are learned in parallel")

#
# The learner only knows which Pauli terms are present.  It talks to the
# device through experiment plans and receives measurement bits back.
#
for backend in ("qdrift", "trotter"):
    device = SimulatedDevice(h, seed=1)
    tic = time.perf_counter()
    result = learn_all(device, h.paulis, epsilon=0.05, delta=0.05, backend=backend, seed=1)
    elapsed = time.perf_counter() - tic
    print(f"\n{backend}: max error {result.max_error(h):.2e}, "
          f"T = {result.ledger.total_evolution_time:.3g}, "
          f"{result.ledger.experiment_count} experiments, {elapsed:.1f}s")

#
# Per-term view of the last run.
#
print(f"\n{'term':8s} {'estimate':>9s} {'true':>9s} {'passes':>6s}")
for est in result.estimates:
    print(f"{str(est.term):8s} {est.value:9.4f} {h.coefficient(est.term):9.4f} {len(est.provenance):6d}")
