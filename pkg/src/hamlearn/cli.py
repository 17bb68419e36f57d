"""Command line entry point: ``hamlearn generate | learn | study <name>``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .instances import KINDS, generate_instance
from .io import config_hash, save_hamiltonian, write_csv, write_json
from .sim import NoiseModel, SimulatedDevice
from .studies import (RunConfig, deviation_study, scaling_study, spam_robustness_study, tv_study)
from .learner import learn_all

STUDIES = {
    "deviation": deviation_study,
    "scaling": scaling_study,
    "spam": spam_robustness_study,
    "tvbound": lambda cfg, backend=None: tv_study(cfg),
}


def _config(args) -> RunConfig:
    data = RunConfig.load(args.config).to_dict() if args.config else RunConfig().to_dict()
    if args.seed is not None:
        data["seed"] = args.seed
    if getattr(args, "backend", None):
        data["backend"] = args.backend
    if args.out:
        data["out_dir"] = args.out
    return RunConfig.from_dict(data)


def cmd_generate(args) -> int:
    h = generate_instance(args.kind, args.n_qubits, seed=args.seed or 0,
                          coeff_range=(args.coeff_min, args.coeff_max))
    path = save_hamiltonian(h, Path(args.out or ".") / "hamiltonian.json")
    print(f"wrote {path} ({h.M} terms, k={h.k}, degree={h.degree})")
    return 0


def cmd_learn(args) -> int:
    cfg = _config(args)
    if args.hamiltonian:
        cfg.hamiltonian = {"file": args.hamiltonian}
    if args.epsilon is not None:
        cfg.epsilon = args.epsilon
    if args.delta is not None:
        cfg.delta = args.delta
    h = cfg.build_hamiltonian()
    device = SimulatedDevice(h, NoiseModel(cfg.eta_meas, cfg.eta_prep), seed=cfg.seed,
                             max_qubits=cfg.n_cap)
    res = learn_all(device, h.paulis, cfg.epsilon, cfg.delta, backend=cfg.backend, seed=cfg.seed)
    out = Path(cfg.out_dir)
    rows = [[str(e.term), e.value, h.coefficient(e.term), abs(e.value - h.coefficient(e.term)),
             len(e.provenance)] for e in res.estimates]
    write_csv(out / "estimates.csv", ["pauli", "estimate", "true", "abs_error", "passes"], rows)
    max_err = res.max_error(h)
    write_json(out / "learn.json", {"config": cfg.to_dict(), "config_hash": config_hash(cfg.to_dict()),
                                    "ledger": res.ledger.to_dict(), "max_error": max_err,
                                    "passed": max_err <= cfg.epsilon})
    print(f"learned {len(res.estimates)} coefficients, max error {max_err:.2e}, "
          f"total evolution time {res.ledger.total_evolution_time:.4g}, "
          f"experiments {res.ledger.experiment_count}")
    return 0 if max_err <= cfg.epsilon else 1


def cmd_study(args) -> int:
    cfg = _config(args)
    report = STUDIES[args.name](cfg, args.backend)
    report.write(cfg.out_dir)
    print(report.summary())
    return 0 if report.passed in (True, None) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hamlearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, backend=True):
        p.add_argument("--config", help="RunConfig JSON file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        if backend:
            p.add_argument("--backend", choices=["qdrift", "trotter"])

    g = sub.add_parser("generate", help="write a Hamiltonian instance as JSON")
    g.add_argument("--kind", choices=KINDS, default="heisenberg_chain")
    g.add_argument("--n-qubits", type=int, default=6)
    g.add_argument("--coeff-min", type=float, default=-1.0)
    g.add_argument("--coeff-max", type=float, default=1.0)
    common(g, backend=False)
    g.set_defaults(func=cmd_generate)

    ln = sub.add_parser("learn", help="learn all coefficients of a Hamiltonian")
    common(ln)
    ln.add_argument("--hamiltonian", help="Hamiltonian JSON file (overrides the config source)")
    ln.add_argument("--epsilon", type=float)
    ln.add_argument("--delta", type=float)
    ln.set_defaults(func=cmd_learn)

    st = sub.add_parser("study", help="run a verification study")
    st.add_argument("name", choices=sorted(STUDIES))
    common(st)
    st.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
