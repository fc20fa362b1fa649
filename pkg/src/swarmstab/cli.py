"""Command-line front end.

    swarmstab analyze SCENARIO.json [--out DIR] [--expect VERDICT]
    swarmstab simulate SCENARIO.json [--out DIR] [--samples N]
    swarmstab paper {1,2,3} [--out DIR]
    swarmstab selftest [--seed S]

Exit codes: 0 ok, 1 I/O or validation error, 2 indeterminate analysis,
3 verdict differs from the expected one.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .criteria import (
    Classification,
    StabilityVerdict,
    check_consensus,
    check_swarm_stability,
    corollary_fast_paths,
    overall_verdict,
    strict_tolerance,
)
from .graph import GraphError, WeightedDigraph
from .matkit import MatkitError
from .network import NetworkSystem
from .pencil import REGULAR, MatrixPencil, PencilError
from .scenario import EXPECTATIONS, Scenario, ScenarioError, load_builtin, parse_scenario
from .selftest import run_selftest
from .simulator import (
    CLASSIFICATION_HORIZON,
    SimulationError,
    default_grid,
    empirical_classify,
    simulate,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INDETERMINATE = 2
EXIT_MISMATCH = 3


def _pairs(values):
    return [[float(np.real(z)), float(np.imag(z))] for z in np.atleast_1d(values)]


def _vector(v):
    if v is None:
        return None
    v = np.asarray(v)
    return _pairs(v) if np.iscomplexobj(v) else [float(x) for x in v]


class Analysis:
    """Everything the report needs, computed once from a scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        tol = scenario.tol
        self.system = NetworkSystem(MatrixPencil(scenario.E, scenario.F, tol), WeightedDigraph(scenario.W), tol)
        self.warnings = []
        self.decomposition = None
        cp = self.system.char_poly
        if cp.status == REGULAR:
            try:
                self.decomposition = self.system.decomposition
            except MatkitError as exc:
                self.warnings.append(f"standard decomposition failed: {exc}")
        else:
            self.warnings.append(f"pencil regularity: {cp.status} (sigma_min/sigma_max {cp.conditioning:.3e})")

        if self.decomposition is not None:
            self.consensus = check_consensus(self.system)
            self.swarm = check_swarm_stability(self.system)
            self.fast_path = corollary_fast_paths(self.system)
            self.verdict = overall_verdict(self.consensus, self.swarm)
        else:
            reason = [{"code": "pencil_not_regular" if cp.status != REGULAR else "decomposition_failed"}]
            self.consensus = StabilityVerdict(Classification.INDETERMINATE, reason)
            self.swarm = StabilityVerdict(Classification.INDETERMINATE, reason)
            self.fast_path = None
            self.verdict = Classification.INDETERMINATE
        self._boundary_warnings()

    def _boundary_warnings(self):
        lap = self.system.laplacian
        mags = np.abs(lap.spectrum.values)
        near = (mags > lap.cluster_tol) & (mags <= 1e3 * lap.cluster_tol)
        if np.any(near):
            self.warnings.append("a nonzero Laplacian eigenvalue lies near the zero-cluster tolerance")
        if lap.has_spanning_tree != (lap.zero_multiplicity == 1):
            self.warnings.append("spanning-tree reachability and zero-eigenvalue count disagree")
        if self.decomposition is None:
            return
        if self.decomposition.ill_conditioned:
            self.warnings.append(f"decomposition condition estimate {self.decomposition.condition:.3e}")
        tol = strict_tolerance(self.system)
        for e in self.consensus.product_table:
            if tol < abs(e.real) <= 1e3 * tol:
                self.warnings.append(f"product ({e.i},{e.j}) real part {e.real:.3e} is close to the decision band")

    @property
    def indeterminate(self) -> bool:
        return self.verdict is Classification.INDETERMINATE

    def consensus_estimate(self):
        if self.consensus.classification is not Classification.ASYMPTOTICALLY_SWARM_STABLE:
            return None
        return self.scenario.X0 @ self.system.laplacian.left_zero_vector

    def report(self) -> dict:
        sys_ = self.system
        lap = sys_.laplacian
        cp = sys_.char_poly
        dec = self.decomposition
        pencil = {
            "regularity": cp.status,
            "rank_E": sys_.pencil.rank_E,
            "char_poly": _pairs(cp.poly.coefficients),
            "finite_eigenvalues": _pairs(sys_.finite_eigenvalues.values) if cp.status == REGULAR else None,
            "impulse_free": sys_.impulse_free if cp.status == REGULAR else None,
            "n1": dec.n1 if dec else None,
            "n2": dec.n2 if dec else None,
            "h": dec.h if dec else None,
            "decomposition_condition": dec.condition if dec else None,
            "residual_E": dec.residual_E if dec else None,
            "residual_F": dec.residual_F if dec else None,
        }
        return {
            "version": __version__,
            "scenario": self.scenario.to_dict(),
            "laplacian": {
                "spectrum": _pairs(lap.spectrum.values),
                "zero_multiplicity": lap.zero_multiplicity,
                "spanning_tree": lap.has_spanning_tree,
                "diagonalizable": lap.diagonalizable,
                "left_zero_vector": _vector(lap.left_zero_vector),
            },
            "pencil": pencil,
            "product_table": self.consensus.product_table.to_json(),
            "consensus": self.consensus.to_json(),
            "swarm_stability": self.swarm.to_json(),
            "verdict": self.verdict.value,
            "fast_path": self.fast_path.to_json() if self.fast_path else None,
            "consensus_estimate": _vector(self.consensus_estimate()),
            "warnings": list(self.warnings),
            "simulation": None,
        }


def text_summary(report: dict) -> str:
    def fmt(pairs):
        out = []
        for re, im in pairs:
            out.append(f"{re:.4f}" if im == 0 else f"{re:.4f}{im:+.4f}i")
        return "{" + ", ".join(out) + "}"

    lap, pen = report["laplacian"], report["pencil"]
    lines = [
        f"scenario       {report['scenario']['name']}",
        f"laplacian      {fmt(lap['spectrum'])}",
        f"spanning tree  {lap['spanning_tree']}   diagonalizable {lap['diagonalizable']}",
        f"pencil         {pen['regularity']}, rank(E) = {pen['rank_E']}, impulse free {pen['impulse_free']}",
    ]
    if pen["finite_eigenvalues"] is not None:
        lines.append(f"finite eigs    {fmt(pen['finite_eigenvalues'])}")
        lines.append(f"n1, n2, h      {pen['n1']}, {pen['n2']}, {pen['h']}")
    lines.append(f"consensus test {report['consensus']['classification']}")
    lines.append(f"swarm test     {report['swarm_stability']['classification']}")
    if report["fast_path"]:
        lines.append(f"fast path      {report['fast_path']['path']}: consensus {report['fast_path']['consensus']}")
    if report["consensus_estimate"] is not None:
        lines.append("consensus at   " + ", ".join(f"{v:.4f}" for v in report["consensus_estimate"]))
    sim = report.get("simulation")
    if sim:
        lines.append(
            f"dispersion     {sim['initial_dispersion']:.4f} -> {sim['final_dispersion']:.4f}"
            f" (max {sim['max_dispersion']:.4f}), empirical {sim['empirical']['label']}"
        )
    for w in report["warnings"]:
        lines.append(f"warning        {w}")
    lines.append(f"verdict        {report['verdict']}")
    return "\n".join(lines)


def _atomic_write(path, data):
    mode = "wb" if isinstance(data, bytes) else "w"
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(x) -> str:
    return repr(float(x))


def trajectory_csv(traj) -> str:
    n, m = traj.states.shape[1:]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"x_{i + 1}_{k + 1}" for i in range(m) for k in range(n)])
    for t, X in zip(traj.times, traj.states):
        writer.writerow([_num(t)] + [_num(v) for v in X.T.ravel()])
    return buf.getvalue()


def dispersion_csv(traj) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "dispersion"])
    for t, d in zip(traj.times, traj.dispersion):
        writer.writerow([_num(t), _num(d)])
    return buf.getvalue()


def plot_svg(traj, title="") -> bytes:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n, m = traj.states.shape[1:]
    fig, axes = plt.subplots(n + 1, 1, figsize=(7, 2.2 * (n + 1)), sharex=True)
    axes[0].plot(traj.times, traj.dispersion, color="k")
    axes[0].set_ylabel("dispersion")
    if title:
        axes[0].set_title(title)
    for k in range(n):
        for i in range(m):
            axes[k + 1].plot(traj.times, traj.states[:, k, i], label=f"agent {i + 1}")
        axes[k + 1].set_ylabel(f"x{k + 1}")
    axes[1].legend(loc="upper right", fontsize="small", ncol=min(m, 5))
    axes[-1].set_xlabel("t")
    fig.tight_layout()
    buf = io.BytesIO()
    fig.savefig(buf, format="svg")
    plt.close(fig)
    return buf.getvalue()


def run_simulation(analysis: Analysis):
    """Trajectory over the scenario grid plus the empirical label over a
    horizon at least as long as the classification horizon."""
    sc = analysis.scenario
    traj = simulate(analysis.system, sc.X0, sc.t_grid())
    if sc.t_span[1] >= CLASSIFICATION_HORIZON:
        long = traj
    else:
        long = simulate(analysis.system, sc.X0, default_grid(CLASSIFICATION_HORIZON, 600))
    info = {
        "t_end": sc.t_span[1],
        "samples": len(traj.times),
        "initial_dispersion": float(traj.dispersion[0]),
        "final_dispersion": float(traj.dispersion[-1]),
        "max_dispersion": float(traj.dispersion.max()),
        "impulse_report": traj.impulse_report.to_json(),
        "empirical": {"horizon": float(long.times[-1]), "label": empirical_classify(long, long.times[-1])},
    }
    return traj, info


def _write_outputs(out_dir, report, traj=None):
    os.makedirs(out_dir, exist_ok=True)
    _atomic_write(os.path.join(out_dir, "report.json"), json.dumps(report, indent=2) + "\n")
    if traj is not None:
        _atomic_write(os.path.join(out_dir, "trajectory.csv"), trajectory_csv(traj))
        _atomic_write(os.path.join(out_dir, "dispersion.csv"), dispersion_csv(traj))
        _atomic_write(os.path.join(out_dir, "plot.svg"), plot_svg(traj, report["scenario"]["name"]))


def _apply_overrides(sc: Scenario, args) -> Scenario:
    if getattr(args, "tol_rank", None) is not None:
        sc.tolerances["rank"] = args.tol_rank
    if getattr(args, "tol_eig", None) is not None:
        sc.tolerances["cluster"] = args.tol_eig
    if getattr(args, "samples", None) is not None:
        if args.samples < 2:
            raise ScenarioError(["--samples must be at least 2"])
        sc.samples = args.samples
    if getattr(args, "expect", None) is not None:
        sc.expect = args.expect
    return sc


def _run(sc: Scenario, args, simulate_too: bool) -> int:
    analysis = Analysis(sc)
    report = analysis.report()
    traj = None
    if simulate_too and not analysis.indeterminate and analysis.decomposition is not None:
        traj, report["simulation"] = run_simulation(analysis)
    if args.out:
        _write_outputs(args.out, report, traj)
    if args.format == "json":
        print(json.dumps(report, indent=2))
    else:
        print(text_summary(report))
        if args.out:
            print(f"outputs        {args.out}")
    if analysis.indeterminate:
        return EXIT_INDETERMINATE
    if sc.expect is not None and analysis.verdict.value != sc.expect:
        print(f"expected {sc.expect}, got {analysis.verdict.value}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_analyze(args) -> int:
    return _run(_apply_overrides(parse_scenario(args.scenario), args), args, simulate_too=False)


def cmd_simulate(args) -> int:
    sc = _apply_overrides(parse_scenario(args.scenario), args)
    if args.out is None:
        args.out = sc.name
    return _run(sc, args, simulate_too=True)


def cmd_paper(args) -> int:
    sc = _apply_overrides(load_builtin(args.instance), args)
    if args.out is None:
        args.out = sc.name
    return _run(sc, args, simulate_too=True)


def cmd_selftest(args) -> int:
    scenarios = [parse_scenario(p) for p in args.instance] if args.instance else None
    results = run_selftest(seed=args.seed, scenarios=scenarios, scale=args.scale)
    for r in results:
        print(r.line())
        for f in r.failures[:5]:
            print(f"    {f}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"selftest failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INPUT
    print("selftest passed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory")
    common.add_argument("--samples", type=int, help="number of trajectory samples")
    common.add_argument("--tol-rank", type=float, help="relative SVD rank tolerance")
    common.add_argument("--tol-eig", type=float, help="relative eigenvalue clustering tolerance")
    common.add_argument("--expect", choices=EXPECTATIONS, help="fail with exit code 3 on a different verdict")
    common.add_argument("--format", choices=("json", "text"), default="text", help="stdout format")

    parser = argparse.ArgumentParser(prog="swarmstab", description="Consensus and swarm stability of descriptor networks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="spectral verdicts for a scenario")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", parents=[common], help="verdicts plus trajectory files")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("paper", parents=[common], help="run a built-in reference instance")
    p.add_argument("instance", type=int, choices=(1, 2, 3))
    p.set_defaults(func=cmd_paper)

    p = sub.add_parser("selftest", help="seeded cross-oracle suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=0.2, help="fraction of the full property-test counts")
    p.add_argument("--instance", action="append", default=[], help="scenario file replacing the built-ins")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        where = f"{exc.source}: " if exc.source else ""
        for err in exc.errors:
            print(f"error: {where}{err}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, GraphError, PencilError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SimulationError, MatkitError) as exc:
        print(f"error: simulation failed: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
