"""Batch pipeline driver: featurize, train, infer, verify.

Exit codes: 0 success, 2 usage or input error, 3 infeasible target,
4 solver failure.  All subcommands are deterministic under a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descriptors import (
    build_space,
    featurize,
    read_feature_csv,
    space_from_json,
    space_hash,
    space_to_json,
    write_feature_csv,
)
from .graph import graph_from_json_text, graph_to_json_text
from .milp.build import BuildError, build_milp, polish_solution
from .milp.model import emit_lp
from .milp.decode import decode, solution_feature_values
from .milp.solve import (
    ExternalBackend,
    SolutionCheckError,
    SolverFailure,
    default_external_backend,
    solve,
)
from .regression import (
    LinearPredictor,
    cross_validate,
    lasso_fit,
    predictor_from_json_text,
    predictor_to_json_text,
)
from .sdf import parse_sdf
from .topospec import SpecError, check_graph_satisfies, parse_spec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4


class UsageError(Exception):
    pass


@dataclass
class ProjectConfig:
    dataset: str = ""
    targets: str = ""
    rho: int = 2
    lambda_grid: tuple[float, ...] = (0.0001, 0.001, 0.01, 0.1)
    cv_executions: int = 10
    spec: str = ""
    predictor: str = ""
    solver_command: str = ""
    solver_timeout: float = 600.0
    output_dir: str = "out"
    seed: int = 0

    @staticmethod
    def load(path: str) -> "ProjectConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise UsageError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        cfg = ProjectConfig()
        for key, value in doc.items():
            if not hasattr(cfg, key):
                raise UsageError(f"unknown config key {key!r}")
            if key == "lambda_grid":
                value = tuple(float(v) for v in value)
            setattr(cfg, key, value)
        if cfg.rho < 1:
            raise UsageError("rho must be at least 1")
        return cfg

    def backend(self) -> ExternalBackend | str:
        if self.solver_command == "mini":
            return "mini"
        if self.solver_command:
            return ExternalBackend(self.solver_command, self.solver_timeout)
        return default_external_backend(self.solver_timeout)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except FileNotFoundError as exc:
        raise UsageError(f"file not found: {path}") from exc


def _load_dataset(path: str):
    text = _read_text(path)
    result = parse_sdf(text)
    for err in result.errors:
        print(f"warning: record {err.record} ({err.name}): {err.message}",
              file=sys.stderr)
    return result


def run_featurize(cfg: ProjectConfig) -> int:
    result = _load_dataset(cfg.dataset)
    if not result.graphs:
        print("error: no parsable records in the dataset", file=sys.stderr)
        return EXIT_USAGE
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    space = build_space(result.graphs, cfg.rho)
    vectors = [featurize(g, space) for g in result.graphs]
    (out / "features.csv").write_text(
        write_feature_csv(result.names, vectors, space)
    )
    (out / "space.json").write_text(
        json.dumps(space_to_json(space), indent=2, sort_keys=True)
    )
    print(f"featurized {len(vectors)} graphs, K={space.k}")
    print(f"wrote {out / 'features.csv'} and {out / 'space.json'}")
    return EXIT_OK


def _load_targets(path: str) -> dict[str, float]:
    text = _read_text(path)
    targets: dict[str, float] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.lower().startswith("id,"):
            continue
        name, _, value = line.partition(",")
        try:
            targets[name.strip()] = float(value)
        except ValueError as exc:
            raise UsageError(f"bad target line {line!r}") from exc
    return targets


def run_train(cfg: ProjectConfig) -> int:
    out = Path(cfg.output_dir)
    ids, names, rows = read_feature_csv(_read_text(str(out / "features.csv")))
    space = space_from_json(json.loads(_read_text(str(out / "space.json"))))
    targets = _load_targets(cfg.targets)
    missing = [i for i in ids if i not in targets]
    if missing:
        print(f"error: no target value for ids {missing[:5]}", file=sys.stderr)
        return EXIT_USAGE

    x_raw = np.asarray(rows, dtype=float)
    y_raw = np.asarray([targets[i] for i in ids], dtype=float)
    mins = x_raw.min(axis=0)
    maxs = x_raw.max(axis=0)
    span = np.where(maxs > mins, maxs - mins, 1.0)
    x = np.where(maxs > mins, (x_raw - mins) / span, 0.0)
    t_min, t_max = float(y_raw.min()), float(y_raw.max())
    y = (y_raw - t_min) / (t_max - t_min) if t_max > t_min else y_raw * 0.0

    print(f"{'lambda':>12} {'K_sel':>8} {'median_R2':>10}")
    best = None
    for lam in cfg.lambda_grid:
        report = cross_validate(
            x, y, lam, executions=cfg.cv_executions, seed=cfg.seed
        )
        print(f"{lam:>12.6g} {report.mean_selected:>8.1f} {report.median_r2:>10.4f}")
        if best is None or report.median_r2 > best[1].median_r2:
            best = (lam, report)
    assert best is not None
    lam, report = best
    fit = lasso_fit(x, y, lam)
    predictor = LinearPredictor(
        weights=tuple(float(w) for w in fit.weights),
        bias=float(fit.bias),
        lam=lam,
        descriptor_names=tuple(names),
        mins=tuple(float(v) for v in mins),
        maxs=tuple(float(v) for v in maxs),
        target_min=t_min,
        target_max=t_max,
        space_hash=space_hash(space),
    )
    path = cfg.predictor or str(out / "predictor.json")
    Path(path).write_text(predictor_to_json_text(predictor))
    print(
        f"selected lambda={lam:g} (median R2={report.median_r2:.4f}, "
        f"K'={report.mean_selected:.1f}); wrote {path}"
    )
    return EXIT_OK


def run_infer(cfg: ProjectConfig, y_lo: float, y_hi: float) -> int:
    if y_lo > y_hi:
        print("error: empty target interval", file=sys.stderr)
        return EXIT_USAGE
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = parse_spec(_read_text(cfg.spec))
    space = space_from_json(json.loads(_read_text(str(out / "space.json"))))
    predictor = predictor_from_json_text(
        _read_text(cfg.predictor or str(out / "predictor.json"))
    )
    lo_std = predictor.standardize(y_lo)
    hi_std = predictor.standardize(y_hi)
    model = build_milp(spec, space, predictor, lo_std, hi_std)
    (out / "model.lp").write_text(emit_lp(model))
    try:
        sol = solve(model, cfg.backend(), time_limit=cfg.solver_timeout,
                    polish=polish_solution)
    except (SolverFailure, SolutionCheckError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    (out / "solve.log").write_text(sol.log)
    if sol.status == "infeasible":
        print("status: infeasible (no graph satisfies the request)")
        return EXIT_INFEASIBLE
    graph = decode(sol, spec, space)
    (out / "result.json").write_text(graph_to_json_text(graph))
    (out / "result.sdf").write_text(graph_to_sdf(graph, "inferred"))
    fv = featurize(graph, space)
    y_std = predictor.predict_normalized(fv.as_floats())
    y_val = predictor.destandardize(y_std)
    report = check_graph_satisfies(spec, graph)
    xs = solution_feature_values(sol, space)
    x_match = all(
        abs(a - bval) <= 1e-6 for a, bval in zip(fv.as_floats(), xs)
    )
    verification = {
        "predicted_value": y_val,
        "predicted_standardized": y_std,
        "interval": [y_lo, y_hi],
        "in_interval": y_lo - 1e-9 <= y_val <= y_hi + 1e-9,
        "feature_vector_matches_model": x_match,
        "spec_report": report.to_json(),
    }
    (out / "verification.json").write_text(json.dumps(verification, indent=2))
    print(f"status: feasible; wrote {out / 'result.json'} and {out / 'result.sdf'}")
    print(f"predicted value: {y_val:g} (interval [{y_lo:g}, {y_hi:g}])")
    print(f"specification check: {'pass' if report.passed else 'FAIL'}")
    return EXIT_OK


def graph_to_sdf(graph, name: str) -> str:
    """Minimal V2000 rendering (no coordinates)."""
    ids = {v.id: i + 1 for i, v in enumerate(graph.vertices)}
    lines = [name, "  invqsar", "", ""]
    lines[3] = f"{len(graph.vertices):3d}{len(graph.edges):3d}  0  0  0  0  0  0  0  0999 V2000"
    for v in graph.vertices:
        lines.append(
            f"    0.0000    0.0000    0.0000 {v.element.symbol:<3} 0  0  0  0  0  0  0  0  0  0  0  0"
        )
    for e in graph.edges:
        lines.append(f"{ids[e.u]:3d}{ids[e.v]:3d}{e.mult:3d}  0  0  0  0")
    charged = [(ids[v.id], v.charge) for v in graph.vertices if v.charge]
    if charged:
        head = f"M  CHG{len(charged):3d}"
        for vid, chg in charged:
            head += f"{vid:4d}{chg:4d}"
        lines.append(head)
    lines.append("M  END")
    lines.append("$$$$")
    return "\n".join(lines) + "\n"


def run_verify(graph_path: str, spec_path: str, predictor_path: str,
               space_path: str) -> int:
    graph = graph_from_json_text(_read_text(graph_path))
    spec = parse_spec(_read_text(spec_path))
    space = space_from_json(json.loads(_read_text(space_path)))
    predictor = predictor_from_json_text(_read_text(predictor_path))
    problems = graph.validate()
    print(f"graph invariants: {'pass' if not problems else 'FAIL: ' + '; '.join(problems[:3])}")
    fv = featurize(graph, space)
    y = predictor.destandardize(predictor.predict_normalized(fv.as_floats()))
    print(f"predicted value: {y:g}")
    report = check_graph_satisfies(spec, graph)
    print(report.to_text())
    ok = not problems and report.passed
    return EXIT_OK if ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="invqsar",
        description="Feature vectors, property prediction and inverse design "
        "of chemical graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_feat = sub.add_parser("featurize", help="dataset SDF -> feature CSV + space")
    p_feat.add_argument("--config", required=True)

    p_train = sub.add_parser("train", help="feature CSV + targets -> predictor")
    p_train.add_argument("--config", required=True)

    p_infer = sub.add_parser("infer", help="spec + interval -> chemical graph")
    p_infer.add_argument("--config", required=True)
    p_infer.add_argument("--lo", type=float, required=True,
                         help="interval lower end, original property units")
    p_infer.add_argument("--hi", type=float, required=True,
                         help="interval upper end, original property units")

    p_verify = sub.add_parser("verify", help="re-check a graph against spec+predictor")
    p_verify.add_argument("graph")
    p_verify.add_argument("spec")
    p_verify.add_argument("predictor")
    p_verify.add_argument("space")

    args = parser.parse_args(argv)
    try:
        if args.command == "featurize":
            return run_featurize(ProjectConfig.load(args.config))
        if args.command == "train":
            return run_train(ProjectConfig.load(args.config))
        if args.command == "infer":
            return run_infer(ProjectConfig.load(args.config), args.lo, args.hi)
        if args.command == "verify":
            return run_verify(args.graph, args.spec, args.predictor, args.space)
    except (UsageError, SpecError, BuildError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
