#!/usr/bin/env python3
"""
wdrc - Wasserstein-penalized minimax LQ control CLI

Usage:
    wdrc solve-finite --model m.json --samples w.csv --lambda 5 --horizon 20
    wdrc solve-infinite --model m.json --samples w.csv --lambda 5
    wdrc lambda-star --model m.json --mode infinite
    wdrc simulate --model m.json --samples w.csv --lambda 5 --infinite --trials 100
    wdrc compare-lqg --model m.json --samples w.csv --lambda 1.29 --lambda-sweep 1.3:1000:12
    wdrc grid-build --grid data/grid10_synthetic.json --dt 0.1 --sample-seed 7
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .config import default_output_dir, load_tolerances, parse_overrides
from .console import console, err_console, setup_logging
from .errors import CertificationFailure, ConfigError, WdrcError
from .model import DisturbanceModel, SystemModel, generate_samples, load_model, load_samples, save_model, save_samples
from .powergrid import ExperimentConfig, build_experiment, load_grid
from .simulate import (
    DisturbanceSource,
    TrialBatch,
    box_stats,
    evaluate_cost,
    run_trials,
    write_box_stats_csv,
    write_json,
    write_rows,
    write_trajectory_csv,
)
from .solvers import (
    Mode,
    certify_stability,
    lambda_star,
    solve_finite,
    solve_finite_lqg,
    solve_lqg_steady,
    solve_steady,
    stage_policies,
    steady_policy,
)

logger = logging.getLogger(__name__)


def _given(args: argparse.Namespace, name: str, default):
    """Value of an optional subcommand flag; default only when the command lacks it"""
    value = getattr(args, name, None)
    return default if value is None else value


@dataclass
class RunConfig:
    """Everything a subcommand needs, resolved from the command line"""
    command: str
    model: Optional[Path] = None
    samples: Optional[Path] = None
    lam: Optional[float] = None
    horizon: Optional[int] = None
    infinite: bool = False
    trials: int = 100
    steps: int = 50
    seed: int = 0
    jobs: int = 1
    out: Path = Path('wdrc_out')
    tol_overrides: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.horizon is not None and self.infinite:
            raise ConfigError("--horizon and --infinite are mutually exclusive")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError(f"--horizon must be >= 1, got {self.horizon}")
        if self.trials < 1 or self.steps < 0 or self.jobs < 1:
            raise ConfigError("--trials and --jobs must be >= 1 and --steps >= 0")
        if self.seed < 0:
            raise ConfigError("--seed must be nonnegative")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> 'RunConfig':
        def path(name):
            value = getattr(args, name, None)
            return Path(value) if value else None

        return cls(
            command=args.command,
            model=path('model'),
            samples=path('samples'),
            lam=getattr(args, 'lam', None),
            horizon=getattr(args, 'horizon', None),
            infinite=getattr(args, 'infinite', False),
            trials=_given(args, 'trials', 100),
            steps=_given(args, 'steps', 50),
            seed=getattr(args, 'seed', 0),
            jobs=getattr(args, 'jobs', 1),
            out=default_output_dir(args.out),
            tol_overrides=parse_overrides(args.tol),
        )

    @property
    def finite(self) -> bool:
        return self.horizon is not None

    def to_dict(self) -> Dict:
        return {
            'command': self.command,
            'model': str(self.model) if self.model else None,
            'samples': str(self.samples) if self.samples else None,
            'lambda': self.lam,
            'horizon': self.horizon,
            'infinite': self.infinite,
            'trials': self.trials,
            'steps': self.steps,
            'seed': self.seed,
        }


def _parse_sweep(text: str) -> np.ndarray:
    """lo:hi:n -> n geometrically spaced penalties"""
    try:
        lo, hi, n = text.split(':')
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigError(f"--lambda-sweep must look like lo:hi:n, got '{text}'")
    if not (0 < lo < hi) or n < 2:
        raise ConfigError("--lambda-sweep needs 0 < lo < hi and n >= 2")
    return np.geomspace(lo, hi, n)


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(',')])
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got '{text}'")


def _matrix_table(title: str, M: np.ndarray, max_dim: int = 6) -> Table:
    table = Table(title=title, show_header=False)
    M = np.atleast_2d(M)
    for _ in range(min(M.shape[1], max_dim)):
        table.add_column(justify="right")
    for row in M[:max_dim]:
        table.add_row(*[f"{v:.6g}" for v in row[:max_dim]])
    if M.shape[0] > max_dim or M.shape[1] > max_dim:
        table.caption = f"showing {min(M.shape[0], max_dim)}x{min(M.shape[1], max_dim)} of {M.shape[0]}x{M.shape[1]}"
    return table


class Runner:
    """Executes one subcommand and writes its artifacts"""

    def __init__(self, config: RunConfig, args: argparse.Namespace):
        self.config = config
        self.args = args
        self.tolerances = load_tolerances(config.tol_overrides)

    # -- inputs ---------------------------------------------------------------

    def _model(self) -> SystemModel:
        if self.config.model is None:
            raise ConfigError("--model is required")
        return load_model(self.config.model, self.tolerances)

    def _samples(self, model: SystemModel, required: bool = False) -> Optional[DisturbanceModel]:
        if self.config.samples is None:
            if required:
                raise ConfigError("--samples is required for this command")
            return None
        data = load_samples(self.config.samples)
        if data.k != model.k:
            raise ConfigError(f"samples have dimension {data.k}, model disturbance channel has {model.k}")
        return data

    def _lam(self) -> float:
        if self.config.lam is None:
            raise ConfigError("--lambda is required")
        return self.config.lam

    def _x0(self, model: SystemModel) -> np.ndarray:
        if getattr(self.args, 'x0', None):
            x0 = _parse_vector(self.args.x0)
        elif getattr(self.args, 'experiment', None):
            experiment_path = Path(self.args.experiment)
            if not experiment_path.exists():
                raise FileNotFoundError(f"Experiment file not found: {experiment_path}")
            try:
                with open(experiment_path) as f:
                    document = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{experiment_path} is not valid JSON: {e}")
            try:
                x0 = np.asarray(document.get('experiment', document)['x0'], dtype=float)
            except (AttributeError, KeyError, TypeError, ValueError):
                raise ConfigError(f"{experiment_path} carries no usable x0")
        else:
            x0 = np.zeros(model.n)
            x0[0] = 1.0
        if x0.shape != (model.n,):
            raise ConfigError(f"x0 has {x0.size} entries, model has n={model.n}")
        return x0

    def _out(self, name: str) -> Path:
        return self.config.out / name

    # -- commands -------------------------------------------------------------

    def _cmd_solve_finite(self) -> int:
        model = self._model()
        data = self._samples(model)
        if self.config.horizon is None:
            raise ConfigError("--horizon is required")
        solution = solve_finite(model, data, self._lam(), self.config.horizon, self.tolerances)

        path = write_json({'config': self.config.to_dict(), 'solution': solution.to_dict()},
                          self._out('finite_horizon.json'))

        table = Table(title=f"Finite horizon (T={solution.horizon}, lambda={solution.lam:g})")
        table.add_column("t", style="cyan", justify="right")
        table.add_column("trace P_t", justify="right")
        table.add_column("z_t", justify="right")
        table.add_column("margin", justify="right")
        for t in range(solution.horizon + 1):
            margin = f"{solution.margins[t]:.6g}" if t < solution.horizon else "-"
            table.add_row(str(t), f"{np.trace(solution.P[t]):.6g}", f"{solution.z[t]:.6g}", margin)
        console.print(table)
        console.print(_matrix_table("K_0", solution.K[0]))
        console.print(f"[green]Wrote[/green] {path}")
        return 0

    def _steady(self, model: SystemModel, data: Optional[DisturbanceModel], lam: float):
        method = getattr(self.args, 'method', 'auto')
        solution = solve_steady(model, data, lam, method, self.tolerances)
        try:
            certificate = certify_stability(solution, model, lam).to_dict()
        except CertificationFailure as e:
            logger.warning("%s", e)
            certificate = dict(e.certificate.to_dict()) if e.certificate else {'passed': False}
            certificate['reason'] = str(e)
        return solution, certificate

    def _cmd_solve_infinite(self) -> int:
        model = self._model()
        data = self._samples(model)
        lam = self._lam()
        solution, certificate = self._steady(model, data, lam)
        payload = {'config': self.config.to_dict(), 'solution': solution.to_dict(),
                   'certificate': certificate}
        if data is not None:
            _, policy = steady_policy(solution.P_ss, model, lam, data, self.tolerances)
            payload['worst_case_policy'] = policy.to_dict()
        path = write_json(payload, self._out('steady_state.json'))

        console.print(Panel(
            f"method: {solution.method}"
            + (f" (fallback: {escape(solution.fallback_reason)})" if solution.fallback_reason else '')
            + f"\nspectral radius: {solution.spectral_radius:.10g}"
            + f"\nARE residual: {solution.are_residual:.3e}"
            + f"\nz rate: {solution.z_rate:.10g}"
            + f"\ncertified: {certificate.get('passed', False)}",
            title=f"Steady state (lambda={lam:g})", border_style="blue",
        ))
        console.print(_matrix_table("P_ss", solution.P_ss))
        console.print(_matrix_table("K_ss", solution.K_ss))
        console.print(f"[green]Wrote[/green] {path}")
        return 0

    def _cmd_lambda_star(self) -> int:
        model = self._model()
        if self.args.mode == 'finite':
            if self.config.horizon is None:
                raise ConfigError("--mode finite needs --horizon")
            mode = Mode.finite(self.config.horizon)
        else:
            mode = Mode.infinite()
        result = lambda_star(model, mode, self.args.lo, self.args.hi, self.args.bisection_tol,
                             self.tolerances)
        path = write_json({'config': self.config.to_dict(), 'result': result.to_dict()},
                          self._out('lambda_star.json'))
        console.print(f"lambda* = [bold]{result.lambda_star:.10g}[/bold]  ({mode}, "
                      f"bracket [{result.bracket[0]:.10g}, {result.bracket[1]:.10g}], "
                      f"{result.iterations} bisection steps)")
        console.print(f"[green]Wrote[/green] {path}")
        return 0

    def _controller(self, model: SystemModel, data: DisturbanceModel, lam: float):
        """Gains and worst-case policies (per stage when finite) plus the step count"""
        if self.config.finite:
            solution = solve_finite(model, data, lam, self.config.horizon, self.tolerances)
            return solution.K, stage_policies(solution, model, data, self.tolerances), self.config.horizon
        solution, _ = self._steady(model, data, lam)
        K, policy = steady_policy(solution.P_ss, model, lam, data, self.tolerances)
        return K, policy, self.config.steps

    def _lqg_gains(self, model: SystemModel, data: DisturbanceModel):
        if self.config.finite:
            return solve_finite_lqg(model, data, self.config.horizon, self.tolerances).K
        return solve_lqg_steady(model, data, tolerances=self.tolerances).K_ss

    def _costs(self, batch: TrialBatch, model: SystemModel, lam: float, source: DisturbanceSource) -> Dict:
        reports = [evaluate_cost(batch.trajectory(i), model, lam, source, terminal=self.config.finite)
                   for i in range(batch.trials)]
        return {
            key: float(np.mean([getattr(r, key) for r in reports]))
            for key in ('state_input_cost', 'penalty_term', 'total', 'control_energy')
        }

    def _cmd_simulate(self) -> int:
        model = self._model()
        data = self._samples(model, required=True)
        lam = self._lam()
        x0 = self._x0(model)
        K, policy, steps = self._controller(model, data, lam)
        if self.args.source == 'empirical':
            source = DisturbanceSource.empirical(data)
        else:
            source = DisturbanceSource.worst_case(policy, data)

        batch = run_trials(model, K, source, x0, steps, self.config.trials, self.config.seed, self.config.jobs)
        costs = self._costs(batch, model, lam, source)
        stats = {f"x_{i + 1}": box_stats(batch.states[:, :, i]) for i in range(model.n)}

        write_box_stats_csv(stats, self._out('box_stats.csv'))
        write_trajectory_csv(batch.trajectory(0), self._out('trajectory_0.csv'))
        path = write_json({'config': self.config.to_dict(), 'source': self.args.source,
                           'steps': steps, 'mean_cost': costs}, self._out('simulate.json'))

        table = Table(title=f"Simulation ({self.config.trials} trials, {steps} steps, {self.args.source})")
        table.add_column("metric", style="cyan")
        table.add_column("mean over trials", justify="right")
        for key, value in costs.items():
            table.add_row(key, f"{value:.10g}")
        console.print(table)
        console.print(f"[green]Wrote[/green] {path}")
        return 0

    def _compare_once(self, model, data, lam, x0, monitor) -> Tuple[TrialBatch, TrialBatch, Dict]:
        K, policy, steps = self._controller(model, data, lam)
        source = DisturbanceSource.worst_case(policy, data)
        K_lqg = self._lqg_gains(model, data)
        minimax = run_trials(model, K, source, x0, steps, self.config.trials, self.config.seed, self.config.jobs)
        lqg = run_trials(model, K_lqg, source, x0, steps, self.config.trials, self.config.seed, self.config.jobs)
        summary = {
            'lambda': lam,
            'minimax': self._costs(minimax, model, lam, source),
            'lqg': self._costs(lqg, model, lam, source),
            'minimax_mean_iqr': float(np.mean(box_stats(minimax.states[:, :, monitor]).iqr)),
            'lqg_mean_iqr': float(np.mean(box_stats(lqg.states[:, :, monitor]).iqr)),
        }
        return minimax, lqg, summary

    def _cmd_compare_lqg(self) -> int:
        model = self._model()
        data = self._samples(model, required=True)
        lam = self._lam()
        x0 = self._x0(model)
        monitor = self.args.monitor if self.args.monitor is not None else model.n - 1
        if not 0 <= monitor < model.n:
            raise ConfigError(f"--monitor must be in 0..{model.n - 1}")

        minimax, lqg, summary = self._compare_once(model, data, lam, x0, monitor)
        write_box_stats_csv({'minimax': box_stats(minimax.states[:, :, monitor]),
                             'lqg': box_stats(lqg.states[:, :, monitor])},
                            self._out('box_stats.csv'))
        payload = {'config': self.config.to_dict(), 'monitor': monitor, 'summary': summary}

        table = Table(title=f"Minimax vs LQG under the worst-case source (lambda={lam:g})")
        table.add_column("controller", style="cyan")
        table.add_column("control energy", justify="right")
        table.add_column(f"mean IQR of x_{monitor + 1}", justify="right")
        table.add_row("minimax", f"{summary['minimax']['control_energy']:.8g}", f"{summary['minimax_mean_iqr']:.8g}")
        table.add_row("lqg", f"{summary['lqg']['control_energy']:.8g}", f"{summary['lqg_mean_iqr']:.8g}")
        console.print(table)

        if self.args.lambda_sweep:
            rows = []
            for sweep_lam in _parse_sweep(self.args.lambda_sweep):
                _, _, point = self._compare_once(model, data, float(sweep_lam), x0, monitor)
                rows.append([point['lambda'], point['minimax']['control_energy'], point['lqg']['control_energy']])
                logger.info("lambda=%.6g: minimax energy %.6g, LQG energy %.6g", *rows[-1])
            write_rows(['lambda', 'minimax_energy', 'lqg_energy'], rows, self._out('energy_sweep.csv'))
            payload['sweep'] = [{'lambda': r[0], 'minimax_energy': r[1], 'lqg_energy': r[2]} for r in rows]

        path = write_json(payload, self._out('compare_lqg.json'))
        console.print(f"[green]Wrote[/green] {path}")
        return 0

    def _cmd_grid_build(self) -> int:
        spec = load_grid(self.args.grid)
        model, metadata = build_experiment(spec, self.args.dt, ExperimentConfig())
        save_model(model, self._out('model.json'))
        if self.args.sample_seed is not None:
            raw = generate_samples(model.k, metadata['sample_count'], metadata['sample_std'], self.args.sample_seed)
            save_samples(raw, self._out('samples.csv'))
            metadata['sample_seed'] = self.args.sample_seed
        path = write_json({'experiment': metadata}, self._out('experiment.json'))
        console.print(f"Grid '{spec.name}': {spec.generators} generators, n={model.n}, dt={self.args.dt:g} s")
        console.print(f"[green]Wrote[/green] {path.parent}")
        return 0

    def run(self) -> int:
        handler = getattr(self, "_cmd_" + self.config.command.replace("-", "_"))
        return handler()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='Warnings and errors only')
    common.add_argument('--out', help='Output directory (default: $WDRC_OUT, config output_dir, ./wdrc_out)')
    common.add_argument('--tol', action='append', metavar='KEY=VALUE', default=[],
                        help='Override a numerical tolerance (repeatable)')

    parser = argparse.ArgumentParser(
        prog='wdrc',
        description='wdrc - Wasserstein-penalized minimax LQ control',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  wdrc solve-infinite --model data/scalar.json --samples data/scalar_samples.csv --lambda 5
  wdrc lambda-star --model data/scalar.json --mode infinite
  wdrc grid-build --grid data/grid10_synthetic.json --dt 0.1 --sample-seed 7 --out grid/
  wdrc compare-lqg --model grid/model.json --samples grid/samples.csv --experiment grid/experiment.json \\
      --lambda 1.3 --infinite --trials 100 --steps 50 --seed 7 --lambda-sweep 1.3:1300:10
        """,
    )
    parser.add_argument('--version', action='version', version=f"wdrc {__version__}")
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')

    def model_args(p, samples=True, lam=True):
        p.add_argument('--model', required=True, help='Model JSON (A, B, Xi, Q, R, Qf)')
        if samples:
            p.add_argument('--samples', help='Disturbance samples CSV')
        if lam:
            p.add_argument('--lambda', dest='lam', type=float, required=True, help='Penalty parameter')

    def horizon_args(p):
        group = p.add_mutually_exclusive_group()
        group.add_argument('--horizon', type=int, help='Finite horizon T')
        group.add_argument('--infinite', action='store_true', help='Steady-state controller (default)')

    def trial_args(p):
        p.add_argument('--trials', type=int, default=100)
        p.add_argument('--steps', type=int, default=50, help='Steps in infinite mode')
        p.add_argument('--seed', type=int, default=0)
        p.add_argument('--jobs', type=int, default=1, help='Worker processes')
        p.add_argument('--x0', help='Initial state, comma separated (default e_1)')
        p.add_argument('--experiment', help='experiment.json from grid-build (supplies x0)')
        p.add_argument('--method', default='auto', choices=['auto', 'iterative', 'spectral'])

    p = sub.add_parser('solve-finite', parents=[common], help='Backward Riccati recursion')
    model_args(p)
    p.add_argument('--horizon', type=int, required=True, help='Horizon T')

    p = sub.add_parser('solve-infinite', parents=[common], help='Steady-state Riccati solution')
    model_args(p)
    p.add_argument('--method', default='auto', choices=['auto', 'iterative', 'spectral'])

    p = sub.add_parser('lambda-star', parents=[common], help='Smallest feasible penalty')
    model_args(p, samples=False, lam=False)
    p.add_argument('--mode', default='infinite', choices=['finite', 'infinite'])
    p.add_argument('--horizon', type=int, help='Horizon for --mode finite')
    p.add_argument('--lo', type=float)
    p.add_argument('--hi', type=float)
    p.add_argument('--bisection-tol', type=float, help='Relative bracket width (default from tolerances)')

    p = sub.add_parser('simulate', parents=[common], help='Closed-loop Monte Carlo trials')
    model_args(p)
    horizon_args(p)
    trial_args(p)
    p.add_argument('--source', default='worst-case', choices=['empirical', 'worst-case'])

    p = sub.add_parser('compare-lqg', parents=[common], help='Minimax vs LQG under the worst-case source')
    model_args(p)
    horizon_args(p)
    trial_args(p)
    p.add_argument('--monitor', type=int, help='State index for box plots (default: last)')
    p.add_argument('--lambda-sweep', metavar='LO:HI:N', help='Control energy over a penalty sweep')

    p = sub.add_parser('grid-build', parents=[common], help='Discretized grid model and experiment files')
    p.add_argument('--grid', required=True, help='Grid JSON')
    p.add_argument('--dt', type=float, default=0.1, help='Sampling time in seconds')
    p.add_argument('--sample-seed', type=int, help='Also write samples.csv drawn with this seed')

    return parser


def dispatch(argv: Sequence[str]) -> int:
    """Run one command; 0 on success, 2 on input or feasibility errors, 1 otherwise"""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return int(e.code or 0)

    if not args.command:
        parser.print_help()
        return 2

    setup_logging(1 if args.verbose else -1 if args.quiet else 0)

    try:
        config = RunConfig.from_args(args)
        return Runner(config, args).run()
    except (WdrcError, FileNotFoundError) as e:
        err_console.print(f"[red]Error:[/red] {escape(str(e))}")
        return 2
    except Exception as e:
        logger.debug("Internal error", exc_info=True)
        err_console.print(f"[red]Internal error:[/red] {type(e).__name__}: {escape(str(e))}")
        return 1


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point"""
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
