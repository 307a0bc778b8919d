"""Line-oriented command front end.

Subcommands: synth (generate a dataset), fit (one model, one prediction),
sweep (full protocol to CSV), online (streaming trace), gridsearch
(parameter selection), verify (error-theory checks).  Exit statuses:
0 success, 1 validation/usage error, 2 solver or numerical error.
"""

import argparse
import sys
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError

from . import bench
from .analysis import verify_theory
from .errors import InvalidInputError, NumericalError
from .kernels import KernelMatrix
from .sampling import NoiseSpec, observe, uniform_sample
from .solvers import StepSchedule, save_model

__all__ = ["CliInvocation", "parse_args", "main"]


class UsageError(InvalidInputError):
    pass


@dataclass(frozen=True)
class CliInvocation:
    subcommand: str
    options: argparse.Namespace


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser():
    parser = _Parser(prog="kronmc", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    def add(name, **required):
        p = sub.add_parser(name)
        p.add_argument("--config", required=required.get("config", False))
        p.add_argument("--out", required=required.get("out", False))
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--method", default=None)
        p.add_argument("--ps", type=float, default=None)
        p.add_argument("--mu", type=float, default=None)
        p.add_argument("--eta", type=float, default=None)
        p.add_argument("--rank", type=int, default=None)
        p.add_argument("--dim", type=int, default=None)
        p.add_argument("--snr", type=float, default=None)
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--stride", type=int, default=None)
        return p

    add("synth", out=True)
    add("fit", config=True, out=True)
    add("sweep", config=True, out=True)
    add("online", config=True, out=True)
    add("gridsearch", config=True, out=True)
    add("verify")
    return parser


def parse_args(argv):
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if ns.subcommand is None:
        raise UsageError("a subcommand is required "
                         "(synth | fit | sweep | online | verify | gridsearch)")
    return CliInvocation(ns.subcommand, ns)


def parse_config(path):
    """Flat key=value file; blank lines and # comments ignored."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}: line {lineno}: expected key=value")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def _load_dataset(cfg, seed):
    if cfg.get("synth", "0") in ("1", "true", "yes"):
        return bench.generate_synthetic(
            int(cfg.get("n", 10)), int(cfg.get("l", 10)),
            float(cfg.get("graph_p", 0.2)), float(cfg.get("eta", 1.0)), seed)
    for key in ("f", "kx", "ky"):
        if key not in cfg:
            raise InvalidInputError(f"config needs {key}=<path> (or synth=1)")
    f = bench.load_matrix_csv(cfg["f"])
    kx = KernelMatrix(bench.load_matrix_csv(cfg["kx"]))
    ky = KernelMatrix(bench.load_matrix_csv(cfg["ky"]))
    return bench.DatasetBundle(f, kx, ky, provenance={"generator": "files"})


def _noise_from(cfg, opts):
    if opts.snr is not None:
        return NoiseSpec.target_snr(opts.snr)
    if "snr" in cfg:
        return NoiseSpec.target_snr(float(cfg["snr"]))
    if "nu_sq" in cfg:
        return NoiseSpec.variance(float(cfg["nu_sq"]))
    return NoiseSpec.none()


def _schedule_from(cfg):
    rule = cfg.get("step_rule", "decay")
    if rule == "constant":
        return StepSchedule.constant(float(cfg.get("step_c", 0.1)))
    return StepSchedule.decay(float(cfg.get("step_c", 0.5)),
                              float(cfg.get("step_n0", 10.0)))


def _config_from(cfg, opts):
    method = opts.method or cfg.get("method")
    if method is None:
        raise InvalidInputError("a method is required (--method or method= in config)")
    ps_grid = (opts.ps,) if opts.ps is not None else _floats(cfg.get("ps", "10"))
    mu_grid = (opts.mu,) if opts.mu is not None else _floats(cfg.get("mu", "1e-3"))
    eta_grid = (opts.eta,) if opts.eta is not None else _floats(cfg.get("eta", "1"))
    return bench.ExperimentConfig(
        method=method,
        ps_grid=ps_grid,
        realizations=int(cfg.get("realizations", 1)),
        mu_grid=mu_grid,
        eta_grid=eta_grid,
        rank=opts.rank or int(cfg.get("rank", 10)),
        feature_dim=opts.dim or int(cfg.get("dim", 10)),
        noise=_noise_from(cfg, opts),
        seed=opts.seed,
        epochs=opts.epochs or int(cfg.get("epochs", 20)),
        schedule=_schedule_from(cfg),
        validation_fraction=float(cfg.get("validation_fraction", 0.2)),
    )


def _cmd_synth(opts):
    cfg = parse_config(opts.config) if opts.config else {}
    eta = opts.eta if opts.eta is not None else float(cfg.get("eta", 1.0))
    dataset = bench.generate_synthetic(
        int(cfg.get("n", 10)), int(cfg.get("l", 10)),
        float(cfg.get("graph_p", 0.2)), eta, opts.seed)
    bench.save_matrix_csv(f"{opts.out}.f.csv", dataset.f)
    bench.save_matrix_csv(f"{opts.out}.kx.csv", dataset.kx.matrix)
    bench.save_matrix_csv(f"{opts.out}.ky.csv", dataset.ky.matrix)
    print(f"wrote {opts.out}.f.csv {opts.out}.kx.csv {opts.out}.ky.csv")
    return 0


def _cmd_fit(opts):
    cfg = parse_config(opts.config)
    dataset = _load_dataset(cfg, opts.seed)
    n, l = dataset.shape
    if opts.mu is None:
        raise InvalidInputError("fit requires --mu")
    if opts.mu <= 0:
        raise InvalidInputError(f"--mu must be positive, got {opts.mu}")
    if "obs" in cfg:
        obs = bench.load_triplets_csv(cfg["obs"], n, l)
    else:
        p_s = opts.ps if opts.ps is not None else 10.0
        count = max(1, int(round(p_s / 100.0 * n * l)))
        sampling = uniform_sample(n, l, count, opts.seed)
        obs = observe(dataset.f, sampling, _noise_from(cfg, opts))
    config = _config_from({**cfg, "method": opts.method or cfg.get("method", "kkmcex")},
                          opts)
    state = bench._prepare_method_state(config.method, dataset.kx, dataset.ky,
                                        dataset, config)
    est = bench._fit_predict(config.method, state, obs, config.mu_grid[0],
                             config, opts.seed)
    bench.save_matrix_csv(f"{opts.out}.pred.csv", est)
    _save_fit_model(config, state, obs, opts)
    print(f"wrote {opts.out}.pred.csv {opts.out}.model.csv")
    return 0


def _save_fit_model(config, state, obs, opts):
    from .solvers import als_fit, factor_sgd_fit, kkmcex_fit, orrmcex_run, rrmcex_fit

    mu = config.mu_grid[0]
    if config.method == "kkmcex":
        model = kkmcex_fit(state["kernel"], obs, mu)
    elif config.method == "rrmcex":
        model = rrmcex_fit(state["features"], obs, mu)
    elif config.method == "orrmcex":
        model = orrmcex_run(state["features"], obs, config.schedule, mu,
                            config.epochs, seed=opts.seed)
    elif config.method == "als":
        model = als_fit(obs, state["kx"], state["ky"], config.rank, mu, seed=opts.seed)
    else:
        model = factor_sgd_fit(obs, config.rank, mu, config.schedule,
                               config.epochs, opts.seed)
    save_model(f"{opts.out}.model.csv", model)


def _cmd_sweep(opts):
    cfg = parse_config(opts.config)
    dataset = _load_dataset(cfg, int(cfg.get("dataset_seed", opts.seed)))
    config = _config_from(cfg, opts)
    result = bench.run_sweep(config, dataset)
    result.write_csv(opts.out)
    for key, agg in sorted(result.summary().items()):
        print(f"{key[0]} P_s={key[1]:g}: nmse={agg['nmse']:.6g} "
              f"seconds={agg['seconds']:.3f} mu={agg['mu']:g} eta={agg['eta']:g}")
    return 0


def _cmd_online(opts):
    cfg = parse_config(opts.config)
    dataset = _load_dataset(cfg, int(cfg.get("dataset_seed", opts.seed)))
    config = _config_from(cfg, opts)
    stride = opts.stride if opts.stride is not None else None
    trace = bench.run_online(config, dataset, stride=stride)
    bench.write_trace_csv(opts.out, trace)
    final = trace[-1]
    print(f"{config.method}: {final['iteration']} iterations, "
          f"final nmse={final['nmse']:.6g}")
    return 0


def _cmd_gridsearch(opts):
    cfg = parse_config(opts.config)
    dataset = _load_dataset(cfg, int(cfg.get("dataset_seed", opts.seed)))
    config = _config_from(cfg, opts)
    mu, eta = bench.grid_search(config, dataset)
    with open(opts.out, "w") as fh:
        fh.write("mu,eta\n")
        fh.write(f"{mu!r},{eta!r}\n")
    print(f"selected mu={mu:g} eta={eta:g}")
    return 0


def _cmd_verify(opts):
    rows, summary = verify_theory(seed=opts.seed)
    all_ok = True
    for name, (passed, total) in summary.items():
        print(f"{name}: {passed}/{total} passed")
        all_ok = all_ok and passed == total
    if opts.out:
        with open(opts.out, "w") as fh:
            fh.write("instance,bias_sq,variance,empirical_mse,bound,margin\n")
            for r in rows:
                emp = "" if r["empirical_mse"] is None else repr(r["empirical_mse"])
                fh.write(f"{r['instance']},{r['bias_sq']!r},{r['variance']!r},"
                         f"{emp},{r['bound']!r},{r['margin']!r}\n")
    print("verify: PASS" if all_ok else "verify: FAIL")
    return 0 if all_ok else 2


_COMMANDS = {
    "synth": _cmd_synth,
    "fit": _cmd_fit,
    "sweep": _cmd_sweep,
    "online": _cmd_online,
    "gridsearch": _cmd_gridsearch,
    "verify": _cmd_verify,
}


def _check_paths(options):
    """Validate input/output paths before any work starts."""
    import os

    if options.config is not None and not os.path.isfile(options.config):
        raise InvalidInputError(f"config file not found: {options.config}")
    if options.out is not None:
        parent = os.path.dirname(os.path.abspath(options.out))
        if not os.path.isdir(parent):
            raise InvalidInputError(f"output directory does not exist: {parent}")


def main(argv=None):
    """Entry point; returns the process exit status."""
    if argv is None:
        argv = sys.argv[1:]
    try:
        invocation = parse_args(list(argv))
        _check_paths(invocation.options)
        return _COMMANDS[invocation.subcommand](invocation.options)
    except (UsageError, InvalidInputError) as exc:
        print(f"kronmc: error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, LinAlgError, np.linalg.LinAlgError) as exc:
        print(f"kronmc: numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
