"""Command-line front end: model loading, method selection, sweeps, CSV/JSON output.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Identical configurations produce byte-identical outputs regardless of the
worker count; every output file carries the full configuration echo in its
JSON sidecar (or body, for JSON outputs).
"""

import json
import sys

import click
import numpy as np

from . import averages, spectral
from .closed_forms import ThermalParams, auto_grid
from .double_dynamics import IntegratorOptions, integrate_double
from .exceptions import ThermalWignerError
from .fields import GridSpec, ThermalField, grid_integral
from .models import load_model, model_to_dict
from .averages import Observable

CLI_METHODS = averages.METHODS + ("spectral",)
DEFAULT_BASIS = 256


def _fmt(value):
    return f"{value:.17g}"


def _fail_numerical(exc):
    click.echo(f"numerical failure: {exc}", err=True)
    sys.exit(3)


def _fail_config(message):
    click.echo(f"configuration error: {message}", err=True)
    sys.exit(2)


def _load(model_path):
    try:
        return load_model(model_path)
    except (OSError, ValueError, KeyError) as exc:
        _fail_config(f"cannot load model {model_path!r}: {exc}")


def _parse_sweep(text):
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ValueError("sweep must be start:stop:count[:geometric|linear]")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    mode = parts[3] if len(parts) == 4 else "linear"
    if count < 1:
        raise ValueError("sweep count must be >= 1")
    if count == 1:
        return np.array([start])
    if mode == "linear":
        return np.linspace(start, stop, count)
    if mode == "geometric":
        if start <= 0 or stop <= 0:
            raise ValueError("geometric sweep needs positive endpoints")
        return np.geomspace(start, stop, count)
    raise ValueError(f"unknown sweep mode {mode!r}")


def _parse_observable(text):
    text = text.strip()
    if text in ("identity", "1"):
        return Observable.identity()
    if text in ("hamiltonian", "H"):
        return Observable.hamiltonian()
    if text in ("hamiltonian_squared", "H2"):
        return Observable.hamiltonian_squared()
    if text.startswith("coherent:"):
        vals = [float(v) for v in text.split(":", 1)[1].split(",")]
        if len(vals) != 2:
            raise ValueError("coherent observable needs 'coherent:P,Q'")
        return Observable.coherent(vals)
    if text.startswith("p^"):
        return Observable.momentum_power(int(text[2:]))
    if text.startswith("q^"):
        return Observable.position_power(int(text[2:]))
    if text.startswith("poly:"):
        terms = []
        for chunk in text.split(":", 1)[1].split(";"):
            c, i, j = chunk.split(",")
            terms.append((float(c), int(i), int(j)))
        return Observable.polynomial_pq(terms)
    raise ValueError(f"cannot parse observable {text!r}")


def _betas(beta, sweep):
    if (beta is None) == (sweep is None):
        raise ValueError("give exactly one of --beta or --sweep")
    if beta is not None:
        return np.array([beta])
    return _parse_sweep(sweep)


def _write_sidecar(path, payload):
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _spectral_decomp(model, hbar, basis_size, omega_b):
    return spectral.diagonalize(model, basis_size, hbar=hbar, omega_b=omega_b)


def _maybe_dump_trajectory(model, params, dump_trajectory, dump_out, opts):
    if dump_trajectory is None:
        return
    if dump_out is None:
        raise ValueError("--dump-trajectory needs --dump-out")
    midpoint = [float(v) for v in dump_trajectory.split(",")]
    if len(midpoint) != 2:
        raise ValueError("--dump-trajectory needs 'P,Q'")
    traj = integrate_double(model, midpoint, params.theta, opts, record=True)
    with open(dump_out, "w", encoding="utf-8") as fh:
        fh.write("theta_prime,p,q,y_p,y_q,s,det_T\n")
        for row in traj.checkpoints:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


model_option = click.option("--model", "model_path", required=True, help="model JSON file")
hbar_option = click.option("--hbar", default=1.0, show_default=True)
workers_option = click.option(
    "--workers", default=None, type=int, help="worker count (default: THERMAL_WORKERS or CPUs)"
)
rtol_option = click.option("--rtol", default=1e-10, show_default=True, help="integrator rtol")
atol_option = click.option("--atol", default=1e-10, show_default=True, help="integrator atol")
quad_rtol_option = click.option(
    "--quad-rtol", default=1e-7, show_default=True, help="quadrature relative tolerance"
)
basis_option = click.option(
    "--basis-size", default=DEFAULT_BASIS, show_default=True, help="oscillator basis size"
)


@click.group()
def main():
    """Thermal Wigner functions, partition functions and thermal averages."""


@main.command()
@model_option
@click.option("--beta", type=float, required=True)
@hbar_option
@click.option("--method", required=True, type=click.Choice(CLI_METHODS))
@click.option("--grid", "grid_text", default=None, help="pmin,pmax,qmin,qmax,np,nq")
@click.option("--out", "out_path", required=True)
@rtol_option
@atol_option
@workers_option
@basis_option
@click.option("--omega-b", default=1.0, show_default=True)
def wigner(model_path, beta, hbar, method, grid_text, out_path, rtol, atol, workers, basis_size, omega_b):
    """Write a normalized thermal Wigner field as CSV + JSON sidecar."""
    model = _load(model_path)
    try:
        params = ThermalParams(beta=beta, hbar=hbar)
        grid = GridSpec.parse(grid_text) if grid_text else auto_grid(model, params)
        opts = IntegratorOptions(rtol=rtol, atol=atol)
        if method == "spectral":
            decomp = _spectral_decomp(model, hbar, basis_size, omega_b)
            field = spectral.spectral_thermal_wigner(decomp, beta, grid)
        else:
            averages._check_method(model, method)
            field = averages.thermal_wigner_field(
                model, params, method, grid=grid, opts=opts, workers=workers
            )
    except (ValueError, TypeError) as exc:
        _fail_config(str(exc))
    except ThermalWignerError as exc:
        _fail_numerical(exc)
    field.meta["config"] = _config_echo(locals())
    field.write_csv(out_path)
    click.echo(f"wrote {out_path}")


def _config_echo(scope):
    keys = (
        "model_path",
        "beta",
        "sweep",
        "hbar",
        "method",
        "methods_text",
        "grid_text",
        "out_path",
        "rtol",
        "atol",
        "quad_rtol",
        "workers",
        "basis_size",
        "omega_b",
        "observable_text",
        "quantity",
    )
    echo = {k: scope[k] for k in keys if k in scope and scope[k] is not None}
    if "model_path" in echo:
        try:
            echo["model"] = model_to_dict(load_model(echo["model_path"]))
        except Exception:  # echo best-effort only
            pass
    return echo


def _partition_rows(model, params, method, spec, opts, workers, basis_size, omega_b):
    if method == "spectral":
        decomp = _spectral_decomp(model, params.hbar, basis_size, omega_b)
        z = spectral.spectral_partition(decomp, params.beta)
        z_tilde = z * (2.0 * np.pi * params.hbar) ** model.dof
        error = float(np.exp(-params.beta * decomp.energies[-1]))
        return z_tilde, z, error, 0
    res = averages.partition_weyl(model, params, method, spec=spec, opts=opts, workers=workers)
    return res.z_tilde, res.z, res.error, res.n_diverged


@main.command()
@model_option
@click.option("--beta", type=float, default=None)
@click.option("--sweep", default=None, help="start:stop:count[:geometric|linear]")
@hbar_option
@click.option("--method", required=True, type=click.Choice(CLI_METHODS))
@click.option("--out", "out_path", required=True)
@rtol_option
@atol_option
@quad_rtol_option
@workers_option
@basis_option
@click.option("--omega-b", default=1.0, show_default=True)
@click.option("--dump-trajectory", default=None, help="midpoint 'P,Q' to dump")
@click.option("--dump-out", default=None)
def partition(
    model_path, beta, sweep, hbar, method, out_path, rtol, atol, quad_rtol,
    workers, basis_size, omega_b, dump_trajectory, dump_out,
):
    """Partition function (Z-tilde and trace-normalized Z) per beta."""
    model = _load(model_path)
    rows = []
    n_diverged_total = 0
    try:
        betas = _betas(beta, sweep)
        spec = averages.QuadratureSpec(rtol=quad_rtol)
        opts = IntegratorOptions(rtol=rtol, atol=atol)
        for b in betas:
            params = ThermalParams(beta=float(b), hbar=hbar)
            z_tilde, z, error, ndiv = _partition_rows(
                model, params, method, spec, opts, workers, basis_size, omega_b
            )
            n_diverged_total += ndiv
            rows.append((float(b), z_tilde, z, error))
        _maybe_dump_trajectory(
            model, ThermalParams(beta=float(betas[0]), hbar=hbar), dump_trajectory, dump_out, opts
        )
    except (ValueError, TypeError) as exc:
        _fail_config(str(exc))
    except ThermalWignerError as exc:
        _fail_numerical(exc)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("beta,Z_tilde,Z,error\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    _write_sidecar(out_path, {"config": _config_echo(locals()), "n_diverged": n_diverged_total})
    click.echo(f"wrote {out_path}")


@main.command()
@model_option
@click.option("--beta", type=float, required=True)
@hbar_option
@click.option("--method", required=True, type=click.Choice(CLI_METHODS))
@click.option("--observable", "observable_text", default="hamiltonian", show_default=True)
@click.option("--out", "out_path", required=True)
@rtol_option
@atol_option
@quad_rtol_option
@workers_option
@basis_option
@click.option("--omega-b", default=1.0, show_default=True)
@click.option("--dump-trajectory", default=None, help="midpoint 'P,Q' to dump")
@click.option("--dump-out", default=None)
def average(
    model_path, beta, hbar, method, observable_text, out_path, rtol, atol,
    quad_rtol, workers, basis_size, omega_b, dump_trajectory, dump_out,
):
    """Thermal average of an observable, written as a JSON record."""
    model = _load(model_path)
    try:
        params = ThermalParams(beta=beta, hbar=hbar)
        opts = IntegratorOptions(rtol=rtol, atol=atol)
        observable = _parse_observable(observable_text)
        if method == "spectral":
            if observable.kind not in ("hamiltonian", "hamiltonian_squared"):
                raise ValueError("spectral averages support only H and H2 observables")
            decomp = _spectral_decomp(model, hbar, basis_size, omega_b)
            which = "H" if observable.kind == "hamiltonian" else "H2"
            value = spectral.spectral_average(decomp, beta, which)
            error = float(np.exp(-beta * decomp.energies[-1]))
            n_diverged = 0
        else:
            res = averages.thermal_average(
                model,
                params,
                method,
                observable,
                spec=averages.QuadratureSpec(rtol=quad_rtol),
                opts=opts,
                workers=workers,
            )
            value, error, n_diverged = res.value, res.error, res.n_diverged
        _maybe_dump_trajectory(model, params, dump_trajectory, dump_out, opts)
    except (ValueError, TypeError) as exc:
        _fail_config(str(exc))
    except ThermalWignerError as exc:
        _fail_numerical(exc)
    record = {
        "model": model_to_dict(model),
        "method": method,
        "beta": beta,
        "hbar": hbar,
        "quantity": f"average:{observable_text}",
        "value": value,
        "quadrature_error": error,
        "n_diverged": n_diverged,
        "config": _config_echo(locals()),
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(f"wrote {out_path}")


@main.command()
@model_option
@click.option("--sweep", required=True, help="start:stop:count[:geometric|linear]")
@hbar_option
@click.option("--method", required=True, type=click.Choice(CLI_METHODS))
@click.option("--quantity", default="partition", type=click.Choice(["partition", "average"]))
@click.option("--observable", "observable_text", default="hamiltonian", show_default=True)
@click.option("--out", "out_path", required=True)
@rtol_option
@atol_option
@quad_rtol_option
@workers_option
@basis_option
@click.option("--omega-b", default=1.0, show_default=True)
def sweep(
    model_path, sweep, hbar, method, quantity, observable_text, out_path,
    rtol, atol, quad_rtol, workers, basis_size, omega_b,
):
    """Sweep beta and write `beta,value,error` rows."""
    model = _load(model_path)
    rows = []
    try:
        betas = _parse_sweep(sweep)
        spec = averages.QuadratureSpec(rtol=quad_rtol)
        opts = IntegratorOptions(rtol=rtol, atol=atol)
        observable = _parse_observable(observable_text)
        for b in betas:
            params = ThermalParams(beta=float(b), hbar=hbar)
            if quantity == "partition":
                z_tilde, _, error, _ = _partition_rows(
                    model, params, method, spec, opts, workers, basis_size, omega_b
                )
                rows.append((float(b), z_tilde, error))
            else:
                if method == "spectral":
                    decomp = _spectral_decomp(model, hbar, basis_size, omega_b)
                    which = "H" if observable.kind == "hamiltonian" else "H2"
                    value = spectral.spectral_average(decomp, float(b), which)
                    rows.append((float(b), value, float(np.exp(-b * decomp.energies[-1]))))
                else:
                    res = averages.thermal_average(
                        model, params, method, observable, spec=spec, opts=opts, workers=workers
                    )
                    rows.append((float(b), res.value, res.error))
    except (ValueError, TypeError) as exc:
        _fail_config(str(exc))
    except ThermalWignerError as exc:
        _fail_numerical(exc)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("beta,value,error\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    _write_sidecar(out_path, {"config": _config_echo(locals())})
    click.echo(f"wrote {out_path}")


@main.command()
@model_option
@click.option("--beta", type=float, default=None)
@click.option("--sweep", default=None, help="start:stop:count[:geometric|linear]")
@hbar_option
@click.option("--methods", "methods_text", required=True, help="comma-separated methods")
@click.option("--grid", "grid_text", default=None, help="also compare fields on this grid")
@click.option("--out", "out_path", required=True)
@rtol_option
@atol_option
@quad_rtol_option
@workers_option
@basis_option
@click.option("--omega-b", default=1.0, show_default=True)
def compare(
    model_path, beta, sweep, hbar, methods_text, grid_text, out_path,
    rtol, atol, quad_rtol, workers, basis_size, omega_b,
):
    """Cross-method comparison report (JSON): partitions, fields, divergences."""
    model = _load(model_path)
    try:
        methods = tuple(m.strip() for m in methods_text.split(",") if m.strip())
        if len(methods) < 2:
            raise ValueError("compare needs at least 2 methods")
        for m in methods:
            if m not in CLI_METHODS:
                raise ValueError(f"unknown method {m!r}")
            if m != "spectral":
                averages._check_method(model, m)
        betas = _betas(beta, sweep)
        spec = averages.QuadratureSpec(rtol=quad_rtol)
        opts = IntegratorOptions(rtol=rtol, atol=atol)

        partitions = {m: [] for m in methods}
        divergences = {m: 0 for m in methods}
        for b in betas:
            params = ThermalParams(beta=float(b), hbar=hbar)
            for m in methods:
                z_tilde, _, error, ndiv = _partition_rows(
                    model, params, m, spec, opts, workers, basis_size, omega_b
                )
                partitions[m].append({"beta": float(b), "z_tilde": z_tilde, "error": error})
                divergences[m] += ndiv
        deviations = {}
        for i, a in enumerate(methods):
            for bm in methods[i + 1 :]:
                rel = [
                    abs(ra["z_tilde"] - rb["z_tilde"]) / max(abs(ra["z_tilde"]), 1e-300)
                    for ra, rb in zip(partitions[a], partitions[bm])
                ]
                deviations[f"{a}|{bm}"] = {
                    "max_rel_partition_deviation": max(rel),
                    "per_beta": rel,
                }
        field_report = {}
        if grid_text:
            grid = GridSpec.parse(grid_text)
            params = ThermalParams(beta=float(betas[0]), hbar=hbar)
            fields = {}
            for m in methods:
                if m == "spectral":
                    decomp = _spectral_decomp(model, hbar, basis_size, omega_b)
                    fields[m] = spectral.spectral_thermal_wigner(decomp, float(betas[0]), grid)
                else:
                    fields[m] = averages.thermal_wigner_field(
                        model, params, m, grid=grid, opts=opts, workers=workers
                    )
            for i, a in enumerate(methods):
                for bm in methods[i + 1 :]:
                    diff = fields[a].values - fields[bm].values
                    field_report[f"{a}|{bm}"] = {
                        "l1_distance": grid_integral(grid, np.abs(diff)),
                        "max_abs_difference": float(np.max(np.abs(diff))),
                    }
    except (ValueError, TypeError) as exc:
        _fail_config(str(exc))
    except ThermalWignerError as exc:
        _fail_numerical(exc)
    report = {
        "config": _config_echo(locals()),
        "betas": [float(b) for b in betas],
        "partitions": partitions,
        "deviations": deviations,
        "fields": field_report,
        "n_diverged": divergences,
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(f"wrote {out_path}")


@main.command()
@model_option
@hbar_option
@basis_option
@click.option("--omega-b", default=1.0, show_default=True)
@click.option("--out", "out_path", required=True)
@click.option("--vectors-out", default=None, help="optional eigenvector CSV")
def spectrum(model_path, hbar, basis_size, omega_b, out_path, vectors_out):
    """Diagonalize the model and write `j,E_j` rows."""
    model = _load(model_path)
    try:
        decomp = _spectral_decomp(model, hbar, basis_size, omega_b)
    except (ValueError, TypeError) as exc:
        _fail_config(str(exc))
    except ThermalWignerError as exc:
        _fail_numerical(exc)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("j,E_j\n")
        for j, e in enumerate(decomp.energies):
            fh.write(f"{j},{_fmt(e)}\n")
    if vectors_out:
        coeffs = decomp.coefficients
        with open(vectors_out, "w", encoding="utf-8") as fh:
            fh.write("n," + ",".join(f"c_{j}" for j in range(decomp.n_levels)) + "\n")
            for n in range(decomp.basis_size):
                row = coeffs[n]
                if np.iscomplexobj(row):
                    cells = [f"{v.real:.17g}{v.imag:+.17g}j" for v in row]
                else:
                    cells = [_fmt(v) for v in row]
                fh.write(f"{n}," + ",".join(cells) + "\n")
    _write_sidecar(out_path, {"config": _config_echo(locals())})
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
