"""Command-line client for the phase-distribution service.

The CLI is a thin client: every subcommand builds a request, sends it to the
HTTP service, and writes the response out as plot-ready CSV plus a JSON
metadata sidecar.  By default the requests are served by an in-process
instance of the application; ``--server`` points them at a running instance
instead.  Wall-clock timestamps appear only in the metadata sidecars, so the
data artifacts are byte-identical across runs with the same configuration.

Exit codes: 2 invalid configuration, 3 domain error reported by the service,
4 numerical failure, 5 I/O failure.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path

import click

EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_NUMERICAL = 4
EXIT_IO = 5

_NUMERICAL_ERRORS = {"QuadratureNotConverged", "NumericalInstability", "GridTooNarrow"}


class ServiceClient:
    """Minimal POST wrapper over either a remote server or the in-process app."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            from fastapi.testclient import TestClient

            from .service.app import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        body = resp.json()
        if resp.status_code == 422 and "error" in body:
            code = EXIT_NUMERICAL if body["error"] in _NUMERICAL_ERRORS else EXIT_DOMAIN
            click.echo(f"error [{body['error']}]: {body['detail']}", err=True)
            sys.exit(code)
        if resp.status_code != 200:
            click.echo(f"request failed ({resp.status_code}): {body}", err=True)
            sys.exit(EXIT_CONFIG)
        return body


def _parse_complex(text: str | None) -> dict | None:
    if text is None:
        return None
    try:
        z = complex(text.replace(" ", ""))
    except ValueError as exc:
        raise click.BadParameter(f"not a complex number: {text!r}") from exc
    return {"re": z.real, "im": z.imag}


def _state_payload(state: str, alpha: str | None, xi: str | None, photons: int | None, truncation: int | None) -> dict:
    payload: dict = {"kind": state}
    if state == "coherent":
        if alpha is None:
            raise click.UsageError("--state coherent requires --alpha")
        payload["alpha"] = _parse_complex(alpha)
    elif state == "squeezed":
        if xi is None:
            raise click.UsageError("--state squeezed requires --xi")
        payload["xi"] = _parse_complex(xi)
    elif state == "fock":
        if photons is None:
            raise click.UsageError("--state fock requires --photons")
        payload["photons"] = photons
    if truncation is not None:
        payload["truncation"] = truncation
    return payload


def _write_metadata(out: Path, config: dict, extra: dict | None = None) -> Path:
    meta_path = out.with_suffix(out.suffix + ".meta.json")
    meta = {
        "config": config,
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    if extra:
        meta.update(extra)
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return meta_path


def _write_distribution_csv(out: Path, payload: dict) -> None:
    lines = ["phase,p,std_error"]
    errs = payload.get("std_errors") or [None] * len(payload["grid"])
    for g, v, e in zip(payload["grid"], payload["values"], errs):
        lines.append(f"{g!r},{v!r},{'' if e is None else repr(e)}")
    out.write_text("\n".join(lines) + "\n")


def _distribution_summary(payload: dict) -> str:
    values = payload["values"]
    peak = max(values)
    peak_at = payload["grid"][values.index(peak)]
    return (
        f"kind={payload['kind']} epsilon={payload['epsilon']} points={len(values)} "
        f"norm_const={payload['normalization']:.6g} peak={peak:.6g} at phase={peak_at:.6g}"
    )


state_options = [
    click.option("--state", type=click.Choice(["vacuum", "coherent", "squeezed", "fock"]), default="vacuum", show_default=True),
    click.option("--alpha", default=None, help="Coherent amplitude (complex, e.g. '1' or '0.5+0.2j')"),
    click.option("--xi", default=None, help="Squeeze parameter (complex)"),
    click.option("--photons", type=int, default=None, help="Photon number for --state fock"),
    click.option("--truncation", type=int, default=None, help="Photon-number cutoff override"),
]


def add_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return wrap


@click.group()
@click.option("--server", default=None, envvar="SGPHASE_SERVER", help="Base URL of a running service; default is in-process")
@click.option("--cache-dir", default=None, envvar="SGPHASE_CACHE_DIR", help="Directory for pattern/kernel caches")
@click.pass_context
def main(ctx, server, cache_dir):
    """Susskind-Glogower phase distributions: exact, coarse-grained, and sampled."""
    if cache_dir:
        os.environ["SGPHASE_CACHE_DIR"] = cache_dir
    ctx.obj = ServiceClient(server)


@main.command()
@add_options(state_options)
@click.option("--mode", type=click.Choice(["cosine", "sine", "general"]), default="cosine", show_default=True)
@click.option("--psi", type=float, default=None, help="Mixing angle for --mode general")
@click.option("--grid-points", type=int, default=101, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("exact.csv"), show_default=True)
@click.pass_obj
def exact(client, state, alpha, xi, photons, truncation, mode, psi, grid_points, out):
    """Exact phase distribution computed from the state."""
    req = {
        "state": _state_payload(state, alpha, xi, photons, truncation),
        "mode": mode,
        "psi": psi,
        "grid": {"points": grid_points},
    }
    payload = client.post("/v1/exact", req)
    _write_distribution_csv(out, payload)
    _write_metadata(out, payload["metadata"]["config"])
    click.echo(f"exact: {_distribution_summary(payload)} -> {out}")


@main.command()
@add_options(state_options)
@click.option("--mode", type=click.Choice(["cosine", "sine", "general"]), default="cosine", show_default=True)
@click.option("--psi", type=float, default=None)
@click.option("--epsilon", type=float, required=True, help="Coarse-graining width (radians)")
@click.option("--n-max", type=int, default=None, help="Expansion cutoff override")
@click.option("--grid-points", type=int, default=101, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=Path("coarse.csv"), show_default=True)
@click.pass_obj
def coarse(client, state, alpha, xi, photons, truncation, mode, psi, epsilon, n_max, grid_points, out):
    """Coarse-grained phase distribution computed from the state."""
    req = {
        "state": _state_payload(state, alpha, xi, photons, truncation),
        "mode": mode,
        "psi": psi,
        "epsilon": epsilon,
        "n_max": n_max,
        "grid": {"points": grid_points},
    }
    payload = client.post("/v1/coarse", req)
    _write_distribution_csv(out, payload)
    _write_metadata(out, payload["metadata"]["config"])
    click.echo(f"coarse: {_distribution_summary(payload)} -> {out}")


@main.command()
@click.option("--phi-cap", "phase_values", type=float, multiple=True, required=True, help="Phase-state angle(s) to slice at (radians)")
@click.option("--epsilon", type=float, required=True)
@click.option("--psi", type=float, default=0.0, show_default=True)
@click.option("--n-max", type=int, default=64, show_default=True)
@click.option("--x-half-width", type=float, default=None)
@click.option("--x-points", type=int, default=801, show_default=True)
@click.option("--lo-phase-points", type=int, default=30, show_default=True)
@click.option("--no-cache", is_flag=True, help="Force recomputation of cached tables")
@click.option("--workers", type=int, default=os.cpu_count() or 1, show_default=False, help="Worker threads (default: available parallelism)")
@click.option("--out", type=click.Path(path_type=Path), default=Path("kernel.csv"), show_default=True)
@click.pass_obj
def kernel(client, phase_values, epsilon, psi, n_max, x_half_width, x_points, lo_phase_points, no_cache, workers, out):
    """Sampling-kernel surface slices K(phase, x, lo_phase) as long-format CSV."""
    req = {
        "phase_values": list(phase_values),
        "epsilon": epsilon,
        "psi": psi,
        "n_max": n_max,
        "x_half_width": x_half_width,
        "x_points": x_points,
        "lo_phase_points": lo_phase_points,
        "no_cache": no_cache,
        "workers": workers,
    }
    payload = client.post("/v1/kernel", req)
    lines = ["phase,lo_phase,x,K"]
    for sl in payload["slices"]:
        for j, lo in enumerate(sl["lo_phase"]):
            for k, xv in enumerate(sl["x"]):
                lines.append(f"{sl['phase']!r},{lo!r},{xv!r},{sl['values'][j][k]!r}")
    out.write_text("\n".join(lines) + "\n")
    _write_metadata(out, payload["metadata"]["config"], extra={
        "tail_estimate": payload["tail_estimate"],
        "checksum": payload["checksum"],
        "pattern_checksum": payload["pattern_checksum"],
    })
    click.echo(
        f"kernel: {len(payload['slices'])} slice(s), tail_estimate={payload['tail_estimate']:.3e} -> {out}"
    )


@main.command()
@add_options(state_options)
@click.option("--phases", type=int, default=30, show_default=True, help="Number of apparatus phases")
@click.option("--events", type=int, default=10000, show_default=True, help="Events per phase")
@click.option("--eta", type=float, default=1.0, show_default=True, help="Detection efficiency")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--grid-points", type=int, default=4001, show_default=True)
@click.option("--workers", type=int, default=os.cpu_count() or 1, show_default=False, help="Worker threads (default: available parallelism)")
@click.option("--out", type=click.Path(path_type=Path), default=Path("dataset.jsonl"), show_default=True)
@click.pass_obj
def simulate(client, state, alpha, xi, photons, truncation, phases, events, eta, seed, grid_points, workers, out):
    """Simulate a balanced-homodyne acquisition and write it as JSONL (or CSV by extension)."""
    req = {
        "state": _state_payload(state, alpha, xi, photons, truncation),
        "n_phases": phases,
        "events_per_phase": events,
        "eta": eta,
        "seed": seed,
        "grid_points": grid_points,
        "workers": workers,
    }
    payload = client.post("/v1/simulate", req)
    import numpy as np

    from .homodyne import DatasetHeader, HomodyneDataset, write_dataset

    head = dict(payload["header"])
    head.pop("format_version", None)
    head["phase_grid"] = tuple(head.get("phase_grid", ()))
    dataset = HomodyneDataset(
        header=DatasetHeader(**head), records=np.asarray(payload["records"], dtype=float)
    )
    try:
        write_dataset(dataset, out)
    except OSError as exc:
        click.echo(f"cannot write {out}: {exc}", err=True)
        sys.exit(EXIT_IO)
    _write_metadata(out, req)
    click.echo(f"simulate: {dataset.n_records} records over {phases} phases -> {out}")


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, path_type=Path), default=None, help="Dataset file (JSONL or CSV)")
@click.option("--mode", type=click.Choice(["cosine", "sine", "general"]), default="cosine", show_default=True)
@click.option("--psi", type=float, default=None)
@click.option("--epsilon", type=float, required=True)
@click.option("--n-max", type=int, default=None, help="Kernel order (default: dataset state truncation)")
@click.option("--band-limit", type=int, default=None, help="Apparatus-phase frequency cutoff (default: phases - 1)")
@click.option("--grid-points", type=int, default=101, show_default=True)
@click.option("--workers", type=int, default=os.cpu_count() or 1, show_default=False, help="Worker threads (default: available parallelism)")
@click.option("--out", type=click.Path(path_type=Path), default=Path("estimate.csv"), show_default=True)
@click.pass_obj
def sample(client, input_path, mode, psi, epsilon, n_max, band_limit, grid_points, workers, out):
    """Estimate a phase distribution directly from recorded homodyne data."""
    if input_path is None:
        raise click.UsageError("--input dataset file is required (see `simulate`)")
    from .homodyne import read_dataset

    try:
        dataset = read_dataset(input_path)
    except (OSError, ValueError, KeyError) as exc:
        click.echo(f"cannot read {input_path}: {exc}", err=True)
        sys.exit(EXIT_IO)
    req = {
        "dataset": {
            "header": dataset.header.as_dict(),
            "records": [(float(a), float(b)) for a, b in dataset.records],
        },
        "mode": mode,
        "psi": psi,
        "epsilon": epsilon,
        "n_max": n_max,
        "band_limit": band_limit,
        "grid": {"points": grid_points},
        "workers": workers,
    }
    payload = client.post("/v1/sample", req)
    for w in payload.get("warnings", []):
        click.echo(f"warning: {w}", err=True)
    dist = payload["distribution"]
    _write_distribution_csv(out, dist)
    _write_metadata(out, dist["metadata"]["config"], extra={
        "dataset_checksum": payload["dataset_checksum"],
        "kernel": payload["kernel"],
        "n_records": payload["n_records"],
    })
    click.echo(f"sample: {_distribution_summary(dist)} n_records={payload['n_records']} -> {out}")


if __name__ == "__main__":
    main()
