"""Command-line front end: run circuits, validate and estimate resources,
and execute algorithm demos with machine-readable output.

Exit codes: 0 success, 1 validation/usage error, 2 capacity error. Reports
are canonical JSON ("schema": 1, sorted keys, 17-significant-digit floats)
so identical (command, params, seed) invocations are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import _json, engine, ir
from .errors import CapacityError, CircuitTypeError, CvdvError, ParseError
from .hamiltonians import (
    build_bose_hubbard,
    build_ivr_cubic,
    build_lvc_two_mode,
    build_spin_boson,
    HamiltonianExpr,
    SpinBosonSpec,
    Term,
    _op,
)
from .operators import pauli
from .registers import basis_state, init_vacuum

SCHEMA_VERSION = 1


def run_report(text: str, shots: int, seed: int) -> dict:
    """Parse, validate, run; the shared path behind cmd_run and bindings."""
    circuit = ir.parse(text)
    warnings_ = [str(d) for d in ir.validate(circuit) if d.severity == "warning"]
    result = engine.run(circuit, seed=seed, shots=shots)
    report = {"schema": SCHEMA_VERSION, **result.to_json_dict()}
    if warnings_:
        report["warnings"] = warnings_
    return report


def estimate_report(text: str) -> dict:
    circuit = ir.parse(text)
    return {"schema": SCHEMA_VERSION, **ir.resource_count(circuit)}


# ---------------------------------------------------------------------------
# demos


def _merge(defaults: dict, params: dict) -> dict:
    merged = dict(defaults)
    for key, value in params.items():
        if key not in defaults:
            raise CvdvError(f"unknown parameter {key!r}; expected one of {sorted(defaults)}")
        merged[key] = value
    return merged


def _demo_rotor_qpe(params: dict, seed: int) -> dict:
    from .algorithms import circular_error, rotor_qpe

    p = _merge({"theta": 1.0, "l_max": 64, "window": "gaussian", "shots": 50}, params)
    u = np.diag([1.0, np.exp(1j * p["theta"])])
    eigenstate = np.array([0.0, 1.0])
    out = rotor_qpe(u, eigenstate, int(p["l_max"]), p["window"], int(p["shots"]), seed)
    out["abs_error"] = circular_error(out["theta_hat"], p["theta"])
    return out


def _demo_shor(params: dict, seed: int) -> dict:
    from .algorithms import cvdv_shor_period, shor_factor

    p = _merge({"N": 15, "a": None, "grid": None, "delta_gkp": 1e-3, "shots": 20}, params)
    if p["a"] is not None:
        return cvdv_shor_period(int(p["N"]), int(p["a"]), p["grid"], p["delta_gkp"],
                                int(p["shots"]), seed)
    return shor_factor(int(p["N"]), int(p["shots"]), seed)


def _demo_lchs(params: dict, seed: int) -> dict:
    from scipy.linalg import expm

    from .algorithms import LchsSpec, kernel_normalization, lchs_solve

    p = _merge(
        {
            "A": [[1.0, 0.0], [0.0, 2.0]],
            "u0": [1.0 / math.sqrt(2), 1.0 / math.sqrt(2)],
            "T": 0.5,
            "beta": 0.8,
            "r": 3.0,
            "mode": "statevector-exact",
        },
        params,
    )
    spec = LchsSpec(beta=float(p["beta"]), r=float(p["r"]))
    a = np.asarray(p["A"], dtype=complex)
    u0 = np.asarray(p["u0"], dtype=complex)
    out = lchs_solve(a, u0, float(p["T"]), spec, p["mode"], seed)
    reference = expm(-float(p["T"]) * a) @ u0
    err = float(np.linalg.norm(out["u"] - reference) / np.linalg.norm(reference))
    out["u"] = [[float(v.real), float(v.imag)] for v in out["u"]]
    out["reference"] = [[float(v.real), float(v.imag)] for v in reference]
    out["relative_error"] = err
    kernel_norm = kernel_normalization(spec.beta)
    out["kernel_norm"] = [kernel_norm.real, kernel_norm.imag]
    return out


def _demo_maxcut(params: dict, seed: int) -> dict:
    from .algorithms import (
        FockPartition,
        brute_force_qubo,
        cut_size,
        maxcut_qubo,
        qubo_to_ising,
        vqa_optimize,
    )

    p = _merge(
        {
            "n": 3,
            "edges": [[0, 1], [1, 2], [0, 2]],
            "encoding": "qubits",
            "depth": 2,
            "budget": 300,
        },
        params,
    )
    edges = [tuple(e) for e in p["edges"]]
    qubo = maxcut_qubo(int(p["n"]), edges)
    ising = qubo_to_ising(qubo)
    encoding = p["encoding"]
    if encoding != "qubits":
        encoding = FockPartition(tuple(encoding))
    out = vqa_optimize(ising, encoding, int(p["depth"]), int(p["budget"]), seed)
    out["cut"] = cut_size(edges, out["assignment"])
    _, best = brute_force_qubo(qubo)
    out["brute_force_optimum"] = best
    return out


def _demo_qhd(params: dict, seed: int) -> dict:
    from .algorithms import qhd_minimize

    p = _merge(
        {
            "V": [[-2.0]],
            "W": {"0,0,0,0": 1.0},
            "n_modes": 1,
            "cutoff": 32,
            "T": 4.0,
            "steps": 120,
            "shifts": None,
        },
        params,
    )
    w = {tuple(int(t) for t in key.split(",")): float(v) for key, v in p["W"].items()}
    return qhd_minimize(p["V"], w, int(p["n_modes"]), int(p["cutoff"]),
                        float(p["T"]), int(p["steps"]), seed, p["shifts"])


def _demo_bose_hubbard(params: dict, seed: int) -> dict:
    p = _merge(
        {
            "L": 3, "J": 1.0, "U": 1.0, "mu": 0.0, "sign": "repulsive",
            "cutoff": 4, "boundary": "open", "T": 1.0, "steps": 50,
        },
        params,
    )
    expr, layout = build_bose_hubbard(int(p["L"]), p["J"], p["U"], p["mu"],
                                      p["sign"], int(p["cutoff"]), p["boundary"])
    state = basis_state(layout, [1] * int(p["L"]))
    energy0 = engine.expectation(state, expr)
    engine.evolve_trotter(state, expr, float(p["T"]), int(p["steps"]))
    from .operators import number

    occupations = []
    for site in range(int(p["L"])):
        nop = HamiltonianExpr([Term(1.0 + 0j, ((site, number(int(p["cutoff"]))),))])
        occupations.append(engine.expectation(state, nop))
    return {
        "initial_energy": energy0,
        "final_energy": engine.expectation(state, expr),
        "occupations": occupations,
        "total_number": float(sum(occupations)),
        "norm": state.refresh_norm(),
    }


def _demo_lvc(params: dict, seed: int) -> dict:
    p = _merge(
        {
            "delta": 0.5, "kappa_g": 0.2, "lambda_h": 0.1,
            "omega_g": 1.0, "omega_h": 1.0, "cutoffs": [8, 8],
            "T": 4.0, "steps": 80, "points": 9,
        },
        params,
    )
    expr, layout = build_lvc_two_mode(p["delta"], p["kappa_g"], p["lambda_h"],
                                      p["omega_g"], p["omega_h"], tuple(p["cutoffs"]))
    upper = HamiltonianExpr([Term(0.5 + 0j, ())]) + HamiltonianExpr(
        [Term(0.5 + 0j, ((0, _op(pauli("z"), "qubit", hermitian=True)),))]
    )
    times = np.linspace(0.0, float(p["T"]), int(p["points"]))
    trace = []
    for t in times:
        state = init_vacuum(layout)
        if t > 0:
            engine.evolve_trotter(state, expr, float(t), max(1, int(p["steps"] * t / p["T"])))
        trace.append(engine.expectation(state, upper))
    return {"times": [float(t) for t in times], "upper_population": trace}


def _demo_spin_boson(params: dict, seed: int) -> dict:
    p = _merge(
        {
            "epsilon": [0.5], "delta": [0.0], "bath": [[1.0, 0.2], [1.5, 0.15]],
            "cutoffs": 6, "T": 6.0, "steps": 90, "points": 13,
        },
        params,
    )
    spec = SpinBosonSpec(
        epsilon=p["epsilon"], delta=p["delta"],
        bath=[tuple(b) for b in p["bath"]],
    )
    expr, layout = build_spin_boson(spec, p["cutoffs"])
    n_spins = len(p["epsilon"])
    sx = HamiltonianExpr([Term(1.0 + 0j, ((0, _op(pauli("x"), "qubit", hermitian=True)),))])
    sz = HamiltonianExpr([Term(1.0 + 0j, ((0, _op(pauli("z"), "qubit", hermitian=True)),))])
    times = np.linspace(0.0, float(p["T"]), int(p["points"]))
    coherence, population = [], []
    for t in times:
        state = init_vacuum(layout)
        engine.apply_gate(state, _hadamard(), (0,))  # |+> probe for dephasing
        if t > 0:
            engine.evolve_trotter(state, expr, float(t), max(1, int(p["steps"] * t / p["T"])))
        coherence.append(engine.expectation(state, sx))
        population.append(engine.expectation(state, sz))
    return {
        "times": [float(t) for t in times],
        "sigma_x": coherence,
        "sigma_z": population,
        "n_spins": n_spins,
    }


def _hadamard():
    from .operators import qubit_gate

    return qubit_gate("h")


def _demo_ivr(params: dict, seed: int) -> dict:
    p = _merge(
        {
            "phi": {"0,1,2": 0.1}, "n_modes": 3, "cutoff": 6,
            "omega": 1.0, "initial": [2, 0, 0], "T": 8.0, "steps": 120,
            "points": 17,
        },
        params,
    )
    phi = {tuple(int(t) for t in key.split(",")): float(v) for key, v in p["phi"].items()}
    n_modes, cutoff = int(p["n_modes"]), int(p["cutoff"])
    expr = build_ivr_cubic(phi, n_modes, cutoff)
    from .operators import number

    for m in range(n_modes):
        expr = expr + HamiltonianExpr([Term(complex(p["omega"]), ((m, number(cutoff)),))])
    from .registers import Qumode, make_layout

    layout = make_layout([Qumode(cutoff)] * n_modes)
    psi0 = basis_state(layout, p["initial"])
    times = np.linspace(0.0, float(p["T"]), int(p["points"]))
    survival = [
        engine.survival_probability(psi0, expr, float(t), max(1, int(p["steps"] * t / p["T"])))
        if t > 0 else 1.0
        for t in times
    ]
    return {"times": [float(t) for t in times], "survival_probability": survival}


DEMOS = {
    "rotor-qpe": _demo_rotor_qpe,
    "shor": _demo_shor,
    "lchs": _demo_lchs,
    "maxcut": _demo_maxcut,
    "qhd": _demo_qhd,
    "bose-hubbard": _demo_bose_hubbard,
    "lvc": _demo_lvc,
    "spin-boson": _demo_spin_boson,
    "ivr": _demo_ivr,
}


def demo_report(name: str, params: dict, seed: int) -> dict:
    if name not in DEMOS:
        raise CvdvError(f"unknown demo {name!r}; choose from {sorted(DEMOS)}")
    out = DEMOS[name](params, seed)
    return {"schema": SCHEMA_VERSION, "demo": name, "seed": seed,
            "params": params, "result": out}


# ---------------------------------------------------------------------------
# argument handling


def _load_params(raw: str | None) -> dict:
    if not raw:
        return {}
    if raw.startswith("@"):
        with open(raw[1:], "r", encoding="utf-8") as fh:
            raw = fh.read()
    params = json.loads(raw)
    if not isinstance(params, dict):
        raise CvdvError("--params must be a JSON object")
    return params


def _emit(report: dict, out_path: str | None):
    text = _json.dumps(report)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cvdvsim",
                                     description="hybrid qubit/qumode circuit simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a .hcir circuit")
    p_run.add_argument("file")
    p_run.add_argument("--shots", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", default=None)

    p_est = sub.add_parser("estimate", help="resource-count a .hcir circuit")
    p_est.add_argument("file")
    p_est.add_argument("--out", default=None)

    p_demo = sub.add_parser("demo", help="run a named algorithm demo")
    p_demo.add_argument("name", choices=sorted(DEMOS))
    p_demo.add_argument("--params", default=None, help="inline JSON or @file")
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            with open(args.file, "r", encoding="utf-8") as fh:
                text = fh.read()
            try:
                report = run_report(text, args.shots, args.seed)
            except (ParseError, CircuitTypeError) as exc:
                print(f"{args.file}:{exc}", file=sys.stderr)
                return 1
            _emit(report, args.out)
            return 0
        if args.command == "estimate":
            with open(args.file, "r", encoding="utf-8") as fh:
                text = fh.read()
            try:
                report = estimate_report(text)
            except (ParseError, CircuitTypeError) as exc:
                print(f"{args.file}:{exc}", file=sys.stderr)
                return 1
            _emit(report, args.out)
            return 0
        if args.command == "demo":
            report = demo_report(args.name, _load_params(args.params), args.seed)
            _emit(report, args.out)
            return 0
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 2
    except CvdvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
