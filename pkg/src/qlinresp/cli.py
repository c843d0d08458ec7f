"""Command-line pipeline: prepare, phase-estimate, record, measure.

Verbs:
  respond          run the response pipeline, write CSV + metadata JSON
  finalstate       collapse selected outcomes and measure mode occupations
  resources        print the register/time/repetition budget as JSON
  validate-config  check a config file and report the first offending field

All randomness derives from the single config seed (CLI --seed overrides),
so identical config + seed give byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import finalstate as fs
from . import prep, response, spectral
from .config import RunConfig, load_config
from .errors import ConfigError, HeraldedFailureError, QlrError
from .model import (HubbardParams, LatticeGeometry, build_basis,
                    build_density_excitation, build_hamiltonian,
                    build_momentum_number, momentum)

_SEED_PEA, _SEED_RUS, _SEED_SHOTS = 0, 1, 2


def _child_seed(master: int, stream: int) -> int:
    seq = np.random.SeedSequence(master, spawn_key=(stream,))
    return int(seq.generate_state(1)[0])


class Pipeline:
    """Model -> spectral -> prep staging shared by the CLI verbs."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.geometry = LatticeGeometry(cfg.lx, cfg.ly,
                                        cfg.periodic_x, cfg.periodic_y)
        self.basis = build_basis(self.geometry, cfg.n_up, cfg.n_dn)
        self.hamiltonian = build_hamiltonian(
            self.basis, HubbardParams(t=cfg.t, u=cfg.u))
        self.excitation = build_density_excitation(
            self.basis, momentum(self.geometry, cfg.exc_kx, cfg.exc_ky),
            channel=cfg.channel, spin_mode=cfg.spin_mode)
        self.e0, self.psi0 = spectral.ground_state(self.hamiltonian)
        self.bounds = spectral.spectral_bounds(self.hamiltonian)
        self.h_scaled = spectral.scale_hamiltonian(self.hamiltonian, self.bounds)
        self._prepare()

    def _prepare(self):
        cfg = self.cfg
        self.rounds_used = None
        gamma = cfg.gamma
        if cfg.prep_mode != "exact" and gamma is None:
            o_norm = prep.operator_norm(self.excitation)
            gamma = prep.gamma_bound(cfg.delta_s, o_norm, cfg.c_const)
        if cfg.prep_mode == "exact":
            self.prepared = prep.exact_excited_state(self.excitation, self.psi0)
        elif cfg.prep_mode == "gamma":
            self.prepared = prep.prepare_gamma(
                self.excitation, self.psi0, gamma, dense_cap=cfg.dense_cap)
        else:  # repeat-until-success
            result = prep.repeat_until_success(
                self.excitation, self.psi0, gamma, cfg.max_rounds,
                _child_seed(cfg.seed, _SEED_RUS), dense_cap=cfg.dense_cap)
            if not result.succeeded:
                raise HeraldedFailureError(
                    "state preparation failed within the round budget",
                    rounds=result.rounds_used,
                    failure_probability=result.cumulative_failure_probability)
            self.prepared = result.state
            self.rounds_used = result.rounds_used

    @property
    def w_qubits(self) -> int:
        cfg = self.cfg
        if cfg.w_qubits is not None:
            return cfg.w_qubits
        return response.w_for_resolution(cfg.delta_omega, self.bounds)

    @property
    def n_samples(self) -> int | None:
        cfg = self.cfg
        if cfg.exact_only:
            return None
        if cfg.n_samples is not None:
            return cfg.n_samples
        return response.hoeffding_n(cfg.delta, cfg.epsilon)

    def spectral_data(self, keep_vectors: bool = False):
        return spectral.spectral_weights(
            self.h_scaled, self.prepared.vector, keep_vectors=keep_vectors,
            dense_cap=self.cfg.dense_cap,
            krylov_fallback=self.cfg.krylov_fallback)

    def metadata(self, w_qubits: int, n_samples: int | None) -> dict:
        return {
            "w_qubits": w_qubits,
            "n_samples": n_samples,
            "seed": self.cfg.seed,
            "delta_h": self.bounds.delta_h,
            "e0": self.e0,
            "gamma": self.prepared.gamma,
            "o_sq_expectation": self.prepared.o_sq_expectation,
            "p_success": self.prepared.success_probability,
            "prep_mode": self.cfg.prep_mode,
            "rounds_used": self.rounds_used,
        }


def _ensure_out(cfg: RunConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def run_response(cfg: RunConfig) -> dict:
    """Execute the full response pipeline and write the artifacts."""
    pipe = Pipeline(cfg)
    w = pipe.w_qubits
    data = pipe.spectral_data()
    dist = response.pea_distribution(data, w)
    n = pipe.n_samples
    hist = None
    delta_max = None
    if n is not None:
        hist = response.sample(dist, n, _child_seed(cfg.seed, _SEED_PEA))
        delta_max = response.max_error(hist, dist)
        print(f"delta_max (exact vs sampled, N={n}): {delta_max:.6g}")
    out = _ensure_out(cfg)
    csv_path = os.path.join(out, "response.csv")
    response.write_response_csv(csv_path, dist, pipe.bounds, hist)
    phys = response.rescale(dist, pipe.bounds, pipe.prepared.o_sq_expectation)
    phys_path = os.path.join(out, "s_omega.csv")
    phys.to_csv(phys_path)
    meta = pipe.metadata(w, n)
    meta["delta_max"] = delta_max
    meta_path = os.path.join(out, "metadata.json")
    response.write_metadata(meta_path, **meta)
    print(f"wrote {csv_path}, {phys_path}, {meta_path}")
    return {"csv": csv_path, "s_omega": phys_path, "metadata": meta_path,
            "distribution": dist, "pipeline": pipe}


def _select_outcomes(cfg: RunConfig, dist) -> list[int]:
    if cfg.y_outcomes is not None:
        return list(cfg.y_outcomes)
    order = np.argsort(dist.probabilities, kind="stable")[::-1]
    return [int(y) for y in order[:cfg.top_k]]


def _observable_operator(pipe: Pipeline, mode: tuple[int, int, str]):
    kx, ky, spin = mode
    return build_momentum_number(
        pipe.basis, momentum(pipe.geometry, kx, ky), spin=spin)


def run_finalstate(cfg: RunConfig) -> dict:
    """Collapse the selected outcomes and measure the configured observables."""
    pipe = Pipeline(cfg)
    w = pipe.w_qubits
    data = pipe.spectral_data(keep_vectors=True)
    dist = response.pea_distribution(data, w)
    outcomes = _select_outcomes(cfg, dist)
    out = _ensure_out(cfg)
    if not outcomes:
        print("warning: empty outcome selection, nothing to do")
        return {"reports": []}
    lo, width = spectral.scaled_frame(pipe.bounds)
    rng = np.random.default_rng(_child_seed(cfg.seed, _SEED_SHOTS))
    digits = len(str(dist.n_bins - 1))
    paths = []
    for y in outcomes:
        name = os.path.join(out, f"finalstate_y{y:0{digits}d}.json")
        try:
            state = fs.collapse(data, pipe.prepared.vector, w, y)
        except QlrError as exc:
            fs.write_outcome_report(name, {"y": y, "error": exc.to_json()})
            paths.append(name)
            print(f"outcome y={y}: {exc.message}")
            continue
        if cfg.evolve_time != 0.0:
            state = fs.evolve_final_state(state, pipe.hamiltonian,
                                          cfg.evolve_time,
                                          dense_cap=cfg.dense_cap)
        records = []
        for spec_obs in cfg.observables:
            op_a = _observable_operator(pipe, spec_obs.a)
            if spec_obs.kind == "n1":
                records.append(fs.hadamard_test_n1(
                    state, op_a, cfg.shots, rng,
                    observable_id=spec_obs.label()))
            elif spec_obs.kind == "n2":
                op_b = _observable_operator(pipe, spec_obs.b)
                records.append(fs.hadamard_test_n2(
                    state, op_a, op_b, cfg.shots, rng,
                    observable_id=spec_obs.label()))
            else:
                op_b = _observable_operator(pipe, spec_obs.b)
                rec_a, rec_b = fs.conditional_n2(
                    state, op_a, op_b, cfg.shots, rng,
                    observable_id=spec_obs.label())
                records.extend([rec_a, rec_b])
        omega = (lo - pipe.bounds.e0) + width * y / dist.n_bins
        fs.write_outcome_report(name, fs.outcome_report(state, omega, records))
        paths.append(name)
        print(f"wrote {name} (p_y={state.p_y:.6g})")
    return {"reports": paths}


def run_resources(cfg: RunConfig) -> dict:
    """Print the ResourceEstimate for the configured target as JSON."""
    if cfg.delta is None or cfg.epsilon is None:
        raise ConfigError("resources needs sampling.delta and sampling.epsilon",
                          field="sampling.delta")
    pipe = Pipeline(cfg)
    if cfg.delta_omega is not None:
        delta_omega = cfg.delta_omega
    else:
        _, width = spectral.scaled_frame(pipe.bounds)
        delta_omega = width / (1 << cfg.w_qubits)
    o_norm = prep.operator_norm(pipe.excitation)
    est = response.resource_estimate(
        delta_omega, pipe.bounds, cfg.delta, cfg.epsilon, o_norm,
        pipe.prepared.o_sq_expectation, amplify=cfg.amplify, c=cfg.c_const)
    print(json.dumps(est.to_json(), indent=2, sort_keys=True))
    return est.to_json()


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    from dataclasses import replace
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["out_dir"] = args.out
    if getattr(args, "exact_only", False):
        updates["exact_only"] = True
    return replace(cfg, **updates) if updates else cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlinresp",
        description="Simulate phase-estimation linear-response measurements "
                    "on Hubbard lattice sectors.")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("respond", "finalstate", "resources", "validate-config"):
        p = sub.add_parser(verb)
        p.add_argument("--config", required=True, help="YAML run config")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="override the output dir")
        if verb in ("respond", "finalstate"):
            p.add_argument("--exact-only", action="store_true",
                           dest="exact_only",
                           help="skip sampling, emit exact values only")
        if verb == "finalstate":
            p.add_argument("--y", type=int, action="append", default=None,
                           help="outcome to collapse (repeatable)")
            p.add_argument("--top-k", type=int, default=None,
                           help="collapse the k most probable outcomes")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        if args.verb == "validate-config":
            print("config ok")
            return 0
        if args.verb == "respond":
            run_response(cfg)
        elif args.verb == "finalstate":
            from dataclasses import replace
            if args.y is not None:
                cfg = replace(cfg, y_outcomes=tuple(args.y))
            if args.top_k is not None:
                cfg = replace(cfg, y_outcomes=None, top_k=args.top_k)
            run_finalstate(cfg)
        elif args.verb == "resources":
            run_resources(cfg)
        return 0
    except ConfigError as exc:
        json.dump(exc.to_json(), sys.stderr)
        sys.stderr.write("\n")
        return 2
    except QlrError as exc:
        json.dump(exc.to_json(), sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
