"""Command-line experiment driver.

Every subcommand reads an optional JSON config (``--config``), validates it,
runs one operation and writes a report. Reports are sorted-key JSON (CSV for
enumerations) with no timestamps, so equal configs give equal bytes; run
metadata goes to ``<out>.meta.json`` when ``--out`` is given.

Exit status: 0 success, 1 validation error, 2 guard refusal.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
import time
from fractions import Fraction
from typing import Any, Callable, Optional

import jsonschema

from . import __version__
from .adversary import (
    Distinguisher, accept_set_distinguisher, attack_success_census, bit_distinguisher, constant_distinguisher,
    equality_distinguisher, exact_advantage, leak_bit_length, parity_distinguisher, range_distinguisher, run_leak,
)
from .core import BitString, DomainError, GuardExceeded, RandomStream, bad_set_bound, binary_entropy, hamming_ball_volume
from .derand import derandomize_decision, derandomize_search
from .design import Design, design_from_polynomials, gen_design_greedy, gen_design_km, verify_design
from .fixtures import decider_from_json, search_problem_from_json
from .machines import TruncationBudget, decode, enumerate_machines, run_truncated
from .nwprg import (
    MAX_ENUM_SEED_BITS, HardFunctionOracle, TargetedPRG, ToyParams, derive_paper_params, enumerate_outputs, expand,
    planted_oracle, seeded_oracle,
)
from .searchprob import (
    HardnessProblemParams, finder_failure_census, hardness_finder, hardness_verifier, hardness_yes_oracle,
    random_is_hard_census,
)


class ValidationError(Exception):
    def __init__(self, pointer: str, message: str) -> None:
        super().__init__(message)
        self.pointer = pointer
        self.message = message


# --- schemas -------------------------------------------------------------------

BITS = {"type": "string", "pattern": "^[01]*$"}
NAT = {"type": "integer", "minimum": 0}
POS = {"type": "integer", "minimum": 1}
RATIONAL = {"type": "string", "pattern": r"^[0-9]+(/[0-9]+)?$"}

DESIGN_OBJ = {
    "type": "object",
    "required": ["d", "r", "s", "sets"],
    "properties": {"d": NAT, "r": NAT, "s": NAT, "sets": {"type": "array", "items": {"type": "array", "items": NAT}}},
}

DESIGN_SPEC = {
    "oneOf": [
        DESIGN_OBJ,
        {"type": "object", "required": ["greedy"], "properties": {"greedy": {
            "type": "object", "required": ["d", "r", "s", "m_target"],
            "properties": {"d": POS, "r": POS, "s": NAT, "m_target": POS}}}},
        {"type": "string"},  # path to a design JSON file
    ]
}

PRG_SPEC = {
    "type": "object",
    "required": ["design", "oracle"],
    "properties": {
        "design": DESIGN_SPEC, "m": POS, "n": POS,
        "oracle": {"type": "string", "pattern": r"^(table:[01]+|planted:[01]+|seeded:[0-9]+)$"},
    },
}

DISTINGUISHER = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["constant", "bit", "equality", "parity", "accept-set", "range"]},
        "bit": {"enum": [0, 1]}, "index": NAT, "value": BITS,
        "indices": {"type": "array", "items": NAT}, "accept": {"type": "array", "items": BITS},
    },
}

HARDNESS = {
    "n": POS, "c1": NAT, "c2": NAT, "ell": NAT, "dist_threshold": NAT, "max_desc_bits": NAT, "sample_count": POS,
}


def _obj(required: list[str], props: dict) -> dict:
    return {"type": "object", "required": required, "properties": props}


SCHEMAS: dict[str, dict] = {
    "design gen": {"oneOf": [
        _obj(["method", "d", "r", "s", "m_target"],
             {"method": {"const": "greedy"}, "d": POS, "r": POS, "s": NAT, "m_target": POS}),
        _obj(["method", "d", "alpha"], {"method": {"const": "km"}, "d": POS, "alpha": RATIONAL}),
        _obj(["method", "p", "degree", "m_target"],
             {"method": {"const": "poly"}, "p": POS, "degree": NAT, "m_target": POS}),
    ]},
    "design verify": _obj(["design"], {"design": DESIGN_SPEC}),
    "prg params": _obj(["m", "alpha"], {"m": POS, "alpha": RATIONAL, "C": POS}),
    "prg expand": _obj(["prg", "target", "seed"], {"prg": PRG_SPEC, "target": BITS, "seed": BITS}),
    "prg enumerate": _obj(["prg", "target"], {"prg": PRG_SPEC, "target": BITS}),
    "attack advantage": _obj(["prg", "target", "distinguisher"],
                             {"prg": PRG_SPEC, "target": BITS, "distinguisher": DISTINGUISHER}),
    "attack leak": _obj(["prg", "target"], {"prg": PRG_SPEC, "target": BITS}),
    "attack census": _obj(["prg", "target", "distinguisher"],
                          {"prg": PRG_SPEC, "target": BITS, "distinguisher": DISTINGUISHER}),
    "lemma ball": _obj(["n", "radius"], {"n": POS, "radius": NAT}),
    "lemma badset": _obj(["n", "ell", "dist"], {"n": POS, "ell": NAT, "dist": POS}),
    "lemma census": _obj(["x", "ell", "dist"],
                         {"x": BITS, "ell": NAT, "dist": NAT, "attacker": BITS, "leak": BITS, "c1": NAT, "c2": NAT,
                          "mode": {"enum": ["pair", "finder"]}, "max_desc_bits": NAT}),
    "hardness oracle": _obj(["x", "r", "params"], {"x": BITS, "r": BITS, "params": _obj(["n"], HARDNESS)}),
    "hardness verify": _obj(["x", "r", "params"], {"x": BITS, "r": BITS, "params": _obj(["n"], HARDNESS),
                                                  "mode": {"enum": ["batched", "simulate"]}}),
    "hardness find": _obj(["x"], {"x": BITS}),
    "derand decision": _obj(["problem", "prg", "input"],
                            {"problem": {"type": ["object", "string"]}, "prg": {"type": ["object", "string"]},
                             "input": BITS, "pad_target": NAT}),
    "derand search": _obj(["problem", "prg", "input"],
                          {"problem": {"type": ["object", "string"]}, "prg": {"type": ["object", "string"]},
                           "input": BITS, "pad_target": NAT,
                           "exceptions": {"type": "object", "additionalProperties": BITS}}),
    "vm run": _obj(["bits", "input"], {
        "bits": BITS, "input": {"oneOf": [BITS, {"type": "array", "items": BITS}]},
        "max_steps": NAT, "max_work_cells": NAT, "max_output": NAT, "trace": {"type": "boolean"}}),
    "vm enumerate": _obj(["max_bits"], {"max_bits": NAT}),
}


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def validate(command: str, cfg: dict) -> None:
    """Raise ValidationError naming the offending field."""
    validator = jsonschema.Draft7Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        path = list(err.absolute_path)
        if err.validator == "required":
            missing = [k for k in err.validator_value if k not in err.instance]
            path.append(missing[0])
        raise ValidationError(_pointer(path), err.message)


# --- builders --------------------------------------------------------------------

def _load_json(path_or_obj: Any, pointer: str) -> Any:
    if isinstance(path_or_obj, str):
        try:
            with open(path_or_obj) as fh:
                return json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(pointer, f"cannot read {path_or_obj!r}: {exc}") from None
    return path_or_obj


def build_design(spec: Any, pointer: str = "/design") -> Design:
    spec = _load_json(spec, pointer)
    if not isinstance(spec, dict):
        raise ValidationError(pointer, "design must be a JSON object")
    missing = [k for k in ("d", "r", "s", "sets") if k not in spec]
    if "greedy" not in spec and missing:
        raise ValidationError(f"{pointer}/{missing[0]}", f"design field {missing[0]!r} is missing")
    if "greedy" in spec:
        g = spec["greedy"]
        return gen_design_greedy(g["d"], g["r"], g["s"], g["m_target"])
    try:
        return Design.from_json(spec)
    except (DomainError, KeyError, TypeError) as exc:
        raise ValidationError(pointer, str(exc)) from None


def build_oracle(text: str, n: int) -> HardFunctionOracle:
    kind, _, arg = text.partition(":")
    if kind == "seeded":
        return seeded_oracle(int(arg))
    if len(arg) != n and kind == "table":
        raise ValidationError("/prg/oracle", f"table has {len(arg)} bits, generator needs n = {n}")
    return planted_oracle(arg)


def build_prg(spec: Any, pointer: str = "/prg") -> TargetedPRG:
    from_file = isinstance(spec, str)
    spec = _load_json(spec, pointer)
    if from_file:
        err = jsonschema.exceptions.best_match(jsonschema.Draft7Validator(PRG_SPEC).iter_errors(spec))
        if err is not None:
            raise ValidationError(pointer + _pointer(err.absolute_path), err.message)
    design = build_design(spec["design"], pointer + "/design")
    report = verify_design(design)
    if not report.valid:
        raise ValidationError(pointer + "/design", report.reason)
    if design.d > MAX_ENUM_SEED_BITS:
        raise GuardExceeded(f"seed length {design.d} exceeds the generator guard {MAX_ENUM_SEED_BITS}")
    try:
        params = ToyParams.for_design(design, m=spec.get("m"), n=spec.get("n"))
        return TargetedPRG(design, build_oracle(spec["oracle"], params.n), params)
    except DomainError as exc:
        raise ValidationError(pointer, str(exc)) from None


def build_distinguisher(spec: dict, prg: TargetedPRG, target: BitString) -> Distinguisher:
    kind = spec["kind"]
    if kind == "constant":
        return constant_distinguisher(spec.get("bit", 1))
    if kind == "bit":
        if spec.get("index", 0) >= prg.m:
            raise ValidationError("/distinguisher/index", f"index must be below m = {prg.m}")
        return bit_distinguisher(spec.get("index", 0))
    if kind == "equality":
        return equality_distinguisher(spec.get("value", "0" * prg.m))
    if kind == "parity":
        return parity_distinguisher(spec.get("indices", list(range(prg.m))))
    if kind == "accept-set":
        return accept_set_distinguisher(spec.get("accept", []))
    return range_distinguisher(prg, target)


def _target(cfg: dict, prg: TargetedPRG, key: str = "target") -> BitString:
    x = BitString(cfg[key])
    if len(x) != prg.n:
        raise ValidationError(f"/{key}", f"has {len(x)} bits, generator expects n = {prg.n}")
    return x


def _hardness_params(obj: dict) -> HardnessProblemParams:
    return HardnessProblemParams(
        obj["n"], obj.get("c1", 2), obj.get("c2", 2), obj.get("ell", 0), obj.get("dist_threshold", 1),
        obj.get("max_desc_bits"), obj.get("sample_count"))


# --- command handlers ---------------------------------------------------------------
# each returns (report, csv_rows or None)

Handler = Callable[[dict, RandomStream], tuple[Any, Optional[list]]]


def cmd_design_gen(cfg: dict, rng: RandomStream):
    method = cfg["method"]
    if method == "greedy":
        design = gen_design_greedy(cfg["d"], cfg["r"], cfg["s"], cfg["m_target"])
    elif method == "km":
        design = gen_design_km(cfg["d"], Fraction(cfg["alpha"]))
    else:
        design = design_from_polynomials(cfg["p"], cfg["degree"], cfg["m_target"])
    report = design.to_json()
    report["m"] = design.m
    report["notes"] = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in design.notes.items()}
    report["valid"] = verify_design(design).valid
    return report, None


def cmd_design_verify(cfg: dict, rng: RandomStream):
    return verify_design(build_design(cfg["design"])).to_json(), None


def cmd_prg_params(cfg: dict, rng: RandomStream):
    params = derive_paper_params(cfg["m"], Fraction(cfg["alpha"]), cfg.get("C", 3))
    report = params.to_json()
    report["leak_bit_length"] = leak_bit_length(params).to_json()
    if params.paper_scale:
        report["leak_bit_length"]["total"] = "exceeds paper scale; see table_bits exponent"
        report["leak_bit_length"]["table_bits"] = f"{params.m}*2^{params.s_overlap}"
    return report, None


def cmd_prg_expand(cfg: dict, rng: RandomStream):
    prg = build_prg(cfg["prg"])
    x = _target(cfg, prg)
    seed = BitString(cfg["seed"])
    if len(seed) != prg.d:
        raise ValidationError("/seed", f"has {len(seed)} bits, generator expects d = {prg.d}")
    return {"target": x.bits, "seed": seed.bits, "output": expand(prg, x, seed).bits}, None


def cmd_prg_enumerate(cfg: dict, rng: RandomStream):
    prg = build_prg(cfg["prg"])
    x = _target(cfg, prg)
    rows = [["seed", "output"]] + [[s.bits, o.bits] for s, o in enumerate_outputs(prg, x)]
    return {"seeds": 1 << prg.d, "m": prg.m}, rows


def cmd_attack_advantage(cfg: dict, rng: RandomStream):
    prg = build_prg(cfg["prg"])
    x = _target(cfg, prg)
    D = build_distinguisher(cfg["distinguisher"], prg, x)
    report = exact_advantage(D, prg, x, rng.split("aux")).to_json()
    report["distinguisher"] = D.label
    return report, None


def cmd_attack_leak(cfg: dict, rng: RandomStream):
    prg = build_prg(cfg["prg"])
    x = _target(cfg, prg)
    if prg.n != 1 << prg.params.r:
        raise ValidationError("/prg/n", "the leak needs n = 2^r")
    out = run_leak(x, prg.truth_table(x), prg.params, prg.design, rng.split("leak"))
    return {"j": out.j, "y_off": out.y_off.bits, "tables": [t.bits for t in out.tables], "b": out.b,
            "w_j": out.w_j, "w_tail": out.w_tail.bits, "serialized": out.serialized.bits,
            "length": len(out.serialized)}, None


def cmd_attack_census(cfg: dict, rng: RandomStream):
    prg = build_prg(cfg["prg"])
    x = _target(cfg, prg)
    if prg.n != 1 << prg.params.r:
        raise ValidationError("/prg/n", "the census needs n = 2^r")
    D = build_distinguisher(cfg["distinguisher"], prg, x)
    return attack_success_census(D, prg, x).to_json(), None


def cmd_lemma_ball(cfg: dict, rng: RandomStream):
    n, radius = cfg["n"], cfg["radius"]
    if radius > n:
        raise ValidationError("/radius", f"radius {radius} exceeds n = {n}")
    vol = hamming_ball_volume(n, radius)
    log2_bound = n * binary_entropy(Fraction(radius, n))
    return {"n": n, "radius": radius, "volume": str(vol), "entropy_exponent": round(log2_bound, 12),
            "entropy_bound_holds": None if 2 * radius > n else vol <= 2 ** log2_bound}, None


def cmd_lemma_badset(cfg: dict, rng: RandomStream):
    n, ell, dist = cfg["n"], cfg["ell"], cfg["dist"]
    return {"n": n, "ell": ell, "dist": dist, "bound": str(bad_set_bound(n, ell, dist)),
            "space": str(1 << n)}, None


def cmd_lemma_census(cfg: dict, rng: RandomStream):
    x = BitString(cfg["x"])
    n = len(x)
    if n == 0:
        raise ValidationError("/x", "target must be non-empty")
    params = HardnessProblemParams(n, cfg.get("c1", 2), cfg.get("c2", 2), cfg["ell"], cfg["dist"],
                                   cfg.get("max_desc_bits"))
    if cfg.get("mode", "pair") == "finder":
        return finder_failure_census(x, params).to_json(), None
    for key in ("attacker", "leak"):
        if key not in cfg:
            raise ValidationError(f"/{key}", f"'{key}' is required in pair mode")
    report = random_is_hard_census(decode(cfg["attacker"]), decode(cfg["leak"]), x, cfg["ell"], cfg["dist"], params)
    out = report.to_json()
    out["bound"] = str(out["bound"])
    return out, None


def cmd_hardness_oracle(cfg: dict, rng: RandomStream):
    params = _hardness_params(cfg["params"])
    report = hardness_yes_oracle(cfg["x"], cfg["r"], params).to_json()
    report["params"] = params.to_json()
    return report, None


def cmd_hardness_verify(cfg: dict, rng: RandomStream):
    params = _hardness_params(cfg["params"])
    accept = hardness_verifier(cfg["x"], cfg["r"], params, rng.split("verifier"), cfg.get("mode", "batched"))
    return {"accept": accept, "params": params.to_json(), "mode": cfg.get("mode", "batched")}, None


def cmd_hardness_find(cfg: dict, rng: RandomStream):
    return {"x": cfg["x"], "r": hardness_finder(cfg["x"], rng.split("finder")).bits}, None


def cmd_derand_decision(cfg: dict, rng: RandomStream):
    decider = decider_from_json(_load_json(cfg["problem"], "/problem"))
    prg = build_prg(cfg["prg"])
    x = BitString(cfg["input"])
    result = derandomize_decision(decider.M, prg, x, cfg.get("pad_target", prg.n))
    report = result.to_json()
    report["problem"] = decider.label
    return report, None


def cmd_derand_search(cfg: dict, rng: RandomStream):
    problem = search_problem_from_json(_load_json(cfg["problem"], "/problem"))
    prg = build_prg(cfg["prg"])
    x = BitString(cfg["input"])
    result = derandomize_search(problem, prg, x, cfg.get("pad_target", prg.n), cfg.get("exceptions"))
    report = result.to_json()
    report["problem"] = problem.label
    return report, None


def cmd_vm_run(cfg: dict, rng: RandomStream):
    machine = decode(cfg["bits"])
    inp = cfg["input"]
    inp = tuple(inp) if isinstance(inp, list) else inp
    budget = TruncationBudget(cfg.get("max_steps", 1000), cfg.get("max_work_cells", 16))
    trace: Optional[list] = [] if cfg.get("trace") else None
    out = run_truncated(machine, inp, rng.split("vm"), budget, cfg.get("max_output", 1000), trace)
    report = {"program": str(machine), "output": out.output.bits, "truncated": out.truncated, "steps": out.steps}
    if trace is not None:
        report["trace"] = [list(t) for t in trace]
    return report, None


def cmd_vm_enumerate(cfg: dict, rng: RandomStream):
    rows = [["index", "bits", "program"]]
    for i, mach in enumerate(enumerate_machines(cfg["max_bits"])):
        rows.append([str(i), mach.description.bits.bits, str(mach)])
    return {"count": len(rows) - 1, "max_bits": cfg["max_bits"]}, rows


HANDLERS: dict[str, Handler] = {
    "design gen": cmd_design_gen, "design verify": cmd_design_verify,
    "prg params": cmd_prg_params, "prg expand": cmd_prg_expand, "prg enumerate": cmd_prg_enumerate,
    "attack advantage": cmd_attack_advantage, "attack leak": cmd_attack_leak, "attack census": cmd_attack_census,
    "lemma ball": cmd_lemma_ball, "lemma badset": cmd_lemma_badset, "lemma census": cmd_lemma_census,
    "hardness oracle": cmd_hardness_oracle, "hardness verify": cmd_hardness_verify,
    "hardness find": cmd_hardness_find,
    "derand decision": cmd_derand_decision, "derand search": cmd_derand_search,
    "vm run": cmd_vm_run, "vm enumerate": cmd_vm_enumerate,
}

# per-subcommand flags that fill config fields: (flag, config key, type)
FLAGS: dict[str, list[tuple[str, str, Callable]]] = {
    "design verify": [("--design", "design", str)],
    "prg expand": [("--design", "design", str), ("--oracle", "oracle", str), ("--target", "target", str),
                   ("--seed", "seed", str), ("--m", "m", int)],
    "prg enumerate": [("--design", "design", str), ("--oracle", "oracle", str), ("--target", "target", str),
                      ("--m", "m", int)],
    "derand decision": [("--problem", "problem", str), ("--prg", "prg", str), ("--input", "input", str)],
    "derand search": [("--problem", "problem", str), ("--prg", "prg", str), ("--input", "input", str)],
    "vm run": [("--bits", "bits", str), ("--input", "input", str)],
    "vm enumerate": [("--max-bits", "max_bits", int)],
    "hardness find": [("--x", "x", str)],
    "lemma ball": [("--n", "n", int), ("--radius", "radius", int)],
    "lemma badset": [("--n", "n", int), ("--ell", "ell", int), ("--dist", "dist", int)],
}

PRG_FLAG_KEYS = {"design", "oracle", "m"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file for the subcommand")
    common.add_argument("--out", help="report path (default: stdout)")
    parser = argparse.ArgumentParser(prog="nwlab", description="Targeted NW generator and derandomization lab")
    parser.add_argument("--seed", dest="master_seed", type=int, default=None,
                        help="master seed (overrides master_seed in the config)")
    parser.add_argument("--threads", type=int, default=1, help="accepted for compatibility; runs are single-threaded")
    parser.add_argument("--version", action="version", version=__version__)
    groups = parser.add_subparsers(dest="group", required=True)
    by_group: dict[str, list[str]] = {}
    for name in HANDLERS:
        g, c = name.split()
        by_group.setdefault(g, []).append(c)
    for g, cmds in by_group.items():
        gp = groups.add_parser(g).add_subparsers(dest="command", required=True)
        for c in cmds:
            sp = gp.add_parser(c, parents=[common])
            for flag, key, typ in FLAGS.get(f"{g} {c}", []):
                sp.add_argument(flag, dest=f"flag_{key}", type=typ, default=None)
    return parser


def _config_from_args(command: str, args: argparse.Namespace) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError("/", f"cannot read config {args.config!r}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ValidationError("/", "config must be a JSON object")
    for _, key, _ in FLAGS.get(command, []):
        value = getattr(args, f"flag_{key}")
        if value is None:
            continue
        if command.startswith("prg") and key in PRG_FLAG_KEYS:
            cfg.setdefault("prg", {})[key] = value
        else:
            cfg[key] = value
    return cfg


def render(report: Any, rows: Optional[list]) -> str:
    if rows is not None:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        return buf.getvalue()
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def run(command: str, cfg: dict, master_seed: int) -> tuple[Any, Optional[list]]:
    """Validate and execute one subcommand; raises ValidationError or GuardExceeded."""
    validate(command, cfg)
    rng = RandomStream(master_seed).split(command)
    try:
        return HANDLERS[command](cfg, rng)
    except DomainError as exc:
        raise ValidationError("/", str(exc)) from None


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = f"{args.group} {args.command}"
    started = time.time()
    try:
        cfg = _config_from_args(command, args)
        master_seed = args.master_seed if args.master_seed is not None else int(cfg.pop("master_seed", 0))
        cfg.pop("master_seed", None)
        report, rows = run(command, cfg, master_seed)
    except ValidationError as exc:
        print(f"nwlab: invalid config at {exc.pointer}: {exc.message}", file=sys.stderr)
        return 1
    except GuardExceeded as exc:
        print(f"nwlab: refused: {exc}", file=sys.stderr)
        return 2
    text = render(report, rows)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        meta = {"command": command, "config": args.config, "master_seed": master_seed, "threads": args.threads,
                "started": started, "finished": time.time(), "python": platform.python_version(),
                "version": __version__}
        with open(args.out + ".meta.json", "w") as fh:
            json.dump(meta, fh, sort_keys=True, indent=2)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
