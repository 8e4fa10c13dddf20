"""Command-line interface.

Exit status is 0 on success, 1 when a domain error is raised (the error is
printed as JSON on stdout) and 2 for malformed input.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from ._numeric import is_exact, jsonable, normalize, parse_number
from ._parallel import default_workers
from .errors import OutOfRange, SystoleKitError

log = logging.getLogger("systolekit")

COMMANDS = ("validate", "volume", "systole", "ratio", "net", "extend", "embed-report", "fill",
            "iso-check", "regularity", "nerve", "hausdorff", "constants")
MAX_C = 8


class MalformedInput(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    inputs: dict = field(default_factory=dict)
    eps: object = None
    alpha: object = None
    delta: object = 1
    A_n: object = None
    C: dict = field(default_factory=dict)  # dimension -> C_n override
    subdivision: int = 4
    lp_tol: float = 1e-9
    extra: dict = field(default_factory=dict)
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        if self.eps is not None and not 0 < self.eps < Fraction(1, 2):
            raise OutOfRange(f"eps must lie in (0, 1/2), got {self.eps}")
        if self.eps is not None and self.alpha is not None and self.subcommand == "extend" \
                and self.alpha > self.eps:
            raise OutOfRange(f"alpha = {self.alpha} exceeds eps = {self.eps}")
        if not self.lp_tol > 0:
            raise OutOfRange("lp tolerance must be positive")
        if self.subdivision < 1:
            raise OutOfRange("subdivision level must be >= 1")
        if self.delta is not None and not self.delta > 0:
            raise OutOfRange("delta must be positive")

    def C_n(self, n: int):
        return self.C.get(n, 1)

    def to_dict(self) -> dict:
        """Reproducibility record; worker count and output paths are left out."""
        doc = {"subcommand": self.subcommand, "inputs": dict(sorted(self.inputs.items())),
               "eps": jsonable(self.eps), "alpha": jsonable(self.alpha), "delta": jsonable(self.delta),
               "A_n": jsonable(self.A_n), "C": {str(k): jsonable(v) for k, v in sorted(self.C.items())},
               "subdivision": self.subdivision, "lp_tol": self.lp_tol}
        doc.update({k: jsonable(v) for k, v in sorted(self.extra.items())})
        return doc


# ----------------------------------------------------------------------------
# argument handling


def _number(snap: bool = False):
    def conv(text):
        try:
            return parse_number(text, snap=snap)
        except (ValueError, TypeError) as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return conv


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _number_list(text: str) -> list:
    try:
        return [parse_number(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise MalformedInput(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--mesh", help="mesh JSON")
    common.add_argument("--phi", help="edge-word homomorphism JSON")
    common.add_argument("--group", help="group presentation JSON (if not embedded in --phi)")
    common.add_argument("--net", help="net JSON: {\"nodes\": [...]} or {\"vertices\": [...]}")
    common.add_argument("--complex", help="cube complex JSON")
    common.add_argument("--chain", help="cubical chain JSON")
    common.add_argument("--eps", type=_number(snap=True))
    common.add_argument("--alpha", type=_number(snap=True))
    common.add_argument("--delta", type=_number(snap=True), default=1)
    common.add_argument("--A", dest="A_n", type=_number())
    for d in range(1, MAX_C + 1):
        common.add_argument(f"--c{d}", type=_number(), help=f"filling constant C_{d} (default 1)")
    common.add_argument("--n", type=int, help="dimension for constants")
    common.add_argument("-k", "--subdivision", type=int, default=4)
    common.add_argument("--lp-tol", type=float, default=1e-9)
    common.add_argument("--workers", type=int, default=None, help="default: available cores")
    common.add_argument("-o", "--output", help="write the JSON report here")
    common.add_argument("--csv", help="write the radius profile CSV here")
    common.add_argument("--center", type=_int_list, help="center node ids")
    common.add_argument("--radii", type=_number_list, help="comma-separated radii")
    common.add_argument("--R0", type=_number())
    common.add_argument("--shift", type=_number(), help="offset a in the shifted growth bound")
    common.add_argument("--set-a", type=_int_list)
    common.add_argument("--set-b", type=_int_list)
    common.add_argument("--pairs", type=int, default=10000, help="sampled pairs for certificates")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-dim", type=int, default=3)

    parser = _Parser(prog="systolekit", description="Systolic geometry of PL cycles.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _config(args) -> RunConfig:
    inputs = {k: getattr(args, k) for k in ("mesh", "phi", "group", "net", "complex", "chain")
              if getattr(args, k)}
    C = {d: getattr(args, f"c{d}") for d in range(1, MAX_C + 1) if getattr(args, f"c{d}") is not None}
    extra = {}
    for k in ("n", "center", "radii", "R0", "shift", "set_a", "set_b", "pairs", "seed", "max_dim"):
        v = getattr(args, k)
        if v is not None:
            extra[k] = v
    workers = default_workers() if args.workers is None else args.workers
    return RunConfig(args.command, inputs, args.eps, args.alpha, args.delta, args.A_n, C, args.subdivision,
                     args.lp_tol, extra, workers, args.output)


def _read_json(path, flag: str = "input"):
    if not path:
        raise MalformedInput(f"{flag} is required")
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from None


def _need(value, flag):
    if value is None:
        raise MalformedInput(f"{flag} is required")
    return value


# ----------------------------------------------------------------------------
# loaders


def _mesh(cfg):
    from .mesh import mesh_from_dict
    try:
        return mesh_from_dict(_read_json(cfg.inputs.get("mesh"), "--mesh"))
    except (ValueError, TypeError, KeyError) as exc:
        raise MalformedInput(str(exc)) from None


def _graph(cfg, V, g):
    from .metric import build_geodesic_graph
    return build_geodesic_graph(V, g, cfg.subdivision)


def _phi(cfg, V):
    from .homotopy import homomorphism_from_dict, presentation_from_dict
    doc = _read_json(cfg.inputs.get("phi"), "--phi")
    group = presentation_from_dict(_read_json(cfg.inputs["group"], "--group")) if "group" in cfg.inputs else None
    try:
        return homomorphism_from_dict(V, doc, group)
    except (TypeError, KeyError, AttributeError) as exc:
        raise MalformedInput(f"malformed homomorphism: {exc}") from None


def _net(cfg, G):
    from .metric import alpha_dense_net, make_net
    if "net" not in cfg.inputs:
        alpha = cfg.alpha if cfg.alpha is not None else cfg.eps
        return alpha_dense_net(G, _need(alpha, "--net or --alpha"))
    doc = _read_json(cfg.inputs.get("net"), "--net")
    try:
        if "vertices" in doc:
            pts = [G.node_of_vertex(v) for v in doc["vertices"]]
        else:
            pts = [int(v) for v in doc["nodes"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"malformed net: {exc}") from None
    if any(not 0 <= p < G.n_nodes for p in pts):
        raise MalformedInput("net node out of range")
    return make_net(G, pts, cfg.alpha)


def _complex_and_chain(cfg):
    from .chains import chain_from_dict
    from .cubical import CubeComplex
    try:
        K = CubeComplex.from_dict(_read_json(cfg.inputs.get("complex"), "--complex"))
        z = chain_from_dict(_read_json(cfg.inputs.get("chain"), "--chain"), K)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInput(f"malformed complex or chain: {exc}") from None
    return K, z


def _params(cfg):
    from .cubical import ExtensionParams
    return ExtensionParams(_need(cfg.eps, "--eps"), cfg.delta)


# ----------------------------------------------------------------------------
# commands; each returns (report dict, scalar to print or None)


def cmd_validate(cfg):
    from .mesh import total_volume
    V, g = _mesh(cfg)
    return {"dim": V.dim, "vertices": len(V.vertices), "top_simplices": len(V.top_simplices),
            "orientable": V.orientable, "total_volume": jsonable(total_volume(V, g)), "valid": True}, None


def cmd_volume(cfg):
    from .mesh import total_volume
    V, g = _mesh(cfg)
    vol = total_volume(V, g)
    return {"total_volume": jsonable(vol), "dim": V.dim}, vol


def _systole_doc(res, phi):
    from .homotopy import element_to_word
    element = None if res.element is None else phi.group.format_word(element_to_word(phi.group, res.element))
    return {"systole": jsonable(res.value), "base_node": res.base, "element": element,
            "subdivision": res.level, "normality": phi.normality, "fundamental_class": "assumed"}


def cmd_systole(cfg):
    from .homotopy import systole_search
    V, g = _mesh(cfg)
    G = _graph(cfg, V, g)
    phi = _phi(cfg, V)
    res = systole_search(G, phi, workers=cfg.workers)
    return _systole_doc(res, phi), res.value


def cmd_ratio(cfg):
    from .homotopy import systolic_ratio, systole_search
    from .mesh import total_volume
    V, g = _mesh(cfg)
    G = _graph(cfg, V, g)
    phi = _phi(cfg, V)
    ratio = systolic_ratio(V, g, G, phi, workers=cfg.workers)
    doc = _systole_doc(systole_search(G, phi, workers=cfg.workers), phi)
    doc.update({"total_volume": jsonable(total_volume(V, g)), "ratio": jsonable(ratio)})
    return doc, ratio


def cmd_net(cfg):
    from .metric import alpha_dense_net
    V, g = _mesh(cfg)
    G = _graph(cfg, V, g)
    net = alpha_dense_net(G, _need(cfg.alpha, "--alpha"))
    return net.to_dict(), None


def cmd_extend(cfg):
    from .cubical import build_extension
    V, g = _mesh(cfg)
    G = _graph(cfg, V, g)
    net = _net(cfg, G)
    ext = build_extension(V, g, G, net, _params(cfg), workers=cfg.workers)
    return ext.to_dict(), None


def cmd_embed_report(cfg):
    from .cubical import embed_all, injectivity_check, lipschitz_report
    from .metric import net_distortion_report, sample_pairs
    V, g = _mesh(cfg)
    G = _graph(cfg, V, g)
    net = _net(cfg, G)
    params = _params(cfg)
    pairs = sample_pairs(G.n_nodes, cfg.extra.get("pairs"), cfg.extra.get("seed", 0))
    lip = lipschitz_report(G, embed_all(G, net, params), params.lipschitz, pairs)
    inj = injectivity_check(G, net, params, pairs)
    dist = net_distortion_report(G, net, pairs)
    return {"net": net.to_dict(),
            "lipschitz": {"bound": jsonable(lip.bound), "max_ratio": jsonable(lip.max_ratio),
                          "pairs_checked": lip.pairs_checked, "violations": len(lip.violations)},
            "injectivity": {"threshold": jsonable(inj.threshold),
                            "min_far_separation": jsonable(inj.min_far_separation),
                            "near_collisions": len(inj.near_collisions),
                            "far_collisions": [list(p) for p in inj.far_collisions],
                            "shared_face_violations": len(inj.shared_face_violations),
                            "injective_on_samples": inj.injective_on_samples},
            "distortion": {"eta": jsonable(dist.eta), "pairs_checked": dist.pairs_checked,
                           "upper_bound_violations": len(dist.upper_bound_violations)}}, None


def cmd_fill(cfg):
    from .chains import filling_lp
    K, z = _complex_and_chain(cfg)
    return filling_lp(z, K, lp_tol=cfg.lp_tol).to_dict(), None


def cmd_iso_check(cfg):
    from .chains import filling_lp, isoperimetric_check, isoperimetric_constants
    K, z = _complex_and_chain(cfg)
    n = cfg.extra.get("n", z.degree)
    res = filling_lp(z, K, lp_tol=cfg.lp_tol)
    verdict = isoperimetric_check(z, res, isoperimetric_constants(n, cfg.C_n(n)))
    return {"filling": res.to_dict(), "check": verdict.to_dict()}, None


def _default_radii(lo, hi, count=10):
    if is_exact(lo) and is_exact(hi):
        step = (Fraction(hi) - Fraction(lo)) / (count - 1)
        return [normalize(Fraction(lo) + i * step) for i in range(count)]
    return [float(lo) + i * (float(hi) - float(lo)) / (count - 1) for i in range(count)]


def cmd_regularity(cfg):
    from .chains import regularity_constant_A
    from .homotopy import systolic_ratio, systole_search
    from .regularity import epsilon_regular_verdict, gromov_constant, profiles_for_centers
    V, g = _mesh(cfg)
    G = _graph(cfg, V, g)
    phi = _phi(cfg, V)
    eps = _need(cfg.eps, "--eps")
    n = V.dim
    A = cfg.A_n
    if A is None:
        if n < 2:
            raise MalformedInput("--A is required in dimension 1")
        A = regularity_constant_A(n, cfg.C_n(n - 1), cfg.C_n(n)).A
    sys_ = systole_search(G, phi, workers=cfg.workers).value
    half = normalize(Fraction(sys_) / 2) if is_exact(sys_) else sys_ / 2
    radii = cfg.extra.get("radii") or _default_radii(eps, half)
    centers = cfg.extra.get("center") or sorted(G.vertex_nodes.values())
    profiles = profiles_for_centers(V, g, G, centers, radii, workers=cfg.workers)
    report = epsilon_regular_verdict(profiles, sys_, eps, A, n=n, a=cfg.extra.get("shift"))
    doc = report.to_dict()
    C = gromov_constant(A, n) if A > 0 else 0
    ratio = systolic_ratio(V, g, G, phi, workers=cfg.workers)
    doc.update({"gromov_constant": jsonable(C), "systolic_ratio": jsonable(ratio),
                "ratio_at_least_constant": bool(ratio >= C)})
    return doc, None, report


def cmd_nerve(cfg):
    from .mesh import total_volume
    from .metric import ball_volume_profile
    from .regularity import maximal_packing, nerve_count_bound_check, nerve_of_cover
    V, g = _mesh(cfg)
    G = _graph(cfg, V, g)
    R0 = _need(cfg.extra.get("R0"), "--R0")
    centers = maximal_packing(G, R0)
    nerve = nerve_of_cover(centers, R0, G, max_dim=cfg.extra.get("max_dim", 3))
    doc = {"nerve": nerve.to_dict()}
    if cfg.A_n is not None:
        profiles = [ball_volume_profile(V, g, G, c, [R0]) for c in centers]
        doc["bound"] = nerve_count_bound_check(nerve, total_volume(V, g), cfg.A_n, R0, profiles,
                                               n=V.dim).to_dict()
    return doc, None


def cmd_hausdorff(cfg):
    from .metric import hausdorff_distance
    V, g = _mesh(cfg)
    G = _graph(cfg, V, g)
    A, B = _need(cfg.extra.get("set_a"), "--set-a"), _need(cfg.extra.get("set_b"), "--set-b")
    if any(not 0 <= x < G.n_nodes for x in A + B):
        raise MalformedInput("node id out of range")
    h = hausdorff_distance(A, B, G)
    return {"hausdorff": jsonable(h)}, h


def cmd_constants(cfg):
    from .chains import isoperimetric_constants, regularity_constant_A
    from .regularity import gromov_constant
    n = _need(cfg.extra.get("n"), "--n")
    if n < 1:
        raise MalformedInput("--n must be >= 1")
    doc = {"isoperimetric": [isoperimetric_constants(d, cfg.C_n(d)).to_dict() for d in range(1, n + 1)]}
    if n >= 2:
        reg = regularity_constant_A(n, cfg.C_n(n - 1), cfg.C_n(n))
        doc["regularity"] = reg.to_dict()
        doc["gromov_constant"] = jsonable(gromov_constant(reg.A, n))
    return doc, None


HANDLERS = {"validate": cmd_validate, "volume": cmd_volume, "systole": cmd_systole, "ratio": cmd_ratio,
            "net": cmd_net, "extend": cmd_extend, "embed-report": cmd_embed_report, "fill": cmd_fill,
            "iso-check": cmd_iso_check, "regularity": cmd_regularity, "nerve": cmd_nerve,
            "hausdorff": cmd_hausdorff, "constants": cmd_constants}


# ----------------------------------------------------------------------------
# entry point


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _scalar(x) -> str:
    if x == float("inf"):
        return "inf"
    return repr(float(x))


def _setup_logging() -> None:
    level = os.environ.get("SYSTOLEKIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def run(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        log.info("running %s with %d workers", cfg.subcommand, cfg.workers)
        out = HANDLERS[cfg.subcommand](cfg)
        doc, scalar = out[0], out[1]
        doc = {"config": cfg.to_dict(), "result": doc}
        if args.csv:
            if len(out) < 3:
                raise MalformedInput("--csv is only available for the regularity command")
            from .metric import write_profile_csv
            with open(args.csv, "w", newline="") as fh:
                write_profile_csv(fh, out[2].csv_rows())
        if scalar is not None:
            stdout.write(_scalar(scalar) + "\n")
            if cfg.output:
                Path(cfg.output).write_text(_dump(doc))
        else:
            text = _dump(doc)
            if cfg.output:
                Path(cfg.output).write_text(text)
            stdout.write(text)
        return 0
    except SystoleKitError as exc:
        stdout.write(_dump(exc.to_dict()))
        return 1
    except (MalformedInput, ValueError, TypeError, KeyError) as exc:
        sys.stderr.write(_dump({"error": "MalformedInput", "message": str(exc)}))
        return 2


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
