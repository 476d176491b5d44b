"""Staged verification run: geometry, parameters, spectra, triples, cliques, reconstruction."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import cliques as K
from . import reconstruction as R
from . import spectral, triples
from .geometry import DEFAULT_Q_BOUND, GeometryError, QuadrangleModel, build_model, ovoid_intersection_profile
from .incidence import verify_gq_axioms
from .isomorphism import ISOMORPHIC, find_isomorphism
from .parameters import KREIN_ZERO_BASE, PWParameters, expected_parameters, krein_zero_triples, order_from_size
from .report import Record, Report
from .scheme import AssociationScheme, SchemeError, build_pw_scheme, compare_tensors, intersection_numbers, load_scheme

log = logging.getLogger(__name__)

STAGES = ("geometry", "parameters", "eigen", "lemma2", "cliques", "hypotheses", "reconstruction", "isomorphism")

REQUIRES = {
    "geometry": (),
    "parameters": ("geometry",),
    "eigen": ("parameters",),
    "lemma2": ("eigen",),
    "cliques": ("parameters",),
    "hypotheses": ("cliques",),
    "reconstruction": ("hypotheses",),
    "isomorphism": ("reconstruction",),
}

CLAIMS = {
    "gq_axioms": "Q(5,q) is a generalized quadrangle of order (q,q^2)",
    "gq_counts": "point and line counts of Q(5,q) and its hyperplane section",
    "subgq_axioms": "the hyperplane section is a generalized quadrangle of order (q,q)",
    "doubly_subtended": "every subtended ovoid has exactly two subtenders, swapped by the involution",
    "ovoid_intersections": "subtended ovoids meet in 1, q+1 or q^2+1 points according to collinearity",
    "scheme_axioms": "the relation table is a symmetric association scheme",
    "valencies": "valencies of the four classes",
    "intersection_numbers": "intersection numbers equal the closed-form tables",
    "antipode_relations": "class 1 and class 3 swap under the antipode, class 2 is preserved",
    "eigenmatrices": "closed-form P and Q are the eigenmatrices of the scheme",
    "eigenmatrices_derived": "eigenmatrices derived from the intersection numbers agree with the closed form",
    "multiplicities": "eigenspace multiplicities",
    "krein_nonnegative": "Krein parameters are nonnegative",
    "krein_listed_zeros": "the listed Krein parameters vanish",
    "krein_zero_pattern": "Krein zeros involving index 1 are exactly the listed triples",
    "krein_idempotents": "Krein parameters from the concrete idempotents agree with the formula",
    "spherical_gram": "the spherical representation on V1+V4 has rank n3+1",
    "local_basis_rank": "rank of the local vectors {x*} + {y*: y in R3(x)} (reported only)",
    "triple_system": "triple numbers for a triangle in class 3 satisfy [1 3 3] = [1 3 1], [2 3 3] = -2[1 3 1]",
    "triple_propagation": "nonnegativity forces [1 3 3] = [2 3 3] = 0",
    "triple_bruteforce": "counted triple numbers satisfy every equation and vanish at [1 3 3], [2 3 3]",
    "clique_cover": "each class-3 pair lies on a unique maximal clique of size r",
    "antipodal_cliques": "the antipodal image of a clique is a clique",
    "delta_structure": "T_C has r^3-r^2 points and Delta_C is (r-1)-regular in classes 1 and 3",
    "lambda_mu_sizes": "|lambda(y)| = r(r-1) and |mu(y)| = r+1",
    "hypothesis1": "m + n = r^2 - 2r",
    "delta_decomposition": "Delta_C is a disjoint union of r^2-r-2 cliques",
    "sunflowers": "mu-families share exactly one clique",
    "congruence_classes": "congruence classes have r^3-r^2 points and meet in 0 or r^2-r points",
    "quotient_matrices": "quotient matrices of A1, A2 have the closed form and constant row sums",
    "disjoint_cliques": "r+1 cliques through an outside vertex miss a class",
    "hypothesis2": "theta_0(x) >= 1 for disjoint classes",
    "partitions": "partitions into r+1 classes, r+1 through each class",
    "reconstructed_axioms": "the reconstructed structure is a GQ of order (r,r^2)",
    "reconstructed_subquadrangle": "classes and partitions form a GQ of order (r,r)",
    "involution": "the antipode induces an involution fixing the subquadrangle pointwise",
    "connections": "every non-incident pair is joined as the case analysis predicts",
    "natural_isomorphism": "the reconstruction is isomorphic to the source quadrangle",
    "backtracking_isomorphism": "isomorphism found by invariant-pruned backtracking",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    q: Optional[int] = 3
    mode: str = "geometric"
    scheme_file: Optional[Path] = None
    checks: Optional[Sequence[str]] = None
    threads: int = 1
    seed: int = 0
    sample: Optional[int] = None
    q_bound: int = DEFAULT_Q_BOUND
    iso_budget: int = 10_000

    def validate(self) -> None:
        if self.mode not in ("geometric", "abstract"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "geometric":
            if self.q is None:
                raise ConfigError("geometric mode needs q")
            if self.q not in (3, 5, 7) or self.q > self.q_bound:
                raise ConfigError(f"q must be one of 3, 5, 7 and at most the bound {self.q_bound}, got {self.q}")
        elif self.scheme_file is None:
            raise ConfigError("abstract mode needs a scheme file")
        if self.checks is not None:
            unknown = set(self.checks) - set(STAGES)
            if unknown:
                raise ConfigError(f"unknown checks {sorted(unknown)}; choose from {', '.join(STAGES)}")
            if self.mode == "abstract" and "geometry" in self.checks:
                raise ConfigError("the geometry stage needs geometric mode")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.sample is not None and self.sample < 1:
            raise ConfigError("sample must be positive")

    def to_json(self) -> dict:
        return {"q": self.q, "mode": self.mode, "scheme_file": str(self.scheme_file) if self.scheme_file else None,
                "checks": list(self.checks) if self.checks else list(STAGES), "threads": self.threads,
                "seed": self.seed, "sample": self.sample}


class StageFailure(Exception):
    """Raised inside a stage to stop it after recording a failure."""


@dataclass
class Context:
    """Lazily built objects shared between stages."""

    config: RunConfig
    model: Optional[QuadrangleModel] = None
    scheme: Optional[AssociationScheme] = None
    r: Optional[int] = None
    params: Optional[PWParameters] = None
    p: Optional[np.ndarray] = None
    eig: Optional[spectral.Eigenmatrices] = None
    cliques: Optional[K.CliqueSystem] = None
    classes: Optional[K.CongruenceClasses] = None
    partitions: Optional[K.Partitions] = None
    hypothesis_records: List[Record] = field(default_factory=list)
    reconstruction: Optional[R.Reconstruction] = None


def _timed(stage: str, fn: Callable[[], Record]) -> Record:
    start = time.perf_counter()
    try:
        rec = fn()
    except (SchemeError, K.CharacterizationError, spectral.SpectralError, GeometryError) as exc:
        name = getattr(fn, "check_name", None) or "error"
        rec = Record(name, False, {"error": str(exc), "at": getattr(exc, "witness", None)})
    rec.stage = stage
    rec.claim = rec.claim or CLAIMS.get(rec.check, "")
    rec.elapsed = time.perf_counter() - start
    return rec


def _named(name: str, fn: Callable[[], Record]) -> Callable[[], Record]:
    fn.check_name = name
    return fn


# ---------------------------------------------------------------------------
# stages


def stage_geometry(ctx: Context) -> List[Record]:
    q = ctx.config.q
    out = []

    def build():
        ctx.model = build_model(q, ctx.config.q_bound)
        gq, sub = ctx.model.gq, ctx.model.sub
        values = {"points": len(gq.points), "lines": len(gq.lines),
                  "sub_points": len(sub.points), "sub_lines": len(sub.lines)}
        want = {"points": (q + 1) * (q ** 3 + 1), "lines": (q * q + 1) * (q ** 3 + 1),
                "sub_points": (q + 1) * (q * q + 1), "sub_lines": (q + 1) * (q * q + 1)}
        return Record("gq_counts", values == want, None if values == want else want, values)

    out.append(_timed("geometry", _named("gq_counts", build)))
    if ctx.model is None:
        raise StageFailure(out)
    for name, structure, order in (("gq_axioms", ctx.model.gq.structure(), (q, q * q)),
                                   ("subgq_axioms", ctx.model.sub.structure(), (q, q))):
        def check(structure=structure, order=order, name=name):
            rep = verify_gq_axioms(structure)
            ok = rep.ok and rep.order == order
            return Record(name, ok, None if ok else rep.to_json(), {"order": rep.order})
        out.append(_timed("geometry", check))

    def doubly():
        model = ctx.model
        anti = model.antipodes
        bad = [x for x in model.outer if anti[x] != model.involution(x)]
        fixed = [p for p in model.sub_points if model.involution(p) != p]
        ok = not bad and not fixed and len(anti) == len(model.outer)
        return Record("doubly_subtended", ok, None if ok else {"moved_sub_points": fixed[:1], "mismatch": bad[:1]},
                      {"ovoids": len(model.outer) // 2, "subtenders_per_ovoid": 2})

    out.append(_timed("geometry", _named("doubly_subtended", doubly)))

    def profile():
        msg = ovoid_intersection_profile(ctx.model)
        return Record("ovoid_intersections", msg is None, msg, {"sizes": [1, q + 1, q * q + 1]})

    out.append(_timed("geometry", profile))
    return out


def stage_parameters(ctx: Context) -> List[Record]:
    cfg = ctx.config
    out = []

    def load():
        if cfg.mode == "abstract":
            ctx.scheme = load_scheme(cfg.scheme_file)
        else:
            ctx.scheme = build_pw_scheme(ctx.model)
        return Record("scheme_axioms", True, None, {"size": ctx.scheme.size, "classes": ctx.scheme.classes})

    out.append(_timed("parameters", _named("scheme_axioms", load)))
    if ctx.scheme is None:
        raise StageFailure(out)
    scheme = ctx.scheme

    def sizes():
        r = order_from_size(scheme.size) if scheme.classes == 4 else None
        if r is None:
            return Record("valencies", False, {"size": scheme.size, "classes": scheme.classes,
                                                "reason": "no order r >= 3 gives this many vertices"})
        ctx.r = r
        ctx.params = expected_parameters(r)
        ok = scheme.valencies == ctx.params.valencies
        return Record("valencies", ok, None if ok else {"expected": ctx.params.valencies},
                      {"r": r, "valencies": scheme.valencies})

    out.append(_timed("parameters", sizes))
    if ctx.params is None or not out[-1].passed:
        raise StageFailure(out)

    def tensor():
        ctx.p = intersection_numbers(scheme, threads=cfg.threads)
        diff = compare_tensors(ctx.p, ctx.params.p)
        witness = None
        if diff:
            k, i, j = diff
            witness = {"k": k, "i": i, "j": j, "computed": int(ctx.p[k, i, j]),
                       "expected": int(ctx.params.p[k, i, j])}
        return Record("intersection_numbers", diff is None, witness,
                      {"p1_22": int(ctx.p[1, 2, 2]), "p2_22": int(ctx.p[2, 2, 2]),
                       "p3_33": int(ctx.p[3, 3, 3]), "p4_22": int(ctx.p[4, 2, 2])})

    out.append(_timed("parameters", _named("intersection_numbers", tensor)))

    def antipodes():
        rel = scheme.relations
        anti = K.vertex_antipodes(scheme)
        swapped = rel[:, anti]
        want = np.choose(rel, [4, 3, 2, 1, 0])
        bad = np.argwhere(swapped != want)
        if bad.size:
            x, y = bad[0].tolist()
            return Record("antipode_relations", False, {"x": x, "y": y, "relation": int(rel[x, y]),
                                                        "with_antipode": int(swapped[x, y])})
        return Record("antipode_relations", True, None, {"map": {1: 3, 2: 2, 3: 1}})

    out.append(_timed("parameters", _named("antipode_relations", antipodes)))
    return out


def stage_eigen(ctx: Context) -> List[Record]:
    out = []
    params, scheme = ctx.params, ctx.scheme

    def certify():
        ctx.eig = spectral.eigenmatrices(scheme, ctx.p, (params.P, params.Q))
        return Record("eigenmatrices", True, None, {"P": params.P, "Q": params.Q})

    out.append(_timed("eigen", _named("eigenmatrices", certify)))
    if ctx.eig is None:
        raise StageFailure(out)
    eig = ctx.eig

    def derived():
        alt = spectral.eigenmatrices_from_intersection(ctx.p, scheme.size)
        ok = alt.P == eig.P and alt.Q == eig.Q
        return Record("eigenmatrices_derived", ok, None if ok else {"P": alt.P}, {})

    out.append(_timed("eigen", _named("eigenmatrices_derived", derived)))
    out.append(_timed("eigen", lambda: Record("multiplicities", eig.multiplicities == params.multiplicities,
                                              None, {"multiplicities": eig.multiplicities})))
    krein = {}

    def nonneg():
        krein["q"] = spectral.krein_parameters(eig)
        return Record("krein_nonnegative", True, None, {"entries": (eig.d + 1) ** 3})

    out.append(_timed("eigen", _named("krein_nonnegative", nonneg)))
    if "q" in krein:
        pattern = spectral.krein_pattern(krein["q"], krein_zero_triples())
        involving_one = sorted(t for t in pattern["zeros"] if 1 in t)
        out.append(_timed("eigen", lambda: Record(
            "krein_listed_zeros", not pattern["listed_nonzero"],
            {"nonzero": pattern["listed_nonzero"]} if pattern["listed_nonzero"] else None,
            {"listed": [list(t) for t in KREIN_ZERO_BASE]})))
        out.append(_timed("eigen", lambda: Record(
            "krein_zero_pattern", involving_one == krein_zero_triples(), None,
            {"zeros_with_index_1": len(involving_one),
             "unlisted_zeros": sorted({tuple(sorted(t)) for t in pattern["unlisted_zeros"]})})))
        if scheme.size <= 100:
            def concrete():
                alt = spectral.krein_from_idempotents(scheme, eig)
                return Record("krein_idempotents", alt == krein["q"], None, {})
            out.append(_timed("eigen", concrete))

    def gram():
        sg = spectral.spherical_gram(scheme, eig, (1, 4))
        want = scheme.valencies[3] + 1
        return Record("spherical_gram", sg.rank == want, None if sg.rank == want else {"rank": sg.rank},
                      {"rank": sg.rank, "entries": sg.entries})

    out.append(_timed("eigen", _named("spherical_gram", gram)))

    def local():
        sg = spectral.spherical_gram(scheme, eig, (1, 4))
        rank = spectral.local_basis_rank(scheme, sg, 0, 3)
        return Record("local_basis_rank", True, None, {"vertex": 0, "rank": rank,
                                                       "vectors": scheme.valencies[3] + 1})

    out.append(_timed("eigen", _named("local_basis_rank", local)))
    return out


def lemma2_space(p: np.ndarray, Q, krein_triples=None) -> Tuple[triples.SolutionSpace, triples.Propagation]:
    system = triples.build_system(p, 3, 3, 3, symmetry=True, krein=True, Q=Q,
                                  krein_triples=krein_triples or krein_zero_triples())
    space = triples.solve(system)
    return space, triples.nonneg_propagate(space)


def lemma2_relations(space: triples.SolutionSpace) -> Dict[str, bool]:
    i = triples.parse_label
    return {"[1 3 3] = [1 3 1]": space.holds(i("[1 3 3]"), i("[1 3 1]"), 1),
            "[2 3 3] = -2[1 3 1]": space.holds(i("[2 3 3]"), i("[1 3 1]"), -2)}


def stage_lemma2(ctx: Context) -> List[Record]:
    out = []
    result = {}

    def solve():
        space, prop = lemma2_space(ctx.p, ctx.eig.Q)
        result["prop"] = prop
        before = prop.space_before("pair")
        rel = lemma2_relations(before)
        return Record("triple_system", all(rel.values()), None if all(rel.values()) else rel,
                      {"equations": len(space.system.rows), "krein_rows": space.system.count("krein"),
                       "dimension": space.dimension, "free": [triples.unknown_label(f) for f in space.free],
                       "dimension_before_pairing": before.dimension, "relations": rel})

    out.append(_timed("lemma2", _named("triple_system", solve)))
    if "prop" in result:
        prop = result["prop"]
        i = triples.parse_label
        pins = {lab: prop.space.pinned.get(i(lab)) for lab in ("[1 3 3]", "[2 3 3]", "[1 3 1]")}
        ok = all(v == 0 for v in pins.values())
        out.append(_timed("lemma2", lambda: Record(
            "triple_propagation", ok, None if ok else pins,
            {"pinned": pins, "stages": [(rule, len(idx)) for rule, idx in prop.stages]})))

    def brute():
        system = triples.build_system(ctx.p, 3, 3, 3)
        final = result["prop"].space if "prop" in result else None
        profiles, mult, total = triples.bruteforce_profiles(ctx.scheme, 3, 3, 3)
        for prof in profiles:
            v = triples.as_unknown_vector(prof)
            if not system.satisfied_by(v) or (final is not None and not final.contains(v)) \
                    or prof[1, 3, 3] or prof[2, 3, 3]:
                return Record("triple_bruteforce", False, {"profile": prof[1:, 1:, 1:].ravel().tolist()})
        return Record("triple_bruteforce", True, None, {"triangles": total, "distinct_profiles": len(profiles)})

    out.append(_timed("lemma2", _named("triple_bruteforce", brute)))
    return out


def stage_cliques(ctx: Context) -> List[Record]:
    out = []

    def enumerate_():
        ctx.cliques = K.maximal_cliques(ctx.scheme)
        return K.check_clique_cover(ctx.cliques)

    out.append(_timed("cliques", _named("clique_cover", enumerate_)))
    if ctx.cliques is None or not out[-1].passed:
        raise StageFailure(out)
    cs = ctx.cliques
    for fn in (K.check_antipodal_cliques, K.check_delta_structure, K.check_lambda_mu_sizes):
        out.append(_timed("cliques", _named(fn.__name__[6:], lambda fn=fn: fn(cs))))
    return out


def stage_hypotheses(ctx: Context) -> List[Record]:
    cfg = ctx.config
    cs = ctx.cliques
    out = [_timed("hypotheses", _named("hypothesis1", lambda: K.check_hypothesis1(
        cs, sample=cfg.sample, seed=cfg.seed, threads=cfg.threads)))]
    if not out[-1].passed:
        raise StageFailure(out)
    for fn in (K.check_delta_decomposition, K.check_sunflowers):
        out.append(_timed("hypotheses", _named(fn.__name__[6:], lambda fn=fn: fn(cs))))

    def classes():
        ctx.classes = K.congruence_classes(cs)
        return K.check_classes(cs, ctx.classes)

    out.append(_timed("hypotheses", _named("congruence_classes", classes)))
    if ctx.classes is None:
        raise StageFailure(out)
    cc = ctx.classes
    out.append(_timed("hypotheses", _named("quotient_matrices", lambda: K.check_quotients(cs, cc))))
    out.append(_timed("hypotheses", _named("disjoint_cliques", lambda: K.check_disjoint_cliques(cs, cc))))

    def hyp2():
        ctx.partitions = K.partition_set(cs, cc, threads=cfg.threads)
        return K.check_hypothesis2(cs, ctx.partitions)

    out.append(_timed("hypotheses", _named("hypothesis2", hyp2)))
    if ctx.partitions is not None:
        out.append(_timed("hypotheses", lambda: K.check_partitions(cs, cc, ctx.partitions)))
    ctx.hypothesis_records = out
    return out


def stage_reconstruction(ctx: Context) -> List[Record]:
    def build():
        try:
            ctx.reconstruction = R.reconstruct(ctx.cliques, ctx.classes, ctx.partitions, ctx.hypothesis_records)
        except R.MissingPrerequisite as exc:
            return Record("reconstructed_axioms", False, {"reason": str(exc)})
        return R.check_axioms(ctx.reconstruction)

    out = [_timed("reconstruction", _named("reconstructed_axioms", build))]
    if ctx.reconstruction is None:
        raise StageFailure(out)
    rec = ctx.reconstruction
    for fn in (R.check_subquadrangle, R.check_involution, R.check_connections):
        out.append(_timed("reconstruction", lambda fn=fn: fn(rec)))
    return out


def stage_isomorphism(ctx: Context) -> List[Record]:
    rec = ctx.reconstruction
    out = []
    model = ctx.model
    if model is not None:
        out.append(_timed("isomorphism", lambda: R.check_natural_isomorphism(model, rec)))
    elif ctx.r in (3, 5, 7) and ctx.r <= ctx.config.q_bound:
        model = build_model(ctx.r, ctx.config.q_bound)

    def backtrack():
        if model is None:
            return Record("backtracking_isomorphism", False, {"reason": "no classical model for this order"})
        res = find_isomorphism(rec.structure, model.gq.structure(), budget=ctx.config.iso_budget)
        return Record("backtracking_isomorphism", res.status == ISOMORPHIC,
                      None if res.status == ISOMORPHIC else {"status": res.status},
                      {"status": res.status, "nodes": res.nodes})

    out.append(_timed("isomorphism", backtrack))
    return out


STAGE_FUNCS = {
    "geometry": stage_geometry,
    "parameters": stage_parameters,
    "eigen": stage_eigen,
    "lemma2": stage_lemma2,
    "cliques": stage_cliques,
    "hypotheses": stage_hypotheses,
    "reconstruction": stage_reconstruction,
    "isomorphism": stage_isomorphism,
}


def _closure(selected: Sequence[str]) -> List[str]:
    need = set()
    stack = list(selected)
    while stack:
        s = stack.pop()
        if s not in need:
            need.add(s)
            stack.extend(REQUIRES[s])
    return [s for s in STAGES if s in need]


def run_pipeline(config: RunConfig, context: Optional[Context] = None) -> Tuple[Report, Context]:
    """Run the selected stages and their prerequisites.

    Prerequisite stages that were not selected run silently.  A stage whose
    prerequisite failed is not run; a failing ``skipped`` record stands in
    for it.
    """
    config.validate()
    selected = list(config.checks) if config.checks else list(STAGES)
    status: Dict[str, bool] = {}
    if config.mode == "abstract":
        selected = [s for s in selected if s != "geometry"]
        status["geometry"] = True
    ctx = context or Context(config)
    report = Report(config=config.to_json())
    for stage in _closure(selected):
        if stage in status:
            continue
        blocked = [s for s in REQUIRES[stage] if not status.get(s, False)]
        if blocked:
            status[stage] = False
            if stage in selected:
                report.add(Record("skipped", False, {"blocked_by": blocked[0]}, None,
                                  "stage not run because a prerequisite failed", stage))
            continue
        log.info("stage %s", stage)
        try:
            records = STAGE_FUNCS[stage](ctx)
        except StageFailure as halt:
            records = halt.args[0]
        for rec in records:
            rec.stage = stage
        status[stage] = bool(records) and all(r.passed for r in records)
        if stage in selected:
            report.extend(records)
    return report, ctx
