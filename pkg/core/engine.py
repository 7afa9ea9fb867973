import csv
import json
import platform
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from chains.gallery import galleryChain
from chains.grid_chain import buildGridChain, gridConvergenceSweep, gridDoeblinTarget
from chains.kernel_chain import buildKernelChain, kernelBoundsTable, kernelDoeblinTarget, tabulatedKernelOperator

from . import __version__, settings
from .dobrushin import coefficientBattery, delta, opennessCheck
from .errors import ChainConstructionError, InputError, NumericError, PreconditionError
from .ergodicity import (
    VerdictThresholds,
    decayBoundCheck,
    defaultProbes,
    doeblinCheck,
    doeblinSearch,
    implicationConsistency,
    lStrongErgodicity,
    lStrongImpliesD2,
    lWeakErgodicity,
    probePairs,
    uniformErgodicity,
    weakErgodicity,
)
from .obsb import Vector, baseCenter
from .operators import MarkovOperator, NdmcSpec, composite, fromMatrix, isMarkov, perturb
from .run_logger import jsonDefault, logEvent
from .scenario import Scenario

CsvRow = tuple[int, int, float, str, str]
CSV_HEADER = ("k", "n", "value", "mode", "series")


def formatCell(v: Any) -> str:
    """17 significant digits for floats; everything else as text."""
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def writeTraceCsv(path: Path, rows: Sequence[CsvRow]) -> None:
    """UTF-8, LF line endings, header row; no timing data so reruns are byte-identical."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow([formatCell(v) for v in row])


def certificateRows(cert: dict[str, Any], series: str) -> list[CsvRow]:
    k = cert["k"]
    rows = [(k, n, v, "residual", f"{series}:residual") for n, v in cert.get("residual_trace", [])]
    if cert.get("n_k") is not None:
        rows += [(k, cert["n_k"], v, cert["mode"], f"{series}:probe{i}") for i, v in cert["residuals"]]
    return rows


class ScenarioEngine:
    """
    Runs one validated scenario: builds the chain, executes the analyses in
    listed order and assembles the report bundle.

    Responsibilities
    ----------------
    • Turn the scenario's chain block into an NdmcSpec (one builder per family).
    • Dispatch every analysis to the numerical core and collect its payload and traces.
    • Write report.json plus one trace CSV per analysis, only after every analysis finished.

    Typical usage
    -------------
        engine = ScenarioEngine(loadScenario("scenarios/grid-multiplication.yaml"), outDir="data/out")
        bundle = engine.run()
        paths = engine.write(bundle)

    run() returns:
        {
          "version": str,
          "scenario": { ...validated scenario, re-loadable... },
          "chain": { "label", "family", "start_index", "flags" },
          "analyses": [ {id, kind, summary, result}, ... ],
          "runtime": { started, elapsed_s, python, numpy, seed, budget, cone_tol, parallel }
        }
    """

    def __init__(
        self,
        scenario: Scenario,
        outDir: Optional[str] = None,
        budget: Optional[int] = None,
        coneTol: Optional[float] = None,
        parallel: bool = False,
        name: Optional[str] = None,
    ):
        """
        Args:
            scenario (Scenario): validated scenario (see core/scenario.py).
            outDir (str): report folder; defaults to OBSB_OUT_DIR.
            budget (int): δ search budget overriding every analysis' own value.
            coneTol (float): cone membership tolerance; beats the scenario's tolerances.cone_tol.
            parallel (bool): run independent per-k traces in threads (merge order is fixed).
            name (str): bundle name for logs; defaults to the scenario name.
        """
        if budget is not None and budget < 1:
            raise InputError("budget must be >= 1")
        if coneTol is not None and coneTol < 0:
            raise InputError("tolerance must be >= 0")
        self.scenario = scenario
        self.outDir = Path(outDir or settings.OUT_DIR)
        self.budget = budget
        self.coneTol = coneTol if coneTol is not None else scenario.tolerances.cone_tol
        self.parallel = parallel
        self.name = name or scenario.name or "scenario"
        self.seed = scenario.seed
        self.thresholds: VerdictThresholds = scenario.tolerances.thresholds()
        self._spec: Optional[NdmcSpec] = None
        self._rows: dict[str, list[CsvRow]] = {}
        self._handlers: dict[str, Callable[[Any, str], tuple[dict, dict, list[CsvRow]]]] = {
            "uniform": self._uniform,
            "weak": self._weak,
            "l_weak": self._lWeak,
            "l_strong": self._lStrong,
            "doeblin_check": self._doeblinCheck,
            "doeblin_search": self._doeblinSearch,
            "coefficient_battery": self._battery,
            "implication_chain": self._implicationChain,
            "decay_bound": self._decayBound,
            "delta": self._delta,
            "vanishing_slack": self._vanishingSlack,
            "grid_sweep": self._gridSweep,
            "kernel_bounds": self._kernelBounds,
            "openness": self._openness,
        }

    # ---------- chain ----------

    def buildChain(self) -> NdmcSpec:
        """
        NdmcSpec for the scenario's chain block (built once).

        Raises:
            ChainConstructionError: coefficients or inline matrices are not Markov.
        """
        if self._spec is not None:
            return self._spec
        block = self.scenario.chain
        prm = block.params
        if block.family == "grid_multiplication":
            spec = buildGridChain(prm)
        elif block.family == "kernel_lorentz":
            spec = buildKernelChain(prm)
        elif block.family == "kernel_table":
            T = tabulatedKernelOperator(prm.p, prm.g, prm.kernel, prm.rule)
            spec = NdmcSpec.homogeneous(T, "kernel_table", family="kernel_table")
        elif block.family == "gallery":
            spec = galleryChain(prm.name, prm.dimension, self.seed if prm.seed is None else prm.seed)
        else:
            space = self.scenario.space.build()
            mats = [prm.matrix] if block.family == "homogeneous" else prm.matrices
            ops = [fromMatrix(space, m, f"T{i}") for i, m in enumerate(mats)]
            bad = [i for i, op in enumerate(ops) if not isMarkov(op).passed]
            if bad:
                logEvent("chain_rejected", {"family": block.family, "violated": bad})
                raise ChainConstructionError(f"Matrices {bad} do not map K into K", bad)
            if block.family == "homogeneous":
                spec = NdmcSpec.homogeneous(ops[0], prm.label)
            else:
                spec = NdmcSpec.fromList(ops, prm.cycling, "list", prm.start_index)
        self._spec = spec
        return spec

    # ---------- helpers ----------

    def _budget(self, own: Optional[int]) -> int:
        if self.budget is not None:
            return self.budget
        return own if own is not None else settings.DELTA_BUDGET

    def _k(self, k: Optional[int]) -> int:
        return self.buildChain().startIndex if k is None else k

    def _ks(self, ks: Optional[Sequence[int]]) -> list[int]:
        ks = list(ks) if ks else [self.buildChain().startIndex]
        start = self.buildChain().startIndex
        low = [k for k in ks if k < start]
        if low:
            raise InputError(f"ks {low} precede the chain start k={start}")
        return ks

    def _probes(self, a: Any) -> list[Vector]:
        space = self.buildChain().space
        if a.probes:
            return [Vector(space, np.asarray(p, dtype=float)) for p in a.probes]
        count = settings.PROBE_COUNT if a.probe_count is None else a.probe_count
        return defaultProbes(space, count=count, seed=self.seed)

    def _operator(self, kind: str) -> MarkovOperator:
        spec = self.buildChain()
        if not spec.isHomogeneous():
            raise PreconditionError(f"'{kind}' needs a homogeneous chain, got family '{spec.family}'")
        return spec.step(spec.startIndex)

    # ---------- analyses ----------
    # Each handler returns (summary, result, csv rows).

    def _uniform(self, a, series):
        rep = uniformErgodicity(self._operator("uniform"), a.n_max, self._budget(a.budget), self.seed,
                                self.thresholds, self.buildChain().label)
        det = rep.details["uniform"]
        summary = {"verdict": rep.verdicts["uniform"], "n0": det.get("n0"), "alpha": det.get("alpha")}
        return summary, rep.toDict(), rep.csvRows(series)

    def _weak(self, a, series):
        rep = weakErgodicity(self.buildChain(), self._ks(a.ks), a.n_max, self._budget(a.budget), self.seed,
                             self.thresholds, self.parallel, a.product_bound)
        summary = {"verdict": rep.verdicts["weak"], "flags": rep.flags}
        return summary, rep.toDict(), rep.csvRows(series)

    def _lWeak(self, a, series):
        spec = self.buildChain()
        if a.pairs:
            pairs = [(Vector(spec.space, np.asarray(x, dtype=float)), Vector(spec.space, np.asarray(y, dtype=float)))
                     for x, y in a.pairs]
        else:
            probes = self._probes(a)
            pairs = [(probes[i], probes[j]) for i, j in probePairs(len(probes))]
        rep = lWeakErgodicity(spec, self._ks(a.ks), pairs, a.n_max, self.thresholds, self.parallel, self.seed)
        return {"verdict": rep.verdicts["l_weak"]}, rep.toDict(), rep.csvRows(series)

    def _lStrong(self, a, series):
        rep = lStrongErgodicity(self.buildChain(), self._ks(a.ks), self._probes(a), a.n_max, self.thresholds,
                                a.window, self.parallel, self.seed)
        summary = {"verdict": rep.verdicts["l_strong"], "flags": rep.flags}
        return summary, rep.toDict(), rep.csvRows(series)

    def _familyTarget(self, k: int) -> tuple[Vector, float]:
        """The family's own Doeblin pair (z, λ): grid 𝟙 with λ = c, kernel (1, 2g_k) with λ = ½."""
        block = self.scenario.chain
        if block.family == "grid_multiplication":
            return gridDoeblinTarget(self.buildChain().space), block.params.constant_c
        if block.family == "kernel_lorentz":
            return kernelDoeblinTarget(block.params, block.params.fixed_index or k), 0.5
        raise InputError(f"z: 'family' has no target for chain family '{block.family}'; give z explicitly")

    def _doeblinCheck(self, a, series):
        spec = self.buildChain()
        k = self._k(a.k)
        if a.z == "family":
            z, lam = self._familyTarget(k)
        else:
            z, lam = Vector(spec.space, np.asarray(a.z, dtype=float)), 1.0
        lam = a.lam if a.lam is not None else lam
        nK = a.n_k if a.n_k is not None else k + 1
        horizon = a.horizon if a.horizon is not None else k + 100
        cert = doeblinCheck(spec, a.condition, k, z, lam, self._probes(a), nK, horizon, self.thresholds)
        res = cert.toDict()
        worst = max((r for _, r in cert.residuals), default=0.0)
        summary = {"verdict": "pass" if cert.passed else "fail", "mode": cert.mode, "max_residual": worst}
        return summary, res, certificateRows(res, series)

    def _doeblinSearch(self, a, series):
        cert = doeblinSearch(self.buildChain(), self._k(a.k), a.horizon, self._probes(a))
        res = cert.toDict()
        summary = {"verdict": "pass" if cert.passed else "fail", "n_k": cert.nK, "mode": cert.mode}
        return summary, res, certificateRows(res, series)

    def _battery(self, a, series):
        spec = self.buildChain()
        s0, s1 = a.steps if a.steps is not None else (spec.startIndex, spec.startIndex + 1)
        res = coefficientBattery(spec.step(s0), spec.step(s1), budget=self._budget(a.budget), seed=self.seed)
        failed = [c["name"] for c in res["checks"] if not c["ok"]]
        return {"ok": res["ok"], "exact": res["exact"], "failed": failed}, res, []

    def _implicationChain(self, a, series):
        res = implicationConsistency(self.buildChain(), a.horizon, self._ks(a.ks), self._probes(a),
                                     self.thresholds, self.seed)
        return {"ok": res["ok"], "violations": len(res["violations"])}, res, []

    def _decayBound(self, a, series):
        res = decayBoundCheck(self.buildChain(), self._k(a.k), a.alpha, self._probes(a), a.n_max, a.spacing, self.seed)
        rows = [(k, n, v, mode, f"{series}:{mode}") for k, n, v, mode in res["trace"]]
        return {"ok": res["ok"], "C": res["C"], "spacing": res["spacing"]}, res, rows

    def _delta(self, a, series):
        spec = self.buildChain()
        k = self._k(a.k)
        d = delta(composite(spec, k, a.n), self._budget(a.budget), self.seed)
        return {"value": d.value, "mode": d.mode}, {"k": k, "n": a.n, **d.toDict()}, [(k, a.n, d.value, d.mode, series)]

    def _vanishingSlack(self, a, series):
        res = lStrongImpliesD2(self.buildChain(), self._probes(a), a.horizon, self._k(a.k), thresholds=self.thresholds)
        rows = certificateRows(res["certificate"], series) if res["certificate"] else []
        return {"verdict": res["verdict"], "l_strong": res["l_strong"]}, res, rows

    def _gridSweep(self, a, series):
        res = gridConvergenceSweep(a.sizes, a.k, a.horizon, self.thresholds.passThreshold,
                                   self.scenario.chain.params.constant_c)
        flag = "discretization-sensitive" if res["monotone"] else "inconclusive"
        return {"monotone": res["monotone"], "flag": flag}, res, []

    def _kernelBounds(self, a, series):
        prm = self.scenario.chain.params
        ks = self._ks(a.ks or list(range(prm.start_index, prm.start_index + 5)))
        rows = kernelBoundsTable(prm, ks)
        ok = all(r["split_certified"] for r in rows)
        return {"ok": ok, "ks": ks}, {"rows": rows}, []

    def _openness(self, a, series):
        T = self._operator("openness")
        H = perturb(T, baseCenter(T.space), a.eps)
        res = opennessCheck(T, H, a.n, self._budget(a.budget), self.seed)
        return {"ok": res["ok"], "inside": res["inside"]}, res, []

    # ---------- run / write ----------

    def run(self) -> dict[str, Any]:
        """
        Execute every analysis in order.

        Raises:
            NumericError: a solver failed; `detail["analysis"]` names the analysis.
            InputError / PreconditionError: invalid analysis parameters for this chain.
        """
        started = datetime.now(timezone.utc)
        t0 = time.perf_counter()
        saved = settings.CONE_TOL
        if self.coneTol is not None:
            settings.CONE_TOL = self.coneTol
        try:
            spec = self.buildChain()
            results = []
            self._rows = {}
            for aid, a in zip(self.scenario.analysisIds(), self.scenario.analyses):
                logEvent("analysis", {"scenario": self.name, "id": aid, "kind": a.kind, "phase": "start"})
                t1 = time.perf_counter()
                try:
                    summary, result, rows = self._handlers[a.kind](a, aid)
                except NumericError as e:
                    e.detail["analysis"] = aid
                    logEvent("analysis", {"scenario": self.name, "id": aid, "kind": a.kind, "phase": "error",
                                          "error": str(e)})
                    raise
                logEvent("analysis", {"scenario": self.name, "id": aid, "kind": a.kind, "phase": "finish",
                                      "elapsed_s": round(time.perf_counter() - t1, 4), "summary": summary})
                results.append({"id": aid, "kind": a.kind, "summary": summary, "result": result})
                self._rows[aid] = rows
        finally:
            settings.CONE_TOL = saved

        return {
            "version": __version__,
            "scenario": self.scenario.echo(),
            "chain": {"label": spec.label, "family": spec.family, "start_index": spec.startIndex,
                      "flags": list(spec.flags)},
            "analyses": results,
            "runtime": {
                "started": started.isoformat(),
                "elapsed_s": round(time.perf_counter() - t0, 4),
                "python": platform.python_version(),
                "numpy": np.__version__,
                "seed": self.seed,
                "budget": self.budget,
                "cone_tol": self.coneTol if self.coneTol is not None else settings.CONE_TOL,
                "parallel": self.parallel,
            },
        }

    def write(self, bundle: dict[str, Any]) -> list[Path]:
        """Write report + CSV traces of a finished run(); returns the written paths."""
        self.outDir.mkdir(parents=True, exist_ok=True)
        report = self.outDir / self.scenario.output.report
        with open(report, "w", encoding="utf-8", newline="\n") as f:
            json.dump(bundle, f, ensure_ascii=False, indent=2, default=jsonDefault)
            f.write("\n")
        paths = [report]
        if self.scenario.output.csv:
            for aid, rows in self._rows.items():
                if not rows:
                    continue
                path = self.outDir / f"{aid}.csv"
                writeTraceCsv(path, rows)
                paths.append(path)
        return paths


__all__ = ["ScenarioEngine", "writeTraceCsv", "formatCell", "CSV_HEADER"]
