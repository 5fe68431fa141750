"""Benchmark harness: synthetic datasets, accuracy/runtime experiments.

The synthetic generator builds a unit-normalized prototype per class (all
prototypes share a common component, so classes compete the way samples of
one object category do), derives style domains from the deterministic
transform family below, and draws test queries as dictionary atoms plus
isotropic noise of norm ``1/separation``.

The default experiment compares three configurations of the same solver --
source dictionary only, full multi-domain dictionary, and the weighted
path -- and asserts the expected accuracy ordering; the scaling sweep
measures how per-query solve time grows with the number of domains for the
weighted and unweighted paths.
"""

import json
import math
import platform
import statistics
import time
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import kernels, rng
from .backend import ACTIVE_BACKEND, NUMBA_AVAILABLE
from .classify import classify, top_k_recall
from .dictionary import (Dictionary, assemble_miscellaneous, extract_domain,
                         load_dictionary, normalize_atoms, read_matrix_file)
from .domains import DomainTransform, apply_transform, build_transform_suite
from .solver import FactorCache, SolverConfig, solve_query

# Synthetic-data knobs, fixed where the three-way accuracy ordering is
# cleanly observable at desk scale (class prototypes nearly half shared,
# test noise 2.5x the atom norm at the default separation).
CLASS_CORE_WEIGHT = 0.7
DEFAULT_SEPARATION = 0.4
DEFAULT_LAMBDA = 0.04
DEFAULT_SEED = 42
DEFAULT_TEST_COUNT = 300

# fold() key namespaces for the generator's independent streams
_KEY_CORE = 1
_KEY_PROTOS = 2
_KEY_PICKS = 3
_KEY_TRANSFORM = 500
_KEY_QUERY_NOISE = 1_000_000


@dataclass(frozen=True)
class TestSample:
    query: np.ndarray
    class_id: int
    domain_id: int


def _grid_shape(d):
    h = int(math.isqrt(d))
    while d % h:
        h -= 1
    return h, d // h


def default_transform_family(d, s, seed):
    """The s-1 synthetic domains used by the generator.

    Cycles five archetypes -- two heavy additive-noise domains, a strong
    gain-compression-plus-bias illumination, a box blur, and a corner
    occlusion -- with parameters varied per repetition so all domains stay
    mutually distinguishable.
    """
    h, w = _grid_shape(d)
    root = 1.0 / math.sqrt(d)
    occl_corners = ((1, 1), (0, 0), (0, 1), (1, 0))
    blur_widths = (5, 7, 3, 9, 11)
    transforms = []
    for l in range(1, s):
        cycle, rep = (l - 1) % 5, (l - 1) // 5
        label = f"d{l:02d}"
        t_seed = rng.fold(seed, _KEY_TRANSFORM + l)
        if cycle == 0:
            t = DomainTransform("additive_noise", f"{label}_noise",
                                {"sigma": (3.0 + 0.7 * rep) * root}, seed=t_seed)
        elif cycle == 1:
            t = DomainTransform("additive_noise", f"{label}_noise",
                                {"sigma": (2.0 + 0.5 * rep) * root}, seed=t_seed)
        elif cycle == 2:
            t = DomainTransform("illumination", f"{label}_illum",
                                {"gain": 0.2 + 0.08 * rep,
                                 "bias": (0.9 - 0.12 * rep) * root})
        elif cycle == 3:
            t = DomainTransform("blur", f"{label}_blur",
                                {"width": blur_widths[rep % len(blur_widths)]},
                                geometry=(h, w))
        else:
            frac = (0.7, 0.6, 0.8, 0.65)[rep % 4]
            rh, rw = max(1, round(h * frac)), max(1, round(w * frac))
            rh, rw = min(rh, h), min(rw, w)
            down, right = occl_corners[rep % 4]
            t = DomainTransform("occlusion", f"{label}_occl",
                                {"row": h - rh if down else 0,
                                 "col": w - rw if right else 0,
                                 "height": rh, "width": rw, "fill": 0.0},
                                geometry=(h, w))
        transforms.append(t)
    return build_transform_suite(transforms)


def gen_synthetic(d, n, s, separation, seed, test_count=DEFAULT_TEST_COUNT):
    """Build a synthetic multi-domain dictionary and a labeled test set.

    Queries are atoms of the normalized dictionary plus a random direction
    scaled by ``1/separation`` (``separation=inf`` gives noise-free queries
    that equal dictionary atoms exactly).  Everything is a pure function of
    ``seed``, so identical calls reproduce identical bytes.
    """
    if d < 1 or n < 1 or s < 1:
        raise ValueError(f"sizes must be positive, got d={d}, n={n}, s={s}")
    if test_count < 1:
        raise ValueError(f"test_count must be >= 1, got {test_count}")
    if not separation > 0:
        raise ValueError(f"separation must be positive, got {separation}")

    core = rng.normal(rng.fold(seed, _KEY_CORE), d)
    core /= np.linalg.norm(core)
    protos = rng.normal(rng.fold(seed, _KEY_PROTOS), d * n).reshape(d, n)
    protos /= np.linalg.norm(protos, axis=0)
    protos = CLASS_CORE_WEIGHT * core[:, None] + \
        math.sqrt(1.0 - CLASS_CORE_WEIGHT ** 2) * protos
    protos /= np.linalg.norm(protos, axis=0)

    class_labels = [f"class_{k:03d}" for k in range(n)]
    source = Dictionary(data=protos, class_labels=class_labels,
                        domain_labels=("source",))
    suite = default_transform_family(d, s, seed)
    transferred = [apply_transform(t, source) for t in suite]
    misc = normalize_atoms(assemble_miscellaneous(source, transferred))

    picks = rng.uniform(rng.fold(seed, _KEY_PICKS), 2 * test_count)
    noise_scale = 0.0 if math.isinf(separation) else 1.0 / separation
    samples = []
    for i in range(test_count):
        k = min(int(picks[2 * i] * n), n - 1)
        l = min(int(picks[2 * i + 1] * s), s - 1)
        q = misc.atom(k, l).copy()
        if noise_scale:
            eta = rng.normal(rng.fold(seed, _KEY_QUERY_NOISE + i), d)
            q += (noise_scale / np.linalg.norm(eta)) * eta
        samples.append(TestSample(query=q, class_id=k, domain_id=l))
    return misc, samples


@dataclass
class BenchConfig:
    """One experiment row: a named solver setup over a dictionary choice."""

    name: str
    solver: SolverConfig
    dictionary: str = "miscellaneous"

    def __post_init__(self):
        if self.dictionary not in ("source", "miscellaneous"):
            raise ValueError(
                f"dictionary must be 'source' or 'miscellaneous', got {self.dictionary!r}"
            )


@dataclass
class ExperimentSpec:
    """Dataset + configurations + embedded report assertions."""

    dataset: dict
    configs: list
    test_count: int = DEFAULT_TEST_COUNT
    output_path: str = None
    assertions: list = field(default_factory=list)

    def __post_init__(self):
        if self.test_count < 1:
            raise ValueError(f"test_count must be >= 1, got {self.test_count}")
        if not self.configs:
            raise ValueError("at least one solver configuration is required")


_SOLVER_KEY_ALIASES = {"lambda": "lam", "l2": "l2_penalty", "weighting": "weighting_mode"}


def solver_config_from_dict(raw):
    kwargs = {}
    for key, value in raw.items():
        kwargs[_SOLVER_KEY_ALIASES.get(key, key)] = value
    return SolverConfig(**kwargs)


def spec_from_dict(raw):
    """Parse an experiment spec from its JSON object form."""
    if "dataset" not in raw or "solver_configs" not in raw:
        raise ValueError("experiment spec needs 'dataset' and 'solver_configs'")
    configs = []
    for entry in raw["solver_configs"]:
        entry = dict(entry)
        name = entry.pop("name")
        dictionary = entry.pop("dictionary", "miscellaneous")
        configs.append(BenchConfig(name=name, dictionary=dictionary,
                                   solver=solver_config_from_dict(entry)))
    return ExperimentSpec(
        dataset=raw["dataset"],
        configs=configs,
        test_count=int(raw.get("test_count", DEFAULT_TEST_COUNT)),
        output_path=raw.get("output_path"),
        assertions=list(raw.get("assertions", [])),
    )


def load_spec(path):
    with open(path) as fh:
        return spec_from_dict(json.load(fh))


def default_experiment_spec(seed=DEFAULT_SEED, test_count=DEFAULT_TEST_COUNT,
                            separation=DEFAULT_SEPARATION):
    """The stock three-way comparison at desk scale."""
    solver = dict(lam=DEFAULT_LAMBDA, tau0=0.1, tau_growth=1.05, tau_cap=1.0,
                  max_iter=200, tol=1e-3)
    configs = [
        BenchConfig("source_only", SolverConfig(weighting_mode="none", **solver),
                    dictionary="source"),
        BenchConfig("misc_unweighted", SolverConfig(weighting_mode="none", **solver)),
        BenchConfig("misc_weighted", SolverConfig(weighting_mode="softmax", **solver)),
    ]
    assertions = [
        {"type": "range", "config": "source_only", "metric": "accuracy",
         "lo": 0.25, "hi": 0.55},
        {"type": "min_gap", "a": "misc_unweighted", "b": "source_only",
         "metric": "accuracy", "gap": 0.10},
        {"type": "accuracy_order",
         "configs": ["source_only", "misc_unweighted", "misc_weighted"]},
        {"type": "recall_dominates"},
    ]
    return ExperimentSpec(
        dataset={"synthetic": {"d": 256, "n": 50, "s": 6,
                               "separation": separation, "seed": seed}},
        configs=configs,
        test_count=test_count,
        assertions=assertions,
    )


@dataclass
class BenchReport:
    rows: list
    environment: dict
    dataset: dict
    assertion_results: list = field(default_factory=list)

    @property
    def failed_assertions(self):
        return [r for r in self.assertion_results if not r["passed"]]

    def to_dict(self):
        return {
            "rows": self.rows,
            "environment": self.environment,
            "dataset": self.dataset,
            "assertions": self.assertion_results,
        }

    def table(self):
        """Aligned text table of the per-configuration metrics."""
        headers = ["config", "accuracy", "top5", "mean_t[ms]", "median_t[ms]",
                   "iters", "fails"]
        lines = []
        for row in self.rows:
            lines.append([
                row["name"],
                f"{row['accuracy']:.4f}",
                f"{row['top5_recall']:.4f}",
                f"{row['mean_solve_time_s'] * 1e3:.2f}",
                f"{row['median_solve_time_s'] * 1e3:.2f}",
                f"{row['iterations_mean']:.1f}",
                str(row["failures"]),
            ])
        widths = [max(len(h), *(len(l[i]) for l in lines)) if lines else len(h)
                  for i, h in enumerate(headers)]
        fmt = "  ".join(f"{{:<{w}}}" for w in widths)
        out = [fmt.format(*headers), fmt.format(*("-" * w for w in widths))]
        out.extend(fmt.format(*l) for l in lines)
        return "\n".join(out)


def _environment():
    return {
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "backend": ACTIVE_BACKEND,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _load_dataset(spec):
    ds = spec.dataset
    if "synthetic" in ds:
        params = ds["synthetic"]
        return gen_synthetic(
            d=int(params["d"]), n=int(params["n"]), s=int(params["s"]),
            separation=float(params.get("separation", DEFAULT_SEPARATION)),
            seed=int(params.get("seed", DEFAULT_SEED)),
            test_count=spec.test_count,
        )
    if "manifest" in ds:
        params = ds["manifest"]
        dic = load_dictionary(params["dictionary"])
        if not dic.normalized:
            dic = normalize_atoms(dic)
        queries = read_matrix_file(params["queries"])
        if queries.shape[0] != dic.d:
            raise ValueError(
                f"queries have {queries.shape[0]} features, dictionary d={dic.d}"
            )
        with open(params["truth"]) as fh:
            truth = json.load(fh)
        labels = truth["class_ids"] if isinstance(truth, dict) else truth
        domains = truth.get("domain_ids") if isinstance(truth, dict) else None
        count = min(spec.test_count, queries.shape[1])
        samples = [
            TestSample(
                query=np.ascontiguousarray(queries[:, i]),
                class_id=int(labels[i]),
                domain_id=int(domains[i]) if domains is not None else -1,
            )
            for i in range(count)
        ]
        return dic, samples
    raise ValueError("dataset must declare either 'synthetic' or 'manifest'")


def run_experiment(spec):
    """Run every configuration over the dataset and assemble the report.

    Solves run strictly sequentially so the recorded wall times stay clean.
    Non-finite solver failures count as misclassifications rather than
    aborting the run.
    """
    kernels.warm_kernels()
    misc, samples = _load_dataset(spec)
    source = extract_domain(misc, 0) if misc.s > 1 else misc
    rows = []
    for cfg_row in spec.configs:
        dic = source if cfg_row.dictionary == "source" else misc
        cfg = cfg_row.solver
        cache = FactorCache(dic.data) if cfg.weighting_mode == "none" else None
        results, times, iters = [], [], []
        failures = 0
        for sample in samples:
            try:
                result, weighting = solve_query(dic, sample.query, cfg, cache=cache)
            except FloatingPointError:
                failures += 1
                results.append(None)
                continue
            times.append(result.wall_time)
            iters.append(result.iterations)
            results.append(classify(result.x, weighting, dic.n, dic.s,
                                    cfg.weighting_mode))
        truth = [s.class_id for s in samples]
        scored = [(r, t) for r, t in zip(results, truth) if r is not None]
        correct = sum(1 for r, t in scored if r.class_id == t)
        top5 = sum(1 for r, t in scored if t in r.ranking[:5])
        dom_pairs = [(r, s) for r, s in zip(results, samples)
                     if r is not None and r.class_id == s.class_id and s.domain_id >= 0]
        dom_match = (
            sum(1 for r, s in dom_pairs if r.inferred_domain == s.domain_id)
            / len(dom_pairs) if dom_pairs else None
        )
        accuracy = correct / len(samples)
        top5_recall = top5 / len(samples)
        if top5_recall < accuracy:
            raise AssertionError("top-5 recall fell below accuracy; ranking is broken")
        rows.append({
            "name": cfg_row.name,
            "dictionary": cfg_row.dictionary,
            "weighting": cfg.weighting_mode,
            "accuracy": accuracy,
            "top5_recall": top5_recall,
            "mean_solve_time_s": float(np.mean(times)) if times else float("nan"),
            "median_solve_time_s": float(np.median(times)) if times else float("nan"),
            "iterations_mean": float(np.mean(iters)) if iters else float("nan"),
            "failures": failures,
            "domain_match_rate": dom_match,
        })
    report = BenchReport(rows=rows, environment=_environment(), dataset=spec.dataset)
    report.assertion_results = [_check_assertion(a, rows) for a in spec.assertions]
    if spec.output_path:
        write_report(report, spec.output_path)
    return report


def _row_by_name(rows, name):
    for row in rows:
        if row["name"] == name:
            return row
    raise ValueError(f"assertion references unknown config {name!r}")


def _check_assertion(spec, rows):
    kind = spec.get("type")
    metric = spec.get("metric", "accuracy")
    try:
        if kind == "accuracy_order":
            names = spec["configs"]
            values = [_row_by_name(rows, n)[metric] for n in names]
            passed = all(values[i] <= values[i + 1] + 1e-12 for i in range(len(values) - 1))
            detail = " <= ".join(f"{n}:{v:.4f}" for n, v in zip(names, values))
        elif kind == "min_gap":
            a = _row_by_name(rows, spec["a"])[metric]
            b = _row_by_name(rows, spec["b"])[metric]
            passed = a - b >= spec["gap"] - 1e-12
            detail = f"{spec['a']}:{a:.4f} - {spec['b']}:{b:.4f} = {a - b:.4f} (need >= {spec['gap']})"
        elif kind == "range":
            v = _row_by_name(rows, spec["config"])[metric]
            passed = spec["lo"] - 1e-12 <= v <= spec["hi"] + 1e-12
            detail = f"{spec['config']}:{v:.4f} in [{spec['lo']}, {spec['hi']}]"
        elif kind == "recall_dominates":
            passed = all(r["top5_recall"] >= r["accuracy"] - 1e-12 for r in rows)
            detail = "top5_recall >= accuracy for every row"
        else:
            return {"assertion": spec, "passed": False, "detail": f"unknown type {kind!r}"}
    except (KeyError, ValueError) as exc:
        return {"assertion": spec, "passed": False, "detail": str(exc)}
    return {"assertion": spec, "passed": bool(passed), "detail": detail}


def write_report(report, output_path):
    """Write the report as ``<path>.json`` and ``<path>.txt``."""
    base = Path(output_path)
    base.parent.mkdir(parents=True, exist_ok=True)
    with open(base.with_suffix(".json"), "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    body = report.table()
    if report.assertion_results:
        marks = [
            f"[{'PASS' if r['passed'] else 'FAIL'}] {r['detail']}"
            for r in report.assertion_results
        ]
        body += "\n\n" + "\n".join(marks)
    base.with_suffix(".txt").write_text(body + "\n")


# --- runtime scaling -------------------------------------------------------

@dataclass
class SweepReport:
    rows: list
    environment: dict

    def table(self):
        header = f"{'s':>4} {'weighted[ms]':>14} {'unweighted[ms]':>16} {'w-ratio':>9} {'u-ratio':>9}"
        lines = [header, "-" * len(header)]
        base_w = self.rows[0]["median_weighted_s"]
        base_u = self.rows[0]["median_unweighted_s"]
        for row in self.rows:
            lines.append(
                f"{row['s']:>4} {row['median_weighted_s'] * 1e3:>14.3f} "
                f"{row['median_unweighted_s'] * 1e3:>16.3f} "
                f"{row['median_weighted_s'] / base_w:>9.2f} "
                f"{row['median_unweighted_s'] / base_u:>9.2f}"
            )
        return "\n".join(lines)

    def ratio(self, path, s_hi, s_lo):
        key = f"median_{path}_s"
        hi = next(r[key] for r in self.rows if r["s"] == s_hi)
        lo = next(r[key] for r in self.rows if r["s"] == s_lo)
        return hi / lo


def scaling_sweep(d=256, n=26, s_values=(1, 4, 16), repeats=20, seed=DEFAULT_SEED,
                  lam=DEFAULT_LAMBDA, separation=4.0):
    """Median per-query solve time of both paths as the domain count grows.

    Queries run strictly sequentially; each path gets one untimed warm-up
    query per ``s`` so JIT compilation and the shared unweighted factor
    cache do not contaminate the medians.
    """
    if not s_values:
        raise ValueError("s_values must be nonempty")
    if list(s_values) != sorted(set(s_values)):
        raise ValueError(f"s_values must be strictly increasing, got {s_values}")
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    kernels.warm_kernels()
    base = dict(lam=lam, tau0=0.1, tau_growth=1.05, tau_cap=1.0,
                max_iter=200, tol=1e-3)
    cfg_w = SolverConfig(weighting_mode="softmax", **base)
    cfg_u = SolverConfig(weighting_mode="none", **base)
    rows = []
    for s in s_values:
        misc, samples = gen_synthetic(d, n, s, separation, rng.fold(seed, s),
                                      test_count=repeats)
        cache = FactorCache(misc.data)
        solve_query(misc, samples[0].query, cfg_u, cache=cache)  # warm
        solve_query(misc, samples[0].query, cfg_w)
        t_w, t_u, it_w, it_u = [], [], [], []
        for sample in samples:
            res, _ = solve_query(misc, sample.query, cfg_u, cache=cache)
            t_u.append(res.wall_time)
            it_u.append(res.iterations)
        for sample in samples:
            res, _ = solve_query(misc, sample.query, cfg_w)
            t_w.append(res.wall_time)
            it_w.append(res.iterations)
        rows.append({
            "s": int(s),
            "median_weighted_s": statistics.median(t_w),
            "median_unweighted_s": statistics.median(t_u),
            "mean_weighted_s": statistics.fmean(t_w),
            "mean_unweighted_s": statistics.fmean(t_u),
            "iterations_weighted": statistics.fmean(it_w),
            "iterations_unweighted": statistics.fmean(it_u),
        })
    return SweepReport(rows=rows, environment=_environment())


def write_sweep_csv(report, path):
    lines = ["s,median_weighted_s,median_unweighted_s,mean_weighted_s,mean_unweighted_s"]
    for r in report.rows:
        lines.append(
            f"{r['s']},{r['median_weighted_s']:.9f},{r['median_unweighted_s']:.9f},"
            f"{r['mean_weighted_s']:.9f},{r['mean_unweighted_s']:.9f}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_sweep_svg(report, path, width=520, height=320):
    """Minimal two-series line chart of median solve time vs s."""
    pad = 48
    xs = [r["s"] for r in report.rows]
    series = {
        "weighted": [r["median_weighted_s"] for r in report.rows],
        "unweighted": [r["median_unweighted_s"] for r in report.rows],
    }
    tmax = max(max(v) for v in series.values()) or 1.0
    xmax = max(xs)

    def sx(x):
        return pad + (width - 2 * pad) * x / xmax

    def sy(t):
        return height - pad - (height - 2 * pad) * t / tmax

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width // 2}" y="{height - 12}" font-size="12">domains per class (s)</text>',
        f'<text x="8" y="{pad - 16}" font-size="12">median solve time: {tmax * 1e3:.2f} ms full scale</text>',
    ]
    for color, (name, vals) in zip(("#1f77b4", "#d62728"), series.items()):
        pts = " ".join(f"{sx(x):.1f},{sy(t):.1f}" for x, t in zip(xs, vals))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        parts.append(
            f'<text x="{sx(xs[-1]) - 70}" y="{sy(vals[-1]) - 6}" font-size="12" '
            f'fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


# --- backend comparison ----------------------------------------------------

def compare_backends(d=256, n=26, s=4, repeats=5, seed=7, lam=DEFAULT_LAMBDA):
    """Median solve times of the numba and numpy kernels on one instance.

    Returns a list of {path, backend, median_s} rows; the numba rows are
    omitted when numba is unavailable.
    """
    base = dict(lam=lam, tau0=0.1, tau_growth=1.05, tau_cap=1.0,
                max_iter=200, tol=1e-3)
    misc, samples = gen_synthetic(d, n, s, 4.0, seed, test_count=repeats)
    backends = {"numpy": kernels.admm_iterate_numpy}
    if NUMBA_AVAILABLE:
        backends["numba"] = kernels.admm_iterate_numba
        kernels.warm_kernels()
    rows = []
    active = kernels.admm_iterate
    try:
        for backend, impl in backends.items():
            kernels.admm_iterate = impl
            for mode in ("none", "softmax"):
                cfg = SolverConfig(weighting_mode=mode, **base)
                cache = FactorCache(misc.data) if mode == "none" else None
                solve_query(misc, samples[0].query, cfg, cache=cache)  # warm
                times = []
                for sample in samples:
                    res, _ = solve_query(misc, sample.query, cfg, cache=cache)
                    times.append(res.wall_time)
                rows.append({
                    "path": "unweighted" if mode == "none" else "weighted",
                    "backend": backend,
                    "median_s": statistics.median(times),
                })
    finally:
        kernels.admm_iterate = active
    return rows


def format_backend_rows(rows):
    lines = [f"{'path':<12} {'backend':<8} {'median[ms]':>12}"]
    for r in rows:
        lines.append(f"{r['path']:<12} {r['backend']:<8} {r['median_s'] * 1e3:>12.3f}")
    by_key = {(r["path"], r["backend"]): r["median_s"] for r in rows}
    for path in ("unweighted", "weighted"):
        if (path, "numba") in by_key and (path, "numpy") in by_key:
            speed = by_key[(path, "numpy")] / by_key[(path, "numba")]
            lines.append(f"{path}: numba speedup {speed:.1f}x")
    return "\n".join(lines)
