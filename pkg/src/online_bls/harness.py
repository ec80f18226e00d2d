"""Prequential (test-then-train) experiments.

For every sample the harness maps the raw features once, asks the model for a
prediction, scores it against the revealed label and only then updates the
model. Only the ``update`` call is timed.

Per trial, a 64-bit trial seed is derived from ``(config.seed, trial_index)``;
the mapper weights and the stream order (or, for synthetic generators, the
generator seed) are both derived from it.
"""
import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .adaptive import AdaptiveOnlineBLS
from .baselines import BLSCIL, IBLS, RIBLS
from .datasets import StreamSpec, load_stream
from .errors import IncompatibleConfigs, PartialFailure
from .features import calibrate_shrink, new_mapper
from .linalg import warmup
from .metrics import ConfusionMatrix, RunningBACC, avrbacc
from .online import OnlineBLS

log = logging.getLogger(__name__)

MODELS = ("online-bls", "online-bls-ada", "ibls", "ribls", "blscil")
IBLS_DEFAULT_MAX_SAMPLES = 60_000
MAP_CHUNK = 1024
METRIC_KEYS = ("oca", "oce", "bacc", "avrbacc", "f1", "mcc")


@dataclass
class TrialConfig:
    model: str = "online-bls"
    stream: StreamSpec = None
    n1: int = 10
    n2: int = 10
    n3: int = 1000
    n4: int = 1
    lam: float = 1e-8
    shrink: float | str = "auto"    # "auto": calibrate on the trial's features
    shrink_target: float = 0.8
    mu: float = 0.99
    lambda1: float = 0.1
    lambda2: float = 0.1
    seed: int = 0
    trials: int = 1
    output_dir: str | None = None
    shuffle: bool | None = None     # None: shuffle CSV files, re-seed generators
    max_samples: int | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.stream is None:
            raise ValueError("a stream spec is required")
        if isinstance(self.stream, dict):
            self.stream = StreamSpec.from_dict(self.stream)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.model in ("online-bls", "online-bls-ada", "ibls", "ribls") and not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.shrink != "auto" and not float(self.shrink) > 0:
            raise ValueError("shrink must be 'auto' or a positive number")
        if self.model == "online-bls-ada" and not 0 < self.mu <= 1:
            raise ValueError("mu must lie in (0, 1]")

    @property
    def vary_stream(self):
        return self.shuffle if self.shuffle is not None else True

    def to_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["stream"] = self.stream.to_dict()
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def derive_seed(*parts):
    """Deterministic 64-bit seed from a tuple of nonnegative integers."""
    ss = np.random.SeedSequence([int(p) % 2**64 for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def trial_seeds(config, trial_index):
    trial_seed = derive_seed(config.seed, trial_index)
    return trial_seed, derive_seed(trial_seed, 1), derive_seed(trial_seed, 2)


def build_mapper(config, data, mapper_seed):
    if config.shrink == "auto":
        mapper = new_mapper(data.n_features, config.n1, config.n2, config.n3, config.n4,
                            mapper_seed)
        return calibrate_shrink(mapper, data.X, config.shrink_target)
    return new_mapper(data.n_features, config.n1, config.n2, config.n3, config.n4,
                      mapper_seed, shrink=float(config.shrink))


def make_model(config, m, c):
    if config.model == "online-bls":
        return OnlineBLS(m, c, config.lam)
    if config.model == "online-bls-ada":
        return AdaptiveOnlineBLS(m, c, config.lam, config.mu)
    if config.model == "ibls":
        return IBLS(m, c, config.lam)
    if config.model == "ribls":
        return RIBLS(m, c, config.lam)
    return BLSCIL(m, c, config.lambda1, config.lambda2)


def base_stream(config):
    """The stream before per-trial reordering and truncation."""
    return load_stream(replace(config.stream, shuffle_seed=None, limit=None))


def trial_stream(config, trial_index, base=None):
    spec = config.stream
    _, _, order_seed = trial_seeds(config, trial_index)
    if spec.source != "csv" and config.vary_stream:
        stream = load_stream(replace(spec, generator_seed=derive_seed(spec.generator_seed, order_seed),
                                     shuffle_seed=None, limit=None))
    else:
        stream = base if base is not None else base_stream(config)
        if config.vary_stream:
            stream = stream.shuffled(order_seed)
        elif spec.shuffle_seed is not None:
            stream = stream.shuffled(spec.shuffle_seed)
    if spec.limit is not None:
        stream = stream.take(np.arange(min(spec.limit, len(stream))))
    return stream


@dataclass
class StepLog:
    true_label: np.ndarray
    pred_label: np.ndarray
    update_micros: np.ndarray
    cumulative_oca: np.ndarray
    cumulative_bacc: np.ndarray

    COLUMNS = ("index", "true_label", "pred_label", "correct", "update_micros",
               "cumulative_oca", "cumulative_bacc")

    @property
    def correct(self):
        return self.true_label == self.pred_label

    @property
    def cumulative_oce(self):
        return 1.0 - self.cumulative_oca

    def __len__(self):
        return len(self.true_label)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for k in range(len(self)):
                w.writerow([k + 1, int(self.true_label[k]), int(self.pred_label[k]),
                            int(self.correct[k]), f"{self.update_micros[k]:.3f}",
                            repr(float(self.cumulative_oca[k])),
                            repr(float(self.cumulative_bacc[k]))])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        col = lambda name, t: np.array([t(r[name]) for r in rows])  # noqa: E731
        return cls(col("true_label", int), col("pred_label", int), col("update_micros", float),
                   col("cumulative_oca", float), col("cumulative_bacc", float))


@dataclass
class TrialSummary:
    trial: int
    seed: int
    n: int
    oca: float
    oce: float
    bacc: float
    avrbacc: float
    f1: float
    mcc: float
    update_mean_us: float
    update_sd_us: float
    runtime_s: float = 0.0


@dataclass
class TrialResult:
    summary: TrialSummary
    steps: StepLog
    model: object = field(default=None, repr=False)
    mapper: object = field(default=None, repr=False)


def summarize(steps, n_classes, trial=0, seed=0, runtime_s=0.0):
    cm = ConfusionMatrix.from_labels(steps.true_label, steps.pred_label, n_classes)
    t = np.asarray(steps.update_micros, dtype=float)
    return TrialSummary(trial=trial, seed=seed, n=len(steps), oca=cm.oca(), oce=cm.oce(),
                        bacc=cm.bacc(), avrbacc=avrbacc(steps.cumulative_bacc),
                        f1=cm.macro_f1(), mcc=cm.mcc(), update_mean_us=float(t.mean()),
                        update_sd_us=float(t.std()), runtime_s=runtime_s)


def prequential(model, mapper, stream):
    """Test-then-train pass over ``stream``; returns the step log."""
    n, c = len(stream), stream.n_classes
    targets = np.eye(c)
    pred = np.empty(n, dtype=np.int64)
    micros = np.empty(n)
    oca = np.empty(n)
    bacc = np.empty(n)
    running = RunningBACC(c)
    hits = 0
    warmup()
    for start in range(0, n, MAP_CHUNK):
        A = mapper.map_batch(stream.X[start:start + MAP_CHUNK])
        for j, a in enumerate(A):
            k = start + j
            label = int(stream.y[k])
            p = int(np.argmax(model.predict(a)))
            pred[k] = p
            hits += p == label
            oca[k] = hits / (k + 1)
            bacc[k] = running.record(label, p == label)
            t0 = time.perf_counter_ns()
            model.update(a, targets[label])
            micros[k] = (time.perf_counter_ns() - t0) / 1e3
    return StepLog(stream.y.copy(), pred, micros, oca, bacc)


def run_trial(config, trial_index, stream=None, keep_model=False):
    """One seeded prequential run. ``stream`` optionally supplies the base stream."""
    start = time.perf_counter()
    trial_seed, mapper_seed, _ = trial_seeds(config, trial_index)
    data = trial_stream(config, trial_index, stream)
    limit = config.max_samples
    if limit is None and config.model == "ibls":
        limit = IBLS_DEFAULT_MAX_SAMPLES
    if limit is not None and len(data) > limit:
        raise ValueError(f"stream has {len(data)} samples, above the max_samples guard of {limit}")
    mapper = build_mapper(config, data, mapper_seed)
    model = make_model(config, mapper.m, data.n_classes)
    steps = prequential(model, mapper, data)
    summary = summarize(steps, data.n_classes, trial_index, trial_seed,
                        time.perf_counter() - start)
    log.info("trial %d: OCA %.4f, mean update %.1f us", trial_index, summary.oca,
             summary.update_mean_us)
    result = TrialResult(summary, steps)
    if keep_model:
        result.model = model
        result.mapper = mapper
    return result


def _run_trial_job(args):
    config, index = args
    try:
        return index, run_trial(config, index), None
    except Exception as exc:  # reported as PartialFailure by the caller
        return index, None, exc


def aggregate(summaries, step_logs, n_classes, config=None):
    """Mean/SD across trials plus the convergence curve of the cumulative error."""
    agg = {}
    for key in METRIC_KEYS + ("update_mean_us", "update_sd_us", "runtime_s"):
        vals = np.array([getattr(s, key) for s in summaries], dtype=float)
        agg[key] = {"mean": float(vals.mean()), "sd": float(vals.std())}
    # update-time spread over all updates of all trials
    all_t = np.concatenate([np.asarray(s.update_micros) for s in step_logs])
    agg["update_time_us"] = {"mean": float(all_t.mean()), "sd": float(all_t.std())}
    lengths = {len(s) for s in step_logs}
    convergence = None
    if len(lengths) == 1:
        oce = np.vstack([s.cumulative_oce for s in step_logs])
        convergence = {"mean_oce": oce.mean(axis=0), "sd_oce": oce.std(axis=0)}
    report = {
        "config": config.to_dict() if config is not None else None,
        "n_classes": int(n_classes),
        "trials": [asdict(s) for s in summaries],
        "aggregate": agg,
    }
    return report, convergence


def write_report(out_dir, report, convergence, step_logs):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for summary, steps in zip(report["trials"], step_logs):
        steps.to_csv(out / f"trial_{summary['trial']}_steps.csv")
    with open(out / "summary.json", "w") as fh:
        json.dump(report, fh, indent=2)
    if convergence is not None:
        with open(out / "convergence.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "mean_oce", "sd_oce"])
            for k, (m, s) in enumerate(zip(convergence["mean_oce"], convergence["sd_oce"])):
                w.writerow([k + 1, repr(float(m)), repr(float(s))])


def run_experiment(config, stream=None):
    """Run every trial, aggregate, and write outputs when ``output_dir`` is set.

    Returns ``(report, convergence, results)``. Raises :class:`PartialFailure`
    (after writing what succeeded) if any trial failed.
    """
    if stream is None and (config.stream.source == "csv" or not config.vary_stream):
        stream = base_stream(config)
    jobs = [(config, i) for i in range(config.trials)]
    if config.jobs > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_run_trial_job, jobs))
    else:
        outcomes = []
        for cfg, i in jobs:
            try:
                outcomes.append((i, run_trial(cfg, i, stream), None))
            except Exception as exc:
                outcomes.append((i, None, exc))
    failed = {i: exc for i, _, exc in outcomes if exc is not None}
    results = [res for _, res, exc in outcomes if exc is None]
    if not results:
        raise PartialFailure(failed)
    n_classes = stream.n_classes if stream is not None else \
        trial_stream(config, 0).n_classes
    report, convergence = aggregate([r.summary for r in results], [r.steps for r in results],
                                    n_classes, config)
    report["failed_trials"] = {str(i): repr(e) for i, e in failed.items()}
    if config.output_dir:
        write_report(config.output_dir, report, convergence, [r.steps for r in results])
    if failed:
        raise PartialFailure(failed)
    return report, convergence, results


def load_report_dir(out_dir):
    """Re-aggregate the per-trial step logs found in ``out_dir`` and rewrite the outputs."""
    out = Path(out_dir)
    files = sorted(out.glob("trial_*_steps.csv"), key=lambda p: int(p.stem.split("_")[1]))
    if not files:
        raise FileNotFoundError(f"no trial_*_steps.csv files in {out}")
    previous = {}
    if (out / "summary.json").exists():
        with open(out / "summary.json") as fh:
            previous = json.load(fh)
    logs = [StepLog.from_csv(p) for p in files]
    n_classes = previous.get("n_classes") or int(
        max(max(s.true_label.max(), s.pred_label.max()) for s in logs) + 1)
    seeds = {t["trial"]: t["seed"] for t in previous.get("trials", [])}
    runtimes = {t["trial"]: t.get("runtime_s", 0.0) for t in previous.get("trials", [])}
    summaries = []
    for p, steps in zip(files, logs):
        i = int(p.stem.split("_")[1])
        summaries.append(summarize(steps, n_classes, i, seeds.get(i, 0), runtimes.get(i, 0.0)))
    report, convergence = aggregate(summaries, logs, n_classes)
    report["config"] = previous.get("config")
    write_report(out, report, convergence, logs)
    return report


def weight_gap(W1, W2):
    return float(np.linalg.norm(W1 - W2) / max(np.linalg.norm(W2), 1e-300))


def compare_models(configs, stream=None):
    """Run each config on a shared stream; one row per model, best values flagged.

    Rows carry ``weight_gap_vs_first``: the relative Frobenius distance between
    the trial-0 weights of that model and of the first model.
    """
    configs = list(configs)
    if not configs:
        raise IncompatibleConfigs("no configurations to compare")
    ref = configs[0]
    for cfg in configs[1:]:
        if (cfg.stream != ref.stream or cfg.seed != ref.seed or cfg.trials != ref.trials
                or cfg.vary_stream != ref.vary_stream):
            raise IncompatibleConfigs("configs must share stream, seed, trial count and ordering")
    if stream is None and (ref.stream.source == "csv" or not ref.vary_stream):
        stream = base_stream(ref)
    rows = []
    first_W = None
    for cfg in configs:
        results = [run_trial(cfg, i, stream, keep_model=(i == 0)) for i in range(cfg.trials)]
        summaries = [r.summary for r in results]
        row = {"model": cfg.model}
        for key in METRIC_KEYS + ("update_mean_us",):
            vals = np.array([getattr(s, key) for s in summaries])
            row[key] = float(vals.mean())
            row[key + "_sd"] = float(vals.std())
        W = results[0].model.W
        if first_W is None:
            first_W = W
            row["weight_gap_vs_first"] = 0.0
        elif W.shape == first_W.shape:
            row["weight_gap_vs_first"] = weight_gap(W, first_W)
        else:
            row["weight_gap_vs_first"] = None
        rows.append(row)
    best = {}
    for key in METRIC_KEYS + ("update_mean_us",):
        vals = [r[key] for r in rows]
        lower_is_better = key in ("oce", "update_mean_us")
        best[key] = rows[int(np.argmin(vals) if lower_is_better else np.argmax(vals))]["model"]
    for r in rows:
        r["best"] = [k for k, m in best.items() if m == r["model"]]
    return rows


def format_table(rows):
    keys = ("oca", "bacc", "avrbacc", "f1", "mcc")
    head = f"{'model':<16}" + "".join(f"{k:>10}" for k in keys) + f"{'update_us':>12}{'W gap':>11}"
    lines = [head]
    for r in rows:
        cells = "".join(
            f"{100 * r[k]:>9.2f}{'*' if k in r['best'] else ' '}" for k in keys)
        gap = r["weight_gap_vs_first"]
        gap = f"{gap:>11.2e}" if gap is not None else f"{'-':>11}"
        lines.append(f"{r['model']:<16}{cells}{r['update_mean_us']:>12.1f}{gap}")
    return "\n".join(lines)
