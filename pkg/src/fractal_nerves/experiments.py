"""
Monte Carlo trials over random grid systems.

Each trial draws its levels uniformly from the r-element deletions of I and
records, for k = 2..kmax, what the nerves N_{1,k} say about connectivity,
homology and cuts.
"""
import csv
import io
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import attr
import numpy as np

from .config import TrialConfig, merge_options
from .errors import BudgetExceededError, VerificationError
from .homology import (
    betti,
    cross_edge_basis,
    cross_edge_upper_bound,
    growth_upper_bound_check,
    inductive_lower_bound_check,
    triggered_lower_bound_check,
)
from .nerve import NerveTower, disconnection_certificate
from .system import (
    TAIL_FULL,
    TAIL_TRUNCATE,
    GridIFS,
    Tail,
    cell_of_digits,
    core_line_witness,
    corner_digit,
    detect_cut,
    isolated_corner_events,
    no_corner_check,
    sample_levels,
    trial_rng,
)
from .utils import fraction_to_json

logger = logging.getLogger(__name__)

# H_1 only needs the 2-skeleton.
EXPERIMENT_MAXDIM = 2

QUANTITY_BETTI1 = "betti1"
QUANTITY_RANK_DIFFERENCE = "rank-difference"

FIT_ZERO_RANK_EXCLUDED = "zero-rank-excluded"
FIT_UNDEFINED = "undefined"


@attr.s(frozen=True)
class TrialRow:
    k = attr.ib()
    connected = attr.ib()
    components = attr.ib()
    betti0 = attr.ib()
    betti1 = attr.ib()
    cross_edges = attr.ib()
    # Number of levels 1..k-1 with a cut, per axis.
    cuts = attr.ib(converter=tuple)
    certificate = attr.ib(converter=Fraction)
    # Widest axis projection of a component of N_{1,k}, per axis.
    widest_spans = attr.ib(converter=lambda spans: tuple(Fraction(s) for s in spans))
    # None where the bound does not apply to this row.
    bound_triggered = attr.ib(default=None)
    triggered_bound_holds = attr.ib(default=None)
    upper_bound_holds = attr.ib(default=None)

    def to_json(self):
        return {
            "k": self.k,
            "connected": self.connected,
            "components": self.components,
            "betti0": self.betti0,
            "betti1": self.betti1,
            "cross_edges": self.cross_edges,
            "cuts": list(self.cuts),
            "certificate": fraction_to_json(self.certificate),
            "widest_spans": [fraction_to_json(s) for s in self.widest_spans],
            "bound_triggered": self.bound_triggered,
            "triggered_bound_holds": self.triggered_bound_holds,
            "upper_bound_holds": self.upper_bound_holds,
        }

    @classmethod
    def from_json(cls, data):
        return cls(
            k=data["k"],
            connected=data["connected"],
            components=data["components"],
            betti0=data["betti0"],
            betti1=data["betti1"],
            cross_edges=data["cross_edges"],
            cuts=data["cuts"],
            certificate=Fraction(data["certificate"]),
            widest_spans=[Fraction(s) for s in data["widest_spans"]],
            bound_triggered=data.get("bound_triggered"),
            triggered_bound_holds=data.get("triggered_bound_holds"),
            upper_bound_holds=data.get("upper_bound_holds"),
        )


@attr.s(frozen=True)
class TrialRecord:
    trial = attr.ib()
    seed = attr.ib()
    r = attr.ib()
    system = attr.ib()
    rows = attr.ib(converter=tuple)
    truncated = attr.ib(default=False)
    no_corner = attr.ib(default=None)
    isolated_corners = attr.ib(default=0)
    core_lines = attr.ib(converter=tuple, default=())
    lower_bound_holds = attr.ib(default=None)

    @property
    def d(self):
        return len(self.system["n"])

    def row(self, k):
        for row in self.rows:
            if row.k == k:
                return row
        return None

    @property
    def bounds_hold(self):
        """
        False if any recorded bound fails; rows where a bound does not apply are skipped.
        """
        if self.lower_bound_holds is False:
            return False
        return all(row.triggered_bound_holds is not False and row.upper_bound_holds is not False for row in self.rows)

    def to_json(self):
        return {
            "trial": self.trial,
            "seed": self.seed,
            "r": self.r,
            "system": self.system,
            "rows": [row.to_json() for row in self.rows],
            "truncated": self.truncated,
            "no_corner": self.no_corner,
            "isolated_corners": self.isolated_corners,
            "core_lines": list(self.core_lines),
            "lower_bound_holds": self.lower_bound_holds,
        }

    @classmethod
    def from_json(cls, data):
        return cls(
            trial=data["trial"],
            seed=data["seed"],
            r=data["r"],
            system=data["system"],
            rows=[TrialRow.from_json(row) for row in data["rows"]],
            truncated=data["truncated"],
            no_corner=data["no_corner"],
            isolated_corners=data["isolated_corners"],
            core_lines=data["core_lines"],
            lower_bound_holds=data["lower_bound_holds"],
        )


def sample_system(config, rng):
    """
    Levels 1..kmax-1 drawn uniformly, followed by the configured tail.

    A periodic tail block keeps drawing levels until every corner digit is
    missing from some block level (or the block reaches `max_tail_block`).
    """
    head = list(sample_levels(config.d, config.n, config.r, config.kmax - 1, rng).levels)
    if config.tail == TAIL_FULL:
        return GridIFS(config.n, head, Tail.full())
    if config.tail == TAIL_TRUNCATE:
        return GridIFS(config.n, head, Tail.truncate())
    corners = {corner_digit(config.n, c) for c in itertools.product((0, 1), repeat=config.d)}
    block = []
    missing = set()
    while len(block) < config.max_tail_block and not corners <= missing:
        level = sample_levels(config.d, config.n, config.r, 1, rng).levels[0]
        block.append(level)
        missing |= corners - level
    if not corners <= missing:
        logger.warning("tail block capped at %d levels with corners %s never missing", len(block), corners - missing)
    return GridIFS(config.n, head + block, Tail.periodic(len(block)))


def _widest_spans(ifs, nerve, partition):
    k = nerve.k
    low = {}
    high = {}
    for v, label in enumerate(partition.labels):
        corner = cell_of_digits(ifs.n, nerve.vertices[v]).corner
        low[label] = tuple(map(min, low.get(label, corner), corner))
        high[label] = tuple(map(max, high.get(label, corner), corner))
    return [
        max(Fraction(high[c][axis] + 1 - low[c][axis], nk ** (k - 1)) for c in range(partition.count))
        for axis, nk in enumerate(ifs.n)
    ]


def _row_bounds(ifs, k, tower, no_corner, r, cross):
    """
    Triggered lower bound on rank H_1 - rank H_0 of N_{1,k}, and for one
    deletion per level in the plane the growth and cross-edge upper bounds.
    """
    if not no_corner or k < 3:
        return {}
    lower = triggered_lower_bound_check(ifs, k - 1, tower)
    bounds = {"bound_triggered": lower.triggered, "triggered_bound_holds": lower.holds}
    if r == 1 and ifs.d == 2:
        bounds["upper_bound_holds"] = (
            growth_upper_bound_check(ifs, 1, k, tower).holds and cross <= cross_edge_upper_bound(ifs, 1, k)
        )
    return bounds


def run_trial(config, trial_index):
    rng = trial_rng(config.seed, trial_index)
    ifs = sample_system(config, rng)
    tower = NerveTower(
        ifs,
        maxdim=min(EXPERIMENT_MAXDIM, 2**ifs.d - 1),
        verdict_mode=config.verdict_mode,
        cell_budget=config.cell_budget,
    )
    no_corner = no_corner_check(ifs) if ifs.d == 2 else None
    rows = []
    truncated = False
    for k in range(2, config.kmax + 1):
        try:
            nerve = tower.nerve(1, k)
        except BudgetExceededError as e:
            logger.warning("trial %d stopped at k=%d: %s", trial_index, k, e.message)
            truncated = True
            break
        # Nerves with 2-simplices go through SNF; graphs only when checking.
        report = betti(nerve, check=config.check_homology)
        partition = tower.components(1, k)
        if partition.count != report.betti[0]:
            raise VerificationError(
                f"trial {trial_index}, k={k}: {partition.count} components but rank H_0 = {report.betti[0]}"
            )
        cross = len(cross_edge_basis(ifs, 1, k, tower))
        schedule = [[detect_cut(ifs.require_level(t), ifs.n, axis) for axis in range(ifs.d)] for t in range(1, k)]
        rows.append(
            TrialRow(
                k=k,
                connected=partition.count == 1,
                components=partition.count,
                betti0=report.betti[0],
                betti1=report.betti[1] if len(report.betti) > 1 else 0,
                cross_edges=cross,
                cuts=[sum(1 for cuts in schedule if cuts[axis] is not None) for axis in range(ifs.d)],
                certificate=disconnection_certificate(ifs, k, tower),
                widest_spans=_widest_spans(ifs, nerve, partition),
                **_row_bounds(ifs, k, tower, no_corner, config.r, cross),
            )
        )

    lower_bound_holds = None
    if no_corner:
        lower_bound_holds = all(inductive_lower_bound_check(ifs, row.k, tower).holds for row in rows if row.k >= 3)

    logger.info("trial %d: %d rows%s", trial_index, len(rows), " (truncated)" if truncated else "")
    return TrialRecord(
        trial=trial_index,
        seed=config.seed,
        r=config.r,
        system=ifs.to_json(),
        rows=rows,
        truncated=truncated,
        no_corner=no_corner,
        isolated_corners=len(isolated_corner_events(ifs, config.kmax - 1)),
        core_lines=[core_line_witness(ifs, 1, axis) is not None for axis in range(ifs.d)],
        lower_bound_holds=lower_bound_holds,
    )


def run_trials(config):
    """
    All trials of `config`, in trial order whatever the pool size.
    """
    indices = range(config.trials)
    if config.threads == 1:
        return [run_trial(config, i) for i in indices]
    with ProcessPoolExecutor(max_workers=config.threads) as executor:
        return list(executor.map(run_trial, itertools.repeat(config), indices))


@attr.s(frozen=True)
class GrowthFit:
    quantity = attr.ib()
    window = attr.ib(converter=tuple)
    slope = attr.ib()
    stderr = attr.ib()
    points = attr.ib()
    excluded = attr.ib()
    flag = attr.ib(default=None)

    @property
    def defined(self):
        return self.slope is not None

    def to_json(self):
        return attr.asdict(self)


def _growth_value(row, quantity):
    if quantity == QUANTITY_BETTI1:
        return row.betti1
    return row.betti1 - row.betti0 + 1


def growth_rate_fit(records, k_window, quantity=None):
    """
    Least-squares slope of log(quantity) against k over the rows with k in
    `k_window` (inclusive), pooled across records.

    The quantity defaults to rank H_1 for one deletion per level and to
    rank H_1 - rank H_0 + 1 otherwise. Rows where it is zero are left out.
    """
    lo, hi = k_window
    if quantity is None:
        quantity = QUANTITY_BETTI1 if all(record.r == 1 for record in records) else QUANTITY_RANK_DIFFERENCE
    ks = []
    values = []
    excluded = 0
    for record in records:
        for row in record.rows:
            if not lo <= row.k <= hi:
                continue
            value = _growth_value(row, quantity)
            if value <= 0:
                excluded += 1
                continue
            ks.append(row.k)
            values.append(math.log(value))
    flag = FIT_ZERO_RANK_EXCLUDED if excluded else None
    if len(set(ks)) < 2 or len(ks) < 3:
        return GrowthFit(
            quantity=quantity,
            window=k_window,
            slope=None,
            stderr=None,
            points=len(ks),
            excluded=excluded,
            flag=FIT_UNDEFINED,
        )
    x = np.asarray(ks, dtype=float)
    y = np.asarray(values, dtype=float)
    design = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    residuals = y - (slope * x + intercept)
    variance = float(residuals @ residuals) / (len(x) - 2)
    stderr = math.sqrt(variance / float(((x - x.mean()) ** 2).sum()))
    return GrowthFit(
        quantity=quantity,
        window=k_window,
        slope=float(slope),
        stderr=stderr,
        points=len(ks),
        excluded=excluded,
        flag=flag,
    )


@attr.s(frozen=True)
class PhaseRow:
    r = attr.ib()
    trials = attr.ib()
    connected_fraction = attr.ib()
    all_axis_cut_fraction = attr.ib()
    mean_certificate = attr.ib()
    # Per axis: mean widest component projection at kmax, fraction with a core line.
    mean_widest_spans = attr.ib(converter=tuple)
    core_line_fractions = attr.ib(converter=tuple)


@attr.s(frozen=True)
class PhaseTable:
    d = attr.ib()
    n = attr.ib(converter=tuple)
    kmax = attr.ib()
    rows = attr.ib(converter=tuple)

    def row(self, r):
        return next(row for row in self.rows if row.r == r)

    def to_json(self):
        return {"d": self.d, "n": list(self.n), "kmax": self.kmax, "rows": [attr.asdict(row) for row in self.rows]}


def _phase_row(r, records):
    finals = [record.rows[-1] for record in records if record.rows]
    d = records[0].d
    count = len(finals)
    return PhaseRow(
        r=r,
        trials=len(records),
        connected_fraction=sum(row.connected for row in finals) / count,
        all_axis_cut_fraction=sum(all(c > 0 for c in row.cuts) for row in finals) / count,
        mean_certificate=float(sum(row.certificate for row in finals) / count),
        mean_widest_spans=[float(sum(row.widest_spans[axis] for row in finals) / count) for axis in range(d)],
        core_line_fractions=[sum(record.core_lines[axis] for record in records) / len(records) for axis in range(d)],
    )


def connectivity_phase_table(d, n, r_range, trials, kmax, seed, base=None, **overrides):
    """
    Run `trials` trials for every r in `r_range` and summarise connectivity at kmax.

    `base` is a TrialConfig to take the remaining options from.
    """
    rows = []
    for r in r_range:
        config = merge_options(
            TrialConfig, base, dict(overrides, d=d, n=tuple(n), r=r, trials=trials, kmax=kmax, seed=seed)
        )
        rows.append(_phase_row(r, run_trials(config)))
    return PhaseTable(d=d, n=n, kmax=kmax, rows=rows)


def csv_header(d):
    return ["trial", "k", "connected", "components", "betti1", "cross_edges"] + [
        f"cut_axis{axis + 1}" for axis in range(d)
    ] + ["certificate"]


def records_to_csv(records, d):
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(csv_header(d))
    for record in records:
        for row in record.rows:
            writer.writerow(
                [record.trial, row.k, int(row.connected), row.components, row.betti1, row.cross_edges]
                + list(row.cuts)
                + [fraction_to_json(row.certificate)]
            )
    return output.getvalue()


def summary(records, config=None):
    per_k = {}
    for record in records:
        for row in record.rows:
            per_k.setdefault(row.k, []).append(row)
    return {
        "config": config.to_json() if config is not None else None,
        "trials": len(records),
        "truncated": sum(record.truncated for record in records),
        "per_k": [
            {
                "k": k,
                "connected": fraction_to_json(Fraction(sum(row.connected for row in rows), len(rows))),
                "mean_components": fraction_to_json(Fraction(sum(row.components for row in rows), len(rows))),
                "mean_betti1": fraction_to_json(Fraction(sum(row.betti1 for row in rows), len(rows))),
            }
            for k, rows in sorted(per_k.items())
        ],
        "records": [record.to_json() for record in records],
    }


def emit(records, out_dir, config=None, d=None):
    """
    Write trials.csv and summary.json into `out_dir`, returning their paths.
    """
    if d is None:
        d = config.d if config is not None else (records[0].d if records else 2)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "trials.csv")
    json_path = os.path.join(out_dir, "summary.json")
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        f.write(records_to_csv(records, d))
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(summary(records, config), f, indent=2, sort_keys=True)
        f.write("\n")
    return csv_path, json_path


def load_summary(path):
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    return [TrialRecord.from_json(record) for record in data["records"]]
