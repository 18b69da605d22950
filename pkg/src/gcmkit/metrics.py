"""Skill metrics over pooled model/reference sample pairs.

Each metric takes a `PooledSample` (paired, fill-free, finite series) and
returns a float. Degenerate samples (constant series, zero means) raise
`DegenerateSampleError` from the bare functions; `compute_report` catches
those per metric and marks the slot invalid instead, because a silent NaN
or a fake zero would poison the downstream ranking.

Standard deviations use the population (1/n) convention throughout, so
the variability ratio inside KGE and the plain deviation difference stay
consistent with each other.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ValidationError
from .geogrid import DataCube, SeasonSelector, ZoneMask, LAND_ZONES, select_season

# Pseudo-zone meaning "union of all land zones".
ZONE_OVERALL = "overall"

METRIC_NAMES = (
    "bias",
    "rmse",
    "r",
    "r2",
    "nse",
    "kge",
    "pdf_overlap",
    "txx_err",
    "tnn_err",
    "sd_diff",
)


class DegenerateSampleError(ValidationError):
    """The sample cannot support this metric (constant series, zero mean)."""


@dataclass(frozen=True, eq=False)
class PooledSample:
    """Paired model/reference values pooled over one (zone, season) context."""

    model: np.ndarray
    obs: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.model, dtype=np.float64).ravel()
        o = np.asarray(self.obs, dtype=np.float64).ravel()
        if m.size != o.size:
            raise ValidationError(f"paired series differ in length: {m.size} vs {o.size}")
        if m.size < 2:
            raise ValidationError("pooled sample needs at least 2 pairs")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(o))):
            raise ValidationError("pooled sample contains non-finite values")
        m.setflags(write=False)
        o.setflags(write=False)
        object.__setattr__(self, "model", m)
        object.__setattr__(self, "obs", o)

    @property
    def n(self) -> int:
        return self.model.size


def bias(s: PooledSample) -> float:
    """Mean model value minus mean reference value (systematic error)."""
    return float(np.mean(s.model) - np.mean(s.obs))


def rmse(s: PooledSample) -> float:
    """Root mean square of the paired differences."""
    return float(np.sqrt(np.mean((s.model - s.obs) ** 2)))


def pearson_r(s: PooledSample) -> float:
    """Product-moment correlation; requires variance in both series."""
    dm = s.model - np.mean(s.model)
    do = s.obs - np.mean(s.obs)
    den = np.sqrt(np.sum(dm * dm) * np.sum(do * do))
    if den == 0.0:
        raise DegenerateSampleError("correlation undefined: a series is constant")
    return float(np.sum(dm * do) / den)


def nse(s: PooledSample) -> float:
    """Nash-Sutcliffe efficiency: 1 is perfect, 0 matches the mean baseline."""
    num = np.sum((s.obs - s.model) ** 2)
    den = np.sum((s.obs - np.mean(s.obs)) ** 2)
    if den == 0.0:
        raise DegenerateSampleError("NSE undefined: reference series is constant")
    return float(1.0 - num / den)


def kge(s: PooledSample) -> float:
    """Kling-Gupta efficiency with the coefficient-of-variation variability ratio.

    beta = mean(M)/mean(O), gamma = (sd(M)/mean(M)) / (sd(O)/mean(O)),
    kge = 1 - sqrt((r-1)^2 + (beta-1)^2 + (gamma-1)^2).
    """
    mu_m = float(np.mean(s.model))
    mu_o = float(np.mean(s.obs))
    if mu_o == 0.0 or mu_m == 0.0:
        raise DegenerateSampleError("KGE undefined: zero mean")
    sd_m = float(np.std(s.model))
    sd_o = float(np.std(s.obs))
    if sd_o == 0.0 or sd_m == 0.0:
        raise DegenerateSampleError("KGE undefined: constant series")
    r = pearson_r(s)
    beta = mu_m / mu_o
    gamma = (sd_m / mu_m) / (sd_o / mu_o)
    return float(1.0 - math.sqrt((r - 1.0) ** 2 + (beta - 1.0) ** 2 + (gamma - 1.0) ** 2))


def pdf_overlap(s: PooledSample, bins: int = 100) -> float:
    """Overlap of the two empirical distributions, in [0, 1].

    Both series are histogrammed on `bins` shared equal-width bins spanning
    the union range; the overlap is the sum of per-bin minima of the two
    count fractions. Identical-constant samples overlap perfectly.
    """
    if bins < 2:
        raise ValidationError("pdf_overlap needs at least 2 bins")
    lo = min(float(np.min(s.model)), float(np.min(s.obs)))
    hi = max(float(np.max(s.model)), float(np.max(s.obs)))
    if lo == hi:
        return 1.0
    pm, _ = np.histogram(s.model, bins=bins, range=(lo, hi))
    po, _ = np.histogram(s.obs, bins=bins, range=(lo, hi))
    return float(np.sum(np.minimum(pm / s.n, po / s.n)))


def extreme_errors(s: PooledSample) -> Tuple[float, float]:
    """Absolute errors of the sample extremes.

    Returns (high-extreme error, low-extreme error): |max(M) - max(O)| and
    |min(M) - min(O)|. The raw extreme indices become absolute errors so
    the ranking can treat them as cost criteria.
    """
    txx_err = abs(float(np.max(s.model)) - float(np.max(s.obs)))
    tnn_err = abs(float(np.min(s.model)) - float(np.min(s.obs)))
    return txx_err, tnn_err


def sd_diff(s: PooledSample) -> float:
    """Absolute difference of the population standard deviations."""
    return abs(float(np.std(s.model)) - float(np.std(s.obs)))


@dataclass
class MetricReport:
    """All metrics for one (model, zone, season) context.

    Metrics that could not be computed hold None and carry flags[name] ==
    False; everything else is a finite float. `n` is the pooled pair count.
    """

    bias: float
    rmse: float
    r: Optional[float]
    r2: Optional[float]
    nse: Optional[float]
    kge: Optional[float]
    pdf_overlap: float
    txx_err: float
    tnn_err: float
    sd_diff: float
    n: int
    flags: Dict[str, bool] = field(default_factory=dict)

    def value(self, name: str) -> Optional[float]:
        if name not in METRIC_NAMES:
            raise ValidationError(f"unknown metric {name!r}")
        return getattr(self, name)

    def valid(self, name: str) -> bool:
        return self.flags.get(name, True)

    def as_dict(self) -> dict:
        out = {name: self.value(name) for name in METRIC_NAMES}
        out["n"] = self.n
        out["flags"] = dict(self.flags)
        return out


def compute_report(s: PooledSample, bins: int = 100) -> MetricReport:
    """Run every metric on one pooled sample, flagging degenerate slots."""
    flags = {name: True for name in METRIC_NAMES}
    values: Dict[str, Optional[float]] = {}

    values["bias"] = bias(s)
    values["rmse"] = rmse(s)
    try:
        r = pearson_r(s)
        values["r"] = r
        values["r2"] = r * r
    except DegenerateSampleError:
        values["r"] = None
        values["r2"] = None
        flags["r"] = False
        flags["r2"] = False
    try:
        values["nse"] = nse(s)
    except DegenerateSampleError:
        values["nse"] = None
        flags["nse"] = False
    try:
        values["kge"] = kge(s)
    except DegenerateSampleError:
        values["kge"] = None
        flags["kge"] = False
    values["pdf_overlap"] = pdf_overlap(s, bins=bins)
    values["txx_err"], values["tnn_err"] = extreme_errors(s)
    values["sd_diff"] = sd_diff(s)

    return MetricReport(n=s.n, flags=flags, **values)


def _zone_cells(mask: ZoneMask, zone) -> np.ndarray:
    if zone == ZONE_OVERALL:
        return mask.cells_in(LAND_ZONES)
    if zone not in LAND_ZONES:
        raise ValidationError(f"zone must be one of {LAND_ZONES} or {ZONE_OVERALL!r}, got {zone!r}")
    return mask.cells_in({zone})


def pool(
    model: DataCube,
    obs: DataCube,
    mask: ZoneMask,
    zone,
    season: SeasonSelector,
) -> PooledSample:
    """Pool all paired non-fill values inside zone and season into one sample.

    The cubes must share axes with each other and with the mask; pairs where
    either side is fill are excluded.
    """
    if model.shape != obs.shape:
        raise ValidationError(f"cube shapes differ: {model.shape} vs {obs.shape}")
    if not (np.array_equal(model.lat.values, obs.lat.values) and np.array_equal(model.lon.values, obs.lon.values)):
        raise ValidationError("model and reference cubes are on different grids")
    if model.time != obs.time:
        raise ValidationError("model and reference cubes cover different times")
    m_season = select_season(model, season)
    o_season = select_season(obs, season)
    cells = _zone_cells(mask, zone)
    if not (np.array_equal(model.lat.values, mask.lat.values) and np.array_equal(model.lon.values, mask.lon.values)):
        raise ValidationError("mask grid does not match the cubes")
    m = m_season.data[:, cells]
    o = o_season.data[:, cells]
    keep = (m != model.fill) & (o != obs.fill)
    m, o = m[keep], o[keep]
    if m.size < 2:
        raise ValidationError(f"empty pooled sample for zone={zone!r} season={season.id}")
    return PooledSample(m, o)


def full_report(
    model: DataCube,
    obs: DataCube,
    mask: ZoneMask,
    zone,
    season: SeasonSelector,
    bins: int = 100,
) -> MetricReport:
    """Pool one context and run the whole metric suite on it."""
    return compute_report(pool(model, obs, mask, zone, season), bins=bins)


class StreamingPool:
    """Two-pass bounded-memory replacement for `pool` + `compute_report`.

    Pass 1 (`update`) accumulates shifted moments, extremes and the count;
    pass 2 (`update_hist`) fills shared-range histograms once `freeze` has
    fixed the bin edges. Moments are accumulated around the first value
    seen, which keeps the centered statistics well-conditioned for large
    pooled counts.
    """

    def __init__(self, bins: int = 100):
        if bins < 2:
            raise ValidationError("pdf_overlap needs at least 2 bins")
        self.bins = bins
        self.n = 0
        self._pivot_m = 0.0
        self._pivot_o = 0.0
        self._sm = self._so = 0.0
        self._smm = self._soo = self._smo = 0.0
        self._sdd = 0.0
        self._min_m = math.inf
        self._max_m = -math.inf
        self._min_o = math.inf
        self._max_o = -math.inf
        self._hist_m = None
        self._hist_o = None
        self._range = None

    def update(self, m: np.ndarray, o: np.ndarray) -> None:
        m = np.asarray(m, dtype=np.float64).ravel()
        o = np.asarray(o, dtype=np.float64).ravel()
        if m.size != o.size:
            raise ValidationError("paired chunks differ in length")
        if m.size == 0:
            return
        if self.n == 0:
            self._pivot_m = float(m[0])
            self._pivot_o = float(o[0])
        dm = m - self._pivot_m
        do = o - self._pivot_o
        self.n += m.size
        self._sm += float(np.sum(dm))
        self._so += float(np.sum(do))
        self._smm += float(np.sum(dm * dm))
        self._soo += float(np.sum(do * do))
        self._smo += float(np.sum(dm * do))
        self._sdd += float(np.sum((m - o) ** 2))
        self._min_m = min(self._min_m, float(np.min(m)))
        self._max_m = max(self._max_m, float(np.max(m)))
        self._min_o = min(self._min_o, float(np.min(o)))
        self._max_o = max(self._max_o, float(np.max(o)))

    def freeze(self) -> None:
        """Fix histogram edges from pass-1 extremes; call before update_hist."""
        if self.n < 2:
            raise ValidationError("empty pooled sample")
        lo = min(self._min_m, self._min_o)
        hi = max(self._max_m, self._max_o)
        self._range = (lo, hi)
        self._hist_m = np.zeros(self.bins, dtype=np.int64)
        self._hist_o = np.zeros(self.bins, dtype=np.int64)

    def update_hist(self, m: np.ndarray, o: np.ndarray) -> None:
        if self._range is None:
            raise ValidationError("freeze() must run before the histogram pass")
        lo, hi = self._range
        if lo == hi:
            return
        self._hist_m += np.histogram(np.asarray(m, dtype=np.float64).ravel(), bins=self.bins, range=self._range)[0]
        self._hist_o += np.histogram(np.asarray(o, dtype=np.float64).ravel(), bins=self.bins, range=self._range)[0]

    def report(self) -> MetricReport:
        if self._range is None:
            raise ValidationError("freeze() and the histogram pass must run before report()")
        n = self.n
        mu_m = self._pivot_m + self._sm / n
        mu_o = self._pivot_o + self._so / n
        var_m = max(self._smm / n - (self._sm / n) ** 2, 0.0)
        var_o = max(self._soo / n - (self._so / n) ** 2, 0.0)
        cov = self._smo / n - (self._sm / n) * (self._so / n)
        sd_m, sd_o = math.sqrt(var_m), math.sqrt(var_o)

        flags = {name: True for name in METRIC_NAMES}
        values: Dict[str, Optional[float]] = {
            "bias": mu_m - mu_o,
            "rmse": math.sqrt(self._sdd / n),
            "txx_err": abs(self._max_m - self._max_o),
            "tnn_err": abs(self._min_m - self._min_o),
            "sd_diff": abs(sd_m - sd_o),
        }
        if sd_m == 0.0 or sd_o == 0.0:
            values["r"] = values["r2"] = None
            flags["r"] = flags["r2"] = False
        else:
            r = cov / (sd_m * sd_o)
            values["r"] = r
            values["r2"] = r * r
        if sd_o == 0.0:
            values["nse"] = None
            flags["nse"] = False
        else:
            values["nse"] = 1.0 - (self._sdd / n) / var_o
        if mu_o == 0.0 or mu_m == 0.0 or sd_o == 0.0 or sd_m == 0.0:
            values["kge"] = None
            flags["kge"] = False
        else:
            beta = mu_m / mu_o
            gamma = (sd_m / mu_m) / (sd_o / mu_o)
            values["kge"] = 1.0 - math.sqrt((values["r"] - 1.0) ** 2 + (beta - 1.0) ** 2 + (gamma - 1.0) ** 2)
        lo, hi = self._range
        if lo == hi:
            values["pdf_overlap"] = 1.0
        else:
            values["pdf_overlap"] = float(np.sum(np.minimum(self._hist_m / n, self._hist_o / n)))
        return MetricReport(n=n, flags=flags, **values)


def report_rows_to_csv(rows: List[dict], path: str) -> None:
    """Write report dict rows (label columns + metric columns) as CSV."""
    if not rows:
        raise ValidationError("no report rows to write")
    label_keys = [k for k in rows[0] if k not in METRIC_NAMES and k != "n" and k != "flags"]
    header = label_keys + list(METRIC_NAMES) + ["n"] + [f"{m}_valid" for m in METRIC_NAMES]
    lines = [",".join(header)]
    for row in rows:
        flags = row.get("flags", {})
        cells = [str(row[k]) for k in label_keys]
        for m in METRIC_NAMES:
            v = row.get(m)
            cells.append("" if v is None else repr(float(v)))
        cells.append(str(row["n"]))
        cells.extend(str(bool(flags.get(m, True))) for m in METRIC_NAMES)
        lines.append(",".join(cells))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def report_rows_to_json(rows: List[dict], path: str) -> None:
    with open(path, "w") as fh:
        json.dump(rows, fh, sort_keys=True, indent=1)
        fh.write("\n")
