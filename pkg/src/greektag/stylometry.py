"""Two-class chi-square deviation test over word-category counts.

Each category of each text is tested against the pooled distribution of
the whole group: the two classes are "word belongs to the category" and
"word does not", with expected counts ``N*p`` and ``N*(1-p)``.  A text's
deviation count is the number of categories whose chi-square value
meets the significance cutoff; the group's mean and (population)
standard deviation of those counts standardize them into one score per
text, and a score of at least 2 flags the text as deviating from the
group.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, GreektagError

#: Chi-square cutoff for one category: 1 degree of freedom at p = 0.05.
DEFAULT_THRESHOLD = 3.841

#: Standardized deviation score at or above which a text is flagged.
FLAG_LEVEL = 2.0

DEFAULT_EXCLUDED = ("punct",)


@dataclass(frozen=True)
class CategoryCounts:
    text_id: str
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class DeviationReport:
    texts: tuple[str, ...]
    categories: tuple[str, ...]
    chi2: np.ndarray  # texts x categories
    pooled_probs: dict[str, float]
    alpha: tuple[int, ...]
    mu: float
    sigma: float
    rho: tuple[float, ...] | None  # None when sigma == 0
    chi2_threshold: float
    flagged: tuple[str, ...]
    dropped_categories: tuple[str, ...] = ()

    @property
    def degenerate(self) -> bool:
        return self.rho is None


def count_categories(tagged, text_id: str,
                     exclude=DEFAULT_EXCLUDED) -> CategoryCounts:
    """Histogram of tag categories over (token, tag) pairs."""
    excluded = set(exclude)
    counts = Counter()
    for _, tag in tagged:
        if tag.category not in excluded:
            counts[tag.category] += 1
    return CategoryCounts(text_id, dict(sorted(counts.items())))


def chi_square_cell(m: int, n: int, p: float) -> float:
    """Two-class chi-square for one category of one text.

    ``m`` words belong to the category out of ``n`` total; ``p`` is the
    pooled probability of the category, so the expected counts are
    ``n*p`` and ``n*(1-p)``.
    """
    if n <= 0:
        raise GreektagError("text has no counted words")
    if not 0.0 < p < 1.0:
        raise GreektagError(f"pooled probability {p} outside (0, 1)")
    e1 = n * p
    e2 = n * (1.0 - p)
    o1 = float(m)
    o2 = float(n - m)
    return (o1 - e1) ** 2 / e1 + (o2 - e2) ** 2 / e2


def run_test(group, threshold: float = DEFAULT_THRESHOLD,
             exclude_self: bool = False) -> DeviationReport:
    """Chi-square deviation test of every text against the group.

    The pooled distribution includes the text under test unless
    ``exclude_self``.  Categories whose pooled probability degenerates
    to 0 or 1 are dropped and reported.  With three or more texts the
    deviation counts standardize against the group mean and population
    standard deviation; if every text deviates equally the report is
    degenerate and nothing is flagged.
    """
    if len(group) < 3:
        raise GreektagError(f"need at least 3 texts, got {len(group)}")
    texts = tuple(c.text_id for c in group)
    if len(set(texts)) != len(texts):
        raise GreektagError("duplicate text ids in group")
    totals = np.array([c.total for c in group], dtype=np.int64)
    if (totals <= 0).any():
        empty = texts[int(np.argmin(totals))]
        raise GreektagError(f"text {empty!r} has no counted words")

    categories = tuple(sorted({cat for c in group for cat in c.counts}))
    counts = np.array(
        [[c.counts.get(cat, 0) for cat in categories] for c in group],
        dtype=np.int64,
    )
    grand = counts.sum(axis=0)
    grand_total = int(totals.sum())

    kept = []
    dropped = []
    for j, cat in enumerate(categories):
        degenerate_pool = grand[j] in (0, grand_total)
        if exclude_self:
            rest = grand[j] - counts[:, j]
            rest_total = grand_total - totals
            degenerate_pool = degenerate_pool or any(
                r in (0, rt) for r, rt in zip(rest, rest_total)
            )
        (dropped if degenerate_pool else kept).append(j)
    if not kept:
        raise GreektagError("no category has a usable pooled probability")
    dropped_names = tuple(categories[j] for j in dropped)
    categories = tuple(categories[j] for j in kept)
    counts = counts[:, kept]
    grand = grand[kept]

    n_texts = len(group)
    chi2 = np.zeros((n_texts, len(categories)))
    pooled = {}
    for j, cat in enumerate(categories):
        for i in range(n_texts):
            if exclude_self:
                p = (grand[j] - counts[i, j]) / (grand_total - totals[i])
            else:
                p = grand[j] / grand_total
            chi2[i, j] = chi_square_cell(int(counts[i, j]), int(totals[i]), p)
        pooled[cat] = grand[j] / grand_total

    alpha = tuple(int((chi2[i] >= threshold).sum()) for i in range(n_texts))
    mu = float(np.mean(alpha))
    sigma = float(np.sqrt(np.mean((np.array(alpha, dtype=float) - mu) ** 2)))
    if sigma == 0.0:
        rho = None
        flagged = ()
    else:
        rho = tuple((a - mu) / sigma for a in alpha)
        flagged = tuple(t for t, r in zip(texts, rho) if r >= FLAG_LEVEL)
    return DeviationReport(texts, categories, chi2, pooled, alpha, mu, sigma,
                           rho, threshold, flagged, dropped_names)


# -- rendering ---------------------------------------------------------------


def render_table(report: DeviationReport) -> str:
    """Aligned plain-text table: categories as rows, texts as columns,
    chi-square cells, and a final row with the standardized scores."""
    headers = ["category"] + list(report.texts)
    rows = []
    for j, cat in enumerate(report.categories):
        rows.append([cat] + [f"{report.chi2[i, j]:.4g}" for i in range(len(report.texts))])
    rows.append(["alpha"] + [str(a) for a in report.alpha])
    if report.rho is None:
        rows.append(["rho"] + ["undef"] * len(report.texts))
    else:
        rows.append(["rho"] + [f"{r:.4g}" for r in report.rho])
    widths = [max(len(headers[c]), *(len(r[c]) for r in rows)) for c in range(len(headers))]
    out = []

    def fmt(cells):
        left = cells[0].ljust(widths[0])
        rest = "  ".join(c.rjust(widths[i + 1]) for i, c in enumerate(cells[1:]))
        return (left + "  " + rest).rstrip()

    out.append(fmt(headers))
    for row in rows[:-2]:
        out.append(fmt(row))
    out.append("-" * len(out[0]))
    out.append(fmt(rows[-2]))
    out.append(fmt(rows[-1]))
    meta = [f"threshold {report.chi2_threshold:g}"]
    if report.dropped_categories:
        meta.append("dropped " + ",".join(report.dropped_categories))
    if report.degenerate:
        meta.append("degenerate (all deviation counts equal)")
    elif report.flagged:
        meta.append("flagged " + ",".join(report.flagged))
    else:
        meta.append("flagged none")
    out.append("; ".join(meta))
    return "\n".join(out) + "\n"


def render_csv(report: DeviationReport) -> str:
    """Machine-readable report: chi-square matrix plus alpha and rho rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["category"] + list(report.texts))
    for j, cat in enumerate(report.categories):
        writer.writerow([cat] + [repr(report.chi2[i, j].item()) for i in range(len(report.texts))])
    writer.writerow(["alpha"] + [str(a) for a in report.alpha])
    if report.rho is None:
        writer.writerow(["rho"] + ["undef"] * len(report.texts))
    else:
        writer.writerow(["rho"] + [repr(r) for r in report.rho])
    return buf.getvalue()


def render_report(report: DeviationReport) -> tuple[str, str]:
    return render_table(report), render_csv(report)


def parse_report_csv(text: str) -> tuple[tuple[str, ...], tuple[str, ...], np.ndarray]:
    """Re-parse a report CSV into (texts, categories, chi2 matrix)."""
    rows = list(csv.reader(io.StringIO(text)))
    texts = tuple(rows[0][1:])
    categories = []
    values = []
    for row in rows[1:]:
        if row[0] in ("alpha", "rho"):
            break
        categories.append(row[0])
        values.append([float(v) for v in row[1:]])
    return texts, tuple(categories), np.array(values).T


# -- counts CSV ---------------------------------------------------------------
#
# Header `category,<text_id>,...`; one row per category; integer cells.


def write_counts_csv(stream, group) -> None:
    texts = [c.text_id for c in group]
    if len(set(texts)) != len(texts):
        raise GreektagError("duplicate text ids")
    categories = sorted({cat for c in group for cat in c.counts})
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["category"] + texts)
    for cat in categories:
        writer.writerow([cat] + [str(c.counts.get(cat, 0)) for c in group])


def read_counts_csv(stream, path=None) -> list[CategoryCounts]:
    rows = list(csv.reader(stream))
    if not rows:
        return []
    header = rows[0]
    if not header or header[0] != "category":
        raise FormatError("counts CSV must start with a 'category' header", path, 1)
    texts = header[1:]
    per_text: list[dict[str, int]] = [{} for _ in texts]
    for no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FormatError(
                f"expected {len(header)} columns, got {len(row)}", path, no
            )
        for i, cell in enumerate(row[1:]):
            try:
                value = int(cell)
            except ValueError:
                raise FormatError(f"non-integer count {cell!r}", path, no) from None
            if value < 0:
                raise FormatError(f"negative count {value}", path, no)
            per_text[i][row[0]] = value
    return [CategoryCounts(t, dict(sorted(d.items()))) for t, d in zip(texts, per_text)]


def load_counts_csv(path) -> list[CategoryCounts]:
    with open(path, encoding="utf-8", newline="") as fh:
        return read_counts_csv(fh, path=str(path))


def save_counts_csv(path, group) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_counts_csv(fh, group)
