"""Feature-structured tags.

A tag is a word category plus an ordered list of feature-value pairs
(e.g. ``verf:pers=1,num=pl,mood=ind,tense=pres,voice=act``).  The schema
declares which categories exist, which features each category carries,
and the canonical feature order, so that the chain-rule factorization of
trigram probabilities over the feature-value pairs is well defined.

Trigram statistics live in :class:`TransitionStats`: raw relative
frequencies factorize exactly (the chain rule is an identity), and the
smoothed estimator interpolates each conditional factor across three
levels (full conditioning, category-local, global) with a small uniform
floor so that every schema-valid tag keeps positive mass.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .errors import FormatError, ModelError, TagError

BOUNDARY_CATEGORY = "<s>"

# Characters that would collide with the tag string syntax or the
# tab-separated file formats.
_FORBIDDEN = set(" \t\n,:=|#<>")


@dataclass(frozen=True)
class FeatureValue:
    feature: str
    value: str


@dataclass(frozen=True)
class Tag:
    category: str
    features: tuple[FeatureValue, ...] = ()


#: History padding used before the first and second token of a sequence.
BOUNDARY = Tag(BOUNDARY_CATEGORY)


def format_tag(tag: Tag) -> str:
    """Canonical string form: ``category`` or ``category:f=v,f=v,...``."""
    if not tag.features:
        return tag.category
    inner = ",".join(f"{fv.feature}={fv.value}" for fv in tag.features)
    return f"{tag.category}:{inner}"


def tag_key(tag: Tag) -> str:
    """Sort key used for every deterministic tie-break in the package."""
    return format_tag(tag)


def _check_ident(name: str, what: str) -> str:
    if not name or any(c in _FORBIDDEN for c in name):
        raise FormatError(f"invalid {what} identifier: {name!r}")
    return name


class TagSchema:
    """Declares categories, features, allowed values, and feature masks.

    ``feature_values`` maps each feature name to its allowed values; the
    insertion order of the mapping is the canonical feature order.
    ``category_features`` maps each category to the (canonically ordered)
    tuple of features its tags must carry; an empty tuple marks an
    uninflected category.
    """

    def __init__(self, feature_values, category_features):
        self.feature_values: dict[str, tuple[str, ...]] = {}
        for feat, values in feature_values.items():
            _check_ident(feat, "feature")
            if not values:
                raise FormatError(f"feature {feat} declares no values")
            self.feature_values[feat] = tuple(
                _check_ident(v, "value") for v in values
            )
        order = {f: i for i, f in enumerate(self.feature_values)}
        self.category_features: dict[str, tuple[str, ...]] = {}
        for cat, feats in category_features.items():
            _check_ident(cat, "category")
            for f in feats:
                if f not in self.feature_values:
                    raise FormatError(f"category {cat} uses undeclared feature {f}")
            self.category_features[cat] = tuple(sorted(feats, key=order.__getitem__))

    @property
    def categories(self) -> tuple[str, ...]:
        return tuple(self.category_features)

    def features_of(self, category: str) -> tuple[str, ...]:
        try:
            return self.category_features[category]
        except KeyError:
            raise TagError(f"unknown category: {category}") from None

    def allowed_values(self, feature: str) -> tuple[str, ...]:
        try:
            return self.feature_values[feature]
        except KeyError:
            raise TagError(f"unknown feature: {feature}") from None

    def bare(self, category: str) -> Tag:
        """The tag of an uninflected category."""
        if self.features_of(category):
            raise TagError(f"category {category} requires features")
        return Tag(category)

    def validate(self, tag: Tag) -> None:
        """Raise TagError unless ``tag`` carries exactly its category's features."""
        feats = self.features_of(tag.category)
        seen = [fv.feature for fv in tag.features]
        if len(set(seen)) != len(seen):
            raise TagError(f"duplicate feature in tag: {format_tag(tag)}")
        for fv in tag.features:
            if fv.feature not in self.feature_values:
                raise TagError(f"unknown feature: {fv.feature}")
            if fv.feature not in feats:
                raise TagError(
                    f"feature {fv.feature} not allowed for category {tag.category}"
                )
            if fv.value not in self.feature_values[fv.feature]:
                raise TagError(f"unknown value {fv.value} for feature {fv.feature}")
        missing = [f for f in feats if f not in seen]
        if missing:
            raise TagError(
                f"tag {format_tag(tag)} misses feature(s) {','.join(missing)} "
                f"required for category {tag.category}"
            )
        if tuple(seen) != feats:
            raise TagError(f"features out of canonical order: {format_tag(tag)}")

    def parse(self, s: str) -> Tag:
        """Parse ``category`` or ``category:f=v,...``; reorders to canon."""
        s = s.strip()
        if not s:
            raise TagError("empty tag string")
        category, _, rest = s.partition(":")
        pairs = []
        if rest:
            for item in rest.split(","):
                feat, eq, value = item.partition("=")
                if not eq or not feat or not value:
                    raise TagError(f"malformed feature-value pair {item!r} in {s!r}")
                pairs.append((feat, value))
        feats = self.features_of(category)
        order = {f: i for i, f in enumerate(feats)}
        for feat, _ in pairs:
            if feat not in self.feature_values:
                raise TagError(f"unknown feature: {feat}")
            if feat not in order:
                raise TagError(f"feature {feat} not allowed for category {category}")
        pairs.sort(key=lambda fv: order[fv[0]])
        tag = Tag(category, tuple(FeatureValue(f, v) for f, v in pairs))
        self.validate(tag)
        return tag

    def iter_tags(self, category: str):
        """Yield every schema-valid tag of a category (value product)."""
        feats = self.features_of(category)
        if not feats:
            yield Tag(category)
            return
        stack = [()]
        for f in feats:
            stack = [
                prefix + (FeatureValue(f, v),)
                for prefix in stack
                for v in self.feature_values[f]
            ]
        for combo in stack:
            yield Tag(category, combo)

    # -- schema file format -------------------------------------------------

    def to_lines(self) -> list[str]:
        lines = []
        for feat, values in self.feature_values.items():
            lines.append(f"feature {feat} {','.join(values)}")
        for cat, feats in self.category_features.items():
            lines.append(f"category {cat} {','.join(feats)}".rstrip())
        return lines

    @classmethod
    def from_lines(cls, lines, path=None) -> "TagSchema":
        feature_values: dict[str, tuple[str, ...]] = {}
        category_features: dict[str, tuple[str, ...]] = {}
        for no, raw in enumerate(lines, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "feature" and len(parts) == 3:
                name, values = parts[1], parts[2]
                if name in feature_values:
                    raise FormatError(f"duplicate feature {name}", path, no)
                feature_values[name] = tuple(values.split(","))
            elif parts[0] == "category" and len(parts) in (2, 3):
                name = parts[1]
                if name in category_features:
                    raise FormatError(f"duplicate category {name}", path, no)
                feats = tuple(parts[2].split(",")) if len(parts) == 3 else ()
                category_features[name] = feats
            else:
                raise FormatError(f"unrecognized schema line: {line!r}", path, no)
        if not category_features:
            raise FormatError("schema declares no categories", path)
        try:
            return cls(feature_values, category_features)
        except FormatError as exc:
            raise FormatError(str(exc), path) from None

    @classmethod
    def load(cls, path) -> "TagSchema":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh, path=str(path))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")


def _tag_prefixes(tag: Tag) -> list[tuple[str, ...]]:
    """Nested prefixes (category, v1, .., vj) for j = 0..l."""
    prefix = (tag.category,)
    out = [prefix]
    for fv in tag.features:
        prefix = prefix + (fv.value,)
        out.append(prefix)
    return out


class _Tables:
    """Count tables derived from full-tag trigram counts.

    ``pre[o]`` maps (history tags..., prefix tuple) to a count at order
    ``o`` (history length o-1); ``ctx[o]`` maps the history alone to the
    number of positions carrying it.  ``catfeat``/``featuni`` hold the
    category-local and global feature-value counts used as backoff
    levels inside the chain.
    """

    def __init__(self, trigram_counts):
        self.pre = {1: defaultdict(int), 2: defaultdict(int), 3: defaultdict(int)}
        self.ctx = {1: defaultdict(int), 2: defaultdict(int), 3: defaultdict(int)}
        self.catfeat = defaultdict(int)
        self.catfeat_ctx = defaultdict(int)
        self.featuni = defaultdict(int)
        self.featuni_ctx = defaultdict(int)
        for (a, b, t), n in trigram_counts.items():
            prefixes = _tag_prefixes(t)
            for order, hist in ((3, (a, b)), (2, (b,)), (1, ())):
                self.ctx[order][hist] += n
                pre = self.pre[order]
                for p in prefixes:
                    pre[hist + (p,)] += n
            cat = t.category
            for fv in t.features:
                self.catfeat[(cat, fv.feature, fv.value)] += n
                self.catfeat_ctx[(cat, fv.feature)] += n
                self.featuni[(fv.feature, fv.value)] += n
                self.featuni_ctx[fv.feature] += n


#: Default weights for the (full conditioning, category-local, global)
#: levels of each feature factor when the corpus has no featured tags to
#: fit them on.
DEFAULT_CHAIN_WEIGHTS = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)

#: Default mass reserved for the uniform-over-schema floor of each factor.
DEFAULT_FLOOR = 1e-3


class TransitionStats:
    """Trigram tag statistics with category-first chain factorization.

    The probability of a tag given a history is the product of one factor
    for the category and one factor per feature value, each conditioned
    on the history plus the already-fixed part of the tag.  With
    ``smoothed=False`` every factor is a raw relative frequency and the
    product telescopes to the joint relative frequency.  With smoothing,
    feature factors interpolate their three backoff levels using
    ``chain_weights`` (levels with empty conditioning counts are dropped
    and the weights renormalized) and every factor mixes in ``floor``
    mass spread uniformly over the schema-allowed values.
    """

    def __init__(self, schema, trigram_counts, *, smoothed=True,
                 chain_weights=DEFAULT_CHAIN_WEIGHTS, floor=DEFAULT_FLOOR):
        self.schema = schema
        self.trigram_counts = dict(trigram_counts)
        self.smoothed = smoothed
        self.chain_weights = tuple(chain_weights)
        self.floor = floor if smoothed else 0.0
        self.tables = _Tables(self.trigram_counts)
        if not self.tables.ctx[1].get((), 0):
            raise ModelError("no trigram statistics (untrained model)")

    @property
    def observed_tags(self) -> list[Tag]:
        seen = {t for (_, _, t) in self.trigram_counts}
        return sorted(seen, key=tag_key)

    def _raw_factor(self, order, hist, num_prefix, den_prefix) -> float:
        pre = self.tables.pre[order]
        if den_prefix is None:
            den = self.tables.ctx[order].get(hist, 0)
        else:
            den = pre.get(hist + (den_prefix,), 0)
        if not den:
            return 0.0
        return pre.get(hist + (num_prefix,), 0) / den

    def _category_factor(self, order, hist, category) -> float:
        ncat = len(self.schema.categories)
        if self.tables.ctx[order].get(hist, 0):
            mle = self._raw_factor(order, hist, (category,), None)
        else:
            # unseen history: escape to the category unigram
            mle = self._raw_factor(1, (), (category,), None)
        return (1.0 - self.floor) * mle + self.floor / ncat

    def _feature_factor(self, order, hist, category, prefix, feature, value) -> float:
        tb = self.tables
        g_spec, g_cat, g_uni = self.chain_weights
        levels = []
        if tb.pre[order].get(hist + (prefix,), 0):
            levels.append((g_spec, self._raw_factor(order, hist, prefix + (value,), prefix)))
        cden = tb.catfeat_ctx.get((category, feature), 0)
        if cden:
            levels.append((g_cat, tb.catfeat.get((category, feature, value), 0) / cden))
        uden = tb.featuni_ctx.get(feature, 0)
        if uden:
            levels.append((g_uni, tb.featuni.get((feature, value), 0) / uden))
        nvals = len(self.schema.allowed_values(feature))
        if not levels:
            return 1.0 / nvals
        wsum = sum(w for w, _ in levels)
        mixed = sum(w * m for w, m in levels) / wsum
        return (1.0 - self.floor) * mixed + self.floor / nvals

    def chain_prob(self, tag: Tag, history: tuple[Tag, ...]) -> float:
        """P(tag | history) as the chain product, at order len(history)+1."""
        order = len(history) + 1
        if self.smoothed:
            p = self._category_factor(order, history, tag.category)
            prefix = (tag.category,)
            for fv in tag.features:
                p *= self._feature_factor(order, history, tag.category,
                                          prefix, fv.feature, fv.value)
                prefix = prefix + (fv.value,)
            return p
        p = self._raw_factor(order, history, (tag.category,), None)
        prefix = (tag.category,)
        for fv in tag.features:
            if p == 0.0:
                return 0.0
            p *= self._raw_factor(order, history, prefix + (fv.value,), prefix)
            prefix = prefix + (fv.value,)
        return p


def feature_chain_prob(model, t: Tag, h2: Tag, h1: Tag) -> float:
    """Trigram probability of ``t`` after ``h2 h1``, factored over the
    category and feature-value pairs of ``t``.

    Raw (unsmoothed) statistics make the product exactly the joint
    relative frequency of the trigram whenever the history was observed.
    """
    return model.stats.chain_prob(t, (h2, h1))
