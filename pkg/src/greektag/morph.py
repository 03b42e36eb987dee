"""Prefix-stem-suffix morphology and lexical probabilities.

Inflected words are split into an optional past-tense prefix (augment),
a stem, and an inflectional suffix.  Stems and uninflected full forms
live in the lexicon with conditional tag distributions; suffixes carry
their own tag distributions in a separate table.  A word's lexical score
for a tag is the product of the stem and suffix conditionals, restricted
to combinations whose paradigm classes agree, then renormalized over all
admissible analyses.

Unknown words fall back to the suffix table alone (the suffix restricts
the candidate tags), and words without any matching suffix fall back to
the prior over hapax legomena seen in training.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .errors import FormatError, GreektagError
from .tags import Tag, TagSchema, format_tag, tag_key
from .text import PUNCT_CATEGORY, Sequence, is_punct

_EMPTY_PATTERN = "-"
_PREFIX_CLASS = "@prefix"
_PRIOR_FORM = "__hapax__"
_MAX_EXPANSION = 4096


def _expand_pattern(pattern: str, path=None, line=None) -> tuple[str, ...]:
    """Expand a finite pattern into its literal strings.

    Supported syntax: literal characters, alternation groups ``(a|b)``,
    character classes ``[abc]``, and ``?`` after an atom.  ``-`` denotes
    the empty string.  Unbounded operators are rejected: suffix and
    prefix inventories are finite.
    """
    if pattern == _EMPTY_PATTERN:
        return ("",)
    atoms: list[list[str]] = []
    i = 0
    while i < len(pattern):
        c = pattern[i]
        if c == "(":
            j = pattern.find(")", i)
            if j < 0:
                raise FormatError(f"unbalanced '(' in pattern {pattern!r}", path, line)
            atoms.append(pattern[i + 1 : j].split("|"))
            i = j + 1
        elif c == "[":
            j = pattern.find("]", i)
            if j <= i + 1:
                raise FormatError(f"bad character class in pattern {pattern!r}", path, line)
            atoms.append(list(pattern[i + 1 : j]))
            i = j + 1
        elif c == "?":
            if not atoms:
                raise FormatError(f"dangling '?' in pattern {pattern!r}", path, line)
            if "" not in atoms[-1]:
                atoms[-1] = atoms[-1] + [""]
            i += 1
        elif c in "*+{}\\^$.":
            raise FormatError(
                f"unsupported operator {c!r} in pattern {pattern!r}", path, line
            )
        else:
            atoms.append([c])
            i += 1
    literals = [""]
    for alts in atoms:
        literals = [p + a for p in literals for a in alts]
        if len(literals) > _MAX_EXPANSION:
            raise FormatError(f"pattern {pattern!r} expands too far", path, line)
    seen = set()
    out = []
    for lit in literals:
        if lit not in seen:
            seen.add(lit)
            out.append(lit)
    return tuple(out)


@dataclass(frozen=True)
class SuffixRule:
    pattern: str
    paradigm_class: str
    tags: tuple[Tag, ...]
    literals: tuple[str, ...]
    tag_probs: dict | None = None  # Tag -> prob, filled by training

    def tag_prob(self, tag: Tag) -> float:
        if self.tag_probs is not None:
            return self.tag_probs.get(tag, 0.0)
        return 1.0 / len(self.tags) if tag in self.tags else 0.0


@dataclass(frozen=True)
class PrefixRule:
    pattern: str
    strippable: bool
    literals: tuple[str, ...]


class _ReverseTrie:
    """End-anchored matching of suffix literals, walked from the word end."""

    __slots__ = ("children", "rule_ids")

    def __init__(self):
        self.children: dict[str, _ReverseTrie] = {}
        self.rule_ids: list[int] = []


class RuleSet:
    def __init__(self, suffix_rules, prefix_rules):
        self.suffix_rules: tuple[SuffixRule, ...] = tuple(suffix_rules)
        self.prefix_rules: tuple[PrefixRule, ...] = tuple(prefix_rules)
        self._root = _ReverseTrie()
        self.has_empty_suffix_rule = False
        for idx, rule in enumerate(self.suffix_rules):
            for lit in rule.literals:
                node = self._root
                for ch in reversed(lit):
                    node = node.children.setdefault(ch, _ReverseTrie())
                node.rule_ids.append(idx)
                if not lit:
                    self.has_empty_suffix_rule = True
        self._prefix_literals = sorted(
            {lit for r in self.prefix_rules if r.strippable for lit in r.literals if lit},
            key=lambda s: (-len(s), s),
        )

    @classmethod
    def empty(cls) -> "RuleSet":
        return cls((), ())

    def match_suffixes(self, word: str) -> list[tuple[str, list[int]]]:
        """All (literal, rule indices) whose literal ends ``word``.

        The stem part must stay non-empty, so literals as long as the
        word itself never match.  Longest literals first.
        """
        found = []
        node = self._root
        if node.rule_ids:
            found.append(("", list(node.rule_ids)))
        for depth in range(1, len(word)):
            node = node.children.get(word[-depth])
            if node is None:
                break
            if node.rule_ids:
                found.append((word[-depth:], list(node.rule_ids)))
        found.reverse()
        return found

    def match_prefixes(self, word: str) -> list[str]:
        """Strippable prefix literals that start ``word`` (longest first)."""
        return [p for p in self._prefix_literals if len(p) < len(word) and word.startswith(p)]

    # -- rule file format ---------------------------------------------------
    #
    # One rule per line: `pattern<TAB>paradigm_class<TAB>tag[=prob] ...`;
    # a paradigm class of `@prefix` declares a prefix rule whose third
    # field is `strip` or `keep`; `-` denotes the empty pattern.

    def to_lines(self) -> list[str]:
        lines = []
        for rule in self.suffix_rules:
            if rule.tag_probs is None:
                tags = " ".join(format_tag(t) for t in rule.tags)
            else:
                tags = " ".join(
                    f"{format_tag(t)}={rule.tag_probs.get(t, 0.0):.12g}" for t in rule.tags
                )
            lines.append(f"{rule.pattern}\t{rule.paradigm_class}\t{tags}")
        for rule in self.prefix_rules:
            mode = "strip" if rule.strippable else "keep"
            lines.append(f"{rule.pattern}\t{_PREFIX_CLASS}\t{mode}")
        return lines

    @classmethod
    def from_lines(cls, lines, schema: TagSchema, path=None) -> "RuleSet":
        suffix_rules = []
        prefix_rules = []
        for no, raw in enumerate(lines, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise FormatError(
                    f"expected 3 tab-separated fields, got {len(fields)}", path, no
                )
            pattern, klass, tagfield = fields
            literals = _expand_pattern(pattern, path, no)
            if klass == _PREFIX_CLASS:
                if tagfield not in ("strip", "keep"):
                    raise FormatError(f"prefix mode must be strip or keep", path, no)
                if "" in literals:
                    raise FormatError("prefix pattern must be non-empty", path, no)
                prefix_rules.append(PrefixRule(pattern, tagfield == "strip", literals))
                continue
            tags = []
            probs = {}
            weighted = False
            for item in tagfield.split():
                # a bare tag parses as a whole; otherwise the part after
                # the last '=' is the trained weight
                try:
                    tag, w = schema.parse(item), None
                except GreektagError:
                    tagstring, eq, prob = item.rpartition("=")
                    try:
                        tag, w = schema.parse(tagstring), float(prob)
                    except (GreektagError, ValueError) as exc:
                        raise FormatError(f"bad tag item {item!r}: {exc}", path, no) from None
                tags.append(tag)
                if w is not None:
                    probs[tag] = w
                    weighted = True
            if not tags:
                raise FormatError("rule lists no tags", path, no)
            suffix_rules.append(
                SuffixRule(pattern, klass, tuple(tags), literals,
                           probs if weighted else None)
            )
        return cls(suffix_rules, prefix_rules)

    @classmethod
    def load(cls, path, schema: TagSchema) -> "RuleSet":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh, schema, path=str(path))


@dataclass(frozen=True)
class LexiconEntry:
    form: str
    kind: str  # "stem" or "fullform"
    paradigm_classes: frozenset[str]
    tag_probs: tuple[tuple[Tag, float], ...]

    def prob(self, tag: Tag) -> float:
        for t, p in self.tag_probs:
            if t == tag:
                return p
        return 0.0

    @property
    def categories(self) -> frozenset[str]:
        return frozenset(t.category for t, _ in self.tag_probs)


@dataclass(frozen=True)
class MorphAnalysis:
    """One admissible split; tag_probs holds the per-tag scores of this
    analysis (products of the stem and suffix conditionals, not yet
    normalized across analyses)."""

    prefix: str
    stem: str
    suffix: str
    tag_probs: tuple[tuple[Tag, float], ...]


class Lexicon:
    def __init__(self, schema, rules, stems=(), fullforms=(),
                 suffix_probs=None, hapax_prior=None, log=()):
        self.schema: TagSchema = schema
        self.rules: RuleSet = rules
        self.stems: dict[str, LexiconEntry] = {e.form: e for e in stems}
        self.fullforms: dict[str, LexiconEntry] = {e.form: e for e in fullforms}
        self.suffix_probs: dict[str, dict[Tag, float]] = dict(suffix_probs or {})
        self.hapax_prior: dict[Tag, float] = dict(hapax_prior or {})
        self.log: tuple[str, ...] = tuple(log)

    def __len__(self) -> int:
        return len(self.stems) + len(self.fullforms)

    # -- lexicon file format --------------------------------------------
    #
    # One entry per line: `form<TAB>kind<TAB>classes<TAB>tag=prob ...`
    # with kind one of stem/fullform/suffix/prior, classes comma-joined
    # or `-`, probabilities at 12 significant digits.

    def to_lines(self) -> list[str]:
        rows = []
        for entry in self.fullforms.values():
            rows.append((entry.form, "fullform", entry.paradigm_classes,
                         entry.tag_probs))
        if self.hapax_prior:
            items = sorted(self.hapax_prior.items(), key=lambda kv: tag_key(kv[0]))
            rows.append((_PRIOR_FORM, "prior", frozenset(), tuple(items)))
        for entry in self.stems.values():
            rows.append((entry.form, "stem", entry.paradigm_classes,
                         entry.tag_probs))
        for literal, probs in self.suffix_probs.items():
            items = sorted(probs.items(), key=lambda kv: tag_key(kv[0]))
            rows.append((literal if literal else _EMPTY_PATTERN, "suffix",
                         frozenset(), tuple(items)))
        rows.sort(key=lambda r: (r[1], r[0]))
        lines = []
        for form, kind, classes, probs in rows:
            cls = ",".join(sorted(classes)) if classes else "-"
            body = " ".join(f"{format_tag(t)}={p:.12g}" for t, p in probs)
            lines.append(f"{form}\t{kind}\t{cls}\t{body}")
        return lines

    @classmethod
    def from_lines(cls, lines, schema, rules, path=None) -> "Lexicon":
        stems = []
        fullforms = []
        suffix_probs = {}
        hapax_prior = {}
        for no, raw in enumerate(lines, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise FormatError(
                    f"expected 4 tab-separated fields, got {len(fields)}", path, no
                )
            form, kind, cls_field, body = fields
            classes = frozenset() if cls_field == "-" else frozenset(cls_field.split(","))
            probs = []
            for item in body.split():
                tagstring, eq, prob = item.rpartition("=")
                if not eq:
                    raise FormatError(f"missing probability in {item!r}", path, no)
                try:
                    tag = schema.parse(tagstring)
                    probs.append((tag, float(prob)))
                except (GreektagError, ValueError) as exc:
                    raise FormatError(str(exc), path, no) from None
            if kind == "stem":
                stems.append(LexiconEntry(form, "stem", classes, tuple(probs)))
            elif kind == "fullform":
                fullforms.append(LexiconEntry(form, "fullform", classes, tuple(probs)))
            elif kind == "suffix":
                literal = "" if form == _EMPTY_PATTERN else form
                suffix_probs[literal] = dict(probs)
            elif kind == "prior":
                hapax_prior = dict(probs)
            else:
                raise FormatError(f"unknown entry kind {kind!r}", path, no)
        return cls(schema, rules, stems, fullforms, suffix_probs, hapax_prior)

    @classmethod
    def load(cls, path, schema, rules) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh, schema, rules, path=str(path))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")


def validate(stem_entry: LexiconEntry, rule: SuffixRule, tag: Tag) -> bool:
    """True iff the stem, suffix rule, and tag may combine: the rule's
    paradigm class is one of the stem's, the rule admits the tag, and
    the stem has been seen with the tag's category."""
    if rule.paradigm_class not in stem_entry.paradigm_classes:
        return False
    if tag not in rule.tags:
        return False
    return tag.category in stem_entry.categories


def _suffix_tag_prob(lexicon: Lexicon, literal: str, rule: SuffixRule, tag: Tag) -> float:
    """P(tag | suffix): trained literal table first, then the rule's
    trained weights, then uniform over the rule's tags."""
    probs = lexicon.suffix_probs.get(literal)
    if probs is not None:
        return probs.get(tag, 0.0)
    return rule.tag_prob(tag)


def _sorted_scores(scores: dict) -> tuple[tuple[Tag, float], ...]:
    return tuple(sorted(scores.items(), key=lambda kv: tag_key(kv[0])))


def segment(word: str, lexicon: Lexicon) -> list[MorphAnalysis]:
    """Every admissible prefix-stem-suffix split of a normalized word.

    Known words yield full-form and stem-based analyses; a word without
    any yields suffix-only analyses with the stem treated as unknown; a
    word without even a matching suffix yields the hapax-prior fallback
    with an empty suffix.  Ordered by descending suffix length, ties by
    descending stem length.
    """
    rules = lexicon.rules
    analyses: list[MorphAnalysis] = []

    entry = lexicon.fullforms.get(word)
    if entry is not None:
        probs = tuple((t, p) for t, p in entry.tag_probs if p > 0)
        if probs:
            analyses.append(MorphAnalysis("", word, "", probs))

    for prefix in [""] + rules.match_prefixes(word):
        rest = word[len(prefix):]
        stem_entry = lexicon.stems.get(rest)
        if stem_entry is not None and not rules.has_empty_suffix_rule:
            # bare stem as a complete form; the suffix factor is 1
            probs = tuple((t, p) for t, p in stem_entry.tag_probs if p > 0)
            if probs:
                analyses.append(MorphAnalysis(prefix, rest, "", probs))
        for literal, rule_ids in rules.match_suffixes(rest):
            stem = rest[: len(rest) - len(literal)] if literal else rest
            stem_entry = lexicon.stems.get(stem)
            if stem_entry is None:
                continue
            scores: dict[Tag, float] = defaultdict(float)
            for rid in rule_ids:
                rule = rules.suffix_rules[rid]
                for tag in rule.tags:
                    if not validate(stem_entry, rule, tag):
                        continue
                    score = stem_entry.prob(tag) * _suffix_tag_prob(lexicon, literal, rule, tag)
                    if score > 0:
                        scores[tag] += score
            if scores:
                analyses.append(MorphAnalysis(prefix, stem, literal, _sorted_scores(scores)))

    if not analyses:
        analyses = _unknown_analyses(word, lexicon)

    analyses.sort(key=lambda a: (-len(a.suffix), -len(a.stem)))
    return analyses


def _unknown_analyses(word: str, lexicon: Lexicon) -> list[MorphAnalysis]:
    if is_punct(word) and PUNCT_CATEGORY in lexicon.schema.category_features:
        return [MorphAnalysis("", word, "", ((Tag(PUNCT_CATEGORY), 1.0),))]
    out = []
    for literal, rule_ids in lexicon.rules.match_suffixes(word):
        if not literal:
            continue  # an empty suffix tells nothing about an unknown stem
        scores: dict[Tag, float] = defaultdict(float)
        for rid in rule_ids:
            rule = lexicon.rules.suffix_rules[rid]
            for tag in rule.tags:
                p = _suffix_tag_prob(lexicon, literal, rule, tag)
                if p > 0:
                    scores[tag] += p
        if scores:
            out.append(MorphAnalysis("", word[: len(word) - len(literal)], literal,
                                     _sorted_scores(scores)))
    if out:
        return out
    prior = _sorted_scores(lexicon.hapax_prior)
    return [MorphAnalysis("", word, "", prior)]


def lexical_prob(word: str, lexicon: Lexicon) -> list[tuple[Tag, float]]:
    """Distribution over tags for a normalized word: per-analysis scores
    summed per tag and renormalized.  Empty only for a lexicon with no
    usable statistics at all."""
    scores: dict[Tag, float] = defaultdict(float)
    for analysis in segment(word, lexicon):
        for tag, score in analysis.tag_probs:
            scores[tag] += score
    items = sorted(scores.items(), key=lambda kv: tag_key(kv[0]))
    total = 0.0
    for _, s in items:
        total += s
    if total <= 0.0:
        return []
    return [(t, s / total) for t, s in items]


def train_lexicon(corpus: list[Sequence], rules: RuleSet,
                  schema: TagSchema) -> Lexicon:
    """Build the lexicon from a gold-tagged corpus.

    Tokens of uninflected categories become full forms.  Inflected
    tokens are split using the suffix rules that admit the gold tag,
    preferring the longest suffix (then the longest stem); tokens no
    rule can segment are stored as full forms and reported in the
    training log.  Counts become conditional distributions by relative
    frequency, including the per-literal suffix table, per-rule tag
    weights, and the prior over hapax legomena.
    """
    stem_counts: dict[str, Counter] = defaultdict(Counter)
    stem_classes: dict[str, set] = defaultdict(set)
    ff_counts: dict[str, Counter] = defaultdict(Counter)
    suffix_counts: dict[str, Counter] = defaultdict(Counter)
    rule_counts: dict[int, Counter] = defaultdict(Counter)
    word_freq: Counter = Counter()
    observations: list[tuple[str, Tag]] = []
    log: list[str] = []

    for seq in corpus:
        if seq.gold_tags is None:
            raise GreektagError("training corpus must carry gold tags")
        for token, gold in zip(seq.tokens, seq.gold_tags):
            word = token.norm
            word_freq[word] += 1
            observations.append((word, gold))
            if not schema.features_of(gold.category):
                ff_counts[word][gold] += 1
                continue
            splits = []
            for prefix in [""] + rules.match_prefixes(word):
                rest = word[len(prefix):]
                for literal, rule_ids in rules.match_suffixes(rest):
                    admitting = [rid for rid in rule_ids
                                 if gold in rules.suffix_rules[rid].tags]
                    if admitting:
                        stem = rest[: len(rest) - len(literal)] if literal else rest
                        splits.append((prefix, stem, literal, admitting))
            if not splits:
                ff_counts[word][gold] += 1
                log.append(
                    f"no segmentation for {word!r} with tag "
                    f"{format_tag(gold)}; stored as full form"
                )
                continue
            # longest suffix first; at equal suffix length prefer the
            # stripped prefix so augmented forms share their bare stem
            splits.sort(key=lambda s: (-len(s[2]), -len(s[0])))
            prefix, stem, literal, admitting = splits[0]
            stem_counts[stem][gold] += 1
            suffix_counts[literal][gold] += 1
            for rid in admitting:
                stem_classes[stem].add(rules.suffix_rules[rid].paradigm_class)
                rule_counts[rid][gold] += 1

    def distribution(counter: Counter) -> tuple[tuple[Tag, float], ...]:
        total = sum(counter.values())
        items = sorted(counter.items(), key=lambda kv: tag_key(kv[0]))
        return tuple((t, n / total) for t, n in items)

    stems = [
        LexiconEntry(form, "stem", frozenset(stem_classes[form]),
                     distribution(counts))
        for form, counts in sorted(stem_counts.items())
    ]
    fullforms = [
        LexiconEntry(form, "fullform", frozenset(), distribution(counts))
        for form, counts in sorted(ff_counts.items())
    ]
    suffix_probs = {
        literal: dict(distribution(counts))
        for literal, counts in sorted(suffix_counts.items())
    }

    hapax = Counter()
    for word, gold in observations:
        if word_freq[word] == 1:
            hapax[gold] += 1
    if not hapax:  # no hapax legomena: fall back to the overall tag distribution
        hapax = Counter(gold for _, gold in observations)
    prior = dict(distribution(hapax)) if hapax else {}

    trained_rules = RuleSet(
        [
            SuffixRule(rule.pattern, rule.paradigm_class, rule.tags, rule.literals,
                       dict(distribution(rule_counts[idx])) if rule_counts.get(idx) else rule.tag_probs)
            for idx, rule in enumerate(rules.suffix_rules)
        ],
        rules.prefix_rules,
    )
    return Lexicon(schema, trained_rules, stems, fullforms, suffix_probs,
                   prior, log)
