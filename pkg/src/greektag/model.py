"""Trigram tag model: training, smoothing, and sequence probability.

Transition probabilities interpolate the trigram, bigram, and unigram
chain estimates with weights fitted by deleted interpolation, leaving
one sequence out at a time.  All sequence arithmetic runs in log space
with ``-inf`` as the zero-probability sentinel; each position
contributes a single pre-added (transition + emission) increment so
that scores are bit-for-bit reproducible across the decoder, the
brute-force oracle, and this module.
"""

from __future__ import annotations

import math
from collections import Counter

from . import morph
from .errors import FormatError, ModelError
from .tags import (
    BOUNDARY,
    BOUNDARY_CATEGORY,
    DEFAULT_CHAIN_WEIGHTS,
    DEFAULT_FLOOR,
    Tag,
    TagSchema,
    TransitionStats,
    _Tables,
    format_tag,
    tag_key,
)

NEG_INF = float("-inf")

_FORMAT = "greektag-model 1"


def _instances(tags):
    """(h2, h1, t) triples over a sequence padded with two boundary tags."""
    a, b = BOUNDARY, BOUNDARY
    for t in tags:
        yield (a, b, t)
        a, b = b, t


def fit_interpolation(seq_tag_lists):
    """Order weights (l1, l2, l3) and chain level weights fitted by
    leave-one-sequence-out deleted interpolation.

    Each held-out observation is awarded to the order (or chain level)
    whose leave-one-out relative frequency is largest, ties split
    evenly; observations no order can explain go to the most robust
    level.  Weights are the normalized award totals.
    """
    per_seq = [Counter(_instances(tags)) for tags in seq_tag_lists]
    tri_g = Counter()
    for c in per_seq:
        tri_g.update(c)

    big_g, uni_g, ctx3_g, ctx2_g = Counter(), Counter(), Counter(), Counter()
    n_g = 0
    for (a, b, t), n in tri_g.items():
        big_g[(b, t)] += n
        uni_g[t] += n
        ctx3_g[(a, b)] += n
        ctx2_g[b] += n
        n_g += n

    tables_g = _Tables(tri_g)
    order_awards = [0.0, 0.0, 0.0]  # l1, l2, l3
    chain_awards = [0.0, 0.0, 0.0]  # specific, category-local, global
    saw_features = False

    for c_s in per_seq:
        big_s, uni_s, ctx3_s, ctx2_s = Counter(), Counter(), Counter(), Counter()
        n_s = 0
        for (a, b, t), n in c_s.items():
            big_s[(b, t)] += n
            uni_s[t] += n
            ctx3_s[(a, b)] += n
            ctx2_s[b] += n
            n_s += n
        tables_s = _Tables(c_s)

        for (a, b, t), n in c_s.items():
            d3 = ctx3_g[(a, b)] - ctx3_s[(a, b)]
            c3 = (tri_g[(a, b, t)] - c_s[(a, b, t)]) / d3 if d3 else 0.0
            d2 = ctx2_g[b] - ctx2_s[b]
            c2 = (big_g[(b, t)] - big_s[(b, t)]) / d2 if d2 else 0.0
            d1 = n_g - n_s
            c1 = (uni_g[t] - uni_s[t]) / d1 if d1 else 0.0
            best = max(c3, c2, c1)
            if best <= 0.0:
                order_awards[0] += n
            else:
                winners = [i for i, c in ((0, c1), (1, c2), (2, c3)) if c == best]
                for i in winners:
                    order_awards[i] += n / len(winners)

            hist = (a, b)
            prefix = (t.category,)
            for fv in t.features:
                saw_features = True
                key_den = hist + (prefix,)
                key_num = hist + (prefix + (fv.value,),)
                d_spec = tables_g.pre[3].get(key_den, 0) - tables_s.pre[3].get(key_den, 0)
                c_spec = (
                    (tables_g.pre[3].get(key_num, 0) - tables_s.pre[3].get(key_num, 0)) / d_spec
                    if d_spec else 0.0
                )
                ckey = (t.category, fv.feature)
                d_cat = tables_g.catfeat_ctx.get(ckey, 0) - tables_s.catfeat_ctx.get(ckey, 0)
                vkey = (t.category, fv.feature, fv.value)
                c_cat = (
                    (tables_g.catfeat.get(vkey, 0) - tables_s.catfeat.get(vkey, 0)) / d_cat
                    if d_cat else 0.0
                )
                d_uni = tables_g.featuni_ctx.get(fv.feature, 0) - tables_s.featuni_ctx.get(fv.feature, 0)
                ukey = (fv.feature, fv.value)
                c_uni = (
                    (tables_g.featuni.get(ukey, 0) - tables_s.featuni.get(ukey, 0)) / d_uni
                    if d_uni else 0.0
                )
                best = max(c_spec, c_cat, c_uni)
                if best <= 0.0:
                    chain_awards[2] += n
                else:
                    winners = [i for i, c in ((0, c_spec), (1, c_cat), (2, c_uni)) if c == best]
                    for i in winners:
                        chain_awards[i] += n / len(winners)
                prefix = prefix + (fv.value,)

    total = sum(order_awards)
    lambdas = tuple(a / total for a in order_awards) if total else (1.0, 0.0, 0.0)
    ctotal = sum(chain_awards)
    if not saw_features or not ctotal:
        chain_weights = DEFAULT_CHAIN_WEIGHTS
    else:
        chain_weights = tuple(a / ctotal for a in chain_awards)
    return lambdas, chain_weights


class Model:
    """Immutable trained model: trigram statistics, interpolation
    weights, and the morphological lexicon."""

    def __init__(self, schema: TagSchema, stats: TransitionStats,
                 lambdas, lexicon: morph.Lexicon):
        self.schema = schema
        self.stats = stats
        self.lambdas = tuple(lambdas)
        if abs(sum(self.lambdas) - 1.0) > 1e-12 or any(l < 0 for l in self.lambdas):
            raise ModelError(f"bad interpolation weights {self.lambdas}")
        self.lexicon = lexicon
        self._log_trans: dict = {}
        self._lex: dict = {}
        self._log_emis: dict = {}

    # -- probabilities ------------------------------------------------------

    def transition_prob(self, t: Tag, h1: Tag, h2: Tag) -> float:
        """P(t | h1, h2) with h1 the immediately preceding tag."""
        l1, l2, l3 = self.lambdas
        p = 0.0
        if l3:
            p += l3 * self.stats.chain_prob(t, (h2, h1))
        if l2:
            p += l2 * self.stats.chain_prob(t, (h1,))
        if l1:
            p += l1 * self.stats.chain_prob(t, ())
        return p

    def log_transition(self, t: Tag, h1: Tag, h2: Tag) -> float:
        key = (t, h1, h2)
        v = self._log_trans.get(key)
        if v is None:
            p = self.transition_prob(t, h1, h2)
            v = math.log(p) if p > 0.0 else NEG_INF
            self._log_trans[key] = v
        return v

    def lexical_probs(self, norm: str) -> list[tuple[Tag, float]]:
        probs = self._lex.get(norm)
        if probs is None:
            probs = morph.lexical_prob(norm, self.lexicon)
            self._lex[norm] = probs
        return probs

    def log_emissions(self, norm: str) -> dict[Tag, float]:
        table = self._log_emis.get(norm)
        if table is None:
            table = {t: math.log(p) for t, p in self.lexical_probs(norm) if p > 0.0}
            self._log_emis[norm] = table
        return table

    def sequence_log_prob(self, tokens, tags) -> float:
        """Log joint probability of a tag sequence for the tokens;
        ``-inf`` when any factor vanishes."""
        if len(tokens) != len(tags):
            raise ModelError(
                f"{len(tags)} tags for {len(tokens)} tokens"
            )
        total = 0.0
        a, b = BOUNDARY, BOUNDARY
        for token, t in zip(tokens, tags):
            emis = self.log_emissions(token.norm).get(t, NEG_INF)
            inc = self.log_transition(t, b, a) + emis
            total += inc
            a, b = b, t
        return total

    # -- model file ----------------------------------------------------------
    #
    # Versioned text format: a header with the interpolation weights,
    # then [schema], [rules], [trigrams], and [lexicon] sections, every
    # section sorted so that identical models serialize byte-identically.

    def to_lines(self) -> list[str]:
        lines = [_FORMAT]
        lines.append("lambdas " + " ".join(repr(l) for l in self.lambdas))
        lines.append("chain " + " ".join(repr(g) for g in self.stats.chain_weights))
        lines.append(f"floor {self.stats.floor!r}")
        lines.append(f"smoothed {int(self.stats.smoothed)}")
        lines.append("[schema]")
        lines.extend(self.schema.to_lines())
        lines.append("[rules]")
        lines.extend(self.lexicon.rules.to_lines())
        lines.append("[trigrams]")
        rows = [
            (format_tag(a), format_tag(b), format_tag(t), n)
            for (a, b, t), n in self.stats.trigram_counts.items()
        ]
        for a, b, t, n in sorted(rows):
            lines.append(f"{a}\t{b}\t{t}\t{n}")
        lines.append("[lexicon]")
        lines.extend(self.lexicon.to_lines())
        return lines

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")

    @classmethod
    def load(cls, path) -> "Model":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != _FORMAT:
            raise FormatError("not a greektag model file", path, 1)
        header: dict[str, list[str]] = {}
        i = 1
        while i < len(lines) and not lines[i].startswith("["):
            parts = lines[i].split()
            if len(parts) < 2:
                raise FormatError(f"bad header line {lines[i]!r}", path, i + 1)
            header[parts[0]] = parts[1:]
            i += 1
        try:
            lambdas = tuple(float(x) for x in header["lambdas"])
            chain_weights = tuple(float(x) for x in header["chain"])
            floor = float(header["floor"][0])
            smoothed = bool(int(header["smoothed"][0]))
        except (KeyError, ValueError, IndexError) as exc:
            raise FormatError(f"bad model header: {exc}", path) from None

        sections: dict[str, list[str]] = {}
        current = None
        for line in lines[i:]:
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                sections[current] = []
            elif current is not None:
                sections[current].append(line)
            else:
                raise FormatError(f"content outside any section: {line!r}", path)
        for needed in ("schema", "rules", "trigrams", "lexicon"):
            if needed not in sections:
                raise FormatError(f"missing [{needed}] section", path)

        schema = TagSchema.from_lines(sections["schema"], path=path)
        rules = morph.RuleSet.from_lines(sections["rules"], schema, path=path)

        def parse_tag(s: str) -> Tag:
            return BOUNDARY if s == BOUNDARY_CATEGORY else schema.parse(s)

        trigram_counts: dict = {}
        for no, line in enumerate(sections["trigrams"], start=1):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise FormatError(f"bad trigram row {line!r}", path, no)
            key = (parse_tag(fields[0]), parse_tag(fields[1]), parse_tag(fields[2]))
            trigram_counts[key] = int(fields[3])

        stats = TransitionStats(schema, trigram_counts, smoothed=smoothed,
                                chain_weights=chain_weights, floor=floor)
        # undo the raw-mode floor reset so a smoothed save round-trips
        stats.floor = floor
        lexicon = morph.Lexicon.from_lines(sections["lexicon"], schema, rules, path=path)
        return cls(schema, stats, lambdas, lexicon)


def train(corpus, rules, schema, *, smooth=True, lambdas=None,
          chain_weights=None, floor=DEFAULT_FLOOR) -> Model:
    """Train on an annotated corpus.

    Counts tag trigrams over sequences padded with two boundary tags,
    fits the interpolation weights leave-one-sequence-out (unless given
    explicitly), and builds the lexicon.  Deterministic: the same corpus
    yields a byte-identical model file.
    """
    if rules is None:
        rules = morph.RuleSet.empty()
    seq_tags = []
    for seq in corpus:
        if seq.gold_tags is None:
            raise ModelError("training corpus must carry gold tags")
        for t in seq.gold_tags:
            schema.validate(t)
        if seq.gold_tags:
            seq_tags.append(seq.gold_tags)
    if not seq_tags:
        raise ModelError("empty training corpus")

    trigram_counts = Counter()
    for tags in seq_tags:
        trigram_counts.update(_instances(tags))

    if lambdas is None or chain_weights is None:
        fit_l, fit_g = fit_interpolation(seq_tags)
        lambdas = fit_l if lambdas is None else lambdas
        chain_weights = fit_g if chain_weights is None else chain_weights

    stats = TransitionStats(schema, trigram_counts, smoothed=smooth,
                            chain_weights=chain_weights, floor=floor)
    lexicon = morph.train_lexicon(corpus, rules, schema)
    return Model(schema, stats, lambdas, lexicon)
