import shutil

import pytest

from greektag.cli import main
from greektag.stylometry import load_counts_csv
from greektag.tags import TagSchema
from greektag.text import load_annotated_corpus

from test_stylometry import alpha_pattern_counts


@pytest.fixture()
def workdir(tmp_path, fixtures_dir):
    for name in ("toy.schema", "toy.rules", "toy.corpus"):
        shutil.copy(fixtures_dir / name, tmp_path / name)
    shutil.copytree(fixtures_dir / "texts", tmp_path / "texts")
    return tmp_path


def _train(workdir, capsys, extra=()):
    code = main([
        "train", str(workdir / "toy.corpus"),
        "--schema", str(workdir / "toy.schema"),
        "--rules", str(workdir / "toy.rules"),
        "--out", str(workdir / "toy.model"),
        *extra,
    ])
    return code, capsys.readouterr().out


def test_train_writes_model_and_log(workdir, capsys):
    code, log = _train(workdir, capsys)
    assert code == 0
    assert (workdir / "toy.model").exists()
    assert "sequences" in log and "tokens" in log
    assert "lexicon:" in log
    assert "lambdas:" in log
    assert "cv-accuracy:" in log


def test_train_log_reports_lexicon_entry_count(workdir, capsys):
    _, log = _train(workdir, capsys)
    from greektag.model import Model

    model = Model.load(workdir / "toy.model")
    entries = len(model.lexicon.stems) + len(model.lexicon.fullforms)
    assert f"lexicon: {entries} entries" in log


def test_train_is_deterministic(workdir, capsys):
    _train(workdir, capsys)
    first = (workdir / "toy.model").read_bytes()
    (workdir / "toy.model").unlink()
    _train(workdir, capsys)
    assert (workdir / "toy.model").read_bytes() == first


def test_train_missing_schema_exits_2(workdir, capsys):
    code = main([
        "train", str(workdir / "toy.corpus"),
        "--schema", str(workdir / "nonexistent.schema"),
        "--out", str(workdir / "m"),
    ])
    assert code == 2
    assert "nonexistent.schema" in capsys.readouterr().err


def test_train_malformed_corpus_exits_1(workdir, capsys):
    bad = workdir / "bad.corpus"
    bad.write_text("word\tnosuchtag\n", encoding="utf-8")
    code = main([
        "train", str(bad),
        "--schema", str(workdir / "toy.schema"),
        "--out", str(workdir / "m"),
    ])
    assert code == 1
    assert "nosuchtag" in capsys.readouterr().err


def test_tag_empty_input(workdir, capsys):
    _train(workdir, capsys)
    empty = workdir / "empty.txt"
    empty.write_text("", encoding="utf-8")
    out = workdir / "empty.tagged"
    assert main(["tag", str(empty), "--model", str(workdir / "toy.model"),
                 "--out", str(out)]) == 0
    assert out.read_text(encoding="utf-8") == ""


def test_tag_output_matches_decoder_and_reparses(workdir, capsys):
    _train(workdir, capsys)
    out = workdir / "alpha.tagged"
    assert main(["tag", str(workdir / "texts" / "alpha.txt"),
                 "--model", str(workdir / "toy.model"), "--out", str(out)]) == 0

    schema = TagSchema.load(workdir / "toy.schema")
    tagged = load_annotated_corpus(out, schema)
    assert tagged and all(s.gold_tags is not None for s in tagged)

    from greektag.decode import tag_text
    from greektag.model import Model

    model = Model.load(workdir / "toy.model")
    pairs = tag_text(model, (workdir / "texts" / "alpha.txt").read_text(encoding="utf-8"))
    flat = [(t.surface, tag) for s in tagged for t, tag in zip(s.tokens, s.gold_tags)]
    assert flat == [(tok.surface, tag) for tok, tag in pairs]


def test_tag_bad_model_exits(workdir, capsys):
    bad = workdir / "bad.model"
    bad.write_text("garbage\n", encoding="utf-8")
    inp = workdir / "texts" / "alpha.txt"
    assert main(["tag", str(inp), "--model", str(bad),
                 "--out", str(workdir / "x")]) == 1


def test_count_sums_to_token_count(workdir, capsys):
    _train(workdir, capsys)
    tagged = workdir / "alpha.tagged"
    main(["tag", str(workdir / "texts" / "alpha.txt"),
          "--model", str(workdir / "toy.model"), "--out", str(tagged)])
    counts_path = workdir / "counts.csv"
    assert main(["count", str(tagged), "--schema", str(workdir / "toy.schema"),
                 "--out", str(counts_path)]) == 0
    counts = load_counts_csv(counts_path)
    schema = TagSchema.load(workdir / "toy.schema")
    tokens = sum(len(s) for s in load_annotated_corpus(tagged, schema))
    puncts = sum(
        1 for s in load_annotated_corpus(tagged, schema)
        for t in s.gold_tags if t.category == "punct"
    )
    assert counts[0].total == tokens - puncts


def test_retraining_on_tagger_output(workdir, capsys):
    _train(workdir, capsys)
    tagged = workdir / "alpha.tagged"
    main(["tag", str(workdir / "texts" / "alpha.txt"),
          "--model", str(workdir / "toy.model"), "--out", str(tagged)])
    code = main([
        "train", str(tagged),
        "--schema", str(workdir / "toy.schema"),
        "--rules", str(workdir / "toy.rules"),
        "--out", str(workdir / "retrained.model"),
    ])
    assert code == 0
    assert (workdir / "retrained.model").exists()


def test_count_duplicate_text_id_exits_1(workdir, capsys):
    _train(workdir, capsys)
    tagged = workdir / "alpha.tagged"
    main(["tag", str(workdir / "texts" / "alpha.txt"),
          "--model", str(workdir / "toy.model"), "--out", str(tagged)])
    code = main(["count", str(tagged), str(tagged),
                 "--schema", str(workdir / "toy.schema"),
                 "--out", str(workdir / "c.csv")])
    assert code == 1


def test_count_input_order_does_not_change_cells(workdir, capsys):
    _train(workdir, capsys)
    tagged = []
    for name in ("alpha", "beta"):
        out = workdir / f"{name}.tagged"
        main(["tag", str(workdir / "texts" / f"{name}.txt"),
              "--model", str(workdir / "toy.model"), "--out", str(out)])
        tagged.append(str(out))
    main(["count", *tagged, "--schema", str(workdir / "toy.schema"),
          "--out", str(workdir / "c1.csv")])
    main(["count", *reversed(tagged), "--schema", str(workdir / "toy.schema"),
          "--out", str(workdir / "c2.csv")])
    by_id_1 = {c.text_id: c.counts for c in load_counts_csv(workdir / "c1.csv")}
    by_id_2 = {c.text_id: c.counts for c in load_counts_csv(workdir / "c2.csv")}
    assert by_id_1 == by_id_2


def _write_pattern_csv(path, targets):
    from greektag.stylometry import save_counts_csv

    save_counts_csv(path, alpha_pattern_counts(targets))


def test_chisq_alpha_pattern(workdir, capsys):
    counts_path = workdir / "pattern.csv"
    _write_pattern_csv(counts_path, (7, 6, 7, 7, 6, 10))
    code = main(["chisq", str(counts_path), "--out", str(workdir / "report")])
    assert code == 0
    out = capsys.readouterr().out
    assert "flagged: t5" in out
    csv_text = (workdir / "report.csv").read_text(encoding="utf-8")
    rho_line = [l for l in csv_text.splitlines() if l.startswith("rho,")][0]
    values = [float(v) for v in rho_line.split(",")[1:]]
    expected = (-0.124, -0.868, -0.124, -0.124, -0.868, 2.109)
    assert all(abs(g - w) <= 1e-3 for g, w in zip(values, expected))
    assert (workdir / "report.txt").exists()


def test_chisq_degenerate_exits_0(workdir, capsys):
    from greektag.stylometry import CategoryCounts, save_counts_csv

    counts_path = workdir / "same.csv"
    save_counts_csv(counts_path,
                    [CategoryCounts(f"t{i}", {"a": 5, "b": 5}) for i in range(3)])
    code = main(["chisq", str(counts_path), "--out", str(workdir / "rep")])
    assert code == 0
    assert "degenerate" in capsys.readouterr().out


def test_chisq_too_few_texts_exits_1(workdir, capsys):
    from greektag.stylometry import CategoryCounts, save_counts_csv

    counts_path = workdir / "two.csv"
    save_counts_csv(counts_path,
                    [CategoryCounts(f"t{i}", {"a": 5, "b": 5}) for i in range(2)])
    assert main(["chisq", str(counts_path), "--out", str(workdir / "rep")]) == 1


def test_chisq_threshold_monotonicity(workdir, capsys):
    counts_path = workdir / "pattern.csv"
    _write_pattern_csv(counts_path, (2, 1, 2, 2, 1, 5))
    alphas = []
    for i, threshold in enumerate(["1.0", "3.841", "50.0"]):
        main(["chisq", str(counts_path), "--threshold", threshold,
              "--out", str(workdir / f"r{i}")])
        csv_text = (workdir / f"r{i}.csv").read_text(encoding="utf-8")
        alpha_line = [l for l in csv_text.splitlines() if l.startswith("alpha,")][0]
        alphas.append([int(v) for v in alpha_line.split(",")[1:]])
    for col in range(6):
        assert alphas[0][col] >= alphas[1][col] >= alphas[2][col]
