use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use patent_retrieval::corpus::{write_edges, write_patents};
use patent_retrieval::synthetic::demo_corpus;
use patent_retrieval::vectors::VectorTable;

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patent-retrieval"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = bin(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["retrieve", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn data_errors_print_one_coded_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.tsv"), "patent_id\ttitle\tabstract\tcpc_codes\nP1\tt\ta\tA01\nP1\tt\ta\tA01\n").unwrap();
    let out = bin(dir.path(), &["ingest", "--patents", "p.tsv"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("error: ")).collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with("error: DUPLICATE_ID: "), "{err}");
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.conf"), "nonsense.key = 3\n").unwrap();
    let out = bin(dir.path(), &["--config", "c.conf", "demo-synthetic", "--out-dir", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn subcommands_chain_into_a_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let demo = demo_corpus(15, 3);
    write_patents(&demo.corpus, &d.join("patents.tsv")).unwrap();
    write_edges(&demo.citations, &d.join("citations.tsv")).unwrap();
    write_edges(&demo.inventors, &d.join("inventors.tsv")).unwrap();

    ok(d, &["ingest", "--patents", "patents.tsv", "--citations", "citations.tsv", "--inventors", "inventors.tsv"]);
    assert!(fs::read_to_string(d.join("validation.tsv")).unwrap().contains("patents"));

    ok(d, &["build-kg", "--graph", "citation", "--out", "citation.triples.tsv"]);
    assert!(fs::read_to_string(d.join("citation.triples.tsv")).unwrap().contains("\tcite\t"));

    for g in ["citation", "inventor"] {
        ok(d, &["--seed", "5", "train-kg", "--graph", g, "--dim", "8", "--epochs", "5", "--holdout", "5"]);
        assert!(d.join(format!("{g}.emb")).exists());
        assert!(d.join(format!("{g}.loss.tsv")).exists());
    }
    ok(d, &["embed-text", "--patents", "patents.tsv", "--dim", "8"]);
    ok(d, &[
        "fuse", "--spec", "[A, B, C]", "--patents", "patents.tsv",
        "--text", "text.emb", "--citation", "citation.emb", "--inventor", "inventor.emb",
    ]);
    let fused = VectorTable::load(&d.join("fused.emb")).unwrap();
    assert_eq!(fused.dim(), 24);
    assert_eq!(fused.len(), demo.corpus.len());

    ok(d, &[
        "--seed", "5", "select-embedding", "--patents", "patents.tsv", "--text", "text.emb",
        "--citation", "citation.emb", "--specs", "A,B,A + B", "--epochs", "2", "--hidden", "8",
    ]);
    assert_eq!(fs::read_to_string(d.join("selection.tsv")).unwrap().lines().count(), 4);

    let ids: Vec<&str> = demo.corpus.records().iter().map(|r| r.patent_id.as_str()).collect();
    fs::write(d.join("seeds.txt"), ids[..3].join("\n")).unwrap();
    fs::write(d.join("holdout.txt"), ids[3..6].join("\n")).unwrap();

    // Raw graph tables hold out-of-corpus entities; --patents drops them.
    ok(d, &["retrieve", "--seeds", "seeds.txt", "--embeddings", "citation.emb", "--patents", "patents.tsv", "--k", "10"]);
    let ranked = fs::read_to_string(d.join("ranked.tsv")).unwrap();
    let rows: Vec<&str> = ranked.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| demo.corpus.contains(r.split('\t').nth(1).unwrap())), "{ranked}");

    ok(d, &["eval-recall", "--seeds", "seeds.txt", "--holdout", "holdout.txt", "--embeddings", "fused.emb"]);
    assert_eq!(fs::read_to_string(d.join("auc.tsv")).unwrap().lines().count(), 5);

    ok(d, &[
        "concepts", "--initial", "seeds.txt", "--retrieved", "ranked.tsv", "--patents", "patents.tsv",
        "--keywords", "rolling toy", "--min-freq", "1",
    ]);
    assert!(fs::read_to_string(d.join("diff.tsv")).unwrap().contains("rolling toy"));
}
