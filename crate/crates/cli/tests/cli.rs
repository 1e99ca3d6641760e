//! End-to-end checks of the `tailsum` binary: output text, exit codes, and
//! the files each command leaves behind.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tailsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailsum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn write_file(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn path_str(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn power_of_a_coin_flip_prints_the_exact_csv() {
    let dir = TempDir::new().unwrap();
    let bern = write_file(dir.path(), "bern05.csv", "0,0.5\n1,0.5\n");
    let out = tailsum(&["power", path_str(&bern), "2"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), "0,0.25\n1,0.5\n2,0.25\n");
}

#[test]
fn power_rejects_zero_folds_as_usage() {
    let dir = TempDir::new().unwrap();
    let bern = write_file(dir.path(), "bern05.csv", "0,0.5\n1,0.5\n");
    let out = tailsum(&["power", path_str(&bern), "0"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn missing_input_file_exits_2() {
    let out = tailsum(&["tail", "/nonexistent/d.csv", "1", "--upper"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("/nonexistent/d.csv"));
}

#[test]
fn malformed_distribution_exits_2_and_names_the_line() {
    let dir = TempDir::new().unwrap();
    let bad = write_file(dir.path(), "bad.csv", "0,0.5\nnot-a-number,0.5\n");
    let out = tailsum(&["tail", path_str(&bad), "1", "--upper"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "stderr: {}", stderr(&out));
}

#[test]
fn incompatible_lattices_exit_3() {
    let dir = TempDir::new().unwrap();
    let f = write_file(dir.path(), "f.csv", "0,0.5\n0.3,0.5\n");
    let g = write_file(dir.path(), "g.csv", "0,0.5\n0.2,0.5\n");
    let out = tailsum(&["convolve", path_str(&f), path_str(&g)]);
    assert_eq!(exit_code(&out), 3);
    assert!(stderr(&out).contains("0.3"), "stderr: {}", stderr(&out));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = TempDir::new().unwrap();
    let bern = write_file(dir.path(), "bern05.csv", "0,0.5\n1,0.5\n");
    // the directory itself is not a writable file
    let out = tailsum(&[
        "power",
        path_str(&bern),
        "2",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn tail_at_the_support_edges_is_one() {
    let dir = TempDir::new().unwrap();
    let bern = write_file(dir.path(), "bern05.csv", "0,0.5\n1,0.5\n");
    let upper = tailsum(&["tail", path_str(&bern), "0", "--upper"]);
    assert_eq!(stdout(&upper), "1\n");
    let lower = tailsum(&["tail", path_str(&bern), "1", "--lower"]);
    assert_eq!(stdout(&lower), "1\n");
}

#[test]
fn tail_requires_exactly_one_side() {
    let dir = TempDir::new().unwrap();
    let bern = write_file(dir.path(), "bern05.csv", "0,0.5\n1,0.5\n");
    let neither = tailsum(&["tail", path_str(&bern), "0"]);
    assert_eq!(exit_code(&neither), 2);
    let both = tailsum(&["tail", path_str(&bern), "0", "--upper", "--lower"]);
    assert_eq!(exit_code(&both), 2);
}

#[test]
fn check_clt_prints_a_verdict_and_always_exits_0() {
    let dir = TempDir::new().unwrap();
    let bern = write_file(dir.path(), "bern05.csv", "0,0.5\n1,0.5\n");
    // a single coin flip is nowhere near normal
    let fail = tailsum(&["check-clt", path_str(&bern)]);
    assert_eq!(exit_code(&fail), 0);
    assert!(stdout(&fail).starts_with("FAIL\n"), "{}", stdout(&fail));

    // the sum of 200 flips is
    let sum = dir.path().join("sum200.csv");
    let power = tailsum(&["power", path_str(&bern), "200", "--out", path_str(&sum)]);
    assert_eq!(exit_code(&power), 0);
    let pass = tailsum(&["check-clt", path_str(&sum)]);
    assert_eq!(exit_code(&pass), 0);
    assert!(stdout(&pass).starts_with("PASS\n"), "{}", stdout(&pass));
    // symmetric population: skewness is zero up to accumulation noise
    let report = stdout(&pass);
    let skew_line = report
        .lines()
        .find(|l| l.starts_with("skewness "))
        .expect("skewness line");
    let skew: f64 = skew_line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(skew.abs() < 1e-9, "{skew_line}");
}

#[test]
fn identity_transform_reproduces_the_input() {
    let dir = TempDir::new().unwrap();
    let text = "-3,0.25\n0,0.5\n3,0.25\n";
    let d = write_file(dir.path(), "d.csv", text);
    let out = tailsum(&["transform", path_str(&d), "--a", "1", "--b", "0"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), text);
}

#[test]
fn transform_accepts_negative_scale() {
    let dir = TempDir::new().unwrap();
    let d = write_file(dir.path(), "d.csv", "0,0.75\n1,0.25\n");
    let out = tailsum(&["transform", path_str(&d), "--a", "-1", "--b", "0"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), "-1,0.25\n0,0.75\n");
}

#[test]
fn table_bins_cover_the_mass() {
    let dir = TempDir::new().unwrap();
    let sixth = 1.0 / 6.0;
    let die: String = (1..=6).map(|v| format!("{v},{sixth}\n")).collect();
    let d = write_file(dir.path(), "die.csv", &die);
    let out = tailsum(&["table", path_str(&d), "--width", "2"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lower,probability"));
    let mut total = 0.0;
    let mut bins = 0;
    for line in lines {
        let (_, p) = line.split_once(',').unwrap();
        total += p.parse::<f64>().unwrap();
        bins += 1;
    }
    // classes [0,2), [2,4), [4,6), [6,8)
    assert_eq!(bins, 4);
    assert!((total - 1.0).abs() < 1e-9, "bins sum to {total}");
}

#[test]
fn table_rejects_a_zero_width() {
    let dir = TempDir::new().unwrap();
    let d = write_file(dir.path(), "d.csv", "0,0.5\n1,0.5\n");
    let out = tailsum(&["table", path_str(&d), "--width", "0"]);
    assert_eq!(exit_code(&out), 2);
}

/// The lottery comparison: one ticket against ten. Piped through the
/// binary exactly as a user would: `power`, then `subtract`, then `tail`.
#[test]
fn lottery_pipeline_reproduces_the_reference_tails() {
    let dir = TempDir::new().unwrap();
    let total = 13_000_000u64;
    let rows: [(u64, u64); 10] = [
        (40_000_000, 7),
        (10_000_000, 19), // two prize tiers share this value
        (1_000_000, 130),
        (200_000, 903),
        (140_000, 130),
        (100_000, 645),
        (10_000, 1_300),
        (1_000, 26_000),
        (200, 1_300_000),
        (0, 11_670_866),
    ];
    assert_eq!(rows.iter().map(|&(_, n)| n).sum::<u64>(), total);
    let text: String = rows
        .iter()
        .map(|&(value, count)| format!("{value},{}\n", count as f64 / total as f64))
        .collect();
    let f = write_file(dir.path(), "lottery.csv", &text);

    let ten = dir.path().join("ten.csv");
    let power = tailsum(&["power", path_str(&f), "10", "--out", path_str(&ten)]);
    assert_eq!(exit_code(&power), 0, "{}", stderr(&power));

    let y = dir.path().join("y.csv");
    let subtract = tailsum(&["subtract", path_str(&f), path_str(&ten), "--out", path_str(&y)]);
    assert_eq!(exit_code(&subtract), 0, "{}", stderr(&subtract));

    // P(Y > 0) on the 200-yen lattice is the mass from 200 upward
    let win = tailsum(&["tail", path_str(&y), "200", "--upper"]);
    let p_win: f64 = stdout(&win).trim().parse().unwrap();
    assert!((p_win - 0.03620).abs() < 0.00005, "P(Y>0) = {p_win}");

    let near = tailsum(&["tail", path_str(&y), "-200", "--upper"]);
    let p_near: f64 = stdout(&near).trim().parse().unwrap();
    assert!((p_near - 0.7385).abs() < 0.0005, "P(Y>=-200) = {p_near}");
}

#[test]
fn long_bernoulli_ladder_keeps_every_key() {
    let dir = TempDir::new().unwrap();
    let bern = write_file(dir.path(), "bern001.csv", "0,0.999\n1,0.001\n");
    let out_path = dir.path().join("sum5001.csv");
    let out = tailsum(&[
        "power",
        path_str(&bern),
        "5001",
        "--out",
        path_str(&out_path),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 5002);
    assert!(text.starts_with("0,"));
}

const EVENTS: &str = "item,visitor,compensation\n\
A,u1,1\nA,u2,1\nA,u3,2\n\
B,u1,2\nB,u2,2\nB,u3,2\n\
C,u1,3\nC,u2,3\nC,u3,3\n";

#[test]
fn rarity_scores_every_item_against_its_own_population() {
    let dir = TempDir::new().unwrap();
    let events = write_file(dir.path(), "events.csv", EVENTS);
    let report = dir.path().join("report.csv");
    let out = tailsum(&["rarity", path_str(&events), "--out", path_str(&report)]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));

    let text = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "item,n,t,avg_spend,p_t,p_z,log_ratio,l,l_prime");
    assert_eq!(lines.len(), 4, "three items scored:\n{text}");
    assert!(lines[1].starts_with("A,3,4,"));
    assert!(lines[3].starts_with("C,3,9,"));

    let quarantine = fs::read_to_string(dir.path().join("report.quarantine.csv")).unwrap();
    assert_eq!(quarantine, "item,n,t,reason\n");
}

#[test]
fn rarity_quarantines_totals_an_external_population_cannot_reach() {
    let dir = TempDir::new().unwrap();
    let events = write_file(dir.path(), "events.csv", EVENTS);
    // this population caps a 3-visitor total at 6, so C's 9 is unreachable
    let g = write_file(dir.path(), "g.csv", "1,0.5\n2,0.5\n");
    let report = dir.path().join("report.csv");
    let out = tailsum(&[
        "rarity",
        path_str(&events),
        "--out",
        path_str(&report),
        "--dist",
        path_str(&g),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));

    let text = fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 3, "A and B scored:\n{text}");

    let quarantine = fs::read_to_string(dir.path().join("report.quarantine.csv")).unwrap();
    let lines: Vec<&str> = quarantine.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("C,3,9,"));
    assert!(lines[1].contains("unreachable"), "{quarantine}");
}

#[test]
fn rarity_writes_pr_and_divergence_tables_on_request() {
    let dir = TempDir::new().unwrap();
    let events = write_file(dir.path(), "events.csv", EVENTS);
    let report = dir.path().join("scores.csv");
    let out = tailsum(&[
        "rarity",
        path_str(&events),
        "--out",
        path_str(&report),
        "--pr-curve",
        "0:3:0.5",
        "--divergence",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));

    let pr = fs::read_to_string(dir.path().join("scores.pr.csv")).unwrap();
    assert!(pr.starts_with("a,precision,recall\n"));
    assert_eq!(pr.lines().count(), 8, "header + 7 thresholds:\n{pr}");

    let divergence = fs::read_to_string(dir.path().join("scores.divergence.csv")).unwrap();
    assert!(divergence.starts_with("n,log_ratio\n"));
}

#[test]
fn rarity_rejects_a_malformed_sweep() {
    let dir = TempDir::new().unwrap();
    let events = write_file(dir.path(), "events.csv", EVENTS);
    let report = dir.path().join("report.csv");
    let out = tailsum(&[
        "rarity",
        path_str(&events),
        "--out",
        path_str(&report),
        "--pr-curve",
        "3:1:0.5",
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn gen_synth_depends_only_on_the_seed() {
    let dir = TempDir::new().unwrap();
    let visitors = write_file(dir.path(), "vis.csv", "3,0.5\n5,0.5\n");
    let comp = write_file(dir.path(), "comp.csv", "1,0.6\n2,0.4\n");
    let gen = |seed: &str, name: &str| -> Vec<u8> {
        let path = dir.path().join(name);
        let out = tailsum(&[
            "gen-synth",
            "--items",
            "50",
            "--visitors",
            path_str(&visitors),
            "--compensation",
            path_str(&comp),
            "--seed",
            seed,
            "--out",
            path_str(&path),
        ]);
        assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
        fs::read(&path).unwrap()
    };
    let first = gen("5", "a.csv");
    let second = gen("5", "b.csv");
    let other = gen("6", "c.csv");
    assert_eq!(first, second);
    assert_ne!(first, other);
}

#[test]
fn gen_synth_rejects_fractional_support() {
    let dir = TempDir::new().unwrap();
    let visitors = write_file(dir.path(), "vis.csv", "2.5,1\n");
    let comp = write_file(dir.path(), "comp.csv", "1,1\n");
    let out = tailsum(&[
        "gen-synth",
        "--items",
        "3",
        "--visitors",
        path_str(&visitors),
        "--compensation",
        path_str(&comp),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("visitor count"), "{}", stderr(&out));
}

#[test]
fn stdout_and_out_file_carry_the_same_bytes() {
    let dir = TempDir::new().unwrap();
    let bern = write_file(dir.path(), "bern05.csv", "0,0.5\n1,0.5\n");
    let to_stdout = tailsum(&["power", path_str(&bern), "7"]);
    let file = dir.path().join("power7.csv");
    let to_file = tailsum(&["power", path_str(&bern), "7", "--out", path_str(&file)]);
    assert_eq!(exit_code(&to_stdout), 0);
    assert_eq!(exit_code(&to_file), 0);
    assert_eq!(to_stdout.stdout, fs::read(&file).unwrap());
}
