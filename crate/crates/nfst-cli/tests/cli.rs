//! End-to-end tests of the `nfst` binary: exit codes, output formats, and
//! the documented error surface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nfst::overlay::{load_image, save_image};

const HELLO_RULES: &str = "../../rulesets/hello.rules";
const HELLO_LP_RULES: &str = "../../rulesets/hello_lp.rules";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nfst"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nfst-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Compile the golden length-preserving machine to a temp image.
fn golden_image(name: &str) -> PathBuf {
    let img = tmp(name);
    let out = run(&[
        "compile",
        HELLO_LP_RULES,
        "--rows",
        "4",
        "--cols",
        "4",
        "-o",
        img.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    img
}

fn write_input(name: &str, bytes: &[u8]) -> PathBuf {
    let path = tmp(name);
    std::fs::write(&path, bytes).unwrap();
    path
}

#[test]
fn compile_prints_placement_summary() {
    let img = tmp("summary.img");
    let out = run(&[
        "compile",
        HELLO_LP_RULES,
        "--rows",
        "4",
        "--cols",
        "4",
        "-o",
        img.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "5 PEs occupied, 0 replications\n");
    assert!(img.exists());
}

#[test]
fn compile_quiet_prints_nothing() {
    let img = tmp("quiet.img");
    let out = run(&["compile", HELLO_LP_RULES, "-o", img.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
}

#[test]
fn compile_writes_json_dump_on_request() {
    let img = tmp("dump.img");
    let dump = tmp("dump.json");
    let out = run(&[
        "compile",
        HELLO_LP_RULES,
        "-o",
        img.to_str().unwrap(),
        "--json-dump",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!(v["grid"]["rows"], 4);
    assert_eq!(v["edge_map"].as_array().unwrap().len(), 5);
}

#[test]
fn compile_rejects_non_length_preserving_machine() {
    let out = run(&["compile", HELLO_RULES, "-o", tmp("nlp.img").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(6));
    assert!(stderr(&out).contains("length-preserving"));
}

#[test]
fn compile_rejects_overfull_grid() {
    let out = run(&[
        "compile",
        HELLO_LP_RULES,
        "--rows",
        "2",
        "--cols",
        "2",
        "-o",
        tmp("full.img").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(8));
}

#[test]
fn compile_reports_parse_errors_with_position() {
    let bad = write_input("bad.rules", b"states: 2\nstart: 0\naccept: 1\ntrans: 0 1\n");
    let out = run(&["compile", bad.to_str().unwrap(), "-o", tmp("x.img").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("line 4"));
}

#[test]
fn compile_reports_validation_errors() {
    // parses fine, fails validation: ε input with a byte output
    let bad = write_input("val.rules", b"states: 2\nstart: 0\naccept: 1\ntrans: 0 1 ~:x\n");
    let out = run(&["compile", bad.to_str().unwrap(), "-o", tmp("y.img").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn compile_missing_file_is_io_error() {
    let out = run(&["compile", "/nonexistent/path.rules", "-o", tmp("z.img").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_text_report_matches_golden_cycles() {
    let img = golden_image("run1.img");
    let input = write_input("run1.txt", b"hellohello");
    let out = run(&["run", img.to_str().unwrap(), input.to_str().unwrap(), "-n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("matched"), "{text}");
    assert!(text.contains("total cycles: 74 (n=5, m=16)"), "{text}");
}

#[test]
fn run_json_total_matches_window_sum() {
    let img = golden_image("run2.img");
    let input = write_input("run2.txt", b"helloworldhello");
    let out = run(&[
        "run",
        img.to_str().unwrap(),
        input.to_str().unwrap(),
        "-n",
        "5",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    let total = v["total_cycles"].as_u64().unwrap();
    let sum: u64 =
        v["windows"].as_array().unwrap().iter().map(|w| w["cycles"].as_u64().unwrap()).sum();
    assert_eq!(total, sum);
    assert_eq!(total, 37 + 16 + 37);
    assert_eq!(v["windows"][1]["outcome"], "discarded");
}

#[test]
fn run_discarded_windows_are_not_errors() {
    let img = golden_image("run3.img");
    let input = write_input("run3.txt", b"zzzzzzzzzz");
    let out = run(&["run", img.to_str().unwrap(), input.to_str().unwrap(), "-n", "5"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn run_empty_input_is_an_empty_report() {
    let img = golden_image("run4.img");
    let input = write_input("run4.txt", b"");
    let out = run(&["run", img.to_str().unwrap(), input.to_str().unwrap(), "-n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("total cycles: 0"));
}

#[test]
fn run_window_length_zero_is_a_usage_error() {
    let img = golden_image("run5.img");
    let input = write_input("run5.txt", b"hello");
    let out = run(&["run", img.to_str().unwrap(), input.to_str().unwrap(), "-n", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_rejects_corrupted_image() {
    let img = golden_image("run6.img");
    let mut bytes = std::fs::read(&img).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x55;
    let corrupted = write_input("run6-bad.img", &bytes);
    let input = write_input("run6.txt", b"hello");
    let out = run(&["run", corrupted.to_str().unwrap(), input.to_str().unwrap(), "-n", "5"]);
    assert_eq!(out.status.code(), Some(10));
    assert!(stderr(&out).contains("checksum"));
}

#[test]
fn run_trace_goes_to_stderr() {
    let img = golden_image("run7.img");
    let input = write_input("run7.txt", b"hello");
    let out = run(&[
        "run",
        img.to_str().unwrap(),
        input.to_str().unwrap(),
        "-n",
        "5",
        "--trace",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let err = stderr(&out);
    assert!(err.contains("win=0 cyc=") && err.contains("sym=0x68"), "{err}");
    // report still lands on stdout
    assert!(stdout(&out).contains("total cycles: 37"));
}

#[test]
fn run_engine_error_reports_window_index() {
    // adversarial all-match pair overflows its 4-entry activation bound
    let rules = write_input(
        "adv.rules",
        b"states: 2\nstart: 0\naccept: 0 1\ntrans: 0 1 [\\x00-\\xff]:a\ntrans: 1 0 [\\x00-\\xff]:a\n",
    );
    let img = tmp("adv.img");
    let out = run(&[
        "compile",
        rules.to_str().unwrap(),
        "--rows",
        "1",
        "--cols",
        "2",
        "-o",
        img.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let input = write_input("adv.txt", b"aaaaaaaa");
    let out = run(&["run", img.to_str().unwrap(), input.to_str().unwrap(), "-n", "8"]);
    assert_eq!(out.status.code(), Some(11));
    assert!(stderr(&out).contains("window 0"));
    assert!(stderr(&out).contains("overflow"));
}

#[test]
fn verify_golden_ruleset_passes() {
    let out = run(&["verify", HELLO_LP_RULES, "--cases", "100", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("seed=3"));
    assert!(text.contains("100/100 pass"), "{text}");
}

#[test]
fn verify_zero_cases_is_a_vacuous_pass() {
    let out = run(&["verify", HELLO_LP_RULES, "--cases", "0", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("0/0 pass"));
    assert!(stdout(&out).contains("warning"));
}

#[test]
fn verify_random_machines_pass() {
    let out = run(&["verify", "--random", "--cases", "30", "--seed", "11"]);
    assert_eq!(out.status.code(), Some(0), "{} {}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("30/30 pass"));
}

#[test]
fn verify_needs_a_ruleset_or_random() {
    let out = run(&["verify", "--cases", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_catches_a_corrupted_tram_byte() {
    let img_path = golden_image("mut.img");
    let bytes = std::fs::read(&img_path).unwrap();
    let mut image = load_image(&bytes).unwrap();
    // flip the output byte of some occupied PE; save_image recomputes the
    // checksum so the corruption survives loading
    let pe = image.occupied().next().unwrap().0;
    image.tram.entries[pe.index()] = Some(b'Z');
    let corrupted = write_input("mut-bad.img", &save_image(&image));

    let out = run(&[
        "verify",
        HELLO_LP_RULES,
        "--image",
        corrupted.to_str().unwrap(),
        "--cases",
        "60",
        "--seed",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(12), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("first counterexample:"), "{text}");
    assert!(text.contains("machine:"), "{text}");
    assert!(text.contains("n="), "{text}");
}

#[test]
fn sweep_emits_csv_rows() {
    let out = run(&["sweep", "4x4,8x8,16x16"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "m,occupied,match_ram_bits,tram_bits,vector_bits,fifo_bits,total_bits");
    assert!(lines[1].starts_with("16,"));
    assert!(lines[3].starts_with("256,"));
}

#[test]
fn sweep_single_size_frozen_total() {
    let out = run(&["sweep", "1x1", "--fifo", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("1,0,256,8,1,4,269"));
}

#[test]
fn sweep_writes_csv_file() {
    let csv = tmp("sweep.csv");
    let out = run(&["sweep", "yes4x4", "-o", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2)); // malformed size
    let out = run(&["sweep", "4x4", "-o", csv.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(0));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert!(body.ends_with("16,0,4096,128,1024,4096,9344\n"));
}

#[test]
fn sweep_empty_sizes_is_a_usage_error() {
    let out = run(&["sweep", ""]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_documents_exit_codes() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("EXIT CODES"));
    assert!(stdout(&out).contains("12  verification found a counterexample"));
}

/// The relative ruleset paths above resolve against the crate directory
/// cargo uses as the test working directory.
#[test]
fn ruleset_fixtures_exist() {
    assert!(Path::new(HELLO_RULES).exists());
    assert!(Path::new(HELLO_LP_RULES).exists());
}
