use std::path::{Path, PathBuf};
use std::process::Command as Process;

use sft_torsion::report::Certificate;
use sft_torsion::{emit, parse_document, parse_report, replay_report, run, AnalysisRequest, Command, Format, Status};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{name}.json"))
}

fn request(name: &str, command: Command, seed: Option<u64>) -> AnalysisRequest {
    let text = std::fs::read_to_string(corpus(name)).unwrap();
    AnalysisRequest { command, document: parse_document(&text).unwrap(), seed }
}

fn bin(args: &[&str]) -> (i32, String, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_sft-torsion")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn torsion_on_v22_gives_upper_one_and_lower_zero() {
    let r = run(&request("v22", Command::Torsion, None));
    assert_eq!(r.status, Status::Complete);
    assert_eq!(r.exit_code, 0);
    let t = r.sections.torsion.as_ref().unwrap();
    assert_eq!(t.upper, Some(1));
    assert_eq!(t.lower, Some(0));
    assert!(r.certificates.iter().any(|c| matches!(c, Certificate::TorsionUpper { k: 1, .. })));
    assert!(r.certificates.iter().any(|c| matches!(c, Certificate::TorsionLower { k: 0, .. })));
}

#[test]
fn witness_text_is_canonical() {
    let r = run(&request("v22", Command::Torsion, None));
    let text = emit(&r, Format::Text);
    assert!(text.contains("witness: q[h1] q[e2]"), "{text}");
    let r = run(&request("no_giroux", Command::Torsion, None));
    let t = r.sections.torsion.as_ref().unwrap();
    assert_eq!(t.upper, Some(1));
    let w = t.witness.as_ref().unwrap();
    assert!(emit(&r, Format::Text).contains(&format!("witness: {w}")));
    // Canonical words follow the critical point order reported by `morse`.
    let m = run(&request("no_giroux", Command::Morse, None));
    let order: Vec<String> = m.sections.morse.unwrap().critical_points.into_iter().map(|p| p.id).collect();
    let mut factors: Vec<&str> = w.split(' ').map(|f| f.trim_start_matches("q[").trim_end_matches(']')).collect();
    assert_eq!(factors.len(), 2);
    let unsorted = factors.clone();
    factors.sort_by_key(|f| order.iter().position(|o| o == f).unwrap());
    assert_eq!(factors, unsorted, "{w}");
}

#[test]
fn ech_f_on_toy_is_zero() {
    let r = run(&request("ech_toy_overtwisted", Command::EchF, None));
    let e = r.sections.ech.as_ref().unwrap();
    assert_eq!(e.f, "0");
    assert!(e.agree);
    let r = run(&request("ech_v22_planar", Command::EchF, None));
    let e = r.sections.ech.as_ref().unwrap();
    assert_eq!((e.f.as_str(), e.sufficient, e.certified), ("1", Some(1), Some(1)));
}

#[test]
fn mismatched_boundary_is_a_validation_failure() {
    let path = corpus("invalid_boundary_mismatch");
    let (code, out, _) = bin(&["--input", path.to_str().unwrap(), "--command", "validate", "--format", "json"]);
    assert_eq!(code, 2);
    let r = parse_report(&out).unwrap();
    assert_eq!(r.status, Status::Invalid);
    assert!(r.error.unwrap().locus.unwrap().starts_with("/surface/"));
}

#[test]
fn schema_errors_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"planar_torsion": {"m": 0, "n": -1}}"#).unwrap();
    let (code, out, _) = bin(&["--input", p.to_str().unwrap(), "--command", "torsion", "--format", "json"]);
    assert_eq!(code, 2);
    assert_eq!(parse_report(&out).unwrap().error.unwrap().locus.as_deref(), Some("/planar_torsion/n"));
    std::fs::write(&p, r#"{"planar_torsion": {"m": 0, "n": 2}, "surface": null}"#).unwrap();
    let (code, _, _) = bin(&["--input", p.to_str().unwrap(), "--command", "torsion"]);
    assert_eq!(code, 0);
}

#[test]
fn usage_errors_exit_with_one() {
    let path = corpus("v22");
    let (code, _, err) = bin(&["--input", path.to_str().unwrap(), "--command", "nope"]);
    assert_eq!(code, 1);
    assert!(err.contains("nope"));
    let (code, _, _) = bin(&["--input", "/nonexistent/doc.json", "--command", "validate"]);
    assert_eq!(code, 1);
    let toy = corpus("ech_toy_overtwisted");
    let (code, _, _) = bin(&["--input", toy.to_str().unwrap(), "--command", "morse"]);
    assert_eq!(code, 1);
}

#[test]
fn refusal_exits_with_three() {
    let path = corpus("planar_v2_twisted");
    let (code, _, err) = bin(&["--input", path.to_str().unwrap(), "--command", "torsion"]);
    assert_eq!(code, 3);
    assert!(err.contains("status: refused"));
}

#[test]
fn flags_override_the_document() {
    let path = corpus("planar_k0_1");
    let p = path.to_str().unwrap();
    let (code, out, _) = bin(&["--input", p, "--command", "torsion", "--omega", "0,0,1", "--format", "json"]);
    assert_eq!(code, 3);
    let r = parse_report(&out).unwrap();
    assert_eq!(r.sections.torsion.unwrap().omega_separating, Some(false));
    let (code, out, _) = bin(&["--input", p, "--command", "torsion", "--hbar-bound", "0", "--format", "json"]);
    assert_eq!(code, 3);
    assert_eq!(parse_report(&out).unwrap().truncation.unwrap().hbar_bound, 0);
    let (code, _, _) = bin(&["--input", p, "--command", "torsion", "--action-bound", "0"]);
    assert_eq!(code, 2);
    let (code, out, _) = bin(&["--input", p, "--command", "torsion", "--action-bound", "9/2", "--format", "json"]);
    assert_eq!(code, 0);
    assert_eq!(parse_report(&out).unwrap().truncation.unwrap().action_bound, "9/2".parse().unwrap());
}

#[test]
fn json_reports_are_deterministic() {
    let path = corpus("no_giroux");
    let args = ["--input", path.to_str().unwrap(), "--command", "torsion", "--format", "json", "--seed", "42"];
    let (c1, a, _) = bin(&args);
    let (c2, b, _) = bin(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let (_, c, _) = bin(&["--input", path.to_str().unwrap(), "--command", "torsion", "--format", "json", "--seed", "43"]);
    assert_ne!(a, c);
}

#[test]
fn json_round_trips() {
    for (name, cmd) in [("v33", Command::Torsion), ("ech_v22_planar", Command::EchF), ("planar_k0_2", Command::Enumerate), ("v32", Command::Morse)] {
        let r = run(&request(name, cmd, Some(5)));
        let back = parse_report(&emit(&r, Format::Json)).unwrap();
        assert_eq!(back, r, "{name}");
    }
}

#[test]
fn count_keys_are_sorted() {
    for name in ["v33", "no_giroux", "ech_v22_planar"] {
        let cmd = if name.starts_with("ech") { Command::EchF } else { Command::Torsion };
        let r = run(&request(name, cmd, None));
        assert_eq!(r.counts.is_empty(), name == "no_giroux", "{name}");
        let keys: Vec<(&str, &str)> = r.counts.iter().map(|c| (c.table.as_str(), c.key.as_str())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}

#[test]
fn certificates_replay() {
    for (name, cmd) in [
        ("v22", Command::Torsion),
        ("v33", Command::Torsion),
        ("no_giroux", Command::Torsion),
        ("planar_k0_3", Command::Torsion),
        ("ech_v22_planar", Command::EchF),
        ("no_giroux", Command::EchF),
    ] {
        let r = run(&request(name, cmd, None));
        assert!(!r.certificates.is_empty(), "{name}");
        let v = replay_report(&parse_report(&emit(&r, Format::Json)).unwrap());
        let sec = v.sections.validation.unwrap();
        assert_eq!(v.exit_code, 0, "{name}: {:?}", sec.replay_failures);
        assert_eq!(sec.replayed, r.certificates.len());
    }
}

#[test]
fn tampered_witness_fails_replay() {
    let r = run(&request("v22", Command::Torsion, None));
    let mut json: serde_json::Value = serde_json::from_str(&emit(&r, Format::Json)).unwrap();
    let cert = json["certificates"].as_array_mut().unwrap().iter_mut().find(|c| c["kind"] == "torsion_upper").unwrap();
    cert["witness"]["terms"][0]["coeff"] = "2".into();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("report.json");
    std::fs::write(&p, serde_json::to_string(&json).unwrap()).unwrap();
    let (code, _, err) = bin(&["--input", p.to_str().unwrap(), "--command", "validate"]);
    assert_eq!(code, 4);
    assert!(err.contains("FAILED"));
    let (code, _, _) = bin(&["--input", p.to_str().unwrap(), "--command", "torsion"]);
    assert_eq!(code, 1);
}

#[test]
fn tampered_chain_fails_replay() {
    let r = run(&request("ech_v22_planar", Command::EchF, None));
    let mut json: serde_json::Value = serde_json::from_str(&emit(&r, Format::Json)).unwrap();
    for c in json["certificates"].as_array_mut().unwrap() {
        if c["kind"] == "ech_sufficient" {
            c["chain"][0]["coeff"] = "3".into();
        }
    }
    let back = parse_report(&serde_json::to_string(&json).unwrap()).unwrap();
    let v = replay_report(&back);
    assert_eq!(v.status, Status::InvariantBreach);
    assert_eq!(v.sections.validation.unwrap().replay_failures.len(), 1);
}

#[test]
fn text_output_has_certificate_ledger() {
    let r = run(&request("ech_v22_planar", Command::EchF, None));
    let text = emit(&r, Format::Text);
    assert!(text.contains("[certificates]"));
    assert!(text.contains("(∂0+∂1)"), "{text}");
    assert!(text.contains("f = 1"));
}
