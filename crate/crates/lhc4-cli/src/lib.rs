//! Command implementations behind the `lhc4` binary.
//!
//! Exit-code contract: 0 success, 1 invalid input object, 2 negative
//! mathematical outcome (unsplittable code, unsupported order, or
//! counterexamples found), 3 usage or parse error.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lhc4::completion::{complete, split_2fold, CompletionError};
use lhc4::fileio::{self, Document};
use lhc4::qcore::{QuasigroupTable, ValidationResult};
use lhc4::structure::{
    canonical_decomposition, is_completely_reducible, is_reducible, is_semilinear, DecompNode,
};
use lhc4::verify::{
    find_unsplittable, verify_base_cases, verify_prop1, verify_theorem_cuboids, Budget, RunMode,
    VerificationReport, VerifyError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

fn read_document(path: &Path, out: &mut dyn Write) -> Result<Document, i32> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(out, "error: cannot read {}: {e}", path.display());
            return Err(EXIT_USAGE);
        }
    };
    match fileio::parse_document(&text) {
        Ok(doc) => Ok(doc),
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            Err(EXIT_USAGE)
        }
    }
}

/// `validate FILE`: prints OK or the first violating line.
pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> i32 {
    let doc = match read_document(path, out) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let table = match doc {
        Document::Table { table, .. } => table,
        Document::Code(_) => {
            let _ = writeln!(out, "error: expected a table document");
            return EXIT_USAGE;
        }
    };
    match table.validate() {
        ValidationResult::Valid => {
            let _ = writeln!(out, "OK");
            EXIT_OK
        }
        ValidationResult::LineViolation { axis, fixed } => {
            let coords: Vec<String> = fixed.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(
                out,
                "line violation: axis {axis}, fixed coordinates [{}]",
                coords.join(" ")
            );
            EXIT_INVALID
        }
    }
}

/// `complete FILE [-o OUT]`: writes the completed hypercube in the input's
/// syntax.
pub fn cmd_complete(path: &Path, output: Option<&Path>, out: &mut dyn Write) -> i32 {
    let doc = match read_document(path, out) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let (table, kind) = match doc {
        Document::Table { table, kind } => (table, kind),
        Document::Code(_) => {
            let _ = writeln!(out, "error: expected a table document");
            return EXIT_USAGE;
        }
    };
    match complete(&table) {
        Ok(cube) => {
            let rendered = fileio::table_to_string(cube.as_table(), kind);
            match output {
                Some(p) => {
                    if let Err(e) = fs::write(p, rendered) {
                        let _ = writeln!(out, "error: cannot write {}: {e}", p.display());
                        return EXIT_USAGE;
                    }
                }
                None => {
                    let _ = write!(out, "{rendered}");
                }
            }
            EXIT_OK
        }
        Err(CompletionError::UnsupportedOrder(n)) => {
            let _ = writeln!(out, "error: unsupported order {n}: completion requires order 4");
            EXIT_NEGATIVE
        }
        Err(CompletionError::TheoremViolation { cuboid }) => {
            let dump = match output {
                Some(p) => {
                    let mut d = p.to_path_buf();
                    d.set_extension("counterexample");
                    d
                }
                None => PathBuf::from("theorem-violation.counterexample"),
            };
            let _ = fs::write(&dump, fileio::table_to_text(&cuboid));
            let _ = writeln!(
                out,
                "internal theorem violation: complement code did not split; \
                 offending cuboid dumped to {}",
                dump.display()
            );
            EXIT_NEGATIVE
        }
        Err(_) => {
            let _ = writeln!(out, "error: input is not a valid latin hypercuboid");
            EXIT_INVALID
        }
    }
}

fn render_decomposition(node: &DecompNode, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match node {
        DecompNode::Leaf(v) => {
            let _ = writeln!(out, "{pad}x{v}");
        }
        DecompNode::Inner { op, children } => {
            if op.arity() <= 2 {
                let digits: String = op.cells().iter().map(|c| c.to_string()).collect();
                let _ = writeln!(out, "{pad}op[{}] {digits}", op.arity());
            } else {
                let _ = writeln!(out, "{pad}op[{}]", op.arity());
            }
            for child in children {
                render_decomposition(child, depth + 1, out);
            }
        }
    }
}

/// `analyze FILE`: structural report for a full cube.
pub fn cmd_analyze(path: &Path, out: &mut dyn Write) -> i32 {
    let doc = match read_document(path, out) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let table = match doc {
        Document::Table { table, .. } => table,
        Document::Code(_) => {
            let _ = writeln!(out, "error: expected a table document");
            return EXIT_USAGE;
        }
    };
    let q = match QuasigroupTable::from_table(table) {
        Ok(q) => q,
        Err(_) => {
            let _ = writeln!(out, "error: input is not a full latin hypercube");
            return EXIT_INVALID;
        }
    };
    if q.order() != 4 {
        let _ = writeln!(out, "error: analysis requires order 4, got {}", q.order());
        return EXIT_INVALID;
    }
    let _ = writeln!(out, "arity {}", q.arity());
    let _ = writeln!(out, "order {}", q.order());
    match is_reducible(&q) {
        Some(r) => {
            let vars: Vec<String> = r.vars.iter().map(|v| format!("x{v}")).collect();
            let _ = writeln!(out, "reducible: yes (inner block {{{}}})", vars.join(" "));
        }
        None => {
            let _ = writeln!(out, "reducible: no");
        }
    }
    let _ = writeln!(
        out,
        "completely reducible: {}",
        if is_completely_reducible(&q) { "yes" } else { "no" }
    );
    match is_semilinear(&q) {
        Some(cert) => {
            let _ = writeln!(out, "semilinear: yes (pair {{{}, {}}})", cert.a, cert.b);
        }
        None => {
            let _ = writeln!(out, "semilinear: no");
        }
    }
    let tree = canonical_decomposition(&q);
    let mut rendered = String::new();
    render_decomposition(tree.root(), 1, &mut rendered);
    let _ = writeln!(out, "decomposition:");
    let _ = write!(out, "{rendered}");
    EXIT_OK
}

/// `split FILE`: splits a 2-fold MDS code (given directly or as a cuboid
/// through its k-fold code) into two latin layers.
pub fn cmd_split(path: &Path, out: &mut dyn Write) -> i32 {
    let doc = match read_document(path, out) {
        Ok(d) => d,
        Err(code) => return code,
    };
    let code = match doc {
        Document::Code(c) => c,
        Document::Table { table, .. } => match table.to_kfold_code() {
            Ok(c) => c,
            Err(_) => {
                let _ = writeln!(out, "error: table is not a latin hypercuboid");
                return EXIT_INVALID;
            }
        },
    };
    match split_2fold(&code) {
        Err(_) => {
            let _ = writeln!(out, "error: input is not a 2-fold MDS code");
            EXIT_INVALID
        }
        Ok(None) => {
            let _ = writeln!(out, "unsplittable: the line-constraint graph has an odd cycle");
            EXIT_NEGATIVE
        }
        Ok(Some(split)) => {
            for (i, part) in split.parts.iter().enumerate() {
                let q = QuasigroupTable::from_code(part).expect("split parts are MDS");
                let _ = writeln!(out, "part {i}:");
                let _ = write!(out, "{}", fileio::table_to_text(q.as_table()));
            }
            EXIT_OK
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOpts {
    pub claim: String,
    pub arity: Option<usize>,
    pub mode: Option<String>,
    pub samples: u64,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub budget_seconds: Option<u64>,
    pub report: Option<PathBuf>,
    pub witness: Option<PathBuf>,
}

fn effective_budget(opts: &VerifyOpts) -> Budget {
    let seconds = opts
        .budget_seconds
        .or_else(|| {
            std::env::var("LHC_BUDGET_SECONDS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(60);
    Budget::seconds(seconds)
}

/// `verify CLAIM [flags]`: runs a verification claim and reports.
pub fn cmd_verify(opts: &VerifyOpts, out: &mut dyn Write) -> i32 {
    let budget = effective_budget(opts);
    let (code, buffered) = match opts.jobs {
        None => {
            let mut buf = Vec::new();
            let code = run_verify_claim(opts, budget, &mut buf);
            (code, buf)
        }
        Some(jobs) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                Ok(p) => p,
                Err(e) => {
                    let _ = writeln!(out, "error: cannot build a {jobs}-thread pool: {e}");
                    return EXIT_USAGE;
                }
            };
            pool.install(|| {
                let mut buf = Vec::new();
                let code = run_verify_claim(opts, budget, &mut buf);
                (code, buf)
            })
        }
    };
    let _ = out.write_all(&buffered);
    code
}

fn run_verify_claim(opts: &VerifyOpts, budget: Budget, out: &mut Vec<u8>) -> i32 {
    let claim = opts.claim.as_str();
    if claim == "unsplittable-exists" {
        let arity = opts.arity.unwrap_or(3);
        if arity < 3 {
            let _ = writeln!(out, "error: unsplittable codes need word length >= 3");
            return EXIT_USAGE;
        }
        return match find_unsplittable(arity, budget, opts.seed) {
            Ok(code) => {
                let witness_path = opts
                    .witness
                    .clone()
                    .unwrap_or_else(|| PathBuf::from(format!("unsplittable-{arity}.code")));
                if let Err(e) = fs::write(&witness_path, fileio::code_to_text(&code)) {
                    let _ = writeln!(out, "error: cannot write witness: {e}");
                    return EXIT_USAGE;
                }
                let _ = writeln!(
                    out,
                    "unsplittable 2-fold MDS code found (word length {arity}); witness \
                     written to {}",
                    witness_path.display()
                );
                let _ = writeln!(out, "verdict PASS");
                EXIT_OK
            }
            Err(VerifyError::NotFoundWithinBudget) => {
                let _ = writeln!(out, "no unsplittable code found within the search budget");
                EXIT_NEGATIVE
            }
            Err(e) => {
                let _ = writeln!(out, "error: {e}");
                EXIT_USAGE
            }
        };
    }

    let default_arity = match claim {
        "base-cases" => 2,
        "theorem-cuboids" => 3,
        "prop1" => 3,
        _ => {
            let _ = writeln!(
                out,
                "error: unknown claim {claim:?} (expected base-cases, theorem-cuboids, \
                 prop1, or unsplittable-exists)"
            );
            return EXIT_USAGE;
        }
    };
    let arity = opts.arity.unwrap_or(default_arity);
    let mode = match opts.mode.as_deref() {
        Some("exhaustive") => RunMode::Exhaustive,
        Some("sample") => RunMode::Sample,
        None if arity <= 3 => RunMode::Exhaustive,
        None => RunMode::Sample,
        Some(other) => {
            let _ = writeln!(out, "error: unknown mode {other:?}");
            return EXIT_USAGE;
        }
    };

    let result = match claim {
        "base-cases" => verify_base_cases(arity, mode, opts.samples, opts.seed, budget),
        "theorem-cuboids" => verify_theorem_cuboids(arity, mode, opts.samples, opts.seed, budget),
        "prop1" => verify_prop1(arity, mode, opts.samples, opts.seed, budget),
        _ => unreachable!("claims are screened above"),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            return EXIT_USAGE;
        }
    };
    finish_verify(&report, opts, out)
}

fn finish_verify(report: &VerificationReport, opts: &VerifyOpts, out: &mut dyn Write) -> i32 {
    let _ = write!(out, "{}", report.render_text());
    if let Some(path) = &opts.report {
        if let Err(e) = fs::write(path, report.to_json()) {
            let _ = writeln!(out, "error: cannot write report: {e}");
            return EXIT_USAGE;
        }
    }
    if report.holds() {
        EXIT_OK
    } else {
        for (i, payload) in report.payloads.iter().enumerate() {
            let path = format!("counterexample-{}-{i}.lhc", report.claim);
            let _ = fs::write(&path, payload);
            let _ = writeln!(out, "counterexample payload written to {path}");
        }
        EXIT_NEGATIVE
    }
}
