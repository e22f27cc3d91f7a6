//! Command line front end: input documents, subcommands and output.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::acceptance;
use crate::czindex::Generator;
use crate::error::{Error, ErrorClass, Result};
use crate::hormander::{build_block, classify, BlockKind, HormanderBlock, NormalForm};
use crate::orbits::{census, ActionWindow, OrbitFamily};
use crate::rfhcomplex::{generator_census, rfh_full, RfhReport};
use crate::symlin::{symplectic_direct_sum, SymMatrix, Tolerances};
use crate::tentacular::{tentacular_check, QuadraticHamiltonian, TentacularVerdict, ValidationReport};

pub const TOLERANCE_VAR: &str = "RFH_TOLERANCES";

/// `A0` as Williamson frequencies or as a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum A0Spec {
    Frequencies { frequencies: Vec<f64> },
    Matrix { matrix: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub kind: BlockKind,
    pub m: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<i8>,
}

impl BlockSpec {
    pub fn build(&self) -> Result<HormanderBlock> {
        build_block(self.kind, self.m, Complex64::new(self.re, self.im), self.gamma)
    }
}

impl From<&HormanderBlock> for BlockSpec {
    fn from(b: &HormanderBlock) -> Self {
        Self { kind: b.kind, m: b.m, re: b.lambda.re, im: b.lambda.im, gamma: b.gamma }
    }
}

/// `A1` as Hörmander blocks or as a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum A1Spec {
    Blocks { blocks: Vec<BlockSpec> },
    Matrix { matrix: Vec<Vec<f64>> },
}

/// The input document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub n: usize,
    pub k: usize,
    pub a0: A0Spec,
    pub a1: A1Spec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

/// A parsed document: the Hamiltonian and, when given by blocks, the normal
/// form of `A1`.
pub struct Loaded {
    pub spec: HamiltonianSpec,
    pub h: QuadraticHamiltonian,
    pub a1_blocks: Option<NormalForm>,
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<SymMatrix> {
    if rows.is_empty() {
        return Ok(SymMatrix::empty());
    }
    SymMatrix::from_rows(rows)
}

impl HamiltonianSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("document: {e}")))
    }

    pub fn load(&self) -> Result<Loaded> {
        let (n, k) = (self.n, self.k);
        if k == 0 || k >= n {
            return Err(Error::DimensionMismatch(format!("need 1 <= k <= n-1, got n={n}, k={k}")));
        }
        let a1_blocks = match &self.a1 {
            A1Spec::Blocks { blocks } => {
                Some(NormalForm::new(blocks.iter().map(BlockSpec::build).collect::<Result<Vec<_>>>()?))
            }
            A1Spec::Matrix { .. } => None,
        };
        let a1 = match (&self.a1, &a1_blocks) {
            (_, Some(nf)) if nf.blocks.is_empty() => SymMatrix::empty(),
            (_, Some(nf)) => {
                let parts: Vec<_> = nf.blocks.iter().map(|b| b.matrix.matrix()).collect();
                SymMatrix::new(symplectic_direct_sum(&parts))?
            }
            (A1Spec::Matrix { matrix }, None) => matrix_from_rows(matrix)?,
            (A1Spec::Blocks { .. }, None) => unreachable!("blocks always produce a normal form"),
        };
        if a1.dim() != 2 * (n - k) {
            return Err(Error::DimensionMismatch(format!("A1 has dimension {}, expected 2(n-k) = {}", a1.dim(), 2 * (n - k))));
        }
        let h = match &self.a0 {
            A0Spec::Frequencies { frequencies } => QuadraticHamiltonian::from_frequencies(frequencies, a1)?,
            A0Spec::Matrix { matrix } => QuadraticHamiltonian::new(matrix_from_rows(matrix)?, a1),
        };
        if h.k != k {
            return Err(Error::DimensionMismatch(format!("A0 has dimension {}, expected 2k = {}", h.a0.dim(), 2 * k)));
        }
        Ok(Loaded { spec: self.clone(), h, a1_blocks })
    }
}

/// Parses `eig_cluster=..,rank_cut=..,crossing=..`; omitted keys keep the
/// value from `base`.
pub fn parse_tolerance_overrides(text: &str, base: Tolerances) -> Result<Tolerances> {
    let mut tol = base;
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidTolerances(format!("expected key=value, got '{part}'")))?;
        let v: f64 =
            value.trim().parse().map_err(|_| Error::InvalidTolerances(format!("'{value}' is not a number")))?;
        match key.trim() {
            "eig_cluster" => tol.eig_cluster = v,
            "rank_cut" => tol.rank_cut = v,
            "crossing" => tol.crossing = v,
            other => return Err(Error::InvalidTolerances(format!("unknown tolerance '{other}'"))),
        }
    }
    tol.validate()?;
    Ok(tol)
}

#[derive(Debug, Parser)]
#[command(
    name = "rfh",
    version,
    about = "Normal forms, orbit census, Conley-Zehnder gradings and Rabinowitz Floer homology of quadratic tentacular Hamiltonians",
    after_help = "INPUT is a JSON document (a file path, or '-' / omitted for stdin):\n  {\"n\": 3, \"k\": 1,\n   \"a0\": {\"frequencies\": [1.0]}            or {\"matrix\": [[..], ..]},\n   \"a1\": {\"blocks\": [{\"kind\": \"a\", \"m\": 1, \"re\": 1.0}]}  or {\"matrix\": [[..], ..]},\n   \"tolerances\": {\"eig_cluster\": 1e-9, \"rank_cut\": 1e-10, \"crossing\": 1e-10}}\n\nEnvironment:\n  RFH_TOLERANCES  overrides tolerances, e.g. \"eig_cluster=1e-9,rank_cut=1e-10,crossing=1e-10\";\n                  it takes precedence over the document\n\nExit codes: 0 success, 1 input error, 2 numerical failure, 3 internal inconsistency"
)]
pub struct Cli {
    /// Structured JSON output instead of tables.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct InputArg {
    /// Input document; '-' or omitted reads stdin.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Lower end of the action window [default: -4π/μ_min - 1e-6].
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    /// Upper end of the action window [default: 4π/μ_min + 1e-6].
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hörmander normal form of A = A0 ⊕ A1.
    Classify(InputArg),
    /// Validation and the tentacular sufficient conditions, block by block.
    Check(InputArg),
    /// Families of closed orbits with action in the window.
    Orbits {
        #[command(flatten)]
        input: InputArg,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Generators (two per family) with their gradings.
    Census {
        #[command(flatten)]
        input: InputArg,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Rabinowitz Floer homology with every intermediate group.
    Rfh(InputArg),
    /// Runs the acceptance suite.
    Selftest {
        #[arg(long, default_value_t = acceptance::DEFAULT_SEED)]
        seed: u64,
    },
}

/// What a subcommand produced: the human text and the structured value.
pub struct Output {
    pub text: String,
    pub json: serde_json::Value,
    pub code: i32,
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Input => 1,
        ErrorClass::Numerical => 2,
        ErrorClass::Internal => 3,
    }
}

fn read_input(arg: &InputArg) -> Result<String> {
    let io_err = |e: std::io::Error| Error::InvalidInput(format!("reading {}: {e}", arg.input.as_ref().map_or("stdin".into(), |p| p.display().to_string())));
    match &arg.input {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p).map_err(io_err),
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(io_err)?;
            Ok(s)
        }
    }
}

fn tolerances_for(spec: &HamiltonianSpec, env: Option<&str>) -> Result<Tolerances> {
    let base = spec.tolerances.unwrap_or_default();
    base.validate()?;
    match env {
        Some(text) => parse_tolerance_overrides(text, base),
        None => Ok(base),
    }
}

fn window_for(h: &QuadraticHamiltonian, w: &WindowArgs, tol: &Tolerances) -> Result<ActionWindow> {
    let default = ActionWindow::default_for(&h.frequencies(tol)?)?;
    ActionWindow::new(w.lo.unwrap_or(default.lo), w.hi.unwrap_or(default.hi))
}

/// Runs a parsed command line against an input document given as text.
/// `env_tol` is the value of the tolerance override variable, if set.
pub fn execute(cmd: &Command, doc: Option<&str>, env_tol: Option<&str>) -> Result<Output> {
    if let Command::Selftest { seed } = cmd {
        return Ok(selftest(*seed));
    }
    let doc = doc.ok_or_else(|| Error::InvalidInput("missing input document".into()))?;
    let spec = HamiltonianSpec::from_json(doc)?;
    let tol = tolerances_for(&spec, env_tol)?;
    let loaded = spec.load()?;
    match cmd {
        Command::Classify(_) => cmd_classify(&loaded, &tol),
        Command::Check(_) => cmd_check(&loaded, &tol),
        Command::Orbits { window, .. } => cmd_orbits(&loaded, window, &tol),
        Command::Census { window, .. } => cmd_census(&loaded, window, &tol),
        Command::Rfh(_) => cmd_rfh(&loaded, &tol),
        Command::Selftest { .. } => unreachable!("handled above"),
    }
}

fn input_arg(cmd: &Command) -> Option<&InputArg> {
    match cmd {
        Command::Classify(i) | Command::Check(i) | Command::Rfh(i) => Some(i),
        Command::Orbits { input, .. } | Command::Census { input, .. } => Some(input),
        Command::Selftest { .. } => None,
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let env_tol = std::env::var(TOLERANCE_VAR).ok();
    let doc = match input_arg(&cli.command).map(read_input).transpose() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(e.class());
        }
    };
    match execute(&cli.command, doc.as_deref(), env_tol.as_deref()) {
        Ok(out) => {
            let text = if cli.json {
                serde_json::to_string_pretty(&out.json).expect("output serializes") + "\n"
            } else {
                out.text
            };
            // a closed pipe downstream is not an error of ours
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush());
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::InvalidHamiltonian(report) = &e {
                eprint!("{report}");
            }
            exit_code(e.class())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("output serializes")
}

fn block_table(out: &mut String, blocks: &[HormanderBlock]) {
    let _ = writeln!(out, "{:<5} {:>3} {:>22} {:>22} {:>6} {:>9}", "kind", "m", "re", "im", "gamma", "sig(p,q)");
    for b in blocks {
        let (p, q) = b.formula_signature();
        let gamma = b.gamma.map_or("-".to_string(), |g| format!("{g:+}"));
        let _ = writeln!(
            out,
            "{:<5} {:>3} {:>22} {:>22} {:>6} {:>9}",
            b.kind.to_string(),
            b.m,
            b.lambda.re,
            b.lambda.im,
            gamma,
            format!("({p},{q})")
        );
    }
}

fn cmd_classify(l: &Loaded, tol: &Tolerances) -> Result<Output> {
    let nf = classify(&l.h.assembled(), tol)?;
    let (p, q) = nf.signature();
    let mut text = String::new();
    block_table(&mut text, &nf.blocks);
    let _ = writeln!(text, "total dimension {}, signature ({p},{q})", nf.total_dim);
    let blocks: Vec<BlockSpec> = nf.blocks.iter().map(BlockSpec::from).collect();
    let json = serde_json::json!({
        "input": to_json(&l.spec),
        "blocks": blocks,
        "total_dim": nf.total_dim,
        "signature": [p, q],
    });
    Ok(Output { text, json, code: 0 })
}

#[derive(Serialize)]
struct CheckReport<'a> {
    input: &'a HamiltonianSpec,
    validation: &'a ValidationReport,
    a1_blocks: Vec<BlockSpec>,
    tentacular: &'a TentacularVerdict,
}

fn cmd_check(l: &Loaded, tol: &Tolerances) -> Result<Output> {
    let report = l.h.validate(tol);
    let nf = match &l.a1_blocks {
        Some(nf) => nf.clone(),
        None => classify(&l.h.a1, tol)?,
    };
    let verdict = tentacular_check(&nf);
    let mut text = String::new();
    if report.is_valid() {
        let _ = writeln!(text, "validation: ok");
    } else {
        let _ = write!(text, "validation: failed\n{report}");
    }
    let _ = writeln!(text, "{:<5} {:>3} {:>22} {:>22} {:>5} {:>10} {:>12} {:>5}", "kind", "m", "re", "im", "case", "threshold", "margin", "pass");
    for t in &verdict.trace {
        let _ = writeln!(
            text,
            "{:<5} {:>3} {:>22} {:>22} {:>5} {:>10.6} {:>12.6} {:>5}",
            t.kind.to_string(),
            t.m,
            t.lambda[0],
            t.lambda[1],
            t.case.to_string(),
            t.case.threshold(),
            t.margin,
            if t.passes { "yes" } else { "no" }
        );
    }
    let _ = writeln!(text, "verdict: {}", verdict.verdict);
    let json = to_json(&CheckReport {
        input: &l.spec,
        validation: &report,
        a1_blocks: nf.blocks.iter().map(BlockSpec::from).collect(),
        tentacular: &verdict,
    });
    Ok(Output { text, json, code: 0 })
}

fn cmd_orbits(l: &Loaded, w: &WindowArgs, tol: &Tolerances) -> Result<Output> {
    let window = window_for(&l.h, w, tol)?;
    let fams: Vec<OrbitFamily> = census(&l.h, &window, tol)?;
    let mut text = String::new();
    let _ = writeln!(text, "window [{}, {}]", window.lo, window.hi);
    let _ = writeln!(text, "{:>22} {:<4} {:>3} {:<10} {:>4} {:>6}", "eta", "side", "m", "topology", "dim", "cz_tr");
    for f in &fams {
        let cz = f.cz_transverse.map_or("-".to_string(), |c| c.to_string());
        let _ = writeln!(
            text,
            "{:>22} {:<4} {:>3} {:<10} {:>4} {:>6}",
            f.eta,
            f.side.to_string(),
            f.m,
            f.topology.to_string(),
            f.family_dim,
            cz
        );
    }
    let json = serde_json::json!({ "input": to_json(&l.spec), "window": window, "families": fams });
    Ok(Output { text, json, code: 0 })
}

fn cmd_census(l: &Loaded, w: &WindowArgs, tol: &Tolerances) -> Result<Output> {
    let window = window_for(&l.h, w, tol)?;
    let gens: Vec<Generator> = generator_census(&l.h, &window, tol)?;
    let mut text = String::new();
    let _ = writeln!(text, "window [{}, {}]", window.lo, window.hi);
    let _ = writeln!(text, "{:<4} {:>22} {:<4} {:>6} {:>6} {:>6}", "side", "eta", "pole", "mu_sig", "cz_tr", "mu");
    for g in &gens {
        let _ = writeln!(
            text,
            "{:<4} {:>22} {:<4} {:>6} {:>6} {:>6}",
            g.side.to_string(),
            g.eta,
            g.pole.to_string(),
            g.sigma_index.to_string(),
            g.cz_transverse.to_string(),
            g.grading.to_string()
        );
    }
    let json = serde_json::json!({ "input": to_json(&l.spec), "window": window, "generators": gens });
    Ok(Output { text, json, code: 0 })
}

fn cmd_rfh(l: &Loaded, tol: &Tolerances) -> Result<Output> {
    let r: RfhReport = rfh_full(&l.h, tol)?;
    let mut text = String::new();
    let _ = writeln!(text, "n = {}, k = {}", r.n, r.k);
    for (label, g) in [
        ("RFH+(H)", &r.rfh_plus),
        ("RFH-(H)", &r.rfh_minus),
        ("RFH>=0(H0)", &r.rfh_nonneg_h0),
        ("RFH>=0(H)", &r.rfh_nonneg),
        ("rank RFH+ -> H(Sigma0), H0 side", &r.connecting_rank_h0),
        ("rank RFH+ -> H(Sigma), H side", &r.connecting_rank_h),
        ("RFH(H)", &r.rfh),
    ] {
        let _ = writeln!(text, "{label:<34} {g}");
    }
    let json = serde_json::json!({ "input": to_json(&l.spec), "report": r });
    Ok(Output { text, json, code: 0 })
}

fn selftest(seed: u64) -> Output {
    let results = acceptance::run_all(seed);
    let mut text = String::new();
    for r in &results {
        let _ = writeln!(text, "{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let _ = writeln!(text, "{} of {} criteria passed (seed {seed})", results.len() - failed, results.len());
    let code = if failed == 0 { 0 } else { exit_code(ErrorClass::Internal) };
    Output { text, json: serde_json::json!({ "seed": seed, "results": results }), code }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{"n": 3, "k": 1, "a0": {"frequencies": [1.0]},
        "a1": {"blocks": [{"kind": "a", "m": 1, "re": 1.0}, {"kind": "a", "m": 1, "re": 2.0}]}}"#;

    #[test]
    fn parses_example_document() {
        let spec = HamiltonianSpec::from_json(EXAMPLE).unwrap();
        let l = spec.load().unwrap();
        assert_eq!((l.h.n, l.h.k), (3, 1));
        assert_eq!(l.a1_blocks.unwrap().blocks.len(), 2);
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let doc = EXAMPLE.replace("\"n\": 3", "\"n\": 4");
        let e = HamiltonianSpec::from_json(&doc).unwrap().load().err().unwrap();
        assert_eq!(e.class(), ErrorClass::Input);
        assert!(HamiltonianSpec::from_json("{\"n\": 3}").is_err());
        assert!(HamiltonianSpec::from_json(&EXAMPLE.replace("\"k\"", "\"kk\"")).is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let t = parse_tolerance_overrides("rank_cut=1e-8, crossing=1e-9", Tolerances::default()).unwrap();
        assert_eq!((t.eig_cluster, t.rank_cut, t.crossing), (1e-9, 1e-8, 1e-9));
        assert!(parse_tolerance_overrides("rank_cut=-1", Tolerances::default()).is_err());
        assert!(parse_tolerance_overrides("bogus=1", Tolerances::default()).is_err());
        assert!(parse_tolerance_overrides("rank_cut", Tolerances::default()).is_err());
    }

    #[test]
    fn env_overrides_document() {
        let mut spec = HamiltonianSpec::from_json(EXAMPLE).unwrap();
        spec.tolerances = Some(Tolerances::new(1e-8, 1e-9, 1e-9).unwrap());
        let t = tolerances_for(&spec, Some("crossing=1e-7")).unwrap();
        assert_eq!((t.eig_cluster, t.rank_cut, t.crossing), (1e-8, 1e-9, 1e-7));
    }
}
