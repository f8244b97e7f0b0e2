//! `unpred`: synthesize and verify feedback controllers whose task-completion
//! instant can never be predicted K or more steps in advance.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unpred::formats::{
    controller_from_file, controller_to_file, policy_to_mealy, to_json_string, ControllerFile,
    ModelFile, PolicyFile, ReportFile, WitnessesFile,
};
use unpred::{dot, log_debug, log_info};
use unpred_core::automata::{compile, minimize, modify, ModifiedDfa};
use unpred_core::formula::{parse, pretty_print, ApSet, RESERVED};
use unpred_core::product::{build_product, ProductSystem};
use unpred_core::synthesis::{
    attractor, build_aes, check_k, decode, extract, Aes, SynthesisError,
};
use unpred_core::system::TransitionSystem;
use unpred_core::verify::{
    build_closed_loop, check_live, check_task, check_unpredictable, MealyController, VerifyError,
};

const EXIT_OK: u8 = 0;
const EXIT_ERR: u8 = 1;
const EXIT_NO_SOLUTION: u8 = 2;

#[derive(Parser)]
#[command(
    name = "unpred",
    version,
    about = "Controllers that complete their task at a moment no observer can predict"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DotTarget {
    Dfa,
    Product,
    Aes,
    Detbts,
}

impl DotTarget {
    fn name(self) -> &'static str {
        match self {
            DotTarget::Dfa => "dfa",
            DotTarget::Product => "product",
            DotTarget::Aes => "aes",
            DotTarget::Detbts => "detbts",
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a model file: well-formedness, liveness, uniform observability
    Validate {
        #[arg(long)]
        model: PathBuf,
        /// Append the absorbing "stop" action before checking
        #[arg(long)]
        add_stop: bool,
    },
    /// Compile a formula into its (minimized, modified) task automaton
    Compile {
        #[arg(long)]
        formula: String,
        /// Take the proposition universe from a model instead of the formula text
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        no_minimize: bool,
        /// Write <out>.dfa.dot (only the "dfa" target applies here)
        #[arg(long = "dot", value_name = "TARGET")]
        dot: Vec<DotTarget>,
        /// Output stem for DOT files
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Synthesize an unpredictable controller and write it as JSON
    Synthesize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        /// Unpredictability horizon
        #[arg(long)]
        k: u32,
        #[arg(long, default_value = "controller.json")]
        out: PathBuf,
        /// Also write <out stem>.<target>.dot (repeatable)
        #[arg(long = "dot", value_name = "TARGET")]
        dot: Vec<DotTarget>,
        #[arg(long)]
        no_minimize: bool,
        #[arg(long)]
        add_stop: bool,
    },
    /// Run the liveness / task / unpredictability checks on a controller
    Verify {
        /// Synthesized controller JSON (or use --baseline)
        #[arg(required_unless_present = "baseline", conflicts_with = "baseline")]
        controller: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        k: u32,
        /// Hand-written Mealy policy JSON to check instead of a controller
        #[arg(long, value_name = "POLICY.JSON")]
        baseline: Option<PathBuf>,
        /// Also write the report here
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_minimize: bool,
        #[arg(long)]
        add_stop: bool,
    },
    /// Drive the closed loop, resolving nondeterminism with a seeded RNG
    Simulate {
        /// Synthesized controller JSON
        controller: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long, default_value_t = 10)]
        steps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_minimize: bool,
        #[arg(long)]
        add_stop: bool,
    },
    /// Write DOT renderings of the pipeline artifacts
    Export {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: String,
        /// Required for the aes / detbts targets
        #[arg(long)]
        k: Option<u32>,
        #[arg(long = "dot", value_name = "TARGET", required = true)]
        dot: Vec<DotTarget>,
        /// Output stem: files land at <out>.<target>.dot
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        no_minimize: bool,
        #[arg(long)]
        add_stop: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout and succeed; usage errors fail.
            let code = if e.use_stderr() { EXIT_ERR } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_ERR)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Validate { model, add_stop } => cmd_validate(&model, add_stop),
        Cmd::Compile { formula, model, no_minimize, dot, out } => {
            cmd_compile(&formula, model.as_deref(), no_minimize, &dot, &out)
        }
        Cmd::Synthesize { model, formula, k, out, dot, no_minimize, add_stop } => {
            cmd_synthesize(&model, &formula, k, &out, &dot, no_minimize, add_stop)
        }
        Cmd::Verify { controller, model, formula, k, baseline, out, no_minimize, add_stop } => {
            cmd_verify(
                controller.as_deref(),
                &model,
                &formula,
                k,
                baseline.as_deref(),
                out.as_deref(),
                no_minimize,
                add_stop,
            )
        }
        Cmd::Simulate { controller, model, formula, steps, seed, no_minimize, add_stop } => {
            cmd_simulate(&controller, &model, &formula, steps, seed, no_minimize, add_stop)
        }
        Cmd::Export { model, formula, k, dot, out, no_minimize, add_stop } => {
            cmd_export(&model, &formula, k, &dot, &out, no_minimize, add_stop)
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing.

fn load_model(path: &Path, add_stop: bool) -> Result<TransitionSystem> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model {}", path.display()))?;
    let mf: ModelFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let ts = TransitionSystem::from_raw(&mf.to_raw())
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let ts = if add_stop { ts.add_stop().map_err(|e| anyhow!("--add-stop: {e}"))? } else { ts };
    log_debug!(
        "model {}: {} states, {} inputs, {} observations",
        path.display(),
        ts.n_states(),
        ts.n_inputs(),
        ts.n_obs()
    );
    Ok(ts)
}

fn validation_lines(ts: &TransitionSystem) -> Vec<String> {
    let report = ts.validate();
    let mut lines = Vec::new();
    for &x in &report.dead_states {
        lines.push(format!(
            "liveness violation: state '{}' has no active input",
            ts.state_names[x]
        ));
    }
    for &(a, b) in &report.nonuniform {
        lines.push(format!(
            "uniformity violation: states '{}' and '{}' share observation '{}' but differ in active inputs",
            ts.state_names[a], ts.state_names[b], ts.obs_names[ts.obs[a]]
        ));
    }
    lines
}

fn require_valid(ts: &TransitionSystem) -> Result<()> {
    let lines = validation_lines(ts);
    if lines.is_empty() {
        Ok(())
    } else {
        bail!("invalid model:\n{}", lines.join("\n"));
    }
}

fn compile_formula(text: &str, aps: &ApSet, no_minimize: bool) -> Result<ModifiedDfa> {
    let f = parse(text, aps).map_err(|e| anyhow!("formula: {e}"))?;
    let dfa = compile(&f, aps).map_err(|e| anyhow!("{e}"))?;
    let dfa = if no_minimize { dfa } else { minimize(&dfa) };
    Ok(modify(&dfa))
}

fn build_pipeline(
    model: &Path,
    formula: &str,
    no_minimize: bool,
    add_stop: bool,
) -> Result<(TransitionSystem, ModifiedDfa, ProductSystem)> {
    let ts = load_model(model, add_stop)?;
    require_valid(&ts)?;
    let md = compile_formula(formula, &ts.aps, no_minimize)?;
    let prod = build_product(&ts, &md).map_err(|e| anyhow!("{e}"))?;
    log_debug!("product: {} states, |X_F| = {}", prod.n_states(), prod.xf.len());
    Ok((ts, md, prod))
}

/// `out` stem + target → `<stem>.<target>.dot`, dropping any extension on
/// the stem (so `--out controller.json` exports `controller.aes.dot`).
fn dot_path(out: &Path, target: DotTarget) -> PathBuf {
    let mut stem = out.to_path_buf();
    stem.set_extension("");
    let file = format!(
        "{}.{}.dot",
        stem.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        target.name()
    );
    stem.with_file_name(file)
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_controller(path: &Path, prod: &ProductSystem) -> Result<ControllerFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading controller {}", path.display()))?;
    let cf: ControllerFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    // Surface inconsistencies against *this* product immediately.
    controller_from_file(&cf, prod).with_context(|| format!("{}", path.display()))?;
    Ok(cf)
}

// ---------------------------------------------------------------------------
// Subcommands.

fn cmd_validate(model: &Path, add_stop: bool) -> Result<u8> {
    let ts = load_model(model, add_stop)?;
    let lines = validation_lines(&ts);
    if lines.is_empty() {
        println!(
            "ok: {} states, {} inputs, {} observation classes",
            ts.n_states(),
            ts.n_inputs(),
            ts.n_obs()
        );
        Ok(EXIT_OK)
    } else {
        for l in &lines {
            println!("{l}");
        }
        Ok(EXIT_ERR)
    }
}

/// Proposition names appearing in the formula text, in canonical order.
fn formula_aps(text: &str) -> Vec<String> {
    let bytes = text.as_bytes();
    let mut names = BTreeSet::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'_' || bytes[i].is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i] == b'_' || bytes[i].is_ascii_alphanumeric()) {
                i += 1;
            }
            let word = &text[start..i];
            if !RESERVED.contains(&word) {
                names.insert(word.to_string());
            }
        } else {
            i += 1;
        }
    }
    names.into_iter().collect()
}

fn cmd_compile(
    formula: &str,
    model: Option<&Path>,
    no_minimize: bool,
    dots: &[DotTarget],
    out: &Path,
) -> Result<u8> {
    let aps = match model {
        Some(path) => load_model(path, false)?.aps,
        None => ApSet::new(formula_aps(formula)).map_err(|e| anyhow!("{e}"))?,
    };
    let f = parse(formula, &aps).map_err(|e| anyhow!("formula: {e}"))?;
    let dfa = compile(&f, &aps).map_err(|e| anyhow!("{e}"))?;
    let dfa = if no_minimize { dfa } else { minimize(&dfa) };
    let md = modify(&dfa);
    println!("formula: {}", pretty_print(&f, &aps));
    println!("propositions: {}", aps.names().join(", "));
    println!(
        "automaton: {} states ({} accepting); {} after completion/sink modification",
        dfa.n_states(),
        dfa.accepting.iter().filter(|&&b| b).count(),
        md.dfa.n_states()
    );
    for &t in dots {
        if t != DotTarget::Dfa {
            bail!("compile can only export the dfa target; use export for {}", t.name());
        }
        write_file(&dot_path(out, t), &dot::dfa_dot(&md, &aps))?;
    }
    Ok(EXIT_OK)
}

fn cmd_synthesize(
    model: &Path,
    formula: &str,
    k: u32,
    out: &Path,
    dots: &[DotTarget],
    no_minimize: bool,
    add_stop: bool,
) -> Result<u8> {
    let (ts, md, prod) = build_pipeline(model, formula, no_minimize, add_stop)?;
    let k8 = check_k(k).map_err(|e| anyhow!("{e}"))?;
    let aes = build_aes(&prod, k8);
    log_info!(
        "all-enforcement structure: {} Y-states, {} Z-states",
        aes.y_states.len(),
        aes.z_states.len()
    );
    let dist = attractor(&aes, &prod);
    let bts = match extract(&aes, &dist) {
        Ok(bts) => bts,
        Err(SynthesisError::NoSolution) => {
            println!("no solution exists");
            return Ok(EXIT_NO_SOLUTION);
        }
        Err(e) => bail!("{e}"),
    };

    let cf = controller_to_file(&bts, &prod);
    write_file(out, &to_json_string(&cf)?)?;
    let c = decode(bts);
    println!(
        "controller: K={k}, {} Y-states, {} Z-states",
        c.bts.y_states.len(),
        c.bts.z_states.len()
    );
    let table = c.policy_rows(&prod);
    println!("policy:");
    for (seq, u) in &table.rows {
        let names: Vec<&str> = seq.iter().map(|&o| prod.ts.obs_names[o].as_str()).collect();
        println!("  C({}) = {}", names.join(" "), prod.ts.input_names[*u]);
    }
    let else_names: Vec<&str> =
        table.else_inputs.iter().map(|&u| prod.ts.input_names[u].as_str()).collect();
    println!("  else {}", else_names.join(" | "));

    for &t in dots {
        let content = match t {
            DotTarget::Dfa => dot::dfa_dot(&md, &ts.aps),
            DotTarget::Product => dot::product_dot(&prod),
            DotTarget::Aes => dot::aes_dot(&aes, &prod),
            DotTarget::Detbts => dot::detbts_dot(&c.bts, &prod),
        };
        write_file(&dot_path(out, t), &content)?;
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    controller: Option<&Path>,
    model: &Path,
    formula: &str,
    k: u32,
    baseline: Option<&Path>,
    out: Option<&Path>,
    no_minimize: bool,
    add_stop: bool,
) -> Result<u8> {
    let (_, _, prod) = build_pipeline(model, formula, no_minimize, add_stop)?;
    let k8 = check_k(k).map_err(|e| anyhow!("{e}"))?;
    let mealy: MealyController = match (controller, baseline) {
        (Some(path), None) => {
            let cf = load_controller(path, &prod)?;
            if cf.k != k {
                bail!("controller was synthesized for K={}, but --k {} was given", cf.k, k);
            }
            decode(controller_from_file(&cf, &prod)?).to_mealy()
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading policy {}", path.display()))?;
            let pf: PolicyFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            policy_to_mealy(&pf, &prod).with_context(|| format!("{}", path.display()))?
        }
        _ => unreachable!("clap enforces exactly one of controller / --baseline"),
    };

    let cl = match build_closed_loop(&prod, &mealy) {
        Ok(cl) => cl,
        Err(VerifyError::UndefinedControl { obs }) => {
            let names: Vec<&str> = obs.iter().map(|&o| prod.ts.obs_names[o].as_str()).collect();
            bail!("controller undefined after feasible observations [{}]", names.join(" "));
        }
        Err(e) => bail!("{e}"),
    };
    log_debug!("closed loop: {} configurations", cl.configs.len());
    let (unpredictable, witness) = check_unpredictable(&cl, k8);
    let report = ReportFile {
        live: check_live(&cl),
        task: check_task(&cl),
        unpredictable,
        witnesses: WitnessesFile {
            unpredictable: witness.map(|w| {
                w.iter().map(|&o| prod.ts.obs_names[o].clone()).collect()
            }),
        },
    };
    let json = to_json_string(&report)?;
    print!("{json}");
    if let Some(path) = out {
        write_file(path, &json)?;
    }
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_ERR })
}

fn cmd_simulate(
    controller: &Path,
    model: &Path,
    formula: &str,
    steps: u32,
    seed: u64,
    no_minimize: bool,
    add_stop: bool,
) -> Result<u8> {
    let (_, _, prod) = build_pipeline(model, formula, no_minimize, add_stop)?;
    let cf = load_controller(controller, &prod)?;
    let mealy = decode(controller_from_file(&cf, &prod)?).to_mealy();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = prod.ts.initial;
    let mut mem = mealy.initial;
    for step in 0..=steps {
        let o = prod.ts.obs[x];
        let completed = if prod.xf.contains(&x) { "  <- task first completed" } else { "" };
        if step == steps {
            println!(
                "step {step}: state {} obs {}{completed}",
                prod.ts.state_names[x], prod.ts.obs_names[o]
            );
            break;
        }
        mem = *mealy
            .update
            .get(&(mem, o))
            .ok_or_else(|| anyhow!("controller undefined at step {step}"))?;
        let u = mealy.output[mem].ok_or_else(|| anyhow!("controller silent at step {step}"))?;
        println!(
            "step {step}: state {} obs {} input {}{completed}",
            prod.ts.state_names[x], prod.ts.obs_names[o], prod.ts.input_names[u]
        );
        let succ: Vec<usize> = prod.ts.delta[x][u].iter().copied().collect();
        if succ.is_empty() {
            println!("deadlock: no successor under {}", prod.ts.input_names[u]);
            return Ok(EXIT_ERR);
        }
        x = succ[rng.gen_range(0..succ.len())];
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_export(
    model: &Path,
    formula: &str,
    k: Option<u32>,
    dots: &[DotTarget],
    out: &Path,
    no_minimize: bool,
    add_stop: bool,
) -> Result<u8> {
    let (ts, md, prod) = build_pipeline(model, formula, no_minimize, add_stop)?;
    let mut aes_cache: Option<Aes> = None;
    for &t in dots {
        if matches!(t, DotTarget::Aes | DotTarget::Detbts) && aes_cache.is_none() {
            let k = k.ok_or_else(|| anyhow!("--k is required for aes/detbts export"))?;
            let k8 = check_k(k).map_err(|e| anyhow!("{e}"))?;
            aes_cache = Some(build_aes(&prod, k8));
        }
        let content = match t {
            DotTarget::Dfa => dot::dfa_dot(&md, &ts.aps),
            DotTarget::Product => dot::product_dot(&prod),
            DotTarget::Aes => dot::aes_dot(aes_cache.as_ref().unwrap(), &prod),
            DotTarget::Detbts => {
                let aes = aes_cache.as_ref().unwrap();
                let dist = attractor(aes, &prod);
                match extract(aes, &dist) {
                    Ok(bts) => dot::detbts_dot(&bts, &prod),
                    Err(SynthesisError::NoSolution) => {
                        println!("no solution exists");
                        return Ok(EXIT_NO_SOLUTION);
                    }
                    Err(e) => bail!("{e}"),
                }
            }
        };
        write_file(&dot_path(out, t), &content)?;
    }
    Ok(EXIT_OK)
}
