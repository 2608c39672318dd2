use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, IsTerminal, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use netstate_core::dataset::{self, Generator, Split, TemplateBank};
use netstate_core::eval::{self, LossWeights, ScoreOptions, StoreSource};
use netstate_core::nl2sql::Translator;
use netstate_core::num::Num;
use netstate_core::prune::{KeywordMap, Pruner, DEFAULT_BUDGET};
use netstate_core::sim::{self, NetworkState, ScenarioConfig};
use netstate_core::store::{self, RelationalStore};

/// Network-state monitoring benchmark pipeline: simulate, snapshot, generate
/// the NL/SQL corpus, translate and score.
#[derive(Parser)]
#[command(name = "netstate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the placement simulator and write a JSONL trajectory.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Steps to simulate; defaults to the scenario's horizon.
        #[arg(long)]
        horizon: Option<u64>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Materialize one trajectory snapshot as CSV tables.
    Ingest {
        #[arg(long)]
        traj: PathBuf,
        /// Time step to snapshot; defaults to the last one.
        #[arg(long)]
        step: Option<u64>,
        /// Output directory, one CSV per table plus schema.sql.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the question/SQL/answer corpus with stratified splits.
    GenDataset {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, default_value_t = 16568)]
        size: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        banks: BankArgs,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Print the schema slice offered for a question, with its token count.
    PruneSchema {
        #[arg(long)]
        question: String,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long)]
        keywords: Option<PathBuf>,
    },
    /// Answer questions with the keyword baseline, interactively or in batch.
    Query {
        /// Store directory written by `ingest`. Required for the console.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Print the generated SQL as well.
        #[arg(long)]
        verbose: bool,
        /// Batch input: one question per line, or a corpus `.jsonl`.
        #[arg(long, requires = "out")]
        r#in: Option<PathBuf>,
        /// Batch output: predictions JSONL.
        #[arg(long, requires = "in")]
        out: Option<PathBuf>,
        /// With a corpus input, only translate this split (train, validation, test or all).
        #[arg(long, default_value = "all")]
        split: String,
        #[arg(long)]
        keywords: Option<PathBuf>,
    },
    /// Score predictions against the corpus.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Extract the SQL statement from raw outputs before scoring.
        #[arg(long)]
        recover: bool,
        /// Trajectory for execution match; each record runs on its own step.
        #[arg(long, conflicts_with = "store")]
        traj: Option<PathBuf>,
        /// Store directory for execution match, shared by all records.
        #[arg(long)]
        store: Option<PathBuf>,
        /// train, validation, test or all.
        #[arg(long, default_value = "test")]
        split: String,
        /// Cross-entropy from training; enables the combined loss.
        #[arg(long)]
        ce_loss: Option<String>,
        /// Loss weights lambda_ce,lambda_s,lambda_v.
        #[arg(long, default_value = "0.1,0.6,0.3")]
        weights: String,
        /// Also write the report as JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SeedArg {
    #[arg(long, env = "NETSTATE_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct BankArgs {
    /// Template bank overriding the bundled one.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Keyword rules overriding the bundled ones.
    #[arg(long)]
    keywords: Option<PathBuf>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn keywords(path: Option<&Path>) -> Result<KeywordMap> {
    Ok(match path {
        Some(p) => KeywordMap::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => KeywordMap::default(),
    })
}

fn load_traj(path: &Path) -> Result<Vec<NetworkState>> {
    let traj = sim::read_trajectory(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    if traj.is_empty() {
        bail!("{} holds no snapshots", path.display());
    }
    Ok(traj)
}

fn load_store(dir: &Path) -> Result<RelationalStore> {
    store::load_dir(dir).with_context(|| format!("loading store from {}", dir.display()))
}

fn parse_split(s: &str) -> Result<Option<Split>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    Ok(Some(s.parse()?))
}

fn parse_num(s: &str, what: &str) -> Result<Num> {
    s.trim().parse().map_err(|_| anyhow::anyhow!("{what}: {s:?} is not a decimal number"))
}

fn simulate(scenario: &Path, horizon: Option<u64>, seed: u64, out: &Path) -> Result<()> {
    let config = ScenarioConfig::load(scenario)?;
    let horizon = horizon
        .or(config.horizon)
        .context("no --horizon given and the scenario sets none")?;
    let states = sim::run(&config, horizon, seed)?;
    for s in &states {
        s.validate().with_context(|| format!("snapshot {} breaks a state invariant", s.time_step))?;
    }
    let mut w = create(out)?;
    sim::write_trajectory(&mut w, &states)?;
    w.flush()?;
    let last = states.last().expect("run yields the initial state");
    println!("snapshots\t{}", states.len());
    println!("vnf_instances\t{}", last.vnf_instances.len());
    println!("idle_vnfs\t{}", last.idle_count());
    println!("sfc_requests\t{}", last.sfc_requests.len());
    Ok(())
}

fn ingest(traj: &Path, step: Option<u64>, out: &Path) -> Result<()> {
    let states = load_traj(traj)?;
    let state = match step {
        Some(k) => states
            .iter()
            .find(|s| s.time_step == k)
            .with_context(|| format!("no snapshot for step {k}"))?,
        None => states.last().expect("non-empty"),
    };
    let st = store::ingest(state)?;
    std::fs::create_dir_all(out)?;
    store::save_dir(&st, out)?;
    let ddl: Vec<String> = st.tables().map(|t| t.schema.ddl()).collect();
    std::fs::write(out.join("schema.sql"), ddl.join("\n\n") + "\n")?;
    println!("step\t{}", state.time_step);
    for t in st.tables() {
        println!("{}\t{}", t.schema.name, t.rows().len());
    }
    Ok(())
}

fn gen_dataset(traj: &Path, size: usize, seed: u64, out: &Path, banks: &BankArgs, budget: usize) -> Result<()> {
    let states = load_traj(traj)?;
    let bank = match &banks.templates {
        Some(p) => TemplateBank::load(p)?,
        None => TemplateBank::default(),
    };
    let generator = Generator {
        bank,
        pruner: Pruner::new(keywords(banks.keywords.as_deref())?),
        budget,
    };
    let records = generator.generate(&states, size, seed)?;
    let mut w = create(out)?;
    dataset::write_corpus(&mut w, &records)?;
    for split in Split::ALL {
        println!("{split}\t{}", records.iter().filter(|r| r.split == split).count());
    }
    println!("total\t{}", records.len());
    Ok(())
}

fn prune_schema(question: &str, budget: usize, rules: Option<&Path>) -> Result<()> {
    let pruned = Pruner::new(keywords(rules)?).prune(question, budget)?;
    println!("{}", pruned.ddl);
    println!("-- tables: {}", pruned.tables.join(", "));
    println!("-- tokens: {} / {budget}", pruned.tokens);
    Ok(())
}

struct QueryArgs<'a> {
    store: Option<&'a Path>,
    verbose: bool,
    input: Option<&'a Path>,
    out: Option<&'a Path>,
    split: &'a str,
    keywords: Option<&'a Path>,
}

fn query(args: QueryArgs<'_>) -> Result<()> {
    let translator = Translator::new(keywords(args.keywords)?);
    let store = args.store.map(load_store).transpose()?;
    match (args.input, args.out) {
        (Some(input), Some(out)) => batch_query(&translator, store.as_ref(), input, out, args.split),
        _ => {
            let store = store.context("the interactive console needs --store")?;
            console(&translator, &store, args.verbose)
        }
    }
}

fn batch_query(
    translator: &Translator,
    store: Option<&RelationalStore>,
    input: &Path,
    out: &Path,
    split: &str,
) -> Result<()> {
    let questions: Vec<(usize, String)> = if input.extension().is_some_and(|e| e == "jsonl") {
        let split = parse_split(split)?;
        dataset::read_corpus(open(input)?)?
            .into_iter()
            .enumerate()
            .filter(|(_, r)| split.is_none_or(|s| r.split == s))
            .map(|(i, r)| (i, r.question))
            .collect()
    } else {
        open(input)?
            .lines()
            .collect::<io::Result<Vec<_>>>()?
            .into_iter()
            .enumerate()
            .filter(|(_, q)| !q.trim().is_empty())
            .collect()
    };
    let mut w = create(out)?;
    let mut failed = 0;
    for (id, q) in &questions {
        let mut line = json!({ "id": id, "raw_output": "" });
        match translator.translate(q) {
            Ok(stmt) => {
                line["raw_output"] = json!(stmt.to_string());
                if let Some(st) = store {
                    match netstate_core::sql::execute(&stmt, st) {
                        Ok(r) => line["answer"] = json!(r.render_answer()),
                        Err(e) => line["error"] = json!(e.to_string()),
                    }
                }
            }
            Err(e) => {
                failed += 1;
                line["error"] = json!(e.to_string());
            }
        }
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    println!("predictions\t{}", questions.len());
    println!("untranslated\t{failed}");
    Ok(())
}

fn console(translator: &Translator, store: &RelationalStore, verbose: bool) -> Result<()> {
    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let mut stdout = io::stdout().lock();
    let prompt = |out: &mut io::StdoutLock<'_>| -> io::Result<()> {
        if interactive {
            write!(out, "> ")?;
            out.flush()?;
        }
        Ok(())
    };
    prompt(&mut stdout)?;
    for line in stdin.lock().lines() {
        let q = line?;
        let q = q.trim();
        if q.is_empty() {
            prompt(&mut stdout)?;
            continue;
        }
        if matches!(q, "quit" | "exit") {
            break;
        }
        match translator.answer(q, store) {
            Ok((stmt, answer)) => {
                if verbose {
                    writeln!(stdout, "sql: {stmt}")?;
                }
                writeln!(stdout, "{answer}")?;
            }
            Err(e) => writeln!(stdout, "error: {e}")?,
        }
        prompt(&mut stdout)?;
    }
    Ok(())
}

struct EvalArgs<'a> {
    pred: &'a Path,
    corpus: &'a Path,
    recover: bool,
    traj: Option<&'a Path>,
    store: Option<&'a Path>,
    split: &'a str,
    ce_loss: Option<&'a str>,
    weights: &'a str,
    report: Option<&'a Path>,
}

fn evaluate(args: EvalArgs<'_>) -> Result<()> {
    let parts: Vec<&str> = args.weights.split(',').collect();
    let [ce, s, v] = parts.as_slice() else {
        bail!("--weights needs three comma-separated values, got {:?}", args.weights);
    };
    let weights = LossWeights::new(
        parse_num(ce, "lambda_ce")?,
        parse_num(s, "lambda_s")?,
        parse_num(v, "lambda_v")?,
    )?;
    let opts = ScoreOptions {
        split: parse_split(args.split)?,
        recover: args.recover,
        ce_loss: args.ce_loss.map(|c| parse_num(c, "--ce-loss")).transpose()?,
        weights,
    };
    let corpus = dataset::read_corpus(open(args.corpus)?)?;
    let predictions = eval::read_predictions(open(args.pred)?)?;
    let stores = match (args.traj, args.store) {
        (Some(t), _) => StoreSource::Trajectory(load_traj(t)?),
        (None, Some(d)) => StoreSource::Single(load_store(d)?),
        (None, None) => StoreSource::None,
    };
    let report = eval::score(&predictions, &corpus, &stores, &opts)?;
    print!("{}", report.to_tsv());
    if let Some(path) = args.report {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        w.write_all(b"\n")?;
        w.flush()?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { scenario, horizon, seed, out } => simulate(&scenario, horizon, seed.seed, &out),
        Command::Ingest { traj, step, out } => ingest(&traj, step, &out),
        Command::GenDataset { traj, size, seed, out, banks, budget } => {
            gen_dataset(&traj, size, seed.seed, &out, &banks, budget)
        }
        Command::PruneSchema { question, budget, keywords } => prune_schema(&question, budget, keywords.as_deref()),
        Command::Query { store, verbose, r#in, out, split, keywords } => query(QueryArgs {
            store: store.as_deref(),
            verbose,
            input: r#in.as_deref(),
            out: out.as_deref(),
            split: &split,
            keywords: keywords.as_deref(),
        }),
        Command::Eval { pred, corpus, recover, traj, store, split, ce_loss, weights, report } => evaluate(EvalArgs {
            pred: &pred,
            corpus: &corpus,
            recover,
            traj: traj.as_deref(),
            store: store.as_deref(),
            split: &split,
            ce_loss: ce_loss.as_deref(),
            weights: &weights,
            report: report.as_deref(),
        }),
    }
}
