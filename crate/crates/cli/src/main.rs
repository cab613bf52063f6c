use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use qcoref::data::{self, Entry, TemplateSpec};
use qcoref::pipeline::{self, Prediction};
use qcoref::train::{self, CompiledSet, Hyperparams, Metrics};
use qcoref::{Lexicon, Model, OovPolicy, ParamStore};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "qcoref", version, about = "Pronoun resolution with compiled discourse circuits")]
#[command(args_override_self = true)]
struct Cli {
    /// key=value file whose entries act as flags of the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expand templates into a balanced dataset and split it.
    Generate(GenerateArgs),
    /// Multi-seed SPSA training.
    Train(TrainArgs),
    /// Metrics of a parameter file on a dataset.
    Eval(EvalArgs),
    /// Pick the antecedent of the pronoun in each discourse.
    Resolve(ResolveArgs),
    /// `train` with the bag-of-words model.
    Baseline(TrainArgs),
    /// Merge classical and quantum referents and report both.
    Combine(CombineArgs),
    /// Compare the simulator with the dense oracle on random circuits.
    Simcheck(SimcheckArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Template file; the bundled templates when absent.
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long, default_value_t = 400)]
    n: usize,
    /// Entries per template, comma separated. Defaults to an even share of `n`.
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.2,0.2")]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training TSV; the bundled dataset's split when absent.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    val: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Seed of the bundled split, used only without `--train`.
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, value_parser = parse_model)]
    model: Option<Model>,
    #[arg(long, default_value_t = 2000)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    a: f64,
    #[arg(long, default_value_t = 0.06)]
    c: f64,
    #[arg(long = "A", default_value_t = 20.0)]
    big_a: f64,
    #[arg(long, default_value_t = 0.602)]
    alpha: f64,
    #[arg(long, default_value_t = 0.101)]
    gamma: f64,
    #[arg(long, default_value_t = train::DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 15)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// OOV policy for validation and test metrics.
    #[arg(long, value_parser = parse_oov, default_value = "random-init")]
    eval_oov: OovPolicy,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, value_parser = parse_model, default_value = "sllm")]
    model: Model,
    #[arg(long, value_parser = parse_oov, default_value = "strict")]
    oov: OovPolicy,
    /// Also write a manifest here.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ResolveArgs {
    #[arg(long)]
    params: PathBuf,
    /// One two-sentence discourse.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    text: Option<String>,
    /// One discourse per line, or a dataset TSV.
    #[arg(long)]
    input: Option<PathBuf>,
    /// With a TSV input, write the gold referents here as `id,referent`.
    #[arg(long, requires = "input")]
    gold_out: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, value_parser = parse_oov, default_value = "strict")]
    oov: OovPolicy,
    /// Predictions CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CombineArgs {
    /// Predictions CSV from `resolve`.
    #[arg(long)]
    quantum: PathBuf,
    /// `id,referent` CSV with EMPTY for missing answers.
    #[arg(long)]
    classical: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Combined predictions CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimcheckArgs {
    #[arg(long, default_value_t = 200)]
    circuits: usize,
    #[arg(long, default_value_t = 6)]
    max_qubits: usize,
    #[arg(long, default_value_t = 30)]
    max_gates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<Model, String> {
    Model::parse(s).ok_or_else(|| format!("unknown model `{s}`, expected sllm or bow"))
}

fn parse_oov(s: &str) -> Result<OovPolicy, String> {
    OovPolicy::parse(s).ok_or_else(|| format!("unknown OOV policy `{s}`, expected strict, random-init or unk-token"))
}

/// Reads `key=value` lines into `--key=value` flags.
fn config_flags(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut flags = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), i + 1);
        };
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() || key == "config" {
            bail!("{}:{}: invalid key `{key}`", path.display(), i + 1);
        }
        flags.push(format!("--{key}={}", value.trim()));
    }
    Ok(flags)
}

/// Splices config entries in right after the subcommand so that flags given
/// on the command line come later and win.
fn expand_config(argv: Vec<String>) -> anyhow::Result<Vec<String>> {
    let mut config = None;
    let mut subcommand = None;
    let mut i = 1;
    while i < argv.len() {
        let a = &argv[i];
        if a == "--config" {
            config = argv.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else if subcommand.is_none() && !a.starts_with('-') {
            subcommand = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(at)) = (config, subcommand) else {
        return Ok(argv);
    };
    let flags = config_flags(Path::new(&path))?;
    let mut out = argv[..=at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}

struct Manifest {
    command: &'static str,
    comments: Vec<String>,
    entries: Vec<(String, String)>,
}

impl Manifest {
    fn new(command: &'static str) -> Self {
        Manifest { command, comments: Vec::new(), entries: Vec::new() }
    }

    fn comment(&mut self, c: impl Into<String>) -> &mut Self {
        self.comments.push(c.into());
        self
    }

    fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    fn path(&mut self, key: &str, value: &Option<PathBuf>) -> &mut Self {
        if let Some(p) = value {
            self.set(key, p.display());
        }
        self
    }

    fn digest(&mut self, what: &str, bytes: &[u8]) -> &mut Self {
        self.comment(format!("sha256 {what} {}", data::sha256_hex(bytes)))
    }

    fn render(&self) -> String {
        let mut s = format!("# qcoref {} {}\n", self.command, env!("CARGO_PKG_VERSION"));
        for c in &self.comments {
            let _ = writeln!(s, "# {c}");
        }
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    fn write(&self, path: &Path) -> anyhow::Result<()> {
        write_file(path, &self.render())
    }
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn read_file(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_entries(path: &Path) -> anyhow::Result<(Vec<Entry>, String)> {
    let text = read_file(path)?;
    let entries = data::parse_tsv(&text).with_context(|| format!("in {}", path.display()))?;
    Ok((entries, data::sha256_hex(text.as_bytes())))
}

fn load_lexicon(path: &Option<PathBuf>) -> anyhow::Result<(Lexicon, String)> {
    let text = match path {
        Some(p) => read_file(p)?,
        None => data::assets::LEXICON.to_string(),
    };
    let lex = Lexicon::parse(&text).context("in lexicon")?;
    Ok((lex, data::sha256_hex(text.as_bytes())))
}

fn load_params(path: &Path) -> anyhow::Result<(ParamStore, String)> {
    let text = read_file(path)?;
    let p = ParamStore::parse(&text).with_context(|| format!("in {}", path.display()))?;
    Ok((p, data::sha256_hex(text.as_bytes())))
}

fn generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let text = match &args.templates {
        Some(p) => read_file(p)?,
        None => data::assets::TEMPLATES.to_string(),
    };
    let specs = TemplateSpec::parse_many(&text).context("in templates")?;
    let counts = args.counts.clone().unwrap_or_else(|| data::even_counts(args.n, specs.len()));
    if counts.iter().sum::<usize>() != args.n {
        bail!("counts {:?} do not add up to n = {}", counts, args.n);
    }
    let [ft, fv, fs] = args.fractions[..] else {
        bail!("expected three split fractions, got {}", args.fractions.len());
    };
    let entries = data::generate(&specs, &counts, args.seed)?;
    let parts = data::split(&entries, (ft, fv, fs), args.seed)?;
    let lex = data::lexicon_for(&specs)?;

    let dir = &args.out_dir;
    let dataset = data::to_tsv(&entries);
    write_file(&dir.join("dataset.tsv"), &dataset)?;
    write_file(&dir.join("train.tsv"), &data::to_tsv(&parts.train))?;
    write_file(&dir.join("val.tsv"), &data::to_tsv(&parts.val))?;
    write_file(&dir.join("test.tsv"), &data::to_tsv(&parts.test))?;
    write_file(&dir.join("lexicon.tsv"), &lex.to_tsv())?;

    let mut m = Manifest::new("generate");
    m.digest("templates", text.as_bytes())
        .digest("dataset", dataset.as_bytes())
        .comment(format!("vocabulary overlap {:.4}", parts.vocab_overlap))
        .path("templates", &args.templates)
        .set("n", args.n)
        .set("counts", counts.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
        .set("fractions", format!("{ft},{fv},{fs}"))
        .set("seed", args.seed)
        .set("out-dir", dir.display());
    m.write(&dir.join("manifest.cfg"))?;
    eprintln!(
        "{} entries: train {}, val {}, test {}; vocabulary overlap {:.3}",
        entries.len(),
        parts.train.len(),
        parts.val.len(),
        parts.test.len(),
        parts.vocab_overlap
    );
    Ok(())
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

fn train_cmd(args: &TrainArgs, command: &'static str, model: Model) -> anyhow::Result<()> {
    let hp = Hyperparams {
        a: args.a,
        c: args.c,
        big_a: args.big_a,
        alpha: args.alpha,
        gamma: args.gamma,
        epochs: args.epochs,
        epsilon: args.epsilon,
        batch_size: args.batch_size,
    };
    hp.validate()?;
    let (lex, lex_digest) = load_lexicon(&args.lexicon)?;
    let mut m = Manifest::new(command);
    m.comment(format!("sha256 lexicon {lex_digest}"));

    let (train_set, val_set, test_set) = match &args.train {
        Some(path) => {
            let (train, digest) = load_entries(path)?;
            m.comment(format!("sha256 train {digest}"));
            let mut held_out = |p: &Option<PathBuf>, what: &str| -> anyhow::Result<Vec<Entry>> {
                match p {
                    Some(p) => {
                        let (e, d) = load_entries(p)?;
                        m.comment(format!("sha256 {what} {d}"));
                        Ok(e)
                    }
                    None => Ok(Vec::new()),
                }
            };
            let val = held_out(&args.val, "val")?;
            let test = held_out(&args.test, "test")?;
            (train, val, test)
        }
        None => {
            if args.val.is_some() || args.test.is_some() {
                bail!("--val and --test need --train");
            }
            m.digest("dataset", data::assets::DATASET.as_bytes());
            let parts = data::split(&data::bundled_dataset(), (0.6, 0.2, 0.2), args.split_seed)?;
            (parts.train, parts.val, parts.test)
        }
    };
    m.path("train", &args.train)
        .path("val", &args.val)
        .path("test", &args.test)
        .set("split-seed", args.split_seed)
        .path("lexicon", &args.lexicon);
    if command == "train" {
        m.set("model", model.as_str());
    }
    m.set("epochs", hp.epochs)
        .set("a", hp.a)
        .set("c", hp.c)
        .set("A", hp.big_a)
        .set("alpha", hp.alpha)
        .set("gamma", hp.gamma)
        .set("epsilon", hp.epsilon);
    if let Some(b) = hp.batch_size {
        m.set("batch-size", b);
    }
    m.set("runs", args.runs)
        .set("seed", args.seed)
        .set("eval-oov", args.eval_oov.as_str())
        .set("out-dir", args.out_dir.display());

    let set = CompiledSet::build(&train_set, model, &lex).context("compiling training set")?;
    eprintln!(
        "{}: {} training entries, {} parameters, {} runs of {} epochs",
        model.as_str(),
        set.len(),
        set.table.len(),
        args.runs,
        hp.epochs
    );
    let multi = train::multi_seed(&set, &hp, args.runs, args.seed)?;

    let dir = &args.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let held_out = |entries: &[Entry], params: &ParamStore| -> anyhow::Result<Option<Metrics>> {
        if entries.is_empty() {
            return Ok(None);
        }
        Ok(Some(train::evaluate(params, entries, model, &lex, args.eval_oov)?))
    };
    let mut runs = Vec::new();
    for (params, history) in &multi.runs {
        let seed = history.seed;
        params.save(&dir.join(format!("params_seed{seed}.tsv")))?;
        write_file(&dir.join(format!("curves_seed{seed}.csv")), &train::curves_csv(history))?;
        let val = held_out(&val_set, params)?;
        let test = held_out(&test_set, params)?;
        runs.push(json!({
            "seed": seed,
            "initial_loss": history.loss.first(),
            "final_loss": history.loss.last(),
            "initial_accuracy": history.accuracy.first(),
            "final_accuracy": history.accuracy.last(),
            "validation": val,
            "test": test,
        }));
    }
    write_file(&dir.join("aggregate.csv"), &multi.aggregate.to_csv())?;

    let field = |k: &str| mean(runs.iter().filter_map(|r| r[k]["accuracy"].as_f64()));
    let agg = &multi.aggregate;
    let summary = json!({
        "model": model.as_str(),
        "train_entries": train_set.len(),
        "parameters": set.table.len(),
        "runs": runs,
        "mean_initial_loss": agg.mean_loss.first(),
        "mean_final_loss": agg.mean_loss.last(),
        "mean_initial_accuracy": agg.mean_accuracy.first(),
        "mean_final_accuracy": agg.mean_accuracy.last(),
        "mean_validation_accuracy": (!val_set.is_empty()).then(|| field("validation")),
        "mean_test_accuracy": (!test_set.is_empty()).then(|| field("test")),
    });
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    write_file(&dir.join("metrics.json"), &text)?;
    m.write(&dir.join("manifest.cfg"))?;
    print!("{text}");
    Ok(())
}

fn eval(args: &EvalArgs) -> anyhow::Result<()> {
    let (params, pd) = load_params(&args.params)?;
    let (entries, dd) = load_entries(&args.data)?;
    let (lex, ld) = load_lexicon(&args.lexicon)?;
    let metrics = train::evaluate(&params, &entries, args.model, &lex, args.oov)?;
    if let Some(path) = &args.manifest {
        let mut m = Manifest::new("eval");
        m.comment(format!("sha256 params {pd}"))
            .comment(format!("sha256 data {dd}"))
            .comment(format!("sha256 lexicon {ld}"))
            .set("params", args.params.display())
            .set("data", args.data.display())
            .path("lexicon", &args.lexicon)
            .set("model", args.model.as_str())
            .set("oov", args.oov.as_str());
        m.write(path)?;
    }
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    Ok(())
}

fn resolve(args: &ResolveArgs) -> anyhow::Result<()> {
    let (params, pd) = load_params(&args.params)?;
    let (lex, ld) = load_lexicon(&args.lexicon)?;
    let mut m = Manifest::new("resolve");
    m.comment(format!("sha256 params {pd}")).comment(format!("sha256 lexicon {ld}"));

    let mut gold = None;
    let items: Vec<(String, String)> = match (&args.text, &args.input) {
        (Some(text), _) => vec![("1".to_string(), text.clone())],
        (None, Some(path)) => {
            let text = read_file(path)?;
            m.digest("input", text.as_bytes());
            if path.extension().is_some_and(|e| e == "tsv") {
                let entries = data::parse_tsv(&text).with_context(|| format!("in {}", path.display()))?;
                let ds = pipeline::discourses(&entries);
                gold = Some(entries);
                ds.into_iter().map(|(id, text, _)| (id, text)).collect()
            } else {
                text.lines()
                    .filter(|l| !l.trim().is_empty())
                    .enumerate()
                    .map(|(i, l)| ((i + 1).to_string(), l.trim().to_string()))
                    .collect()
            }
        }
        (None, None) => unreachable!("clap requires one of --text and --input"),
    };
    let preds: Vec<Prediction> = pipeline::resolve_all(&items, &params, &lex, args.oov)?;
    let csv = pipeline::predictions_to_csv(&preds)?;
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.gold_out {
        let Some(gold) = &gold else {
            bail!("--gold-out needs a dataset TSV input");
        };
        write_file(path, &pipeline::referents_to_csv(&pipeline::gold_referents(gold, &preds))?)?;
    }
    if let Some(path) = &args.manifest {
        m.set("params", args.params.display())
            .path("input", &args.input)
            .path("gold-out", &args.gold_out)
            .path("lexicon", &args.lexicon)
            .set("oov", args.oov.as_str())
            .path("out", &args.out);
        if let Some(t) = &args.text {
            m.set("text", t);
        }
        m.write(path)?;
    }
    Ok(())
}

fn combine(args: &CombineArgs) -> anyhow::Result<()> {
    let quantum = pipeline::predictions_from_csv(&read_file(&args.quantum)?)
        .with_context(|| format!("in {}", args.quantum.display()))?;
    let classical = pipeline::referents_from_csv(&read_file(&args.classical)?)
        .with_context(|| format!("in {}", args.classical.display()))?;
    let gold =
        pipeline::gold_from_csv(&read_file(&args.gold)?).with_context(|| format!("in {}", args.gold.display()))?;
    let (combined, report) = pipeline::combine(&quantum, &pipeline::classical_predictions(&classical), &gold)?;
    if let Some(path) = &args.out {
        write_file(path, &pipeline::predictions_to_csv(&combined)?)?;
    }
    println!("{}", report.to_json());
    Ok(())
}

fn simcheck(args: &SimcheckArgs) -> anyhow::Result<bool> {
    let r = qcoref::sim::random::simcheck(args.circuits, args.max_qubits, args.max_gates, args.seed)?;
    let pass = r.max_deviation <= args.tolerance;
    println!(
        "{} circuits, max deviation {:e} (circuit {}), tolerance {:e}: {}",
        r.circuits,
        r.max_deviation,
        r.worst,
        args.tolerance,
        if pass { "ok" } else { "FAILED" }
    );
    if let Some(path) = &args.manifest {
        let mut m = Manifest::new("simcheck");
        m.set("circuits", args.circuits)
            .set("max-qubits", args.max_qubits)
            .set("max-gates", args.max_gates)
            .set("seed", args.seed)
            .set("tolerance", args.tolerance);
        m.write(path)?;
    }
    Ok(pass)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Generate(a) => generate(a)?,
        Command::Train(a) => train_cmd(a, "train", a.model.unwrap_or(Model::Sllm))?,
        Command::Baseline(a) => {
            if a.model.is_some_and(|m| m != Model::BagOfWords) {
                bail!("baseline always trains the bow model");
            }
            train_cmd(a, "baseline", Model::BagOfWords)?
        }
        Command::Eval(a) => eval(a)?,
        Command::Resolve(a) => resolve(a)?,
        Command::Combine(a) => combine(a)?,
        Command::Simcheck(a) => return simcheck(a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
