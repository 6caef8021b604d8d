//! `cbm`: train, apply, and inspect sparse conjunction models from the
//! command line.
//!
//! Machine-readable output (traces, predictions, mined candidates) goes to
//! standard output; progress and diagnostics go to standard error. Exit
//! codes: 0 on success, 1 on usage errors, 2 on data or configuration
//! errors.

mod real_data;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use cbm_core::datakit::{
    apply_binarizer, fit_binarizer, parse_libsvm, render_libsvm, Binarizer, TransactionDatabase,
};
use cbm_core::grab::{train, GrabConfig, StopReason};
use cbm_core::loss::LossKind;
use cbm_core::miner::{mine_signed, rank_candidates, TransactionWeights};
use cbm_core::model::{
    accuracy, deserialize, predict_label, predict_score, serialize, top_weights, SparseModel,
};
use cbm_core::DegreeCap;

#[derive(Parser)]
#[command(name = "cbm", version, about = "Sparse linear models over conjunctions of boolean attributes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut real-valued columns into equal-width bins and write one-hot
    /// boolean data in LIBSVM format, plus a `<output>.bins` sidecar.
    Binarize {
        /// Dense CSV (`label,v1,...`) or LIBSVM lines with real values.
        input: PathBuf,
        /// Destination for the binarized LIBSVM data.
        output: PathBuf,
        /// Equal-width bins per column.
        #[arg(long, default_value_t = 30)]
        bins: u32,
        /// Reuse cut points from an existing sidecar instead of fitting.
        #[arg(long, value_name = "SIDECAR")]
        load_bins: Option<PathBuf>,
    },
    /// Fit a model; the iteration trace (TSV: iter, active features,
    /// violation total, objective) goes to standard output.
    Train {
        /// Training data in LIBSVM format.
        data: PathBuf,
        /// Loss scale; larger C fits the data harder.
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        /// `logistic` or `l2hinge`.
        #[arg(long, default_value = "logistic")]
        loss: LossKind,
        /// Conjunction size cap; a number or `inf`.
        #[arg(long, default_value = "inf")]
        k: DegreeCap,
        /// Features added per iteration.
        #[arg(long = "K", default_value_t = 10)]
        batch: usize,
        /// Stop when the violation total drops below this fraction of its
        /// starting value.
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// Outer iteration cap.
        #[arg(long = "max-iters", default_value_t = 10_000)]
        max_iters: usize,
        /// Cap on itemsets emitted per mining call (default 100 per
        /// requested candidate).
        #[arg(long)]
        emission_cap: Option<usize>,
        /// Where to write the trained model.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Score data with a model: one `label score` line per transaction.
    Predict {
        model: PathBuf,
        /// Data in LIBSVM format.
        data: PathBuf,
    },
    /// Show the largest weights with their conjunctions spelled out.
    Report {
        model: PathBuf,
        /// Rows to show.
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Attribute name table, one name per line (line N names
        /// attribute N).
        #[arg(long)]
        names: Option<PathBuf>,
    },
    /// Mine itemsets whose weighted frequency beats a threshold; TSV
    /// `weighted_frequency<TAB>items`, best first.
    Mine {
        /// Data in LIBSVM format.
        data: PathBuf,
        /// Per-transaction weight file (one real per line), or `uniform`.
        #[arg(long, default_value = "uniform")]
        weights: String,
        /// Magnitude threshold.
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        /// Itemset size cap; a number or `inf`.
        #[arg(long, default_value = "inf")]
        k: DegreeCap,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(msg) = run(cli) {
        eprintln!("error: {msg}");
        std::process::exit(2);
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Binarize { input, output, bins, load_bins } => {
            cmd_binarize(&input, &output, bins, load_bins.as_deref())
        }
        Command::Train { data, c, loss, k, batch, epsilon, max_iters, emission_cap, model } => {
            cmd_train(&data, c, loss, k, batch, epsilon, max_iters, emission_cap, model.as_deref())
        }
        Command::Predict { model, data } => cmd_predict(&model, &data),
        Command::Report { model, top, names } => cmd_report(&model, top, names.as_deref()),
        Command::Mine { data, weights, theta, k } => cmd_mine(&data, &weights, theta, k),
    }
}

fn read_file(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, content: &str) -> Result<(), String> {
    fs::write(path, content).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_db(path: &Path) -> Result<TransactionDatabase, String> {
    let file = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_libsvm(BufReader::new(file), None).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_model(path: &Path) -> Result<SparseModel, String> {
    deserialize(&read_file(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_binarize(
    input: &Path,
    output: &Path,
    bins: u32,
    load_bins: Option<&Path>,
) -> Result<(), String> {
    let (labels, rows) = real_data::load_real_matrix(&read_file(input)?)
        .map_err(|e| format!("{}: {e}", input.display()))?;
    let binarizer = match load_bins {
        Some(path) => Binarizer::from_sidecar(&read_file(path)?)
            .map_err(|e| format!("{}: {e}", path.display()))?,
        None => fit_binarizer(&rows, bins).map_err(|e| e.to_string())?,
    };
    let transactions = rows
        .iter()
        .map(|row| apply_binarizer(&binarizer, row))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let db = TransactionDatabase::new(binarizer.attribute_count(), transactions, labels)
        .map_err(|e| e.to_string())?;
    write_file(output, &render_libsvm(&db))?;
    let mut sidecar = output.as_os_str().to_owned();
    sidecar.push(".bins");
    let sidecar = PathBuf::from(sidecar);
    write_file(&sidecar, &binarizer.to_sidecar())?;
    eprintln!(
        "binarized {} rows into {} boolean attributes; cut points in {}",
        db.len(),
        db.d(),
        sidecar.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    data: &Path,
    c: f64,
    loss: LossKind,
    k: DegreeCap,
    batch: usize,
    epsilon: f64,
    max_iters: usize,
    emission_cap: Option<usize>,
    model_out: Option<&Path>,
) -> Result<(), String> {
    let db = read_db(data)?;
    eprintln!("{} transactions, {} attributes", db.len(), db.d());
    let cfg = GrabConfig {
        c,
        loss,
        k,
        batch,
        epsilon,
        max_outer: max_iters,
        emission_cap,
        ..GrabConfig::default()
    };
    let t0 = Instant::now();
    let (model, trace) = train(&db, &cfg).map_err(|e| e.to_string())?;
    for row in &trace.rows {
        println!("{}\t{}\t{}\t{}", row.iter, row.active, row.v, row.objective);
    }
    match trace.stop {
        StopReason::Converged => eprintln!("stopped: violation total below {epsilon} of start"),
        StopReason::NoCandidates => eprintln!("stopped: no candidates above threshold"),
        StopReason::IterationCap => eprintln!("warning: iteration cap ({max_iters}) reached"),
    }
    eprintln!("nonzero weights: {}", model.len());
    eprintln!("training accuracy: {:.4}", accuracy(&model, &db));
    eprintln!("wall time: {:.2} s", t0.elapsed().as_secs_f64());
    if let Some(path) = model_out {
        write_file(path, &serialize(&model))?;
        eprintln!("model written to {}", path.display());
    }
    Ok(())
}

fn cmd_predict(model_path: &Path, data: &Path) -> Result<(), String> {
    let model = read_model(model_path)?;
    let db = read_db(data)?;
    if db.d() > model.d() {
        eprintln!(
            "warning: data has {} attributes but the model knows {}; extra attributes never match",
            db.d(),
            model.d()
        );
    }
    for t in db.transactions() {
        println!("{} {}", predict_label(&model, t), predict_score(&model, t));
    }
    eprintln!("accuracy: {:.4}", accuracy(&model, &db));
    Ok(())
}

fn cmd_report(model_path: &Path, top: usize, names: Option<&Path>) -> Result<(), String> {
    let model = read_model(model_path)?;
    let names: Option<Vec<String>> = match names {
        Some(path) => Some(read_file(path)?.lines().map(str::to_owned).collect()),
        None => None,
    };
    for row in top_weights(&model, top, names.as_deref()) {
        let rendered = if row.itemset.is_empty() {
            "(bias)".to_string()
        } else {
            row.names.join(" & ")
        };
        println!("{:.4}\t{}", row.weight, rendered);
    }
    Ok(())
}

fn cmd_mine(data: &Path, weights: &str, theta: f64, k: DegreeCap) -> Result<(), String> {
    let db = read_db(data)?;
    let alpha = if weights == "uniform" {
        TransactionWeights::uniform(db.len())
    } else {
        let path = Path::new(weights);
        let mut values = Vec::new();
        for (idx, line) in read_file(path)?.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| format!("{}: line {}: bad weight `{line}`", path.display(), idx + 1))?;
            values.push(v);
        }
        if values.len() != db.len() {
            return Err(format!(
                "{}: {} weights for {} transactions",
                path.display(),
                values.len(),
                db.len()
            ));
        }
        TransactionWeights::new(values).map_err(|e| e.to_string())?
    };
    let mut candidates = mine_signed(&db, &alpha, theta, k).map_err(|e| e.to_string())?;
    rank_candidates(&mut candidates);
    for cand in &candidates {
        println!("{}\t{}", cand.weighted_frequency, cand.itemset);
    }
    eprintln!("{} candidates above {theta}", candidates.len());
    Ok(())
}
