//! `slopeone`: train, query, update and benchmark Slope One models.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use slopeone_core::eval::{self, SelectionOrder, SplitSpec};
use slopeone_core::io::{self as model_io, CorpusFormat, ModelFile};
use slopeone_core::{
    Error, Evaluation, ItemId, Model, PearsonParams, RatingChange, RatingScale, SchemeId, UserId,
};

#[derive(Parser)]
#[command(name = "slopeone", version, about = "Slope One collaborative filtering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build deviation stores from a ratings corpus and save them as a model.
    Train {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Predict ratings for an ad-hoc user given a few of their ratings.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "weighted-slope-one", value_parser = parse_scheme)]
        scheme: SchemeId,
        /// Comma-separated `item=value` pairs.
        #[arg(long)]
        ratings: String,
        /// Show the N highest predictions among items the user has not rated.
        #[arg(long, conflicts_with = "items")]
        top: Option<usize>,
        /// Comma-separated items to predict.
        #[arg(long)]
        items: Option<String>,
        #[arg(long, default_value_t = PearsonParams::DEFAULT_RHO)]
        rho: f64,
    },
    /// Add, remove or change one stored rating and rewrite the model.
    Update {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        edit: EditArgs,
    },
    /// Split a corpus, train every scheme and report All-But-One MAE.
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        train_ratings: usize,
        /// Minimum test ratings; all remaining users when omitted or unreachable.
        #[arg(long)]
        test_ratings: Option<usize>,
        /// Comma-separated scheme names, or `all`.
        #[arg(long, default_value = "all")]
        schemes: String,
        #[arg(long, default_value_t = 1.0)]
        divisor: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Order::Shuffle)]
        order: Order,
        #[arg(long, default_value_t = PearsonParams::DEFAULT_RHO)]
        rho: f64,
        /// Also write the report as comma-separated values.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show plain, like and dislike deviations for an item pair.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        /// `I,J`: reports dev_{I,J} and the co-rating counts.
        #[arg(long)]
        pair: String,
    },
}

#[derive(Args)]
struct CorpusArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::MovielensTab)]
    format: Format,
    /// Field delimiter for `--format delimited`.
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// The delimited file starts with a header row.
    #[arg(long)]
    header: bool,
    /// `MIN:MAX:STEP`, e.g. `1:5:1`.
    #[arg(long, value_parser = parse_scale)]
    scale: RatingScale,
}

impl CorpusArgs {
    fn format(&self) -> CorpusFormat {
        match self.format {
            Format::MovielensTab => CorpusFormat::MovielensTab,
            Format::Delimited => CorpusFormat::Delimited { delimiter: self.delimiter, header: self.header },
        }
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct EditArgs {
    /// `USER,ITEM,VALUE`
    #[arg(long)]
    add: Option<String>,
    /// `USER,ITEM`
    #[arg(long)]
    remove: Option<String>,
    /// `USER,ITEM,VALUE`
    #[arg(long)]
    set: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    MovielensTab,
    Delimited,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Shuffle,
    Dataset,
}

fn parse_scheme(s: &str) -> Result<SchemeId, String> {
    SchemeId::from_str(s).map_err(|e| e.to_string())
}

fn parse_scale(s: &str) -> Result<RatingScale, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [min, max, step] = parts[..] else {
        return Err("expected MIN:MAX:STEP".into());
    };
    let num = |v: &str| v.parse::<f64>().map_err(|_| format!("invalid number `{v}`"));
    RatingScale::new(num(min)?, num(max)?, num(step)?).map_err(|e| e.to_string())
}

/// Failure classes, each with its own exit status.
enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_data_error() => Failure::Data(e.to_string()),
            e @ (Error::UnknownScheme(_)
            | Error::InvalidParameter(_)
            | Error::InvalidScale(_)
            | Error::EmptyEvaluation
            | Error::UnknownUser(_)
            | Error::MissingRating { .. }
            | Error::DuplicateRating { .. }) => Failure::Usage(e.to_string()),
            e => Failure::Internal(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let _ = out.flush();
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

fn run(command: Command, out: &mut impl Write) -> CliResult<()> {
    match command {
        Command::Train { corpus, output } => train(&corpus, &output, out),
        Command::Predict { model, scheme, ratings, top, items, rho } => {
            predict(&model, scheme, &ratings, top, items.as_deref(), rho, out)
        }
        Command::Update { model, edit } => update(&model, &edit, out),
        Command::Evaluate {
            corpus,
            train_ratings,
            test_ratings,
            schemes,
            divisor,
            seed,
            order,
            rho,
            out: csv,
        } => {
            let spec = SplitSpec {
                train_ratings,
                test_ratings,
                order: match order {
                    Order::Shuffle => SelectionOrder::Shuffled,
                    Order::Dataset => SelectionOrder::DatasetOrder,
                },
                seed,
            };
            evaluate(&corpus, spec, &schemes, divisor, rho, csv.as_deref(), out)
        }
        Command::Inspect { model, pair } => inspect(&model, &pair, out),
    }
}

fn train(args: &CorpusArgs, output: &PathBuf, out: &mut impl Write) -> CliResult<()> {
    let corpus = model_io::load_corpus(&args.input, args.format(), args.scale)?;
    let model = Model::train(corpus.dataset);
    writeln!(
        out,
        "users {}  items {}  ratings {}  duplicates {}",
        model.dataset().num_users(),
        model.dataset().num_items(),
        model.dataset().num_ratings(),
        corpus.report.duplicates
    )?;
    let stores = model.stores();
    writeln!(
        out,
        "pairs plain {}  like {}  dislike {}",
        stores.plain.num_pairs(),
        stores.bipolar.num_like_pairs(),
        stores.bipolar.num_dislike_pairs()
    )?;
    let (dataset, stores) = model.into_parts();
    model_io::save_model(&ModelFile { users: corpus.users, items: corpus.items, dataset, stores }, output)?;
    writeln!(out, "saved {}", output.display())?;
    Ok(())
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn predict(
    path: &PathBuf,
    scheme: SchemeId,
    ratings: &str,
    top: Option<usize>,
    items: Option<&str>,
    rho: f64,
    out: &mut impl Write,
) -> CliResult<()> {
    let ModelFile { users, items: mut items_dict, dataset, stores } = model_io::load_model(path)?;
    let scale = dataset.scale();

    // Items the model has never seen get transient ids past the dictionary;
    // they still count toward the user's mean.
    let mut query = Vec::new();
    for pair in split_list(ratings) {
        let (item, value) = pair
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("expected item=value, got `{pair}`")))?;
        let value: f64 =
            value.trim().parse().map_err(|_| Failure::Usage(format!("invalid rating `{value}`")))?;
        scale.validate(value)?;
        query.push((ItemId(items_dict.intern(item.trim())), value));
    }
    let user = UserId(u32::try_from(users.len()).unwrap_or(u32::MAX));
    let query = Evaluation::new(user, query)?;

    let targets: Vec<ItemId> = match items {
        Some(list) => split_list(list).map(|name| ItemId(items_dict.intern(name))).collect(),
        None => dataset.items().filter(|&i| !query.contains(i)).collect(),
    };

    let mut model = Model::from_parts(dataset, stores);
    model.set_pearson(PearsonParams::new(rho)?);
    if scheme == SchemeId::AdjustedCosineItem {
        model.fit_item_model();
    }
    let prediction = model.predict(scheme, &query, &targets)?;

    let mut rows: Vec<_> = targets.iter().filter_map(|&i| prediction.get(i).map(|p| (i, *p))).collect();
    if items.is_none() {
        rows.sort_by(|a, b| b.1.value.total_cmp(&a.1.value).then(a.0.cmp(&b.0)));
        rows.truncate(top.unwrap_or(10));
    }
    writeln!(out, "item\tprediction\tscheme\tfallback")?;
    for (item, p) in rows {
        let name = items_dict.name(item.0).unwrap_or("?");
        writeln!(out, "{name}\t{}\t{}\t{}", p.value, p.provenance.scheme, p.provenance.fallback_depth)?;
    }
    Ok(())
}

fn parse_edit(spec: &str, with_value: bool) -> CliResult<(String, String, Option<f64>)> {
    let fields: Vec<&str> = spec.split(',').map(str::trim).collect();
    match (fields.as_slice(), with_value) {
        ([user, item, value], true) => {
            let value = value.parse().map_err(|_| Failure::Usage(format!("invalid rating `{value}`")))?;
            Ok((user.to_string(), item.to_string(), Some(value)))
        }
        ([user, item], false) => Ok((user.to_string(), item.to_string(), None)),
        _ if with_value => Err(Failure::Usage(format!("expected USER,ITEM,VALUE, got `{spec}`"))),
        _ => Err(Failure::Usage(format!("expected USER,ITEM, got `{spec}`"))),
    }
}

fn update(path: &PathBuf, edit: &EditArgs, out: &mut impl Write) -> CliResult<()> {
    let ModelFile { mut users, items: mut items_dict, dataset, stores } = model_io::load_model(path)?;
    let (user_name, item_name, change) = match (&edit.add, &edit.remove, &edit.set) {
        (Some(spec), _, _) => {
            let (u, i, v) = parse_edit(spec, true)?;
            (u, i, RatingChange::Add(v.expect("parsed value")))
        }
        (_, Some(spec), _) => {
            let (u, i, _) = parse_edit(spec, false)?;
            (u, i, RatingChange::Remove)
        }
        (_, _, Some(spec)) => {
            let (u, i, v) = parse_edit(spec, true)?;
            (u, i, RatingChange::Update(v.expect("parsed value")))
        }
        _ => return Err(Failure::Usage("one of --add, --remove or --set is required".into())),
    };
    let (user, item) = match change {
        RatingChange::Add(_) => (UserId(users.intern(&user_name)), ItemId(items_dict.intern(&item_name))),
        _ => {
            let user =
                users.get(&user_name).ok_or_else(|| Failure::Usage(format!("unknown user `{user_name}`")))?;
            let item = items_dict
                .get(&item_name)
                .ok_or_else(|| Failure::Usage(format!("unknown item `{item_name}`")))?;
            (UserId(user), ItemId(item))
        }
    };
    let mut model = Model::from_parts(dataset, stores);
    let summary = model.apply_rating_change(user, item, change)?;
    let (dataset, stores) = model.into_parts();
    model_io::save_model(&ModelFile { users, items: items_dict, dataset, stores }, path)?;
    writeln!(out, "affected pairs plain {}  bipolar {}", summary.plain_pairs, summary.bipolar_pairs)?;
    Ok(())
}

fn evaluate(
    args: &CorpusArgs,
    spec: SplitSpec,
    schemes: &str,
    divisor: f64,
    rho: f64,
    csv: Option<&std::path::Path>,
    out: &mut impl Write,
) -> CliResult<()> {
    let schemes: Vec<SchemeId> = if schemes.trim() == "all" {
        SchemeId::ALL.to_vec()
    } else {
        split_list(schemes).map(SchemeId::from_str).collect::<Result<_, _>>()?
    };
    if schemes.is_empty() {
        return Err(Failure::Usage("no schemes given".into()));
    }
    let pearson = PearsonParams::new(rho)?;
    if !(divisor.is_finite() && divisor > 0.0) {
        return Err(Failure::Usage(format!("divisor must be positive, got {divisor}")));
    }
    let corpus = model_io::load_corpus(&args.input, args.format(), args.scale)?;
    let split = eval::split(&corpus.dataset, &spec)?;
    let report = eval::compare_schemes(&schemes, &split.train, &split.test, divisor, pearson, spec.seed)?;
    write!(out, "{}", report.render_table())?;
    if let Some(path) = csv {
        let mut file = BufWriter::new(File::create(path)?);
        report.write_delimited(&mut file)?;
        file.flush()?;
    }
    if report.outcomes.iter().any(|o| o.result.is_err()) {
        return Err(Failure::Data("one or more schemes failed".into()));
    }
    Ok(())
}

fn inspect(path: &PathBuf, pair: &str, out: &mut impl Write) -> CliResult<()> {
    let ModelFile { items: items_dict, stores, .. } = model_io::load_model(path)?;
    let (first, second) = pair
        .split_once(',')
        .map(|(a, b)| (a.trim(), b.trim()))
        .ok_or_else(|| Failure::Usage(format!("expected I,J, got `{pair}`")))?;
    let lookup = |name: &str| {
        items_dict.get(name).map(ItemId).ok_or_else(|| Failure::Usage(format!("unknown item `{name}`")))
    };
    let (j, i) = (lookup(first)?, lookup(second)?);
    let rows = [
        ("plain", stores.plain.deviation(j, i)),
        ("like", stores.bipolar.like_deviation(j, i)),
        ("dislike", stores.bipolar.dislike_deviation(j, i)),
    ];
    writeln!(out, "matrix\tdev\tcount")?;
    for (name, (dev, count)) in rows {
        writeln!(out, "{name}\t{dev}\t{count}")?;
    }
    Ok(())
}
