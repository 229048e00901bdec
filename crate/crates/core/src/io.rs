//! Corpus ingestion and model persistence.
//!
//! Model files are line-oriented text:
//!
//! ```text
//! slopeone-model\t1
//! scale\t<min>\t<max>\t<step>
//! counts\t<items>\t<users>\t<ratings>\t<plain>\t<like>\t<dislike>
//! [items]          one raw item id per line, in interned-id order
//! [users]          one raw user id per line, in interned-id order
//! [ratings]        <user>\t<item>\t<rating>
//! [plain]          <lo>\t<hi>\t<diff_sum>\t<count>   (diff_sum = Σ u_hi - u_lo)
//! [like]           same layout
//! [dislike]        same layout
//! checksum\t<crc32 of everything above, 8 hex digits>
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so reloading
//! reproduces every accumulator bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::store::{BipolarDeviationStore, DeviationStore, DeviationStores, PairAccumulator};
use crate::types::{Dataset, Dictionary, Evaluation, ItemId, RatingScale, UserId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    /// `user<TAB>item<TAB>rating<TAB>timestamp`, as in MovieLens `u.data`.
    MovielensTab,
    /// `user<D>item<D>rating[<D>...]` with a configurable delimiter.
    Delimited { delimiter: char, header: bool },
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movielens-tab" => Ok(CorpusFormat::MovielensTab),
            "delimited" | "csv" => Ok(CorpusFormat::Delimited { delimiter: ',', header: false }),
            "csv-header" => Ok(CorpusFormat::Delimited { delimiter: ',', header: true }),
            other => Err(Error::InvalidParameter(format!("unknown corpus format `{other}`"))),
        }
    }
}

/// Line accounting for one corpus load.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub lines: usize,
    pub header_lines: usize,
    pub blank_lines: usize,
    /// Distinct (user, item) ratings kept.
    pub ratings: usize,
    /// Records that overwrote an earlier rating of the same (user, item).
    pub duplicates: usize,
}

/// A parsed corpus with the dictionaries that map raw ids to dense handles.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub dataset: Dataset,
    pub users: Dictionary,
    pub items: Dictionary,
    pub report: LoadReport,
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat, scale: RatingScale) -> Result<Corpus> {
    let file = fs::File::open(path.as_ref())?;
    read_corpus(BufReader::new(file), format, scale)
}

pub fn read_corpus<R: BufRead>(reader: R, format: CorpusFormat, scale: RatingScale) -> Result<Corpus> {
    let (delimiter, has_header) = match format {
        CorpusFormat::MovielensTab => ('\t', false),
        CorpusFormat::Delimited { delimiter, header } => (delimiter, header),
    };
    let mut users = Dictionary::new();
    let mut items = Dictionary::new();
    let mut ratings: Vec<BTreeMap<ItemId, f64>> = Vec::new();
    let mut report = LoadReport::default();

    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let number = index + 1;
        report.lines += 1;
        if index == 0 && has_header {
            report.header_lines += 1;
            continue;
        }
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            report.blank_lines += 1;
            continue;
        }
        let mut fields = line.split(delimiter).map(str::trim);
        let (Some(user), Some(item), Some(rating)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: number,
                message: "expected user, item and rating fields".into(),
            });
        };
        if user.is_empty() || item.is_empty() {
            return Err(Error::Parse { line: number, message: "empty identifier".into() });
        }
        if format == CorpusFormat::MovielensTab && fields.next().is_none() {
            return Err(Error::Parse { line: number, message: "missing timestamp field".into() });
        }
        let value: f64 = rating
            .parse()
            .map_err(|_| Error::Parse { line: number, message: format!("invalid rating `{rating}`") })?;
        let value =
            scale.validate(value).map_err(|e| Error::Parse { line: number, message: e.to_string() })?;

        let user = users.intern(user) as usize;
        let item = ItemId(items.intern(item));
        if user == ratings.len() {
            ratings.push(BTreeMap::new());
        }
        if ratings[user].insert(item, value).is_some() {
            report.duplicates += 1;
        } else {
            report.ratings += 1;
        }
    }
    if report.duplicates > 0 {
        log::warn!("{} duplicate (user, item) ratings replaced by later values", report.duplicates);
    }

    let evaluations = ratings
        .into_iter()
        .enumerate()
        .map(|(user, r)| Evaluation::new(UserId(user as u32), r))
        .collect::<Result<Vec<_>>>()?;
    let dataset = Dataset::from_evaluations(scale, evaluations)?;
    Ok(Corpus { dataset, users, items, report })
}

pub const MODEL_MAGIC: &str = "slopeone-model";
pub const MODEL_VERSION: u32 = 1;

/// Everything a model file holds.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub users: Dictionary,
    pub items: Dictionary,
    pub dataset: Dataset,
    pub stores: DeviationStores,
}

impl ModelFile {
    pub fn scale(&self) -> RatingScale {
        self.dataset.scale()
    }
}

fn check_name(kind: &str, name: &str) -> Result<()> {
    if name.contains(['\t', '\n', '\r']) || name.is_empty() {
        return Err(Error::InvalidParameter(format!("{kind} id {name:?} cannot be stored")));
    }
    Ok(())
}

pub fn encode_model(model: &ModelFile) -> Result<String> {
    let scale = model.scale();
    let stores = &model.stores;
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_MAGIC}\t{MODEL_VERSION}");
    let _ = writeln!(out, "scale\t{}\t{}\t{}", scale.min(), scale.max(), scale.step());
    let _ = writeln!(
        out,
        "counts\t{}\t{}\t{}\t{}\t{}\t{}",
        model.items.len(),
        model.users.len(),
        model.dataset.num_ratings(),
        stores.plain.num_pairs(),
        stores.bipolar.num_like_pairs(),
        stores.bipolar.num_dislike_pairs()
    );
    out.push_str("[items]\n");
    for name in model.items.names() {
        check_name("item", name)?;
        out.push_str(name);
        out.push('\n');
    }
    out.push_str("[users]\n");
    for name in model.users.names() {
        check_name("user", name)?;
        out.push_str(name);
        out.push('\n');
    }
    out.push_str("[ratings]\n");
    for evaluation in model.dataset.evaluations() {
        for &(item, r) in evaluation.ratings() {
            let _ = writeln!(out, "{}\t{}\t{}", evaluation.user().0, item.0, r);
        }
    }
    let sections = [
        ("plain", stores.plain.pairs()),
        ("like", stores.bipolar.like_pairs()),
        ("dislike", stores.bipolar.dislike_pairs()),
    ];
    for (name, pairs) in sections {
        let _ = writeln!(out, "[{name}]");
        for (lo, hi, acc) in pairs {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", lo.0, hi.0, acc.diff_sum, acc.count);
        }
    }
    let checksum = crc32fast::hash(out.as_bytes());
    let _ = writeln!(out, "checksum\t{checksum:08x}");
    Ok(out)
}

pub fn save_model(model: &ModelFile, path: impl AsRef<Path>) -> Result<()> {
    let encoded = encode_model(model)?;
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encoded)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let mut text = String::new();
    fs::File::open(path.as_ref())?.read_to_string(&mut text)?;
    decode_model(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    current: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str> {
        match self.inner.next() {
            Some((index, line)) => {
                self.current = index + 1;
                Ok(line)
            }
            None => Err(Error::ModelTruncated(format!("ended before {what}"))),
        }
    }

    fn expect(&mut self, header: &str) -> Result<()> {
        let line = self.next(header)?;
        if line == header {
            Ok(())
        } else {
            Err(self.malformed(format!("expected `{header}`, found `{line}`")))
        }
    }

    fn malformed(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat { line: self.current, message: message.into() }
    }

    fn fields<const N: usize>(&mut self, what: &str) -> Result<[&'a str; N]> {
        let line = self.next(what)?;
        let parts: Vec<&str> = line.split('\t').collect();
        parts.try_into().map_err(|_| self.malformed(format!("expected {N} fields in {what} record")))
    }

    fn parse<T: FromStr>(&self, field: &str) -> Result<T> {
        field.parse().map_err(|_| self.malformed(format!("invalid number `{field}`")))
    }
}

pub fn decode_model(text: &str) -> Result<ModelFile> {
    let first = text.lines().next().ok_or_else(|| Error::ModelTruncated("empty file".into()))?;
    match first.split_once('\t') {
        Some((MODEL_MAGIC, version)) if version == MODEL_VERSION.to_string() => {}
        Some((MODEL_MAGIC, version)) => {
            return Err(Error::ModelVersion { found: version.to_owned(), expected: MODEL_VERSION })
        }
        _ => return Err(Error::ModelFormat { line: 1, message: "not a slopeone model file".into() }),
    }

    let body_end = text
        .trim_end_matches('\n')
        .rfind('\n')
        .map(|pos| pos + 1)
        .ok_or_else(|| Error::ModelTruncated("missing checksum".into()))?;
    let (body, trailer) = text.split_at(body_end);
    let stored = trailer
        .trim_end()
        .strip_prefix("checksum\t")
        .ok_or_else(|| Error::ModelTruncated("missing checksum".into()))?;
    let stored =
        u32::from_str_radix(stored, 16).map_err(|_| Error::ModelTruncated("unreadable checksum".into()))?;
    let computed = crc32fast::hash(body.as_bytes());
    if stored != computed {
        return Err(Error::ModelChecksum { stored, computed });
    }

    let mut lines = Lines { inner: body.lines().enumerate(), current: 0 };
    lines.next("header")?;
    let [tag, min, max, step] = lines.fields::<4>("scale")?;
    if tag != "scale" {
        return Err(lines.malformed("expected scale line"));
    }
    let scale = RatingScale::new(lines.parse(min)?, lines.parse(max)?, lines.parse(step)?)?;
    let [tag, n_items, n_users, n_ratings, n_plain, n_like, n_dislike] = lines.fields::<7>("counts")?;
    if tag != "counts" {
        return Err(lines.malformed("expected counts line"));
    }
    let n_items: usize = lines.parse(n_items)?;
    let n_users: usize = lines.parse(n_users)?;
    let n_ratings: usize = lines.parse(n_ratings)?;
    let n_plain: usize = lines.parse(n_plain)?;
    let n_like: usize = lines.parse(n_like)?;
    let n_dislike: usize = lines.parse(n_dislike)?;

    let read_dictionary = |lines: &mut Lines<'_>, header: &str, count: usize| -> Result<Dictionary> {
        lines.expect(header)?;
        let mut dictionary = Dictionary::new();
        for _ in 0..count {
            let name = lines.next(header)?;
            if dictionary.intern(name) as usize != dictionary.len() - 1 {
                return Err(lines.malformed(format!("repeated id `{name}`")));
            }
        }
        Ok(dictionary)
    };
    let items = read_dictionary(&mut lines, "[items]", n_items)?;
    let users = read_dictionary(&mut lines, "[users]", n_users)?;

    lines.expect("[ratings]")?;
    let mut per_user: BTreeMap<UserId, Vec<(ItemId, f64)>> = BTreeMap::new();
    for _ in 0..n_ratings {
        let [user, item, rating] = lines.fields::<3>("rating")?;
        let user: u32 = lines.parse(user)?;
        let item: u32 = lines.parse(item)?;
        if user as usize >= n_users || item as usize >= n_items {
            return Err(lines.malformed("rating refers to an unknown id"));
        }
        per_user.entry(UserId(user)).or_default().push((ItemId(item), lines.parse(rating)?));
    }
    let evaluations = per_user
        .into_iter()
        .map(|(user, ratings)| Evaluation::new(user, ratings))
        .collect::<Result<Vec<_>>>()?;
    let dataset = Dataset::from_evaluations(scale, evaluations)?;

    let read_pairs = |lines: &mut Lines<'_>, header: &str, count: usize| {
        lines.expect(header)?;
        let mut pairs = Vec::with_capacity(count);
        for _ in 0..count {
            let [lo, hi, diff_sum, n] = lines.fields::<4>(header)?;
            let (lo, hi): (u32, u32) = (lines.parse(lo)?, lines.parse(hi)?);
            if lo >= hi {
                return Err(lines.malformed("pair must be ordered lo < hi"));
            }
            let acc = PairAccumulator { diff_sum: lines.parse(diff_sum)?, count: lines.parse(n)? };
            pairs.push((ItemId(lo), ItemId(hi), acc));
        }
        Ok(pairs)
    };
    let plain = read_pairs(&mut lines, "[plain]", n_plain)?;
    let like = read_pairs(&mut lines, "[like]", n_like)?;
    let dislike = read_pairs(&mut lines, "[dislike]", n_dislike)?;
    if let Ok(extra) = lines.next("end") {
        return Err(lines.malformed(format!("unexpected trailing record `{extra}`")));
    }

    let stores = DeviationStores {
        plain: DeviationStore::from_parts(plain, dataset.items().collect()),
        bipolar: BipolarDeviationStore::from_parts(like, dislike, &dataset),
    };
    Ok(ModelFile { users, items, dataset, stores })
}
