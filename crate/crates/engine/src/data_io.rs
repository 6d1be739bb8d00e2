//! CSV ingestion with itemised rejections, and JSON/CSV report writers.
//!
//! Loaders never fail on row content: malformed or inconsistent rows are
//! skipped or down-weighted and listed in an [`IngestReport`]. Only a
//! missing file, an unusable header or an empty result is an error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use shadow_core::calibration::{OptionChain, OptionQuote};
use shadow_core::fourier::{OptionKind, PriceGrid};
use shadow_core::lattice::NodeValue;
use shadow_core::shadow::ShadowRatePoint;

use crate::error::{EngineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Line number in the source file; the header is line 1.
    pub row: u64,
    pub rule: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub violations: Vec<Violation>,
}

impl IngestReport {
    fn flag(&mut self, row: u64, rule: &str, detail: impl Into<String>) {
        self.violations.push(Violation {
            row,
            rule: rule.into(),
            detail: detail.into(),
        });
    }

    pub fn rule_count(&self, rule: &str) -> usize {
        self.violations.iter().filter(|v| v.rule == rule).count()
    }
}

/// Rates used for the discounted static bounds on quotes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    pub rate: f64,
    pub div_yield: f64,
}

/// Absolute slack, per unit spot, before a bound counts as violated.
const BOUND_TOL: f64 = 1e-10;

fn open(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(EngineError::io(path))?;
    Ok(buf)
}

struct Table {
    columns: Vec<usize>,
    rows: Vec<(u64, std::result::Result<csv::StringRecord, String>)>,
}

/// Reads `bytes` as CSV and locates `wanted` in the header (any order,
/// surrounding whitespace and case ignored).
fn read_table(bytes: &[u8], wanted: &[&str]) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(bytes);
    let header = rdr.headers().map_err(|e| EngineError::Parse {
        row: 1,
        column: "header".into(),
        detail: e.to_string(),
    })?;
    let names: Vec<String> = header.iter().map(|h| h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase()).collect();
    let mut columns = Vec::with_capacity(wanted.len());
    for w in wanted {
        match names.iter().position(|n| n == w) {
            Some(i) => columns.push(i),
            None => {
                return Err(EngineError::Parse {
                    row: 1,
                    column: (*w).into(),
                    detail: format!("header {:?} lacks column {w:?}", names.join(",")),
                })
            }
        }
    }
    let mut rows = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                rows.push((line, Ok(record.clone())));
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                let fatal = matches!(e.kind(), csv::ErrorKind::Io(_));
                rows.push((line, Err(e.to_string())));
                if fatal {
                    break;
                }
            }
        }
    }
    Ok(Table { columns, rows })
}

fn field<'a>(rec: &'a csv::StringRecord, table: &Table, i: usize, name: &str) -> std::result::Result<&'a str, String> {
    rec.get(table.columns[i])
        .map(str::trim)
        .ok_or_else(|| format!("missing column {name}"))
}

/// Plain decimal or exponent notation; separators and non-finite values are rejected.
fn parse_number(s: &str, name: &str) -> std::result::Result<f64, String> {
    if s.is_empty() {
        return Err(format!("{name} is empty"));
    }
    if !s.bytes().all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E')) {
        return Err(format!("{name} {s:?} is not a plain number"));
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{name} {s:?} is not a finite number")),
    }
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("date {s:?}: {e}"))
}

/// Option quotes from CSV `strike,maturity_years,kind,mid`.
///
/// Rows breaking the static bounds stay in the chain with weight 0 and are
/// not counted as accepted: `upper bound` (call above `S e^{-δT}`, put
/// above `K e^{-rT}`), `lower bound` (below discounted intrinsic) and
/// `butterfly` (middle strike of a non-convex triple).
pub fn load_option_chain(
    path: impl AsRef<Path>,
    spot: f64,
    as_of: Option<String>,
    terms: BoundTerms,
) -> Result<(OptionChain, IngestReport)> {
    let path = path.as_ref();
    if !(spot.is_finite() && spot > 0.0) {
        return Err(shadow_core::Error::InvalidInput(format!("spot must be positive, got {spot}")).into());
    }
    let bytes = open(path)?;
    parse_option_chain(&bytes, spot, as_of, terms).map_err(|e| match e {
        EngineError::EmptyChain(_) => EngineError::EmptyChain(path.to_path_buf()),
        e => e,
    })
}

/// [`load_option_chain`] on in-memory CSV.
pub fn parse_option_chain(
    bytes: &[u8],
    spot: f64,
    as_of: Option<String>,
    terms: BoundTerms,
) -> Result<(OptionChain, IngestReport)> {
    let table = read_table(bytes, &["strike", "maturity_years", "kind", "mid"])?;
    let mut report = IngestReport {
        rows_read: table.rows.len(),
        ..Default::default()
    };
    let mut quotes: Vec<(u64, OptionQuote)> = Vec::new();
    for (line, rec) in &table.rows {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                report.flag(*line, "malformed", e.clone());
                continue;
            }
        };
        let parsed = (|| {
            let strike = parse_number(field(rec, &table, 0, "strike")?, "strike")?;
            let maturity = parse_number(field(rec, &table, 1, "maturity_years")?, "maturity_years")?;
            let kind: OptionKind = field(rec, &table, 2, "kind")?.parse().map_err(|e: shadow_core::Error| e.to_string())?;
            let mid = parse_number(field(rec, &table, 3, "mid")?, "mid")?;
            if strike <= 0.0 || maturity <= 0.0 || mid < 0.0 {
                return Err(format!(
                    "need strike > 0, maturity > 0 and mid >= 0, got {strike}, {maturity}, {mid}"
                ));
            }
            Ok(OptionQuote::new(strike, maturity, kind, mid))
        })();
        match parsed {
            Ok(q) => quotes.push((*line, q)),
            Err(e) => report.flag(*line, "malformed", e),
        }
    }
    if quotes.is_empty() {
        return Err(EngineError::EmptyChain(Path::new("<input>").to_path_buf()));
    }

    let tol = BOUND_TOL * spot;
    for (line, q) in quotes.iter_mut() {
        let df_s = spot * (-terms.div_yield * q.maturity).exp();
        let df_k = q.strike * (-terms.rate * q.maturity).exp();
        let (upper, lower) = match q.kind {
            OptionKind::Call => (df_s, (df_s - df_k).max(0.0)),
            OptionKind::Put => (df_k, (df_k - df_s).max(0.0)),
        };
        if q.mid > upper + tol {
            q.weight = 0.0;
            report.flag(*line, "upper bound", format!("mid {} exceeds {upper:.6}", q.mid));
        } else if q.mid < lower - tol {
            q.weight = 0.0;
            report.flag(*line, "lower bound", format!("mid {} below {lower:.6}", q.mid));
        }
    }

    let mut groups: BTreeMap<(u64, bool), Vec<usize>> = BTreeMap::new();
    for (i, (_, q)) in quotes.iter().enumerate() {
        if q.weight > 0.0 {
            groups.entry((q.maturity.to_bits(), q.kind == OptionKind::Call)).or_default().push(i);
        }
    }
    for idx in groups.values_mut() {
        idx.sort_by(|&a, &b| quotes[a].1.strike.total_cmp(&quotes[b].1.strike));
        idx.dedup_by(|a, b| quotes[*a].1.strike == quotes[*b].1.strike);
        let mut flagged = Vec::new();
        for w in idx.windows(3) {
            let (a, b, c) = (&quotes[w[0]].1, &quotes[w[1]].1, &quotes[w[2]].1);
            let lam = (c.strike - b.strike) / (c.strike - a.strike);
            let chord = lam * a.mid + (1.0 - lam) * c.mid;
            if b.mid > chord + tol {
                flagged.push((w[1], chord));
            }
        }
        for (i, chord) in flagged {
            let (line, q) = &mut quotes[i];
            q.weight = 0.0;
            report.flag(
                *line,
                "butterfly",
                format!("mid {} above the neighbours' chord {chord:.6} at strike {}", q.mid, q.strike),
            );
        }
    }

    report.rows_accepted = quotes.iter().filter(|(_, q)| q.weight > 0.0).count();
    let chain = OptionChain {
        as_of,
        spot,
        quotes: quotes.into_iter().map(|(_, q)| q).collect(),
    };
    Ok((chain, report))
}

/// Two aligned price series, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSeries {
    pub dates: Vec<NaiveDate>,
    pub s: Vec<f64>,
    pub z: Vec<f64>,
}

fn dated_rows<const N: usize>(
    bytes: &[u8],
    columns: [&str; N],
    positive: bool,
) -> Result<(Vec<(NaiveDate, [f64; N])>, IngestReport)> {
    let table = read_table(bytes, &columns)?;
    let mut report = IngestReport {
        rows_read: table.rows.len(),
        ..Default::default()
    };
    let mut by_date: BTreeMap<NaiveDate, (u64, [f64; N])> = BTreeMap::new();
    for (line, rec) in &table.rows {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                report.flag(*line, "malformed", e.clone());
                continue;
            }
        };
        let date = match field(rec, &table, 0, columns[0]).and_then(parse_date) {
            Ok(d) => d,
            Err(e) => {
                report.flag(*line, "malformed", e);
                continue;
            }
        };
        let mut values = [0.0; N];
        let mut problem = None;
        for i in 1..N {
            match field(rec, &table, i, columns[i]) {
                Ok("") | Err(_) => {
                    problem = Some(("missing value", format!("{} on {date}", columns[i])));
                    break;
                }
                Ok(s) => match parse_number(s, columns[i]) {
                    Ok(v) if positive && v <= 0.0 => {
                        problem = Some(("malformed", format!("{} = {v} is not positive", columns[i])));
                        break;
                    }
                    Ok(v) => values[i] = v,
                    Err(e) => {
                        problem = Some(("malformed", e));
                        break;
                    }
                },
            }
        }
        if let Some((rule, detail)) = problem {
            report.flag(*line, rule, detail);
            continue;
        }
        if let Some((first, _)) = by_date.get(&date) {
            report.flag(*line, "duplicate date", format!("{date} already read at line {first}"));
            continue;
        }
        by_date.insert(date, (*line, values));
    }
    report.rows_accepted = by_date.len();
    Ok((by_date.into_iter().map(|(d, (_, v))| (d, v)).collect(), report))
}

/// Paired closes from CSV `date,price_s,price_z`, sorted by date.
///
/// Rows with a missing or non-positive price, a bad date or a repeated
/// date are dropped and reported.
pub fn load_pair_history(path: impl AsRef<Path>) -> Result<(PairSeries, IngestReport)> {
    parse_pair_history(&open(path.as_ref())?)
}

pub fn parse_pair_history(bytes: &[u8]) -> Result<(PairSeries, IngestReport)> {
    let (rows, report) = dated_rows(bytes, ["date", "price_s", "price_z"], true)?;
    let series = PairSeries {
        dates: rows.iter().map(|r| r.0).collect(),
        s: rows.iter().map(|r| r.1[1]).collect(),
        z: rows.iter().map(|r| r.1[2]).collect(),
    };
    Ok((series, report))
}

/// Benchmark yields from CSV `date,yield`, sorted by date.
pub fn load_benchmark(path: impl AsRef<Path>) -> Result<(Vec<(NaiveDate, f64)>, IngestReport)> {
    let (rows, report) = dated_rows(&open(path.as_ref())?, ["date", "yield"], false)?;
    Ok((rows.into_iter().map(|(d, v)| (d, v[1])).collect(), report))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(EngineError::io(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(EngineError::io(path))?))
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(EngineError::io(path))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_slice(&open(path.as_ref())?)?)
}

fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(EngineError::io(path))
}

/// `date,r_bar,diffusion,jump_wedge,flag`; degenerate points leave the numbers empty.
pub fn write_shadow_series_csv(path: impl AsRef<Path>, series: &[ShadowRatePoint<NaiveDate>]) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["date", "r_bar", "diffusion", "jump_wedge", "flag"],
        series.iter().map(|p| {
            let nums = match p.decomposition {
                Some(d) => [d.r_bar.to_string(), d.diffusion.to_string(), d.jump_wedge.to_string()],
                None => Default::default(),
            };
            let [a, b, c] = nums;
            [p.date.to_string(), a, b, c, p.flag.as_str().to_string()]
        }),
    )
}

/// `date,gap` for the shadow rate minus the benchmark yield.
pub fn write_gap_csv(path: impl AsRef<Path>, gaps: &[(NaiveDate, f64)]) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["date", "gap"],
        gaps.iter().map(|(d, g)| [d.to_string(), g.to_string()]),
    )
}

/// `log_strike,strike,price`, strikes ascending.
pub fn write_price_grid_csv(path: impl AsRef<Path>, grid: &PriceGrid) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["log_strike", "strike", "price"],
        grid.log_strikes
            .iter()
            .zip(&grid.prices)
            .map(|(k, p)| [k.to_string(), k.exp().to_string(), p.to_string()]),
    )
}

/// `step,node,s,z,value`
pub fn write_nodes_csv(path: impl AsRef<Path>, nodes: &[NodeValue]) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["step", "node", "s", "z", "value"],
        nodes.iter().map(|n| {
            [
                n.step.to_string(),
                n.node.to_string(),
                n.s.to_string(),
                n.z.to_string(),
                n.value.to_string(),
            ]
        }),
    )
}

/// `s_t,z_t`
pub fn write_samples_csv(path: impl AsRef<Path>, s: &[f64], z: &[f64]) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["s_t", "z_t"],
        s.iter().zip(z).map(|(a, b)| [a.to_string(), b.to_string()]),
    )
}

/// `strike,maturity_years,kind,mid`, the chain input format.
pub fn write_option_chain_csv(path: impl AsRef<Path>, chain: &OptionChain) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["strike", "maturity_years", "kind", "mid"],
        chain.quotes.iter().map(|q| {
            [
                q.strike.to_string(),
                q.maturity.to_string(),
                q.kind.as_str().to_string(),
                q.mid.to_string(),
            ]
        }),
    )
}

/// `date,price_s,price_z`, the pair history input format.
pub fn write_pair_history_csv(path: impl AsRef<Path>, pair: &PairSeries) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["date", "price_s", "price_z"],
        pair.dates
            .iter()
            .zip(pair.s.iter().zip(&pair.z))
            .map(|(d, (s, z))| [d.to_string(), s.to_string(), z.to_string()]),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub s: f64,
    pub z: f64,
    pub t: f64,
    pub y_star: f64,
    pub root_residual: f64,
    pub residual: f64,
}

/// `s,z,t,y_star,root_residual,residual`
pub fn write_residual_table_csv(path: impl AsRef<Path>, rows: &[ResidualRow]) -> Result<()> {
    write_csv(
        path.as_ref(),
        &["s", "z", "t", "y_star", "root_residual", "residual"],
        rows.iter().map(|r| {
            [
                r.s.to_string(),
                r.z.to_string(),
                r.t.to_string(),
                r.y_star.to_string(),
                r.root_residual.to_string(),
                r.residual.to_string(),
            ]
        }),
    )
}
