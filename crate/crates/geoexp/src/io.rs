//! File formats. Brand and GEO indices are 1-based in every file.
//!
//! CSV floats are written in shortest round-trip form, so reading a file back
//! reproduces the values exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use geoexp_core::bayes::{Param, PosteriorChains};
use geoexp_core::design::{DesignMatrix, TracePoint};
use geoexp_core::estimation::FitResult;
use geoexp_core::shrinkage::ShrinkageResult;
use geoexp_core::sim::Dataset;

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).with_context(|| format!("{}: invalid JSON", path.display()))
}

// Designs

#[derive(Serialize, Deserialize)]
struct DesignJson {
    g_count: usize,
    b_count: usize,
    entries: Vec<i8>,
}

pub fn write_design_csv<W: Write>(w: W, design: &DesignMatrix) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record((1..=design.b_count()).map(|b| format!("brand_{b}")))?;
    for g in 0..design.g_count() {
        out.write_record(design.row(g).iter().map(|&v| if v > 0 { "+1" } else { "-1" }))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_design_csv<R: Read>(r: R) -> Result<DesignMatrix> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    for (i, h) in headers.iter().enumerate() {
        if h != format!("brand_{}", i + 1) {
            bail!("design header column {} is `{h}`, expected `brand_{}`", i + 1, i + 1);
        }
    }
    let b_count = headers.len();
    let mut entries = Vec::new();
    let mut g_count = 0;
    for rec in rdr.records() {
        let rec = rec?;
        g_count += 1;
        for cell in rec.iter() {
            let v: i8 = cell.parse().map_err(|_| anyhow!("GEO {g_count}: bad design cell `{cell}`"))?;
            entries.push(v);
        }
    }
    Ok(DesignMatrix::from_entries(g_count, b_count, entries)?)
}

pub fn write_design(path: &Path, design: &DesignMatrix) -> Result<()> {
    if is_json(path) {
        let j = DesignJson {
            g_count: design.g_count(),
            b_count: design.b_count(),
            entries: design.entries().to_vec(),
        };
        write_json(path, &j)
    } else {
        let mut w = create(path)?;
        write_design_csv(&mut w, design)?;
        w.flush()?;
        Ok(())
    }
}

pub fn read_design(path: &Path) -> Result<DesignMatrix> {
    let d = if is_json(path) {
        let j: DesignJson = read_json(path)?;
        DesignMatrix::from_entries(j.g_count, j.b_count, j.entries).map_err(anyhow::Error::from)
    } else {
        read_design_csv(open(path)?)
    };
    d.with_context(|| format!("{}: invalid design", path.display()))
}

#[derive(Serialize, Deserialize)]
struct TraceRow {
    accepted_flips: usize,
    attempts: usize,
    brand_min: f64,
    brand_max: f64,
    brand_rms: f64,
    geo_min: f64,
    geo_max: f64,
    geo_rms: f64,
}

pub fn write_trace<W: Write>(w: W, trace: &[TracePoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for t in trace {
        let s = &t.summary;
        out.serialize(TraceRow {
            accepted_flips: t.accepted_flips,
            attempts: t.attempts,
            brand_min: s.brand_min,
            brand_max: s.brand_max,
            brand_rms: s.brand_rms,
            geo_min: s.geo_min,
            geo_max: s.geo_max,
            geo_rms: s.geo_rms,
        })?;
    }
    out.flush()?;
    Ok(())
}

// Datasets

#[derive(Serialize, Deserialize)]
struct DatasetRow {
    geo: usize,
    brand: usize,
    y_pre: f64,
    x_post: f64,
    y_post: f64,
    true_beta: Option<f64>,
}

pub fn write_dataset<W: Write>(w: W, data: &Dataset) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for g in 0..data.g_count {
        for b in 0..data.b_count {
            let i = data.index(g, b);
            out.serialize(DatasetRow {
                geo: g + 1,
                brand: b + 1,
                y_pre: data.y_pre[i],
                x_post: data.x_post[i],
                y_post: data.y_post[i],
                true_beta: data.true_beta.as_ref().map(|t| t[b]),
            })?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Rows may come in any order but every `(geo, brand)` cell must appear once.
pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let rows = rdr
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("dataset row {}", i + 1)))
        .collect::<Result<Vec<DatasetRow>>>()?;
    if rows.iter().any(|r| r.geo == 0 || r.brand == 0) {
        bail!("dataset indices are 1-based");
    }
    let g_count = rows.iter().map(|r| r.geo).max().ok_or_else(|| anyhow!("dataset is empty"))?;
    let b_count = rows.iter().map(|r| r.brand).max().unwrap_or(0);
    let cells = g_count * b_count;
    if rows.len() != cells {
        bail!("dataset has {} rows, expected {g_count} GEOs x {b_count} brands", rows.len());
    }
    let mut seen = vec![false; cells];
    let (mut y_pre, mut x_post, mut y_post) = (vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]);
    let mut truth: Vec<Option<f64>> = vec![None; b_count];
    for r in &rows {
        let i = (r.geo - 1) * b_count + (r.brand - 1);
        if std::mem::replace(&mut seen[i], true) {
            bail!("dataset repeats GEO {} brand {}", r.geo, r.brand);
        }
        y_pre[i] = r.y_pre;
        x_post[i] = r.x_post;
        y_post[i] = r.y_post;
        match (truth[r.brand - 1], r.true_beta) {
            (Some(a), Some(b)) if a != b => bail!("brand {} has conflicting true_beta values", r.brand),
            (None, Some(b)) => truth[r.brand - 1] = Some(b),
            _ => {}
        }
    }
    let true_beta = truth.iter().copied().collect::<Option<Vec<f64>>>();
    Ok(Dataset::new(g_count, b_count, y_pre, x_post, y_post, true_beta)?)
}

pub fn write_dataset_file(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = create(path)?;
    write_dataset(&mut w, data)?;
    w.flush()?;
    Ok(())
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    read_dataset(open(path)?).with_context(|| format!("{}: invalid dataset", path.display()))
}

// Fits

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub brand: usize,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta_hat: f64,
    pub var_beta: f64,
    pub p_value: f64,
}

impl FitRow {
    pub fn from_fit(brand: usize, f: &FitResult) -> Self {
        Self {
            brand: brand + 1,
            alpha0: f.alpha0,
            alpha1: f.alpha1,
            beta_hat: f.beta_hat,
            var_beta: f.var_beta,
            p_value: f.p_value,
        }
    }
}

pub fn write_fits<W: Write>(w: W, fits: &[FitResult]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (b, f) in fits.iter().enumerate() {
        out.serialize(FitRow::from_fit(b, f))?;
    }
    out.flush()?;
    Ok(())
}

/// Rows sorted by brand; brands must be exactly `1..=B`.
pub fn read_fits<R: Read>(r: R) -> Result<Vec<FitRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut rows = rdr
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.with_context(|| format!("fit row {}", i + 1)))
        .collect::<Result<Vec<FitRow>>>()?;
    rows.sort_by_key(|r| r.brand);
    for (i, r) in rows.iter().enumerate() {
        if r.brand != i + 1 {
            bail!("fit rows must cover brands 1..={} once each", rows.len());
        }
    }
    Ok(rows)
}

// Shrinkage

/// `lambda` is `None` when the chosen grid point means no shrinkage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageJson {
    pub lambda: Option<f64>,
    pub u: f64,
    pub beta_tilde: Vec<f64>,
    pub sure_value: f64,
    pub weights: Vec<f64>,
    pub beta_bar_hat: f64,
}

impl From<&ShrinkageResult> for ShrinkageJson {
    fn from(r: &ShrinkageResult) -> Self {
        Self {
            lambda: r.lambda.is_finite().then_some(r.lambda),
            u: r.u,
            beta_tilde: r.beta_tilde.clone(),
            sure_value: r.sure_value,
            weights: r.weights.clone(),
            beta_bar_hat: r.beta_bar_hat,
        }
    }
}

// Chains

/// Parameter label with a 1-based brand index, e.g. `beta[1]`.
pub fn param_label(p: Param) -> String {
    match p {
        Param::Alpha0(b) => format!("alpha0[{}]", b + 1),
        Param::Alpha1(b) => format!("alpha1[{}]", b + 1),
        Param::Beta(b) => format!("beta[{}]", b + 1),
        Param::Sigma2(b) => format!("sigma2[{}]", b + 1),
        other => other.name(),
    }
}

pub fn parse_param_label(label: &str) -> Option<Param> {
    let Some((head, rest)) = label.split_once('[') else {
        return Param::parse(label);
    };
    let b: usize = rest.strip_suffix(']')?.parse().ok()?;
    Param::parse(&format!("{head}[{}]", b.checked_sub(1)?))
}

#[derive(Serialize, Deserialize)]
struct ChainRow {
    chain: usize,
    iter: usize,
    param: String,
    value: f64,
}

/// One row per retained draw and parameter. `iter` counts sampler
/// iterations from zero, so the first retained draw is `burn_in`.
pub fn write_chains<W: Write>(w: W, chains: &PosteriorChains, burn_in: usize, thin: usize) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let params = Param::all(chains.b_count());
    let names: Vec<String> = params.iter().map(|&p| param_label(p)).collect();
    let p = chains.param_count();
    for c in 0..chains.chain_count() {
        let draws = chains.chain(c);
        for k in 0..chains.draws_per_chain() {
            for (j, name) in names.iter().enumerate() {
                out.serialize(ChainRow {
                    chain: c + 1,
                    iter: burn_in + k * thin,
                    param: name.clone(),
                    value: draws[k * p + params[j].index(chains.b_count())],
                })?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a chains CSV written by [`write_chains`].
pub fn read_chains<R: Read>(r: R) -> Result<PosteriorChains> {
    let mut rdr = csv::Reader::from_reader(r);
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<ChainRow>, _>>()?;
    let mut b_count = 0;
    let mut chain_count = 0;
    for row in &rows {
        let param = parse_param_label(&row.param).ok_or_else(|| anyhow!("unknown parameter `{}`", row.param))?;
        if let Param::Alpha0(b) | Param::Alpha1(b) | Param::Beta(b) | Param::Sigma2(b) = param {
            b_count = b_count.max(b + 1);
        }
        chain_count = chain_count.max(row.chain);
    }
    let p = 4 * b_count + 2;
    if chain_count == 0 || rows.len() % (p * chain_count) != 0 {
        bail!("chains file is incomplete");
    }
    let draws = rows.len() / (p * chain_count);
    let mut chains = vec![vec![f64::NAN; draws * p]; chain_count];
    let mut iters: Vec<usize> = rows.iter().map(|r| r.iter).collect();
    iters.sort_unstable();
    iters.dedup();
    if iters.len() != draws {
        bail!("chains have {} distinct iterations, expected {draws}", iters.len());
    }
    for row in &rows {
        let k = iters.binary_search(&row.iter).unwrap_or(usize::MAX);
        let j = parse_param_label(&row.param).map(|x| x.index(b_count)).unwrap_or(usize::MAX);
        let slot = row
            .chain
            .checked_sub(1)
            .and_then(|c| chains.get_mut(c))
            .and_then(|c| c.get_mut(k.saturating_mul(p).saturating_add(j)))
            .ok_or_else(|| anyhow!("chain {} iter {} out of range", row.chain, row.iter))?;
        *slot = row.value;
    }
    if chains.iter().flatten().any(|v| v.is_nan()) {
        bail!("chains file is missing draws");
    }
    Ok(PosteriorChains::from_parts(b_count, draws, chains)?)
}
