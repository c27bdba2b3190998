//! Balanced ±1 treatment-assignment matrices.
//!
//! A design is a `G x B` grid (GEOs by brands) of `+1` (treatment) and `-1`
//! (control). Useful designs are *balanced*: every GEO treats half of the
//! brands and every brand is treated in half of the GEOs.
//!
//! The scrambled checkerboard starts from the alternating pattern and applies
//! margin-preserving 2x2 swaps (the Diaconis–Gangolli chain with acceptance
//! probability one), whose stationary distribution is uniform over balanced
//! matrices.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // redundant when std is linked
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};

pub const TREATMENT: i8 = 1;
pub const CONTROL: i8 = -1;

/// Expected flips per cell targeted by [`default_attempts`].
pub const FLIPS_PER_CELL: usize = 25;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DesignMatrix {
    g_count: usize,
    b_count: usize,
    /// Row-major, one row per GEO.
    entries: Vec<i8>,
}

impl DesignMatrix {
    /// Builds a matrix from row-major entries.
    ///
    /// Any ±1 matrix is accepted so that candidate designs (including
    /// unbalanced ones) can be inspected with [`DesignMatrix::validate`].
    /// Operations that need balance check it themselves.
    pub fn from_entries(g_count: usize, b_count: usize, entries: Vec<i8>) -> Result<Self> {
        if g_count == 0 || b_count == 0 {
            return Err(Error::Empty);
        }
        if entries.len() != g_count * b_count {
            return Err(Error::DimensionMismatch {
                expected: g_count * b_count,
                found: entries.len(),
            });
        }
        if let Some(&bad) = entries.iter().find(|&&v| v != TREATMENT && v != CONTROL) {
            return Err(Error::InvalidEntry(bad));
        }
        Ok(Self {
            g_count,
            b_count,
            entries,
        })
    }

    /// Parses rows written with `+` for treatment and `.` or `-` for control.
    /// Whitespace is ignored.
    pub fn from_pattern(rows: &[&str]) -> Result<Self> {
        let mut entries = Vec::new();
        let mut width = None;
        for row in rows {
            let start = entries.len();
            for ch in row.chars().filter(|c| !c.is_whitespace()) {
                entries.push(match ch {
                    '+' => TREATMENT,
                    '.' | '-' => CONTROL,
                    _ => return Err(Error::InvalidEntry(0)),
                });
            }
            let len = entries.len() - start;
            match width {
                None => width = Some(len),
                Some(w) if w != len => {
                    return Err(Error::DimensionMismatch {
                        expected: w,
                        found: len,
                    })
                }
                _ => {}
            }
        }
        Self::from_entries(rows.len(), width.unwrap_or(0), entries)
    }

    /// The alternating pattern: `+1` exactly where `g + b` is even.
    pub fn checkerboard(g_count: usize, b_count: usize) -> Result<Self> {
        check_even(g_count, b_count)?;
        let entries = (0..g_count)
            .flat_map(|g| {
                (0..b_count).map(move |b| if (g + b) % 2 == 0 { TREATMENT } else { CONTROL })
            })
            .collect();
        Ok(Self {
            g_count,
            b_count,
            entries,
        })
    }

    pub fn g_count(&self) -> usize {
        self.g_count
    }

    pub fn b_count(&self) -> usize {
        self.b_count
    }

    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, g: usize, b: usize) -> i8 {
        self.entries[g * self.b_count + b]
    }

    #[inline]
    pub fn is_treated(&self, g: usize, b: usize) -> bool {
        self.get(g, b) == TREATMENT
    }

    pub fn row(&self, g: usize) -> &[i8] {
        &self.entries[g * self.b_count..(g + 1) * self.b_count]
    }

    pub fn column(&self, b: usize) -> Vec<i8> {
        (0..self.g_count).map(|g| self.get(g, b)).collect()
    }

    pub fn row_sums(&self) -> Vec<i32> {
        (0..self.g_count)
            .map(|g| self.row(g).iter().map(|&v| v as i32).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<i32> {
        let mut sums = vec![0i32; self.b_count];
        for g in 0..self.g_count {
            for (s, &v) in sums.iter_mut().zip(self.row(g)) {
                *s += v as i32;
            }
        }
        sums
    }

    pub fn is_balanced(&self) -> bool {
        self.row_sums().iter().all(|&s| s == 0) && self.column_sums().iter().all(|&s| s == 0)
    }

    /// Keeps the listed brand columns, in the given order.
    pub fn select_brands(&self, brands: &[usize]) -> Result<Self> {
        if brands.is_empty() {
            return Err(Error::Empty);
        }
        for &b in brands {
            if b >= self.b_count {
                return Err(Error::IndexOutOfRange {
                    index: b,
                    len: self.b_count,
                });
            }
        }
        let entries = (0..self.g_count)
            .flat_map(|g| brands.iter().map(move |&b| (g, b)))
            .map(|(g, b)| self.get(g, b))
            .collect();
        Self::from_entries(self.g_count, brands.len(), entries)
    }

    pub fn transpose(&self) -> Self {
        let entries = (0..self.b_count)
            .flat_map(|b| (0..self.g_count).map(move |g| (g, b)))
            .map(|(g, b)| self.get(g, b))
            .collect();
        Self {
            g_count: self.b_count,
            b_count: self.g_count,
            entries,
        }
    }

    /// Swaps the 2x2 submatrix on the given rows and columns when it is one of
    /// the two flippable patterns `(+,-;-,+)` and `(-,+;+,-)`. Row and column
    /// sums are unchanged either way.
    pub fn try_flip(&mut self, rows: (usize, usize), cols: (usize, usize)) -> bool {
        let (r1, r2) = rows;
        let (c1, c2) = cols;
        let a = self.get(r1, c1);
        let b = self.get(r1, c2);
        let c = self.get(r2, c1);
        let d = self.get(r2, c2);
        if a == d && b == c && a != b {
            let w = self.b_count;
            for idx in [r1 * w + c1, r1 * w + c2, r2 * w + c1, r2 * w + c2] {
                self.entries[idx] = -self.entries[idx];
            }
            true
        } else {
            false
        }
    }

    /// One step of the swap chain: two distinct rows and two distinct columns
    /// are drawn uniformly and the submatrix is switched if flippable.
    pub fn flip_attempt<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        if self.g_count < 2 || self.b_count < 2 {
            return false;
        }
        let rows = distinct_pair(rng, self.g_count);
        let cols = distinct_pair(rng, self.b_count);
        self.try_flip(rows, cols)
    }

    /// Brand-pair correlation `(1/G) sum_g x[g,b] x[g,b']`.
    pub fn brand_correlation(&self, b1: usize, b2: usize) -> f64 {
        self.brand_dot(b1, b2) as f64 / self.g_count as f64
    }

    /// GEO-pair correlation `(1/B) sum_b x[g,b] x[g',b]`.
    pub fn geo_correlation(&self, g1: usize, g2: usize) -> f64 {
        self.geo_dot(g1, g2) as f64 / self.b_count as f64
    }

    fn brand_dot(&self, b1: usize, b2: usize) -> i32 {
        (0..self.g_count)
            .map(|g| (self.get(g, b1) * self.get(g, b2)) as i32)
            .sum()
    }

    fn geo_dot(&self, g1: usize, g2: usize) -> i32 {
        self.row(g1)
            .iter()
            .zip(self.row(g2))
            .map(|(&x, &y)| (x * y) as i32)
            .sum()
    }

    /// Sum of squared brand correlations over ordered pairs. With
    /// `include_diagonal` the `b = b'` terms (each equal to one) are counted.
    pub fn brand_sum_sq(&self, include_diagonal: bool) -> f64 {
        let mut total = 0.0;
        for b1 in 0..self.b_count {
            for b2 in 0..self.b_count {
                if b1 != b2 || include_diagonal {
                    total += self.brand_correlation(b1, b2).powi(2);
                }
            }
        }
        total
    }

    /// Sum of squared GEO correlations over ordered pairs.
    pub fn geo_sum_sq(&self, include_diagonal: bool) -> f64 {
        let mut total = 0.0;
        for g1 in 0..self.g_count {
            for g2 in 0..self.g_count {
                if g1 != g2 || include_diagonal {
                    total += self.geo_correlation(g1, g2).powi(2);
                }
            }
        }
        total
    }

    pub fn correlations(&self) -> CorrelationSummary {
        let brand = PairStats::collect(self.b_count, |i, j| self.brand_correlation(i, j));
        let geo = PairStats::collect(self.g_count, |i, j| self.geo_correlation(i, j));
        CorrelationSummary {
            brand_min: brand.min,
            brand_max: brand.max,
            brand_rms: brand.rms,
            geo_min: geo.min,
            geo_max: geo.max,
            geo_rms: geo.rms,
        }
    }

    /// Reports balance and every colliding pair of rows and of columns. Two
    /// ±1 vectors collide when they are equal or exact opposites.
    pub fn validate(&self) -> ValidationReport {
        let mut row_collisions = Vec::new();
        for g1 in 0..self.g_count {
            for g2 in g1 + 1..self.g_count {
                if self.geo_dot(g1, g2).unsigned_abs() as usize == self.b_count {
                    row_collisions.push((g1, g2));
                }
            }
        }
        let mut column_collisions = Vec::new();
        for b1 in 0..self.b_count {
            for b2 in b1 + 1..self.b_count {
                if self.brand_dot(b1, b2).unsigned_abs() as usize == self.g_count {
                    column_collisions.push((b1, b2));
                }
            }
        }
        ValidationReport {
            balanced: self.is_balanced(),
            row_collisions,
            column_collisions,
        }
    }
}

impl core::fmt::Display for DesignMatrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for g in 0..self.g_count {
            for &v in self.row(g) {
                f.write_str(if v == TREATMENT { "+" } else { "." })?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

fn check_even(g_count: usize, b_count: usize) -> Result<()> {
    if g_count < 2 || b_count < 2 || g_count % 2 != 0 || b_count % 2 != 0 {
        return Err(Error::OddDimension { g_count, b_count });
    }
    Ok(())
}

fn distinct_pair<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

struct PairStats {
    min: f64,
    max: f64,
    rms: f64,
}

impl PairStats {
    fn collect(n: usize, corr: impl Fn(usize, usize) -> f64) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                let r = corr(i, j);
                min = min.min(r);
                max = max.max(r);
                sum_sq += r * r;
                count += 1;
            }
        }
        if count == 0 {
            return Self {
                min: 0.0,
                max: 0.0,
                rms: 0.0,
            };
        }
        Self {
            min,
            max,
            rms: (sum_sq / count as f64).sqrt(),
        }
    }
}

/// Off-diagonal correlation extremes and root mean square, for brand pairs
/// and for GEO pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationSummary {
    pub brand_min: f64,
    pub brand_max: f64,
    pub brand_rms: f64,
    pub geo_min: f64,
    pub geo_max: f64,
    pub geo_rms: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub balanced: bool,
    pub row_collisions: Vec<(usize, usize)>,
    pub column_collisions: Vec<(usize, usize)>,
}

impl ValidationReport {
    pub fn collision_free(&self) -> bool {
        self.row_collisions.is_empty() && self.column_collisions.is_empty()
    }
}

pub fn checkerboard_init(g_count: usize, b_count: usize) -> Result<DesignMatrix> {
    DesignMatrix::checkerboard(g_count, b_count)
}

/// `2 * G * B * 25` attempts: about one in eight attempts succeeds and each
/// success flips four cells, so every cell flips about 25 times.
pub fn default_attempts(g_count: usize, b_count: usize) -> usize {
    2 * g_count * b_count * FLIPS_PER_CELL
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScrambleOptions {
    pub attempts: usize,
    /// Record a correlation summary every this many accepted flips.
    pub trace_every: Option<usize>,
}

impl ScrambleOptions {
    pub fn for_dims(g_count: usize, b_count: usize) -> Self {
        Self {
            attempts: default_attempts(g_count, b_count),
            trace_every: Some(10),
        }
    }

    pub fn untraced(attempts: usize) -> Self {
        Self {
            attempts,
            trace_every: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub accepted_flips: usize,
    pub attempts: usize,
    pub summary: CorrelationSummary,
}

#[derive(Clone, Debug)]
pub struct ScrambleOutcome {
    pub design: DesignMatrix,
    pub accepted_flips: usize,
    /// Starts with the input's summary at zero flips when tracing is on.
    pub trace: Vec<TracePoint>,
}

/// Runs `options.attempts` steps of the swap chain starting from `design`.
pub fn scramble<R: Rng + ?Sized>(
    mut design: DesignMatrix,
    options: &ScrambleOptions,
    rng: &mut R,
) -> Result<ScrambleOutcome> {
    if !design.is_balanced() {
        return Err(Error::Unbalanced);
    }
    let mut trace = Vec::new();
    let every = options.trace_every.filter(|&n| n > 0);
    if every.is_some() {
        trace.push(TracePoint {
            accepted_flips: 0,
            attempts: 0,
            summary: design.correlations(),
        });
    }
    let mut accepted = 0;
    for attempt in 1..=options.attempts {
        if design.flip_attempt(rng) {
            accepted += 1;
            if let Some(n) = every {
                if accepted % n == 0 {
                    trace.push(TracePoint {
                        accepted_flips: accepted,
                        attempts: attempt,
                        summary: design.correlations(),
                    });
                }
            }
        }
    }
    Ok(ScrambleOutcome {
        design,
        accepted_flips: accepted,
        trace,
    })
}

/// A checkerboard scrambled with the default number of attempts.
pub fn scrambled_checkerboard<R: Rng + ?Sized>(
    g_count: usize,
    b_count: usize,
    rng: &mut R,
) -> Result<DesignMatrix> {
    let start = DesignMatrix::checkerboard(g_count, b_count)?;
    let options = ScrambleOptions::untraced(default_attempts(g_count, b_count));
    Ok(scramble(start, &options, rng)?.design)
}

/// Balanced, collision-free 6x6 design.
pub fn collision_free_6x6() -> DesignMatrix {
    DesignMatrix::from_pattern(&[
        "+ + + . . .",
        "+ + . + . .",
        "+ . . . + +",
        ". + . . + +",
        ". . + + + .",
        ". . + + . +",
    ])
    .expect("well-formed constant")
}

/// Balanced, collision-free 8x8 design.
pub fn collision_free_8x8() -> DesignMatrix {
    DesignMatrix::from_pattern(&[
        "+ + + + . . . .",
        "+ + . . . . + +",
        "+ . + . + + . .",
        "+ . . + . + + .",
        ". + + + + . . .",
        ". + . . + + . +",
        ". . + . + . + +",
        ". . . + . + + +",
    ])
    .expect("well-formed constant")
}

fn check_growth_input(design: &DesignMatrix, rows: &[usize], cols: &[usize]) -> Result<()> {
    let report = design.validate();
    if !report.balanced {
        return Err(Error::Unbalanced);
    }
    if !report.collision_free() {
        return Err(Error::Collisions {
            rows: report.row_collisions.len(),
            columns: report.column_collisions.len(),
        });
    }
    for (idxs, len) in [(rows, design.g_count), (cols, design.b_count)] {
        for (i, &a) in idxs.iter().enumerate() {
            if a >= len {
                return Err(Error::IndexOutOfRange { index: a, len });
            }
            if idxs[..i].contains(&a) {
                return Err(Error::RepeatedIndex);
            }
        }
    }
    Ok(())
}

fn check_sign(z: i8) -> Result<()> {
    if z == 1 || z == -1 {
        Ok(())
    } else {
        Err(Error::InvalidEntry(z))
    }
}

/// Grows a design by four rows and `2 * cols.len()` columns.
///
/// Every chosen column `c` contributes the pair `c, -c`; every chosen row `r`
/// contributes `r, -r`. Each sign `z` covers two chosen columns (four new
/// columns) and fills them with `z, z, -z, -z` on the rows built from the
/// first chosen row, negated on the rows built from the second.
fn grow_blocks(
    design: &DesignMatrix,
    rows: [usize; 2],
    cols: &[usize],
    signs: &[i8],
) -> DesignMatrix {
    let g = design.g_count;
    let b = design.b_count;
    let new_b = b + 2 * cols.len();
    let new_g = g + 4;
    let mut entries = Vec::with_capacity(new_g * new_b);
    for r in 0..g {
        entries.extend_from_slice(design.row(r));
        for &c in cols {
            let v = design.get(r, c);
            entries.push(v);
            entries.push(-v);
        }
    }
    let tail = |sign: i8, entries: &mut Vec<i8>| {
        for &z in signs {
            let z = z * sign;
            entries.extend_from_slice(&[z, z, -z, -z]);
        }
    };
    for (src, row_sign, block_sign) in [
        (rows[0], 1i8, 1i8),
        (rows[0], -1, 1),
        (rows[1], 1, -1),
        (rows[1], -1, -1),
    ] {
        entries.extend(design.row(src).iter().map(|&v| v * row_sign));
        tail(block_sign, &mut entries);
    }
    DesignMatrix {
        g_count: new_g,
        b_count: new_b,
        entries,
    }
}

/// Adds four rows and four columns to a balanced collision-free design; the
/// result is again balanced and collision-free.
pub fn grow4(design: &DesignMatrix, rows: [usize; 2], cols: [usize; 2], z: i8) -> Result<DesignMatrix> {
    check_sign(z)?;
    check_growth_input(design, &rows, &cols)?;
    Ok(grow_blocks(design, rows, &cols, &[z]))
}

/// Adds four rows and eight columns to a balanced collision-free design; the
/// result is balanced.
pub fn grow48(
    design: &DesignMatrix,
    rows: [usize; 2],
    cols: [usize; 4],
    z1: i8,
    z2: i8,
) -> Result<DesignMatrix> {
    check_sign(z1)?;
    check_sign(z2)?;
    check_growth_input(design, &rows, &cols)?;
    Ok(grow_blocks(design, rows, &cols, &[z1, z2]))
}
