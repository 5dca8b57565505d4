//! Sparse operator algebra over weighted Pauli strings on a labeled site layout.
//!
//! Qubit sites carry the usual `{I, X, Y, Z}` letters; sites of dimension
//! `d > 2` carry only the identity and powers of the diagonal clock matrix
//! `diag(1, ω, …, ω^{d-1})` with `ω = exp(2πi/d)`. Products of strings are
//! exact: a string times a string is a single string times a phase, so sums
//! of strings close under multiplication with no numerical blow-up.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::dense::DenseOperator;
use crate::error::{Error, Result};

/// Coefficients with magnitude below this are dropped after every arithmetic
/// operation, so "exactly zero operator" stays decidable.
pub const COEFF_PRUNE: f64 = 1e-14;

/// Largest total dimension accepted by dense conversion.
pub const DENSE_DIM_CAP: usize = 1 << 12;

/// Ordered list of `(label, dimension)` sites.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<SiteSchema>", into = "Vec<SiteSchema>")]
pub struct SiteLayout {
    sites: Vec<(String, usize)>,
    total_dim: usize,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
struct SiteSchema {
    site: String,
    dim: usize,
}

impl TryFrom<Vec<SiteSchema>> for SiteLayout {
    type Error = Error;
    fn try_from(v: Vec<SiteSchema>) -> Result<Self> {
        SiteLayout::new(v.into_iter().map(|s| (s.site, s.dim)).collect())
    }
}

impl From<SiteLayout> for Vec<SiteSchema> {
    fn from(l: SiteLayout) -> Self {
        l.sites
            .into_iter()
            .map(|(site, dim)| SiteSchema { site, dim })
            .collect()
    }
}

impl SiteLayout {
    pub fn new(sites: Vec<(String, usize)>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidLayout("no sites".into()));
        }
        let mut seen = BTreeSet::new();
        let mut total_dim = 1usize;
        for (label, dim) in &sites {
            if !seen.insert(label.clone()) {
                return Err(Error::InvalidLayout(format!("duplicate label `{label}`")));
            }
            if *dim < 2 {
                return Err(Error::InvalidLayout(format!(
                    "site `{label}` has dimension {dim} < 2"
                )));
            }
            total_dim = total_dim
                .checked_mul(*dim)
                .ok_or_else(|| Error::InvalidLayout("total dimension overflow".into()))?;
        }
        Ok(SiteLayout { sites, total_dim })
    }

    /// All-qubit layout from labels, e.g. `SiteLayout::qubits(&["A", "M", "B"])`.
    pub fn qubits(labels: &[&str]) -> Arc<Self> {
        Arc::new(
            Self::new(labels.iter().map(|l| (l.to_string(), 2)).collect())
                .expect("qubit layout"),
        )
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn label(&self, i: usize) -> &str {
        &self.sites[i].0
    }

    pub fn dim(&self, i: usize) -> usize {
        self.sites[i].1
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sites.iter().map(|(_, d)| *d).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.sites.iter().map(|(l, _)| l.as_str())
    }

    pub fn is_qubit(&self, i: usize) -> bool {
        self.sites[i].1 == 2
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.sites
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownSite(label.to_string()))
    }
}

/// One letter of a Pauli string.
///
/// `Diag(k)` is the k-th power of the clock matrix on a site of dimension
/// `d > 2`; qubit sites use `Z` instead of `Diag(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
    Diag(u32),
}

impl Letter {
    fn valid_for(self, dim: usize) -> bool {
        match self {
            Letter::I => true,
            Letter::X | Letter::Y | Letter::Z => dim == 2,
            Letter::Diag(k) => dim > 2 && (k as usize) < dim && k > 0,
        }
    }

    /// Action on a basis index: `L |j⟩ = phase |j'⟩`.
    fn act(self, j: usize, dim: usize) -> (usize, Complex64) {
        match self {
            Letter::I => (j, Complex64::new(1.0, 0.0)),
            Letter::X => (1 - j, Complex64::new(1.0, 0.0)),
            Letter::Y => {
                if j == 0 {
                    (1, Complex64::new(0.0, 1.0))
                } else {
                    (0, Complex64::new(0.0, -1.0))
                }
            }
            Letter::Z => (j, Complex64::new(if j == 0 { 1.0 } else { -1.0 }, 0.0)),
            Letter::Diag(k) => {
                let theta = 2.0 * PI * (j as f64) * (k as f64) / (dim as f64);
                (j, Complex64::new(theta.cos(), theta.sin()))
            }
        }
    }

    /// Product of two letters at one site: a single letter and a phase i^q.
    fn mul(self, other: Letter, dim: usize) -> (Letter, u8) {
        use Letter::*;
        match (self, other) {
            (I, p) | (p, I) => (p, 0),
            (X, X) | (Y, Y) | (Z, Z) => (I, 0),
            (X, Y) => (Z, 1),
            (Y, X) => (Z, 3),
            (Y, Z) => (X, 1),
            (Z, Y) => (X, 3),
            (Z, X) => (Y, 1),
            (X, Z) => (Y, 3),
            (Diag(a), Diag(b)) => {
                let k = (a as usize + b as usize) % dim;
                if k == 0 {
                    (I, 0)
                } else {
                    (Diag(k as u32), 0)
                }
            }
            _ => unreachable!("mixed qubit/qudit letters at one site"),
        }
    }

    /// Adjoint letter. Qubit letters are self-adjoint; `Diag(k)† = Diag(d−k)`.
    fn adjoint(self, dim: usize) -> Letter {
        match self {
            Letter::Diag(k) => Letter::Diag((dim - k as usize) as u32),
            other => other,
        }
    }
}

/// One letter per site, in layout order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString(Vec<Letter>);

impl PauliString {
    pub fn identity(n_sites: usize) -> Self {
        PauliString(vec![Letter::I; n_sites])
    }

    pub fn new(letters: Vec<Letter>, layout: &SiteLayout) -> Result<Self> {
        if letters.len() != layout.len() {
            return Err(Error::InvalidPauliString(
                format!("{letters:?}"),
                format!("expected {} letters", layout.len()),
            ));
        }
        for (i, l) in letters.iter().enumerate() {
            if !l.valid_for(layout.dim(i)) {
                return Err(Error::InvalidPauliString(
                    format!("{letters:?}"),
                    format!("letter {l:?} not supported at site `{}`", layout.label(i)),
                ));
            }
        }
        Ok(PauliString(letters))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|l| *l == Letter::I)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, l)| **l != Letter::I)
            .map(|(i, _)| i)
    }

    fn mul(&self, other: &PauliString, layout: &SiteLayout) -> (PauliString, u8) {
        let mut quarter = 0u8;
        let letters = self
            .0
            .iter()
            .zip(&other.0)
            .enumerate()
            .map(|(i, (a, b))| {
                let (l, q) = a.mul(*b, layout.dim(i));
                quarter = (quarter + q) & 3;
                l
            })
            .collect();
        (PauliString(letters), quarter)
    }

    fn adjoint(&self, layout: &SiteLayout) -> PauliString {
        PauliString(
            self.0
                .iter()
                .enumerate()
                .map(|(i, l)| l.adjoint(layout.dim(i)))
                .collect(),
        )
    }

    /// Action on a full basis index: `P |col⟩ = phase |row⟩`.
    fn act(&self, col: usize, layout: &SiteLayout) -> (usize, Complex64) {
        let mut rem = col;
        let n = layout.len();
        let mut digits = vec![0usize; n];
        for i in (0..n).rev() {
            let d = layout.dim(i);
            digits[i] = rem % d;
            rem /= d;
        }
        let mut phase = Complex64::new(1.0, 0.0);
        let mut row = 0usize;
        for (i, letter) in self.0.iter().enumerate() {
            let d = layout.dim(i);
            let (j, ph) = letter.act(digits[i], d);
            phase *= ph;
            row = row * d + j;
        }
        (row, phase)
    }

    /// Text form, e.g. `"XZI"`; clock letters render bracketed: `"X[Z2]I"`.
    pub fn text(&self) -> String {
        let mut s = String::new();
        for l in &self.0 {
            match l {
                Letter::I => s.push('I'),
                Letter::X => s.push('X'),
                Letter::Y => s.push('Y'),
                Letter::Z => s.push('Z'),
                Letter::Diag(k) => {
                    s.push_str(&format!("[Z{k}]"));
                }
            }
        }
        s
    }

    pub fn parse(text: &str, layout: &SiteLayout) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidPauliString(text.to_string(), msg.to_string());
        let mut letters = Vec::with_capacity(layout.len());
        let mut chars = text.chars().peekable();
        for i in 0..layout.len() {
            let c = chars.next().ok_or_else(|| bad("too short"))?;
            let letter = match c {
                'I' => Letter::I,
                'X' => Letter::X,
                'Y' => Letter::Y,
                'Z' => Letter::Z,
                '[' => {
                    let mut tok = String::new();
                    loop {
                        match chars.next() {
                            Some(']') => break,
                            Some(c) => tok.push(c),
                            None => return Err(bad("unterminated bracket")),
                        }
                    }
                    let k = tok
                        .strip_prefix('Z')
                        .and_then(|s| s.parse::<u32>().ok())
                        .ok_or_else(|| bad("expected [Zk]"))?;
                    Letter::Diag(k)
                }
                _ => return Err(bad("unknown letter")),
            };
            if !letter.valid_for(layout.dim(i)) {
                return Err(bad(&format!(
                    "letter not supported at site `{}`",
                    layout.label(i)
                )));
            }
            letters.push(letter);
        }
        if chars.next().is_some() {
            return Err(bad("too long"));
        }
        Ok(PauliString(letters))
    }
}

fn quarter_turn(c: Complex64, q: u8) -> Complex64 {
    match q & 3 {
        0 => c,
        1 => Complex64::new(-c.im, c.re),
        2 => -c,
        _ => Complex64::new(c.im, -c.re),
    }
}

/// Weighted sum of Pauli strings over one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliOp {
    layout: Arc<SiteLayout>,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliOp {
    pub fn zero(layout: Arc<SiteLayout>) -> Self {
        PauliOp {
            layout,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(layout: Arc<SiteLayout>) -> Self {
        let s = PauliString::identity(layout.len());
        let mut terms = BTreeMap::new();
        terms.insert(s, Complex64::new(1.0, 0.0));
        PauliOp { layout, terms }
    }

    /// Single non-identity letter at `site`, identity elsewhere.
    pub fn letter_at(layout: &Arc<SiteLayout>, site: &str, letter: Letter) -> Result<Self> {
        let idx = layout.index_of(site)?;
        let mut letters = vec![Letter::I; layout.len()];
        letters[idx] = letter;
        let s = PauliString::new(letters, layout)?;
        Ok(Self::from_terms(
            layout.clone(),
            [(s, Complex64::new(1.0, 0.0))],
        ))
    }

    pub fn from_terms(
        layout: Arc<SiteLayout>,
        terms: impl IntoIterator<Item = (PauliString, Complex64)>,
    ) -> Self {
        let mut map = BTreeMap::new();
        for (s, c) in terms {
            let entry = map.entry(s).or_insert(Complex64::new(0.0, 0.0));
            *entry += c;
        }
        map.retain(|_, c| c.norm() >= COEFF_PRUNE);
        PauliOp {
            layout,
            terms: map,
        }
    }

    pub fn layout(&self) -> &Arc<SiteLayout> {
        &self.layout
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, Complex64)> {
        self.terms.iter().map(|(s, c)| (s, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Exactly zero: the empty term map.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, s: &PauliString) -> Complex64 {
        self.terms
            .get(s)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn check_layout(&self, other: &PauliOp) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliOp) -> Result<PauliOp> {
        self.check_layout(other)?;
        let mut terms = self.terms.clone();
        for (s, c) in &other.terms {
            *terms.entry(s.clone()).or_insert(Complex64::new(0.0, 0.0)) += *c;
        }
        terms.retain(|_, c| c.norm() >= COEFF_PRUNE);
        Ok(PauliOp {
            layout: self.layout.clone(),
            terms,
        })
    }

    pub fn sub(&self, other: &PauliOp) -> Result<PauliOp> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> PauliOp {
        let mut terms = BTreeMap::new();
        for (s, v) in &self.terms {
            let w = v * c;
            if w.norm() >= COEFF_PRUNE {
                terms.insert(s.clone(), w);
            }
        }
        PauliOp {
            layout: self.layout.clone(),
            terms,
        }
    }

    /// Exact product including phases.
    pub fn mul(&self, other: &PauliOp) -> Result<PauliOp> {
        self.check_layout(other)?;
        let mut terms: BTreeMap<PauliString, Complex64> = BTreeMap::new();
        for (sa, ca) in &self.terms {
            for (sb, cb) in &other.terms {
                let (s, q) = sa.mul(sb, &self.layout);
                let c = quarter_turn(ca * cb, q);
                *terms.entry(s).or_insert(Complex64::new(0.0, 0.0)) += c;
            }
        }
        terms.retain(|_, c| c.norm() >= COEFF_PRUNE);
        Ok(PauliOp {
            layout: self.layout.clone(),
            terms,
        })
    }

    /// `ab − ba`, exact; an empty result means exactly zero.
    pub fn commutator(&self, other: &PauliOp) -> Result<PauliOp> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn adjoint(&self) -> PauliOp {
        let mut terms = BTreeMap::new();
        for (s, c) in &self.terms {
            terms.insert(s.adjoint(&self.layout), c.conj());
        }
        PauliOp {
            layout: self.layout.clone(),
            terms,
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let adj = self.adjoint();
        let keys: BTreeSet<_> = self.terms.keys().chain(adj.terms.keys()).cloned().collect();
        keys.iter()
            .all(|s| (self.coefficient(s) - adj.coefficient(s)).norm() <= tol)
    }

    /// Labels of sites where some string carries a non-identity letter.
    pub fn support(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for s in self.terms.keys() {
            for i in s.support() {
                out.insert(self.layout.label(i).to_string());
            }
        }
        out
    }

    pub fn support_indices(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for s in self.terms.keys() {
            out.extend(s.support());
        }
        out
    }

    /// Exact dense matrix; errors above the dimension cap.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        let dim = self.layout.total_dim();
        if dim > DENSE_DIM_CAP {
            return Err(Error::DimensionCap {
                dim,
                cap: DENSE_DIM_CAP,
            });
        }
        let mut m = DenseOperator::zeros(dim);
        for (s, c) in &self.terms {
            for col in 0..dim {
                let (row, ph) = s.act(col, &self.layout);
                *m.get_mut(row, col) += c * ph;
            }
        }
        Ok(m)
    }

    /// Orthogonal projection of `m` onto the string basis.
    ///
    /// Returns the projected operator plus the Frobenius norm of what the
    /// basis cannot represent (nonzero only when non-qubit sites hold
    /// off-diagonal weight). Coefficients below `drop_tol` are discarded.
    pub fn project_dense(
        layout: &Arc<SiteLayout>,
        m: &DenseOperator,
        drop_tol: f64,
    ) -> Result<(PauliOp, f64)> {
        let dim = layout.total_dim();
        if m.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: m.dim(),
            });
        }
        let mut terms = BTreeMap::new();
        let mut remainder = m.clone();
        for s in all_strings(layout) {
            // Tr(P† M) = Σ_col conj(phase_col) · M[σ(col), col]
            let mut tr = Complex64::new(0.0, 0.0);
            for col in 0..dim {
                let (row, ph) = s.act(col, layout);
                tr += ph.conj() * m.get(row, col);
            }
            let c = tr / dim as f64;
            for col in 0..dim {
                let (row, ph) = s.act(col, layout);
                *remainder.get_mut(row, col) -= c * ph;
            }
            if c.norm() >= drop_tol {
                terms.insert(s, c);
            }
        }
        // What the basis cannot represent, measured without cancellation.
        let residual = remainder.frobenius();
        Ok((
            PauliOp {
                layout: layout.clone(),
                terms,
            },
            residual,
        ))
    }
}

/// Every string over the layout's alphabet, in canonical order.
pub fn all_strings(layout: &SiteLayout) -> Vec<PauliString> {
    let mut acc: Vec<Vec<Letter>> = vec![Vec::new()];
    for i in 0..layout.len() {
        let letters: Vec<Letter> = if layout.is_qubit(i) {
            vec![Letter::I, Letter::X, Letter::Y, Letter::Z]
        } else {
            let mut v = vec![Letter::I];
            v.extend((1..layout.dim(i) as u32).map(Letter::Diag));
            v
        };
        let mut next = Vec::with_capacity(acc.len() * letters.len());
        for prefix in &acc {
            for l in &letters {
                let mut p = prefix.clone();
                p.push(*l);
                next.push(p);
            }
        }
        acc = next;
    }
    let mut strings: Vec<PauliString> = acc.into_iter().map(PauliString).collect();
    strings.sort();
    strings
}
