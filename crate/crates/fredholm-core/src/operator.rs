//! Finite truncations of operators on l2(N).
//!
//! Operators are described constructively by [`OperatorSpec`] (Toeplitz with
//! a given symbol, the unilateral shift and its adjoint, scalar plus
//! finite-support compact, perturbations, products) and realized as dense
//! complex matrices at any size. The truncation convention is compression
//! onto the first n basis vectors; rectangular sections exist for the
//! Toeplitz-backed variants and are what the analytic index engine consumes.
//!
//! [`polar_phase`] computes the partial-isometry factor of the polar
//! decomposition by singular value thresholding, together with projectors
//! onto the detected kernel and cokernel. [`defect_operators`] forms
//! P = I - t s and Q = I - s t for an operator/parametrix pair. On finite
//! truncations tr(Q) - tr(P) vanishes identically (it is a trace of a
//! commutator difference), so these are exposed for inspection only; the
//! index engines evaluate the corresponding infinite-model quantity from
//! Fourier coefficients instead.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::symbol::Symbol;

/// A dense finite section of an operator, with a provenance tag recording
/// which specification and truncation produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    entries: DMatrix<Complex64>,
    tag: String,
}

impl TruncatedOperator {
    /// Wraps a dense matrix, validating that it is nonempty and finite.
    pub fn new(entries: DMatrix<Complex64>, tag: impl Into<String>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::EmptyOperator);
        }
        for (idx, v) in entries.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                let row = idx % entries.nrows();
                let col = idx / entries.nrows();
                return Err(Error::InvalidConfig(format!(
                    "nonfinite entry at ({row},{col})"
                )));
            }
        }
        Ok(TruncatedOperator {
            entries,
            tag: tag.into(),
        })
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Conjugate transpose (rows and columns swap).
    pub fn adjoint(&self) -> TruncatedOperator {
        TruncatedOperator {
            entries: self.entries.adjoint(),
            tag: format!("adjoint({})", self.tag),
        }
    }

    /// Largest entrywise deviation from another operator of the same shape.
    pub fn max_abs_diff(&self, other: &TruncatedOperator) -> f64 {
        assert_eq!(self.rows(), other.rows(), "row mismatch");
        assert_eq!(self.cols(), other.cols(), "col mismatch");
        (&self.entries - &other.entries)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// The Toeplitz section A[j, k] = c_{j - k} of a symbol, with independent
/// row and column counts. Rows and columns must be positive.
pub fn toeplitz_truncation(f: &Symbol, rows: usize, cols: usize) -> TruncatedOperator {
    assert!(rows > 0 && cols > 0, "toeplitz section must be nonempty");
    let entries = DMatrix::from_fn(rows, cols, |j, k| f.coeff(j as i64 - k as i64));
    TruncatedOperator {
        entries,
        tag: format!("toeplitz:{f} [{rows}x{cols}]"),
    }
}

/// A finite-support perturbation: finitely many (row, col, value) entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    terms: Vec<(usize, usize, Complex64)>,
}

impl PerturbationSpec {
    pub fn new(terms: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        for (row, col, v) in &terms {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "nonfinite perturbation value at ({row},{col})"
                )));
            }
        }
        Ok(PerturbationSpec { terms })
    }

    pub fn empty() -> Self {
        PerturbationSpec { terms: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(usize, usize, Complex64)] {
        &self.terms
    }

    /// Number of leading basis vectors touched by the support (0 if empty).
    pub fn support(&self) -> usize {
        self.terms
            .iter()
            .map(|(r, c, _)| r.max(c) + 1)
            .max()
            .unwrap_or(0)
    }

    /// The adjoint perturbation: transposed indices, conjugated values.
    pub fn adjoint(&self) -> PerturbationSpec {
        PerturbationSpec {
            terms: self
                .terms
                .iter()
                .map(|(r, c, v)| (*c, *r, v.conj()))
                .collect(),
        }
    }

    fn add_into(&self, m: &mut DMatrix<Complex64>) {
        for (r, c, v) in &self.terms {
            m[(*r, *c)] += v;
        }
    }
}

/// Constructive description of an operator family on l2(N).
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    /// The Toeplitz operator of a symbol.
    Toeplitz(Symbol),
    /// The unilateral shift (Toeplitz operator of z).
    Shift,
    /// The backward shift (Toeplitz operator of 1/z).
    AdjointShift,
    /// lambda * identity plus a finite-support compact part.
    ScalarPlusCompact {
        lambda: Complex64,
        perturbation: PerturbationSpec,
    },
    /// A base operator plus a finite-support compact perturbation.
    Perturbed {
        base: Box<OperatorSpec>,
        perturbation: PerturbationSpec,
    },
    /// The product of the members, realized as a product of truncations.
    Product(Vec<OperatorSpec>),
}

impl OperatorSpec {
    pub fn toeplitz(f: Symbol) -> Self {
        OperatorSpec::Toeplitz(f)
    }

    pub fn scalar_plus_compact(lambda: Complex64, perturbation: PerturbationSpec) -> Self {
        OperatorSpec::ScalarPlusCompact {
            lambda,
            perturbation,
        }
    }

    pub fn perturbed(base: OperatorSpec, perturbation: PerturbationSpec) -> Self {
        OperatorSpec::Perturbed {
            base: Box::new(base),
            perturbation,
        }
    }

    /// Structural validation: products are nonempty and scalars finite.
    pub fn validate(&self) -> Result<()> {
        match self {
            OperatorSpec::Toeplitz(_) | OperatorSpec::Shift | OperatorSpec::AdjointShift => Ok(()),
            OperatorSpec::ScalarPlusCompact { lambda, .. } => {
                if !lambda.re.is_finite() || !lambda.im.is_finite() {
                    Err(Error::InvalidConfig("nonfinite scalar".into()))
                } else {
                    Ok(())
                }
            }
            OperatorSpec::Perturbed { base, .. } => base.validate(),
            OperatorSpec::Product(members) => {
                if members.is_empty() {
                    return Err(Error::InvalidConfig("empty product".into()));
                }
                members.iter().try_for_each(|m| m.validate())
            }
        }
    }

    /// Number of leading basis vectors every truncation must cover so that
    /// all perturbation supports fit.
    pub fn support(&self) -> usize {
        match self {
            OperatorSpec::Toeplitz(_) | OperatorSpec::Shift | OperatorSpec::AdjointShift => 0,
            OperatorSpec::ScalarPlusCompact { perturbation, .. } => perturbation.support(),
            OperatorSpec::Perturbed { base, perturbation } => {
                base.support().max(perturbation.support())
            }
            OperatorSpec::Product(members) => {
                members.iter().map(|m| m.support()).max().unwrap_or(0)
            }
        }
    }

    /// The symbol this operator has modulo compacts, when one exists:
    /// perturbations inherit their base's symbol and products multiply
    /// member symbols. A compact operator (zero scalar part) has none.
    pub fn essential_symbol(&self) -> Option<Symbol> {
        match self {
            OperatorSpec::Toeplitz(f) => Some(f.clone()),
            OperatorSpec::Shift => Some(Symbol::monomial(1)),
            OperatorSpec::AdjointShift => Some(Symbol::monomial(-1)),
            OperatorSpec::ScalarPlusCompact { lambda, .. } => Symbol::constant(*lambda).ok(),
            OperatorSpec::Perturbed { base, .. } => base.essential_symbol(),
            OperatorSpec::Product(members) => {
                let mut acc: Option<Symbol> = None;
                for m in members {
                    let s = m.essential_symbol()?;
                    acc = Some(match acc {
                        None => s,
                        Some(a) => a.multiply(&s),
                    });
                }
                acc
            }
        }
    }

    /// Specification of the adjoint operator.
    pub fn adjoint_spec(&self) -> OperatorSpec {
        match self {
            OperatorSpec::Toeplitz(f) => OperatorSpec::Toeplitz(f.conjugate()),
            OperatorSpec::Shift => OperatorSpec::AdjointShift,
            OperatorSpec::AdjointShift => OperatorSpec::Shift,
            OperatorSpec::ScalarPlusCompact {
                lambda,
                perturbation,
            } => OperatorSpec::ScalarPlusCompact {
                lambda: lambda.conj(),
                perturbation: perturbation.adjoint(),
            },
            OperatorSpec::Perturbed { base, perturbation } => OperatorSpec::Perturbed {
                base: Box::new(base.adjoint_spec()),
                perturbation: perturbation.adjoint(),
            },
            OperatorSpec::Product(members) => {
                OperatorSpec::Product(members.iter().rev().map(|m| m.adjoint_spec()).collect())
            }
        }
    }

    /// The n x n truncation of this operator.
    ///
    /// Products multiply member truncations (a truncation of the product
    /// would differ near the boundary; the tag records the convention).
    pub fn realize(&self, n: usize) -> Result<TruncatedOperator> {
        self.validate()?;
        if n == 0 {
            return Err(Error::EmptyOperator);
        }
        let support = self.support();
        if n < support {
            return Err(Error::TruncationTooSmall { size: n, support });
        }
        match self {
            OperatorSpec::Product(members) => {
                let mut acc: Option<DMatrix<Complex64>> = None;
                for m in members {
                    let t = m.realize(n)?;
                    acc = Some(match acc {
                        None => t.entries,
                        Some(a) => a * t.entries,
                    });
                }
                Ok(TruncatedOperator {
                    entries: acc.expect("product validated nonempty"),
                    tag: format!("{self} [{n}x{n}] (product of truncations)"),
                })
            }
            _ => {
                let entries = self.rectangular_entries(n, n)?;
                Ok(TruncatedOperator {
                    entries,
                    tag: format!("{self} [{n}x{n}]"),
                })
            }
        }
    }

    /// A rectangular section (rows x cols compression). Defined for the
    /// Toeplitz-backed variants and their perturbations; products have no
    /// meaningful rectangular compression and are rejected.
    pub fn rectangular_section(&self, rows: usize, cols: usize) -> Result<TruncatedOperator> {
        self.validate()?;
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyOperator);
        }
        let support = self.support();
        if rows.min(cols) < support {
            return Err(Error::TruncationTooSmall {
                size: rows.min(cols),
                support,
            });
        }
        let entries = self.rectangular_entries(rows, cols)?;
        Ok(TruncatedOperator {
            entries,
            tag: format!("{self} [{rows}x{cols}]"),
        })
    }

    fn rectangular_entries(&self, rows: usize, cols: usize) -> Result<DMatrix<Complex64>> {
        match self {
            OperatorSpec::Toeplitz(f) => Ok(toeplitz_truncation(f, rows, cols).entries),
            OperatorSpec::Shift => Ok(toeplitz_truncation(&Symbol::monomial(1), rows, cols).entries),
            OperatorSpec::AdjointShift => {
                Ok(toeplitz_truncation(&Symbol::monomial(-1), rows, cols).entries)
            }
            OperatorSpec::ScalarPlusCompact {
                lambda,
                perturbation,
            } => {
                let mut m = DMatrix::from_fn(rows, cols, |j, k| {
                    if j == k {
                        *lambda
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                perturbation.add_into(&mut m);
                Ok(m)
            }
            OperatorSpec::Perturbed { base, perturbation } => {
                let mut m = base.rectangular_entries(rows, cols)?;
                perturbation.add_into(&mut m);
                Ok(m)
            }
            OperatorSpec::Product(_) => Err(Error::UnsupportedSection("product".into())),
        }
    }

    /// Parses the textual operator format used by the CLI and corpus files:
    /// `toeplitz:<symbol>`, `shift`, `shift*`,
    /// `scalar:<re>,<im>[+K:<quads>]`, `perturb:<spec>+K:<quads>`,
    /// `product:[<spec>|<spec>|...]`, where `<quads>` is a `;`-separated
    /// list of `row,col,re,im` entries.
    pub fn parse(text: &str) -> Result<OperatorSpec> {
        let text = text.trim();
        match text {
            "shift" => return Ok(OperatorSpec::Shift),
            "shift*" => return Ok(OperatorSpec::AdjointShift),
            _ => {}
        }
        if let Some(rest) = text.strip_prefix("toeplitz:") {
            return Ok(OperatorSpec::Toeplitz(Symbol::parse(rest)?));
        }
        if let Some(rest) = text.strip_prefix("scalar:") {
            let (head, perturbation) = match split_last_k(rest) {
                Some((head, k_text)) => (head, parse_quads(k_text)?),
                None => (rest, PerturbationSpec::empty()),
            };
            let parts: Vec<&str> = head.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::parse(head, "expected 'scalar:re,im'"));
            }
            let lambda = Complex64::new(parse_real(parts[0])?, parse_real(parts[1])?);
            return Ok(OperatorSpec::ScalarPlusCompact {
                lambda,
                perturbation,
            });
        }
        if let Some(rest) = text.strip_prefix("perturb:") {
            let (head, k_text) = split_last_k(rest)
                .ok_or_else(|| Error::parse(rest, "perturb needs a '+K:' part"))?;
            return Ok(OperatorSpec::Perturbed {
                base: Box::new(OperatorSpec::parse(head)?),
                perturbation: parse_quads(k_text)?,
            });
        }
        if let Some(rest) = text.strip_prefix("product:") {
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| Error::parse(rest, "expected 'product:[...]'"))?;
            let mut members = Vec::new();
            for part in split_top_level(inner, '|') {
                let part = part.trim();
                if part.is_empty() {
                    return Err(Error::parse(inner, "empty product member"));
                }
                members.push(OperatorSpec::parse(part)?);
            }
            if members.is_empty() {
                return Err(Error::parse(text, "product needs at least one member"));
            }
            return Ok(OperatorSpec::Product(members));
        }
        Err(Error::parse(
            text,
            "expected 'toeplitz:', 'shift', 'shift*', 'scalar:', 'perturb:' or 'product:'",
        ))
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorSpec::Toeplitz(s) => write!(f, "toeplitz:{s}"),
            OperatorSpec::Shift => write!(f, "shift"),
            OperatorSpec::AdjointShift => write!(f, "shift*"),
            OperatorSpec::ScalarPlusCompact {
                lambda,
                perturbation,
            } => {
                write!(f, "scalar:{},{}", lambda.re, lambda.im)?;
                if !perturbation.is_empty() {
                    write!(f, "+K:{}", format_quads(perturbation))?;
                }
                Ok(())
            }
            OperatorSpec::Perturbed { base, perturbation } => {
                write!(f, "perturb:{base}+K:{}", format_quads(perturbation))
            }
            OperatorSpec::Product(members) => {
                write!(f, "product:[")?;
                for (i, m) in members.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{m}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl Serialize for OperatorSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for OperatorSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        OperatorSpec::parse(&text).map_err(D::Error::custom)
    }
}

/// Splits at the last top-level "+K:" (one not nested inside brackets).
fn split_last_k(text: &str) -> Option<(&str, &str)> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut split_at = None;
    for i in 0..bytes.len() {
        match bytes[i] {
            b'[' => depth += 1,
            b']' => depth = depth.saturating_sub(1),
            b'+' if depth == 0 && text[i..].starts_with("+K:") => split_at = Some(i),
            _ => {}
        }
    }
    split_at.map(|i| (&text[..i], &text[i + 3..]))
}

/// Splits on a separator at bracket depth zero.
fn split_top_level(text: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, ch) in text.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    parts
}

fn parse_quads(text: &str) -> Result<PerturbationSpec> {
    let mut terms = Vec::new();
    for chunk in text.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let parts: Vec<&str> = chunk.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::parse(chunk, "expected 'row,col,re,im'"));
        }
        let row: usize = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(parts[0], "expected a nonnegative row index"))?;
        let col: usize = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(parts[1], "expected a nonnegative column index"))?;
        let value = Complex64::new(parse_real(parts[2])?, parse_real(parts[3])?);
        terms.push((row, col, value));
    }
    PerturbationSpec::new(terms)
}

fn format_quads(p: &PerturbationSpec) -> String {
    p.terms()
        .iter()
        .map(|(r, c, v)| format!("{r},{c},{},{}", v.re, v.im))
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_real(text: &str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| Error::parse(text, "expected a real number"))
}

/// The partial-isometry factor of a polar decomposition, with the detected
/// kernel and cokernel projectors.
#[derive(Debug, Clone)]
pub struct PhaseResult {
    /// U D V* where D keeps exactly the singular directions above tolerance.
    pub phase: TruncatedOperator,
    /// Projector onto right-singular vectors at or below tolerance.
    pub kernel_projector: TruncatedOperator,
    /// Projector onto the matching left-singular vectors.
    pub cokernel_projector: TruncatedOperator,
    /// Smallest retained singular value divided by the threshold; infinite
    /// when nothing was thresholded away from zero.
    pub sv_gap: f64,
}

impl PhaseResult {
    /// A gap below 2 means singular values straddle the tolerance and the
    /// kernel/cokernel split is not trustworthy. Advisory, never fatal.
    pub fn ill_separated(&self) -> bool {
        self.sv_gap < 2.0
    }
}

/// Singular-value-thresholded polar phase of a square truncation.
///
/// With op = U Sigma V*, the phase is U D V* where D is 1 on singular values
/// above `tol * sigma_max` and 0 otherwise; the kernel projector spans the
/// discarded right-singular vectors, the cokernel projector the discarded
/// left-singular vectors.
pub fn polar_phase(op: &TruncatedOperator, tol: f64) -> Result<PhaseResult> {
    if op.rows() == 0 || op.cols() == 0 {
        return Err(Error::EmptyOperator);
    }
    if op.rows() != op.cols() {
        return Err(Error::DimensionMismatch(format!(
            "polar phase needs a square operator, got {}x{}",
            op.rows(),
            op.cols()
        )));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidConfig(
            "phase tolerance must lie in (0, 1)".into(),
        ));
    }
    let n = op.rows();
    let svd = op.entries.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let threshold = tol * sigma_max;

    // Zero the discarded columns of U, then U D V* is one product away.
    let mut u_kept = u.clone();
    let mut u_small = u.clone();
    let mut vt_small = v_t.clone();
    let mut smallest_kept = f64::INFINITY;
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > threshold {
            smallest_kept = smallest_kept.min(sigma);
            u_small.column_mut(i).fill(Complex64::new(0.0, 0.0));
            vt_small.row_mut(i).fill(Complex64::new(0.0, 0.0));
        } else {
            u_kept.column_mut(i).fill(Complex64::new(0.0, 0.0));
        }
    }
    let phase = &u_kept * v_t;
    let kernel = vt_small.adjoint() * &vt_small;
    let cokernel = &u_small * u_small.adjoint();
    debug_assert_eq!(phase.nrows(), n);
    let sv_gap = if threshold > 0.0 && smallest_kept.is_finite() {
        smallest_kept / threshold
    } else {
        f64::INFINITY
    };
    Ok(PhaseResult {
        phase: TruncatedOperator {
            entries: phase,
            tag: format!("phase({})", op.tag),
        },
        kernel_projector: TruncatedOperator {
            entries: kernel,
            tag: format!("kernel-projector({})", op.tag),
        },
        cokernel_projector: TruncatedOperator {
            entries: cokernel,
            tag: format!("cokernel-projector({})", op.tag),
        },
        sv_gap,
    })
}

/// Defect operators P = I - t s and Q = I - s t for an operator t and a
/// candidate parametrix s (square, equal size).
pub fn defect_operators(
    t: &TruncatedOperator,
    s: &TruncatedOperator,
) -> Result<(TruncatedOperator, TruncatedOperator)> {
    if t.rows() != t.cols() || s.rows() != s.cols() || t.rows() != s.rows() {
        return Err(Error::DimensionMismatch(format!(
            "defect operators need equal square shapes, got {}x{} and {}x{}",
            t.rows(),
            t.cols(),
            s.rows(),
            s.cols()
        )));
    }
    let eye = DMatrix::<Complex64>::identity(t.rows(), t.rows());
    let p = &eye - &t.entries * &s.entries;
    let q = &eye - &s.entries * &t.entries;
    Ok((
        TruncatedOperator {
            entries: p,
            tag: format!("I - ({})({})", t.tag, s.tag),
        },
        TruncatedOperator {
            entries: q,
            tag: format!("I - ({})({})", s.tag, t.tag),
        },
    ))
}
