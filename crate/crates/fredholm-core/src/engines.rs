//! Three independent Fredholm-index engines and their reconciliation.
//!
//! * topological: index = -wind(symbol), computed by both winding
//!   algorithms, which must agree;
//! * analytic: dim ker - dim coker counted from small singular values of
//!   tall rectangular Toeplitz sections over a ladder of truncation sizes
//!   (square sections are useless here: they force dim ker = dim coker);
//! * K-theoretic: the trace difference tr(I - T_g T_f) - tr(I - T_f T_g)
//!   for the parametrix symbol g = 1/f, evaluated in the infinite model as
//!   the Fourier-coefficient series sum_{m>=1} m (g_m f_{-m} - f_m g_{-m}).
//!   On finite truncations this trace difference vanishes identically, so
//!   the series is the only faithful finite computation.
//!
//! Engines never guess: a value that fails to stabilize or lands too far
//! from an integer is reported as `Undetermined`, a first-class verdict.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::operator::{OperatorSpec, PerturbationSpec};
use crate::symbol::{
    reciprocal_coeffs, winding_contour, winding_phase_unwrap, Symbol, UnitCircleGrid,
};

/// Default bandwidth for the K-theoretic parametrix truncation.
pub const DEFAULT_BANDWIDTH: usize = 64;

/// Reciprocal tails above this invalidate the K-theoretic series.
pub const RECIPROCAL_TAIL_LIMIT: f64 = 1e-10;

/// Series estimates further than this from an integer are rejected.
pub const SERIES_RESIDUAL_LIMIT: f64 = 0.25;

/// Maximum grid doublings the topological engine spends on the contour
/// integral before abstaining.
const MAX_CONTOUR_REFINEMENTS: usize = 3;

/// Which route produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Topological,
    Analytic,
    KTheoretic,
    ScalarPlusCompactRule,
}

/// An engine's verdict: a definite integer or an explicit abstention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Integer(i64),
    Undetermined,
}

impl Verdict {
    pub fn integer(self) -> Option<i64> {
        match self {
            Verdict::Integer(v) => Some(v),
            Verdict::Undetermined => None,
        }
    }

    pub fn is_determined(self) -> bool {
        matches!(self, Verdict::Integer(_))
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Integer(v) => write!(f, "{v}"),
            Verdict::Undetermined => write!(f, "undetermined"),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Verdict::Integer(v) => serializer.serialize_i64(*v),
            Verdict::Undetermined => serializer.serialize_str("undetermined"),
        }
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(v) => Ok(Verdict::Integer(v)),
            Repr::Text(t) if t == "undetermined" => Ok(Verdict::Undetermined),
            Repr::Text(t) => Err(D::Error::custom(format!("unexpected verdict '{t}'"))),
        }
    }
}

/// One engine's verdict with the evidence behind it: the raw estimates per
/// truncation size or bandwidth, and the distance of the final raw value
/// from the reported integer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    #[serde(rename = "name")]
    pub engine: EngineKind,
    pub value: Verdict,
    pub residual: f64,
    pub history: Vec<(usize, f64)>,
}

impl IndexEstimate {
    fn undetermined(engine: EngineKind) -> Self {
        IndexEstimate {
            engine,
            value: Verdict::Undetermined,
            residual: 1.0,
            history: Vec::new(),
        }
    }
}

/// The reconciled cross-engine result for one operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub spec: OperatorSpec,
    #[serde(rename = "engines")]
    pub estimates: Vec<IndexEstimate>,
    pub agreed: bool,
    pub consensus: Verdict,
}

impl IndexReport {
    pub fn new(spec: OperatorSpec, estimates: Vec<IndexEstimate>) -> Self {
        let (agreed, consensus) = reconcile(&estimates);
        IndexReport {
            spec,
            estimates,
            agreed,
            consensus,
        }
    }

    /// The report is conclusive when the engines agree on an integer.
    pub fn is_conclusive(&self) -> bool {
        self.agreed && self.consensus.is_determined()
    }
}

/// Truncation ladder and thresholds shared by the engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    /// Strictly increasing truncation sizes.
    pub sizes: Vec<usize>,
    /// Tall-section surplus rows; `None` means twice the symbol bandwidth.
    pub buffer: Option<usize>,
    /// Relative singular-value tolerance for kernel detection.
    pub sv_tol: f64,
    /// Number of consecutive identical integers required before the
    /// analytic engine commits.
    pub stabilization: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            sizes: vec![64, 128, 256, 512],
            buffer: None,
            sv_tol: 1e-8,
            stabilization: 3,
        }
    }
}

impl LadderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("ladder has no sizes".into()));
        }
        if self.sizes[0] == 0 || self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "ladder sizes must be positive and strictly increasing".into(),
            ));
        }
        if self.stabilization < 2 {
            return Err(Error::InvalidConfig("stabilization must be >= 2".into()));
        }
        if !(self.sv_tol > 0.0 && self.sv_tol.is_finite()) {
            return Err(Error::InvalidConfig(
                "sv_tol must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    /// The surplus-row count used for a symbol of the given bandwidth.
    pub fn effective_buffer(&self, bandwidth: usize) -> usize {
        self.buffer.unwrap_or((2 * bandwidth).max(2))
    }
}

/// index = -wind(f), accepted only when both winding algorithms agree.
///
/// The grid is enlarged to satisfy the oversampling rule if needed; the
/// contour integral additionally refines (up to three doublings) until its
/// residual passes. Disagreement or non-convergence yields `Undetermined`.
pub fn index_topological(f: &Symbol, grid: &UnitCircleGrid) -> Result<IndexEstimate> {
    let base = grid.oversampled_for(f);
    let margin = f.invertibility_margin(&base)?;
    if margin == 0.0 {
        return Err(Error::NotFredholm("symbol vanishes on the circle".into()));
    }
    let mut history = Vec::new();

    let unwrap = match winding_phase_unwrap(f, &base) {
        Ok(w) => {
            history.push((base.count(), w.raw));
            Some(w)
        }
        Err(Error::GridResolution(_)) => None,
        Err(e) => return Err(e),
    };

    let mut contour = None;
    let mut g = base;
    for depth in 0..=MAX_CONTOUR_REFINEMENTS {
        match winding_contour(f, &g) {
            Ok(w) => {
                history.push((g.count(), w.raw));
                contour = Some(w);
                break;
            }
            Err(Error::NonConvergent { .. }) if depth < MAX_CONTOUR_REFINEMENTS => {
                g = g.refined();
            }
            Err(Error::NonConvergent { .. }) => break,
            Err(e) => return Err(e),
        }
    }

    let estimate = match (unwrap, contour) {
        (Some(u), Some(c)) if u.value == c.value => IndexEstimate {
            engine: EngineKind::Topological,
            value: Verdict::Integer(-u.value),
            residual: u.residual.max(c.residual),
            history,
        },
        (u, c) => IndexEstimate {
            engine: EngineKind::Topological,
            value: Verdict::Undetermined,
            residual: match (&u, &c) {
                (Some(u), Some(c)) => u.residual.max(c.residual),
                (Some(w), None) | (None, Some(w)) => w.residual.max(0.5),
                (None, None) => 1.0,
            },
            history,
        },
    };
    Ok(estimate)
}

/// Counts near-null directions of the tall section of T_f.
///
/// Builds the (n + buffer) x n compression and counts singular values at or
/// below `sv_tol * sigma_max`. Kernel vectors of a Fredholm Toeplitz
/// operator decay geometrically, so tall sections pin them and the count
/// stabilizes as n grows; stabilization is the caller's responsibility.
pub fn kernel_dimension(f: &Symbol, n: usize, buffer: usize, sv_tol: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::EmptyOperator);
    }
    if buffer < f.bandwidth() {
        return Err(Error::InvalidConfig(format!(
            "buffer {buffer} is below the symbol bandwidth {}",
            f.bandwidth()
        )));
    }
    if !(sv_tol > 0.0 && sv_tol.is_finite()) {
        return Err(Error::InvalidConfig("sv_tol must be positive".into()));
    }
    let section = crate::operator::toeplitz_truncation(f, n + buffer, n);
    Ok(small_singular_count(section.matrix(), sv_tol))
}

fn small_singular_count(m: &DMatrix<Complex64>, rel_tol: f64) -> usize {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|s| **s <= rel_tol * max).count()
}

/// index = dim ker T_f - dim ker T_{conj f} over the truncation ladder.
///
/// Returns the integer once `stabilization` consecutive ladder sizes agree;
/// otherwise `Undetermined` with the full history.
pub fn index_analytic(f: &Symbol, ladder: &LadderConfig) -> Result<IndexEstimate> {
    ladder.validate()?;
    let grid = UnitCircleGrid::new(64)?.oversampled_for(f);
    if f.invertibility_margin(&grid)? == 0.0 {
        return Err(Error::NotFredholm("symbol vanishes on the circle".into()));
    }
    index_analytic_spec(&OperatorSpec::Toeplitz(f.clone()), ladder)
}

/// The analytic engine for any spec with rectangular sections: counts
/// near-null directions of tall sections of the operator and its adjoint.
pub fn index_analytic_spec(spec: &OperatorSpec, ladder: &LadderConfig) -> Result<IndexEstimate> {
    ladder.validate()?;
    let bandwidth = spec
        .essential_symbol()
        .map(|s| s.bandwidth())
        .unwrap_or(0);
    let buffer = ladder.effective_buffer(bandwidth);
    let adjoint = spec.adjoint_spec();

    let mut history = Vec::new();
    let mut run = 0usize;
    let mut prev: Option<i64> = None;
    for &n in &ladder.sizes {
        let tall = spec.rectangular_section(n + buffer, n)?;
        let tall_adj = adjoint.rectangular_section(n + buffer, n)?;
        let ker = small_singular_count(tall.matrix(), ladder.sv_tol) as i64;
        let coker = small_singular_count(tall_adj.matrix(), ladder.sv_tol) as i64;
        let v = ker - coker;
        history.push((n, v as f64));
        if prev == Some(v) {
            run += 1;
        } else {
            run = 1;
            prev = Some(v);
        }
        if run >= ladder.stabilization {
            return Ok(IndexEstimate {
                engine: EngineKind::Analytic,
                value: Verdict::Integer(v),
                residual: 0.0,
                history,
            });
        }
    }
    Ok(IndexEstimate {
        engine: EngineKind::Analytic,
        value: Verdict::Undetermined,
        residual: 0.0,
        history,
    })
}

/// The boundary-map series: with g = 1/f truncated to the bandwidth,
/// index = sum_{m>=1} m (g_m f_{-m} - f_m g_{-m}), which equals
/// tr(I - T_g T_f) - tr(I - T_f T_g) in the infinite model.
///
/// The history records the partial sums per mode, so convergence of the
/// series tail is inspectable.
pub fn index_ktheoretic(
    f: &Symbol,
    bandwidth: usize,
    grid: &UnitCircleGrid,
) -> Result<IndexEstimate> {
    let rec = reciprocal_coeffs(f, bandwidth, grid)?;
    if rec.tail >= RECIPROCAL_TAIL_LIMIT {
        return Err(Error::BandwidthInsufficient {
            bandwidth,
            tail: rec.tail,
        });
    }
    let g = &rec.symbol;
    let mut partial = Complex64::new(0.0, 0.0);
    let mut history = Vec::with_capacity(bandwidth);
    for m in 1..=bandwidth as i64 {
        let term = (g.coeff(m) * f.coeff(-m) - f.coeff(m) * g.coeff(-m)) * m as f64;
        partial += term;
        history.push((m as usize, partial.re));
    }
    let value = partial.re.round() as i64;
    let residual = (partial - Complex64::new(value as f64, 0.0)).norm();
    if residual >= SERIES_RESIDUAL_LIMIT {
        return Err(Error::NonConvergent {
            residual,
            limit: SERIES_RESIDUAL_LIMIT,
        });
    }
    Ok(IndexEstimate {
        engine: EngineKind::KTheoretic,
        value: Verdict::Integer(value),
        residual,
        history,
    })
}

/// lambda I + K has index 0 whenever lambda != 0; a compact operator on an
/// infinite-dimensional space is never Fredholm.
pub fn index_scalar_plus_compact(
    lambda: Complex64,
    _perturbation: &PerturbationSpec,
) -> Result<IndexEstimate> {
    if lambda.norm() == 0.0 {
        return Err(Error::NotFredholm(
            "zero scalar part leaves a compact operator".into(),
        ));
    }
    Ok(IndexEstimate {
        engine: EngineKind::ScalarPlusCompactRule,
        value: Verdict::Integer(0),
        residual: 0.0,
        history: Vec::new(),
    })
}

/// Agreement iff every determined estimate carries the same integer;
/// abstentions do not block agreement. The consensus is that integer, or
/// `Undetermined` when no engine committed.
pub fn reconcile(estimates: &[IndexEstimate]) -> (bool, Verdict) {
    let determined: Vec<i64> = estimates
        .iter()
        .filter_map(|e| e.value.integer())
        .collect();
    match determined.first() {
        None => (true, Verdict::Undetermined),
        Some(first) => {
            if determined.iter().all(|v| v == first) {
                (true, Verdict::Integer(*first))
            } else {
                (false, Verdict::Undetermined)
            }
        }
    }
}

/// Runs every engine applicable to the spec and reconciles the verdicts.
///
/// Dispatch: Toeplitz-type specs get all three symbol engines; scalar plus
/// compact gets the rule engine plus the analytic engine on its tall
/// sections (expected 0); perturbations inherit the base operator's
/// estimates (compact perturbations preserve the index) cross-checked
/// analytically on the perturbed sections; products sum member estimates
/// engine by engine and cross-check topologically on the product symbol.
pub fn index_of_spec(
    spec: &OperatorSpec,
    ladder: &LadderConfig,
    grid: &UnitCircleGrid,
) -> Result<IndexReport> {
    index_of_spec_with_bandwidth(spec, ladder, grid, DEFAULT_BANDWIDTH)
}

/// As [`index_of_spec`] with an explicit K-theoretic bandwidth.
pub fn index_of_spec_with_bandwidth(
    spec: &OperatorSpec,
    ladder: &LadderConfig,
    grid: &UnitCircleGrid,
    bandwidth: usize,
) -> Result<IndexReport> {
    spec.validate()?;
    ladder.validate()?;
    check_fredholm(spec, grid, "operator")?;
    let estimates = estimates_for(spec, ladder, grid, bandwidth)?;
    Ok(IndexReport::new(spec.clone(), estimates))
}

fn estimates_for(
    spec: &OperatorSpec,
    ladder: &LadderConfig,
    grid: &UnitCircleGrid,
    bandwidth: usize,
) -> Result<Vec<IndexEstimate>> {
    match spec {
        OperatorSpec::Toeplitz(_) | OperatorSpec::Shift | OperatorSpec::AdjointShift => {
            let f = spec.essential_symbol().expect("toeplitz specs have symbols");
            let mut estimates = Vec::with_capacity(3);
            estimates.push(tolerated(
                EngineKind::Topological,
                index_topological(&f, grid),
            )?);
            estimates.push(tolerated(EngineKind::Analytic, index_analytic(&f, ladder))?);
            let kgrid = grid_for_bandwidth(grid, &f, bandwidth)?;
            estimates.push(tolerated(
                EngineKind::KTheoretic,
                index_ktheoretic(&f, bandwidth, &kgrid),
            )?);
            Ok(estimates)
        }
        OperatorSpec::ScalarPlusCompact {
            lambda,
            perturbation,
        } => {
            let rule = index_scalar_plus_compact(*lambda, perturbation)?;
            let analytic = tolerated(EngineKind::Analytic, index_analytic_spec(spec, ladder))?;
            Ok(vec![rule, analytic])
        }
        OperatorSpec::Perturbed { base, .. } => {
            // A finite-support perturbation is compact, so the index equals
            // the base operator's.
            let base_report = index_of_spec_with_bandwidth(base, ladder, grid, bandwidth)?;
            let mut estimates = base_report.estimates;
            match index_analytic_spec(spec, ladder) {
                Ok(e) => estimates.push(e),
                Err(Error::UnsupportedSection(_)) => {}
                Err(Error::NotFredholm(m)) => return Err(Error::NotFredholm(m)),
                Err(_) => estimates.push(IndexEstimate::undetermined(EngineKind::Analytic)),
            }
            Ok(estimates)
        }
        OperatorSpec::Product(members) => {
            let mut reports = Vec::with_capacity(members.len());
            for member in members {
                reports.push(index_of_spec_with_bandwidth(member, ladder, grid, bandwidth)?);
            }
            let mut estimates = Vec::new();
            for kind in [
                EngineKind::Topological,
                EngineKind::Analytic,
                EngineKind::KTheoretic,
                EngineKind::ScalarPlusCompactRule,
            ] {
                if let Some(summed) = sum_member_estimates(&reports, kind) {
                    estimates.push(summed);
                }
            }
            if let Some(product_symbol) = spec.essential_symbol() {
                estimates.push(tolerated(
                    EngineKind::Topological,
                    index_topological(&product_symbol, grid),
                )?);
            }
            Ok(estimates)
        }
    }
}

/// Sums one engine's verdicts across product members. Returns `None` when
/// some member never ran that engine; abstains when any member abstained.
fn sum_member_estimates(reports: &[IndexReport], kind: EngineKind) -> Option<IndexEstimate> {
    let mut total = 0i64;
    let mut residual = 0.0f64;
    let mut determined = true;
    for report in reports {
        let estimate = report.estimates.iter().find(|e| e.engine == kind)?;
        residual += estimate.residual;
        match estimate.value {
            Verdict::Integer(v) => total += v,
            Verdict::Undetermined => determined = false,
        }
    }
    Some(IndexEstimate {
        engine: kind,
        value: if determined {
            Verdict::Integer(total)
        } else {
            Verdict::Undetermined
        },
        residual: if determined { residual } else { 1.0 },
        history: Vec::new(),
    })
}

/// Engine failures other than a Fredholm violation degrade to an explicit
/// abstention instead of poisoning the whole report.
fn tolerated(kind: EngineKind, outcome: Result<IndexEstimate>) -> Result<IndexEstimate> {
    match outcome {
        Ok(e) => Ok(e),
        Err(Error::NotFredholm(m)) => Err(Error::NotFredholm(m)),
        Err(_) => Ok(IndexEstimate::undetermined(kind)),
    }
}

/// A grid large enough for both the symbol's oversampling rule and the
/// reciprocal bandwidth rule.
fn grid_for_bandwidth(
    grid: &UnitCircleGrid,
    f: &Symbol,
    bandwidth: usize,
) -> Result<UnitCircleGrid> {
    let required = (4 * (2 * bandwidth + 1)).max(4 * f.mode_count());
    let mut count = grid.count();
    while count < required {
        count *= 2;
    }
    if count == grid.count() {
        Ok(grid.clone())
    } else {
        UnitCircleGrid::new(count)
    }
}

/// Verifies the Fredholm property per variant, naming the offending member
/// for products.
fn check_fredholm(spec: &OperatorSpec, grid: &UnitCircleGrid, label: &str) -> Result<()> {
    match spec {
        OperatorSpec::Toeplitz(f) => {
            let g = grid.oversampled_for(f);
            if f.invertibility_margin(&g)? == 0.0 {
                Err(Error::NotFredholm(format!(
                    "{label}: symbol vanishes on the circle"
                )))
            } else {
                Ok(())
            }
        }
        OperatorSpec::Shift | OperatorSpec::AdjointShift => Ok(()),
        OperatorSpec::ScalarPlusCompact { lambda, .. } => {
            if lambda.norm() == 0.0 {
                Err(Error::NotFredholm(format!(
                    "{label}: zero scalar part leaves a compact operator"
                )))
            } else {
                Ok(())
            }
        }
        OperatorSpec::Perturbed { base, .. } => check_fredholm(base, grid, label),
        OperatorSpec::Product(members) => {
            for (i, member) in members.iter().enumerate() {
                check_fredholm(member, grid, &format!("product member {i}"))?;
            }
            Ok(())
        }
    }
}
