//! Corpus runner and invariance suites.
//!
//! Evaluates [`index_of_spec`] over a corpus of named operators with known
//! or unknown expected indices, runs homotopy and compact-perturbation
//! invariance suites, and persists machine-readable reports. Expectations
//! for randomized entries come from [`winding_oracle`], a deliberately
//! separate argument-principle implementation kept here as a fourth
//! opinion: it never shares code with the winding engines it checks.

use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::engines::{
    index_of_spec_with_bandwidth, index_topological, IndexReport, LadderConfig, Verdict,
    DEFAULT_BANDWIDTH, RECIPROCAL_TAIL_LIMIT,
};
use crate::error::{Error, Result};
use crate::operator::{OperatorSpec, PerturbationSpec};
use crate::symbol::{path_check, reciprocal_coeffs, Symbol, SymbolPath, UnitCircleGrid};

/// Where a corpus entry and its expectation came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// A classical textbook value; the citation names the fact.
    Paper { citation: String },
    /// Derived from an independent oracle or explicit computation.
    Derived,
    /// Randomly generated from the recorded seed.
    Random { seed: u64 },
}

/// One named operator with an optional expected index.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub name: String,
    pub spec: OperatorSpec,
    /// `None` encodes "unknown": the suite then only demands agreement.
    pub expected: Option<i64>,
    pub provenance: Provenance,
}

impl Serialize for CorpusEntry {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("CorpusEntry", 4)?;
        s.serialize_field("name", &self.name)?;
        s.serialize_field("spec", &self.spec)?;
        match self.expected {
            Some(v) => s.serialize_field("expected", &v)?,
            None => s.serialize_field("expected", "unknown")?,
        }
        match &self.provenance {
            Provenance::Paper { citation } => s.serialize_field("citation", citation)?,
            Provenance::Random { seed } => s.serialize_field("seed", seed)?,
            Provenance::Derived => {}
        }
        s.end()
    }
}

impl<'de> Deserialize<'de> for CorpusEntry {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum ExpectedRepr {
            Known(i64),
            Text(String),
        }
        #[derive(Deserialize)]
        struct Repr {
            name: String,
            spec: OperatorSpec,
            expected: ExpectedRepr,
            #[serde(default)]
            seed: Option<u64>,
            #[serde(default)]
            citation: Option<String>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let expected = match repr.expected {
            ExpectedRepr::Known(v) => Some(v),
            ExpectedRepr::Text(t) if t == "unknown" => None,
            ExpectedRepr::Text(t) => {
                return Err(serde::de::Error::custom(format!(
                    "expected an integer or \"unknown\", got \"{t}\""
                )))
            }
        };
        let provenance = match (repr.citation, repr.seed) {
            (Some(citation), _) => Provenance::Paper { citation },
            (None, Some(seed)) => Provenance::Random { seed },
            (None, None) => Provenance::Derived,
        };
        Ok(CorpusEntry {
            name: repr.name,
            spec: repr.spec,
            expected,
            provenance,
        })
    }
}

/// Outcome for one corpus entry. Failures carry the error text instead of
/// aborting the suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryResult {
    pub entry: CorpusEntry,
    pub report: Option<IndexReport>,
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

/// Echo of the configuration a suite ran under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub ladder: LadderConfig,
    pub grid_points: usize,
    pub bandwidth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub entries: Vec<EntryResult>,
    pub summary: SuiteSummary,
    pub config: ConfigEcho,
    /// Wall-clock seconds since the epoch; excluded from determinism
    /// comparisons.
    pub timestamp: String,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }
}

/// Evaluates every corpus entry and aggregates the verdicts. Entries are
/// independent and evaluated in parallel; a failure in one never suppresses
/// the others.
pub fn run_corpus(
    corpus: &[CorpusEntry],
    ladder: &LadderConfig,
    grid: &UnitCircleGrid,
) -> Result<SuiteReport> {
    run_corpus_with_bandwidth(corpus, ladder, grid, DEFAULT_BANDWIDTH)
}

/// As [`run_corpus`] with an explicit K-theoretic bandwidth.
pub fn run_corpus_with_bandwidth(
    corpus: &[CorpusEntry],
    ladder: &LadderConfig,
    grid: &UnitCircleGrid,
    bandwidth: usize,
) -> Result<SuiteReport> {
    if corpus.is_empty() {
        return Err(Error::InvalidConfig("corpus is empty".into()));
    }
    ladder.validate()?;
    let entries: Vec<EntryResult> = corpus
        .par_iter()
        .map(|entry| {
            match index_of_spec_with_bandwidth(&entry.spec, ladder, grid, bandwidth) {
                Ok(report) => {
                    let pass = match entry.expected {
                        Some(v) => report.agreed && report.consensus == Verdict::Integer(v),
                        None => report.agreed,
                    };
                    EntryResult {
                        entry: entry.clone(),
                        report: Some(report),
                        error: None,
                        pass,
                    }
                }
                Err(e) => EntryResult {
                    entry: entry.clone(),
                    report: None,
                    error: Some(e.to_string()),
                    pass: false,
                },
            }
        })
        .collect();
    let passed = entries.iter().filter(|e| e.pass).count();
    Ok(SuiteReport {
        summary: SuiteSummary {
            total: entries.len(),
            passed,
            failed: entries.len() - passed,
        },
        entries,
        config: ConfigEcho {
            ladder: ladder.clone(),
            grid_points: grid.count(),
            bandwidth,
        },
        timestamp: now_epoch_seconds(),
    })
}

fn now_epoch_seconds() -> String {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_else(|_| "0".into())
}

/// Result of a homotopy-invariance run over an accepted path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyReport {
    /// Per-waypoint index verdicts (endpoints are full cross-engine runs,
    /// interior waypoints use the topological engine).
    pub indices: Vec<Verdict>,
    /// Per-waypoint invertibility margins from the path check.
    pub margins: Vec<f64>,
    pub pass: bool,
}

/// Verifies that the index is constant along a path of invertible symbols.
///
/// The path must pass [`path_check`] first; a rejected path is a
/// precondition error and no index is ever computed for it.
pub fn homotopy_suite(
    path: &SymbolPath,
    ladder: &LadderConfig,
    grid: &UnitCircleGrid,
) -> Result<HomotopyReport> {
    let check = path_check(path, grid)?;
    if !check.accepted {
        let worst = check.margins.iter().cloned().fold(f64::INFINITY, f64::min);
        return Err(Error::PathRejected(format!(
            "a waypoint has invertibility margin {worst:.3e}"
        )));
    }
    let last = path.waypoints() - 1;
    let indices: Vec<Verdict> = (0..path.waypoints())
        .into_par_iter()
        .map(|i| -> Result<Verdict> {
            let f = path.waypoint_symbol(i)?;
            if i == 0 || i == last {
                let report =
                    index_of_spec_with_bandwidth(&OperatorSpec::Toeplitz(f), ladder, grid, DEFAULT_BANDWIDTH)?;
                Ok(if report.agreed {
                    report.consensus
                } else {
                    Verdict::Undetermined
                })
            } else {
                Ok(index_topological(&f, grid)?.value)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = match indices.first().and_then(|v| v.integer()) {
        Some(first) => indices.iter().all(|v| v.integer() == Some(first)),
        None => false,
    };
    Ok(HomotopyReport {
        indices,
        margins: check.margins,
        pass,
    })
}

/// Result of a compact-perturbation invariance run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub base: IndexReport,
    pub perturbed: Vec<IndexReport>,
    pub pass: bool,
}

/// Verifies that finite-support perturbations leave the index of T_f alone.
pub fn perturbation_suite(
    f: &Symbol,
    perturbations: &[PerturbationSpec],
    ladder: &LadderConfig,
    grid: &UnitCircleGrid,
) -> Result<PerturbationReport> {
    let base_spec = OperatorSpec::Toeplitz(f.clone());
    let base = index_of_spec_with_bandwidth(&base_spec, ladder, grid, DEFAULT_BANDWIDTH)?;
    let perturbed: Vec<IndexReport> = perturbations
        .par_iter()
        .map(|k| {
            index_of_spec_with_bandwidth(
                &OperatorSpec::perturbed(base_spec.clone(), k.clone()),
                ladder,
                grid,
                DEFAULT_BANDWIDTH,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = base.is_conclusive()
        && perturbed
            .iter()
            .all(|r| r.is_conclusive() && r.consensus == base.consensus);
    Ok(PerturbationReport {
        base,
        perturbed,
        pass,
    })
}

/// Report output formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::parse(other, "expected 'json' or 'csv'")),
        }
    }
}

/// Renders a suite report as JSON or CSV text.
pub fn render_report(report: &SuiteReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(format!("{}\n", serde_json::to_string_pretty(report)?)),
        ReportFormat::Csv => {
            let mut out = String::from("name,expected,consensus,agreed,pass\n");
            for e in &report.entries {
                let expected = e
                    .entry
                    .expected
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "unknown".into());
                let consensus = e
                    .report
                    .as_ref()
                    .map(|r| r.consensus.to_string())
                    .unwrap_or_else(|| "error".into());
                let agreed = e.report.as_ref().map(|r| r.agreed).unwrap_or(false);
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    csv_field(&e.entry.name),
                    expected,
                    consensus,
                    agreed,
                    e.pass
                ));
            }
            Ok(out)
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes a report to disk in the requested format.
pub fn emit_report(report: &SuiteReport, path: &Path, format: ReportFormat) -> Result<()> {
    let text = render_report(report, format)?;
    fs::write(path, text).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("writing {}: {e}", path.display()),
        ))
    })
}

/// Loads a corpus file: a JSON list of `{name, spec, expected|"unknown",
/// seed?}` objects with specs in the textual operator format.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("reading {}: {e}", path.display()),
        ))
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Winding number of f by the argument principle on a dense grid, kept
/// independent of the winding engines: plain Horner evaluation of the
/// polynomial part p(w) = z^{-m_min} f and a fixed-step boundary walk.
/// wind(f) = m_min + (zeros of p inside the unit disk).
pub fn winding_oracle(f: &Symbol) -> Result<i64> {
    let coeffs = f.coeffs();
    let horner = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };
    let mut n = 4096usize;
    for _ in 0..4 {
        let mut prev = horner(Complex64::new(1.0, 0.0));
        let mut total = 0.0f64;
        let mut ok = prev.norm() > 0.0;
        for k in 1..=n {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let v = horner(Complex64::from_polar(1.0, theta));
            if v.norm() == 0.0 {
                return Err(Error::NotFredholm(
                    "oracle found a zero on the circle".into(),
                ));
            }
            let step = (v * prev.conj()).arg();
            if step.abs() >= std::f64::consts::FRAC_PI_2 {
                ok = false;
                break;
            }
            total += step;
            prev = v;
        }
        if ok {
            let raw = total / (2.0 * std::f64::consts::PI);
            let zeros = raw.round();
            if (raw - zeros).abs() < 1e-3 {
                return Ok(f.m_min() + zeros as i64);
            }
        }
        n *= 2;
    }
    Err(Error::GridResolution(
        "oracle walk never settled; symbol too close to a zero".into(),
    ))
}

/// Margin every randomized corpus symbol must certify.
pub const RANDOM_MARGIN: f64 = 0.1;

/// Draws a trigonometric polynomial whose zeros avoid a band around the
/// unit circle, rejection-sampled until the invertibility margin exceeds
/// [`RANDOM_MARGIN`] and the reciprocal tail at the default bandwidth is
/// below [`RECIPROCAL_TAIL_LIMIT`]. Those two certificates keep every
/// engine inside its validated regime.
pub fn random_certified_symbol<R: Rng>(rng: &mut R) -> Symbol {
    let grid = UnitCircleGrid::new(1024).expect("static grid size");
    for _ in 0..10_000 {
        let degree = rng.gen_range(1..=4usize);
        let m_min = -(rng.gen_range(0..=degree) as i64);
        // Build the polynomial from explicit roots kept away from the
        // circle, then scale by a random nonzero constant.
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for _ in 0..degree {
            let radius = if rng.gen_bool(0.5) {
                rng.gen_range(0.05..0.55)
            } else {
                rng.gen_range(1.8..3.0)
            };
            let root = Complex64::from_polar(radius, rng.gen_range(0.0..std::f64::consts::TAU));
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (j, c) in coeffs.iter().enumerate() {
                next[j] -= root * c;
                next[j + 1] += c;
            }
            coeffs = next;
        }
        let scale = Complex64::from_polar(
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        for c in &mut coeffs {
            *c *= scale;
        }
        let Ok(f) = Symbol::new(coeffs, m_min) else {
            continue;
        };
        let Ok(margin) = f.invertibility_margin(&grid) else {
            continue;
        };
        if margin <= RANDOM_MARGIN {
            continue;
        }
        let Ok(rec) = reciprocal_coeffs(&f, DEFAULT_BANDWIDTH, &grid) else {
            continue;
        };
        if rec.tail < RECIPROCAL_TAIL_LIMIT {
            return f;
        }
    }
    unreachable!("rejection sampling failed to certify a symbol in 10000 draws")
}

/// A random finite-support perturbation with entries inside the leading
/// `max_index + 1` block.
pub fn random_perturbation<R: Rng>(rng: &mut R, max_index: usize, terms: usize) -> PerturbationSpec {
    let terms = (0..terms)
        .map(|_| {
            (
                rng.gen_range(0..=max_index),
                rng.gen_range(0..=max_index),
                Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            )
        })
        .collect();
    PerturbationSpec::new(terms).expect("finite random entries")
}

/// A corpus of seeded random Toeplitz entries with expectations pinned by
/// the zero-counting oracle.
pub fn random_corpus(seed: u64, count: usize) -> Result<Vec<CorpusEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(count);
    for i in 0..count {
        let f = random_certified_symbol(&mut rng);
        let wind = winding_oracle(&f)?;
        entries.push(CorpusEntry {
            name: format!("random-{i}"),
            spec: OperatorSpec::Toeplitz(f),
            expected: Some(-wind),
            provenance: Provenance::Random { seed },
        });
    }
    Ok(entries)
}

/// One homotopy case inside a selftest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyCase {
    pub name: String,
    pub pass: bool,
    pub indices: Vec<Verdict>,
}

/// One perturbation case inside a selftest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCase {
    pub name: String,
    pub pass: bool,
    pub consensus: Verdict,
}

/// Complete selftest outcome: the built-in corpus plus the invariance
/// suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub corpus: SuiteReport,
    pub homotopy: Vec<HomotopyCase>,
    pub perturbation: Vec<PerturbationCase>,
    pub pass: bool,
}

/// The built-in regression corpus: the shift family, monomial Toeplitz
/// operators, and scalar-plus-compact vacua with seeded perturbations.
pub fn builtin_corpus(seed: u64) -> Vec<CorpusEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paper = |citation: &str| Provenance::Paper {
        citation: citation.into(),
    };
    let mut entries = vec![CorpusEntry {
        name: "shift".into(),
        spec: OperatorSpec::Shift,
        expected: Some(-1),
        provenance: paper("the unilateral shift has index -1"),
    }];
    for k in [1i64, -1, 2, -2] {
        entries.push(CorpusEntry {
            name: format!("toeplitz-zpow{k}"),
            spec: OperatorSpec::Toeplitz(Symbol::monomial(k)),
            expected: Some(-k),
            provenance: paper("the index of a Toeplitz operator is minus the winding number"),
        });
    }
    for (label, lambda) in [
        ("1", Complex64::new(1.0, 0.0)),
        ("2+i", Complex64::new(2.0, 1.0)),
        ("-3", Complex64::new(-3.0, 0.0)),
    ] {
        let k = random_perturbation(&mut rng, 12, 4);
        entries.push(CorpusEntry {
            name: format!("vacuum-{label}"),
            spec: OperatorSpec::scalar_plus_compact(lambda, k),
            expected: Some(0),
            provenance: paper("compact perturbations of an invertible scalar have index 0"),
        });
    }
    entries
}

/// Runs the built-in corpus, two homotopy paths, and two perturbation
/// suites. Deterministic for a fixed seed.
pub fn selftest(
    seed: u64,
    ladder: &LadderConfig,
    grid: &UnitCircleGrid,
    bandwidth: usize,
) -> Result<SelftestReport> {
    let corpus = builtin_corpus(seed);
    let corpus_report = run_corpus_with_bandwidth(&corpus, ladder, grid, bandwidth)?;

    let mut homotopy = Vec::new();
    let paths = [
        (
            "scale-shift",
            SymbolPath::new(
                Symbol::monomial(1),
                Symbol::new(vec![Complex64::new(2.0, 0.0)], 1)?,
                11,
            )?,
        ),
        (
            "affine-drift",
            SymbolPath::new(
                Symbol::affine(Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0))?,
                Symbol::affine(Complex64::new(0.9, 0.0), Complex64::new(1.0, 0.0))?,
                11,
            )?,
        ),
    ];
    for (name, path) in paths {
        let report = homotopy_suite(&path, ladder, grid)?;
        homotopy.push(HomotopyCase {
            name: name.into(),
            pass: report.pass,
            indices: report.indices,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x70657274);
    let mut perturbation = Vec::new();
    let suites = [
        ("perturbed-shift", Symbol::monomial(1)),
        (
            "perturbed-affine",
            Symbol::affine(Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0))?,
        ),
    ];
    for (name, f) in suites {
        let ks: Vec<PerturbationSpec> =
            (0..3).map(|_| random_perturbation(&mut rng, 12, 3)).collect();
        let report = perturbation_suite(&f, &ks, ladder, grid)?;
        perturbation.push(PerturbationCase {
            name: name.into(),
            pass: report.pass,
            consensus: report.base.consensus,
        });
    }

    let pass = corpus_report.all_passed()
        && homotopy.iter().all(|h| h.pass)
        && perturbation.iter().all(|p| p.pass);
    Ok(SelftestReport {
        seed,
        corpus: corpus_report,
        homotopy,
        perturbation,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> UnitCircleGrid {
        UnitCircleGrid::new(256).unwrap()
    }

    fn ladder() -> LadderConfig {
        LadderConfig {
            sizes: vec![64, 96, 128],
            ..LadderConfig::default()
        }
    }

    #[test]
    fn oracle_matches_known_windings() {
        assert_eq!(winding_oracle(&Symbol::monomial(1)).unwrap(), 1);
        assert_eq!(winding_oracle(&Symbol::monomial(-3)).unwrap(), -3);
        let affine = Symbol::affine(Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(winding_oracle(&affine).unwrap(), 1);
        // z^{-2}(1 - 0.3 z): the zero at 10/3 is outside, so wind = -2.
        let f = Symbol::new(
            vec![Complex64::new(1.0, 0.0), Complex64::new(-0.3, 0.0)],
            -2,
        )
        .unwrap();
        assert_eq!(winding_oracle(&f).unwrap(), -2);
        // (z - 0.3)(z - 5): one zero inside.
        let g = Symbol::new(
            vec![
                Complex64::new(1.5, 0.0),
                Complex64::new(-5.3, 0.0),
                Complex64::new(1.0, 0.0),
            ],
            0,
        )
        .unwrap();
        assert_eq!(winding_oracle(&g).unwrap(), 1);
    }

    #[test]
    fn corpus_of_shift_passes() {
        let corpus = vec![CorpusEntry {
            name: "shift".into(),
            spec: OperatorSpec::Shift,
            expected: Some(-1),
            provenance: Provenance::Derived,
        }];
        let report = run_corpus(&corpus, &ladder(), &grid()).unwrap();
        assert_eq!(report.summary.passed, 1);
        assert!(report.all_passed());
    }

    #[test]
    fn corpus_of_identity_passes() {
        let corpus = vec![CorpusEntry {
            name: "identity".into(),
            spec: OperatorSpec::Toeplitz(Symbol::constant(Complex64::new(1.0, 0.0)).unwrap()),
            expected: Some(0),
            provenance: Provenance::Derived,
        }];
        let report = run_corpus(&corpus, &ladder(), &grid()).unwrap();
        assert!(report.all_passed());
    }

    #[test]
    fn corpus_failure_is_isolated() {
        let corpus = vec![
            CorpusEntry {
                name: "bad".into(),
                // vanishing symbol: evaluation errors, entry fails
                spec: OperatorSpec::Toeplitz(
                    Symbol::affine(Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap(),
                ),
                expected: Some(0),
                provenance: Provenance::Derived,
            },
            CorpusEntry {
                name: "good".into(),
                spec: OperatorSpec::Shift,
                expected: Some(-1),
                provenance: Provenance::Derived,
            },
        ];
        let report = run_corpus(&corpus, &ladder(), &grid()).unwrap();
        assert_eq!(report.summary.total, 2);
        assert_eq!(report.summary.passed, 1);
        assert!(report.entries[0].error.is_some());
        assert!(report.entries[1].pass);
    }

    #[test]
    fn empty_corpus_is_a_config_error() {
        assert!(matches!(
            run_corpus(&[], &ladder(), &grid()),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn homotopy_scaling_path_passes() {
        let path = SymbolPath::new(
            Symbol::monomial(1),
            Symbol::new(vec![Complex64::new(2.0, 0.0)], 1).unwrap(),
            10,
        )
        .unwrap();
        let report = homotopy_suite(&path, &ladder(), &grid()).unwrap();
        assert!(report.pass);
        assert!(report
            .indices
            .iter()
            .all(|v| *v == Verdict::Integer(-1)));
    }

    #[test]
    fn homotopy_rejects_degenerate_path_before_indexing() {
        let path = SymbolPath::new(
            Symbol::monomial(1),
            Symbol::new(vec![Complex64::new(-1.0, 0.0)], 1).unwrap(),
            11,
        )
        .unwrap();
        assert!(matches!(
            homotopy_suite(&path, &ladder(), &grid()),
            Err(Error::PathRejected(_))
        ));
    }

    #[test]
    fn perturbation_suite_on_shift() {
        let k = PerturbationSpec::new(vec![(0, 0, Complex64::new(1.0, 0.0))]).unwrap();
        let report =
            perturbation_suite(&Symbol::monomial(1), &[k], &ladder(), &grid()).unwrap();
        assert!(report.pass);
        assert_eq!(report.base.consensus, Verdict::Integer(-1));
        assert_eq!(report.perturbed[0].consensus, Verdict::Integer(-1));
    }

    #[test]
    fn perturbation_suite_with_empty_perturbation() {
        let report = perturbation_suite(
            &Symbol::monomial(1),
            &[PerturbationSpec::empty()],
            &ladder(),
            &grid(),
        )
        .unwrap();
        assert!(report.pass);
    }

    #[test]
    fn perturbation_suite_rank_two_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = random_perturbation(&mut rng, 10, 2);
        let f = Symbol::affine(Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        let report = perturbation_suite(&f, &[k], &ladder(), &grid()).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn render_empty_report_as_json() {
        let report = SuiteReport {
            entries: vec![],
            summary: SuiteSummary {
                total: 0,
                passed: 0,
                failed: 0,
            },
            config: ConfigEcho {
                ladder: LadderConfig::default(),
                grid_points: 256,
                bandwidth: DEFAULT_BANDWIDTH,
            },
            timestamp: "0".into(),
        };
        let text = render_report(&report, ReportFormat::Json).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["entries"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn csv_report_has_one_row_per_entry() {
        let corpus = vec![
            CorpusEntry {
                name: "shift".into(),
                spec: OperatorSpec::Shift,
                expected: Some(-1),
                provenance: Provenance::Derived,
            },
            CorpusEntry {
                name: "adjoint".into(),
                spec: OperatorSpec::AdjointShift,
                expected: Some(1),
                provenance: Provenance::Derived,
            },
            CorpusEntry {
                name: "identity".into(),
                spec: OperatorSpec::Toeplitz(Symbol::constant(Complex64::new(1.0, 0.0)).unwrap()),
                expected: None,
                provenance: Provenance::Derived,
            },
        ];
        let report = run_corpus(&corpus, &ladder(), &grid()).unwrap();
        let csv = render_report(&report, ReportFormat::Csv).unwrap();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "name,expected,consensus,agreed,pass");
        assert!(lines[3].starts_with("identity,unknown,0,true,true"));
    }

    #[test]
    fn json_report_round_trips() {
        let corpus = vec![CorpusEntry {
            name: "shift".into(),
            spec: OperatorSpec::Shift,
            expected: Some(-1),
            provenance: Provenance::Paper {
                citation: "the unilateral shift has index -1".into(),
            },
        }];
        let report = run_corpus(&corpus, &ladder(), &grid()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        emit_report(&report, &path, ReportFormat::Json).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let back: SuiteReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.summary, report.summary);
        assert_eq!(back, report);
    }

    #[test]
    fn random_corpus_is_deterministic() {
        let a = random_corpus(42, 4).unwrap();
        let b = random_corpus(42, 4).unwrap();
        assert_eq!(a, b);
        for entry in &a {
            assert!(matches!(entry.provenance, Provenance::Random { seed: 42 }));
            assert!(entry.expected.is_some());
        }
    }

    #[test]
    fn random_symbols_are_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = UnitCircleGrid::new(1024).unwrap();
        for _ in 0..5 {
            let f = random_certified_symbol(&mut rng);
            assert!(f.invertibility_margin(&g).unwrap() > RANDOM_MARGIN);
            let rec = reciprocal_coeffs(&f, DEFAULT_BANDWIDTH, &g).unwrap();
            assert!(rec.tail < RECIPROCAL_TAIL_LIMIT);
        }
    }

    #[test]
    fn corpus_entry_serde_round_trip() {
        let entries = vec![
            CorpusEntry {
                name: "paper".into(),
                spec: OperatorSpec::Shift,
                expected: Some(-1),
                provenance: Provenance::Paper {
                    citation: "shift index".into(),
                },
            },
            CorpusEntry {
                name: "unknown".into(),
                spec: OperatorSpec::parse("toeplitz:affine:0.5,1").unwrap(),
                expected: None,
                provenance: Provenance::Derived,
            },
            CorpusEntry {
                name: "seeded".into(),
                spec: OperatorSpec::parse("scalar:2,0+K:0,0,1,0").unwrap(),
                expected: Some(0),
                provenance: Provenance::Random { seed: 7 },
            },
        ];
        let text = serde_json::to_string(&entries).unwrap();
        let back: Vec<CorpusEntry> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, entries);
        assert!(text.contains("\"unknown\""));
    }
}
