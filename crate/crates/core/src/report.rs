//! Pointwise analysis and grid verification reports, with deterministic
//! JSON and CSV output.
//!
//! JSON objects are emitted with sorted keys and shortest round-trip floats,
//! so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{DEFAULT_POLE_BOX, Tolerances};
use crate::frames::{FlatnessCell, FrameEvaluator, FrameGrid, StructureResiduals, jet_flatness, lambda_samples};
use crate::invariants::{InvariantData, InvariantOptions, willmore_energy};
use crate::lifts::{LLiftData, MuField, classify, isotropic_mu_candidates, riccati_constant};
use crate::surfaces::{Chart, Domain, ProductTorus, conformality};
use crate::{C64, Error, Result};

pub const SCHEMA: &str = "moebius-lab/1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for Complex {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// How μ is chosen on the command line.
#[derive(Clone, Debug)]
pub enum MuChoice {
    /// First of constant branch, zero and stereo-dual that solves the
    /// Riccati equation at a few sample points.
    Auto,
    /// `μ = √(−2s)` for constant `s`.
    ConstantBranch,
    Field(MuField),
}

/// Parses `a+bi`, `a-bi`, `bi`, `a` and `i`.
pub fn parse_complex(text: &str) -> Result<C64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("invalid complex number `{text}`"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(k, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k)
        .last();
    let im_of = |s: &str| match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        s => s.parse::<f64>().map_err(|_| bad()),
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            Ok(C64::new(re, im_of(&body[k..])?))
        }
        None => Ok(C64::new(0.0, im_of(body)?)),
    }
}

pub fn parse_mu(text: &str) -> Result<MuChoice> {
    let t = text.trim();
    Ok(match t {
        "auto" => MuChoice::Auto,
        "constant" | "constant-branch" => MuChoice::ConstantBranch,
        "zero" => MuChoice::Field(MuField::Zero),
        "stereo-dual" => MuChoice::Field(MuField::StereoDual),
        _ => {
            if let Some(c) = t.strip_prefix("meromorphic:") {
                MuChoice::Field(MuField::Pole { c: parse_complex(c)? })
            } else {
                let c = parse_complex(t.strip_prefix("constant:").unwrap_or(t))
                    .map_err(|_| Error::Parse(format!("unknown μ choice `{text}`")))?;
                MuChoice::Field(MuField::Constant(c))
            }
        }
    })
}

fn theta_at(chart: &dyn Chart, mu: &MuField, u: f64, v: f64) -> Result<f64> {
    let inv = InvariantData::compute(chart, u, v, &InvariantOptions::default())?;
    let lift = LLiftData::from_mu(&inv, mu.jet_at(u, v, inv.n_sec.order())?)?;
    Ok(lift.theta.value().norm())
}

/// Resolves a μ choice into a field for `chart`, near `(u, v)`.
pub fn resolve_mu(choice: &MuChoice, chart: &dyn Chart, u: f64, v: f64, tol: &Tolerances) -> Result<MuField> {
    match choice {
        MuChoice::Field(f) => Ok(f.clone()),
        MuChoice::ConstantBranch => {
            let inv = InvariantData::compute(chart, u, v, &InvariantOptions::scalars_only())?;
            let r = riccati_constant(&inv.s, 1e-9)?[0];
            // r = √(−2s) amplifies roundoff in s, so snap when ½r² is at roundoff level
            Ok(if 0.5 * r.norm_sqr() < 1e-12 { MuField::Zero } else { MuField::Constant(r) })
        }
        MuChoice::Auto => {
            let probes = [chart.domain().from_unit(0.31, 0.47), chart.domain().from_unit(0.62, 0.73), (u, v)];
            let mut candidates = Vec::new();
            if let Ok(mu) = resolve_mu(&MuChoice::ConstantBranch, chart, u, v, tol) {
                candidates.push(mu);
            }
            candidates.push(MuField::Zero);
            candidates.push(MuField::StereoDual);
            for mu in candidates {
                let ok = probes
                    .iter()
                    .all(|&(pu, pv)| theta_at(chart, &mu, pu, pv).map(|t| t < tol.riccati).unwrap_or(false));
                if ok {
                    return Ok(mu);
                }
            }
            Err(Error::Unsupported(format!(
                "no built-in Riccati solution for `{}`; pass --mu",
                chart.spec()
            )))
        }
    }
}

/// Grid domain for a chart and μ: μ fields with singularities or without
/// periodicity move torus charts to a fixed box.
pub fn default_domain(chart: &dyn Chart, mu: &MuField) -> Domain {
    let periodic_mu = matches!(mu, MuField::Zero | MuField::Constant(_));
    match chart.domain() {
        Domain::Periodic { .. } if !periodic_mu => {
            let [u0, u1, v0, v1] = DEFAULT_POLE_BOX;
            Domain::Box { u0, u1, v0, v1 }
        }
        d => d,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointInvariants {
    pub s: Complex,
    pub kappa_norm2: f64,
    pub energy_density: f64,
    pub rho: Complex,
    pub theta: Complex,
    pub l_square: Complex,
    pub willmore_residual: f64,
    pub umbilic: bool,
    pub conformality_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flags {
    pub willmore: bool,
    pub s_willmore: bool,
    pub isotropic: bool,
    pub s_isotropic: bool,
    pub conformal_lift: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    pub gauss: f64,
    pub codazzi: f64,
    pub ricci: f64,
}

impl From<StructureResiduals> for Structure {
    fn from(r: StructureResiduals) -> Self {
        Self {
            gauss: r.gauss,
            codazzi: r.codazzi,
            ricci: r.ricci,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub gram_defect: f64,
    pub corollary_defect: f64,
    pub b_rank: usize,
    pub extra_condition: f64,
    pub structure: Structure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub u: f64,
    pub v: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: String,
    pub version: String,
    pub surface: String,
    pub point: [f64; 2],
    pub mu: String,
    pub invariants: PointInvariants,
    /// Willmore energy over the chart domain.
    pub energy: Option<f64>,
    pub classification: Flags,
    pub frame: Option<FrameSummary>,
    /// Pointwise curvature of `d + α^λ` per λ sample.
    pub lambda_table: Vec<LambdaRow>,
    pub isotropic_candidates: Vec<Complex>,
    pub warnings: Vec<String>,
    pub tolerances: Tolerances,
}

pub struct AnalyzeOptions {
    pub lambda_count: usize,
    pub energy_grid: Option<(usize, usize)>,
    pub tol: Tolerances,
}

/// Invariants, lift, classification and frame data at one point.
pub fn analyze(chart: &dyn Chart, u: f64, v: f64, mu: &MuField, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    let eval = FrameEvaluator::new(chart, mu.clone(), u, v)?;
    let p = eval.point(u, v)?;
    let (inv, lift, frame) = (&p.inv, &p.lift, &p.frame);
    let class = classify(inv, lift, opts.tol.willmore)?;
    let (defect, _) = conformality(chart, u, v)?;
    let k2 = inv.kappa_norm2.value().re;
    let mut warnings = Vec::new();
    let isotropic_candidates = match isotropic_mu_candidates(inv) {
        Ok(c) => {
            warnings.extend(c.warning);
            c.roots.iter().map(|r| Complex::from(r.mu_bar.conj())).collect()
        }
        Err(e) => {
            warnings.push(format!("isotropic candidates: {e}"));
            Vec::new()
        }
    };
    if class.theta >= opts.tol.riccati {
        warnings.push(format!("μ does not solve the Riccati equation: |θ| = {:e}", class.theta));
    }
    let alpha = frame.alpha_prime();
    let lambda_table = lambda_samples(opts.lambda_count)
        .into_iter()
        .map(|l| {
            Ok(LambdaRow {
                u,
                v,
                lambda_re: l.re,
                lambda_im: l.im,
                residual: jet_flatness(&alpha, l)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let energy = match opts.energy_grid {
        Some((w, h)) => Some(willmore_energy(chart, w, h)?),
        None => None,
    };
    let structure = crate::frames::structure_residuals(inv)?;
    Ok(AnalysisReport {
        schema: SCHEMA.into(),
        version: VERSION.into(),
        surface: chart.spec(),
        point: [u, v],
        mu: mu.to_string(),
        invariants: PointInvariants {
            s: inv.s.value().into(),
            kappa_norm2: k2,
            energy_density: 4.0 * k2,
            rho: lift.rho.value().into(),
            theta: lift.theta.value().into(),
            l_square: lift.l_square.value().into(),
            willmore_residual: class.willmore_residual,
            umbilic: inv.umbilic,
            conformality_defect: defect,
        },
        energy,
        classification: Flags {
            willmore: class.willmore,
            s_willmore: class.s_willmore,
            isotropic: class.isotropic,
            s_isotropic: class.s_isotropic,
            conformal_lift: class.conformal_lift,
        },
        frame: Some(FrameSummary {
            gram_defect: frame.gram_defect,
            corollary_defect: frame.corollary_defect(lift.l_square.value()),
            b_rank: frame.b_rank(1e-9),
            extra_condition: frame.extra_condition(),
            structure: structure.into(),
        }),
        lambda_table,
        isotropic_candidates,
        warnings,
        tolerances: opts.tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub measure: f64,
    pub threshold: f64,
    pub willmore: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classifiers {
    /// Sup of `√⟨W, W̄⟩` over the grid.
    pub residual: Classifier,
    /// Sup of `‖2D_z̄L − μ̄L‖` over the grid.
    pub l_equation: Classifier,
    /// Sup of the λ-flatness residual over samples and interior nodes.
    pub flatness: Classifier,
    pub noise_floor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema: String,
    pub version: String,
    pub surface: String,
    pub mu: String,
    pub grid: [usize; 2],
    pub domain: [f64; 4],
    pub periodic: bool,
    pub classifiers: Classifiers,
    pub agree: bool,
    pub disagreements: Vec<String>,
    pub structure: Structure,
    pub structure_ok: bool,
    pub max_theta: f64,
    pub gram_defect: f64,
    pub extra_condition: f64,
    pub maurer_cartan_error: f64,
    /// Sup residual per λ sample with the node where it is attained.
    pub lambda_table: Vec<LambdaRow>,
    pub tolerances: Tolerances,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.agree && self.structure_ok
    }
}

/// Grid verification: structure equations, the three Willmore classifiers
/// and the per-λ flatness sweep. Also returns the per-node flatness cells.
pub fn verify(
    chart: &dyn Chart,
    mu: &MuField,
    domain: Domain,
    grid: (usize, usize),
    lambda_count: usize,
    tol: &Tolerances,
) -> Result<(VerifyReport, Vec<(C64, Vec<FlatnessCell>)>)> {
    let g = FrameGrid::compute(chart, mu, domain, grid.0, grid.1)?;
    let floor = g.noise_floor()?;
    let mut fields = Vec::with_capacity(lambda_count);
    let mut lambda_table = Vec::with_capacity(lambda_count);
    for l in lambda_samples(lambda_count) {
        let cells = g.flatness_field(l)?;
        let worst = cells
            .iter()
            .cloned()
            .fold(None::<FlatnessCell>, |acc, c| match acc {
                Some(a) if a.residual >= c.residual => Some(a),
                _ => Some(c),
            })
            .ok_or(Error::GridTooSmall(grid.0, grid.1))?;
        lambda_table.push(LambdaRow {
            u: worst.u,
            v: worst.v,
            lambda_re: l.re,
            lambda_im: l.im,
            residual: worst.residual,
        });
        fields.push((l, cells));
    }
    let flat_max = lambda_table.iter().map(|r| r.residual).fold(0.0, f64::max);
    let classifier = |measure: f64, threshold: f64| Classifier {
        measure,
        threshold,
        willmore: measure < threshold,
    };
    let classifiers = Classifiers {
        residual: classifier(g.max_willmore_residual(), tol.willmore),
        l_equation: classifier(g.max_l_equation(), tol.l_equation),
        flatness: classifier(flat_max, tol.flatness_factor * floor),
        noise_floor: floor,
    };
    let max_theta = g.max_theta();
    let mut disagreements = Vec::new();
    if max_theta >= tol.riccati {
        disagreements.push(format!("μ is not a Riccati solution on the grid: max |θ| = {max_theta:e}"));
    }
    let verdicts = [
        ("residual", &classifiers.residual),
        ("l-equation", &classifiers.l_equation),
        ("flatness", &classifiers.flatness),
    ];
    if verdicts.iter().any(|(_, c)| c.willmore != verdicts[0].1.willmore) {
        for (name, c) in verdicts {
            disagreements.push(format!(
                "{name}: measure {:e} vs threshold {:e} -> {}",
                c.measure,
                c.threshold,
                if c.willmore { "willmore" } else { "not willmore" }
            ));
        }
        for row in lambda_table.iter().filter(|r| (r.residual < classifiers.flatness.threshold) != verdicts[0].1.willmore) {
            disagreements.push(format!(
                "cell u={} v={} lambda={}{:+}i residual={:e}",
                row.u, row.v, row.lambda_re, row.lambda_im, row.residual
            ));
        }
    }
    let structure = g.structure();
    let (u0, u1, v0, v1) = match domain {
        Domain::Periodic { pu, pv } => (0.0, pu, 0.0, pv),
        Domain::Box { u0, u1, v0, v1 } => (u0, u1, v0, v1),
    };
    let report = VerifyReport {
        schema: SCHEMA.into(),
        version: VERSION.into(),
        surface: chart.spec(),
        mu: mu.to_string(),
        grid: [grid.0, grid.1],
        domain: [u0, u1, v0, v1],
        periodic: domain.is_periodic(),
        agree: disagreements.is_empty(),
        disagreements,
        structure_ok: structure.max() < tol.structure,
        structure: structure.into(),
        max_theta,
        gram_defect: g.max_gram_defect(),
        extra_condition: g.max_extra_condition(),
        maurer_cartan_error: g.maurer_cartan_error(true)?,
        classifiers,
        lambda_table,
        tolerances: *tol,
    };
    Ok((report, fields))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub a: f64,
    pub energy: f64,
    /// `π²(a/b + b/a)` with `b = √(1 − a²)`.
    pub closed_form: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub schema: String,
    pub version: String,
    pub surface: String,
    pub grid: [usize; 2],
    pub energy: Option<f64>,
    pub table: Vec<EnergyRow>,
    pub argmin: Option<f64>,
    pub min_energy: Option<f64>,
}

pub fn product_torus_energy(a: f64, grid: (usize, usize)) -> Result<f64> {
    willmore_energy(&ProductTorus::new(a)?, grid.0, grid.1)
}

pub fn product_torus_closed_form(a: f64) -> f64 {
    let b = (1.0 - a * a).sqrt();
    std::f64::consts::PI.powi(2) * (a / b + b / a)
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
pub fn golden_section(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Energy table of the product-torus family and its minimizer.
pub fn energy_sweep(values: &[f64], grid: (usize, usize)) -> Result<EnergyReport> {
    let table = values
        .iter()
        .map(|&a| {
            Ok(EnergyRow {
                a,
                energy: product_torus_energy(a, grid)?,
                closed_form: product_torus_closed_form(a),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (argmin, min_energy) = golden_section(|a| product_torus_energy(a, grid), lo, hi, 1e-6)?;
    Ok(EnergyReport {
        schema: SCHEMA.into(),
        version: VERSION.into(),
        surface: "product-torus".into(),
        grid: [grid.0, grid.1],
        energy: None,
        table,
        argmin: Some(argmin),
        min_energy: Some(min_energy),
    })
}

/// Serializes with sorted keys and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::NonFinite(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::NonFinite(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn csv_float(x: f64) -> String {
    let mut s = String::new();
    let _ = write!(s, "{x:?}");
    s
}

pub fn lambda_rows_csv(rows: &[LambdaRow]) -> String {
    let mut out = String::from("u,v,lambda_re,lambda_im,residual\n");
    for r in rows {
        let fields = [r.u, r.v, r.lambda_re, r.lambda_im, r.residual].map(csv_float);
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn flatness_cells_csv(fields: &[(C64, Vec<FlatnessCell>)]) -> String {
    let rows: Vec<LambdaRow> = fields
        .iter()
        .flat_map(|(l, cells)| {
            cells.iter().map(move |c| LambdaRow {
                u: c.u,
                v: c.v,
                lambda_re: l.re,
                lambda_im: l.im,
                residual: c.residual,
            })
        })
        .collect();
    lambda_rows_csv(&rows)
}

pub fn energy_csv(rows: &[EnergyRow]) -> String {
    let mut out = String::from("a,energy,closed_form\n");
    for r in rows {
        out.push_str(&[r.a, r.energy, r.closed_form].map(csv_float).join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the target directory, so a failed run
/// leaves no partial output.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfaces::{Clifford, parse_surface};

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("3+3i").unwrap(), C64::new(3.0, 3.0));
        assert_eq!(parse_complex("0.5-2i").unwrap(), C64::new(0.5, -2.0));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-3+2e+1i").unwrap(), C64::new(1e-3, 20.0));
        assert_eq!(parse_complex("-1.5").unwrap(), C64::new(-1.5, 0.0));
        assert!(parse_complex("abc").is_err());
        assert!(matches!(parse_mu("meromorphic:3+3i").unwrap(), MuChoice::Field(MuField::Pole { .. })));
        assert!(parse_mu("bogus").is_err());
    }

    #[test]
    fn auto_mu() {
        let tol = Tolerances::default();
        let t = parse_surface("product-torus:a=0.8").unwrap();
        assert!(matches!(resolve_mu(&MuChoice::Auto, t.as_ref(), 0.0, 0.0, &tol).unwrap(), MuField::Constant(_)));
        let v = parse_surface("veronese").unwrap();
        assert!(matches!(resolve_mu(&MuChoice::Auto, v.as_ref(), 0.0, 0.0, &tol).unwrap(), MuField::StereoDual | MuField::Constant(_) | MuField::Zero));
    }

    #[test]
    fn clifford_report_round_trips() {
        let opts = AnalyzeOptions {
            lambda_count: 16,
            energy_grid: Some((16, 16)),
            tol: Tolerances::default(),
        };
        let r = analyze(&Clifford, 0.3, 0.7, &MuField::Zero, &opts).unwrap();
        assert!(r.invariants.s.re.abs() < 1e-12);
        assert!((r.invariants.kappa_norm2 - 0.125).abs() < 1e-12);
        assert!((r.invariants.rho.re + 0.25).abs() < 1e-12);
        assert!(r.classification.willmore && r.classification.isotropic);
        let text = to_json(&r).unwrap();
        assert!(text.contains("\"schema\": \"moebius-lab/1\""));
        let back: AnalysisReport = from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(to_json(&back).unwrap(), text);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| Ok((x - 0.3) * (x - 0.3) + 1.0), 0.0, 1.0, 1e-8).unwrap();
        assert!((x - 0.3).abs() < 1e-7 && (fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn atomic_write() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, "{}\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "{}\n");
        assert!(write_atomic(&dir.path().join("missing/out.json"), "x").is_err());
    }
}
