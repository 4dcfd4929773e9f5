//! Registry of named properties run by the suite.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::family::check_family;
use crate::integral::{bochner_terms, local_integral};
use crate::isomorphism::{
    composition_blowup_demo, difference_quotient_criterion, embed_from_x0, estimate_m,
    holder_half_path, lift_bound_check, project_to_xt, x0_family, FamilyIsomorphism, NamedWeight,
    ReferenceNode, WeightProfile,
};
use crate::norm::{Exponent, NormedNode};
use crate::report::{Status, VerificationReport, Witness};
use crate::section::{lp_direct_norm, section_from_function, Section};
use crate::sobolev::{
    ftc_reconstruct, minimal_gradient_oracle, minimal_upper_gradient,
    reshetnyak_check, scalar_characterization_check, sobolev_norm, verify_upper_gradient,
    UpperGradient,
};
use crate::{MonotoneFamily, TimeGrid};

use super::cauchy::{cauchy_completeness_probe, Generator};
use super::config::Tolerances;
use super::fixtures::{
    builder_family, constant_l2, counterexample_section, random_section, random_small_instance, shrinking_l2,
    smooth_section, BUILDER_NAMES,
};

/// Seed and tolerances handed to every property.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropertyContext {
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for PropertyContext {
    fn default() -> Self {
        Self {
            seed: super::config::DEFAULT_SEED,
            tolerances: Tolerances::default(),
        }
    }
}

type PropertyFn = fn(&PropertyContext, &Value) -> Result<VerificationReport>;

const REGISTRY: &[(&str, PropertyFn)] = &[
    ("bochner_inequality", bochner_inequality),
    ("cauchy_completeness", cauchy_completeness),
    ("composition_blowup", composition_blowup),
    ("counterexample_gradient", counterexample_gradient),
    ("counterexample_reshetnyak", counterexample_reshetnyak),
    ("counterexample_scalar", counterexample_scalar),
    ("edge_contraction", edge_contraction),
    ("family_axioms", family_axioms),
    ("ftc_convergence", ftc_convergence),
    ("gradient_minimality", gradient_minimality),
    ("holder_divergence", holder_divergence),
    ("integral_additivity", integral_additivity),
    ("lift_bound", lift_bound),
    ("main1_gap", main1_gap),
    ("oracle_equivalence", oracle_equivalence),
    ("shift_criterion", shift_criterion),
    ("step_weight", step_weight),
    ("upper_gradient_feasibility", upper_gradient_feasibility),
    ("weight_isomorphism", weight_isomorphism),
];

pub fn property_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

pub fn run_property(name: &str, ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let f = REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| *f)
        .ok_or_else(|| Error::Unknown {
            kind: "property",
            name: name.into(),
            registered: property_names().join(", "),
        })?;
    Ok(f(ctx, params)?.renamed(name))
}

fn parse_params<T: DeserializeOwned + Default>(value: &Value, name: &str) -> Result<T> {
    match value {
        Value::Null => Ok(T::default()),
        v => serde_json::from_value(v.clone()).map_err(|e| Error::param(format!("{name}: {e}"))),
    }
}

fn pick_worst(reports: Vec<(String, VerificationReport)>, name: &str, tolerance: f64) -> VerificationReport {
    let mut metrics = BTreeMap::new();
    let mut worst: Option<(String, VerificationReport)> = None;
    for (label, r) in reports {
        for (k, v) in &r.metrics {
            metrics.insert(format!("{label}.{k}"), *v);
        }
        let replace = match &worst {
            None => true,
            Some((_, w)) => {
                (r.status != Status::Pass && w.status == Status::Pass)
                    || (r.status == w.status && r.worst_residual > w.worst_residual)
            }
        };
        if replace {
            worst = Some((label, r));
        }
    }
    let (label, w) = worst.unwrap_or_else(|| (String::new(), VerificationReport::from_residual(name, 0.0, tolerance, None)));
    let witness = w
        .witness
        .map(|wit| Witness::new(wit.indices, format!("{label}: {}", wit.note)));
    let mut out = VerificationReport::with_status(name, w.status, w.worst_residual, tolerance, witness);
    out.metrics = metrics;
    out
}

// ---------------------------------------------------------------- numerics

/// Relative gap between the minimal gradient norm and the weak-derivative
/// norm of `sin(x) e^{-t}` on the shrinking `L²` family.
pub fn main1_gap_at(n: usize, mesh: usize) -> Result<f64> {
    let u = smooth_section(shrinking_l2(n, mesh)?);
    Ok(sobolev_norm(&u, Exponent::TWO)?.relative_gap)
}

/// Largest node error of the FTC reconstruction of `sin(x) e^{-t}`.
pub fn ftc_error_at(n: usize, mesh: usize) -> Result<f64> {
    let u = smooth_section(shrinking_l2(n, mesh)?);
    Ok(ftc_reconstruct(&u, 0)?.max_error)
}

/// `‖M_h u - u‖` for `sin(x) e^{-t}` with `h` equal to `cells` cell widths.
pub fn mh_error_at(n: usize, mesh: usize, cells: usize) -> Result<f64> {
    let u = smooth_section(shrinking_l2(n, mesh)?);
    let h = cells as f64 * u.grid().max_cell_width();
    let m = crate::integral::smooth_mh(&u, h)?;
    Ok(lp_direct_norm(&m.sub(&u)?, Exponent::TWO).value)
}

/// `M_forward` for a weight isomorphism on the constant `L²` family.
pub fn weight_m_at(n: usize, mesh: usize, weight: &WeightProfile, seed: u64) -> Result<f64> {
    let family = constant_l2(n, mesh)?;
    let iso = FamilyIsomorphism::weight(&family, &weight.values(family.grid())?, ReferenceNode::Last, seed)?;
    Ok(estimate_m(&family, &iso, seed)?.m_forward)
}

/// `-` slope of `log value` against `log n`.
pub fn fitted_order(grids: &[usize], values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = grids
        .iter()
        .zip(values)
        .map(|(&n, &v)| ((n as f64).ln(), v.ln()))
        .collect();
    -crate::isomorphism::log_slope(&pts)
}

// ---------------------------------------------------------------- properties

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AxiomParams {
    families: Vec<String>,
    n: usize,
    mesh: usize,
    samples: usize,
}

impl Default for AxiomParams {
    fn default() -> Self {
        Self {
            families: BUILDER_NAMES.iter().map(|s| s.to_string()).collect(),
            n: 128,
            mesh: 256,
            samples: 100,
        }
    }
}

fn family_axioms(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: AxiomParams = parse_params(params, "family_axioms")?;
    let tol = ctx.tolerances.exact;
    let mut reports = Vec::new();
    for name in &p.families {
        let fam = builder_family(name, p.n, p.mesh)?;
        reports.push((name.clone(), check_family(&fam, p.samples, ctx.seed, tol)));
    }
    Ok(pick_worst(reports, "family_axioms", tol))
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OracleParams {
    instances: usize,
    max_nodes: usize,
    exponents: Vec<Exponent>,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            instances: 50,
            max_nodes: 8,
            exponents: vec![Exponent::ONE, Exponent::TWO, Exponent::INFINITY],
        }
    }
}

fn oracle_equivalence(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: OracleParams = parse_params(params, "oracle_equivalence")?;
    if p.max_nodes < 2 {
        return Err(Error::param("oracle_equivalence needs max_nodes >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst = (0.0, 0usize, Exponent::ONE);
    for k in 0..p.instances {
        let n = rng.gen_range(2..=p.max_nodes);
        let q = [Exponent::ONE, Exponent::TWO, Exponent::INFINITY][rng.gen_range(0..3)];
        let u = random_small_instance(&mut rng, n, q)?;
        for &e in &p.exponents {
            let closed = minimal_upper_gradient(&u, e).lp_norm;
            let oracle = minimal_gradient_oracle(&u, e)?.lp_norm;
            let diff = (closed - oracle).abs();
            if diff > worst.0 {
                worst = (diff, k, e);
            }
        }
    }
    let tol = ctx.tolerances.quadrature;
    let witness = Witness::new(vec![worst.1], format!("instance {} with p = {}", worst.1, worst.2));
    Ok(VerificationReport::from_residual("oracle_equivalence", worst.0, tol, Some(witness).filter(|_| worst.0 > tol))
        .metric("instances", p.instances as f64))
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GapParams {
    n: usize,
    coarse: usize,
    mesh: usize,
    /// Allowed relative deviation of the halving factor from 2.
    halving_band: f64,
}

impl Default for GapParams {
    fn default() -> Self {
        Self {
            n: 512,
            coarse: 256,
            mesh: 128,
            halving_band: 0.3,
        }
    }
}

fn main1_gap(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: GapParams = parse_params(params, "main1_gap")?;
    let fine = main1_gap_at(p.n, p.mesh)?;
    let coarse = main1_gap_at(p.coarse, p.mesh)?;
    let ratio = fine / coarse;
    let expected = p.coarse as f64 / p.n as f64;
    let tol = ctx.tolerances.relative_gap;
    let halving_ok = (ratio / expected - 1.0).abs() <= p.halving_band;
    let report = if fine <= tol && !halving_ok {
        VerificationReport::with_status(
            "main1_gap",
            Status::Fail,
            fine,
            tol,
            Some(Witness::new(
                vec![p.coarse, p.n],
                format!("gap ratio {ratio:.3} is outside {expected} ± {}", p.halving_band),
            )),
        )
    } else {
        VerificationReport::from_residual(
            "main1_gap",
            fine,
            tol,
            Some(Witness::new(vec![p.n], format!("relative gap {fine:.3e} at n = {}", p.n))).filter(|_| fine > tol),
        )
    };
    Ok(report
        .metric("gap_fine", fine)
        .metric("gap_coarse", coarse)
        .metric("gap_ratio", ratio))
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BochnerParams {
    pairs: usize,
    n: usize,
    mesh: usize,
}

impl Default for BochnerParams {
    fn default() -> Self {
        Self {
            pairs: 200,
            n: 48,
            mesh: 24,
        }
    }
}

fn random_windows(
    ctx: &PropertyContext,
    p: &BochnerParams,
    mut f: impl FnMut(&Section, usize, usize, &mut ChaCha8Rng) -> Result<f64>,
) -> Result<(f64, Vec<usize>, String)> {
    let families: Vec<Arc<MonotoneFamily>> = BUILDER_NAMES
        .iter()
        .map(|name| builder_family(name, p.n, p.mesh))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut worst = (0.0, Vec::new(), String::new());
    for _ in 0..p.pairs {
        let k = rng.gen_range(0..families.len());
        let u = random_section(families[k].clone(), &mut rng);
        let a = rng.gen_range(0..p.n);
        let b = rng.gen_range(a..p.n);
        let r = f(&u, a, b, &mut rng)?;
        if r > worst.0 {
            worst = (r, vec![a, b], BUILDER_NAMES[k].to_string());
        }
    }
    Ok(worst)
}

fn bochner_inequality(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: BochnerParams = parse_params(params, "bochner_inequality")?;
    let (worst, idx, fam) = random_windows(ctx, &p, |u, a, b, _| Ok(bochner_terms(u, a..=b)?.residual()))?;
    let tol = ctx.tolerances.exact;
    let witness = Witness::new(idx, format!("window on {fam}"));
    Ok(VerificationReport::from_residual("bochner_inequality", worst, tol, Some(witness).filter(|_| worst > tol))
        .metric("pairs", p.pairs as f64))
}

fn integral_additivity(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: BochnerParams = parse_params(params, "integral_additivity")?;
    let (worst, idx, fam) = random_windows(ctx, &p, |u, a, b, rng| {
        let mid = rng.gen_range(a..=b);
        let family = u.family();
        let (_, left) = local_integral(u, a..=mid)?;
        let (_, right) = local_integral(u, mid..=b)?;
        let (_, whole) = local_integral(u, a..=b)?;
        let joined = family.apply_transition(mid, b, &left)? + right;
        let scale = 1.0 + family.eval_norm(b, &whole)?;
        Ok(family.eval_norm(b, &(joined - whole))? / scale)
    })?;
    let tol = ctx.tolerances.exact;
    let witness = Witness::new(idx, format!("window on {fam}"));
    Ok(VerificationReport::from_residual("integral_additivity", worst, tol, Some(witness).filter(|_| worst > tol)))
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GridsParams {
    grids: Vec<usize>,
    mesh: usize,
}

impl Default for GridsParams {
    fn default() -> Self {
        Self {
            grids: vec![64, 128, 256, 512],
            mesh: 128,
        }
    }
}

fn check_grids(grids: &[usize]) -> Result<()> {
    if grids.len() < 2 || grids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("grids must be strictly increasing with at least two entries"));
    }
    Ok(())
}

fn ftc_convergence(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: GridsParams = parse_params(params, "ftc_convergence")?;
    check_grids(&p.grids)?;
    let errors: Vec<f64> = p.grids.iter().map(|&n| ftc_error_at(n, p.mesh)).collect::<Result<_>>()?;
    let order = fitted_order(&p.grids, &errors);
    let residual = (order - 1.0).abs();
    let tol = ctx.tolerances.order;
    let witness = Witness::new(p.grids.clone(), format!("fitted order {order:.3}"));
    let mut r = VerificationReport::from_residual("ftc_convergence", residual, tol, Some(witness).filter(|_| residual > tol))
        .metric("order", order);
    for (n, e) in p.grids.iter().zip(&errors) {
        r = r.metric(&format!("error_n{n}"), *e).metric(&format!("error_times_n{n}"), e * *n as f64);
    }
    Ok(r)
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CounterParams {
    grids: Vec<usize>,
    mesh: usize,
    majorant: f64,
    p: Exponent,
}

impl Default for CounterParams {
    fn default() -> Self {
        Self {
            grids: vec![64, 128, 256],
            mesh: 256,
            majorant: 1.0,
            p: Exponent::TWO,
        }
    }
}

fn counterexample_gradient(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: CounterParams = parse_params(params, "counterexample_gradient")?;
    let mut r = VerificationReport::from_residual("counterexample_gradient", 0.0, ctx.tolerances.exact, None);
    let mut worst = (0.0, Vec::new(), String::new());
    for &n in &p.grids {
        let u = counterexample_section(n, p.mesh)?;
        let g = minimal_upper_gradient(&u, p.p).lp_norm;
        if g > worst.0 {
            worst = (g, vec![n], format!("gradient norm {g:e} at n = {n}"));
        }
        for (i, norm) in u.node_norms().into_iter().enumerate() {
            let expected = if u.grid().node(i) < 0.5 { 1.0 } else { 0.5 };
            let e = (norm - expected).abs();
            if e > worst.0 {
                worst = (e, vec![n, i], format!("node norm {norm} at node {i}, n = {n}"));
            }
        }
        r = r.metric(&format!("gradient_n{n}"), g);
    }
    let tol = ctx.tolerances.exact;
    let metrics = r.metrics;
    let mut out = VerificationReport::from_residual(
        "counterexample_gradient",
        worst.0,
        tol,
        Some(Witness::new(worst.1, worst.2)).filter(|_| worst.0 > tol),
    );
    out.metrics = metrics;
    Ok(out)
}

/// Hypothesis-violated when the frozen-vector majorant fails on every grid
/// and the scalar quotient at the jump grows at least like `0.9 · n / 2`.
fn counterexample_scalar(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: CounterParams = parse_params(params, "counterexample_scalar")?;
    let tol = ctx.tolerances.exact;
    let mut metrics = BTreeMap::new();
    let mut last = None;
    let mut problem = None;
    for &n in &p.grids {
        let u = counterexample_section(n, p.mesh)?;
        let majorant = vec![p.majorant; u.grid().cell_count()];
        let r = scalar_characterization_check(&u, p.p, &majorant, tol)?;
        let q = r.metrics["max_scalar_quotient"];
        metrics.insert(format!("scalar_quotient_n{n}"), q);
        if r.status != Status::HypothesisViolated && problem.is_none() {
            problem = Some(Witness::new(vec![n], format!("scalar check reported {} at n = {n}", r.status)));
        }
        if q < 0.9 * n as f64 * 0.5 && problem.is_none() {
            problem = Some(Witness::new(vec![n], format!("jump quotient {q:.3} below 0.45 n at n = {n}")));
        }
        last = Some(r);
    }
    let last = last.ok_or_else(|| Error::param("counterexample_scalar needs at least one grid"))?;
    let mut out = match problem {
        Some(w) => VerificationReport::with_status("counterexample_scalar", Status::Fail, last.worst_residual, tol, Some(w)),
        None => VerificationReport::with_status(
            "counterexample_scalar",
            Status::HypothesisViolated,
            last.worst_residual,
            tol,
            last.witness,
        ),
    };
    out.metrics = metrics;
    Ok(out)
}

fn counterexample_reshetnyak(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: CounterParams = parse_params(params, "counterexample_reshetnyak")?;
    let n = *p.grids.last().ok_or_else(|| Error::param("counterexample_reshetnyak needs a grid"))?;
    let u = counterexample_section(n, p.mesh)?;
    let probe = DVector::zeros(u.family().dim(0));
    reshetnyak_check(&u, p.p, &[probe], ctx.tolerances.exact)
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SmoothParams {
    n: usize,
    mesh: usize,
    p: Exponent,
}

impl Default for SmoothParams {
    fn default() -> Self {
        Self {
            n: 128,
            mesh: 64,
            p: Exponent::TWO,
        }
    }
}

fn upper_gradient_feasibility(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: SmoothParams = parse_params(params, "upper_gradient_feasibility")?;
    let tol = ctx.tolerances.exact;
    let mut reports = Vec::new();
    for name in BUILDER_NAMES {
        let u = smooth_section(builder_family(name, p.n, p.mesh)?);
        let g = minimal_upper_gradient(&u, p.p);
        reports.push((name.to_string(), verify_upper_gradient(&u, &g, tol)?));
    }
    Ok(pick_worst(reports, "upper_gradient_feasibility", tol))
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MinimalityParams {
    n: usize,
    mesh: usize,
    perturbations: usize,
    exponents: Vec<Exponent>,
}

impl Default for MinimalityParams {
    fn default() -> Self {
        Self {
            n: 64,
            mesh: 32,
            perturbations: 100,
            exponents: vec![Exponent::ONE, Exponent::TWO, Exponent::INFINITY],
        }
    }
}

/// Nonnegative perturbations of the minimal gradient stay feasible and never
/// have a smaller norm.
fn gradient_minimality(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: MinimalityParams = parse_params(params, "gradient_minimality")?;
    let u = smooth_section(shrinking_l2(p.n, p.mesh)?);
    let grid = u.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let tol = ctx.tolerances.exact;
    let mut worst = (0.0, 0usize);
    for &e in &p.exponents {
        let g = minimal_upper_gradient(&u, e);
        for k in 0..p.perturbations {
            let scale = rng.gen_range(0.0..1.0);
            let values: Vec<f64> = g
                .cell_values
                .iter()
                .map(|v| v + scale * rng.gen_range(0.0f64..1.0).powi(3))
                .collect();
            let perturbed = UpperGradient::new(grid, values, e)?;
            let feasible = verify_upper_gradient(&u, &perturbed, tol)?;
            let deficit = (g.lp_norm - perturbed.lp_norm).max(feasible.worst_residual);
            if deficit > worst.0 {
                worst = (deficit, k);
            }
        }
    }
    let witness = Witness::new(vec![worst.1], "perturbation beats the minimal gradient");
    Ok(VerificationReport::from_residual("gradient_minimality", worst.0, tol, Some(witness).filter(|_| worst.0 > tol)))
}

fn shift_criterion(_ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: SmoothParams = parse_params(params, "shift_criterion")?;
    let u = smooth_section(shrinking_l2(p.n, p.mesh)?);
    difference_quotient_criterion(&u, p.p)
}

fn holder_divergence(_ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: SmoothParams = parse_params(params, "holder_divergence")?;
    let grid = TimeGrid::uniform(0.0, 1.0, p.n)?;
    let family = Arc::new(
        MonotoneFamily::constant("scalar", grid, NormedNode::euclidean(1)).with_coords(vec![vec![1.0]; p.n])?,
    );
    let path = holder_half_path(p.n);
    let u = section_from_function(family, move |t, x| x * path(t));
    difference_quotient_criterion(&u, p.p)
}

/// Pushing into the edge spaces never increases the minimal gradient norm.
fn edge_contraction(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: SmoothParams = parse_params(params, "edge_contraction")?;
    let tol = ctx.tolerances.quadrature;
    let mut reports = Vec::new();
    for name in ["nested_lq", "sup_counterexample", "weighted_hilbert"] {
        let family = builder_family(name, p.n, p.mesh)?;
        let u = smooth_section(family.clone());
        let g_in = minimal_upper_gradient(&u, p.p).lp_norm;
        let g_out = minimal_upper_gradient(&project_to_xt(&u), p.p).lp_norm;
        let x0 = x0_family(&family);
        let coords = family.coords(0);
        let values = (0..family.len())
            .map(|i| {
                let t = family.grid().node(i);
                let mut v = DVector::from_iterator(coords.len(), coords.iter().map(|&x| (x * (1.0 + t)).sin()));
                family.node(0).project_to_active(&mut v);
                v
            })
            .collect();
        let u0 = Section::new(x0, values)?;
        let g0 = minimal_upper_gradient(&u0, p.p).lp_norm;
        let g_emb = minimal_upper_gradient(&embed_from_x0(family.clone(), &u0)?, p.p).lp_norm;
        let excess = (g_out - g_in).max(g_emb - g0).max(0.0);
        let witness = Witness::new(Vec::new(), format!("projection {g_out:.3e} vs {g_in:.3e}, embedding {g_emb:.3e} vs {g0:.3e}"));
        reports.push((
            name.to_string(),
            VerificationReport::from_residual("edge_contraction", excess, tol, Some(witness).filter(|_| excess > tol)),
        ));
    }
    Ok(pick_worst(reports, "edge_contraction", tol))
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct WeightParams {
    n: usize,
    mesh: usize,
    w: WeightProfile,
    target: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        Self {
            n: 128,
            mesh: 16,
            w: WeightProfile::Named(NamedWeight::Affine),
            target: 0.5,
        }
    }
}

/// `M_forward` close to `target` and stable under one grid doubling.
fn weight_isomorphism(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: WeightParams = parse_params(params, "weight_isomorphism")?;
    let m1 = weight_m_at(p.n, p.mesh, &p.w, ctx.seed)?;
    let m2 = weight_m_at(2 * p.n, p.mesh, &p.w, ctx.seed)?;
    let off_target = (m1 - p.target).abs() / p.target;
    let drift = (m2 - m1).abs() / m1.max(f64::MIN_POSITIVE);
    let residual = off_target.max(drift);
    let tol = ctx.tolerances.stability;
    let witness = Witness::new(vec![p.n, 2 * p.n], format!("M = {m1:.4} then {m2:.4}, target {}", p.target));
    Ok(VerificationReport::from_residual("weight_isomorphism", residual, tol, Some(witness).filter(|_| residual > tol))
        .metric("m_forward", m1)
        .metric("m_forward_doubled", m2)
        .metric("drift", drift))
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct StepParams {
    grids: Vec<usize>,
    mesh: usize,
    growth: f64,
    band: f64,
}

impl Default for StepParams {
    fn default() -> Self {
        Self {
            grids: vec![64, 128, 256],
            mesh: 16,
            growth: 2.0,
            band: 0.2,
        }
    }
}

/// Divergent when the max ratio grows by `growth ± band` per doubling.
fn step_weight(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: StepParams = parse_params(params, "step_weight")?;
    check_grids(&p.grids)?;
    let w = WeightProfile::Named(NamedWeight::Step);
    let ms: Vec<f64> = p.grids.iter().map(|&n| weight_m_at(n, p.mesh, &w, ctx.seed)).collect::<Result<_>>()?;
    let growth: Vec<f64> = ms.windows(2).map(|m| m[1] / m[0]).collect();
    let worst = growth.iter().map(|g| (g - p.growth).abs()).fold(0.0, f64::max);
    let mut r = if worst <= p.band {
        VerificationReport::with_status("step_weight", Status::Divergent, worst, p.band, None)
    } else {
        VerificationReport::with_status(
            "step_weight",
            Status::Fail,
            worst,
            p.band,
            Some(Witness::new(p.grids.clone(), format!("growth factors {growth:?}"))),
        )
    };
    for (n, m) in p.grids.iter().zip(&ms) {
        r = r.metric(&format!("m_forward_n{n}"), *m);
    }
    Ok(r)
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct BlowupParams {
    n_values: Vec<usize>,
    s: f64,
    t: f64,
    a: f64,
    mesh: usize,
    exponent: f64,
    min_growth: f64,
}

impl Default for BlowupParams {
    fn default() -> Self {
        Self {
            n_values: vec![16, 32, 64, 128],
            s: 0.2,
            t: 0.201,
            a: 0.3,
            mesh: 8192,
            exponent: 2.0 / 3.0,
            min_growth: 1.5,
        }
    }
}

/// Divergent when the ratio table is strictly increasing and the last
/// doubling grows by at least `min_growth`.
fn composition_blowup(_ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: BlowupParams = parse_params(params, "composition_blowup")?;
    let table = composition_blowup_demo(&p.n_values, p.s, p.t, p.a, p.mesh, p.exponent)?;
    let top = table.growth_factors.last().copied().unwrap_or(0.0);
    let shortfall = (p.min_growth - top).max(0.0);
    let mut r = if table.strictly_increasing && shortfall == 0.0 {
        VerificationReport::with_status("composition_blowup", Status::Divergent, shortfall, 0.0, None)
    } else {
        VerificationReport::with_status(
            "composition_blowup",
            Status::Fail,
            shortfall,
            0.0,
            Some(Witness::new(
                p.n_values.clone(),
                format!("increasing = {}, top growth {top:.3}", table.strictly_increasing),
            )),
        )
    };
    for row in &table.rows {
        r = r.metric(&format!("ratio_n{}", row.n), row.ratio);
    }
    Ok(r.metric("top_growth", top))
}

fn lift_bound(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: WeightParams = parse_params(params, "lift_bound")?;
    let family = constant_l2(p.n, p.mesh)?;
    let iso = FamilyIsomorphism::weight(&family, &p.w.values(family.grid())?, ReferenceNode::Last, ctx.seed)?;
    let report = estimate_m(&family, &iso, ctx.seed)?;
    let u = smooth_section(family);
    lift_bound_check(&iso, &u, &report, Exponent::TWO, ctx.tolerances.quadrature)
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CauchyParams {
    generator: Generator,
    p: Exponent,
    n: usize,
    mesh: usize,
    terms: usize,
}

impl Default for CauchyParams {
    fn default() -> Self {
        Self {
            generator: Generator::Geometric,
            p: Exponent::TWO,
            n: 64,
            mesh: 32,
            terms: 30,
        }
    }
}

fn cauchy_completeness(ctx: &PropertyContext, params: &Value) -> Result<VerificationReport> {
    let p: CauchyParams = parse_params(params, "cauchy_completeness")?;
    let base = smooth_section(shrinking_l2(p.n, p.mesh)?);
    cauchy_completeness_probe(p.generator, &base, p.terms, p.p, ctx.tolerances.quadrature)
}
