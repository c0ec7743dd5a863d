//! Run configuration: JSON schema in `config.schema.json`, unknown keys rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fs_ddrom::dg::{AdrManufactured, ExactSolution, Quadratic, ScalarFunction, Trig};
use fs_ddrom::fs_models::{
    make_adr_system, make_elasticity_system_2d, AdrSystem, BcKind, BoundaryTags, Field, FriedrichsSystem, Kappa, Velocity,
};
use fs_ddrom::mesh::Bounds;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    #[serde(default)]
    pub mesh: MeshSpec,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleSpec>,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub partition: PartitionSpec,
    #[serde(default)]
    pub rom: RomSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repartition: Option<RepartitionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_degree() -> usize {
    1
}

/// A coefficient: a number or a component of the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    Value(f64),
    Param {
        param: usize,
    },
}

impl Coef {
    fn eval(&self, p: &[f64]) -> Result<f64, CliError> {
        match *self {
            Coef::Value(v) => Ok(v),
            Coef::Param { param } => p.get(param).copied().ok_or_else(|| {
                CliError::Config(format!("coefficient refers to parameter {param} but samples have {} components", p.len()))
            }),
        }
    }

    fn max_param(&self) -> Option<usize> {
        match self {
            Coef::Value(_) => None,
            Coef::Param { param } => Some(*param),
        }
    }

    fn constant(&self, what: &str) -> Result<f64, CliError> {
        match self {
            Coef::Value(v) => Ok(*v),
            Coef::Param { .. } => Err(CliError::Config(format!("{what} must be a number here"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KappaSpec {
    Uniform(Coef),
    Piecewise(PiecewiseKappa),
}

/// Diffusivity `left` for `x < split` and `right` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseKappa {
    pub split: f64,
    pub left: Coef,
    pub right: Coef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcSpec {
    Dirichlet,
    Neumann,
}

impl From<BcSpec> for BcKind {
    fn from(b: BcSpec) -> Self {
        match b {
            BcSpec::Dirichlet => BcKind::Dirichlet,
            BcSpec::Neumann => BcKind::Neumann,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TagsSpec {
    All(BcSpec),
    Sides(SideTags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideTags {
    pub left: BcSpec,
    pub right: BcSpec,
    pub bottom: BcSpec,
    pub top: BcSpec,
}

impl Default for TagsSpec {
    fn default() -> Self {
        TagsSpec::All(BcSpec::Dirichlet)
    }
}

impl TagsSpec {
    fn tags(&self) -> BoundaryTags {
        match *self {
            TagsSpec::All(b) => BoundaryTags::all(b.into()),
            TagsSpec::Sides(s) => BoundaryTags { left: s.left.into(), right: s.right.into(), bottom: s.bottom.into(), top: s.top.into() },
        }
    }
}

/// One-dimensional factor of a source term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    One,
    Pow(i32),
    Sin(f64),
    Cos(f64),
}

impl Default for Factor {
    fn default() -> Self {
        Factor::One
    }
}

impl Factor {
    fn at(&self, t: f64) -> f64 {
        match *self {
            Factor::One => 1.0,
            Factor::Pow(n) => t.powi(n),
            Factor::Sin(w) => (w * t).sin(),
            Factor::Cos(w) => (w * t).cos(),
        }
    }
}

/// `c * X(x) * Y(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub c: f64,
    #[serde(default)]
    pub x: Factor,
    #[serde(default)]
    pub y: Factor,
}

fn sum_terms(terms: &[Term], p: [f64; 2]) -> f64 {
    terms.iter().map(|t| t.c * t.x.at(p[0]) * t.y.at(p[1])).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExactSpec {
    /// `sin(kx x) cos(ky y)`.
    Trig { kx: f64, ky: f64 },
    /// `c0 + c1 x + c2 y + c3 x^2 + c4 x y + c5 y^2`.
    Quadratic { coeffs: [f64; 6] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// Advection-diffusion-reaction in mixed form; homogeneous boundary data.
    Adr {
        kappa: KappaSpec,
        #[serde(default = "zero_beta")]
        beta: [Coef; 2],
        mu: Coef,
        #[serde(default)]
        tags: TagsSpec,
        /// Right-hand side of the scalar equation.
        #[serde(default)]
        source: Vec<Term>,
        /// Manufactured solution; replaces the source and boundary data.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exact: Option<ExactSpec>,
    },
    /// Linear elasticity in stress-displacement form; homogeneous boundary data.
    Elasticity {
        mu1: Coef,
        mu2: Coef,
        mu3: Coef,
        #[serde(default)]
        tags: TagsSpec,
        #[serde(default)]
        source_x: Vec<Term>,
        #[serde(default)]
        source_y: Vec<Term>,
    },
}

fn zero_beta() -> [Coef; 2] {
    [Coef::Value(0.0); 2]
}

impl SystemSpec {
    pub fn components(&self) -> usize {
        match self {
            SystemSpec::Adr { .. } => 3,
            SystemSpec::Elasticity { .. } => 6,
        }
    }

    fn coefs(&self) -> Vec<Coef> {
        match self {
            SystemSpec::Adr { kappa, beta, mu, .. } => {
                let mut v = vec![beta[0], beta[1], *mu];
                match kappa {
                    KappaSpec::Uniform(c) => v.push(*c),
                    KappaSpec::Piecewise(p) => v.extend([p.left, p.right]),
                }
                v
            }
            SystemSpec::Elasticity { mu1, mu2, mu3, .. } => vec![*mu1, *mu2, *mu3],
        }
    }

    /// Number of parameter components the system refers to.
    pub fn param_dim(&self) -> usize {
        self.coefs().iter().filter_map(Coef::max_param).map(|p| p + 1).max().unwrap_or(0)
    }

    /// The system instance for parameter vector `p`.
    pub fn build(&self, p: &[f64]) -> Result<Box<dyn FriedrichsSystem>, CliError> {
        match self {
            SystemSpec::Adr { kappa, beta, mu, tags, source, exact } => {
                if exact.is_some() {
                    return Ok(Box::new(self.manufactured()?.1));
                }
                let kappa = match kappa {
                    KappaSpec::Uniform(c) => Kappa::Constant(c.eval(p)?),
                    KappaSpec::Piecewise(k) => Kappa::PiecewiseX { split: k.split, left: k.left.eval(p)?, right: k.right.eval(p)? },
                };
                let terms = source.clone();
                let f: Field = Arc::new(move |x| DVector::from_vec(vec![0.0, 0.0, sum_terms(&terms, x)]));
                let beta = Velocity::Constant([beta[0].eval(p)?, beta[1].eval(p)?]);
                make_adr_system(kappa, beta, mu.eval(p)?, tags.tags(), Some(f), None).map(|s| Box::new(s) as Box<dyn FriedrichsSystem>).map_err(|e| CliError::Config(e.to_string()))
            }
            SystemSpec::Elasticity { mu1, mu2, mu3, tags, source_x, source_y } => {
                let (sx, sy) = (source_x.clone(), source_y.clone());
                let f: Field = Arc::new(move |x| DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, sum_terms(&sx, x), sum_terms(&sy, x)]));
                make_elasticity_system_2d(mu1.eval(p)?, mu2.eval(p)?, mu3.eval(p)?, tags.tags(), Some(f), None)
                    .map(|s| Box::new(s) as Box<dyn FriedrichsSystem>)
                    .map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }

    /// Exact solution and the matching ADR system (constant coefficients only).
    pub fn manufactured(&self) -> Result<(Box<dyn ExactSolution>, AdrSystem), CliError> {
        let SystemSpec::Adr { kappa, beta, mu, tags, exact: Some(exact), .. } = self else {
            return Err(CliError::Config("an exact solution is only available for adr systems with an `exact` entry".into()));
        };
        let KappaSpec::Uniform(k) = kappa else {
            return Err(CliError::Config("manufactured solutions need a uniform kappa".into()));
        };
        let (k, mu) = (k.constant("kappa")?, mu.constant("mu")?);
        let beta = Velocity::Constant([beta[0].constant("beta")?, beta[1].constant("beta")?]);
        fn build<U: ScalarFunction + Clone + 'static>(
            u: U,
            k: f64,
            beta: Velocity,
            mu: f64,
            tags: BoundaryTags,
        ) -> Result<(Box<dyn ExactSolution>, AdrSystem), CliError> {
            let ex = AdrManufactured::new(u, k, beta, mu);
            let sys = ex.system(tags).map_err(|e| CliError::Config(e.to_string()))?;
            Ok((Box::new(ex), sys))
        }
        match *exact {
            ExactSpec::Trig { kx, ky } => build(Trig { kx, ky }, k, beta, mu, tags.tags()),
            ExactSpec::Quadratic { coeffs } => build(Quadratic(coeffs), k, beta, mu, tags.tags()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
    /// `[x0, x1, y0, y1]`.
    #[serde(default = "unit_bounds")]
    pub bounds: [f64; 4],
}

fn unit_bounds() -> [f64; 4] {
    [0.0, 1.0, 0.0, 1.0]
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { nx: 8, ny: 8, bounds: unit_bounds() }
    }
}

impl MeshSpec {
    pub fn bounds(&self) -> Bounds {
        Bounds::new(self.bounds[0], self.bounds[1], self.bounds[2], self.bounds[3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// Sample `i` of `n` at `lo + (hi - lo) i / (n - 1)` in every component.
    Linear,
    /// Sample `i` of `n` at `lo (hi / lo)^(i / (n - 1))` in every component.
    Geometric,
    /// Independent uniform draws from the seeded generator.
    Random,
}

/// Either an explicit list or `count` samples of the box `ranges`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranges: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

impl SampleSpec {
    pub fn generate(&self, seed: u64) -> Result<Vec<Vec<f64>>, CliError> {
        match (&self.values, &self.ranges, self.count) {
            (Some(v), None, None) => {
                if v.is_empty() {
                    return Err(CliError::Config("samples.values is empty".into()));
                }
                Ok(v.clone())
            }
            (None, Some(ranges), Some(n)) => {
                if n == 0 || ranges.is_empty() {
                    return Err(CliError::Config("samples need count >= 1 and at least one range".into()));
                }
                let t = |i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                match self.spacing {
                    Spacing::Linear => Ok((0..n).map(|i| ranges.iter().map(|r| r[0] + (r[1] - r[0]) * t(i)).collect()).collect()),
                    Spacing::Geometric => {
                        if ranges.iter().any(|r| !(r[0] > 0.0 && r[1] > 0.0)) {
                            return Err(CliError::Config("geometric spacing needs positive ranges".into()));
                        }
                        Ok((0..n).map(|i| ranges.iter().map(|r| r[0] * (r[1] / r[0]).powf(t(i))).collect()).collect())
                    }
                    Spacing::Random => {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        Ok((0..n).map(|_| ranges.iter().map(|r| r[0] + (r[1] - r[0]) * rng.gen::<f64>()).collect()).collect())
                    }
                }
            }
            _ => Err(CliError::Config("samples need either `values` or both `ranges` and `count`".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    /// Samples `0, stride, 2 stride, ...` are training samples.
    pub stride: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { stride: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    /// Number of vertical stripes `K`.
    pub subdomains: usize,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        Self { subdomains: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomSpec {
    /// Ranks evaluated by `rom-eval` and, uniformly per subdomain, by `ddrom-eval`.
    #[serde(default = "default_ranks")]
    pub ranks: Vec<usize>,
    /// Energy tolerance; replaces `ranks` in `rom-eval` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Explicit per-subdomain ranks for `ddrom-eval`; replaces the uniform sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_ranks: Option<Vec<usize>>,
}

fn default_ranks() -> Vec<usize> {
    vec![1, 2, 3, 4, 5]
}

impl Default for RomSpec {
    fn default() -> Self {
        Self { ranks: default_ranks(), tolerance: None, local_ranks: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorName {
    Variance,
    Grassmannian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRanks {
    pub low: usize,
    pub high: usize,
    pub global: usize,
}

impl Default for ScanRanks {
    fn default() -> Self {
        Self { low: 1, high: 1, global: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepartitionSpec {
    /// Indicator driving the `ddrom-eval` repartitioned variant.
    #[serde(default = "default_indicator")]
    pub indicator: IndicatorName,
    #[serde(default = "default_p_l")]
    pub p_l: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_n_neigh")]
    pub n_neigh: usize,
    #[serde(default = "default_r_t")]
    pub r_t: usize,
    /// Thresholds of the reconstruction scan.
    #[serde(default = "default_grid")]
    pub grid: Vec<f64>,
    #[serde(default)]
    pub scan_ranks: ScanRanks,
    /// Ranks of the low and high regions in `ddrom-eval`; defaults to the uniform sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_ranks: Option<[usize; 2]>,
}

fn default_indicator() -> IndicatorName {
    IndicatorName::Grassmannian
}
fn default_p_l() -> f64 {
    50.0
}
fn default_k() -> usize {
    2
}
fn default_n_neigh() -> usize {
    3
}
fn default_r_t() -> usize {
    1
}
fn default_grid() -> Vec<f64> {
    (1..10).map(|i| 10.0 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    pub degrees: Vec<usize>,
    /// `n x n` meshes of `mesh.bounds`.
    pub sizes: Vec<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks that do not need any solve.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.degree == 0 {
            return bad("degree must be at least 1".into());
        }
        if self.mesh.nx == 0 || self.mesh.ny == 0 {
            return bad("mesh needs nx, ny >= 1".into());
        }
        let b = self.mesh.bounds;
        if !(b[0] < b[1] && b[2] < b[3]) || b.iter().any(|v| !v.is_finite()) {
            return bad(format!("invalid mesh bounds {b:?}"));
        }
        if self.split.stride == 0 {
            return bad("split.stride must be positive".into());
        }
        let k = self.partition.subdomains;
        if k == 0 || k > self.mesh.nx * self.mesh.ny {
            return bad(format!("partition.subdomains = {k} does not fit the mesh"));
        }
        if self.rom.ranks.is_empty() || self.rom.ranks.contains(&0) {
            return bad("rom.ranks must be nonempty and positive".into());
        }
        if let Some(t) = self.rom.tolerance {
            if !(t >= 0.0) {
                return bad(format!("rom.tolerance must be nonnegative (got {t})"));
            }
        }
        if let Some(r) = &self.rom.local_ranks {
            if r.len() != k || r.contains(&0) {
                return bad(format!("rom.local_ranks needs {k} positive entries"));
            }
        }
        if let Some(rp) = &self.repartition {
            if rp.k != 2 {
                return bad(format!("repartition.k must be 2 (got {})", rp.k));
            }
            if !(rp.p_l > 0.0 && rp.p_l < 100.0) {
                return bad(format!("repartition.p_l must lie in (0, 100) (got {})", rp.p_l));
            }
            if rp.r_t == 0 || rp.grid.iter().any(|p| !(*p > 0.0 && *p <= 100.0)) {
                return bad("repartition needs r_t >= 1 and grid values in (0, 100]".into());
            }
            let s = rp.scan_ranks;
            if s.low == 0 || s.high == 0 || s.global == 0 || rp.local_ranks.is_some_and(|r| r.contains(&0)) {
                return bad("repartition ranks must be positive".into());
            }
        }
        if let Some(c) = &self.converge {
            if c.sizes.len() < 3 {
                return bad(format!("a convergence study needs at least 3 mesh sizes (got {})", c.sizes.len()));
            }
            if c.degrees.is_empty() || c.degrees.contains(&0) || c.sizes.contains(&0) {
                return bad("converge.degrees and converge.sizes must be positive".into());
            }
        }
        if let Some(s) = &self.samples {
            let samples = s.generate(self.seed)?;
            let need = self.system.param_dim();
            if samples.iter().any(|p| p.len() < need) {
                return bad(format!("the system uses {need} parameter components but a sample has fewer"));
            }
            if samples.iter().flatten().any(|v| !v.is_finite()) {
                return bad("samples must be finite".into());
            }
        }
        Ok(())
    }

    /// Canonical JSON used for hashing.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sample_list(&self) -> Result<Vec<Vec<f64>>, CliError> {
        self.samples.as_ref().ok_or_else(|| CliError::Config("this command needs `samples`".into()))?.generate(self.seed)
    }
}
