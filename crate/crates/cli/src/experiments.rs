//! Experiment plans. A plan holds the validated parameters of one subcommand;
//! running it produces a [`Report`]. Building a plan never computes anything,
//! so every parameter error is reported before work starts.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use dunkl::functions::{
    Constant, Gaussian, GaussianPoly, Indicator, Interpolated, Product, RealFunction,
    SmoothedIndicator,
};
use dunkl::heat::{
    cf1_inequality_check, gaussian_qt, indicator_domination_ratio, pointwise_domination_ratio,
    HeatConfig, TimeGrid,
};
use dunkl::kernel::{KernelEvaluator, DEFAULT_ORDER as KERNEL_ORDER, DEFAULT_STEP};
use dunkl::maximal::counterexample::counterexample_run;
use dunkl::maximal::expint::exp_integrability_run;
use dunkl::maximal::vector::FunctionSequence;
use dunkl::maximal::{
    growth_sweep_1d, growth_sweep_product, MaximalOperator, ProductMaximal, ProductSweepSettings,
    RadiusGrid, SweepSettings, DEFAULT_RADIUS_RATIO,
};
use dunkl::quadrature::TanhSinh;
use dunkl::transform::{envelope_radius, TransformPlan};
use dunkl::translation::{Translator, DEFAULT_ORDER as TRANSLATION_ORDER};
use dunkl::{DunklContext, MultiplicityVector};

use crate::config::{
    check_dim, check_kappas, check_positive, expand_kappa, parse_points, Command, ConstantsArgs,
    CounterexampleArgs, ExpIntArgs, FunctionKind, GlobalArgs, HeatArgs, HeatTest, KernelArgs,
    MaximalArgs, MeasureArgs, Real, ReportArgs, SweepArgs, TransformArgs, TransformTest,
};
use crate::input::read_table;
use crate::report::{Flag, Report, ReportRow};

/// Validated parameters of one subcommand.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plan {
    Constants(ConstantsPlan),
    KernelCheck(KernelPlan),
    TransformCheck(TransformCheckPlan),
    VerifyMeasure(MeasurePlan),
    HeatCheck(HeatPlan),
    Maximal(MaximalPlan),
    ConstantSweep(SweepPlan),
    FsCounterexample(CounterexamplePlan),
    ExpIntegrability(ExpIntPlan),
    Report(AggregatePlan),
}

impl Plan {
    pub fn from_command(global: &GlobalArgs, cmd: &Command) -> Result<Self> {
        if let Some(q) = global.quad_order {
            if q == 0 || q > 4096 {
                bail!("quad-order must lie in 1..=4096, got {q}");
            }
        }
        if global.threads == Some(0) {
            bail!("threads must be ≥ 1");
        }
        Ok(match cmd {
            Command::Constants(a) => Plan::Constants(ConstantsPlan::new(a)?),
            Command::KernelCheck(a) => Plan::KernelCheck(KernelPlan::new(a, global.quad_order)?),
            Command::TransformCheck(a) => Plan::TransformCheck(TransformCheckPlan::new(a)?),
            Command::VerifyMeasure(a) => {
                Plan::VerifyMeasure(MeasurePlan::new(a, global.quad_order)?)
            }
            Command::HeatCheck(a) => Plan::HeatCheck(HeatPlan::new(a)?),
            Command::Maximal(a) => Plan::Maximal(MaximalPlan::new(a)?),
            Command::ConstantSweep(a) => Plan::ConstantSweep(SweepPlan::new(a)?),
            Command::FsCounterexample(a) => Plan::FsCounterexample(CounterexamplePlan::new(a)?),
            Command::ExpIntegrability(a) => Plan::ExpIntegrability(ExpIntPlan::new(a)?),
            Command::Report(a) => Plan::Report(AggregatePlan::new(a)?),
        })
    }

    pub fn run(&self) -> Result<Report> {
        match self {
            Plan::Constants(p) => p.run(),
            Plan::KernelCheck(p) => p.run(),
            Plan::TransformCheck(p) => p.run(),
            Plan::VerifyMeasure(p) => p.run(),
            Plan::HeatCheck(p) => p.run(),
            Plan::Maximal(p) => p.run(),
            Plan::ConstantSweep(p) => p.run(),
            Plan::FsCounterexample(p) => p.run(),
            Plan::ExpIntegrability(p) => p.run(),
            Plan::Report(p) => p.run(),
        }
    }
}

fn snapshot<T: Serialize>(plan: &T) -> serde_json::Value {
    serde_json::to_value(plan).unwrap_or(serde_json::Value::Null)
}

fn list(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn check_times(name: &str, ts: &[f64]) -> Result<()> {
    if ts.is_empty() {
        bail!("{name} must not be empty");
    }
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        bail!("{name} values must be positive and finite, got {t}");
    }
    Ok(())
}

fn context(kappa: &[f64]) -> Result<DunklContext> {
    Ok(DunklContext::new(
        kappa.len(),
        MultiplicityVector::new(kappa.to_vec())?,
    )?)
}

// ---------------------------------------------------------------- constants

/// Relative tolerance of the measure identities.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsPlan {
    pub d: usize,
    pub kappas: Vec<Vec<f64>>,
    /// One context given by `--kappa`: the constants are also written at the top level.
    pub single: bool,
}

impl ConstantsPlan {
    pub fn new(a: &ConstantsArgs) -> Result<Self> {
        let d = a.d.unwrap_or(1);
        check_dim(d, 256)?;
        match (&a.kappa, &a.kappa_grid) {
            (Some(_), Some(_)) => bail!("--kappa and --kappa-grid are mutually exclusive"),
            (Some(k), None) => {
                check_kappas("kappa", k)?;
                Ok(Self {
                    d,
                    kappas: vec![expand_kappa(k, d)?],
                    single: true,
                })
            }
            (None, grid) => {
                let grid = grid.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.0]);
                check_kappas("kappa-grid", &grid)?;
                Ok(Self {
                    d,
                    kappas: grid.iter().map(|&k| vec![k; d]).collect(),
                    single: false,
                })
            }
        }
    }

    /// Contexts of total multiplicity `gamma` shared equally by `d` coordinates.
    pub fn for_gamma(d: usize, gammas: &[f64]) -> Self {
        Self {
            d,
            kappas: gammas.iter().map(|g| vec![g / d as f64; d]).collect(),
            single: false,
        }
    }

    pub fn run(&self) -> Result<Report> {
        let mut report = Report::new("constants", snapshot(self));
        for kv in &self.kappas {
            let ctx = context(kv)?;
            let def = ctx.identity_defects();
            let mut row = ReportRow::new(format!("d={} kappa={}", self.d, list(kv)))
                .param("d", self.d)
                .param("kappa", kv.as_slice())
                .value("gamma", ctx.gamma)
                .value("homogeneous_dim", ctx.homogeneous_dim())
                .value("sphere_constant", ctx.sphere_constant)
                .value("mehta_constant", ctx.mehta_constant)
                .value("unit_ball_measure", ctx.unit_ball_measure)
                .value("ball_vs_sphere", def.ball_vs_sphere)
                .value("mehta_vs_sphere", def.mehta_vs_sphere)
                .value("sphere_heat_integral", def.sphere_heat_integral)
                .flag(Flag::below(
                    "ball_vs_sphere",
                    def.ball_vs_sphere,
                    IDENTITY_TOL,
                ))
                .flag(Flag::below(
                    "mehta_vs_sphere",
                    def.mehta_vs_sphere,
                    IDENTITY_TOL,
                ));
            if let Some(h) = def.sphere_heat_integral {
                row = row.flag(Flag::below("sphere_heat_integral", h, IDENTITY_TOL));
            }
            if ctx.homogeneous_dim() >= 8.0 {
                let c = cf1_inequality_check(&ctx)?;
                row = row
                    .value("cf1_lhs", c.lhs)
                    .value("cf1_rhs", c.rhs)
                    .flag(Flag::above("cf1_margin", c.margin, 0.0));
            }
            if self.single {
                report
                    .summary
                    .push("d", self.d)
                    .push("kappa", kv.as_slice())
                    .push("gamma", ctx.gamma)
                    .push("sphere_constant", ctx.sphere_constant)
                    .push("mehta_constant", ctx.mehta_constant)
                    .push("unit_ball_measure", ctx.unit_ball_measure);
            }
            report.push(row);
        }
        Ok(report)
    }
}

// ------------------------------------------------------------------ kernel

pub const EIGEN_TOL: f64 = 1e-6;
pub const MODULUS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct KernelPlan {
    pub kappa: f64,
    pub grid_max: f64,
    pub grid_n: usize,
    pub h: f64,
    pub order: usize,
}

impl KernelPlan {
    pub fn new(a: &KernelArgs, quad_order: Option<usize>) -> Result<Self> {
        let kappa = a.kappa.unwrap_or(1.0);
        check_kappas("kappa", &[kappa])?;
        let grid_max = a.grid_max.unwrap_or(5.0);
        check_positive("grid-max", grid_max)?;
        let grid_n = a.grid_n.unwrap_or(21);
        if !(1..=1001).contains(&grid_n) {
            bail!("grid-n must lie in 1..=1001, got {grid_n}");
        }
        let h = a.h.unwrap_or(DEFAULT_STEP);
        if !(h > 0.0 && h <= 0.1) {
            bail!("h must lie in (0, 0.1], got {h}");
        }
        Ok(Self {
            kappa,
            grid_max,
            grid_n,
            h,
            order: quad_order.unwrap_or(KERNEL_ORDER),
        })
    }

    pub fn run(&self) -> Result<Report> {
        let ctx = DunklContext::one_dim(self.kappa)?;
        let ev = KernelEvaluator::with_order(&ctx, self.order)?;
        let pts = linspace(-self.grid_max, self.grid_max, self.grid_n);
        let pairs: Vec<(f64, f64)> = pts
            .iter()
            .flat_map(|&x| pts.iter().map(move |&y| (x, y)))
            .collect();
        let rows = pairs
            .par_iter()
            .map(|&(x, y)| {
                let e = ev.dunkl_kernel_1d(x, y);
                let m = ev.dunkl_kernel_im(x, y).norm();
                let res = ev.eigen_residual(y, &[x], self.h)?;
                Ok(ReportRow::new(format!("x={x} y={y}"))
                    .param("x", x)
                    .param("y", y)
                    .value("E", e)
                    .value("E_imag_modulus", m)
                    .value("eigen_residual", res)
                    .flag(Flag::below("eigen_residual", res, EIGEN_TOL))
                    .flag(Flag::at_most("imag_modulus", m, 1.0 + MODULUS_TOL)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut report = Report::new("kernel-check", snapshot(self));
        let worst_res = rows
            .iter()
            .filter_map(|r| r.values.num("eigen_residual"))
            .fold(0.0, f64::max);
        let worst_mod = rows
            .iter()
            .filter_map(|r| r.values.num("E_imag_modulus"))
            .fold(0.0, f64::max);
        report.flag(Flag::below("max_eigen_residual", worst_res, EIGEN_TOL));
        report.flag(Flag::at_most(
            "max_imag_modulus",
            worst_mod,
            1.0 + MODULUS_TOL,
        ));
        for r in rows {
            report.push(r);
        }
        Ok(report)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

// --------------------------------------------------------------- transform

pub const PLANCHEREL_TOL: f64 = 1e-6;
pub const ROUNDTRIP_TOL: f64 = 1e-6;
pub const IMAGE_TOL: f64 = 1e-8;
pub const SYMBOL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct TransformCheckPlan {
    pub kappas: Vec<f64>,
    pub grid_n: usize,
    /// Smallest truncation radius; each test widens it to its envelope.
    pub grid_max: f64,
    pub tests: Vec<TransformTest>,
    pub t_list: Vec<f64>,
    pub shift: f64,
}

impl TransformCheckPlan {
    pub fn new(a: &TransformArgs) -> Result<Self> {
        let kappas = a.kappa.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 2.5]);
        check_kappas("kappa", &kappas)?;
        let grid_n = a.grid_n.unwrap_or(512);
        if grid_n < 16 || !grid_n.is_multiple_of(2) || grid_n > 8192 {
            bail!("grid-n must be even and lie in 16..=8192, got {grid_n}");
        }
        let grid_max = a.grid_max.unwrap_or(12.0);
        check_positive("grid-max", grid_max)?;
        let tests = a.tests.clone().unwrap_or_else(|| {
            vec![
                TransformTest::Gaussian,
                TransformTest::Heat,
                TransformTest::Polynomial,
            ]
        });
        if tests.is_empty() {
            bail!("tests must not be empty");
        }
        let t_list = a
            .t_list
            .clone()
            .unwrap_or_else(|| vec![0.25, 0.5, 1.0, 2.0]);
        check_times("t-list", &t_list)?;
        let shift = a.shift.unwrap_or(0.7);
        if !shift.is_finite() || shift.abs() > 10.0 {
            bail!("shift must lie in [-10, 10], got {shift}");
        }
        Ok(Self {
            kappas,
            grid_n,
            grid_max,
            tests,
            t_list,
            shift,
        })
    }

    fn cases(&self) -> Vec<(f64, TransformTest, Option<f64>)> {
        let mut out = Vec::new();
        for &k in &self.kappas {
            for &test in &self.tests {
                match test {
                    TransformTest::Heat => {
                        out.extend(self.t_list.iter().map(|&t| (k, test, Some(t))))
                    }
                    _ => out.push((k, test, None)),
                }
            }
        }
        out
    }

    fn case(&self, k: f64, test: TransformTest, t: Option<f64>) -> Result<ReportRow> {
        let ctx = DunklContext::one_dim(k)?;
        let tr = Translator::new(k)?;
        let c = ctx.mehta_constant;
        // (function, envelope rate, image rate and scale)
        let (f, rate, image): (Box<dyn RealFunction>, f64, Option<(f64, f64)>) = match test {
            TransformTest::Gaussian => (Box::new(Gaussian::new(1.0, 0.5)), 0.5, Some((0.5, 1.0))),
            TransformTest::Heat => {
                let t = t.expect("heat cases carry a time");
                let q = Gaussian::heat(&ctx, t)?;
                let rate = q.rate;
                (Box::new(q), rate, Some((t, c)))
            }
            TransformTest::Polynomial => (
                Box::new(GaussianPoly {
                    coeffs: vec![0.5, 1.0, -0.3],
                    rate: 0.7,
                }),
                0.7,
                None,
            ),
        };
        let radius = envelope_radius(k, rate, self.grid_max) + self.shift.abs();
        let plan = TransformPlan::new(&ctx, self.grid_n, radius)?;
        let sampled = plan.sample(f.as_ref());
        let plancherel = plan.plancherel_defect(&sampled)?;
        let roundtrip = plan.roundtrip_defect(&sampled)?;
        let symbol = plan.translation_symbol_check(&tr, f.as_ref(), self.shift)?;
        let image_defect = match image {
            Some((s, amp)) => {
                let ff = plan.forward(&sampled)?;
                Some(
                    ff.values()
                        .iter()
                        .zip(plan.target())
                        .map(|(v, &x)| (v - amp * (-s * x * x).exp()).norm())
                        .fold(0.0, f64::max),
                )
            }
            None => None,
        };
        let name = match test {
            TransformTest::Gaussian => "gaussian",
            TransformTest::Heat => "heat",
            TransformTest::Polynomial => "polynomial",
        };
        let mut row = ReportRow::new(match t {
            Some(t) => format!("kappa={k} test={name} t={t}"),
            None => format!("kappa={k} test={name}"),
        })
        .param("kappa", k)
        .param("test", name)
        .param("t", t)
        .value("grid_max", radius)
        .value("plancherel_defect", plancherel)
        .value("roundtrip_defect", roundtrip)
        .value("image_defect", image_defect)
        .value("symbol_defect", symbol)
        .flag(Flag::below("plancherel_defect", plancherel, PLANCHEREL_TOL))
        .flag(Flag::below("roundtrip_defect", roundtrip, ROUNDTRIP_TOL))
        .flag(Flag::below("symbol_defect", symbol, SYMBOL_TOL));
        if let Some(e) = image_defect {
            row = row.flag(Flag::below("image_defect", e, IMAGE_TOL));
        }
        Ok(row)
    }

    pub fn run(&self) -> Result<Report> {
        let rows = self
            .cases()
            .par_iter()
            .map(|&(k, test, t)| self.case(k, test, t))
            .collect::<Result<Vec<_>>>()?;
        let mut report = Report::new("transform-check", snapshot(self));
        for r in rows {
            report.push(r);
        }
        Ok(report)
    }
}

// ---------------------------------------------------------------- measures

pub const MASS_TOL: f64 = 1e-9;
pub const VARIATION_BOUND: f64 = 4.0 + 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct MeasurePlan {
    pub kappas: Vec<f64>,
    pub xy: Vec<f64>,
    pub order: usize,
}

impl MeasurePlan {
    pub fn new(a: &MeasureArgs, quad_order: Option<usize>) -> Result<Self> {
        let kappas = a
            .kappa_grid
            .clone()
            .unwrap_or_else(|| vec![0.3, 0.7, 1.0, 2.5]);
        check_kappas("kappa-grid", &kappas)?;
        let xy = parse_points(a.xy_grid.as_deref().unwrap_or("-3:3:20"))?;
        let order = a.order.or(quad_order).unwrap_or(TRANSLATION_ORDER);
        if order == 0 || order > 4096 {
            bail!("order must lie in 1..=4096, got {order}");
        }
        Ok(Self { kappas, xy, order })
    }

    pub fn run(&self) -> Result<Report> {
        let translators = self
            .kappas
            .iter()
            .map(|&k| Translator::with_order(k, self.order))
            .collect::<dunkl::Result<Vec<_>>>()?;
        let cells: Vec<(usize, f64, f64)> = (0..self.kappas.len())
            .flat_map(|i| {
                self.xy
                    .iter()
                    .flat_map(move |&x| self.xy.iter().map(move |&y| (i, x, y)))
            })
            .collect();
        let rows: Vec<ReportRow> = cells
            .par_iter()
            .map(|&(i, x, y)| {
                let tr = &translators[i];
                let mass = tr.measure_mass(x, y);
                let variation = tr.total_variation(x, y);
                let reach = x.abs() + y.abs() + 1.0;
                let probes = linspace(-reach, reach, 64);
                let violations = tr.support_violations(x, y, &probes);
                ReportRow::new(format!("x={x} y={y} kappa={}", self.kappas[i]))
                    .param("x", x)
                    .param("y", y)
                    .param("kappa", self.kappas[i])
                    .value("mass", mass)
                    .value("variation", variation)
                    .value("support_violations", violations)
                    .flag(Flag::at_most("mass_defect", (mass - 1.0).abs(), MASS_TOL))
                    .flag(Flag::at_most("variation", variation, VARIATION_BOUND))
                    .flag(Flag::at_most("support_violations", violations as f64, 0.0))
            })
            .collect();
        let mut report = Report::new("verify-measure", snapshot(self));
        let worst_mass = rows
            .iter()
            .filter_map(|r| r.values.num("mass"))
            .map(|m| (m - 1.0).abs())
            .fold(0.0, f64::max);
        let worst_var = rows
            .iter()
            .filter_map(|r| r.values.num("variation"))
            .fold(0.0, f64::max);
        let total_viol: f64 = rows
            .iter()
            .filter_map(|r| r.values.num("support_violations"))
            .sum();
        report.flag(Flag::at_most("max_mass_defect", worst_mass, MASS_TOL));
        report.flag(Flag::at_most("max_variation", worst_var, VARIATION_BOUND));
        report.flag(Flag::at_most("total_support_violations", total_viol, 0.0));
        for r in rows {
            report.push(r);
        }
        Ok(report)
    }
}

// -------------------------------------------------------------------- heat

pub const HEAT_MASS_TOL: f64 = 1e-8;
pub const UNIT_TOL: f64 = 1e-8;
pub const SEMIGROUP_TOL: f64 = 1e-7;
pub const SYMMETRY_TOL: f64 = 1e-7;
pub const POSITIVITY_FLOOR: f64 = -1e-10;
pub const CONTRACTION_SLACK: f64 = 1e-8;
pub const EQUATION_TOL: f64 = 1e-4;
pub const DOMINATION_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct HeatPlan {
    pub kappa: Vec<f64>,
    pub t_list: Vec<f64>,
    pub tests: Vec<HeatTest>,
}

const ALL_HEAT_TESTS: [HeatTest; 9] = [
    HeatTest::Mass,
    HeatTest::Unit,
    HeatTest::Semigroup,
    HeatTest::Symmetry,
    HeatTest::Positivity,
    HeatTest::Contraction,
    HeatTest::Equation,
    HeatTest::Domination,
    HeatTest::Cf1,
];

fn heat_test_name(t: HeatTest) -> &'static str {
    match t {
        HeatTest::Mass => "mass",
        HeatTest::Unit => "unit",
        HeatTest::Semigroup => "semigroup",
        HeatTest::Symmetry => "symmetry",
        HeatTest::Positivity => "positivity",
        HeatTest::Contraction => "contraction",
        HeatTest::Equation => "equation",
        HeatTest::Domination => "domination",
        HeatTest::Cf1 => "cf1",
    }
}

impl HeatPlan {
    pub fn new(a: &HeatArgs) -> Result<Self> {
        let d = a.d.unwrap_or(1);
        check_dim(d, 256)?;
        let k = a.kappa.clone().unwrap_or_else(|| vec![0.5]);
        check_kappas("kappa", &k)?;
        let kappa = expand_kappa(&k, d)?;
        let t_list = a.t_list.clone().unwrap_or_else(|| vec![0.1, 0.25, 0.5]);
        check_times("t-list", &t_list)?;
        let mut tests = match &a.tests {
            Some(ts) => {
                if let Some(t) = ts.iter().find(|t| d > 1 && !t.any_dim()) {
                    bail!("heat test '{}' needs d = 1", heat_test_name(*t));
                }
                ts.clone()
            }
            None => ALL_HEAT_TESTS
                .iter()
                .copied()
                .filter(|t| d == 1 || t.any_dim())
                .collect(),
        };
        tests.sort();
        tests.dedup();
        Ok(Self {
            kappa,
            t_list,
            tests,
        })
    }

    fn d(&self) -> usize {
        self.kappa.len()
    }

    pub fn run(&self) -> Result<Report> {
        let ctx = context(&self.kappa)?;
        let cfg = HeatConfig::new(&ctx)?;
        let mut report = Report::new("heat-check", snapshot(self));
        for &test in &self.tests {
            let rows = match test {
                HeatTest::Mass => self.mass(&ctx)?,
                HeatTest::Unit => self.unit(&cfg)?,
                HeatTest::Semigroup => self.semigroup(&cfg)?,
                HeatTest::Symmetry => self.symmetry(&cfg)?,
                HeatTest::Positivity => self.positivity(&cfg)?,
                HeatTest::Contraction => self.contraction(&cfg)?,
                HeatTest::Equation => self.equation(&cfg)?,
                HeatTest::Domination => vec![self.domination(&cfg)?],
                HeatTest::Cf1 => vec![self.cf1(&ctx)?],
            };
            for r in rows {
                report.push(r);
            }
        }
        Ok(report)
    }

    fn row(test: HeatTest, id: String) -> ReportRow {
        ReportRow::new(format!("{} {id}", heat_test_name(test))).param("test", heat_test_name(test))
    }

    /// `int q_t dmu`, one coordinate at a time since `q_t` factorizes.
    fn mass(&self, _ctx: &DunklContext) -> Result<Vec<ReportRow>> {
        let de = TanhSinh::default();
        self.t_list
            .iter()
            .map(|&t| {
                let mut mass = 1.0;
                for &k in &self.kappa {
                    let c1 = DunklContext::one_dim(k)?;
                    let r = 20.0 * t.sqrt();
                    let half = de.integrate(0.0, r, |p| {
                        let w = if k == 0.0 { 1.0 } else { p.x.powf(2.0 * k) };
                        gaussian_qt(&c1, &[p.x], t).expect("t > 0") * w
                    });
                    mass *= 2.0 * half;
                }
                let defect = (mass - 1.0).abs();
                Ok(Self::row(HeatTest::Mass, format!("t={t}"))
                    .param("t", t)
                    .value("defect", defect)
                    .flag(Flag::below("defect", defect, HEAT_MASS_TOL)))
            })
            .collect()
    }

    fn unit(&self, cfg: &HeatConfig) -> Result<Vec<ReportRow>> {
        let one = Product(
            (0..self.d())
                .map(|_| Box::new(Constant(1.0)) as Box<dyn RealFunction>)
                .collect(),
        );
        let xs = [0.0, 0.7, -2.0, 5.0];
        self.t_list
            .iter()
            .map(|&t| {
                let mut worst = 0.0f64;
                for &x in &xs {
                    let mut p = vec![0.0; self.d()];
                    p.iter_mut()
                        .enumerate()
                        .for_each(|(j, v)| *v = if j % 2 == 0 { x } else { -0.5 * x });
                    worst = worst.max((cfg.heat_apply_product(&one, t, &p)? - 1.0).abs());
                }
                Ok(Self::row(HeatTest::Unit, format!("t={t}"))
                    .param("t", t)
                    .value("defect", worst)
                    .flag(Flag::below("defect", worst, UNIT_TOL)))
            })
            .collect()
    }

    fn semigroup(&self, cfg: &HeatConfig) -> Result<Vec<ReportRow>> {
        let xs = [-1.5, -0.2, 0.0, 0.5, 1.1, 2.4];
        let q = Gaussian::heat(cfg.context(), 1.0)?;
        let s_ind = SmoothedIndicator {
            half_width: 1.0,
            smoothing: 0.2,
        };
        let fams: [(&str, &dyn RealFunction); 2] = [("q_1", &q), ("smoothed_indicator", &s_ind)];
        let mut out = Vec::new();
        for (name, f) in fams {
            for &t in &self.t_list {
                for &s in &self.t_list {
                    let e = cfg.semigroup_defect(f, t, s, &xs)?;
                    out.push(
                        Self::row(HeatTest::Semigroup, format!("f={name} t={t} s={s}"))
                            .param("f", name)
                            .param("t", t)
                            .param("s", s)
                            .value("defect", e)
                            .flag(Flag::below("defect", e, SEMIGROUP_TOL)),
                    );
                }
            }
        }
        Ok(out)
    }

    fn symmetry(&self, cfg: &HeatConfig) -> Result<Vec<ReportRow>> {
        let q = Gaussian::heat(cfg.context(), 0.5)?;
        let p = GaussianPoly {
            coeffs: vec![0.5, 1.0, -0.3],
            rate: 0.7,
        };
        let s = SmoothedIndicator {
            half_width: 0.8,
            smoothing: 0.1,
        };
        let mut out = Vec::new();
        for &t in &self.t_list {
            let pairs = [
                ("q_0.5", "poly_gaussian", cfg.symmetry_defect(&q, &p, t)?),
                (
                    "poly_gaussian",
                    "smoothed_indicator",
                    cfg.symmetry_defect(&p, &s, t)?,
                ),
                (
                    "smoothed_indicator",
                    "q_0.5",
                    cfg.symmetry_defect(&s, &q, t)?,
                ),
            ];
            for (f, g, e) in pairs {
                out.push(
                    Self::row(HeatTest::Symmetry, format!("f={f} g={g} t={t}"))
                        .param("f", f)
                        .param("g", g)
                        .param("t", t)
                        .value("defect", e)
                        .flag(Flag::below("defect", e, SYMMETRY_TOL)),
                );
            }
        }
        Ok(out)
    }

    fn test_family() -> Result<Vec<(&'static str, Box<dyn RealFunction>)>> {
        Ok(vec![
            ("indicator", Box::new(Indicator::new(0.5, 2.0)?)),
            ("gaussian", Box::new(Gaussian::new(2.0, 1.0))),
            (
                "smoothed_indicator",
                Box::new(SmoothedIndicator {
                    half_width: 1.0,
                    smoothing: 0.2,
                }),
            ),
        ])
    }

    fn positivity(&self, cfg: &HeatConfig) -> Result<Vec<ReportRow>> {
        let xs = linspace(-4.0, 4.0, 33);
        let mut out = Vec::new();
        for (name, f) in Self::test_family()? {
            for &t in &self.t_list {
                let low = xs
                    .iter()
                    .map(|&x| cfg.heat_apply(f.as_ref(), t, x))
                    .collect::<dunkl::Result<Vec<_>>>()?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                out.push(
                    Self::row(HeatTest::Positivity, format!("f={name} t={t}"))
                        .param("f", name)
                        .param("t", t)
                        .value("min_value", low)
                        .flag(Flag::at_least("min_value", low, POSITIVITY_FLOOR)),
                );
            }
        }
        Ok(out)
    }

    fn contraction(&self, cfg: &HeatConfig) -> Result<Vec<ReportRow>> {
        let mut out = Vec::new();
        for (name, f) in Self::test_family()? {
            for &t in &self.t_list {
                for p in [1.0, 2.0, f64::INFINITY] {
                    let r = cfg.contraction_ratio(f.as_ref(), t, p)?;
                    out.push(
                        Self::row(HeatTest::Contraction, format!("f={name} t={t} p={p}"))
                            .param("f", name)
                            .param("t", t)
                            .param("p", p)
                            .value("norm_ratio", r)
                            .flag(Flag::at_most("norm_ratio", r, 1.0 + CONTRACTION_SLACK)),
                    );
                }
            }
        }
        Ok(out)
    }

    fn equation(&self, cfg: &HeatConfig) -> Result<Vec<ReportRow>> {
        let f = Indicator::new(-0.3, 1.0)?;
        let mut out = Vec::new();
        for &t in &self.t_list {
            for x in [0.5, -0.8, 1.7] {
                let r = cfg.heat_equation_residual(&f, x, t)?;
                out.push(
                    Self::row(HeatTest::Equation, format!("x={x} t={t}"))
                        .param("x", x)
                        .param("t", t)
                        .value("residual", r)
                        .flag(Flag::below("residual", r, EQUATION_TOL)),
                );
            }
        }
        Ok(out)
    }

    /// Smallest constants of the two domination hypotheses at the proofs'
    /// choices of `t0`; in one dimension also the pointwise chain
    /// `M f <= C sup_t t^{-1} int_0^t H_s f ds`.
    fn domination(&self, cfg: &HeatConfig) -> Result<ReportRow> {
        let ctx = cfg.context();
        let n = ctx.homogeneous_dim();
        let c_int = indicator_domination_ratio(ctx, 1.0 / n)?;
        let c_pw = pointwise_domination_ratio(ctx, 1.0 / (2.0 * n))?;
        let mut row = Self::row(HeatTest::Domination, format!("n={n}"))
            .param("homogeneous_dim", n)
            .value("c_integral", c_int)
            .value("c_integral_over_n", c_int / n)
            .value("c_pointwise", c_pw)
            .value("c_pointwise_over_sqrt_n", c_pw / n.sqrt());
        if self.d() == 1 {
            let op = MaximalOperator::new(self.kappa[0])?;
            let f = Indicator::new(0.5, 1.5)?;
            let grid = TimeGrid::default();
            let mut worst = f64::NEG_INFINITY;
            for x in [0.0, 1.0, 2.5] {
                let m = op.maximal(&f, x, DEFAULT_RADIUS_RATIO)?;
                let e = cfg.hds_maximal(&f, x, &grid)?;
                worst = worst.max(m - c_int * e);
            }
            row = row.value("chain_excess", worst).flag(Flag::at_most(
                "chain_excess",
                worst,
                DOMINATION_SLACK,
            ));
        }
        Ok(row)
    }

    fn cf1(&self, ctx: &DunklContext) -> Result<ReportRow> {
        let n = ctx.homogeneous_dim();
        let row = Self::row(HeatTest::Cf1, format!("n={n}")).param("homogeneous_dim", n);
        if n < 8.0 {
            return Ok(row.value("status", "not applicable: d + 2 gamma < 8"));
        }
        let c = cf1_inequality_check(ctx)?;
        Ok(row
            .value("lhs", c.lhs)
            .value("rhs", c.rhs)
            .value("margin", c.margin)
            .flag(Flag::above("margin", c.margin, 0.0)))
    }
}

// ----------------------------------------------------------------- maximal

#[derive(Debug, Clone, Serialize)]
pub struct MaximalPlan {
    pub kappa: Vec<f64>,
    pub f: FunctionKind,
    pub csv: Option<PathBuf>,
    #[serde(skip)]
    pub table: Option<Interpolated>,
    pub half_width: f64,
    pub rate: f64,
    pub radius_ratio: f64,
    pub points: Vec<f64>,
}

impl MaximalPlan {
    pub fn new(a: &MaximalArgs) -> Result<Self> {
        let d = a.d.unwrap_or(1);
        check_dim(d, 3)?;
        let k = a.kappa.clone().unwrap_or_else(|| vec![0.5]);
        check_kappas("kappa", &k)?;
        let kappa = expand_kappa(&k, d)?;
        let f = a.f.unwrap_or(FunctionKind::Indicator);
        let table = match (f, &a.csv) {
            (FunctionKind::CustomCsv, Some(p)) => Some(read_table(p)?),
            (FunctionKind::CustomCsv, None) => bail!("--csv is required with --f custom-csv"),
            (_, Some(_)) => bail!("--csv only applies to --f custom-csv"),
            _ => None,
        };
        let half_width = a.half_width.unwrap_or(1.0);
        check_positive("half-width", half_width)?;
        let rate = a.rate.unwrap_or(1.0);
        check_positive("rate", rate)?;
        let radius_ratio = a.radius_ratio.unwrap_or(DEFAULT_RADIUS_RATIO);
        if !(radius_ratio > 1.0 && radius_ratio <= 2.0) {
            bail!("radius-ratio must lie in (1, 2], got {radius_ratio}");
        }
        let points = parse_points(a.x_grid.as_deref().unwrap_or("-4:4:17"))?;
        Ok(Self {
            kappa,
            f,
            csv: a.csv.clone(),
            table,
            half_width,
            rate,
            radius_ratio,
            points,
        })
    }

    fn function(&self) -> Result<Box<dyn RealFunction>> {
        Ok(match self.f {
            FunctionKind::Indicator => Box::new(Indicator::centered(self.half_width)?),
            FunctionKind::Gaussian => Box::new(Gaussian::new(1.0, self.rate)),
            FunctionKind::CustomCsv => {
                Box::new(self.table.clone().context("custom table was not loaded")?)
            }
        })
    }

    pub fn run(&self) -> Result<Report> {
        let d = self.kappa.len();
        let f = self.function()?;
        let mut report = Report::new("maximal", snapshot(self));
        if d == 1 {
            let op = MaximalOperator::new(self.kappa[0])?;
            let fine = self.radius_ratio.sqrt();
            let rows = self
                .points
                .par_iter()
                .map(|&x| {
                    let m = op.maximal(f.as_ref(), x, self.radius_ratio)?;
                    let mf = op.maximal(f.as_ref(), x, fine)?;
                    let change = mf - m;
                    Ok(ReportRow::new(format!("x={x}"))
                        .param("x", x)
                        .value("f", f.eval(x))
                        .value("maximal", m)
                        .value("maximal_refined", mf)
                        .flag(Flag::at_least("refinement_change", change, -1e-12)))
                })
                .collect::<Result<Vec<_>>>()?;
            for r in rows {
                report.push(r);
            }
            return Ok(report);
        }
        let ctx = context(&self.kappa)?;
        let pm = ProductMaximal::new(&ctx)?;
        let factors = || -> Result<Product> {
            Ok(Product(
                (0..d)
                    .map(|_| self.function())
                    .collect::<Result<Vec<_>>>()?,
            ))
        };
        let prod = factors()?;
        let scale = match f.support() {
            Some((a, b)) if a.is_finite() && b.is_finite() => a.abs().max(b.abs()),
            _ => 1.0,
        };
        let reach = (d as f64).sqrt() * scale;
        let f0 = f.eval(0.0);
        for &x in &self.points {
            let mut p = vec![0.0; d];
            p[0] = x;
            let rg = RadiusGrid::new(1e-3 * scale, x.abs() + 2.0 * reach, self.radius_ratio)?;
            let m = pm.scalar_maximal(&prod, &p, &rg)?;
            report.push(
                ReportRow::new(format!("x={x}"))
                    .param("x", x)
                    .value("f", f.eval(x) * f0.powi(d as i32 - 1))
                    .value("maximal", m),
            );
        }
        Ok(report)
    }
}

// ------------------------------------------------------------ constant sweep

#[derive(Debug, Clone, Serialize)]
pub struct SweepPlan {
    pub d_list: Vec<usize>,
    pub gammas: Vec<f64>,
    pub ps: Vec<Real>,
    pub spread: f64,
}

impl SweepPlan {
    pub fn new(a: &SweepArgs) -> Result<Self> {
        let d_list = a.d_list.clone().unwrap_or_else(|| vec![1]);
        if d_list.is_empty() {
            bail!("d-list must not be empty");
        }
        for &d in &d_list {
            check_dim(d, 3)?;
        }
        let gammas = a
            .gamma_list
            .clone()
            .unwrap_or_else(|| vec![0.5, 1.5, 3.5, 7.5, 15.5, 31.5]);
        check_kappas("gamma-list", &gammas)?;
        let ps = a
            .p_list
            .clone()
            .unwrap_or_else(|| vec![Real(4.0 / 3.0), Real(2.0), Real(4.0), Real(8.0)]);
        if let Some(p) = ps.iter().find(|p| !(p.0 > 1.0)) {
            bail!("p-list values must exceed 1, got {p}");
        }
        let spread = a.spread.unwrap_or(5.0);
        if !(spread >= 1.0) {
            bail!("spread must be at least 1, got {spread}");
        }
        Ok(Self {
            d_list,
            gammas,
            ps,
            spread,
        })
    }

    pub fn run(&self) -> Result<Report> {
        let ps: Vec<f64> = self.ps.iter().map(|p| p.0).collect();
        let mut records = Vec::new();
        for &d in &self.d_list {
            let recs = if d == 1 {
                growth_sweep_1d(&self.gammas, &ps, &SweepSettings::default())?
            } else {
                growth_sweep_product(d, &self.gammas, &ps, &ProductSweepSettings::default())?
            };
            records.extend(recs);
        }
        let mut report = Report::new("constant-sweep", snapshot(self));
        report.csv_columns = Some(
            ["d", "gamma", "p", "measured", "paper_factor", "ratio"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        );
        for r in &records {
            // the weak-type estimate is the p = 1 entry
            let p = r.p.unwrap_or(1.0);
            report.push(
                ReportRow::new(format!("d={} gamma={} p={}", r.d, r.gamma, p))
                    .param("d", r.d)
                    .param("gamma", r.gamma)
                    .param("p", p)
                    .param("kappa", r.kappa.as_slice())
                    .value("measured", r.measured)
                    .value("paper_factor", r.paper_factor)
                    .value("ratio", r.ratio),
            );
        }
        let hi = records
            .iter()
            .map(|r| r.ratio)
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = records
            .iter()
            .map(|r| r.ratio)
            .fold(f64::INFINITY, f64::min);
        report.summary.push("max_ratio", hi).push("min_ratio", lo);
        report.flag(Flag::below("normalized_spread", hi / lo, self.spread));
        Ok(report)
    }
}

// ---------------------------------------------------------- counterexample

pub const COUNTEREXAMPLE_TOL: f64 = 1e-6;
pub const SLOPE_TOL: f64 = 0.2;

#[derive(Debug, Clone, Serialize)]
pub struct CounterexamplePlan {
    pub kappa: f64,
    pub n: i32,
    pub r: f64,
    pub points: Vec<f64>,
    pub radius_ratio: f64,
}

impl CounterexamplePlan {
    pub fn new(a: &CounterexampleArgs) -> Result<Self> {
        let kappa = a.kappa.unwrap_or(1.0);
        check_kappas("kappa", &[kappa])?;
        let n = a.n.unwrap_or(10);
        if !(1..=30).contains(&n) {
            bail!("N must lie in 1..=30, got {n}");
        }
        let r = a.r.unwrap_or(2.0);
        if !(r > 1.0 && r.is_finite()) {
            bail!("r must lie in (1, inf), got {r}");
        }
        let points = match &a.x_grid {
            Some(s) => parse_points(s)?,
            None => {
                let mut v = vec![0.0];
                for j in 0..=n {
                    let s = 2f64.powi(j);
                    v.extend([s, -s, 0.75 * s, -0.75 * s]);
                }
                v.sort_by(f64::total_cmp);
                v
            }
        };
        Ok(Self {
            kappa,
            n,
            r,
            points,
            radius_ratio: DEFAULT_RADIUS_RATIO,
        })
    }

    pub fn run(&self) -> Result<Report> {
        let rec = counterexample_run(self.kappa, self.n, self.r, &self.points, self.radius_ratio)?;
        let mut report = Report::new("fs-counterexample", snapshot(self));
        for p in &rec.partial_sums {
            let b = rec
                .blocks
                .iter()
                .find(|b| b.n == p.n && b.x == p.x)
                .context("missing block value")?;
            let mut row = ReportRow::new(format!("x={} N={}", p.x, p.n))
                .param("x", p.x)
                .param("N", p.n)
                .value("block_maximal", b.value)
                .value("covered", b.covered)
                .value("s_r", p.s_r);
            if b.covered {
                row = row.flag(Flag::at_least(
                    "bound_margin",
                    b.value - rec.bound,
                    -COUNTEREXAMPLE_TOL,
                ));
            }
            report.push(row);
        }
        let rel = rec.slope_at_origin / rec.bound_r;
        report
            .summary
            .push("bound", rec.bound)
            .push("bound_r", rec.bound_r)
            .push("slope_at_origin", rec.slope_at_origin)
            .push("mean_block_power_at_origin", rec.member_r)
            .push("min_margin", rec.min_margin);
        report.flag(Flag::at_least(
            "min_bound_margin",
            rec.min_margin,
            -COUNTEREXAMPLE_TOL,
        ));
        report.flag(Flag::at_least("slope_over_bound_r", rel, 1.0));
        report.flag(Flag::at_most(
            "slope_relative_gap",
            (rel - 1.0).abs(),
            SLOPE_TOL,
        ));
        Ok(report)
    }
}

// ------------------------------------------------- exponential integrability

pub const R_SQUARED_MIN: f64 = 0.95;
pub const LAYER_CAKE_TOL: f64 = 1e-5;
pub const EXACT_MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct ExpIntPlan {
    pub kappa: f64,
    pub r: f64,
    pub n: i32,
    pub a: f64,
    pub cells: usize,
    pub eps: Option<Vec<f64>>,
    pub radius_ratio: f64,
}

impl ExpIntPlan {
    pub fn new(a: &ExpIntArgs) -> Result<Self> {
        let kappa = a.kappa.unwrap_or(1.0);
        check_kappas("kappa", &[kappa])?;
        let r = a.r.unwrap_or(2.0);
        if !(r > 1.0 && r.is_finite()) {
            bail!("r must lie in (1, inf), got {r}");
        }
        let n = a.n.unwrap_or(8);
        if !(1..=30).contains(&n) {
            bail!("N must lie in 1..=30, got {n}");
        }
        let radius = a.k.unwrap_or(2f64.powi(n));
        check_positive("K", radius)?;
        let cells = a.cells.unwrap_or(256);
        if !(2..=100_000).contains(&cells) {
            bail!("cells must lie in 2..=100000, got {cells}");
        }
        if let Some(e) = &a.eps_grid {
            if e.is_empty() {
                bail!("eps-grid must not be empty");
            }
            if let Some(v) = e.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                bail!("eps-grid values must be finite and ≥ 0, got {v}");
            }
        }
        Ok(Self {
            kappa,
            r,
            n,
            a: radius,
            cells,
            eps: a.eps_grid.clone(),
            radius_ratio: DEFAULT_RADIUS_RATIO,
        })
    }

    pub fn run(&self) -> Result<Report> {
        let op = MaximalOperator::new(self.kappa)?;
        let members: Vec<Box<dyn RealFunction>> = (1..=self.n)
            .map(|j| {
                Box::new(dunkl::maximal::counterexample::dyadic_block(j)) as Box<dyn RealFunction>
            })
            .collect();
        let seq = FunctionSequence::new(members, self.r)?;
        let rec = exp_integrability_run(
            &op,
            &seq,
            self.a,
            self.cells,
            self.eps.as_deref(),
            self.radius_ratio,
        )?;
        let mut report = Report::new("exp-integrability", snapshot(self));
        report
            .summary
            .push("beta", rec.beta)
            .push("r_squared", rec.r_squared)
            .push("fit_points", rec.fit_points)
            .push("fit_prefactor", rec.fit_prefactor)
            .push("tail_constant", rec.tail_constant)
            .push("measured_prefactor", rec.measured_prefactor)
            .push("c_fit", rec.c_fit)
            .push("mu_k", rec.mu_k)
            .push("mu_k_cells", rec.mu_k_cells)
            .push("support_mass", rec.support_mass)
            .push("grid_cells", rec.cells);
        report.flag(Flag::above("beta", rec.beta, 0.0));
        report.flag(Flag::above("r_squared", rec.r_squared, R_SQUARED_MIN));
        for c in &rec.checks {
            let ratio = if c.bound.is_finite() {
                c.integral / c.bound
            } else {
                0.0
            };
            let mut row = ReportRow::new(format!("eps={}", c.eps))
                .param("eps", c.eps)
                .param("eps_over_beta", c.eps / rec.beta)
                .value("integral", c.integral)
                .value("bound", c.bound)
                .value("bound_holds", c.holds)
                .value("layer_cake_defect", c.layer_cake_defect)
                .flag(Flag::at_most("bound_ratio", ratio, 1.0 + 1e-12))
                .flag(Flag::below(
                    "layer_cake_defect",
                    c.layer_cake_defect,
                    LAYER_CAKE_TOL,
                ));
            if c.eps == 0.0 {
                let e = ((c.integral - rec.mu_k) / rec.mu_k).abs();
                row =
                    row.value("mass_defect", e)
                        .flag(Flag::below("mass_defect", e, EXACT_MASS_TOL));
            }
            report.push(row);
        }
        Ok(report)
    }
}

// ------------------------------------------------------------------ report

#[derive(Debug, Clone, Serialize)]
pub struct AggregatePlan {
    pub inputs: Vec<PathBuf>,
}

impl AggregatePlan {
    pub fn new(a: &ReportArgs) -> Result<Self> {
        if a.inputs.is_empty() {
            bail!("report needs at least one input file");
        }
        if let Some(p) = a.inputs.iter().find(|p| !p.is_file()) {
            bail!("input file {} does not exist", p.display());
        }
        Ok(Self {
            inputs: a.inputs.clone(),
        })
    }

    pub fn run(&self) -> Result<Report> {
        let mut report = Report::new("report", snapshot(self));
        for path in &self.inputs {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let v: serde_json::Value = serde_json::from_str(&text)
                .with_context(|| format!("{} is not a JSON report", path.display()))?;
            let experiment = v
                .get("experiment")
                .and_then(|e| e.as_str())
                .with_context(|| format!("{} has no experiment name", path.display()))?;
            let mut flags: Vec<&serde_json::Value> = v
                .get("flags")
                .and_then(|f| f.as_array())
                .map(|a| a.iter().collect())
                .unwrap_or_default();
            if let Some(rows) = v.get("rows").and_then(|r| r.as_array()) {
                for r in rows {
                    if let Some(f) = r.get("flags").and_then(|f| f.as_array()) {
                        flags.extend(f.iter());
                    }
                }
            }
            let failed: Vec<String> = flags
                .iter()
                .filter(|f| f.get("pass").and_then(|p| p.as_bool()) == Some(false))
                .filter_map(|f| f.get("name").and_then(|n| n.as_str()).map(str::to_string))
                .collect();
            let mut names = failed.clone();
            names.sort();
            names.dedup();
            let all_pass = v
                .get("all_pass")
                .and_then(|p| p.as_bool())
                .unwrap_or(failed.is_empty());
            report.push(
                ReportRow::new(path.display().to_string())
                    .param("file", path.display().to_string())
                    .param("experiment", experiment)
                    .value("flags", flags.len())
                    .value("failed", failed.len())
                    .value("failed_names", names.join(";"))
                    .value("all_pass", all_pass)
                    .flag(Flag::at_least(
                        "all_pass",
                        if all_pass { 1.0 } else { 0.0 },
                        1.0,
                    )),
            );
        }
        Ok(report)
    }
}
