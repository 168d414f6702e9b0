//! Line-based run configuration: `key = value`, `#` comments, lists as comma-separated values.

use std::collections::HashSet;

use epnozzle::nonlinear::{DEFAULT_FLUX_TOL, DEFAULT_FP_TOL, DEFAULT_MAX_ITER};
use epnozzle::spectral::X2Grid;
use epnozzle::{
    BoundaryData, CosineSeries, GasParams, IonPerturbation, IterationConfig, MultiplierConfig, Resolution, SineSeries,
    X1Scheme,
};

use crate::error::{CliError, CliResult};

pub const DEFAULT_LENGTH: f64 = 0.5;
pub const DEFAULT_N1: usize = 513;
pub const DEFAULT_N2: usize = 257;
pub const DEFAULT_M: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Artifact {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gamma: f64,
    pub j0: f64,
    pub s0: f64,
    pub b0: f64,
    pub rho0: f64,
    pub e0: f64,
    pub length: f64,
    pub n1: usize,
    pub n2: usize,
    pub m: usize,
    /// Cosine coefficients of the inlet/exit perturbations.
    pub u_en: Vec<f64>,
    pub e_en: Vec<f64>,
    pub phi_ex: Vec<f64>,
    pub s_en: Vec<f64>,
    /// Sine coefficients; entry s multiplies sin((s+1) pi (x2+1)/2).
    pub v_en: Vec<f64>,
    /// b - b0 = (sum_j b_x1[j] cos(j pi x1/L)) * (cosine series b_x2).
    pub b_x1: Vec<f64>,
    pub b_x2: Vec<f64>,
    pub multiplier: MultiplierConfig,
    pub iteration: IterationConfig,
    pub outputs: Vec<Artifact>,
}

impl RunConfig {
    pub fn gas(&self) -> GasParams {
        GasParams::new(self.gamma, self.j0, self.s0, self.b0, self.rho0, self.e0).expect("validated")
    }

    pub fn resolution(&self) -> Resolution {
        Resolution { n2: self.n2, m: self.m }
    }

    pub fn boundary_data(&self) -> BoundaryData {
        let cos = |c: &[f64]| CosineSeries::new(c.to_vec()).resized(self.m);
        let mut v = self.v_en.clone();
        v.resize(2 * self.m, 0.0);
        BoundaryData {
            u_en: cos(&self.u_en),
            v_en: SineSeries::new(v),
            e_en: cos(&self.e_en),
            phi_ex: cos(&self.phi_ex),
            s_en: cos(&self.s_en),
            db: IonPerturbation { x1_modes: self.b_x1.clone(), x2: cos(&self.b_x2) },
        }
    }

    pub fn wants(&self, a: Artifact) -> bool {
        self.outputs.contains(&a)
    }

    /// Text that parses back to an equal configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        let num = |v: f64| format!("{v:?}");
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        put("gamma", num(self.gamma));
        put("j0", num(self.j0));
        put("s0", num(self.s0));
        put("b0", num(self.b0));
        put("rho0", num(self.rho0));
        put("e0", num(self.e0));
        put("length", num(self.length));
        put("n1", self.n1.to_string());
        put("n2", self.n2.to_string());
        put("m", self.m.to_string());
        put("u_en", list(&self.u_en));
        put("v_en", list(&self.v_en));
        put("e_en", list(&self.e_en));
        put("phi_ex", list(&self.phi_ex));
        put("s_en", list(&self.s_en));
        put("b_x1", list(&self.b_x1));
        put("b_x2", list(&self.b_x2));
        let mc = &self.multiplier;
        put("c_star", num(mc.c_star));
        put("c_flat", num(mc.c_flat));
        put("lambda1_star", num(mc.lambda1_star));
        put("delta1", num(mc.delta1));
        if let Some(e) = mc.eps0 {
            put("eps0", num(e));
        }
        put("n_grid", mc.n_grid.to_string());
        let it = &self.iteration;
        put("max_iter", it.max_iter.to_string());
        put("fp_tol", num(it.fp_tol));
        put("flux_tol", num(it.flux_tol));
        put("scheme", scheme_name(it.scheme).to_string());
        for (k, v) in [
            ("delta", it.delta),
            ("delta_e", it.delta_e),
            ("delta_p", it.delta_p),
            ("delta_v", it.delta_v),
            ("sigma", it.sigma),
            ("probe_c_star", it.c_star),
            ("probe_c_star_star", it.c_star_star),
            ("gate_delta1", it.delta1),
        ] {
            if let Some(v) = v {
                put(k, num(v));
            }
        }
        let outs: Vec<&str> = self.outputs.iter().map(|a| if *a == Artifact::Csv { "csv" } else { "svg" }).collect();
        put("outputs", if outs.is_empty() { "none".to_string() } else { outs.join(", ") });
        out
    }
}

fn scheme_name(s: X1Scheme) -> &'static str {
    match s {
        X1Scheme::Second => "second",
        X1Scheme::DefectCorrected => "defect-corrected",
    }
}

fn number(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got `{v}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("non-finite value `{v}`"))
    }
}

fn count(v: &str) -> Result<usize, String> {
    v.parse().map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn numbers(v: &str) -> Result<Vec<f64>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|t| number(t.trim())).collect()
}

const GAS_KEYS: [&str; 6] = ["gamma", "j0", "s0", "b0", "rho0", "e0"];

pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let mut gas = [None; 6];
    let mut cfg = RunConfig {
        gamma: 0.0,
        j0: 0.0,
        s0: 0.0,
        b0: 0.0,
        rho0: 0.0,
        e0: 0.0,
        length: DEFAULT_LENGTH,
        n1: DEFAULT_N1,
        n2: DEFAULT_N2,
        m: DEFAULT_M,
        u_en: Vec::new(),
        e_en: Vec::new(),
        phi_ex: Vec::new(),
        s_en: Vec::new(),
        v_en: Vec::new(),
        b_x1: Vec::new(),
        b_x2: Vec::new(),
        multiplier: MultiplierConfig::default(),
        iteration: IterationConfig {
            max_iter: DEFAULT_MAX_ITER,
            fp_tol: DEFAULT_FP_TOL,
            flux_tol: DEFAULT_FLUX_TOL,
            ..Default::default()
        },
        outputs: vec![Artifact::Csv, Artifact::Svg],
    };
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| CliError::Parse { line, reason: "expected `key = value`".into() })?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(CliError::Parse { line, reason: format!("duplicate key `{key}`") });
        }
        apply(&mut cfg, &mut gas, key, value).map_err(|reason| CliError::Parse { line, reason })?;
    }
    for (k, v) in GAS_KEYS.iter().zip(gas) {
        if v.is_none() {
            return Err(CliError::Validation(format!("missing required key `{k}`")));
        }
    }
    [cfg.gamma, cfg.j0, cfg.s0, cfg.b0, cfg.rho0, cfg.e0] = gas.map(|v| v.unwrap());
    validate(&cfg)?;
    Ok(cfg)
}

fn apply(cfg: &mut RunConfig, gas: &mut [Option<f64>; 6], key: &str, v: &str) -> Result<(), String> {
    if let Some(i) = GAS_KEYS.iter().position(|k| *k == key) {
        gas[i] = Some(number(v)?);
        return Ok(());
    }
    let it = &mut cfg.iteration;
    let mc = &mut cfg.multiplier;
    match key {
        "length" => cfg.length = number(v)?,
        "n1" => cfg.n1 = count(v)?,
        "n2" => cfg.n2 = count(v)?,
        "m" => cfg.m = count(v)?,
        "u_en" => cfg.u_en = numbers(v)?,
        "v_en" => cfg.v_en = numbers(v)?,
        "e_en" => cfg.e_en = numbers(v)?,
        "phi_ex" => cfg.phi_ex = numbers(v)?,
        "s_en" => cfg.s_en = numbers(v)?,
        "b_x1" => cfg.b_x1 = numbers(v)?,
        "b_x2" => cfg.b_x2 = numbers(v)?,
        "c_star" => mc.c_star = number(v)?,
        "c_flat" => mc.c_flat = number(v)?,
        "lambda1_star" => mc.lambda1_star = number(v)?,
        "delta1" => mc.delta1 = number(v)?,
        "eps0" => mc.eps0 = Some(number(v)?),
        "n_grid" => mc.n_grid = count(v)?,
        "max_iter" => it.max_iter = count(v)?,
        "fp_tol" => it.fp_tol = number(v)?,
        "flux_tol" => it.flux_tol = number(v)?,
        "scheme" => {
            it.scheme = match v {
                "second" => X1Scheme::Second,
                "defect-corrected" => X1Scheme::DefectCorrected,
                _ => return Err(format!("unknown scheme `{v}` (second, defect-corrected)")),
            }
        }
        "delta" => it.delta = Some(number(v)?),
        "delta_e" => it.delta_e = Some(number(v)?),
        "delta_p" => it.delta_p = Some(number(v)?),
        "delta_v" => it.delta_v = Some(number(v)?),
        "sigma" => it.sigma = Some(number(v)?),
        "probe_c_star" => it.c_star = Some(number(v)?),
        "probe_c_star_star" => it.c_star_star = Some(number(v)?),
        "gate_delta1" => it.delta1 = Some(number(v)?),
        "outputs" => {
            cfg.outputs = Vec::new();
            if v != "none" {
                for t in v.split(',').map(str::trim) {
                    cfg.outputs.push(match t {
                        "csv" => Artifact::Csv,
                        "svg" => Artifact::Svg,
                        _ => return Err(format!("unknown artifact `{t}` (csv, svg, none)")),
                    });
                }
            }
        }
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

fn validate(cfg: &RunConfig) -> CliResult<()> {
    let bad = |m: String| Err(CliError::Validation(m));
    if let Err(e) = GasParams::new(cfg.gamma, cfg.j0, cfg.s0, cfg.b0, cfg.rho0, cfg.e0) {
        return bad(match e {
            epnozzle::Error::InvalidParams(m) => m,
            other => other.to_string(),
        });
    }
    if !(cfg.length > 0.0) {
        return bad(format!("length must be positive, got {}", cfg.length));
    }
    if cfg.n1 < 9 {
        return bad(format!("n1 = {} is too small (need at least 9)", cfg.n1));
    }
    if cfg.n2 < 3 || cfg.m == 0 {
        return bad(format!("need n2 >= 3 and m >= 1, got n2 = {}, m = {}", cfg.n2, cfg.m));
    }
    if let Err(e) = X2Grid::new(cfg.n2).check_truncation(cfg.m) {
        return bad(e.to_string());
    }
    for (name, c) in [("u_en", &cfg.u_en), ("e_en", &cfg.e_en), ("phi_ex", &cfg.phi_ex), ("s_en", &cfg.s_en), ("b_x2", &cfg.b_x2)] {
        if c.len() > cfg.m + 1 {
            return bad(format!("{name} has {} coefficients, more than m + 1 = {}", c.len(), cfg.m + 1));
        }
    }
    if cfg.v_en.len() > 2 * cfg.m {
        return bad(format!("v_en has {} coefficients, more than 2m = {}", cfg.v_en.len(), 2 * cfg.m));
    }
    if let Some(s) = cfg.v_en.iter().step_by(2).position(|c| *c != 0.0) {
        return bad(format!("v_en mode {} is odd in x2 and breaks the wall symmetry", 2 * s + 1));
    }
    let rep = cfg.boundary_data().compatibility(1e-8);
    if let Some(e) = rep.entries.iter().find(|e| !e.pass) {
        return bad(format!("{} fails the wall compatibility check at derivative order {}", e.name, e.order));
    }
    let it = &cfg.iteration;
    if !(it.fp_tol > 0.0) || !(it.flux_tol > 0.0) || it.max_iter == 0 {
        return bad("fp_tol and flux_tol must be positive and max_iter at least 1".into());
    }
    let mc = &cfg.multiplier;
    if !(mc.c_star > 0.0 && mc.c_flat >= 0.0 && mc.delta1 >= 0.0) || mc.n_grid < 9 {
        return bad("c_star must be positive, c_flat and delta1 non-negative, n_grid at least 9".into());
    }
    if !(mc.lambda1_star > 0.0 && mc.lambda1_star < std::f64::consts::FRAC_PI_4) {
        return bad(format!("lambda1_star = {} must lie in (0, pi/4)", mc.lambda1_star));
    }
    Ok(())
}
