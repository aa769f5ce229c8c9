//! Flat key-value experiment configs.
//!
//! The format is one `key = value` pair per line; `#` starts a comment.
//! Lists are space-separated. `parse` collects every problem it finds rather
//! than stopping at the first, and `serialize` emits a canonical form that
//! parses back to an identical config.

use fvshe_core::{BoundingBox, InitialData, NoiseModel, SolverConfig, SolverMethod};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Whether per-cell wall time is measured or pinned to zero. CI configs pin
/// it so repeated runs produce byte-identical CSV files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingMode {
    Wall,
    None,
}

impl TimingMode {
    fn name(&self) -> &'static str {
        match self {
            TimingMode::Wall => "wall",
            TimingMode::None => "none",
        }
    }

    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "wall" => Ok(TimingMode::Wall),
            "none" => Ok(TimingMode::None),
            _ => Err(format!("unknown timing mode `{s}` (expected `wall` or `none`)")),
        }
    }
}

/// A full description of one Monte Carlo convergence experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub bbox: BoundingBox,
    pub horizon: f64,
    pub initial: InitialData,
    pub noise: NoiseModel,
    pub l_list: Vec<usize>,
    pub l_max: usize,
    pub n_list: Vec<usize>,
    pub n_max: usize,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub solver_method: SolverMethod,
    pub solver_rel_tol: f64,
    /// 0 selects the per-mesh default of 10 iterations per cell.
    pub solver_max_iters: usize,
    pub quadrature_order: usize,
    pub timing: TimingMode,
    pub output: PathBuf,
}

impl ExperimentConfig {
    /// Solver settings for an `n`-cell system.
    pub fn solver_for(&self, n_cells: usize) -> SolverConfig {
        SolverConfig {
            method: self.solver_method,
            rel_tolerance: self.solver_rel_tol,
            max_iterations: if self.solver_max_iters == 0 {
                SolverConfig::default_max_iterations(n_cells)
            } else {
                self.solver_max_iters
            },
        }
    }

    /// Parses config text, collecting every error.
    pub fn parse(text: &str) -> Result<Self, Vec<String>> {
        let mut errors = Vec::new();
        let mut pairs: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    let key = k.trim().to_string();
                    if pairs.insert(key.clone(), v.trim().to_string()).is_some() {
                        errors.push(format!("line {}: duplicate key `{key}`", lineno + 1));
                    }
                }
                None => errors.push(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )),
            }
        }
        Self::from_pairs(pairs, errors)
    }

    fn from_pairs(
        mut pairs: BTreeMap<String, String>,
        mut errors: Vec<String>,
    ) -> Result<Self, Vec<String>> {
        fn take(
            pairs: &mut BTreeMap<String, String>,
            errors: &mut Vec<String>,
            key: &str,
        ) -> Option<String> {
            match pairs.remove(key) {
                Some(v) => Some(v),
                None => {
                    errors.push(format!("missing required key `{key}`"));
                    None
                }
            }
        }
        fn parse_f64(errors: &mut Vec<String>, key: &str, v: Option<String>) -> Option<f64> {
            v.and_then(|s| match s.parse::<f64>() {
                Ok(x) => Some(x),
                Err(_) => {
                    errors.push(format!("key `{key}`: `{s}` is not a number"));
                    None
                }
            })
        }
        fn parse_usize(errors: &mut Vec<String>, key: &str, v: Option<String>) -> Option<usize> {
            v.and_then(|s| match s.parse::<usize>() {
                Ok(x) => Some(x),
                Err(_) => {
                    errors.push(format!("key `{key}`: `{s}` is not a non-negative integer"));
                    None
                }
            })
        }
        fn parse_list(errors: &mut Vec<String>, key: &str, v: Option<String>) -> Option<Vec<usize>> {
            v.and_then(|s| {
                let mut out = Vec::new();
                for tok in s.split_whitespace() {
                    match tok.parse::<usize>() {
                        Ok(x) => out.push(x),
                        Err(_) => {
                            errors.push(format!("key `{key}`: `{tok}` is not an integer"));
                            return None;
                        }
                    }
                }
                Some(out)
            })
        }

        let bbox = take(&mut pairs, &mut errors, "domain").and_then(|s| {
            let nums: Vec<f64> = s
                .split_whitespace()
                .filter_map(|t| t.parse::<f64>().ok())
                .collect();
            if nums.len() == 4 {
                Some(BoundingBox::rect(nums[0], nums[1], nums[2], nums[3]))
            } else {
                errors.push(format!(
                    "key `domain`: expected 4 numbers `x0 x1 y0 y1`, got `{s}`"
                ));
                None
            }
        });
        let horizon_raw = take(&mut pairs, &mut errors, "T");
        let horizon = parse_f64(&mut errors, "T", horizon_raw);
        let initial = take(&mut pairs, &mut errors, "u0").and_then(|s| match InitialData::parse(&s)
        {
            Ok(f) => Some(f),
            Err(e) => {
                errors.push(format!("key `u0`: {e}"));
                None
            }
        });
        let noise = take(&mut pairs, &mut errors, "g").and_then(|s| match NoiseModel::parse(&s) {
            Ok(g) => Some(g),
            Err(e) => {
                errors.push(format!("key `g`: {e}"));
                None
            }
        });
        let l_list_raw = take(&mut pairs, &mut errors, "L_list");
        let l_list = parse_list(&mut errors, "L_list", l_list_raw);
        let l_max_raw = take(&mut pairs, &mut errors, "L_max");
        let l_max = parse_usize(&mut errors, "L_max", l_max_raw);
        let n_list_raw = take(&mut pairs, &mut errors, "N_list");
        let n_list = parse_list(&mut errors, "N_list", n_list_raw);
        let n_max_raw = take(&mut pairs, &mut errors, "N_max");
        let n_max = parse_usize(&mut errors, "N_max", n_max_raw);
        let n_realizations_raw = take(&mut pairs, &mut errors, "n_realizations");
        let n_realizations = parse_usize(&mut errors, "n_realizations", n_realizations_raw);
        let master_seed = take(&mut pairs, &mut errors, "master_seed").and_then(|s| {
            match s.parse::<u64>() {
                Ok(x) => Some(x),
                Err(_) => {
                    errors.push(format!("key `master_seed`: `{s}` is not a u64"));
                    None
                }
            }
        });
        let output = take(&mut pairs, &mut errors, "output").map(PathBuf::from);

        // optional keys with defaults
        let solver_method = match pairs.remove("solver") {
            Some(s) => match SolverMethod::parse(&s) {
                Ok(m) => m,
                Err(e) => {
                    errors.push(format!("key `solver`: {e}"));
                    SolverMethod::ConjugateGradient
                }
            },
            None => SolverMethod::ConjugateGradient,
        };
        let solver_rel_tol = match pairs.remove("solver_rel_tol") {
            Some(s) => parse_f64(&mut errors, "solver_rel_tol", Some(s)).unwrap_or(1e-12),
            None => 1e-12,
        };
        let solver_max_iters = match pairs.remove("solver_max_iters") {
            Some(s) => parse_usize(&mut errors, "solver_max_iters", Some(s)).unwrap_or(0),
            None => 0,
        };
        let quadrature_order = match pairs.remove("quadrature_order") {
            Some(s) => parse_usize(&mut errors, "quadrature_order", Some(s)).unwrap_or(4),
            None => 4,
        };
        let timing = match pairs.remove("timing") {
            Some(s) => match TimingMode::parse(&s) {
                Ok(t) => t,
                Err(e) => {
                    errors.push(format!("key `timing`: {e}"));
                    TimingMode::Wall
                }
            },
            None => TimingMode::Wall,
        };
        for key in pairs.keys() {
            errors.push(format!("unknown key `{key}`"));
        }

        let cfg = match (
            bbox,
            horizon,
            initial,
            noise,
            l_list,
            l_max,
            n_list,
            n_max,
            n_realizations,
            master_seed,
            output,
        ) {
            (
                Some(bbox),
                Some(horizon),
                Some(initial),
                Some(noise),
                Some(l_list),
                Some(l_max),
                Some(n_list),
                Some(n_max),
                Some(n_realizations),
                Some(master_seed),
                Some(output),
            ) => Some(ExperimentConfig {
                bbox,
                horizon,
                initial,
                noise,
                l_list,
                l_max,
                n_list,
                n_max,
                n_realizations,
                master_seed,
                solver_method,
                solver_rel_tol,
                solver_max_iters,
                quadrature_order,
                timing,
                output,
            }),
            _ => None,
        };
        match cfg {
            Some(cfg) => {
                errors.extend(cfg.validate());
                if errors.is_empty() {
                    Ok(cfg)
                } else {
                    Err(errors)
                }
            }
            None => Err(errors),
        }
    }

    /// Structural checks beyond parsing; returns one message per violation.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            v.push(format!("T must be positive and finite, got {}", self.horizon));
        }
        if !(self.bbox.side(0) > 0.0 && self.bbox.side(1) > 0.0) {
            v.push("domain must have positive side lengths".into());
        }
        if self.l_list.is_empty() {
            v.push("L_list must not be empty".into());
        }
        if self.n_list.is_empty() {
            v.push("N_list must not be empty".into());
        }
        if !self.l_list.windows(2).all(|w| w[0] < w[1]) {
            v.push("L_list must be strictly increasing".into());
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            v.push("N_list must be strictly increasing".into());
        }
        for &l in &self.l_list {
            if l == 0 {
                v.push("L_list entries must be positive".into());
            }
            if l > self.l_max {
                v.push(format!("L={l} exceeds L_max={}", self.l_max));
            }
        }
        if self.l_max == 0 {
            v.push("L_max must be positive".into());
        }
        if self.n_max == 0 {
            v.push("N_max must be positive".into());
        }
        for &n in &self.n_list {
            if n == 0 {
                v.push("N_list entries must be positive".into());
            } else if self.n_max % n != 0 {
                v.push(format!("N={n} does not divide N_max={}", self.n_max));
            }
        }
        if self.n_realizations == 0 {
            v.push("n_realizations must be at least 1".into());
        }
        if !(self.solver_rel_tol > 0.0 && self.solver_rel_tol < 1.0) {
            v.push(format!(
                "solver_rel_tol must lie in (0,1), got {}",
                self.solver_rel_tol
            ));
        }
        if self.quadrature_order == 0 {
            v.push("quadrature_order must be at least 1".into());
        }
        if self.initial == InitialData::PaperPoly
            && !self
                .bbox
                .approx_eq(&BoundingBox::rect(-1.0, 1.0, -1.0, 1.0), 2)
        {
            v.push("u0=paper-poly satisfies the no-flux walls only on the domain -1 1 -1 1".into());
        }
        v
    }

    /// Canonical text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "domain = {} {} {} {}",
            self.bbox.min[0], self.bbox.max[0], self.bbox.min[1], self.bbox.max[1]
        );
        let _ = writeln!(s, "T = {}", self.horizon);
        let _ = writeln!(s, "u0 = {}", self.initial.name());
        let _ = writeln!(s, "g = {}", self.noise.name());
        let _ = writeln!(s, "L_list = {}", join(&self.l_list));
        let _ = writeln!(s, "L_max = {}", self.l_max);
        let _ = writeln!(s, "N_list = {}", join(&self.n_list));
        let _ = writeln!(s, "N_max = {}", self.n_max);
        let _ = writeln!(s, "n_realizations = {}", self.n_realizations);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "solver = {}", self.solver_method.name());
        let _ = writeln!(s, "solver_rel_tol = {}", self.solver_rel_tol);
        let _ = writeln!(s, "solver_max_iters = {}", self.solver_max_iters);
        let _ = writeln!(s, "quadrature_order = {}", self.quadrature_order);
        let _ = writeln!(s, "timing = {}", self.timing.name());
        let _ = writeln!(s, "output = {}", self.output.display());
        s
    }

    /// Applies one `key=value` override, as given on the command line.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "domain" => {
                let nums: Vec<f64> = value
                    .split_whitespace()
                    .filter_map(|t| t.parse::<f64>().ok())
                    .collect();
                if nums.len() != 4 {
                    return Err(format!("domain needs 4 numbers, got `{value}`"));
                }
                self.bbox = BoundingBox::rect(nums[0], nums[1], nums[2], nums[3]);
            }
            "T" => self.horizon = value.parse().map_err(|_| bad(key, value))?,
            "u0" => self.initial = InitialData::parse(value).map_err(|e| e.to_string())?,
            "g" => self.noise = NoiseModel::parse(value).map_err(|e| e.to_string())?,
            "L_list" => self.l_list = parse_int_list(value).ok_or_else(|| bad(key, value))?,
            "N_list" => self.n_list = parse_int_list(value).ok_or_else(|| bad(key, value))?,
            "L_max" => self.l_max = value.parse().map_err(|_| bad(key, value))?,
            "N_max" => self.n_max = value.parse().map_err(|_| bad(key, value))?,
            "n_realizations" => self.n_realizations = value.parse().map_err(|_| bad(key, value))?,
            "master_seed" => self.master_seed = value.parse().map_err(|_| bad(key, value))?,
            "solver" => self.solver_method = SolverMethod::parse(value).map_err(|e| e.to_string())?,
            "solver_rel_tol" => self.solver_rel_tol = value.parse().map_err(|_| bad(key, value))?,
            "solver_max_iters" => {
                self.solver_max_iters = value.parse().map_err(|_| bad(key, value))?
            }
            "quadrature_order" => {
                self.quadrature_order = value.parse().map_err(|_| bad(key, value))?
            }
            "timing" => self.timing = TimingMode::parse(value)?,
            "output" => self.output = PathBuf::from(value),
            _ => return Err(format!("unknown config key `{key}`")),
        }
        Ok(())
    }
}

fn bad(key: &str, value: &str) -> String {
    format!("key `{key}`: cannot parse `{value}`")
}

fn parse_int_list(s: &str) -> Option<Vec<usize>> {
    s.split_whitespace().map(|t| t.parse().ok()).collect()
}

fn join(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# squared-error sweep over time steps
domain = -1 1 -1 1
T = 1
u0 = paper-poly
g = sqrt-one-plus-sq
L_list = 16
L_max = 16
N_list = 40 80 160 320
N_max = 2560
n_realizations = 500
master_seed = 42
output = out/t.csv
";

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.n_list, vec![40, 80, 160, 320]);
        assert_eq!(cfg.timing, TimingMode::Wall);
        let canon = cfg.serialize();
        let again = ExperimentConfig::parse(&canon).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(canon, again.serialize());
    }

    #[test]
    fn collects_all_errors() {
        let text = "domain = -1 1 -1\nT = -2\nu0 = mystery\nN_list = 3 5\nN_max = 8\n";
        let errs = ExperimentConfig::parse(text).unwrap_err();
        let all = errs.join("\n");
        assert!(all.contains("domain"), "{all}");
        assert!(all.contains("u0"), "{all}");
        assert!(all.contains("missing required key `g`"), "{all}");
        assert!(all.contains("missing required key `output`"), "{all}");
    }

    #[test]
    fn divisibility_violations_named() {
        let text = SAMPLE.replace("N_list = 40 80 160 320", "N_list = 48 80");
        let errs = ExperimentConfig::parse(&text).unwrap_err();
        assert!(
            errs.iter().any(|e| e.contains("N=48 does not divide N_max=2560")),
            "{errs:?}"
        );
    }

    #[test]
    fn l_above_l_max_rejected() {
        let text = SAMPLE.replace("L_list = 16", "L_list = 16 32");
        let errs = ExperimentConfig::parse(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("exceeds L_max")), "{errs:?}");
    }

    #[test]
    fn overrides_apply_and_reject_unknown_keys() {
        let mut cfg = ExperimentConfig::parse(SAMPLE).unwrap();
        cfg.apply_override("n_realizations", "100").unwrap();
        cfg.apply_override("master_seed", "7").unwrap();
        assert_eq!(cfg.n_realizations, 100);
        assert_eq!(cfg.master_seed, 7);
        assert!(cfg.apply_override("frobnicate", "1").is_err());
        assert!(cfg.apply_override("T", "fast").is_err());
    }

    #[test]
    fn paper_poly_requires_standard_domain() {
        let text = SAMPLE.replace("domain = -1 1 -1 1", "domain = 0 1 0 1");
        let errs = ExperimentConfig::parse(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("paper-poly")), "{errs:?}");
    }

    #[test]
    fn eigen_initial_data_parses() {
        let text = SAMPLE
            .replace("u0 = paper-poly", "u0 = eigen:1,1")
            .replace("g = sqrt-one-plus-sq", "g = zero");
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(cfg.initial, InitialData::Eigenmode { k: 1, m: 1 });
        assert_eq!(cfg.noise, NoiseModel::Zero);
    }
}
