use std::path::PathBuf;

use serde_json::json;
use ueglab_core::gc::{default_max_n, gc_indirect_energy, gc_product_trial};
use ueglab_core::mmot::{indirect_energy, lo_ratio, Method, SolverOptions};
use ueglab_core::monge1d::indirect_energy_1d;
use ueglab_core::riesz::{direct_term, DiagonalRule, GridDensity, KernelMatrix, RieszKernel};
use ueglab_core::thermo::{
    cube_series_1d, cube_series_3d, floating_crystal_series, graf_schenker_kernel, lda_bounds_3d, lda_exact_1d,
    LdaMode, Plateau, ThermoSeries, UegBracket, BALL_60_REFERENCE,
};
use ueglab_core::trial::{
    cube_self_energy, floating_crystal_upper_bound, quasi_free_bound, smoothed_box_bound, tf_dirac_constants,
    SmoothedBox, LIEB_OXFORD_COULOMB,
};
use ueglab_core::Error;

use crate::config::RunConfig;
use crate::density::DensitySpec;
use crate::error::{CliError, EXIT_BUDGET, EXIT_CONSTRAINT};
use crate::output::{value, Artifacts};

const DEFAULT_BUDGET: u128 = 10_000_000;

pub fn dispatch(cfg: RunConfig, out: PathBuf, plot: bool) -> Result<i32, CliError> {
    let run = Run { cfg, out, plot };
    match run.cfg.command.as_str() {
        "indirect-energy" => run.indirect_energy(false),
        "lo-ratio" => run.indirect_energy(true),
        "monge1d" => run.monge1d(),
        "gc-energy" => run.gc_energy(),
        "thermo-cubes" => run.thermo_cubes(),
        "lda-limit" => run.lda_limit(),
        "floating-crystal" => run.floating_crystal(),
        "gs-kernel" => run.gs_kernel(),
        "quantum-bounds" => run.quantum_bounds(),
        other => Err(CliError::Usage(format!("unknown command '{other}'"))),
    }
}

struct Run {
    cfg: RunConfig,
    out: PathBuf,
    plot: bool,
}

struct Grid {
    rho: GridDensity,
    kernel: RieszKernel,
    km: KernelMatrix,
}

impl Run {
    fn artifacts(&self) -> Result<Artifacts, CliError> {
        Artifacts::new(self.out.clone(), self.cfg.clone(), self.plot)
    }

    fn solver_options(&mut self) -> Result<SolverOptions, CliError> {
        let mut opts = SolverOptions { budget: self.cfg.get("budget", DEFAULT_BUDGET)?, ..SolverOptions::default() };
        opts.levels = self.cfg.get("eps_levels", opts.levels)?;
        if self.cfg.values.contains_key("epsilon0") {
            opts.epsilon0 = Some(self.cfg.require("epsilon0")?);
        }
        Ok(opts)
    }

    fn dims(&mut self) -> Result<(f64, usize), CliError> {
        let d: usize = self.cfg.get("d", 1)?;
        let s: f64 = self.cfg.get("s", if d == 3 { 1.0 } else { 0.5 })?;
        Ok((s, d))
    }

    fn grid(&mut self, mass: Option<f64>) -> Result<Grid, CliError> {
        let (s, d) = self.dims()?;
        let spec: String = self.cfg.require("density")?;
        let cells = self.cfg.get("cells", 32usize)?;
        let h = self.cfg.get("h", 0.5f64)?;
        let rho = DensitySpec::parse(&spec, d)?.build(mass, cells, h)?;
        let kernel = RieszKernel::new(s, d)?;
        let km = KernelMatrix::new(rho.sites(), &kernel, DiagonalRule::CellAverage)?;
        Ok(Grid { rho, kernel, km })
    }

    fn indirect_energy(mut self, ratio_only: bool) -> Result<i32, CliError> {
        let n: usize = self.cfg.require("N")?;
        let method: Method = self.cfg.get_str("method", "exact_lp").parse()?;
        let opts = self.solver_options()?;
        let g = self.grid(Some(n as f64))?;
        let mut art = self.artifacts()?;
        let name = if ratio_only { "lo_ratio" } else { "indirect_energy" };
        let (report, status) = match indirect_energy(&g.rho, n, &g.km, method, &opts) {
            Ok(r) => (r, "ok"),
            Err(Error::BudgetExceeded { .. }) => {
                (indirect_energy(&g.rho, n, &g.km, Method::TrialOnly, &opts)?, "budget_exceeded")
            }
            Err(e) => return Err(e.into()),
        };
        let mut report = report;
        report.lo_ratio = Some(lo_ratio(&g.rho, &report, &g.kernel)?);
        let lda = g.rho.integral_power(g.kernel.lda_exponent());
        let coulomb = g.kernel.d() == 3 && (g.kernel.s() - 1.0).abs() < 1e-12;
        let envelope_ok = !coulomb || report.lo_ratio.unwrap_or(0.0) <= LIEB_OXFORD_COULOMB;
        let result = json!({
            "report": value(&report)?,
            "density": value(&g.rho.descriptor(Some(g.kernel.s())))?,
            "lda_integral": lda,
            "lieb_oxford_envelope": if coulomb { json!({"constant": LIEB_OXFORD_COULOMB, "satisfied": envelope_ok}) } else { json!(null) },
        });
        let text = art.json(name, status, &result)?;
        if let Some(p) = report.coupling.as_ref().filter(|_| !ratio_only) {
            art.csv("coupling", &p.to_csv())?;
            let marginal = p.marginal();
            let pts: Vec<(f64, f64)> =
                (0..marginal.len()).map(|i| (marginal.sites().point(i)[0], marginal.mass(i))).collect();
            art.plot("marginal", "x", "mass", &pts)?;
        }
        print!("{text}");
        Ok(if status != "ok" {
            EXIT_BUDGET
        } else if !envelope_ok {
            EXIT_CONSTRAINT
        } else {
            0
        })
    }

    fn monge1d(mut self) -> Result<i32, CliError> {
        let n: usize = self.cfg.require("N")?;
        let s: f64 = self.cfg.get("s", 0.5)?;
        self.cfg.values.insert("d".into(), "1".into());
        let spec: String = self.cfg.require("density")?;
        let rho = DensitySpec::parse(&spec, 1)?.line(n as f64)?;
        let mut art = self.artifacts()?;
        let sol = indirect_energy_1d(&rho, n, s)?;
        let text = art.json("monge1d", "ok", &sol)?;
        let (a, b) = rho.support();
        let pts: Vec<(f64, f64)> = (0..=200)
            .map(|k| a + (b - a) * k as f64 / 200.0)
            .map(|y| (y, sol.transport_map(y)))
            .collect();
        art.plot("transport_map", "y", "T(y)", &pts)?;
        print!("{text}");
        Ok(0)
    }

    fn gc_energy(mut self) -> Result<i32, CliError> {
        let mass = self.cfg.values.contains_key("mass").then(|| self.cfg.require::<f64>("mass")).transpose()?;
        let opts = self.solver_options()?;
        let g = self.grid(mass)?;
        let max_n = self.cfg.get("max_n", default_max_n(&g.rho))?;
        let mut art = self.artifacts()?;
        match gc_indirect_energy(&g.rho, max_n, &g.km, &opts) {
            Ok((report, state)) => {
                let law: String = std::iter::once("n,lambda\n".to_string())
                    .chain(state.number_law().iter().map(|(n, l)| format!("{n},{l:?}\n")))
                    .collect();
                art.csv("number_law", &law)?;
                let text = art.json("gc_energy", "ok", &json!({"report": value(&report)?, "state": value(&state.summary())?}))?;
                print!("{text}");
                Ok(0)
            }
            Err(Error::BudgetExceeded { needed, budget }) => {
                let trial = gc_product_trial(&g.rho, opts.budget.max(1 << 20))?;
                let direct = direct_term(&g.rho, &g.rho, &g.km)?;
                let upper = trial.interaction_energy(&g.km) - direct;
                let text = art.json(
                    "gc_energy",
                    "budget_exceeded",
                    &json!({"needed": needed as f64, "budget": budget as f64, "primal_upper": upper, "dual_lower": -direct, "source": "product_trial"}),
                )?;
                print!("{text}");
                Ok(EXIT_BUDGET)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn thermo_cubes(mut self) -> Result<i32, CliError> {
        let d: usize = self.cfg.get("d", 1)?;
        let levels: u32 = self.cfg.get("levels", 4)?;
        match d {
            1 => {
                let s: f64 = self.cfg.get("s", 0.5)?;
                let max_particles = self.cfg.get("max_particles", 64usize)?;
                let mut art = self.artifacts()?;
                let series = cube_series_1d(s, levels, max_particles)?;
                art.csv("thermo_cubes", &series.to_csv())?;
                art.plot("thermo_cubes", "volume", "value", &plot_series(&series))?;
                let text = art.json("thermo_cubes", if series.truncated { "truncated" } else { "ok" }, &series)?;
                print!("{text}");
                Ok(if series.truncated { EXIT_BUDGET } else { 0 })
            }
            3 => {
                let s: f64 = self.cfg.get("s", 1.0)?;
                if (s - 1.0).abs() > 1e-12 {
                    return Err(Error::KernelDomain { s, d }.into());
                }
                let cutoff = self.cfg.get("cutoff", 8.0f64)?;
                let mut art = self.artifacts()?;
                let series = cube_series_3d(levels)?;
                let fc = floating_crystal_series(levels, cutoff)?;
                let e_fc = fc.records[0].per_volume_energy;
                let mut bracket = UegBracket::coulomb(e_fc);
                if let Some(best) = series.records.iter().map(|r| r.per_volume_energy).reduce(f64::min) {
                    bracket.offer_upper("cube_hierarchy", best);
                }
                art.csv("thermo_cubes", &series.to_csv())?;
                art.csv("floating_crystal", &fc.to_csv())?;
                art.plot("thermo_cubes", "volume", "value", &plot_series(&series))?;
                let text = art.json(
                    "thermo_cubes",
                    "ok",
                    &json!({
                        "series": value(&series)?,
                        "floating_crystal": value(&fc)?,
                        "bracket": value(&bracket)?,
                        "ball_60_reference": BALL_60_REFERENCE,
                        "unit_cube_energy": -cube_self_energy(),
                    }),
                )?;
                print!("{text}");
                Ok(0)
            }
            other => Err(Error::Dimension(other).into()),
        }
    }

    fn lda_limit(mut self) -> Result<i32, CliError> {
        let mode: LdaMode = self.cfg.get_str("mode", "exact_1d").parse()?;
        let table = match mode {
            LdaMode::Exact1d => {
                let s: f64 = self.cfg.get("s", 0.5)?;
                let n_list: Vec<usize> = self.cfg.get_list("N_list", "8,16,32,64")?;
                let spec = self.cfg.get_str("density", "step:0,0.5,1/1.5,0.5");
                let base = DensitySpec::parse(&spec, 1)?.line(1.0)?;
                let e = match self.cfg.values.get("e_uniform") {
                    Some(_) => self.cfg.require("e_uniform")?,
                    None => cube_series_1d(s, 4, 64)?
                        .extrapolated_value
                        .ok_or_else(|| CliError::Usage("could not extrapolate the uniform energy".into()))?,
                };
                self.cfg.values.insert("e_uniform".into(), format!("{e:?}"));
                lda_exact_1d(&base, &n_list, s, e)?
            }
            LdaMode::Bounds3d => {
                self.cfg.values.insert("s".into(), "1".into());
                let n_list: Vec<usize> = self.cfg.get_list("N_list", "8,512,32768,2097152,134217728")?;
                let spec = self.cfg.get_str("density", "plateaus:2:0.6299605249474366,0.5:1");
                let plateaus = parse_plateaus(&spec)?;
                let e = match self.cfg.values.get("e_uniform") {
                    Some(_) => self.cfg.require("e_uniform")?,
                    None => {
                        let mut bracket = UegBracket::coulomb(floating_crystal_upper_bound(1.0, 8.0, None)?.e_fc);
                        bracket.offer_upper("unit_cube", -cube_self_energy());
                        bracket.upper
                    }
                };
                self.cfg.values.insert("e_uniform".into(), format!("{e:?}"));
                lda_bounds_3d(&plateaus, &n_list, e)?
            }
        };
        let mut art = self.artifacts()?;
        art.csv("lda_limit", &table.to_csv())?;
        let pts: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.n as f64, r.deviation.abs())).collect();
        art.plot("lda_limit", "N", "abs_deviation", &pts)?;
        let text = art.json(
            "lda_limit",
            "ok",
            &json!({"table": value(&table)?, "deviations_decreasing": table.deviations_decreasing()}),
        )?;
        print!("{text}");
        Ok(0)
    }

    fn floating_crystal(mut self) -> Result<i32, CliError> {
        let rho0: f64 = self.cfg.get("rho0", 1.0)?;
        let cutoffs: Vec<f64> = self.cfg.get_list("cutoffs", "8,16")?;
        let mut art = self.artifacts()?;
        let reports = cutoffs
            .iter()
            .map(|&r| floating_crystal_upper_bound(rho0, r, None))
            .collect::<Result<Vec<_>, _>>()?;
        let stability = reports.windows(2).map(|w| (w[1].e_fc - w[0].e_fc).abs()).collect::<Vec<_>>();
        let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.cutoff, r.e_fc)).collect();
        art.plot("floating_crystal", "cutoff", "e_fc", &pts)?;
        let text = art.json("floating_crystal", "ok", &json!({"reports": value(&reports)?, "successive_changes": stability}))?;
        print!("{text}");
        Ok(0)
    }

    fn gs_kernel(mut self) -> Result<i32, CliError> {
        let ell: f64 = self.cfg.get("ell", 1.0)?;
        let samples: u64 = self.cfg.get("samples", 100_000)?;
        let radial: usize = self.cfg.get("radial_points", 41)?;
        let seed: u64 = self.cfg.get("seed", 0)?;
        let mut art = self.artifacts()?;
        let k = graf_schenker_kernel(ell, samples, radial, seed)?;
        art.csv("gs_kernel", &k.to_csv())?;
        art.csv("gs_transform", &k.transform_csv())?;
        let pts: Vec<(f64, f64)> = k.frequencies.iter().copied().zip(k.transform.iter().copied()).collect();
        art.plot("gs_transform", "k", "w_hat", &pts)?;
        let text = art.json(
            "gs_kernel",
            "ok",
            &json!({
                "ell": k.ell,
                "mc_samples": k.mc_samples,
                "seed": k.seed,
                "h_at_zero": k.h_table[0],
                "h_at_zero_std_error": k.h_std_error[0],
                "diameter": k.diameter,
                "slope_at_zero": k.slope_at_zero,
                "third_moment": k.third_moment,
                "third_moment_std_error": k.third_moment_std_error,
                "transform_min": k.transform_min,
                "min_in_sigma": if k.min_in_sigma.is_finite() { json!(k.min_in_sigma) } else { json!(null) },
                "positive_within_3_sigma": k.positive_within_3_sigma,
            }),
        )?;
        print!("{text}");
        Ok(0)
    }

    fn quantum_bounds(mut self) -> Result<i32, CliError> {
        let q: u32 = self.cfg.get("q", 2)?;
        let hbar2: f64 = self.cfg.get("hbar2", 1.0)?;
        let mode = self.cfg.get_str("mode", "box");
        let (c_tf, c_d) = tf_dirac_constants(q)?;
        let report = match mode.as_str() {
            "box" => {
                let side: f64 = self.cfg.get("side", 8.0)?;
                let width: f64 = self.cfg.get("width", 1.0)?;
                smoothed_box_bound(&SmoothedBox::new(side, width)?, hbar2, q)?
            }
            "grid" => {
                self.cfg.values.insert("d".into(), "3".into());
                self.cfg.values.insert("s".into(), "1".into());
                let mass = self.cfg.values.contains_key("mass").then(|| self.cfg.require::<f64>("mass")).transpose()?;
                let opts = self.solver_options()?;
                let g = self.grid(mass)?;
                quasi_free_bound(&g.rho, hbar2, q, &opts)?
            }
            other => return Err(CliError::Usage(format!("unknown quantum mode '{other}'"))),
        };
        let mut art = self.artifacts()?;
        let text = art.json("quantum_bounds", "ok", &json!({"c_tf": c_tf, "c_d": c_d, "report": value(&report)?}))?;
        print!("{text}");
        Ok(0)
    }
}

fn plot_series(series: &ThermoSeries) -> Vec<(f64, f64)> {
    series.records.iter().map(|r| (r.volume, r.per_volume_energy)).collect()
}

fn parse_plateaus(spec: &str) -> Result<Vec<Plateau>, CliError> {
    let body = spec
        .strip_prefix("plateaus:")
        .ok_or_else(|| CliError::Usage("bounds_3d needs plateaus:VALUE:SIDE,...".into()))?;
    body.split(',')
        .map(|p| {
            let (v, s) = p.split_once(':').ok_or_else(|| CliError::Usage(format!("plateau '{p}' needs VALUE:SIDE")))?;
            let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("bad plateau '{p}' ({e})")));
            Ok(Plateau { value: parse(v)?, side: parse(s)? })
        })
        .collect()
}
