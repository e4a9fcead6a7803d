//! Density specifications on the command line.
//!
//! ```text
//! uniform:A,B              constant on [A,B] (d = 1)
//! linear:A,B,VA,VB         linear from VA to VB on [A,B] (d = 1)
//! step:E0,..,Ek/V1,..,Vk   piecewise constant (d = 1)
//! masses:M1,..,Mk          explicit masses on consecutive cells of side h (d = 1)
//! cube:SIDE | ball:R | tetra:VOLUME | box:LX,LY,LZ
//! file:PATH                CSV with columns x[,y,z],mass and cell side h
//! ```
//! Every shape is rescaled to the requested total mass.

use std::sync::Arc;

use ueglab_core::monge1d::SegmentDensity;
use ueglab_core::riesz::{Domain, GridDensity, SiteSet};

use crate::error::CliError;

#[derive(Debug, Clone)]
pub enum DensitySpec {
    Line(SegmentDensity),
    Shape(Domain),
    Masses(Vec<f64>),
    File(String),
}

fn numbers(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("bad number '{x}' in density ({e})"))))
        .collect()
}

fn arity(kind: &str, v: &[f64], n: usize) -> Result<(), CliError> {
    if v.len() != n {
        return Err(CliError::Usage(format!("{kind} density takes {n} numbers, got {}", v.len())));
    }
    Ok(())
}

impl DensitySpec {
    pub fn parse(spec: &str, d: usize) -> Result<Self, CliError> {
        let (kind, rest) =
            spec.split_once(':').ok_or_else(|| CliError::Usage(format!("density '{spec}' needs KIND:ARGS")))?;
        let line_only = |d: usize| {
            if d != 1 {
                Err(CliError::Usage(format!("{kind} densities are one-dimensional; use --d 1")))
            } else {
                Ok(())
            }
        };
        Ok(match kind {
            "uniform" => {
                line_only(d)?;
                let v = numbers(rest)?;
                arity(kind, &v, 2)?;
                DensitySpec::Line(SegmentDensity::uniform(v[0], v[1], 1.0)?)
            }
            "linear" => {
                line_only(d)?;
                let v = numbers(rest)?;
                arity(kind, &v, 4)?;
                DensitySpec::Line(SegmentDensity::linear(v[0], v[1], v[2], v[3])?)
            }
            "step" => {
                line_only(d)?;
                let (e, v) = rest.split_once('/').ok_or_else(|| CliError::Usage("step density needs EDGES/VALUES".into()))?;
                DensitySpec::Line(SegmentDensity::step(&numbers(e)?, &numbers(v)?)?)
            }
            "masses" => {
                line_only(d)?;
                DensitySpec::Masses(numbers(rest)?)
            }
            "cube" => {
                let v = numbers(rest)?;
                arity(kind, &v, 1)?;
                DensitySpec::Shape(Domain::cube(d, [0.0; 3], v[0])?)
            }
            "ball" => {
                let v = numbers(rest)?;
                arity(kind, &v, 1)?;
                DensitySpec::Shape(Domain::ball(d, [0.0; 3], v[0])?)
            }
            "tetra" => {
                if d != 3 {
                    return Err(CliError::Usage("tetrahedra need --d 3".into()));
                }
                let v = numbers(rest)?;
                arity(kind, &v, 1)?;
                DensitySpec::Shape(Domain::regular_tetrahedron(v[0])?)
            }
            "box" => {
                if d != 3 {
                    return Err(CliError::Usage("boxes need --d 3".into()));
                }
                let v = numbers(rest)?;
                arity(kind, &v, 3)?;
                DensitySpec::Shape(Domain::parallelepiped(
                    [0.0; 3],
                    [[v[0], 0.0, 0.0], [0.0, v[1], 0.0], [0.0, 0.0, v[2]]],
                )?)
            }
            "file" => DensitySpec::File(rest.to_string()),
            other => return Err(CliError::Usage(format!("unknown density kind '{other}'"))),
        })
    }

    /// The grid density with total mass `mass`; `cells` applies to line
    /// densities and `h` to shapes, explicit masses and files.
    /// Explicit masses and files carry their own total mass and are used as
    /// given; shapes and line densities are rescaled to `mass`.
    pub fn build(&self, mass: Option<f64>, cells: usize, h: f64) -> Result<GridDensity, CliError> {
        let rho = match self {
            DensitySpec::Line(seg) => seg.discretize(cells)?,
            DensitySpec::Shape(dom) => dom.discretize(h, 1.0)?,
            DensitySpec::Masses(m) => {
                return Ok(GridDensity::new(Arc::new(SiteSet::interval(0.0, h * m.len() as f64, m.len())?), m.clone())?)
            }
            DensitySpec::File(path) => return Ok(GridDensity::from_csv(&std::fs::read_to_string(path)?, h)?),
        };
        let mass = mass.ok_or_else(|| CliError::Usage("a total mass is needed to scale this density".into()))?;
        let total = rho.total_mass();
        if total <= 0.0 {
            return Err(CliError::Core(ueglab_core::Error::InvalidDensity("density has zero mass".into())));
        }
        Ok(rho.scaled(mass / total)?)
    }

    /// The continuous line density rescaled to `mass`, for the exact solver.
    pub fn line(&self, mass: f64) -> Result<SegmentDensity, CliError> {
        match self {
            DensitySpec::Line(seg) => Ok(seg.scaled(mass / seg.mass())?),
            _ => Err(CliError::Usage("this command needs a uniform, linear or step density".into())),
        }
    }
}
