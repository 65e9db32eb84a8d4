//! Run configuration: preset defaults, optional flat JSON config file, and
//! command-line overrides, merged in that order.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use fencelab::auction::AuctionParams;
use fencelab::grid::GridSpec;
use fencelab::shapes::ShapeSpec;
use fencelab::solver::{Method, SolverConfig};

/// Flat key set shared by the JSON config file and the CLI flags. Structured
/// values (grid, proportions, auction schedule) use the same string syntax
/// in both places.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub preset: Option<String>,
    pub method: Option<String>,
    pub grid: Option<String>,
    pub shape: Option<String>,
    pub shape_seed: Option<u64>,
    pub c: Option<String>,
    pub tau: Option<f64>,
    pub tau_prime: Option<f64>,
    pub lambda: Option<f64>,
    pub beta0: Option<f64>,
    pub gamma: Option<f64>,
    pub beta_min: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub r_tol: Option<f64>,
    pub p: Option<usize>,
    pub auction: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub snapshot_every: Option<usize>,
    pub render: Option<bool>,
}

impl Overrides {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))
    }

    /// Later sources win field by field.
    pub fn merged_over(self, base: Overrides) -> Overrides {
        macro_rules! pick {
            ($field:ident) => {
                self.$field.or(base.$field)
            };
        }
        Overrides {
            preset: pick!(preset),
            method: pick!(method),
            grid: pick!(grid),
            shape: pick!(shape),
            shape_seed: pick!(shape_seed),
            c: pick!(c),
            tau: pick!(tau),
            tau_prime: pick!(tau_prime),
            lambda: pick!(lambda),
            beta0: pick!(beta0),
            gamma: pick!(gamma),
            beta_min: pick!(beta_min),
            m: pick!(m),
            r_tol: pick!(r_tol),
            p: pick!(p),
            auction: pick!(auction),
            seed: pick!(seed),
            out: pick!(out),
            snapshot_every: pick!(snapshot_every),
            render: pick!(render),
        }
    }
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub shape: ShapeSpec,
    pub shape_name: String,
    pub solver: SolverConfig,
    pub out: PathBuf,
    /// Snapshot cadence: regions at iterations 0, 5, 10 and the final one by
    /// default, or every k iterations (plus final) when set.
    pub snapshot_every: Option<usize>,
    pub render: bool,
}

pub fn parse_grid(text: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = text.split('x').collect();
    let dims: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>().context("bad grid size"))
        .collect::<Result<_>>()?;
    match dims.as_slice() {
        [n] => Ok(GridSpec::new(2, *n)?),
        [a, b] if a == b => Ok(GridSpec::new(2, *a)?),
        [a, b, c] if a == b && b == c => Ok(GridSpec::new(3, *a)?),
        [..] => bail!("grid must be uniform, like 256, 256x256 or 64x64x64"),
    }
}

pub fn parse_proportions(text: &str) -> Result<Vec<f64>> {
    let c: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().context("bad proportion"))
        .collect::<Result<_>>()?;
    if c.is_empty() {
        bail!("no proportions given");
    }
    Ok(c)
}

pub fn parse_auction(text: &str) -> Result<AuctionParams> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        bail!("auction schedule must be m,eps_min,alpha,eps0");
    }
    Ok(AuctionParams {
        max_steps: parts[0].trim().parse().context("bad auction m")?,
        eps_min: parts[1].trim().parse().context("bad auction eps_min")?,
        alpha: parts[2].trim().parse().context("bad auction alpha")?,
        eps0: parts[3].trim().parse().context("bad auction eps0")?,
    })
}

/// Applies a preset name: the grid plus the named solver defaults.
fn preset(name: &str) -> Result<(GridSpec, SolverConfig)> {
    match name {
        "paper-2d" => {
            let grid = GridSpec::new(2, 256)?;
            Ok((grid, SolverConfig::paper_2d(grid.dx())))
        }
        "paper-3d" => {
            let grid = GridSpec::new(3, 128)?;
            Ok((grid, SolverConfig::paper_3d(grid.dx())))
        }
        other => bail!("unknown preset '{other}' (expected paper-2d or paper-3d)"),
    }
}

/// Resolves the merged overrides into a runnable configuration.
pub fn resolve(overrides: Overrides) -> Result<RunConfig> {
    let (mut grid, mut solver) = match overrides.preset.as_deref() {
        Some(name) => preset(name)?,
        None => {
            let grid = GridSpec::new(2, 256)?;
            (grid, SolverConfig::paper_2d(grid.dx()))
        }
    };

    // The interface times track the grid unless given explicitly, so
    // changing the grid after a preset keeps tau = 2 dx and tau' = dx / 2.
    if let Some(text) = &overrides.grid {
        grid = parse_grid(text)?;
        solver.tau = 2.0 * grid.dx();
        solver.tau_prime = 0.5 * grid.dx();
    }
    if let Some(tau) = overrides.tau {
        solver.tau = tau;
    }
    if let Some(tau_prime) = overrides.tau_prime {
        solver.tau_prime = tau_prime;
    }
    if let Some(method) = &overrides.method {
        solver.method = Method::from_name(method)?;
    }
    if let Some(c) = &overrides.c {
        solver.c = parse_proportions(c)?;
    }
    if let Some(lambda) = overrides.lambda {
        solver.lambda = lambda;
    }
    if let Some(beta0) = overrides.beta0 {
        solver.beta0 = beta0;
    }
    if let Some(gamma) = overrides.gamma {
        solver.gamma = gamma;
    }
    if let Some(beta_min) = overrides.beta_min {
        solver.beta_min = beta_min;
    }
    if let Some(m) = overrides.m {
        solver.avg_window = m;
    }
    if let Some(r_tol) = overrides.r_tol {
        solver.r_tol = r_tol;
    }
    if let Some(p) = overrides.p {
        solver.adm_repeats = p;
    }
    if let Some(auction) = &overrides.auction {
        solver.auction = parse_auction(auction)?;
    }
    if let Some(seed) = overrides.seed {
        solver.seed = seed;
    }

    let shape_name = overrides.shape.unwrap_or_else(|| "flower".to_string());
    let shape_seed = overrides.shape_seed.unwrap_or(0);
    let shape = ShapeSpec::by_name(&shape_name, shape_seed)?;

    let out = match overrides.out {
        Some(path) => path,
        None => bail!("no output directory given (--out)"),
    };

    Ok(RunConfig {
        grid,
        shape,
        shape_name,
        solver,
        out,
        snapshot_every: overrides.snapshot_every,
        render: overrides.render.unwrap_or(false),
    })
}
