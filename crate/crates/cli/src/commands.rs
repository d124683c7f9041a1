use crate::report::{io_err, opt, write_csv, write_json, CliError, Meta};
use crate::scenario::{Scenario, Toggles};
use serde::Serialize;
use std::path::{Path, PathBuf};
use thinfb_core::diagnostics::{
    classify_point, competitor_log_cutoff, corkscrew_check, growth_constants, lambda_density, lambda_growth, perimeter_estimate,
    Classification, ClassifierConfig, CompetitorReport, FreeBoundary, GrowthConstants, LambdaGrowth,
};
use thinfb_core::energy::{weiss_profile, EnergyBreakdown, WeissProfile};
use thinfb_core::extension::trivial_solution;
use thinfb_core::io::{decode_field, write_field, write_mask, Metadata};
use thinfb_core::solver::minimize;
use thinfb_core::strata::{beta2, strata_membership, Ball, PointMeasure, StrataMembership, StrataQuery};
use thinfb_core::validation;
use thinfb_core::{build_grid, GridSpec, ScalarField, ThinMask};

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn load_field(path: &Path) -> Result<(ScalarField, Meta), CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let (field, stored): (ScalarField, Metadata) = decode_field(&bytes).map_err(|e| io_err(path, e))?;
    let meta = Meta::inherit(&stored, &bytes, *field.spec());
    Ok((field, meta))
}

pub fn parse_point(s: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("cannot parse point '{s}'")))?;
    if v.len() != n {
        return Err(CliError::Config(format!("point '{s}' needs {n} coordinates")));
    }
    Ok(v)
}

#[derive(Serialize)]
struct SolveReport {
    converged: bool,
    iterations: usize,
    energy: EnergyBreakdown,
    accepted_moves: usize,
    zero_nodes: usize,
    field_file: String,
    mask_file: String,
}

pub fn solve(config: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let mut sc = Scenario::load(config)?;
    if let Some(s) = seed {
        sc.override_seed(s);
    }
    let dir = out.unwrap_or_else(|| sc.output.clone());
    let (grid, data) = sc.build()?;
    let meta = Meta::new(sc.hash(), sc.seed(), *grid.spec());
    let result = minimize(&grid, &data, &sc.solve_config())?;
    ensure_dir(&dir)?;
    let (fpath, mpath) = (dir.join("field.thinph"), dir.join("mask.thinph"));
    write_field(&fpath, &result.field, &meta.pairs())?;
    write_mask(&mpath, &result.mask, &meta.pairs())?;
    let report = SolveReport {
        converged: result.converged,
        iterations: result.iterations,
        energy: result.energy,
        accepted_moves: result.flips_log.len(),
        zero_nodes: result.mask.zero_nodes().len(),
        field_file: "field.thinph".into(),
        mask_file: "mask.thinph".into(),
    };
    write_json(&dir.join("energy.json"), &meta, &report)?;
    if sc.diagnostics.free_boundary || sc.diagnostics.weiss || sc.diagnostics.holder {
        let diag = diagnose_field(&result.field, Some(&result.mask), &sc.diagnostics)?;
        write_diagnostics(&dir, &meta, &diag)?;
    }
    println!(
        "{}: energy {:.10} (dirichlet {:.10}, area {:.6}), {} iterations, {} zero slab nodes",
        if result.converged { "converged" } else { "NOT converged" },
        result.energy.total,
        result.energy.dirichlet,
        result.energy.thin_area,
        result.iterations,
        report.zero_nodes
    );
    if !result.converged {
        return Err(CliError::NotConverged(format!("no settled mask after {} sweeps", result.iterations)));
    }
    Ok(())
}

#[derive(Serialize)]
struct Corkscrews {
    radius: f64,
    min_interior: Option<f64>,
    min_exterior: Option<f64>,
}

#[derive(Serialize)]
struct NearestPoint {
    point: Vec<f64>,
    classification: Option<Classification>,
    lambda_growth: Option<LambdaGrowth>,
}

#[derive(Serialize)]
pub struct Diagnostics {
    free_boundary: Option<FreeBoundary>,
    perimeter_half_box: Option<f64>,
    corkscrew: Option<Corkscrews>,
    nearest_to_origin: Option<NearestPoint>,
    lambda_min_density: f64,
    lambda_zero_phase_mass: f64,
    holder: Option<GrowthConstants>,
    #[serde(skip)]
    weiss: Option<WeissProfile>,
}

/// Radii that fit about `p`: up to eight geometric steps from `4h`.
fn fitting_radii(field: &ScalarField, p: &[f64]) -> Vec<f64> {
    let g = field.grid();
    let (h, big_r) = (g.h(), g.spec().half_extent);
    let room = p.iter().map(|x| big_r - x.abs()).fold(big_r, f64::min) * 0.9;
    let lo = (4.0 * h).max(room / 8.0);
    if room < 1.2 * lo {
        return vec![];
    }
    (0..8).map(|k| lo * (room / lo).powf(k as f64 / 7.0)).collect()
}

pub fn diagnose_field(field: &ScalarField, mask: Option<&ThinMask>, toggles: &Toggles) -> Result<Diagnostics, CliError> {
    let g = field.grid();
    let n = g.n();
    let big_r = g.spec().half_extent;
    let owned;
    let mask = match mask {
        Some(m) => m,
        None => {
            owned = ThinMask::from_field(field);
            &owned
        }
    };
    let cfg = ClassifierConfig::for_dim(n);
    let mut fb = FreeBoundary::from_mask(mask);
    let dens = lambda_density(field)?;
    let zero = mask.zero_nodes();
    let mut out = Diagnostics {
        free_boundary: None,
        perimeter_half_box: None,
        corkscrew: None,
        nearest_to_origin: None,
        lambda_min_density: dens.min(),
        lambda_zero_phase_mass: dens.mass_on(&zero),
        holder: None,
        weiss: None,
    };
    // prefer zero-phase members, which lie on F itself
    let zero_pts: Vec<Vec<f64>> = fb.zero_side.iter().map(|&s| g.slab_point(s)[..n].to_vec()).collect();
    let nearest = (if zero_pts.is_empty() { &fb.points } else { &zero_pts })
        .iter()
        .min_by(|a, b| a.iter().map(|x| x * x).sum::<f64>().total_cmp(&b.iter().map(|x| x * x).sum::<f64>()))
        .cloned();
    if toggles.free_boundary {
        let r = 0.25 * big_r;
        fb.annotate(field, mask, r, &cfg)?;
        out.perimeter_half_box = perimeter_estimate(mask, &vec![0.0; n], 0.5 * big_r).ok();
        let cs: Vec<_> = fb.points.iter().filter_map(|p| corkscrew_check(mask, p, r).ok()).collect();
        let min_of = |v: Vec<f64>| v.into_iter().reduce(f64::min);
        out.corkscrew = Some(Corkscrews {
            radius: r,
            min_interior: min_of(cs.iter().map(|c| c.interior.as_ref().map_or(0.0, |w| w.c)).collect()),
            min_exterior: min_of(cs.iter().map(|c| c.exterior.as_ref().map_or(0.0, |w| w.c)).collect()),
        });
        if let Some(p) = &nearest {
            let radii: Vec<f64> = [0.1, 0.25, 0.5].iter().map(|s| s * big_r).filter(|&r| g.contains_ball(pad(p), r)).collect();
            out.nearest_to_origin = Some(NearestPoint {
                point: p.clone(),
                classification: classify_point(field, p, &cfg).ok(),
                lambda_growth: if radii.is_empty() { None } else { Some(lambda_growth(field, p, &radii)?) },
            });
        }
        out.free_boundary = Some(fb.clone());
    }
    if toggles.holder {
        out.holder = growth_constants(field, &zero_pts)?;
    }
    if toggles.weiss {
        let p = nearest.unwrap_or_else(|| vec![0.0; n]);
        let radii = fitting_radii(field, &p);
        if !radii.is_empty() {
            out.weiss = Some(weiss_profile(field, &p, &radii)?);
        }
    }
    Ok(out)
}

fn pad(p: &[f64]) -> [f64; 2] {
    [p[0], p.get(1).copied().unwrap_or(0.0)]
}

fn write_weiss_csv(path: &Path, meta: &Meta, p: &WeissProfile) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = p
        .rows()
        .into_iter()
        .map(|(r, psi, d, gap)| vec![format!("{r:.12e}"), format!("{psi:.12e}"), opt(d), opt(gap)])
        .collect();
    write_csv(path, meta, &["r", "psi", "deficit_from_prev", "identity_gap"], &rows)
}

fn write_diagnostics(dir: &Path, meta: &Meta, d: &Diagnostics) -> Result<(), CliError> {
    write_json(&dir.join("report.json"), meta, d)?;
    if let Some(p) = &d.weiss {
        write_weiss_csv(&dir.join("weiss.csv"), meta, p)?;
    }
    Ok(())
}

pub fn diagnose(field: &Path, out: &Path) -> Result<(), CliError> {
    let (u, meta) = load_field(field)?;
    let toggles = Toggles { free_boundary: true, weiss: true, holder: true };
    let d = diagnose_field(&u, None, &toggles)?;
    ensure_dir(out)?;
    write_diagnostics(out, &meta, &d)?;
    let count = d.free_boundary.as_ref().map_or(0, |f| f.nodes.len());
    match d.nearest_to_origin.as_ref().and_then(|p| p.classification.as_ref().map(|c| (p, c))) {
        Some((p, c)) => println!("{count} free boundary nodes; nearest the origin {:?}: {:?}, psi {:.5}", p.point, c.class, c.psi0),
        None => println!("{count} free boundary nodes"),
    }
    Ok(())
}

pub fn weiss(field: &Path, center: &str, radii: Option<&str>, out: &Path) -> Result<(), CliError> {
    let (u, meta) = load_field(field)?;
    let c = parse_point(center, u.grid().n())?;
    let radii = match radii {
        Some(s) => s
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::Config(format!("cannot parse radii '{s}'")))?,
        None => fitting_radii(&u, &c),
    };
    let p = weiss_profile(&u, &c, &radii)?;
    ensure_dir(out)?;
    write_weiss_csv(&out.join("weiss.csv"), &meta, &p)?;
    for (r, psi, _, _) in p.rows() {
        println!("r {r:.5}  psi {psi:.8}");
    }
    Ok(())
}

pub struct StrataArgs {
    pub k: usize,
    pub epsilon: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub point: String,
    pub budget: usize,
}

#[derive(Serialize)]
struct StrataReport {
    query: StrataQuery,
    membership: StrataMembership,
    beta_balls: usize,
}

pub fn strata(field: &Path, args: &StrataArgs, out: &Path) -> Result<(), CliError> {
    let (u, meta) = load_field(field)?;
    let g = u.grid();
    let n = g.n();
    let query = StrataQuery {
        k: args.k,
        epsilon: args.epsilon,
        r_min: args.r_min,
        r_max: args.r_max,
        point: parse_point(&args.point, n)?,
        direction_budget: args.budget,
    };
    let m = strata_membership(&u, &query)?;
    ensure_dir(out)?;
    let rows: Vec<Vec<String>> = m.log.iter().map(|(s, d)| vec![format!("{s:.12e}"), (query.k + 1).to_string(), format!("{d:.12e}")]).collect();
    write_csv(&out.join("symmetry.csv"), &meta, &["scale", "k", "distance"], &rows)?;

    // β of the free boundary measure, unit mass h^{n-1} per node, about each node
    let fb = FreeBoundary::from_mask(&ThinMask::from_field(&u));
    let w = g.h().powi(n as i32 - 1);
    let mu = PointMeasure::new(fb.points.iter().map(|p| (p.clone(), w)).collect())?;
    let mut beta_rows = Vec::new();
    for p in &fb.points {
        for &(s, _) in &m.log {
            let b = beta2(&mu, &Ball::new(p.clone(), s)?, n - 1)?;
            let mut row: Vec<String> = p.iter().map(|x| format!("{x:.12e}")).collect();
            row.resize(2, String::new());
            row.extend([format!("{s:.12e}"), (n - 1).to_string(), format!("{:.12e}", b.mass), format!("{:.12e}", b.beta_sq)]);
            beta_rows.push(row);
        }
    }
    write_csv(&out.join("beta.csv"), &meta, &["x1", "x2", "radius", "k", "mass", "beta_sq"], &beta_rows)?;
    let verdict = if m.member { "in" } else { "not in" };
    println!("{:?} is {verdict} S^{}_(eps={}, r={})", query.point, query.k, query.epsilon, query.r_min);
    for (s, d) in &m.log {
        println!("  scale {s:.5}: distance to {}-symmetric {d:.6e}", query.k + 1);
    }
    let beta_balls = beta_rows.len();
    write_json(&out.join("strata.json"), &meta, &StrataReport { query, membership: m, beta_balls })
}

#[derive(Serialize)]
struct CompetitorOut {
    reports: Vec<CompetitorReport>,
    within_bound: bool,
}

/// With no field, the trivial cone with free boundary along the first axis
/// is built on a grid of half extent `R²`, 32 cells per half side.
pub fn competitor(field: Option<&Path>, alpha: Option<f64>, big_rs: &[f64], out: &Path) -> Result<(), CliError> {
    let mut reports = Vec::new();
    let mut meta = None;
    for &big_r in big_rs {
        let (cone, m) = match (field, alpha) {
            (Some(f), _) => load_field(f)?,
            (None, Some(a)) => {
                let ext = big_r * big_r;
                let g = build_grid(GridSpec::new(2, a, ext, ext / 32.0)?)?;
                let cone = trivial_solution(&g, &[0.0, 1.0])?;
                let hash = crate::report::sha256_hex(format!("competitor alpha={a} R={big_r}").as_bytes());
                (cone, Meta::new(hash, None, *g.spec()))
            }
            (None, None) => return Err(CliError::Config("competitor needs --field or --alpha".into())),
        };
        let rep = competitor_log_cutoff(&cone, big_r)?;
        println!("R {big_r}: delta {:.6e}, bound {:.6e}", rep.delta_energy, rep.bound);
        reports.push(rep);
        meta.get_or_insert(m);
    }
    let meta = meta.ok_or_else(|| CliError::Config("no R given".into()))?;
    ensure_dir(out)?;
    let within_bound = reports.iter().all(|r| r.delta_energy <= r.bound);
    write_json(&out.join("competitor.json"), &meta, &CompetitorOut { reports, within_bound })
}

pub fn validate(filter: Option<&str>, out: Option<&Path>) -> Result<(), CliError> {
    let outcomes = validation::run(filter, |o| {
        println!("{}", o.line());
        for d in &o.details {
            println!("      {d}");
        }
    });
    if outcomes.is_empty() {
        return Err(CliError::Config(format!("filter {:?} selects no criterion", filter.unwrap_or(""))));
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{}/{} criteria passed", outcomes.len() - failed, outcomes.len());
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let path = dir.join("validate.json");
        let text = serde_json::to_string_pretty(&outcomes).map_err(|e| io_err(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    }
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} criteria failed")));
    }
    Ok(())
}

