//! Subcommand implementations.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use fgm_core::gp::{build_dataset, generate_doe, MaterialDataset, MaterialSurrogate};
use fgm_core::homog::{extract_lame_with, homogenize, tensor_norm};
use fgm_core::io::{
    deformed_image, density_image, element_strain_stress, parse_theta_csv, scalar_image, theta_csv, trace_csv,
    Graymap,
};
use fgm_core::micro::{
    band_power_fraction, reconstruct, reconstruct_phase_field, render_graded_assembly, BinaryMicrostructure,
    BlendConfig, TileDesign,
};
use fgm_core::topopt::{
    evaluate_theta, initial_net, optimize, transfer_infer, DesignNet, Theta, ToProblem,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    resolve, DoeConfig, ExperimentConfig, FitConfig, HomogenizeConfig, ReconstructConfig,
};
use crate::manifest::{Run, Status};
use crate::Common;

pub fn run(name: &str, common: &Common) -> Result<Status> {
    let text = match &common.config {
        Some(p) => Some(fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?),
        None => None,
    };
    let dir = common.out.clone().unwrap_or_else(|| common.out_root.join(name));
    let mut run = Run::new(dir)?;
    let args = (text.as_deref(), common.overrides.as_slice(), common.seed);
    let (status, config) = match name {
        "reconstruct" => dispatch(args, &mut run, cmd_reconstruct)?,
        "homogenize" => dispatch(args, &mut run, cmd_homogenize)?,
        "doe" => dispatch(args, &mut run, cmd_doe)?,
        "fit-gp" => dispatch(args, &mut run, cmd_fit)?,
        "optimize" => dispatch(args, &mut run, cmd_optimize)?,
        "transfer" => dispatch(args, &mut run, cmd_transfer)?,
        "render" => dispatch(args, &mut run, cmd_render)?,
        "fields" => dispatch(args, &mut run, cmd_fields)?,
        other => bail!("unknown subcommand {other}"),
    };
    run.finish(name, &config, &status)?;
    Ok(status)
}

fn dispatch<C: DeserializeOwned>(
    (text, overrides, seed): (Option<&str>, &[String], Option<u64>),
    run: &mut Run,
    f: fn(&C, &mut Run) -> Result<Status>,
) -> Result<(Status, Value)> {
    let (c, v) = resolve::<C>(text, overrides, seed)?;
    Ok((f(&c, run)?, v))
}

fn cmd_reconstruct(c: &ReconstructConfig, run: &mut Run) -> Result<Status> {
    let desc = c.descriptor();
    let img = reconstruct(&desc)?;
    run.write("microstructure.pgm", Graymap::from(&img).to_p2().as_bytes())?;
    let field = reconstruct_phase_field(&desc)?;
    run.write_json(
        "summary.json",
        &json!({
            "achieved_vf": img.achieved_vf,
            "band_power_fraction": band_power_fraction(&field, &desc)?,
        }),
    )?;
    Ok(Status::Complete)
}

fn cmd_homogenize(c: &HomogenizeConfig, run: &mut Run) -> Result<Status> {
    let micro = match &c.image {
        Some(p) => {
            let g = Graymap::load(p).with_context(|| format!("cannot load image {}", p.display()))?;
            let pixels = g.pixels.iter().map(|&v| u8::from(v == 0)).collect();
            BinaryMicrostructure::new(g.width, g.height, pixels)?
        }
        None => {
            let mut d = c.descriptor.clone();
            d.seed = c.seed;
            reconstruct(&d.descriptor())?
        }
    };
    let h = homogenize(&micro, &c.law_a, &c.law_b, c.plane)?;
    let lame = extract_lame_with(&h.tensor, c.plane)?;
    run.write_json(
        "tensor.json",
        &json!({
            "c_h": h.tensor.rows(),
            "mu_m": lame.mu_m,
            "lambda_m": lame.lambda_m,
            "isotropy_error": lame.isotropy_error,
            "tensor_norm": tensor_norm(&h.tensor),
            "achieved_vf": micro.achieved_vf,
        }),
    )?;
    Ok(Status::Complete)
}

fn cmd_doe(c: &DoeConfig, run: &mut Run) -> Result<Status> {
    let mut spec = c.doe.clone();
    spec.seed = c.seed;
    let mut dcfg = c.dataset.clone();
    dcfg.seed = c.seed;
    dcfg.normalization = spec.normalization();
    let doe = generate_doe(&spec)?;
    log::info!("homogenizing {} designs", doe.len());
    let ds = build_dataset(&doe, &dcfg)?;
    ds.save(&run.path("dataset.csv"))?;
    run.record("dataset.csv")?;
    run.record("dataset.csv.json")?;
    Ok(Status::Complete)
}

fn cmd_fit(c: &FitConfig, run: &mut Run) -> Result<Status> {
    let mut ds = MaterialDataset::load(&c.dataset)
        .with_context(|| format!("cannot load dataset {}", c.dataset.display()))?;
    ds.split(c.n_train, c.seed)?;
    let (s, report) = MaterialSurrogate::fit(&ds, &c.gp)?;
    s.save(&run.path("surrogate.json"))?;
    run.record("surrogate.json")?;
    run.write_json("report.json", &report)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(Status::Complete)
}

fn problem(c: &ExperimentConfig) -> Result<ToProblem> {
    let mut p = ToProblem::new(c.mesh()?, c.objective, c.mode);
    p.rho_t = c.rho_t;
    p.law_a = c.law_a;
    p.newton = c.newton;
    if let Some(path) = &c.gp_model {
        let s = MaterialSurrogate::load(path).with_context(|| format!("cannot load surrogate {}", path.display()))?;
        p = p.with_surrogate(s);
    }
    p.validate()?;
    Ok(p)
}

fn load_theta(c: &ExperimentConfig, n: usize) -> Result<Vec<Theta>> {
    let path: &PathBuf = c.theta.as_ref().context("`theta` (design table path) is required")?;
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let theta = parse_theta_csv(&text)?;
    if theta.len() != n {
        bail!("design table has {} rows, the mesh {n} elements", theta.len());
    }
    Ok(theta)
}

/// Density image, assembled microstructure and the design table.
fn write_design(c: &ExperimentConfig, theta: &[Theta], run: &mut Run) -> Result<()> {
    let (nx, ny) = c.dims()?;
    run.write("theta.csv", theta_csv(theta)?.as_bytes())?;
    let rho: Vec<f64> = theta.iter().map(|t| t[0]).collect();
    run.write("density.pgm", density_image(&rho, nx, ny, c.scale)?.to_p2().as_bytes())?;
    let designs: Vec<TileDesign> = theta
        .iter()
        .map(|t| TileDesign {
            rho_big: t[0],
            rho_m: t[1],
            r_out: t[2],
            d_r: t[3],
        })
        .collect();
    let img = render_graded_assembly(&designs, nx, ny, c.tile, &BlendConfig::for_tile(c.tile), c.seed)?;
    run.write("microstructure.pgm", Graymap::from(&img).to_p2().as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct OptimizeSummary {
    termination: String,
    iterations: usize,
    j_ref: f64,
    final_objective: Option<f64>,
    final_constraint: Option<f64>,
}

fn cmd_optimize(c: &ExperimentConfig, run: &mut Run) -> Result<Status> {
    let prob = problem(c)?;
    let mut net = initial_net(&prob, c.hidden, c.seed)?;
    net.gain = c.gain;
    let trace = optimize(&prob, net, &c.optimizer)?;
    run.write("trace.csv", trace_csv(&trace.rows, false)?.as_bytes())?;
    let mut timing = String::from("iteration,wall_time\n");
    for r in &trace.rows {
        timing.push_str(&format!("{},{}\n", r.iteration, r.wall_time));
    }
    run.write_volatile("timing.csv", timing.as_bytes())?;
    run.write_json("weights.json", &trace.net)?;
    write_design(c, &trace.theta, run)?;
    let summary = OptimizeSummary {
        termination: trace.termination.clone(),
        iterations: trace.rows.len(),
        j_ref: trace.j_ref,
        final_objective: trace.final_objective(),
        final_constraint: trace.final_constraint(),
    };
    run.write_json("summary.json", &summary)?;
    if trace.termination.starts_with("analysis failure") {
        return Ok(Status::Partial(trace.termination));
    }
    let eval = evaluate_theta(&prob, trace.theta.clone(), c.optimizer.p_final)?;
    let rho: Vec<f64> = trace.theta.iter().map(|t| t[0]).collect();
    let img = deformed_image(&prob.mesh, &eval.solution.u, &rho, c.scale as f64, c.scale)?;
    run.write("deformed.pgm", img.to_p2().as_bytes())?;
    Ok(Status::Complete)
}

fn cmd_transfer(c: &ExperimentConfig, run: &mut Run) -> Result<Status> {
    let path = c.weights.as_ref().context("`weights` (network JSON path) is required")?;
    let net: DesignNet = fgm_core::io::load_json(path).with_context(|| format!("cannot load {}", path.display()))?;
    let net = DesignNet {
        gain: net.gain,
        ..DesignNet::from_weights(net.hidden, net.weights)?
    };
    let theta = transfer_infer(&net, &c.mesh()?);
    write_design(c, &theta, run)?;
    Ok(Status::Complete)
}

fn cmd_render(c: &ExperimentConfig, run: &mut Run) -> Result<Status> {
    let (nx, ny) = c.dims()?;
    let theta = load_theta(c, nx * ny)?;
    write_design(c, &theta, run)?;
    Ok(Status::Complete)
}

fn cmd_fields(c: &ExperimentConfig, run: &mut Run) -> Result<Status> {
    let prob = problem(c)?;
    let (nx, ny) = c.dims()?;
    let theta = load_theta(c, nx * ny)?;
    let eval = evaluate_theta(&prob, theta.clone(), c.p)?;
    let fields = element_strain_stress(&prob.mesh, &eval.laws, &eval.solution.u)?;
    let mut table = String::from("element,e11,e22,e12,s11,s22,s12\n");
    for (k, (e, s)) in fields.iter().enumerate() {
        table.push_str(&format!(
            "{k},{},{},{},{},{},{}\n",
            e[(0, 0)],
            e[(1, 1)],
            e[(0, 1)],
            s[(0, 0)],
            s[(1, 1)],
            s[(0, 1)]
        ));
    }
    run.write("fields.csv", table.as_bytes())?;
    let en: Vec<f64> = fields.iter().map(|(e, _)| e.norm()).collect();
    let sn: Vec<f64> = fields.iter().map(|(_, s)| s.norm()).collect();
    run.write("green_strain.pgm", scalar_image(&en, nx, ny, c.scale)?.to_p2().as_bytes())?;
    run.write("pk2_stress.pgm", scalar_image(&sn, nx, ny, c.scale)?.to_p2().as_bytes())?;
    let rho: Vec<f64> = theta.iter().map(|t| t[0]).collect();
    let img = deformed_image(&prob.mesh, &eval.solution.u, &rho, c.scale as f64, c.scale)?;
    run.write("deformed.pgm", img.to_p2().as_bytes())?;
    run.write_json("summary.json", &json!({"objective": eval.objective, "constraint": eval.constraint, "p": c.p}))?;
    Ok(Status::Complete)
}
