use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use pcskel::engine::{Engine, EngineError, EngineOptions, Status};
use pcskel::io::{export, parse_document, PolygonDocument};
use pcskel::oracle::{cross_check, engine_events};
use pcskel::Error;

#[derive(Parser)]
#[command(name = "pcskel", version, about = "Weighted straight skeletons and roofs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Propagate a polygon document to the end and write outputs.
    Build {
        /// Polygon document (JSON).
        input: PathBuf,
        /// Height increment per step.
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Stop at this height.
        #[arg(long)]
        max_z: Option<f64>,
        /// Write the skeleton, faces and event nodes as JSON.
        #[arg(long)]
        skeleton: Option<PathBuf>,
        /// Write input, offsets and skeleton as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write the roof mesh as OBJ.
        #[arg(long)]
        obj: Option<PathBuf>,
        /// Compare events and faces with a brute-force replay.
        #[arg(long)]
        oracle_check: bool,
        /// Where to write the diagnostic dump on a fault.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Geometric tolerance relative to the input extent.
        #[arg(long)]
        eps_geom: Option<f64>,
    },
    /// Run the session service on 127.0.0.1.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

const EXIT_USAGE: u8 = 2;
const EXIT_FAULT: u8 = 3;
const EXIT_ORACLE: u8 = 4;

fn write(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn dump(path: &Path, doc: &PolygonDocument, engine: &Engine) -> Result<(), Error> {
    let loops: Vec<Vec<[f64; 2]>> = engine
        .loops()
        .iter()
        .filter(|l| !l.frozen)
        .map(|l| l.vertices.iter().map(|v| [v.pos.x, v.pos.y]).collect())
        .collect();
    let events: Vec<_> = engine
        .events()
        .iter()
        .map(|e| json!({ "t": e.t, "z": e.z, "kind": format!("{:?}", e.kind), "at": [e.at.x, e.at.y] }))
        .collect();
    let body = json!({
        "fault": engine.fault(),
        "t": engine.t(),
        "z": engine.z(),
        "input": serde_json::from_str::<serde_json::Value>(&doc.to_json()).expect("valid json"),
        "wavefront": loops,
        "events": events,
    });
    write(path, &serde_json::to_string_pretty(&body).expect("dump serializes"))
}

#[allow(clippy::too_many_arguments)]
fn build(
    input: &Path,
    step: f64,
    max_z: Option<f64>,
    skeleton: Option<&Path>,
    svg: Option<&Path>,
    obj: Option<&Path>,
    oracle_check: bool,
    dump_path: Option<&Path>,
    eps_geom: Option<f64>,
) -> Result<ExitCode, Error> {
    let bytes = std::fs::read(input).map_err(|source| Error::Io { path: input.display().to_string(), source })?;
    let doc = parse_document(&bytes)?;
    let mut opts = EngineOptions { max_z, ..EngineOptions::default() };
    if let Some(eps) = eps_geom {
        opts.tol.eps_geom = eps;
        if !opts.tol.is_valid() {
            return Err(EngineError::Edit(format!("tolerance {eps} out of range")).into());
        }
    }
    let mut engine = Engine::new(&doc.loops, &doc.edge_inits(), &doc.schedule_pairs(), opts)?;
    match engine.run_to_end(step) {
        Ok(()) => {}
        Err(EngineError::Fault(f)) => {
            let path = dump_path.map(Path::to_path_buf).unwrap_or_else(|| input.with_extension("dump.json"));
            dump(&path, &doc, &engine)?;
            eprintln!("fault: {f}");
            eprintln!("diagnostic dump written to {}", path.display());
            return Ok(ExitCode::from(EXIT_FAULT));
        }
        Err(e) => return Err(e.into()),
    }
    let out = engine.output()?;
    if let Some(p) = skeleton {
        write(p, &export::skeleton_json(&engine, &out))?;
    }
    if let Some(p) = svg {
        write(p, &export::svg(&engine, &out))?;
    }
    if let Some(p) = obj {
        write(p, &export::roof_obj(&out))?;
    }
    let status = match engine.status() {
        Status::Terminated => "terminated",
        _ => "stopped at maximum height",
    };
    println!(
        "{status} at z={}: {} nodes, {} arcs, {} faces",
        engine.z(),
        out.nodes.len(),
        out.arcs.len(),
        out.faces.len()
    );
    if oracle_check {
        if doc.has_start_times() {
            println!("oracle check skipped: delayed edge starts are not replayed");
        } else {
            let weights: Vec<f64> = doc.edges.iter().map(|e| e.weight()).collect();
            let extent = engine.frame().scale;
            let report = cross_check(&doc.loops, &weights, &engine_events(&engine), out.faces.len(), 1e-4 * extent);
            println!(
                "oracle check {}: events {}, faces {}, max position error {:e} ({})",
                if report.passed() { "passed" } else { "FAILED" },
                if report.event_sequence_match { "match" } else { "differ" },
                if report.face_count_match { "match" } else { "differ" },
                report.max_position_error,
                report.notes
            );
            if !report.passed() {
                return Ok(ExitCode::from(EXIT_ORACLE));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Build { input, step, max_z, skeleton, svg, obj, oracle_check, dump, eps_geom } => build(
            &input,
            step,
            max_z,
            skeleton.as_deref(),
            svg.as_deref(),
            obj.as_deref(),
            oracle_check,
            dump.as_deref(),
            eps_geom,
        ),
        Cmd::Serve { port } => {
            let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
            rt.block_on(pcskel::io::server::serve(port))
                .map(|_| ExitCode::SUCCESS)
                .map_err(|source| Error::Io { path: format!("127.0.0.1:{port}"), source })
        }
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
