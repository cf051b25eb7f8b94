//! `estimate`: run the estimator over recorded detections (JSONL in,
//! JSONL out).

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;
use trolleypose::pipeline::plan_goal;
use trolleypose::{process_frame, DetectionFrame, PipelineConfig, PipelineError};

use crate::config::{load, strip_position};
use crate::error::CliError;

pub struct EstimateArgs<'a> {
    pub config: &'a Path,
    /// `-` reads standard input.
    pub detections: &'a Path,
    pub strict: bool,
    pub goals: bool,
}

/// One output line. Pose fields are null for frames that arrive before any
/// usable observation.
#[derive(Debug, Serialize)]
struct EstimateLine {
    frame_id: u64,
    x: Option<f64>,
    y: Option<f64>,
    theta: Option<f64>,
    n_visible: usize,
    degraded: bool,
    lost: bool,
}

pub fn run(args: &EstimateArgs) -> Result<(), CliError> {
    let loaded = load::<PipelineConfig>(args.config)?;
    let config = &loaded.value;
    config.validate().map_err(|e| loaded.reject(args.config, &e))?;

    let input: Box<dyn BufRead> = if args.detections == Path::new("-") {
        Box::new(io::stdin().lock())
    } else {
        let file = File::open(args.detections).map_err(|e| CliError::io(args.detections, e))?;
        Box::new(BufReader::new(file))
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let out_err = |e: io::Error| CliError::Io(format!("stdout: {e}"));

    let mut state = config.initial_state();
    for (i, line) in input.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| CliError::io(args.detections, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let frame: DetectionFrame =
            serde_json::from_str(&line).map_err(|e| CliError::Invalid(format!("line {n}: {}", strip_position(&e))))?;
        let json = match process_frame(config, &mut state, &frame) {
            Ok(est) if args.goals => serde_json::to_string(&plan_goal(&est)),
            Ok(est) => serde_json::to_string(&EstimateLine {
                frame_id: est.frame_id,
                x: Some(est.x),
                y: Some(est.y),
                theta: Some(est.theta.degrees()),
                n_visible: est.n_visible,
                degraded: est.degraded,
                lost: est.lost,
            }),
            Err(PipelineError::ColdStartNoObservation(_)) if !args.strict => {
                log::debug!("line {n}: frame {} has no pose yet", frame.frame_id);
                if args.goals {
                    continue;
                }
                serde_json::to_string(&EstimateLine {
                    frame_id: frame.frame_id,
                    x: None,
                    y: None,
                    theta: None,
                    n_visible: 0,
                    degraded: true,
                    lost: false,
                })
            }
            Err(e) => return Err(CliError::Invalid(format!("line {n}: {e}"))),
        }
        .expect("estimate records serialize");
        writeln!(out, "{json}").map_err(out_err)?;
    }
    out.flush().map_err(out_err)
}
