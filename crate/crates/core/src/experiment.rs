//! End-to-end experiment orchestration: input loading or synthesis, forward
//! pass with merging, cost accounting, optional analyses, and report/CSV
//! emission.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analysis::{
    ib_score, static_dynamic_similarity, temporal_similarity_study, IBInputs, IBParams,
    SimilarityStudyConfig,
};
use crate::config::ModelConfig;
use crate::cost::{schedule_cost, CostReport};
use crate::encoder::{build_encoder, Encoder, ForwardOutput};
use crate::error::{Error, Result};
use crate::grid::{ProvenanceMap, TokenGrid};
use crate::options::MergeOptions;
use crate::report;
use crate::schedule::MergeSchedule;
use crate::synth::{synth_generate, union_mask, SyntheticVideoSpec, Trajectory};
use crate::tensorfile::Tensor;
use crate::video::Video;

/// Where the clip comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InputSource {
    /// Raw frames as a rank-4 `[T][H][W][3]` tensor record.
    File {
        path: PathBuf,
    },
    Synthetic {
        spec: SyntheticVideoSpec,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub similarity_csv: Option<PathBuf>,
    pub static_dynamic_csv: Option<PathBuf>,
    pub merge_map_dir: Option<PathBuf>,
}

/// 2-class corpus setup for the information-bottleneck comparison: class 0
/// moves horizontally, class 1 vertically, matched speed and texture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IbStudyConfig {
    pub samples_per_class: usize,
    pub n_x: usize,
    pub temperature: f64,
}

impl Default for IbStudyConfig {
    fn default() -> Self {
        IbStudyConfig {
            samples_per_class: 10,
            n_x: 8,
            temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisRequest {
    pub similarity: Option<SimilarityStudyConfig>,
    /// Requires a synthetic input (the ground-truth mask comes from it).
    pub static_dynamic: bool,
    pub ib: Option<IbStudyConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub schedule: MergeSchedule,
    pub seed: u64,
    pub input: InputSource,
    #[serde(default)]
    pub options: MergeOptions,
    #[serde(default)]
    pub analysis: AnalysisRequest,
    #[serde(default)]
    pub outputs: OutputPaths,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.schedule.num_layers() != self.model.layers {
            return Err(Error::InvalidConfig(format!(
                "schedule covers {} layers, model has {}",
                self.schedule.num_layers(),
                self.model.layers
            )));
        }
        self.schedule
            .validate(self.model.temporal_tokens(), self.model.spatial_tokens())?;
        if let InputSource::Synthetic { spec } = &self.input {
            spec.validate()?;
            if spec.frames != self.model.frames
                || spec.height != self.model.height
                || spec.width != self.model.width
            {
                return Err(Error::InvalidConfig(
                    "synthetic spec dims do not match the model".into(),
                ));
            }
        }
        if self.analysis.static_dynamic && !matches!(self.input, InputSource::Synthetic { .. }) {
            return Err(Error::InvalidConfig(
                "static-dynamic analysis needs a synthetic input with a ground-truth mask".into(),
            ));
        }
        Ok(())
    }
}

fn load_video(input: &InputSource, seed: u64) -> Result<(Video, Option<Vec<bool>>)> {
    match input {
        InputSource::File { path } => {
            let records = crate::tensorfile::load_named(path)?;
            let tensor = records
                .iter()
                .find(|(name, _)| name == "video")
                .map(|(_, t)| t)
                .or_else(|| records.first().map(|(_, t)| t))
                .ok_or_else(|| Error::BadTensorFile("no tensor records in input".into()))?;
            if tensor.dims.len() != 4 || tensor.dims[3] != 3 {
                return Err(Error::BadTensorFile(format!(
                    "expected [T][H][W][3] video tensor, got dims {:?}",
                    tensor.dims
                )));
            }
            let video = Video::from_data(
                tensor.dims[0],
                tensor.dims[1],
                tensor.dims[2],
                tensor.to_f64(),
            )?;
            Ok((video, None))
        }
        InputSource::Synthetic { spec } => {
            let (video, steps) = synth_generate(spec, seed)?;
            Ok((video, Some(union_mask(&steps))))
        }
    }
}

/// Save a clip as a named `video` tensor record.
pub fn save_video(path: &Path, video: &Video) -> Result<()> {
    let tensor = Tensor::from_f64(&[video.frames, video.height, video.width, 3], &video.data);
    crate::tensorfile::save_named(path, &[("video".to_string(), tensor)])
}

fn cost_json(cost: &CostReport) -> Value {
    json!({
        "layers": cost.layers.iter().enumerate().map(|(i, l)| json!({
            "layer": i + 1,
            "n_t": l.n_t,
            "n_s": l.n_s,
            "temporal_attention": l.temporal_attention,
            "spatial_attention": l.spatial_attention,
            "projection": l.projection,
            "mlp": l.mlp,
        })).collect::<Vec<_>>(),
        "total_flops": cost.total_flops,
        "baseline_flops": cost.baseline_flops,
        "ratio": cost.ratio,
    })
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut body = String::with_capacity(rows.len() * 32 + header.len() + 1);
    body.push_str(header);
    body.push('\n');
    for row in rows {
        body.push_str(row);
        body.push('\n');
    }
    std::fs::write(path, body)?;
    Ok(())
}

/// Per-layer CSV of group ids per original cell: `layer_XX.csv` with columns
/// `t,s,group`.
pub fn export_merge_maps(layer_provenance: &[ProvenanceMap], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (li, prov) in layer_provenance.iter().enumerate() {
        let ids = prov.group_ids();
        let mut rows = Vec::with_capacity(prov.orig_t * prov.orig_s);
        for (t, row) in ids.iter().enumerate() {
            for (s, &g) in row.iter().enumerate() {
                rows.push(format!("{t},{s},{g}"));
            }
        }
        write_csv(
            &dir.join(format!("layer_{:02}.csv", li + 1)),
            "t,s,group",
            &rows,
        )?;
    }
    Ok(())
}

/// Mean of the final live tokens: the clip-level representation used for the
/// IB comparison.
pub fn mean_token(grid: &TokenGrid) -> Vec<f64> {
    let mut acc = vec![0.0; grid.channels];
    for t in 0..grid.n_t {
        for s in 0..grid.n_s {
            for (a, v) in acc.iter_mut().zip(grid.token(t, s)) {
                *a += v;
            }
        }
    }
    let n = (grid.n_t * grid.n_s) as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

fn ib_spec(model: &ModelConfig, class: usize, texture_seed: u64) -> SyntheticVideoSpec {
    let object = model.patch;
    let step = model.patch as f64;
    SyntheticVideoSpec {
        frames: model.frames,
        height: model.height,
        width: model.width,
        texture_seed,
        object_size: object,
        velocity: if class == 0 { (step, 0.0) } else { (0.0, step) },
        trajectory: Trajectory::Linear,
        noise: 0.01,
        mask_patch: model.patch,
        start: (0, 0),
        background_contrast: 1.0,
        texture_smoothing: 0,
    }
}

/// Build the labeled corpus, run the merge pipeline on every clip, and score
/// the resulting representations.
pub fn ib_study(
    model: &ModelConfig,
    schedule: &MergeSchedule,
    options: &MergeOptions,
    cfg: &IbStudyConfig,
    seed: u64,
) -> Result<crate::analysis::IbScore> {
    let encoder = build_encoder(model, seed)?;
    let mut z = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for class in 0..2 {
        for i in 0..cfg.samples_per_class {
            let sample_seed = seed ^ ((class as u64) << 24) ^ (i as u64 + 1);
            let spec = ib_spec(model, class, sample_seed);
            let (video, _) = synth_generate(&spec, sample_seed.wrapping_mul(31))?;
            let grid = encoder.tokenize(&video)?;
            x.push(mean_token(&grid));
            let out = encoder.forward(&grid, schedule, options)?;
            z.push(mean_token(&out.grid));
            y.push(class);
        }
    }
    ib_score(
        &IBInputs { z, x, y },
        &IBParams {
            n_x: cfg.n_x,
            temperature: cfg.temperature,
        },
    )
}

/// Run one experiment: forward pass, cost model, requested analyses, and all
/// requested file outputs. Returns the finalized JSON report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Value> {
    config.validate()?;
    let model = &config.model;
    let (video, mask) = load_video(&config.input, config.seed)?;

    let encoder: Encoder = build_encoder(model, config.seed)?;
    let grid = encoder.tokenize(&video)?;
    let out: ForwardOutput = encoder.forward(&grid, &config.schedule, &config.options)?;
    out.provenance.validate_partition()?;

    let cost = schedule_cost(model, &config.schedule)?;

    let mut body = Map::new();
    body.insert("seed".to_string(), json!(config.seed));
    body.insert("model".to_string(), serde_json::to_value(model)?);
    body.insert(
        "schedule".to_string(),
        serde_json::to_value(&config.schedule)?,
    );
    body.insert(
        "options".to_string(),
        serde_json::to_value(&config.options)?,
    );
    body.insert("cost".to_string(), cost_json(&cost));
    body.insert(
        "tokens".to_string(),
        json!({
            "initial": {"n_t": model.temporal_tokens(), "n_s": model.spatial_tokens()},
            "final": {"n_t": out.grid.n_t, "n_s": out.grid.n_s},
            "provenance_total": out.provenance.total_size(),
        }),
    );

    let mut analyses = Map::new();
    if let Some(sim_cfg) = &config.analysis.similarity {
        let li = sim_cfg.layer.saturating_sub(1);
        let arts = out.artifacts.get(li).ok_or_else(|| {
            Error::InvalidConfig(format!("probe layer {} out of range", sim_cfg.layer))
        })?;
        if arts.spatial_keys.first().map_or(0, Vec::len) != model.spatial_tokens() {
            return Err(Error::InvalidConfig(
                "probe layer sits after spatial merging; the window geometry is gone".into(),
            ));
        }
        let curves = temporal_similarity_study(
            &arts.spatial_keys,
            model.grid_height(),
            model.grid_width(),
            sim_cfg,
        )?;
        if let Some(path) = &config.outputs.similarity_csv {
            let rows: Vec<String> = curves
                .distances
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let win = curves
                        .window
                        .get(i)
                        .map_or(String::new(), |v| format!("{}", report::round_sig(*v)));
                    format!("{d},{},{win}", report::round_sig(curves.same_position[i]))
                })
                .collect();
            write_csv(path, "distance,same_position_mean,window_mean", &rows)?;
        }
        analyses.insert("similarity".to_string(), serde_json::to_value(&curves)?);
    }
    if config.analysis.static_dynamic {
        let mask = mask.as_ref().expect("validated synthetic input");
        let mut per_layer = Vec::new();
        let mut rows = Vec::new();
        for (li, arts) in out.artifacts.iter().enumerate() {
            if arts.spatial_keys.first().map_or(0, Vec::len) != mask.len() {
                break; // spatial merging started; original mask no longer applies
            }
            let (s, d) = static_dynamic_similarity(&arts.spatial_keys, mask)?;
            per_layer.push(json!({"layer": li + 1, "static_mean": s, "dynamic_mean": d}));
            rows.push(format!(
                "{},{},{}",
                li + 1,
                s.map_or(String::new(), |v| report::round_sig(v).to_string()),
                d.map_or(String::new(), |v| report::round_sig(v).to_string()),
            ));
        }
        if let Some(path) = &config.outputs.static_dynamic_csv {
            write_csv(path, "layer,static_mean,dynamic_mean", &rows)?;
        }
        analyses.insert("static_dynamic".to_string(), json!(per_layer));
    }
    if let Some(ib_cfg) = &config.analysis.ib {
        let score = ib_study(
            model,
            &config.schedule,
            &config.options,
            ib_cfg,
            config.seed,
        )?;
        analyses.insert("ib".to_string(), serde_json::to_value(score)?);
    }
    if !analyses.is_empty() {
        body.insert("analysis".to_string(), Value::Object(analyses));
    }

    if let Some(dir) = &config.outputs.merge_map_dir {
        export_merge_maps(&out.layer_provenance, dir)?;
        body.insert(
            "merge_map_dir".to_string(),
            json!(dir.display().to_string()),
        );
    }

    let final_report = report::finalize(body);
    if let Some(path) = &config.outputs.report {
        std::fs::write(path, report::to_bytes(&final_report))?;
    }
    Ok(final_report)
}
