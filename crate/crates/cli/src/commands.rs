use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use topoeeg_core::dsp::{read_feature_dump, write_feature_dump};
use topoeeg_core::eval::{
    extract_features, feature_fingerprint, render_report, render_table, run_with_features, ExperimentReport,
    FeatureSet, MetricRow,
};
use topoeeg_core::fsio::write_atomic;
use topoeeg_core::ingest::{
    write_recording, CohortSource, CohortSpec, Manifest, ManifestCohort, ManifestEntry, SyntheticCohort,
};
use topoeeg_core::tensorize::InterpMethod;
use topoeeg_core::{load_layout, CoreError, ElectrodeLayout, FeatureConfig, FeatureModel, Label, PipelineConfig};

use crate::args::{InterpCompareArgs, ReportArgs, RunArgs, SynthArgs};

const DEFAULT_MANIFEST_FS_HZ: f64 = 1024.0;

/// Where recordings come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CohortConfig {
    Synthetic { spec: CohortSpec },
    Manifest { path: PathBuf, fs_hz: f64 },
}

/// Everything needed to repeat a run; written as `config.json` beside the
/// outputs and accepted back through `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRun {
    pub command: String,
    pub cohort: CohortConfig,
    pub layout: ElectrodeLayout,
    pub pipeline: PipelineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<InterpMethod>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strides: Option<Vec<usize>>,
}

/// Rows of an interpolation or stride sweep run on identical folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub command: String,
    pub seed: u64,
    pub folds: Vec<Vec<u32>>,
    pub rows: Vec<MetricRow>,
}

fn usage(message: impl Into<String>) -> anyhow::Error {
    CoreError::InvalidConfig(message.into()).into()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let layout = match &args.layout {
        Some(p) => load_layout(p)?,
        None => ElectrodeLayout::default_layout(),
    };
    let mut spec = CohortSpec {
        seed: args.seed,
        ..CohortSpec::default()
    };
    args.cohort.apply(&mut spec);
    let cohort = SyntheticCohort::new(spec.clone(), layout.clone())?;

    let mut entries = Vec::with_capacity(cohort.len());
    for (i, info) in cohort.subjects().iter().enumerate() {
        let rel = PathBuf::from("subjects").join(format!("sub-{:03}.csv", info.subject_id));
        write_recording(args.out.join(&rel), &cohort.load(i)?)?;
        entries.push(ManifestEntry {
            subject_id: info.subject_id,
            label: info.label,
            path: rel,
            fs_hz: spec.fs_hz,
        });
    }
    Manifest { entries }.write(args.out.join("manifest.csv"))?;
    write_atomic(args.out.join("layout.txt"), layout.to_text().as_bytes())?;
    write_json(
        &args.out.join("config.json"),
        &ResolvedRun {
            command: "synth".into(),
            cohort: CohortConfig::Synthetic { spec: spec.clone() },
            layout,
            pipeline: PipelineConfig::default(),
            methods: None,
            d_max: None,
            strides: None,
        },
    )?;

    let patients: Vec<String> = cohort
        .subjects()
        .iter()
        .filter(|s| s.label == Label::Patient)
        .map(|s| s.subject_id.to_string())
        .collect();
    println!(
        "{} subjects ({} patients, {} controls), {} s at {} Hz, seed {}",
        spec.n_subjects,
        spec.n_patients,
        spec.n_subjects - spec.n_patients,
        spec.duration_s,
        spec.fs_hz,
        spec.seed
    );
    println!("patients: {}", patients.join(" "));
    println!("manifest: {}", args.out.join("manifest.csv").display());
    Ok(())
}

fn resolve(command: &str, args: &RunArgs) -> Result<ResolvedRun> {
    let mut run = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
            let mut run: ResolvedRun = serde_json::from_str(&text)
                .map_err(CoreError::from)
                .with_context(|| format!("reading {}", path.display()))?;
            run.command = command.to_string();
            run
        }
        None => ResolvedRun {
            command: command.to_string(),
            cohort: CohortConfig::Synthetic {
                spec: CohortSpec::default(),
            },
            layout: ElectrodeLayout::default_layout(),
            pipeline: PipelineConfig::default(),
            methods: None,
            d_max: None,
            strides: None,
        },
    };

    if let Some(path) = &args.manifest {
        let path = fs::canonicalize(path).map_err(|e| CoreError::io(path, e))?;
        run.cohort = CohortConfig::Manifest {
            path,
            fs_hz: args.fs.unwrap_or(DEFAULT_MANIFEST_FS_HZ),
        };
    }
    match &mut run.cohort {
        CohortConfig::Synthetic { spec } => {
            if args.fs.is_some() {
                return Err(usage("--fs applies to manifest cohorts; use --synth-fs"));
            }
            args.cohort.apply(spec);
            if let Some(seed) = args.cohort_seed {
                spec.seed = seed;
            }
        }
        CohortConfig::Manifest { fs_hz, .. } => {
            if !args.cohort.is_empty() || args.cohort_seed.is_some() {
                return Err(usage("synthetic cohort flags cannot be combined with a manifest"));
            }
            if let Some(fs) = args.fs {
                *fs_hz = fs;
            }
        }
    }
    if let Some(path) = &args.layout {
        run.layout = load_layout(path)?;
    }
    args.pipeline.apply(&mut run.pipeline);
    run.pipeline.validate()?;
    Ok(run)
}

fn open_cohort(run: &ResolvedRun) -> Result<Box<dyn CohortSource>> {
    Ok(match &run.cohort {
        CohortConfig::Synthetic { spec } => Box::new(SyntheticCohort::new(spec.clone(), run.layout.clone())?),
        CohortConfig::Manifest { path, fs_hz } => Box::new(ManifestCohort::open(path, run.layout.clone(), *fs_hz)?),
    })
}

struct Workspace {
    out: PathBuf,
    cache: Option<PathBuf>,
}

impl Workspace {
    fn new(args: &RunArgs) -> Result<Self> {
        fs::create_dir_all(&args.out).map_err(|e| CoreError::io(&args.out, e))?;
        let cache = (!args.no_cache).then(|| args.cache_dir.clone().unwrap_or_else(|| args.out.join("cache")));
        Ok(Self {
            out: args.out.clone(),
            cache,
        })
    }

    /// Loads features from the cache when the fingerprint matches,
    /// otherwise computes and stores them.
    fn features(&self, source: &dyn CohortSource, layout: &ElectrodeLayout, config: &FeatureConfig) -> Result<FeatureSet> {
        config.validate_for_rate(source.fs_hz())?;
        let fingerprint = feature_fingerprint(source, config);
        let path = self.cache.as_ref().map(|dir| dir.join(format!("{fingerprint}.csv")));
        if let Some(path) = path.as_ref().filter(|p| p.exists()) {
            match read_feature_dump(path, config.bands.len()) {
                Ok((stored, matrices)) if stored == fingerprint => {
                    eprintln!("features: cached {}", path.display());
                    return Ok(FeatureSet { fingerprint, matrices });
                }
                Ok(_) => eprintln!("features: {} has a different fingerprint, recomputing", path.display()),
                Err(e) => eprintln!("features: ignoring unreadable cache entry ({e})"),
            }
        }
        eprintln!("features: extracting from {} subjects", source.len());
        let features = extract_features(source, config)?;
        if let Some(path) = path {
            let names: Vec<String> = layout.names().map(String::from).collect();
            write_feature_dump(&path, &fingerprint, &names, &config.bands, &features.matrices)?;
        }
        Ok(features)
    }

    fn write_config(&self, run: &ResolvedRun) -> Result<()> {
        write_json(&self.out.join("config.json"), run)
    }

    fn write_report(&self, dir: &Path, report: &ExperimentReport) -> Result<()> {
        report.write_json(dir.join("report.json"))?;
        report.write_subjects_csv(dir.join("subjects.csv"))?;
        write_atomic(dir.join("report.txt"), render_report(report).as_bytes())?;
        Ok(())
    }

    fn write_comparison(&self, comparison: &Comparison) -> Result<()> {
        write_json(&self.out.join("comparison.json"), comparison)?;
        write_atomic(self.out.join("comparison.txt"), render_table(&comparison.rows).as_bytes())?;
        Ok(())
    }
}

pub fn featurize(args: &RunArgs) -> Result<()> {
    let run = resolve("featurize", args)?;
    let ws = Workspace::new(args)?;
    ws.write_config(&run)?;
    let source = open_cohort(&run)?;
    let features = ws.features(source.as_ref(), &run.layout, &run.pipeline.features)?;
    let names: Vec<String> = run.layout.names().map(String::from).collect();
    write_feature_dump(
        ws.out.join("features.csv"),
        &features.fingerprint,
        &names,
        &run.pipeline.features.bands,
        &features.matrices,
    )?;
    println!(
        "{} windows from {} subjects, fingerprint {}",
        features.matrices.len(),
        features.subjects().len(),
        features.fingerprint
    );
    Ok(())
}

pub fn cv(args: &RunArgs) -> Result<()> {
    let run = resolve("cv", args)?;
    let ws = Workspace::new(args)?;
    ws.write_config(&run)?;
    let source = open_cohort(&run)?;
    let features = ws.features(source.as_ref(), &run.layout, &run.pipeline.features)?;
    let report = run_with_features(&features, &run.layout, &run.pipeline)?;
    ws.write_report(&ws.out, &report)?;
    print!("{}", render_report(&report));
    Ok(())
}

fn parse_methods(names: &Option<Vec<String>>) -> Result<Vec<InterpMethod>> {
    match names {
        None => Ok(InterpMethod::ALL.to_vec()),
        Some(list) => {
            let list: Vec<&String> = list.iter().filter(|s| !s.trim().is_empty()).collect();
            if list.is_empty() {
                return Err(usage("--methods needs at least one interpolation method"));
            }
            Ok(list
                .into_iter()
                .map(|s| s.trim().parse::<InterpMethod>())
                .collect::<Result<_, _>>()?)
        }
    }
}

/// Runs each configuration on shared folds and checks that the folds
/// really were shared.
fn sweep(
    ws: &Workspace,
    command: &str,
    runs: Vec<(String, PipelineConfig, FeatureSet)>,
    layout: &ElectrodeLayout,
) -> Result<Comparison> {
    let mut rows = Vec::new();
    let mut folds: Option<Vec<Vec<u32>>> = None;
    let mut seed = 0;
    for (name, config, features) in runs {
        eprintln!("{command}: {name}");
        let report = run_with_features(&features, layout, &config)?;
        match &folds {
            None => folds = Some(report.folds.clone()),
            Some(f) if *f != report.folds => bail!("{name} used different folds"),
            Some(_) => {}
        }
        seed = config.seed;
        ws.write_report(&ws.out.join("runs").join(&name), &report)?;
        rows.extend(report.table);
    }
    Ok(Comparison {
        command: command.to_string(),
        seed,
        folds: folds.unwrap_or_default(),
        rows,
    })
}

pub fn interp_compare(args: &InterpCompareArgs) -> Result<()> {
    let mut run = resolve("interp-compare", &args.run)?;
    if args.methods.is_some() || run.methods.is_none() {
        run.methods = Some(parse_methods(&args.methods)?);
    }
    if args.d_max_list.is_some() || run.d_max.is_none() {
        run.d_max = Some(args.d_max_list.clone().unwrap_or_else(|| vec![run.pipeline.d_max]));
    }
    let methods = run.methods.clone().unwrap_or_default();
    let d_max = run.d_max.clone().unwrap_or_default();
    if d_max.is_empty() {
        return Err(usage("--d-max-list needs at least one value"));
    }
    run.pipeline.model = FeatureModel::Grid;

    let ws = Workspace::new(&args.run)?;
    ws.write_config(&run)?;
    let source = open_cohort(&run)?;
    let features = ws.features(source.as_ref(), &run.layout, &run.pipeline.features)?;
    let mut runs = Vec::new();
    for &method in &methods {
        for &d in &d_max {
            let mut config = run.pipeline.clone();
            config.interp_method = method;
            config.d_max = d;
            config.validate()?;
            runs.push((format!("{}_d{d}", method.name()), config, features.clone()));
        }
    }
    let comparison = sweep(&ws, "interp-compare", runs, &run.layout)?;
    ws.write_comparison(&comparison)?;
    print!("{}", render_table(&comparison.rows));
    Ok(())
}

/// Strides N/4, N/2, N and 3N/2 for window length N.
pub fn stride_set(window: usize) -> Vec<usize> {
    vec![window / 4, window / 2, window, window * 3 / 2]
}

pub fn stride_compare(args: &RunArgs) -> Result<()> {
    let mut run = resolve("stride-compare", args)?;
    let strides = match run.strides.clone() {
        Some(s) if args.config.is_some() && args.pipeline.window_size.is_none() => s,
        _ => stride_set(run.pipeline.features.window_size),
    };
    run.strides = Some(strides.clone());
    let ws = Workspace::new(args)?;
    ws.write_config(&run)?;
    let source = open_cohort(&run)?;
    let mut runs = Vec::new();
    for &stride in &strides {
        let mut config = run.pipeline.clone();
        config.features.window_stride = stride;
        config.validate()?;
        let features = ws.features(source.as_ref(), &run.layout, &config.features)?;
        runs.push((format!("stride_{stride}"), config, features));
    }
    let comparison = sweep(&ws, "stride-compare", runs, &run.layout)?;
    ws.write_comparison(&comparison)?;
    print!("{}", render_table(&comparison.rows));
    Ok(())
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.path).map_err(|e| CoreError::io(&args.path, e))?;
    if let Ok(report) = serde_json::from_str::<ExperimentReport>(&text) {
        if args.subjects {
            print!("{}", String::from_utf8(report.subjects_csv()?)?);
        } else {
            print!("{}", render_report(&report));
        }
        return Ok(());
    }
    match serde_json::from_str::<Comparison>(&text) {
        Ok(_) if args.subjects => Err(usage("--subjects needs a single-run report, not a comparison")),
        Ok(comparison) => {
            println!("{} (seed {})", comparison.command, comparison.seed);
            print!("{}", render_table(&comparison.rows));
            Ok(())
        }
        Err(e) => Err(anyhow::Error::from(CoreError::from(e))
            .context(format!("{} is neither a report nor a comparison", args.path.display()))),
    }
}
