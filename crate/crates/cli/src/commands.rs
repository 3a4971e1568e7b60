use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use l1o_core::data::{builtin_names, generate_parabola, preset, DatasetPreset};
use l1o_core::dtree::TreeDocument;
use l1o_core::extraction::{extract as extract_tree, train_and_extract, FeatureSpace};
use l1o_core::harness::{
    consistency_table, fidelity_table, run_consistency_experiment, run_fidelity_experiment, run_standalone_dt_baseline,
    run_sweep, select_best, write_points_csv, write_sweep_csv, DatasetSource, ExperimentConfig, GridSpec, SweepConfig,
};
use l1o_core::metrics::auc;
use l1o_core::nn::{accuracy, train as train_model, ModelDocument};
use l1o_core::regularizers::{OrthoNorm, RegularizerSpec};

use crate::{DataArgs, ExportFormat};

/// Settings for CSV datasets given without `--preset`.
fn csv_defaults() -> DatasetPreset {
    DatasetPreset {
        name: "csv".into(),
        hidden_sizes: vec![16],
        batch_size: 32,
        learning_rate: 0.005,
        epochs: 50,
        min_samples_leaf: 5,
        prune: true,
    }
}

fn sweep_config(args: &DataArgs) -> Result<SweepConfig> {
    let mut cfg = match (&args.config, &args.dataset) {
        (Some(path), _) => SweepConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(name)) if builtin_names().contains(&name.as_str()) => {
            SweepConfig::from_preset(name, args.seed.unwrap_or(0))?
        }
        (None, Some(path)) => {
            let Some(label) = &args.label else {
                bail!("`{path}` is not a built-in dataset; CSV input needs --label");
            };
            let p = match &args.preset {
                Some(name) => preset(name)?,
                None => csv_defaults(),
            };
            let seed = args.seed.unwrap_or(0);
            SweepConfig {
                experiment: ExperimentConfig {
                    dataset: DatasetSource::Csv {
                        csv: path.into(),
                        label_column: label.clone(),
                        categorical_columns: args.categorical.clone(),
                    },
                    hidden_sizes: p.hidden_sizes.clone(),
                    train: p.train_config(seed),
                    dt_params: p.dt_params(),
                    prune: p.prune,
                    split: Default::default(),
                    feature_space: FeatureSpace::Raw,
                },
                grid: GridSpec::default(),
            }
        }
        (None, None) => bail!("either --config or --dataset is required"),
    };
    let exp = &mut cfg.experiment;
    if let Some(seed) = args.seed {
        exp.train.seed = seed;
        exp.split.seed = seed;
        if let DatasetSource::Builtin { seed: s, .. } = &mut exp.dataset {
            *s = seed;
        }
    }
    if let Some(msl) = args.min_samples_leaf {
        exp.dt_params.min_samples_leaf = msl;
    }
    if args.max_depth.is_some() {
        exp.dt_params.max_depth = args.max_depth;
    }
    if args.no_prune {
        exp.prune = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(args: &DataArgs) -> Result<&Path> {
    std::fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    Ok(&args.out_dir)
}

pub fn gen_toy(n: usize, seed: u64, out: &Path) -> Result<()> {
    if n == 0 {
        bail!("--n must be positive");
    }
    let ds = generate_parabola(n, seed);
    let mut w = csv::Writer::from_path(out).with_context(|| format!("creating {}", out.display()))?;
    w.write_record(ds.feature_names.iter().map(String::as_str).chain(["label"]))?;
    for (row, &label) in ds.x.rows().into_iter().zip(&ds.y) {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(ds.class_names[label].clone());
        w.write_record(&record)?;
    }
    w.flush()?;
    println!("wrote {n} points to {}", out.display());
    Ok(())
}

pub fn train(args: &DataArgs, reg: &RegularizerSpec) -> Result<()> {
    let cfg = sweep_config(args)?.experiment;
    let data = cfg.prepare(&cfg.split)?;
    let arch = cfg.architecture(&data)?;
    let (model, history) = train_model(data.train.std.view(), &data.train.y, &arch, &cfg.train, reg)?;
    let dir = out_dir(args)?;
    ModelDocument::new(&model, Some(cfg.train.clone()), Some(reg.clone())).save(&dir.join("model.json"))?;
    data.manifest.save(&dir.join("data_manifest.json"))?;
    std::fs::write(dir.join("history.json"), serde_json::to_string_pretty(&history)?)?;
    let test = &data.test;
    let acc = accuracy(&model.predict(test.std.view())?, &test.y);
    let test_auc = auc(model.predict_proba(test.std.view())?.view(), &test.y)?;
    println!("test accuracy {acc:.4}  test auc {test_auc:.4}");
    println!("saved to {}", dir.display());
    Ok(())
}

pub fn extract(args: &DataArgs, reg: &RegularizerSpec, model: Option<&Path>) -> Result<()> {
    let cfg = sweep_config(args)?.experiment;
    let data = cfg.prepare(&cfg.split)?;
    let opts = cfg.extract_options();
    let result = match model {
        Some(path) => {
            let model = ModelDocument::load(path)
                .with_context(|| format!("loading {}", path.display()))?
                .to_model()?;
            let mut r = extract_tree(&model, &data.train, &data.val, &opts)?;
            r.tree = r
                .tree
                .with_names(data.feature_names.clone(), data.class_names.clone())?;
            r.unpruned_tree = r
                .unpruned_tree
                .with_names(data.feature_names.clone(), data.class_names.clone())?;
            r.provenance.data = Some(data.manifest.clone());
            r
        }
        None => train_and_extract(&data, &cfg.architecture(&data)?, &cfg.train, reg, &opts)?,
    };
    let eval = result.evaluate(&data.test)?;
    let dir = out_dir(args)?;
    result.save_dir(dir)?;
    println!(
        "apl {:.3}  nodes {}  fidelity {:.4} (unpruned {:.4})  mlp auc {:.4}  dt auc {:.4}",
        eval.apl, eval.nodes, eval.fidelity, eval.unpruned_fidelity, eval.mlp_auc, eval.dt_auc
    );
    print!("{}", result.tree.export_rules(result.tree.feature_names())?);
    Ok(())
}

pub fn sweep(args: &DataArgs, norm: Option<OrthoNorm>) -> Result<()> {
    let mut cfg = sweep_config(args)?;
    if let Some(norm) = norm {
        cfg.grid.norms = vec![norm];
    }
    let result = run_sweep(&cfg)?;
    let path = out_dir(args)?.join("sweep.csv");
    write_sweep_csv(&result, File::create(&path)?)?;
    let failed = result.points.iter().filter(|p| !p.is_ok()).count();
    println!(
        "{} cells ({failed} failed), baseline auc {:.4}",
        result.points.len(),
        result.baseline.mlp_auc
    );
    if let Ok(sel) = select_best(&result.points, result.baseline.mlp_auc) {
        let p = &sel.point;
        let note = if sel.qualified {
            ""
        } else {
            " (no cell reached the baseline)"
        };
        println!(
            "best: lambda1 {} lambda_orth {} norm {}  apl {:.3}  auc {:.4}  fidelity {:.4}{note}",
            p.lambda1, p.lambda_orth, p.norm, p.apl, p.mlp_auc, p.fidelity
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn dataset_label(cfg: &ExperimentConfig) -> String {
    match &cfg.dataset {
        DatasetSource::Builtin { builtin, .. } => builtin.clone(),
        DatasetSource::Csv { csv, .. } => csv.display().to_string(),
    }
}

pub fn fidelity(args: &DataArgs, reg: &RegularizerSpec, runs: usize) -> Result<()> {
    let cfg = sweep_config(args)?.experiment;
    let out = run_fidelity_experiment(&cfg, reg, runs)?;
    let path = out_dir(args)?.join("fidelity.json");
    std::fs::write(&path, serde_json::to_string_pretty(&out)?)?;
    print!("{}", fidelity_table(&[(dataset_label(&cfg), out.report.clone())]));
    println!(
        "unpruned {:.4} ± {:.4}  apl {:.3}",
        out.unpruned.mean, out.unpruned.std, out.apl_mean
    );
    Ok(())
}

pub fn consistency(args: &DataArgs, reg: &RegularizerSpec, sessions: usize) -> Result<()> {
    let cfg = sweep_config(args)?.experiment;
    let seeds: Vec<u64> = (0..sessions as u64).map(|i| cfg.train.seed.wrapping_add(i)).collect();
    let report = run_consistency_experiment(&cfg, reg, &seeds)?;
    let path = out_dir(args)?.join("consistency.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    print!("{}", consistency_table(&[(dataset_label(&cfg), report)]));
    Ok(())
}

pub fn baseline_dt(args: &DataArgs) -> Result<()> {
    let cfg = sweep_config(args)?.experiment;
    let points = run_standalone_dt_baseline(&cfg)?;
    let path = out_dir(args)?.join("baseline_dt.csv");
    write_points_csv(&points, File::create(&path)?)?;
    for p in &points {
        let depth = p.max_depth.map_or("none".to_string(), |d| d.to_string());
        println!(
            "max_depth {depth:>4}  apl {:.3}  nodes {:>3}  dt auc {:.4}",
            p.apl, p.nodes, p.dt_auc
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn export(tree: &Path, format: ExportFormat, out: Option<&Path>) -> Result<()> {
    let tree = TreeDocument::load(tree)
        .with_context(|| format!("loading {}", tree.display()))?
        .to_tree()?;
    let text = match format {
        ExportFormat::Dot => tree.export_dot(tree.feature_names())?,
        ExportFormat::Rules => tree.export_rules(tree.feature_names())?,
    };
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;
    use l1o_core::dtree::DtParams;

    fn data_args(argv: &[&str]) -> DataArgs {
        let mut full = vec!["l1o", "baseline-dt"];
        full.extend_from_slice(argv);
        match crate::Cli::parse_from(full).command {
            crate::Command::BaselineDt { data } => data,
            _ => unreachable!(),
        }
    }

    #[test]
    fn overrides_apply_to_preset() {
        let args = data_args(&[
            "--dataset",
            "iris",
            "--seed",
            "4",
            "--min-samples-leaf",
            "2",
            "--max-depth",
            "3",
            "--no-prune",
        ]);
        let cfg = sweep_config(&args).unwrap().experiment;
        assert_eq!((cfg.train.seed, cfg.split.seed), (4, 4));
        assert_eq!(cfg.dt_params, DtParams::new(2, Some(3)));
        assert!(!cfg.prune);
    }

    #[test]
    fn csv_dataset_needs_label() {
        assert!(sweep_config(&data_args(&["--dataset", "missing.csv"])).is_err());
        let cfg = sweep_config(&data_args(&["--dataset", "d.csv", "--label", "y", "--preset", "pima"])).unwrap();
        assert_eq!(cfg.experiment.hidden_sizes, vec![24]);
    }
}
