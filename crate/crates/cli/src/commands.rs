use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riesz_core::classify::{
    evaluate_predictions, read_model, stratified_split, write_model, Classifier, LabeledFeatures, MaxAbsNormalizer,
    ModelKind, PcaClassModel, SvmModel, SvmParams, TrainedModel,
};
use riesz_core::grid::ImageGrid;
use riesz_core::io::{load_class_directory, load_idx_images, load_idx_labels, write_matrix_text, write_pgm};
use riesz_core::preprocess::bbox_extract;
use riesz_core::representation::{build_hierarchy, extract_batch, FeaturePath, RieszConfig};
use riesz_core::table::{FeatureRow, FeatureTable};
use riesz_core::verify::{random_image, run_suite, Fault, VerifyOptions};

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] riesz_core::error::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// A run that completed but did not meet its pass criteria.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(std::io::BufWriter::new(fs::File::create(path).map_err(io_err(path))?))
}

struct Input {
    images: Vec<ImageGrid>,
    labels: Option<Vec<usize>>,
}

fn load_input(cfg: &RunConfig) -> Result<Input> {
    let path = cfg.data_path("images")?;
    let mut input = if path.is_dir() {
        let (ds, names) = load_class_directory(&path)?;
        log::info!("{}: {} images in {} classes ({})", path.display(), ds.len(), names.len(), names.join(", "));
        let (images, labels, _) = ds.into_parts();
        Input {
            images,
            labels: Some(labels),
        }
    } else {
        let images = load_idx_images(&path)?;
        let labels = match cfg.maybe::<String>("labels") {
            Some(_) => {
                let labels = load_idx_labels(cfg.data_path("labels")?)?;
                if labels.len() != images.len() {
                    return Err(riesz_core::error::Error::CountMismatch {
                        images: images.len(),
                        labels: labels.len(),
                    }
                    .into());
                }
                Some(labels)
            }
            None => None,
        };
        Input { images, labels }
    };
    if let Some(n) = cfg.maybe::<usize>("limit") {
        input.images.truncate(n);
        if let Some(l) = &mut input.labels {
            l.truncate(n);
        }
    }
    Ok(input)
}

/// Crops (when enabled) and extracts every image; failures become flagged rows.
fn feature_rows(images: &[ImageGrid], labels: Option<&[usize]>, cfg: &RunConfig, rc: &RieszConfig) -> Result<Vec<FeatureRow>> {
    let bbox = if cfg.flag("bbox") { Some(cfg.bbox()?) } else { None };
    let prepared: Vec<std::result::Result<ImageGrid, String>> = images
        .iter()
        .enumerate()
        .map(|(i, img)| match &bbox {
            Some(p) => bbox_extract(img, p).map(|r| r.crop).map_err(|e| {
                log::warn!("image {i}: {e}; row flagged");
                e.to_string()
            }),
            None => Ok(img.clone()),
        })
        .collect();
    let ok: Vec<ImageGrid> = prepared.iter().filter_map(|p| p.as_ref().ok().cloned()).collect();
    let mut extracted = extract_batch(&ok, rc).into_iter();
    Ok(prepared
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let values = p.and_then(|_| {
                extracted
                    .next()
                    .expect("one extraction per prepared image")
                    .map(|fv| fv.values)
                    .map_err(|e| {
                        log::warn!("image {i}: {e}; row flagged");
                        e.to_string()
                    })
            });
            FeatureRow {
                image: i,
                label: labels.map(|l| l[i]),
                values,
            }
        })
        .collect())
}

fn path_slug(p: &FeaturePath) -> String {
    if p.0.is_empty() {
        "root".into()
    } else {
        p.0.iter().map(ToString::to_string).collect::<Vec<_>>().join("-")
    }
}

fn dump_maps(dir: &Path, images: &[ImageGrid], cfg: &RunConfig, rc: &RieszConfig) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let bbox = if cfg.flag("bbox") { Some(cfg.bbox()?) } else { None };
    for (i, img) in images.iter().enumerate() {
        let input = match &bbox {
            Some(p) => match bbox_extract(img, p) {
                Ok(r) => r.crop,
                Err(_) => continue,
            },
            None => img.clone(),
        };
        for (path, map) in build_hierarchy(&input, rc)? {
            write_matrix_text(dir.join(format!("img{i:05}_{}.txt", path_slug(&path))), &map)?;
        }
    }
    Ok(())
}

pub fn extract(cfg: &RunConfig) -> Result<()> {
    let rc = cfg.riesz()?;
    let out = cfg.out_path("output")?;
    let input = load_input(cfg)?;
    let started = Instant::now();
    let rows = feature_rows(&input.images, input.labels.as_deref(), cfg, &rc)?;
    let flagged = rows.iter().filter(|r| r.values.is_err()).count();
    let table = FeatureTable {
        paths: FeaturePath::enumerate(rc.depth, rc.angles),
        rows,
    };
    table.write(create(&out)?)?;
    if let Some(dir) = cfg.maybe::<String>("maps_dir") {
        dump_maps(Path::new(&dir), &input.images, cfg, &rc)?;
    }
    println!(
        "extracted {} features from {} images ({flagged} flagged) in {:.2}s -> {}",
        table.paths.len(),
        table.rows.len(),
        started.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

pub fn bbox(cfg: &RunConfig) -> Result<()> {
    let params = cfg.bbox()?;
    let out = cfg.out_path("output")?;
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    let input = load_input(cfg)?;
    let txt = cfg.text("bbox_format") == "txt";
    let mut summary = create(&out.join("boxes.csv"))?;
    let mut line = |s: String| writeln!(summary, "{s}").map_err(io_err(&out));
    line("image,status,tight_height,tight_width,crop_height,crop_width".into())?;
    let mut skipped = 0;
    for (i, img) in input.images.iter().enumerate() {
        match bbox_extract(img, &params) {
            Ok(r) => {
                log::info!(
                    "image {i}: box {}x{}, crop {}x{}",
                    r.tight.height,
                    r.tight.width,
                    r.crop.height(),
                    r.crop.width()
                );
                let name = format!("crop{i:05}.{}", if txt { "txt" } else { "pgm" });
                if txt {
                    write_matrix_text(out.join(&name), &r.crop)?;
                } else {
                    write_pgm(out.join(&name), &r.crop)?;
                }
                line(format!(
                    "{i},ok,{},{},{},{}",
                    r.tight.height,
                    r.tight.width,
                    r.crop.height(),
                    r.crop.width()
                ))?;
            }
            Err(e) => {
                log::warn!("image {i}: {e}; skipped");
                skipped += 1;
                line(format!("{i},skipped,,,,"))?;
            }
        }
    }
    drop(line);
    summary.flush().map_err(io_err(&out))?;
    println!(
        "cropped {} of {} images ({skipped} skipped) -> {}",
        input.images.len() - skipped,
        input.images.len(),
        out.display()
    );
    Ok(())
}

/// Labeled rows of the feature CSV, restricted to one side of the split when configured.
fn split_rows(cfg: &RunConfig, model_classes: Option<usize>, train_side: bool) -> Result<LabeledFeatures> {
    let path = cfg.data_path("features")?;
    let table = FeatureTable::load(&path)?;
    let flagged = table.rows.iter().filter(|r| r.values.is_err()).count();
    if flagged > 0 {
        log::warn!("{}: ignoring {flagged} flagged rows", path.display());
    }
    let data = table.labeled(cfg.maybe("classes").or(model_classes))?;
    Ok(match cfg.maybe::<usize>("split_per_class") {
        Some(per_class) => {
            let split = stratified_split(&data.labels, data.class_count, per_class, cfg.u64("split_seed"))?;
            data.subset(if train_side { &split.train } else { &split.test })
        }
        None => data,
    })
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_path("output")?;
    let data = split_rows(cfg, None, true)?;
    if data.is_empty() {
        return Err(riesz_core::error::Error::Empty("no labeled feature rows to train on".into()).into());
    }
    let normalizer = if cfg.normalize() {
        Some(MaxAbsNormalizer::fit(&data.features)?)
    } else {
        None
    };
    let input = match &normalizer {
        Some(n) => LabeledFeatures::new(
            data.features.iter().map(|x| n.apply(x)).collect::<std::result::Result<_, _>>()?,
            data.labels.clone(),
            data.class_count,
        )?,
        None => data.clone(),
    };
    let classifier = match cfg.text("classifier") {
        "pca" => ModelKind::Pca(PcaClassModel::fit(&input, cfg.usize("components"))?),
        _ => ModelKind::Svm(SvmModel::fit(
            &input,
            SvmParams {
                reg: cfg.float("svm_reg"),
                epochs: cfg.usize("svm_epochs"),
                seed: cfg.u64("seed"),
            },
        )?),
    };
    let model = TrainedModel {
        normalizer,
        classifier,
    };
    write_model(create(&out)?, &model)?;
    println!(
        "trained {} on {} rows x {} features, {} classes -> {}",
        model.kind_name(),
        data.len(),
        data.dim(),
        model.class_count(),
        out.display()
    );
    Ok(())
}

struct ScaleResult {
    scale: String,
    skipped: usize,
    report: riesz_core::classify::EvalReport,
}

fn predict_rows(model: &TrainedModel, rows: &[FeatureRow], scale: String) -> Result<ScaleResult> {
    let (mut preds, mut labels, mut skipped) = (Vec::new(), Vec::new(), 0);
    for row in rows {
        let label = row
            .label
            .ok_or_else(|| riesz_core::error::Error::FeatureTable(format!("image {} has no label", row.image)))?;
        match &row.values {
            Ok(v) => {
                preds.push(model.predict(v)?);
                labels.push(label);
            }
            Err(_) => skipped += 1,
        }
    }
    let report = evaluate_predictions(&preds, &labels, model.class_count())?;
    Ok(ScaleResult { scale, skipped, report })
}

/// `(scale, images, labels)` per manifest line; paths are relative to the manifest.
pub fn parse_manifest(text: &str, base: &Path) -> std::result::Result<Vec<(String, PathBuf, PathBuf)>, ConfigError> {
    let mut shards = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["scale", s, "images", i, "labels", l] if s.parse::<f64>().is_ok_and(|v| v > 0.0) => {
                shards.push((s.to_string(), base.join(i), base.join(l)))
            }
            _ => {
                return Err(ConfigError(format!(
                    "manifest line {}: expected 'scale <number> images <path> labels <path>'",
                    n + 1
                )))
            }
        }
    }
    if shards.is_empty() {
        return Err(ConfigError("manifest lists no shards".into()));
    }
    Ok(shards)
}

pub fn eval(cfg: &RunConfig) -> Result<()> {
    let model_path = PathBuf::from(cfg.require("model")?);
    let file = fs::File::open(&model_path).map_err(io_err(&model_path))?;
    let model = read_model(BufReader::new(file))?;

    let results = if cfg.maybe::<String>("manifest").is_some() {
        let rc = cfg.riesz()?;
        if rc.feature_count() != model.dim() {
            return Err(riesz_core::error::Error::DimensionMismatch {
                expected: format!("{} features (model)", model.dim()),
                found: format!("{} features (configuration)", rc.feature_count()),
            }
            .into());
        }
        let manifest = cfg.data_path("manifest")?;
        let text = fs::read_to_string(&manifest).map_err(io_err(&manifest))?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let mut results = Vec::new();
        for (scale, images, labels) in parse_manifest(&text, base)? {
            let mut imgs = load_idx_images(&images)?;
            let mut lbls = load_idx_labels(&labels)?;
            if let Some(n) = cfg.maybe::<usize>("limit") {
                imgs.truncate(n);
                lbls.truncate(n);
            }
            if imgs.len() != lbls.len() {
                return Err(riesz_core::error::Error::CountMismatch {
                    images: imgs.len(),
                    labels: lbls.len(),
                }
                .into());
            }
            let rows = feature_rows(&imgs, Some(&lbls), cfg, &rc)?;
            results.push(predict_rows(&model, &rows, scale)?);
        }
        results
    } else {
        let data = split_rows(cfg, Some(model.class_count()), false)?;
        if data.dim() != model.dim() && !data.is_empty() {
            return Err(riesz_core::error::Error::DimensionMismatch {
                expected: format!("{} features (model)", model.dim()),
                found: format!("{} features (table)", data.dim()),
            }
            .into());
        }
        let rows: Vec<FeatureRow> = data
            .features
            .into_iter()
            .zip(data.labels)
            .enumerate()
            .map(|(i, (v, l))| FeatureRow {
                image: i,
                label: Some(l),
                values: Ok(v),
            })
            .collect();
        vec![predict_rows(&model, &rows, "all".into())?]
    };

    if let Some(out) = cfg.maybe::<String>("output") {
        let mut w = create(Path::new(&out))?;
        let mut text = String::from("scale,total,correct,skipped,accuracy\n");
        for r in &results {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                r.scale, r.report.total, r.report.correct, r.skipped, r.report.accuracy
            ));
        }
        w.write_all(text.as_bytes()).map_err(io_err(Path::new(&out)))?;
        w.flush().map_err(io_err(Path::new(&out)))?;
    }
    if let Some(out) = cfg.maybe::<String>("confusion_output") {
        let mut w = create(Path::new(&out))?;
        let mut text = String::from("scale,true,predicted,count\n");
        for r in &results {
            for (t, row) in r.report.confusion.iter().enumerate() {
                for (p, n) in row.iter().enumerate() {
                    text.push_str(&format!("{},{t},{p},{n}\n", r.scale));
                }
            }
        }
        w.write_all(text.as_bytes()).map_err(io_err(Path::new(&out)))?;
        w.flush().map_err(io_err(Path::new(&out)))?;
    }

    for r in &results {
        println!(
            "scale {:>5}: accuracy {:6.2}% ({}/{}, {} skipped)",
            r.scale,
            100.0 * r.report.accuracy,
            r.report.correct,
            r.report.total,
            r.skipped
        );
    }
    if let [only] = results.as_slice() {
        println!("confusion matrix (rows: true class, columns: predicted):");
        for row in &only.report.confusion {
            println!("  {}", row.iter().map(|n| format!("{n:5}")).collect::<String>());
        }
    }
    if let Some(min) = cfg.maybe::<f64>("min_accuracy") {
        let low: Vec<&str> = results
            .iter()
            .filter(|r| r.report.accuracy < min)
            .map(|r| r.scale.as_str())
            .collect();
        if !low.is_empty() {
            return Err(CliError::Failed(format!(
                "accuracy below {min} at scale(s) {}",
                low.join(", ")
            )));
        }
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig) -> Result<()> {
    let opts = VerifyOptions {
        seed: cfg.u64("seed"),
        samples: cfg.usize("verify_samples"),
        size: cfg.usize("verify_size"),
        fault: match cfg.text("fault") {
            "none" => None,
            f => Some(f.parse::<Fault>().map_err(ConfigError)?),
        },
    };
    if opts.samples == 0 || opts.size < 8 {
        return Err(ConfigError("verify_samples must be positive and verify_size at least 8".into()).into());
    }
    let results = run_suite(&opts)?;
    for r in &results {
        println!("{r}");
    }
    if let Some(out) = cfg.maybe::<String>("output") {
        let mut text = String::from("property,tolerance,measured,passed\n");
        for r in &results {
            text.push_str(&format!("{},{:e},{:e},{}\n", r.name, r.tolerance, r.measured, r.passed));
        }
        let mut w = create(Path::new(&out))?;
        w.write_all(text.as_bytes()).map_err(io_err(Path::new(&out)))?;
        w.flush().map_err(io_err(Path::new(&out)))?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} of {} properties failed", results.len())));
    }
    println!("all {} properties passed", results.len());
    Ok(())
}

pub fn bench(cfg: &RunConfig) -> Result<()> {
    let rc = cfg.riesz()?;
    let (n, count) = (cfg.usize("bench_size"), cfg.usize("bench_images"));
    if n == 0 || count == 0 {
        return Err(ConfigError("bench_size and bench_images must be positive".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.u64("seed"));
    let images: Vec<ImageGrid> = (0..count).map(|_| random_image(n, n, &mut rng)).collect();

    // first call builds the cached filter bank
    riesz_core::representation::extract_features(&images[0], &rc)?;
    let t = Instant::now();
    for img in &images {
        riesz_core::representation::extract_features(img, &rc)?;
    }
    let sequential = t.elapsed().as_secs_f64();
    let t = Instant::now();
    for r in extract_batch(&images, &rc) {
        r?;
    }
    let batch = t.elapsed().as_secs_f64();

    println!(
        "{count} images {n}x{n}, K={} M={} ({} features)",
        rc.depth,
        rc.angles,
        rc.feature_count()
    );
    println!("  one at a time: {:8.3} ms per image", 1e3 * sequential / count as f64);
    println!("  batch        : {:8.3} ms per image", 1e3 * batch / count as f64);
    if let Some(out) = cfg.maybe::<String>("output") {
        let text = format!(
            "size,images,depth,angles,features,sequential_ms_per_image,batch_ms_per_image\n{n},{count},{},{},{},{},{}\n",
            rc.depth,
            rc.angles,
            rc.feature_count(),
            1e3 * sequential / count as f64,
            1e3 * batch / count as f64
        );
        let mut w = create(Path::new(&out))?;
        w.write_all(text.as_bytes()).map_err(io_err(Path::new(&out)))?;
        w.flush().map_err(io_err(Path::new(&out)))?;
    }
    Ok(())
}
